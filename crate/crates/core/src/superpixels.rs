//! SLIC superpixels.
//!
//! Color distances are measured in RGB rescaled to `[0, 100]` per channel so
//! the compactness keeps its usual CIELAB-like meaning (m ≈ 10).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::video_io::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicParams {
    /// Grid interval S in pixels.
    pub region_size: usize,
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        SlicParams {
            region_size: 16,
            compactness: 10.0,
            iterations: 5,
        }
    }
}

/// A partition of the image into 4-connected superpixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    members: Vec<Vec<u32>>,
    adjacency: Vec<(u32, u32)>,
}

impl SuperpixelMap {
    /// Builds the map from per-pixel ids that are already contiguous from 0.
    ///
    /// Connectivity of each id is not checked.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Option<Self> {
        if labels.len() != width * height || labels.is_empty() {
            return None;
        }
        let count = *labels.iter().max()? as usize + 1;
        let mut members = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            members[l as usize].push(i as u32);
        }
        if members.iter().any(Vec::is_empty) {
            return None;
        }
        let mut adj = BTreeSet::new();
        for y in 0..height {
            for x in 0..width {
                let a = labels[y * width + x];
                if x + 1 < width {
                    let b = labels[y * width + x + 1];
                    if a != b {
                        adj.insert((a.min(b), a.max(b)));
                    }
                }
                if y + 1 < height {
                    let b = labels[(y + 1) * width + x];
                    if a != b {
                        adj.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
        Some(SuperpixelMap {
            width,
            height,
            labels,
            members,
            adjacency: adj.into_iter().collect(),
        })
    }

    /// Every pixel in one superpixel.
    pub fn single(width: usize, height: usize) -> Self {
        Self::from_labels(width, height, vec![0; width * height]).expect("non-empty image")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn members(&self, id: usize) -> &[u32] {
        &self.members[id]
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn adjacency(&self) -> &[(u32, u32)] {
        &self.adjacency
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    x: f64,
    y: f64,
    color: [f64; 3],
}

const COLOR_SCALE: f64 = 100.0 / 255.0;

fn scaled(c: [u8; 3]) -> [f64; 3] {
    c.map(|v| f64::from(v) * COLOR_SCALE)
}

fn gradient(frame: &Frame, x: usize, y: usize) -> u32 {
    let (w, h) = (frame.width(), frame.height());
    let d2 = |a: [u8; 3], b: [u8; 3]| -> u32 {
        (0..3)
            .map(|c| {
                let d = i32::from(a[c]) - i32::from(b[c]);
                (d * d) as u32
            })
            .sum()
    };
    let px = |x: usize, y: usize| frame.pixel(x, y);
    d2(px((x + 1).min(w - 1), y), px(x.saturating_sub(1), y))
        + d2(px(x, (y + 1).min(h - 1)), px(x, y.saturating_sub(1)))
}

/// SLIC on `frame`: grid seeding, gradient-based seed perturbation,
/// localized k-means, then 4-connectivity enforcement.
pub fn slic_segment(frame: &Frame, params: &SlicParams) -> SuperpixelMap {
    let (w, h) = (frame.width(), frame.height());
    let s = params.region_size.max(1);
    let (nx, ny) = ((w / s).max(1), (h / s).max(1));
    if nx * ny == 1 {
        return SuperpixelMap::single(w, h);
    }
    let (step_x, step_y) = (w as f64 / nx as f64, h as f64 / ny as f64);

    let mut centers = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let cx = (gx as f64 + 0.5) * step_x - 0.5;
            let cy = (gy as f64 + 0.5) * step_y - 0.5;
            let (px, py) = (
                (cx.round() as usize).min(w - 1),
                (cy.round() as usize).min(h - 1),
            );
            let mut best = (gradient(frame, px, py), px, py);
            for yy in py.saturating_sub(1)..=(py + 1).min(h - 1) {
                for xx in px.saturating_sub(1)..=(px + 1).min(w - 1) {
                    let g = gradient(frame, xx, yy);
                    if g < best.0 {
                        best = (g, xx, yy);
                    }
                }
            }
            let (x, y) = if (best.1, best.2) == (px, py) {
                (cx, cy)
            } else {
                (best.1 as f64, best.2 as f64)
            };
            centers.push(Center {
                x,
                y,
                color: scaled(frame.pixel(best.1, best.2)),
            });
        }
    }

    let radius = (s as f64).max(step_x).max(step_y).ceil() as i64;
    let spatial_weight = (params.compactness / s as f64).powi(2);
    let mut labels = vec![-1i64; w * h];
    let mut dist = vec![f64::INFINITY; w * h];
    for _ in 0..params.iterations.max(1) {
        dist.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = (c.x.round() as i64 - radius).max(0) as usize;
            let x1 = (c.x.round() as i64 + radius).min(w as i64 - 1) as usize;
            let y0 = (c.y.round() as i64 - radius).max(0) as usize;
            let y1 = (c.y.round() as i64 + radius).min(h as i64 - 1) as usize;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let p = scaled(frame.rgb()[i]);
                    let dc = (0..3).map(|ch| (p[ch] - c.color[ch]).powi(2)).sum::<f64>();
                    let ds = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d = dc + ds * spatial_weight;
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = k as i64;
                    }
                }
            }
        }
        let mut sums = vec![[0.0f64; 6]; centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            if l < 0 {
                continue;
            }
            let p = scaled(frame.rgb()[i]);
            let acc = &mut sums[l as usize];
            acc[0] += (i % w) as f64;
            acc[1] += (i / w) as f64;
            acc[2] += p[0];
            acc[3] += p[1];
            acc[4] += p[2];
            acc[5] += 1.0;
        }
        for (c, acc) in centers.iter_mut().zip(&sums) {
            if acc[5] > 0.0 {
                let n = acc[5];
                *c = Center {
                    x: acc[0] / n,
                    y: acc[1] / n,
                    color: [acc[2] / n, acc[3] / n, acc[4] / n],
                };
            }
        }
    }

    enforce_connectivity(w, h, &labels)
}

/// Keeps the largest 4-connected component of every label and merges all
/// other components into the largest adjacent kept region (lower id on ties).
fn enforce_connectivity(w: usize, h: usize, labels: &[i64]) -> SuperpixelMap {
    // Component labeling.
    let mut comp = vec![u32::MAX; w * h];
    let mut comp_label = Vec::new();
    let mut comp_size = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if comp[start] != u32::MAX {
            continue;
        }
        let id = comp_label.len() as u32;
        let l = labels[start];
        comp[start] = id;
        stack.push(start);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == u32::MAX && labels[j] == l {
                    comp[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comp_label.push(l);
        comp_size.push(size);
    }

    // The first largest component of each non-negative label is kept.
    let mut keeper: std::collections::HashMap<i64, usize> = std::collections::HashMap::new();
    for (c, &l) in comp_label.iter().enumerate() {
        if l < 0 {
            continue;
        }
        let e = keeper.entry(l).or_insert(c);
        if comp_size[c] > comp_size[*e] {
            *e = c;
        }
    }
    // region[c] = index of the kept component that c belongs to.
    let mut region: Vec<Option<usize>> = vec![None; comp_label.len()];
    for &c in keeper.values() {
        region[c] = Some(c);
    }
    let mut region_size: Vec<usize> = comp_size.clone();

    // Orphan -> neighboring components, collected once.
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); comp_label.len()];
    for y in 0..h {
        for x in 0..w {
            let a = comp[y * w + x] as usize;
            let mut link = |b: usize| {
                if a != b {
                    neighbors[a].insert(b);
                    neighbors[b].insert(a);
                }
            };
            if x + 1 < w {
                link(comp[y * w + x + 1] as usize);
            }
            if y + 1 < h {
                link(comp[(y + 1) * w + x] as usize);
            }
        }
    }

    if keeper.is_empty() {
        // Nothing was kept (cannot happen after k-means); fall back to one region.
        return SuperpixelMap::single(w, h);
    }
    loop {
        let mut pending = false;
        let mut progressed = false;
        for c in 0..comp_label.len() {
            if region[c].is_some() {
                continue;
            }
            let best = neighbors[c]
                .iter()
                .filter_map(|&n| region[n])
                .max_by(|&a, &b| region_size[a].cmp(&region_size[b]).then(b.cmp(&a)));
            match best {
                Some(r) => {
                    region[c] = Some(r);
                    region_size[r] += comp_size[c];
                    progressed = true;
                }
                None => pending = true,
            }
        }
        if !pending || !progressed {
            break;
        }
    }

    // Contiguous ids in raster order of first appearance.
    let mut remap = vec![u32::MAX; comp_label.len()];
    let mut next = 0u32;
    let mut out = Vec::with_capacity(w * h);
    for &c in &comp {
        let r = region[c as usize].unwrap_or(c as usize);
        if remap[r] == u32::MAX {
            remap[r] = next;
            next += 1;
        }
        out.push(remap[r]);
    }
    SuperpixelMap::from_labels(w, h, out).expect("every region is non-empty")
}
