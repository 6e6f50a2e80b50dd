//! Frame-level detection of drastic background changes.
//!
//! The median of the model's color samples is compared with a short-term
//! temporal median of recent input frames, both downscaled. Three disparities
//! are derived: the mean color distance, the fraction of significantly
//! different pixels, and the exponential entropy of where those pixels fall
//! on a coarse spatial grid.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::model::BackgroundModel;
use crate::video_io::{Frame, Rgb};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinitParams {
    pub enabled: bool,
    pub downscale: usize,
    /// Span of recent frames covered by the temporal median.
    pub window_frames: usize,
    /// Every `sample_stride`-th frame of the window is buffered.
    pub sample_stride: usize,
    pub check_interval: u64,
    /// Per-pixel color distance above which a pixel counts as changed.
    pub significance: f64,
    pub grid: usize,
    pub mean_distance_threshold: f64,
    pub changed_fraction_threshold: f64,
    pub entropy_threshold: f64,
}

impl Default for ReinitParams {
    fn default() -> Self {
        ReinitParams {
            enabled: true,
            downscale: 4,
            window_frames: 30,
            sample_stride: 5,
            check_interval: 10,
            significance: 30.0,
            grid: 8,
            mean_distance_threshold: 10.0,
            changed_fraction_threshold: 0.5,
            entropy_threshold: 2.65,
        }
    }
}

/// Box-averaged low-resolution color image.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl SmallImage {
    /// Averages `factor`x`factor` blocks; partial blocks at the right and
    /// bottom edges average only their in-image pixels.
    pub fn downscale(rgb: &[Rgb], width: usize, height: usize, factor: usize) -> Self {
        let f = factor.max(1);
        let (sw, sh) = (width.div_ceil(f), height.div_ceil(f));
        let mut sums = vec![[0.0f64; 3]; sw * sh];
        let mut counts = vec![0u32; sw * sh];
        for y in 0..height {
            for x in 0..width {
                let j = (y / f) * sw + x / f;
                let p = rgb[y * width + x];
                for c in 0..3 {
                    sums[j][c] += f64::from(p[c]);
                }
                counts[j] += 1;
            }
        }
        let data = sums
            .into_iter()
            .zip(counts)
            .map(|(s, n)| s.map(|v| v / f64::from(n)))
            .collect();
        SmallImage {
            width: sw,
            height: sh,
            data,
        }
    }

    /// Per-pixel, per-channel lower median across `images`.
    pub fn median(images: &[&SmallImage]) -> SmallImage {
        let first = images[0];
        let mid = (images.len() - 1) / 2;
        let mut column = vec![0.0f64; images.len()];
        let data = (0..first.data.len())
            .map(|i| {
                let mut px = [0.0; 3];
                for (c, out) in px.iter_mut().enumerate() {
                    for (dst, img) in column.iter_mut().zip(images) {
                        *dst = img.data[i][c];
                    }
                    *out = *column.select_nth_unstable_by(mid, f64::total_cmp).1;
                }
                px
            })
            .collect();
        SmallImage {
            width: first.width,
            height: first.height,
            data,
        }
    }
}

/// The three disparities between model background and recent frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disparity {
    /// Mean Euclidean RGB distance.
    pub mean_distance: f64,
    /// Fraction of pixels whose distance exceeds the significance threshold.
    pub changed_fraction: f64,
    /// `exp` of the Shannon entropy of changed pixels over the grid cells;
    /// 1 when no pixel changed.
    pub spatial_entropy: f64,
}

impl Disparity {
    pub fn triggers(&self, params: &ReinitParams) -> bool {
        self.mean_distance > params.mean_distance_threshold
            && self.changed_fraction > params.changed_fraction_threshold
            && self.spatial_entropy > params.entropy_threshold
    }
}

pub fn disparities(background: &SmallImage, recent: &SmallImage, significance: f64, grid: usize) -> Disparity {
    assert_eq!(background.data.len(), recent.data.len());
    let (w, h) = (background.width, background.height);
    let total = background.data.len();
    if total == 0 {
        return Disparity {
            mean_distance: 0.0,
            changed_fraction: 0.0,
            spatial_entropy: 1.0,
        };
    }
    let grid = grid.max(1);
    let mut cells = vec![0u64; grid * grid];
    let mut sum = 0.0;
    let mut changed = 0u64;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (a, b) = (background.data[i], recent.data[i]);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            sum += d;
            if d > significance {
                changed += 1;
                cells[(y * grid / h) * grid + x * grid / w] += 1;
            }
        }
    }
    let spatial_entropy = if changed == 0 {
        1.0
    } else {
        let n = changed as f64;
        let entropy: f64 = cells
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum();
        entropy.exp()
    };
    Disparity {
        mean_distance: sum / total as f64,
        changed_fraction: changed as f64 / total as f64,
        spatial_entropy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReinitCheck {
    pub triggered: bool,
    pub disparity: Disparity,
}

/// Buffers downscaled recent frames and decides when to reinitialize.
#[derive(Debug, Clone)]
pub struct ReinitMonitor {
    params: ReinitParams,
    ring: VecDeque<SmallImage>,
    frames_seen: u64,
}

impl ReinitMonitor {
    pub fn new(params: ReinitParams) -> Self {
        ReinitMonitor {
            params,
            ring: VecDeque::new(),
            frames_seen: 0,
        }
    }

    pub fn params(&self) -> &ReinitParams {
        &self.params
    }

    pub fn buffered(&self) -> usize {
        self.ring.len()
    }

    fn capacity(&self) -> usize {
        (self.params.window_frames / self.params.sample_stride.max(1)).max(2)
    }

    /// Feeds one input frame; every `sample_stride`-th frame enters the ring.
    pub fn observe(&mut self, frame: &Frame) {
        let stride = self.params.sample_stride.max(1) as u64;
        if self.frames_seen.is_multiple_of(stride) {
            if self.ring.len() == self.capacity() {
                self.ring.pop_front();
            }
            self.ring.push_back(SmallImage::downscale(
                frame.rgb(),
                frame.width(),
                frame.height(),
                self.params.downscale,
            ));
        }
        self.frames_seen += 1;
    }

    /// True when a check should run after the most recently observed frame.
    pub fn is_due(&self, model: &BackgroundModel) -> bool {
        self.params.enabled
            && self.ring.len() >= 2
            && self.frames_seen.is_multiple_of(self.params.check_interval.max(1))
            && !model.in_reinit_cooldown()
    }

    pub fn check(&self, model: &BackgroundModel) -> ReinitCheck {
        let background = SmallImage::downscale(
            &model.median_image(),
            model.width(),
            model.height(),
            self.params.downscale,
        );
        let refs: Vec<&SmallImage> = self.ring.iter().collect();
        let recent = SmallImage::median(&refs);
        let disparity = disparities(&background, &recent, self.params.significance, self.params.grid);
        ReinitCheck {
            triggered: disparity.triggers(&self.params),
            disparity,
        }
    }

    /// Observes `frame`, then runs a check if one is due.
    pub fn check_reinit(&mut self, model: &BackgroundModel, frame: &Frame) -> Option<ReinitCheck> {
        self.observe(frame);
        self.is_due(model).then(|| self.check(model))
    }
}
