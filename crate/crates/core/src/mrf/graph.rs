use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::superpixels::SuperpixelMap;
use crate::video_io::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrfParams {
    /// Pixel-pair weight.
    pub phi: f64,
    /// Color contrast scale of the pixel-pair weight.
    pub sigma: f64,
    /// Superpixel-pair weight.
    pub xi: f64,
    /// Pixel/superpixel compatibility weight.
    pub psi: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
}

impl Default for MrfParams {
    fn default() -> Self {
        MrfParams {
            phi: 30.0,
            sigma: 400.0,
            xi: 150.0,
            psi: 5.0,
            max_iterations: 50,
            tolerance: 1e-4,
            damping: 0.5,
        }
    }
}

/// Undirected pixel-layer edge with its disagreement cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelEdge {
    pub a: u32,
    pub b: u32,
    pub weight: f64,
}

/// Labels of both layers, 1 = foreground.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labeling {
    pub pixels: Vec<u8>,
    pub superpixels: Vec<u8>,
}

/// Costs and edges of the two-layer model.
///
/// `pixel_costs[x] = [D(0), D(1)]`; superpixel costs are the sums of their
/// members' pixel costs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerGraph {
    pixel_costs: Vec<[f64; 2]>,
    superpixel_costs: Vec<[f64; 2]>,
    pixel_edges: Vec<PixelEdge>,
    superpixel_edges: Vec<(u32, u32)>,
    membership: Vec<u32>,
    xi: f64,
    psi: f64,
}

impl TwoLayerGraph {
    /// Builds the graph for one frame from clamped foreground posteriors.
    pub fn build(posteriors: &[f64], frame: &Frame, spmap: &SuperpixelMap, params: &MrfParams) -> Result<Self> {
        let (w, h) = (frame.width(), frame.height());
        if posteriors.len() != w * h || (spmap.width(), spmap.height()) != (w, h) {
            return Err(Error::Shape(format!(
                "{} posteriors, {}x{} frame, {}x{} superpixel map",
                posteriors.len(),
                w,
                h,
                spmap.width(),
                spmap.height()
            )));
        }
        let pixel_costs = posteriors.iter().map(|&p| [-(1.0 - p).ln(), -p.ln()]).collect();
        let weight = |i: usize, j: usize| {
            let (a, b) = (frame.rgb()[i], frame.rgb()[j]);
            let d2: f64 = (0..3).map(|c| (f64::from(a[c]) - f64::from(b[c])).powi(2)).sum();
            params.phi * (-d2 / params.sigma).exp()
        };
        let mut pixel_edges = Vec::with_capacity(2 * w * h);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    pixel_edges.push(PixelEdge {
                        a: i as u32,
                        b: i as u32 + 1,
                        weight: weight(i, i + 1),
                    });
                }
                if y + 1 < h {
                    pixel_edges.push(PixelEdge {
                        a: i as u32,
                        b: (i + w) as u32,
                        weight: weight(i, i + w),
                    });
                }
            }
        }
        Self::from_parts(
            pixel_costs,
            pixel_edges,
            spmap.adjacency().to_vec(),
            spmap.labels().to_vec(),
            spmap.count(),
            params.xi,
            params.psi,
        )
    }

    /// Assembles a graph from explicit parts; superpixel costs are derived.
    pub fn from_parts(
        pixel_costs: Vec<[f64; 2]>,
        pixel_edges: Vec<PixelEdge>,
        superpixel_edges: Vec<(u32, u32)>,
        membership: Vec<u32>,
        superpixel_count: usize,
        xi: f64,
        psi: f64,
    ) -> Result<Self> {
        let n = pixel_costs.len();
        if membership.len() != n {
            return Err(Error::Shape(format!(
                "{} membership entries for {n} pixels",
                membership.len()
            )));
        }
        if let Some(e) = pixel_edges
            .iter()
            .find(|e| e.a as usize >= n || e.b as usize >= n || e.a == e.b)
        {
            return Err(Error::Shape(format!("bad pixel edge {}-{}", e.a, e.b)));
        }
        if let Some(&(a, b)) = superpixel_edges
            .iter()
            .find(|&&(a, b)| a as usize >= superpixel_count || b as usize >= superpixel_count || a == b)
        {
            return Err(Error::Shape(format!("bad superpixel edge {a}-{b}")));
        }
        let mut superpixel_costs = vec![[0.0; 2]; superpixel_count];
        for (c, &s) in pixel_costs.iter().zip(&membership) {
            let slot = superpixel_costs
                .get_mut(s as usize)
                .ok_or_else(|| Error::Shape(format!("pixel assigned to missing superpixel {s}")))?;
            slot[0] += c[0];
            slot[1] += c[1];
        }
        Ok(TwoLayerGraph {
            pixel_costs,
            superpixel_costs,
            pixel_edges,
            superpixel_edges,
            membership,
            xi,
            psi,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_costs.len()
    }

    pub fn superpixel_count(&self) -> usize {
        self.superpixel_costs.len()
    }

    pub fn pixel_costs(&self) -> &[[f64; 2]] {
        &self.pixel_costs
    }

    pub fn superpixel_costs(&self) -> &[[f64; 2]] {
        &self.superpixel_costs
    }

    pub fn pixel_edges(&self) -> &[PixelEdge] {
        &self.pixel_edges
    }

    pub fn superpixel_edges(&self) -> &[(u32, u32)] {
        &self.superpixel_edges
    }

    pub fn membership(&self) -> &[u32] {
        &self.membership
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Total energy of `labeling`.
    pub fn energy(&self, labeling: &Labeling) -> f64 {
        let lp = &labeling.pixels;
        let ls = &labeling.superpixels;
        assert_eq!(lp.len(), self.pixel_count(), "pixel labels");
        assert_eq!(ls.len(), self.superpixel_count(), "superpixel labels");
        let mut e = 0.0;
        for (c, &l) in self.pixel_costs.iter().zip(lp) {
            e += c[l as usize];
        }
        for edge in &self.pixel_edges {
            if lp[edge.a as usize] != lp[edge.b as usize] {
                e += edge.weight;
            }
        }
        for (c, &l) in self.superpixel_costs.iter().zip(ls) {
            e += c[l as usize];
        }
        for &(a, b) in &self.superpixel_edges {
            if ls[a as usize] != ls[b as usize] {
                e += self.xi;
            }
        }
        for (&l, &s) in lp.iter().zip(&self.membership) {
            if l != ls[s as usize] {
                e += self.psi;
            }
        }
        e
    }

    /// Uniform labeling of both layers.
    pub fn uniform_labeling(&self, label: u8) -> Labeling {
        Labeling {
            pixels: vec![label; self.pixel_count()],
            superpixels: vec![label; self.superpixel_count()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pixel_graph() -> (Frame, SuperpixelMap) {
        let f = Frame::from_rgb(2, 1, vec![[10, 10, 10], [10, 10, 10]], 1).unwrap();
        (f, SuperpixelMap::single(2, 1))
    }

    #[test]
    fn symmetric_posteriors_give_log2_costs() {
        let (f, sp) = two_pixel_graph();
        let g = TwoLayerGraph::build(&[0.5, 0.5], &f, &sp, &MrfParams::default()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        for c in g.pixel_costs() {
            assert!((c[0] - ln2).abs() < 1e-15 && (c[1] - ln2).abs() < 1e-15);
        }
        assert!((g.superpixel_costs()[0][0] - 2.0 * ln2).abs() < 1e-15);
    }

    #[test]
    fn pair_weights_follow_color_contrast() {
        let (f, sp) = two_pixel_graph();
        let g = TwoLayerGraph::build(&[0.5, 0.5], &f, &sp, &MrfParams::default()).unwrap();
        assert_eq!(g.pixel_edges()[0].weight, 30.0);

        // Squared distance 400 = 20^2 on one channel.
        let f = Frame::from_rgb(2, 1, vec![[10, 10, 10], [30, 10, 10]], 1).unwrap();
        let g = TwoLayerGraph::build(&[0.5, 0.5], &f, &sp, &MrfParams::default()).unwrap();
        let w = g.pixel_edges()[0].weight;
        assert!((w - 30.0 * (-1f64).exp()).abs() < 1e-12);
        assert!((w - 11.036).abs() < 1e-3);
    }

    #[test]
    fn uniform_labeling_energy_is_data_only() {
        let f = Frame::from_rgb(3, 1, vec![[0, 0, 0], [90, 9, 9], [200, 1, 1]], 1).unwrap();
        let sp = SuperpixelMap::from_labels(3, 1, vec![0, 0, 1]).unwrap();
        let post = [0.2, 0.7, 0.9];
        let g = TwoLayerGraph::build(&post, &f, &sp, &MrfParams::default()).unwrap();
        let zero: f64 = post.iter().map(|p| -(1.0 - p).ln()).sum::<f64>() * 2.0;
        assert!((g.energy(&g.uniform_labeling(0)) - zero).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let (f, sp) = two_pixel_graph();
        assert!(TwoLayerGraph::build(&[0.5], &f, &sp, &MrfParams::default()).is_err());
        let sp3 = SuperpixelMap::single(3, 1);
        assert!(TwoLayerGraph::build(&[0.5, 0.5], &f, &sp3, &MrfParams::default()).is_err());
    }
}
