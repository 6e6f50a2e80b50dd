//! Min-sum loopy belief propagation for binary Potts models.

use rayon::prelude::*;

use super::graph::{Labeling, MrfParams, TwoLayerGraph};

/// Result of one BP run.
#[derive(Debug, Clone, PartialEq)]
pub struct BpOutcome {
    pub labeling: Labeling,
    pub iterations: usize,
    /// Largest relative message change in the last iteration.
    pub final_delta: f64,
    pub converged: bool,
    /// A uniform labeling had lower energy than the BP labeling and replaced it.
    pub uniform_fallback: bool,
}

/// Flattened view: nodes `0..P` are pixels, `P..P+K` superpixels.
struct Flat {
    unary: Vec<[f64; 2]>,
    /// `(from, to, weight)`; message `2e` flows from→to, `2e+1` to→from.
    edges: Vec<(u32, u32, f64)>,
}

fn flatten(g: &TwoLayerGraph) -> Flat {
    let p = g.pixel_count() as u32;
    let mut unary = Vec::with_capacity(g.pixel_count() + g.superpixel_count());
    unary.extend_from_slice(g.pixel_costs());
    unary.extend_from_slice(g.superpixel_costs());
    let mut edges =
        Vec::with_capacity(g.pixel_edges().len() + g.superpixel_edges().len() + g.membership().len());
    edges.extend(g.pixel_edges().iter().map(|e| (e.a, e.b, e.weight)));
    edges.extend(g.superpixel_edges().iter().map(|&(a, b)| (p + a, p + b, g.xi())));
    edges.extend(
        g.membership()
            .iter()
            .enumerate()
            .map(|(x, &s)| (x as u32, p + s, g.psi())),
    );
    Flat { unary, edges }
}

#[inline]
fn normalize(m: [f64; 2]) -> [f64; 2] {
    let lo = m[0].min(m[1]);
    [m[0] - lo, m[1] - lo]
}

fn beliefs(flat: &Flat, messages: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut b = flat.unary.clone();
    for (e, &(u, v, _)) in flat.edges.iter().enumerate() {
        let (fwd, bwd) = (messages[2 * e], messages[2 * e + 1]);
        b[v as usize][0] += fwd[0];
        b[v as usize][1] += fwd[1];
        b[u as usize][0] += bwd[0];
        b[u as usize][1] += bwd[1];
    }
    b
}

/// Synchronous min-sum BP with damping.
///
/// Messages are normalized to a zero minimum. Iteration stops once the
/// largest relative change `|new - old|_inf / (1 + |old|_inf)` drops below
/// the tolerance, or at the iteration cap. Each node takes the label with the
/// smaller belief; ties go to background. If either constant labeling has
/// strictly lower energy than the result, it is returned instead.
pub fn loopy_bp(graph: &TwoLayerGraph, params: &MrfParams) -> BpOutcome {
    let flat = flatten(graph);
    let mut messages = vec![[0.0f64; 2]; 2 * flat.edges.len()];
    let mut next = messages.clone();
    let damping = params.damping.clamp(0.0, 1.0);
    let mut iterations = 0;
    let mut final_delta = 0.0;
    let mut converged = flat.edges.is_empty();

    while !converged && iterations < params.max_iterations {
        let b = beliefs(&flat, &messages);
        let delta = next
            .par_chunks_mut(2)
            .zip(messages.par_chunks(2))
            .zip(flat.edges.par_iter())
            .map(|((out, old), &(u, v, w))| {
                let mut worst = 0.0f64;
                for (dir, src) in [u, v].into_iter().enumerate() {
                    // Exclude what the receiving node told src.
                    let back = old[1 - dir];
                    let hb = b[src as usize];
                    let h = [hb[0] - back[0], hb[1] - back[1]];
                    let raw = normalize([h[0].min(h[1] + w), h[1].min(h[0] + w)]);
                    let prev = old[dir];
                    let damped = normalize([
                        (1.0 - damping) * raw[0] + damping * prev[0],
                        (1.0 - damping) * raw[1] + damping * prev[1],
                    ]);
                    let diff = (damped[0] - prev[0]).abs().max((damped[1] - prev[1]).abs());
                    let scale = 1.0 + prev[0].abs().max(prev[1].abs());
                    worst = worst.max(diff / scale);
                    out[dir] = damped;
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut messages, &mut next);
        iterations += 1;
        final_delta = delta;
        converged = delta < params.tolerance;
    }

    let b = beliefs(&flat, &messages);
    let label = |x: &[f64; 2]| u8::from(x[1] < x[0]);
    let p = graph.pixel_count();
    let mut labeling = Labeling {
        pixels: b[..p].iter().map(label).collect(),
        superpixels: b[p..].iter().map(label).collect(),
    };
    // Loopy BP carries no optimality guarantee; never return worse than a
    // constant labeling.
    let mut best = graph.energy(&labeling);
    let mut uniform_fallback = false;
    for l in [0, 1] {
        let candidate = graph.uniform_labeling(l);
        let e = graph.energy(&candidate);
        if e < best {
            best = e;
            labeling = candidate;
            uniform_fallback = true;
        }
    }
    BpOutcome {
        labeling,
        iterations,
        final_delta,
        converged,
        uniform_fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::super::graph::PixelEdge;
    use super::*;

    fn chain(costs: &[[f64; 2]], weights: &[f64]) -> TwoLayerGraph {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| PixelEdge {
                a: i as u32,
                b: i as u32 + 1,
                weight: w,
            })
            .collect();
        TwoLayerGraph::from_parts(costs.to_vec(), edges, vec![], vec![0; costs.len()], 1, 0.0, 0.0).unwrap()
    }

    fn brute_force_pixels(g: &TwoLayerGraph) -> (f64, Vec<u8>) {
        let n = g.pixel_count();
        let k = g.superpixel_count();
        let mut best = (f64::INFINITY, vec![]);
        for bits in 0u32..1 << (n + k) {
            let l = Labeling {
                pixels: (0..n).map(|i| (bits >> i & 1) as u8).collect(),
                superpixels: (0..k).map(|i| (bits >> (n + i) & 1) as u8).collect(),
            };
            let e = g.energy(&l);
            if e < best.0 {
                best = (e, l.pixels);
            }
        }
        best
    }

    #[test]
    fn uncoupled_nodes_take_their_own_argmin() {
        let costs = [[1.0, 2.0], [3.0, 0.5], [0.7, 0.7]];
        let g = TwoLayerGraph::from_parts(costs.to_vec(), vec![], vec![], vec![0, 0, 0], 1, 0.0, 0.0).unwrap();
        let out = loopy_bp(&g, &MrfParams::default());
        assert_eq!(out.labeling.pixels, vec![0, 1, 0]);
    }

    #[test]
    fn chain_matches_exhaustive_minimum() {
        let g = chain(&[[0.2, 1.5], [1.0, 0.9], [2.0, 0.1]], &[0.8, 0.6]);
        let out = loopy_bp(&g, &MrfParams::default());
        let (best, labels) = brute_force_pixels(&g);
        assert_eq!(out.labeling.pixels, labels);
        assert!((g.energy(&out.labeling) - best).abs() < 1e-12);
        assert!(out.converged);
    }

    #[test]
    fn messages_are_normalized() {
        let m = normalize([3.5, 1.25]);
        assert_eq!(m, [2.25, 0.0]);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let costs: Vec<[f64; 2]> = (0..200).map(|i| [((i * 37) % 11) as f64 * 0.3, ((i * 53) % 7) as f64 * 0.4]).collect();
        let weights: Vec<f64> = (0..199).map(|i| ((i * 13) % 5) as f64 * 0.5).collect();
        let g = chain(&costs, &weights);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| loopy_bp(&g, &MrfParams::default()));
        let b = loopy_bp(&g, &MrfParams::default());
        assert_eq!(a, b);
    }
}
