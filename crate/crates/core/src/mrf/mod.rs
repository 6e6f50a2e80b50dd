//! Two-layer MRF labeling and heuristic post-processing.
//!
//! The pixel layer is a 4-connected grid whose data costs are negative log
//! posteriors; the superpixel layer has one node per superpixel with summed
//! pixel costs. Potts terms couple neighboring pixels (contrast-weighted),
//! neighboring superpixels, and each pixel with its superpixel.

mod bp;
mod graph;
mod postprocess;

pub use bp::{loopy_bp, BpOutcome};
pub use graph::{Labeling, MrfParams, PixelEdge, TwoLayerGraph};
pub use postprocess::{area_threshold, fill_holes, post_process, post_process_with, remove_small_regions};
