//! Change detection in video with a sample-based color/texture background
//! model, multi-source Bayesian learning of foreground and background
//! feature densities, and a two-layer (pixel and superpixel) MRF.
//!
//! ```no_run
//! use changedet::{load_sequence, Frame, Pipeline, PipelineConfig};
//!
//! let frames: Vec<Frame> = load_sequence("video/input")?.collect::<Result<_, _>>()?;
//! let mut pipeline = Pipeline::from_frames(PipelineConfig::default(), &frames)?;
//! for frame in &frames {
//!     let mask = pipeline.process_frame(frame)?.mask;
//!     println!("{}: {} foreground pixels", frame.index(), mask.count_foreground());
//! }
//! # Ok::<(), changedet::Error>(())
//! ```

pub mod background;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learning;
pub mod mask;
pub mod mrf;
pub mod pipeline;
pub mod superpixels;
pub mod video_io;

pub use background::{BackgroundModel, LtpOperator, ModelParams, ReinitMonitor, ReinitParams};
pub use error::{Error, Result};
pub use evaluation::{aggregate, report, BenchmarkReport, Confusion, MetricsReport};
pub use features::{FeatureMaps, FeatureVector};
pub use learning::{ClassConditionalModel, Histogram, KdeParams, PriorMap, Thresholds};
pub use mask::LabelMask;
pub use mrf::{loopy_bp, post_process, MrfParams, TwoLayerGraph};
pub use pipeline::{detect_directory, DetectOptions, FrameResult, LabelingMode, Pipeline, PipelineConfig};
pub use superpixels::{slic_segment, SlicParams, SuperpixelMap};
pub use video_io::{load_sequence, Frame, FrameSequence, GroundTruthMask, GtCode, TemporalRoi};
