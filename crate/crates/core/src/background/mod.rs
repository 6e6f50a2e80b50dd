//! Sample-based multimodal background model with color and texture samples.

pub mod ltp;
mod model;
pub mod reinit;

pub use ltp::{hamming, ltp_compare, LtpOperator};
pub use model::{BackgroundModel, ModelParams, PixelModel};
pub use reinit::{disparities, Disparity, ReinitCheck, ReinitMonitor, ReinitParams};
