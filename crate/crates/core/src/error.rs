use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("directory not found: {}", .0.display())]
    MissingDirectory(PathBuf),

    #[error("no frames found in {}", .0.display())]
    NoFrames(PathBuf),

    #[error("duplicate frame index {index} ({})", path.display())]
    DuplicateFrame { index: u32, path: PathBuf },

    #[error(
        "frame {index} ({}) is {found_width}x{found_height}, expected {width}x{height}",
        path.display()
    )]
    FrameDimensions {
        index: u32,
        path: PathBuf,
        width: usize,
        height: usize,
        found_width: usize,
        found_height: usize,
    },

    #[error("{}: ground-truth value {value} at ({x}, {y}) is not one of 0, 50, 85, 170, 255", path.display())]
    InvalidGroundTruth {
        path: PathBuf,
        value: u8,
        x: usize,
        y: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid temporal ROI: {0}")]
    TemporalRoi(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{masks} masks but {groundtruth} ground-truth frames{detail}")]
    CountMismatch {
        masks: usize,
        groundtruth: usize,
        detail: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
