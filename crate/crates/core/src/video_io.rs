//! Frame sequences, ground truth and mask files.
//!
//! All knowledge of on-disk layouts lives here. Two sequence layouts are
//! accepted: a flat directory of numbered images, and the benchmark layout
//! where frames sit in an `input/` subdirectory next to `groundtruth/` and
//! `temporalROI.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::mask::LabelMask;

pub type Rgb = [u8; 3];

/// BT.601 luma, rounded half up. Integer weights sum to 1000 so the result is exact.
#[inline]
pub fn to_gray(rgb: Rgb) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
}

/// One decoded input frame with its luma plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    rgb: Vec<Rgb>,
    gray: Vec<u8>,
    index: u32,
}

impl Frame {
    pub fn from_rgb(width: usize, height: usize, rgb: Vec<Rgb>, index: u32) -> Result<Self> {
        if rgb.len() != width * height {
            return Err(Error::Shape(format!(
                "frame {index}: {} pixels for a {width}x{height} frame",
                rgb.len()
            )));
        }
        let gray = rgb.iter().copied().map(to_gray).collect();
        Ok(Frame {
            width,
            height,
            rgb,
            gray,
            index,
        })
    }

    /// Builds a frame filled with a single color.
    pub fn filled(width: usize, height: usize, color: Rgb, index: u32) -> Self {
        Frame::from_rgb(width, height, vec![color; width * height], index)
            .expect("length matches by construction")
    }

    pub fn from_image(img: &image::RgbImage, index: u32) -> Self {
        let rgb = img.pixels().map(|p| p.0).collect();
        Frame::from_rgb(img.width() as usize, img.height() as usize, rgb, index)
            .expect("image buffer length matches its dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.rgb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rgb.is_empty()
    }

    /// 1-based frame number.
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn rgb(&self) -> &[Rgb] {
        &self.rgb
    }

    pub fn gray(&self) -> &[u8] {
        &self.gray
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.rgb[y * self.width + x]
    }

    pub fn with_index(mut self, index: u32) -> Self {
        self.index = index;
        self
    }
}

/// Per-channel lower median over a stack of equally sized frames.
///
/// The result carries the index of the first frame.
pub fn temporal_median(frames: &[Frame]) -> Result<Frame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Shape("temporal median of an empty frame set".into()))?;
    let (w, h) = (first.width, first.height);
    if let Some(bad) = frames.iter().find(|f| f.width != w || f.height != h) {
        return Err(Error::Shape(format!(
            "frame {} is {}x{}, expected {w}x{h}",
            bad.index, bad.width, bad.height
        )));
    }
    let mid = (frames.len() - 1) / 2;
    let mut column = vec![0u8; frames.len()];
    let mut out = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let mut px = [0u8; 3];
        for (c, slot) in px.iter_mut().enumerate() {
            for (dst, f) in column.iter_mut().zip(frames) {
                *dst = f.rgb[i][c];
            }
            *slot = *column.select_nth_unstable(mid).1;
        }
        out.push(px);
    }
    Frame::from_rgb(w, h, out, first.index)
}

/// Ground-truth label codes of the change-detection benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum GtCode {
    Static = 0,
    HardShadow = 50,
    OutsideRoi = 85,
    Unknown = 170,
    Motion = 255,
}

impl GtCode {
    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(GtCode::Static),
            50 => Some(GtCode::HardShadow),
            85 => Some(GtCode::OutsideRoi),
            170 => Some(GtCode::Unknown),
            255 => Some(GtCode::Motion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthMask {
    width: usize,
    height: usize,
    codes: Vec<GtCode>,
}

impl GroundTruthMask {
    pub fn new(width: usize, height: usize, codes: Vec<GtCode>) -> Result<Self> {
        if codes.len() != width * height {
            return Err(Error::Shape(format!(
                "{} ground-truth codes for a {width}x{height} frame",
                codes.len()
            )));
        }
        Ok(GroundTruthMask {
            width,
            height,
            codes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[GtCode] {
        &self.codes
    }
}

/// Inclusive, 1-based range of evaluated frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalRoi {
    pub first: u32,
    pub last: u32,
}

impl TemporalRoi {
    pub fn contains(&self, index: u32) -> bool {
        (self.first..=self.last).contains(&index)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let nums: Vec<&str> = text.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(Error::TemporalRoi(format!(
                "expected two integers, found {:?}",
                text.trim()
            )));
        }
        let parse = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| Error::TemporalRoi(format!("{s:?} is not a frame index")))
        };
        let (first, last) = (parse(nums[0])?, parse(nums[1])?);
        if first == 0 || last < first {
            return Err(Error::TemporalRoi(format!("empty range {first}..={last}")));
        }
        Ok(TemporalRoi { first, last })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// Trailing decimal digits of the file stem, e.g. `in000042.jpg` -> 42.
fn trailing_number(path: &Path) -> Option<u32> {
    let stem = path.file_stem()?.to_str()?;
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    stem[stem.len() - digits..].parse().ok()
}

/// Numbered image files in `dir`, sorted by number.
pub fn numbered_images(dir: &Path) -> Result<Vec<(u32, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || !is_image(&path) {
            continue;
        }
        if let Some(n) = trailing_number(&path) {
            entries.push((n, path));
        }
    }
    entries.sort();
    if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateFrame {
            index: w[1].0,
            path: w[1].1.clone(),
        });
    }
    Ok(entries)
}

/// A numbered frame directory, decoded lazily.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    root: PathBuf,
    entries: Vec<(u32, PathBuf)>,
}

impl FrameSequence {
    /// Opens `dir`, or `dir/input` when that subdirectory exists.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::MissingDirectory(dir.to_path_buf()));
        }
        let input = dir.join("input");
        let root = if input.is_dir() { input } else { dir.to_path_buf() };
        let entries = numbered_images(&root)?;
        if entries.is_empty() {
            return Err(Error::NoFrames(root));
        }
        Ok(FrameSequence { root, entries })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    /// Frames in ascending index order; the first frame fixes the dimensions.
    pub fn frames(&self) -> Frames {
        Frames {
            entries: self.entries.clone().into_iter(),
            dims: None,
        }
    }
}

pub struct Frames {
    entries: std::vec::IntoIter<(u32, PathBuf)>,
    dims: Option<(usize, usize)>,
}

impl Iterator for Frames {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        let (index, path) = self.entries.next()?;
        Some(read_frame(&path, index).and_then(|frame| {
            let (w, h) = *self.dims.get_or_insert((frame.width, frame.height));
            if (frame.width, frame.height) != (w, h) {
                return Err(Error::FrameDimensions {
                    index,
                    path,
                    width: w,
                    height: h,
                    found_width: frame.width,
                    found_height: frame.height,
                });
            }
            Ok(frame)
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.entries.size_hint()
    }
}

/// Opens a frame directory and streams its frames in index order.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<Frames> {
    Ok(FrameSequence::open(dir)?.frames())
}

pub fn read_frame(path: &Path, index: u32) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Frame::from_image(&img.to_rgb8(), index))
}

pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let mut img = image::RgbImage::new(frame.width as u32, frame.height as u32);
    for (dst, src) in img.pixels_mut().zip(frame.rgb()) {
        dst.0 = *src;
    }
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes foreground as 255 and background as 0 in an 8-bit PNG.
pub fn write_mask(mask: &LabelMask, path: &Path) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a binary mask; values ≥ 128 are foreground.
pub fn read_mask(path: &Path) -> Result<LabelMask> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let data = img.pixels().map(|p| u8::from(p.0[0] >= 128)).collect();
    LabelMask::from_vec(img.width() as usize, img.height() as usize, data)
}

pub fn load_groundtruth(path: &Path) -> Result<GroundTruthMask> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut codes = Vec::with_capacity(w * h);
    for (x, y, p) in img.enumerate_pixels() {
        let value = p.0[0];
        let code = GtCode::from_value(value).ok_or_else(|| Error::InvalidGroundTruth {
            path: path.to_path_buf(),
            value,
            x: x as usize,
            y: y as usize,
        })?;
        codes.push(code);
    }
    GroundTruthMask::new(w, h, codes)
}

pub fn write_groundtruth(gt: &GroundTruthMask, path: &Path) -> Result<()> {
    let img = GrayImage::from_fn(gt.width as u32, gt.height as u32, |x, y| {
        Luma([gt.codes[y as usize * gt.width + x as usize] as u8])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Benchmark file name for an output mask, e.g. `bin000042.png`.
pub fn mask_file_name(index: u32) -> String {
    format!("bin{index:06}.png")
}
