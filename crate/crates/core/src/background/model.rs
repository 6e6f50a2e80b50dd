use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ltp::LtpOperator;
use crate::error::{Error, Result};
use crate::video_io::{Frame, Rgb};

/// Parameters of the per-pixel sample model and its update schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Color samples and texture samples kept per pixel.
    pub samples: usize,
    pub ltp_tau: f64,
    pub ltp_nu: u32,
    /// Frames at the start of a video updated with subsampling factor 1.
    pub fast_update_frames: u64,
    /// Subsampling factor after the fast phase.
    pub subsampling_factor: u32,
    /// Frames at factor 1 following a reinitialization.
    pub reinit_fast_frames: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            samples: 50,
            ltp_tau: 0.1,
            ltp_nu: 5,
            fast_update_frames: 100,
            subsampling_factor: 10,
            reinit_fast_frames: 100,
        }
    }
}

/// Read-only view of one pixel's samples.
#[derive(Debug, Clone, Copy)]
pub struct PixelModel<'a> {
    pub colors: &'a [Rgb],
    pub textures: &'a [u32],
}

/// Per-pixel sets of color and texture samples.
///
/// Samples are stored pixel-major: pixel `i` owns `colors[i*N..(i+1)*N]`.
#[derive(Debug, Clone)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    params: ModelParams,
    ltp: LtpOperator,
    colors: Vec<Rgb>,
    textures: Vec<u32>,
    frame_counter: u64,
    fast_until: Option<u64>,
    rng: ChaCha8Rng,
}

const NEIGHBORS_3X3: [(i32, i32); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

const NEIGHBORS_8: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

impl BackgroundModel {
    /// Populates every pixel from the first frame and the temporal median
    /// image: each sample picks one of the two sources and a position in the
    /// 3x3 neighborhood, uniformly and independently.
    pub fn init(first: &Frame, median: &Frame, params: ModelParams, seed: u64) -> Result<Self> {
        if (first.width(), first.height()) != (median.width(), median.height()) {
            return Err(Error::Shape(format!(
                "first frame is {}x{}, median frame is {}x{}",
                first.width(),
                first.height(),
                median.width(),
                median.height()
            )));
        }
        if params.samples < 3 {
            return Err(Error::Config(format!(
                "samples must be at least 3, got {}",
                params.samples
            )));
        }
        let (w, h) = (first.width(), first.height());
        let n = params.samples;
        let ltp = LtpOperator::new(params.ltp_tau, params.ltp_nu);
        let sources = [first, median];
        let codes = [
            ltp.code_image(first.gray(), w, h),
            ltp.code_image(median.gray(), w, h),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut colors = Vec::with_capacity(w * h * n);
        let mut textures = Vec::with_capacity(w * h * n);
        for y in 0..h {
            for x in 0..w {
                for _ in 0..n {
                    let s = rng.random_range(0..2);
                    let j = neighbor_index(&mut rng, &NEIGHBORS_3X3, x, y, w, h);
                    colors.push(sources[s].rgb()[j]);
                }
                for _ in 0..n {
                    let s = rng.random_range(0..2);
                    let j = neighbor_index(&mut rng, &NEIGHBORS_3X3, x, y, w, h);
                    textures.push(codes[s][j]);
                }
            }
        }
        Ok(BackgroundModel {
            width: w,
            height: h,
            params,
            ltp,
            colors,
            textures,
            frame_counter: 0,
            fast_until: None,
            rng,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples_per_pixel(&self) -> usize {
        self.params.samples
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn ltp(&self) -> &LtpOperator {
        &self.ltp
    }

    #[inline]
    pub fn pixel(&self, i: usize) -> PixelModel<'_> {
        let n = self.params.samples;
        PixelModel {
            colors: &self.colors[i * n..(i + 1) * n],
            textures: &self.textures[i * n..(i + 1) * n],
        }
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn textures(&self) -> &[u32] {
        &self.textures
    }

    /// Frames started so far.
    pub fn frame_counter(&self) -> u64 {
        self.frame_counter
    }

    /// Marks the start of a new frame; drives the subsampling schedule.
    pub fn begin_frame(&mut self) {
        self.frame_counter += 1;
    }

    /// Frames still to come at factor 1 because of a reinitialization.
    pub fn reinit_cooldown(&self) -> u64 {
        self.fast_until
            .map_or(0, |until| until.saturating_sub(self.frame_counter))
    }

    pub fn in_reinit_cooldown(&self) -> bool {
        self.fast_until.is_some_and(|until| self.frame_counter <= until)
    }

    pub fn subsampling_factor(&self) -> u32 {
        if self.frame_counter <= self.params.fast_update_frames || self.in_reinit_cooldown() {
            1
        } else {
            self.params.subsampling_factor.max(1)
        }
    }

    /// Conservative, memoryless update with spatial propagation.
    ///
    /// Background observations replace one random color sample and one random
    /// texture sample of the pixel with probability `1/factor`, and with an
    /// independent draw at the same probability also of a random 8-connected
    /// neighbor. Foreground observations never enter the model.
    pub fn maybe_update(&mut self, i: usize, color: Rgb, texture: u32, is_background: bool) {
        if !is_background {
            return;
        }
        let factor = self.subsampling_factor();
        if self.draw(factor) {
            self.replace_random(i, color, texture);
        }
        if self.draw(factor) {
            let (x, y) = (i % self.width, i / self.width);
            let j = neighbor_index(&mut self.rng, &NEIGHBORS_8, x, y, self.width, self.height);
            self.replace_random(j, color, texture);
        }
    }

    /// Runs [`Self::maybe_update`] over a whole frame in row-major order.
    pub fn update_frame(&mut self, frame: &Frame, codes: &[u32], background: &[bool]) {
        debug_assert_eq!(frame.len(), self.width * self.height);
        for (i, ((&color, &code), &bg)) in frame.rgb().iter().zip(codes).zip(background).enumerate()
        {
            self.maybe_update(i, color, code, bg);
        }
    }

    #[inline]
    fn draw(&mut self, factor: u32) -> bool {
        factor <= 1 || self.rng.random_range(0..factor) == 0
    }

    fn replace_random(&mut self, i: usize, color: Rgb, texture: u32) {
        let n = self.params.samples;
        let c = self.rng.random_range(0..n);
        let t = self.rng.random_range(0..n);
        self.colors[i * n + c] = color;
        self.textures[i * n + t] = texture;
    }

    /// Replaces ⌈N/2⌉ color and ⌈N/2⌉ texture samples of every pixel with
    /// values from random 3x3 positions of `frame`, then holds the
    /// subsampling factor at 1 for the configured number of frames.
    pub fn reinit(&mut self, frame: &Frame, codes: &[u32]) {
        let (w, h, n) = (self.width, self.height, self.params.samples);
        let k = n.div_ceil(2);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                for slot in sample(&mut self.rng, n, k) {
                    let j = neighbor_index(&mut self.rng, &NEIGHBORS_3X3, x, y, w, h);
                    self.colors[i * n + slot] = frame.rgb()[j];
                }
                for slot in sample(&mut self.rng, n, k) {
                    let j = neighbor_index(&mut self.rng, &NEIGHBORS_3X3, x, y, w, h);
                    self.textures[i * n + slot] = codes[j];
                }
            }
        }
        self.fast_until = Some(self.frame_counter + self.params.reinit_fast_frames);
    }

    /// Per-pixel, per-channel lower median of the color samples.
    pub fn median_image(&self) -> Vec<Rgb> {
        let n = self.params.samples;
        let mid = (n - 1) / 2;
        let mut buf = vec![0u8; n];
        self.colors
            .chunks_exact(n)
            .map(|samples| {
                let mut px = [0u8; 3];
                for (c, out) in px.iter_mut().enumerate() {
                    for (dst, s) in buf.iter_mut().zip(samples) {
                        *dst = s[c];
                    }
                    *out = *buf.select_nth_unstable(mid).1;
                }
                px
            })
            .collect()
    }
}

/// Uniform pick among `offsets` around `(x, y)`, clamped to the image.
fn neighbor_index(
    rng: &mut ChaCha8Rng,
    offsets: &[(i32, i32)],
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> usize {
    let (dx, dy) = offsets[rng.random_range(0..offsets.len())];
    let nx = (x as i64 + dx as i64).clamp(0, w as i64 - 1) as usize;
    let ny = (y as i64 + dy as i64).clamp(0, h as i64 - 1) as usize;
    ny * w + nx
}
