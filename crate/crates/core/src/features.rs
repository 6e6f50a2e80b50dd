//! Brightness, chromaticity and texture variation against the background model.
//!
//! The observed color `O` is compared with each of its closest color samples
//! `E` along the chromaticity line through the origin and `E`: the brightness
//! variation is the signed distance of the projection `alpha * E` from `E`, the
//! chromaticity variation is the orthogonal distance of `O` from the line.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{hamming, BackgroundModel, PixelModel};
use crate::video_io::{Frame, Rgb};

/// Features of one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Signed brightness variation.
    pub bv: f64,
    /// Chromaticity variation, non-negative.
    pub cv: f64,
    /// Texture variation, a Hamming distance in `0..=24`.
    pub tv: u8,
}

impl FeatureVector {
    pub fn new(bv: f64, cv: f64, tv: u8) -> Self {
        FeatureVector { bv, cv, tv }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    width: usize,
    height: usize,
    data: Vec<FeatureVector>,
}

impl FeatureMaps {
    pub fn from_vec(width: usize, height: usize, data: Vec<FeatureVector>) -> Self {
        assert_eq!(data.len(), width * height, "feature map size");
        FeatureMaps {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[FeatureVector] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> FeatureVector {
        self.data[y * self.width + x]
    }
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn to_f64(c: Rgb) -> [f64; 3] {
    c.map(f64::from)
}

/// Brightness ratio of `o` against sample `e`; 1 for a (near-)black sample.
pub fn alpha(o: Rgb, e: Rgb) -> f64 {
    let (o, e) = (to_f64(o), to_f64(e));
    let ee = dot(e, e);
    if ee < 1.0 {
        1.0
    } else {
        dot(o, e) / ee
    }
}

/// `(BV, CV)` of one observation/sample pair.
pub fn brightness_chroma(o: Rgb, e: Rgb) -> (f64, f64) {
    let a = alpha(o, e);
    let (of, ef) = (to_f64(o), to_f64(e));
    let bv = (a - 1.0) * dot(ef, ef).sqrt();
    let r = [of[0] - a * ef[0], of[1] - a * ef[1], of[2] - a * ef[2]];
    (bv, dot(r, r).sqrt())
}

/// Indices of the `k` smallest keys; ties go to the lower index.
fn closest<K: Ord + Copy>(keys: impl Iterator<Item = K>, k: usize) -> Vec<usize> {
    let mut best: Vec<(K, usize)> = Vec::with_capacity(k + 1);
    for (i, key) in keys.enumerate() {
        if best.len() == k && key >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(bk, _)| bk <= key);
        best.insert(pos, (key, i));
        best.truncate(k);
    }
    best.into_iter().map(|(_, i)| i).collect()
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

/// Medians of BV and CV over the `k` color samples closest to `o`.
pub fn extract_color_features(o: Rgb, samples: &[Rgb], k: usize) -> (f64, f64) {
    let dist2 = samples.iter().map(|e| {
        (0..3)
            .map(|c| {
                let d = i32::from(o[c]) - i32::from(e[c]);
                (d * d) as u32
            })
            .sum::<u32>()
    });
    let near = closest(dist2, k.min(samples.len()));
    let mut bvs = Vec::with_capacity(near.len());
    let mut cvs = Vec::with_capacity(near.len());
    for i in near {
        let (bv, cv) = brightness_chroma(o, samples[i]);
        bvs.push(bv);
        cvs.push(cv);
    }
    (median_of(&mut bvs), median_of(&mut cvs))
}

/// Median of the `k` smallest Hamming distances between `code` and the samples.
pub fn extract_texture_feature(code: u32, samples: &[u32], k: usize) -> u8 {
    let dists: Vec<u32> = samples.iter().map(|&s| hamming(code, s)).collect();
    let near = closest(dists.iter().copied(), k.min(samples.len()));
    let mut picked: Vec<u32> = near.into_iter().map(|i| dists[i]).collect();
    picked.sort_unstable();
    picked[(picked.len() - 1) / 2] as u8
}

pub fn pixel_features(o: Rgb, code: u32, model: PixelModel<'_>, k: usize) -> FeatureVector {
    let (bv, cv) = extract_color_features(o, model.colors, k);
    let tv = extract_texture_feature(code, model.textures, k);
    FeatureVector { bv, cv, tv }
}

/// Features for every pixel of `frame`; `codes` are the frame's LTP codes.
pub fn extract(frame: &Frame, codes: &[u32], model: &BackgroundModel, k: usize) -> FeatureMaps {
    let w = frame.width();
    let mut data = vec![FeatureVector::default(); frame.len()];
    data.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let i = y * w + x;
                *out = pixel_features(frame.rgb()[i], codes[i], model.pixel(i), k);
            }
        });
    FeatureMaps::from_vec(w, frame.height(), data)
}

/// Strict bounds a pixel must satisfy on all three features to update the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateBounds {
    pub bv: f64,
    pub cv: f64,
    pub tv: u8,
}

impl Default for UpdateBounds {
    fn default() -> Self {
        UpdateBounds {
            bv: 15.0,
            cv: 15.0,
            tv: 8,
        }
    }
}

impl UpdateBounds {
    pub fn admits(&self, fv: FeatureVector) -> bool {
        fv.bv.abs() < self.bv && fv.cv < self.cv && fv.tv < self.tv
    }
}

/// The conservative update criterion with its default bounds.
pub fn within_default_update_bounds(fv: FeatureVector) -> bool {
    UpdateBounds::default().admits(fv)
}
