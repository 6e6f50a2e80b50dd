//! Online estimation of the class-conditional feature densities and the
//! per-pixel foreground prior.
//!
//! Foreground training pixels for one feature are selected by confident
//! exceedances of the *other* two features; background training pixels come
//! from the complement of the dilated confident-foreground mask. Densities are
//! Gaussian kernel estimates over integer-quantized histograms.

use std::io::{Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMaps, FeatureVector};
use crate::mask::LabelMask;

pub const BV_RANGE: (i32, i32) = (-443, 443);
pub const CV_RANGE: (i32, i32) = (0, 443);
pub const TV_RANGE: (i32, i32) = (0, 24);

/// Floor applied to each density before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-12;
pub const POSTERIOR_MIN: f64 = 1e-6;
pub const POSTERIOR_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeParams {
    pub bandwidth: f64,
    /// Kernel support radius in bandwidths.
    pub truncation: f64,
    /// Below this many samples a histogram answers with the uniform density.
    pub min_total: f64,
}

impl Default for KdeParams {
    fn default() -> Self {
        KdeParams {
            bandwidth: 2.0,
            truncation: 4.0,
            min_total: 1000.0,
        }
    }
}

/// Thresholds of the confident-foreground rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub bv: f64,
    pub cv: f64,
    pub tv: u8,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bv: 50.0,
            cv: 20.0,
            tv: 8,
        }
    }
}

impl Thresholds {
    #[inline]
    pub fn bv_exceeded(&self, fv: FeatureVector) -> bool {
        fv.bv.abs() > self.bv
    }

    #[inline]
    pub fn cv_exceeded(&self, fv: FeatureVector) -> bool {
        fv.cv > self.cv
    }

    #[inline]
    pub fn tv_exceeded(&self, fv: FeatureVector) -> bool {
        fv.tv > self.tv
    }

    /// Any single feature exceeds its threshold.
    pub fn confident_foreground(&self, fv: FeatureVector) -> bool {
        self.bv_exceeded(fv) || self.cv_exceeded(fv) || self.tv_exceeded(fv)
    }
}

pub fn quantize_bv(bv: f64) -> i32 {
    (bv.round() as i32).clamp(BV_RANGE.0, BV_RANGE.1)
}

pub fn quantize_cv(cv: f64) -> i32 {
    (cv.round() as i32).clamp(CV_RANGE.0, CV_RANGE.1)
}

pub fn quantize_tv(tv: u8) -> i32 {
    i32::from(tv).clamp(TV_RANGE.0, TV_RANGE.1)
}

/// Counts over a contiguous integer support with a cached KDE table.
#[derive(Debug, Clone)]
pub struct Histogram {
    min: i32,
    counts: Vec<f64>,
    total: f64,
    params: KdeParams,
    table: OnceLock<Vec<f64>>,
}

impl PartialEq for Histogram {
    fn eq(&self, other: &Self) -> bool {
        self.min == other.min && self.counts == other.counts && self.params == other.params
    }
}

impl Histogram {
    pub fn new(range: (i32, i32), params: KdeParams) -> Self {
        let len = (range.1 - range.0 + 1) as usize;
        Histogram {
            min: range.0,
            counts: vec![0.0; len],
            total: 0.0,
            params,
            table: OnceLock::new(),
        }
    }

    pub fn support(&self) -> std::ops::RangeInclusive<i32> {
        self.min..=self.min + self.counts.len() as i32 - 1
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn count(&self, value: i32) -> f64 {
        self.counts[self.bin(value)]
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    #[inline]
    fn bin(&self, value: i32) -> usize {
        (value - self.min).clamp(0, self.counts.len() as i32 - 1) as usize
    }

    /// Adds one observation, clamped into the support.
    pub fn add(&mut self, value: i32) {
        let b = self.bin(value);
        self.counts[b] += 1.0;
        self.total += 1.0;
        self.table = OnceLock::new();
    }

    /// Multiplies every count by `keep`.
    pub fn decay(&mut self, keep: f64) {
        for c in &mut self.counts {
            *c *= keep;
        }
        self.total *= keep;
        self.table = OnceLock::new();
    }

    /// True once enough samples have been seen to trust the estimate.
    pub fn is_ready(&self) -> bool {
        self.total >= self.params.min_total && self.total > 0.0
    }

    /// Density at `value` (rounded and clamped into the support).
    ///
    /// Each count contributes a Gaussian kernel truncated at the configured
    /// radius and renormalized over the support, so the density sums to one.
    /// Histograms that are not ready answer with the uniform density.
    pub fn density(&self, value: f64) -> f64 {
        let v = (value.round() as i64).clamp(i64::from(self.min), i64::from(self.min) + self.counts.len() as i64 - 1);
        self.table()[(v - i64::from(self.min)) as usize]
    }

    /// Full density table over the support.
    pub fn table(&self) -> &[f64] {
        self.table.get_or_init(|| self.compute_table())
    }

    fn compute_table(&self) -> Vec<f64> {
        let len = self.counts.len();
        if !self.is_ready() {
            return vec![1.0 / len as f64; len];
        }
        let h = self.params.bandwidth;
        let radius = (self.params.truncation * h).floor().max(0.0) as i64;
        let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|d| {
                let z = d as f64 / h;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        let mut out = vec![0.0; len];
        for (v, &count) in self.counts.iter().enumerate() {
            if count == 0.0 {
                continue;
            }
            let lo = (v as i64 - radius).max(0) as usize;
            let hi = (v as i64 + radius).min(len as i64 - 1) as usize;
            let k = |u: usize| kernel[(u as i64 - v as i64 + radius) as usize];
            let z: f64 = (lo..=hi).map(k).sum();
            let w = count / (z * self.total);
            for (u, slot) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *slot += w * k(u);
            }
        }
        out
    }
}

const BV: usize = 0;
const CV: usize = 1;
const TV: usize = 2;

/// The six class-conditional histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassConditionalModel {
    foreground: [Histogram; 3],
    background: [Histogram; 3],
    thresholds: Thresholds,
}

impl ClassConditionalModel {
    pub fn new(thresholds: Thresholds, kde: KdeParams) -> Self {
        let set = || {
            [
                Histogram::new(BV_RANGE, kde),
                Histogram::new(CV_RANGE, kde),
                Histogram::new(TV_RANGE, kde),
            ]
        };
        ClassConditionalModel {
            foreground: set(),
            background: set(),
            thresholds,
        }
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    /// Histograms in the order BV, CV, TV.
    pub fn foreground(&self) -> &[Histogram; 3] {
        &self.foreground
    }

    pub fn background(&self) -> &[Histogram; 3] {
        &self.background
    }

    /// All six histograms hold enough samples for the Bayes path.
    pub fn is_ready(&self) -> bool {
        self.foreground.iter().chain(&self.background).all(Histogram::is_ready)
    }

    pub fn decay(&mut self, keep: f64) {
        for h in self.foreground.iter_mut().chain(&mut self.background) {
            h.decay(keep);
        }
    }

    /// Adds each pixel's features to the foreground histograms whose gate it
    /// passes: BV when CV or TV exceeds its threshold, CV when BV or TV does,
    /// TV when BV or CV does.
    pub fn accumulate_foreground(&mut self, fm: &FeatureMaps) {
        let t = self.thresholds;
        for &fv in fm.as_slice() {
            let (b, c, x) = (t.bv_exceeded(fv), t.cv_exceeded(fv), t.tv_exceeded(fv));
            if c || x {
                self.foreground[BV].add(quantize_bv(fv.bv));
            }
            if b || x {
                self.foreground[CV].add(quantize_cv(fv.cv));
            }
            if b || c {
                self.foreground[TV].add(quantize_tv(fv.tv));
            }
        }
    }

    /// Adds the features of every pixel where `mask` is true to the background histograms.
    pub fn accumulate_background(&mut self, fm: &FeatureMaps, mask: &[bool]) {
        for (&fv, _) in fm.as_slice().iter().zip(mask).filter(|(_, &m)| m) {
            self.background[BV].add(quantize_bv(fv.bv));
            self.background[CV].add(quantize_cv(fv.cv));
            self.background[TV].add(quantize_tv(fv.tv));
        }
    }

    /// `(ln p(f|FG), ln p(f|BG))` under the naive Bayes factorization.
    pub fn log_likelihoods(&self, fv: FeatureVector) -> (f64, f64) {
        let values = [fv.bv, fv.cv, f64::from(fv.tv)];
        let ll = |hs: &[Histogram; 3]| -> f64 {
            hs.iter()
                .zip(values)
                .map(|(h, v)| h.density(v).max(DENSITY_FLOOR).ln())
                .sum()
        };
        (ll(&self.foreground), ll(&self.background))
    }

    pub fn posterior(&self, fv: FeatureVector, prior_fg: f64) -> f64 {
        let (fg, bg) = self.log_likelihoods(fv);
        posterior_from_log_likelihoods(fg, bg, prior_fg)
    }

    /// Confident-foreground pixels: any feature above its threshold.
    pub fn confident_foreground(&self, fm: &FeatureMaps) -> Vec<bool> {
        fm.as_slice()
            .iter()
            .map(|&fv| self.thresholds.confident_foreground(fv))
            .collect()
    }

    /// Complement of the confident-foreground mask dilated by a 3x3 square.
    pub fn plausible_background_mask(&self, fm: &FeatureMaps) -> Vec<bool> {
        let (w, h) = (fm.width(), fm.height());
        let confident = self.confident_foreground(fm);
        let mut background = vec![true; w * h];
        for y in 0..h {
            for x in 0..w {
                if !confident[y * w + x] {
                    continue;
                }
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        background[ny * w + nx] = false;
                    }
                }
            }
        }
        background
    }
}

/// Foreground posterior from log-likelihoods, clamped to `[1e-6, 1 - 1e-6]`.
pub fn posterior_from_log_likelihoods(log_fg: f64, log_bg: f64, prior_fg: f64) -> f64 {
    let logit = (log_fg + prior_fg.ln()) - (log_bg + (1.0 - prior_fg).ln());
    let p = if logit >= 0.0 {
        1.0 / (1.0 + (-logit).exp())
    } else {
        let e = logit.exp();
        e / (1.0 + e)
    };
    if p.is_nan() {
        return prior_fg.clamp(POSTERIOR_MIN, POSTERIOR_MAX);
    }
    p.clamp(POSTERIOR_MIN, POSTERIOR_MAX)
}

/// Same as [`posterior_from_log_likelihoods`] with plain likelihoods.
pub fn posterior(l_fg: f64, l_bg: f64, prior_fg: f64) -> f64 {
    let ln = |l: f64| l.max(f64::MIN_POSITIVE).ln();
    posterior_from_log_likelihoods(ln(l_fg), ln(l_bg), prior_fg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    pub initial: f64,
    pub learning_rate: f64,
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for PriorParams {
    fn default() -> Self {
        PriorParams {
            initial: 0.1,
            learning_rate: 0.001,
            floor: 0.01,
            ceiling: 0.99,
        }
    }
}

/// Per-pixel foreground prior, learned from past labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    params: PriorParams,
}

impl PriorMap {
    pub fn new(width: usize, height: usize, params: PriorParams) -> Self {
        let init = params.initial.clamp(params.floor, params.ceiling);
        PriorMap {
            width,
            height,
            values: vec![init; width * height],
            params,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.values[i] = value.clamp(self.params.floor, self.params.ceiling);
    }

    /// Exponential moving average toward the latest labels, clamped.
    pub fn update(&mut self, labels: &LabelMask) -> Result<()> {
        if labels.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "{} labels for a prior map of {} pixels",
                labels.len(),
                self.values.len()
            )));
        }
        let PriorParams {
            learning_rate: rho,
            floor,
            ceiling,
            ..
        } = self.params;
        for (p, &l) in self.values.iter_mut().zip(labels.as_slice()) {
            *p = ((1.0 - rho) * *p + rho * f64::from(l)).clamp(floor, ceiling);
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"CDLM";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes the six histograms and the prior map.
///
/// Layout, all little-endian: magic `CDLM`, `u32` version, six histograms
/// (FG BV, CV, TV then BG BV, CV, TV) each as `i32` support minimum, `u32`
/// bin count and `f64` counts, then the prior map as `u32` width, `u32`
/// height and `f64` values.
pub fn write_checkpoint(mut out: impl Write, model: &ClassConditionalModel, priors: &PriorMap) -> std::io::Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for h in model.foreground.iter().chain(&model.background) {
        out.write_all(&h.min.to_le_bytes())?;
        out.write_all(&(h.counts.len() as u32).to_le_bytes())?;
        for c in &h.counts {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    out.write_all(&(priors.width as u32).to_le_bytes())?;
    out.write_all(&(priors.height as u32).to_le_bytes())?;
    for v in &priors.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated: {e}")))?;
    Ok(buf)
}

/// Reads a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(
    mut input: impl Read,
    thresholds: Thresholds,
    kde: KdeParams,
    prior: PriorParams,
) -> Result<(ClassConditionalModel, PriorMap)> {
    if &read_array::<4>(&mut input)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut model = ClassConditionalModel::new(thresholds, kde);
    for h in model.foreground.iter_mut().chain(&mut model.background) {
        let min = i32::from_le_bytes(read_array(&mut input)?);
        let len = u32::from_le_bytes(read_array(&mut input)?) as usize;
        if min != h.min || len != h.counts.len() {
            return Err(Error::Checkpoint(format!(
                "histogram support {min}+{len} does not match {}+{}",
                h.min,
                h.counts.len()
            )));
        }
        for c in &mut h.counts {
            *c = f64::from_le_bytes(read_array(&mut input)?);
            if !(c.is_finite() && *c >= 0.0) {
                return Err(Error::Checkpoint(format!("invalid count {c}")));
            }
        }
        h.total = h.counts.iter().sum();
    }
    let width = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let height = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let mut priors = PriorMap::new(width, height, prior);
    for i in 0..width * height {
        let v = f64::from_le_bytes(read_array(&mut input)?);
        priors.set(i, v);
    }
    Ok((model, priors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kde(min_total: f64) -> KdeParams {
        KdeParams {
            min_total,
            ..KdeParams::default()
        }
    }

    fn maps(values: &[FeatureVector], w: usize, h: usize) -> FeatureMaps {
        FeatureMaps::from_vec(w, h, values.to_vec())
    }

    #[test]
    fn foreground_gates() {
        let mut m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        m.accumulate_foreground(&maps(&[FeatureVector::new(60.0, 5.0, 2)], 1, 1));
        assert_eq!(m.foreground[BV].total(), 0.0);
        assert_eq!(m.foreground[CV].count(5), 1.0);
        assert_eq!(m.foreground[TV].count(2), 1.0);

        let mut m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        m.accumulate_foreground(&maps(&[FeatureVector::new(0.0, 0.0, 0)], 1, 1));
        assert!(m.foreground.iter().all(|h| h.total() == 0.0));

        let mut m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        m.accumulate_foreground(&maps(&[FeatureVector::new(10.0, 25.0, 2)], 1, 1));
        assert_eq!(m.foreground[BV].count(10), 1.0);
        assert_eq!(m.foreground[CV].total(), 0.0);
        assert_eq!(m.foreground[TV].count(2), 1.0);
    }

    #[test]
    fn plausible_background_dilates_confident_pixels() {
        let m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        let (w, h) = (20, 15);
        let zero = vec![FeatureVector::default(); w * h];
        assert!(m.plausible_background_mask(&maps(&zero, w, h)).iter().all(|&b| b));

        let mut one = zero.clone();
        one[10 * w + 10].cv = 100.0;
        let mask = m.plausible_background_mask(&maps(&one, w, h));
        for y in 0..h {
            for x in 0..w {
                let excluded = (9..=11).contains(&x) && (9..=11).contains(&y);
                assert_eq!(mask[y * w + x], !excluded, "({x}, {y})");
            }
        }

        let mut corner = zero;
        corner[0].tv = 20;
        let mask = m.plausible_background_mask(&maps(&corner, w, h));
        assert_eq!(mask.iter().filter(|&&b| !b).count(), 4);
        assert!(!mask[0] && !mask[1] && !mask[w] && !mask[w + 1]);
    }

    #[test]
    fn background_accumulation_counts() {
        let (w, h) = (6, 4);
        let fm = maps(&vec![FeatureVector::new(1.0, 2.0, 3); w * h], w, h);
        let mut m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        m.accumulate_background(&fm, &vec![false; w * h]);
        assert!(m.background.iter().all(|h| h.total() == 0.0));
        m.accumulate_background(&fm, &vec![true; w * h]);
        assert!(m.background.iter().all(|hist| hist.total() == (w * h) as f64));
        let mut mask = vec![true; w * h];
        for i in [0, 5, 17] {
            mask[i] = false;
        }
        m.accumulate_background(&fm, &mask);
        assert!(m.background.iter().all(|hist| hist.total() == (2 * w * h - 3) as f64));
    }

    #[test]
    fn single_count_density() {
        let mut h = Histogram::new(TV_RANGE, kde(1.0));
        h.add(10);
        let phi0 = 1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
        let z: f64 = (-8..=8)
            .map(|d: i32| phi0 * (-0.5 * (f64::from(d) / 2.0).powi(2)).exp())
            .sum();
        assert!((h.density(10.0) - phi0 / z).abs() < 1e-15);
        assert!((h.density(10.0) - 0.1995).abs() < 1e-4);
        assert_eq!(h.density(8.0), h.density(12.0));
        assert_eq!(h.density(1.0), 0.0);
    }

    #[test]
    fn empty_histogram_is_uniform() {
        let h = Histogram::new(CV_RANGE, KdeParams::default());
        assert_eq!(h.density(17.0), 1.0 / 444.0);
        let h = Histogram::new(BV_RANGE, kde(1.0));
        assert_eq!(h.density(0.0), 1.0 / 887.0);
    }

    #[test]
    fn posterior_examples() {
        assert!((posterior(0.3, 0.3, 0.1) - 0.1).abs() < 1e-12);
        assert!((posterior(0.2, 0.05, 0.1) - 0.02 / 0.065).abs() < 1e-12);
        assert_eq!(posterior(0.5, 0.0, 0.5), POSTERIOR_MAX);
        assert_eq!(posterior(0.0, 0.5, 0.5), POSTERIOR_MIN);
    }

    #[test]
    fn prior_updates_and_clamps() {
        let params = PriorParams::default();
        let mut p = PriorMap::new(3, 1, params);
        p.set(1, 0.01);
        p.set(2, 0.99);
        let labels = LabelMask::from_vec(3, 1, vec![1, 0, 1]).unwrap();
        p.update(&labels).unwrap();
        assert!((p.get(0) - 0.1009).abs() < 1e-15);
        assert_eq!(p.get(1), 0.01);
        assert_eq!(p.get(2), 0.99);
    }

    #[test]
    fn prior_converges_monotonically() {
        let mut p = PriorMap::new(1, 1, PriorParams::default());
        let zero = LabelMask::new(1, 1);
        let mut last = p.get(0);
        for _ in 0..10_000 {
            p.update(&zero).unwrap();
            assert!(p.get(0) <= last);
            last = p.get(0);
        }
        assert_eq!(last, 0.01);
        let one = LabelMask::from_vec(1, 1, vec![1]).unwrap();
        for _ in 0..10_000 {
            p.update(&one).unwrap();
            assert!(p.get(0) >= last);
            last = p.get(0);
        }
        assert_eq!(last, 0.99);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = ClassConditionalModel::new(Thresholds::default(), kde(1.0));
        let fm = maps(
            &[
                FeatureVector::new(-70.0, 3.0, 12),
                FeatureVector::new(2.0, 40.0, 1),
                FeatureVector::new(0.4, 0.2, 0),
            ],
            3,
            1,
        );
        m.accumulate_foreground(&fm);
        let bg = m.plausible_background_mask(&fm);
        m.accumulate_background(&fm, &bg);
        let mut priors = PriorMap::new(3, 1, PriorParams::default());
        priors.set(2, 0.5);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &m, &priors).unwrap();
        let (m2, p2) = read_checkpoint(&buf[..], Thresholds::default(), kde(1.0), PriorParams::default()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(priors, p2);
        assert!(read_checkpoint(&buf[..10], Thresholds::default(), kde(1.0), PriorParams::default()).is_err());
    }
}
