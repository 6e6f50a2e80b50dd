//! Per-frame orchestration, configuration and run-directory helpers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::background::{BackgroundModel, Disparity, ModelParams, ReinitMonitor, ReinitParams};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_directories, report, BenchmarkReport, Confusion, MetricsReport};
use crate::features::{extract, FeatureMaps, UpdateBounds};
use crate::learning::{
    posterior_from_log_likelihoods, read_checkpoint, write_checkpoint, ClassConditionalModel, KdeParams, PriorMap,
    PriorParams, Thresholds,
};
use crate::mask::LabelMask;
use crate::mrf::{loopy_bp, post_process_with, MrfParams, TwoLayerGraph};
use crate::superpixels::{slic_segment, SlicParams, SuperpixelMap};
use crate::video_io::{mask_file_name, temporal_median, write_mask, Frame, FrameSequence, TemporalRoi};

/// How frames past the warm-up are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelingMode {
    /// Posterior above one half, no MRF and no post-processing.
    Posterior,
    /// Pixel-layer MRF only.
    PixelMrf,
    /// Two-layer MRF without post-processing.
    TwoLayerMrf,
    /// Two-layer MRF followed by post-processing.
    #[default]
    Full,
}

impl LabelingMode {
    pub const ALL: [LabelingMode; 4] = [
        LabelingMode::Posterior,
        LabelingMode::PixelMrf,
        LabelingMode::TwoLayerMrf,
        LabelingMode::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LabelingMode::Posterior => "posterior",
            LabelingMode::PixelMrf => "pixel-mrf",
            LabelingMode::TwoLayerMrf => "two-layer-mrf",
            LabelingMode::Full => "full",
        }
    }

    fn post_processes(self) -> bool {
        self == LabelingMode::Full
    }
}

/// Every tunable of the detector, as a flat key/value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub labeling: LabelingMode,

    pub samples: usize,
    pub closest: usize,
    pub ltp_tau: f64,
    pub ltp_nu: u32,
    /// Frames whose temporal median seeds the model.
    pub median_frames: usize,
    pub fast_update_frames: u64,
    pub subsampling_factor: u32,

    pub update_bv: f64,
    pub update_cv: f64,
    pub update_tv: u8,

    pub threshold_bv: f64,
    pub threshold_cv: f64,
    pub threshold_tv: u8,
    pub kde_bandwidth: f64,
    pub kde_truncation: f64,
    pub kde_min_total: f64,
    /// Per-frame histogram retention; 1 keeps every count forever.
    pub histogram_retention: f64,
    pub warmup_frames: u64,

    pub prior_initial: f64,
    pub prior_rate: f64,
    pub prior_floor: f64,
    pub prior_ceiling: f64,

    pub phi: f64,
    pub sigma: f64,
    pub xi: f64,
    pub psi: f64,
    pub bp_tolerance: f64,
    pub bp_max_iterations: usize,
    pub bp_damping: f64,

    pub slic_region_size: usize,
    pub slic_compactness: f64,
    pub slic_iterations: usize,

    pub area_small: usize,
    pub area_large: usize,
    /// Frames with at least this many pixels use `area_large`.
    pub area_pixel_limit: usize,

    pub reinit_enabled: bool,
    pub reinit_fast_frames: u64,
    pub reinit_downscale: usize,
    pub reinit_window: usize,
    pub reinit_stride: usize,
    pub reinit_interval: u64,
    pub reinit_significance: f64,
    pub reinit_grid: usize,
    pub reinit_mean_distance: f64,
    pub reinit_changed_fraction: f64,
    pub reinit_entropy: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let model = ModelParams::default();
        let bounds = UpdateBounds::default();
        let thr = Thresholds::default();
        let kde = KdeParams::default();
        let prior = PriorParams::default();
        let mrf = MrfParams::default();
        let slic = SlicParams::default();
        let re = ReinitParams::default();
        PipelineConfig {
            seed: 0,
            labeling: LabelingMode::Full,
            samples: model.samples,
            closest: 3,
            ltp_tau: model.ltp_tau,
            ltp_nu: model.ltp_nu,
            median_frames: 100,
            fast_update_frames: model.fast_update_frames,
            subsampling_factor: model.subsampling_factor,
            update_bv: bounds.bv,
            update_cv: bounds.cv,
            update_tv: bounds.tv,
            threshold_bv: thr.bv,
            threshold_cv: thr.cv,
            threshold_tv: thr.tv,
            kde_bandwidth: kde.bandwidth,
            kde_truncation: kde.truncation,
            kde_min_total: kde.min_total,
            histogram_retention: 1.0,
            warmup_frames: 100,
            prior_initial: prior.initial,
            prior_rate: prior.learning_rate,
            prior_floor: prior.floor,
            prior_ceiling: prior.ceiling,
            phi: mrf.phi,
            sigma: mrf.sigma,
            xi: mrf.xi,
            psi: mrf.psi,
            bp_tolerance: mrf.tolerance,
            bp_max_iterations: mrf.max_iterations,
            bp_damping: mrf.damping,
            slic_region_size: slic.region_size,
            slic_compactness: slic.compactness,
            slic_iterations: slic.iterations,
            area_small: 25,
            area_large: 50,
            area_pixel_limit: 2 * 320 * 240,
            reinit_enabled: re.enabled,
            reinit_fast_frames: model.reinit_fast_frames,
            reinit_downscale: re.downscale,
            reinit_window: re.window_frames,
            reinit_stride: re.sample_stride,
            reinit_interval: re.check_interval,
            reinit_significance: re.significance,
            reinit_grid: re.grid,
            reinit_mean_distance: re.mean_distance_threshold,
            reinit_changed_fraction: re.changed_fraction_threshold,
            reinit_entropy: re.entropy_threshold,
        }
    }
}

fn require(ok: bool, key: &str, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} {rule}")))
    }
}

impl PipelineConfig {
    /// Parses a TOML table; unknown keys are rejected and missing keys take
    /// their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let pos = "must be positive";
        let fin = |v: f64| v.is_finite();
        require(self.samples >= 3, "samples", "must be at least 3")?;
        require(self.closest >= 1 && self.closest <= self.samples, "closest", "must be in 1..=samples")?;
        require(fin(self.ltp_tau) && self.ltp_tau >= 0.0, "ltp_tau", "must be non-negative")?;
        require(self.median_frames >= 1, "median_frames", pos)?;
        require(self.subsampling_factor >= 1, "subsampling_factor", pos)?;
        require(fin(self.update_bv) && self.update_bv > 0.0, "update_bv", pos)?;
        require(fin(self.update_cv) && self.update_cv > 0.0, "update_cv", pos)?;
        require(self.update_tv > 0, "update_tv", pos)?;
        require(fin(self.threshold_bv) && self.threshold_bv > 0.0, "threshold_bv", pos)?;
        require(fin(self.threshold_cv) && self.threshold_cv > 0.0, "threshold_cv", pos)?;
        require(self.threshold_tv > 0, "threshold_tv", pos)?;
        require(fin(self.kde_bandwidth) && self.kde_bandwidth > 0.0, "kde_bandwidth", pos)?;
        require(fin(self.kde_truncation) && self.kde_truncation > 0.0, "kde_truncation", pos)?;
        require(fin(self.kde_min_total) && self.kde_min_total >= 0.0, "kde_min_total", "must be non-negative")?;
        require(
            self.histogram_retention > 0.0 && self.histogram_retention <= 1.0,
            "histogram_retention",
            "must be in (0, 1]",
        )?;
        require(
            self.prior_floor > 0.0 && self.prior_floor < self.prior_ceiling && self.prior_ceiling < 1.0,
            "prior_floor/prior_ceiling",
            "must satisfy 0 < floor < ceiling < 1",
        )?;
        require(
            (self.prior_floor..=self.prior_ceiling).contains(&self.prior_initial),
            "prior_initial",
            "must lie between prior_floor and prior_ceiling",
        )?;
        require(self.prior_rate > 0.0 && self.prior_rate < 1.0, "prior_rate", "must be in (0, 1)")?;
        require(fin(self.phi) && self.phi >= 0.0, "phi", "must be non-negative")?;
        require(fin(self.sigma) && self.sigma > 0.0, "sigma", pos)?;
        require(fin(self.xi) && self.xi >= 0.0, "xi", "must be non-negative")?;
        require(fin(self.psi) && self.psi >= 0.0, "psi", "must be non-negative")?;
        require(self.bp_tolerance > 0.0, "bp_tolerance", pos)?;
        require(self.bp_max_iterations >= 1, "bp_max_iterations", pos)?;
        require((0.0..1.0).contains(&self.bp_damping), "bp_damping", "must be in [0, 1)")?;
        require(self.slic_region_size >= 1, "slic_region_size", pos)?;
        require(fin(self.slic_compactness) && self.slic_compactness > 0.0, "slic_compactness", pos)?;
        require(self.slic_iterations >= 1, "slic_iterations", pos)?;
        require(self.area_pixel_limit >= 1, "area_pixel_limit", pos)?;
        require(self.reinit_downscale >= 1, "reinit_downscale", pos)?;
        require(self.reinit_stride >= 1, "reinit_stride", pos)?;
        require(self.reinit_window >= self.reinit_stride, "reinit_window", "must be at least reinit_stride")?;
        require(self.reinit_interval >= 1, "reinit_interval", pos)?;
        require(self.reinit_grid >= 1, "reinit_grid", pos)?;
        require(self.reinit_significance >= 0.0, "reinit_significance", "must be non-negative")?;
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            samples: self.samples,
            ltp_tau: self.ltp_tau,
            ltp_nu: self.ltp_nu,
            fast_update_frames: self.fast_update_frames,
            subsampling_factor: self.subsampling_factor,
            reinit_fast_frames: self.reinit_fast_frames,
        }
    }

    pub fn update_bounds(&self) -> UpdateBounds {
        UpdateBounds {
            bv: self.update_bv,
            cv: self.update_cv,
            tv: self.update_tv,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            bv: self.threshold_bv,
            cv: self.threshold_cv,
            tv: self.threshold_tv,
        }
    }

    pub fn kde_params(&self) -> KdeParams {
        KdeParams {
            bandwidth: self.kde_bandwidth,
            truncation: self.kde_truncation,
            min_total: self.kde_min_total,
        }
    }

    pub fn prior_params(&self) -> PriorParams {
        PriorParams {
            initial: self.prior_initial,
            learning_rate: self.prior_rate,
            floor: self.prior_floor,
            ceiling: self.prior_ceiling,
        }
    }

    pub fn mrf_params(&self) -> MrfParams {
        MrfParams {
            phi: self.phi,
            sigma: self.sigma,
            xi: self.xi,
            psi: self.psi,
            max_iterations: self.bp_max_iterations,
            tolerance: self.bp_tolerance,
            damping: self.bp_damping,
        }
    }

    pub fn slic_params(&self) -> SlicParams {
        SlicParams {
            region_size: self.slic_region_size,
            compactness: self.slic_compactness,
            iterations: self.slic_iterations,
        }
    }

    pub fn reinit_params(&self) -> ReinitParams {
        ReinitParams {
            enabled: self.reinit_enabled,
            downscale: self.reinit_downscale,
            window_frames: self.reinit_window,
            sample_stride: self.reinit_stride,
            check_interval: self.reinit_interval,
            significance: self.reinit_significance,
            grid: self.reinit_grid,
            mean_distance_threshold: self.reinit_mean_distance,
            changed_fraction_threshold: self.reinit_changed_fraction,
            entropy_threshold: self.reinit_entropy,
        }
    }

    pub fn area_threshold(&self, width: usize, height: usize) -> usize {
        if width * height < self.area_pixel_limit {
            self.area_small
        } else {
            self.area_large
        }
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub features: f64,
    pub learning: f64,
    pub superpixels: f64,
    pub mrf: f64,
    pub postprocess: f64,
    pub update: f64,
    pub reinit: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.features + self.learning + self.superpixels + self.mrf + self.postprocess + self.update + self.reinit
    }
}

/// One newline-delimited diagnostics record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub frame: u32,
    pub warmup: bool,
    pub timings_ms: StageTimings,
    pub bp_iterations: Option<usize>,
    pub bp_converged: Option<bool>,
    pub superpixels: Option<usize>,
    pub reinit_checked: bool,
    pub reinit: bool,
    /// Mean distance, changed fraction and spatial entropy of the last check.
    pub disparity: Option<[f64; 3]>,
    pub foreground_pixels: usize,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Output of [`Pipeline::process_frame`].
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub mask: LabelMask,
    pub diagnostics: FrameDiagnostics,
}

/// The full detector state for one video.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    model: BackgroundModel,
    learner: ClassConditionalModel,
    priors: PriorMap,
    monitor: ReinitMonitor,
    frames_processed: u64,
    last_posteriors: Option<Vec<f64>>,
}

impl Pipeline {
    /// Builds the background model from the first frame and the temporal
    /// median image.
    pub fn new(config: PipelineConfig, first: &Frame, median: &Frame) -> Result<Self> {
        config.validate()?;
        let model = BackgroundModel::init(first, median, config.model_params(), config.seed)?;
        Ok(Pipeline {
            learner: ClassConditionalModel::new(config.thresholds(), config.kde_params()),
            priors: PriorMap::new(first.width(), first.height(), config.prior_params()),
            monitor: ReinitMonitor::new(config.reinit_params()),
            model,
            config,
            frames_processed: 0,
            last_posteriors: None,
        })
    }

    /// Like [`Pipeline::new`], with the median taken over the leading
    /// `median_frames` of `frames`.
    pub fn from_frames(config: PipelineConfig, frames: &[Frame]) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Shape("no frames".into()))?;
        let median = temporal_median(&frames[..frames.len().min(config.median_frames)])?;
        Self::new(config, first, &median)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model(&self) -> &BackgroundModel {
        &self.model
    }

    pub fn learner(&self) -> &ClassConditionalModel {
        &self.learner
    }

    pub fn priors(&self) -> &PriorMap {
        &self.priors
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames_processed
    }

    /// Posteriors of the last frame labeled by the Bayes path.
    pub fn last_posteriors(&self) -> Option<&[f64]> {
        self.last_posteriors.as_deref()
    }

    /// True when the next frame will be labeled by the confident-foreground rule.
    pub fn in_warmup(&self) -> bool {
        self.frames_processed < self.config.warmup_frames || !self.learner.is_ready()
    }

    /// Processes one frame and returns its final label mask.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<FrameResult> {
        let (w, h) = (self.model.width(), self.model.height());
        if (frame.width(), frame.height()) != (w, h) {
            return Err(Error::Shape(format!(
                "frame {} is {}x{}, model is {w}x{h}",
                frame.index(),
                frame.width(),
                frame.height()
            )));
        }
        let cfg = &self.config;
        let mut t = StageTimings::default();
        let mut diag = FrameDiagnostics {
            frame: frame.index(),
            warmup: self.in_warmup(),
            timings_ms: t,
            bp_iterations: None,
            bp_converged: None,
            superpixels: None,
            reinit_checked: false,
            reinit: false,
            disparity: None,
            foreground_pixels: 0,
        };
        self.model.begin_frame();

        let clock = Instant::now();
        let codes = self.model.ltp().code_image(frame.gray(), w, h);
        let fm = extract(frame, &codes, &self.model, cfg.closest);
        t.features = ms(clock.elapsed());

        // Densities of this frame are queried before its features are learned.
        let clock = Instant::now();
        let raw = if diag.warmup {
            self.last_posteriors = None;
            let confident = self.learner.confident_foreground(&fm);
            LabelMask::from_vec(w, h, confident.iter().map(|&c| u8::from(c)).collect())?
        } else {
            let post = self.posteriors(&fm);
            t.learning = ms(clock.elapsed());
            let labels = self.label_bayes(frame, &post, &mut t, &mut diag)?;
            self.last_posteriors = Some(post);
            labels
        };
        let clock = Instant::now();
        if cfg.histogram_retention < 1.0 {
            self.learner.decay(cfg.histogram_retention);
        }
        self.learner.accumulate_foreground(&fm);
        let plausible = self.learner.plausible_background_mask(&fm);
        self.learner.accumulate_background(&fm, &plausible);
        t.learning += ms(clock.elapsed());

        let clock = Instant::now();
        let mask = if diag.warmup || cfg.labeling.post_processes() {
            post_process_with(&raw, cfg.area_threshold(w, h))
        } else {
            raw
        };
        t.postprocess = ms(clock.elapsed());

        let clock = Instant::now();
        self.priors.update(&mask)?;
        let bounds = cfg.update_bounds();
        let candidates: Vec<bool> = fm
            .as_slice()
            .iter()
            .zip(mask.as_slice())
            .map(|(&fv, &l)| bounds.admits(fv) || l == 0)
            .collect();
        self.model.update_frame(frame, &codes, &candidates);
        t.update = ms(clock.elapsed());

        let clock = Instant::now();
        if let Some(check) = self.monitor.check_reinit(&self.model, frame) {
            diag.reinit_checked = true;
            diag.disparity = Some(disparity_triple(&check.disparity));
            if check.triggered {
                self.model.reinit(frame, &codes);
                diag.reinit = true;
            }
        }
        t.reinit = ms(clock.elapsed());

        self.frames_processed += 1;
        diag.timings_ms = t;
        diag.foreground_pixels = mask.count_foreground();
        Ok(FrameResult {
            mask,
            diagnostics: diag,
        })
    }

    fn posteriors(&self, fm: &FeatureMaps) -> Vec<f64> {
        use rayon::prelude::*;
        fm.as_slice()
            .par_iter()
            .zip(self.priors.values().par_iter())
            .map(|(&fv, &prior)| {
                let (fg, bg) = self.learner.log_likelihoods(fv);
                posterior_from_log_likelihoods(fg, bg, prior)
            })
            .collect()
    }

    fn label_bayes(
        &self,
        frame: &Frame,
        post: &[f64],
        t: &mut StageTimings,
        diag: &mut FrameDiagnostics,
    ) -> Result<LabelMask> {
        let (w, h) = (frame.width(), frame.height());
        let cfg = &self.config;
        if cfg.labeling == LabelingMode::Posterior {
            return LabelMask::from_vec(w, h, post.iter().map(|&p| u8::from(p > 0.5)).collect());
        }
        let mut params = cfg.mrf_params();
        let two_layer = cfg.labeling != LabelingMode::PixelMrf && (params.psi > 0.0 || params.xi > 0.0);
        if cfg.labeling == LabelingMode::PixelMrf {
            params.psi = 0.0;
            params.xi = 0.0;
        }
        let clock = Instant::now();
        let spmap = if two_layer {
            slic_segment(frame, &cfg.slic_params())
        } else {
            SuperpixelMap::single(w, h)
        };
        t.superpixels = ms(clock.elapsed());
        diag.superpixels = Some(spmap.count());

        let clock = Instant::now();
        let graph = TwoLayerGraph::build(post, frame, &spmap, &params)?;
        let outcome = loopy_bp(&graph, &params);
        t.mrf = ms(clock.elapsed());
        diag.bp_iterations = Some(outcome.iterations);
        diag.bp_converged = Some(outcome.converged);
        LabelMask::from_vec(w, h, outcome.labeling.pixels)
    }

    /// Saves the learned histograms and the prior map.
    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        write_checkpoint(&mut out, &self.learner, &self.priors).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Restores histograms and priors saved by [`Pipeline::write_checkpoint`].
    pub fn load_checkpoint(&mut self, path: &Path) -> Result<()> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let (learner, priors) = read_checkpoint(
            std::io::BufReader::new(file),
            self.config.thresholds(),
            self.config.kde_params(),
            self.config.prior_params(),
        )?;
        if (priors.width(), priors.height()) != (self.model.width(), self.model.height()) {
            return Err(Error::Checkpoint(format!(
                "prior map is {}x{}, frames are {}x{}",
                priors.width(),
                priors.height(),
                self.model.width(),
                self.model.height()
            )));
        }
        self.learner = learner;
        self.priors = priors;
        Ok(())
    }
}

fn disparity_triple(d: &Disparity) -> [f64; 3] {
    [d.mean_distance, d.changed_fraction, d.spatial_entropy]
}

/// Options of a detection run over one frame directory.
#[derive(Debug, Clone, Default)]
pub struct DetectOptions {
    /// Write `diagnostics.jsonl` next to the masks.
    pub diagnostics: bool,
    /// Save the learned state to this file at the end.
    pub checkpoint: Option<PathBuf>,
    /// Run on a single worker thread.
    pub deterministic: bool,
}

/// Summary of a detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectSummary {
    pub frames: usize,
    pub reinits: usize,
    pub seconds: f64,
}

/// Runs the detector over `input` (a frame directory, or a video directory
/// with an `input` subdirectory) and writes one mask per frame to `output`.
pub fn detect_directory(input: &Path, output: &Path, config: &PipelineConfig, options: &DetectOptions) -> Result<DetectSummary> {
    if options.deterministic {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        return pool.install(|| run_detect(input, output, config, options));
    }
    run_detect(input, output, config, options)
}

fn run_detect(input: &Path, output: &Path, config: &PipelineConfig, options: &DetectOptions) -> Result<DetectSummary> {
    let start = Instant::now();
    let seq = FrameSequence::open(input)?;
    let head: Vec<Frame> = seq
        .frames()
        .take(config.median_frames)
        .collect::<Result<_>>()?;
    let mut pipeline = Pipeline::from_frames(config.clone(), &head)?;
    drop(head);

    fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let mut diag_out = if options.diagnostics {
        let path = output.join("diagnostics.jsonl");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Some((path, BufWriter::new(file)))
    } else {
        None
    };
    let mut summary = DetectSummary {
        frames: 0,
        reinits: 0,
        seconds: 0.0,
    };
    for frame in seq.frames() {
        let frame = frame?;
        let result = pipeline.process_frame(&frame)?;
        write_mask(&result.mask, &output.join(mask_file_name(frame.index())))?;
        if let Some((path, out)) = diag_out.as_mut() {
            let line = serde_json::to_string(&result.diagnostics).expect("diagnostics serialize");
            writeln!(out, "{line}").map_err(|e| Error::io(path.as_path(), e))?;
        }
        summary.frames += 1;
        summary.reinits += usize::from(result.diagnostics.reinit);
    }
    if let Some((path, mut out)) = diag_out {
        out.flush().map_err(|e| Error::io(&path, e))?;
    }
    if let Some(path) = &options.checkpoint {
        pipeline.write_checkpoint(path)?;
    }
    summary.seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

/// A video of a benchmark tree laid out as `category/video/{input,groundtruth}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkVideo {
    pub category: String,
    pub name: String,
    pub root: PathBuf,
}

impl BenchmarkVideo {
    pub fn input(&self) -> PathBuf {
        self.root.join("input")
    }

    pub fn groundtruth(&self) -> PathBuf {
        self.root.join("groundtruth")
    }

    /// The video's temporal ROI, if it ships one.
    pub fn roi(&self) -> Result<Option<TemporalRoi>> {
        let path = self.root.join("temporalROI.txt");
        if path.is_file() {
            TemporalRoi::load(&path).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.push((name.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Every video under `root` that has both `input` and `groundtruth` folders.
pub fn discover_videos(root: &Path) -> Result<Vec<BenchmarkVideo>> {
    if !root.is_dir() {
        return Err(Error::MissingDirectory(root.to_path_buf()));
    }
    let mut videos = Vec::new();
    for (category, cat_dir) in sorted_subdirs(root)? {
        for (name, dir) in sorted_subdirs(&cat_dir)? {
            if dir.join("input").is_dir() && dir.join("groundtruth").is_dir() {
                videos.push(BenchmarkVideo {
                    category: category.clone(),
                    name,
                    root: dir,
                });
            }
        }
    }
    Ok(videos)
}

/// Detects and evaluates one benchmark video; masks go to `output`.
pub fn run_video(video: &BenchmarkVideo, output: &Path, config: &PipelineConfig, options: &DetectOptions) -> Result<(Confusion, MetricsReport)> {
    detect_directory(&video.input(), output, config, options)?;
    let (conf, _) = evaluate_directories(output, &video.groundtruth(), video.roi()?)?;
    Ok((conf, report(&conf)))
}

/// Runs every video under `root` (optionally only the listed categories),
/// writing masks to `output/category/video`.
pub fn run_benchmark(
    root: &Path,
    output: &Path,
    categories: &[String],
    config: &PipelineConfig,
    options: &DetectOptions,
    mut progress: impl FnMut(&BenchmarkVideo, &MetricsReport),
) -> Result<BenchmarkReport> {
    let mut bench = BenchmarkReport::new();
    for video in discover_videos(root)? {
        if !categories.is_empty() && !categories.contains(&video.category) {
            continue;
        }
        let out = output.join(&video.category).join(&video.name);
        let (_, metrics) = run_video(&video, &out, config, options)?;
        progress(&video, &metrics);
        bench.add_video(&video.category, &video.name, metrics);
    }
    Ok(bench)
}
