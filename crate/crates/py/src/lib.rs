//! Python bindings. Frames cross the boundary as packed RGB `bytes`
//! (row-major, 3 bytes per pixel) and masks as one byte per pixel (0 or 1).

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use changedet::background::ltp;
use changedet::evaluation::Confusion;
use changedet::features::brightness_chroma as bc;
use changedet::learning::{self, Histogram, KdeParams};
use changedet::mrf::post_process_with;
use changedet::{Frame, GroundTruthMask, GtCode, LabelMask, Pipeline, PipelineConfig};

fn err(e: changedet::Error) -> PyErr {
    match e {
        changedet::Error::Io { .. } | changedet::Error::Image { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn frame_from_bytes(data: &[u8], width: usize, height: usize, index: u32) -> PyResult<Frame> {
    if data.len() != width * height * 3 {
        return Err(PyValueError::new_err(format!(
            "expected {} bytes for a {width}x{height} RGB frame, got {}",
            width * height * 3,
            data.len()
        )));
    }
    let rgb = data.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    Frame::from_rgb(width, height, rgb, index).map_err(err)
}

fn mask_from_bytes(data: &[u8], width: usize, height: usize) -> PyResult<LabelMask> {
    LabelMask::from_vec(width, height, data.iter().map(|&v| u8::from(v != 0)).collect()).map_err(err)
}

fn config_from(toml: Option<&str>, seed: Option<u64>) -> PyResult<PipelineConfig> {
    let mut cfg = match toml {
        Some(text) => PipelineConfig::from_toml(text).map_err(err)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Three-way LTP comparison: 0 similar, 1 brighter, 2 darker.
#[pyfunction]
#[pyo3(signature = (center, neighbor, tau=0.1, nu=5))]
fn ltp_compare(center: u8, neighbor: u8, tau: f64, nu: u32) -> PyResult<u8> {
    if !(0.0..=10.0).contains(&tau) {
        return Err(PyValueError::new_err("tau must lie in [0, 10]"));
    }
    Ok(ltp::ltp_compare(center, neighbor, (tau * 1000.0).round() as u32, nu))
}

/// Signed brightness and chroma distortion of `observed` against `expected`.
#[pyfunction]
fn brightness_chroma(observed: [u8; 3], expected: [u8; 3]) -> (f64, f64) {
    bc(observed, expected)
}

#[pyfunction]
fn posterior(likelihood_fg: f64, likelihood_bg: f64, prior_fg: f64) -> f64 {
    learning::posterior(likelihood_fg, likelihood_bg, prior_fg)
}

/// Truncated-Gaussian KDE over integer samples on `[low, high]`.
#[pyfunction]
#[pyo3(signature = (samples, low, high, bandwidth=2.0, truncation=4.0, min_total=1.0))]
fn kde_density(samples: Vec<i32>, low: i32, high: i32, bandwidth: f64, truncation: f64, min_total: f64) -> PyResult<Vec<f64>> {
    if low > high || bandwidth <= 0.0 {
        return Err(PyValueError::new_err("need low <= high and a positive bandwidth"));
    }
    let mut hist = Histogram::new(
        (low, high),
        KdeParams {
            bandwidth,
            truncation,
            min_total,
        },
    );
    for s in samples {
        hist.add(s);
    }
    Ok(hist.table().to_vec())
}

/// Removes foreground blobs and fills background holes smaller than `min_area`.
#[pyfunction]
fn post_process<'py>(py: Python<'py>, mask: &[u8], width: usize, height: usize, min_area: usize) -> PyResult<Bound<'py, PyBytes>> {
    let m = mask_from_bytes(mask, width, height)?;
    Ok(PyBytes::new(py, post_process_with(&m, min_area).as_slice()))
}

/// Scores binary masks against 8-bit ground truth (0, 50, 85, 170, 255).
/// Both arguments are sequences of per-frame byte strings.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, masks: Vec<Vec<u8>>, groundtruth: Vec<Vec<u8>>, width: usize, height: usize) -> PyResult<Bound<'py, PyDict>> {
    if masks.len() != groundtruth.len() {
        return Err(err(changedet::Error::CountMismatch {
            masks: masks.len(),
            groundtruth: groundtruth.len(),
            detail: String::new(),
        }));
    }
    let mut conf = Confusion::default();
    for (m, g) in masks.iter().zip(&groundtruth) {
        let mask = mask_from_bytes(m, width, height)?;
        let codes = g
            .iter()
            .map(|&v| GtCode::from_value(v).ok_or_else(|| PyValueError::new_err(format!("invalid ground-truth value {v}"))))
            .collect::<PyResult<Vec<_>>>()?;
        let gt = GroundTruthMask::new(width, height, codes).map_err(err)?;
        conf.accumulate(&mask, &gt).map_err(err)?;
    }
    let r = changedet::report(&conf);
    let d = PyDict::new(py);
    for (k, v) in [
        ("recall", r.recall),
        ("specificity", r.specificity),
        ("fpr", r.fpr),
        ("fnr", r.fnr),
        ("pwc", r.pwc),
        ("fmeasure", r.fmeasure),
        ("precision", r.precision),
        ("fpr_s", r.fpr_s),
    ] {
        d.set_item(k, v)?;
    }
    for (k, v) in [("tp", conf.tp), ("fp", conf.fp), ("fn", conf.fn_), ("tn", conf.tn)] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pyfunction]
fn default_config() -> String {
    PipelineConfig::default().to_toml()
}

/// Runs the detector over a frame directory and writes masks to `output`.
/// Returns the number of frames processed.
#[pyfunction]
#[pyo3(signature = (input, output, config=None, seed=None))]
fn detect_directory(py: Python<'_>, input: PathBuf, output: PathBuf, config: Option<&str>, seed: Option<u64>) -> PyResult<usize> {
    let cfg = config_from(config, seed)?;
    py.detach(|| changedet::detect_directory(&input, &output, &cfg, &Default::default()))
        .map(|s| s.frames)
        .map_err(err)
}

/// Stateful detector for one video.
#[pyclass(module = "changedet")]
struct Detector {
    inner: Pipeline,
    last_diagnostics: Option<String>,
}

#[pymethods]
impl Detector {
    /// `frames` bootstraps the background model: the first frame and the
    /// temporal median of up to `median_frames` frames.
    #[new]
    #[pyo3(signature = (frames, width, height, config=None, seed=None))]
    fn new(frames: Vec<Vec<u8>>, width: usize, height: usize, config: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let cfg = config_from(config, seed)?;
        let frames = frames
            .iter()
            .enumerate()
            .map(|(i, f)| frame_from_bytes(f, width, height, i as u32 + 1))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Detector {
            inner: Pipeline::from_frames(cfg, &frames).map_err(err)?,
            last_diagnostics: None,
        })
    }

    /// Labels one frame and returns its mask.
    fn process<'py>(&mut self, py: Python<'py>, frame: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
        let (w, h) = (self.inner.priors().width(), self.inner.priors().height());
        let index = self.inner.frames_processed() as u32 + 1;
        let f = frame_from_bytes(frame, w, h, index)?;
        let r = self.inner.process_frame(&f).map_err(err)?;
        self.last_diagnostics = serde_json::to_string(&r.diagnostics).ok();
        Ok(PyBytes::new(py, r.mask.as_slice()))
    }

    #[getter]
    fn frames_processed(&self) -> u64 {
        self.inner.frames_processed()
    }

    #[getter]
    fn in_warmup(&self) -> bool {
        self.inner.in_warmup()
    }

    /// Foreground posteriors of the last frame, or None during warm-up.
    #[getter]
    fn posteriors(&self) -> Option<Vec<f64>> {
        self.inner.last_posteriors().map(<[f64]>::to_vec)
    }

    #[getter]
    fn priors(&self) -> Vec<f64> {
        self.inner.priors().values().to_vec()
    }

    /// JSON diagnostics of the last processed frame.
    #[getter]
    fn diagnostics(&self) -> Option<String> {
        self.last_diagnostics.clone()
    }

    fn save_checkpoint(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_checkpoint(&path).map_err(err)
    }

    fn load_checkpoint(&mut self, path: PathBuf) -> PyResult<()> {
        self.inner.load_checkpoint(&path).map_err(err)
    }
}

#[pymodule]
#[pyo3(name = "changedet")]
fn changedet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ltp_compare, m)?)?;
    m.add_function(wrap_pyfunction!(brightness_chroma, m)?)?;
    m.add_function(wrap_pyfunction!(posterior, m)?)?;
    m.add_function(wrap_pyfunction!(kde_density, m)?)?;
    m.add_function(wrap_pyfunction!(post_process, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(detect_directory, m)?)?;
    m.add_class::<Detector>()?;
    Ok(())
}
