//! Python bindings: load and render words, talk to a scorer, pick a region
//! and run the morph with the interpreter lock released.

use std::sync::Arc;
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use glyphmorph_core::geometry::{load_glyph_outlines, Point, Script, ShapingMode, WordLayout};
use glyphmorph_core::optimizer::{self, RunConfig, TraceRecord, DEFAULT_GUIDANCE_SIZE, DEFAULT_ITERATIONS};
use glyphmorph_core::prompt::{ExpansionMode, PromptEngine};
use glyphmorph_core::raster::{render, RasterImage};
use glyphmorph_core::region::{self, RegionCandidate, RegionConfig, DEFAULT_LAMBDA, LIGHT_ITERATIONS};
use glyphmorph_core::scorer::{HttpScorer, MockScorer, Scorer as CoreScorer, DEFAULT_BACKOFF_BASE};
use glyphmorph_core::svg::{parse_svg, to_svg};

create_exception!(glyphmorph, GlyphMorphError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    GlyphMorphError::new_err(e.to_string())
}

fn shaping(name: &str) -> PyResult<ShapingMode> {
    match name {
        "simple" => Ok(ShapingMode::Simple),
        "ltr-ids" => Ok(ShapingMode::PreshapedIds(Script::LeftToRight)),
        "rtl-ids" => Ok(ShapingMode::PreshapedIds(Script::RightToLeft)),
        other => Err(PyValueError::new_err(format!(
            "unknown shaping {other:?}: expected simple, ltr-ids or rtl-ids"
        ))),
    }
}

fn parse_region(label: &str) -> PyResult<RegionCandidate> {
    label.parse::<RegionCandidate>().map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A laid-out word: one closed cubic outline per letter.
#[pyclass(module = "glyphmorph", skip_from_py_object)]
#[derive(Clone)]
pub struct Word {
    inner: WordLayout,
}

#[pymethods]
impl Word {
    /// Lay out `text` with the glyphs of the font at `font`.
    #[staticmethod]
    #[pyo3(signature = (font, text, shaping = "simple"))]
    fn load(font: &str, text: &str, shaping: &str) -> PyResult<Self> {
        let mode = self::shaping(shaping)?;
        Ok(Self {
            inner: load_glyph_outlines(font, text, mode).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_svg(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_svg(text).map_err(err)?,
        })
    }

    fn to_svg(&self) -> PyResult<String> {
        to_svg(&self.inner).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.inner.point_count()
    }

    /// Every control point of every glyph, in layout order.
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points().into_iter().map(|p| (p.x, p.y)).collect()
    }

    fn set_points(&mut self, points: Vec<(f64, f64)>) -> PyResult<()> {
        if points.len() != self.inner.point_count() {
            return Err(PyValueError::new_err(format!(
                "expected {} points, got {}",
                self.inner.point_count(),
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(PyValueError::new_err("points must be finite"));
        }
        let pts: Vec<Point> = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        self.inner.set_points(&pts);
        Ok(())
    }

    /// Coverage raster as rows of values in [0, 1], 1 being ink.
    fn render(&self, py: Python<'_>, size: usize) -> PyResult<Vec<Vec<f64>>> {
        if size == 0 {
            return Err(PyValueError::new_err("size must be at least 1"));
        }
        let word = self.inner.clone();
        let image = py.detach(move || render(&word, size));
        Ok(image.pixels.chunks(image.width).map(<[f64]>::to_vec).collect())
    }

    fn write_png(&self, path: &str, size: usize) -> PyResult<()> {
        if size == 0 {
            return Err(PyValueError::new_err("size must be at least 1"));
        }
        render(&self.inner, size).write_png(path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Word(letters={}, points={})", self.inner.len(), self.inner.point_count())
    }
}

/// Guidance scorer: the builtin mock, a mock pulled toward a target image,
/// or the HTTP scoring service.
#[pyclass(module = "glyphmorph", frozen)]
pub struct Scorer {
    inner: Arc<dyn CoreScorer>,
    description: String,
}

#[pymethods]
impl Scorer {
    #[staticmethod]
    #[pyo3(signature = (target_png = None, size = DEFAULT_GUIDANCE_SIZE))]
    fn mock(target_png: Option<&str>, size: usize) -> PyResult<Self> {
        let (inner, description) = match target_png {
            None => (MockScorer::new(), "mock".to_string()),
            Some(path) => {
                let target = RasterImage::read_png(path).map_err(err)?;
                let target = if target.width != size || target.height != size {
                    target.resized(size, size)
                } else {
                    target
                };
                (MockScorer::with_target(target), format!("mock:{path}"))
            }
        };
        Ok(Self {
            inner: Arc::new(inner),
            description,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (url, timeout = 120.0, retries = 2))]
    fn http(url: &str, timeout: f64, retries: usize) -> PyResult<Self> {
        if !(timeout.is_finite() && timeout > 0.0) {
            return Err(PyValueError::new_err("timeout must be positive"));
        }
        let inner = HttpScorer::with_options(url, Duration::from_secs_f64(timeout), retries, DEFAULT_BACKOFF_BASE);
        Ok(Self {
            inner: Arc::new(inner),
            description: url.to_string(),
        })
    }

    /// Image-text similarity of the word rendered at `size`.
    #[pyo3(signature = (word, prompt, size = DEFAULT_GUIDANCE_SIZE))]
    fn clip_score(&self, py: Python<'_>, word: &Word, prompt: &str, size: usize) -> PyResult<f64> {
        let scorer = self.inner.clone();
        let layout = word.inner.clone();
        let prompt = prompt.to_string();
        py.detach(move || scorer.clip_score(&render(&layout, size), &prompt)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Scorer({})", self.description)
    }
}

fn trace_dict<'py>(py: Python<'py>, r: &TraceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iteration", r.iteration)?;
    d.set_item("sds", r.sds)?;
    d.set_item("ocr", r.ocr)?;
    d.set_item("acap", r.acap)?;
    d.set_item("total", r.total)?;
    d.set_item("grad_norm", r.gradient_norm)?;
    d.set_item("lr", r.learning_rate)?;
    Ok(d)
}

fn run_config(iterations: usize, seed: u64, size: usize, augmentation: bool) -> RunConfig {
    let mut cfg = RunConfig {
        iterations,
        seed,
        guidance_size: size,
        ..RunConfig::default()
    };
    if !augmentation {
        cfg.augmentation = None;
    }
    cfg
}

/// Morph the letters in `region` (for example `"2..3"`) toward `prompt`.
///
/// Returns the morphed word and one dict per iteration.
#[pyfunction]
#[pyo3(signature = (word, region, prompt, scorer, iterations = DEFAULT_ITERATIONS, seed = 0, size = DEFAULT_GUIDANCE_SIZE, augmentation = true))]
#[allow(clippy::too_many_arguments)]
fn morph<'py>(
    py: Python<'py>,
    word: &Word,
    region: &str,
    prompt: &str,
    scorer: &Scorer,
    iterations: usize,
    seed: u64,
    size: usize,
    augmentation: bool,
) -> PyResult<(Word, Vec<Bound<'py, PyDict>>)> {
    let candidate = parse_region(region)?;
    let cfg = run_config(iterations, seed, size, augmentation);
    let layout = word.inner.clone();
    let prompt = prompt.to_string();
    let engine = scorer.inner.clone();
    let outcome = py
        .detach(move || optimizer::run(&layout, &candidate, &prompt, &cfg, engine.as_ref()))
        .map_err(err)?;
    let trace = outcome
        .trace
        .records
        .iter()
        .map(|r| trace_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    Ok((Word { inner: outcome.word }, trace))
}

/// Labels of every contiguous letter range, shortest spans first per start.
#[pyfunction]
#[pyo3(signature = (letters, max_len = None))]
fn enumerate_regions(letters: usize, max_len: Option<usize>) -> PyResult<Vec<String>> {
    let regions = region::enumerate_regions(letters, max_len).map_err(err)?;
    Ok(regions.iter().map(RegionCandidate::label).collect())
}

/// Score candidate regions with light morphs and return them as dicts,
/// best first.
#[pyfunction]
#[pyo3(signature = (word, prompt, scorer, lambda_ = DEFAULT_LAMBDA, standardize = true, iterations = LIGHT_ITERATIONS, max_len = None, seed = 0, size = DEFAULT_GUIDANCE_SIZE))]
#[allow(clippy::too_many_arguments)]
fn score_regions<'py>(
    py: Python<'py>,
    word: &Word,
    prompt: &str,
    scorer: &Scorer,
    lambda_: f64,
    standardize: bool,
    iterations: usize,
    max_len: Option<usize>,
    seed: u64,
    size: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let candidates = region::enumerate_regions(word.inner.len(), max_len).map_err(err)?;
    let config = RegionConfig {
        lambda: lambda_,
        standardize,
        run: run_config(iterations, seed, size, true).light(iterations),
    };
    let layout = word.inner.clone();
    let prompt = prompt.to_string();
    let engine = scorer.inner.clone();
    let mut scored = py
        .detach(move || region::score_regions(&layout, &candidates, &prompt, engine.as_ref(), &config))
        .map_err(err)?;
    scored.sort_by(|a, b| {
        b.composite
            .total_cmp(&a.composite)
            .then(a.len().cmp(&b.len()))
            .then(a.start.cmp(&b.start))
    });
    scored
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("region", c.label())?;
            d.set_item("composite", c.composite)?;
            d.set_item("readability", c.raw_readability)?;
            d.set_item("clip", c.raw_clip)?;
            Ok(d)
        })
        .collect()
}

/// Expand a concept with the bundled offline table into object prompts and
/// a font prompt.
#[pyfunction]
fn expand_concept<'py>(py: Python<'py>, concept: &str) -> PyResult<Bound<'py, PyDict>> {
    let engine = PromptEngine::default();
    let expansion = engine.expand_concept(concept, ExpansionMode::Offline).map_err(err)?;
    let prompts = engine.build_prompts(&expansion);
    let d = PyDict::new(py);
    d.set_item("concept", expansion.concept)?;
    d.set_item("objects", expansion.objects.to_vec())?;
    d.set_item("font_attributes", expansion.font_attributes.to_vec())?;
    d.set_item("morph_prompts", prompts.morph_prompts.to_vec())?;
    d.set_item("font_prompt", prompts.font_prompt)?;
    Ok(d)
}

#[pymodule]
pub fn glyphmorph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GlyphMorphError", m.py().get_type::<GlyphMorphError>())?;
    m.add_class::<Word>()?;
    m.add_class::<Scorer>()?;
    m.add_function(wrap_pyfunction!(morph, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_regions, m)?)?;
    m.add_function(wrap_pyfunction!(score_regions, m)?)?;
    m.add_function(wrap_pyfunction!(expand_concept, m)?)?;
    Ok(())
}
