//! Python bindings: topology generation, layout, rendering, detection and
//! scoring.
//!
//! ```python
//! import wsnhole
//! topo, truth = wsnhole.generate_topology(500, 6.0, seed=1)
//! run = wsnhole.run_layout(topo, seed=1)
//! det = wsnhole.detect(run.final_positions(), run.layout_sensing_range(topo, 0.8))
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wsnhole::layout::{LayoutParams, Schedule};
use wsnhole::metrics::{self, Confusion};
use wsnhole::pipeline::{self as pipe, ExperimentConfig};
use wsnhole::raster::{self, OverlayKind};
use wsnhole::topology::{GeneratorConfig, HoleSpec, SensingRule};
use wsnhole::{Error, Point};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Parse { .. }
        | Error::InvalidTopology(_)
        | Error::InvalidArgument(_)
        | Error::DegreeUnreachable { .. }
        | Error::SensingBelowResolution { .. }
        | Error::AnnotationMismatch(_)
        | Error::UnknownOverlay(_)
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn points(xy: &[(f64, f64)]) -> Vec<Point> {
    xy.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn pairs(p: &[Point]) -> Vec<(f64, f64)> {
    p.iter().map(|p| (p.x, p.y)).collect()
}

/// Undirected graph on nodes `0..n`.
#[pyclass(frozen, skip_from_py_object, name = "Topology")]
#[derive(Clone)]
struct PyTopology {
    inner: wsnhole::Topology,
}

#[pymethods]
impl PyTopology {
    #[new]
    fn new(node_count: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        wsnhole::Topology::new(node_count, edges)
            .map(|inner| PyTopology { inner })
            .map_err(py_err)
    }

    /// Parses the `<n>` header plus `u v` edge lines format.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        wsnhole::Topology::parse_edge_list(text)
            .map(|inner| PyTopology { inner })
            .map_err(py_err)
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        if v >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {v} out of range")));
        }
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn average_degree(&self) -> PyResult<f64> {
        self.inner.average_degree().map_err(py_err)
    }

    /// Hop counts from `sources`; `None` for unreachable nodes.
    fn hop_distance(&self, sources: Vec<usize>) -> PyResult<Vec<Option<u32>>> {
        self.inner.hop_distance(&sources).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Topology(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Physical positions the topology was sampled from.
#[pyclass(frozen, name = "TruePlacement")]
struct PyTruePlacement {
    #[pyo3(get)]
    positions: Vec<(f64, f64)>,
    #[pyo3(get)]
    sensing_range: f64,
    #[pyo3(get)]
    communication_range: f64,
    /// `(cx, cy, radius)` per planted void.
    #[pyo3(get)]
    voids: Vec<(f64, f64, f64)>,
}

#[pyfunction]
#[pyo3(signature = (nodes, degree, seed=1, holes=3, radius_min=0.08, radius_max=0.15, sensing_ratio=0.8))]
fn generate_topology(
    nodes: usize,
    degree: f64,
    seed: u64,
    holes: usize,
    radius_min: f64,
    radius_max: f64,
    sensing_ratio: f64,
) -> PyResult<(PyTopology, PyTruePlacement)> {
    let config = GeneratorConfig {
        sensing: SensingRule::CommRatio(sensing_ratio),
        ..GeneratorConfig::new(nodes, degree, seed).with_holes(HoleSpec {
            count: holes,
            radius_min,
            radius_max,
        })
    };
    let (t, p) = wsnhole::topology::generate_topology(&config).map_err(py_err)?;
    Ok((
        PyTopology { inner: t },
        PyTruePlacement {
            positions: pairs(&p.positions),
            sensing_range: p.sensing_range,
            communication_range: p.communication_range,
            voids: p
                .voids
                .iter()
                .map(|v| (v.center.x, v.center.y, v.radius))
                .collect(),
        },
    ))
}

/// Result of a layout run.
#[pyclass(frozen, name = "LayoutRun")]
struct PyLayoutRun {
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    final_r: Option<f64>,
    #[pyo3(get)]
    iterations: Vec<u64>,
    snapshots: Vec<Vec<(f64, f64)>>,
}

#[pymethods]
impl PyLayoutRun {
    /// Positions at the `i`-th snapshot (negative indices allowed).
    fn positions(&self, i: isize) -> PyResult<Vec<(f64, f64)>> {
        let len = self.snapshots.len() as isize;
        let k = if i < 0 { len + i } else { i };
        if !(0..len).contains(&k) {
            return Err(PyValueError::new_err("snapshot index out of range"));
        }
        Ok(self.snapshots[k as usize].clone())
    }

    fn final_positions(&self) -> Vec<(f64, f64)> {
        self.snapshots.last().cloned().unwrap_or_default()
    }

    /// Sensing radius the pipeline would draw around the final layout.
    #[pyo3(signature = (topology, sensing_ratio=0.8))]
    fn layout_sensing_range(&self, topology: &PyTopology, sensing_ratio: f64) -> f64 {
        ExperimentConfig::default().layout_sensing_range(
            &topology.inner,
            &points(&self.final_positions()),
            sensing_ratio,
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "LayoutRun(converged={}, termination={}, snapshots={:?})",
            self.converged, self.termination, self.iterations
        )
    }
}

/// Runs the force-directed layout. `snapshots` lists the iterations to
/// capture besides the final state; `"geometric"` is also accepted.
#[pyfunction]
#[pyo3(signature = (topology, seed=1, snapshots=None, epsilon=None, move_fraction=None, step_scale=None, max_iterations=None))]
fn run_layout(
    py: Python<'_>,
    topology: &PyTopology,
    seed: u64,
    snapshots: Option<Bound<'_, PyAny>>,
    epsilon: Option<f64>,
    move_fraction: Option<f64>,
    step_scale: Option<f64>,
    max_iterations: Option<u64>,
) -> PyResult<PyLayoutRun> {
    let schedule = match snapshots {
        None => Schedule::default(),
        Some(s) => match s.extract::<String>() {
            Ok(name) if name == "geometric" => Schedule::Geometric,
            Ok(name) => return Err(PyValueError::new_err(format!("unknown schedule `{name}`"))),
            Err(_) => Schedule::Iterations(s.extract::<Vec<u64>>()?),
        },
    };
    let mut params = LayoutParams::default();
    if let Some(v) = epsilon {
        params.epsilon = v;
    }
    if let Some(v) = move_fraction {
        params.move_fraction = v;
    }
    if let Some(v) = step_scale {
        params.step_scale = v;
    }
    params.max_iterations = max_iterations;
    let t = topology.inner.clone();
    let run = py
        .detach(move || wsnhole::layout::run_kk_ms_ds(&t, &params, seed, &schedule))
        .map_err(py_err)?;
    Ok(PyLayoutRun {
        converged: run.converged(),
        termination: format!("{:?}", run.termination),
        final_r: run.final_report.map(|r| r.r),
        iterations: run.snapshots.iter().map(|s| s.iteration).collect(),
        snapshots: run
            .snapshots
            .iter()
            .map(|s| pairs(&s.state.positions))
            .collect(),
    })
}

/// Hole detection plus boundary nodes on one set of positions.
#[pyclass(frozen, name = "Detection")]
struct PyDetection {
    #[pyo3(get)]
    rs_pixels: f64,
    #[pyo3(get)]
    tolerance: f64,
    /// Contour per hole, largest hole first.
    #[pyo3(get)]
    contours: Vec<Vec<(u32, u32)>>,
    #[pyo3(get)]
    areas: Vec<usize>,
    #[pyo3(get)]
    boundary_ids: Vec<usize>,
    #[pyo3(get)]
    per_hole_ids: Vec<Vec<usize>>,
    annotation: String,
    inner: pipe::Detection,
}

#[pymethods]
impl PyDetection {
    /// LabelMe-style annotation JSON.
    fn annotation_json(&self) -> String {
        self.annotation.clone()
    }

    /// Writes the coverage image with holes painted as `overlay`
    /// (`"truth"` red, `"detection"` blue).
    #[pyo3(signature = (path, overlay="detection"))]
    fn write_png(&self, path: PathBuf, overlay: &str) -> PyResult<()> {
        let kind: OverlayKind = overlay.parse().map_err(py_err)?;
        let regions: Vec<_> = self.inner.holes.iter().map(|h| h.pixels.clone()).collect();
        let img = raster::export_image(&self.inner.image, &[raster::Overlay {
            kind,
            regions: &regions,
        }]);
        raster::write_png(&img, path).map_err(py_err)
    }

    #[getter]
    fn hole_count(&self) -> usize {
        self.contours.len()
    }

    #[getter]
    fn covered_pixels(&self) -> usize {
        self.inner.image.covered_count()
    }
}

/// Renders `positions` with sensing radius `sensing_range` (world units),
/// finds interior holes and resolves boundary nodes.
#[pyfunction]
#[pyo3(signature = (positions, sensing_range, width=1024, height=1024, margin=32, min_area=25, tolerance=None))]
fn detect(
    py: Python<'_>,
    positions: Vec<(f64, f64)>,
    sensing_range: f64,
    width: u32,
    height: u32,
    margin: u32,
    min_area: usize,
    tolerance: Option<f64>,
) -> PyResult<PyDetection> {
    let config = ExperimentConfig {
        canvas: pipe::Canvas {
            width,
            height,
            margin,
        },
        min_area,
        tolerance,
        ..ExperimentConfig::default()
    };
    let pts = points(&positions);
    let det = py
        .detach(move || pipe::detect_positions(&config, &pts, sensing_range, ""))
        .map_err(py_err)?;
    Ok(PyDetection {
        rs_pixels: det.image.rs_pixels,
        tolerance: det.tolerance,
        contours: det.holes.iter().map(|h| h.contour.clone()).collect(),
        areas: det.holes.iter().map(|h| h.area()).collect(),
        boundary_ids: det.boundary.union.clone(),
        per_hole_ids: det.boundary.per_hole.clone(),
        annotation: det.annotation.to_json(),
        inner: det,
    })
}

/// Node-level confusion counts.
#[pyclass(frozen, get_all, name = "Confusion")]
struct PyConfusion {
    true_positive: usize,
    false_negative: usize,
    false_positive: usize,
    true_negative: usize,
    /// `None` when undefined.
    sensitivity: Option<f64>,
    specificity: Option<f64>,
}

#[pymethods]
impl PyConfusion {
    fn __repr__(&self) -> String {
        format!(
            "Confusion(TP={}, FN={}, FP={}, TN={}, sensitivity={}, specificity={})",
            self.true_positive,
            self.false_negative,
            self.false_positive,
            self.true_negative,
            metrics::format_score(self.sensitivity),
            metrics::format_score(self.specificity),
        )
    }
}

impl From<Confusion> for PyConfusion {
    fn from(c: Confusion) -> Self {
        let s = metrics::scores(&c);
        PyConfusion {
            true_positive: c.true_positive,
            false_negative: c.false_negative,
            false_positive: c.false_positive,
            true_negative: c.true_negative,
            sensitivity: s.sensitivity,
            specificity: s.specificity,
        }
    }
}

#[pyfunction]
fn confusion_counts(detected: Vec<usize>, truth: Vec<usize>, n: usize) -> PyResult<PyConfusion> {
    metrics::confusion_counts(&detected, &truth, n)
        .map(PyConfusion::from)
        .map_err(py_err)
}

/// Runs one grid cell end to end and returns its metrics CSV.
#[pyfunction]
#[pyo3(signature = (n, d, seed, out, config=None))]
fn run_pipeline(
    py: Python<'_>,
    n: usize,
    d: f64,
    seed: u64,
    out: PathBuf,
    config: Option<&str>,
) -> PyResult<String> {
    let config = match config {
        Some(text) => ExperimentConfig::from_toml(text).map_err(py_err)?,
        None => ExperimentConfig::default(),
    };
    let cell = pipe::Cell { n, d, seed };
    let report = py
        .detach(move || pipe::run_pipeline(&config, &cell, &out))
        .map_err(py_err)?;
    Ok(metrics::metrics_csv(&report.rows))
}

#[pymodule]
#[pyo3(name = "wsnhole")]
fn wsnhole_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", pipe::VERSION)?;
    m.add_class::<PyTopology>()?;
    m.add_class::<PyTruePlacement>()?;
    m.add_class::<PyLayoutRun>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PyConfusion>()?;
    m.add_function(wrap_pyfunction!(generate_topology, m)?)?;
    m.add_function(wrap_pyfunction!(run_layout, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_counts, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
