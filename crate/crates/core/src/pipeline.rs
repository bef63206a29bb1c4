//! End-to-end runs: one grid cell (generate → layout → render → detect →
//! boundary → metrics) and the full experiment grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::boundary::{boundary_node_ids, format_id_list, parse_id_list, BoundaryResult};
use crate::detect::{detect_holes, trace_contour, Annotation, HoleRegion, DEFAULT_MIN_AREA};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::layout::{run_kk_ms_ds, LayoutParams, LayoutRun, Schedule};
use crate::metrics::{confusion_counts, format_score, metrics_csv, MetricsRow};
use crate::raster::{
    export_image, extract_regions_by_color, fit_transform, read_image, render_coverage, write_png,
    CoverageImage, Overlay, OverlayKind, DEFAULT_CANVAS, DEFAULT_MARGIN, MAX_COLOR_TOLERANCE,
};
use crate::topology::{
    generate_topology, parse_placement_csv, write_placement_csv, GeneratorConfig, HoleSpec,
    PlacementModel, SensingRule, Topology, TruePlacement,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Estimated communication range per mean layout edge length. For
/// neighbours spread uniformly over a disk of radius `R_C` the mean
/// distance is `2/3 · R_C`.
pub const DEFAULT_LAYOUT_RANGE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas {
            width: DEFAULT_CANVAS,
            height: DEFAULT_CANVAS,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Everything a grid run needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub node_counts: Vec<usize>,
    pub degrees: Vec<f64>,
    pub seeds: Vec<u64>,
    pub holes: HoleSpec,
    pub sensing: SensingRule,
    pub placement: PlacementModel,
    pub layout: LayoutParams,
    pub canvas: Canvas,
    /// Minimum hole area in pixels.
    pub min_area: usize,
    /// Point-test tolerance in pixels; defaults to the rendered sensing
    /// radius plus `tolerance_margin`.
    pub tolerance: Option<f64>,
    pub tolerance_margin: f64,
    /// Layout-space sensing radius is
    /// `layout_range_factor · mean edge length · R_S/R_C`.
    pub layout_range_factor: f64,
    pub snapshots: Schedule,
    /// Record wall-clock detection times. Off by default so reruns are
    /// byte-identical.
    pub record_timing: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            node_counts: vec![500, 1000, 2000],
            degrees: vec![6.0, 8.0, 10.0],
            seeds: vec![1],
            holes: HoleSpec::default(),
            sensing: SensingRule::default(),
            placement: PlacementModel::default(),
            layout: LayoutParams::default(),
            canvas: Canvas::default(),
            min_area: DEFAULT_MIN_AREA,
            tolerance: None,
            tolerance_margin: crate::boundary::DEFAULT_TOLERANCE_MARGIN,
            layout_range_factor: DEFAULT_LAYOUT_RANGE_FACTOR,
            snapshots: Schedule::default(),
            record_timing: false,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        for (name, empty) in [
            ("node_counts", self.node_counts.is_empty()),
            ("degrees", self.degrees.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::invalid(format!("{name} must not be empty")));
            }
        }
        if self.canvas.width as u64 <= 2 * self.canvas.margin as u64
            || self.canvas.height as u64 <= 2 * self.canvas.margin as u64
        {
            return Err(Error::invalid("canvas must be larger than twice the margin"));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(Error::invalid("tolerance must be non-negative"));
            }
        }
        if !(self.tolerance_margin >= 0.0) {
            return Err(Error::invalid("tolerance_margin must be non-negative"));
        }
        if !(self.layout_range_factor > 0.0) {
            return Err(Error::invalid("layout_range_factor must be positive"));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.node_counts {
            for &d in &self.degrees {
                for &seed in &self.seeds {
                    cells.push(Cell { n, d, seed });
                }
            }
        }
        cells
    }

    pub fn generator(&self, cell: &Cell) -> GeneratorConfig {
        GeneratorConfig {
            nodes: cell.n,
            degree: cell.d,
            holes: self.holes,
            sensing: self.sensing,
            placement: self.placement,
            seed: cell.seed,
        }
    }

    pub fn tolerance_for(&self, rs_pixels: f64) -> f64 {
        self.tolerance.unwrap_or(rs_pixels + self.tolerance_margin)
    }

    /// Sensing radius to draw around an estimated layout. Uses only the
    /// topology, the layout and the configured `R_S/R_C` ratio.
    pub fn layout_sensing_range(&self, t: &Topology, positions: &[Point], ratio: f64) -> f64 {
        self.layout_range_factor * ratio * mean_edge_length(t, positions)
    }
}

pub fn mean_edge_length(t: &Topology, positions: &[Point]) -> f64 {
    if t.edge_count() == 0 {
        return 0.0;
    }
    t.edges()
        .iter()
        .map(|&(u, v)| positions[u].distance(positions[v]))
        .sum::<f64>()
        / t.edge_count() as f64
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub d: f64,
    pub seed: u64,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        format!("n{}_d{}_s{}", self.n, self.d, self.seed)
    }
}

/// Output of detection plus boundary resolution on one set of positions.
#[derive(Debug, Clone)]
pub struct Detection {
    pub image: CoverageImage,
    pub holes: Vec<HoleRegion>,
    pub annotation: Annotation,
    pub boundary: BoundaryResult,
    pub tolerance: f64,
    pub elapsed_ms: f64,
}

/// Renders `positions`, detects holes and resolves boundary nodes. The
/// annotation gets each hole's IDs filled in.
pub fn detect_positions(
    config: &ExperimentConfig,
    positions: &[Point],
    sensing_range: f64,
    image_path: &str,
) -> Result<Detection> {
    let c = config.canvas;
    let transform = fit_transform(positions, c.width, c.height, c.margin)?;
    let image = render_coverage(positions, &transform, sensing_range)?;
    let started = Instant::now();
    let holes = detect_holes(&image, config.min_area);
    let mut annotation = Annotation::from_holes(&holes, c.width, c.height, image_path);
    let tolerance = config.tolerance_for(image.rs_pixels);
    let boundary = boundary_node_ids(&annotation, positions, &transform, tolerance)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    for (shape, ids) in annotation.shapes.iter_mut().zip(&boundary.per_hole) {
        shape.boundary_node_ids = ids.clone();
    }
    Ok(Detection {
        image,
        holes,
        annotation,
        boundary,
        tolerance,
        elapsed_ms,
    })
}

fn overlay_png(det: &Detection, kind: OverlayKind, path: &Path) -> Result<()> {
    let regions: Vec<Vec<_>> = det.holes.iter().map(|h| h.pixels.clone()).collect();
    let img = export_image(&det.image, &[Overlay {
        kind,
        regions: &regions,
    }]);
    write_png(&img, path)
}

/// Result of a successful cell run.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub cell: Cell,
    pub dir: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub truth_ids: Vec<usize>,
    pub truth_holes: usize,
    pub converged: bool,
}

/// Runs one cell and writes its artifacts under `out/<cell dir>/`.
pub fn run_pipeline(config: &ExperimentConfig, cell: &Cell, out: &Path) -> Result<CellReport> {
    let started_ms = unix_ms();
    let dir = out.join(cell.dir_name());
    fs::create_dir_all(&dir)?;
    match run_cell(config, cell, &dir) {
        Ok((report, manifest)) => {
            write_manifest(&dir, manifest, started_ms, None)?;
            Ok(report)
        }
        Err(e) => {
            let manifest = json!({
                "status": "failed",
                "error": e.to_string(),
                "cell": cell,
                "version": VERSION,
                "config": config,
            });
            write_manifest(&dir, manifest, started_ms, None)?;
            Err(e)
        }
    }
}

/// Generates the cell's topology and writes it together with the true
/// placement and the ground truth (`truth.png`, `truth.json`,
/// `boundary_ids.txt`).
pub fn generate_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    dir: &Path,
) -> Result<(Topology, TruePlacement, Detection)> {
    config.validate()?;
    let (topology, truth) = generate_topology(&config.generator(cell))?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("topology.txt"), topology.to_edge_list())?;
    fs::write(dir.join("placement_true.csv"), write_placement_csv(&truth.positions))?;
    let det = detect_positions(config, &truth.positions, truth.sensing_range, "truth.png")?;
    write_detection(dir, "truth", "boundary_ids.txt", &det, OverlayKind::Truth)?;
    Ok((topology, truth, det))
}

/// Writes `<stem>.png` (coverage plus overlay), `<stem>.json` and the ID
/// list.
pub fn write_detection(
    dir: &Path,
    stem: &str,
    id_file: &str,
    det: &Detection,
    kind: OverlayKind,
) -> Result<()> {
    overlay_png(det, kind, &dir.join(format!("{stem}.png")))?;
    fs::write(dir.join(format!("{stem}.json")), det.annotation.to_json())?;
    fs::write(dir.join(id_file), format_id_list(&det.boundary.union))?;
    Ok(())
}

/// Writes one `layout_iter<k>.csv` per snapshot.
pub fn write_layout_snapshots(dir: &Path, run: &LayoutRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    for snap in &run.snapshots {
        fs::write(
            dir.join(format!("layout_iter{}.csv", snap.iteration)),
            write_placement_csv(&snap.state.positions),
        )?;
    }
    Ok(())
}

fn run_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    dir: &Path,
) -> Result<(CellReport, serde_json::Value)> {
    let (topology, truth, truth_det) = generate_cell(config, cell, dir)?;
    let n = topology.node_count();
    let truth_ids = truth_det.boundary.union.clone();

    let run = run_kk_ms_ds(&topology, &config.layout, cell.seed, &config.snapshots)?;
    write_layout_snapshots(dir, &run)?;
    let ratio = sensing_ratio(config, &truth);
    let mut rows = Vec::with_capacity(run.snapshots.len());
    let mut snapshot_meta = Vec::new();
    let mut timings = BTreeMap::new();
    for snap in &run.snapshots {
        let k = snap.iteration;
        let positions = &snap.state.positions;
        let rs = config.layout_sensing_range(&topology, positions, ratio);
        let stem = format!("detect_iter{k}");
        let det = detect_positions(config, positions, rs, &format!("{stem}.png"))?;
        write_detection(
            dir,
            &stem,
            &format!("boundary_ids_iter{k}.txt"),
            &det,
            OverlayKind::Detection,
        )?;
        let confusion = confusion_counts(&det.boundary.union, &truth_ids, n)?;
        let row = MetricsRow {
            n: cell.n,
            d: cell.d,
            seed: cell.seed,
            snapshot_iter: k,
            confusion,
            detect_ms: config.record_timing.then_some(det.elapsed_ms),
        };
        timings.insert(k.to_string(), det.elapsed_ms);
        snapshot_meta.push(json!({
            "iteration": k,
            "phase": snap.state.phase,
            "r": snap.r,
            "sensing_range": rs,
            "rs_pixels": det.image.rs_pixels,
            "tolerance": det.tolerance,
            "holes": det.holes.len(),
            "boundary_nodes": det.boundary.union.len(),
            "nodes_inside_holes": det.boundary.inside.len(),
            "sensitivity": format_score(row.scores().sensitivity),
            "specificity": format_score(row.scores().specificity),
        }));
        rows.push(row);
    }
    fs::write(dir.join("metrics.csv"), metrics_csv(&rows))?;

    let mut manifest = json!({
        "status": "ok",
        "version": VERSION,
        "cell": cell,
        "config": config,
        "generator": generator_summary(&topology, &truth)?,
        "truth": {
            "holes": truth_det.holes.len(),
            "boundary_nodes": truth_ids.len(),
            "rs_pixels": truth_det.image.rs_pixels,
            "tolerance": truth_det.tolerance,
        },
        "layout": layout_summary(&run),
        "snapshots": snapshot_meta,
    });
    if config.record_timing {
        manifest["detect_ms"] = json!(timings);
    }
    let report = CellReport {
        cell: *cell,
        dir: dir.to_path_buf(),
        rows,
        truth_ids,
        truth_holes: truth_det.holes.len(),
        converged: run.converged(),
    };
    Ok((report, manifest))
}

pub fn generator_summary(topology: &Topology, truth: &TruePlacement) -> Result<serde_json::Value> {
    Ok(json!({
        "nodes": topology.node_count(),
        "edges": topology.edge_count(),
        "average_degree": topology.average_degree()?,
        "communication_range": truth.communication_range,
        "sensing_range": truth.sensing_range,
        "voids": truth.voids,
    }))
}

/// `R_S/R_C` for drawing estimated layouts: the configured ratio, or the
/// realized one for an absolute sensing radius.
pub fn sensing_ratio(config: &ExperimentConfig, truth: &TruePlacement) -> f64 {
    config
        .sensing
        .comm_ratio()
        .unwrap_or(truth.sensing_range / truth.communication_range)
}

pub fn layout_summary(run: &LayoutRun) -> serde_json::Value {
    json!({
        "params": run.params,
        "seed": run.seed,
        "start_node": run.start_node,
        "snapshot_iterations": run.snapshots.iter().map(|s| s.iteration).collect::<Vec<_>>(),
        "final_r": run.final_report.map(|r| r.r),
        "converged": run.converged(),
        "termination": run.termination,
    })
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Adds the `timestamps` object (the only non-reproducible part) and
/// writes `manifest.json`.
pub fn write_manifest(
    dir: &Path,
    mut manifest: serde_json::Value,
    started_ms: u128,
    name: Option<&str>,
) -> Result<()> {
    manifest["timestamps"] = json!({
        "started_unix_ms": started_ms as u64,
        "finished_unix_ms": unix_ms() as u64,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(name.unwrap_or("manifest.json")), text)?;
    Ok(())
}

/// Outcome of one cell inside a grid.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub result: std::result::Result<CellReport, String>,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub outcomes: Vec<CellOutcome>,
    pub rows: Vec<MetricsRow>,
}

impl GridReport {
    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.outcomes.is_empty() && self.failed() == self.outcomes.len()
    }
}

/// Runs every cell (in parallel) and writes `metrics.csv`, `summary.csv`
/// and `grid_manifest.json` under `out`. A failing cell is recorded and the
/// rest carry on.
pub fn run_grid(config: &ExperimentConfig, out: &Path) -> Result<GridReport> {
    config.validate()?;
    let started_ms = unix_ms();
    fs::create_dir_all(out)?;
    let outcomes: Vec<CellOutcome> = config
        .cells()
        .par_iter()
        .map(|cell| CellOutcome {
            cell: *cell,
            result: run_pipeline(config, cell, out).map_err(|e| e.to_string()),
        })
        .collect();
    let rows: Vec<MetricsRow> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .flat_map(|r| r.rows.iter().cloned())
        .collect();
    fs::write(out.join("metrics.csv"), metrics_csv(&rows))?;
    fs::write(out.join("summary.csv"), summary_csv(&outcomes))?;

    let cells: Vec<_> = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(r) => json!({
                "cell": o.cell,
                "dir": o.cell.dir_name(),
                "status": "ok",
                "rows": r.rows.len(),
                "converged": r.converged,
                "truth_holes": r.truth_holes,
            }),
            Err(e) => json!({
                "cell": o.cell,
                "dir": o.cell.dir_name(),
                "status": "failed",
                "error": e,
            }),
        })
        .collect();
    let manifest = json!({
        "version": VERSION,
        "config": config,
        "cells": cells,
        "failed": outcomes.iter().filter(|o| o.result.is_err()).count(),
    });
    write_manifest(out, manifest, started_ms, Some("grid_manifest.json"))?;
    Ok(GridReport { outcomes, rows })
}

pub const SUMMARY_HEADER: &str = "n,d,cells,failed,mean_sensitivity,mean_specificity";

/// Mean final-snapshot sensitivity and specificity per `(n, d)`, over the
/// cells where each score is defined.
pub fn summary_csv(outcomes: &[CellOutcome]) -> String {
    let mut groups: Vec<((usize, f64), Vec<&CellOutcome>)> = Vec::new();
    for o in outcomes {
        let key = (o.cell.n, o.cell.d);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(o),
            None => groups.push((key, vec![o])),
        }
    }
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for ((n, d), members) in groups {
        let finals: Vec<_> = members
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .filter_map(|r| r.rows.last())
            .map(|row| row.scores())
            .collect();
        let mean = |vals: Vec<f64>| {
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let sens = mean(finals.iter().filter_map(|s| s.sensitivity).collect());
        let spec = mean(finals.iter().filter_map(|s| s.specificity).collect());
        let failed = members.iter().filter(|o| o.result.is_err()).count();
        out.push_str(&format!(
            "{n},{d},{},{failed},{},{}\n",
            members.len(),
            format_score(sens),
            format_score(spec)
        ));
    }
    out
}

/// Inputs for scoring an externally produced detection.
#[derive(Debug, Clone)]
pub struct ValidateRequest {
    /// Annotation JSON or mask image with blue hole pixels.
    pub detection: PathBuf,
    /// Placement CSV of the layout the detection was made on.
    pub layout: PathBuf,
    pub topology: PathBuf,
    /// Ground-truth boundary IDs: an ID list or an annotation JSON.
    pub truth: PathBuf,
    /// World-unit sensing radius of the detection image. Defaults to the
    /// layout rule used by the pipeline.
    pub sensing_range: Option<f64>,
    pub degree: Option<f64>,
    pub seed: u64,
    pub snapshot_iter: u64,
}

/// Scores an external annotation or mask against stored ground truth.
pub fn validate_external(config: &ExperimentConfig, req: &ValidateRequest) -> Result<MetricsRow> {
    config.validate()?;
    let topology = Topology::parse_edge_list(&fs::read_to_string(&req.topology)?)?;
    let positions = parse_placement_csv(&fs::read_to_string(&req.layout)?)?;
    let n = topology.node_count();
    if positions.len() != n {
        return Err(Error::AnnotationMismatch(format!(
            "layout has {} nodes but the topology has {n}",
            positions.len()
        )));
    }
    let truth_ids = read_truth_ids(&req.truth)?;

    let c = config.canvas;
    let transform = fit_transform(&positions, c.width, c.height, c.margin)?;
    let rs = match req.sensing_range {
        Some(rs) => rs,
        None => {
            let ratio = config.sensing.comm_ratio().ok_or_else(|| {
                Error::invalid("an absolute sensing rule needs an explicit sensing range")
            })?;
            config.layout_sensing_range(&topology, &positions, ratio)
        }
    };
    let rs_pixels = rs * transform.scale;
    let annotation = if is_json(&req.detection) {
        Annotation::read(&req.detection)?
    } else {
        let img = read_image(&req.detection)?;
        if img.dimensions() != (c.width, c.height) {
            return Err(Error::AnnotationMismatch(format!(
                "mask is {}x{} but the canvas is {}x{}",
                img.width(),
                img.height(),
                c.width,
                c.height
            )));
        }
        let mut regions = extract_regions_by_color(
            &img,
            OverlayKind::Detection.color(),
            MAX_COLOR_TOLERANCE,
        )?;
        regions.sort_by(|a, b| b.len().cmp(&a.len()));
        let holes: Vec<HoleRegion> = regions
            .into_iter()
            .map(|pixels| HoleRegion {
                contour: trace_contour(&pixels),
                pixels,
            })
            .collect();
        Annotation::from_holes(&holes, c.width, c.height, &req.detection.to_string_lossy())
    };
    let started = Instant::now();
    let boundary =
        boundary_node_ids(&annotation, &positions, &transform, config.tolerance_for(rs_pixels))?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(MetricsRow {
        n,
        d: match req.degree {
            Some(d) => d,
            None => topology.average_degree()?,
        },
        seed: req.seed,
        snapshot_iter: req.snapshot_iter,
        confusion: confusion_counts(&boundary.union, &truth_ids, n)?,
        detect_ms: config.record_timing.then_some(elapsed_ms),
    })
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_truth_ids(path: &Path) -> Result<Vec<usize>> {
    if is_json(path) {
        let a = Annotation::read(path)?;
        let mut ids: Vec<usize> = a
            .shapes
            .iter()
            .flat_map(|s| s.boundary_node_ids.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    } else {
        parse_id_list(&fs::read_to_string(path)?)
    }
}
