use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wsnhole::detect::Annotation;
use wsnhole::geom::{bounding_box, polygon_contains};
use wsnhole::layout::run_kk_ms_ds;
use wsnhole::metrics::{confusion_counts, metrics_csv, MetricsRow};
use wsnhole::pipeline::{
    detect_positions, generate_cell, generator_summary, layout_summary, run_grid, unix_ms,
    validate_external, write_detection, write_layout_snapshots, write_manifest, Cell,
    ExperimentConfig, ValidateRequest,
};
use wsnhole::raster::{export_image, fit_transform, render_coverage, write_png, Overlay, OverlayKind, Pixel};
use wsnhole::topology::parse_placement_csv;
use wsnhole::{Point, Topology};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

/// Coverage-hole detection for sensor networks from topology alone.
#[derive(Debug, Parser)]
#[command(name = "wsnhole", version)]
struct Cli {
    /// TOML experiment config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed list with a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a topology with planted voids and its ground truth.
    Gen {
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        degree: Option<f64>,
    },
    /// Run the force-directed layout and write its snapshots.
    Layout {
        #[arg(long)]
        topology: PathBuf,
    },
    /// Render a layout's coverage to PNG.
    Render {
        #[command(flatten)]
        input: LayoutInput,
        /// Annotation whose polygons are painted over the coverage.
        #[arg(long, requires = "overlay")]
        annotation: Option<PathBuf>,
        /// Overlay colour: `truth` (red) or `detection` (blue).
        #[arg(long)]
        overlay: Option<OverlayKind>,
        #[arg(long, default_value = "render.png")]
        name: String,
    },
    /// Detect holes on a layout and resolve their boundary nodes.
    Detect {
        #[command(flatten)]
        input: LayoutInput,
        /// Ground-truth ID list; prints a metrics row when given.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Score an external annotation or blue-hole mask against ground truth.
    Validate {
        /// Annotation JSON or mask image.
        #[arg(long)]
        detection: PathBuf,
        #[command(flatten)]
        input: LayoutInput,
        /// Ground truth: ID list or annotation JSON.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        degree: Option<f64>,
        #[arg(long, default_value_t = 0)]
        iter: u64,
    },
    /// Run the full experiment grid.
    Grid,
}

#[derive(Debug, Args)]
struct LayoutInput {
    /// Placement CSV (`id,x,y`).
    #[arg(long)]
    layout: PathBuf,
    /// Edge list the layout belongs to.
    #[arg(long)]
    topology: PathBuf,
    /// Sensing radius in layout units; defaults to the layout rule.
    #[arg(long)]
    sensing_range: Option<f64>,
}

impl LayoutInput {
    fn load(&self) -> Result<(Topology, Vec<Point>)> {
        let topology = read_topology(&self.topology)?;
        let text = fs::read_to_string(&self.layout)
            .with_context(|| format!("reading {}", self.layout.display()))?;
        let positions = parse_placement_csv(&text)
            .with_context(|| format!("parsing {}", self.layout.display()))?;
        if positions.len() != topology.node_count() {
            bail!(
                "layout has {} nodes but the topology has {}",
                positions.len(),
                topology.node_count()
            );
        }
        Ok((topology, positions))
    }

    fn sensing_range(&self, config: &ExperimentConfig, t: &Topology, p: &[Point]) -> Result<f64> {
        if let Some(rs) = self.sensing_range {
            return Ok(rs);
        }
        let Some(ratio) = config.sensing.comm_ratio() else {
            bail!("--sensing-range is required with an absolute sensing rule");
        };
        Ok(config.layout_sensing_range(t, p, ratio))
    }
}

fn read_topology(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Topology::parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    let out = cli.out.clone().unwrap_or_else(|| config.output.clone());
    config.output = out.clone();
    let seed = config.seeds.first().copied().unwrap_or(1);

    match cli.command {
        Command::Gen { nodes, degree } => {
            let cell = Cell {
                n: nodes.or(config.node_counts.first().copied()).unwrap_or(500),
                d: degree.or(config.degrees.first().copied()).unwrap_or(6.0),
                seed,
            };
            let started = unix_ms();
            let (topology, truth, det) = generate_cell(&config, &cell, &out)?;
            let manifest = json!({
                "cell": cell,
                "config": config,
                "generator": generator_summary(&topology, &truth)?,
                "truth": { "holes": det.holes.len(), "boundary_nodes": det.boundary.union.len() },
            });
            write_manifest(&out, manifest, started, Some("gen_manifest.json"))?;
            println!(
                "{} nodes, {} edges, {} holes, {} boundary nodes -> {}",
                topology.node_count(),
                topology.edge_count(),
                det.holes.len(),
                det.boundary.union.len(),
                out.display()
            );
        }
        Command::Layout { topology } => {
            let t = read_topology(&topology)?;
            let started = unix_ms();
            let run = run_kk_ms_ds(&t, &config.layout, seed, &config.snapshots)?;
            write_layout_snapshots(&out, &run)?;
            write_manifest(&out, layout_summary(&run), started, Some("layout_manifest.json"))?;
            let last = run.final_state().iteration;
            println!(
                "{} after {last} iterations ({:?}) -> {}",
                if run.converged() { "converged" } else { "not converged" },
                run.termination,
                out.display()
            );
        }
        Command::Render {
            input,
            annotation,
            overlay,
            name,
        } => {
            let (t, positions) = input.load()?;
            let rs = input.sensing_range(&config, &t, &positions)?;
            let c = config.canvas;
            let transform = fit_transform(&positions, c.width, c.height, c.margin)?;
            let image = render_coverage(&positions, &transform, rs)?;
            let regions = match &annotation {
                Some(path) => polygon_regions(&Annotation::read(path)?),
                None => Vec::new(),
            };
            let overlays: Vec<Overlay> = overlay
                .map(|kind| Overlay {
                    kind,
                    regions: &regions,
                })
                .into_iter()
                .collect();
            fs::create_dir_all(&out)?;
            write_png(&export_image(&image, &overlays), out.join(&name))?;
            println!("rs = {:.2} px -> {}", image.rs_pixels, out.join(&name).display());
        }
        Command::Detect { input, truth } => {
            let (t, positions) = input.load()?;
            let rs = input.sensing_range(&config, &t, &positions)?;
            let det = detect_positions(&config, &positions, rs, "detect.png")?;
            fs::create_dir_all(&out)?;
            write_detection(&out, "detect", "boundary_ids.txt", &det, OverlayKind::Detection)?;
            println!(
                "{} holes, {} boundary nodes -> {}",
                det.holes.len(),
                det.boundary.union.len(),
                out.display()
            );
            if let Some(truth) = truth {
                let ids = wsnhole::boundary::parse_id_list(&fs::read_to_string(&truth)?)?;
                let row = MetricsRow {
                    n: t.node_count(),
                    d: t.average_degree()?,
                    seed,
                    snapshot_iter: 0,
                    confusion: confusion_counts(&det.boundary.union, &ids, t.node_count())?,
                    detect_ms: config.record_timing.then_some(det.elapsed_ms),
                };
                print!("{}", metrics_csv(&[row]));
            }
        }
        Command::Validate {
            detection,
            input,
            truth,
            degree,
            iter,
        } => {
            let row = validate_external(
                &config,
                &ValidateRequest {
                    detection,
                    layout: input.layout,
                    topology: input.topology,
                    truth,
                    sensing_range: input.sensing_range,
                    degree,
                    seed,
                    snapshot_iter: iter,
                },
            )?;
            print!("{}", metrics_csv(&[row]));
        }
        Command::Grid => {
            let report = run_grid(&config, &out)?;
            for o in &report.outcomes {
                if let Err(e) = &o.result {
                    eprintln!("cell {} failed: {e}", o.cell.dir_name());
                }
            }
            print!("{}", fs::read_to_string(out.join("summary.csv"))?);
            if report.all_failed() {
                return Ok(ExitCode::from(EXIT_ALL_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Pixels whose centres fall inside each annotated polygon.
fn polygon_regions(annotation: &Annotation) -> Vec<Vec<Pixel>> {
    let (w, h) = (annotation.image_width, annotation.image_height);
    annotation
        .shapes
        .iter()
        .filter_map(|shape| {
            let ring: Vec<Point> = shape.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
            let (lo, hi) = bounding_box(&ring)?;
            let x0 = lo.x.floor().max(0.0) as u32;
            let y0 = lo.y.floor().max(0.0) as u32;
            let x1 = (hi.x.ceil().max(0.0) as u32).min(w.saturating_sub(1));
            let y1 = (hi.y.ceil().max(0.0) as u32).min(h.saturating_sub(1));
            let pixels: Vec<Pixel> = (y0..=y1)
                .flat_map(|y| (x0..=x1).map(move |x| (x, y)))
                .filter(|&(x, y)| polygon_contains(Point::new(x as f64, y as f64), &ring))
                .collect();
            Some(pixels)
        })
        .collect()
}
