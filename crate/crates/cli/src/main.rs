use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maskpath_core::path::{read_waypoints, write_waypoints};
use maskpath_core::pgm::{self, PgmFormat};
use maskpath_core::sim::rasterize_onto;
use maskpath_core::vacuum::select_salient_among;
use maskpath_core::{
    convex_hull, label_regions, plan_path, tile, vacuum_field, BinaryMask, ConfusionCounts, ConvexPolygon,
    MarkingPath, PhysicalCalibration, PhysicalPoint,
};
use maskpath_cli::config::parse_pair;
use maskpath_cli::evaluate::{evaluate_dirs, Evaluation};
use maskpath_cli::fsio::{read_text, write_atomic};
use maskpath_cli::pipeline::{fidelity_csv, resolve_calibration, run_pipeline};
use maskpath_cli::{CliError, PipelineConfig};

#[derive(Parser)]
#[command(name = "maskpath", version, about = "Turn defect masks into chalk marking paths")]
struct Cli {
    /// Config file of `key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold a graymap into a 0/255 mask.
    Binarize {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write ASCII P2 instead of binary P5.
        #[arg(long)]
        ascii: bool,
    },
    /// Print the tile grid for a mask or explicit dimensions.
    Tile {
        mask: Option<PathBuf>,
        #[arg(long, requires = "height")]
        width: Option<u32>,
        #[arg(long, requires = "width")]
        height: Option<u32>,
        #[arg(long)]
        tile_size: Option<u32>,
    },
    /// List connected defect regions of a mask.
    Regions { mask: PathBuf },
    /// Salient points and hulls for every region of one (untiled) mask.
    Extract {
        mask: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Plan a marking path around a hull file.
    Plan {
        hull: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        defect_id: u32,
        #[command(flatten)]
        frame: Frame,
    },
    /// Rasterize waypoint files onto a blank canvas.
    MarkSim {
        #[arg(required = true)]
        waypoints: Vec<PathBuf>,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        frame: Frame,
    },
    /// Write a calibration file from image and leather dimensions.
    Calibrate {
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        /// Physical size as `WxH` millimetres.
        #[arg(long)]
        leather_mm: String,
        #[arg(long, default_value = "0,0")]
        origin_mm: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long, required_unless_present = "counts")]
        pred: Option<PathBuf>,
        #[arg(long, required_unless_present = "counts")]
        truth: Option<PathBuf>,
        /// Score a `tp=/fp=/fn=/tn=` file instead of matching regions.
        #[arg(long, conflicts_with_all = ["pred", "truth"])]
        counts: Option<PathBuf>,
        /// Also write the metrics as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole pipeline over mask files.
    Pipeline {
        #[arg(required = true)]
        masks: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Pixel-to-millimetre frame; falls back to the config.
#[derive(Args)]
struct Frame {
    #[arg(long)]
    calibration: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = &cli.config {
        cfg.apply_text(&read_text(p)?)?;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_mask(path: &Path) -> Result<BinaryMask, CliError> {
    pgm::read_mask(path).map_err(|e| CliError::input(path, e))
}

fn frame_calibration(cfg: &PipelineConfig, frame: &Frame) -> Result<PhysicalCalibration, CliError> {
    match frame.calibration.as_ref().or(cfg.calibration.as_ref()) {
        Some(p) => PhysicalCalibration::from_kv(&read_text(p)?).map_err(|e| CliError::input(p, e)),
        None if cfg.leather_mm.is_some() => Err(CliError::Config(
            "leather_mm needs image dimensions here; pass --calibration".into(),
        )),
        None => resolve_calibration(cfg, None, 1, 1),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Binarize { input, out, ascii } => {
            let mask = read_mask(&input)?;
            let format = if ascii { PgmFormat::Ascii } else { PgmFormat::Binary };
            write_atomic(&out, &pgm::encode_mask(&mask, format))?;
        }
        Command::Tile { mask, width, height, tile_size } => {
            let (w, h) = match (mask, width, height) {
                (Some(p), _, _) => {
                    let m = read_mask(&p)?;
                    (m.width(), m.height())
                }
                (None, Some(w), Some(h)) => (w, h),
                _ => return Err(CliError::Config("give a mask or --width and --height".into())),
            };
            let grid = tile(w, h, tile_size.unwrap_or(cfg.tile_size)).map_err(|e| CliError::Config(e.to_string()))?;
            let mut out = format!("# {} tiles, {} columns x {} rows\nindex,x,y,width,height\n", grid.len(), grid.columns, grid.rows);
            for (i, t) in grid.tiles.iter().enumerate() {
                let _ = writeln!(out, "{i},{},{},{},{}", t.origin_x, t.origin_y, t.width, t.height);
            }
            print!("{out}");
        }
        Command::Regions { mask } => {
            let m = read_mask(&mask)?;
            let mut out = String::from("region_id,pixels,min_x,min_y,max_x,max_y\n");
            for r in label_regions(&m, cfg.connectivity, cfg.min_region_px) {
                let b = r.bbox();
                let _ = writeln!(out, "{},{},{},{},{},{}", r.region_id, r.len(), b.min_x, b.min_y, b.max_x, b.max_y);
            }
            print!("{out}");
        }
        Command::Extract { mask, out_dir } => {
            let m = read_mask(&mask)?;
            let field = vacuum_field(&m);
            let mut fid = Vec::new();
            for region in label_regions(&m, cfg.connectivity, cfg.min_region_px) {
                let points = select_salient_among(&field, region.pixels(), cfg.selection);
                if points.is_empty() {
                    eprintln!("region {}: no salient points", region.region_id);
                    continue;
                }
                let hull = convex_hull(&points.pixels()).map_err(|e| CliError::Invariant(e.to_string()))?;
                let name = format!("defect_{:04}.txt", region.region_id);
                write_atomic(&out_dir.join("points").join(&name), points.to_text().as_bytes())?;
                write_atomic(&out_dir.join("hulls").join(&name), hull.to_text().as_bytes())?;
                fid.push(maskpath_core::fidelity(&hull, &region));
            }
            write_atomic(&out_dir.join("fidelity.csv"), fidelity_csv(fid).as_bytes())?;
        }
        Command::Plan { hull, out, defect_id, frame } => {
            let cal = frame_calibration(&cfg, &frame)?;
            let poly = ConvexPolygon::from_text(&read_text(&hull)?).map_err(|e| CliError::input(&hull, e))?;
            let path = plan_path(&poly, &cal, &cfg.plan_options(), defect_id)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            for v in maskpath_core::validate_path(&path, cfg.max_points).violations {
                eprintln!("warning: {v:?}");
            }
            write_atomic(&out, write_waypoints(&[path]).as_bytes())?;
        }
        Command::MarkSim { waypoints, width, height, out, frame } => {
            let cal = frame_calibration(&cfg, &frame)?;
            let mut canvas = BinaryMask::new(width, height).map_err(|e| CliError::Config(e.to_string()))?;
            let mut clipped = 0;
            for file in &waypoints {
                let paths = read_waypoints(&read_text(file)?).map_err(|e| CliError::input(file, e))?;
                for (id, pts) in paths {
                    let path = MarkingPath::from_points(id, &pts, cfg.min_step_mm);
                    clipped += rasterize_onto(&mut canvas, &path, &cal, cfg.anchor());
                }
            }
            if clipped > 0 {
                eprintln!("warning: {clipped} waypoints outside the canvas");
            }
            write_atomic(&out, &pgm::encode_mask(&canvas, PgmFormat::Binary))?;
        }
        Command::Calibrate { width, height, leather_mm, origin_mm, out } => {
            let (lw, lh) = parse_pair("leather_mm", &leather_mm)?;
            let (ox, oy) = parse_pair("origin_mm", &origin_mm)?;
            let cal = PhysicalCalibration::calibrate(width, height, lw, lh, PhysicalPoint::new(ox, oy))
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_atomic(&out, cal.to_kv().as_bytes())?;
        }
        Command::Evaluate { pred, truth, counts, out } => {
            let eval = match (counts, pred, truth) {
                (Some(p), _, _) => {
                    let c = ConfusionCounts::from_kv(&read_text(&p)?).map_err(|e| CliError::input(&p, e))?;
                    Evaluation::from_counts(c, cfg.f1_mode())
                }
                (None, Some(pred), Some(truth)) => evaluate_dirs(&pred, &truth, &cfg.match_policy(), cfg.f1_mode())?,
                _ => return Err(CliError::Config("give --pred and --truth, or --counts".into())),
            };
            print!("{}", eval.to_table());
            if let Some(out) = out {
                write_atomic(&out, eval.to_csv().as_bytes())?;
            }
        }
        Command::Pipeline { masks, out, jobs } => {
            let mut cfg = cfg;
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            let summary = run_pipeline(&cfg, &masks, &out)?;
            for m in &summary.masks {
                match &m.error {
                    Some(e) => eprintln!("{}: error: {e}", m.file),
                    None => {
                        println!("{}: {} defects, {} waypoints", m.file, m.defects, m.waypoints);
                        for w in &m.warnings {
                            eprintln!("{}: warning: {w}", m.file);
                        }
                    }
                }
            }
            if summary.failed_files > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
