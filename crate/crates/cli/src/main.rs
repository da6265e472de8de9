use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use polarbox::analysis::{emit_curves, prototype, SweepRange, SweepSpec, DEFAULT_ASPECTS};
use polarbox::codec::{decode, encode};
use polarbox::descent::{boundary_sweep_compare, fit_polar, FitConfig};
use polarbox::geom::rotated_iou;
use polarbox::io::{self, fmt_sig, Annotation, AnnotationRecord, ParsedAnnotations};
use polarbox::loss::LossConfig;
use polarbox::metrics::{evaluate, rotated_nms};
use polarbox::targets::{assemble_detections, build_targets, GridDims};

const N_SWEEP: [usize; 6] = [4, 6, 8, 10, 12, 16];

#[derive(Parser)]
#[command(
    name = "polarbox",
    version,
    about = "Polar encodings for oriented bounding boxes"
)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Number of polar samples per box.
    #[arg(long = "n", global = true, default_value_t = 8, value_parser = clap::value_parser!(u32).range(3..=4096))]
    n: u32,
    /// Output stride of the target maps.
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=1024))]
    downsample: u32,
    /// Rotated IOU needed for a detection to match a ground-truth box.
    #[arg(long, global = true, default_value_t = 0.5, value_parser = unit_interval)]
    iou_thr: f64,
    /// Rotated IOU above which NMS suppresses the lower-scoring box.
    #[arg(long, global = true, default_value_t = 0.1, value_parser = unit_interval)]
    nms_thr: f64,
    /// Minimum heatmap peak score kept as a detection.
    #[arg(long, global = true, default_value_t = 0.1, value_parser = unit_interval)]
    score_thr: f64,
    /// Maximum detections per image.
    #[arg(long, global = true, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    top_k: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (directory for `targets`, PR curve for `eval`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode and decode every box, reporting the IOU against the original.
    Roundtrip {
        annotations: PathBuf,
        /// Fail when the smallest IOU is below this value.
        #[arg(long, default_value_t = 0.0, value_parser = unit_interval)]
        floor: f64,
        /// Repeat the roundtrip for N in 4, 6, 8, 10, 12, 16.
        #[arg(long)]
        sweep: bool,
    },
    /// Score detections against ground truth (AP, best F1, PR curve).
    Eval { gt: PathBuf, det: PathBuf },
    /// Emit analysis curves as CSV.
    Analyze(AnalyzeArgs),
    /// Rotated non-maximum suppression on a detection file.
    Nms { det: PathBuf },
    /// Write heatmap, offset and encoding target maps for every image.
    Targets {
        annotations: PathBuf,
        /// Image width in pixels; defaults to the largest x coordinate.
        #[arg(long)]
        width: Option<u32>,
        /// Image height in pixels; defaults to the largest y coordinate.
        #[arg(long)]
        height: Option<u32>,
    },
    /// Decode detections from target maps written by `targets`.
    Detect {
        /// Directory holding `<image>.heatmap.csv`, `.offsets.csv` and `.encodings.csv`.
        maps: PathBuf,
    },
    /// Fit a polar encoding to one annotated box by gradient descent.
    Fit {
        annotations: PathBuf,
        /// Image to take the box from; defaults to the first.
        #[arg(long)]
        image: Option<String>,
        /// Index of the box within the image.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = polarbox::descent::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = polarbox::descent::DEFAULT_LEARNING_RATE)]
        lr: f64,
        /// Relative noise on the initial distances.
        #[arg(long, default_value_t = 0.3)]
        perturbation: f64,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    mode: Mode,
    /// Width-to-height ratio of the prototype box.
    #[arg(long, default_value_t = 2.0)]
    aspect: f64,
    /// Aspect ratios for `iou-sensitivity`.
    #[arg(long, value_delimiter = ',')]
    aspects: Vec<f64>,
    /// Sample counts for `s-theta`; defaults to `--n`.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    /// Rotation of the second box for `d-phi`.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, allow_negative_numbers = true)]
    start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Scale each `s-theta` curve to a maximum of 1.
    #[arg(long)]
    normalize: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    STheta,
    DPhi,
    IouSensitivity,
    BoundaryCompare,
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = &cli.run;
    let n = cfg.n as usize;
    match &cli.cmd {
        Command::Roundtrip {
            annotations,
            floor,
            sweep,
        } => roundtrip(cfg, &read_annotations(annotations)?, *floor, *sweep),
        Command::Eval { gt, det } => {
            let gt = read_annotations(gt)?;
            let det = read_annotations(det)?;
            let empty = AnnotationRecord {
                image_id: String::new(),
                boxes: Vec::new(),
            };
            let mut ids: Vec<&str> = gt
                .records
                .iter()
                .chain(&det.records)
                .map(|r| r.image_id.as_str())
                .collect();
            ids.sort_unstable();
            ids.dedup();
            let pairs: Vec<_> = ids
                .iter()
                .map(|id| {
                    (
                        gt.get(id).unwrap_or(&empty).obbs(),
                        det.get(id).unwrap_or(&empty).detections(),
                    )
                })
                .collect();
            let report = evaluate(
                pairs.iter().map(|(g, d)| (g.as_slice(), d.as_slice())),
                cfg.iou_thr,
            )?;
            println!("gt {}", report.n_gt);
            println!("detections {}", report.n_det);
            println!("true_positives {}", report.true_positives);
            println!("ap {}", fmt_sig(report.ap, 12));
            println!("best_f1 {}", fmt_sig(report.best_f1, 12));
            match &cfg.out {
                Some(path) => write_file(path, &io::pr_curve_to_csv(&report.curve)),
                None => Ok(()),
            }
        }
        Command::Analyze(args) => analyze(cfg, args),
        Command::Nms { det } => {
            let parsed = read_annotations(det)?;
            let records: Vec<AnnotationRecord> = parsed
                .records
                .iter()
                .map(|r| AnnotationRecord {
                    image_id: r.image_id.clone(),
                    boxes: rotated_nms(&r.detections(), cfg.nms_thr)
                        .into_iter()
                        .map(|d| Annotation {
                            obb: d.obb,
                            score: Some(d.score),
                        })
                        .collect(),
                })
                .collect();
            emit(cfg, &io::write_annotations(&records))
        }
        Command::Targets {
            annotations,
            width,
            height,
        } => {
            let parsed = read_annotations(annotations)?;
            let Some(dir) = &cfg.out else {
                bail!("`targets` needs --out <directory>");
            };
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let r = cfg.downsample as usize;
            for rec in &parsed.records {
                let boxes = rec.obbs();
                let (w, h) = image_size(&boxes, *width, *height);
                let gt = build_targets(&boxes, n, GridDims::for_image(w, h, r)?, r)
                    .with_context(|| format!("image {}", rec.image_id))?;
                for warning in &gt.warnings {
                    eprintln!("warning: image {}: {warning:?}", rec.image_id);
                }
                write_file(
                    &dir.join(format!("{}.heatmap.csv", rec.image_id)),
                    &io::grid_to_csv(&gt.heatmap),
                )?;
                write_file(
                    &dir.join(format!("{}.offsets.csv", rec.image_id)),
                    &io::grid_to_csv(&gt.offsets),
                )?;
                write_file(
                    &dir.join(format!("{}.encodings.csv", rec.image_id)),
                    &io::grid_to_csv(&gt.encodings),
                )?;
            }
            Ok(())
        }
        Command::Detect { maps } => detect(cfg, maps),
        Command::Fit {
            annotations,
            image,
            index,
            steps,
            lr,
            perturbation,
        } => {
            let parsed = read_annotations(annotations)?;
            let rec = match image {
                Some(id) => parsed.get(id).with_context(|| format!("no image {id:?}"))?,
                None => parsed
                    .records
                    .first()
                    .context("annotation file has no boxes")?,
            };
            let gt = rec
                .boxes
                .get(*index)
                .with_context(|| format!("image {} has no box {index}", rec.image_id))?
                .obb;
            let fit_cfg = FitConfig {
                steps: *steps,
                learning_rate: *lr,
                init_perturbation: *perturbation,
                seed: cfg.seed,
                loss: LossConfig::default(),
            };
            let trace = fit_polar(&gt, &fit_cfg, n)?;
            eprintln!(
                "initial loss {} iou {}; final loss {} iou {}",
                fmt_sig(trace.initial().loss, 6),
                fmt_sig(trace.initial().iou, 6),
                fmt_sig(trace.last().loss, 6),
                fmt_sig(trace.last().iou, 6)
            );
            emit(cfg, &io::trace_to_csv(&trace))
        }
    }
}

fn roundtrip(cfg: &RunConfig, parsed: &ParsedAnnotations, floor: f64, sweep: bool) -> Result<()> {
    let ns = if sweep {
        N_SWEEP.to_vec()
    } else {
        vec![cfg.n as usize]
    };
    let mut csv = String::from("image_id,box,n,iou\n");
    let mut worst = f64::INFINITY;
    for &n in &ns {
        let mut ious = Vec::new();
        for rec in &parsed.records {
            for (k, a) in rec.boxes.iter().enumerate() {
                let iou = rotated_iou(&a.obb, &decode(&encode(&a.obb, n)?)?);
                let _ = writeln!(csv, "{},{k},{n},{}", rec.image_id, fmt_sig(iou, 12));
                ious.push(iou);
            }
        }
        if ious.is_empty() {
            println!("n {n} boxes 0");
            continue;
        }
        let mean = ious.iter().sum::<f64>() / ious.len() as f64;
        let min = ious.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.min(min);
        println!(
            "n {n} boxes {} mean {} min {}",
            ious.len(),
            fmt_sig(mean, 12),
            fmt_sig(min, 12)
        );
    }
    if let Some(path) = &cfg.out {
        write_file(path, &csv)?;
    }
    if worst < floor {
        bail!(
            "minimum roundtrip IOU {} is below the floor {floor}",
            fmt_sig(worst, 12)
        );
    }
    Ok(())
}

fn analyze(cfg: &RunConfig, a: &AnalyzeArgs) -> Result<()> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let (start, end) = match a.mode {
        Mode::STheta | Mode::DPhi => (0.0, PI),
        Mode::IouSensitivity => (0.0, FRAC_PI_2),
        Mode::BoundaryCompare => (-0.1, 0.1),
    };
    let default_step = match a.mode {
        Mode::BoundaryCompare => 1e-3,
        _ => polarbox::analysis::DEFAULT_STEP,
    };
    let range = SweepRange::new(
        a.start.unwrap_or(start),
        a.end.unwrap_or(end),
        a.step.unwrap_or(default_step),
    );
    let curves = match a.mode {
        Mode::STheta => emit_curves(&SweepSpec::STheta {
            aspect: a.aspect,
            ns: if a.ns.is_empty() {
                vec![cfg.n as usize]
            } else {
                a.ns.clone()
            },
            range,
            normalize: a.normalize,
        })?,
        Mode::DPhi => emit_curves(&SweepSpec::DPhi {
            aspect: a.aspect,
            theta: a.theta,
            range,
        })?,
        Mode::IouSensitivity => emit_curves(&SweepSpec::IouSensitivity {
            aspects: if a.aspects.is_empty() {
                DEFAULT_ASPECTS.to_vec()
            } else {
                a.aspects.clone()
            },
            range,
        })?,
        Mode::BoundaryCompare => {
            let (polar, baseline) = boundary_sweep_compare(
                &prototype(a.aspect)?,
                &range.values()?,
                cfg.n as usize,
                &LossConfig::default(),
            )?;
            eprintln!(
                "max adjacent jump: polar {} baseline {}",
                fmt_sig(polar.max_jump(), 6),
                fmt_sig(baseline.max_jump(), 6)
            );
            vec![polar, baseline]
        }
    };
    emit(cfg, &io::curves_to_csv(&curves))
}

fn detect(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let mut ids: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|s| s.strip_suffix(".heatmap.csv"))
                .map(str::to_string)
        })
        .collect();
    ids.sort();
    let mut records = Vec::new();
    for id in ids {
        let load = |kind: &str| -> Result<_> {
            let path = dir.join(format!("{id}.{kind}.csv"));
            io::parse_grid_csv(&read_text(&path)?).with_context(|| path.display().to_string())
        };
        let assembly = assemble_detections(
            &load("heatmap")?,
            &load("offsets")?,
            &load("encodings")?,
            cfg.downsample as usize,
            cfg.score_thr,
            cfg.top_k as usize,
        )
        .with_context(|| format!("image {id}"))?;
        for (peak, err) in &assembly.skipped {
            eprintln!(
                "warning: image {id}: skipped peak at ({}, {}): {err}",
                peak.x, peak.y
            );
        }
        records.push(AnnotationRecord {
            image_id: id,
            boxes: assembly
                .detections
                .iter()
                .map(|d| Annotation {
                    obb: d.obb,
                    score: Some(d.score),
                })
                .collect(),
        });
    }
    emit(cfg, &io::write_annotations(&records))
}

fn image_size(
    boxes: &[polarbox::OrientedBox],
    width: Option<u32>,
    height: Option<u32>,
) -> (usize, usize) {
    let extent = |f: fn(&polarbox::Point2) -> f64| {
        boxes
            .iter()
            .flat_map(|b| b.corners().iter().map(f))
            .fold(1.0, f64::max)
            .ceil() as usize
    };
    (
        width.map_or_else(|| extent(|p| p.x), |w| w as usize),
        height.map_or_else(|| extent(|p| p.y), |h| h as usize),
    )
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_annotations(path: &Path) -> Result<ParsedAnnotations> {
    let parsed =
        io::parse_annotations(&read_text(path)?).with_context(|| path.display().to_string())?;
    for w in &parsed.warnings {
        eprintln!("warning: {}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(parsed)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
