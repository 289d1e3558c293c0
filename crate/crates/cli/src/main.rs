use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tracing::info;

use framedup::eval::{confusion_bar, evaluate_corpus, Summary};
use framedup::forgery::{generate_corpus, load_corpus, read_manifest, read_truth, synth_clip};
use framedup::localize::{inconsistency_series, score_boundaries};
use framedup::media::{heatmap_pgm, heatmap_svg, open_clip, write_pnm};
use framedup::{detect_traced, localize, par, DetectionReport, LocalizationResult, RunConfig, VideoClip};

#[derive(Parser)]
#[command(name = "framedup", version, about = "Detect and localize frame duplication in video")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    t2: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    wind: Option<usize>,
    #[arg(long, global = true)]
    window_length: Option<usize>,
    #[arg(long, global = true)]
    overlap: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write distance-matrix heatmaps (PGM and SVG).
    #[arg(long, global = true)]
    heatmaps: bool,
    /// Mark a video manipulated when its score exceeds this value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Find duplicated frame runs in each input clip.
    Detect { inputs: Vec<PathBuf> },
    /// Detect, then decide which run of each match is the inserted copy.
    Localize { inputs: Vec<PathBuf> },
    /// Write a labelled corpus built from the inputs, or from synthetic clips.
    Generate { inputs: Vec<PathBuf> },
    /// Score a generated corpus.
    Evaluate { manifest: PathBuf },
    /// Render per-clip confusion bars from a manifest and an evaluation summary.
    Report { manifest: PathBuf, summary: PathBuf },
}

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    jobs: usize,
}

#[derive(Serialize)]
struct Output<'a, T: Serialize> {
    meta: Meta,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct DetectOutput<'a> {
    input: String,
    manipulated: Option<bool>,
    report: &'a DetectionReport,
}

#[derive(Serialize)]
struct LocalizeOutput<'a> {
    input: String,
    report: &'a DetectionReport,
    localizations: Vec<LocalizationResult>,
}

fn resolve_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let d = &mut cfg.detect;
    if let Some(v) = o.t2 {
        d.t2 = v;
    }
    if let Some(v) = o.eps {
        d.eps = v;
    }
    if let Some(v) = o.window_length {
        d.window_length = v;
    }
    if let Some(v) = o.overlap {
        d.overlap = v;
    }
    if let Some(v) = o.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = o.wind {
        cfg.wind = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if o.jobs.is_some() {
        cfg.jobs = o.jobs;
    }
    if let Some(v) = &o.out {
        cfg.out_dir = v.clone();
    }
    if o.threshold.is_some() {
        cfg.threshold = o.threshold;
    }
    cfg.heatmaps |= o.heatmaps;
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, jobs: usize, body: &T) -> Result<()> {
    let out = Output {
        meta: Meta {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            jobs,
        },
        body,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "clip".into())
}

fn inputs_or_config(cli_inputs: &[PathBuf], cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let inputs = if cli_inputs.is_empty() {
        cfg.inputs.clone()
    } else {
        cli_inputs.to_vec()
    };
    if inputs.is_empty() {
        bail!("no input clips given");
    }
    for p in &inputs {
        if !p.exists() {
            bail!("input not found: {}", p.display());
        }
    }
    Ok(inputs)
}

fn load(path: &Path, cfg: &RunConfig) -> Result<VideoClip> {
    open_clip(path, &cfg.pattern, cfg.fps, cfg.color_mode)
        .with_context(|| format!("reading {}", path.display()))
}

fn write_heatmaps(dir: &Path, name: &str, trace: &framedup::detect::DetectionTrace) -> Result<()> {
    let m = &trace.sequence_matrix;
    write_pnm(&dir.join(format!("{name}.coarse.pgm")), &heatmap_pgm(&m.values, m.size, m.size, 0.0))?;
    fs::write(dir.join(format!("{name}.coarse.svg")), heatmap_svg(&m.values, m.size, m.size, 4))?;
    for (k, f) in trace.fine_matrices.iter().enumerate() {
        let img = heatmap_pgm(&f.values, f.n_rows(), f.n_cols(), 0.0);
        write_pnm(&dir.join(format!("{name}.fine{k}.pgm")), &img)?;
    }
    Ok(())
}

fn cmd_detect(inputs: &[PathBuf], cfg: &RunConfig, jobs: usize, localize_runs: bool) -> Result<()> {
    for path in inputs_or_config(inputs, cfg)? {
        let clip = load(&path, cfg)?;
        let name = stem(&path);
        let (report, trace) = detect_traced(&clip, &cfg.detect)?;
        info!(input = %path.display(), matches = report.matches.len(), "detected");
        if cfg.heatmaps {
            write_heatmaps(&cfg.out_dir, &name, &trace)?;
        }
        let input = path.display().to_string();
        if localize_runs {
            let localizations = if report.matches.is_empty() {
                Vec::new()
            } else {
                let s = inconsistency_series(&score_boundaries(&clip, &cfg.scorer)?, cfg.lambda);
                report.matches.iter().map(|m| localize(m, &s, cfg.wind)).collect()
            };
            let out = cfg.out_dir.join(format!("{name}.localize.json"));
            let line = match localizations.first() {
                Some(l) => format!(
                    "{input}: duplicated {}..={} copied from {}..={}",
                    l.duplicated_range.0, l.duplicated_range.1, l.selected_range.0, l.selected_range.1
                ),
                None => format!("{input}: no duplication found"),
            };
            write_json(&out, jobs, &LocalizeOutput { input, report: &report, localizations })?;
            println!("{line}");
        } else {
            let manipulated = cfg.threshold.map(|t| report.is_manipulated(t));
            let out = cfg.out_dir.join(format!("{name}.detect.json"));
            let verdict = match manipulated {
                Some(true) => " (manipulated)",
                Some(false) => " (pristine)",
                None => "",
            };
            println!(
                "{input}: {} match(es), video score {}{verdict}",
                report.matches.len(),
                report.video_score
            );
            write_json(&out, jobs, &DetectOutput { input, manipulated, report: &report })?;
        }
    }
    Ok(())
}

fn cmd_generate(inputs: &[PathBuf], cfg: &RunConfig, jobs: usize) -> Result<()> {
    let g = &cfg.generate;
    let paths = if inputs.is_empty() { cfg.inputs.clone() } else { inputs.to_vec() };
    let sources: Vec<VideoClip> = if paths.is_empty() {
        (0..g.n_sources as u64)
            .map(|k| synth_clip(&g.synth, cfg.seed.wrapping_add(k)).map(|c| c.with_source_id(format!("synth-{k:02}"))))
            .collect::<framedup::Result<_>>()?
    } else {
        inputs_or_config(&paths, cfg)?
            .iter()
            .map(|p| load(p, cfg))
            .collect::<Result<_>>()?
    };
    let manifest = generate_corpus(&sources, g.n_manipulated, g.n_pristine, &g.corpus, cfg.seed, &cfg.out_dir)?;
    println!(
        "wrote {} clips ({} manipulated) to {}",
        manifest.items.len(),
        g.n_manipulated,
        cfg.out_dir.display()
    );
    info!(jobs, "corpus generated");
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn cmd_evaluate(manifest: &Path, cfg: &RunConfig, jobs: usize) -> Result<()> {
    let entries = load_corpus(manifest, cfg.color_mode)?;
    let summary = evaluate_corpus(&entries, &cfg.eval_config())?;
    write_json(&cfg.out_dir.join("summary.json"), jobs, &summary)?;
    let t = summary.localization;
    println!(
        "{} clips: video AUC {}, frame AUC {}, mean MCC {}, localization {}/{}/{} correct/incorrect/ambiguous",
        summary.items.len(),
        fmt_opt(summary.video_auc),
        fmt_opt(summary.frame_auc),
        fmt_opt(summary.mean_mcc),
        t.correct,
        t.incorrect,
        t.ambiguous
    );
    Ok(())
}

fn cmd_report(manifest_path: &Path, summary_path: &Path, cfg: &RunConfig) -> Result<()> {
    let manifest = read_manifest(manifest_path)?;
    let text = fs::read_to_string(summary_path).with_context(|| format!("reading {}", summary_path.display()))?;
    let summary: Summary = serde_json::from_str(&text).with_context(|| format!("parsing {}", summary_path.display()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let dir = cfg.out_dir.join("report");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut listing = String::new();
    let mut rendered = 0;
    for item in summary.items.iter().filter(|i| i.manipulated && !i.optout) {
        let Some(entry) = manifest.items.iter().find(|m| m.id == item.id) else {
            bail!("{} is in the summary but not in the manifest", item.id);
        };
        let truth = read_truth(&base.join(&entry.truth_path))?;
        let predicted: Vec<(usize, usize)> = item.located.iter().map(|l| l.duplicated_range).collect();
        let bar = confusion_bar(&truth, &predicted, None)?;
        fs::write(dir.join(format!("{}.svg", item.id)), bar.to_svg(2, 12))?;
        listing.push_str(&format!("{} mcc={}\n{}\n", item.id, fmt_opt(item.mcc), bar.to_text()));
        rendered += 1;
    }
    fs::write(dir.join("bars.txt"), listing)?;
    println!("rendered {rendered} confusion bars to {}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.opts)?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    par::with_jobs(cfg.jobs, || {
        let jobs = par::current_parallelism();
        match &cli.command {
            Command::Detect { inputs } => cmd_detect(inputs, &cfg, jobs, false),
            Command::Localize { inputs } => cmd_detect(inputs, &cfg, jobs, true),
            Command::Generate { inputs } => cmd_generate(inputs, &cfg, jobs),
            Command::Evaluate { manifest } => cmd_evaluate(manifest, &cfg, jobs),
            Command::Report { manifest, summary } => cmd_report(manifest, summary, &cfg),
        }
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
