use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use segnoise::eval::{emit_report, evaluate_ann_vs_ann, sweep, sweep_to_csv};
use segnoise::noise::{apply_noise, ConfigFile, Gaussian, NoiseConfig, NoiseKind, NoiseMode, Tier};
use segnoise::prompt::{generate_prompts, prompts_to_jsonl, PromptKind};
use segnoise::synth::{generate, render_pgm, CorpusSpec};
use segnoise::{parse_dataset, serialize_dataset, Dataset};

/// Annotation noise injection and measurement for COCO instance
/// segmentation datasets.
///
/// Exit status: 0 on success, 1 on invalid input or configuration, 2 on
/// I/O failure.
#[derive(Parser)]
#[command(name = "segnoise", version)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "SEGNOISE_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clean synthetic corpus.
    Synth {
        /// Corpus spec (JSON); omitted keys take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the spec seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the spec image count.
        #[arg(long)]
        n_images: Option<usize>,
        /// Also write one flat-color PGM per image into this directory.
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Corrupt a dataset and write it with its change log.
    Corrupt {
        input: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to the output path with extension `changelog.jsonl`.
        #[arg(long)]
        changelog: Option<PathBuf>,
    },
    /// Emit one point or box prompt per instance as JSON lines.
    Prompts {
        input: PathBuf,
        #[arg(long, default_value = "point")]
        kind: PromptKind,
        /// Random on-mask points, or boxes with one jittered corner.
        #[arg(long)]
        noisy: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Score a noisy dataset against a clean one; writes `.csv` and `.json`.
    Eval {
        clean: PathBuf,
        noisy: PathBuf,
        /// Boundary band width in pixels; defaults to 2% of each image diagonal.
        #[arg(long)]
        band_d: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Evaluate clean, low, medium and high corruptions into one CSV.
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        band_d: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Noise flags. Each mirrors a config-file key and overrides it.
#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Tier>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<NoiseMode>,
    /// Approximation noise as `MU,SIGMA`.
    #[arg(long, value_parser = parse_gaussian)]
    approx: Option<Gaussian>,
    /// Localization noise as `MU,SIGMA`.
    #[arg(long, value_parser = parse_gaussian)]
    loc: Option<Gaussian>,
    /// Scale noise as `MU,SIGMA`.
    #[arg(long, value_parser = parse_gaussian)]
    scale: Option<Gaussian>,
    #[arg(long)]
    p_class: Option<f64>,
    #[arg(long)]
    p_delete: Option<f64>,
    /// Comma-separated noise types for composite mode.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    enabled: Option<Vec<NoiseKind>>,
    /// `per_coordinate` or `shared`.
    #[arg(long, value_parser = parse_signs)]
    signs: Option<segnoise::geometry::SignMode>,
}

fn parse_gaussian(s: &str) -> Result<Gaussian, String> {
    let (mu, sigma) = s.split_once(',').ok_or("expected MU,SIGMA")?;
    let mu = mu.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let sigma = sigma.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Gaussian::new(mu, sigma))
}

fn parse_kind(s: &str) -> Result<NoiseKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown noise type {s:?}"))
}

fn parse_signs(s: &str) -> Result<segnoise::geometry::SignMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown sign mode {s:?}"))
}

impl NoiseArgs {
    fn resolve(&self) -> anyhow::Result<NoiseConfig> {
        let mut file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| segnoise::Error::Config(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    file.$field = Some(v);
                }
            )*};
        }
        set!(preset, seed, mode, approx, loc, scale, p_class, p_delete, enabled, signs);
        Ok(file.resolve()?)
    }
}

fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dataset(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn check_distinct(inputs: &[&Path], out: &Path) -> anyhow::Result<()> {
    if let Some(i) = inputs.iter().find(|i| same_file(i, out)) {
        bail!(segnoise::Error::Validation(format!(
            "output {} would overwrite input {}",
            out.display(),
            i.display()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth {
            spec,
            seed,
            n_images,
            render,
            out,
        } => {
            let mut s = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    CorpusSpec::from_json(&text)?
                }
                None => CorpusSpec::default(),
            };
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = n_images {
                s.n_images = v;
            }
            let d = generate(&s)?;
            write(&out, &serialize_dataset(&d))?;
            if let Some(dir) = render {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for img in &d.images {
                    write(&dir.join(format!("{:06}.pgm", img.id)), &render_pgm(&d, img.id)?)?;
                }
            }
            println!(
                "{}",
                serde_json::json!({"images": d.images.len(), "annotations": d.annotations.len()})
            );
        }
        Command::Corrupt {
            input,
            noise,
            out,
            changelog,
        } => {
            let log_path = changelog.unwrap_or_else(|| out.with_extension("changelog.jsonl"));
            check_distinct(&[&input], &out)?;
            check_distinct(&[&input, &out], &log_path)?;
            let config = noise.resolve()?;
            let clean = read_dataset(&input)?;
            let (noisy, log) = apply_noise(&clean, &config)?;
            write(&out, &serialize_dataset(&noisy))?;
            write(&log_path, &log.to_jsonl())?;
            println!("{}", serde_json::to_string(&log.summary())?);
        }
        Command::Prompts {
            input,
            kind,
            noisy,
            seed,
            out,
        } => {
            check_distinct(&[&input], &out)?;
            let d = read_dataset(&input)?;
            let prompts = generate_prompts(&d, kind, noisy, seed)?;
            write(&out, &prompts_to_jsonl(&prompts))?;
            println!("{}", serde_json::json!({"prompts": prompts.len()}));
        }
        Command::Eval {
            clean,
            noisy,
            band_d,
            out,
        } => {
            for ext in ["csv", "json"] {
                check_distinct(&[&clean, &noisy], &out.with_extension(ext))?;
            }
            let c = read_dataset(&clean)?;
            let n = read_dataset(&noisy)?;
            let report = evaluate_ann_vs_ann(&c, &n, band_d)?;
            emit_report(&report, &out)?;
            println!(
                "{}",
                serde_json::json!({"mAP": report.mask.map(), "boundary_mAP": report.boundary.map()})
            );
        }
        Command::Sweep {
            input,
            noise,
            band_d,
            out,
        } => {
            check_distinct(&[&input], &out)?;
            let template = noise.resolve()?;
            let clean = read_dataset(&input)?;
            let rows = sweep(&clean, &template, band_d)?;
            write(&out, &sweep_to_csv(&rows))?;
            for r in &rows {
                println!("{}", serde_json::to_string(r)?);
            }
        }
    }
    Ok(())
}

/// 2 when an I/O error is anywhere in the chain, else 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.is::<std::io::Error>() || matches!(e.downcast_ref::<segnoise::Error>(), Some(segnoise::Error::Io(_)))
    });
    if io {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("segnoise: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("segnoise: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
