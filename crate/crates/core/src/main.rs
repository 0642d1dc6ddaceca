//! `huh`: offline explanation generation and read-only serving.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use huh_core::bundle::{export_static, generate_bundle, lookup, ExplanationBundle};
use huh_core::config::{ConfigLayer, Settings};
use huh_core::emissions::{estimate, summary_line, EmissionsReport, RunLedger, SharedLedger};
use huh_core::fixture::write_demo;
use huh_core::provider::{MockProvider, Provider, RemoteProvider, RetryPolicy};
use huh_core::segment::{
    restore_punctuation, segment, ProviderPunctuation, PunctuationStrategy,
};
use huh_core::server::{serve, ServeConfig};
use huh_core::transcript::{parse, to_cue_json, IngestOptions, Transcript, TranscriptFormat};
use huh_core::Level;

/// Joined cue text per punctuation request.
const PUNCTUATION_CHUNK_CHARS: usize = 4000;

#[derive(Parser)]
#[command(name = "huh", version, about = "Pre-generated two-level explanations for lecture videos")]
struct Cli {
    /// TOML config file; defaults to ./huh.toml when present.
    #[arg(long, global = true, env = "HUH_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an SRT, WebVTT or cue-JSON transcript and print it as cue JSON.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Restore sentence punctuation and print the result as cue JSON.
    Punctuate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = PunctuateWith::Rule)]
        with: PunctuateWith,
        /// Used when punctuating `--with provider`.
        #[arg(long, value_enum, default_value_t = ProviderKind::Mock)]
        provider: ProviderKind,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the sentences of a punctuated transcript with their times.
    Segment {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tuning: Tuning,
        /// Print JSON instead of one line per sentence.
        #[arg(long)]
        json: bool,
    },
    /// Generate explanations for every slot and write bundle.json and emissions.json.
    Generate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = ProviderKind::Mock)]
        provider: ProviderKind,
        /// How to punctuate first; `rule` leaves punctuated input unchanged.
        #[arg(long, value_enum, default_value_t = PunctuateWith::Rule)]
        punctuate: PunctuateWith,
        /// First slot boundary.
        #[arg(long, default_value_t = 0)]
        from_ms: u64,
        /// Last covered time; defaults to the transcript duration.
        #[arg(long)]
        to_ms: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Fixed creation timestamp for reproducible bundles.
        #[arg(long)]
        created_at: Option<String>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write a bundle as static JSON files (manifest plus one file per slot).
    Export {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Look up the explanation for a pause time in a bundle.
    Lookup {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        t_ms: u64,
        #[arg(long, default_value = "1")]
        level: Level,
    },
    /// Serve every bundle under a directory over HTTP.
    Serve {
        #[arg(long, env = "HUH_BUNDLE_DIR", default_value = ".")]
        bundle_dir: PathBuf,
        #[arg(long, env = "HUH_BIND")]
        bind: Option<String>,
        #[arg(long, env = "HUH_CACHE_MAX_AGE")]
        cache_max_age: Option<u64>,
        /// Seconds between bundle directory rescans; 0 disables.
        #[arg(long, default_value_t = 5)]
        refresh_secs: u64,
    },
    /// Convert a token ledger to kg CO2e.
    Emissions {
        /// emissions.json from `generate`, or a bare ledger.
        #[arg(long)]
        ledger: PathBuf,
        /// kg CO2e per token.
        #[arg(long, env = "HUH_FACTOR_KG_PER_TOKEN")]
        factor: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Write the bundled lecture and a complete mock run of it.
    DemoFixture {
        #[arg(long, default_value = "demo")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Transcript file (.srt, .vtt or .json).
    input: PathBuf,
    /// Overrides detection from the file extension.
    #[arg(long)]
    format: Option<TranscriptFormat>,
    /// Defaults to the file stem.
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long, default_value = "en")]
    language: String,
    #[arg(long, env = "HUH_OVERLAP_TOLERANCE_MS")]
    overlap_tolerance_ms: Option<u64>,
}

/// Settings that may also come from the environment or the config file.
#[derive(Args)]
struct Tuning {
    #[arg(long, env = "HUH_GAP_MS")]
    gap_ms: Option<u64>,
    #[arg(long, env = "HUH_MAX_CONTEXT_CHARS")]
    max_context_chars: Option<usize>,
    /// Comma-separated, e.g. "Dr.,Prof.".
    #[arg(long, env = "HUH_ABBREVIATIONS", value_delimiter = ',')]
    abbreviations: Option<Vec<String>>,
    #[arg(long, env = "HUH_INTERVAL_MS")]
    interval_ms: Option<u64>,
    #[arg(long, env = "HUH_ABORT_THRESHOLD")]
    abort_threshold: Option<f64>,
    #[arg(long, env = "HUH_MAX_OUTPUT_TOKENS")]
    max_output_tokens: Option<u32>,
    #[arg(long, env = "HUH_TEMPERATURE")]
    temperature: Option<f32>,
    #[arg(long, env = "HUH_IN_FLIGHT")]
    in_flight: Option<usize>,
    #[arg(long, env = "HUH_API_BASE_URL")]
    api_base_url: Option<String>,
    #[arg(long, env = "HUH_MODEL")]
    model: Option<String>,
    #[arg(long, env = "HUH_TEMPLATES_DIR")]
    templates_dir: Option<PathBuf>,
    #[arg(long, env = "HUH_FACTOR_KG_PER_TOKEN")]
    factor_kg_per_token: Option<f64>,
}

impl Tuning {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            gap_ms: self.gap_ms,
            max_context_chars: self.max_context_chars,
            abbreviations: self.abbreviations.clone(),
            interval_ms: self.interval_ms,
            abort_threshold: self.abort_threshold,
            max_output_tokens: self.max_output_tokens,
            temperature: self.temperature,
            in_flight: self.in_flight,
            api_base_url: self.api_base_url.clone(),
            model: self.model.clone(),
            templates_dir: self.templates_dir.clone(),
            factor_kg_per_token: self.factor_kg_per_token,
            ..ConfigLayer::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Mock,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PunctuateWith {
    /// Keep the transcript as it is.
    None,
    /// Pause and capitalization heuristic.
    Rule,
    /// Ask the provider; words are checked to be unchanged.
    Provider,
}

fn settings(file: &ConfigLayer, cli: ConfigLayer) -> Result<Settings> {
    Ok(cli.or(file.clone()).resolve()?)
}

fn read_transcript(input: &InputArgs, settings: &Settings) -> Result<Transcript> {
    let format = match input.format {
        Some(f) => f,
        None => TranscriptFormat::from_path(&input.input)
            .with_context(|| format!("cannot tell the format of {}; pass --format", input.input.display()))?,
    };
    let bytes = std::fs::read(&input.input).with_context(|| format!("reading {}", input.input.display()))?;
    let video_id = input.video_id.clone().unwrap_or_else(|| {
        input
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".into())
    });
    let opts = IngestOptions {
        video_id,
        language: input.language.clone(),
        overlap_tolerance_ms: input.overlap_tolerance_ms.unwrap_or(settings.overlap_tolerance_ms),
    };
    parse(&bytes, format, &opts).with_context(|| format!("parsing {}", input.input.display()))
}

fn make_provider(kind: ProviderKind, settings: &Settings) -> Result<Arc<dyn Provider>> {
    Ok(match kind {
        ProviderKind::Mock => Arc::new(MockProvider::new()),
        ProviderKind::Remote => {
            let key = std::env::var("HUH_API_KEY").ok().filter(|k| !k.is_empty());
            if key.is_none() {
                tracing::warn!("HUH_API_KEY is not set; sending requests without authorization");
            }
            Arc::new(RemoteProvider::new(settings.remote_config(key))?)
        }
    })
}

async fn punctuate(
    transcript: &Transcript,
    with: PunctuateWith,
    settings: &Settings,
    provider: Option<&dyn Provider>,
    ledger: Option<&SharedLedger>,
) -> Result<Transcript> {
    let templates = settings.templates()?;
    let strategy = match (with, provider) {
        (PunctuateWith::None, _) => return Ok(transcript.clone()),
        (PunctuateWith::Rule, _) => PunctuationStrategy::Rule { gap_ms: settings.gap_ms },
        (PunctuateWith::Provider, Some(provider)) => PunctuationStrategy::Provider(ProviderPunctuation {
            provider,
            template: &templates.punctuation,
            retry: RetryPolicy::default(),
            max_chunk_chars: PUNCTUATION_CHUNK_CHARS,
            max_output_tokens: settings.max_output_tokens.max(PUNCTUATION_CHUNK_CHARS as u32 / 2),
            ledger,
        }),
        (PunctuateWith::Provider, None) => bail!("provider punctuation needs a provider"),
    };
    Ok(restore_punctuation(transcript, &strategy).await?)
}

/// Print a line to stdout; a closed pipe (`huh ... | head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {
        emit(&format!($($arg)*))?
    };
}

fn emit(line: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => emit(text),
    }
}

fn load_report(path: &Path) -> Result<RunLedger> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(report) = serde_json::from_slice::<EmissionsReport>(&bytes) {
        return Ok(report.ledger());
    }
    let ledger: RunLedger = serde_json::from_slice(&bytes)
        .with_context(|| format!("{} is neither an emissions report nor a ledger", path.display()))?;
    Ok(ledger)
}

async fn run(cli: Cli) -> Result<()> {
    let file = ConfigLayer::discover(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, out } => {
            let s = settings(&file, ConfigLayer::default())?;
            let t = read_transcript(&input, &s)?;
            write_or_print(out.as_deref(), &to_cue_json(&t))
        }
        Command::Punctuate {
            input,
            with,
            provider,
            tuning,
            out,
        } => {
            let s = settings(&file, tuning.layer())?;
            let t = read_transcript(&input, &s)?;
            let provider = make_provider(provider, &s)?;
            let p = punctuate(&t, with, &s, Some(provider.as_ref()), None).await?;
            write_or_print(out.as_deref(), &to_cue_json(&p))
        }
        Command::Segment { input, tuning, json } => {
            let s = settings(&file, tuning.layer())?;
            let t = read_transcript(&input, &s)?;
            let seg = segment(&t, &s.abbreviations());
            if json {
                say!("{}", serde_json::to_string_pretty(&seg.sentences)?);
            } else {
                for sentence in &seg.sentences {
                    say!("{}\t{}\t{}\t{}", sentence.index, sentence.start_ms, sentence.end_ms, sentence.text);
                }
                if let Some(rest) = seg.trailing_fragment() {
                    eprintln!("unterminated trailing text: {rest}");
                }
            }
            Ok(())
        }
        Command::Generate {
            input,
            provider,
            punctuate: with,
            from_ms,
            to_ms,
            out_dir,
            created_at,
            tuning,
        } => {
            let s = settings(&file, tuning.layer())?;
            let raw = read_transcript(&input, &s)?;
            let provider = make_provider(provider, &s)?;
            let punct_ledger = SharedLedger::new(raw.video_id.clone());
            let transcript = punctuate(&raw, with, &s, Some(provider.as_ref()), Some(&punct_ledger)).await?;
            let cfg = huh_core::bundle::BundleConfig {
                coverage_start_ms: from_ms,
                coverage_end_ms: to_ms,
                created_at,
                ..s.bundle_config()?
            };
            let run = generate_bundle(&transcript, provider.as_ref(), &cfg).await?;
            let mut ledger = punct_ledger.into_inner();
            ledger.merge(run.ledger);
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            run.bundle.save(&out_dir.join("bundle.json"))?;
            let report = EmissionsReport::new(ledger, s.factor_kg_per_token)?.with_no_dedup_totals(run.no_dedup_totals);
            report.write(&out_dir.join("emissions.json"))?;
            let est = estimate(report.totals, report.factor_kg_per_token)?;
            eprintln!(
                "{} slots per level, {} provider calls",
                run.bundle.slot_count_per_level(),
                run.provider_calls
            );
            say!("{}", summary_line(&report.video_id, report.totals, &est));
            Ok(())
        }
        Command::Export { bundle, out_dir } => {
            let b = ExplanationBundle::load(&bundle)?;
            let m = export_static(&b, &out_dir)?;
            say!("{} slots per level written to {}", m.slot_count_per_level, out_dir.display());
            Ok(())
        }
        Command::Lookup { bundle, t_ms, level } => {
            let b = ExplanationBundle::load(&bundle)?;
            say!("{}", serde_json::to_string(&lookup(&b, t_ms, level))?);
            Ok(())
        }
        Command::Serve {
            bundle_dir,
            bind,
            cache_max_age,
            refresh_secs,
        } => {
            let s = settings(
                &file,
                ConfigLayer {
                    bind,
                    cache_max_age,
                    ..ConfigLayer::default()
                },
            )?;
            let cfg = ServeConfig {
                bind: s.bind,
                cache_max_age: s.cache_max_age,
                refresh: (refresh_secs > 0).then(|| std::time::Duration::from_secs(refresh_secs)),
                ..ServeConfig::new(bundle_dir)
            };
            Ok(serve(cfg).await?)
        }
        Command::Emissions { ledger, factor, json } => {
            let s = settings(
                &file,
                ConfigLayer {
                    factor_kg_per_token: factor,
                    ..ConfigLayer::default()
                },
            )?;
            let ledger = load_report(&ledger)?;
            ledger.check()?;
            let est = estimate(ledger.totals, s.factor_kg_per_token)?;
            if json {
                say!("{}", serde_json::to_string_pretty(&est)?);
            } else {
                say!("{}", summary_line(&ledger.video_id, ledger.totals, &est));
            }
            Ok(())
        }
        Command::DemoFixture { out_dir } => {
            let s = settings(&file, ConfigLayer::default())?;
            let out = write_demo(&out_dir, s.factor_kg_per_token).await?;
            say!("demo written to {}", out_dir.display());
            say!("serve it with: huh serve --bundle-dir {}", out.bundle.parent().unwrap_or(&out_dir).display());
            Ok(())
        }
    }
}

/// Causes joined with `: `, skipping those the previous message already quotes.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "huh=info,huh_core=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(1)
        }
    }
}
