use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use easytime::compiler::{compile, disassemble};
use easytime::dsl;
use easytime::model::{from_exchange, to_exchange, CompetitionModel};
use easytime::runtime::{init_race, RaceConfig, DEFAULT_DEBOUNCE_MS};
use easytime::simulator::{simulate, EventLog, Manifest, SimConfig};

/// Model, compile, simulate and replay timed multi-sport races.
#[derive(Parser)]
#[command(name = "easytime", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print the validation report.
    Validate { path: PathBuf },
    /// Rewrite a model in canonical form.
    Fmt {
        path: PathBuf,
        /// Print to standard output instead of rewriting the file.
        #[arg(long)]
        stdout: bool,
    },
    /// Convert a model between the DSL and the exchange document.
    Convert {
        path: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the compiled rule listing.
    Compile { path: PathBuf },
    /// Generate a synthetic event log and a manifest next to it.
    Simulate {
        path: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        competitors: u32,
        #[arg(long)]
        out: PathBuf,
        /// Probability of a duplicate read after each crossing.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Fold an event log into results.
    Replay {
        path: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Write the results document here.
        #[arg(long)]
        results_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DEBOUNCE_MS)]
        debounce_ms: u64,
        /// Comma-separated bibs; defaults to every bib in the log.
        #[arg(long, value_delimiter = ',')]
        roster: Option<Vec<u32>>,
    },
    /// Run the HTTP server until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Dsl,
    Exchange,
}

enum Failure {
    Invalid(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Dsl,
    Exchange,
}

fn format_of(path: &Path) -> Result<Format, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("et") => Ok(Format::Dsl),
        Some("json") => Ok(Format::Exchange),
        _ => Err(Failure::Usage(format!(
            "{}: cannot tell the model format; use a .et or .json file",
            path.display()
        ))),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Parses a model without validating it.
fn load(path: &Path) -> Result<(CompetitionModel, Format), Failure> {
    let format = format_of(path)?;
    let text = read(path)?;
    let model = match format {
        Format::Dsl => dsl::load(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
        Format::Exchange => from_exchange(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
    };
    Ok((model, format))
}

fn load_valid(path: &Path) -> Result<(CompetitionModel, Format), Failure> {
    let (model, format) = load(path)?;
    let report = model.validate();
    if !report.is_valid() {
        return Err(Failure::Invalid(format!("{}:\n{report}", path.display())));
    }
    for warning in &report.warnings {
        eprintln!("warning: {}: {}", warning.code, warning.message);
    }
    Ok((model, format))
}

fn render(model: &CompetitionModel, to: Format) -> Result<String, Failure> {
    match to {
        Format::Dsl => dsl::format(model).map_err(|e| Failure::Invalid(e.to_string())),
        Format::Exchange => Ok(to_exchange(model)),
    }
}

fn validate(path: &Path) -> Outcome {
    let (model, _) = load(path)?;
    let report = model.validate();
    println!("{report}");
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Invalid(String::new()))
    }
}

fn fmt(path: &Path, stdout: bool) -> Outcome {
    let (model, format) = load_valid(path)?;
    let text = render(&model, format)?;
    if stdout {
        print!("{text}");
        Ok(())
    } else {
        write(path, &text)
    }
}

fn convert(path: &Path, to: Target, out: Option<&Path>) -> Outcome {
    let (model, from) = load_valid(path)?;
    let to = match to {
        Target::Dsl => Format::Dsl,
        Target::Exchange => Format::Exchange,
    };
    let has_layout = model.nodes.iter().any(|n| n.position.is_some()) || model.agents.iter().any(|a| a.position.is_some());
    if to == Format::Dsl && has_layout {
        eprintln!("note: layout positions exist only in the exchange form and were dropped");
    } else if from == Format::Dsl && to == Format::Exchange {
        eprintln!("note: the DSL carries no layout, so no positions were written");
    }
    let text = render(&model, to)?;
    match out {
        Some(out) => write(out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compile_cmd(path: &Path) -> Outcome {
    let (model, _) = load_valid(path)?;
    let program = compile(&model).map_err(|e| Failure::Invalid(e.to_string()))?;
    print!("{}", disassemble(&program));
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn simulate_cmd(path: &Path, seed: u64, competitors: u32, out: &Path, noise: Option<f64>) -> Outcome {
    let (model, _) = load_valid(path)?;
    if let Some(p) = noise {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::Usage(format!("--noise {p} is not a probability")));
        }
    }
    let mut config = SimConfig::new(seed, competitors);
    config.duplicate_probability = noise;
    let log = simulate(&model, &config).map_err(|e| Failure::Invalid(e.to_string()))?;
    write(out, &log.to_text())?;
    write(&manifest_path(out), &Manifest::new(&model, &config, &log).to_json())?;
    eprintln!("wrote {} events to {}", log.events.len(), out.display());
    Ok(())
}

fn replay_cmd(
    path: &Path,
    events: &Path,
    results_out: Option<&Path>,
    debounce_ms: u64,
    roster: Option<Vec<u32>>,
) -> Outcome {
    let (model, _) = load_valid(path)?;
    let program = compile(&model).map_err(|e| Failure::Invalid(e.to_string()))?;
    let log = EventLog::parse(&read(events)?)
        .map_err(|e| Failure::Invalid(format!("{}:{}: {}", events.display(), e.line, e.message)))?;
    let roster = roster.unwrap_or_else(|| {
        let bibs: BTreeSet<u32> = log.events.iter().map(|e| e.competitor).filter(|b| *b != 0).collect();
        bibs.into_iter().collect()
    });
    let mut state = init_race(program, &roster, RaceConfig::with_debounce(debounce_ms))
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    for event in &log.events {
        if let Err(e) = state.apply_event(*event) {
            eprintln!("warning: skipped event #{}: {e}", event.seq);
        }
    }
    let table = state.results();
    if let Some(out) = results_out {
        let mut doc = serde_json::to_string_pretty(&table).expect("results serialize");
        doc.push('\n');
        write(out, &doc)?;
    }
    print!("{}", table.render_text());
    Ok(())
}

fn serve(addr: &str) -> Outcome {
    let config = easytime_server::Config::from_env().map_err(|e| Failure::Usage(e.to_string()))?;
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime.block_on(async {
        let data_dir = config.data_dir.display().to_string();
        let state = easytime_server::AppState::open(config).map_err(|e| Failure::Io(format!("{data_dir}: {e}")))?;
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::Io(format!("{addr}: {e}")))?;
        let bound = listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
        eprintln!("listening on http://{bound}");
        easytime_server::serve(listener, state)
            .await
            .map_err(|e| Failure::Io(e.to_string()))
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { path } => validate(&path),
        Command::Fmt { path, stdout } => fmt(&path, stdout),
        Command::Convert { path, to, out } => convert(&path, to, out.as_deref()),
        Command::Compile { path } => compile_cmd(&path),
        Command::Simulate {
            path,
            seed,
            competitors,
            out,
            noise,
        } => simulate_cmd(&path, seed, competitors, &out, noise),
        Command::Replay {
            path,
            events,
            results_out,
            debounce_ms,
            roster,
        } => replay_cmd(&path, &events, results_out.as_deref(), debounce_ms, roster),
        Command::Serve { addr } => serve(&addr),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !failure.message().is_empty() {
                eprintln!("error: {}", failure.message());
            }
            ExitCode::from(failure.code())
        }
    }
}
