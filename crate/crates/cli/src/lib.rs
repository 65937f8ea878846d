//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 1 when the pipeline rejects well-formed input, 2 for usage,
//! I/O and document errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use pulsegraph::ad9910::{self, Ad9910Config, Ad9910Program};
use pulsegraph::bench::{self, Ir};
use pulsegraph::json;
use pulsegraph::rfsoc::{self, PulseDataRecord, RfsocConfig, RfsocOutput};
use pulsegraph::sim;
use pulsegraph::transform;
use pulsegraph::{Error, SampledWaveform};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "pulsegraph", version, about = "Pulse graph transpiler, sampler and device simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Ad9910,
    Rfsoc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Benchmark {
    Sbc,
    Vqa,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IrArg {
    Graph,
    Direct,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower a graph or schedule to device records.
    Transpile {
        #[arg(long, value_enum)]
        target: Target,
        /// Graph document (or a schedule document).
        #[arg(long, required_unless_present = "schedule")]
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "input")]
        schedule: Option<PathBuf>,
        /// Channel name to physical index map, required for schedules.
        #[arg(long)]
        channel_map: Option<PathBuf>,
        /// Variable values.
        #[arg(long)]
        bind: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample a graph to CSV.
    Sample {
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bind: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Simulate transpiled device output to CSV.
    Simulate {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        input: PathBuf,
        /// Channel to simulate when the input holds several.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a benchmark and write timing statistics.
    Bench {
        #[arg(value_enum)]
        benchmark: Benchmark,
        #[arg(long, value_enum)]
        ir: IrArg,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = bench::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Parse and validate a graph or schedule document.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Pipeline(Error),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 2,
            Failure::Pipeline(e) if e.is_parse_error() => 2,
            Failure::Pipeline(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {failure}");
            if let Failure::Pipeline(e) = &failure {
                if let Error::NoMatch { tried, .. } = e.root_cause() {
                    eprintln!("rules tried: {}", tried.join(", "));
                }
            }
            failure.exit_code()
        }
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Transpile {
            target,
            input,
            schedule,
            channel_map,
            bind,
            output,
        } => {
            let path = input.or(schedule).expect("clap enforces one input");
            let doc = read_json(&path)?;
            let bindings = bind.map(|p| read_json(&p)).transpose()?;
            let bindings = bindings.map(|b| json::parse_bindings(&b)).transpose()?;
            let out = if json::is_schedule_document(&doc) {
                let map_path = channel_map
                    .ok_or_else(|| Failure::Usage("schedules need --channel-map".into()))?;
                let map = json::parse_channel_map(&read_json(&map_path)?)?;
                transpile_schedule(target, &doc, &map, bindings.as_ref())?
            } else {
                transpile_graph(target, &doc, bindings.as_ref())?
            };
            write_text(&output, &json::to_canonical_string(&out))
        }
        Command::Sample {
            rate,
            input,
            bind,
            output,
        } => {
            let (mut graph, root) = json::parse_graph(&read_json(&input)?)?;
            if let Some(b) = bind {
                transform::substitute(&mut graph, &json::parse_bindings(&read_json(&b)?)?)?;
            }
            let wave = graph.sample(root, rate)?;
            write_csv(&output, &wave)
        }
        Command::Simulate {
            target,
            input,
            channel,
            output,
        } => {
            let doc = read_json(&input)?;
            let wave = match target {
                Target::Ad9910 => {
                    let program: Ad9910Program = from_value(doc)?;
                    sim::simulate_ad9910(&program, &Ad9910Config::default())?
                }
                Target::Rfsoc => {
                    let records = rfsoc_records(doc, channel.as_deref())?;
                    sim::simulate_rfsoc_channel(&records, &RfsocConfig::default())?
                }
            };
            write_csv(&output, &wave)
        }
        Command::Bench {
            benchmark,
            ir,
            depth,
            reps,
            trials,
            seed,
            output,
        } => {
            if trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let ir = match ir {
                IrArg::Graph => Ir::Graph,
                IrArg::Direct => Ir::Direct,
            };
            let result = match benchmark {
                Benchmark::Sbc => {
                    if reps == 0 {
                        return Err(Failure::Usage("--reps must be at least 1".into()));
                    }
                    bench::run_sbc(ir, trials, reps)?
                }
                Benchmark::Vqa => {
                    if depth == 0 {
                        return Err(Failure::Usage("--depth must be at least 1".into()));
                    }
                    bench::run_vqa(ir, depth, trials, seed)?
                }
            };
            write_text(&output, &json::to_canonical_string(&result.to_json()))
        }
        Command::Validate { input } => {
            let doc = read_json(&input)?;
            if json::is_schedule_document(&doc) {
                let s = json::parse_schedule(&doc)?;
                println!("ok: schedule with {} channel(s)", s.channels().len());
            } else {
                let (graph, root) = json::parse_graph(&doc)?;
                println!("ok: {} graph with {} node(s)", graph.node(root).kind(), graph.len());
            }
            Ok(())
        }
    }
}

fn transpile_graph(target: Target, doc: &Value, bindings: Option<&transform::Bindings>) -> CliResult<Value> {
    let (mut graph, root) = json::parse_graph(doc)?;
    if let Some(b) = bindings {
        transform::substitute(&mut graph, b)?;
    }
    Ok(match target {
        Target::Ad9910 => to_value(&ad9910::transpile_ad9910(&mut graph, root, &Ad9910Config::default())?),
        Target::Rfsoc => to_value(&rfsoc::transpile_rfsoc_channel(&mut graph, root, &RfsocConfig::default())?),
    })
}

fn transpile_schedule(
    target: Target,
    doc: &Value,
    map: &BTreeMap<String, usize>,
    bindings: Option<&transform::Bindings>,
) -> CliResult<Value> {
    if matches!(target, Target::Ad9910) {
        return Err(Failure::Usage("schedules are supported for --target rfsoc only".into()));
    }
    let mut schedule = json::parse_schedule(doc)?;
    if let Some(b) = bindings {
        schedule.bind_parameters(b)?;
    }
    let records = rfsoc::transpile_schedule_rfsoc(&schedule, map, &RfsocConfig::default())?;
    Ok(json!({ "channels": to_value(&records) }))
}

/// Accepts a record list, a `{"channels": {...}}` document, or one munch
/// result (placed on channel 0).
fn rfsoc_records(doc: Value, channel: Option<&str>) -> CliResult<Vec<PulseDataRecord>> {
    if doc.is_array() {
        return from_value(doc);
    }
    if let Some(channels) = doc.get("channels") {
        let mut channels: BTreeMap<String, Vec<PulseDataRecord>> = from_value(channels.clone())?;
        let name = match channel {
            Some(c) => c.to_string(),
            None if channels.len() == 1 => channels.keys().next().cloned().unwrap_or_default(),
            None => return Err(Failure::Usage("input holds several channels; pass --channel".into())),
        };
        return channels
            .remove(&name)
            .ok_or_else(|| Failure::Pipeline(Error::UnknownChannel(name)));
    }
    let output: RfsocOutput = from_value(doc)?;
    Ok(vec![rfsoc::output_record(&output, 0, &RfsocConfig::default())?])
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    json::parse_value(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| Failure::Usage(format!("malformed input: {e}")))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("records serialize")
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, format!("{text}\n")).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, wave: &SampledWaveform) -> CliResult<()> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let file = fs::File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    wave.write_csv(&mut out).map_err(io)?;
    out.flush().map_err(io)
}
