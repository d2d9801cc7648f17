use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chaosrand::bench::{self, CycleCostModel};
use chaosrand::config::{OutputFormat, Overrides, RunConfig, CONFIG_ENV};
use chaosrand::entropy::{HealthState, Quantity, SensorModel};
use chaosrand::generator::{EntropySpec, GeneratorKind, GeneratorSpec};
use chaosrand::stats::{BitStream, StatTest, TestReport, DEFAULT_ALPHA};
use chaosrand::Error;

const EXIT_TEST_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chaosrand",
    version,
    about = "Chaotic and LFSR random number generator workbench"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a generator stream.
    Gen(GenArgs),
    /// Run the statistical tests on a raw byte stream.
    Test(TestArgs),
    /// Measure throughput next to the modeled hardware latency.
    Bench(BenchArgs),
    /// Compare the logistic, pendulum and multi-LFSR generators.
    Compare(CompareArgs),
    /// Entropy source tools.
    #[command(subcommand)]
    Entropy(EntropyCommand),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    generator: Option<GeneratorKind>,
    /// JSON object merged into the generator parameters.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    #[arg(long)]
    count: Option<u64>,
    /// Write the effective configuration here.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Output file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Raw byte stream, `-` for stdin.
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Comma-separated test names; all tests by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_test)]
    tests: Vec<StatTest>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Generators to measure; defaults to the three compared designs.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    generator: Vec<GeneratorKind>,
    /// Output bytes per generator.
    #[arg(long, default_value_t = 1_000_000)]
    count: u64,
    /// JSON cycle cost model.
    #[arg(long)]
    cost_model: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Args)]
struct CompareArgs {
    /// Bits tested per generator.
    #[arg(long, default_value_t = bench::MIN_COMPARE_BITS)]
    bits: usize,
    /// Output bytes timed per generator.
    #[arg(long, default_value_t = 1_000_000)]
    count: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    format: ReportFormat,
    #[arg(long)]
    cost_model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EntropyCommand {
    /// Draw words from an entropy source and report its health.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Sensor,
    Replay,
    System,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Temperature,
    Humidity,
    Pressure,
}

#[derive(Args)]
struct InspectArgs {
    /// Source to inspect; the configured source by default.
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    /// Replay file of little-endian 32-bit words.
    #[arg(long, required_if_eq("source", "replay"))]
    path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = QuantityArg::Temperature)]
    quantity: QuantityArg,
    #[arg(long, default_value_t = 0x5EED)]
    sensor_seed: u64,
    #[arg(long, default_value_t = 16)]
    count: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Exhausted(_) => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_test(s: &str) -> Result<StatTest, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen(args) => gen(cli.config, args),
        Command::Test(args) => test(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Compare(args) => compare(args),
        Command::Entropy(EntropyCommand::Inspect(args)) => inspect(cli.config, args),
    }
}

fn base_config(path: Option<PathBuf>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Ok(RunConfig::from_json(&text)?)
        }
    }
}

fn read_json(path: &PathBuf) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn gen(config: Option<PathBuf>, args: GenArgs) -> Result<u8, Failure> {
    let seed = args.seed_file.as_ref().map(read_json).transpose()?;
    let overrides = Overrides {
        generator: args.generator,
        seed,
        format: args.format,
        count: args.count,
    };
    let config = base_config(config)?.resolve(&overrides)?;

    if let Some(path) = &args.record {
        config.save(path)?;
    }
    match &args.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            config.generate(&mut out)?;
        }
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            config.generate(&mut out)?;
        }
    }
    Ok(0)
}

fn read_input(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    let mut bytes = Vec::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_end(&mut bytes)?;
    } else {
        bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(bytes)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn test(args: TestArgs) -> Result<u8, Failure> {
    let tests = if args.tests.is_empty() {
        StatTest::ALL.to_vec()
    } else {
        args.tests
    };
    let stream = BitStream::from_bytes(read_input(&args.input)?)?;
    let reports = tests
        .iter()
        .map(|t| t.run(&stream, args.alpha))
        .collect::<Result<Vec<TestReport>, _>>()?;
    print_json(&reports)?;
    Ok(if reports.iter().any(TestReport::failed) {
        EXIT_TEST_FAILED
    } else {
        0
    })
}

fn cost_model(path: Option<PathBuf>) -> Result<CycleCostModel, Failure> {
    match path {
        None => Ok(CycleCostModel::default()),
        Some(path) => serde_json::from_value(read_json(&path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
    }
}

fn bench_cmd(args: BenchArgs) -> Result<u8, Failure> {
    let model = cost_model(args.cost_model)?;
    let kinds = if args.generator.is_empty() {
        bench::COMPARED.to_vec()
    } else {
        args.generator
    };
    let reports = kinds
        .into_iter()
        .map(|k| bench::run_throughput(&GeneratorSpec::default_for(k), args.count, &model))
        .collect::<Result<Vec<_>, _>>()?;
    print_json(&reports)?;
    Ok(0)
}

fn compare(args: CompareArgs) -> Result<u8, Failure> {
    let model = cost_model(args.cost_model)?;
    let report = bench::compare(args.bits, args.alpha, &model, args.count)?;
    match args.format {
        ReportFormat::Json => print_json(&report)?,
        ReportFormat::Markdown => print!("{}", report.to_markdown()),
    }
    Ok(0)
}

#[derive(Serialize)]
struct Inspection {
    source: chaosrand::entropy::SourceKind,
    words: Vec<u32>,
    ones_fraction: f64,
    health: HealthState,
    error: Option<String>,
}

fn inspect(config: Option<PathBuf>, args: InspectArgs) -> Result<u8, Failure> {
    let spec = match args.source {
        None => base_config(config)?.entropy,
        Some(SourceArg::Sensor) => {
            let quantity = match args.quantity {
                QuantityArg::Temperature => Quantity::Temperature,
                QuantityArg::Humidity => Quantity::Humidity,
                QuantityArg::Pressure => Quantity::Pressure,
            };
            EntropySpec::SimulatedSensor(SensorModel::for_quantity(quantity, args.sensor_seed))
        }
        Some(SourceArg::Replay) => EntropySpec::ReplayFile {
            path: args.path.expect("clap enforces --path for replay"),
        },
        Some(SourceArg::System) => EntropySpec::System,
    };
    let mut source = spec.open()?;
    let mut words = Vec::with_capacity(args.count);
    let mut error = None;
    for _ in 0..args.count {
        match source.sample() {
            Ok(w) => words.push(w),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let ones: u32 = words.iter().map(|w| w.count_ones()).sum();
    let report = Inspection {
        source: source.kind(),
        ones_fraction: if words.is_empty() {
            0.0
        } else {
            ones as f64 / (32 * words.len()) as f64
        },
        words,
        health: source.health_check(),
        error,
    };
    print_json(&report)?;
    Ok(if report.error.is_some() {
        EXIT_TEST_FAILED
    } else {
        0
    })
}
