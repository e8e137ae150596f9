mod format;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use gatecheck::optimize::{polish, search_s3};
use gatecheck::tables::{build_row_sequence, compute_row, paper_table, TableRow};
use gatecheck::{
    bloch_trajectory, parse_angle, parse_sequence, serialize_sequence, ErrorKind, ErrorModel, Evaluator, ProtocolId,
    S3Params, Sequence, Variant,
};

use crate::format::sig;

#[derive(Parser)]
#[command(name = "gatecheck", version, about = "Robustness analysis of Rydberg-blockade phase gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate F, P and C of a protocol under one error model.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "intensity")]
        error: ErrorKind,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        eps: f64,
    },
    /// Recompute one of the published coefficient tables as CSV.
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
    /// Export the Bloch-sphere trajectory of one initial state as CSV.
    Traj {
        #[command(flatten)]
        source: Source,
        /// Computational basis state, e.g. 01 or 11.
        #[arg(long, default_value = "11")]
        initial: String,
        /// Samples per pulse.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Output file; CSV goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for or polish the three-qubit block parameters.
    OptimizeCcz {
        #[arg(long, default_value_t = 0, conflicts_with = "polish_paper")]
        seed: u64,
        /// Polish the published parameters instead of searching.
        #[arg(long)]
        polish_paper: bool,
    },
    /// Parse a sequence file, re-serialize it and compare.
    Roundtrip {
        file: PathBuf,
        /// Also require the file to be in canonical form.
        #[arg(long)]
        strict: bool,
    },
    /// Write a catalog sequence as JSON.
    Export {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Catalog protocol: Jaksch, Levine, I, II, II.a, I.a, II.b, III or CCZ.
    #[arg(long, required_unless_present = "seq", conflicts_with = "seq")]
    protocol: Option<ProtocolId>,
    /// JSON sequence file.
    #[arg(long)]
    seq: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    variant: u8,
    /// Gate phase, e.g. pi, pi/2 or 0.25pi.
    #[arg(long, default_value = "pi", value_parser = angle)]
    phase: f64,
}

fn angle(text: &str) -> Result<f64, String> {
    parse_angle(text).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<gatecheck::Error> for Failure {
    fn from(e: gatecheck::Error) -> Self {
        use gatecheck::Error as E;
        match e {
            E::UnknownState { .. } | E::InvalidArgument(_) | E::Angle(_) | E::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Failure>;

impl Source {
    fn load(&self) -> Result<Sequence, Failure> {
        if let Some(path) = &self.seq {
            let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            return Ok(parse_sequence(&text)?);
        }
        let id = self.protocol.expect("clap enforces a source");
        Ok(id.build(Variant::from_number(self.variant)?, self.phase)?)
    }
}

fn write_target(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn verify(source: &Source, kind: ErrorKind, eps: f64) -> CmdResult {
    let seq = source.load()?;
    let ev = Evaluator::new(&seq)?;
    let ideal = ev.report(&ErrorModel::new(kind, 0.0))?;
    let r = ev.report(&ErrorModel::new(kind, eps))?;
    println!("sequence={}", seq.label());
    println!("error={kind} eps={}", sig(eps, 6));
    println!("F={}", sig(r.f, 6));
    println!("P={}", sig(r.p, 6));
    println!("C={}", sig(r.c, 6));
    println!("duration={}", sig(seq.nominal_duration(), 6));
    let exact = 1.0 - ideal.f < 1e-9;
    if !exact {
        eprintln!("ideal infidelity {} exceeds 1e-9", sig(1.0 - ideal.f, 6));
    }
    Ok(if exact { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| sig(v, digits)).unwrap_or_default()
}

fn table(which: u8) -> CmdResult {
    let rows = paper_table(which)?;
    let computed: Vec<Result<Vec<TableRow>, gatecheck::Error>> =
        rows.par_iter().map(|row| compute_row(which, row, &build_row_sequence(row)?)).collect();
    let mut w = csv::Writer::from_writer(io::stdout());
    w.write_record([
        "table",
        "protocol",
        "variant",
        "model",
        "metric",
        "order",
        "coefficient",
        "exact",
        "paper_order",
        "paper_value",
        "abs_diff",
        "duration",
        "paper_duration",
    ])?;
    for block in computed {
        for r in block? {
            w.write_record([
                r.table.to_string(),
                r.protocol,
                r.variant.to_string(),
                r.model,
                r.metric,
                r.order.to_string(),
                sig(r.coefficient, 4),
                sig(r.exact, 4),
                r.paper_order.to_string(),
                opt(r.paper_value, 4),
                opt(r.abs_diff, 4),
                sig(r.duration, 6),
                sig(r.paper_duration, 6),
            ])?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn traj(source: &Source, initial: &str, samples: usize, out: &Option<PathBuf>) -> CmdResult {
    let seq = source.load()?;
    let t = bloch_trajectory(&seq, initial, samples)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "x", "y", "z", "subsystem"])?;
    for s in &t.samples {
        let c = |v: f64| sig(if v.abs() < 1e-12 { 0.0 } else { v }, 6);
        w.write_record([c(s.time), c(s.x), c(s.y), c(s.z), s.subsystem.clone()])?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    write_target(out, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    let last = t.samples.last().expect("trajectory has a start sample");
    let summary = format!(
        "rows={} final_z={} accumulated_phase={} subsystem={}",
        t.samples.len(),
        sig(last.z, 6),
        sig(t.accumulated_phase(), 6),
        last.subsystem
    );
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(ExitCode::SUCCESS)
}

fn optimize_ccz(seed: u64, polish_paper: bool) -> CmdResult {
    let doc = if polish_paper {
        let r = polish(&S3Params::PRINTED)?;
        json!({
            "mode": "polish",
            "start": S3Params::PRINTED,
            "params": r.params,
            "objective": r.objective,
            "duration": r.params.ccz_duration(),
            "evaluations": r.evaluations,
        })
    } else {
        let r = search_s3(seed)?;
        json!({
            "mode": "search",
            "seed": seed,
            "params": r.params,
            "objective": r.objective,
            "duration": r.duration,
            "restart": r.restart,
            "other_branches": r.other_branches,
        })
    };
    println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
    Ok(ExitCode::SUCCESS)
}

fn roundtrip(file: &PathBuf, strict: bool) -> CmdResult {
    let text = fs::read_to_string(file).map_err(|e| Failure::Runtime(format!("{}: {e}", file.display())))?;
    let seq = parse_sequence(&text)?;
    let canonical = serialize_sequence(&seq);
    let again = parse_sequence(&canonical)?;
    if again != seq {
        println!("lossy: re-parsed sequence differs");
        return Ok(ExitCode::from(1));
    }
    let first_diff = text.trim_end().lines().zip(canonical.lines()).position(|(a, b)| a != b).or_else(|| {
        let (a, b) = (text.trim_end().lines().count(), canonical.lines().count());
        (a != b).then_some(a.min(b))
    });
    match first_diff {
        None => {
            println!("identical");
            Ok(ExitCode::SUCCESS)
        }
        Some(line) => {
            println!("equivalent; canonical form differs from line {}", line + 1);
            Ok(if strict { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("GATECHECK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("GATECHECK_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Runtime(e.to_string()))
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match &cli.command {
        Command::Verify { source, error, eps } => verify(source, *error, *eps),
        Command::Table { which } => table(*which),
        Command::Traj { source, initial, samples, out } => traj(source, initial, *samples, out),
        Command::OptimizeCcz { seed, polish_paper } => optimize_ccz(*seed, *polish_paper),
        Command::Roundtrip { file, strict } => roundtrip(file, *strict),
        Command::Export { source, out } => {
            let seq = source.load()?;
            write_target(out, &(serialize_sequence(&seq) + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
