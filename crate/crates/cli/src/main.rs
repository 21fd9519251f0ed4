use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lna_forge::explorer::{
    self, ChannelGrid, Provenance, SpecFilter, SweepKind, SweepPlan, SweepRecord, SweepResult,
};
use lna_forge::inductors;
use lna_forge::parallel::Execution;
use lna_forge::report;
use lna_forge::synth::{SynthOptions, SynthTarget, Synthesizer};
use lna_forge::{load_card, TechnologyCard};

/// Design-space exploration for inductively degenerated CMOS LNAs.
#[derive(Parser, Debug)]
#[command(name = "lna-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spiral inductor library.
    Lib {
        #[command(subcommand)]
        action: LibAction,
    },
    /// Synthesize one design point and print its record.
    Synth(SynthArgs),
    /// Sweep a grid of design points.
    Sweep(SweepArgs),
    /// Summarize a sweep result (CSV or JSON).
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum LibAction {
    /// Build the library from the card's geometry grid and write it as CSV.
    Build {
        #[arg(long)]
        tech: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Gain target (dB).
    #[arg(long)]
    gain: f64,
    /// Drain current (A).
    #[arg(long)]
    id: f64,
    /// Width of M1 (m).
    #[arg(long)]
    w1: f64,
    /// Channel length (m).
    #[arg(long)]
    lch: f64,
    #[arg(long)]
    tech: Option<PathBuf>,
    /// Gain tolerance (dB).
    #[arg(long, default_value_t = 0.5)]
    tol: f64,
    /// S11/S22 ceiling across the band (dB).
    #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
    floor: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Wxid,
    Gainxw,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    tech: Option<PathBuf>,
    /// Channel length with its width grid, `l_ch:w_lo:w_hi:w_step` (m). Repeatable.
    #[arg(long = "channel")]
    channels: Vec<String>,
    /// Drain currents (A), comma separated.
    #[arg(long, value_delimiter = ',')]
    ids: Option<Vec<f64>>,
    /// Gain targets (dB), comma separated.
    #[arg(long, value_delimiter = ',')]
    gains: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    floor: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ReportArgs {
    path: PathBuf,
    /// Named requirement set.
    #[arg(long, value_parser = ["zigbee"])]
    filter: Option<String>,
    /// NF ceiling (dB); overrides the named filter.
    #[arg(long)]
    max_nf: Option<f64>,
    /// IIP3 floor (dBm); overrides the named filter.
    #[arg(long, allow_negative_numbers = true)]
    min_iip3: Option<f64>,
    /// Card whose hash is reported for CSV input, which carries no provenance.
    #[arg(long)]
    tech: Option<PathBuf>,
}

/// Ran to completion, but the design space (or the one point) is empty.
struct Infeasible;

fn read_card(path: Option<&Path>) -> Result<TechnologyCard> {
    Ok(match path {
        Some(p) => load_card(p)?,
        None => TechnologyCard::default_130nm(),
    })
}

/// Load the card and print its hash.
fn card(path: Option<&Path>) -> Result<TechnologyCard> {
    let tech = read_card(path)?;
    println!("tech: {}", tech.hash());
    Ok(tech)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn parse_channel(text: &str) -> Result<ChannelGrid> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow!("bad --channel {text:?}: {e}"))?;
    match parts[..] {
        [l_ch, lo, hi, step] if step > 0.0 && hi >= lo => {
            Ok(ChannelGrid::stepped(l_ch, lo, hi, step))
        }
        _ => bail!(
            "bad --channel {text:?}: expected l_ch:w_lo:w_hi:w_step with w_hi >= w_lo and step > 0"
        ),
    }
}

fn lib_build(tech: Option<&Path>, out: &Path) -> Result<()> {
    let tech = card(tech)?;
    let lib = inductors::build_library(&tech)?;
    inductors::write_library_csv(&lib, create(out)?)?;
    println!("library: {} geometries -> {}", lib.len(), out.display());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<Option<Infeasible>> {
    let tech = card(args.tech.as_deref())?;
    let target = SynthTarget {
        gain_db: args.gain,
        gain_tol_db: args.tol,
        id: args.id,
        w1: args.w1,
        l_ch: args.lch,
        match_floor_db: args.floor,
    };
    let synth = Synthesizer::new(&tech, SynthOptions::default())?;
    let candidate = synth.synthesize(&target)?;
    let one = SweepResult {
        provenance: Provenance {
            tech_hash: tech.hash(),
            engine_version: explorer::ENGINE_VERSION.to_string(),
            kind: None,
        },
        records: vec![SweepRecord::from(&candidate)],
    };
    let stdout = io::stdout();
    explorer::write_csv(&one, stdout.lock())?;
    Ok((!candidate.verdict.is_feasible()).then_some(Infeasible))
}

fn sweep(args: &SweepArgs) -> Result<Option<Infeasible>> {
    let tech = card(args.tech.as_deref())?;
    let kind = match args.kind {
        Kind::Wxid => SweepKind::WxId,
        Kind::Gainxw => SweepKind::GainxW,
    };
    let mut plan = SweepPlan::new(kind);
    if !args.channels.is_empty() {
        plan.channels = args
            .channels
            .iter()
            .map(|c| parse_channel(c))
            .collect::<Result<_>>()?;
    }
    if let Some(ids) = &args.ids {
        plan.ids = ids.clone();
    }
    if let Some(gains) = &args.gains {
        plan.gains_db = gains.clone();
    }
    if let Some(tol) = args.tol {
        plan.gain_tol_db = tol;
    }
    if let Some(floor) = args.floor {
        plan.match_floor_db = floor;
    }
    let result = explorer::run_sweep(&plan, &tech, Execution::FromEnv)?;
    let mut out = create(&args.out)?;
    match args.format {
        Format::Csv => explorer::write_csv(&result, &mut out)?,
        Format::Json => explorer::write_json(&result, &mut out)?,
    }
    out.flush()?;
    let feasible = result.records.iter().filter(|r| r.is_feasible()).count();
    println!(
        "sweep {}: {} points, {} feasible -> {}",
        kind,
        result.records.len(),
        feasible,
        args.out.display()
    );
    Ok((feasible == 0).then_some(Infeasible))
}

fn load_result(path: &Path, tech: Option<&Path>) -> Result<SweepResult> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let reader = BufReader::new(file);
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        Ok(explorer::read_json(reader)?)
    } else {
        let tech = read_card(tech)?;
        let provenance = Provenance {
            tech_hash: tech.hash(),
            engine_version: explorer::ENGINE_VERSION.to_string(),
            kind: None,
        };
        Ok(explorer::read_csv(reader, provenance)?)
    }
}

fn report_cmd(args: &ReportArgs) -> Result<Option<Infeasible>> {
    let result = load_result(&args.path, args.tech.as_deref())?;
    let named = args.filter.as_deref().map(|name| match name {
        "zigbee" => (name.to_string(), SpecFilter::zigbee()),
        _ => unreachable!("clap restricts filter names"),
    });
    let filter = match (named, args.max_nf, args.min_iip3) {
        (None, None, None) => None,
        (named, max_nf, min_iip3) => {
            let (name, mut f) =
                named.unwrap_or_else(|| ("custom".to_string(), SpecFilter::default()));
            if max_nf.is_some() {
                f.max_nf_db = max_nf;
            }
            if min_iip3.is_some() {
                f.min_iip3_dbm = min_iip3;
            }
            Some((name, f))
        }
    };
    let text = report::summary(&result, filter.as_ref().map(|(n, f)| (n.as_str(), f)));
    print!("{text}");
    let pass = match &filter {
        Some((_, f)) => explorer::spec_filter(&result.records, f).len(),
        None => result.records.iter().filter(|r| r.is_feasible()).count(),
    };
    Ok((pass == 0).then_some(Infeasible))
}

fn run(cli: Cli) -> Result<Option<Infeasible>> {
    match cli.command {
        Command::Lib {
            action: LibAction::Build { tech, out },
        } => lib_build(tech.as_deref(), &out).map(|_| None),
        Command::Synth(args) => synth(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Report(args) => report_cmd(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Infeasible)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
