use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use slh_feedback::netlist::{run, Netlist, OutputFormat};
use slh_feedback::{Error, ErrorClass};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Run an amplification-feedback netlist: compose, eliminate, integrate and
/// report observables.
#[derive(Parser, Debug)]
#[command(name = "slhfb", version)]
struct Cli {
    /// Netlist file.
    #[arg(long)]
    netlist: PathBuf,

    /// Output directory; without it the summary and data go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Sweep a parameter, `name=lo:hi:n`, in its declared unit. Each point
    /// writes to its own subdirectory of --out.
    #[arg(long)]
    sweep: Option<String>,

    /// Replace mode truncations, `label=dim[,label=dim...]`.
    #[arg(long = "truncation-override", value_delimiter = ',')]
    truncation_override: Vec<String>,

    /// Reserved; every task is deterministic.
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// Print the parsed netlist in canonical form and exit.
    #[arg(long)]
    print: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Parse => 2,
        ErrorClass::Physics => 3,
        ErrorClass::Numerical => 4,
        ErrorClass::Io => 1,
    }
}

fn usage(msg: String) -> Error {
    Error::parse(0, 0, msg)
}

fn parse_sweep(s: &str) -> Result<(String, Vec<f64>), Error> {
    let bad = || usage(format!("--sweep expects name=lo:hi:n, got `{s}`"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    let values = if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    Ok((name.trim().to_string(), values))
}

fn run_one(nl: &Netlist, out: Option<&Path>, format: OutputFormat) -> Result<(), Error> {
    let report = run(nl, out, format)?;
    print!("{}", report.summary);
    match out {
        Some(_) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
        }
        None => {
            let hash = slh_feedback::netlist::netlist_hash(nl);
            for t in &report.tables {
                print!("{}", t.render(format, report.task, &hash));
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    if cli.seed.is_some() {
        log::info!("--seed has no effect: the pipeline is deterministic");
    }
    let text = std::fs::read_to_string(&cli.netlist)?;
    let mut nl = Netlist::parse(&text)?;
    for o in &cli.truncation_override {
        let (label, dim) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("--truncation-override expects label=dim, got `{o}`")))?;
        let dim: usize = dim
            .trim()
            .parse()
            .map_err(|_| usage(format!("invalid truncation `{dim}`")))?;
        nl = nl.with_truncation(label.trim(), dim)?;
    }
    nl.resolve()?;
    if cli.print {
        print!("{nl}");
        return Ok(());
    }
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    match &cli.sweep {
        None => run_one(&nl, cli.out.as_deref(), format),
        Some(s) => {
            let (name, values) = parse_sweep(s)?;
            let out = cli
                .out
                .clone()
                .ok_or_else(|| usage("--sweep needs --out".to_string()))?;
            let points: Vec<(usize, Netlist)> = values
                .iter()
                .enumerate()
                .map(|(k, v)| nl.with_param(&name, *v).map(|n| (k, n)))
                .collect::<Result<_, _>>()?;
            let results: Vec<Result<(), Error>> = points
                .par_iter()
                .map(|(k, n)| {
                    let dir = out.join(format!("{name}_{k:03}"));
                    run(n, Some(&dir), format).map(|_| ())
                })
                .collect();
            for ((k, _), r) in points.iter().zip(&results) {
                let status = match r {
                    Ok(()) => "ok".to_string(),
                    Err(e) => format!("failed: {e}"),
                };
                println!("{name} = {:?}: {status}", values[*k]);
            }
            results.into_iter().collect()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let path = cli.netlist.display().to_string();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Parse { line: 0, .. } => eprintln!("slhfb: {}", e.to_string().trim_start_matches("0:0: ")),
                Error::Parse { .. } => eprintln!("{path}:{e}"),
                _ => eprintln!("slhfb: {e}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
