use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cotrans_cli::{exit, read_spec, replay, run, CliError, ReportEnvelope};

/// Verify cotranslation laws for a JSON problem spec.
///
/// Exit status: 0 all laws pass, 1 some law fails, 2 spec error, 3 numerical divergence.
#[derive(Parser, Debug)]
#[command(name = "cotrans", version)]
struct Args {
    /// Problem spec (JSON).
    #[arg(long, required_unless_present_any = ["list_laws", "print_schema"])]
    spec: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the trajectory Psi(t, t0) as CSV (evolve only).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override the window radius.
    #[arg(long)]
    radius: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override `LAW=VALUE`; repeatable.
    #[arg(long = "tol", value_name = "LAW=VALUE")]
    tol: Vec<String>,
    /// Print law ids with default tolerances and exit.
    #[arg(long)]
    list_laws: bool,
    /// Print the problem spec JSON schema and exit.
    #[arg(long)]
    print_schema: bool,
    /// Re-evaluate the argmax locations of an earlier report against the spec.
    #[arg(long, value_name = "REPORT")]
    replay: Option<PathBuf>,
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn main_inner(args: Args) -> Result<i32, CliError> {
    if args.list_laws {
        for (id, tol, desc) in cotrans_core::laws::ALL {
            println!("{id:<28} {tol:<8e} {desc}");
        }
        return Ok(exit::PASS);
    }
    if args.print_schema {
        print!("{}", cotrans_cli::spec::SCHEMA_JSON);
        return Ok(exit::PASS);
    }
    let path = args.spec.expect("required by clap");
    let mut spec = read_spec(&path)?;
    if let Some(r) = args.radius {
        spec.radius = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    for kv in &args.tol {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::spec(format!("--tol expects LAW=VALUE, got `{kv}`")))?;
        let v: f64 = v.parse().map_err(|_| CliError::spec(format!("--tol {k}: `{v}` is not a number")))?;
        spec.tolerances.insert(k.to_string(), v);
    }
    spec.validate()?;

    if let Some(rp) = args.replay {
        let text = std::fs::read_to_string(&rp).map_err(io_err(&rp))?;
        let report = ReportEnvelope::from_json(&text)?;
        let lines = replay(&report, &spec)?;
        let ok = lines.iter().all(|l| l.ok);
        for l in &lines {
            println!(
                "{} {:<28} recorded {:e} replayed {}",
                if l.ok { "ok  " } else { "FAIL" },
                l.law,
                l.recorded,
                l.replayed.map_or("-".to_string(), |r| format!("{r:e}"))
            );
        }
        println!("replay {}", if ok { "true" } else { "false" });
        return Ok(if ok { exit::PASS } else { exit::LAW_FAILURE });
    }

    let result = run(&spec)?;
    let json = result.report.to_json();
    match &args.out {
        Some(p) => std::fs::write(p, &json).map_err(io_err(p))?,
        None => print!("{json}"),
    }
    if let Some(p) = &args.csv {
        let csv = result.csv.ok_or_else(|| CliError::spec("--csv applies to ode objects only"))?;
        std::fs::write(p, csv).map_err(io_err(p))?;
    }
    Ok(result.report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cotrans: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
