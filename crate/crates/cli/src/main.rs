use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relcomp::verify::{
    report_all, verify_cohomology, verify_filtration, verify_lemma_reps, verify_perfectness,
    verify_roots, verify_structure, with_threads, CheckResult, Fault, RunConfig, RunReport, Status,
};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "relcomp",
    version,
    about = "Exact checks on congruence subgroups of SL_n and the Lie algebras u_l"
)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// Matrix size.
    #[arg(long, global = true, default_value_t = 3)]
    n: usize,
    /// Largest truncation level l of u_l.
    #[arg(long = "l-max", global = true, default_value_t = 3)]
    l_max: usize,
    /// Truncation order of Z[T]/T^r.
    #[arg(long, global = true, default_value_t = 4)]
    r: usize,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
    #[arg(long, global = true, env = "RELCOMP_THREADS", default_value_t = 1)]
    threads: usize,
    /// Skip cohomology of u_l when the degree-3 cochain space is larger than this.
    #[arg(long = "max-cochains", global = true, default_value_t = 2_000_000)]
    max_cochains: usize,
    /// Write the JSON report here (a Markdown summary goes next to it).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true, conflicts_with = "markdown")]
    json: bool,
    /// Print the Markdown summary on stdout.
    #[arg(long, global = true)]
    markdown: bool,
    /// Include wall-clock timings in the output.
    #[arg(long, global = true)]
    timings: bool,
    #[arg(long = "inject-fault", global = true, hide = true)]
    inject_fault: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Commutator levels and the leading-coefficient maps rho_i.
    Filtration,
    /// Unique m-th roots of unipotent elements over Q.
    Roots,
    /// Smith normal form of the bracket map of sl_n(Z).
    Perfectness {
        #[arg(long = "n-min", default_value_t = 2)]
        n_min: usize,
        #[arg(long = "n-max", default_value_t = 5)]
        n_max: usize,
    },
    /// Antisymmetry, Jacobi and d^2 = 0 for u_l, l = 2..=l-max.
    Structure,
    /// H^1 and H^2 of u_l as sl_n-modules.
    Cohomology,
    /// Decompositions of the adjoint square and exterior powers (n = 3 or 4).
    LemmaReps,
    /// Every check; requires --output.
    Report,
}

fn config(o: &Opts) -> RunConfig {
    RunConfig {
        n: o.n,
        l_max: o.l_max,
        r: o.r,
        seed: o.seed,
        samples: o.samples,
        threads: o.threads,
        max_cochains: o.max_cochains,
        fault: o.inject_fault.then_some(Fault::StructureConstant),
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn run_command(cmd: &Command, cfg: &RunConfig) -> Result<Vec<CheckResult>, String> {
    Ok(match cmd {
        Command::Filtration => vec![verify_filtration(cfg)],
        Command::Roots => vec![verify_roots(cfg)],
        Command::Perfectness { n_min, n_max } => {
            if *n_min < 2 || n_min > n_max {
                return Err(format!("need 2 <= n-min <= n-max, got {n_min}..{n_max}"));
            }
            vec![verify_perfectness(*n_min, *n_max)]
        }
        Command::Structure => verify_structure(cfg),
        Command::Cohomology => verify_cohomology(cfg),
        Command::LemmaReps => vec![verify_lemma_reps(cfg.n).map_err(|e| e.to_string())?],
        Command::Report => report_all(cfg).results,
    })
}

fn write_outputs(path: &Path, report: &RunReport, timings: bool) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, report.to_json(timings))?;
    fs::write(path.with_extension("md"), report.to_markdown(timings))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let o = &cli.opts;
    let cfg = config(o);
    if let Err(e) = cfg.validate() {
        return usage(e);
    }
    if matches!(cli.command, Command::Report) && o.output.is_none() {
        return usage("report needs --output");
    }

    let results = match with_threads(cfg.threads, || run_command(&cli.command, &cfg)) {
        Ok(Ok(r)) => r,
        Ok(Err(msg)) => return usage(msg),
        Err(e) => return usage(e),
    };
    let report = RunReport::new(cfg, results);

    if let Some(path) = &o.output {
        if let Err(e) = write_outputs(path, &report, o.timings) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_FAIL);
        }
    }
    if o.json {
        print!("{}", report.to_json(o.timings));
    } else if o.markdown {
        print!("{}", report.to_markdown(o.timings));
    } else {
        for r in &report.results {
            let st = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("[{st}] {} ({})", r.check_id, params.join(", "));
        }
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
