use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pint::error::Error;
use pint::harness::{run_experiment, sweep, verify_tables, ExperimentSpec};

#[derive(Parser)]
#[command(name = "pint", about = "Parallel-in-time BDF benchmark runner", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write convergence.csv / summary.txt.
    Run(RunArgs),
    /// Run one convergence history per value of a varied parameter.
    Sweep(SweepArgs),
    /// Re-run the published benchmark tables and report per-cell agreement.
    Verify {
        /// Directory for the verification report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// Flat key=value config file; CLI flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark problem 1..4.
    #[arg(long)]
    example: Option<u32>,
    /// BDF order 1..6.
    #[arg(long)]
    k: Option<usize>,
    /// Fractional order in (0, 1]; 1 selects the diffusion kernel.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed relaxation parameter in (0, 1).
    #[arg(long)]
    kappa: Option<f64>,
    /// "fixed" or "log" (kappa = 1/ln N clamped to 0.5).
    #[arg(long)]
    kappa_rule: Option<String>,
    /// Number of time steps.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Mesh size (1/h must be an integer).
    #[arg(long)]
    h: Option<f64>,
    /// Final time.
    #[arg(long, value_name = "T")]
    t: Option<f64>,
    /// Max-norm increment stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Worker count; omit for all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Interfacial width for the semilinear problem.
    #[arg(long)]
    eps_w: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ExperimentSpec, Error> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                ExperimentSpec::from_config_string(&text)?
            }
            None => ExperimentSpec::preset(self.example.unwrap_or(1))?,
        };
        if let Some(e) = self.example {
            // switching examples re-applies the preset before the overrides
            if spec.example != e {
                spec = ExperimentSpec::preset(e)?;
            }
        }
        if let Some(v) = self.k {
            spec.k = v;
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.kappa {
            spec.set("kappa", &v.to_string())?;
        }
        if let Some(v) = &self.kappa_rule {
            spec.set("kappa_rule", v)?;
        }
        if let Some(v) = self.n {
            spec.n_steps = v;
        }
        if let Some(v) = self.h {
            spec.h = v;
        }
        if let Some(v) = self.t {
            spec.t_final = v;
        }
        if let Some(v) = self.tol {
            spec.tol = v;
        }
        if let Some(v) = self.max_iters {
            spec.max_iters = v;
        }
        if let Some(v) = self.threads {
            spec.threads = Some(v);
        }
        if let Some(v) = &self.out {
            spec.out_dir = v.clone();
        }
        if let Some(v) = self.eps_w {
            spec.eps_w = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Parameter to vary: kappa, N, alpha, T, eps_w or k.
    #[arg(long)]
    vary: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Diverged { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not configuration errors
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run(args) => args.spec.resolve().and_then(|spec| {
            let outcome = run_experiment(&spec)?;
            let verdict = if outcome.report.converged {
                "converged in"
            } else {
                "stopped without converging after"
            };
            println!(
                "{verdict} {} iterations, {} ms; results in {}",
                outcome.report.iters,
                outcome.wall_ms,
                spec.out_dir.display()
            );
            Ok(())
        }),
        Command::Sweep(args) => args.spec.resolve().and_then(|spec| {
            let results = sweep(&spec, &args.vary, &args.values)?;
            for (value, outcome) in &results {
                let gamma = outcome
                    .report
                    .gamma_est
                    .map(|g| format!("{g:.5e}"))
                    .unwrap_or_else(|| "n/a".into());
                println!("{}={value}: iters={} gamma={gamma}", args.vary, outcome.report.iters);
            }
            println!("wrote {}", spec.out_dir.join("sweep.csv").display());
            Ok(())
        }),
        Command::Verify { out } => (|| {
            let report = verify_tables()?;
            let text = report.render();
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .and_then(|_| std::fs::write(dir.join("verify.txt"), &text))
                    .map_err(|e| Error::Config(format!("cannot write report: {e}")))?;
            }
            if report.all_pass() {
                Ok(())
            } else {
                Err(Error::Config("table verification failed".into()))
            }
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
