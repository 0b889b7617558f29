use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fracstab::acceptance;
use fracstab::experiments::{output_root, run_experiment, run_lmi, Experiment, ExperimentConfig};
use fracstab::report::{RunManifest, Table};
use fracstab::specfun::{ml_asymptotic, ml_decay};

#[derive(Parser)]
#[command(name = "fracstab", version, about = "Fractional delay benchmark: simulations, LMI certificates and acceptance checks")]
struct Cli {
    /// TOML config; defaults reproduce the benchmark
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root (falls back to FRACSTAB_OUT, then ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Step size override (s)
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Horizon override (s)
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate E_a(-t^a) and its leading asymptotic term
    MlTable {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7, 0.85, 0.95, 1.0])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0])]
        t: Vec<f64>,
    },
    /// Run one experiment, or all of them
    Simulate {
        /// ml_curves, uncontrolled, adaptive, compare, sensitivity_alpha,
        /// sensitivity_tau, lyapunov_validation, delay_characterization or all
        experiment: String,
    },
    /// Solve the stability LMI for the reported constants and the regional surrogate
    Lmi,
    /// Adaptive vs sliding-mode comparison
    Compare,
    /// Closed-loop sweep over alpha or tau_bar
    Sweep {
        #[arg(value_enum)]
        over: SweepOver,
    },
    /// Property suites plus the invariant checks of every experiment
    Validate,
    /// Run the acceptance suite
    Accept {
        /// Run a single criterion
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepOver {
    Alpha,
    Tau,
}

fn report(m: &RunManifest) -> bool {
    println!("{}: {} outputs", m.experiment, m.outputs.len());
    for c in &m.checks {
        println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail);
    }
    m.passed()
}

fn run(cli: Cli) -> fracstab::Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(h) = cli.h {
        cfg.system.simulation.h = h;
    }
    if let Some(t) = cli.t_end {
        cfg.system.simulation.t_end = t;
    }
    cfg.validate()?;
    let root = output_root(cli.out);
    let run_one = |e: Experiment| run_experiment(e, &cfg, &root).map(|m| report(&m));

    match cli.cmd {
        Cmd::MlTable { alphas, t } => {
            let mut tab = Table::new("E_alpha(-t^alpha) and t^-alpha / Gamma(1 - alpha)").col("t", "s", t.clone());
            for a in &alphas {
                tab = tab.col(&format!("E_{a}"), "1", t.iter().map(|s| ml_decay(*a, 1.0, *s)).collect::<fracstab::Result<_>>()?);
                if *a < 1.0 {
                    tab = tab.col(&format!("asym_{a}"), "1", t.iter().map(|s| if *s > 0.0 { ml_asymptotic(*a, *s).unwrap_or(f64::NAN) } else { f64::NAN }).collect());
                }
            }
            print!("{}", tab.to_csv()?);
            std::fs::create_dir_all(&root)?;
            tab.save(&root.join("ml_table.csv"))?;
            Ok(true)
        }
        Cmd::Simulate { experiment } => {
            if experiment == "all" {
                let mut ok = true;
                for e in Experiment::ALL {
                    ok &= run_one(e)?;
                }
                Ok(ok)
            } else {
                run_one(experiment.parse()?)
            }
        }
        Cmd::Lmi => Ok(report(&run_lmi(&cfg, &root)?)),
        Cmd::Compare => run_one(Experiment::Compare),
        Cmd::Sweep { over } => run_one(match over {
            SweepOver::Alpha => Experiment::SensitivityAlpha,
            SweepOver::Tau => Experiment::SensitivityTau,
        }),
        Cmd::Validate => {
            let props = acceptance::run_criterion(8, &cfg.system);
            println!("{}", props.line());
            let mut ok = props.passed;
            for e in Experiment::ALL {
                ok &= run_one(e)?;
            }
            Ok(ok)
        }
        Cmd::Accept { criterion } => {
            let ids: Vec<u8> = match criterion {
                Some(c) if (1..=9).contains(&c) => vec![c],
                Some(c) => return Err(fracstab::Error::Config(format!("no criterion {c}; expected 1 to 9"))),
                None => (1..=9).collect(),
            };
            let mut results = Vec::new();
            for id in ids {
                let r = acceptance::run_criterion(id, &cfg.system);
                println!("{}", r.line());
                results.push(r);
            }
            std::fs::create_dir_all(&root)?;
            std::fs::write(root.join("acceptance.json"), serde_json::to_string_pretty(&results)? + "\n")?;
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
