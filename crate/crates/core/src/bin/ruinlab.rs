use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ruinlab::config::{ExperimentConfig, Method};
use ruinlab::diffusion::{multivariate_ruin_diffusion, univariate_bm_ruin};
use ruinlab::experiment::{fclt_check, max_deviations, run, write_csv, Example, ResultRow};
use ruinlab::model::base_model;
use ruinlab::simulate::estimate_ruin;
use ruinlab::switch::chi;
use ruinlab::{Error, Result};

#[derive(Parser)]
#[command(name = "ruinlab", version, about = "Finite-time multivariate ruin probabilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of every ruin event at one horizon.
    Estimate {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        mc: McFlags,
    },
    /// Diffusion approximation at one horizon.
    ApproxDiffusion {
        #[command(flatten)]
        target: Target,
    },
    /// Single-switch approximation at one horizon.
    ApproxSwitch {
        #[command(flatten)]
        target: Target,
    },
    /// All methods over the config's horizon grid, with deviations from Monte Carlo.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        mc: McFlags,
        /// CSV output (overrides the config's `[output] csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerates one of the bundled numerical studies.
    Reproduce {
        /// example1, example2 or example3
        example: String,
        #[command(flatten)]
        mc: McFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the covariance of the rate-scaled claims process with Σ̄.
    FcltCheck {
        /// Model file; the base model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 64.0)]
        n: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    model: PathBuf,
    /// Horizon; defaults to the last point of the config's grid.
    #[arg(long = "T")]
    horizon: Option<f64>,
}

#[derive(Args)]
struct McFlags {
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    confidence: Option<f64>,
    /// Worker threads; falls back to RUINLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

impl McFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(p) = self.paths {
            cfg.mc.paths = p;
        }
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(c) = self.confidence {
            cfg.mc.confidence = c;
        }
        if let Some(t) = self.threads {
            cfg.mc.threads = t;
        }
    }
}

fn load(target: &Target) -> Result<(ExperimentConfig, f64)> {
    let cfg = ExperimentConfig::from_path(&target.model)?;
    let t = target.horizon.unwrap_or(*cfg.horizons.last().unwrap());
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("--T must be positive, got {t}")));
    }
    Ok((cfg, t))
}

fn print_rows(rows: &[ResultRow]) {
    println!(
        "{:>8} {:>10} {:>21} {:>10} {:>13} {:>12}",
        "T", "mc", "mc 95% CI", "diffusion", "single-switch", "independence"
    );
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for r in rows {
        let ci = r.mc.map_or("-".to_string(), |e| format!("[{:.6}, {:.6}]", e.ci_low(), e.ci_high()));
        println!(
            "{:>8} {:>10} {:>21} {:>10} {:>13} {:>12}",
            r.horizon,
            f(r.value(Method::MonteCarlo)),
            ci,
            f(r.diffusion),
            f(r.single_switch),
            f(r.independence)
        );
    }
    for (method, dev) in max_deviations(rows) {
        println!("max |{} - mc| = {dev:.6}", method.name());
    }
}

fn experiment(mut cfg: ExperimentConfig, mc: &McFlags, out: Option<PathBuf>) -> Result<()> {
    mc.apply(&mut cfg);
    let rows = run(&cfg)?;
    print_rows(&rows);
    if let Some(path) = out.or(cfg.output.clone()) {
        write_csv(&rows, BufWriter::new(File::create(&path)?))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate { target, mc } => {
            let (mut cfg, t) = load(&target)?;
            mc.apply(&mut cfg);
            cfg.validate()?;
            let query = cfg.query.with_horizon(t);
            let est = estimate_ruin(&cfg.model, &query, cfg.mc.paths, cfg.mc.seed, cfg.mc.threads)?;
            let level = cfg.mc.confidence;
            let show = |name: String, e: ruinlab::simulate::MonteCarloEstimate| {
                let e = ruinlab::simulate::MonteCarloEstimate::from_hits(e.hits, e.n_paths, e.seed, level);
                println!("{name:<14} {:.6}  [{:.6}, {:.6}]", e.estimate, e.ci_low(), e.ci_high());
            };
            println!("T = {t}, {} paths, seed {}", cfg.mc.paths, cfg.mc.seed);
            show(format!("{}", query.mode), est.requested);
            show("all".into(), est.all);
            show("any".into(), est.any);
            for (i, e) in est.marginals.iter().enumerate() {
                show(format!("marginal:{}", i + 1), *e);
            }
        }
        Command::ApproxDiffusion { target } => {
            let (cfg, t) = load(&target)?;
            let query = cfg.query.with_horizon(t);
            let r = multivariate_ruin_diffusion(&cfg.model, &query)?;
            println!("T = {t}, mode {}: {:.8}", query.mode, r.probability);
            if r.approximate_combination {
                println!("(approximate-combination: pairwise survival combination over more than two lines)");
            }
            println!("drift = {:?}", r.spec.drift);
            println!("Sigma = {}", r.spec.covariance);
            let m = cfg.model.dimension();
            for i in 0..m {
                for k in (i + 1)..m {
                    println!("corr({}, {}) = {:.4}", i + 1, k + 1, r.spec.correlation(i, k));
                }
            }
            for i in 0..m {
                let p = univariate_bm_ruin(query.reserves[i], r.spec.drift[i], r.spec.covariance[(i, i)], t)?;
                println!("line {} alone: {p:.8}", i + 1);
            }
        }
        Command::ApproxSwitch { target } => {
            let (cfg, t) = load(&target)?;
            let query = cfg.query.with_horizon(t);
            let p = chi(&cfg.model, &query, &cfg.quadrature)?;
            println!("T = {t}, mode {}: {p:.8}", query.mode);
        }
        Command::Compare { model, mc, out } => {
            experiment(ExperimentConfig::from_path(&model)?, &mc, out)?;
        }
        Command::Reproduce { example, mc, out } => {
            let ex = Example::from_name(&example)
                .ok_or_else(|| Error::Config(format!("unknown example `{example}` (example1, example2, example3)")))?;
            experiment(ex.config(), &mc, out)?;
        }
        Command::FcltCheck {
            model,
            n,
            paths,
            seed,
            threads,
        } => {
            let model = match model {
                Some(p) => ExperimentConfig::from_path(&p)?.model,
                None => base_model(),
            };
            let report = fclt_check(&model, n, paths, seed, threads.unwrap_or(0))?;
            println!("n = {n}, {paths} paths");
            println!("sample covariance = {}", report.sample);
            println!("analytic Sigma = {}", report.analytic);
            for (i, e) in report.diagonal_errors().iter().enumerate() {
                println!("variance {}: relative error {:.4}", i + 1, e);
            }
            println!("correlation error {:.4}", report.correlation_error());
            println!("max relative error {:.4}", report.max_relative_error());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = io::Write::flush(&mut io::stdout());
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
