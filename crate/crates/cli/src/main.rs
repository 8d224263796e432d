//! Command line front end: train from a config or built-in preset, sweep the
//! activation initialization, audit gradients, demo the contour quadrature,
//! and summarize finished runs.
//!
//! Exit codes: 0 success, 1 configuration or I/O problems, 2 numerical failure
//! (diverged training or a failed gradient audit).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cauchy_pinn::cauchy::{cauchy_approx_1d_with, CircleContour, Complex64, QuadratureRule};
use cauchy_pinn::metrics::read_report_json;
use cauchy_pinn::train::{self, RunSummary, TrainConfig};
use cauchy_pinn::Error;

const PRESETS: &[(&str, &str)] = &[
    ("helmholtz2d_a14", include_str!("../../../configs/helmholtz2d_a14.toml")),
    ("helmholtz2d_a14_desk", include_str!("../../../configs/helmholtz2d_a14_desk.toml")),
    ("helmholtz2d_pikan", include_str!("../../../configs/helmholtz2d_pikan.toml")),
    ("helmholtz2d_88", include_str!("../../../configs/helmholtz2d_88.toml")),
    ("helmholtz3d", include_str!("../../../configs/helmholtz3d.toml")),
    ("heat3d", include_str!("../../../configs/heat3d.toml")),
    ("heat3d_desk", include_str!("../../../configs/heat3d_desk.toml")),
    ("poisson5d", include_str!("../../../configs/poisson5d.toml")),
    ("poisson5d_desk", include_str!("../../../configs/poisson5d_desk.toml")),
    ("poisson10d", include_str!("../../../configs/poisson10d.toml")),
];

#[derive(Parser)]
#[command(name = "cauchy-pinn", version, about = "PDE solving with a trainable rational activation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a TOML config file or a built-in preset name.
    Run {
        /// Path to a config file, or one of the preset names (see --list).
        config: String,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the thread count.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// List available presets and exit.
        #[arg(long)]
        list: bool,
    },
    /// Train repeatedly while one activation-init component steps through values.
    SweepInit {
        config: String,
        /// Which component to sweep: mu1, mu2, or d.
        #[arg(long, default_value = "d")]
        param: String,
        /// Comma-separated values to try.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Trials per value.
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare analytic parameter gradients against finite differences.
    CheckGrad {
        #[arg(long, default_value_t = 4)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print node-count versus error for the contour quadrature on a known
    /// analytic function (CSV on stdout).
    CauchyDemo {
        /// Comma-separated node counts.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        m: Vec<usize>,
        /// tangent (spectral) or secant (first-order chord) weights.
        #[arg(long, default_value = "tangent")]
        rule: String,
    },
    /// Summarize a finished run directory (report.json or summary.json).
    Report { dir: PathBuf },
}

fn load_config(name_or_path: &str) -> Result<TrainConfig, Error> {
    let path = Path::new(name_or_path);
    if path.exists() {
        return TrainConfig::from_path(path);
    }
    for (name, text) in PRESETS {
        if *name == name_or_path {
            return TrainConfig::from_toml_str(text);
        }
    }
    Err(Error::Config(format!(
        "'{name_or_path}' is neither a file nor a preset; presets: {}",
        PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
    )))
}

fn apply_overrides(
    cfg: &mut TrainConfig,
    seed: Option<u64>,
    trials: Option<usize>,
    threads: Option<usize>,
    out: Option<&Path>,
) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if let Some(o) = out {
        cfg.out_dir = o.to_string_lossy().into_owned();
    }
}

fn configure_threads(threads: usize) {
    // The pool is process-global and installs at most once; a failed second
    // install is harmless because correctness never depends on pool size.
    let _ = cauchy_pinn::build_thread_pool(threads);
}

fn print_summary(summary: &RunSummary) {
    println!("problem        {}", summary.problem);
    println!("constraint     {}", summary.constraint_mode);
    for t in &summary.trials {
        println!(
            "trial seed={}  rel_l2={:.3e}  l_inf={:.3e}  loss={:.3e}  {:.1}s  -> {}",
            t.seed, t.rel_l2, t.l_inf, t.final_loss, t.wall_time_s, t.dir
        );
    }
    println!("best seed      {}", summary.best_seed);
    println!("best rel_l2    {:.6e}", summary.best_rel_l2);
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, trials, threads, out, list } => {
            if list {
                for (name, _) in PRESETS {
                    println!("{name}");
                }
                return Ok(());
            }
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, seed, trials, threads, out.as_deref());
            configure_threads(cfg.threads);
            let summary = train::run(&cfg)?;
            print_summary(&summary);
            Ok(())
        }
        Command::SweepInit { config, param, values, trials, seed } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, seed, None, None, None);
            configure_threads(cfg.threads);
            let table = train::sweep_init(&cfg, &param, &values, trials)?;
            println!("{},mean_rel_l2,std_rel_l2,failed", table.parameter);
            for row in &table.rows {
                println!(
                    "{},{:.6e},{:.6e},{}",
                    row.value, row.mean_rel_l2, row.std_rel_l2, row.failed
                );
            }
            Ok(())
        }
        Command::CheckGrad { width, seed } => {
            let rows = train::check_gradients(width, seed)?;
            for (name, worst) in rows {
                println!("{name}: worst relative mismatch {worst:.3e}");
            }
            println!("gradient check passed");
            Ok(())
        }
        Command::CauchyDemo { m, rule } => {
            let rule = match rule.as_str() {
                "tangent" => QuadratureRule::Tangent,
                "secant" => QuadratureRule::Secant,
                other => {
                    return Err(Error::Config(format!(
                        "unknown rule '{other}' (expected tangent or secant)"
                    )))
                }
            };
            // f(z) = 1/(z - 2) is analytic inside the unit circle, so the
            // contour sum at z = 0.5 must reproduce f(0.5) = -2/3.
            let f = |z: Complex64| (z - Complex64::new(2.0, 0.0)).inv();
            let z = Complex64::new(0.5, 0.0);
            let exact = f(z);
            println!("m,error");
            for &mm in &m {
                if mm < 2 {
                    return Err(Error::Config("node counts must be at least 2".into()));
                }
                let approx = cauchy_approx_1d_with(f, CircleContour::unit(), z, mm, rule);
                println!("{mm},{:.6e}", (approx - exact).norm());
            }
            Ok(())
        }
        Command::Report { dir } => {
            let report_path = dir.join("report.json");
            let summary_path = dir.join("summary.json");
            if report_path.exists() {
                let r = read_report_json(&report_path)?;
                println!("problem        {}", r.problem);
                println!("constraint     {}", r.constraint_mode);
                println!("activation     {}", r.activation);
                println!("width          {}", r.width);
                println!("parameters     {}", r.parameter_count);
                println!("seed           {}", r.seed);
                println!("prng           {}", r.prng);
                println!("final loss     {:.6e}", r.final_loss.total);
                println!("  residual     {:.6e}", r.final_loss.term_f);
                println!("  boundary     {:.6e}", r.final_loss.term_b);
                println!("  initial      {:.6e}", r.final_loss.term_i);
                println!("rel_l2         {:.6e}", r.rel_l2);
                println!("l_inf          {:.6e}", r.l_inf);
                println!("wall time      {:.1}s", r.wall_time_s);
                println!("history rows   {}", r.history_len);
                Ok(())
            } else if summary_path.exists() {
                let text = std::fs::read_to_string(&summary_path)?;
                let summary = train::parse_summary(&text)?;
                print_summary(&summary);
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "no report.json or summary.json under {}",
                    dir.display()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
