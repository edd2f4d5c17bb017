//! Command-line laboratory for Gowers-Host-Kra norm experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ghk_core::cli::{
    levelset_alignment, parse_grid_flag, run_stability_sweep, scale_localization, selftest,
    sweep_csv, sweep_gnuplot, verify_chain, verify_chain_constants, StabilityConfig,
};
use ghk_core::error::{GhkError, Result};
use ghk_core::extremizer::{fit, synthesize, synthesis_margin_ok, ExtremizerParams, FitOptions};
use ghk_core::geometry::is_admissible;
use ghk_core::gowers::{
    deficit_budgeted, gowers_inner_budgeted, holder_exponent, uk_norm_budgeted, DEFAULT_BUDGET,
};
use ghk_core::grid::lp_norm;
use ghk_core::io::{read_ghk1_file, read_phase_samples_file, write_ghk1_file};
use ghk_core::phase::poly_phase_recover;
use ghk_core::rearrange::symmetric_rearrangement;
use ghk_core::GridFunction;

#[derive(Parser)]
#[command(name = "ghk", about = "Gowers-Host-Kra norm laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// GHK1 grid-function file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Extremizer parameter JSON, synthesized onto --grid.
    #[arg(long)]
    extremizer: Option<PathBuf>,
    /// Grid as cells,lo,hi (e.g. 1024,-8,8) or N1xN2,lo1,hi1,lo2,hi2.
    #[arg(long)]
    grid: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<GridFunction> {
        match (&self.input, &self.extremizer) {
            (Some(path), None) => read_ghk1_file(path),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)?;
                let value: serde_json::Value = serde_json::from_str(&text)?;
                let params = ExtremizerParams::from_json_value(&value)?;
                let grid = self.grid.as_deref().ok_or_else(|| {
                    GhkError::InvalidParameter("--extremizer input needs --grid".into())
                })?;
                let spec = parse_grid_flag(grid)?;
                if !synthesis_margin_ok(&params, &spec) {
                    eprintln!("warning: grid box does not contain the center with 3 sigma of margin");
                }
                synthesize(&params, &spec)
            }
            _ => Err(GhkError::InvalidParameter(
                "provide exactly one of --input or --extremizer".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// U^k norm (and the critical L^p norm) of a function.
    Norm {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        k: usize,
        /// Optional extra L^p norm to report.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Gowers inner product of 2^k functions (bitmask slot order).
    Inner {
        #[arg(short)]
        k: usize,
        /// 2^k GHK1 files.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Deficit 1 − ‖f‖_{U^k}/(A(k,n)·‖f‖_{p_k}).
    Deficit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Project onto the extremizer family; prints params JSON and epsilon.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the fitted parameter JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symmetric decreasing rearrangement of |f|.
    Rearrange {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Admissibility linear programs for a tuple JSON.
    Admissible {
        /// AdmissibleTuple JSON file ({n, functionals, lengths}).
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Polynomial phase recovery from a phase-sample file.
    PhaseRecover {
        #[arg(long)]
        samples: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 1e-4)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability sweep: deficit and fit distance across a perturbation ladder.
    Stability {
        /// StabilityConfig JSON; the built-in ladder when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write CSV here (plus a .gnuplot companion); stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic scale-localization report.
    Scale {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Super-level-set alignment ratios r(s).
    Levelset {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The nonnegative inequality chain; scalar identities when no inputs.
    Chain {
        #[arg(short)]
        k: usize,
        /// 2^{k+1} GHK1 files (omit for scalar-only mode).
        #[arg(long, num_args = 0..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduced invariant battery; exits nonzero on failure.
    Selftest {
        /// Perturb the named check's constants (mutation-test hook).
        #[arg(long)]
        mutate: Option<String>,
    },
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Norm {
            input,
            k,
            p,
            budget,
        } => {
            let f = input.load()?;
            let uk = uk_norm_budgeted(&f, k, budget)?;
            let pk = holder_exponent(k);
            let npk = lp_norm(&f, pk)?;
            println!("uk_norm={uk}");
            println!("lp_norm[p={pk}]={npk}");
            if let Some(p) = p {
                println!("lp_norm[p={p}]={}", lp_norm(&f, p)?);
            }
        }
        Command::Inner { k, inputs, budget } => {
            let fs: Result<Vec<GridFunction>> = inputs.iter().map(read_ghk1_file).collect();
            let v = gowers_inner_budgeted(&fs?, k, budget)?;
            println!("gowers_inner_re={}", v.re);
            println!("gowers_inner_im={}", v.im);
        }
        Command::Deficit { input, k, budget } => {
            let f = input.load()?;
            println!("deficit={}", deficit_budgeted(&f, k, budget)?);
        }
        Command::Fit {
            input,
            k,
            restarts,
            seed,
            out,
        } => {
            let f = input.load()?;
            let r = fit(
                &f,
                k,
                &FitOptions {
                    restarts,
                    seed,
                    ..Default::default()
                },
            )?;
            let report = serde_json::json!({
                "epsilon": r.epsilon,
                "converged": r.converged,
                "params": r.params.to_json_value(),
            });
            write_or_print(&out, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Rearrange { input, out } => {
            let f = input.load()?;
            write_ghk1_file(&symmetric_rearrangement(&f), out)?;
        }
        Command::Admissible { tuple } => {
            let text = std::fs::read_to_string(tuple)?;
            let t: ghk_core::geometry::AdmissibleTuple = serde_json::from_str(&text)?;
            let report = is_admissible(&t)?;
            let json = serde_json::json!({
                "admissible": report.admissible,
                "exact_arithmetic": report.exact,
                "maxima": report.maxima,
                "witnesses": report.witnesses,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        Command::PhaseRecover {
            samples,
            k,
            tau,
            out,
        } => {
            let s = read_phase_samples_file(samples)?;
            let r = poly_phase_recover(&s, k, tau)?;
            let json = serde_json::json!({
                "poly": r.poly.to_json_value(),
                "degree_bound": k - 1,
                "inlier_fraction": r.inlier_fraction,
                "max_inlier_residual": r.max_inlier_residual,
            });
            write_or_print(&out, &serde_json::to_string_pretty(&json)?)?;
        }
        Command::Stability { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    serde_json::from_str::<StabilityConfig>(&text)?
                }
                None => StabilityConfig::default_ladder(),
            };
            let rows = run_stability_sweep(&cfg)?;
            let csv = sweep_csv(&rows);
            match &out {
                Some(path) => {
                    std::fs::write(path, &csv)?;
                    let plot = sweep_gnuplot(&path.display().to_string());
                    std::fs::write(path.with_extension("gnuplot"), plot)?;
                }
                None => print!("{csv}"),
            }
        }
        Command::Scale { input, k, out } => {
            let f = input.load()?;
            let r = scale_localization(&f, k)?;
            write_or_print(&out, &serde_json::to_string_pretty(&r)?)?;
        }
        Command::Levelset {
            input,
            k,
            eta,
            count,
            out,
        } => {
            let f = input.load()?;
            let rows = levelset_alignment(&f, k, eta, count)?;
            write_or_print(&out, &serde_json::to_string_pretty(&rows)?)?;
        }
        Command::Chain { k, inputs, out } => {
            let report = if inputs.is_empty() {
                verify_chain_constants()?
            } else {
                let fs: Result<Vec<GridFunction>> = inputs.iter().map(read_ghk1_file).collect();
                verify_chain(k, &fs?)?
            };
            write_or_print(&out, &serde_json::to_string_pretty(&report)?)?;
            if !report.all_hold {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Selftest { mutate } => {
            let report = selftest(mutate.as_deref())?;
            for c in &report.checks {
                println!(
                    "{}: {} ({})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.detail
                );
            }
            if !report.all_passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
