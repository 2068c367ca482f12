use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radgas::diagnostics::{fit_decay_exponent, inequality_sweep};
use radgas::elliptic::mms_study;
use radgas::io::{self, RunManifest, SeriesWriter};
use radgas::stationary::{shoot_profile, EndpointStates};
use radgas::stepper::{SimConfig, Simulation, PROFILE_TOL};
use radgas::{par, Error};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ASSERTION: u8 = 4;

#[derive(Parser)]
#[command(name = "radgas", version, about = "Radiating gas half-space simulator and verification tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the stationary profile and write it as CSV.
    Stationary {
        /// Configuration file; endpoint states and grid.nx / grid.lx are read from it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        u_minus: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_plus: Option<f64>,
        #[arg(long)]
        lx: Option<f64>,
        /// Number of intervals.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = PROFILE_TOL)]
        tol: f64,
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
    /// Evolve a configuration and write the diagnostics series.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Write a checkpoint every N steps (a multiple of record_every).
        #[arg(long)]
        checkpoint_every: Option<usize>,
        /// Resume from a checkpoint written by an earlier run of the same config.
        #[arg(long)]
        restore: Option<PathBuf>,
    },
    /// Fit decay exponents from a series CSV and compare with expectations.
    VerifyRates {
        #[arg(long)]
        series: PathBuf,
        /// Column to fit; repeatable. Defaults to sup_v, sup_vx, sup_vy, sup_p2.
        #[arg(long)]
        column: Vec<String>,
        /// Expected exponent for each --column, in order.
        #[arg(long, allow_hyphen_values = true)]
        expect: Vec<f64>,
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
        #[arg(long, default_value_t = 0.5)]
        window: f64,
    },
    /// Seeded property sweep of the interpolation inequalities.
    CheckInequalities {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Manufactured-solution refinement table for the elliptic solver.
    EllipticMms {
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

enum Failure {
    Lib(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::BadMagic | Error::ShapeMismatch(_) | Error::TruncatedFile { .. } => EXIT_IO,
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::InvalidGrid(_)
        | Error::InvalidEndpoints(_)
        | Error::AmplitudeTooLarge { .. }
        | Error::GridMismatch(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let threads = std::env::var("RADGAS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    if !par::init_threads(threads) {
        log::warn!("RADGAS_THREADS ignored: worker pool already running");
    }
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(EXIT_ASSERTION)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Stationary {
            config,
            u_minus,
            u_plus,
            lx,
            n,
            tol,
            out,
        } => {
            let base = match &config {
                Some(p) => io::parse_config(p)?,
                None => SimConfig::default(),
            };
            let ep = EndpointStates::new(
                u_minus.unwrap_or(base.endpoints.u_minus),
                u_plus.unwrap_or(base.endpoints.u_plus),
            )?;
            let (lx, n) = (lx.unwrap_or(base.lx), n.unwrap_or(base.nx));
            let prof = shoot_profile(&base.flux, &ep, lx, n, tol)?;
            io::write_profile(&prof, &out)?;
            println!(
                "case={:?} first_integral_residual={:e} far_residual={:e} -> {}",
                prof.case_tag,
                prof.first_integral_residual(),
                prof.far_residual(),
                out.display()
            );
            Ok(())
        }
        Cmd::Evolve {
            config,
            out_dir,
            checkpoint_every,
            restore,
        } => evolve(&config, &out_dir, checkpoint_every, restore.as_deref()),
        Cmd::VerifyRates {
            series,
            column,
            expect,
            tol,
            window,
        } => verify_rates(&series, column, &expect, tol, window),
        Cmd::CheckInequalities { seed, trials } => {
            let rep = inequality_sweep(seed, trials)?;
            println!("inequality,constant,worst_lhs_over_rhs,failures");
            for (w, ratio, fails) in &rep.worst {
                println!("{},{},{},{}", w.name(), rep.harness.constant(*w), ratio, fails);
            }
            println!(
                "norm_equivalence ratio2=[{}, {}] ratio3=[{}, {}]",
                rep.ratio2_range.0, rep.ratio2_range.1, rep.ratio3_range.0, rep.ratio3_range.1
            );
            if !rep.all_hold() {
                return Err(Failure::Assertion("an inequality was violated".into()));
            }
            if !rep.ratios_within(0.2, 5.0) {
                return Err(Failure::Assertion("norm equivalence ratio outside [0.2, 5]".into()));
            }
            Ok(())
        }
        Cmd::EllipticMms { levels } => {
            let rows = mms_study(levels)?;
            println!("h,max_error,ratio");
            for r in &rows {
                println!("{},{},{}", r.h, r.max_error, r.ratio);
            }
            if rows[1..].iter().any(|r| !(3.5..=4.5).contains(&r.ratio)) {
                return Err(Failure::Assertion("refinement ratio outside [3.5, 4.5]".into()));
            }
            Ok(())
        }
    }
}

fn evolve(config: &Path, out_dir: &Path, checkpoint_every: Option<usize>, restore: Option<&Path>) -> Result<(), Failure> {
    let cfg = io::parse_config(config)?;
    if let Some(n) = checkpoint_every {
        if n == 0 || !n.is_multiple_of(cfg.record_every) {
            return Err(Error::Validation(format!(
                "--checkpoint-every {n} must be a positive multiple of record_every = {}",
                cfg.record_every
            ))
            .into());
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut manifest = RunManifest::new("evolve", Some(&cfg));
    let mut sim = match restore {
        Some(p) => Simulation::from_state(&cfg, io::restore(p)?)?,
        None => Simulation::new(&cfg)?,
    };
    let series_path = out_dir.join("series.csv");
    let mut writer = SeriesWriter::create(&series_path)?;
    manifest.outputs.push(series_path);
    let mut written = Vec::new();
    let result = sim.run_with(|s, rec| {
        writer.write(&rec)?;
        if let Some(n) = checkpoint_every {
            if s.steps > 0 && s.steps.is_multiple_of(n) && !s.done() {
                let p = out_dir.join(format!("checkpoint_{:08}.bin", s.steps));
                io::checkpoint(&s.state, &p)?;
                written.push(p);
            }
        }
        Ok(true)
    });
    // the series is flushed even when a step failed
    writer.finish()?;
    let final_path = out_dir.join("final.bin");
    if result.is_ok() {
        io::checkpoint(&sim.state, &final_path)?;
        written.push(final_path);
    }
    manifest.outputs.extend(written);
    let manifest_path = out_dir.join("manifest.json");
    manifest.outputs.push(manifest_path.clone());
    manifest.write(&manifest_path)?;
    result?;
    println!("t = {} after {} steps -> {}", sim.state.t, sim.steps, out_dir.display());
    Ok(())
}

fn verify_rates(series: &Path, columns: Vec<String>, expect: &[f64], tol: f64, window: f64) -> Result<(), Failure> {
    let records = io::read_series(series)?;
    let columns = if columns.is_empty() {
        ["sup_v", "sup_vx", "sup_vy", "sup_p2"].map(String::from).to_vec()
    } else {
        columns
    };
    if !expect.is_empty() && expect.len() != columns.len() {
        return Err(Error::Validation(format!(
            "{} --expect values for {} columns",
            expect.len(),
            columns.len()
        ))
        .into());
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    println!("column,exponent,r2,expected,status");
    let mut failed = Vec::new();
    for (k, col) in columns.iter().enumerate() {
        let vals: Vec<f64> = records
            .iter()
            .map(|r| r.column(col))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Validation(format!("unknown column `{col}`")))?;
        let fit = fit_decay_exponent(&t, &vals, window)?;
        match expect.get(k) {
            Some(e) => {
                let ok = (fit.exponent - e).abs() <= tol;
                println!("{col},{},{},{e},{}", fit.exponent, fit.r2, if ok { "pass" } else { "FAIL" });
                if !ok {
                    failed.push(col.clone());
                }
            }
            None => println!("{col},{},{},,-", fit.exponent, fit.r2),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("exponent outside tolerance: {}", failed.join(", "))))
    }
}
