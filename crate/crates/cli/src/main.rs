use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doppler_qfi::sweep::{
    evaluate_point, run_sweep, validate_config, write_outputs, PointPhysics, SweepPoint, SweepSpec,
};
use doppler_qfi::Error;

/// Doppler QFI of coherent and SPDC radar probes through a thermal-loss channel.
#[derive(Debug, Parser)]
#[command(name = "doppler-qfi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a parameter grid and write CSV (and optional SVG) results.
    Sweep {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        /// Fraction of rows re-checked against the fidelity oracle.
        #[arg(long, value_name = "FRACTION")]
        audit: Option<f64>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Resolve a config and echo every value.
    Validate { config: PathBuf },
    /// Evaluate one point and print it as key-value lines.
    Single {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        nb: f64,
        #[arg(long)]
        cxi: f64,
        /// Pump bandwidth, absolute or as an expression such as `wc/50`.
        #[arg(long, allow_hyphen_values = true)]
        sigma_p: Option<String>,
        /// Phase-matching width, absolute or an expression such as `3*sigma_p`.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<String>,
        /// Target speed in m/s.
        #[arg(long, allow_hyphen_values = true)]
        speed: Option<f64>,
        /// Carrier frequency in rad/s.
        #[arg(long)]
        omega_c: Option<f64>,
        #[arg(long)]
        tail_tol: Option<f64>,
        /// `flux-variance` or `mode-index`.
        #[arg(long)]
        convention: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Io { .. } => 3,
        Error::Point { source, .. } => exit_code(source),
        _ => 2,
    }
}

fn toml_str(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

#[allow(clippy::too_many_arguments)]
fn single_spec(
    eta: f64,
    nb: f64,
    cxi: f64,
    sigma_p: Option<String>,
    epsilon: Option<String>,
    speed: Option<f64>,
    omega_c: Option<f64>,
    tail_tol: Option<f64>,
    convention: Option<String>,
) -> Result<SweepSpec, Error> {
    let mut physics = String::from("[physics]\n");
    if let Some(v) = speed {
        physics += &format!("speed = {v:e}\n");
    }
    if let Some(v) = omega_c {
        physics += &format!("omega_c = {v:e}\n");
    }
    if let Some(v) = sigma_p {
        physics += &format!("sigma_p = {}\n", toml_str(&v));
    }
    if let Some(v) = epsilon {
        physics += &format!("epsilon = {}\n", toml_str(&v));
    }
    if let Some(v) = convention {
        physics += &format!("duration_convention = {}\n", toml_str(&v));
    }
    let mut text = physics;
    text += &format!("[grid]\neta = {eta:e}\nn_b = {nb:e}\nc_xi = {cxi:e}\n");
    if let Some(v) = tail_tol {
        text += &format!("[truncation]\ntail_tol = {v:e}\n");
    }
    SweepSpec::from_toml_str(&text)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { config } => {
            let spec = validate_config(&config)?;
            print!("{}", spec.describe());
            println!("spec_sha256 = {}", spec.hash_hex());
        }
        Command::Sweep {
            config,
            out,
            plots,
            audit,
            threads,
        } => {
            let mut spec = validate_config(&config)?;
            if let Some(dir) = out {
                spec.output.dir = dir;
            }
            spec.output.plots |= plots;
            if let Some(f) = audit {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::Config(vec![format!(
                        "--audit must lie in [0, 1], got {f}"
                    )]));
                }
                spec.output.audit = f;
            }
            let threads = threads
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            log::info!("{} points on {threads} threads", spec.point_count());
            let outcome = run_sweep(&spec, threads)?;
            let dir = spec.output.dir.clone();
            for path in write_outputs(&spec, &outcome, &dir, spec.output.plots)? {
                println!("{}", path.display());
            }
            let failed: Vec<_> = outcome.audit.iter().filter(|a| !a.passed()).collect();
            for a in &outcome.audit {
                log::info!("audit row {}: {}", a.index, a.status);
            }
            if let Some(first) = failed.first() {
                return Err(Error::InternalConsistency(format!(
                    "{} of {} audited rows disagree with the oracle; first: row {} {} ({})",
                    failed.len(),
                    outcome.audit.len(),
                    first.index,
                    first.point.label(),
                    first.status
                )));
            }
        }
        Command::Single {
            eta,
            nb,
            cxi,
            sigma_p,
            epsilon,
            speed,
            omega_c,
            tail_tol,
            convention,
        } => {
            let spec = single_spec(
                eta, nb, cxi, sigma_p, epsilon, speed, omega_c, tail_tol, convention,
            )?;
            let point = SweepPoint {
                sigma_p: spec.sigma_p,
                c_xi: cxi,
                eta,
                n_b: nb,
            };
            let r = evaluate_point(&PointPhysics::of(&spec), &point)?;
            let lines: [(&str, String); 18] = [
                ("speed", format!("{:e}", spec.speed)),
                ("omega_c", format!("{:e}", spec.omega_c)),
                ("sigma_p", format!("{:e}", r.point.sigma_p)),
                ("epsilon", format!("{:e}", r.epsilon)),
                ("c_xi", format!("{}", r.point.c_xi)),
                ("xi", format!("{:e}", r.xi)),
                ("eta", format!("{}", r.point.eta)),
                ("n_b", format!("{}", r.point.n_b)),
                ("mu", format!("{:.16e}", r.mu)),
                ("n_s", format!("{:e}", r.n_s)),
                ("delta_t", format!("{:e}", r.duration)),
                ("schmidt_number", format!("{:e}", r.schmidt_number)),
                ("m_used", r.m_used.to_string()),
                ("j_c", format!("{:e}", r.jc)),
                ("j_q", format!("{:e}", r.jq)),
                ("ratio", format!("{:e}", r.ratio)),
                ("ratio_db", format!("{:.6}", r.ratio_db)),
                ("wall_time", format!("{:.3e}", r.wall_time)),
            ];
            for (k, v) in lines {
                println!("{k} = {v}");
            }
            println!("physicality_margin = {:e}", r.physicality_margin);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
