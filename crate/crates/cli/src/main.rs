//! `gpca` — Monte-Carlo harness for eigenvector recovery under generative
//! range constraints.
//!
//! Subcommands:
//! - `sweep`: run a solver-comparison sweep over sample sizes / SNR values
//!   and emit `rows.csv`, `summary.csv`, `manifest.txt`, `plot.gp`.
//! - `audit`: empirical bilinear-concentration audit of the spiked-covariance
//!   perturbation.
//! - `moments`: truncated Gaussian moment table for the phase-retrieval
//!   thresholds.
//! - `props`: fast self-check battery over the library's core properties.
//!
//! Exit codes: 0 on success, 1 on I/O or spec errors (including bad flags),
//! 2 when a sweep produced only degenerate trials, and 1 when `props` finds
//! a violated property.

mod props;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gpca::metrics::audit_bilinear_concentration;
use gpca::models::truncated_moments;
use gpca::rng::{Rng, Seed};
use gpca::sweep::{
    emit_outputs, run_sweep, summarize, ModelSpec, RangeSpec, SolverSpec, SweepSpec,
};
use gpca::{linalg, Error};

#[derive(Parser)]
#[command(name = "gpca", version, about = "eigenvector recovery under generative range constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a Monte-Carlo solver-comparison sweep and emit CSV + plot script.
    Sweep(SweepArgs),
    /// Audit the bilinear concentration of the spiked-covariance perturbation.
    Audit(AuditArgs),
    /// Print truncated Gaussian moment constants for given thresholds.
    Moments(MomentsArgs),
    /// Run the built-in property suites and report pass/fail per property.
    Props(PropsArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// `key = value` config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data model: spiked-covariance | spiked-wigner | phase-retrieval.
    #[arg(long)]
    model: Option<String>,
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Lower threshold (phase retrieval).
    #[arg(long)]
    l: Option<f64>,
    /// Upper threshold (phase retrieval).
    #[arg(long)]
    u: Option<f64>,
    /// Range kind: sphere | group-sparse | constrained-group-sparse |
    /// linear-range | relu-net.
    #[arg(long)]
    range: Option<String>,
    /// Latent dimension / group count.
    #[arg(long)]
    k: Option<usize>,
    /// Last-coordinate floor (constrained-group-sparse).
    #[arg(long)]
    floor: Option<f64>,
    /// Hidden width (relu-net).
    #[arg(long)]
    hidden: Option<usize>,
    /// Weights file for the relu-net range (flat binary layout).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Comma-separated solver list, e.g. `power,tpower:q=64,ppower`.
    #[arg(long)]
    solvers: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long, value_name = "LIST")]
    m_values: Option<String>,
    /// Comma-separated SNR values (spiked models).
    #[arg(long, value_name = "LIST")]
    beta_values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Power-iteration steps per run.
    #[arg(long)]
    iterations: Option<usize>,
    /// Diagonal shift applied inside the iteration.
    #[arg(long)]
    shift: Option<f64>,
    /// Project the shared init onto the range for the projected solver.
    #[arg(long)]
    project_init: Option<bool>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Output directory for rows.csv / summary.csv / manifest.txt / plot.gp.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads: 0 = all cores, 1 = sequential.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Size of the first random unit set.
    #[arg(long, default_value_t = 32)]
    s1: usize,
    /// Size of the second random unit set.
    #[arg(long, default_value_t = 32)]
    s2: usize,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "128,512,2048")]
    m_grid: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// SNR of the spiked-covariance draws whose perturbation is audited.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 7)]
    base_seed: u64,
    /// Optional CSV output path (the table always prints to stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 5.0)]
    u: f64,
    /// Print a whole (l, u) grid instead of a single pair.
    #[arg(long)]
    grid: bool,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long, default_value_t = 7)]
    base_seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    let code = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Moments(args) => cmd_moments(args),
        Command::Props(args) => props::run(args.base_seed),
    };
    match code {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad {what} `{t}`")))
        })
        .collect()
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad {what} `{t}`")))
        })
        .collect()
}

fn build_sweep_spec(args: &SweepArgs) -> Result<SweepSpec, Error> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            SweepSpec::from_config_str(&text)?
        }
        None => SweepSpec::default(),
    };

    if let Some(name) = &args.model {
        let n = args.n.unwrap_or(spec.model.n());
        spec.model = match name.as_str() {
            "spiked-covariance" => ModelSpec::SpikedCovariance { n },
            "spiked-wigner" => ModelSpec::SpikedWigner { n },
            "phase-retrieval" => ModelSpec::PhaseRetrieval {
                n,
                l: args.l.unwrap_or(1.0),
                u: args.u.unwrap_or(5.0),
            },
            other => return Err(Error::Parse(format!("unknown model `{other}`"))),
        };
    } else if let Some(n) = args.n {
        spec.model = match spec.model {
            ModelSpec::SpikedCovariance { .. } => ModelSpec::SpikedCovariance { n },
            ModelSpec::SpikedWigner { .. } => ModelSpec::SpikedWigner { n },
            ModelSpec::PhaseRetrieval { l, u, .. } => ModelSpec::PhaseRetrieval { n, l, u },
        };
    }
    if args.l.is_some() || args.u.is_some() {
        match &mut spec.model {
            ModelSpec::PhaseRetrieval { l, u, .. } => {
                if let Some(new_l) = args.l {
                    *l = new_l;
                }
                if let Some(new_u) = args.u {
                    *u = new_u;
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "--l/--u only apply to the phase-retrieval model".into(),
                ))
            }
        }
    }

    if let Some(name) = &args.range {
        let k = args.k.unwrap_or(8);
        spec.range = match name.as_str() {
            "sphere" => RangeSpec::Sphere,
            "group-sparse" => RangeSpec::GroupSparse { k },
            "constrained-group-sparse" => RangeSpec::ConstrainedGroupSparse {
                k,
                floor: args.floor.unwrap_or(0.5),
            },
            "linear-range" => RangeSpec::Linear { k },
            "relu-net" => RangeSpec::ReluNet {
                k,
                hidden: args.hidden.unwrap_or(2 * k),
                weights: args.weights.clone(),
            },
            other => return Err(Error::Parse(format!("unknown range `{other}`"))),
        };
    } else if let Some(k) = args.k {
        match &mut spec.range {
            RangeSpec::GroupSparse { k: spec_k }
            | RangeSpec::ConstrainedGroupSparse { k: spec_k, .. }
            | RangeSpec::Linear { k: spec_k }
            | RangeSpec::ReluNet { k: spec_k, .. } => *spec_k = k,
            RangeSpec::Sphere => {
                return Err(Error::InvalidArgument(
                    "--k does not apply to the sphere range".into(),
                ))
            }
        }
    }

    if let Some(solvers) = &args.solvers {
        spec.solvers = solvers
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(SolverSpec::parse_token)
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(list) = &args.m_values {
        spec.m_values = parse_usize_list(list, "sample size")?;
    }
    if let Some(list) = &args.beta_values {
        spec.beta_values = parse_f64_list(list, "beta")?;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(restarts) = args.restarts {
        spec.restarts = restarts;
    }
    if let Some(iterations) = args.iterations {
        spec.iterations = iterations;
    }
    if let Some(shift) = args.shift {
        spec.shift = shift;
    }
    if let Some(project_init) = args.project_init {
        spec.project_init = project_init;
    }
    if let Some(base_seed) = args.base_seed {
        spec.base_seed = base_seed;
    }
    if let Some(output) = &args.output {
        spec.output = output.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let spec = build_sweep_spec(&args)?;
    eprintln!(
        "running sweep: model={} range={} grid={} trials={} restarts={} (spec {})",
        spec.model.name(),
        spec.range.name(),
        spec.grid().len(),
        spec.trials,
        spec.restarts,
        &spec.content_hash()[..12],
    );
    let result = run_sweep(&spec, args.jobs)?;
    let failed = result.failed_rows();
    if failed == result.rows.len() {
        // Nothing usable: still emit the rows for post-mortem, then signal.
        std::fs::create_dir_all(&spec.output).map_err(|e| Error::Io {
            path: spec.output.clone(),
            source: e,
        })?;
        let mut buf = Vec::new();
        result.write_rows_csv(&mut buf).map_err(|e| Error::Io {
            path: spec.output.join("rows.csv"),
            source: e,
        })?;
        std::fs::write(spec.output.join("rows.csv"), buf).map_err(|e| Error::Io {
            path: spec.output.join("rows.csv"),
            source: e,
        })?;
        eprintln!("every trial degenerated; rows.csv written for inspection");
        return Ok(ExitCode::from(2));
    }

    let group_by: Vec<&str> = if spec.grid().iter().map(|g| g.1.to_bits()).any(|b| {
        b != spec.grid()[0].1.to_bits()
    }) {
        vec!["solver", "m", "beta"]
    } else {
        vec!["solver", "m"]
    };
    let summary = summarize(&result, &group_by)?;
    let files = emit_outputs(&spec, &result, &summary, &spec.output)?;

    let mut stdout = std::io::stdout().lock();
    summary.write_csv(&mut stdout).map_err(|e| Error::Io {
        path: PathBuf::from("stdout"),
        source: e,
    })?;
    eprintln!(
        "wrote {}, {}, {}, {} ({} rows, {} failed)",
        files.rows.display(),
        files.summary.display(),
        files.manifest.display(),
        files.plot.display(),
        result.rows.len(),
        failed
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode, Error> {
    let m_grid = parse_usize_list(&args.m_grid, "sample size")?;
    let mut rng = Rng::new(Seed::new(args.base_seed, u64::MAX));
    let x = loop {
        let v = ndarray::Array1::from_shape_fn(args.n, |_| rng.gaussian());
        if let Ok(unit) = linalg::normalized(v.view()) {
            break unit;
        }
    };
    let spike = linalg::outer(x.view(), x.view());
    let beta = args.beta;
    let audit = audit_bilinear_concentration(
        args.n,
        |m, seed| {
            let (obs, _) = gpca::models::spiked_covariance_matrix(&x, beta, m, seed)?;
            Ok(obs.v() - &spike.mapv(|v| beta * v))
        },
        args.s1,
        args.s2,
        &m_grid,
        args.trials,
        Seed::new(args.base_seed, 0),
    )?;

    let mut stdout = std::io::stdout().lock();
    audit.write_csv(&mut stdout).map_err(|e| Error::Io {
        path: PathBuf::from("stdout"),
        source: e,
    })?;
    if let Some(path) = &args.output {
        let mut buf = Vec::new();
        audit.write_csv(&mut buf).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        std::fs::write(path, buf).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    let per_m = audit.max_ratio_per_m();
    eprintln!(
        "empirical constants per m: {}",
        per_m
            .iter()
            .map(|(m, c)| format!("{m}:{c:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_moments(args: MomentsArgs) -> Result<ExitCode, Error> {
    println!("l,u,gamma,beta");
    if args.grid {
        for &l in &[1.0, 1.1, 1.5, 2.0] {
            for &u in &[3.0, 5.0, 10.0] {
                let p = truncated_moments(l, u)?;
                println!("{l},{u},{},{}", p.gamma(), p.beta());
            }
        }
    } else {
        let p = truncated_moments(args.l, args.u)?;
        println!("{},{},{},{}", args.l, args.u, p.gamma(), p.beta());
    }
    Ok(ExitCode::SUCCESS)
}
