use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use nimt::harness::compare_linear;
use nimt::io::{
    load_config, write_linear_comparison, write_run_outputs, AltSpec, PoolSpec, RunConfig,
};
use nimt::{run_session, NimtError, PackSize, ScenarioName, TeacherKind};

const DEFAULT_OUT: &str = "nimt_out";

/// Nonparametric iterative machine teaching experiments.
#[derive(Parser, Debug)]
#[command(name = "nimt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a session described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named scenario with command-line overrides.
    Scenario {
        /// gmm1d, cls2d, image, linear_compare or parametric3d
        name: String,
        #[arg(long, value_parser = parse_teacher)]
        teacher: Option<TeacherKind>,
        /// Pack size: an integer count or a ratio in (0, 1).
        #[arg(long, value_parser = parse_k)]
        k: Option<PackSize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict selection to a random fraction of the grid (0.8 if no value).
        #[arg(long, num_args = 0..=1, default_missing_value = "0.8")]
        pool_ratio: Option<f64>,
        /// Image whose labels are substituted with probability --alt-prob.
        #[arg(long, requires = "alt_prob")]
        alt: Option<PathBuf>,
        #[arg(long, requires = "alt")]
        alt_prob: Option<f64>,
        #[arg(long, requires = "init")]
        target: Option<PathBuf>,
        #[arg(long, requires = "target")]
        init: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a linear-kernel learner with parametric gradient descent.
    CompareLinear {
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_teacher(s: &str) -> Result<TeacherKind, String> {
    match s {
        "rft" => Ok(TeacherKind::Rft),
        "gft" => Ok(TeacherKind::Gft),
        other => Err(format!("unknown teacher `{other}`, expected rft or gft")),
    }
}

fn parse_k(s: &str) -> Result<PackSize, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    PackSize::from_number(v).map_err(|e| e.to_string())
}

fn execute(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let session = config.to_session()?;
    let log = run_session(&session)?;
    let summary = write_run_outputs(out, config, &log)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            execute(&cfg, &out)
        }
        Command::Scenario {
            name,
            teacher,
            k,
            eta,
            seed,
            pool_ratio,
            alt,
            alt_prob,
            target,
            init,
            out,
        } => {
            let name: ScenarioName = name.parse()?;
            let mut cfg = RunConfig::for_scenario(name, seed)?;
            if let Some(t) = teacher {
                cfg.teacher = t;
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(eta) = eta {
                cfg.eta = eta;
            }
            cfg.pool = pool_ratio.map(PoolSpec::Ratio);
            if let (Some(image), Some(prob)) = (alt, alt_prob) {
                cfg.alt = Some(AltSpec { image, prob });
            }
            cfg.target_image = target;
            cfg.init_image = init;
            cfg.validate()?;
            execute(&cfg, &out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)))
        }
        Command::CompareLinear { steps, out } => {
            if steps == 0 {
                bail!("--steps must be at least 1");
            }
            let rows = compare_linear(steps, Default::default())?;
            let out = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("compare_linear.csv");
            write_linear_comparison(&rows, &path)?;
            let max_gap = rows.iter().map(|r| r.max_gap).fold(0.0, f64::max);
            let last = rows.last().expect("at least one step");
            println!(
                "steps {steps}  max gap {max_gap:.3e}  M linear {:.6e}  M parametric {:.6e}  M rbf {:.6e}",
                last.m_linear, last.m_parametric, last.m_rbf
            );
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<NimtError>() {
                Some(NimtError::AssertionFailed { .. }) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
