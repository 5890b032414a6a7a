use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use covplan_cli::{load_recipe, render, run_experiment, Command, ExperimentSpec, Format, Metadata, ScenarioSource, Sweep};

/// Plan IRS sites, movable-antenna positions and phase shifts for coverage
/// at minimum cost, and run Monte-Carlo sweeps over scenario parameters.
///
/// Exit status: 0 when every row succeeded, 2 when some rows failed,
/// 1 on invalid input.
#[derive(Debug, Parser)]
#[command(name = "covplan", version)]
struct Cli {
    /// feasibility | costmin | prune | baseline:<tag> | budget | sweep.
    /// Tags: joint, pruned, per_area_union, all_irs, fpa_irs, budget_ma, budget_fpa.
    #[arg(required_unless_present = "recipe")]
    command: Option<Command>,

    /// Run a recipe file; other flags override its settings.
    #[arg(long, conflicts_with = "command")]
    recipe: Option<PathBuf>,

    /// Scenario TOML; built-in defaults when absent.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Sweep axis and values, e.g. `c_MA=10,20,30` or `d=1/4,1/3,1/2`.
    /// Axes: c_MA, A (λ), J, gamma (dB), d (λ), budget.
    #[arg(long)]
    sweep: Option<Sweep>,

    /// Random area placements per sweep point.
    #[arg(long)]
    trials: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// csv or json; inferred from the --out extension when absent.
    #[arg(long)]
    format: Option<Format>,

    /// FPA unit cost as a fraction of c_MA.
    #[arg(long)]
    kappa: Option<f64>,

    /// Cost budget for the budget schemes.
    #[arg(long)]
    budget: Option<f64>,

    /// Record wall-clock time per row (output is then not reproducible).
    #[arg(long)]
    timing: bool,

    /// Trials run concurrently; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Cli {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match (&self.recipe, self.command) {
            (Some(path), _) => load_recipe(path)?,
            (None, Some(c)) => ExperimentSpec::new(c),
            (None, None) => unreachable!("clap requires a command or a recipe"),
        };
        if let Some(p) = &self.scenario {
            spec.scenario = ScenarioSource::File(p.clone());
        }
        if let Some(s) = &self.sweep {
            spec.sweep = Some(s.clone());
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(k) = self.kappa {
            spec.kappa = k;
        }
        if let Some(b) = self.budget {
            spec.budget = Some(b);
        }
        spec.timing |= self.timing;
        spec.validate()?;
        Ok(spec)
    }

    fn format(&self) -> Format {
        self.format
            .or_else(|| self.out.as_deref().map(Format::from_path))
            .unwrap_or(Format::Csv)
    }
}

fn run(cli: &Cli, spec: &ExperimentSpec) -> Result<ExitCode> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .context("starting the worker pool")?;
    let rows = pool.install(|| run_experiment(spec))?;
    let bytes = render(&rows, &Metadata::of(spec), cli.format())?;
    match &cli.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes).context("writing to stdout")?,
    }
    let failed = rows.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see the status column", rows.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let spec = match cli.spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &spec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
