use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use halftaper::covmodel::{CovarianceSpec, Taper};
use halftaper::experiment::{
    csv_preamble, run_ensemble_experiment, run_mse_sweep, run_sparsity_table, ExperimentConfig, ExperimentKind,
    ExperimentWriter, MseSweepRow, Scale, SparsityRow,
};
use halftaper::field::BoxDomain;
use halftaper::simulate::{run_ensemble, ConditioningMode};
use halftaper::sparsity::forecast_report;
use halftaper::Error;

mod config;

#[derive(Parser, Debug)]
#[command(name = "halftaper", version, about = "Half-tapered conditional Gaussian simulation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML experiment configuration; presets are used when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a config entry, e.g. `--set ensemble.n_samples=4`
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Use the full-size presets instead of the desk-sized ones
    #[arg(long, global = true)]
    full: bool,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plug-in MSE ratios over covariance, taper and range combinations
    MseSweep,
    /// Forecast and measured sparsity against taper range
    SparsityTable,
    /// Ensemble experiment comparing F, T and HT conditioning
    Experiment {
        /// profile1d, connectivity2d, transit2d or connectivity3d
        #[arg(long)]
        kind: Option<String>,
    },
    /// Sparsity forecast for one covariance and taper
    Forecast {
        #[arg(long)]
        covariance: String,
        /// Rescales the covariance to this effective range
        #[arg(long)]
        effective_range: Option<f64>,
        /// e.g. `wendland1(theta=0.2)`
        #[arg(long)]
        taper: String,
        /// Side lengths of the box domain
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        domain: Vec<f64>,
        #[arg(long)]
        n: usize,
    },
    /// Print the resolved configuration as TOML
    ShowConfig {
        #[arg(long)]
        kind: Option<String>,
    },
    /// Write conditional realizations of one mode
    Simulate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Taper range as a multiple of the effective range
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Experiment preset providing the layout when no config is given
        #[arg(long, default_value = "profile1d")]
        kind: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    #[value(name = "F")]
    F,
    #[value(name = "T")]
    T,
    #[value(name = "HT")]
    Ht,
}

impl From<Mode> for ConditioningMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::F => ConditioningMode::F,
            Mode::T => ConditioningMode::T,
            Mode::Ht => ConditioningMode::HT,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Raw,
}

impl Global {
    fn scale(&self) -> Scale {
        if self.full {
            Scale::Full
        } else {
            Scale::Desk
        }
    }

    /// Loads the configuration and checks it is of kind `want` if given.
    fn load(&self, default: Option<ExperimentKind>, want: Option<ExperimentKind>) -> anyhow::Result<ExperimentConfig> {
        let cfg = config::load(self.config.as_deref(), default, self.scale(), &self.overrides, self.seed)?;
        if let Some(k) = want {
            if cfg.kind != k {
                return Err(Error::Config(format!(
                    "config is of kind `{}` but `{}` was requested",
                    cfg.kind.name(),
                    k.name()
                ))
                .into());
            }
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> anyhow::Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn save_config(dir: &Path, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let text = toml::to_string(cfg).context("serializing config")?;
    fs::write(dir.join("config.toml"), text)?;
    Ok(())
}

fn write_table<'a>(
    path: &Path,
    cfg: &ExperimentConfig,
    header: &str,
    lines: impl Iterator<Item = String> + 'a,
) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_all(csv_preamble(&cfg.digest(), cfg.seed).as_bytes())?;
    writeln!(w, "{header}")?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn mse_sweep(g: &Global) -> anyhow::Result<()> {
    let cfg = g.load(Some(ExperimentKind::MseSweep), Some(ExperimentKind::MseSweep))?;
    let rows = run_mse_sweep(cfg.mse_sweep.as_ref().expect("validated"), cfg.seed)?;
    let dir = g.out_dir()?;
    save_config(dir, &cfg)?;
    write_table(&dir.join("mse_sweep.csv"), &cfg, MseSweepRow::CSV_HEADER, rows.iter().map(|r| r.csv_line()))
}

fn sparsity_table(g: &Global) -> anyhow::Result<()> {
    let kind = ExperimentKind::SparsityCurve;
    let cfg = g.load(Some(kind), Some(kind))?;
    let rows = run_sparsity_table(cfg.sparsity.as_ref().expect("validated"), cfg.seed)?;
    let dir = g.out_dir()?;
    save_config(dir, &cfg)?;
    write_table(&dir.join("sparsity.csv"), &cfg, SparsityRow::CSV_HEADER, rows.iter().map(|r| r.csv_line()))
}

fn experiment(g: &Global, kind: Option<&str>) -> anyhow::Result<()> {
    let kind = kind.map(ExperimentKind::parse).transpose()?;
    let cfg = g.load(kind, kind)?;
    if !cfg.kind.is_ensemble() {
        return Err(Error::Config(format!(
            "`{}` is not an ensemble experiment; use its own subcommand",
            cfg.kind.name()
        ))
        .into());
    }
    let dir = g.out_dir()?;
    save_config(dir, &cfg)?;
    let mut writer = ExperimentWriter::create(dir, &cfg.digest(), cfg.seed)?;
    let ens = cfg.ensemble.as_ref().expect("validated");
    run_ensemble_experiment(ens, cfg.seed, |o| {
        log::info!("{}: ratio {} done", cfg.kind.name(), o.theta_ratio);
        writer.write_theta(o)
    })?;
    Ok(())
}

fn forecast(
    covariance: &str,
    effective_range: Option<f64>,
    taper: &str,
    domain: &[f64],
    n: usize,
) -> anyhow::Result<()> {
    let mut cov: CovarianceSpec = covariance.parse()?;
    if let Some(r) = effective_range {
        cov = cov.with_effective_range(r)?;
    }
    let taper: Taper = taper.parse()?;
    let domain = BoxDomain::new(domain.to_vec())?;
    let rep = forecast_report(&cov, &taper, &domain, n)?;
    let f = &rep.forecast;
    println!(
        "theta_norm={:.6} F_d={:.6} S={:.6} dim={} n={} tail={} ({})",
        f.theta_norm, f.cdf, f.index, f.dim, f.n, rep.tail.satisfied, rep.tail.gamma_note
    );
    Ok(())
}

fn simulate(g: &Global, mode: Mode, ratio: f64, format: Format, kind: &str) -> anyhow::Result<()> {
    let default = ExperimentKind::parse(kind)?;
    let cfg = g.load(Some(default), None)?;
    let Some(ens) = cfg.ensemble.as_ref() else {
        return Err(Error::Config(format!("`{}` has no ensemble layout", cfg.kind.name())).into());
    };
    if !(ratio > 0.0) {
        bail!(Error::Config(format!("ratio must be positive (got {ratio})")));
    }
    let spec = ens.ensemble_spec(ratio)?;
    let mode = ConditioningMode::from(mode);
    let ensemble = run_ensemble(&spec, mode, cfg.seed, &cfg.digest())?;
    let dir = g.out_dir()?;
    save_config(dir, &cfg)?;
    // `0.5` becomes `0p5` so the stem carries no extension
    let tag = ratio.to_string().replace('.', "p");
    let stem = dir.join(format!("ensemble_{}_{tag}", mode.name()));
    match format {
        Format::Csv => {
            let path = stem.with_extension("csv");
            let mut w = BufWriter::new(File::create(&path)?);
            w.write_all(csv_preamble(&cfg.digest(), cfg.seed).as_bytes())?;
            ensemble.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Raw => ensemble.write_raw(&stem)?,
    }
    log::info!("{} realizations written to {}", ensemble.len(), dir.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    if let Some(n) = g.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::MseSweep => mse_sweep(g),
        Command::SparsityTable => sparsity_table(g),
        Command::Experiment { kind } => experiment(g, kind.as_deref()),
        Command::ShowConfig { kind } => {
            let kind = kind.as_deref().map(ExperimentKind::parse).transpose()?;
            let cfg = g.load(kind, kind)?;
            print!("{}", toml::to_string(&cfg).context("serializing config")?);
            println!("# digest {}", cfg.digest());
            Ok(())
        }
        Command::Forecast {
            covariance,
            effective_range,
            taper,
            domain,
            n,
        } => forecast(covariance, *effective_range, taper, domain, *n),
        Command::Simulate {
            mode,
            ratio,
            format,
            kind,
        } => simulate(g, *mode, *ratio, *format, kind),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_)) => 2,
        Some(Error::Numerical(_) | Error::NotPositiveDefinite { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
