use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ltsurf::calculus::QvMode;
use ltsurf::formulas::{IndicatorMode, Variant};
use ltsurf::harness::{
    compare_estimators, convergence_study, envelope_table, find_scenario, list_scenarios, run_scenario, simulate_paths,
    write_bundles_csv, write_json, BandwidthRule, ConfigFile, HarnessError, Params, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "ltsurf", version, about = "Local time on surfaces: simulation and pathwise formula checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit raw path bundles as CSV.
    Simulate(RunArgs),
    /// Evaluate a formula variant over an ensemble.
    Verify(RunArgs),
    /// Median |residual| across a list of decreasing steps.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        dts: Vec<f64>,
    },
    /// Compare the three local-time estimators at a level.
    Localtime {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0.0)]
        level: f64,
    },
    /// Moreau envelope table of a scenario's surface.
    Envelope {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        m: Vec<f64>,
        /// Query points per axis.
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Search points per axis and refinement round.
        #[arg(long, default_value_t = 41)]
        search_n: usize,
    },
    /// List registry scenarios.
    Scenarios,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario parameter, repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, value_parser = parse_qv)]
    qv: Option<QvMode>,
    /// `coupled` (3√dt) or a fixed positive value.
    #[arg(long)]
    bandwidth: Option<BandwidthRule>,
    #[arg(long, value_parser = parse_indicator)]
    indicator: Option<IndicatorMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got '{s}'"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("parameter '{k}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_qv(s: &str) -> Result<QvMode, String> {
    match s {
        "analytic" => Ok(QvMode::Analytic),
        "realized" => Ok(QvMode::Realized),
        _ => Err(format!("qv must be 'analytic' or 'realized', got '{s}'")),
    }
}

fn parse_indicator(s: &str) -> Result<IndicatorMode, String> {
    match s {
        "strict" => Ok(IndicatorMode::Strict),
        "one" => Ok(IndicatorMode::One),
        _ => Err(format!("indicator must be 'strict' or 'one', got '{s}'")),
    }
}

impl RunArgs {
    fn resolve(self) -> Result<ScenarioConfig, HarnessError> {
        let base = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            scenario: self.scenario,
            params: self.params.into_iter().collect::<Params>(),
            t_end: self.t_end,
            dt: self.dt,
            paths: self.paths,
            seed: self.seed,
            variant: self.variant,
            qv: self.qv,
            bandwidth: self.bandwidth,
            indicator: self.indicator,
            out: self.out,
            threads: self.threads,
        };
        ScenarioConfig::from_file(base.overlay(flags))
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), HarnessError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn emit(config: &ScenarioConfig, file: &str, value: &impl serde::Serialize) -> Result<(), HarnessError> {
    match &config.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_json(&dir.join(file), value)
        }
        None => print_json(value),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let bundles = simulate_paths(&cfg)?;
            match &cfg.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    write_bundles_csv(std::fs::File::create(dir.join("bundles.csv"))?, &bundles)
                }
                None => write_bundles_csv(std::io::stdout().lock(), &bundles),
            }
        }
        Command::Verify(args) => {
            let cfg = args.resolve()?;
            let summary = run_scenario(&cfg)?;
            match &cfg.out {
                Some(dir) => {
                    println!(
                        "{} / {}: median |residual| {:.6e}, wrote {}",
                        summary.scenario,
                        summary.variant,
                        summary.abs_residual.median,
                        dir.display()
                    );
                    Ok(())
                }
                None => print_json(&summary),
            }
        }
        Command::Converge { run, dts } => {
            let cfg = run.resolve()?;
            let table = convergence_study(&cfg, &dts)?;
            if cfg.out.is_none() {
                print_json(&table)?;
            }
            Ok(())
        }
        Command::Localtime { run, level } => {
            let cfg = run.resolve()?;
            let cmp = compare_estimators(&cfg, level)?;
            if cfg.out.is_none() {
                print_json(&cmp)?;
            }
            Ok(())
        }
        Command::Envelope {
            run,
            m,
            grid,
            search_n,
        } => {
            let cfg = run.resolve()?;
            let model = find_scenario(&cfg.scenario)?.build(&cfg.params)?;
            let table = envelope_table(&model.psf.surface, model.test_box, &m, grid, search_n)?;
            emit(&cfg, "envelope.json", &table)
        }
        Command::Scenarios => {
            let infos: Vec<_> = list_scenarios().iter().map(|s| s.info()).collect();
            print_json(&infos)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
