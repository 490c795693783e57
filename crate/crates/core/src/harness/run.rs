use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::output::{write_json, write_reports_csv, REPORTS_CSV, SUMMARY_JSON};
use super::registry::{find_scenario, Params, ScenarioModel};
use super::stats::{median, SampleStats};
use super::HarnessError;
use crate::calculus::{continuous_qv_measure, QvMeasure};
use crate::formulas::{
    verify_general, verify_ito, verify_jump_ltc, verify_ltc_diffusion, verify_smooth_fit, verify_surfaces_strong,
    verify_tanaka, FormulaError, FormulaInputs, FormulaReport, GeneratorSpec, Variant,
};
use crate::localtime::{
    local_time_mollifier, local_time_occupation, local_time_tanaka_residual, MollifierSpec, Side,
};
use crate::paths::{simulate_jump_diffusion, PathBundle};
use crate::seed::derive_seed;
use crate::surfaces::{moreau_envelope, Surface};

const SEED_RULE: &str = "path i uses ChaCha8 streams keyed by splitmix64(master seed, i)";

/// Tolerance of the smooth-fit precondition on the scenario test grid.
const SMOOTH_FIT_TOL: f64 = 1e-9;

/// Evaluates one formula variant on one path.
pub fn evaluate(
    variant: Variant,
    model: &ScenarioModel,
    inputs: &FormulaInputs<'_>,
) -> Result<FormulaReport, FormulaError> {
    let psf = &model.psf;
    match variant {
        Variant::Tanaka => verify_tanaka(inputs, model.level),
        Variant::LtcDiffusion => verify_ltc_diffusion(psf, inputs),
        Variant::SurfacesStrong => verify_surfaces_strong(psf, inputs),
        Variant::JumpLtc => verify_jump_ltc(psf, inputs),
        Variant::SmoothFit => verify_smooth_fit(psf, inputs),
        Variant::General => match &model.generator {
            Some(g) => verify_general(psf, g, inputs),
            None => verify_general(psf, &GeneratorSpec::diffusion_generator(psf), inputs),
        },
        Variant::Ito => verify_ito(psf, inputs),
    }
}

/// Rejects pairings whose hypotheses fail for the scenario as a whole.
fn check_compatible(scenario: &str, variant: Variant, model: &ScenarioModel) -> Result<(), HarnessError> {
    let fail = |why: String| Err(HarnessError::Incompatible(format!("{variant} on '{scenario}': {why}")));
    match variant {
        Variant::LtcDiffusion if !model.spec.is_continuous() => fail("the scenario has jumps".into()),
        Variant::JumpLtc if !model.psf.surface.is_lipschitz() => {
            fail(format!("surface '{}' is not declared Lipschitz", model.psf.surface.name()))
        }
        Variant::SmoothFit => {
            let gap = model.psf.max_fx_jump(model.test_box, 41);
            if gap <= SMOOTH_FIT_TOL {
                Ok(())
            } else {
                fail(format!("fx_jump reaches {gap:e} on the test grid"))
            }
        }
        _ => Ok(()),
    }
}

/// Maps `f` over path indices on the configured pool; results keep index order.
fn map_paths<T: Send>(
    config: &ScenarioConfig,
    f: impl Fn(usize) -> Result<T, HarnessError> + Sync + Send,
) -> Result<Vec<T>, HarnessError> {
    let run = || (0..config.n_paths).into_par_iter().map(&f).collect::<Vec<_>>();
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

fn simulate_one(
    model: &ScenarioModel,
    config: &ScenarioConfig,
    i: usize,
) -> Result<(u64, PathBundle, QvMeasure), HarnessError> {
    let seed = derive_seed(config.seed, i as u64);
    let bundle = simulate_jump_diffusion(&model.spec, config.t_end, config.n_steps(), seed)?;
    let qv = continuous_qv_measure(&bundle, Some(&model.spec), config.qv_mode)?;
    Ok((seed, bundle, qv))
}

fn prepare(config: &ScenarioConfig) -> Result<(ScenarioModel, Variant), HarnessError> {
    config.validate()?;
    let scenario = find_scenario(&config.scenario)?;
    let model = scenario.build(&config.params)?;
    let variant = config.variant.unwrap_or(scenario.variant);
    check_compatible(scenario.name, variant, &model)?;
    Ok((model, variant))
}

/// Per-path formula reports in path-index order.
pub fn run_reports(config: &ScenarioConfig) -> Result<Vec<FormulaReport>, HarnessError> {
    let (model, variant) = prepare(config)?;
    let eps = config.bandwidth_value();
    map_paths(config, |i| {
        let (seed, bundle, qv) = simulate_one(&model, config, i)?;
        let inputs = FormulaInputs::new(&bundle, &qv, eps).with_indicator(config.indicator);
        let mut report = evaluate(variant, &model, &inputs)?;
        report.metadata.seed = Some(seed);
        if !report.residual.is_finite() || report.terms.iter().any(|(_, v)| !v.is_finite()) {
            return Err(HarnessError::Numerical(format!(
                "non-finite term on path {i} (seed {seed}) of '{}'",
                config.scenario
            )));
        }
        Ok(report)
    })
}

/// Simulated bundles in path-index order.
pub fn simulate_paths(config: &ScenarioConfig) -> Result<Vec<PathBundle>, HarnessError> {
    config.validate()?;
    let model = find_scenario(&config.scenario)?.build(&config.params)?;
    map_paths(config, |i| simulate_one(&model, config, i).map(|(_, b, _)| b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ScenarioConfig,
    pub resolved_params: Params,
    pub code_version: String,
    pub variant: Variant,
    pub n_steps: usize,
    pub bandwidth: f64,
    pub seed_rule: String,
    pub path_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub scenario: String,
    pub variant: Variant,
    pub n_paths: usize,
    pub lhs: SampleStats,
    pub terms: Vec<(String, SampleStats)>,
    pub rhs: SampleStats,
    pub residual: SampleStats,
    pub abs_residual: SampleStats,
    pub aux: Vec<(String, SampleStats)>,
    pub local_time_estimator: Option<String>,
    pub hypothesis: Option<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub reports: Vec<FormulaReport>,
}

impl EnsembleSummary {
    pub fn from_reports(config: &ScenarioConfig, reports: Vec<FormulaReport>) -> Result<Self, HarnessError> {
        let scenario = find_scenario(&config.scenario)?;
        let first = reports
            .first()
            .ok_or_else(|| HarnessError::Config("no reports to summarise".into()))?;
        let column = |f: &dyn Fn(&FormulaReport) -> f64| SampleStats::of(&reports.iter().map(f).collect::<Vec<_>>());
        let terms = first
            .terms
            .iter()
            .enumerate()
            .map(|(j, (name, _))| (name.clone(), column(&|r| r.terms[j].1)))
            .collect();
        let aux = first
            .metadata
            .aux
            .iter()
            .map(|(name, _)| (name.clone(), column(&|r| r.aux(name).unwrap_or(f64::NAN))))
            .collect();
        let provenance = Provenance {
            config: config.clone(),
            resolved_params: scenario.resolve_params(&config.params)?,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            variant: first.variant,
            n_steps: config.n_steps(),
            bandwidth: config.bandwidth_value(),
            seed_rule: SEED_RULE.to_string(),
            path_seeds: reports.iter().filter_map(|r| r.metadata.seed).collect(),
        };
        Ok(Self {
            scenario: config.scenario.clone(),
            variant: first.variant,
            n_paths: reports.len(),
            lhs: column(&|r| r.lhs),
            terms,
            rhs: column(&|r| r.rhs),
            residual: column(&|r| r.residual),
            abs_residual: column(&|r| r.residual.abs()),
            aux,
            local_time_estimator: first.metadata.local_time.clone(),
            hypothesis: first.metadata.hypothesis.clone(),
            provenance,
            reports,
        })
    }

    pub fn term(&self, name: &str) -> Option<&SampleStats> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Simulates, evaluates and aggregates; writes the per-path CSV and the JSON
/// summary into `config.out` when set.
pub fn run_scenario(config: &ScenarioConfig) -> Result<EnsembleSummary, HarnessError> {
    let reports = run_reports(config)?;
    let summary = EnsembleSummary::from_reports(config, reports)?;
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        write_reports_csv(&dir.join(REPORTS_CSV), &summary.reports)?;
        write_json(&dir.join(SUMMARY_JSON), &summary)?;
    }
    info!(
        "{} / {}: median |residual| {:e} over {} paths",
        summary.scenario, summary.variant, summary.abs_residual.median, summary.n_paths
    );
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub bandwidth: f64,
    pub n_paths: usize,
    pub abs_residual_median: f64,
    pub residual_mean: f64,
    pub residual_std_error: Option<f64>,
    pub local_time_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub variant: Variant,
    pub rows: Vec<ConvergenceRow>,
    /// Ratio of consecutive medians, coarse over fine.
    pub ratios: Vec<f64>,
    /// Median `|residual|` never increases down the table.
    pub nonincreasing: bool,
}

/// One summary row per `dt`, in the given (strictly decreasing) order.
pub fn convergence_study(config: &ScenarioConfig, dt_list: &[f64]) -> Result<ConvergenceTable, HarnessError> {
    if dt_list.len() < 2 {
        return Err(HarnessError::Config("a convergence study needs at least two dt values".into()));
    }
    if dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HarnessError::Config("dt values must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(dt_list.len());
    let mut variant = None;
    for &dt in dt_list {
        let cfg = ScenarioConfig {
            dt,
            out: None,
            ..config.clone()
        };
        let s = run_scenario(&cfg)?;
        variant = Some(s.variant);
        rows.push(ConvergenceRow {
            dt,
            bandwidth: cfg.bandwidth_value(),
            n_paths: s.n_paths,
            abs_residual_median: s.abs_residual.median,
            residual_mean: s.residual.mean,
            residual_std_error: s.residual.std_error,
            local_time_mean: s.term("local_time").map(|t| t.mean),
        });
    }
    let ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| w[0].abs_residual_median / w[1].abs_residual_median)
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].abs_residual_median <= w[0].abs_residual_median);
    let table = ConvergenceTable {
        scenario: config.scenario.clone(),
        variant: variant.expect("at least two rows"),
        rows,
        ratios,
        nonincreasing,
    };
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("convergence.json"), &table)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub estimator: String,
    pub stats: SampleStats,
    /// Paths whose series failed to be nondecreasing.
    pub nonmonotone_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorComparison {
    pub scenario: String,
    pub level: f64,
    pub bandwidth: f64,
    pub n_paths: usize,
    /// Terminal local time per estimator: right occupation, mollifier `J^n` with `n = 1/ε`, Tanaka residual.
    pub rows: Vec<EstimatorRow>,
}

impl EstimatorComparison {
    pub fn mean(&self, estimator: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.estimator == estimator).map(|r| r.stats.mean)
    }

    /// Largest pairwise relative gap between estimator means.
    pub fn max_pairwise_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                let scale = a.stats.mean.abs().max(b.stats.mean.abs());
                gap = gap.max((a.stats.mean - b.stats.mean).abs() / scale);
            }
        }
        gap
    }
}

/// Terminal local time at `level` under each estimator, over the scenario's ensemble.
pub fn compare_estimators(config: &ScenarioConfig, level: f64) -> Result<EstimatorComparison, HarnessError> {
    config.validate()?;
    let model = find_scenario(&config.scenario)?.build(&config.params)?;
    let eps = config.bandwidth_value();
    let surface = Surface::level(level);
    let rho = MollifierSpec::parabolic();
    let per_path = map_paths(config, |i| {
        let (_, bundle, qv) = simulate_one(&model, config, i)?;
        let series = [
            local_time_occupation(&bundle, &surface, eps, Side::Right, &qv)?,
            local_time_mollifier(&bundle, &surface, 1.0 / eps, &rho, &qv)?,
            local_time_tanaka_residual(&bundle, level),
        ];
        Ok(series.map(|s| (s.terminal(), s.is_nondecreasing())))
    })?;
    let rows = ["occupation", "mollifier", "tanaka"]
        .iter()
        .enumerate()
        .map(|(j, name)| EstimatorRow {
            estimator: name.to_string(),
            stats: SampleStats::of(&per_path.iter().map(|p| p[j].0).collect::<Vec<_>>()),
            nonmonotone_paths: per_path.iter().filter(|p| !p[j].1).count(),
        })
        .collect();
    let out = EstimatorComparison {
        scenario: config.scenario.clone(),
        level,
        bandwidth: eps,
        n_paths: config.n_paths,
        rows,
    };
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("localtime.json"), &out)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// Envelope value per penalty in [`EnvelopeTable::m`].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTable {
    pub surface: String,
    pub m: Vec<f64>,
    pub rows: Vec<EnvelopeRow>,
    /// Largest `envelope − b`; nonpositive up to search accuracy.
    pub max_excess: f64,
    /// Values nondecreasing in `m` at every query point.
    pub monotone: bool,
}

/// Moreau envelope of `surface` on a `queries × queries` grid of the box for each penalty in `ms`.
pub fn envelope_table(
    surface: &Surface,
    search_box: crate::surfaces::SearchBox,
    ms: &[f64],
    queries: usize,
    grid_n: usize,
) -> Result<EnvelopeTable, HarnessError> {
    let q = queries.max(2);
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (q - 1) as f64;
    let mut rows = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            let (t, a) = (at(search_box.t.0, search_box.t.1, i), at(search_box.a.0, search_box.a.1, j));
            let values = ms
                .iter()
                .map(|&m| moreau_envelope(surface, m, (t, a), search_box, grid_n))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(EnvelopeRow {
                t,
                a,
                b: surface.eval(t, a),
                values,
            });
        }
    }
    let max_excess = rows
        .iter()
        .flat_map(|r| r.values.iter().map(move |v| v - r.b))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..ms.len()).collect();
    order.sort_by(|&x, &y| ms[x].total_cmp(&ms[y]));
    let monotone = rows
        .iter()
        .all(|r| order.windows(2).all(|w| r.values[w[1]] >= r.values[w[0]]));
    Ok(EnvelopeTable {
        surface: surface.name().to_string(),
        m: ms.to_vec(),
        rows,
        max_excess,
        monotone,
    })
}

/// Per term pair, the median over paths of `|a.term(x) − b.term(y)|`.
pub fn term_discrepancy(
    a: &[FormulaReport],
    b: &[FormulaReport],
    pairs: &[(&str, &str)],
) -> Result<Vec<(String, f64)>, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::Config(format!("{} reports against {}", a.len(), b.len())));
    }
    pairs
        .iter()
        .map(|&(x, y)| {
            let diffs = a
                .iter()
                .zip(b)
                .map(|(ra, rb)| match (ra.term(x), rb.term(y)) {
                    (Some(u), Some(v)) => Ok((u - v).abs()),
                    _ => Err(HarnessError::Config(format!("missing term '{x}' or '{y}'"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((format!("{x}~{y}"), median(&diffs)))
        })
        .collect()
}
