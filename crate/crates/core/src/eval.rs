//! Leave-one-out orphan screening protocol.
//!
//! Every draw subsamples each target's ligands, tunes and trains one SVR per
//! target, then treats each target in turn as the orphan. Methods only ever
//! see the orphan's inputs (an [`OrphanView`]); its labels are read after all
//! predictions exist, to compute the RMSE.
//!
//! A supervised model depends only on its own target's data and on the seed
//! stream of `(seed, draw, target)`, so it is trained once per draw and shared
//! by every fold in which that target is supervised. Work units draw their
//! randomness from [`unit_seed`], which makes results independent of the
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    avg_clo_weights, avg_weights, closest_indices, extreme_weights, supervised_fraction_eval, tlk_tune_and_train,
    BaselineSpec, Extreme,
};
use crate::cp::{model_gram, model_predictions, predict_orphan_beta, scp_weights, solve_cp_beta, CpConfig, CpSolution, CpSystem};
use crate::data::{normalize_for_orphan_over, Normalization, Target, TargetBenchmark};
use crate::error::{Error, Result};
use crate::kernels::{FeatureVector, KernelSpec};
use crate::numerics::Matrix;
use crate::svr::{default_c_grid, default_eps_grid, tune_and_train, SvrModel};

pub const DEFAULT_FRACTIONS: [f64; 5] = [0.05, 0.10, 0.30, 0.50, 0.80];

/// Root mean squared error.
pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "rmse needs equal non-zero lengths, got {} and {}",
            predictions.len(),
            labels.len()
        )));
    }
    let sq: f64 = predictions.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((sq / predictions.len() as f64).sqrt())
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one work unit, derived from the protocol seed, a draw index and a
/// tag (usually a target id).
pub fn unit_seed(seed: u64, draw: u64, tag: &str) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(draw));
    for b in tag.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    splitmix64(h ^ tag.len() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n_draws: usize,
    pub ligands_per_draw: usize,
    pub seed: u64,
    pub cp: CpConfig,
    pub c_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub folds: usize,
    pub kernel: KernelSpec,
    pub normalization: Normalization,
    /// Feed TLK raw orphan similarities instead of the normalized row.
    pub tlk_raw_similarity: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n_draws: 10,
            ligands_per_draw: 240,
            seed: 0,
            cp: CpConfig::default(),
            c_grid: default_c_grid(),
            eps_grid: default_eps_grid(),
            folds: 3,
            kernel: KernelSpec::Linear,
            normalization: Normalization::OrphanRow,
            tlk_raw_similarity: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 || self.ligands_per_draw == 0 {
            return Err(Error::invalid("n_draws and ligands_per_draw must be >= 1"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds must be >= 2"));
        }
        if self.c_grid.is_empty() || self.eps_grid.is_empty() {
            return Err(Error::invalid("hyperparameter grids must be non-empty"));
        }
        if self.c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::invalid("every C in the grid must be > 0"));
        }
        if self.eps_grid.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return Err(Error::invalid("every epsilon in the grid must be >= 0"));
        }
        self.cp.validate()?;
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub target_id: String,
    pub per_draw_rmse: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub median: f64,
    pub mean: f64,
}

/// A method cell that could not be computed; it is left out of all statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub target_id: String,
    pub draw: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub per_target: Vec<TargetResult>,
    /// Absent when every cell failed.
    pub aggregate: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
}

impl EvaluationReport {
    /// Builds a report from `cells[target][draw]`.
    pub fn from_cells(method: &str, target_ids: &[&str], cells: &[Vec<std::result::Result<f64, String>>]) -> Self {
        let mut per_target = Vec::new();
        let mut failures = Vec::new();
        let mut all = Vec::new();
        for (id, row) in target_ids.iter().zip(cells) {
            let mut values = Vec::new();
            for (draw, cell) in row.iter().enumerate() {
                match cell {
                    Ok(v) => values.push(*v),
                    Err(m) => failures.push(Failure { target_id: id.to_string(), draw, message: m.clone() }),
                }
            }
            if let (Some(mean), Some(median)) = (mean(&values), median(&values)) {
                all.extend(&values);
                per_target.push(TargetResult { target_id: id.to_string(), per_draw_rmse: values, mean, median });
            }
        }
        let aggregate = match (median(&all), mean(&all)) {
            (Some(median), Some(mean)) => Some(Aggregate { median, mean }),
            _ => None,
        };
        EvaluationReport { method: method.to_string(), per_target, aggregate, failures }
    }

    /// Every per-target-per-draw RMSE.
    pub fn all_rmse(&self) -> Vec<f64> {
        self.per_target.iter().flat_map(|t| t.per_draw_rmse.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        for t in &self.per_target {
            if t.per_draw_rmse.is_empty() || t.per_draw_rmse.iter().any(|&v| bad(v)) || bad(t.mean) || bad(t.median) {
                return Err(Error::Validation(format!(
                    "report {:?}: RMSE values of {:?} must be finite and non-negative",
                    self.method, t.target_id
                )));
            }
        }
        if let Some(a) = &self.aggregate {
            if bad(a.median) || bad(a.mean) {
                return Err(Error::Validation(format!("report {:?}: aggregate must be finite", self.method)));
            }
        }
        Ok(())
    }
}

/// Plain-text table of method against aggregate RMSE.
pub fn summary_table(reports: &[EvaluationReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(0).max("method".len());
    let mut out = format!("{:<width$}  {:>12}  {:>12}  {:>6}  {:>8}\n", "method", "median_rmse", "mean_rmse", "cells", "failures");
    for r in reports {
        let (med, mn) = match &r.aggregate {
            Some(a) => (format!("{:.4}", a.median), format!("{:.4}", a.mean)),
            None => ("-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{:<width$}  {:>12}  {:>12}  {:>6}  {:>8}\n",
            r.method,
            med,
            mn,
            r.all_rmse().len(),
            r.failures.len()
        ));
    }
    out
}

/// Per-target uniform subsample of `m` ligands without replacement, in
/// original order; the stream of each target depends on `(seed, id)` only.
pub fn draw_subsample(bench: &TargetBenchmark, m: usize, seed: u64) -> Result<TargetBenchmark> {
    let mut targets = Vec::with_capacity(bench.targets.len());
    for t in &bench.targets {
        let len = t.dataset.len();
        if len < m {
            return Err(Error::invalid(format!("target {:?} has {len} ligands, fewer than {m}", t.id)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(seed, 0, &t.id));
        let mut idx = rand::seq::index::sample(&mut rng, len, m).into_vec();
        idx.sort_unstable();
        targets.push(Target {
            id: t.id.clone(),
            ligand_ids: idx.iter().map(|&i| t.ligand_ids[i].clone()).collect(),
            dataset: t.dataset.subset(&idx),
            sequence: t.sequence.clone(),
        });
    }
    TargetBenchmark::new(targets, bench.similarity.clone())
}

/// The orphan as methods see it: an id and unlabeled inputs.
#[derive(Debug, Clone, Copy)]
pub struct OrphanView<'a> {
    pub id: &'a str,
    pub inputs: &'a [FeatureVector],
}

/// Per-target models of one draw and their pairwise inner products.
#[derive(Debug, Clone)]
pub struct DrawModels {
    pub models: Vec<std::result::Result<SvrModel, String>>,
    /// `⟨h_i, h_j⟩` for trained models; unused entries are zero.
    pub gram: Matrix,
}

/// Tunes and trains one SVR per target of `bench` on its own data.
pub fn train_supervised(bench: &TargetBenchmark, protocol: &ProtocolConfig, draw: usize) -> DrawModels {
    let models: Vec<_> = bench
        .targets
        .par_iter()
        .map(|t| {
            let seed = unit_seed(protocol.seed, draw as u64, &format!("svr/{}", t.id));
            tune_and_train(&t.dataset, &protocol.c_grid, &protocol.eps_grid, &protocol.kernel, protocol.folds, seed)
                .map(|(_, m)| m)
                .map_err(|e| format!("training the model of {:?} failed: {e}", t.id))
        })
        .collect();
    let ok: Vec<usize> = (0..models.len()).filter(|&i| models[i].is_ok()).collect();
    let trained: Vec<SvrModel> = ok.iter().map(|&i| models[i].clone().unwrap()).collect();
    let mut gram = Matrix::zeros(models.len(), models.len());
    if let Ok(g) = model_gram(&trained) {
        for (a, &i) in ok.iter().enumerate() {
            for (b, &j) in ok.iter().enumerate() {
                gram[(i, j)] = g[(a, b)];
            }
        }
    }
    DrawModels { models, gram }
}

/// Predictions of every method for one orphan fold.
///
/// The orphan's labels are never passed on: methods receive an
/// [`OrphanView`] and the supervised targets' data and models.
pub fn orphan_predictions(
    bench: &TargetBenchmark,
    draw_models: &DrawModels,
    orphan: usize,
    methods: &[BaselineSpec],
    protocol: &ProtocolConfig,
    draw: usize,
) -> Vec<std::result::Result<Vec<f64>, String>> {
    let target = &bench.targets[orphan];
    let view = OrphanView { id: &target.id, inputs: &target.dataset.inputs };
    let supervised: Vec<usize> = (0..bench.targets.len()).filter(|&i| i != orphan).collect();
    let fold = match FoldContext::new(bench, draw_models, &supervised, view, protocol) {
        Ok(f) => f,
        Err(e) => return methods.iter().map(|_| Err(e.to_string())).collect(),
    };
    methods
        .iter()
        .map(|m| fold.predict(*m, protocol, draw).map_err(|e| e.to_string()))
        .collect()
}

struct FoldContext<'a> {
    bench: &'a TargetBenchmark,
    draw_models: &'a DrawModels,
    supervised: &'a [usize],
    view: OrphanView<'a>,
    orphan_sims: Vec<f64>,
    self_sims: Vec<f64>,
    /// `P[x][i]`: supervised model `i` at orphan input `x`, once all models exist.
    model_preds: std::result::Result<Matrix, String>,
}

impl<'a> FoldContext<'a> {
    fn new(
        bench: &'a TargetBenchmark,
        draw_models: &'a DrawModels,
        supervised: &'a [usize],
        view: OrphanView<'a>,
        protocol: &ProtocolConfig,
    ) -> Result<Self> {
        let ids: Vec<&str> = supervised.iter().map(|&i| bench.targets[i].id.as_str()).collect();
        let (orphan_sims, self_sims) =
            normalize_for_orphan_over(&bench.similarity, view.id, &ids, protocol.normalization)?;
        let model_preds = supervised
            .iter()
            .map(|&i| draw_models.models[i].clone())
            .collect::<std::result::Result<Vec<_>, String>>()
            .and_then(|models| model_predictions(&models, view.inputs).map_err(|e| e.to_string()));
        Ok(FoldContext { bench, draw_models, supervised, view, orphan_sims, self_sims, model_preds })
    }

    fn beta_predictions(&self, beta: &CpSolution) -> Result<Vec<f64>> {
        let preds = self.model_preds.as_ref().map_err(|e| Error::invalid(e.clone()))?;
        predict_orphan_beta(beta, preds)
    }

    fn predict(&self, method: BaselineSpec, protocol: &ProtocolConfig, draw: usize) -> Result<Vec<f64>> {
        let os = &self.orphan_sims;
        match method {
            BaselineSpec::Cp => {
                let g = Matrix::from_fn(self.supervised.len(), self.supervised.len(), |a, b| {
                    self.draw_models.gram[(self.supervised[a], self.supervised[b])]
                });
                let system = CpSystem::from_gram(g, os, &self.self_sims)?;
                self.beta_predictions(&solve_cp_beta(&system, &protocol.cp)?)
            }
            BaselineSpec::Scp => {
                self.beta_predictions(&CpSolution::Beta(scp_weights(os, &self.self_sims)?))
            }
            BaselineSpec::Avg => self.beta_predictions(&CpSolution::Beta(avg_weights(os.len())?)),
            BaselineSpec::Closest => self.beta_predictions(&CpSolution::Beta(extreme_weights(os, Extreme::Closest)?)),
            BaselineSpec::Farthest => self.beta_predictions(&CpSolution::Beta(extreme_weights(os, Extreme::Farthest)?)),
            BaselineSpec::AvgClo(k) => self.beta_predictions(&CpSolution::Beta(avg_clo_weights(os, k)?)),
            BaselineSpec::Tlk => self.tlk(None, protocol, draw),
            BaselineSpec::TlkClo(k) => self.tlk(Some(closest_indices(os, k)?), protocol, draw),
            BaselineSpec::SupervisedFraction(_) => {
                Err(Error::invalid("supervised_fraction needs the orphan's labels and is not an orphan method"))
            }
        }
    }

    fn tlk(&self, restrict: Option<Vec<usize>>, protocol: &ProtocolConfig, draw: usize) -> Result<Vec<f64>> {
        let targets: Vec<&Target> = self.supervised.iter().map(|&i| &self.bench.targets[i]).collect();
        let ids: Vec<&str> = targets.iter().map(|t| t.id.as_str()).collect();
        let datasets: Vec<_> = targets.iter().map(|t| t.dataset.clone()).collect();
        let sims = self.bench.similarity.restrict(&ids)?;
        let tag = match &restrict {
            Some(r) => format!("tlk/{}/{r:?}", self.view.id),
            None => format!("tlk/{}", self.view.id),
        };
        let seed = unit_seed(protocol.seed, draw as u64, &tag);
        let (_, model) = tlk_tune_and_train(
            &datasets,
            &sims,
            &protocol.c_grid,
            &protocol.eps_grid,
            &protocol.kernel,
            protocol.folds,
            seed,
            restrict.as_deref(),
        )?;
        let row: Vec<f64> = if protocol.tlk_raw_similarity {
            ids.iter().map(|id| self.bench.similarity.get(self.view.id, id)).collect::<Result<_>>()?
        } else {
            self.orphan_sims.clone()
        };
        model.predict_many(&row, self.view.inputs)
    }
}

/// Leave-one-out orphan evaluation; one report per method, in order.
pub fn loo_orphan(
    bench: &TargetBenchmark,
    methods: &[BaselineSpec],
    protocol: &ProtocolConfig,
) -> Result<Vec<EvaluationReport>> {
    protocol.validate()?;
    if bench.targets.len() < 2 {
        return Err(Error::invalid("leave-one-out needs at least two targets"));
    }
    if let Some(m) = methods.iter().find(|m| matches!(m, BaselineSpec::SupervisedFraction(_))) {
        return Err(Error::invalid(format!("{m} is a supervised bound, not an orphan method")));
    }
    // cells[draw][orphan][method]
    let cells: Vec<Vec<Vec<std::result::Result<f64, String>>>> = (0..protocol.n_draws)
        .into_par_iter()
        .map(|d| -> Result<_> {
            let sub = draw_subsample(bench, protocol.ligands_per_draw, unit_seed(protocol.seed, d as u64, "draw"))?;
            let models = train_supervised(&sub, protocol, d);
            Ok((0..sub.targets.len())
                .into_par_iter()
                .map(|o| {
                    let labels = &sub.targets[o].dataset.labels;
                    orphan_predictions(&sub, &models, o, methods, protocol, d)
                        .into_iter()
                        .map(|p| p.and_then(|p| rmse(&p, labels).map_err(|e| e.to_string())))
                        .map(|r| match r {
                            Ok(v) if !v.is_finite() => Err("non-finite RMSE".to_string()),
                            other => other,
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let ids = bench.ids();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let per_target: Vec<Vec<_>> =
                (0..ids.len()).map(|o| (0..protocol.n_draws).map(|d| cells[d][o][k].clone()).collect()).collect();
            EvaluationReport::from_cells(&m.to_string(), &ids, &per_target)
        })
        .collect())
}

/// Upper bounds from training on a fraction of each target's own ligands;
/// one report per fraction.
pub fn supervised_bounds(
    bench: &TargetBenchmark,
    fractions: &[f64],
    protocol: &ProtocolConfig,
) -> Result<Vec<EvaluationReport>> {
    protocol.validate()?;
    let specs = fractions
        .iter()
        .map(|&f| format!("supervised_fraction({f})").parse::<BaselineSpec>())
        .collect::<Result<Vec<_>>>()?;
    let subs = (0..protocol.n_draws)
        .map(|d| draw_subsample(bench, protocol.ligands_per_draw, unit_seed(protocol.seed, d as u64, "draw")))
        .collect::<Result<Vec<_>>>()?;
    let ids = bench.ids();
    Ok(specs
        .iter()
        .zip(fractions)
        .map(|(spec, &f)| {
            let per_target: Vec<Vec<_>> = (0..ids.len())
                .into_par_iter()
                .map(|o| {
                    (0..protocol.n_draws)
                        .map(|d| {
                            let seed = unit_seed(protocol.seed, d as u64, &format!("fraction/{}/{f}", ids[o]));
                            supervised_fraction_eval(
                                &subs[d].targets[o].dataset,
                                f,
                                &protocol.c_grid,
                                &protocol.eps_grid,
                                &protocol.kernel,
                                protocol.folds,
                                seed,
                            )
                            .map_err(|e| e.to_string())
                        })
                        .collect()
                })
                .collect();
            EvaluationReport::from_cells(&spec.to_string(), &ids, &per_target)
        })
        .collect())
}
