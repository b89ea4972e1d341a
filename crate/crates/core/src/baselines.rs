//! Comparison methods for orphan screening.
//!
//! Weighting baselines produce a β vector over the supervised models and go
//! through the same prediction path as CP. The target-ligand kernel (TLK)
//! instead trains one joint SVR over all (target, ligand) pairs with the
//! product kernel `k_T(t, t') · k_L(x, x')`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::kernels::{cross_gram, gram, FeatureVector, KernelSpec};
use crate::numerics::{Matrix, Vector};
use crate::svr::{grid_search_gram, predict_many, solve_dual, tune_and_train, LabelledDataset, SvrParams, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BaselineSpec {
    Avg,
    Closest,
    Farthest,
    AvgClo(usize),
    Tlk,
    TlkClo(usize),
    Scp,
    Cp,
    SupervisedFraction(f64),
}

impl fmt::Display for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineSpec::Avg => write!(f, "avg"),
            BaselineSpec::Closest => write!(f, "closest"),
            BaselineSpec::Farthest => write!(f, "farthest"),
            BaselineSpec::AvgClo(k) => write!(f, "avg_clo({k})"),
            BaselineSpec::Tlk => write!(f, "tlk"),
            BaselineSpec::TlkClo(k) => write!(f, "tlk_clo({k})"),
            BaselineSpec::Scp => write!(f, "scp"),
            BaselineSpec::Cp => write!(f, "cp"),
            BaselineSpec::SupervisedFraction(p) => write!(f, "supervised_fraction({p})"),
        }
    }
}

impl FromStr for BaselineSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::invalid(format!("unknown method {s:?}"));
        let (name, arg) = match s.split_once('(') {
            Some((name, rest)) => (name.trim(), Some(rest.strip_suffix(')').ok_or_else(unknown)?.trim())),
            None => (s, None),
        };
        let count = |a: Option<&str>| -> Result<usize> {
            let k: usize = a.ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
            if k == 0 {
                return Err(Error::invalid(format!("{s:?}: k must be >= 1")));
            }
            Ok(k)
        };
        Ok(match (name, arg) {
            ("avg", None) => BaselineSpec::Avg,
            ("closest", None) => BaselineSpec::Closest,
            ("farthest", None) => BaselineSpec::Farthest,
            ("tlk", None) => BaselineSpec::Tlk,
            ("scp", None) => BaselineSpec::Scp,
            ("cp", None) => BaselineSpec::Cp,
            ("avg_clo", a) => BaselineSpec::AvgClo(count(a)?),
            ("tlk_clo", a) => BaselineSpec::TlkClo(count(a)?),
            ("supervised_fraction", Some(a)) => {
                let p: f64 = a.parse().map_err(|_| unknown())?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::invalid(format!("{s:?}: fraction must lie in (0, 1)")));
                }
                BaselineSpec::SupervisedFraction(p)
            }
            _ => return Err(unknown()),
        })
    }
}

impl TryFrom<String> for BaselineSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BaselineSpec> for String {
    fn from(b: BaselineSpec) -> String {
        b.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Closest,
    Farthest,
}

pub fn avg_weights(n: usize) -> Result<Vector> {
    if n == 0 {
        return Err(Error::invalid("cannot average zero models"));
    }
    Ok(Vector::from_element(n, 1.0 / n as f64))
}

/// Index of the largest (closest) or smallest (farthest) similarity; ties go
/// to the smallest index.
pub fn select_extreme(orphan_sims: &[f64], mode: Extreme) -> Result<usize> {
    if orphan_sims.is_empty() {
        return Err(Error::invalid("no similarities to select from"));
    }
    let mut best = 0;
    for (i, &s) in orphan_sims.iter().enumerate().skip(1) {
        let better = match mode {
            Extreme::Closest => s > orphan_sims[best],
            Extreme::Farthest => s < orphan_sims[best],
        };
        if better {
            best = i;
        }
    }
    Ok(best)
}

/// One-hot β selecting the closest or farthest model.
pub fn extreme_weights(orphan_sims: &[f64], mode: Extreme) -> Result<Vector> {
    let mut beta = Vector::zeros(orphan_sims.len());
    beta[select_extreme(orphan_sims, mode)?] = 1.0;
    Ok(beta)
}

/// Indices of the `k` largest similarities, ties by smallest index.
pub fn closest_indices(orphan_sims: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = orphan_sims.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= {n}, got k={k}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| orphan_sims[b].total_cmp(&orphan_sims[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

pub fn avg_clo_weights(orphan_sims: &[f64], k: usize) -> Result<Vector> {
    let mut beta = Vector::zeros(orphan_sims.len());
    for i in closest_indices(orphan_sims, k)? {
        beta[i] = 1.0 / k as f64;
    }
    Ok(beta)
}

/// SVR over (target, ligand) pairs with the product kernel.
///
/// `targets[j]` indexes the training target of pair `j` in the list the model
/// was trained on; prediction takes one similarity per entry of that list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlkModel {
    pub coefficients: Vec<f64>,
    pub targets: Vec<usize>,
    pub inputs: Vec<FeatureVector>,
    pub kernel: KernelSpec,
    pub n_targets: usize,
}

impl TlkModel {
    /// Predictions for a new target with similarity `target_sims[i]` to
    /// training target `i`.
    pub fn predict_many(&self, target_sims: &[f64], xs: &[FeatureVector]) -> Result<Vec<f64>> {
        if target_sims.len() != self.n_targets {
            return Err(Error::invalid(format!(
                "{} target similarities for a model over {} targets",
                target_sims.len(),
                self.n_targets
            )));
        }
        let weighted: Vec<f64> =
            self.coefficients.iter().zip(&self.targets).map(|(p, &t)| p * target_sims[t]).collect();
        let block = cross_gram(&self.kernel, xs, &self.inputs)?;
        Ok((block * Vector::from_vec(weighted)).as_slice().to_vec())
    }
}

struct PooledPairs {
    targets: Vec<usize>,
    inputs: Vec<FeatureVector>,
    labels: Vec<f64>,
}

fn pool_pairs(datasets: &[LabelledDataset], restrict_to: Option<&[usize]>) -> Result<PooledPairs> {
    let all: Vec<usize> = (0..datasets.len()).collect();
    let chosen = restrict_to.unwrap_or(&all);
    let mut pooled = PooledPairs { targets: Vec::new(), inputs: Vec::new(), labels: Vec::new() };
    for &t in chosen {
        let d = datasets.get(t).ok_or_else(|| Error::invalid(format!("target index {t} out of range")))?;
        pooled.targets.extend(std::iter::repeat_n(t, d.len()));
        pooled.inputs.extend(d.inputs.iter().cloned());
        pooled.labels.extend(&d.labels);
    }
    if pooled.inputs.is_empty() {
        return Err(Error::invalid("TLK needs at least one training pair"));
    }
    Ok(pooled)
}

fn joint_gram(kernel: &KernelSpec, pooled: &PooledPairs, target_sims: &Matrix) -> Result<Matrix> {
    let mut k = gram(kernel, &pooled.inputs)?.values;
    for (a, &ta) in pooled.targets.iter().enumerate() {
        for (b, &tb) in pooled.targets.iter().enumerate() {
            k[(a, b)] *= target_sims[(ta, tb)];
        }
    }
    Ok(k)
}

fn check_target_sims(datasets: &[LabelledDataset], target_sims: &Matrix) -> Result<()> {
    let n = datasets.len();
    if target_sims.shape() != (n, n) {
        return Err(Error::invalid(format!("{n} datasets but a {}x{} target similarity matrix", target_sims.nrows(), target_sims.ncols())));
    }
    Ok(())
}

/// Trains TLK with fixed hyperparameters; `target_sims` is the similarity
/// matrix over the supervised targets in dataset order.
pub fn tlk_train(
    datasets: &[LabelledDataset],
    target_sims: &Matrix,
    params: &SvrParams,
    restrict_to: Option<&[usize]>,
) -> Result<TlkModel> {
    params.validate()?;
    check_target_sims(datasets, target_sims)?;
    let pooled = pool_pairs(datasets, restrict_to)?;
    let k = joint_gram(&params.kernel, &pooled, target_sims)?;
    let sol = solve_dual(&k, &pooled.labels, params.c, params.epsilon, params.tol, params.max_passes)?;
    Ok(TlkModel {
        coefficients: sol.coefficients,
        targets: pooled.targets,
        inputs: pooled.inputs,
        kernel: params.kernel.clone(),
        n_targets: datasets.len(),
    })
}

/// Grid search by k-fold CV over the pooled pairs, then a final fit.
#[allow(clippy::too_many_arguments)]
pub fn tlk_tune_and_train(
    datasets: &[LabelledDataset],
    target_sims: &Matrix,
    c_grid: &[f64],
    eps_grid: &[f64],
    kernel: &KernelSpec,
    folds: usize,
    seed: u64,
    restrict_to: Option<&[usize]>,
) -> Result<(SvrParams, TlkModel)> {
    check_target_sims(datasets, target_sims)?;
    let pooled = pool_pairs(datasets, restrict_to)?;
    let k = joint_gram(kernel, &pooled, target_sims)?;
    let (c, eps) = grid_search_gram(&k, &pooled.labels, c_grid, eps_grid, folds, seed, DEFAULT_TOL)?;
    let params = SvrParams::new(c, eps, kernel.clone());
    let sol = solve_dual(&k, &pooled.labels, c, eps, params.tol, params.max_passes)?;
    let model = TlkModel {
        coefficients: sol.coefficients,
        targets: pooled.targets,
        inputs: pooled.inputs,
        kernel: kernel.clone(),
        n_targets: datasets.len(),
    };
    Ok((params, model))
}

/// Seeded split of `0..m` into a training part of `round(fraction·m)`
/// indices and the remaining test indices.
pub fn fraction_split(m: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * m as f64).round() as usize;
    if n_train == 0 || n_train >= m {
        return Err(Error::invalid(format!("fraction {fraction} of {m} examples leaves an empty side")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// RMSE on the held-out remainder of an SVR tuned and trained on a seeded
/// `fraction` of the target's own data.
pub fn supervised_fraction_eval(
    data: &LabelledDataset,
    fraction: f64,
    c_grid: &[f64],
    eps_grid: &[f64],
    kernel: &KernelSpec,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let (train, test) = fraction_split(data.len(), fraction, seed)?;
    if train.len() < folds {
        return Err(Error::invalid(format!(
            "{} training examples cannot be split into {folds} folds",
            train.len()
        )));
    }
    let (_, model) = tune_and_train(&data.subset(&train), c_grid, eps_grid, kernel, folds, seed)?;
    let held = data.subset(&test);
    rmse(&predict_many(&model, &held.inputs)?, &held.labels)
}
