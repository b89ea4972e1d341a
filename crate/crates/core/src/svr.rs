//! Epsilon-insensitive support vector regression without an intercept.
//!
//! The primal is `½‖h‖² + C Σ max(0, |y_i - h(x_i)| - ε)` over the RKHS of the
//! kernel. Without a bias there is no equality constraint in the dual, so with
//! `π_i = α_i - α*_i` it reduces to the box-constrained problem
//!
//! ```text
//! min_π  ½ πᵀKπ - yᵀπ + ε‖π‖₁     s.t. -C ≤ π_i ≤ C
//! ```
//!
//! which [`solve_dual`] handles with an interior-point method finished by
//! exact coordinate descent. Users who want a bias term wrap the kernel in
//! [`KernelSpec::ConstantAugmented`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::kernels::{cross_gram, gram, FeatureVector, KernelSpec};
use crate::numerics::{pivoted_cholesky, Matrix};
use nalgebra::DVector;

pub const DEFAULT_TOL: f64 = 1e-4;

/// `C ∈ {2^-5, …, 2^5}`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=5).map(|i| 2f64.powi(i)).collect()
}

pub fn default_eps_grid() -> Vec<f64> {
    vec![0.1, 0.01, 0.001]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledDataset {
    pub inputs: Vec<FeatureVector>,
    pub labels: Vec<f64>,
}

impl LabelledDataset {
    pub fn new(inputs: Vec<FeatureVector>, labels: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("dataset must contain at least one example"));
        }
        if inputs.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::invalid(format!("label {i} is not finite")));
        }
        Ok(LabelledDataset { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> LabelledDataset {
        LabelledDataset {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    /// Maximum number of sweeps over all coordinates; `None` means `10·m`.
    pub max_passes: Option<usize>,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, kernel: KernelSpec) -> Self {
        SvrParams { c, epsilon, kernel, tol: DEFAULT_TOL, max_passes: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::invalid(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        self.kernel.validate()
    }
}

/// A hypothesis `h(x) = Σ_j π_j k(x_j, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub coefficients: Vec<f64>,
    pub support_inputs: Vec<FeatureVector>,
    pub kernel: KernelSpec,
}

impl SvrModel {
    pub fn new(coefficients: Vec<f64>, support_inputs: Vec<FeatureVector>, kernel: KernelSpec) -> Result<Self> {
        if coefficients.len() != support_inputs.len() {
            return Err(Error::invalid(format!(
                "{} coefficients for {} support inputs",
                coefficients.len(),
                support_inputs.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("model coefficients must be finite"));
        }
        kernel.validate()?;
        Ok(SvrModel { coefficients, support_inputs, kernel })
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        predict(self, x)
    }

    /// Explicit weight vector `w = Σ_j π_j x_j` for a linear-kernel model.
    pub fn explicit_weights(&self, dim: usize) -> Result<Vec<f64>> {
        if !self.kernel.is_linear() {
            return Err(Error::invalid("explicit weights exist only for the linear kernel"));
        }
        let mut w = vec![0.0; dim];
        for (p, x) in self.coefficients.iter().zip(&self.support_inputs) {
            if *p != 0.0 {
                x.axpy_into(*p, &mut w)?;
            }
        }
        Ok(w)
    }
}

pub fn predict(model: &SvrModel, x: &FeatureVector) -> Result<f64> {
    let mut acc = 0.0;
    for (p, s) in model.coefficients.iter().zip(&model.support_inputs) {
        if *p != 0.0 {
            acc += p * model.kernel.eval(s, x)?;
        }
    }
    Ok(acc)
}

/// RKHS inner product `π_aᵀ K_ab π_b`.
pub fn model_inner(a: &SvrModel, b: &SvrModel) -> Result<f64> {
    if a.kernel != b.kernel {
        return Err(Error::invalid("models use different kernels"));
    }
    let mut acc = 0.0;
    for (pa, sa) in a.coefficients.iter().zip(&a.support_inputs) {
        if *pa == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (pb, sb) in b.coefficients.iter().zip(&b.support_inputs) {
            if *pb != 0.0 {
                row += pb * a.kernel.eval(sa, sb)?;
            }
        }
        acc += pa * row;
    }
    Ok(acc)
}

pub fn model_norm(a: &SvrModel) -> f64 {
    // a model always shares its own kernel, so the inner product cannot fail
    // on a kernel mismatch; mixed feature families inside one model can.
    model_inner(a, a).map(|v| v.max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// Result of the dual optimization on a precomputed Gram matrix.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub coefficients: Vec<f64>,
    pub passes: usize,
    pub duality_gap: f64,
    pub primal: f64,
    pub max_violation: f64,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// KKT violation of coordinate `i` given `g = f_i - y_i`.
fn kkt_violation(beta: f64, g: f64, c: f64, eps: f64) -> f64 {
    if beta == 0.0 {
        (g.abs() - eps).max(0.0)
    } else if beta >= c {
        (g + eps).max(0.0)
    } else if beta <= -c {
        (eps - g).max(0.0)
    } else if beta > 0.0 {
        (g + eps).abs()
    } else {
        (g - eps).abs()
    }
}

/// Primal objective and duality gap for the current iterate; `f = Kπ`.
fn primal_and_gap(beta: &[f64], f: &[f64], y: &[f64], c: f64, eps: f64) -> (f64, f64) {
    let mut quad = 0.0;
    let mut loss = 0.0;
    let mut gap = 0.0;
    for i in 0..beta.len() {
        let r = y[i] - f[i];
        let l = (r.abs() - eps).max(0.0);
        quad += beta[i] * f[i];
        loss += l;
        gap += c * l - beta[i] * r + eps * beta[i].abs();
    }
    (0.5 * quad + c * loss, gap)
}

/// Solves the bias-free ε-SVR dual on a precomputed Gram matrix.
///
/// A primal-dual interior-point method on the split form `π = α − α*` with
/// `0 ≤ α, α* ≤ C` finds a near-optimal point, working through a low-rank
/// factor of `k` so each Newton step costs `O(m r²)`. Exact coordinate
/// descent sweeps then move coefficients onto their bounds or to exact zero
/// and certify the result: convergence means a KKT violation `≤ tol` and a
/// duality gap `≤ tol · (1 + |primal|)`. `max_passes` caps the number of
/// sweeps (default `10·m`).
pub fn solve_dual(k: &Matrix, y: &[f64], c: f64, eps: f64, tol: f64, max_passes: Option<usize>) -> Result<DualSolution> {
    check_dual_inputs(k, y, c, eps)?;
    let l = pivoted_cholesky(k, FACTOR_RTOL)?;
    solve_dual_factored(k, &l, y, c, eps, tol, max_passes)
}

/// Residual diagonal cutoff of the Gram factorization, relative to its largest diagonal entry.
const FACTOR_RTOL: f64 = 1e-13;

fn check_dual_inputs(k: &Matrix, y: &[f64], c: f64, eps: f64) -> Result<()> {
    let m = y.len();
    if k.nrows() != m || k.ncols() != m {
        return Err(Error::invalid(format!("Gram matrix is {}x{} for {m} labels", k.nrows(), k.ncols())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("labels must be finite"));
    }
    if !(c > 0.0) || !c.is_finite() || !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("need C > 0 and epsilon >= 0, got C={c}, epsilon={eps}")));
    }
    Ok(())
}

/// [`solve_dual`] with a factor `l` satisfying `k ≈ l lᵀ`.
pub(crate) fn solve_dual_factored(
    k: &Matrix,
    l: &Matrix,
    y: &[f64],
    c: f64,
    eps: f64,
    tol: f64,
    max_passes: Option<usize>,
) -> Result<DualSolution> {
    let m = y.len();
    let max_passes = max_passes.unwrap_or(10 * m).max(1);
    let mut beta = interior_point(l, y, c, eps);
    let mut f: Vec<f64> = (k * DVector::from_column_slice(&beta)).as_slice().to_vec();
    let mut last = (f64::INFINITY, f64::INFINITY);

    for pass in 1..=max_passes {
        coordinate_sweep(k, y, c, eps, &mut beta, &mut f);
        if pass % REFRESH_EVERY == 0 {
            f = (k * DVector::from_column_slice(&beta)).as_slice().to_vec();
        }
        let violation = (0..m)
            .filter(|&i| k[(i, i)] > 0.0)
            .map(|i| kkt_violation(beta[i], f[i] - y[i], c, eps))
            .fold(0.0, f64::max);
        let (primal, gap) = primal_and_gap(&beta, &f, y, c, eps);
        last = (gap, violation);
        if violation <= tol && gap <= tol * (1.0 + primal.abs()) {
            return Ok(DualSolution { coefficients: beta, passes: pass, duality_gap: gap, primal, max_violation: violation });
        }
    }
    Err(Error::Convergence { passes: max_passes, gap: last.0, violation: last.1 })
}

/// Sweeps between exact recomputations of `f = Kπ`, bounding drift.
const REFRESH_EVERY: usize = 50;

/// One cyclic pass of exact coordinate minimization; keeps `f = Kπ`.
fn coordinate_sweep(k: &Matrix, y: &[f64], c: f64, eps: f64, beta: &mut [f64], f: &mut [f64]) {
    for i in 0..y.len() {
        let kii = k[(i, i)];
        let new = if kii <= 0.0 {
            // column i of a PSD matrix with zero diagonal is zero: the
            // coordinate only enters the linear term
            if y[i] > eps {
                c
            } else if y[i] < -eps {
                -c
            } else {
                0.0
            }
        } else {
            let g = f[i] - y[i];
            soft_threshold(beta[i] - g / kii, eps / kii).clamp(-c, c)
        };
        let delta = new - beta[i];
        if delta != 0.0 {
            beta[i] = new;
            for (fj, kj) in f.iter_mut().zip(k.column(i).iter()) {
                *fj += delta * kj;
            }
        }
    }
}

/// Mehrotra predictor-corrector on `min ½ zᵀHz + qᵀz, 0 ≤ z ≤ C` with
/// `z = (α, α*)`, `H = W Wᵀ`, `W = [L; −L]`, `q = (ε − y, ε + y)`.
/// Returns `π = α − α*`.
fn interior_point(l: &Matrix, y: &[f64], c: f64, eps: f64) -> Vec<f64> {
    let m = y.len();
    let r = l.ncols();
    let n = 2 * m;
    let q: Vec<f64> = y.iter().map(|v| eps - v).chain(y.iter().map(|v| eps + v)).collect();
    let scale = q.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let mut z = vec![0.5 * c; n];
    let mut s = vec![0.5 * c; n];
    let mut lam = vec![scale; n];
    let mut mu = vec![scale; n];
    let mut best = (f64::INFINITY, z.clone());

    // H z for the current iterate
    let hz = |z: &[f64]| -> Vec<f64> {
        let pi = DVector::from_fn(m, |i, _| z[i] - z[m + i]);
        let kp = l * (l.transpose() * pi);
        (0..n).map(|i| if i < m { kp[i] } else { -kp[i - m] }).collect()
    };
    // solves (H + diag(d)) x = v through the r×r capacitance matrix
    let solve = |d: &[f64], v: &[f64]| -> Option<Vec<f64>> {
        let dinv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
        let comb = DVector::from_fn(m, |i, _| dinv[i] + dinv[m + i]);
        let mut cap = Matrix::identity(r, r);
        if r > 0 {
            let mut scaled = l.clone();
            for (i, mut row) in scaled.row_iter_mut().enumerate() {
                row *= comb[i];
            }
            cap += l.transpose() * scaled;
        }
        let t = l.transpose() * DVector::from_fn(m, |i, _| dinv[i] * v[i] - dinv[m + i] * v[m + i]);
        let u = cap.cholesky()?.solve(&t);
        let lu = l * u;
        Some((0..n).map(|i| dinv[i] * (v[i] - if i < m { lu[i] } else { -lu[i - m] })).collect())
    };
    let max_step = |x: &[f64], dx: &[f64]| -> f64 {
        x.iter().zip(dx).filter(|(_, d)| **d < 0.0).map(|(x, d)| -x / d).fold(1.0, f64::min)
    };

    for _ in 0..IP_MAX_ITER {
        let h = hz(&z);
        let rd: Vec<f64> = (0..n).map(|i| h[i] + q[i] - lam[i] + mu[i]).collect();
        let comp = (0..n).map(|i| lam[i] * z[i] + mu[i] * s[i]).sum::<f64>() / (2 * n) as f64;
        let rd_norm = rd.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let merit = (comp / (scale * c.max(1.0))).max(rd_norm / scale);
        if merit < best.0 {
            best = (merit, z.clone());
        }
        // once complementarity is exhausted further steps only amplify round-off
        if merit <= IP_TOL || comp <= IP_TOL * IP_TOL * scale * c.max(1.0) {
            break;
        }
        let d: Vec<f64> = (0..n).map(|i| lam[i] / z[i] + mu[i] / s[i]).collect();

        // predictor
        let rhs: Vec<f64> = (0..n).map(|i| -rd[i] - lam[i] + mu[i]).collect();
        let Some(dz) = solve(&d, &rhs) else { break };
        let dlam: Vec<f64> = (0..n).map(|i| -lam[i] - lam[i] * dz[i] / z[i]).collect();
        let dmu: Vec<f64> = (0..n).map(|i| -mu[i] + mu[i] * dz[i] / s[i]).collect();
        let neg_dz: Vec<f64> = dz.iter().map(|v| -v).collect();
        let ap = max_step(&z, &dz).min(max_step(&s, &neg_dz));
        let ad = max_step(&lam, &dlam).min(max_step(&mu, &dmu));
        let comp_aff = (0..n)
            .map(|i| (z[i] + ap * dz[i]) * (lam[i] + ad * dlam[i]) + (s[i] - ap * dz[i]) * (mu[i] + ad * dmu[i]))
            .sum::<f64>()
            / (2 * n) as f64;
        let tau = (comp_aff / comp).powi(3) * comp;

        // corrector
        let r1: Vec<f64> = (0..n).map(|i| tau - lam[i] * z[i] - dz[i] * dlam[i]).collect();
        let r2: Vec<f64> = (0..n).map(|i| tau - mu[i] * s[i] + dz[i] * dmu[i]).collect();
        let rhs: Vec<f64> = (0..n).map(|i| -rd[i] + r1[i] / z[i] - r2[i] / s[i]).collect();
        let Some(dz) = solve(&d, &rhs) else { break };
        let dlam: Vec<f64> = (0..n).map(|i| (r1[i] - lam[i] * dz[i]) / z[i]).collect();
        let dmu: Vec<f64> = (0..n).map(|i| (r2[i] + mu[i] * dz[i]) / s[i]).collect();
        let neg_dz: Vec<f64> = dz.iter().map(|v| -v).collect();
        let ap = (IP_STEP * max_step(&z, &dz).min(max_step(&s, &neg_dz))).min(1.0);
        let ad = (IP_STEP * max_step(&lam, &dlam).min(max_step(&mu, &dmu))).min(1.0);
        for i in 0..n {
            z[i] += ap * dz[i];
            s[i] -= ap * dz[i];
            lam[i] += ad * dlam[i];
            mu[i] += ad * dmu[i];
        }
        if z.iter().chain(&s).chain(&lam).chain(&mu).any(|v| !(v.is_finite() && *v > 0.0)) {
            break;
        }
    }
    let z = best.1;
    (0..m).map(|i| (z[i] - z[m + i]).clamp(-c, c)).collect()
}

const IP_MAX_ITER: usize = 100;
const IP_TOL: f64 = 1e-10;
/// Fraction of the distance to the boundary taken per step.
const IP_STEP: f64 = 0.995;

pub fn train_svr(data: &LabelledDataset, params: &SvrParams) -> Result<SvrModel> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let k = gram(&params.kernel, &data.inputs)?.values;
    let sol = solve_dual(&k, &data.labels, params.c, params.epsilon, params.tol, params.max_passes)?;
    Ok(SvrModel { coefficients: sol.coefficients, support_inputs: data.inputs.clone(), kernel: params.kernel.clone() })
}

/// Seeded partition of `0..m` into `folds` contiguous blocks of a shuffled
/// index list. Returns the held-out indices of every fold.
pub fn fold_assignment(m: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if m < folds {
        return Err(Error::invalid(format!("{m} examples cannot be split into {folds} folds")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..folds).map(|f| idx[f * m / folds..(f + 1) * m / folds].to_vec()).collect())
}

fn submatrix(k: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |a, b| k[(rows[a], cols[b])])
}

struct CvFold {
    k_train: Matrix,
    l_train: Matrix,
    y_train: Vec<f64>,
    cross: Matrix,
    labels: Vec<f64>,
}

/// Per-fold Gram blocks, sharing one factorization of the full Gram matrix.
fn cv_plan(k: &Matrix, y: &[f64], folds: &[Vec<usize>]) -> Result<Vec<CvFold>> {
    let m = y.len();
    let l = pivoted_cholesky(k, FACTOR_RTOL)?;
    let all_cols: Vec<usize> = (0..l.ncols()).collect();
    Ok(folds
        .iter()
        .map(|held| {
            let mut is_held = vec![false; m];
            held.iter().for_each(|&i| is_held[i] = true);
            let train: Vec<usize> = (0..m).filter(|&i| !is_held[i]).collect();
            CvFold {
                k_train: submatrix(k, &train, &train),
                l_train: submatrix(&l, &train, &all_cols),
                y_train: train.iter().map(|&i| y[i]).collect(),
                cross: submatrix(k, held, &train),
                labels: held.iter().map(|&i| y[i]).collect(),
            }
        })
        .collect())
}

fn cv_plan_rmse(plan: &[CvFold], c: f64, eps: f64, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for fold in plan {
        let sol = solve_dual_factored(&fold.k_train, &fold.l_train, &fold.y_train, c, eps, tol, None)?;
        let preds = &fold.cross * DVector::from_vec(sol.coefficients);
        total += rmse(preds.as_slice(), &fold.labels)?;
    }
    Ok(total / plan.len() as f64)
}

/// k-fold cross-validated RMSE of one `(C, ε)` cell on a precomputed Gram.
pub fn cv_rmse(k: &Matrix, y: &[f64], folds: &[Vec<usize>], c: f64, eps: f64, tol: f64) -> Result<f64> {
    check_dual_inputs(k, y, c, eps)?;
    cv_plan_rmse(&cv_plan(k, y, folds)?, c, eps, tol)
}

/// Selects `(C, ε)` by k-fold CV on a precomputed Gram matrix.
///
/// Ties on the mean RMSE go to the smaller C, then to the larger ε. Cells
/// whose training does not converge are skipped.
pub fn grid_search_gram(
    k: &Matrix,
    y: &[f64],
    c_grid: &[f64],
    eps_grid: &[f64],
    folds: usize,
    seed: u64,
    tol: f64,
) -> Result<(f64, f64)> {
    if c_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::invalid("hyperparameter grids must be non-empty"));
    }
    let assignment = fold_assignment(y.len(), folds, seed)?;
    check_dual_inputs(k, y, c_grid[0], eps_grid[0])?;
    let plan = cv_plan(k, y, &assignment)?;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut last_err = None;
    for &c in c_grid {
        for &eps in eps_grid {
            if !(c > 0.0) || !c.is_finite() || !(eps >= 0.0) || !eps.is_finite() {
                return Err(Error::invalid(format!("invalid grid cell C={c}, epsilon={eps}")));
            }
            let score = match cv_plan_rmse(&plan, c, eps, tol) {
                Ok(s) => s,
                Err(e @ Error::Convergence { .. }) => {
                    last_err = Some(e);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let better = match best {
                None => true,
                Some((bs, bc, be)) => {
                    score < bs || (score == bs && (c < bc || (c == bc && eps > be)))
                }
            };
            if better {
                best = Some((score, c, eps));
            }
        }
    }
    match best {
        Some((_, c, eps)) => Ok((c, eps)),
        None => Err(last_err.unwrap_or_else(|| Error::invalid("empty grid"))),
    }
}

pub fn grid_search(
    data: &LabelledDataset,
    c_grid: &[f64],
    eps_grid: &[f64],
    kernel: &KernelSpec,
    folds: usize,
    seed: u64,
) -> Result<SvrParams> {
    if data.len() < folds {
        return Err(Error::invalid(format!("{} examples cannot be split into {folds} folds", data.len())));
    }
    let k = gram(kernel, &data.inputs)?.values;
    let (c, eps) = grid_search_gram(&k, &data.labels, c_grid, eps_grid, folds, seed, DEFAULT_TOL)?;
    Ok(SvrParams::new(c, eps, kernel.clone()))
}

/// Grid search followed by a final fit on all of `data`.
pub fn tune_and_train(
    data: &LabelledDataset,
    c_grid: &[f64],
    eps_grid: &[f64],
    kernel: &KernelSpec,
    folds: usize,
    seed: u64,
) -> Result<(SvrParams, SvrModel)> {
    let k = gram(kernel, &data.inputs)?.values;
    let (c, eps) = grid_search_gram(&k, &data.labels, c_grid, eps_grid, folds, seed, DEFAULT_TOL)?;
    let params = SvrParams::new(c, eps, kernel.clone());
    let sol = solve_dual(&k, &data.labels, c, eps, params.tol, params.max_passes)?;
    let model = SvrModel { coefficients: sol.coefficients, support_inputs: data.inputs.clone(), kernel: kernel.clone() };
    Ok((params, model))
}

/// Predictions of `model` on every input, through one kernel block.
pub fn predict_many(model: &SvrModel, xs: &[FeatureVector]) -> Result<Vec<f64>> {
    let block = cross_gram(&model.kernel, xs, &model.support_inputs)?;
    Ok((block * nalgebra::DVector::from_column_slice(&model.coefficients)).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dense(v: Vec<f64>) -> FeatureVector {
        FeatureVector::Dense(v)
    }

    fn linear_data(m: usize, dim: usize, seed: u64) -> LabelledDataset {
        linear_data_in(m, dim, seed, 1.0)
    }

    /// `y = 2·x₁` with inputs uniform in `[-half_width, half_width]^dim`.
    fn linear_data_in(m: usize, dim: usize, seed: u64, half_width: f64) -> LabelledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<_> = (0..m)
            .map(|_| dense((0..dim).map(|_| rng.random_range(-half_width..half_width)).collect()))
            .collect();
        let labels = inputs
            .iter()
            .map(|x| match x {
                FeatureVector::Dense(v) => 2.0 * v[0],
                _ => unreachable!(),
            })
            .collect();
        LabelledDataset::new(inputs, labels).unwrap()
    }

    #[test]
    fn labels_inside_tube_give_zero_model() {
        let data = LabelledDataset::new(
            vec![dense(vec![1.0, 0.0]), dense(vec![0.0, 1.0]), dense(vec![1.0, 1.0])],
            vec![0.05, -0.09, 0.1],
        )
        .unwrap();
        let model = train_svr(&data, &SvrParams::new(10.0, 0.1, KernelSpec::Linear)).unwrap();
        assert!(model.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(predict(&model, &dense(vec![3.0, 4.0])).unwrap(), 0.0);
    }

    #[test]
    fn noise_free_linear_target_is_recovered() {
        // the evaluation point lies inside the sampled range, so the tube's
        // shrinkage of the weight stays below 0.01/3 per unit of x₁
        let data = linear_data_in(50, 3, 1, 3.0);
        let params = SvrParams::new(1000.0, 0.01, KernelSpec::Linear);
        let model = train_svr(&data, &params).unwrap();
        for (x, y) in data.inputs.iter().zip(&data.labels) {
            assert!((predict(&model, x).unwrap() - y).abs() <= 0.01 + 1e-6);
        }
        let p = predict(&model, &dense(vec![3.0, 0.0, 0.0])).unwrap();
        assert!((p - 6.0).abs() <= 0.02, "{p}");
        assert!(model.coefficients.iter().all(|c| c.abs() <= 1000.0));
    }

    #[test]
    fn single_point_dual_closed_form() {
        for (y, c, eps, x) in [(2.0, 10.0, 0.1, vec![1.0, 1.0]), (5.0, 0.5, 0.2, vec![2.0]), (-3.0, 100.0, 0.5, vec![0.5, 0.5])] {
            let kxx: f64 = x.iter().map(|v| v * v).sum();
            let data = LabelledDataset::new(vec![dense(x)], vec![y]).unwrap();
            let model = train_svr(&data, &SvrParams::new(c, eps, KernelSpec::Linear)).unwrap();
            let expected = y.signum() * c.min((y.abs() - eps) / kxx);
            assert!((model.coefficients[0] - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn predict_basics() {
        let zero = SvrModel::new(vec![0.0, 0.0], vec![dense(vec![1.0]), dense(vec![2.0])], KernelSpec::Linear).unwrap();
        assert_eq!(predict(&zero, &dense(vec![5.0])).unwrap(), 0.0);
        let one = SvrModel::new(vec![1.0], vec![dense(vec![1.0, 2.0])], KernelSpec::Linear).unwrap();
        assert_eq!(predict(&one, &dense(vec![3.0, 4.0])).unwrap(), 11.0);
        assert!(predict(&one, &dense(vec![3.0])).is_err());
    }

    #[test]
    fn inner_products_and_norms() {
        let e1 = SvrModel::new(vec![1.0], vec![dense(vec![1.0, 0.0])], KernelSpec::Linear).unwrap();
        let e2 = SvrModel::new(vec![0.5], vec![dense(vec![0.0, 2.0])], KernelSpec::Linear).unwrap();
        assert_eq!(model_inner(&e1, &e2).unwrap(), 0.0);
        let w34 = SvrModel::new(vec![3.0, 4.0], vec![dense(vec![1.0, 0.0]), dense(vec![0.0, 1.0])], KernelSpec::Linear).unwrap();
        assert!((model_norm(&w34) - 5.0).abs() < 1e-12);
        assert!((model_norm(&w34).powi(2) - model_inner(&w34, &w34).unwrap()).abs() < 1e-10);
        let zero = SvrModel::new(vec![0.0], vec![dense(vec![7.0, 1.0])], KernelSpec::Linear).unwrap();
        assert_eq!(model_inner(&zero, &w34).unwrap(), 0.0);
        assert_eq!(model_norm(&zero), 0.0);
        let rbf = SvrModel::new(vec![1.0], vec![dense(vec![1.0, 0.0])], KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert!(model_inner(&rbf, &e1).is_err());
    }

    #[test]
    fn explicit_weights_match_predictions() {
        let data = linear_data(30, 4, 9);
        let model = train_svr(&data, &SvrParams::new(5.0, 0.05, KernelSpec::Linear)).unwrap();
        let w = model.explicit_weights(4).unwrap();
        for x in &data.inputs {
            assert!((x.dot_dense(&w).unwrap() - predict(&model, x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn folds_partition_indices() {
        let f = fold_assignment(10, 3, 42).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(f, fold_assignment(10, 3, 42).unwrap());
        assert!(fold_assignment(2, 3, 0).is_err());
        assert!(fold_assignment(5, 1, 0).is_err());
    }

    #[test]
    fn grid_search_prefers_small_epsilon_on_clean_data() {
        let data = linear_data(30, 2, 5);
        let p = grid_search(&data, &[1000.0], &[0.001, 10.0], &KernelSpec::Linear, 3, 1).unwrap();
        assert_eq!(p.epsilon, 0.001);
        let single = grid_search(&data, &[0.5], &[0.1], &KernelSpec::Linear, 3, 1).unwrap();
        assert_eq!((single.c, single.epsilon), (0.5, 0.1));
        let again = grid_search(&data, &default_c_grid(), &default_eps_grid(), &KernelSpec::Linear, 3, 7).unwrap();
        let again2 = grid_search(&data, &default_c_grid(), &default_eps_grid(), &KernelSpec::Linear, 3, 7).unwrap();
        assert_eq!(again, again2);
        assert!(grid_search(&data.subset(&[0, 1]), &[1.0], &[0.1], &KernelSpec::Linear, 3, 0).is_err());
    }

    #[test]
    fn grid_search_tie_breaks_to_strong_regularization() {
        // every label inside every tube: all cells give the zero model and tie
        let data = LabelledDataset::new(
            (0..6).map(|i| dense(vec![i as f64])).collect(),
            vec![0.0; 6],
        )
        .unwrap();
        let p = grid_search(&data, &[4.0, 0.5, 2.0], &[0.01, 0.1], &KernelSpec::Linear, 3, 3).unwrap();
        assert_eq!((p.c, p.epsilon), (0.5, 0.1));
    }

    #[test]
    fn convergence_error_reports_gap() {
        let data = linear_data(40, 3, 2);
        let mut params = SvrParams::new(1000.0, 0.0, KernelSpec::Linear);
        params.max_passes = Some(1);
        params.tol = f64::MIN_POSITIVE;
        match train_svr(&data, &params) {
            Err(Error::Convergence { passes, gap, .. }) => {
                assert_eq!(passes, 1);
                assert!(gap.is_finite());
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
