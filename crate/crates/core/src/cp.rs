//! Corresponding projections.
//!
//! Given supervised hypotheses `h_1..h_n`, target self-similarities
//! `k(t_i, t_i)` and orphan similarities `k(t_o, t_i)`, the orphan model
//! minimizes
//!
//! ```text
//! Q(h) = ν‖h‖² + Σ_i ( ⟨h, h_i⟩ √k(t_i,t_i) − k(t_o,t_i) ‖h_i‖ )²
//! ```
//!
//! The minimizer lies in `span{h_i}`, so with `h = Σ β_i h_i` the problem is
//! an `n × n` quadratic in β. Three equivalent parameterizations are offered:
//! the β form (general Hilbert space), an explicit weight vector for linear
//! models, and coefficients over a shared support set for kernel models. The
//! simplified variant skips the optimization and uses `β_i = k(t_o,t_i)/√k(t_i,t_i)`.
//!
//! Prefer [`solve_cp_beta`] (`O(n³)`) when there are fewer models than
//! support points and [`solve_kcp`] (`O(q³)`) otherwise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram, FeatureVector, KernelSpec};
use crate::numerics::{pinv, solve_spd, Matrix, Vector, DEFAULT_RTOL};
use crate::svr::{model_inner, predict, predict_many, SvrModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpConfig {
    /// Trade-off ν between model norm and projection fit.
    pub nu: f64,
    /// Diagonal stabilizer λ added before inversion.
    pub lambda: f64,
}

impl Default for CpConfig {
    fn default() -> Self {
        CpConfig { nu: 5.0, lambda: 1.0 }
    }
}

impl CpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::invalid(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// The matrices of one orphan instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CpSystem {
    /// `G[i][j] = ⟨h_i, h_j⟩`.
    pub g: Matrix,
    /// Diagonal of `N`: raw self-similarities `k(t_i, t_i)`.
    pub n_diag: Vector,
    pub rho: Vector,
    pub delta: Vector,
    pub model_norms: Vector,
}

impl CpSystem {
    pub fn len(&self) -> usize {
        self.n_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_diag.is_empty()
    }

    /// Builds the system from a precomputed model Gram matrix.
    pub fn from_gram(g: Matrix, orphan_sims: &[f64], self_sims: &[f64]) -> Result<Self> {
        let n = g.nrows();
        check_sims(n, orphan_sims, self_sims)?;
        if g.ncols() != n {
            return Err(Error::invalid("model Gram matrix must be square"));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("model Gram matrix contains non-finite entries"));
        }
        let model_norms = Vector::from_fn(n, |i, _| g[(i, i)].max(0.0).sqrt());
        let delta = Vector::from_fn(n, |i, _| orphan_sims[i] * model_norms[i]);
        let rho = Vector::from_fn(n, |i, _| self_sims[i].sqrt() * delta[i]);
        Ok(CpSystem { g, n_diag: Vector::from_column_slice(self_sims), rho, delta, model_norms })
    }

    fn gng(&self) -> Matrix {
        let mut ng = self.g.clone();
        for (i, mut row) in ng.row_iter_mut().enumerate() {
            row *= self.n_diag[i];
        }
        &self.g * ng
    }
}

fn check_sims(n: usize, orphan_sims: &[f64], self_sims: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("at least one supervised model is required"));
    }
    if orphan_sims.len() != n || self_sims.len() != n {
        return Err(Error::invalid(format!(
            "{n} models but {} orphan similarities and {} self-similarities",
            orphan_sims.len(),
            self_sims.len()
        )));
    }
    if orphan_sims.iter().chain(self_sims).any(|v| !v.is_finite()) {
        return Err(Error::invalid("similarities must be finite"));
    }
    if let Some(i) = self_sims.iter().position(|&s| s < 0.0) {
        return Err(Error::invalid(format!("self-similarity {i} is negative ({})", self_sims[i])));
    }
    Ok(())
}

fn shared_kernel(models: &[SvrModel]) -> Result<&KernelSpec> {
    let first = models.first().ok_or_else(|| Error::invalid("at least one supervised model is required"))?;
    if models.iter().any(|m| m.kernel != first.kernel) {
        return Err(Error::invalid("all supervised models must share one kernel"));
    }
    Ok(&first.kernel)
}

/// Model Gram matrix `G[i][j] = ⟨h_i, h_j⟩`, upper triangle mirrored.
pub fn model_gram(models: &[SvrModel]) -> Result<Matrix> {
    shared_kernel(models)?;
    let n = models.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = model_inner(&models[i], &models[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

pub fn assemble_system(models: &[SvrModel], orphan_sims: &[f64], self_sims: &[f64]) -> Result<CpSystem> {
    check_sims(models.len(), orphan_sims, self_sims)?;
    CpSystem::from_gram(model_gram(models)?, orphan_sims, self_sims)
}

/// `ν βᵀGβ + βᵀGNGβ − 2βᵀGρ + δᵀδ`.
pub fn objective(beta: &Vector, system: &CpSystem, nu: f64) -> Result<f64> {
    if beta.len() != system.len() {
        return Err(Error::invalid(format!("beta has length {}, system has {}", beta.len(), system.len())));
    }
    let gb = &system.g * beta;
    // βᵀGNGβ = Σ N_i (Gβ)_i²
    let fit: f64 = gb.iter().zip(system.n_diag.iter()).map(|(v, n)| n * v * v).sum();
    Ok(nu * beta.dot(&gb) + fit - 2.0 * gb.dot(&system.rho) + system.delta.dot(&system.delta))
}

/// `∇Q(β) = 2νGβ + 2GNGβ − 2Gρ`.
pub fn objective_gradient(beta: &Vector, system: &CpSystem, nu: f64) -> Result<Vector> {
    if beta.len() != system.len() {
        return Err(Error::invalid(format!("beta has length {}, system has {}", beta.len(), system.len())));
    }
    let gb = &system.g * beta;
    let ngb = gb.component_mul(&system.n_diag);
    Ok((&gb * nu + &system.g * ngb - &system.g * &system.rho) * 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CpSolution {
    /// Weights over the supervised models.
    Beta(Vector),
    /// Explicit weight vector of a linear orphan model.
    WeightVector(Vector),
    /// Coefficients over a shared support set.
    Pi { coefficients: Vector, support: Vec<FeatureVector>, kernel: KernelSpec },
}

impl CpSolution {
    pub fn values(&self) -> &Vector {
        match self {
            CpSolution::Beta(v) | CpSolution::WeightVector(v) => v,
            CpSolution::Pi { coefficients, .. } => coefficients,
        }
    }

    /// Collapses the solution into a single kernel model.
    pub fn to_model(&self, models: &[SvrModel]) -> Result<SvrModel> {
        match self {
            CpSolution::Beta(beta) => {
                if beta.len() != models.len() {
                    return Err(Error::invalid("beta length does not match the number of models"));
                }
                let kernel = shared_kernel(models)?.clone();
                let mut coefficients = Vec::new();
                let mut support = Vec::new();
                for (b, m) in beta.iter().zip(models) {
                    coefficients.extend(m.coefficients.iter().map(|p| b * p));
                    support.extend(m.support_inputs.iter().cloned());
                }
                SvrModel::new(coefficients, support, kernel)
            }
            CpSolution::Pi { coefficients, support, kernel } => {
                SvrModel::new(coefficients.as_slice().to_vec(), support.clone(), kernel.clone())
            }
            CpSolution::WeightVector(_) => Err(Error::invalid("a weight-vector solution has no kernel expansion")),
        }
    }
}

/// `β = [νG + λI + GNG]† G ρ`.
pub fn solve_cp_beta(system: &CpSystem, config: &CpConfig) -> Result<CpSolution> {
    config.validate()?;
    let n = system.len();
    let mut m = system.gng() + &system.g * config.nu;
    for i in 0..n {
        m[(i, i)] += config.lambda;
    }
    let rhs = &system.g * &system.rho;
    let beta = if config.lambda > 0.0 { solve_spd(&m, &rhs, 0.0)? } else { pinv(&m, DEFAULT_RTOL)? * rhs };
    Ok(CpSolution::Beta(beta))
}

/// Linear CP on explicit weight vectors:
/// `h = [νI + Σ h_i N_i h_iᵀ]† Σ h_i ‖h_i‖ √N_i k(t_o,t_i)`.
pub fn solve_lcp(weight_vectors: &[Vec<f64>], orphan_sims: &[f64], self_sims: &[f64], nu: f64) -> Result<CpSolution> {
    check_sims(weight_vectors.len(), orphan_sims, self_sims)?;
    if !(nu >= 0.0) {
        return Err(Error::invalid(format!("nu must be >= 0, got {nu}")));
    }
    let d = weight_vectors[0].len();
    if weight_vectors.iter().any(|w| w.len() != d) {
        return Err(Error::invalid("weight vectors must share one dimension"));
    }
    let mut a = Matrix::identity(d, d) * nu;
    let mut b = Vector::zeros(d);
    for ((w, &so), &ss) in weight_vectors.iter().zip(orphan_sims).zip(self_sims) {
        let h = Vector::from_column_slice(w);
        a.ger(ss, &h, &h, 1.0);
        b.axpy(h.norm() * ss.sqrt() * so, &h, 1.0);
    }
    Ok(CpSolution::WeightVector(pinv(&a, DEFAULT_RTOL)? * b))
}

/// Simplified CP: `β_i = k(t_o,t_i) / √k(t_i,t_i)`, no optimization.
pub fn solve_scp(models: &[SvrModel], orphan_sims: &[f64], self_sims: &[f64]) -> Result<CpSolution> {
    check_sims(models.len(), orphan_sims, self_sims)?;
    Ok(CpSolution::Beta(scp_weights(orphan_sims, self_sims)?))
}

pub fn scp_weights(orphan_sims: &[f64], self_sims: &[f64]) -> Result<Vector> {
    check_sims(orphan_sims.len(), orphan_sims, self_sims)?;
    if let Some(i) = self_sims.iter().position(|&s| s == 0.0) {
        return Err(Error::invalid(format!("self-similarity {i} is zero")));
    }
    Ok(Vector::from_fn(orphan_sims.len(), |i, _| orphan_sims[i] / self_sims[i].sqrt()))
}

/// Union of all support points, in first-seen order.
pub fn shared_support(models: &[SvrModel]) -> Vec<FeatureVector> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for m in models {
        for x in &m.support_inputs {
            seen.entry(x.key()).or_insert_with(|| {
                out.push(x.clone());
                out.len() - 1
            });
        }
    }
    out
}

/// Kernel CP over a shared support set of size q:
/// `π = [νK + λI + Σ N_i Kπ_i π_iᵀK]† Σ √(π_iᵀKπ_i) √N_i k(t_o,t_i) Kπ_i`.
pub fn solve_kcp(
    models: &[SvrModel],
    support: &[FeatureVector],
    orphan_sims: &[f64],
    self_sims: &[f64],
    nu: f64,
    lambda: f64,
) -> Result<CpSolution> {
    check_sims(models.len(), orphan_sims, self_sims)?;
    CpConfig { nu, lambda }.validate()?;
    let kernel = shared_kernel(models)?.clone();
    let index: HashMap<_, usize> = support.iter().enumerate().map(|(j, x)| (x.key(), j)).collect();
    let q = support.len();

    // Π with columns padded by zeros outside each model's own support
    let mut pi = Matrix::zeros(q, models.len());
    for (i, m) in models.iter().enumerate() {
        for (p, x) in m.coefficients.iter().zip(&m.support_inputs) {
            let j = *index.get(&x.key()).ok_or_else(|| {
                Error::invalid(format!("support point of model {i} is missing from the shared support"))
            })?;
            pi[(j, i)] += p;
        }
    }
    let k = gram(&kernel, support)?.values;
    let kpi = &k * &pi;

    let mut a = &k * nu;
    for i in 0..q {
        a[(i, i)] += lambda;
    }
    let mut b = Vector::zeros(q);
    for (i, (&so, &ss)) in orphan_sims.iter().zip(self_sims).enumerate() {
        let col = kpi.column(i);
        a.ger(ss, &col, &col, 1.0);
        let norm = pi.column(i).dot(&col).max(0.0).sqrt();
        b.axpy(norm * ss.sqrt() * so, &col, 1.0);
    }
    let coefficients = if lambda > 0.0 { solve_spd(&a, &b, 0.0)? } else { pinv(&a, DEFAULT_RTOL)? * b };
    Ok(CpSolution::Pi { coefficients, support: support.to_vec(), kernel })
}

/// Prediction of the orphan model at `x`.
pub fn predict_orphan(solution: &CpSolution, models: &[SvrModel], x: &FeatureVector) -> Result<f64> {
    match solution {
        CpSolution::Beta(beta) => {
            if beta.len() != models.len() {
                return Err(Error::invalid(format!("beta has length {}, got {} models", beta.len(), models.len())));
            }
            let mut acc = 0.0;
            for (b, m) in beta.iter().zip(models) {
                if *b != 0.0 {
                    acc += b * predict(m, x)?;
                }
            }
            Ok(acc)
        }
        CpSolution::WeightVector(w) => x.dot_dense(w.as_slice()),
        CpSolution::Pi { coefficients, support, kernel } => {
            let mut acc = 0.0;
            for (p, s) in coefficients.iter().zip(support) {
                if *p != 0.0 {
                    acc += p * kernel.eval(s, x)?;
                }
            }
            Ok(acc)
        }
    }
}

/// `P[x][i]`: prediction of model `i` at input `x`.
pub fn model_predictions(models: &[SvrModel], xs: &[FeatureVector]) -> Result<Matrix> {
    let mut p = Matrix::zeros(xs.len(), models.len());
    for (i, m) in models.iter().enumerate() {
        p.set_column(i, &Vector::from_vec(predict_many(m, xs)?));
    }
    Ok(p)
}

/// Batch form of [`predict_orphan`] for a β solution, from the per-model
/// predictions of [`model_predictions`].
pub fn predict_orphan_beta(solution: &CpSolution, model_preds: &Matrix) -> Result<Vec<f64>> {
    let CpSolution::Beta(beta) = solution else {
        return Err(Error::invalid("batch prediction needs a beta solution"));
    };
    if beta.len() != model_preds.ncols() {
        return Err(Error::invalid(format!("beta has length {}, got {} models", beta.len(), model_preds.ncols())));
    }
    Ok((model_preds * beta).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(v: &[f64]) -> FeatureVector {
        FeatureVector::Dense(v.to_vec())
    }

    /// One linear model with `‖h‖² = 2`: weight vector (1, 1).
    fn model_norm_sq_two() -> SvrModel {
        SvrModel::new(vec![1.0], vec![dense(&[1.0, 1.0])], KernelSpec::Linear).unwrap()
    }

    #[test]
    fn assemble_single_model() {
        let sys = assemble_system(&[model_norm_sq_two()], &[0.5], &[1.0]).unwrap();
        assert_eq!(sys.g[(0, 0)], 2.0);
        let expected = 0.5 * 2f64.sqrt();
        assert!((sys.rho[0] - expected).abs() < 1e-15);
        assert!((sys.delta[0] - expected).abs() < 1e-15);
        assert!((sys.rho[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn assemble_zero_similarities_and_zero_models() {
        let m = model_norm_sq_two();
        let sys = assemble_system(&[m.clone(), m], &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(sys.rho.iter().all(|&v| v == 0.0) && sys.delta.iter().all(|&v| v == 0.0));
        let zero = SvrModel::new(vec![0.0], vec![dense(&[1.0, 1.0])], KernelSpec::Linear).unwrap();
        let sys = assemble_system(&[zero.clone(), zero], &[0.3, 0.7], &[1.0, 1.0]).unwrap();
        assert!(sys.g.iter().all(|&v| v == 0.0) && sys.rho.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        let m = model_norm_sq_two();
        assert!(assemble_system(std::slice::from_ref(&m), &[0.5], &[-1.0]).is_err());
        let rbf = SvrModel::new(vec![1.0], vec![dense(&[1.0, 1.0])], KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert!(assemble_system(&[m.clone(), rbf], &[0.5, 0.5], &[1.0, 1.0]).is_err());
        assert!(assemble_system(&[m], &[0.5, 0.1], &[1.0]).is_err());
    }

    #[test]
    fn objective_values() {
        let sys = assemble_system(&[model_norm_sq_two()], &[0.5], &[1.0]).unwrap();
        let zero = Vector::zeros(1);
        assert_eq!(objective(&zero, &sys, 3.0).unwrap(), sys.delta.dot(&sys.delta));
        let beta = Vector::from_element(1, 2f64.sqrt() / 4.0);
        assert!(objective(&beta, &sys, 0.0).unwrap().abs() < 1e-15);
        assert!(objective(&Vector::zeros(2), &sys, 0.0).is_err());
    }

    #[test]
    fn scalar_solution() {
        let sys = assemble_system(&[model_norm_sq_two()], &[0.5], &[1.0]).unwrap();
        let beta = solve_cp_beta(&sys, &CpConfig { nu: 0.0, lambda: 0.0 }).unwrap();
        assert!((beta.values()[0] - 0.35355339059327373).abs() < 1e-12);
    }

    #[test]
    fn zero_orphan_similarity_gives_exact_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let models: Vec<_> = (0..3)
            .map(|_| SvrModel::new(vec![rng.random(), rng.random()], vec![dense(&[1.0, 0.5]), dense(&[0.2, 1.0])], KernelSpec::Linear).unwrap())
            .collect();
        let sys = assemble_system(&models, &[0.0; 3], &[1.0; 3]).unwrap();
        for cfg in [CpConfig::default(), CpConfig { nu: 1.0, lambda: 0.0 }] {
            assert!(solve_cp_beta(&sys, &cfg).unwrap().values().iter().all(|&v| v == 0.0));
        }
        assert!(solve_scp(&models, &[0.0; 3], &[1.0; 3]).unwrap().values().iter().all(|&v| v == 0.0));
        let ws: Vec<_> = models.iter().map(|m| m.explicit_weights(2).unwrap()).collect();
        assert!(solve_lcp(&ws, &[0.0; 3], &[1.0; 3], 1.0).unwrap().values().iter().all(|&v| v == 0.0));
        let support = shared_support(&models);
        assert!(solve_kcp(&models, &support, &[0.0; 3], &[1.0; 3], 1.0, 0.0).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lcp_rank_one_example() {
        let sol = solve_lcp(&[vec![1.0, 1.0]], &[0.5], &[1.0], 0.0).unwrap();
        let expected = 2f64.sqrt() / 4.0;
        for v in sol.values().iter() {
            assert!((v - expected).abs() < 1e-12);
        }
        let big = solve_lcp(&[vec![1.0, 1.0], vec![0.3, -2.0]], &[0.5, 0.5], &[1.0, 1.0], 1e12).unwrap();
        assert!(big.values().norm() <= 1e-6);
        assert!(solve_lcp(&[vec![1.0], vec![1.0, 2.0]], &[0.5, 0.5], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn scp_examples() {
        let m = model_norm_sq_two();
        assert_eq!(solve_scp(std::slice::from_ref(&m), &[1.0], &[1.0]).unwrap().values()[0], 1.0);
        let sol = solve_scp(&[m.clone(), m.clone()], &[0.6, 0.2], &[4.0, 1.0]).unwrap();
        assert!((sol.values()[0] - 0.3).abs() < 1e-15 && (sol.values()[1] - 0.2).abs() < 1e-15);
        assert!(solve_scp(&[m], &[0.5], &[0.0]).is_err());
    }

    #[test]
    fn kcp_scalar_example() {
        let m = SvrModel::new(vec![1.0], vec![dense(&[1.0])], KernelSpec::Linear).unwrap();
        let sol = solve_kcp(std::slice::from_ref(&m), &[dense(&[1.0])], &[0.5], &[1.0], 0.0, 0.0).unwrap();
        assert!((sol.values()[0] - 0.5).abs() < 1e-12);
        // support mismatch
        assert!(solve_kcp(&[m], &[dense(&[2.0])], &[0.5], &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn predict_orphan_forms() {
        let a = SvrModel::new(vec![1.0], vec![dense(&[1.0, 0.0])], KernelSpec::Linear).unwrap();
        let b = SvrModel::new(vec![2.0], vec![dense(&[0.0, 1.0])], KernelSpec::Linear).unwrap();
        let x = dense(&[3.0, 5.0]);
        let models = [a.clone(), b];
        let first = CpSolution::Beta(Vector::from_vec(vec![1.0, 0.0]));
        assert_eq!(predict_orphan(&first, &models, &x).unwrap(), predict(&a, &x).unwrap());
        let zero = CpSolution::Beta(Vector::zeros(2));
        assert_eq!(predict_orphan(&zero, &models, &x).unwrap(), 0.0);
        let beta = Vector::from_vec(vec![0.3, -0.7]);
        let w: Vec<f64> = (0..2)
            .map(|k| beta[0] * models[0].explicit_weights(2).unwrap()[k] + beta[1] * models[1].explicit_weights(2).unwrap()[k])
            .collect();
        let via_beta = predict_orphan(&CpSolution::Beta(beta), &models, &x).unwrap();
        let via_w = predict_orphan(&CpSolution::WeightVector(Vector::from_vec(w)), &models, &x).unwrap();
        assert!((via_beta - via_w).abs() < 1e-10);
        assert!(predict_orphan(&CpSolution::Beta(Vector::zeros(3)), &models, &x).is_err());
    }

    #[test]
    fn to_model_preserves_predictions() {
        let a = SvrModel::new(vec![1.0, -0.5], vec![dense(&[1.0, 0.0]), dense(&[1.0, 2.0])], KernelSpec::Linear).unwrap();
        let b = SvrModel::new(vec![2.0], vec![dense(&[0.0, 1.0])], KernelSpec::Linear).unwrap();
        let sol = CpSolution::Beta(Vector::from_vec(vec![0.4, 1.5]));
        let merged = sol.to_model(&[a.clone(), b.clone()]).unwrap();
        let x = dense(&[0.7, -1.1]);
        assert!((predict(&merged, &x).unwrap() - predict_orphan(&sol, &[a, b], &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scaling_rho_scales_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let g = h.transpose() * &h;
        let sys = CpSystem::from_gram(g.clone(), &[0.2, 0.5, 0.3], &[1.0, 1.0, 1.0]).unwrap();
        let mut scaled = sys.clone();
        scaled.rho *= 3.0;
        let cfg = CpConfig::default();
        let b1 = solve_cp_beta(&sys, &cfg).unwrap();
        let b3 = solve_cp_beta(&scaled, &cfg).unwrap();
        assert!((b1.values() * 3.0 - b3.values()).norm() < 1e-10 * (1.0 + b3.values().norm()));
    }

    #[test]
    fn resemblance_holds_exactly_for_one_model() {
        let m = model_norm_sq_two();
        let (so, ss) = (0.5, 1.0);
        let sys = assemble_system(std::slice::from_ref(&m), &[so], &[ss]).unwrap();
        let beta = solve_cp_beta(&sys, &CpConfig { nu: 0.0, lambda: 0.0 }).unwrap();
        let inner = beta.values()[0] * sys.g[(0, 0)];
        let residual = inner * f64::sqrt(ss) - so * sys.model_norms[0];
        assert!(residual.abs() <= 1e-12);
    }
}
