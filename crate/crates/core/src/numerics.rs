//! Dense linear algebra shared by the solvers.
//!
//! Matrices are small (number of targets, or the size of a shared support
//! set), so everything here is dense and backed by `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when none is given.
pub const DEFAULT_RTOL: f64 = 1e-12;

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Matrix> {
    if entries.len() != rows * cols {
        return Err(Error::invalid(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, entries);
    ensure_finite_matrix(&m, "matrix")?;
    Ok(m)
}

/// Builds a vector, rejecting non-finite values.
pub fn vector_from(entries: &[f64]) -> Result<Vector> {
    let v = Vector::from_column_slice(entries);
    ensure_finite_vector(&v, "vector")?;
    Ok(v)
}

pub(crate) fn ensure_finite_matrix(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn ensure_finite_vector(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

/// Moore-Penrose pseudoinverse.
///
/// Singular values `σ_i ≤ rtol · σ_max` are treated as zero, so rank-deficient
/// inputs are handled without error. The singular triplets come from the
/// symmetric eigendecomposition of `[[0, A], [Aᵀ, 0]]`, whose eigenpairs are
/// `±σ_k` with vectors `(u_k, ±v_k)/√2`; unlike the bidiagonal SVD this stays
/// accurate when some singular values are exactly zero.
pub fn pinv(m: &Matrix, rtol: f64) -> Result<Matrix> {
    ensure_finite_matrix(m, "pinv input")?;
    if !(rtol >= 0.0) || !rtol.is_finite() {
        return Err(Error::invalid(format!("rtol must be a finite value >= 0, got {rtol}")));
    }
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Matrix::zeros(cols, rows));
    }
    let mut aug = Matrix::zeros(rows + cols, rows + cols);
    aug.view_mut((0, rows), (rows, cols)).copy_from(m);
    aug.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let eig = aug
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Degenerate("eigendecomposition failed to converge".into()))?;
    let sigma_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rtol * sigma_max;

    let mut out = Matrix::zeros(cols, rows);
    for (k, &s) in eig.eigenvalues.iter().enumerate() {
        if s <= cutoff || s <= 0.0 {
            continue;
        }
        // the eigenvector holds u_k/√2 over the rows and v_k/√2 over the columns
        let e = eig.eigenvectors.column(k);
        out.ger(2.0 / s, &e.rows(rows, cols), &e.rows(0, rows), 1.0);
    }
    Ok(out)
}

/// Solves `(a + ridge·I) x = b`.
///
/// Uses a Cholesky factorization when the shifted matrix is positive
/// definite, otherwise falls back to the pseudoinverse.
pub fn solve_spd(a: &Matrix, b: &Vector, ridge: f64) -> Result<Vector> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid(format!("solve_spd needs a square matrix, got {}x{}", n, a.ncols())));
    }
    if b.len() != n {
        return Err(Error::invalid(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    if !(ridge >= 0.0) {
        return Err(Error::invalid(format!("ridge must be >= 0, got {ridge}")));
    }
    ensure_finite_matrix(a, "solve_spd matrix")?;
    ensure_finite_vector(b, "solve_spd right-hand side")?;

    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] += ridge;
    }
    if let Some(chol) = shifted.clone().cholesky() {
        let x = chol.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    Ok(pinv(&shifted, DEFAULT_RTOL)? * b)
}

/// Pivoted Cholesky factor `L` (`n × r`) with `a ≈ L Lᵀ` for a PSD matrix.
///
/// Columns are added greedily by largest residual diagonal until every
/// residual diagonal entry is `≤ rtol · max_i a_ii`, so `r` is the numerical
/// rank of `a`.
pub fn pivoted_cholesky(a: &Matrix, rtol: f64) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid(format!("pivoted_cholesky needs a square matrix, got {}x{}", n, a.ncols())));
    }
    ensure_finite_matrix(a, "pivoted_cholesky input")?;
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let max_diag = d.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rtol * max_diag;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];
    while cols.len() < n && max_diag > 0.0 {
        let (j, dj) = (0..n)
            .filter(|&i| !used[i])
            .map(|i| (i, d[i]))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if j == usize::MAX || dj <= cutoff {
            break;
        }
        used[j] = true;
        let pivot = dj.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if used[i] && i != j {
                continue;
            }
            let dot: f64 = cols.iter().map(|c| c[i] * c[j]).sum();
            col[i] = (a[(i, j)] - dot) / pivot;
        }
        col[j] = pivot;
        for i in 0..n {
            if !used[i] {
                d[i] = (d[i] - col[i] * col[i]).max(0.0);
            }
        }
        d[j] = 0.0;
        cols.push(col);
    }
    Ok(Matrix::from_fn(n, cols.len(), |i, k| cols[k][i]))
}

/// True when `a` is symmetric within `tol` (absolute, entrywise).
pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    (0..n).all(|i| (i + 1..n).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol))
}

/// True iff the smallest eigenvalue of the symmetric matrix `a` is `≥ -tol`.
pub fn is_psd(a: &Matrix, tol: f64) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::invalid(format!("is_psd needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    ensure_finite_matrix(a, "is_psd input")?;
    if a.nrows() == 0 {
        return Ok(true);
    }
    // symmetrize so round-off asymmetry does not leak into the eigen solver
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(min >= -tol)
}

/// Relative Frobenius distance `‖a - b‖ / max(‖b‖, tiny)`.
pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn penrose_errors(m: &Matrix, p: &Matrix) -> [f64; 4] {
        let mp = m * p;
        let pm = p * m;
        [
            rel_frobenius(&(&mp * m), m),
            rel_frobenius(&(&pm * p), p),
            rel_frobenius(&mp.transpose(), &mp),
            rel_frobenius(&pm.transpose(), &pm),
        ]
    }

    #[test]
    fn pinv_identity() {
        let id = Matrix::identity(3, 3);
        let p = pinv(&id, DEFAULT_RTOL).unwrap();
        assert!(rel_frobenius(&p, &id) < 1e-15);
    }

    #[test]
    fn pinv_zeroes_null_directions() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 0.0]));
        let p = pinv(&m, DEFAULT_RTOL).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(p[(1, 1)].abs() < 1e-15);
        assert!(p[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn pinv_rectangular_penrose() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(&mut rng, 4, 3);
        let p = pinv(&m, DEFAULT_RTOL).unwrap();
        assert_eq!(p.shape(), (3, 4));
        let mpm = &m * &p * &m;
        for (a, b) in mpm.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        for e in penrose_errors(&m, &p) {
            assert!(e < 1e-9, "{e}");
        }
    }

    #[test]
    fn pinv_rejects_nan() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(pinv(&m, DEFAULT_RTOL), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pinv_of_zero_matrix_is_zero() {
        let m = Matrix::zeros(2, 3);
        assert_eq!(pinv(&m, DEFAULT_RTOL).unwrap(), Matrix::zeros(3, 2));
    }

    #[test]
    fn pinv_matches_inverse_when_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4, 4) + Matrix::identity(4, 4) * 3.0;
            let inv = a.clone().try_inverse().unwrap();
            assert!(rel_frobenius(&pinv(&a, DEFAULT_RTOL).unwrap(), &inv) < 1e-9);
        }
    }

    #[test]
    fn solve_spd_trivial() {
        let x = solve_spd(&Matrix::identity(2, 2), &Vector::from_vec(vec![3.0, 4.0]), 0.0).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 2.0]));
        let x = solve_spd(&a, &Vector::from_vec(vec![2.0, 4.0]), 0.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_spd_residual_and_pinv_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = random_matrix(&mut rng, 5, 5);
            let a = &r * r.transpose() + Matrix::identity(5, 5) * 0.1;
            let b = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let ridge = rng.random_range(0.0..1.0);
            let x = solve_spd(&a, &b, ridge).unwrap();
            let shifted = &a + Matrix::identity(5, 5) * ridge;
            assert!((&shifted * &x - &b).norm() <= 1e-9 * b.norm());
            let via_pinv = pinv(&shifted, DEFAULT_RTOL).unwrap() * &b;
            assert!((x - via_pinv).norm() <= 1e-8);
        }
    }

    #[test]
    fn solve_spd_singular_falls_back() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = Vector::from_vec(vec![2.0, 2.0]);
        let x = solve_spd(&a, &b, 0.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_spd_dimension_mismatch() {
        let err = solve_spd(&Matrix::identity(2, 2), &Vector::from_vec(vec![1.0]), 0.0);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pivoted_cholesky_reconstructs_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_matrix(&mut rng, 12, 4);
        let a = &x * x.transpose();
        let l = pivoted_cholesky(&a, 1e-12).unwrap();
        assert_eq!(l.ncols(), 4);
        assert!(rel_frobenius(&(&l * l.transpose()), &a) < 1e-10);
        let full = Matrix::identity(3, 3) * 2.0;
        let l = pivoted_cholesky(&full, 1e-12).unwrap();
        assert!(rel_frobenius(&(&l * l.transpose()), &full) < 1e-15);
        assert_eq!(pivoted_cholesky(&Matrix::zeros(3, 3), 1e-12).unwrap().ncols(), 0);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&Matrix::identity(2, 2), 1e-12).unwrap());
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(!is_psd(&d, 1e-12).unwrap());
        assert!(is_psd(&Matrix::zeros(2, 3), 1e-12).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 5, 3);
        let gram = &x * x.transpose();
        assert!(is_psd(&gram, 1e-8).unwrap());
    }
}
