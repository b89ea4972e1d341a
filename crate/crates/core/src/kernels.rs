//! Kernels over ligand feature vectors.
//!
//! Ligands are either dense real vectors or sparse binary fingerprints
//! (strictly increasing list of active bit indices). Kernels only compare
//! vectors of the same family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureVector {
    Dense(Vec<f64>),
    /// Active bit indices of a binary fingerprint, strictly increasing.
    Sparse(Vec<u32>),
}

impl FeatureVector {
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("dense feature {i} is not finite")));
        }
        Ok(FeatureVector::Dense(values))
    }

    pub fn sparse(indices: Vec<u32>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "fingerprint indices must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(FeatureVector::Sparse(indices))
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        match self {
            FeatureVector::Dense(v) => v.iter().map(|x| x * x).sum(),
            FeatureVector::Sparse(s) => s.len() as f64,
        }
    }

    /// `⟨w, self⟩` against an explicit dense weight vector.
    pub fn dot_dense(&self, w: &[f64]) -> Result<f64> {
        match self {
            FeatureVector::Dense(v) => {
                if v.len() != w.len() {
                    return Err(Error::invalid(format!(
                        "weight vector has dimension {}, feature vector {}",
                        w.len(),
                        v.len()
                    )));
                }
                Ok(v.iter().zip(w).map(|(a, b)| a * b).sum())
            }
            FeatureVector::Sparse(s) => {
                let mut acc = 0.0;
                for &i in s {
                    acc += *w.get(i as usize).ok_or_else(|| {
                        Error::invalid(format!("fingerprint bit {i} exceeds weight dimension {}", w.len()))
                    })?;
                }
                Ok(acc)
            }
        }
    }

    /// Adds `scale · self` into a dense accumulator of dimension `acc.len()`.
    pub fn axpy_into(&self, scale: f64, acc: &mut [f64]) -> Result<()> {
        match self {
            FeatureVector::Dense(v) => {
                if v.len() != acc.len() {
                    return Err(Error::invalid(format!(
                        "feature dimension {} does not match accumulator dimension {}",
                        v.len(),
                        acc.len()
                    )));
                }
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += scale * x);
            }
            FeatureVector::Sparse(s) => {
                for &i in s {
                    let slot = acc.get_mut(i as usize).ok_or_else(|| {
                        Error::invalid(format!("fingerprint bit {i} exceeds dimension"))
                    })?;
                    *slot += scale;
                }
            }
        }
        Ok(())
    }

    /// Bit-exact hashable key, used to match support points across models.
    pub(crate) fn key(&self) -> (u8, Vec<u64>) {
        match self {
            FeatureVector::Dense(v) => (0, v.iter().map(|x| x.to_bits()).collect()),
            FeatureVector::Sparse(s) => (1, s.iter().map(|&i| i as u64).collect()),
        }
    }
}

fn intersection_count(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Inner product and both squared norms of a same-family pair.
fn pair_stats(x: &FeatureVector, y: &FeatureVector) -> Result<(f64, f64, f64)> {
    match (x, y) {
        (FeatureVector::Dense(a), FeatureVector::Dense(b)) => {
            if a.len() != b.len() {
                return Err(Error::invalid(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
            }
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for (u, v) in a.iter().zip(b) {
                dot += u * v;
                na += u * u;
                nb += v * v;
            }
            Ok((dot, na, nb))
        }
        (FeatureVector::Sparse(a), FeatureVector::Sparse(b)) => {
            Ok((intersection_count(a, b) as f64, a.len() as f64, b.len() as f64))
        }
        _ => Err(Error::invalid("cannot compare a dense vector with a sparse fingerprint")),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Linear,
    Rbf { gamma: f64 },
    /// Jaccard/Tanimoto similarity; the continuous generalization on dense vectors.
    Tanimoto,
    /// `base(x, y) + c`, used to absorb a bias term into the RKHS.
    ConstantAugmented { base: Box<KernelSpec>, c: f64 },
}


impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        let k = KernelSpec::Rbf { gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn constant_augmented(base: KernelSpec, c: f64) -> Result<Self> {
        let k = KernelSpec::ConstantAugmented { base: Box::new(base), c };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear | KernelSpec::Tanimoto => Ok(()),
            KernelSpec::Rbf { gamma } if *gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { gamma } => Err(Error::invalid(format!("rbf gamma must be > 0, got {gamma}"))),
            KernelSpec::ConstantAugmented { base, c } => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(Error::invalid(format!("constant augmentation must be >= 0, got {c}")));
                }
                base.validate()
            }
        }
    }

    /// True when the feature map is the identity (possibly plus a constant),
    /// i.e. models have an explicit weight-vector form.
    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    pub fn eval(&self, x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
        let (dot, nx, ny) = pair_stats(x, y)?;
        Ok(self.eval_stats(dot, nx, ny))
    }

    fn eval_stats(&self, dot: f64, nx: f64, ny: f64) -> f64 {
        match self {
            KernelSpec::Linear => dot,
            KernelSpec::Rbf { gamma } => {
                let d2 = (nx + ny - 2.0 * dot).max(0.0);
                (-gamma * d2).exp()
            }
            KernelSpec::Tanimoto => {
                let union = nx + ny - dot;
                if union <= 0.0 {
                    0.0
                } else {
                    dot / union
                }
            }
            KernelSpec::ConstantAugmented { base, c } => base.eval_stats(dot, nx, ny) + c,
        }
    }
}

/// Evaluates `spec` on a pair of feature vectors.
pub fn kernel_eval(spec: &KernelSpec, x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    spec.eval(x, y)
}

/// Joint target-ligand kernel value: target similarity times ligand kernel value.
pub fn tlk_eval(target_sim: f64, ligand_kernel_value: f64) -> f64 {
    target_sim * ligand_kernel_value
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub kernel: KernelSpec,
    pub values: Matrix,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Gram matrix over `inputs`. Only the upper triangle is evaluated, so the
/// result is exactly symmetric. Rows are computed in parallel; each entry is
/// independent, so the output does not depend on scheduling.
pub fn gram(spec: &KernelSpec, inputs: &[FeatureVector]) -> Result<GramMatrix> {
    if inputs.is_empty() {
        return Err(Error::invalid("gram matrix of an empty input list"));
    }
    spec.validate()?;
    let n = inputs.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| spec.eval(&inputs[i], &inputs[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut values = Matrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(GramMatrix { kernel: spec.clone(), values })
}

/// Rectangular kernel block `K[u][v] = k(a[u], b[v])`.
pub fn cross_gram(spec: &KernelSpec, a: &[FeatureVector], b: &[FeatureVector]) -> Result<Matrix> {
    let mut out = Matrix::zeros(a.len(), b.len());
    for (u, x) in a.iter().enumerate() {
        for (v, y) in b.iter().enumerate() {
            out[(u, v)] = spec.eval(x, y)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::is_psd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(v: &[f64]) -> FeatureVector {
        FeatureVector::dense(v.to_vec()).unwrap()
    }

    fn s(v: &[u32]) -> FeatureVector {
        FeatureVector::sparse(v.to_vec()).unwrap()
    }

    fn random_fingerprint(rng: &mut ChaCha8Rng, bits: u32, p: f64) -> FeatureVector {
        s(&(0..bits).filter(|_| rng.random_bool(p)).collect::<Vec<_>>())
    }

    #[test]
    fn linear_dot_product() {
        assert_eq!(kernel_eval(&KernelSpec::Linear, &d(&[1.0, 2.0]), &d(&[3.0, 4.0])).unwrap(), 11.0);
    }

    #[test]
    fn tanimoto_hand_count() {
        let v = kernel_eval(&KernelSpec::Tanimoto, &s(&[1, 2, 3]), &s(&[2, 3, 4])).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(kernel_eval(&KernelSpec::Tanimoto, &s(&[]), &s(&[])).unwrap(), 0.0);
        assert_eq!(kernel_eval(&KernelSpec::Tanimoto, &s(&[5, 9]), &s(&[5, 9])).unwrap(), 1.0);
    }

    #[test]
    fn rbf_self_is_one() {
        let k = KernelSpec::rbf(0.7).unwrap();
        assert_eq!(k.eval(&d(&[0.3, -2.0]), &d(&[0.3, -2.0])).unwrap(), 1.0);
        assert_eq!(k.eval(&s(&[1, 4]), &s(&[1, 4])).unwrap(), 1.0);
    }

    #[test]
    fn sparse_linear_and_rbf_match_dense() {
        let a = s(&[0, 2, 3]);
        let b = s(&[2, 3, 4]);
        let ad = d(&[1.0, 0.0, 1.0, 1.0, 0.0]);
        let bd = d(&[0.0, 0.0, 1.0, 1.0, 1.0]);
        for k in [KernelSpec::Linear, KernelSpec::rbf(0.3).unwrap(), KernelSpec::Tanimoto] {
            assert!((k.eval(&a, &b).unwrap() - k.eval(&ad, &bd).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatches_are_rejected() {
        assert!(KernelSpec::Linear.eval(&d(&[1.0]), &d(&[1.0, 2.0])).is_err());
        assert!(KernelSpec::Linear.eval(&d(&[1.0]), &s(&[0])).is_err());
        assert!(FeatureVector::sparse(vec![3, 3]).is_err());
        assert!(FeatureVector::dense(vec![f64::NAN]).is_err());
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::constant_augmented(KernelSpec::Linear, -1.0).is_err());
    }

    #[test]
    fn gram_of_basis_is_identity() {
        let g = gram(&KernelSpec::Linear, &[d(&[1.0, 0.0]), d(&[0.0, 1.0])]).unwrap();
        assert_eq!(g.values, Matrix::identity(2, 2));
        let single = gram(&KernelSpec::Linear, &[d(&[2.0, 3.0])]).unwrap();
        assert_eq!(single.values[(0, 0)], 13.0);
        assert!(gram(&KernelSpec::Linear, &[]).is_err());
    }

    #[test]
    fn tanimoto_gram_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fps: Vec<_> = (0..10).map(|_| random_fingerprint(&mut rng, 32, 0.3)).collect();
        let g = gram(&KernelSpec::Tanimoto, &fps).unwrap();
        assert_eq!(g.values, g.values.transpose());
        assert!(is_psd(&g.values, 1e-8).unwrap());
    }

    #[test]
    fn constant_augmented_adds_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<_> = (0..6).map(|_| d(&[rng.random(), rng.random(), rng.random()])).collect();
        let base = gram(&KernelSpec::Linear, &xs).unwrap().values;
        let aug = gram(&KernelSpec::constant_augmented(KernelSpec::Linear, 2.5).unwrap(), &xs).unwrap().values;
        for (a, b) in aug.iter().zip(base.iter()) {
            assert_eq!(*a, b + 2.5);
        }
    }

    #[test]
    fn tlk_products() {
        assert!((tlk_eval(0.5, 0.4) - 0.2).abs() < 1e-15);
        assert_eq!(tlk_eval(1.0, 0.37), 0.37);
        assert_eq!(tlk_eval(0.0, 0.37), 0.0);
    }

    #[test]
    fn tlk_gram_has_product_structure() {
        // Two targets with similarity matrix S, three ligands each: the joint
        // Gram over pairs is S ⊗ K when every target sees the same ligands.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ligs: Vec<_> = (0..3).map(|_| random_fingerprint(&mut rng, 16, 0.4)).collect();
        let k = gram(&KernelSpec::Tanimoto, &ligs).unwrap().values;
        let sim = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let joint = Matrix::from_fn(6, 6, |a, b| {
            let (ta, la) = (a / 3, a % 3);
            let (tb, lb) = (b / 3, b % 3);
            tlk_eval(sim[(ta, tb)], KernelSpec::Tanimoto.eval(&ligs[la], &ligs[lb]).unwrap())
        });
        assert_eq!(joint, sim.kronecker(&k));
        assert!(is_psd(&joint, 1e-10).unwrap());
    }

    #[test]
    fn dot_dense_and_axpy() {
        let w = [0.5, -1.0, 2.0];
        assert_eq!(s(&[0, 2]).dot_dense(&w).unwrap(), 2.5);
        assert!(s(&[3]).dot_dense(&w).is_err());
        let mut acc = vec![0.0; 3];
        s(&[1, 2]).axpy_into(2.0, &mut acc).unwrap();
        d(&[1.0, 1.0, 1.0]).axpy_into(-1.0, &mut acc).unwrap();
        assert_eq!(acc, vec![-1.0, 1.0, 1.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn fingerprint() -> impl Strategy<Value = FeatureVector> {
            proptest::collection::btree_set(0u32..64, 0..20)
                .prop_map(|s| FeatureVector::Sparse(s.into_iter().collect()))
        }

        fn kernel() -> impl Strategy<Value = KernelSpec> {
            prop_oneof![
                Just(KernelSpec::Linear),
                Just(KernelSpec::Tanimoto),
                (0.01f64..2.0).prop_map(|gamma| KernelSpec::Rbf { gamma }),
                (0.0f64..3.0).prop_map(|c| KernelSpec::ConstantAugmented { base: Box::new(KernelSpec::Tanimoto), c }),
            ]
        }

        proptest! {
            #[test]
            fn kernels_are_symmetric(k in kernel(), x in fingerprint(), y in fingerprint()) {
                prop_assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
            }

            #[test]
            fn tanimoto_self_similarity_is_one(x in fingerprint()) {
                prop_assume!(!matches!(&x, FeatureVector::Sparse(s) if s.is_empty()));
                prop_assert_eq!(KernelSpec::Tanimoto.eval(&x, &x).unwrap(), 1.0);
            }
        }
    }
}
