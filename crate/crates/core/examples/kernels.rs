//! Kernel evaluations and Gram matrices for dense vectors and sparse
//! fingerprints.

use cpscreen::kernels::{gram, tlk_eval, FeatureVector, KernelSpec};
use cpscreen::numerics::is_psd;

fn main() -> cpscreen::Result<()> {
    let fps = vec![
        FeatureVector::sparse(vec![1, 4, 9, 12])?,
        FeatureVector::sparse(vec![1, 4, 10])?,
        FeatureVector::sparse(vec![2, 3])?,
    ];
    let tanimoto = gram(&KernelSpec::Tanimoto, &fps)?;
    println!("Tanimoto Gram:\n{:.4}", tanimoto.values);

    let dense = vec![FeatureVector::dense(vec![0.0, 1.0])?, FeatureVector::dense(vec![1.0, 1.0])?];
    for spec in [
        KernelSpec::Linear,
        KernelSpec::rbf(0.5)?,
        KernelSpec::constant_augmented(KernelSpec::Linear, 1.0)?,
    ] {
        let g = gram(&spec, &dense)?;
        println!("{spec:?}: k(x0, x1) = {:.4}, PSD: {}", g.values[(0, 1)], is_psd(&g.values, 1e-10)?);
    }

    // target-ligand kernel: product of a target similarity and a ligand kernel
    println!("TLK value for target similarity 0.6: {:.4}", tlk_eval(0.6, tanimoto.values[(0, 1)]));
    Ok(())
}
