//! The four corresponding-projection solvers on one small orphan instance.
//!
//! With a linear kernel and no stabilizer, the β form, the explicit weight
//! form and the kernel form all describe the same orphan model.

use cpscreen::cp::{
    assemble_system, predict_orphan, shared_support, solve_cp_beta, solve_kcp, solve_lcp, solve_scp, CpConfig,
};
use cpscreen::kernels::{FeatureVector, KernelSpec};
use cpscreen::svr::SvrModel;

fn main() -> cpscreen::Result<()> {
    let point = |v: &[f64]| FeatureVector::dense(v.to_vec());
    let models = vec![
        SvrModel::new(vec![1.0, 0.5], vec![point(&[1.0, 0.0, 0.0])?, point(&[0.0, 1.0, 0.0])?], KernelSpec::Linear)?,
        SvrModel::new(vec![0.8], vec![point(&[1.0, 0.2, 0.1])?], KernelSpec::Linear)?,
        SvrModel::new(vec![-0.4, 1.0], vec![point(&[0.0, 0.0, 1.0])?, point(&[0.0, 1.0, 0.0])?], KernelSpec::Linear)?,
    ];
    // normalized orphan-to-target similarities and raw self-similarities
    let orphan = [0.5, 0.3, 0.2];
    let own = [1.0, 1.0, 1.0];
    let nu = 1.0;

    let system = assemble_system(&models, &orphan, &own)?;
    let solutions = [
        ("cp (β form)", solve_cp_beta(&system, &CpConfig { nu, lambda: 0.0 })?),
        ("cp (stabilized)", solve_cp_beta(&system, &CpConfig::default())?),
        ("scp", solve_scp(&models, &orphan, &own)?),
        (
            "lcp",
            solve_lcp(&models.iter().map(|m| m.explicit_weights(3)).collect::<Result<Vec<_>, _>>()?, &orphan, &own, nu)?,
        ),
        ("kcp", solve_kcp(&models, &shared_support(&models), &orphan, &own, nu, 0.0)?),
    ];

    let x = point(&[0.3, -0.7, 1.1])?;
    for (name, sol) in &solutions {
        println!("{name:<16} h_o(x) = {:+.6}", predict_orphan(sol, &models, &x)?);
    }
    Ok(())
}
