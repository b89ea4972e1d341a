//! Similarity-weighted baselines and the target-ligand kernel on a small
//! synthetic benchmark, scoring one held-out target.

use cpscreen::baselines::{avg_clo_weights, extreme_weights, tlk_tune_and_train, Extreme};
use cpscreen::cp::{model_predictions, predict_orphan_beta, CpSolution};
use cpscreen::data::{normalize_for_orphan, synth_generate, SynthConfig};
use cpscreen::eval::rmse;
use cpscreen::kernels::KernelSpec;
use cpscreen::svr::tune_and_train;

fn main() -> cpscreen::Result<()> {
    let bench = synth_generate(&SynthConfig {
        n_targets: 5,
        m_ligands: 60,
        dim: 16,
        noise_sd: 0.2,
        similarity_decay: 1.0,
        seed: 5,
    })?;
    let (c_grid, eps_grid) = ([0.1, 1.0, 10.0], [0.05, 0.2]);
    let orphan = &bench.targets[2];
    let supervised: Vec<_> = bench.targets.iter().filter(|t| t.id != orphan.id).collect();

    let models = supervised
        .iter()
        .map(|t| tune_and_train(&t.dataset, &c_grid, &eps_grid, &KernelSpec::Tanimoto, 3, 1).map(|(_, m)| m))
        .collect::<cpscreen::Result<Vec<_>>>()?;
    let (sims, _) = normalize_for_orphan(&bench.similarity, &orphan.id)?;
    let preds = model_predictions(&models, &orphan.dataset.inputs)?;
    println!("orphan {} with similarities {sims:.3?}", orphan.id);

    let weightings = [
        ("avg", avg_clo_weights(&sims, sims.len())?),
        ("closest", extreme_weights(&sims, Extreme::Closest)?),
        ("farthest", extreme_weights(&sims, Extreme::Farthest)?),
        ("avg_clo(2)", avg_clo_weights(&sims, 2)?),
    ];
    for (name, beta) in weightings {
        let p = predict_orphan_beta(&CpSolution::Beta(beta), &preds)?;
        println!("{name:<11} RMSE {:.4}", rmse(&p, &orphan.dataset.labels)?);
    }

    // one joint SVR over (target, ligand) pairs of the supervised targets
    let ids: Vec<&str> = supervised.iter().map(|t| t.id.as_str()).collect();
    let block = bench.similarity.restrict(&ids)?;
    let datasets: Vec<_> = supervised.iter().map(|t| t.dataset.clone()).collect();
    let (_, tlk) = tlk_tune_and_train(&datasets, &block, &c_grid, &eps_grid, &KernelSpec::Tanimoto, 3, 1, None)?;
    let p = tlk.predict_many(&sims, &orphan.dataset.inputs)?;
    println!("{:<11} RMSE {:.4}", "tlk", rmse(&p, &orphan.dataset.labels)?);
    Ok(())
}
