//! Generates a synthetic benchmark, inspects its ground truth and writes
//! it in the on-disk formats.

use cpscreen::data::{save_benchmark, synth_generate_with_truth, SynthConfig};

fn main() -> cpscreen::Result<()> {
    let config = SynthConfig { n_targets: 4, m_ligands: 50, dim: 24, noise_sd: 0.3, similarity_decay: 1.0, seed: 2 };
    let (bench, truth) = synth_generate_with_truth(&config)?;

    println!("latent positions: {:.3?}", truth.positions);
    println!("similarity matrix:\n{:.3}", bench.similarity.values());
    for (t, w) in bench.targets.iter().zip(&truth.weights) {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let active = t.dataset.inputs[0].norm_sq();
        println!("{}: ‖w‖ = {norm:.3}, first ligand has {active} active bits, label {:.3}", t.id, t.dataset.labels[0]);
    }

    let dir = std::env::temp_dir().join("cpscreen-synth-example");
    std::fs::create_dir_all(&dir).map_err(|e| cpscreen::Error::Io { path: dir.clone(), source: e })?;
    save_benchmark(&bench, &dir.join("ligands.tsv"), &dir.join("similarity.csv"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
