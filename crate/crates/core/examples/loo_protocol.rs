//! Leave-one-target-out evaluation of every orphan method on a synthetic
//! benchmark.
//!
//! Run with `--release`; the default grids tune each model over 33 cells.

use cpscreen::baselines::BaselineSpec;
use cpscreen::data::{synth_generate, SynthConfig};
use cpscreen::eval::{loo_orphan, summary_table, ProtocolConfig};

fn main() -> cpscreen::Result<()> {
    let bench = synth_generate(&SynthConfig {
        n_targets: 6,
        m_ligands: 120,
        dim: 20,
        noise_sd: 0.3,
        similarity_decay: 1.0,
        seed: 0,
    })?;
    let methods: Vec<BaselineSpec> = ["cp", "scp", "avg", "closest", "farthest", "avg_clo(3)", "tlk", "tlk_clo(3)"]
        .iter()
        .map(|s| s.parse())
        .collect::<cpscreen::Result<_>>()?;
    let protocol = ProtocolConfig { n_draws: 3, ligands_per_draw: 100, ..ProtocolConfig::default() };
    let reports = loo_orphan(&bench, &methods, &protocol)?;
    print!("{}", summary_table(&reports));
    Ok(())
}
