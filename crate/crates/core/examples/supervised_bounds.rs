//! Supervised upper bounds: each target trained on a fraction of its own
//! ligands and scored on the rest.

use cpscreen::data::{synth_generate, SynthConfig};
use cpscreen::eval::{summary_table, supervised_bounds, ProtocolConfig, DEFAULT_FRACTIONS};

fn main() -> cpscreen::Result<()> {
    let bench = synth_generate(&SynthConfig {
        n_targets: 4,
        m_ligands: 150,
        dim: 20,
        noise_sd: 0.3,
        similarity_decay: 1.0,
        seed: 3,
    })?;
    let protocol = ProtocolConfig {
        n_draws: 2,
        ligands_per_draw: 150,
        c_grid: vec![0.1, 1.0, 10.0],
        eps_grid: vec![0.05, 0.2],
        ..ProtocolConfig::default()
    };
    let reports = supervised_bounds(&bench, &DEFAULT_FRACTIONS, &protocol)?;
    print!("{}", summary_table(&reports));
    Ok(())
}
