//! Tunes C and ε by seeded cross-validation and fits a bias-free ε-SVR.

use cpscreen::kernels::{FeatureVector, KernelSpec};
use cpscreen::svr::{default_c_grid, default_eps_grid, predict_many, tune_and_train, LabelledDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cpscreen::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = [1.5, -2.0, 0.5, 0.0];
    let make = |rng: &mut ChaCha8Rng, m: usize| -> cpscreen::Result<LabelledDataset> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..m {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            ys.push(x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.1 * rng.random_range(-1.0..1.0));
            xs.push(FeatureVector::dense(x)?);
        }
        LabelledDataset::new(xs, ys)
    };
    let train = make(&mut rng, 120)?;
    let test = make(&mut rng, 40)?;

    let (params, model) = tune_and_train(&train, &default_c_grid(), &default_eps_grid(), &KernelSpec::Linear, 5, 7)?;
    println!("selected C = {}, ε = {}", params.c, params.epsilon);
    println!("non-zero coefficients: {}/{}", model.coefficients.iter().filter(|c| **c != 0.0).count(), train.len());
    println!("explicit weights: {:.3?}", model.explicit_weights(4)?);

    let pred = predict_many(&model, &test.inputs)?;
    println!("test RMSE: {:.4}", cpscreen::eval::rmse(&pred, &test.labels)?);
    Ok(())
}
