//! The fully beam-splitting-based model: the measurement family is built
//! from split coherent states instead of the exact difference basis. The
//! output deviates from the keyed target, and the deviation dies off like
//! exp(-d/2) as the energy grows.

use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::model::{InputState, Model, ModelConfig};
use coherent_teleport::report::{bound_state_deviation, state_deviation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coherent_teleport::Result<()> {
    let size = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let input = InputState::random(size, &mut rng)?;

    println!("worst-case deviation of the split-measurement output from the keyed target");
    let mut previous: Option<f64> = None;
    for d in [2.0, 6.0, 10.0, 14.0, 18.0] {
        let model = Model::new(ModelConfig::new(size, d, SplittingKind::Orthogonal))?;
        let mut worst = 0.0f64;
        for n in 0..size {
            for m in 0..size {
                worst = worst.max(state_deviation(&model, &input, n, m)?);
            }
        }
        let bound = bound_state_deviation(size, model.overlap());
        let ratio = previous.map(|p| worst / p);
        println!(
            "d = {d:>4}: deviation {worst:.6e}, bound {bound:.6e}{}",
            match ratio {
                // e^{-2} per step of 4 in d
                Some(r) => format!(", ratio to previous {r:.4} (exp(-2) = {:.4})", (-2.0f64).exp()),
                None => String::new(),
            }
        );
        previous = Some(worst);
    }
    Ok(())
}
