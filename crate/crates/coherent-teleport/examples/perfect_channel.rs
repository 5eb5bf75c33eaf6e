//! The exact teleportation scheme: every outcome occurs with probability
//! 1/N^2 and the receiver holds the keyed image of the input, so applying
//! the inverse key returns the input state exactly.

use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::model::{InputState, Model, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coherent_teleport::Result<()> {
    let model = Model::new(ModelConfig::new(3, 1.0, SplittingKind::Orthogonal))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let input = InputState::random(3, &mut rng)?;
    let input_density = model.input_density(&input)?;

    println!("N = {}, d = {}  (per-outcome probability should be 1/9)", model.size(), model.d());
    let mut total = 0.0;
    for n in 0..model.size() {
        for m in 0..model.size() {
            let run = model.channel_perfect(&input, n, m)?;
            total += run.probability;
            let keyed = model.keyed_density(&input, n, m)?;
            let fidelity = run.output.fidelity(&keyed)?;
            let recovered = model.recovered_density(&run)?;
            let back = recovered.fidelity(&input_density)?;
            println!(
                "outcome ({n},{m}): p = {:.15}, fidelity to keyed target = {:.15}, recovered = {:.15}",
                run.probability, fidelity, back
            );
        }
    }
    println!("total probability = {total:.15}");
    Ok(())
}
