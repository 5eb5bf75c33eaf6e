//! One outcome of the split-measurement model traced through the explicit
//! circuit: unitary steps keep the norm at 1, the projective step drops it
//! to the outcome probability, and the final normalization with the
//! recovery key hands the receiver the output state.

use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::model::{InputState, Model, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coherent_teleport::Result<()> {
    let model = Model::new(ModelConfig::new(2, 6.0, SplittingKind::Orthogonal))?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let input = InputState::random(2, &mut rng)?;
    let (n, m) = (1, 0);

    let run = model.staged(&input, n, m, false)?;
    println!("outcome ({n},{m}) at d = {}", model.d());
    for (step, norm) in run.step_traces.iter().enumerate() {
        println!("  Step {step}: norm {norm:.15}");
    }

    let direct = model.channel_full(&input, n, m)?;
    println!("probability: staged {:.15}, direct {:.15}", run.probability, direct.probability);
    println!(
        "distance between the staged and direct outputs: {:.3e}",
        run.bob.trace_distance(&direct.output)?
    );

    let target = model.staged_product_target(&input, n, m)?;
    println!(
        "distance of the pre-normalization joint state to the product form: {:.3e}",
        run.joint.trace_distance(&target)?
    );

    let keyed_run = model.staged(&input, n, m, true)?;
    println!(
        "fidelity of the keyed receiver state to the input: {:.15}",
        keyed_run.bob.fidelity(&model.input_density(&input)?)?
    );
    Ok(())
}
