//! The model with the beam-splitting resource and the vacuum cutoff on the
//! receiving leg. Outcome probabilities drop by the factor gamma^2 (1-x)^2
//! but the conditional output is the perfect one, so nothing is lost except
//! success probability.

use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::model::{InputState, Model, ModelConfig};
use coherent_teleport::report::half_probability_total;

fn main() -> coherent_teleport::Result<()> {
    let input = InputState::identity(3)?;
    for d in [0.5, 2.0, 8.0, 50.0] {
        let model = Model::new(ModelConfig::new(3, d, SplittingKind::Orthogonal))?;
        let expected_total = half_probability_total(&model);
        let mut total = 0.0;
        let mut worst_gap = 0.0f64;
        for n in 0..model.size() {
            for m in 0..model.size() {
                let half = model.channel_half(&input, n, m)?;
                let perfect = model.channel_perfect(&input, n, m)?;
                total += half.probability;
                worst_gap = worst_gap.max(half.output.trace_distance(&perfect.output)?);
            }
        }
        println!(
            "d = {d:>5}: success probability {total:.12} (closed form {expected_total:.12}), \
             worst distance to the exact output {worst_gap:.3e}"
        );
    }
    println!("the success probability approaches 1 as d grows");
    Ok(())
}
