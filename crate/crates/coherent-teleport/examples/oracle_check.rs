//! Independent verification against a truncated number-basis computation:
//! every exponential vector is expanded into occupation amplitudes up to a
//! photon cutoff and the same quantities are recomputed by brute force,
//! with explicit truncation-tail bounds on the comparison.

use coherent_teleport::crosscheck::oracle_report;
use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::model::{InputState, Model, ModelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coherent_teleport::Result<()> {
    let model = Model::new(ModelConfig::new(2, 0.8, SplittingKind::Orthogonal))?;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let input = InputState::random(2, &mut rng)?;

    let report = oracle_report(&model, &input)?;
    println!("photon cutoff: {} quanta per joint space", report.max_total);
    for row in &report.rows {
        println!(
            "{} {}: engine {:+.12e}, oracle {:+.12e}, |gap| {:.3e} <= {:.3e}",
            if row.passed { "PASS" } else { "FAIL" },
            row.label,
            row.engine,
            row.oracle,
            row.deviation,
            row.bound
        );
    }
    println!("{}", if report.passed { "all rows passed" } else { "FAILURES present" });
    Ok(())
}
