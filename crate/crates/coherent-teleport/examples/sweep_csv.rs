//! Parameter sweep over dictionary sizes and energies, written as CSV.
//! Rows are deterministic: the same spec always produces the same bytes.

use coherent_teleport::mode_space::SplittingKind;
use coherent_teleport::sweep::{run_sweep, to_csv, SweepSpec};

fn main() -> coherent_teleport::Result<()> {
    let mut spec = SweepSpec::new(
        vec![2, 3],
        vec![0.5, 1.0, 4.0],
        SplittingKind::Orthogonal,
    );
    spec.seed = 7;

    let rows = run_sweep(&spec)?;
    let csv = to_csv(&rows);
    print!("{csv}");
    eprintln!(
        "{} rows, {}",
        rows.len(),
        if rows.iter().all(|r| r.passed) { "all passed" } else { "FAILURES present" }
    );
    Ok(())
}
