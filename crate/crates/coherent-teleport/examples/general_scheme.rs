//! The same teleportation scheme run directly on an N-dimensional matrix
//! instead of states built from coherent vectors: any unimodular phase
//! matrix with orthogonal rows works, every outcome has probability 1/N^2,
//! and the output is the keyed transform of the input.

use coherent_teleport::model::{dft_phases, general_perfect};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn main() -> coherent_teleport::Result<()> {
    let size = 4;
    let phases = dft_phases(size);

    // maximally mixed two-level block inside the four-level space
    let mut rho = DMatrix::<Complex64>::zeros(size, size);
    rho[(0, 0)] = Complex64::new(0.5, 0.0);
    rho[(1, 1)] = Complex64::new(0.3, 0.0);
    rho[(2, 2)] = Complex64::new(0.2, 0.0);
    rho[(0, 1)] = Complex64::new(0.1, 0.2);
    rho[(1, 0)] = Complex64::new(0.1, -0.2);

    let mut total = 0.0;
    let mut worst = 0.0f64;
    for n in 0..size {
        for m in 0..size {
            let run = general_perfect(size, &phases, &rho, n, m)?;
            total += run.probability;
            worst = worst.max(run.deviation);
        }
    }
    println!("N = {size}: total probability {total:.15}");
    println!("worst deviation of an output from its keyed transform: {worst:.3e}");

    let run = general_perfect(size, &phases, &rho, 1, 2)?;
    println!("outcome (1,2): p = {:.15}", run.probability);
    println!("output row 0: {:?}", run.output.row(0).iter().collect::<Vec<_>>());
    println!("keyed  row 0: {:?}", run.keyed.row(0).iter().collect::<Vec<_>>());
    Ok(())
}
