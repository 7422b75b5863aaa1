//! Halton sequences and the standard normal draws built from them.
//!
//! cargo run --example halton_draws

use spfkit::mixed::{halton, inv_normal_cdf, make_draws, PRIMES};

fn main() -> spfkit::Result<()> {
    for &base in &PRIMES[..3] {
        let seq: Vec<String> = (1..=8).map(|i| halton(base, i).map(|u| format!("{u:.4}"))).collect::<Result<_, _>>()?;
        println!("base {base}: {}", seq.join(" "));
    }
    for u in [0.025, 0.5, 0.975] {
        println!("Phi^-1({u}) = {:.6}", inv_normal_cdf(u)?);
    }

    // 2 random coefficients, 500 draws per segment, first 10 points discarded
    let draws = make_draws(100, 2, 500, 10)?;
    for d in 0..2 {
        let z: Vec<f64> = draws.values().iter().skip(d).step_by(2).copied().collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        println!("dimension {d} (base {}): mean {mean:+.5}, variance {var:.5}", draws.bases[d]);
    }
    println!("segment 0, draw 0: {:?}", draws.draw(0, 0));
    Ok(())
}
