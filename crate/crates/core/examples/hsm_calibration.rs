//! HSM rural two-lane base SPF, CMF adjustment, and the observed-over-predicted
//! calibration factor, statewide and per region.
//!
//! cargo run --example hsm_calibration

use spfkit::calibration::{apply_cmfs, calibrated_prediction, calibration_factor, hsm_base_prediction, GroupBy};
use spfkit::evaluate::synth_calibration;

fn main() -> spfkit::Result<()> {
    let base = hsm_base_prediction(2000.0, 1.0, 5.0)?;
    let adjusted = apply_cmfs(base, &[1.1, 0.95])?;
    println!("AADT 2000, 1 mile, 5 years: base {base:.4}, with CMFs 1.10 x 0.95 {adjusted:.4}");
    println!("calibrated with C = 2.489: {:.4}\n", calibrated_prediction(2000.0, 1.0, 5.0, 2.489)?);

    // network built so that observed / predicted is 2.980 without CMFs and 2.489 with them
    let data = synth_calibration(2.980, 2.489, 299, 0)?;
    println!("{:<14} {:>5} {:>10} {:>10} {:>8} {:>8}", "group", "n", "observed", "predicted", "C_base", "C_adj");
    for group_by in [GroupBy::All, GroupBy::Region] {
        for c in calibration_factor(&data, true, group_by)? {
            println!(
                "{:<14} {:>5} {:>10.0} {:>10.1} {:>8.3} {:>8.3}",
                c.group, c.n, c.sum_observed, c.sum_predicted_adjusted, c.c_base, c.c_adj
            );
        }
    }
    Ok(())
}
