//! Crash rates per 100 million VMT and per mile-year, statewide and by region,
//! for a small synthetic network.
//!
//! cargo run --example crash_rates

use spfkit::calibration::{crash_rate_vmt, rate_summary, write_rate_csv, GroupBy, RateKind};
use spfkit::evaluate::synth_calibration;

fn main() -> spfkit::Result<()> {
    // one segment by hand: 5 crashes on a 1-mile, 2000 veh/day segment over 5 years
    println!("single segment: {:.2} crashes / 100M VMT\n", crash_rate_vmt(5.0, 2000.0, 5.0, 1.0)?);

    let data = synth_calibration(2.980, 2.489, 299, 7)?;
    for kind in [RateKind::Vmt, RateKind::PerMile] {
        println!("{kind:?}");
        let mut rows = rate_summary(&data, kind, GroupBy::All)?;
        rows.extend(rate_summary(&data, kind, GroupBy::Region)?);
        write_rate_csv(std::io::stdout().lock(), &rows)?;
        println!();
    }
    Ok(())
}
