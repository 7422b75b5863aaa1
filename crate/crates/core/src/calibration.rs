//! Crash rates and the HSM rural two-lane segment prediction chain: base SPF,
//! CMF adjustment, calibration factor and calibrated prediction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MVMT_PER_AADT_MILE_YEAR};
use crate::error::{Result, SpfError};

/// Intercept of the HSM rural two-lane base SPF, `exp(-0.312)` per MVMT.
pub const HSM_BASE_INTERCEPT: f64 = -0.312;

pub const ALL_GROUP: &str = "All Regions";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Crashes per 100 million vehicle-miles travelled.
    Vmt,
    /// Crashes per mile per year.
    PerMile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Region,
    #[default]
    All,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SpfError::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SpfError::Domain(format!("{name} must be non-negative, got {v}")))
    }
}

/// `c * 1e8 / (v * 365 * n * l)`.
pub fn crash_rate_vmt(crashes: f64, aadt: f64, years: f64, length_miles: f64) -> Result<f64> {
    non_negative("crash count", crashes)?;
    positive("aadt", aadt)?;
    positive("years", years)?;
    positive("length", length_miles)?;
    Ok(crashes * 1e8 / (aadt * 365.0 * years * length_miles))
}

/// `c / (n * l)`.
pub fn crash_rate_per_mile(crashes: f64, years: f64, length_miles: f64) -> Result<f64> {
    non_negative("crash count", crashes)?;
    positive("years", years)?;
    positive("length", length_miles)?;
    Ok(crashes / (years * length_miles))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single segment.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

fn group_label(group_by: GroupBy, region: &str) -> String {
    match group_by {
        GroupBy::All => ALL_GROUP.to_string(),
        GroupBy::Region => region.to_string(),
    }
}

/// Groups in ascending label order.
fn grouped(data: &Dataset, group_by: GroupBy) -> BTreeMap<String, Vec<&crate::data::SegmentRecord>> {
    let mut groups: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for r in &data.records {
        groups.entry(group_label(group_by, &r.region)).or_default().push(r);
    }
    groups
}

pub fn summarize(group: &str, values: &[f64]) -> Option<RateSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(RateSummary {
        group: group.to_string(),
        n,
        mean,
        sd,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Per-group statistics of per-segment crash rates.
pub fn rate_summary(data: &Dataset, kind: RateKind, group_by: GroupBy) -> Result<Vec<RateSummary>> {
    if data.is_empty() {
        return Err(SpfError::Argument("rate summary of an empty dataset".into()));
    }
    let mut out = Vec::new();
    for (label, members) in grouped(data, group_by) {
        let rates = members
            .iter()
            .map(|r| {
                let c = r.crash_count as f64;
                let n = f64::from(r.years);
                match kind {
                    RateKind::Vmt => crash_rate_vmt(c, r.aadt, n, r.length_miles),
                    RateKind::PerMile => crash_rate_per_mile(c, n, r.length_miles),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        match summarize(&label, &rates) {
            Some(s) => out.push(s),
            None => log::warn!("group {label} is empty; omitted"),
        }
    }
    Ok(out)
}

/// Writes summaries as `Area,N,Mean,Std. Dev.,Min,Max` with display rounding.
pub fn write_rate_csv<W: std::io::Write>(writer: W, rows: &[RateSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["Area", "N", "Mean", "Std. Dev.", "Min", "Max"])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.n.to_string(),
            format!("{:.3}", r.mean),
            format!("{:.3}", r.sd),
            format!("{:.3}", r.min),
            format!("{:.3}", r.max),
        ])?;
    }
    w.flush().map_err(|e| SpfError::io("<csv output>", e))?;
    Ok(())
}

/// HSM base prediction over `years`: `years * AADT * L * 365e-6 * exp(-0.312)`.
pub fn hsm_base_prediction(aadt: f64, length_miles: f64, years: f64) -> Result<f64> {
    positive("aadt", aadt)?;
    positive("length", length_miles)?;
    positive("years", years)?;
    Ok(years * aadt * length_miles * MVMT_PER_AADT_MILE_YEAR * HSM_BASE_INTERCEPT.exp())
}

pub fn apply_cmfs(n_spf: f64, cmfs: &[f64]) -> Result<f64> {
    non_negative("base prediction", n_spf)?;
    let mut product = 1.0;
    for &c in cmfs {
        positive("CMF", c)?;
        product *= c;
    }
    Ok(n_spf * product)
}

/// `c * hsm_base_prediction(aadt, l, years)`.
pub fn calibrated_prediction(aadt: f64, length_miles: f64, years: f64, factor: f64) -> Result<f64> {
    positive("calibration factor", factor)?;
    Ok(factor * hsm_base_prediction(aadt, length_miles, years)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub group: String,
    pub n: usize,
    pub c_base: f64,
    pub c_adj: f64,
    pub sum_observed: f64,
    pub sum_predicted_base: f64,
    pub sum_predicted_adjusted: f64,
}

impl CalibrationResult {
    /// `c_adj` when `adjusted`, else `c_base`.
    pub fn factor(&self, adjusted: bool) -> f64 {
        if adjusted {
            self.c_adj
        } else {
            self.c_base
        }
    }
}

/// Observed-over-predicted calibration factors per group.
///
/// Both the base (`c_base`) and CMF-adjusted (`c_adj`) factors are always
/// computed; `adjusted = false` ignores the CMFs, so `c_adj == c_base`.
/// Year-by-year calibration is the same call on a single-year dataset.
pub fn calibration_factor(data: &Dataset, adjusted: bool, group_by: GroupBy) -> Result<Vec<CalibrationResult>> {
    let mut out = Vec::new();
    for (label, members) in grouped(data, group_by) {
        let mut sum_observed = 0.0;
        let mut sum_base = 0.0;
        let mut sum_adj = 0.0;
        for r in &members {
            let base = hsm_base_prediction(r.aadt, r.length_miles, f64::from(r.years))?;
            sum_observed += r.crash_count as f64;
            sum_base += base;
            sum_adj += if adjusted { apply_cmfs(base, &r.cmfs)? } else { base };
        }
        if sum_base <= 0.0 || sum_adj <= 0.0 {
            return Err(SpfError::Computation(format!("group {label}: predicted crashes sum to zero")));
        }
        out.push(CalibrationResult {
            group: label,
            n: members.len(),
            c_base: sum_observed / sum_base,
            c_adj: sum_observed / sum_adj,
            sum_observed,
            sum_predicted_base: sum_base,
            sum_predicted_adjusted: sum_adj,
        });
    }
    if out.is_empty() {
        return Err(SpfError::Argument("calibration of an empty dataset".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SegmentRecord;
    use proptest::prelude::*;

    fn seg(id: &str, region: &str, aadt: f64, len: f64, crashes: u64, cmfs: Vec<f64>) -> SegmentRecord {
        SegmentRecord {
            segment_id: id.into(),
            region: region.into(),
            aadt,
            length_miles: len,
            years: 5,
            crash_count: crashes,
            covariates: Default::default(),
            cmfs,
        }
    }

    #[test]
    fn vmt_rates() {
        assert!((crash_rate_vmt(5.0, 2000.0, 5.0, 1.0).unwrap() - 136.986_301_369_863).abs() < 1e-9);
        assert_eq!(crash_rate_vmt(0.0, 2000.0, 5.0, 1.0).unwrap(), 0.0);
        assert!((crash_rate_vmt(2.0, 1000.0, 5.0, 0.15).unwrap() - 730.593_607_305_936).abs() < 1e-9);
        assert!(matches!(crash_rate_vmt(1.0, 0.0, 5.0, 1.0), Err(SpfError::Domain(_))));
        assert!(matches!(crash_rate_vmt(1.0, 10.0, 5.0, -1.0), Err(SpfError::Domain(_))));
    }

    #[test]
    fn per_mile_rates() {
        assert_eq!(crash_rate_per_mile(10.0, 5.0, 2.0).unwrap(), 1.0);
        assert_eq!(crash_rate_per_mile(0.0, 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(crash_rate_per_mile(6.0, 3.0, 0.5).unwrap(), 4.0);
        assert!(crash_rate_per_mile(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn summaries() {
        // rates 100 and 300 per mile-year
        let ds = Dataset::new(
            vec![seg("a", "R1", 1000.0, 1.0, 500, vec![]), seg("b", "R2", 1000.0, 1.0, 1500, vec![])],
            "m",
            &[],
        )
        .unwrap();
        let all = rate_summary(&ds, RateKind::PerMile, GroupBy::All).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].n, 2);
        assert!((all[0].mean - 200.0).abs() < 1e-12);
        assert!((all[0].sd - 141.421_356_237_309_5).abs() < 1e-9);
        let by_region = rate_summary(&ds, RateKind::PerMile, GroupBy::Region).unwrap();
        assert_eq!(by_region.len(), 2);
        assert_eq!(by_region[0].sd, 0.0);
        assert_eq!(by_region[0].mean, by_region[0].max);
    }

    #[test]
    fn rate_csv_header() {
        let mut buf = Vec::new();
        write_rate_csv(&mut buf, &[summarize("All Regions", &[1.0, 2.0]).unwrap()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Area,N,Mean,Std. Dev.,Min,Max\nAll Regions,2,1.500,"));
    }

    #[test]
    fn hsm_base() {
        assert!((hsm_base_prediction(2000.0, 1.0, 1.0).unwrap() - 0.534_346_515_606_668_2).abs() < 1e-12);
        assert!((hsm_base_prediction(2000.0, 1.0, 5.0).unwrap() - 2.671_732_578_033_341).abs() < 1e-12);
        assert!(hsm_base_prediction(1e-300, 1.0, 1.0).unwrap() < 1e-300);
        assert!(hsm_base_prediction(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cmfs() {
        assert!((apply_cmfs(2.0, &[1.2, 0.9]).unwrap() - 2.16).abs() < 1e-12);
        assert_eq!(apply_cmfs(2.0, &[]).unwrap(), 2.0);
        assert_eq!(apply_cmfs(0.0, &[1.5]).unwrap(), 0.0);
        assert!(apply_cmfs(1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn calibrated() {
        let base = hsm_base_prediction(2000.0, 1.0, 1.0).unwrap();
        assert_eq!(calibrated_prediction(2000.0, 1.0, 1.0, 1.0).unwrap(), base);
        assert!((calibrated_prediction(2000.0, 1.0, 1.0, 2.489).unwrap() - 1.329_988_477_344_997).abs() < 1e-9);
        assert!((calibrated_prediction(2000.0, 1.0, 5.0, 2.489).unwrap() - 6.649_942_386_724_987).abs() < 1e-9);
        assert!(calibrated_prediction(2000.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn calibration_ratio_construction() {
        // observed = 2.5 x adjusted prediction by choosing CMFs accordingly
        let mut recs = Vec::new();
        for (i, y) in [2u64, 5, 9].into_iter().enumerate() {
            let aadt = 1500.0 + 500.0 * i as f64;
            let base = hsm_base_prediction(aadt, 1.0, 5.0).unwrap();
            recs.push(seg(&format!("s{i}"), "R", aadt, 1.0, y, vec![y as f64 / (2.5 * base)]));
        }
        let ds = Dataset::new(recs, "m", &[]).unwrap();
        let c = calibration_factor(&ds, true, GroupBy::All).unwrap();
        assert!((c[0].c_adj - 2.5).abs() < 1e-12);
        let unadjusted = calibration_factor(&ds, false, GroupBy::All).unwrap();
        assert_eq!(unadjusted[0].c_adj, unadjusted[0].c_base);
    }

    #[test]
    fn unit_cmfs_give_equal_factors() {
        let ds = Dataset::new(
            vec![seg("a", "R1", 900.0, 2.0, 3, vec![1.0, 1.0]), seg("b", "R2", 400.0, 0.5, 1, vec![1.0])],
            "m",
            &[],
        )
        .unwrap();
        for c in calibration_factor(&ds, true, GroupBy::Region).unwrap() {
            assert_eq!(c.c_adj, c.c_base);
        }
    }

    proptest! {
        #[test]
        fn cmf_product_is_order_invariant(mut cmfs in prop::collection::vec(0.2f64..3.0, 0..8), n in 0.0f64..50.0) {
            let a = apply_cmfs(n, &cmfs).unwrap();
            cmfs.reverse();
            let b = apply_cmfs(n, &cmfs).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn vmt_rate_inverts(c in 0.0f64..100.0, v in 10.0f64..20000.0, n in 1u32..10, l in 0.05f64..10.0) {
            let r = crash_rate_vmt(c, v, f64::from(n), l).unwrap();
            let back = r * (v * 365.0 * f64::from(n) * l) / 1e8;
            prop_assert!((back - c).abs() < 1e-10);
        }

        #[test]
        fn base_prediction_is_linear(a in 10.0f64..15000.0, l in 0.1f64..8.0, y in 1.0f64..10.0, k in 0.1f64..10.0) {
            let p = hsm_base_prediction(a, l, y).unwrap();
            for q in [hsm_base_prediction(k * a, l, y).unwrap(), hsm_base_prediction(a, k * l, y).unwrap(), hsm_base_prediction(a, l, k * y).unwrap()] {
                prop_assert!((q - k * p).abs() <= 1e-12 * q.abs());
            }
        }
    }
}
