//! Segment records, CSV ingestion, train/test partitioning and design
//! matrices for the four functional forms.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpfError};
use crate::model::{FunctionalForm, ModelSpec, ResponseScale};

/// Exposure in million vehicle-miles per year per (vehicle/day * mile).
pub const MVMT_PER_AADT_MILE_YEAR: f64 = 365.0e-6;

/// Segments shorter than this are accepted but logged.
pub const SHORT_SEGMENT_MILES: f64 = 0.10;

/// One homogeneous road segment over the study period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub segment_id: String,
    pub region: String,
    /// Average annual daily traffic over the study period (vehicles/day).
    pub aadt: f64,
    pub length_miles: f64,
    pub years: u32,
    /// Total crashes over the study period.
    pub crash_count: u64,
    #[serde(default)]
    pub covariates: BTreeMap<String, f64>,
    #[serde(default)]
    pub cmfs: Vec<f64>,
}

impl SegmentRecord {
    /// Million vehicle-miles travelled over the study period.
    pub fn exposure_mvmt(&self) -> f64 {
        self.aadt * self.length_miles * MVMT_PER_AADT_MILE_YEAR * f64::from(self.years)
    }

    /// Value of a regressor: either a derived column (`aadt`, `aadt_thousands`,
    /// `length`, `ln_aadt`, `ln_length`, `years`) or a named covariate.
    pub fn regressor(&self, name: &str) -> Option<f64> {
        match name {
            "aadt" => Some(self.aadt),
            "aadt_thousands" => Some(self.aadt / 1000.0),
            "length" | "length_miles" => Some(self.length_miles),
            "ln_aadt" => Some(self.aadt.ln()),
            "ln_length" => Some(self.length_miles.ln()),
            "years" => Some(f64::from(self.years)),
            other => self.covariates.get(other).copied(),
        }
    }

    fn invariant_violation(&self) -> Option<&'static str> {
        if !(self.aadt.is_finite() && self.aadt > 0.0) {
            Some("aadt must be positive")
        } else if !(self.length_miles.is_finite() && self.length_miles > 0.0) {
            Some("length_miles must be positive")
        } else if self.years < 1 {
            Some("years must be at least 1")
        } else if self.cmfs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            Some("every CMF must be positive")
        } else if self.covariates.values().any(|v| !v.is_finite()) {
            Some("covariates must be finite")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub row_count: usize,
}

/// An ordered, validated collection of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<SegmentRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Validates record invariants, id uniqueness, and that every covariate in
    /// `indicators` is 0 or 1.
    pub fn new(records: Vec<SegmentRecord>, source: impl Into<String>, indicators: &[String]) -> Result<Self> {
        let mut by_reason: BTreeMap<&'static str, Vec<String>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for r in &records {
            if let Some(reason) = r.invariant_violation() {
                by_reason.entry(reason).or_default().push(r.segment_id.clone());
            }
            if !seen.insert(r.segment_id.as_str()) {
                by_reason.entry("duplicate segment_id").or_default().push(r.segment_id.clone());
            }
            for ind in indicators {
                if let Some(v) = r.covariates.get(ind) {
                    if *v != 0.0 && *v != 1.0 {
                        by_reason
                            .entry("indicator covariate must be 0 or 1")
                            .or_default()
                            .push(r.segment_id.clone());
                    }
                }
            }
        }
        if let Some((reason, ids)) = by_reason.into_iter().next() {
            return Err(SpfError::Validation {
                reason: reason.to_string(),
                segment_ids: ids,
            });
        }
        let short = records.iter().filter(|r| r.length_miles < SHORT_SEGMENT_MILES).count();
        if short > 0 {
            log::warn!("{short} segment(s) shorter than {SHORT_SEGMENT_MILES} mi");
        }
        let row_count = records.len();
        Ok(Dataset {
            records,
            provenance: Provenance {
                source: source.into(),
                row_count,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn subset(&self, idx: &[usize], tag: &str) -> Dataset {
        let records: Vec<_> = idx.iter().map(|&i| self.records[i].clone()).collect();
        Dataset {
            provenance: Provenance {
                source: format!("{}#{tag}", self.provenance.source),
                row_count: records.len(),
            },
            records,
        }
    }

    pub fn with_records(&self, records: Vec<SegmentRecord>, tag: &str) -> Dataset {
        Dataset {
            provenance: Provenance {
                source: format!("{}#{tag}", self.provenance.source),
                row_count: records.len(),
            },
            records,
        }
    }
}

/// Maps logical fields to CSV column names.
///
/// `covariates` maps covariate name to column; when absent, every column not
/// claimed by another field is read as a numeric covariate. CMFs come from a
/// single semicolon-joined column (`cmfs`), from an explicit list of columns
/// (`cmf_columns`), or, when neither is configured, from a `cmfs` column or
/// `cmf_1..cmf_k` columns if the file has them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub segment_id: String,
    pub region: Option<String>,
    pub aadt: String,
    pub length_miles: String,
    pub years: Option<String>,
    /// Used when `years` is null.
    pub default_years: Option<u32>,
    pub crash_count: String,
    pub cmfs: Option<String>,
    pub cmf_columns: Vec<String>,
    pub covariates: Option<BTreeMap<String, String>>,
    /// Covariates that must be 0/1.
    pub indicators: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            segment_id: "segment_id".into(),
            region: Some("region".into()),
            aadt: "aadt".into(),
            length_miles: "length_miles".into(),
            years: Some("years".into()),
            default_years: None,
            crash_count: "crash_count".into(),
            cmfs: None,
            cmf_columns: Vec::new(),
            covariates: None,
            indicators: Vec::new(),
        }
    }
}

impl Schema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| SpfError::io(path.as_ref(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

enum CmfSource {
    None,
    Joined(usize),
    Columns(Vec<usize>),
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| SpfError::MissingColumn(name.to_string()))
}

fn cmf_suffix(h: &str) -> Option<u32> {
    h.strip_prefix("cmf_").and_then(|k| k.parse().ok())
}

/// Reads a segment CSV (UTF-8, comma separated, header row).
pub fn load_segments(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| SpfError::io(path, e))?;
    read_segments(file, schema, &path.display().to_string())
}

pub fn read_segments<R: std::io::Read>(reader: R, schema: &Schema, source: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();

    let id_col = column(&headers, &schema.segment_id)?;
    let region_col = schema.region.as_deref().map(|c| column(&headers, c)).transpose()?;
    let aadt_col = column(&headers, &schema.aadt)?;
    let len_col = column(&headers, &schema.length_miles)?;
    let crash_col = column(&headers, &schema.crash_count)?;
    let years_col = match (&schema.years, schema.default_years) {
        (Some(c), _) => Some(column(&headers, c)?),
        (None, Some(_)) => None,
        (None, None) => return Err(SpfError::MissingColumn("years (or default_years)".into())),
    };

    let cmf_source = if let Some(c) = &schema.cmfs {
        CmfSource::Joined(column(&headers, c)?)
    } else if !schema.cmf_columns.is_empty() {
        CmfSource::Columns(
            schema.cmf_columns.iter().map(|c| column(&headers, c)).collect::<Result<_>>()?,
        )
    } else if let Ok(c) = column(&headers, "cmfs") {
        CmfSource::Joined(c)
    } else {
        let mut found: Vec<(u32, usize)> = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| cmf_suffix(h.trim()).map(|k| (k, i)))
            .collect();
        found.sort();
        if found.is_empty() {
            CmfSource::None
        } else {
            CmfSource::Columns(found.into_iter().map(|(_, i)| i).collect())
        }
    };

    let mut claimed: BTreeSet<usize> = [Some(id_col), region_col, Some(aadt_col), Some(len_col), Some(crash_col), years_col]
        .into_iter()
        .flatten()
        .collect();
    match &cmf_source {
        CmfSource::Joined(c) => {
            claimed.insert(*c);
        }
        CmfSource::Columns(cs) => claimed.extend(cs.iter().copied()),
        CmfSource::None => {}
    }
    let covariate_cols: Vec<(String, usize)> = match &schema.covariates {
        Some(map) => map
            .iter()
            .map(|(name, col)| Ok((name.clone(), column(&headers, col)?)))
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed.contains(i))
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect(),
    };

    let mut records = Vec::new();
    let mut count_errors: Vec<String> = Vec::new();
    let mut year_errors: Vec<String> = Vec::new();
    for (row_idx, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = row_idx + 1;
        let cell = |c: usize| row.get(c).unwrap_or("").trim();
        let num = |c: usize| -> Result<f64> {
            let s = cell(c);
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SpfError::Parse {
                row: row_no,
                column: headers.get(c).unwrap_or("?").to_string(),
                message: format!("`{s}` is not a finite number"),
            })
        };
        let segment_id = cell(id_col).to_string();
        let crashes = num(crash_col)?;
        let crash_count = if crashes >= 0.0 && crashes.fract() == 0.0 {
            crashes as u64
        } else {
            count_errors.push(segment_id.clone());
            0
        };
        let years = match years_col {
            Some(c) => {
                let y = num(c)?;
                if y >= 1.0 && y.fract() == 0.0 && y <= f64::from(u32::MAX) {
                    y as u32
                } else {
                    year_errors.push(segment_id.clone());
                    1
                }
            }
            None => schema.default_years.unwrap_or(1),
        };
        let cmfs = match &cmf_source {
            CmfSource::None => Vec::new(),
            CmfSource::Joined(c) => {
                let s = cell(*c);
                if s.is_empty() {
                    Vec::new()
                } else {
                    s.split(';')
                        .map(|part| {
                            part.trim().parse::<f64>().map_err(|_| SpfError::Parse {
                                row: row_no,
                                column: headers.get(*c).unwrap_or("?").to_string(),
                                message: format!("`{part}` is not a CMF value"),
                            })
                        })
                        .collect::<Result<_>>()?
                }
            }
            CmfSource::Columns(cs) => {
                let mut v = Vec::new();
                for &c in cs {
                    if !cell(c).is_empty() {
                        v.push(num(c)?);
                    }
                }
                v
            }
        };
        let mut covariates = BTreeMap::new();
        for (name, c) in &covariate_cols {
            covariates.insert(name.clone(), num(*c)?);
        }
        records.push(SegmentRecord {
            segment_id,
            region: region_col.map(|c| cell(c).to_string()).unwrap_or_else(|| "all".into()),
            aadt: num(aadt_col)?,
            length_miles: num(len_col)?,
            years,
            crash_count,
            covariates,
            cmfs,
        });
    }
    if !count_errors.is_empty() {
        return Err(SpfError::Validation {
            reason: "crash_count must be a non-negative integer".into(),
            segment_ids: count_errors,
        });
    }
    if !year_errors.is_empty() {
        return Err(SpfError::Validation {
            reason: "years must be an integer >= 1".into(),
            segment_ids: year_errors,
        });
    }
    Dataset::new(records, source, &schema.indicators)
}

/// Writes a dataset in the default schema layout. CMFs are semicolon joined;
/// covariate columns are the sorted union over all records.
pub fn write_segments<W: std::io::Write>(writer: W, data: &Dataset) -> Result<()> {
    let names: BTreeSet<&str> = data
        .records
        .iter()
        .flat_map(|r| r.covariates.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["segment_id", "region", "aadt", "length_miles", "years", "crash_count", "cmfs"];
    header.extend(names.iter().copied());
    w.write_record(&header)?;
    for r in &data.records {
        let mut row = vec![
            r.segment_id.clone(),
            r.region.clone(),
            r.aadt.to_string(),
            r.length_miles.to_string(),
            r.years.to_string(),
            r.crash_count.to_string(),
            r.cmfs.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        ];
        for n in &names {
            row.push(r.covariates.get(*n).map(f64::to_string).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| SpfError::io("<csv output>", e))?;
    Ok(())
}

/// Uniform integer in `0..bound` by Lemire's multiply-shift with rejection.
fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = u128::from(rng.next_u64()) * u128::from(bound);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Seeded random partition into training and test sets.
///
/// The permutation generator is part of the reproducibility contract:
/// ChaCha8 seeded through `SeedableRng::seed_from_u64(seed)`, then a
/// Fisher-Yates shuffle of `0..n` running `i` from `n-1` down to `1` and
/// swapping with `j = bounded(i + 1)` (Lemire). The first
/// `round(train_fraction * n)` shuffled indices form the training set. Both
/// sets keep the original record order.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SpfError::Argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if data.is_empty() {
        return Err(SpfError::Argument("cannot split an empty dataset".into()));
    }
    let n = data.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = bounded(&mut rng, i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut train: Vec<usize> = perm[..n_train].to_vec();
    let mut test: Vec<usize> = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train, "train"), data.subset(&test, "test")))
}

/// Dense row-major matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix {
    pub names: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
}

impl ColumnMatrix {
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let values = rows.into_iter().flatten().collect::<Vec<_>>();
        assert_eq!(values.len(), n_rows * names.len(), "ragged rows");
        ColumnMatrix { names, n_rows, values }
    }

    pub fn empty(n_rows: usize) -> Self {
        ColumnMatrix {
            names: Vec::new(),
            n_rows,
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_cols();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i)[j]).collect()
    }

    pub fn scale_column(&mut self, j: usize, factor: f64) {
        let k = self.n_cols();
        for i in 0..self.n_rows {
            self.values[i * k + j] *= factor;
        }
    }
}

/// Response, offset and regressors for one functional form.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub segment_ids: Vec<String>,
    pub response: Vec<u64>,
    /// Natural-log scale; zero where unused.
    pub offset: Vec<f64>,
    /// Fixed-coefficient columns; column 0 is always the intercept.
    pub fixed: ColumnMatrix,
    /// Random-coefficient columns (form 4 only).
    pub random: ColumnMatrix,
}

impl DesignMatrix {
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    /// Intercept-only design sharing this response.
    pub fn intercept_only(&self, keep_offset: bool) -> DesignMatrix {
        let n = self.n_obs();
        DesignMatrix {
            segment_ids: self.segment_ids.clone(),
            response: self.response.clone(),
            offset: if keep_offset { self.offset.clone() } else { vec![0.0; n] },
            fixed: ColumnMatrix::from_rows(vec!["constant".into()], vec![vec![1.0]; n]),
            random: ColumnMatrix::empty(n),
        }
    }
}

pub const INTERCEPT: &str = "constant";

fn regressor_value(r: &SegmentRecord, name: &str) -> Result<f64> {
    let v = r.regressor(name).ok_or_else(|| {
        SpfError::Spec(format!("covariate `{name}` not present in segment {}", r.segment_id))
    })?;
    if !v.is_finite() {
        return Err(SpfError::Domain(format!(
            "covariate `{name}` is not finite for segment {}",
            r.segment_id
        )));
    }
    Ok(v)
}

fn checked_ln(v: f64, what: &str, id: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(SpfError::Domain(format!("cannot take log of {what} = {v} for segment {id}")))
    }
}

/// Builds the design for `spec.form`.
///
/// * form 1: intercept only, offset `ln(AADT * L * 365e-6 * years)`
/// * form 2: `[1, ln AADT, ln L]`
/// * form 3: `[1, covariates...]` (`aadt_thousands`, `length` and the other
///   derived names of [`SegmentRecord::regressor`] are available)
/// * form 4: form-3 columns, with `spec.random` moved to the random block in
///   declaration order
///
/// With [`ResponseScale::PerYear`] forms 2-4 also carry `ln(years)` in the offset.
pub fn build_design(data: &Dataset, spec: &ModelSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let n = data.len();
    let mut offset = Vec::with_capacity(n);
    let mut fixed_rows = Vec::with_capacity(n);
    let mut random_rows = Vec::with_capacity(n);

    let (fixed_names, random_names): (Vec<String>, Vec<String>) = match spec.form {
        FunctionalForm::ExposureOffset => (vec![INTERCEPT.into()], vec![]),
        FunctionalForm::LogLinear => (vec![INTERCEPT.into(), "ln_aadt".into(), "ln_length".into()], vec![]),
        FunctionalForm::FullFixed | FunctionalForm::RandomParameters => {
            let mut fixed = vec![INTERCEPT.to_string()];
            let mut random = vec![];
            for c in &spec.covariates {
                if spec.random.contains(c) {
                    random.push(c.clone());
                } else {
                    fixed.push(c.clone());
                }
            }
            (fixed, random)
        }
    };

    for r in &data.records {
        let years_ln = checked_ln(f64::from(r.years), "years", &r.segment_id)?;
        match spec.form {
            FunctionalForm::ExposureOffset => {
                offset.push(checked_ln(r.exposure_mvmt(), "exposure", &r.segment_id)?);
                fixed_rows.push(vec![1.0]);
                random_rows.push(vec![]);
                continue;
            }
            FunctionalForm::LogLinear => {
                fixed_rows.push(vec![
                    1.0,
                    checked_ln(r.aadt, "aadt", &r.segment_id)?,
                    checked_ln(r.length_miles, "length", &r.segment_id)?,
                ]);
                random_rows.push(vec![]);
            }
            FunctionalForm::FullFixed | FunctionalForm::RandomParameters => {
                let mut row = vec![1.0];
                for name in &fixed_names[1..] {
                    row.push(regressor_value(r, name)?);
                }
                fixed_rows.push(row);
                random_rows.push(
                    random_names
                        .iter()
                        .map(|name| regressor_value(r, name))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
        offset.push(match spec.response {
            ResponseScale::Total => 0.0,
            ResponseScale::PerYear => years_ln,
        });
    }

    Ok(DesignMatrix {
        segment_ids: data.records.iter().map(|r| r.segment_id.clone()).collect(),
        response: data.records.iter().map(|r| r.crash_count).collect(),
        offset,
        fixed: ColumnMatrix::from_rows(fixed_names, fixed_rows),
        random: ColumnMatrix::from_rows(random_names, random_rows),
    })
}
