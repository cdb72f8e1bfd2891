//! Result rows, CSV persistence and per-point summaries.
//!
//! Column order: `experiment,channel,seed,snr_db,delta,scheme,status,
//! objective,rate_user1..rate_userK,common_rate,iterations,wall_time_ms`.
//! `snr_db` is empty for power-feasibility rows. Floats use Rust's shortest
//! round-trip formatting, so a CSV re-reads to identical rows.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rsbeam_core::ao::{DesignResult, DesignStatus};
use rsbeam_core::dof::DofEstimate;
use serde::Serialize;

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SchemeLabel {
    NoRS,
    RS,
    ZfConstructive,
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeLabel::NoRS => "NoRS",
            SchemeLabel::RS => "RS",
            SchemeLabel::ZfConstructive => "ZfConstructive",
        })
    }
}

impl FromStr for SchemeLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "NoRS" => Ok(SchemeLabel::NoRS),
            "RS" => Ok(SchemeLabel::RS),
            "ZfConstructive" => Ok(SchemeLabel::ZfConstructive),
            _ => Err(format!("unknown scheme {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowStatus {
    Converged,
    IterationCap,
    Infeasible,
}

impl From<DesignStatus> for RowStatus {
    fn from(s: DesignStatus) -> Self {
        match s {
            DesignStatus::Converged => RowStatus::Converged,
            DesignStatus::IterationCap => RowStatus::IterationCap,
            DesignStatus::Infeasible => RowStatus::Infeasible,
        }
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for RowStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Converged" => Ok(RowStatus::Converged),
            "IterationCap" => Ok(RowStatus::IterationCap),
            "Infeasible" => Ok(RowStatus::Infeasible),
            _ => Err(format!("unknown status {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub channel: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub delta: f64,
    pub scheme: SchemeLabel,
    pub status: RowStatus,
    pub objective: f64,
    pub rates: Vec<f64>,
    pub common_rate: f64,
    pub iterations: usize,
    pub wall_time_ms: u64,
}

impl ResultRow {
    pub fn from_design(
        experiment: &str,
        channel: usize,
        seed: u64,
        snr_db: Option<f64>,
        delta: f64,
        scheme: SchemeLabel,
        res: &DesignResult,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            channel,
            seed,
            snr_db,
            delta,
            scheme,
            status: res.status.into(),
            objective: res.objective,
            rates: res.per_user_conservative_rates.clone(),
            common_rate: res.split.r_c,
            iterations: res.iterations,
            wall_time_ms: 0,
        }
    }

    fn sort_key(&self) -> (usize, f64, f64, SchemeLabel) {
        (self.channel, self.snr_db.unwrap_or(f64::NEG_INFINITY), self.delta, self.scheme)
    }
}

/// Deterministic order: channel, SNR, radius, scheme.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
    });
}

fn header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["experiment", "channel", "seed", "snr_db", "delta", "scheme", "status", "objective"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=k).map(|i| format!("rate_user{i}")));
    h.extend(["common_rate", "iterations", "wall_time_ms"].iter().map(|s| s.to_string()));
    h
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Io("no rows to write".into()));
    }
    let k = rows[0].rates.len();
    if rows.iter().any(|r| r.rates.len() != k) {
        return Err(HarnessError::Io("rows disagree on the number of users".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(k))?;
    for r in rows {
        let mut rec = vec![
            r.experiment.clone(),
            r.channel.to_string(),
            r.seed.to_string(),
            r.snr_db.map(|s| s.to_string()).unwrap_or_default(),
            r.delta.to_string(),
            r.scheme.to_string(),
            r.status.to_string(),
            r.objective.to_string(),
        ];
        rec.extend(r.rates.iter().map(|v| v.to_string()));
        rec.push(r.common_rate.to_string());
        rec.push(r.iterations.to_string());
        rec.push(r.wall_time_ms.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let text = csv_string(rows)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, HarnessError> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Io(format!("bad {name} in CSV line {:?}", rec.position().map(|p| p.line()))))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let n = r.headers()?.len();
    if n < 11 {
        return Err(HarnessError::Io("CSV header too short".into()));
    }
    let k = n - 11;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let snr = rec.get(3).unwrap_or("");
        let rates = (0..k).map(|i| field(&rec, 8 + i, "rate")).collect::<Result<Vec<f64>, _>>()?;
        rows.push(ResultRow {
            experiment: field(&rec, 0, "experiment")?,
            channel: field(&rec, 1, "channel")?,
            seed: field(&rec, 2, "seed")?,
            snr_db: if snr.is_empty() { None } else { Some(field(&rec, 3, "snr_db")?) },
            delta: field(&rec, 4, "delta")?,
            scheme: field(&rec, 5, "scheme")?,
            status: field(&rec, 6, "status")?,
            objective: field(&rec, 7, "objective")?,
            rates,
            common_rate: field(&rec, 8 + k, "common_rate")?,
            iterations: field(&rec, 9 + k, "iterations")?,
            wall_time_ms: field(&rec, 10 + k, "wall_time_ms")?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Aggregate over the rows of one (SNR or radius, scheme) point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub snr_db: Option<f64>,
    pub delta: f64,
    pub scheme: SchemeLabel,
    pub rows: usize,
    pub feasible: usize,
    /// Over non-infeasible rows.
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Mean objective over channels feasible for every scheme at this point.
    pub mean_all_feasible: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DofSummary {
    pub scheme: SchemeLabel,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub predicted: f64,
    pub points: Vec<(f64, f64)>,
}

impl DofSummary {
    pub fn new(scheme: SchemeLabel, e: &DofEstimate, predicted: f64) -> Self {
        Self {
            scheme,
            slope: e.slope,
            intercept: e.intercept,
            r2: e.r2,
            predicted,
            points: e.points.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub points: Vec<PointSummary>,
    pub dof: Vec<DofSummary>,
    pub failed_solves: usize,
    pub total_solves: usize,
    pub wall_time_ms: u64,
}

fn point_key(r: &ResultRow) -> (u64, u64) {
    (r.snr_db.unwrap_or(f64::NEG_INFINITY).to_bits(), r.delta.to_bits())
}

/// Mean/min/max per (SNR, radius, scheme); infeasible rows count towards
/// `rows` only.
pub fn summarize(rows: &[ResultRow]) -> Vec<PointSummary> {
    let mut groups: BTreeMap<(u64, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(point_key(r)).or_default().push(r);
    }
    let mut out = Vec::new();
    for group in groups.values() {
        let mut schemes: Vec<SchemeLabel> = group.iter().map(|r| r.scheme).collect();
        schemes.sort();
        schemes.dedup();
        let mut channels: Vec<usize> = group.iter().map(|r| r.channel).collect();
        channels.sort();
        channels.dedup();
        let all_feasible: Vec<usize> = channels
            .into_iter()
            .filter(|c| {
                schemes.iter().all(|s| {
                    group
                        .iter()
                        .any(|r| r.channel == *c && r.scheme == *s && r.status != RowStatus::Infeasible)
                })
            })
            .collect();
        for s in &schemes {
            let of: Vec<&&ResultRow> = group.iter().filter(|r| r.scheme == *s).collect();
            let ok: Vec<f64> = of
                .iter()
                .filter(|r| r.status != RowStatus::Infeasible)
                .map(|r| r.objective)
                .collect();
            let both: Vec<f64> = of
                .iter()
                .filter(|r| all_feasible.contains(&r.channel))
                .map(|r| r.objective)
                .collect();
            let mean = |v: &[f64]| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
            out.push(PointSummary {
                snr_db: of[0].snr_db,
                delta: of[0].delta,
                scheme: *s,
                rows: of.len(),
                feasible: ok.len(),
                mean: mean(&ok),
                min: ok.iter().cloned().reduce(f64::min),
                max: ok.iter().cloned().reduce(f64::max),
                mean_all_feasible: mean(&both),
            });
        }
    }
    out
}

pub fn emit_summary(summary: &Summary, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
