//! Experiment reports and their renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub profile: String,
    /// 1-based repeat index.
    pub repeat: u32,
    pub hits_original: u64,
    pub hits_watermarked: u64,
    pub z_original: f64,
    pub z_watermarked: f64,
    pub false_alarm: bool,
    pub effective: bool,
    pub trace_original: String,
    pub trace_watermarked: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileAverage {
    pub profile: String,
    pub z_original: f64,
    pub z_watermarked: f64,
    pub false_alarm: bool,
    pub effective: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub key: u64,
    pub rounds: u64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_override: Option<f64>,
    pub rows: Vec<ReportRow>,
    pub averages: Vec<ProfileAverage>,
    /// Set when the run aborted; `rows` then holds only the finished cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ExperimentReport {
    /// Builds the per-profile averages from `rows`, keeping first-seen
    /// profile order.
    pub fn new(key: u64, rounds: u64, tau: f64, gamma_override: Option<f64>, rows: Vec<ReportRow>) -> Self {
        let mut profiles: Vec<&str> = Vec::new();
        for r in &rows {
            if !profiles.contains(&r.profile.as_str()) {
                profiles.push(&r.profile);
            }
        }
        let averages = profiles
            .iter()
            .map(|&p| {
                let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.profile == p).collect();
                let n = mine.len() as f64;
                let z_original = mine.iter().map(|r| r.z_original).sum::<f64>() / n;
                let z_watermarked = mine.iter().map(|r| r.z_watermarked).sum::<f64>() / n;
                ProfileAverage {
                    profile: p.to_string(),
                    z_original,
                    z_watermarked,
                    false_alarm: z_original > tau,
                    effective: z_watermarked > tau,
                }
            })
            .collect();
        ExperimentReport {
            key,
            rounds,
            tau,
            gamma_override,
            rows,
            averages,
            failure: None,
        }
    }

    /// True when every flag agrees with its z value and τ.
    pub fn is_consistent(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.effective == (r.z_watermarked > self.tau) && r.false_alarm == (r.z_original > self.tau))
            && self
                .averages
                .iter()
                .all(|a| a.effective == (a.z_watermarked > self.tau) && a.false_alarm == (a.z_original > self.tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
    PlotData,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown report format {0:?} (expected table, csv, json or plotdata)")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, UnknownFormat> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plotdata" => Ok(ReportFormat::PlotData),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

/// `(profile, round label, z_original, z_watermarked, false_alarm, effective)`
/// in display order: each profile's repeats followed by its average.
fn display_rows(report: &ExperimentReport) -> Vec<(&str, String, f64, f64, bool, bool)> {
    let mut out = Vec::new();
    for avg in &report.averages {
        for r in report.rows.iter().filter(|r| r.profile == avg.profile) {
            out.push((
                r.profile.as_str(),
                format!("Round {}", r.repeat),
                r.z_original,
                r.z_watermarked,
                r.false_alarm,
                r.effective,
            ));
        }
        out.push((
            avg.profile.as_str(),
            "Average".to_string(),
            avg.z_original,
            avg.z_watermarked,
            avg.false_alarm,
            avg.effective,
        ));
    }
    out
}

pub fn render(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => {
            let mut s = String::from("profile,round,z_original,z_watermarked,false_alarm,effective\n");
            for (p, round, zo, zw, fa, ef) in display_rows(report) {
                let _ = writeln!(s, "{p},{round},{zo:.4},{zw:.4},{},{}", yes_no(fa), yes_no(ef));
            }
            s
        }
        ReportFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{:<20} {:<9} {:>10} {:>12} {:>12} {:>10}",
                "Personality", "Round", "Z Original", "Z Watermark", "False Alarm", "Effective"
            );
            let _ = writeln!(s, "{}", "-".repeat(78));
            let mut last = "";
            for (p, round, zo, zw, fa, ef) in display_rows(report) {
                let name = if p == last { "" } else { p };
                last = p;
                let _ = writeln!(
                    s,
                    "{:<20} {:<9} {:>10.2} {:>12.2} {:>12} {:>10}",
                    name,
                    round,
                    zo,
                    zw,
                    yes_no(fa),
                    yes_no(ef)
                );
            }
            if let Some(f) = &report.failure {
                let _ = writeln!(s, "\nRUN FAILED: {f}");
            }
            s
        }
        ReportFormat::PlotData => {
            let series: Vec<serde_json::Value> = report
                .averages
                .iter()
                .map(|a| {
                    let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.profile == a.profile).collect();
                    serde_json::json!({
                        "profile": a.profile,
                        "repeat": rows.iter().map(|r| r.repeat).collect::<Vec<_>>(),
                        "z_original": rows.iter().map(|r| r.z_original).collect::<Vec<_>>(),
                        "z_watermarked": rows.iter().map(|r| r.z_watermarked).collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({ "tau": report.tau, "series": series }))
                .expect("plot data serializes")
                + "\n"
        }
    }
}
