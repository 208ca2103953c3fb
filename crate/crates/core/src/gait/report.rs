//! Two-group comparison tables in the layout of a spreadsheet t-test summary.

use std::fmt::Write as _;

use serde::Serialize;

use super::stats::{two_sample_ttest, GroupStats, TTest};
use crate::error::{Error, Result};

/// Two named groups to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPair {
    pub label: String,
    pub unit: String,
    pub a_name: String,
    pub a: GroupStats,
    pub b_name: String,
    pub b: GroupStats,
    /// Reported one-tail p value, when checking against a reference comparison.
    pub reference_p_one: Option<f64>,
    /// Set when the reference value is known not to follow from the rounded
    /// summary statistics.
    pub non_reproducible: bool,
}

impl ComparisonPair {
    pub fn new(label: &str, a_name: &str, a: GroupStats, b_name: &str, b: GroupStats) -> Self {
        Self {
            label: label.to_string(),
            unit: String::new(),
            a_name: a_name.to_string(),
            a,
            b_name: b_name.to_string(),
            b,
            reference_p_one: None,
            non_reproducible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub unit: String,
    pub a_name: String,
    pub b_name: String,
    pub a: GroupStats,
    pub b: GroupStats,
    pub test: TTest,
    pub reference_p_one: Option<f64>,
    pub note: String,
}

impl ComparisonRow {
    /// Relative error of the computed one-tail p against the reference.
    pub fn reference_rel_error(&self) -> Option<f64> {
        self.reference_p_one
            .map(|r| (self.test.p_one_tail - r).abs() / r)
    }
}

pub fn comparison_report(pairs: &[ComparisonPair]) -> Result<Vec<ComparisonRow>> {
    if pairs.is_empty() {
        return Err(Error::domain("comparison report needs at least one pair"));
    }
    pairs
        .iter()
        .map(|p| {
            let test = two_sample_ttest(&p.a, &p.b)?;
            let note = if p.non_reproducible {
                "reference p not reproducible from rounded summary statistics".to_string()
            } else {
                String::new()
            };
            Ok(ComparisonRow {
                label: p.label.clone(),
                unit: p.unit.clone(),
                a_name: p.a_name.clone(),
                b_name: p.b_name.clone(),
                a: p.a,
                b: p.b,
                test,
                reference_p_one: p.reference_p_one,
                note,
            })
        })
        .collect()
}

fn fmt_p(p: f64) -> String {
    if p != 0.0 && p < 1e-3 {
        // spreadsheet style, two-digit exponent
        let s = format!("{p:.2E}");
        let (m, e) = s.split_once('E').expect("exponent present");
        let (sign, digits) = e.strip_prefix('-').map_or(("+", e), |d| ("-", d));
        format!("{m}E{sign}{digits:0>2}")
    } else {
        format!("{p:.4}")
    }
}

/// Aligned plain-text rendering, one block per comparison.
pub fn render_text(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let unit = if r.unit.is_empty() {
            String::new()
        } else {
            format!(" ({})", r.unit)
        };
        let lines: Vec<(String, String, String)> = vec![
            ("".into(), r.a_name.clone(), r.b_name.clone()),
            (format!("Mean{unit}"), format!("{}", r.a.mean), format!("{}", r.b.mean)),
            (
                format!("Standard deviation{unit}"),
                format!("{}", r.a.sd),
                format!("{}", r.b.sd),
            ),
            ("Observations".into(), r.a.n.to_string(), r.b.n.to_string()),
            ("Hypothesized Mean Difference".into(), "0".into(), String::new()),
            ("df".into(), r.test.df.to_string(), String::new()),
            ("t Stat".into(), format!("{:.4}", r.test.t), String::new()),
            ("P(T<=t) one-tail".into(), fmt_p(r.test.p_one_tail), String::new()),
            ("P(T<=t) two-tail".into(), fmt_p(r.test.p_two_tail), String::new()),
        ];
        let w0 = lines.iter().map(|l| l.0.len()).max().unwrap_or(0);
        let w1 = lines.iter().map(|l| l.1.len()).max().unwrap_or(0);
        let _ = writeln!(out, "{}", r.label);
        for (a, b, c) in &lines {
            let _ = writeln!(out, "  {a:<w0$}  {b:<w1$}  {c}").map(|_| ());
        }
        if let Some(p) = r.reference_p_one {
            let _ = writeln!(
                out,
                "  {:<w0$}  {}",
                "Reference one-tail",
                fmt_p(p),
            );
        }
        if !r.note.is_empty() {
            let _ = writeln!(out, "  note: {}", r.note);
        }
        out.push('\n');
    }
    // trailing spaces from empty third columns
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

pub const REPORT_CSV_HEADER: [&str; 16] = [
    "comparison",
    "group_a",
    "group_b",
    "mean_a",
    "sd_a",
    "n_a",
    "mean_b",
    "sd_b",
    "n_b",
    "hyp_mean_diff",
    "df",
    "t_stat",
    "p_one_tail",
    "p_two_tail",
    "reference_p_one_tail",
    "note",
];

pub fn render_csv(rows: &[ComparisonRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(REPORT_CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.a_name.clone(),
            r.b_name.clone(),
            r.a.mean.to_string(),
            r.a.sd.to_string(),
            r.a.n.to_string(),
            r.b.mean.to_string(),
            r.b.sd.to_string(),
            r.b.n.to_string(),
            "0".to_string(),
            r.test.df.to_string(),
            r.test.t.to_string(),
            r.test.p_one_tail.to_string(),
            r.test.p_two_tail.to_string(),
            r.reference_p_one.map(|p| p.to_string()).unwrap_or_default(),
            r.note.clone(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// A reference comparison: group summaries with their reported test result.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceComparison {
    pub id: &'static str,
    pub title: &'static str,
    pub unit: &'static str,
    pub a: (&'static str, GroupStats),
    pub b: (&'static str, GroupStats),
    pub df: usize,
    pub p_one: f64,
    pub p_two: f64,
    /// Whether the reported p follows from the rounded summary statistics.
    pub reproducible: bool,
}

impl ReferenceComparison {
    pub fn pair(&self) -> ComparisonPair {
        ComparisonPair {
            label: self.title.to_string(),
            unit: self.unit.to_string(),
            a_name: self.a.0.to_string(),
            a: self.a.1,
            b_name: self.b.0.to_string(),
            b: self.b.1,
            reference_p_one: Some(self.p_one),
            non_reproducible: !self.reproducible,
        }
    }
}

const fn g(mean: f64, sd: f64, n: usize) -> GroupStats {
    GroupStats { mean, sd, n }
}

/// Reported comparisons of bend amplitude and cycle time between groups.
///
/// Two are marked non-reproducible: their reported p values do not follow
/// from the rounded means and standard deviations under the pooled test.
pub fn reference_comparisons() -> Vec<ReferenceComparison> {
    vec![
        ReferenceComparison {
            id: "mesh_plate_bend",
            title: "angular displacement, mesh vs plate",
            unit: "degree",
            a: ("Mesh", g(55.7, 4.4, 5)),
            b: ("Plate", g(27.7, 5.4, 5)),
            df: 8,
            p_one: 9.04e-6,
            p_two: 1.81e-5,
            reproducible: true,
        },
        ReferenceComparison {
            id: "mesh_plate_cycle",
            title: "cycle time, mesh vs plate",
            unit: "ms",
            a: ("Mesh", g(446.1, 50.5, 5)),
            b: ("Plate", g(406.6, 67.8, 5)),
            df: 8,
            p_one: 0.1631,
            p_two: 0.3262,
            reproducible: true,
        },
        ReferenceComparison {
            id: "membrane_cut_bend",
            title: "angular displacement, intact vs cut membrane",
            unit: "degree",
            a: ("Intact tarsus", g(55.9, 2.3, 3)),
            b: ("Cutting membrane", g(25.5, 1.6, 3)),
            df: 4,
            p_one: 2.42e-5,
            p_two: 4.85e-5,
            reproducible: true,
        },
        ReferenceComparison {
            id: "membrane_baseline_bend",
            title: "tarsal bending, intact beetle vs before cutting membrane",
            unit: "degree",
            a: ("Intact beetle", g(55.7, 4.4, 5)),
            b: ("Before cutting membrane", g(55.9, 2.3, 3)),
            df: 6,
            p_one: 0.4418,
            p_two: 0.8835,
            reproducible: false,
        },
        ReferenceComparison {
            id: "tubed_cycle",
            title: "cycle time, intact vs tubed tarsus",
            unit: "ms",
            a: ("Intact tarsus", g(446.1, 50.5, 5)),
            b: ("Tubed tarsus", g(1594.4, 142.5, 5)),
            df: 8,
            p_one: 7.33e-8,
            p_two: 1.47e-7,
            reproducible: true,
        },
        ReferenceComparison {
            id: "released_cycle",
            title: "cycle time, intact vs released tarsus",
            unit: "ms",
            a: ("Intact tarsus", g(446.8, 50.5, 25)),
            b: ("Releasing tarsus", g(443.36, 48.4, 25)),
            df: 48,
            p_one: 0.4664,
            p_two: 0.9328,
            reproducible: false,
        },
    ]
}
