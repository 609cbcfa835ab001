//! Success rate (SR), average completion time (ACT), path length (PL) and
//! the efficiency-success score ESS = SR / ACT, plus table rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::TrialOutcome;

/// Placeholder for cells with no successful trial.
pub const UNDEFINED_CELL: &str = "–";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub planner: String,
    pub scenario: String,
    pub trials: usize,
    pub successes: usize,
    /// Percent.
    pub sr: f64,
    /// Seconds, mean over successful trials.
    pub act: Option<f64>,
    /// Meters, mean over successful trials.
    pub pl: Option<f64>,
    /// Percent per second.
    pub ess: f64,
}

pub fn aggregate(planner: &str, scenario: &str, outcomes: &[TrialOutcome]) -> Result<BenchmarkReport> {
    if outcomes.is_empty() {
        return Err(Error::Contract("cannot aggregate zero trials".into()));
    }
    let wins: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.success).collect();
    let sr = 100.0 * wins.len() as f64 / outcomes.len() as f64;
    let mean = |f: fn(&TrialOutcome) -> f64| {
        (!wins.is_empty()).then(|| wins.iter().map(|o| f(o)).sum::<f64>() / wins.len() as f64)
    };
    let act = mean(|o| o.completion_time);
    let pl = mean(|o| o.traveled_length);
    Ok(BenchmarkReport {
        planner: planner.to_string(),
        scenario: scenario.to_string(),
        trials: outcomes.len(),
        successes: wins.len(),
        sr,
        act,
        pl,
        ess: ess(sr, act),
    })
}

pub fn ess(sr: f64, act: Option<f64>) -> f64 {
    match act {
        Some(t) if sr > 0.0 && t > 0.0 => sr / t,
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Markdown,
    Csv,
    /// `&`-separated LaTeX tabular rows.
    Latex,
}

impl FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "tex" | "latex" => Ok(TableFormat::Latex),
            other => Err(Error::Contract(format!("unknown report format {other:?}"))),
        }
    }
}

pub const TABLE_HEADER: [&str; 5] = ["Model/Planner", "ACT(s)", "PL(m)", "SR", "ESS"];

/// Rounded cells: ACT whole seconds, PL one decimal, ESS three decimals.
pub fn report_cells(r: &BenchmarkReport, with_units: bool) -> [String; 5] {
    let (s, pct) = if with_units { ("s", "%") } else { ("", "") };
    [
        r.planner.clone(),
        r.act
            .map(|v| format!("{v:.0}{s}"))
            .unwrap_or_else(|| UNDEFINED_CELL.into()),
        r.pl.map(|v| format!("{v:.1}")).unwrap_or_else(|| UNDEFINED_CELL.into()),
        format!("{:.0}{pct}", r.sr),
        format!("{:.3}", r.ess),
    ]
}

pub fn render_table(reports: &[BenchmarkReport], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", TABLE_HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(TABLE_HEADER.len()));
            for r in reports {
                let _ = writeln!(out, "| {} |", report_cells(r, true).join(" | "));
            }
        }
        TableFormat::Csv => {
            let _ = writeln!(out, "{}", TABLE_HEADER.map(csv_field).join(","));
            for r in reports {
                let _ = writeln!(out, "{}", report_cells(r, false).map(|c| csv_field(&c)).join(","));
            }
        }
        TableFormat::Latex => {
            let _ = writeln!(out, "{} \\\\", TABLE_HEADER.join(" & "));
            for r in reports {
                let _ = writeln!(out, "{} \\\\", report_cells(r, true).join(" & "));
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(success: bool, t: f64, l: f64) -> TrialOutcome {
        TrialOutcome {
            success,
            completion_time: t,
            traveled_length: l,
            collision: !success,
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn all_successful() {
        let r = aggregate("Llama", "S1", &vec![outcome(true, 80.0, 14.3); 10]).unwrap();
        assert_eq!(r.sr, 100.0);
        assert_eq!(r.act, Some(80.0));
        assert!((r.pl.unwrap() - 14.3).abs() < 1e-12);
        assert_eq!(format!("{:.3}", r.ess), "1.250");
    }

    #[test]
    fn all_failed() {
        let r = aggregate("DeepSeek", "S1", &vec![outcome(false, 0.0, 0.0); 10]).unwrap();
        assert_eq!(r.sr, 0.0);
        assert_eq!(r.act, None);
        assert_eq!(r.ess, 0.0);
        let cells = report_cells(&r, true);
        assert_eq!(cells[1], UNDEFINED_CELL);
        assert_eq!(cells[3], "0%");
        assert_eq!(cells[4], "0.000");
    }

    #[test]
    fn nine_of_ten() {
        let mut v = vec![outcome(true, 90.0, 16.1); 9];
        v.push(outcome(false, 0.0, 0.0));
        let r = aggregate("Qwen", "S1", &v).unwrap();
        assert_eq!(r.sr, 90.0);
        assert_eq!(format!("{:.3}", r.ess), "1.000");
    }

    #[test]
    fn empty_outcomes_rejected() {
        assert!(aggregate("x", "y", &[]).is_err());
    }

    #[test]
    fn latex_row_format() {
        let r = aggregate("A*", "S1", &vec![outcome(true, 80.0, 14.3); 10]).unwrap();
        let t = render_table(&[r], TableFormat::Latex);
        assert!(t.lines().nth(1).unwrap().ends_with("& 80s & 14.3 & 100% & 1.250 \\\\"));
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = render_table(&[], TableFormat::Markdown);
        assert_eq!(t.lines().count(), 2);
        assert_eq!(render_table(&[], TableFormat::Csv), "Model/Planner,ACT(s),PL(m),SR,ESS\n");
    }

    #[test]
    fn csv_quotes_commas() {
        let r = aggregate("RRT, seeded", "S1", &[outcome(true, 84.0, 15.0)]).unwrap();
        let t = render_table(&[r], TableFormat::Csv);
        assert_eq!(t.lines().nth(1).unwrap(), "\"RRT, seeded\",84,15.0,100,1.190");
    }
}
