//! Report types shared by the harnesses.
//!
//! Convergence-style results all funnel into [`ConvergenceReport`]: an index
//! list, one or two deviation columns, a fitted limit, and a verdict against
//! a stated tolerance. Reports serialize to JSON (via serde) and to a small
//! fixed-column CSV.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// No analytic target was supplied; the report is informational.
    Na,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Na)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub index: usize,
    pub deviation_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation_b: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// What the deviations measure, e.g. "sup-deviation from siegel".
    pub quantity: String,
    pub rows: Vec<ConvergenceRow>,
    /// Extrapolated or final-window value of the tracked quantity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    /// Builds the report and decides the verdict: when a target is given, the
    /// final deviation (or fitted limit when present) must sit within
    /// `tolerance` of it; otherwise the verdict is `Na`.
    pub fn new(
        quantity: impl Into<String>,
        rows: Vec<ConvergenceRow>,
        fitted_limit: Option<f64>,
        target: Option<f64>,
        tolerance: f64,
    ) -> Self {
        let verdict = match target {
            None => Verdict::Na,
            Some(t) => {
                let probe = fitted_limit.or_else(|| rows.last().map(|r| r.deviation_a));
                match probe {
                    Some(v) if (v - t).abs() <= tolerance => Verdict::Pass,
                    Some(_) => Verdict::Fail,
                    None => Verdict::Fail,
                }
            }
        };
        ConvergenceReport {
            quantity: quantity.into(),
            rows,
            fitted_limit,
            target,
            tolerance,
            verdict,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn last_deviation(&self) -> Option<f64> {
        self.rows.last().map(|r| r.deviation_a)
    }

    /// CSV with fixed columns `index,deviation_a,deviation_b,fitted_limit`.
    /// The fitted limit repeats on every row so the file stands alone.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,deviation_a,deviation_b,fitted_limit\n");
        for row in &self.rows {
            let b = row
                .deviation_b
                .map(|v| format!("{v:.17e}"))
                .unwrap_or_default();
            let fit = self
                .fitted_limit
                .map(|v| format!("{v:.17e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{:.17e},{},{}\n",
                row.index, row.deviation_a, b, fit
            ));
        }
        out
    }
}

/// Limit estimate for a table sampled at parameters `ts`: Richardson
/// extrapolation of order 2 when the grid is geometric, otherwise the last
/// value. Returns the estimate and a note describing which rule fired.
pub fn fit_limit(ts: &[f64], values: &[f64]) -> (Option<f64>, String) {
    if ts.len() >= 3 {
        let r = ts[1] / ts[0];
        let geometric =
            r > 0.0 && r < 1.0 && ts.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9);
        if geometric {
            return (
                richardson(values, r, 2),
                format!("richardson order 2 on the geometric grid, ratio {r:.6}"),
            );
        }
    }
    (
        values.last().copied(),
        "grid not geometric; last row taken as the limit".to_string(),
    )
}

/// Richardson extrapolation on a geometrically refined parameter grid.
///
/// `values[k]` is f(t0 * r^k) with ratio `r` in (0,1); assumes an expansion
/// f(t) = L + c1 t + c2 t^2 + ... and eliminates the first `order` powers.
/// Returns the best available estimate of L.
pub fn richardson(values: &[f64], r: f64, order: usize) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut col: Vec<f64> = values.to_vec();
    for level in 1..=order {
        if col.len() < 2 {
            break;
        }
        let w = r.powi(level as i32);
        // f_{k+1} - w^... eliminate t^level: L = (f(rt) - w f(t)) / (1 - w)
        col = col
            .windows(2)
            .map(|pair| (pair[1] - w * pair[0]) / (1.0 - w))
            .collect();
    }
    col.last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_kills_linear_and_quadratic_terms() {
        // f(t) = 3 + 2t + 5t^2 + t^3 on t = 0.4 * 2^-k
        let f = |t: f64| 3.0 + 2.0 * t + 5.0 * t * t + t * t * t;
        let ts: Vec<f64> = (0..6).map(|k| 0.4 * 0.5f64.powi(k)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        let fit = richardson(&vals, 0.5, 2).unwrap();
        assert!((fit - 3.0).abs() < 1e-4, "fit = {fit}");
        // raw last value is much worse
        assert!((vals[5] - 3.0).abs() > 1e-2);
    }

    #[test]
    fn verdict_uses_fitted_limit_when_present() {
        let rows = vec![
            ConvergenceRow { index: 0, deviation_a: 0.9, deviation_b: None },
            ConvergenceRow { index: 1, deviation_a: 0.6, deviation_b: None },
        ];
        let rep = ConvergenceReport::new("q", rows.clone(), Some(0.5), Some(0.5), 1e-6);
        assert_eq!(rep.verdict, Verdict::Pass);
        let rep2 = ConvergenceReport::new("q", rows, None, Some(0.5), 1e-6);
        assert_eq!(rep2.verdict, Verdict::Fail);
    }

    #[test]
    fn csv_has_fixed_header() {
        let rows = vec![ConvergenceRow { index: 3, deviation_a: 0.25, deviation_b: Some(0.5) }];
        let rep = ConvergenceReport::new("q", rows, None, None, 0.0);
        let csv = rep.to_csv();
        assert!(csv.starts_with("index,deviation_a,deviation_b,fitted_limit\n"));
        assert!(csv.contains("3,2.5"));
    }
}
