//! CSV and JSON emission. Numbers use Rust's shortest round-trip formatting,
//! rows end in LF, and every CSV starts with a header row.

use std::fmt::Write as _;

use serde::Serialize;

use crate::integrator::Trajectory;
use crate::scenario::{published_row, ComparisonSummary};
use crate::sensitivity::{BandRow, HorizonRow};
use crate::sweep::{Heatmap, ThresholdCriterion, ThresholdQuery, ThresholdResult};

pub const TRAJECTORY_HEADER: &str = "t,P,U,O,K,MFP,price_level,income_pc,consumption_index";
pub const SUMMARY_HEADER: &str = "scenario,metric,mean_reduction,mean_pct,median_pct,lo95,hi95";
pub const BANDS_HEADER: &str = "t,metric,p2_5,p25,median,p75,p97_5";
pub const HEATMAP_HEADER: &str = "alpha,fold,pct_change_consumption";
pub const COMPARISON_HEADER: &str =
    "scenario,metric,baseline_value,scenario_value,abs_change,pct_change,published_mean_pct";
pub const ANCHORS_HEADER: &str = "scenario,metric,statistic,computed,published";

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for s in &traj.samples {
        let st = &s.state;
        let d = &s.derived;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            st.t,
            st.p,
            st.u,
            st.o,
            st.k,
            st.m_level,
            d.price_level,
            d.income_pc,
            d.consumption_index
        );
    }
    out
}

pub fn comparison_csv(rows: &[(String, ComparisonSummary)]) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for (id, c) in rows {
        let published = published_row(id, c.metric)
            .map(|p| p.mean_pct.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{},{published}",
            c.metric.as_str(),
            c.baseline_value,
            c.scenario_value,
            c.abs_change,
            c.pct_change
        );
    }
    out
}

pub fn summary_csv(rows: &[HorizonRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scenario_id,
            r.metric.as_str(),
            r.abs_change.mean,
            r.pct_change.mean,
            r.pct_change.median,
            r.pct_change.p2_5,
            r.pct_change.p97_5
        );
    }
    out
}

/// Computed horizon statistics next to the published values, where they exist.
pub fn anchors_csv(rows: &[HorizonRow]) -> String {
    let mut out = format!("{ANCHORS_HEADER}\n");
    for r in rows {
        let Some(p) = published_row(&r.scenario_id, r.metric) else {
            continue;
        };
        for (name, computed, published) in [
            ("mean_reduction", r.abs_change.mean, p.mean_reduction),
            ("mean_pct", r.pct_change.mean, p.mean_pct),
            ("median_pct", r.pct_change.median, p.median_pct),
            ("lo95", r.pct_change.p2_5, p.lo95),
            ("hi95", r.pct_change.p97_5, p.hi95),
        ] {
            let _ = writeln!(
                out,
                "{},{},{name},{computed},{published}",
                r.scenario_id,
                r.metric.as_str()
            );
        }
    }
    out
}

pub fn bands_csv(rows: &[BandRow]) -> String {
    let mut out = format!("{BANDS_HEADER}\n");
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            r.metric.as_str(),
            s.p2_5,
            s.p25,
            s.median,
            s.p75,
            s.p97_5
        );
    }
    out
}

/// Invalid cells are written with an empty value.
pub fn heatmap_csv(map: &Heatmap) -> String {
    let mut out = format!("{HEATMAP_HEADER}\n");
    for c in &map.cells {
        match &c.pct_change {
            Ok(v) => {
                let _ = writeln!(out, "{},{},{v}", c.alpha, c.fold);
            }
            Err(_) => {
                let _ = writeln!(out, "{},{},", c.alpha, c.fold);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub window: [f64; 2],
    pub fold: Option<f64>,
    pub found: bool,
    pub criterion: &'static str,
}

impl ThresholdReport {
    pub fn new(query: &ThresholdQuery, result: &ThresholdResult) -> Self {
        Self {
            alpha: query.alpha,
            window: [query.window.0, query.window.1],
            fold: result.fold,
            found: result.found(),
            criterion: ThresholdCriterion::as_str(query.criterion),
        }
    }
}

pub fn threshold_json(report: &ThresholdReport) -> String {
    let mut s = serde_json::to_string(report).expect("threshold report serialises");
    s.push('\n');
    s
}
