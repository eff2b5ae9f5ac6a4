//! Aggregate queries over stored reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use qoe_core::analytics::{
    box_whisker, mos_distribution, summarize, MosGroupDistribution, ALL_GROUP, BOX_MIN_SAMPLE,
};
use qoe_core::report_schema::technology_of;
use qoe_core::{BoxStats, SampleSummary, SessionReport, TechnologyGroup};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Initial buffering time, seconds.
    TInit,
    /// Rebuffering events per second.
    FRebuf,
    /// Mean rebuffering time, seconds.
    TRebuf,
    /// Estimated video quality carried in the report.
    Mos,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::TInit, Metric::FRebuf, Metric::TRebuf, Metric::Mos];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TInit => "t_init",
            Metric::FRebuf => "f_rebuf",
            Metric::TRebuf => "t_rebuf",
            Metric::Mos => "mos",
        }
    }

    pub fn value(self, r: &SessionReport) -> f64 {
        match self {
            Metric::TInit => r.initial_buffering_time_ms as f64 / 1000.0,
            Metric::FRebuf => r.rebuffering_frequency,
            Metric::TRebuf => r.mean_rebuffering_time_ms as f64 / 1000.0,
            Metric::Mos => r.estimated_video_quality,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| QueryError::UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("unknown metric `{0}` (expected t_init, f_rebuf, t_rebuf or mos)")]
    UnknownMetric(String),
    #[error("unknown grouping `{0}` (expected technology)")]
    UnknownGrouping(String),
    #[error("no reports to aggregate")]
    Empty,
    #[error(transparent)]
    Analytics(#[from] qoe_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub summary: SampleSummary,
    /// Present once the group has enough sessions for quartiles.
    pub box_stats: Option<BoxStats>,
    /// Reported (GeneralFeedback) score distribution; only for `mos`, and
    /// only over sessions that carry feedback.
    pub feedback: Option<MosGroupDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    pub metric: Metric,
    pub grouped_by_technology: bool,
    pub groups: Vec<GroupStats>,
}

fn group_stats(
    name: String,
    metric: Metric,
    reports: &[&SessionReport],
) -> Result<GroupStats, QueryError> {
    let values: Vec<f64> = reports.iter().map(|r| metric.value(r)).collect();
    let summary = summarize(&values)?;
    let box_stats = if values.len() >= BOX_MIN_SAMPLE {
        Some(box_whisker(&values)?)
    } else {
        None
    };
    let feedback = if metric == Metric::Mos {
        let rated: Vec<SessionReport> = reports
            .iter()
            .filter(|r| r.general_feedback.is_some())
            .map(|&r| r.clone())
            .collect();
        mos_distribution(&rated, false)?.groups.pop().map(|mut g| {
            g.group = name.clone();
            g
        })
    } else {
        None
    };
    Ok(GroupStats {
        group: name,
        summary,
        box_stats,
        feedback,
    })
}

pub fn query_stats(
    reports: &[SessionReport],
    metric: Metric,
    group_by_technology: bool,
) -> Result<StatsResult, QueryError> {
    if reports.is_empty() {
        return Err(QueryError::Empty);
    }
    let mut groups = Vec::new();
    if group_by_technology {
        let mut by: BTreeMap<TechnologyGroup, Vec<&SessionReport>> = BTreeMap::new();
        for r in reports {
            by.entry(technology_of(r)).or_default().push(r);
        }
        for (g, members) in by {
            groups.push(group_stats(g.to_string(), metric, &members)?);
        }
    } else {
        let all: Vec<&SessionReport> = reports.iter().collect();
        groups.push(group_stats(ALL_GROUP.to_owned(), metric, &all)?);
    }
    Ok(StatsResult {
        metric,
        grouped_by_technology: group_by_technology,
        groups,
    })
}

/// Parses the optional `group_by` value used by the CLI and HTTP API.
pub fn parse_grouping(value: Option<&str>) -> Result<bool, QueryError> {
    match value {
        None | Some("") | Some("none") => Ok(false),
        Some("technology") => Ok(true),
        Some(other) => Err(QueryError::UnknownGrouping(other.to_owned())),
    }
}

impl fmt::Display for StatsResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "metric {}", self.metric)?;
        for g in &self.groups {
            let s = &g.summary;
            write!(
                f,
                "{:<12} n={:<5} mean={:.4} median={:.4} std={:.4} min={:.4} max={:.4}",
                g.group, s.n, s.mean, s.median, s.std, s.min, s.max
            )?;
            if let Some(b) = &g.box_stats {
                write!(
                    f,
                    " q1={:.4} q3={:.4} outliers={}",
                    b.q1,
                    b.q3,
                    b.outliers.len()
                )?;
            }
            writeln!(f)?;
            if let Some(d) = &g.feedback {
                let p = d.percentages;
                writeln!(
                    f,
                    "{:<12} feedback n={} 1:{:.2}% 2:{:.2}% 3:{:.2}% 4:{:.2}% 5:{:.2}% avg={:.2} std={:.2}",
                    "", d.n, p[0], p[1], p[2], p[3], p[4], d.average, d.std
                )?;
            }
        }
        Ok(())
    }
}
