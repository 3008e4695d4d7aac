//! Per-class timing statistics: how long memes take to reach 5 and 10 posts,
//! and how long they live.

use std::io::Write;

use serde::Serialize;

use super::{label, time_to_n, LabelThresholds, MemeLabel, MemeTrajectory, FEATURE_SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub class: MemeLabel,
    /// `time_to_5`, `time_to_10` or `lifespan`.
    pub metric: String,
    pub n_memes: usize,
    /// Memes of the class that reached the milestone.
    pub n_reached: usize,
    pub mean_hours: Option<f64>,
    pub median_hours: Option<f64>,
}

fn mean_median(mut xs: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    xs.sort_by(f64::total_cmp);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mid = xs.len() / 2;
    let median = if xs.len().is_multiple_of(2) {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    };
    (Some(mean), Some(median))
}

type Metric = (&'static str, Box<dyn Fn(&MemeTrajectory) -> Option<f64>>);

/// Rows for the successful and unsuccessful classes; excluded memes are left out.
pub fn timing_table(corpus: &[MemeTrajectory], thresholds: &LabelThresholds) -> Vec<TimingRow> {
    let mut rows = Vec::new();
    for class in [MemeLabel::Successful, MemeLabel::Unsuccessful] {
        let members: Vec<&MemeTrajectory> = corpus.iter().filter(|t| label(t, thresholds) == class).collect();
        let metrics: [Metric; 3] = [
            ("time_to_5", Box::new(|t| time_to_n(t, 5))),
            ("time_to_10", Box::new(|t| time_to_n(t, 10))),
            ("lifespan", Box::new(|t| Some(t.lifespan()))),
        ];
        for (name, f) in metrics {
            let xs: Vec<f64> = members.iter().filter_map(|t| f(t)).collect();
            let n_reached = xs.len();
            let (mean_hours, median_hours) = mean_median(xs);
            rows.push(TimingRow {
                class,
                metric: name.to_owned(),
                n_memes: members.len(),
                n_reached,
                mean_hours,
                median_hours,
            });
        }
    }
    rows
}

pub fn write_timing_csv(rows: &[TimingRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "# memewatch timing schema_version={FEATURE_SCHEMA_VERSION}")
        .map_err(|e| Error::io("<output>", e))?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}
