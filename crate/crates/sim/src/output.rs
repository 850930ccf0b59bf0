//! CSV writers for per-step rows and summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::Algorithm;
use crate::engine::StepRow;
use crate::error::SimError;
use crate::summary::{SummaryStats, METRIC_NAMES, QUANTILE_METHOD};

pub const STEP_HEADER: [&str; 11] = [
    "step",
    "algorithm",
    "L_avg",
    "mean_delay_s",
    "throughput_mbps",
    "connectivity_rate",
    "pair_count",
    "mode",
    "Q",
    "delta",
    "applied",
];

/// Decision columns stay empty for baselines.
pub fn step_fields(row: &StepRow) -> [String; 11] {
    let r = &row.record;
    let (mode, q, delta, applied) = match &row.decision {
        Some(d) => (d.mode.label().to_string(), d.q.to_string(), d.delta.to_string(), d.applied.to_string()),
        None => Default::default(),
    };
    [
        r.step.to_string(),
        row.algorithm.label().to_string(),
        r.l_avg.to_string(),
        r.mean_delay_s.to_string(),
        r.throughput_mbps.to_string(),
        r.connectivity_rate.to_string(),
        r.pair_count.to_string(),
        mode,
        q,
        delta,
        applied,
    ]
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> SimError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::io(path, io),
        other => SimError::Runtime(format!("{}: {other:?}", path.display())),
    }
}

/// Append-only step log, flushed after every row.
pub struct StepWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> StepWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        inner.write_record(STEP_HEADER)?;
        inner.flush()?;
        Ok(StepWriter { inner })
    }

    pub fn write(&mut self, row: &StepRow) -> csv::Result<()> {
        self.inner.write_record(step_fields(row))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn create_step_writer(path: &Path) -> Result<StepWriter<BufWriter<File>>, SimError> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    StepWriter::new(BufWriter::new(file)).map_err(csv_err(path))
}

pub fn step_write(writer: &mut StepWriter<BufWriter<File>>, row: &StepRow, path: &Path) -> Result<(), SimError> {
    writer.write(row).map_err(csv_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Distribution table, one row per algorithm and metric; absent statistics
/// are empty fields.
pub fn summary_csv(runs: &[(Algorithm, &SummaryStats)]) -> String {
    let mut out = format!("# quantiles: {QUANTILE_METHOD}\n");
    out.push_str("algorithm,metric,count,min,q1,median,q3,max,mean,stddev\n");
    for (alg, s) in runs {
        for name in METRIC_NAMES {
            let d = s.metric(name);
            let f = |g: fn(&crate::summary::Distribution) -> f64| opt(d.as_ref().map(g));
            out.push_str(&format!(
                "{alg},{name},{},{},{},{},{},{},{},{}\n",
                s.count,
                f(|d| d.min),
                f(|d| d.q1),
                f(|d| d.median),
                f(|d| d.q3),
                f(|d| d.max),
                f(|d| d.mean),
                f(|d| d.stddev),
            ));
        }
    }
    out
}

/// Path length against connectivity rate, and the delay trend over steps.
pub fn correlation_csv(runs: &[(Algorithm, &SummaryStats)]) -> String {
    let mut out =
        String::from("algorithm,pearson_r,slope,intercept,delay_slope_per_step,delay_slope_ci95_low,delay_slope_ci95_high\n");
    for (alg, s) in runs {
        let fit = s.path_vs_connectivity;
        let tr = s.delay_trend;
        out.push_str(&format!(
            "{alg},{},{},{},{},{},{}\n",
            opt(fit.map(|f| f.r)),
            opt(fit.map(|f| f.slope)),
            opt(fit.map(|f| f.intercept)),
            opt(tr.map(|t| t.slope)),
            opt(tr.map(|t| t.ci95_low)),
            opt(tr.map(|t| t.ci95_high)),
        ));
    }
    out
}

/// One row per algorithm: median path length, median delay, mean throughput.
pub fn comparison_csv(runs: &[(Algorithm, &SummaryStats)]) -> String {
    let mut out = String::from("algorithm,L_avg_median,mean_delay_s_median,throughput_mbps_mean\n");
    for (alg, s) in runs {
        out.push_str(&format!(
            "{alg},{},{},{}\n",
            opt(s.l_avg.map(|d| d.median)),
            opt(s.mean_delay_s.map(|d| d.median)),
            opt(s.throughput_mbps.map(|d| d.mean)),
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), SimError> {
    std::fs::write(path, text).map_err(|e| SimError::io(path, e))
}
