use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trace::EpisodeTrace;
use crate::flyer::Task;
use crate::{Error, Result};

/// Sample mean and standard deviation (`n − 1` denominator; zero for one sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample SD computed about the first sample, so equal samples give
/// their exact value and a zero SD.
pub(crate) fn shifted_mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let x0 = xs[0];
    let shift = xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
    let mean = x0 + shift;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - x0 - shift) * (x - x0 - shift)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: 0.0, sd: 0.0 };
        }
        let (mean, sd) = shifted_mean_sd(xs);
        Self { mean, sd }
    }

    pub fn fmt_pm(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub controller: String,
    pub task: Task,
    pub seeds: Vec<u64>,
    pub rmse_position_m: MeanSd,
    pub final_position_m: MeanSd,
    pub rmse_orientation_deg: MeanSd,
    pub final_orientation_deg: MeanSd,
    pub rmse_position_axis_mean_m: MeanSd,
    pub final_position_axis_mean_m: MeanSd,
    pub rmse_orientation_axis_mean_deg: MeanSd,
    pub final_orientation_axis_mean_deg: MeanSd,
    /// Spike-driven MACs per inference; absent for the dense controller.
    pub synops_per_inference: Option<f64>,
    pub dense_macs_per_inference: f64,
    /// Emitted messages over dense transmission slots; absent for the dense controller.
    pub message_density: Option<f64>,
    pub overflows: u64,
    pub pipeline_latency: usize,
}

impl ReportRow {
    /// Synops for an event-driven controller, dense MACs otherwise.
    pub fn ops_per_inference(&self) -> f64 {
        self.synops_per_inference.unwrap_or(self.dense_macs_per_inference)
    }

    /// Dimensionless energy-delay stand-in: ops per inference × pipeline hops.
    pub fn edp_proxy(&self) -> f64 {
        self.ops_per_inference() * self.pipeline_latency as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl EvalReport {
    /// Aggregates per `(controller, task)`, seeds ascending.
    pub fn from_traces(traces: &[EpisodeTrace]) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::Config("no traces to aggregate".into()));
        }
        let mut groups: BTreeMap<(String, Task), Vec<&EpisodeTrace>> = BTreeMap::new();
        for t in traces {
            groups.entry((t.controller.clone(), t.task)).or_default().push(t);
        }
        let mut rows = Vec::new();
        for ((controller, task), mut ts) in groups {
            ts.sort_by_key(|t| t.seed);
            if ts.windows(2).any(|w| w[0].seed == w[1].seed) {
                return Err(Error::Config(format!("duplicate seed for {controller} {task}")));
            }
            let stat = |f: fn(&EpisodeTrace) -> f64| MeanSd::of(&ts.iter().map(|t| f(t)).collect::<Vec<_>>());
            let (mut spikes, mut synops, mut macs, mut slots, mut overflows, mut steps) = (0, 0, 0, 0, 0, 0u64);
            for t in &ts {
                let c = t.total_cost();
                spikes += c.spikes;
                synops += c.synops;
                macs += c.dense_macs;
                slots += c.message_slots;
                overflows += c.overflows;
                steps += t.steps.len() as u64;
            }
            let event_driven = slots > 0;
            rows.push(ReportRow {
                seeds: ts.iter().map(|t| t.seed).collect(),
                rmse_position_m: stat(EpisodeTrace::rmse_position),
                final_position_m: stat(EpisodeTrace::final_position),
                rmse_orientation_deg: stat(EpisodeTrace::rmse_orientation_deg),
                final_orientation_deg: stat(EpisodeTrace::final_orientation_deg),
                rmse_position_axis_mean_m: stat(EpisodeTrace::rmse_position_axis_mean),
                final_position_axis_mean_m: stat(EpisodeTrace::final_position_axis_mean),
                rmse_orientation_axis_mean_deg: stat(EpisodeTrace::rmse_orientation_axis_mean_deg),
                final_orientation_axis_mean_deg: stat(EpisodeTrace::final_orientation_axis_mean_deg),
                synops_per_inference: event_driven.then(|| ratio(synops, steps)),
                dense_macs_per_inference: ratio(macs, steps),
                message_density: event_driven.then(|| ratio(spikes, slots)),
                overflows,
                pipeline_latency: ts[0].pipeline_latency,
                controller,
                task,
            });
        }
        Ok(Self { rows })
    }

    pub fn row(&self, controller: &str, task: Task) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.controller == controller && r.task == task)
    }

    /// Accuracy columns as mean ± SD.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<16} {:<8} {:>20} {:>20} {:>24} {:>24}\n",
            "Controller", "Task", "RMSE Position (m)", "Final Position (m)", "RMSE Orientation (deg)", "Final Orientation (deg)"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:<8} {:>20} {:>20} {:>24} {:>24}",
                r.controller,
                r.task,
                r.rmse_position_m.fmt_pm(3),
                r.final_position_m.fmt_pm(3),
                r.rmse_orientation_deg.fmt_pm(3),
                r.final_orientation_deg.fmt_pm(3)
            );
        }
        s.push('\n');
        let _ = writeln!(
            s,
            "{:<16} {:<8} {:>14} {:>14} {:>10} {:>10} {:>12}",
            "Controller", "Task", "synops/inf", "dense MACs/inf", "density", "overflows", "EDP proxy"
        );
        for r in &self.rows {
            let opt = |v: Option<f64>, d: usize| v.map_or("-".to_string(), |x| format!("{x:.*}", d));
            let _ = writeln!(
                s,
                "{:<16} {:<8} {:>14} {:>14.0} {:>10} {:>10} {:>12.0}",
                r.controller,
                r.task,
                opt(r.synops_per_inference, 1),
                r.dense_macs_per_inference,
                opt(r.message_density, 4),
                r.overflows,
                r.edp_proxy()
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "controller,task,n_seeds,rmse_position_m_mean,rmse_position_m_sd,final_position_m_mean,final_position_m_sd,\
rmse_orientation_deg_mean,rmse_orientation_deg_sd,final_orientation_deg_mean,final_orientation_deg_sd,\
rmse_position_axis_mean_m_mean,rmse_position_axis_mean_m_sd,final_position_axis_mean_m_mean,final_position_axis_mean_m_sd,\
rmse_orientation_axis_mean_deg_mean,rmse_orientation_axis_mean_deg_sd,final_orientation_axis_mean_deg_mean,final_orientation_axis_mean_deg_sd,\
synops_per_inference,dense_macs_per_inference,message_density,overflows,pipeline_latency,edp_proxy\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.controller, r.task, r.seeds.len());
            for m in [
                r.rmse_position_m,
                r.final_position_m,
                r.rmse_orientation_deg,
                r.final_orientation_deg,
                r.rmse_position_axis_mean_m,
                r.final_position_axis_mean_m,
                r.rmse_orientation_axis_mean_deg,
                r.final_orientation_axis_mean_deg,
            ] {
                let _ = write!(s, ",{},{}", m.mean, m.sd);
            }
            let _ = writeln!(
                s,
                ",{},{},{},{},{},{}",
                opt(r.synops_per_inference),
                r.dense_macs_per_inference,
                opt(r.message_density),
                r.overflows,
                r.pipeline_latency,
                r.edp_proxy()
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub task: Task,
    pub controller_a: String,
    pub controller_b: String,
    /// `(a mean, b mean)` per accuracy metric, in table order.
    pub metrics: [(f64, f64); 4],
    pub ops_a: f64,
    pub ops_b: f64,
    /// `ops_a / ops_b`; absent when `b` performs no operations.
    pub synop_reduction: Option<f64>,
    pub density_a: Option<f64>,
    pub density_b: Option<f64>,
}

impl ComparisonRow {
    pub fn deltas(&self) -> [f64; 4] {
        self.metrics.map(|(a, b)| b - a)
    }
}

pub const METRIC_NAMES: [&str; 4] = ["rmse_position_m", "final_position_m", "rmse_orientation_deg", "final_orientation_deg"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

fn single_rows(r: &EvalReport, which: &str) -> Result<BTreeMap<Task, ReportRow>> {
    let mut m = BTreeMap::new();
    for row in &r.rows {
        if m.insert(row.task, row.clone()).is_some() {
            return Err(Error::Incompatible(format!(
                "report {which} holds several controllers for task {}",
                row.task
            )));
        }
    }
    Ok(m)
}

/// Side-by-side accuracy and cost of `b` against the baseline `a`. Both
/// reports must cover the same tasks with the same seeds.
pub fn compare(a: &EvalReport, b: &EvalReport) -> Result<Comparison> {
    let ra = single_rows(a, "a")?;
    let rb = single_rows(b, "b")?;
    if ra.keys().ne(rb.keys()) {
        return Err(Error::Incompatible("reports cover different tasks".into()));
    }
    let mut rows = Vec::new();
    for (task, x) in &ra {
        let y = &rb[task];
        if x.seeds != y.seeds {
            return Err(Error::Incompatible(format!("seed sets differ for task {task}")));
        }
        let m = |f: fn(&ReportRow) -> MeanSd| (f(x).mean, f(y).mean);
        rows.push(ComparisonRow {
            task: *task,
            controller_a: x.controller.clone(),
            controller_b: y.controller.clone(),
            metrics: [
                m(|r| r.rmse_position_m),
                m(|r| r.final_position_m),
                m(|r| r.rmse_orientation_deg),
                m(|r| r.final_orientation_deg),
            ],
            ops_a: x.ops_per_inference(),
            ops_b: y.ops_per_inference(),
            synop_reduction: (y.ops_per_inference() > 0.0).then(|| x.ops_per_inference() / y.ops_per_inference()),
            density_a: x.message_density,
            density_b: y.message_density,
        });
    }
    Ok(Comparison { rows })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("task,controller_a,controller_b");
        for n in METRIC_NAMES {
            let _ = write!(s, ",{n}_a,{n}_b,{n}_delta");
        }
        s.push_str(",ops_per_inference_a,ops_per_inference_b,synop_reduction_ratio,message_density_a,message_density_b\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.task, r.controller_a, r.controller_b);
            for ((a, b), d) in r.metrics.iter().zip(r.deltas()) {
                let _ = write!(s, ",{a},{b},{d}");
            }
            let _ = writeln!(
                s,
                ",{},{},{},{},{}",
                r.ops_a,
                r.ops_b,
                opt(r.synop_reduction),
                opt(r.density_a),
                opt(r.density_b)
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "task {}: {} (a) vs {} (b)", r.task, r.controller_a, r.controller_b);
            for ((name, (a, b)), d) in METRIC_NAMES.iter().zip(r.metrics).zip(r.deltas()) {
                let _ = writeln!(s, "  {name:<24} {a:>12.5} {b:>12.5} {d:>+12.5}");
            }
            let red = r.synop_reduction.map_or("-".into(), |x| format!("{x:.2}x"));
            let _ = writeln!(s, "  {:<24} {:>12.1} {:>12.1} {:>12}", "ops_per_inference", r.ops_a, r.ops_b, red);
        }
        s
    }
}

/// Fig. 3 style points: one per `(report, controller, task)`.
pub fn scatter_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("controller,task,ops_per_inference,pipeline_latency,edp_proxy,throughput_proxy\n");
    for r in reports.iter().flat_map(|r| &r.rows) {
        let ops = r.ops_per_inference();
        let thr = if ops > 0.0 { 1.0 / ops } else { 0.0 };
        let _ = writeln!(s, "{},{},{},{},{},{}", r.controller, r.task, ops, r.pipeline_latency, r.edp_proxy(), thr);
    }
    s
}
