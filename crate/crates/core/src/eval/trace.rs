use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{Controller, StepCost};
use crate::flyer::{observe, reset, step, Action, FlyerParams, Task, ACT_DIM};
use crate::math::{quat_error_rotvec, SeededRng};
use crate::mlp::PolicyNet;
use crate::{Error, Result};

pub const EPISODE_STEPS: usize = 200;

/// State after one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub position_error: f64,
    pub orientation_error_deg: f64,
    /// Goal minus position, world frame.
    pub position_error_axes: [f64; 3],
    /// Rotation vector of the attitude error, degrees.
    pub orientation_error_axes_deg: [f64; 3],
    /// Applied action divided by the actuator limits.
    pub action: [f64; ACT_DIM],
    pub cost: StepCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub controller: String,
    pub task: Task,
    pub seed: u64,
    pub pipeline_latency: usize,
    pub steps: Vec<TraceStep>,
}

fn rms(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x * x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

impl EpisodeTrace {
    pub fn file_name(&self) -> String {
        trace_file_name(&self.controller, self.task, self.seed)
    }

    pub fn rmse_position(&self) -> f64 {
        rms(self.steps.iter().map(|s| s.position_error))
    }

    pub fn rmse_orientation_deg(&self) -> f64 {
        rms(self.steps.iter().map(|s| s.orientation_error_deg))
    }

    pub fn final_position(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.position_error)
    }

    pub fn final_orientation_deg(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.orientation_error_deg)
    }

    /// Per-axis RMSE averaged over x, y, z.
    pub fn rmse_position_axis_mean(&self) -> f64 {
        (0..3).map(|k| rms(self.steps.iter().map(|s| s.position_error_axes[k]))).sum::<f64>() / 3.0
    }

    pub fn rmse_orientation_axis_mean_deg(&self) -> f64 {
        (0..3).map(|k| rms(self.steps.iter().map(|s| s.orientation_error_axes_deg[k]))).sum::<f64>() / 3.0
    }

    /// Final per-axis absolute error averaged over x, y, z.
    pub fn final_position_axis_mean(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.position_error_axes.iter().map(|v| v.abs()).sum::<f64>() / 3.0)
    }

    pub fn final_orientation_axis_mean_deg(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.orientation_error_axes_deg.iter().map(|v| v.abs()).sum::<f64>() / 3.0)
    }

    pub fn total_cost(&self) -> StepCost {
        self.steps.iter().fold(StepCost::default(), |a, s| StepCost {
            spikes: a.spikes + s.cost.spikes,
            synops: a.synops + s.cost.synops,
            dense_macs: a.dense_macs + s.cost.dense_macs,
            message_slots: a.message_slots + s.cost.message_slots,
            overflows: a.overflows + s.cost.overflows,
        })
    }
}

pub fn trace_file_name(controller: &str, task: Task, seed: u64) -> String {
    format!("{controller}_{task}_{seed}.csv")
}

/// Goal for `(task, seed)`; undock goals do not depend on the seed.
pub fn episode_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

/// Closed loop for `steps` control ticks. The controller is reset first.
pub fn run_episode_steps(
    controller: &mut Controller,
    label: &str,
    task: Task,
    seed: u64,
    params: &FlyerParams<f64>,
    steps: usize,
) -> Result<EpisodeTrace> {
    controller.reset();
    let (mut state, goal) = reset::<f64>(&mut episode_rng(seed), task);
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let obs = observe(&state, &goal);
        let (raw, cost) = controller.act(&obs)?;
        let action = Action::from_network(&raw, params);
        state = step(&state, &action, params)
            .map_err(|e| Error::NonFinite(format!("{label} {task} seed {seed}: state diverged at step {t}: {e}")))?;
        let pos = goal.position - state.position;
        let rot = quat_error_rotvec(&state.orientation, &goal.orientation).to_array().map(f64::to_degrees);
        out.push(TraceStep {
            position_error: pos.norm(),
            orientation_error_deg: crate::math::quat_angle_deg(&state.orientation, &goal.orientation),
            position_error_axes: pos.to_array(),
            orientation_error_axes_deg: rot,
            action: action.clamped(params).normalized(params),
            cost,
        });
    }
    Ok(EpisodeTrace {
        controller: label.to_string(),
        task,
        seed,
        pipeline_latency: controller.pipeline_latency(),
        steps: out,
    })
}

pub fn run_episode(
    controller: &mut Controller,
    label: &str,
    task: Task,
    seed: u64,
    params: &FlyerParams<f64>,
) -> Result<EpisodeTrace> {
    run_episode_steps(controller, label, task, seed, params, params.episode_len)
}

/// Every `(controller, task, seed)` combination, run in parallel and returned
/// sorted by that key.
pub fn run_suite(
    controllers: &[(String, Controller)],
    tasks: &[Task],
    seeds: &[u64],
    params: &FlyerParams<f64>,
) -> Result<Vec<EpisodeTrace>> {
    if seeds.is_empty() || tasks.is_empty() || controllers.is_empty() {
        return Err(Error::Config("evaluation needs at least one controller, task and seed".into()));
    }
    let mut jobs = Vec::new();
    for (i, (label, _)) in controllers.iter().enumerate() {
        for &task in tasks {
            for &seed in seeds {
                jobs.push((label.clone(), task, seed, i));
            }
        }
    }
    jobs.sort();
    jobs.dedup();
    jobs.into_par_iter()
        .map(|(label, task, seed, i)| {
            let mut c = controllers[i].1.clone();
            run_episode(&mut c, &label, task, seed, params)
        })
        .collect()
}

/// Observations visited by the greedy actor, used to calibrate quantization.
pub fn collect_observations(
    policy: &PolicyNet<f64>,
    tasks: &[Task],
    seeds: &[u64],
    params: &FlyerParams<f64>,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for &task in tasks {
        for &seed in seeds {
            let (mut state, goal) = reset::<f64>(&mut episode_rng(seed), task);
            for _ in 0..params.episode_len {
                let obs = observe(&state, &goal);
                let raw = policy.mean(&obs)?;
                out.push(obs.to_vec());
                state = step(&state, &Action::from_network(&raw, params), params)?;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    controller: String,
    task: Task,
    seed: u64,
    step: usize,
    pos_err_m: f64,
    ang_err_deg: f64,
    pos_err_x_m: f64,
    pos_err_y_m: f64,
    pos_err_z_m: f64,
    rot_err_x_deg: f64,
    rot_err_y_deg: f64,
    rot_err_z_deg: f64,
    force_x: f64,
    force_y: f64,
    force_z: f64,
    torque_x: f64,
    torque_y: f64,
    torque_z: f64,
    spikes: u64,
    synops: u64,
    dense_macs: u64,
    message_slots: u64,
    overflows: u64,
    pipeline_latency: usize,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("trace csv: {e}"))
}

/// One row per step; floats use the shortest round-trip representation.
pub fn write_trace_csv<W: Write>(trace: &EpisodeTrace, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for (i, s) in trace.steps.iter().enumerate() {
        let [px, py, pz] = s.position_error_axes;
        let [rx, ry, rz] = s.orientation_error_axes_deg;
        let a = s.action;
        wr.serialize(TraceRow {
            controller: trace.controller.clone(),
            task: trace.task,
            seed: trace.seed,
            step: i + 1,
            pos_err_m: s.position_error,
            ang_err_deg: s.orientation_error_deg,
            pos_err_x_m: px,
            pos_err_y_m: py,
            pos_err_z_m: pz,
            rot_err_x_deg: rx,
            rot_err_y_deg: ry,
            rot_err_z_deg: rz,
            force_x: a[0],
            force_y: a[1],
            force_z: a[2],
            torque_x: a[3],
            torque_y: a[4],
            torque_z: a[5],
            spikes: s.cost.spikes,
            synops: s.cost.synops,
            dense_macs: s.cost.dense_macs,
            message_slots: s.cost.message_slots,
            overflows: s.cost.overflows,
            pipeline_latency: trace.pipeline_latency,
        })
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn trace_to_csv(trace: &EpisodeTrace) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    Ok(buf)
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<EpisodeTrace> {
    let mut rd = csv::Reader::from_reader(r);
    let mut trace: Option<EpisodeTrace> = None;
    for row in rd.deserialize::<TraceRow>() {
        let row = row.map_err(csv_err)?;
        let t = trace.get_or_insert_with(|| EpisodeTrace {
            controller: row.controller.clone(),
            task: row.task,
            seed: row.seed,
            pipeline_latency: row.pipeline_latency,
            steps: Vec::new(),
        });
        if row.controller != t.controller || row.task != t.task || row.seed != t.seed || row.step != t.steps.len() + 1 {
            return Err(Error::Config(format!("trace row {} is inconsistent with the episode", row.step)));
        }
        t.steps.push(TraceStep {
            position_error: row.pos_err_m,
            orientation_error_deg: row.ang_err_deg,
            position_error_axes: [row.pos_err_x_m, row.pos_err_y_m, row.pos_err_z_m],
            orientation_error_axes_deg: [row.rot_err_x_deg, row.rot_err_y_deg, row.rot_err_z_deg],
            action: [row.force_x, row.force_y, row.force_z, row.torque_x, row.torque_y, row.torque_z],
            cost: StepCost {
                spikes: row.spikes,
                synops: row.synops,
                dense_macs: row.dense_macs,
                message_slots: row.message_slots,
                overflows: row.overflows,
            },
        });
    }
    trace.ok_or_else(|| Error::Config("trace csv has no rows".into()))
}
