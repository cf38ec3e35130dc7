use super::*;
use crate::flyer::{FlyerParams, Task};
use crate::math::SeededRng;
use crate::mlp::{Activation, DenseNet, GaussianHead, PolicyNet};
use crate::sdnn::{convert, QuantConfig, SdnnMode, Thresholds};
use crate::Error;

const DIMS: [usize; 4] = [12, 64, 64, 6];

fn params() -> FlyerParams<f64> {
    FlyerParams::default()
}

fn policy(net: DenseNet<f64>) -> PolicyNet<f64> {
    PolicyNet::new(net, GaussianHead::constant(6, 0.0)).unwrap()
}

fn random_policy(seed: u64) -> PolicyNet<f64> {
    let mut rng = SeededRng::new(seed);
    let mut net = DenseNet::orthogonal(&DIMS, Activation::Relu, 2f64.sqrt(), 1.0, &mut rng).unwrap();
    for l in net.layers_mut() {
        for b in &mut l.bias {
            *b = rng.uniform(-0.1, 0.1);
        }
    }
    policy(net)
}

fn null_controller() -> Controller {
    Controller::Ann(policy(DenseNet::zeros(&DIMS, Activation::Relu).unwrap()))
}

fn synthetic(errors: &[f64]) -> EpisodeTrace {
    EpisodeTrace {
        controller: "x".into(),
        task: Task::Undock,
        seed: 0,
        pipeline_latency: 2,
        steps: errors
            .iter()
            .map(|&e| TraceStep {
                position_error: e,
                orientation_error_deg: 2.0 * e,
                position_error_axes: [e, 0.0, 0.0],
                orientation_error_axes_deg: [0.0, 2.0 * e, 0.0],
                action: [0.0; 6],
                cost: StepCost::default(),
            })
            .collect(),
    }
}

#[test]
fn null_controller_never_moves() {
    let t = run_episode(&mut null_controller(), "null", Task::Undock, 3, &params()).unwrap();
    assert_eq!(t.steps.len(), EPISODE_STEPS);
    assert_eq!(t.final_position(), 0.5);
    assert_eq!(t.rmse_position(), 0.5);
    assert_eq!(t.final_orientation_deg(), 0.0);
    assert_eq!(t.file_name(), "null_undock_3.csv");
}

#[test]
fn rmse_oracles() {
    assert!((synthetic(&[0.3; 200]).rmse_position() - 0.3).abs() < 1e-15);
    assert_eq!(synthetic(&[0.0; 200]).rmse_position(), 0.0);
    let decay: Vec<f64> = (0..200).map(|t| 0.5 * (200 - t) as f64 / 200.0).collect();
    let oracle = 0.5 * ((0..200).map(|t| ((200 - t) as f64 / 200.0).powi(2)).sum::<f64>() / 200.0).sqrt();
    let tr = synthetic(&decay);
    assert!((tr.rmse_position() - oracle).abs() < 1e-15);
    assert!((oracle - 0.289).abs() < 1e-3);
    assert!((tr.rmse_orientation_deg() - 2.0 * oracle).abs() < 1e-14);
    assert!((tr.rmse_position_axis_mean() - oracle / 3.0).abs() < 1e-15);
}

#[test]
fn episodes_are_deterministic() {
    let mut c = Controller::Ann(random_policy(1));
    let a = run_episode(&mut c, "ann", Task::Random, 7, &params()).unwrap();
    let b = run_episode(&mut c, "ann", Task::Random, 7, &params()).unwrap();
    assert_eq!(a, b);
    assert_eq!(trace_to_csv(&a).unwrap(), trace_to_csv(&b).unwrap());
}

#[test]
fn float_sdnn_closed_loop_matches_ann() {
    let p = random_policy(2);
    let calib = collect_observations(&p, &Task::ALL, &[0, 1], &params()).unwrap();
    let sd = convert(&p.net, Thresholds::uniform(0.0), QuantConfig::default(), &calib).unwrap().with_mode(SdnnMode::Float);
    let mut ann = Controller::Ann(p);
    let mut sdnn = Controller::Sdnn(sd);
    for task in Task::ALL {
        let a = run_episode(&mut ann, "ann", task, 5, &params()).unwrap();
        let b = run_episode(&mut sdnn, "sdnn", task, 5, &params()).unwrap();
        for (x, y) in a.steps.iter().zip(&b.steps) {
            let d: f64 = (0..3).map(|k| (x.position_error_axes[k] - y.position_error_axes[k]).powi(2)).sum::<f64>().sqrt();
            assert!(d < 1e-9);
        }
        assert!(b.total_cost().synops > 0);
        assert_eq!(b.total_cost().dense_macs, a.total_cost().dense_macs);
    }
}

#[test]
fn csv_round_trip_preserves_aggregates_bitwise() {
    let controllers = vec![("ann".to_string(), Controller::Ann(random_policy(3)))];
    let traces = run_suite(&controllers, &Task::ALL, &[0, 1, 2], &params()).unwrap();
    let back: Vec<EpisodeTrace> = traces.iter().map(|t| read_trace_csv(trace_to_csv(t).unwrap().as_slice()).unwrap()).collect();
    assert_eq!(back, traces);
    let live = EvalReport::from_traces(&traces).unwrap();
    let again = EvalReport::from_traces(&back).unwrap();
    assert_eq!(serde_json::to_string(&live).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn suite_is_sorted_and_validated() {
    let controllers = vec![("b".to_string(), null_controller()), ("a".to_string(), null_controller())];
    let traces = run_suite(&controllers, &[Task::Random, Task::Undock], &[2, 0], &params()).unwrap();
    let keys: Vec<_> = traces.iter().map(|t| (t.controller.clone(), t.task, t.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 8);
    assert!(matches!(run_suite(&controllers, &Task::ALL, &[], &params()), Err(Error::Config(_))));
}

#[test]
fn report_layout_and_stats() {
    let m = MeanSd::of(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m.mean, 2.5);
    assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(MeanSd::of(&[7.0]).sd, 0.0);
    let traces = run_suite(&[("null".to_string(), null_controller())], &[Task::Undock], &[0, 1], &params()).unwrap();
    let r = EvalReport::from_traces(&traces).unwrap();
    let row = r.row("null", Task::Undock).unwrap();
    assert_eq!(row.final_position_m, MeanSd { mean: 0.5, sd: 0.0 });
    assert_eq!(row.synops_per_inference, None);
    assert_eq!(row.dense_macs_per_inference, 5248.0);
    let table = r.to_table();
    assert!(table.contains("RMSE Position (m)") && table.contains("0.500 ± 0.000"));
    assert_eq!(r.to_csv().lines().count(), 2);
}

#[test]
fn compare_checks_compatibility() {
    let p = random_policy(4);
    let run = |label: &str, seeds: &[u64]| {
        let t = run_suite(&[(label.to_string(), Controller::Ann(p.clone()))], &Task::ALL, seeds, &params()).unwrap();
        EvalReport::from_traces(&t).unwrap()
    };
    let a = run("ann", &[0, 1]);
    let c = compare(&a, &a).unwrap();
    assert!(c.rows.iter().all(|r| r.deltas() == [0.0; 4]));
    assert!(c.rows.iter().all(|r| r.synop_reduction == Some(1.0)));
    assert!(c.to_csv().lines().count() == 3);
    assert!(matches!(compare(&a, &run("ann", &[0, 2])), Err(Error::Incompatible(_))));
    let mut two = a.clone();
    two.rows.extend(run("other", &[0, 1]).rows);
    assert!(matches!(compare(&a, &two), Err(Error::Incompatible(_))));
    let mut undock_only = a.clone();
    undock_only.rows.retain(|r| r.task == Task::Undock);
    assert!(matches!(compare(&a, &undock_only), Err(Error::Incompatible(_))));
    assert_eq!(scatter_csv(&[a]).lines().count(), 3);
}

#[test]
fn ci_band_matches_t_quantiles() {
    assert_eq!(mean_ci95(&[0.4; 10]), (0.4, 0.0));
    let xs = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let sd = (10.0f64 / 9.0).sqrt();
    let (m, hw) = mean_ci95(&xs);
    assert_eq!(m, 0.0);
    assert!((hw - 2.262_157_162_8 * sd / 10f64.sqrt()).abs() < 1e-8);
    let (_, hw2) = mean_ci95(&[1.0, -1.0]);
    assert!((hw2 - 12.706_204_736 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-6);
    let big: Vec<f64> = xs.iter().cycle().take(1000).copied().collect();
    let (_, hw3) = mean_ci95(&big);
    let sd3 = (1000.0f64 / 999.0).sqrt();
    assert!((hw3 / (sd3 / 1000f64.sqrt()) - 1.962_341).abs() < 1e-5);
}

#[test]
fn plot_bands_and_warnings() {
    let tr = |seed: u64, e: f64| EpisodeTrace { seed, ..synthetic(&[e; 20]) };
    let (svg, warn) = plot_timeseries(&[tr(0, 0.2), tr(1, 0.2)], Metric::Position);
    assert!(warn.is_empty());
    assert!(svg.starts_with("<svg") && svg.contains("<polygon") && svg.contains("position error (m)"));
    let s = series(&[tr(0, 0.2), tr(1, 0.2)], Metric::Position);
    assert!(s[0].half_width.iter().all(|&h| h == 0.0));
    let (svg1, warn1) = plot_timeseries(&[tr(0, 0.2)], Metric::Orientation);
    assert_eq!(warn1.len(), 1);
    assert!(!svg1.contains("<polygon") && svg1.contains("<polyline"));
}
