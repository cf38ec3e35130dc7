//! Train → convert → save → reload → evaluate through the public API.

use flyer_sdnn::eval::{run_suite, Controller, EvalReport};
use flyer_sdnn::flyer::Task;
use flyer_sdnn::io::{load_ann, load_sdnn, save_ann, save_sdnn, AnnWeights, RunConfig, SdnnWeights};
use flyer_sdnn::pipeline::{calibration_set, convert_actor, train_actor, zero_threshold_deviation};
use flyer_sdnn::sdnn::{SdnnMode, Thresholds};

#[test]
fn smoke_pipeline_round_trips_through_files() {
    let cfg = RunConfig::smoke();
    let out = train_actor(&cfg, |_| {}).unwrap();
    let net = convert_actor(&out.policy, &cfg, Thresholds::uniform(0.1)).unwrap();

    let calib = calibration_set(&out.policy, &cfg).unwrap();
    assert!(zero_threshold_deviation(&out.policy, &net, &calib).unwrap() <= 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let (ann_path, sdnn_path) = (dir.path().join("actor.json"), dir.path().join("sdnn.json"));
    save_ann(&ann_path, &AnnWeights::new(&out.policy, Some(&out.critic))).unwrap();
    save_sdnn(&sdnn_path, &SdnnWeights::new(&net)).unwrap();
    let policy = load_ann(&ann_path).unwrap().policy().unwrap();
    let reloaded = load_sdnn(&sdnn_path).unwrap().net(SdnnMode::Quantized).unwrap();
    assert_eq!(policy.params_flat(), out.policy.params_flat());

    let seeds = [0, 1, 2];
    let run = |c: Vec<(String, Controller)>| run_suite(&c, &Task::ALL, &seeds, &cfg.flyer).unwrap();
    let before = run(vec![("sdnn".into(), Controller::Sdnn(net))]);
    let after = run(vec![("sdnn".into(), Controller::Sdnn(reloaded))]);
    assert_eq!(before, after);

    let report = EvalReport::from_traces(&after).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.seeds == seeds && r.synops_per_inference.is_some()));
}

#[test]
fn ann_report_has_no_sparsity_fields() {
    let cfg = RunConfig::smoke();
    let out = train_actor(&cfg, |_| {}).unwrap();
    let traces = run_suite(&[("ann".into(), Controller::Ann(out.policy))], &[Task::Undock], &[0, 1], &cfg.flyer).unwrap();
    let r = EvalReport::from_traces(&traces).unwrap();
    assert_eq!(r.rows[0].dense_macs_per_inference, 12.0 * 64.0 + 64.0 * 64.0 + 64.0 * 6.0);
    assert!(r.rows[0].synops_per_inference.is_none() && r.rows[0].message_density.is_none());
    assert_eq!(r.rows[0].rmse_position_m.sd, 0.0);
}
