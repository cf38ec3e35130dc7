//! Quick invariant suite behind `flyer-sdnn verify`.

use flyer_sdnn::flyer::{step, Action, FlyerParams, FlyerState};
use flyer_sdnn::math::{SeededRng, UnitQuat, Vec3};
use flyer_sdnn::mlp::{Activation, DenseNet};
use flyer_sdnn::ppo::{compute_gae, RolloutBatch};
use flyer_sdnn::sdnn::{convert, DeltaState, QuantConfig, SdnnMode, SigmaState, Thresholds};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64, unit: &str) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e}{unit} (limit {tol:.0e})"),
    }
}

fn random_relu_net(dims: &[usize], rng: &mut SeededRng) -> DenseNet<f64> {
    let mut net = DenseNet::orthogonal(dims, Activation::Relu, 2f64.sqrt(), 1.0, rng).expect("valid dims");
    for l in net.layers_mut() {
        for b in &mut l.bias {
            *b = rng.uniform(-0.2, 0.2);
        }
    }
    net
}

pub fn sdnn_exactness(seed: u64) -> CheckResult {
    let mut rng = SeededRng::derive(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let actor = random_relu_net(&[12, 64, 64, 6], &mut rng);
        let stream: Vec<Vec<f64>> = (0..200).map(|_| (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
        let mut net = convert(&actor, Thresholds::uniform(0.0), QuantConfig::default(), &stream)
            .expect("relu actor converts")
            .with_mode(SdnnMode::Float);
        for x in &stream {
            let y = net.step(x).expect("finite stream");
            let a = actor.predict(x).expect("dims match");
            worst = y.iter().zip(&a).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
        }
    }
    check("sigma-delta exactness", worst, 1e-5, "")
}

pub fn reconstruction_bound(seed: u64) -> CheckResult {
    let mut rng = SeededRng::derive(seed, 2);
    let mut worst_ratio = 0.0f64;
    for theta in [0.01, 0.1, 1.0] {
        let mut d = DeltaState::new(16, theta);
        let mut s = SigmaState::new(16);
        let mut x = vec![0.0; 16];
        for _ in 0..500 {
            for v in &mut x {
                *v += rng.normal::<f64>() * 0.3;
            }
            let rec = s.decode(&d.encode(&x)).expect("indices in range");
            for (r, v) in rec.iter().zip(&x) {
                worst_ratio = worst_ratio.max((r - v).abs() / theta);
            }
        }
    }
    CheckResult {
        name: "reconstruction bound",
        passed: worst_ratio < 1.0,
        detail: format!("max |x_rec - x| / threshold = {worst_ratio:.4} (must be < 1)"),
    }
}

pub fn gae_oracle(seed: u64) -> CheckResult {
    let mut rng = SeededRng::derive(seed, 3);
    let (gamma, lambda) = (0.99, 0.95);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = 1 + rng.below(16);
        let rewards: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let batch = RolloutBatch {
            n_envs: 1,
            n_steps: n,
            obs: vec![vec![]; n],
            actions: vec![vec![]; n],
            log_probs: vec![0.0; n],
            rewards: rewards.clone(),
            values: values.clone(),
            dones: (0..n).map(|t| t + 1 == n).collect(),
            bootstrap_values: vec![rng.uniform(-1.0, 1.0)],
        };
        let adv = compute_gae(&batch, gamma, lambda).expect("valid batch").advantages;
        let delta = |t: usize| rewards[t] + if t + 1 < n { gamma * values[t + 1] } else { 0.0 } - values[t];
        for (t, a) in adv.iter().enumerate() {
            let explicit: f64 = (0..n - t).map(|l| (gamma * lambda).powi(l as i32) * delta(t + l)).sum();
            worst = worst.max((a - explicit).abs());
        }
    }
    check("gae oracle", worst, 1e-12, "")
}

pub fn gradient_check(seed: u64) -> CheckResult {
    let mut rng = SeededRng::derive(seed, 4);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut net = random_relu_net(&[5, 8, 8, 3], &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let loss = |n: &DenseNet<f64>| n.predict(&x).expect("dims").iter().zip(&c).map(|(y, w)| y * w).sum::<f64>();
        let (_, cache) = net.forward(&x).expect("dims");
        let analytic = net.backward(&cache, &c).expect("cache").flat();
        let base = net.params_flat();
        let h = 1e-6;
        for (i, g) in analytic.iter().enumerate() {
            let mut p = base.clone();
            p[i] += h;
            net.set_params_flat(&p).expect("len");
            let up = loss(&net);
            p[i] -= 2.0 * h;
            net.set_params_flat(&p).expect("len");
            let down = loss(&net);
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((g - fd).abs() / 1e-6f64.max(1e-4 * g.abs()));
        }
        net.set_params_flat(&base).expect("len");
    }
    CheckResult {
        name: "backprop vs finite differences",
        passed: worst <= 1.0,
        detail: format!("worst error / tolerance = {worst:.3}"),
    }
}

pub fn conservation(seed: u64) -> CheckResult {
    let mut rng = SeededRng::derive(seed, 5);
    let params = FlyerParams::<f64>::default();
    let (mut worst_l, mut worst_p, mut worst_q) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let mut s = FlyerState {
            position: Vec3::zero(),
            orientation: UnitQuat::from_rotvec(Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))),
            lin_vel: Vec3::new(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)),
            ang_vel: Vec3::new(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)),
        };
        let (l0, p0) = (s.angular_momentum(&params), s.linear_momentum(&params));
        for _ in 0..200 {
            s = step(&s, &Action::zero(), &params).expect("finite");
            worst_l = worst_l.max((s.angular_momentum(&params) - l0).norm() / l0.norm());
            worst_p = worst_p.max((s.linear_momentum(&params) - p0).norm());
            worst_q = worst_q.max((s.orientation.norm() - 1.0).abs());
        }
    }
    CheckResult {
        name: "momentum conservation",
        passed: worst_l <= 1e-6 && worst_p == 0.0 && worst_q <= 1e-9,
        detail: format!("angular {worst_l:.2e} rel, linear {worst_p:.2e}, |q|-1 {worst_q:.2e}"),
    }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        sdnn_exactness(seed),
        reconstruction_bound(seed),
        gae_oracle(seed),
        gradient_check(seed),
        conservation(seed),
    ]
}
