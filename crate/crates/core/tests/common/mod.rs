#![allow(dead_code)]

use std::sync::Arc;

use l0solve::losses::NATIVE_LOSS_NAMES;
use l0solve::penalties::NATIVE_PENALTY_NAMES;
use l0solve::{NativeLoss, NativePenalty, PenaltyArgs, ProblemData};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub const LOSSES: [&str; 5] = NATIVE_LOSS_NAMES;
pub const PENALTIES: [&str; 11] = NATIVE_PENALTY_NAMES;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut TestRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_penalty(name: &str, rng: &mut TestRng) -> NativePenalty {
    let args = PenaltyArgs {
        m: Some(rng.gen_range(0.5..3.0)),
        alpha: Some(rng.gen_range(0.01..0.5)),
        beta: Some(rng.gen_range(0.01..1.0)),
        x_lb: Some(-rng.gen_range(0.5..3.0)),
        x_ub: Some(rng.gen_range(0.5..3.0)),
    };
    NativePenalty::from_name(name, &args).unwrap()
}

/// Random design and a target from a sparse planted vector, adapted to the loss.
pub fn random_data(
    loss: &str,
    penalty: NativePenalty,
    m: usize,
    n: usize,
    rng: &mut TestRng,
) -> Arc<ProblemData> {
    let positive_design = loss == "KullbackLeibler";
    let a = Array2::from_shape_fn((m, n), |_| {
        let v = normal(rng);
        if positive_design {
            v.abs()
        } else {
            v
        }
    });
    let k = rng.gen_range(1..=n.min(3));
    let mut x_true = vec![0.0; n];
    for _ in 0..k {
        let j = rng.gen_range(0..n);
        x_true[j] = if positive_design { rng.gen_range(0.2..1.5) } else { normal(rng) };
    }
    let ax: Vec<f64> = (0..m)
        .map(|r| (0..n).map(|c| a[[r, c]] * x_true[c]).sum())
        .collect();
    let y: Vec<f64> = match loss {
        "Leastsquares" | "Logcosh" => ax.iter().map(|v| v + 0.3 * normal(rng)).collect(),
        "Logistic" | "Squaredhinge" => ax
            .iter()
            .map(|v| if v + 0.3 * normal(rng) >= 0.0 { 1.0 } else { -1.0 })
            .collect(),
        "KullbackLeibler" => ax.iter().map(|v| v + rng.gen_range(0.05..0.5)).collect(),
        other => panic!("unknown loss {other}"),
    };
    let loss = NativeLoss::from_name(loss, y, Some(0.1)).unwrap();
    Arc::new(ProblemData::new(a, Arc::new(loss), Arc::new(penalty)).unwrap())
}

pub fn random_dims(rng: &mut TestRng) -> (usize, usize) {
    (rng.gen_range(5..=20), rng.gen_range(3..=10))
}

/// Log-uniform lambda in `[0.01 lmax, lmax]`.
pub fn random_lambda(lmax: f64, rng: &mut TestRng) -> f64 {
    lmax * 10f64.powf(-2.0 * rng.gen::<f64>())
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Domain `[lo, hi]` of a native penalty, read from its parameters.
pub fn penalty_domain(pen: &NativePenalty) -> (f64, f64) {
    let args = pen.args();
    let positive = format!("{pen:?}").contains("Positive");
    let (lo, hi) = match (args.m, args.x_lb, args.x_ub) {
        (Some(m), _, _) => (-m, m),
        (None, Some(lb), Some(ub)) => (lb, ub),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    if positive {
        (0.0, hi)
    } else {
        (lo, hi)
    }
}

/// Maximum of a concave function on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut best = f(a).max(f(b));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
        if b - a <= 1e-15 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
    }
    best
}
