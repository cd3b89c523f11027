mod common;

use std::sync::Mutex;
use std::time::Duration;

use common::*;
use l0solve::bounding::{solve_lower_bound, solve_upper_bound};
use l0solve::oracle::{brute_force_solve, OracleOptions};
use l0solve::path::lambda_max;
use l0solve::{solve, solve_with, Exploration, Node, Problem, SolverOptions, Status};
use rand::Rng;

fn instance(loss: &str, pen: &str, rng: &mut TestRng) -> Problem {
    let (m, n) = random_dims(rng);
    let penalty = random_penalty(pen, rng);
    let data = random_data(loss, penalty, m, n, rng);
    let lmax = lambda_max(&data).unwrap();
    let lmbd = random_lambda(lmax, rng);
    Problem::from_data(data, lmbd).unwrap()
}

#[test]
fn bnb_matches_oracle_on_small_instances() {
    let mut rng = rng(11);
    let mut failures = Vec::new();
    for loss in LOSSES {
        for pen in PENALTIES {
            for t in 0..8 {
                let problem = instance(loss, pen, &mut rng);
                let got = solve(&problem, &SolverOptions::default()).unwrap();
                let want = brute_force_solve(&problem, &OracleOptions::default()).unwrap();
                assert_eq!(got.status, Status::Optimal);
                assert!(got.rel_gap <= 1e-8);
                let d = rel_diff(got.objective, want.objective);
                if d > 1e-6 {
                    failures.push(format!(
                        "{loss}/{pen} #{t}: bnb {} oracle {} rel {d:.2e}",
                        got.objective, want.objective
                    ));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn node_bounds_bracket_the_region_optimum() {
    let mut rng = rng(12);
    let opts = SolverOptions::default();
    for t in 0..150 {
        let loss = LOSSES[t % 5];
        let pen = PENALTIES[t % 11];
        let problem = instance(loss, pen, &mut rng);
        let n = problem.n();
        // random region: each coordinate zero, nonzero or free
        let mut nu0 = Vec::new();
        let mut nu1 = Vec::new();
        for i in 0..n {
            match rng.gen_range(0..4) {
                0 => nu0.push(i),
                1 => nu1.push(i),
                _ => {}
            }
        }
        let node = Node::from_sets(n, &nu0, &nu1).unwrap();
        // region optimum by enumeration of supports containing nu1 and avoiding nu0
        let free = node.free();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << free.len()) {
            let mut support = nu1.clone();
            support.extend(free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i));
            support.sort();
            let (_, v) = l0solve::oracle::restricted_solve(&problem, &support, 1e-11);
            best = best.min(v + problem.lmbd() * support.len() as f64);
        }
        let lb = solve_lower_bound(&problem, &node, &opts, f64::INFINITY);
        assert!(
            lb.lower_bound <= best + 1e-7 * best.abs().max(1.0),
            "{loss}/{pen}: lower {} > region optimum {best}",
            lb.lower_bound
        );
        let (_, ub) = solve_upper_bound(&problem, &node, &opts);
        let p_star = brute_force_solve(&problem, &OracleOptions::default()).unwrap().objective;
        assert!(ub >= p_star - 1e-7 * p_star.abs().max(1.0), "{loss}/{pen}: upper {ub} < {p_star}");
    }
}

#[test]
fn anytime_bounds_bracket_the_optimum() {
    let mut rng = rng(13);
    for t in 0..60 {
        let problem = instance(LOSSES[t % 5], PENALTIES[(t * 7) % 11], &mut rng);
        let p_star = brute_force_solve(&problem, &OracleOptions::default()).unwrap().objective;
        let seen = Mutex::new(Vec::new());
        let cb = |p: &l0solve::Progress| seen.lock().unwrap().push(*p);
        let res = solve_with(&problem, &SolverOptions::default(), None, Some(&cb)).unwrap();
        let tol = 1e-6 * p_star.abs().max(1.0);
        let seen = seen.into_inner().unwrap();
        let mut last_lower = f64::NEG_INFINITY;
        for p in &seen {
            assert!(p.global_lower <= p_star + tol, "lower {} above optimum {p_star}", p.global_lower);
            assert!(p.incumbent_value >= p_star - tol);
            assert!(p.global_lower >= last_lower - 1e-12 * last_lower.abs().max(1.0));
            last_lower = p.global_lower;
        }
        assert!(res.lower_bound <= res.objective);
    }
}

#[test]
fn exploration_strategies_and_flags_agree() {
    let mut rng = rng(14);
    for t in 0..40 {
        let problem = instance(LOSSES[t % 5], PENALTIES[t % 11], &mut rng);
        let base = solve(&problem, &SolverOptions::default()).unwrap();
        let variants = [
            SolverOptions { exploration: Exploration::DepthFirst, ..Default::default() },
            SolverOptions { exploration: Exploration::BreadthFirst, ..Default::default() },
            SolverOptions { enable_screening: false, ..Default::default() },
            SolverOptions { enable_simultaneous_pruning: false, ..Default::default() },
            SolverOptions { workers: 3, ..Default::default() },
        ];
        for opts in variants {
            let r = solve(&problem, &opts).unwrap();
            assert_eq!(r.status, Status::Optimal);
            assert!(
                rel_diff(r.objective, base.objective) <= 1e-8,
                "{opts:?}: {} vs {}",
                r.objective,
                base.objective
            );
        }
    }
}

#[test]
fn single_worker_runs_are_deterministic() {
    let mut rng = rng(15);
    let problem = instance("Logistic", "L2norm", &mut rng);
    let a = solve(&problem, &SolverOptions::default()).unwrap();
    let b = solve(&problem, &SolverOptions::default()).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.x_opt, b.x_opt);
    assert_eq!(a.node_count, b.node_count);
}

#[test]
fn limits_stop_the_search() {
    let mut rng = rng(16);
    let data = random_data("Leastsquares", random_penalty("L2norm", &mut rng), 40, 30, &mut rng);
    let lmax = lambda_max(&data).unwrap();
    let problem = Problem::from_data(data, 0.001 * lmax).unwrap();
    let opts = SolverOptions { node_limit: Some(3), ..Default::default() };
    let r = solve(&problem, &opts).unwrap();
    if r.status != Status::Optimal {
        assert_eq!(r.status, Status::NodeLimit);
        assert!(r.node_count <= 3);
    }
    assert!(r.lower_bound <= r.objective);
    let opts = SolverOptions { time_limit: Some(Duration::ZERO), ..Default::default() };
    let r = solve(&problem, &opts).unwrap();
    assert_eq!(r.status, Status::TimeLimit);
    assert_eq!(r.node_count, 0);
    assert_eq!(r.objective, problem.objective(&vec![0.0; problem.n()]));
    assert_eq!(r.x_opt.nnz(), 0);
}

#[test]
fn lambda_max_gives_zero_solution() {
    let mut rng = rng(17);
    for loss in LOSSES {
        for pen in PENALTIES {
            for _ in 0..3 {
                let (m, n) = random_dims(&mut rng);
                let data = random_data(loss, random_penalty(pen, &mut rng), m, n, &mut rng);
                let lmax = lambda_max(&data).unwrap();
                let problem = Problem::from_data(data, lmax).unwrap();
                let r = solve(&problem, &SolverOptions::default()).unwrap();
                let f0 = problem.objective(&vec![0.0; n]);
                assert_eq!(r.x_opt.nnz(), 0, "{loss}/{pen}");
                assert!((r.objective - f0).abs() <= 1e-9 * f0.abs().max(1.0));
            }
        }
    }
}

#[test]
fn one_dimensional_example() {
    use l0solve::{NativeLoss, NativePenalty};
    use std::sync::Arc;
    let p = Problem::new(
        ndarray::array![[1.0]],
        Arc::new(NativeLoss::least_squares(vec![1.0]).unwrap()),
        Arc::new(NativePenalty::L2norm { beta: 0.25 }),
        0.05,
    )
    .unwrap();
    let r = solve(&p, &SolverOptions::default()).unwrap();
    assert!((r.objective - (1.0 / 6.0 + 0.05)).abs() < 1e-9);
    assert_eq!(r.x_opt.indices, vec![0]);
    assert!((r.x_opt.values[0] - 2.0 / 3.0).abs() < 1e-6);
}
