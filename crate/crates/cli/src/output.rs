//! Result files. Every float is written with 17 significant digits so that
//! a result parses back to the exact bits that were computed; non-finite
//! values are written as the strings "inf", "-inf" and "nan".

use l0solve::path::{bic, PathResult};
use l0solve::{ProblemData, SolveResult, SolverOptions};
use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v.is_infinite() {
            s.serialize_str(if v > 0.0 { "inf" } else { "-inf" })
        } else {
            RawValue::from_string(format!("{v:.16e}"))
                .map_err(S::Error::custom)?
                .serialize(s)
        }
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

#[derive(Serialize)]
pub struct Solution {
    pub n: usize,
    pub indices: Vec<usize>,
    pub values: Vec<Num>,
}

#[derive(Serialize)]
pub struct OptionsEcho {
    pub rel_gap_tol: Num,
    pub inner_tol: Num,
    pub node_limit: Option<u64>,
    pub time_limit_seconds: Option<Num>,
    pub exploration: String,
    pub enable_screening: bool,
    pub enable_simultaneous_pruning: bool,
    pub workers: usize,
}

impl From<&SolverOptions> for OptionsEcho {
    fn from(o: &SolverOptions) -> Self {
        Self {
            rel_gap_tol: Num(o.rel_gap_tol),
            inner_tol: Num(o.inner_tol),
            node_limit: o.node_limit,
            time_limit_seconds: o.time_limit.map(|d| Num(d.as_secs_f64())),
            exploration: o.exploration.to_string(),
            enable_screening: o.enable_screening,
            enable_simultaneous_pruning: o.enable_simultaneous_pruning,
            workers: o.workers,
        }
    }
}

#[derive(Serialize)]
pub struct SolveRecord {
    pub lmbd: Num,
    pub status: String,
    pub objective: Num,
    pub lower_bound: Num,
    pub rel_gap: Num,
    pub node_count: u64,
    pub solve_time_seconds: Num,
    pub solution: Solution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bic: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsEcho>,
}

impl SolveRecord {
    pub fn new(lmbd: f64, r: &SolveResult) -> Self {
        Self {
            lmbd: Num(lmbd),
            status: r.status.to_string(),
            objective: Num(r.objective),
            lower_bound: Num(r.lower_bound),
            rel_gap: Num(r.rel_gap),
            node_count: r.node_count,
            solve_time_seconds: Num(r.solve_time.as_secs_f64()),
            solution: Solution {
                n: r.x_opt.n,
                indices: r.x_opt.indices.clone(),
                values: nums(&r.x_opt.values),
            },
            bic: None,
            options: None,
        }
    }
}

#[derive(Serialize)]
pub struct Selection {
    pub lmbd: Num,
    pub bic: Num,
    pub index: usize,
}

#[derive(Serialize)]
pub struct PathFile {
    pub status: String,
    pub lmbd_max: Num,
    pub lmbd_grid: Vec<Num>,
    pub results: Vec<SolveRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<Selection>,
    pub options: OptionsEcho,
}

impl PathFile {
    /// The overall status is "optimal" only when every point of the path is.
    pub fn new(path: &PathResult, data: &ProblemData, opts: &SolverOptions, select: bool) -> Self {
        let results: Vec<SolveRecord> = path
            .entries
            .iter()
            .map(|e| SolveRecord {
                bic: Some(Num(bic(data, &e.result.x_opt.to_dense()))),
                ..SolveRecord::new(e.lmbd, &e.result)
            })
            .collect();
        let status = path
            .entries
            .iter()
            .map(|e| e.result.status)
            .find(|s| *s != l0solve::Status::Optimal)
            .unwrap_or(l0solve::Status::Optimal)
            .to_string();
        let selected = if select {
            l0solve::path::select_by_bic(path, data).map(|(lmbd, _)| {
                let index = path.entries.iter().position(|e| e.lmbd == lmbd).unwrap_or(0);
                Selection {
                    lmbd: Num(lmbd),
                    bic: results[index].bic.unwrap_or(Num(f64::NAN)),
                    index,
                }
            })
        } else {
            None
        };
        Self {
            status,
            lmbd_max: Num(path.lmbd_max),
            lmbd_grid: path.entries.iter().map(|e| Num(e.lmbd)).collect(),
            results,
            selected,
            options: opts.into(),
        }
    }
}

/// `{:.16e}` for finite values, the same strings as the JSON output otherwise.
pub fn format_scalar(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 5e-324, 0.0, 123456789.123456789] {
            let text = serde_json::to_string(&Num(v)).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        let text = serde_json::to_string(&Num(0.5)).unwrap();
        assert_eq!(text, "5.0000000000000000e-1");
    }

    #[test]
    fn non_finite_values_are_strings() {
        assert_eq!(serde_json::to_string(&Num(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Num(f64::NEG_INFINITY)).unwrap(), "\"-inf\"");
        assert_eq!(serde_json::to_string(&Num(f64::NAN)).unwrap(), "\"nan\"");
    }
}
