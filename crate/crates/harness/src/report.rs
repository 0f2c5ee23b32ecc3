//! Post-processing of solver traces: accuracy crossings, decile summaries,
//! rate diagnostics and the plain-text writers.

use std::io::Write;

use afba::momentum::{check_momentum_condition, ConditionReport, MIN_HORIZON};
use afba::{MomentumSchedule, SolverTrace};

/// First `k` at which each threshold is met, given `(k, accuracy)` pairs in
/// increasing `k`.
pub fn first_crossings(accuracies: &[(u64, f64)], thresholds: &[f64]) -> Vec<Option<u64>> {
    thresholds
        .iter()
        .map(|&thr| accuracies.iter().find(|&&(_, acc)| acc >= thr).map(|&(k, _)| k))
        .collect()
}

/// First crossings over the test-accuracy column (train accuracy when the
/// trace has no test set).
pub fn iterations_to_accuracy(trace: &SolverTrace, thresholds: &[f64]) -> Vec<Option<u64>> {
    let accs: Vec<(u64, f64)> = trace.rows.iter().filter_map(|r| r.test_acc.or(r.train_acc).map(|a| (r.k, a))).collect();
    first_crossings(&accs, thresholds)
}

/// `"-"` marks a threshold never reached.
pub fn crossing_label(k: Option<u64>) -> String {
    k.map_or_else(|| "-".to_string(), |k| k.to_string())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Medians of the first and last tenth of `values` (at least one element
/// each).
pub fn decile_medians(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let width = (values.len() / 10).max(1);
    Some((median(&values[..width])?, median(&values[values.len() - width..])?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecileSummary {
    pub first: f64,
    pub last: f64,
}

impl DecileSummary {
    /// The finite-horizon decay proxy: last-decile median at most half the
    /// first.
    pub fn halves(&self) -> bool {
        self.last <= 0.5 * self.first
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub schedule_id: String,
    /// `None` for momentum-free runs, where the scaled columns carry no
    /// information.
    pub scaled_fv: Option<DecileSummary>,
    pub scaled_dci: Option<DecileSummary>,
    /// First `k > K_observed` at which `ε_k` rose by more than the tolerance,
    /// `Some(None)` when monotone, `None` when `ε` was not recorded.
    pub epsilon_violation: Option<Option<u64>>,
    /// Same convention for `η_k ≤ ε_K/(2βt²_{k−1}) + 10⁻⁹` with `K` the first
    /// recorded index past `K_observed`.
    pub bound_violation: Option<Option<u64>>,
    pub condition: ConditionReport,
}

/// Slack for `ε_{k+1} ≤ ε_k`, relative to `ε_1`.
pub const EPSILON_SLACK: f64 = 1e-9;
/// Absolute slack in the `η_k` bound.
pub const BOUND_SLACK: f64 = 1e-9;

pub fn rate_report(trace: &SolverTrace, schedule: &MomentumSchedule) -> RateReport {
    let horizon = trace.rows.last().map_or(MIN_HORIZON, |r| r.k).max(MIN_HORIZON);
    let condition = check_momentum_condition(schedule, horizon);
    let start = condition.k_observed.unwrap_or(1);

    let summarize = |col: Vec<f64>| decile_medians(&col).map(|(first, last)| DecileSummary { first, last });
    let (scaled_fv, scaled_dci) = if schedule.is_momentum_free() {
        (None, None)
    } else {
        (
            summarize(trace.rows.iter().filter_map(|r| r.scaled_fv).collect()),
            summarize(trace.rows.iter().filter_map(|r| r.scaled_dci).collect()),
        )
    };

    let eps: Vec<(u64, f64)> = trace.rows.iter().filter_map(|r| r.epsilon.map(|e| (r.k, e))).collect();
    let (epsilon_violation, bound_violation) = if eps.is_empty() {
        (None, None)
    } else {
        let slack = EPSILON_SLACK * (1.0 + eps[0].1);
        let rising = eps
            .windows(2)
            .find(|w| w[0].0 >= start && w[1].1 > w[0].1 + slack)
            .map(|w| w[1].0);
        let bound = eps.iter().find(|(k, _)| *k > start).and_then(|&(k_anchor, eps_anchor)| {
            trace
                .rows
                .iter()
                .filter(|r| r.k > k_anchor)
                .find(|r| {
                    let t = schedule.t_value(r.k - 1);
                    r.eta.is_some_and(|eta| eta > eps_anchor / (2.0 * trace.beta * t * t) + BOUND_SLACK)
                })
                .map(|r| r.k)
        });
        (Some(rising), Some(bound))
    };

    RateReport { schedule_id: trace.schedule_id.clone(), scaled_fv, scaled_dci, epsilon_violation, bound_violation, condition }
}

impl RateReport {
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out = vec![("schedule".to_string(), self.schedule_id.clone())];
        for (name, summary) in [("scaled_fv", &self.scaled_fv), ("scaled_dci", &self.scaled_dci)] {
            match summary {
                Some(s) => {
                    out.push((format!("{name}.first_decile_median"), s.first.to_string()));
                    out.push((format!("{name}.last_decile_median"), s.last.to_string()));
                    out.push((format!("{name}.halves"), s.halves().to_string()));
                }
                None => out.push((name.to_string(), "omitted".into())),
            }
        }
        let verdict = |v: &Option<Option<u64>>| match v {
            None => "not_recorded".to_string(),
            Some(None) => "pass".to_string(),
            Some(Some(k)) => format!("fail@{k}"),
        };
        out.push(("epsilon_monotone".into(), verdict(&self.epsilon_violation)));
        out.push(("eta_bound".into(), verdict(&self.bound_violation)));
        for (k, v) in self.condition.to_key_values() {
            out.push((format!("condition.{k}"), v));
        }
        out
    }
}

pub fn write_key_values<W: Write>(mut out: W, entries: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in entries {
        writeln!(out, "{k}={v}")?;
    }
    out.flush()
}

/// `k,scaled_fv,scaled_dci` for the rows that carry them.
pub fn write_scaled_csv<W: Write>(out: W, trace: &SolverTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "scaled_fv", "scaled_dci"])?;
    for r in &trace.rows {
        if let (Some(f), Some(d)) = (r.scaled_fv, r.scaled_dci) {
            w.write_record([r.k.to_string(), f.to_string(), d.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One summary line per schedule; the `k_at_*` columns follow `thresholds`.
pub fn write_summary_csv<W: Write>(out: W, traces: &[&SolverTrace], thresholds: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["schedule_id", "final_fv", "final_nofv", "final_dci", "iters_run"].iter().map(|s| s.to_string()).collect();
    header.extend(thresholds.iter().map(|t| format!("k_at_{t}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for trace in traces {
        let Some(last) = trace.last() else { continue };
        let mut rec = vec![trace.schedule_id.clone(), last.fv.to_string(), opt(last.nofv), last.dci.to_string(), last.k.to_string()];
        rec.extend(iterations_to_accuracy(trace, thresholds).into_iter().map(crossing_label));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `schedule_id,<threshold>...` with first crossings or `-`.
pub fn write_table_csv<W: Write>(out: W, traces: &[&SolverTrace], thresholds: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["schedule_id".to_string()];
    header.extend(thresholds.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for trace in traces {
        let mut rec = vec![trace.schedule_id.clone()];
        rec.extend(iterations_to_accuracy(trace, thresholds).into_iter().map(crossing_label));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// File-name-safe form of a schedule id, e.g. `gn(1,0.4,1)` → `gn_1_0.4_1`.
pub fn slug(id: &str) -> String {
    let mut s: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    while s.ends_with('_') {
        s.pop();
    }
    s
}
