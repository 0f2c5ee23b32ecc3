//! Momentum-parameter schedules and an empirical checker for the sufficient
//! conditions on `{t_k}` that drive the accelerated rates.
//!
//! Every momentum variant is expressed through a sequence `t_k` with
//! `θ_k = (t_{k-1} - 1) / t_k`:
//!
//! * classic Nesterov (FISTA): `t_0 = 1`, `t_k = (1 + sqrt(1 + 4 t_{k-1}²)) / 2`;
//! * generalized Nesterov: `t_k = a·k^ω + b`;
//! * Chambolle–Dossal with parameter `α`: the generalized form with `ω = 1`,
//!   `a = 1/(α - 1)`, `b = 1`, which gives `θ_k = (k - 1)/(k + α - 1)`;
//! * no momentum: `t_k ≡ 1`, so `θ_k ≡ 0` and the iteration is plain FBA.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("generalized Nesterov needs omega in (0, 1], got {0}")]
    InvalidOmega(f64),
    #[error("generalized Nesterov needs a > 0, got {0}")]
    InvalidA(f64),
    #[error("parameter b must be finite, got {0}")]
    InvalidB(f64),
    #[error("Chambolle-Dossal needs alpha > 3, got {0}")]
    InvalidAlpha(f64),
    #[error("t_{k} = 0 for b = {b}; b must avoid -a*k^omega")]
    ZeroT { k: u64, b: f64 },
    #[error("momentum index must be at least 1")]
    ZeroIndex,
    #[error("super-linear divergence needs omega > 1 and a != 0 (got omega = {omega}, a = {a})")]
    NotSuperLinear { omega: f64, a: f64 },
    #[error("cannot parse schedule `{0}`; expected fba, fista, cd:ALPHA or gn:OMEGA,A,B")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    NoMomentum,
    ClassicNesterov,
    ChambolleDossal { alpha: f64 },
    GeneralizedNesterov { omega: f64, a: f64, b: f64 },
}

/// Growable table of the Nesterov recursion, shared between clones.
#[derive(Debug, Default)]
struct NesterovTable {
    values: RwLock<Vec<f64>>,
}

impl NesterovTable {
    fn get(&self, k: usize) -> f64 {
        {
            let values = self.values.read().unwrap_or_else(|e| e.into_inner());
            if let Some(&t) = values.get(k) {
                return t;
            }
        }
        let mut values = self.values.write().unwrap_or_else(|e| e.into_inner());
        if values.is_empty() {
            values.push(1.0);
        }
        let missing = (k + 1).saturating_sub(values.len());
        values.reserve(missing);
        while values.len() <= k {
            let prev = *values.last().unwrap();
            values.push(0.5 * (1.0 + (1.0 + 4.0 * prev * prev).sqrt()));
        }
        values[k]
    }
}

/// An immutable momentum schedule. Clones share the Nesterov memo table.
#[derive(Debug, Clone)]
pub struct MomentumSchedule {
    kind: ScheduleKind,
    /// `(omega, a, b)` for the closed-form variants.
    power_form: Option<(f64, f64, f64)>,
    table: Option<Arc<NesterovTable>>,
}

impl PartialEq for MomentumSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl MomentumSchedule {
    pub fn no_momentum() -> Self {
        Self { kind: ScheduleKind::NoMomentum, power_form: None, table: None }
    }

    pub fn classic_nesterov() -> Self {
        Self {
            kind: ScheduleKind::ClassicNesterov,
            power_form: None,
            table: Some(Arc::new(NesterovTable::default())),
        }
    }

    pub fn chambolle_dossal(alpha: f64) -> Result<Self, ScheduleError> {
        if !(alpha > 3.0 && alpha.is_finite()) {
            return Err(ScheduleError::InvalidAlpha(alpha));
        }
        Ok(Self {
            kind: ScheduleKind::ChambolleDossal { alpha },
            power_form: Some((1.0, 1.0 / (alpha - 1.0), 1.0)),
            table: None,
        })
    }

    /// `t_k = a·k^ω + b`. Rejects parameters for which some `t_k`, `k ≥ 1`,
    /// vanishes. `ω = 1` with `a ≥ ½` is accepted (it is a valid iteration)
    /// even though the rate theory does not cover it; see
    /// [`MomentumSchedule::rate_theory_applies`].
    pub fn generalized_nesterov(omega: f64, a: f64, b: f64) -> Result<Self, ScheduleError> {
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(ScheduleError::InvalidOmega(omega));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(ScheduleError::InvalidA(a));
        }
        if !b.is_finite() {
            return Err(ScheduleError::InvalidB(b));
        }
        if let Some(k) = vanishing_index(omega, a, b) {
            return Err(ScheduleError::ZeroT { k, b });
        }
        Ok(Self {
            kind: ScheduleKind::GeneralizedNesterov { omega, a, b },
            power_form: Some((omega, a, b)),
            table: None,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn is_momentum_free(&self) -> bool {
        self.kind == ScheduleKind::NoMomentum
    }

    /// Whether the o(1/t²) / o(1/t) rate theorem covers these parameters:
    /// `ω ∈ (0,1)` with `a > 0`, or `ω = 1` with `a ∈ (0, ½)`.
    pub fn rate_theory_applies(&self) -> bool {
        match self.power_form {
            Some((omega, a, _)) => omega < 1.0 || a < 0.5,
            None => false,
        }
    }

    /// `t_k`.
    pub fn t_value(&self, k: u64) -> f64 {
        match self.kind {
            ScheduleKind::NoMomentum => 1.0,
            ScheduleKind::ClassicNesterov => self
                .table
                .as_ref()
                .expect("nesterov schedules own a table")
                .get(k as usize),
            ScheduleKind::ChambolleDossal { .. } | ScheduleKind::GeneralizedNesterov { .. } => {
                let (omega, a, b) = self.power_form.expect("closed-form schedule");
                power_t(omega, a, b, k)
            }
        }
    }

    /// `θ_k = (t_{k-1} - 1) / t_k` for `k ≥ 1`; zero for plain FBA.
    pub fn theta(&self, k: u64) -> Result<f64, ScheduleError> {
        if k == 0 {
            return Err(ScheduleError::ZeroIndex);
        }
        if self.is_momentum_free() {
            return Ok(0.0);
        }
        let t_k = self.t_value(k);
        if t_k == 0.0 {
            let b = self.power_form.map_or(0.0, |p| p.2);
            return Err(ScheduleError::ZeroT { k, b });
        }
        Ok((self.t_value(k - 1) - 1.0) / t_k)
    }

    /// Fills the memo table up to `k` so later lookups never take the lock
    /// for writing.
    pub fn prefill(&self, k: u64) {
        if let Some(table) = &self.table {
            table.get(k as usize);
        }
    }

    /// Short stable identifier, e.g. `gn(1,0.4,1)`.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MomentumSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::NoMomentum => write!(f, "fba"),
            ScheduleKind::ClassicNesterov => write!(f, "fista"),
            ScheduleKind::ChambolleDossal { alpha } => write!(f, "cd({alpha})"),
            ScheduleKind::GeneralizedNesterov { omega, a, b } => write!(f, "gn({omega},{a},{b})"),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let (num, den) = (num.trim().parse::<f64>().ok()?, den.trim().parse::<f64>().ok()?);
            (den != 0.0).then(|| num / den)
        }
        None => s.parse().ok(),
    }
}

impl FromStr for MomentumSchedule {
    type Err = ScheduleError;

    /// Accepts `fba`/`none`, `fista`/`nesterov`, `cd:ALPHA` and
    /// `gn:OMEGA,A,B`; numbers may be written as fractions such as `1/2.01`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScheduleError::Parse(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, args) = match lower.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (lower.as_str(), None),
        };
        let args: Vec<f64> = match args {
            Some(a) => a.split(',').map(parse_number).collect::<Option<_>>().ok_or_else(err)?,
            None => Vec::new(),
        };
        match (name, args.as_slice()) {
            ("fba" | "none", []) => Ok(Self::no_momentum()),
            ("fista" | "nesterov", []) => Ok(Self::classic_nesterov()),
            ("cd", [alpha]) => Self::chambolle_dossal(*alpha),
            ("gn", [omega, a, b]) => Self::generalized_nesterov(*omega, *a, *b),
            _ => Err(err()),
        }
    }
}

#[inline]
fn power_t(omega: f64, a: f64, b: f64, k: u64) -> f64 {
    let kf = k as f64;
    let pow = if omega == 1.0 { kf } else { kf.powf(omega) };
    a * pow + b
}

/// The only `k ≥ 1` at which `a·k^ω + b` can vanish (it is strictly
/// increasing for `a > 0`), if it does so exactly in floating point.
fn vanishing_index(omega: f64, a: f64, b: f64) -> Option<u64> {
    if b >= 0.0 {
        return None;
    }
    let root = (-b / a).powf(1.0 / omega);
    if !root.is_finite() {
        return None;
    }
    let centre = root.round().max(1.0) as u64;
    (centre.saturating_sub(1).max(1)..=centre + 1).find(|&k| power_t(omega, a, b, k) == 0.0)
}

/// Outcome of one hypothesis together with the index that refuted it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemVerdict {
    pub holds: bool,
    pub witness_k: Option<u64>,
}

impl ItemVerdict {
    fn pass() -> Self {
        Self { holds: true, witness_k: None }
    }

    fn fail(k: u64) -> Self {
        Self { holds: false, witness_k: Some(k) }
    }
}

/// Finite-horizon evidence for the four sufficient conditions on `{t_k}`:
/// (i) `t_k ≠ 0`; (ii) `1 ≤ t_{k-1} < ρ[t_{k-1}² - t_k(t_k - 1)]` eventually;
/// (iii) `c₁t_k ≤ t_{k-1} ≤ c₂t_k` eventually; (iv) `t_k → ∞` and
/// `Σ 1/t_k = ∞`.
///
/// Item (ii) holds when some `ρ = 2^j`, `1 ≤ j ≤ 16`, satisfies the strict
/// inequality on every `k` past `k_observed ≤ horizon / 2`. Item (iv) can only
/// ever be "consistent with divergence" on a finite scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub horizon: u64,
    pub nonzero: ItemVerdict,
    pub strict_gap: ItemVerdict,
    pub ratio_bounds: ItemVerdict,
    pub divergence: ItemVerdict,
    /// `K₁`: the inequality of item (ii) held for all `k_observed < k ≤ horizon`.
    pub k_observed: Option<u64>,
    pub rho_observed: Option<f64>,
    /// Tightest `(c₁, c₂)` over the tail half of the scan.
    pub observed_ratio_bounds: Option<(f64, f64)>,
    /// `Σ_{k=1}^{horizon} 1/t_k`.
    pub inverse_partial_sum: f64,
    /// Ratio of the sums of `1/t_k` over `(h/2, h]` and `(h/4, h/2]`.
    pub inverse_tail_ratio: f64,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.nonzero.holds && self.strict_gap.holds && self.ratio_bounds.holds && self.divergence.holds
    }

    /// Plain-text `key=value` rendering used by the harness.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        fn verdict(v: &ItemVerdict) -> String {
            match v.witness_k {
                Some(k) if !v.holds => format!("fail@{k}"),
                _ if v.holds => "pass".into(),
                _ => "fail".into(),
            }
        }
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        vec![
            ("horizon".into(), self.horizon.to_string()),
            ("item_i_nonzero".into(), verdict(&self.nonzero)),
            ("item_ii_strict_gap".into(), verdict(&self.strict_gap)),
            ("item_iii_ratio_bounds".into(), verdict(&self.ratio_bounds)),
            ("item_iv_divergence".into(), verdict(&self.divergence)),
            ("k_observed".into(), opt(self.k_observed.map(|k| k.to_string()))),
            ("rho_observed".into(), opt(self.rho_observed.map(|r| r.to_string()))),
            ("c1".into(), opt(self.observed_ratio_bounds.map(|c| c.0.to_string()))),
            ("c2".into(), opt(self.observed_ratio_bounds.map(|c| c.1.to_string()))),
            ("inverse_partial_sum".into(), self.inverse_partial_sum.to_string()),
            ("inverse_tail_ratio".into(), self.inverse_tail_ratio.to_string()),
            ("all_hold".into(), self.holds().to_string()),
        ]
    }
}

/// Smallest horizon the checker accepts.
pub const MIN_HORIZON: u64 = 10;
const RHO_MAX_EXPONENT: i32 = 16;
/// Tail-sum ratio at or above which partial sums of `1/t_k` count as growing.
const DIVERGENCE_TAIL_RATIO: f64 = 0.95;

/// Scans `k = 1..=horizon` and reports which hypotheses hold (`horizon` is
/// raised to [`MIN_HORIZON`] if smaller).
pub fn check_momentum_condition(schedule: &MomentumSchedule, horizon: u64) -> ConditionReport {
    let horizon = horizon.max(MIN_HORIZON);
    schedule.prefill(horizon);
    let t: Vec<f64> = (0..=horizon).map(|k| schedule.t_value(k)).collect();
    let half = horizon / 2;

    let nonzero = match (1..=horizon).find(|&k| t[k as usize] == 0.0 || !t[k as usize].is_finite()) {
        Some(k) => ItemVerdict::fail(k),
        None => ItemVerdict::pass(),
    };

    // (ii): for each candidate rho, the last k at which the strict inequality fails.
    let last_failure = |rho: f64| -> u64 {
        (1..=horizon)
            .rev()
            .find(|&k| {
                let (prev, cur) = (t[k as usize - 1], t[k as usize]);
                let gap = prev * prev - cur * (cur - 1.0);
                !(1.0 <= prev && prev < rho * gap)
            })
            .unwrap_or(0)
    };
    let mut strict_gap = ItemVerdict::fail(horizon);
    let mut k_observed = None;
    let mut rho_observed = None;
    for j in 1..=RHO_MAX_EXPONENT {
        let rho = 2f64.powi(j);
        let k_fail = last_failure(rho);
        if k_fail <= half {
            strict_gap = ItemVerdict::pass();
            k_observed = Some(k_fail.max(1));
            rho_observed = Some(rho);
            break;
        }
        if j == RHO_MAX_EXPONENT {
            strict_gap = ItemVerdict::fail(k_fail);
        }
    }

    // (iii) over the tail half.
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let mut ratio_witness = None;
    for k in (half + 1)..=horizon {
        let r = t[k as usize - 1] / t[k as usize];
        if !(r > 0.0 && r.is_finite()) {
            ratio_witness.get_or_insert(k);
            continue;
        }
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    let (ratio_bounds, observed_ratio_bounds) = match ratio_witness {
        Some(k) => (ItemVerdict::fail(k), None),
        None => (ItemVerdict::pass(), Some((c1, c2))),
    };

    // (iv)
    let inv_sum = |lo: u64, hi: u64| -> f64 { ((lo + 1)..=hi).map(|k| 1.0 / t[k as usize]).sum() };
    let inverse_partial_sum = inv_sum(0, horizon);
    let quarter = horizon / 4;
    let inverse_tail_ratio = inv_sum(half, horizon) / inv_sum(quarter, half);
    let grows = t[horizon as usize] > t[half as usize];
    let divergence = if grows && inverse_partial_sum.is_finite() && inverse_tail_ratio >= DIVERGENCE_TAIL_RATIO {
        ItemVerdict::pass()
    } else {
        ItemVerdict::fail(horizon)
    };

    ConditionReport {
        horizon,
        nonzero,
        strict_gap,
        ratio_bounds,
        divergence,
        k_observed,
        rho_observed,
        observed_ratio_bounds,
        inverse_partial_sum,
        inverse_tail_ratio,
    }
}

/// `d_k = t_{k-1}² - t_k(t_k - 1)` for `k = 1..=k_max` with `t_k = a·k^ω + b`
/// and `ω > 1`; these sequences tend to `-∞`, so item (ii) can never hold.
pub fn super_linear_divergence(omega: f64, a: f64, b: f64, k_max: u64) -> Result<Vec<f64>, ScheduleError> {
    if !(omega > 1.0 && omega.is_finite()) || a == 0.0 || !a.is_finite() {
        return Err(ScheduleError::NotSuperLinear { omega, a });
    }
    let t = |k: u64| a * (k as f64).powf(omega) + b;
    Ok((1..=k_max)
        .map(|k| {
            let (prev, cur) = (t(k - 1), t(k));
            prev * prev - cur * (cur - 1.0)
        })
        .collect())
}
