//! Robust threshold schedules.
//!
//! The seller's optimal rule accepts offer `i` iff its value reaches
//! `T(i)`, where the thresholds follow the backward recursion
//! `T(n) = 0`, `T(i) = T(i+1) + mu - bound(T(i+1))` with `bound(xi)` the
//! tight upper bound on `E[min(xi, X)]` over the ambiguity set.
//! [`robust_thresholds_generic`] runs that recursion against any bound
//! oracle; the `thresholds_*` functions are the closed-form schedules for
//! the specific information structures, each computed by backward
//! iteration of its defining one-step map (the power-form solutions are
//! only used to cross-check in tests).
//!
//! For the two-point family with a generous support bound the worst case
//! switches: the first backward steps are driven by the distribution
//! hitting the support bound (`g*`, mass `p_hi` on the low point), later
//! steps by the one hitting zero (`f*`, mass `p_lo`). The per-step
//! comparison of the two candidate recursions pins the switch index
//! exactly; [`TurningPointReport`] carries both candidate series.

use serde::Serialize;

use crate::ambiguity::{feasible_p_interval_var, AmbiguitySpec, SpecKind, ValidatedSpec};
use crate::error::{Error, Result};
use crate::momentbound::{mad_upper_bound, mvs_upper_bound};

/// Schedules may violate monotonicity by at most this much (float slack).
const MONOTONE_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// ThresholdSchedule
// ---------------------------------------------------------------------------

/// The vector `T(0..n)` of robust thresholds: `values[i]` is the threshold
/// for offer `i`, `values[n] = 0`, `values[n-1] = mu`, nonincreasing in `i`,
/// and `values[0]` is the seller's robust expected payoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSchedule {
    values: Vec<f64>,
}

impl ThresholdSchedule {
    /// Wraps a threshold vector, checking the schedule invariants.
    pub fn from_values(values: Vec<f64>, mu: f64) -> Result<Self> {
        let n = values.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
            Error::PreconditionViolated("a schedule needs at least two entries".into())
        })?;
        if values[n] != 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "T(n) must be 0, got {}",
                values[n]
            )));
        }
        if (values[n - 1] - mu).abs() > 1e-9 * mu.max(1.0) {
            return Err(Error::PreconditionViolated(format!(
                "T(n-1) must equal mu = {mu}, got {}",
                values[n - 1]
            )));
        }
        for i in 0..n {
            if values[i] < values[i + 1] - MONOTONE_TOL {
                return Err(Error::PreconditionViolated(format!(
                    "thresholds must be nonincreasing, T({i}) = {} < T({}) = {}",
                    values[i],
                    i + 1,
                    values[i + 1]
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `T(i)` for `i` in `0..=n`.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The robust expected payoff `T(0)`.
    pub fn payoff(&self) -> f64 {
        self.values[0]
    }
}

/// Candidate thresholds from the two endpoint recursions of the two-point
/// family. `left_values[i]` / `right_values[i]` are the values the `f*`
/// (lower endpoint) and `g*` (upper endpoint) one-step maps would assign
/// to `T(i)` given the true `T(i+1)`; entries `n-1` and `n` are the pinned
/// `mu` and `0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurningPointReport {
    /// Steps from the horizon at which the worst case switches; `None`
    /// when the lower-endpoint branch never wins strictly.
    pub n0: Option<usize>,
    /// Largest `i` at which the `f*` value is strictly smaller (`n - n0`).
    pub switch_index: Option<usize>,
    pub left_values: Vec<f64>,
    pub right_values: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Generic recursion
// ---------------------------------------------------------------------------

/// Backward solution of `t(i) = alpha + beta t(i+1)`, `t(m) = gamma0`, by
/// direct iteration; returns `t(0..=m)`.
pub fn solve_linear_recursion(alpha: f64, beta: f64, gamma0: f64, m: usize) -> Vec<f64> {
    let mut values = vec![0.0; m + 1];
    values[m] = gamma0;
    for i in (0..m).rev() {
        values[i] = alpha + beta * values[i + 1];
    }
    values
}

/// Runs the robust backward recursion with a caller-supplied tight bound
/// `xi -> max E[min(xi, X)]` for the spec's ambiguity set.
pub fn robust_thresholds_generic<F>(
    spec: &ValidatedSpec,
    n: usize,
    bound: F,
) -> Result<ThresholdSchedule>
where
    F: Fn(f64) -> Result<f64>,
{
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mu = spec.mu;
    let mut values = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let next = values[i + 1];
        values[i] = next + mu - bound(next)?;
    }
    ThresholdSchedule::from_values(values, mu)
}

/// The tight bound oracle matching the spec's kind, for use with
/// [`robust_thresholds_generic`].
///
/// Mean-only and mean-variance sets admit no better guarantee than the
/// mean: their bound is `min(xi, mu)` (for mean-variance as a limit of
/// two-point distributions with an escaping upper point). The two-point
/// bound evaluates the step objective at both feasible-`p` endpoints,
/// which is exact because the objective is minimized at an endpoint.
pub fn closed_form_bound(spec: &ValidatedSpec) -> Box<dyn Fn(f64) -> Result<f64> + Send + Sync> {
    let mu = spec.mu;
    match spec.kind {
        SpecKind::MeanOnly | SpecKind::MeanVariance => Box::new(move |xi| Ok(xi.min(mu))),
        SpecKind::MeanVarSupport => {
            let sigma2 = spec.sigma2.unwrap();
            let upper = spec.support_upper.unwrap();
            Box::new(move |xi| mvs_upper_bound(mu, sigma2, upper, xi))
        }
        SpecKind::TwoPointMeanVarSupport => {
            let sigma2 = spec.sigma2.unwrap();
            let upper = spec.support_upper.unwrap();
            Box::new(move |xi| two_point_bound(mu, sigma2, upper, xi))
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => {
            let d = spec.mad.unwrap();
            let upper = spec.effective_support_upper();
            Box::new(move |xi| mad_upper_bound(mu, d, upper, xi))
        }
    }
}

/// Tight bound for the two-point family on the recursion's range
/// `{0} \cup [mu, mu + sigma2/mu]`, via the endpoint objectives.
pub fn two_point_bound(mu: f64, sigma2: f64, upper: f64, xi: f64) -> Result<f64> {
    AmbiguitySpec::two_point(mu, sigma2, upper).validate()?;
    if sigma2 == 0.0 {
        return Ok(xi.min(mu));
    }
    if xi <= 0.0 {
        return Ok(0.0);
    }
    let b = mu + sigma2 / mu;
    let slack = 1e-9 * mu.max(1.0);
    if !(mu - slack..=b + slack).contains(&xi) {
        return Err(Error::PreconditionViolated(format!(
            "two-point bound is defined for xi in {{0}} or [mu, mu + sigma2/mu], got {xi}"
        )));
    }
    let sigma = sigma2.sqrt();
    let (p_lo, p_hi) = feasible_p_interval_var(mu, sigma2, upper)?;
    let step = two_point_step_objective(xi, mu, sigma, p_lo)
        .min(two_point_step_objective(xi, mu, sigma, p_hi));
    Ok(xi + mu - step)
}

/// One backward step of the two-point recursion as a function of the
/// lower-point mass `p`: `mu + (t_next - mu) p + sqrt(p(1-p)) sigma`.
pub fn two_point_step_objective(t_next: f64, mu: f64, sigma: f64, p: f64) -> f64 {
    mu + (t_next - mu) * p + (p * (1.0 - p)).sqrt() * sigma
}

// ---------------------------------------------------------------------------
// Closed-form schedules
// ---------------------------------------------------------------------------

/// Two-point family with `L <= 2 mu`: the lower endpoint wins every step,
/// giving `T(i) = mu + gamma T(i+1)` with `gamma = sigma2/(mu^2 + sigma2)`.
pub fn thresholds_two_point_small_l(
    mu: f64,
    sigma2: f64,
    upper: f64,
    n: usize,
) -> Result<ThresholdSchedule> {
    AmbiguitySpec::two_point(mu, sigma2, upper).validate()?;
    if upper > 2.0 * mu {
        return Err(Error::PreconditionViolated(format!(
            "needs L <= 2*mu, got L = {upper}, mu = {mu}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let gamma = sigma2 / (mu * mu + sigma2);
    let mut values = solve_linear_recursion(mu, gamma, mu, n - 1);
    values.push(0.0);
    ThresholdSchedule::from_values(values, mu)
}

/// Two-point family with `L >= 2 mu`: runs both endpoint recursions from
/// the common previous threshold, takes the per-step minimum, and records
/// the switch index (ties keep the upper-endpoint branch).
pub fn thresholds_two_point_large_l(
    mu: f64,
    sigma2: f64,
    upper: f64,
    n: usize,
) -> Result<(ThresholdSchedule, TurningPointReport)> {
    AmbiguitySpec::two_point(mu, sigma2, upper).validate()?;
    if upper < 2.0 * mu {
        return Err(Error::PreconditionViolated(format!(
            "needs L >= 2*mu, got L = {upper}, mu = {mu}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let sigma = sigma2.sqrt();
    let (p_lo, p_hi) = feasible_p_interval_var(mu, sigma2, upper)?;

    let mut values = vec![0.0; n + 1];
    let mut left = vec![0.0; n + 1];
    let mut right = vec![0.0; n + 1];
    values[n - 1] = mu;
    left[n - 1] = mu;
    right[n - 1] = mu;
    for i in (0..n.saturating_sub(1)).rev() {
        let next = values[i + 1];
        let lf = two_point_step_objective(next, mu, sigma, p_lo);
        let rg = two_point_step_objective(next, mu, sigma, p_hi);
        left[i] = lf;
        right[i] = rg;
        values[i] = lf.min(rg);
    }

    let switch_index = if n >= 2 { (0..=n - 2).rev().find(|&i| left[i] < right[i]) } else { None };
    let report = TurningPointReport {
        n0: switch_index.map(|s| n - s),
        switch_index,
        left_values: left,
        right_values: right,
    };
    let schedule = ThresholdSchedule::from_values(values, mu)?;
    Ok((schedule, report))
}

/// Mean-variance-support family (arbitrary distributions): the worst case
/// is the three-point distribution on `{0, T(i+1), L}`, giving
/// `T(i) = (mu^2 + sigma2)/L + (1 - mu/L) T(i+1)`.
pub fn thresholds_mvs_general(
    mu: f64,
    sigma2: f64,
    upper: f64,
    n: usize,
) -> Result<ThresholdSchedule> {
    AmbiguitySpec::mean_var_support(mu, sigma2, upper).validate()?;
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let alpha = (mu * mu + sigma2) / upper;
    let beta = 1.0 - mu / upper;
    let mut values = solve_linear_recursion(alpha, beta, mu, n - 1);
    values.push(0.0);
    ThresholdSchedule::from_values(values, mu)
}

/// Mean-MAD family: `T(i) = mu + (d / 2 mu) T(i+1)`, independent of any
/// support upper bound.
pub fn thresholds_mad(mu: f64, d: f64, n: usize) -> Result<ThresholdSchedule> {
    AmbiguitySpec::mean_mad(mu, d).validate().map_err(|e| match e {
        Error::EmptyAmbiguitySet(msg) => Error::PreconditionViolated(msg),
        other => other,
    })?;
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let beta = d / (2.0 * mu);
    let mut values = solve_linear_recursion(mu, beta, mu, n - 1);
    values.push(0.0);
    ThresholdSchedule::from_values(values, mu)
}

/// The closed-form schedule matching the spec's kind, with the turning
/// point report where the two-point split applies. `L = 2 mu` exactly is
/// served by the large-`L` branch (the two coincide there).
pub fn closed_form_thresholds(
    spec: &ValidatedSpec,
    n: usize,
) -> Result<(ThresholdSchedule, Option<TurningPointReport>)> {
    let mu = spec.mu;
    match spec.kind {
        SpecKind::MeanOnly | SpecKind::MeanVariance => {
            let schedule = robust_thresholds_generic(spec, n, |xi| Ok(xi.min(mu)))?;
            Ok((schedule, None))
        }
        SpecKind::TwoPointMeanVarSupport => {
            let sigma2 = spec.sigma2.unwrap();
            let upper = spec.support_upper.unwrap();
            if upper >= 2.0 * mu {
                let (schedule, report) = thresholds_two_point_large_l(mu, sigma2, upper, n)?;
                Ok((schedule, Some(report)))
            } else {
                Ok((thresholds_two_point_small_l(mu, sigma2, upper, n)?, None))
            }
        }
        SpecKind::MeanVarSupport => {
            let sigma2 = spec.sigma2.unwrap();
            let upper = spec.support_upper.unwrap();
            Ok((thresholds_mvs_general(mu, sigma2, upper, n)?, None))
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => {
            Ok((thresholds_mad(mu, spec.mad.unwrap(), n)?, None))
        }
    }
}

/// Limit of the robust payoff `T(0)` as the number of offers grows:
/// `mu` for the degenerate sets, `mu + sigma2/mu` for variance with a
/// support bound, `2 mu^2/(2 mu - d)` for MAD sets.
pub fn asymptotic_payoff(spec: &ValidatedSpec) -> f64 {
    let mu = spec.mu;
    match spec.kind {
        SpecKind::MeanOnly | SpecKind::MeanVariance => mu,
        SpecKind::TwoPointMeanVarSupport | SpecKind::MeanVarSupport => {
            mu + spec.sigma2.unwrap() / mu
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => {
            let d = spec.mad.unwrap();
            2.0 * mu * mu / (2.0 * mu - d)
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
