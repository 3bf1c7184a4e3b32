//! Monte Carlo simulation of the seller-vs-nature maximin game.
//!
//! The seller commits to a stopping rule first; nature answers with
//! distributions from the ambiguity set. An episode draws the `n` offer
//! values, walks them in order and applies the rule's acceptance
//! probability at each step; the payoff is the accepted value (zero when
//! every offer is rejected, which only a static rule with a positive
//! threshold can do).
//!
//! Randomness is counter-based: episode `e` reads stream `e + 1` of a
//! ChaCha8 generator keyed by the report's seed, so serial and parallel
//! runs produce bit-identical reports for any worker count. Episode
//! payoffs are aggregated chunk-by-chunk in episode order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ambiguity;
use crate::ambiguity::{witness_distribution, DiscreteDistribution, SpecKind, ValidatedSpec};
use crate::error::{Error, Result};
use crate::momentbound::{mad_worst_case, mvs_worst_case};
use crate::thresholds::{two_point_step_objective, ThresholdSchedule};

/// Episodes per aggregation chunk; fixed so that the reduction tree does
/// not depend on the worker count.
const CHUNK: u64 = 8192;

/// Nature's emitted distributions must match the declared moments this
/// tightly.
const MEMBER_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Stopping rules
// ---------------------------------------------------------------------------

/// Acceptance probabilities `r_i(v_1..v_i)` of a randomized rule.
pub type AcceptanceFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;

/// A (possibly randomized) stopping rule: `acceptance_prob(i, v_1..v_i)`
/// is the probability of accepting offer `i` having seen the first `i`
/// values.
#[derive(Clone)]
pub enum StoppingRule {
    /// Accept offer `i` iff `v_i >= T(i)`.
    Schedule(ThresholdSchedule),
    /// Accept the first offer at or above a fixed threshold.
    Static(f64),
    /// Accept the first offer unconditionally.
    FirstOffer,
    /// Arbitrary acceptance probabilities `r_i(v_1..v_i)`.
    Randomized(AcceptanceFn),
}

impl std::fmt::Debug for StoppingRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoppingRule::Schedule(s) => f.debug_tuple("Schedule").field(&s.n()).finish(),
            StoppingRule::Static(t) => f.debug_tuple("Static").field(t).finish(),
            StoppingRule::FirstOffer => write!(f, "FirstOffer"),
            StoppingRule::Randomized(_) => write!(f, "Randomized(..)"),
        }
    }
}

impl StoppingRule {
    /// Acceptance probability for 1-based offer `i`; `seen` holds
    /// `v_1..v_i`.
    pub fn acceptance_prob(&self, i: usize, seen: &[f64]) -> f64 {
        let v = seen[i - 1];
        match self {
            StoppingRule::Schedule(schedule) => {
                if v >= schedule.value(i) {
                    1.0
                } else {
                    0.0
                }
            }
            StoppingRule::Static(t) => {
                if v >= *t {
                    1.0
                } else {
                    0.0
                }
            }
            StoppingRule::FirstOffer => 1.0,
            StoppingRule::Randomized(r) => r(i, seen).clamp(0.0, 1.0),
        }
    }
}

/// Rule accepting the first offer at or above `t`; may reject every offer.
/// `t = 0` behaves like [`StoppingRule::FirstOffer`] on nonnegative values.
pub fn static_threshold_rule(t: f64) -> Result<StoppingRule> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "static threshold must be nonnegative, got {t}"
        )));
    }
    Ok(StoppingRule::Static(t))
}

// ---------------------------------------------------------------------------
// Nature strategies
// ---------------------------------------------------------------------------

/// How nature fills an episode with offer values.
#[derive(Debug, Clone)]
pub enum NatureStrategy {
    /// All offers i.i.d. from one member distribution.
    FixedIid(DiscreteDistribution),
    /// Offer `i` drawn from its own member distribution (entry `i - 1`).
    PerStep(Vec<DiscreteDistribution>),
    /// One draw per episode shared by every offer.
    FullyCorrelated(DiscreteDistribution),
}

impl NatureStrategy {
    /// Nature's minimizing response to a published threshold schedule:
    /// offer `i` is drawn from the worst-case distribution certified at
    /// `xi = T(i)` (the quantity the backward step minimizes over).
    ///
    /// Degenerate kinds: the mean-only worst case is the point mass at the
    /// mean; the unbounded mean-variance set has no attaining minimizer
    /// (its infimum escapes to an unbounded support point), so it cannot
    /// be simulated and reports an error.
    pub fn per_step_worst_case(
        spec: &ValidatedSpec,
        schedule: &ThresholdSchedule,
    ) -> Result<Self> {
        let n = schedule.n();
        let mut dists = Vec::with_capacity(n);
        for offer in 1..=n {
            let xi = schedule.value(offer);
            let dist = worst_member(spec, xi)?;
            check_membership(spec, &dist)?;
            dists.push(dist);
        }
        Ok(NatureStrategy::PerStep(dists))
    }

    /// Largest value any episode can realize.
    pub fn max_support_point(&self) -> f64 {
        match self {
            NatureStrategy::FixedIid(d) | NatureStrategy::FullyCorrelated(d) => d.max_point(),
            NatureStrategy::PerStep(ds) => {
                ds.iter().map(|d| d.max_point()).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn fill_episode(&self, rng: &mut ChaCha8Rng, values: &mut [f64]) {
        match self {
            NatureStrategy::FixedIid(d) => {
                for v in values.iter_mut() {
                    *v = d.quantile(rng.gen::<f64>());
                }
            }
            NatureStrategy::PerStep(ds) => {
                for (v, d) in values.iter_mut().zip(ds) {
                    *v = d.quantile(rng.gen::<f64>());
                }
            }
            NatureStrategy::FullyCorrelated(d) => {
                let shared = d.quantile(rng.gen::<f64>());
                values.fill(shared);
            }
        }
    }
}

fn worst_member(spec: &ValidatedSpec, xi: f64) -> Result<DiscreteDistribution> {
    let mu = spec.mu;
    match spec.kind {
        SpecKind::MeanOnly => Ok(DiscreteDistribution::point_mass(mu)),
        SpecKind::MeanVariance => Err(Error::PreconditionViolated(
            "the unbounded mean-variance set has no attaining worst case to simulate".into(),
        )),
        SpecKind::MeanVarSupport => {
            let cert = mvs_worst_case(mu, spec.sigma2.unwrap(), spec.support_upper.unwrap(), xi)?;
            Ok(cert.primal)
        }
        SpecKind::TwoPointMeanVarSupport => {
            let sigma2 = spec.sigma2.unwrap();
            if sigma2 == 0.0 {
                return Ok(DiscreteDistribution::point_mass(mu));
            }
            let sigma = sigma2.sqrt();
            let (p_lo, p_hi) =
                ambiguity::feasible_p_interval_var(mu, sigma2, spec.support_upper.unwrap())?;
            // At xi = 0 every member is minimizing; ties keep the upper
            // endpoint, consistently with the turning-point convention.
            let p = if xi <= 0.0 {
                p_hi
            } else {
                let lf = two_point_step_objective(xi, mu, sigma, p_lo);
                let rg = two_point_step_objective(xi, mu, sigma, p_hi);
                if rg <= lf {
                    p_hi
                } else {
                    p_lo
                }
            };
            ambiguity::two_point_from_p(mu, sigma, p)
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => {
            let d = spec.mad.unwrap();
            let upper = spec.effective_support_upper();
            if d == 0.0 {
                return Ok(DiscreteDistribution::point_mass(mu));
            }
            Ok(mad_worst_case(mu, d, upper, xi)?.primal)
        }
    }
}

fn check_membership(spec: &ValidatedSpec, dist: &DiscreteDistribution) -> Result<()> {
    let m = dist.moments();
    let mut err = (m.mean - spec.mu).abs();
    if let Some(s2) = spec.sigma2 {
        err = err.max((m.variance - s2).abs());
    }
    if let Some(d) = spec.mad {
        err = err.max((m.mad - d).abs());
    }
    let upper = spec.effective_support_upper();
    if upper.is_finite() {
        err = err.max(dist.support_violation(upper));
    }
    if err > MEMBER_TOL {
        return Err(Error::PreconditionViolated(format!(
            "nature strategy leaves the ambiguity set (discrepancy {err:.3e})"
        )));
    }
    Ok(())
}

/// Nature playing the witness distribution perfectly correlated across
/// offers: all offers of an episode share one realized value.
pub fn correlated_witness(spec: &ValidatedSpec) -> NatureStrategy {
    NatureStrategy::FullyCorrelated(witness_distribution(spec))
}

// ---------------------------------------------------------------------------
// Episodes and reports
// ---------------------------------------------------------------------------

/// Walks one episode. Returns the 1-based accepted index and the payoff;
/// `(None, 0.0)` when every offer is rejected. Randomness is consumed only
/// for acceptance probabilities strictly inside (0, 1).
pub fn run_episode(
    rule: &StoppingRule,
    values: &[f64],
    rng: &mut impl Rng,
) -> (Option<usize>, f64) {
    for i in 1..=values.len() {
        let p = rule.acceptance_prob(i, &values[..i]);
        let accept = p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p);
        if accept {
            return (Some(i), values[i - 1]);
        }
    }
    (None, 0.0)
}

/// Monte Carlo estimate of a rule's expected payoff against a nature
/// strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub episodes: u64,
    pub seed: u64,
    pub mean_payoff: f64,
    /// Sample standard deviation of the payoff divided by sqrt(episodes).
    pub std_error: f64,
    /// `selection_histogram[0]` counts episodes with no acceptance;
    /// entry `i` counts acceptances of offer `i`.
    pub selection_histogram: Vec<u64>,
    pub no_acceptance_frequency: f64,
    /// Mean of the per-episode maximum offer value (auxiliary output).
    pub mean_realized_max: f64,
}

#[derive(Clone)]
struct Partial {
    sum: f64,
    sumsq: f64,
    max_sum: f64,
    hist: Vec<u64>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self { sum: 0.0, sumsq: 0.0, max_sum: 0.0, hist: vec![0; n + 1] }
    }
}

/// Runs `episodes` episodes of `n` offers. Deterministic in
/// `(seed, episodes, n)`: the report is bit-identical for any `threads`.
pub fn monte_carlo(
    rule: &StoppingRule,
    nature: &NatureStrategy,
    n: usize,
    episodes: u64,
    seed: u64,
    threads: usize,
) -> Result<SimulationReport> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if episodes < 1 {
        return Err(Error::InvalidParameter("episodes must be at least 1".into()));
    }
    if let NatureStrategy::PerStep(ds) = nature {
        if ds.len() != n {
            return Err(Error::InvalidParameter(format!(
                "per-step nature has {} distributions for n = {n}",
                ds.len()
            )));
        }
    }

    let chunks = episodes.div_ceil(CHUNK) as usize;
    let run_chunk = |chunk: usize| -> Partial {
        let mut part = Partial::new(n);
        let base = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0f64; n];
        let lo = chunk as u64 * CHUNK;
        let hi = (lo + CHUNK).min(episodes);
        for episode in lo..hi {
            let mut rng = base.clone();
            rng.set_stream(episode + 1);
            nature.fill_episode(&mut rng, &mut values);
            let (index, payoff) = run_episode(rule, &values, &mut rng);
            part.sum += payoff;
            part.sumsq += payoff * payoff;
            part.max_sum += values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            part.hist[index.unwrap_or(0)] += 1;
        }
        part
    };

    let partials: Vec<(usize, Partial)> = if threads <= 1 {
        (0..chunks).map(|c| (c, run_chunk(c))).collect()
    } else {
        let next = AtomicUsize::new(0);
        let workers = threads.min(chunks.max(1));
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut mine = Vec::new();
                        loop {
                            let c = next.fetch_add(1, Ordering::Relaxed);
                            if c >= chunks {
                                break;
                            }
                            mine.push((c, run_chunk(c)));
                        }
                        mine
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(chunks);
            for h in handles {
                all.extend(h.join().expect("simulation worker panicked"));
            }
            all
        })
    };

    let mut ordered = partials;
    ordered.sort_by_key(|(c, _)| *c);
    let mut total = Partial::new(n);
    for (_, part) in ordered {
        total.sum += part.sum;
        total.sumsq += part.sumsq;
        total.max_sum += part.max_sum;
        for (acc, v) in total.hist.iter_mut().zip(&part.hist) {
            *acc += v;
        }
    }

    let e = episodes as f64;
    let mean_payoff = total.sum / e;
    let std_error = if episodes > 1 {
        let var = ((total.sumsq - total.sum * total.sum / e) / (e - 1.0)).max(0.0);
        (var / e).sqrt()
    } else {
        0.0
    };
    Ok(SimulationReport {
        episodes,
        seed,
        mean_payoff,
        std_error,
        no_acceptance_frequency: total.hist[0] as f64 / e,
        selection_histogram: total.hist,
        mean_realized_max: total.max_sum / e,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
