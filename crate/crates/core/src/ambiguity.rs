//! Ambiguity-set specifications and their canonical member distributions.
//!
//! An ambiguity set is the family of nonnegative distributions consistent
//! with the declared information: a common mean `mu`, optionally a
//! dispersion measure (variance `sigma2` or mean absolute deviation `mad`),
//! and optionally a support upper bound `L`. Non-emptiness:
//!
//! ```text
//! mean-variance-support:   sigma2 <= mu * (L - mu)
//! mean-MAD-support:        mad    <= 2 * mu * (L - mu) / L
//! mean-MAD (no bound):     mad    <  2 * mu
//! ```
//!
//! Worst-case distributions in this crate are always discrete with at most
//! three atoms, so [`DiscreteDistribution`] is the single representation of
//! nature's strategies, witnesses and extremal distributions.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance before renormalizing.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Probabilities in `[-PROB_CLAMP_TOL, 0)` are treated as exact zeros.
pub const PROB_CLAMP_TOL: f64 = 1e-15;

/// Atoms closer than `1e-12 * max(1, scale)` are merged into one.
pub fn atom_merge_tolerance(scale: f64) -> f64 {
    1e-12 * scale.max(1.0)
}

// ---------------------------------------------------------------------------
// Specification kinds
// ---------------------------------------------------------------------------

/// Which moments and support bounds the seller knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    /// Only the mean is known.
    MeanOnly,
    /// Mean and variance, unbounded support.
    MeanVariance,
    /// Mean, variance and support bound, nature restricted to two-point
    /// distributions.
    TwoPointMeanVarSupport,
    /// Mean, variance and support bound, arbitrary distributions.
    MeanVarSupport,
    /// Mean and mean absolute deviation, unbounded support.
    MeanMad,
    /// Mean, mean absolute deviation and support bound.
    MeanMadSupport,
}

impl SpecKind {
    pub fn uses_variance(self) -> bool {
        matches!(
            self,
            SpecKind::MeanVariance | SpecKind::TwoPointMeanVarSupport | SpecKind::MeanVarSupport
        )
    }

    pub fn uses_mad(self) -> bool {
        matches!(self, SpecKind::MeanMad | SpecKind::MeanMadSupport)
    }

    pub fn uses_support_bound(self) -> bool {
        matches!(
            self,
            SpecKind::TwoPointMeanVarSupport | SpecKind::MeanVarSupport | SpecKind::MeanMadSupport
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SpecKind::MeanOnly => "mean-only",
            SpecKind::MeanVariance => "mean-variance",
            SpecKind::TwoPointMeanVarSupport => "two-point-mean-var-support",
            SpecKind::MeanVarSupport => "mean-var-support",
            SpecKind::MeanMad => "mean-mad",
            SpecKind::MeanMadSupport => "mean-mad-support",
        }
    }
}

// ---------------------------------------------------------------------------
// AmbiguitySpec
// ---------------------------------------------------------------------------

/// A tagged description of the seller's information.
///
/// Serializes as `{"kind": ..., "mu": ..., "sigma2"?: ..., "mad"?: ...,
/// "L"?: ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySpec {
    pub kind: SpecKind,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mad: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub support_upper: Option<f64>,
}

impl AmbiguitySpec {
    pub fn mean_only(mu: f64) -> Self {
        Self { kind: SpecKind::MeanOnly, mu, sigma2: None, mad: None, support_upper: None }
    }

    pub fn mean_variance(mu: f64, sigma2: f64) -> Self {
        Self { kind: SpecKind::MeanVariance, mu, sigma2: Some(sigma2), mad: None, support_upper: None }
    }

    pub fn two_point(mu: f64, sigma2: f64, support_upper: f64) -> Self {
        Self {
            kind: SpecKind::TwoPointMeanVarSupport,
            mu,
            sigma2: Some(sigma2),
            mad: None,
            support_upper: Some(support_upper),
        }
    }

    pub fn mean_var_support(mu: f64, sigma2: f64, support_upper: f64) -> Self {
        Self {
            kind: SpecKind::MeanVarSupport,
            mu,
            sigma2: Some(sigma2),
            mad: None,
            support_upper: Some(support_upper),
        }
    }

    pub fn mean_mad(mu: f64, mad: f64) -> Self {
        Self { kind: SpecKind::MeanMad, mu, sigma2: None, mad: Some(mad), support_upper: None }
    }

    pub fn mean_mad_support(mu: f64, mad: f64, support_upper: f64) -> Self {
        Self {
            kind: SpecKind::MeanMadSupport,
            mu,
            sigma2: None,
            mad: Some(mad),
            support_upper: Some(support_upper),
        }
    }

    /// The support upper bound, with unbounded kinds mapped to `+inf`.
    pub fn effective_support_upper(&self) -> f64 {
        self.support_upper.unwrap_or(f64::INFINITY)
    }

    /// Checks non-emptiness of the described set. Returns the spec wrapped
    /// in [`ValidatedSpec`] unchanged on success; the inequality checks are
    /// exact (no tolerance on user-supplied parameters).
    pub fn validate(self) -> Result<ValidatedSpec> {
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        let require = |present: bool, name: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "kind {} requires field {name}",
                    self.kind.name()
                )))
            }
        };
        let forbid = |absent: bool, name: &str| -> Result<()> {
            if absent {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "kind {} does not take field {name}",
                    self.kind.name()
                )))
            }
        };

        if self.kind.uses_variance() {
            require(self.sigma2.is_some(), "sigma2")?;
            forbid(self.mad.is_none(), "mad")?;
        } else if self.kind.uses_mad() {
            require(self.mad.is_some(), "mad")?;
            forbid(self.sigma2.is_none(), "sigma2")?;
        } else {
            forbid(self.sigma2.is_none(), "sigma2")?;
            forbid(self.mad.is_none(), "mad")?;
        }
        if self.kind.uses_support_bound() {
            require(self.support_upper.is_some(), "L")?;
        } else {
            forbid(self.support_upper.is_none(), "L")?;
        }

        if let Some(s2) = self.sigma2 {
            if !s2.is_finite() || s2 < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "sigma2 must be nonnegative, got {s2}"
                )));
            }
        }
        if let Some(d) = self.mad {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidParameter(format!("mad must be nonnegative, got {d}")));
            }
        }
        if let Some(l) = self.support_upper {
            if !l.is_finite() || l <= 0.0 {
                return Err(Error::InvalidParameter(format!("L must be positive, got {l}")));
            }
        }

        match self.kind {
            SpecKind::MeanOnly | SpecKind::MeanVariance => {}
            SpecKind::TwoPointMeanVarSupport | SpecKind::MeanVarSupport => {
                let s2 = self.sigma2.unwrap();
                let l = self.support_upper.unwrap();
                let cap = self.mu * (l - self.mu);
                if s2 > cap {
                    return Err(Error::EmptyAmbiguitySet(format!(
                        "sigma2 <= mu*(L - mu) violated: {s2} > {cap}"
                    )));
                }
            }
            SpecKind::MeanMadSupport => {
                let d = self.mad.unwrap();
                let l = self.support_upper.unwrap();
                let cap = 2.0 * self.mu * (l - self.mu) / l;
                if d > cap {
                    return Err(Error::EmptyAmbiguitySet(format!(
                        "mad <= 2*mu*(L - mu)/L violated: {d} > {cap}"
                    )));
                }
            }
            SpecKind::MeanMad => {
                let d = self.mad.unwrap();
                if d >= 2.0 * self.mu {
                    return Err(Error::EmptyAmbiguitySet(format!(
                        "mad < 2*mu violated: {d} >= {}",
                        2.0 * self.mu
                    )));
                }
            }
        }
        Ok(ValidatedSpec { spec: self })
    }
}

/// An [`AmbiguitySpec`] that passed `validate`. Downstream operations take
/// this type so non-emptiness is established exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedSpec {
    spec: AmbiguitySpec,
}

impl ValidatedSpec {
    pub fn spec(&self) -> &AmbiguitySpec {
        &self.spec
    }
}

impl std::ops::Deref for ValidatedSpec {
    type Target = AmbiguitySpec;

    fn deref(&self) -> &AmbiguitySpec {
        &self.spec
    }
}

// ---------------------------------------------------------------------------
// DiscreteDistribution
// ---------------------------------------------------------------------------

/// First two dispersion summaries of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub mad: f64,
}

/// A finite-support distribution: ascending points with probabilities.
///
/// Construction clamps probabilities in `[-1e-15, 0)` to zero, merges atoms
/// closer than the merge tolerance, drops zero-probability atoms and
/// renormalizes; the probabilities then sum to one exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut cleaned: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, p) in atoms {
            if !x.is_finite() || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite atom ({x}, {p})")));
            }
            if x < -1e-12 {
                return Err(Error::InvalidDistribution(format!("negative point {x}")));
            }
            if p < -PROB_CLAMP_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {p} at point {x}"
                )));
            }
            let p = if p < 0.0 { 0.0 } else { p };
            cleaned.push((x.max(0.0), p));
        }
        cleaned.sort_by(|a, b| a.0.total_cmp(&b.0));

        let scale = cleaned.last().map(|a| a.0).unwrap_or(0.0);
        let merge_tol = atom_merge_tolerance(scale);
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(cleaned.len());
        for (x, p) in cleaned {
            match merged.last_mut() {
                Some(last) if x - last.0 <= merge_tol => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        if merged.is_empty() {
            return Err(Error::InvalidDistribution("all probabilities are zero".into()));
        }

        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(Self { atoms: merged })
    }

    pub fn point_mass(x: f64) -> Self {
        Self { atoms: vec![(x.max(0.0), 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_point(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max_point(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * f(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x)
    }

    /// Mean, variance and MAD by direct weighted sums.
    pub fn moments(&self) -> Moments {
        let mean = self.mean();
        let variance = self.expectation(|x| (x - mean) * (x - mean));
        let mad = self.expectation(|x| (x - mean).abs());
        Moments { mean, variance, mad }
    }

    /// Inverse-CDF sample for a uniform draw `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, p) in &self.atoms {
            acc += p;
            if u < acc {
                return x;
            }
        }
        self.max_point()
    }

    /// Largest excess of any support point over `upper` (zero if inside).
    pub fn support_violation(&self, upper: f64) -> f64 {
        (self.max_point() - upper).max(0.0)
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            atoms: Vec<(f64, f64)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        DiscreteDistribution::new(raw.atoms).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Two-point family
// ---------------------------------------------------------------------------

/// The two-point distribution with mean `mu`, standard deviation `sigma`
/// and mass `p` on its lower point:
///
/// ```text
/// a = mu - sqrt((1-p)/p) * sigma      (mass p)
/// b = mu + sqrt(p/(1-p)) * sigma      (mass 1-p)
/// ```
pub fn two_point_from_p(mu: f64, sigma: f64, p: f64) -> Result<DiscreteDistribution> {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if !mu.is_finite() || mu <= 0.0 || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!("need mu > 0, sigma >= 0, got ({mu}, {sigma})")));
    }
    let a = mu - ((1.0 - p) / p).sqrt() * sigma;
    let b = mu + (p / (1.0 - p)).sqrt() * sigma;
    if a < -1e-12 {
        return Err(Error::NegativeSupport { point: a, p });
    }
    DiscreteDistribution::new(vec![(a.max(0.0), p), (b, 1.0 - p)])
}

/// The range of lower-point masses `p` for which the two-point family fits
/// inside `[0, L]`:
///
/// ```text
/// p_lo = sigma^2 / (sigma^2 + mu^2)          (lower point hits 0)
/// p_hi = (L-mu)^2 / ((L-mu)^2 + sigma^2)     (upper point hits L)
/// ```
///
/// `sigma = 0` collapses the family to the point mass at `mu`; the
/// degenerate sentinel interval `(0.5, 0.5)` is returned so that
/// [`two_point_from_p`] on either endpoint yields that point mass.
pub fn feasible_p_interval(mu: f64, sigma: f64, upper: f64) -> Result<(f64, f64)> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")));
    }
    feasible_p_interval_var(mu, sigma * sigma, upper)
}

/// [`feasible_p_interval`] parameterized by the variance, avoiding the
/// lossy `sigma2 -> sigma -> sigma2` round trip at the non-emptiness
/// boundary.
pub fn feasible_p_interval_var(mu: f64, sigma2: f64, upper: f64) -> Result<(f64, f64)> {
    if !mu.is_finite() || mu <= 0.0 || sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need mu > 0, sigma2 >= 0, got ({mu}, {sigma2})"
        )));
    }
    if sigma2 == 0.0 {
        return Ok((0.5, 0.5));
    }
    if upper <= mu {
        return Err(Error::InvalidParameter(format!("L must exceed mu, got L = {upper}, mu = {mu}")));
    }
    let cap = mu * (upper - mu);
    if sigma2 > cap {
        return Err(Error::EmptyAmbiguitySet(format!(
            "sigma2 <= mu*(L - mu) violated: {sigma2} > {cap}"
        )));
    }
    let p_lo = sigma2 / (sigma2 + mu * mu);
    let gap = upper - mu;
    let p_hi = gap * gap / (gap * gap + sigma2);
    Ok((p_lo, p_hi))
}

// ---------------------------------------------------------------------------
// Witnesses
// ---------------------------------------------------------------------------

/// A canonical member of the ambiguity set, matching the declared moments
/// exactly. For variance kinds this is the two-point distribution on
/// `{0, mu + sigma2/mu}`; for MAD kinds the two-point distribution on
/// `{0, 2 mu^2 / (2 mu - d)}`; degenerate dispersion gives the point mass
/// at `mu`.
pub fn witness_distribution(spec: &ValidatedSpec) -> DiscreteDistribution {
    let mu = spec.mu;
    match spec.kind {
        SpecKind::MeanOnly => DiscreteDistribution::point_mass(mu),
        SpecKind::MeanVariance | SpecKind::TwoPointMeanVarSupport | SpecKind::MeanVarSupport => {
            let s2 = spec.sigma2.unwrap();
            if s2 == 0.0 {
                return DiscreteDistribution::point_mass(mu);
            }
            let m2 = mu * mu + s2;
            let b = mu + s2 / mu;
            DiscreteDistribution::new(vec![(0.0, s2 / m2), (b, mu * mu / m2)])
                .expect("variance witness atoms are valid")
        }
        SpecKind::MeanMad | SpecKind::MeanMadSupport => {
            let d = spec.mad.unwrap();
            if d == 0.0 {
                return DiscreteDistribution::point_mass(mu);
            }
            let b = 2.0 * mu * mu / (2.0 * mu - d);
            let p0 = d / (2.0 * mu);
            DiscreteDistribution::new(vec![(0.0, p0), (b, 1.0 - p0)])
                .expect("MAD witness atoms are valid")
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
