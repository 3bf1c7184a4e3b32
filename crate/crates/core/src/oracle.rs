//! Brute-force verifiers for the closed forms.
//!
//! Everything the crate computes analytically is checked against one of
//! three independent routes:
//!
//! - [`grid_min_two_point`]: direct grid minimization of the two-point
//!   step objective over the feasible mass interval;
//! - [`enumerate_extremal`]: extremal distributions have at most three
//!   support points, so enumerating support triples (plus pairs and
//!   singletons) drawn from a grid augmented with the analytically exact
//!   candidate points solves the moment-bound primal by exhaustion;
//! - [`verify_certificate`]: primal membership, primal/dual objective
//!   agreement and majorant feasibility for a strong-duality certificate.

use crate::ambiguity::{DiscreteDistribution, SpecKind, ValidatedSpec};
use crate::error::{Error, Result};
use crate::momentbound::{
    check_majorant, mad_breakpoints, moment_probs, Majorant, MajorantBasis,
    MomentBoundCertificate,
};
use crate::thresholds::two_point_step_objective;

/// Enumerated probabilities may stray this far outside [0, 1]; candidates
/// at the boundary are kept (the dual check guards correctness).
pub const ENUM_FEAS_TOL: f64 = 1e-10;

/// Default grid size for support enumeration; with the exact candidate
/// points injected this already reproduces the closed forms to 1e-9.
pub const DEFAULT_ENUM_GRID: usize = 60;

// ---------------------------------------------------------------------------
// Grid minimization over the two-point mass
// ---------------------------------------------------------------------------

/// Result of a one-dimensional grid minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearchResult {
    /// Argmin over the grid (ties resolve to the smaller argument).
    pub best_p: f64,
    pub best_value: f64,
    pub grid_step: f64,
    pub bracket: (f64, f64),
}

/// Minimizes the two-point step objective
/// `mu + (t_next - mu) p + sqrt(p(1-p)) sigma` over a uniform grid of the
/// closed interval `p_interval` (both endpoints included). The true
/// minimum sits at an interval endpoint, so with the endpoints on the
/// grid the result is exact up to float evaluation.
pub fn grid_min_two_point(
    t_next: f64,
    mu: f64,
    sigma: f64,
    p_interval: (f64, f64),
    grid_points: usize,
) -> Result<GridSearchResult> {
    let (lo, hi) = p_interval;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::InvalidParameter(format!("bad p interval ({lo}, {hi})")));
    }
    if lo == hi {
        return Ok(GridSearchResult {
            best_p: lo,
            best_value: two_point_step_objective(t_next, mu, sigma, lo),
            grid_step: 0.0,
            bracket: (lo, hi),
        });
    }
    if grid_points < 3 {
        return Err(Error::InvalidParameter(format!(
            "grid_points must be at least 3, got {grid_points}"
        )));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut best_p = lo;
    let mut best_value = f64::INFINITY;
    for k in 0..grid_points {
        // Hit the right endpoint exactly on the last node.
        let p = if k + 1 == grid_points { hi } else { lo + step * k as f64 };
        let v = two_point_step_objective(t_next, mu, sigma, p);
        if v < best_value {
            best_value = v;
            best_p = p;
        }
    }
    Ok(GridSearchResult { best_p, best_value, grid_step: step, bracket: (lo, hi) })
}

// ---------------------------------------------------------------------------
// Support enumeration
// ---------------------------------------------------------------------------

/// Best distribution found by support enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSearchResult {
    pub distribution: DiscreteDistribution,
    pub value: f64,
    pub grid_step: f64,
}

struct MomentFamily {
    mu: f64,
    q2: f64,
    upper: f64,
    is_mad: bool,
    /// Two-point specs restrict nature to two atoms; everything else
    /// allows the full three-point extremals.
    max_atoms: usize,
}

impl MomentFamily {
    fn from_spec(spec: &ValidatedSpec) -> Result<Self> {
        let upper = spec.effective_support_upper();
        if !upper.is_finite() {
            return Err(Error::PreconditionViolated(
                "support enumeration needs a finite support bound".into(),
            ));
        }
        match spec.kind {
            SpecKind::MeanVarSupport | SpecKind::TwoPointMeanVarSupport => Ok(Self {
                mu: spec.mu,
                q2: spec.mu * spec.mu + spec.sigma2.unwrap(),
                upper,
                is_mad: false,
                max_atoms: if spec.kind == SpecKind::TwoPointMeanVarSupport { 2 } else { 3 },
            }),
            SpecKind::MeanMadSupport => Ok(Self {
                mu: spec.mu,
                q2: spec.mad.unwrap(),
                upper,
                is_mad: true,
                max_atoms: 3,
            }),
            _ => Err(Error::PreconditionViolated(format!(
                "support enumeration needs a dispersion constraint and a bound, got kind {}",
                spec.kind.name()
            ))),
        }
    }

    fn phi(&self, x: f64) -> f64 {
        if self.is_mad {
            (x - self.mu).abs()
        } else {
            x * x
        }
    }

    /// Uniform grid of `[0, upper]` augmented with the exact candidate
    /// points of the closed forms, sorted and deduplicated.
    fn candidate_points(&self, grid_points: usize, focal: f64) -> Vec<f64> {
        let n = grid_points.max(3);
        let mut pts: Vec<f64> = (0..n).map(|k| self.upper * k as f64 / (n - 1) as f64).collect();
        pts.push(focal.clamp(0.0, self.upper));
        pts.push(self.mu);
        if self.is_mad {
            let bp = mad_breakpoints(self.mu, self.q2, self.upper);
            pts.push(bp.xi1.clamp(0.0, self.upper));
            pts.push(bp.xi2.clamp(0.0, self.upper));
        } else {
            let sigma2 = self.q2 - self.mu * self.mu;
            pts.push((self.mu + sigma2 / self.mu).clamp(0.0, self.upper));
            pts.push((self.mu - sigma2 / (self.upper - self.mu)).clamp(0.0, self.upper));
        }
        pts.sort_by(f64::total_cmp);
        let tol = crate::ambiguity::atom_merge_tolerance(self.upper);
        pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        pts
    }
}

/// Exhaustive optimization of `sum p f(x)` over all feasible supports with
/// at most three points from the candidate set; `maximize` flips the
/// direction. Ties keep the first candidate in enumeration order
/// (supports are visited in lexicographic order).
fn enumerate_opt(
    family: &MomentFamily,
    points: &[f64],
    objective: &dyn Fn(f64) -> f64,
    maximize: bool,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let phi = |x: f64| family.phi(x);
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut consider = |support: &[f64], probs: Vec<f64>| {
        let mut value = 0.0;
        for (x, p) in support.iter().zip(&probs) {
            value += p.clamp(0.0, 1.0) * objective(*x);
        }
        if best.as_ref().is_none_or(|(_, _, bv)| sign * value > sign * bv) {
            best = Some((support.to_vec(), probs, value));
        }
    };

    let m = points.len();
    for i in 0..m {
        if let Some(p) = moment_probs(&points[i..=i], family.mu, family.q2, &phi, 1e-9) {
            consider(&points[i..=i], p);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let support = [points[i], points[j]];
            if let Some(p) = moment_probs(&support, family.mu, family.q2, &phi, 1e-9) {
                if p.iter().all(|&v| (-ENUM_FEAS_TOL..=1.0 + ENUM_FEAS_TOL).contains(&v)) {
                    consider(&support, p);
                }
            }
        }
    }
    if family.max_atoms >= 3 {
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    let support = [points[i], points[j], points[k]];
                    if let Some(p) = moment_probs(&support, family.mu, family.q2, &phi, 1e-9) {
                        if p.iter().all(|&v| (-ENUM_FEAS_TOL..=1.0 + ENUM_FEAS_TOL).contains(&v)) {
                            consider(&support, p);
                        }
                    }
                }
            }
        }
    }
    best
}

fn package(
    family: &MomentFamily,
    grid_points: usize,
    best: Option<(Vec<f64>, Vec<f64>, f64)>,
) -> Result<ExtremalSearchResult> {
    let (support, probs, value) = best.ok_or(Error::NoFeasibleCandidate)?;
    let atoms = support
        .iter()
        .zip(&probs)
        .map(|(&x, &p)| (x, p.clamp(0.0, 1.0)))
        .collect();
    Ok(ExtremalSearchResult {
        distribution: DiscreteDistribution::new(atoms)?,
        value,
        grid_step: family.upper / (grid_points.max(3) - 1) as f64,
    })
}

/// Maximizes `E[min(xi, X)]` over the spec's ambiguity set by support
/// enumeration. With `grid_points` around [`DEFAULT_ENUM_GRID`] and the
/// exact candidates injected this matches the closed-form bounds to 1e-9.
pub fn enumerate_extremal(
    spec: &ValidatedSpec,
    xi: f64,
    grid_points: usize,
) -> Result<ExtremalSearchResult> {
    let family = MomentFamily::from_spec(spec)?;
    if !(0.0..=family.upper * (1.0 + 1e-12)).contains(&xi) {
        return Err(Error::XiOutOfRange { xi, upper: family.upper });
    }
    let points = family.candidate_points(grid_points, xi);
    let best = enumerate_opt(&family, &points, &|x| xi.min(x), true);
    package(&family, grid_points, best)
}

/// Minimizes `P(X >= t)` over the spec's ambiguity set by the same
/// enumeration with the step objective `1{x >= t}`.
pub fn enumerate_min_tail(
    spec: &ValidatedSpec,
    t: f64,
    grid_points: usize,
) -> Result<ExtremalSearchResult> {
    let family = MomentFamily::from_spec(spec)?;
    let points = family.candidate_points(grid_points, t);
    let best = enumerate_opt(&family, &points, &|x| if x >= t { 1.0 } else { 0.0 }, false);
    package(&family, grid_points, best)
}

// ---------------------------------------------------------------------------
// Certificate verification
// ---------------------------------------------------------------------------

/// Per-check discrepancies for a moment-bound certificate; every field is
/// an absolute error and should stay below 1e-9 for a valid certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub mean_error: f64,
    pub dispersion_error: f64,
    pub support_violation: f64,
    pub primal_gap: f64,
    pub dual_gap: f64,
    pub majorant_violation: f64,
    /// False when the certificate's dual basis does not match the spec's
    /// dispersion measure; the report then fails regardless of the numbers.
    pub basis_matches_spec: bool,
}

impl CertificateCheck {
    pub fn max_discrepancy(&self) -> f64 {
        if !self.basis_matches_spec {
            return f64::INFINITY;
        }
        self.mean_error
            .max(self.dispersion_error)
            .max(self.support_violation)
            .max(self.primal_gap)
            .max(self.dual_gap)
            .max(self.majorant_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_discrepancy() <= tol
    }
}

/// Checks primal membership, primal and dual objective agreement with the
/// certified value, and majorant feasibility on a `grid_points` grid.
pub fn verify_certificate(
    cert: &MomentBoundCertificate,
    spec: &ValidatedSpec,
    grid_points: usize,
) -> CertificateCheck {
    let moments = cert.primal.moments();
    let mean_error = (moments.mean - spec.mu).abs();
    let (dispersion_error, q2, basis_matches_spec) = match cert.dual.basis {
        MajorantBasis::Polynomial2 => match spec.sigma2 {
            Some(s2) => (
                (moments.variance - s2).abs(),
                spec.mu * spec.mu + s2,
                spec.kind.uses_variance(),
            ),
            None => (f64::INFINITY, f64::NAN, false),
        },
        MajorantBasis::MadBasis { center } => match spec.mad {
            Some(d) => (
                (moments.mad - d).abs(),
                d,
                spec.kind.uses_mad() && (center - spec.mu).abs() <= 1e-12,
            ),
            None => (f64::INFINITY, f64::NAN, false),
        },
    };
    let upper = spec.effective_support_upper();
    let support_violation = if upper.is_finite() { cert.primal.support_violation(upper) } else { 0.0 };
    let primal_gap = (cert.primal_objective() - cert.value).abs();
    let dual_gap = if basis_matches_spec {
        (cert.dual.objective(spec.mu, q2) - cert.value).abs()
    } else {
        f64::INFINITY
    };
    let domain = if upper.is_finite() {
        upper
    } else {
        2.0 * cert.xi.max(cert.primal.max_point()).max(spec.mu)
    };
    let majorant_violation = check_majorant(&cert.dual, cert.xi, domain, grid_points).max(0.0);
    CertificateCheck {
        mean_error,
        dispersion_error,
        support_violation,
        primal_gap,
        dual_gap,
        majorant_violation,
        basis_matches_spec,
    }
}

/// Convenience wrapper: the dual objective of an arbitrary majorant against
/// the spec's moments (used for weak-duality checks).
pub fn dual_objective(spec: &ValidatedSpec, m: &Majorant) -> f64 {
    let q2 = match m.basis {
        MajorantBasis::Polynomial2 => spec.mu * spec.mu + spec.sigma2.unwrap_or(0.0),
        MajorantBasis::MadBasis { .. } => spec.mad.unwrap_or(0.0),
    };
    m.objective(spec.mu, q2)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::{feasible_p_interval, AmbiguitySpec};
    use crate::momentbound::{mad_upper_bound, mad_worst_case, mvs_upper_bound, mvs_worst_case};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn grid_min_degenerate_interval() {
        let r = grid_min_two_point(1.0, 1.0, 1.0, (0.5, 0.5), 99).unwrap();
        assert_eq!(r.best_p, 0.5);
        assert!(close(r.best_value, 1.5, 1e-15));
    }

    #[test]
    fn grid_min_first_step_argmin_at_upper_endpoint() {
        // Generous support bound: the first backward step minimizes at p_hi.
        let (lo, hi) = feasible_p_interval(1.0, 1.3f64.sqrt(), 5.0).unwrap();
        let r = grid_min_two_point(1.0, 1.0, 1.3f64.sqrt(), (lo, hi), 10_001).unwrap();
        assert_eq!(r.best_p, hi);
    }

    #[test]
    fn grid_min_late_steps_argmin_at_lower_endpoint() {
        // Near the asymptote the lower endpoint wins.
        let (lo, hi) = feasible_p_interval(1.0, 1.3f64.sqrt(), 5.0).unwrap();
        let t_next = 2.29;
        let r = grid_min_two_point(t_next, 1.0, 1.3f64.sqrt(), (lo, hi), 10_001).unwrap();
        assert_eq!(r.best_p, lo);
        assert!(r.best_value <= two_point_step_objective(t_next, 1.0, 1.3f64.sqrt(), lo) + 1e-15);
    }

    #[test]
    fn grid_min_argmin_is_an_endpoint() {
        // Endpoint optimality up to grid resolution, across random steps.
        let (lo, hi) = feasible_p_interval(2.0, 1.1, 7.0).unwrap();
        for &t in &[2.0, 2.2, 2.45, 2.6] {
            let r = grid_min_two_point(t, 2.0, 1.1, (lo, hi), 4001).unwrap();
            let to_edge = (r.best_p - lo).abs().min((r.best_p - hi).abs());
            assert!(to_edge <= r.grid_step + 1e-15, "argmin {} strays inside", r.best_p);
        }
    }

    #[test]
    fn enumeration_matches_mvs_closed_form() {
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        let r = enumerate_extremal(&spec, 1.0, 200).unwrap();
        assert!(close(r.value, 5.0 / 6.0, 1e-9));
        assert!(close(r.value, mvs_upper_bound(1.0, 0.5, 3.0, 1.0).unwrap(), 1e-9));
    }

    #[test]
    fn enumeration_matches_mad_closed_form() {
        let spec = AmbiguitySpec::mean_mad_support(1.0, 0.5, 4.0).validate().unwrap();
        let r = enumerate_extremal(&spec, 1.2, DEFAULT_ENUM_GRID).unwrap();
        assert!(close(r.value, 0.9, 1e-9));
        assert!(close(r.value, mad_upper_bound(1.0, 0.5, 4.0, 1.2).unwrap(), 1e-9));
    }

    #[test]
    fn enumeration_at_zero_is_zero() {
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        let r = enumerate_extremal(&spec, 0.0, 60).unwrap();
        assert!(close(r.value, 0.0, 1e-12));
    }

    #[test]
    fn enumeration_handles_degenerate_variance() {
        // sigma2 = 0 leaves only the point mass at the mean (a singleton
        // candidate), so the bound is min(xi, mu).
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.0, 3.0).validate().unwrap();
        let r = enumerate_extremal(&spec, 2.0, 40).unwrap();
        assert!(close(r.value, 1.0, 1e-12));
        assert_eq!(r.distribution.atoms(), &[(1.0, 1.0)]);
        let r = enumerate_extremal(&spec, 0.4, 40).unwrap();
        assert!(close(r.value, 0.4, 1e-12));
    }

    #[test]
    fn enumeration_requires_finite_bound() {
        let spec = AmbiguitySpec::mean_mad(1.0, 0.5).validate().unwrap();
        assert!(matches!(
            enumerate_extremal(&spec, 1.0, 60),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn min_tail_stays_above_uniform_bound() {
        // Every gridded member keeps at least the uniform lower bound of
        // tail mass at mu + sigma2/mu - eps.
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        let eps = 0.15;
        let t = 1.0 + 0.5 - eps;
        let q = crate::momentbound::tail_lower_bound(1.0, 0.5, 3.0, eps).unwrap();
        let r = enumerate_min_tail(&spec, t, DEFAULT_ENUM_GRID).unwrap();
        assert!(
            r.value >= q - 1e-12,
            "gridded minimum {} fell below the bound {q}",
            r.value
        );
    }

    #[test]
    fn verify_accepts_real_certificates() {
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        for xi in [0.0, 0.2, 0.8, 1.0, 1.5, 2.0, 3.0] {
            let cert = mvs_worst_case(1.0, 0.5, 3.0, xi).unwrap();
            let check = verify_certificate(&cert, &spec, 10_000);
            assert!(check.passes(1e-9), "xi = {xi}: {check:?}");
        }
        let spec = AmbiguitySpec::mean_mad_support(1.0, 0.5, 4.0).validate().unwrap();
        for xi in [0.0, 0.3, 0.7, 1.0, 1.2, 4.0 / 3.0, 2.5, 4.0] {
            let cert = mad_worst_case(1.0, 0.5, 4.0, xi).unwrap();
            let check = verify_certificate(&cert, &spec, 10_000);
            assert!(check.passes(1e-9), "xi = {xi}: {check:?}");
        }
    }

    #[test]
    fn verify_flags_perturbed_primal() {
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        let cert = mvs_worst_case(1.0, 0.5, 3.0, 1.0).unwrap();
        let mut atoms: Vec<(f64, f64)> = cert.primal.atoms().to_vec();
        atoms[0].1 += 1e-3;
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        let perturbed = MomentBoundCertificate {
            primal: DiscreteDistribution::new(atoms).unwrap(),
            ..cert.clone()
        };
        let check = verify_certificate(&perturbed, &spec, 1000);
        assert!(check.mean_error > 1e-4 || check.dispersion_error > 1e-4);
        assert!(!check.passes(1e-9));
    }

    #[test]
    fn verify_flags_perturbed_dual() {
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        let mut cert = mvs_worst_case(1.0, 0.5, 3.0, 1.0).unwrap();
        cert.dual.lambda1 += 1e-3;
        let check = verify_certificate(&cert, &spec, 1000);
        assert!(check.dual_gap > 1e-4);
        assert!(!check.passes(1e-9));
    }

    #[test]
    fn verify_flags_basis_mismatch() {
        let mad_spec = AmbiguitySpec::mean_mad_support(1.0, 0.5, 3.0).validate().unwrap();
        let cert = mvs_worst_case(1.0, 0.5, 3.0, 1.0).unwrap();
        let check = verify_certificate(&cert, &mad_spec, 100);
        assert!(!check.basis_matches_spec);
        assert_eq!(check.max_discrepancy(), f64::INFINITY);
    }

    #[test]
    fn weak_duality_on_grid() {
        // The enumerated primal value never exceeds the dual objective of
        // a feasible majorant.
        let spec = AmbiguitySpec::mean_var_support(1.0, 0.5, 3.0).validate().unwrap();
        for xi in [0.3, 0.9, 1.2, 1.8] {
            let cert = mvs_worst_case(1.0, 0.5, 3.0, xi).unwrap();
            assert!(check_majorant(&cert.dual, xi, 3.0, 10_000) <= 1e-9);
            let enumerated = enumerate_extremal(&spec, xi, 80).unwrap();
            assert!(enumerated.value <= dual_objective(&spec, &cert.dual) + 1e-9);
        }
    }
}
