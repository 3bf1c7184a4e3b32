//! Tight bounds on `E[min(xi, X)]` over moment ambiguity sets.
//!
//! Both bound families solve a three-constraint semi-infinite program
//!
//! ```text
//! max_P E[min(xi, X)]   s.t.  E[1] = 1,  E[X] = mu,  E[phi(X)] = q2
//! ```
//!
//! with `phi(x) = x^2` (variance family) or `phi(x) = |x - mu|` (MAD
//! family), support in `[0, L]`. Each regime of the closed form comes with
//! a primal extremal distribution on at most three points and a dual
//! majorant `M(x) = l0 + l1 x + l2 phi(x) >= min(xi, x)` whose
//! moment-weighted objective matches the primal value: a strong-duality
//! certificate that [`crate::oracle::verify_certificate`] can check.
//!
//! Variance family (`phi = x^2`), breakpoints `mu - sigma2/(L-mu)` and
//! `mu + sigma2/mu`:
//!
//! ```text
//! xi <= mu - sigma2/(L-mu):  value xi,  majorant xi,        support {xi, mu, L}
//! middle regime:             value (mu(L+xi) - mu^2 - sigma2)/L,
//!                            majorant (L+xi)x/L - x^2/L,    support {0, xi, L}
//! xi >= mu + sigma2/mu:      value mu,  majorant x,         support {0, mu, xi}
//! ```
//!
//! MAD family (`phi = |x - mu|`), breakpoints `xi1` and
//! `xi2 = mu + d mu/(2mu - d)`: see [`mad_breakpoints`] for the two `xi1`
//! candidates floating around and how the tie is adjudicated.

use crate::ambiguity::{atom_merge_tolerance, AmbiguitySpec, DiscreteDistribution};
use crate::error::{Error, Result};

/// Certificates are tight to this tolerance (primal = dual = value).
pub const CERT_TOL: f64 = 1e-9;

/// Probabilities from a regime construction may stray this far outside
/// [0, 1] before the regime is declared misclassified.
pub const FEAS_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Majorant
// ---------------------------------------------------------------------------

/// Basis of the dual majorant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MajorantBasis {
    /// Functions `{1, x, x^2}`.
    Polynomial2,
    /// Functions `{1, x, |x - center|}`.
    MadBasis { center: f64 },
}

impl MajorantBasis {
    pub fn name(self) -> &'static str {
        match self {
            MajorantBasis::Polynomial2 => "polynomial2",
            MajorantBasis::MadBasis { .. } => "mad",
        }
    }
}

/// A dual-feasible function `M(x) = l0 + l1 x + l2 phi(x)` dominating
/// `min(xi, x)` on the support interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majorant {
    pub basis: MajorantBasis,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Majorant {
    pub fn new(basis: MajorantBasis, lambda0: f64, lambda1: f64, lambda2: f64) -> Self {
        Self { basis, lambda0, lambda1, lambda2 }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let phi = match self.basis {
            MajorantBasis::Polynomial2 => x * x,
            MajorantBasis::MadBasis { center } => (x - center).abs(),
        };
        self.lambda0 + self.lambda1 * x + self.lambda2 * phi
    }

    /// Dual objective `l0 + l1 mu + l2 q2` where `q2` is the second
    /// moment (variance basis) or the MAD (MAD basis).
    pub fn objective(&self, mu: f64, q2: f64) -> f64 {
        self.lambda0 + self.lambda1 * mu + self.lambda2 * q2
    }

    pub fn lambdas(&self) -> [f64; 3] {
        [self.lambda0, self.lambda1, self.lambda2]
    }
}

/// Largest violation `min(xi, x) - M(x)` over a uniform grid of `[0, upper]`.
/// Certified majorants stay below 1e-9; a negative return means the
/// majorant dominates strictly on the grid.
pub fn check_majorant(m: &Majorant, xi: f64, upper: f64, grid_points: usize) -> f64 {
    let n = grid_points.max(2);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..n {
        let x = upper * k as f64 / (n - 1) as f64;
        let v = xi.min(x) - m.evaluate(x);
        if v > worst {
            worst = v;
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

/// Tight bound value with the extremal distribution attaining it and the
/// dual majorant certifying it.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBoundCertificate {
    /// The tight bound on `E[min(xi, X)]`.
    pub value: f64,
    /// 1-based piecewise regime, counted in increasing `xi`: 1..=3 for the
    /// variance family, 1..=4 for the MAD family.
    pub regime: u8,
    /// The bound argument.
    pub xi: f64,
    /// Worst-case distribution; member of the ambiguity set.
    pub primal: DiscreteDistribution,
    /// Dual majorant with matching objective.
    pub dual: Majorant,
}

impl MomentBoundCertificate {
    /// `sum_i p_i min(xi, x_i)` recomputed from the primal atoms.
    pub fn primal_objective(&self) -> f64 {
        let xi = self.xi;
        self.primal.expectation(|x| xi.min(x))
    }

    pub fn regime_name(&self) -> &'static str {
        match (self.dual.basis, self.regime) {
            (MajorantBasis::Polynomial2, 1) => "low",
            (MajorantBasis::Polynomial2, 2) => "middle",
            (MajorantBasis::Polynomial2, 3) => "high",
            (MajorantBasis::MadBasis { .. }, 1) => "below-xi1",
            (MajorantBasis::MadBasis { .. }, 2) => "xi1-to-mu",
            (MajorantBasis::MadBasis { .. }, 3) => "mu-to-xi2",
            (MajorantBasis::MadBasis { .. }, 4) => "above-xi2",
            _ => "unknown",
        }
    }
}

// ---------------------------------------------------------------------------
// Moment systems on a fixed support
// ---------------------------------------------------------------------------

/// Solves `sum p = 1, sum p x = mu, sum p phi(x) = q2` on one to three
/// support points. Three points give a square system (partial pivoting);
/// with fewer points the mass/mean equations are solved and the `q2`
/// equation must hold within `residual_tol`. Returns raw probabilities
/// (possibly outside [0, 1]) or `None` when singular/inconsistent.
pub(crate) fn moment_probs(
    points: &[f64],
    mu: f64,
    q2: f64,
    phi: &dyn Fn(f64) -> f64,
    residual_tol: f64,
) -> Option<Vec<f64>> {
    match points {
        [x] => {
            let scale = mu.abs().max(1.0);
            if (x - mu).abs() <= residual_tol * scale
                && (phi(*x) - q2).abs() <= residual_tol * q2.abs().max(scale)
            {
                Some(vec![1.0])
            } else {
                None
            }
        }
        [x1, x2] => {
            let span = x2 - x1;
            if span.abs() < 1e-300 {
                return None;
            }
            let p1 = (x2 - mu) / span;
            let p2 = 1.0 - p1;
            let residual = p1 * phi(*x1) + p2 * phi(*x2) - q2;
            if residual.abs() <= residual_tol * q2.abs().max(mu.abs().max(1.0)) {
                Some(vec![p1, p2])
            } else {
                None
            }
        }
        [_, _, _] => {
            let mut a = [[0.0f64; 4]; 3];
            for (j, &x) in points.iter().enumerate() {
                a[0][j] = 1.0;
                a[1][j] = x;
                a[2][j] = phi(x);
            }
            a[0][3] = 1.0;
            a[1][3] = mu;
            a[2][3] = q2;
            solve3(&mut a).map(|p| p.to_vec())
        }
        _ => None,
    }
}

/// 3x3 Gaussian elimination with partial pivoting on an augmented matrix.
fn solve3(a: &mut [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col];
        for row in a.iter_mut().skip(col + 1) {
            let factor = row[col] / pivot_row[col];
            for (k, entry) in row.iter_mut().enumerate().skip(col) {
                *entry -= factor * pivot_row[k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = a[row][3];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Dedupes nearby support points, solves the moment system and packages a
/// distribution, rejecting probabilities outside `[-FEAS_TOL, 1+FEAS_TOL]`.
fn extremal_on_support(
    points: &[f64],
    mu: f64,
    q2: f64,
    phi: &dyn Fn(f64) -> f64,
) -> Result<DiscreteDistribution> {
    let scale = points.iter().cloned().fold(1.0f64, f64::max);
    let tol = atom_merge_tolerance(scale);
    let mut support: Vec<f64> = Vec::with_capacity(points.len());
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    for x in sorted {
        if support.last().is_none_or(|&last| x - last > tol) {
            support.push(x);
        }
    }
    let probs = moment_probs(&support, mu, q2, phi, CERT_TOL).ok_or_else(|| {
        Error::InfeasibleSupportTriple { support: support.clone(), prob: f64::NAN }
    })?;
    for &p in &probs {
        if !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&p) {
            return Err(Error::InfeasibleSupportTriple { support, prob: p });
        }
    }
    let atoms = support
        .iter()
        .zip(&probs)
        .map(|(&x, &p)| (x, p.clamp(0.0, 1.0)))
        .collect();
    DiscreteDistribution::new(atoms)
}

// ---------------------------------------------------------------------------
// Variance family
// ---------------------------------------------------------------------------

fn check_xi(xi: f64, upper: f64) -> Result<f64> {
    let slack = atom_merge_tolerance(if upper.is_finite() { upper } else { 1.0 });
    if !xi.is_finite() || xi < -slack || xi > upper + slack {
        return Err(Error::XiOutOfRange { xi, upper });
    }
    Ok(xi.clamp(0.0, upper))
}

/// Tight upper bound on `E[min(xi, X)]` over all distributions with mean
/// `mu`, variance `sigma2` and support in `[0, upper]`.
pub fn mvs_upper_bound(mu: f64, sigma2: f64, upper: f64, xi: f64) -> Result<f64> {
    AmbiguitySpec::mean_var_support(mu, sigma2, upper).validate()?;
    let xi = check_xi(xi, upper)?;
    if sigma2 == 0.0 {
        return Ok(xi.min(mu));
    }
    let lo = mu - sigma2 / (upper - mu);
    let hi = mu + sigma2 / mu;
    Ok(if xi <= lo {
        xi
    } else if xi <= hi {
        (mu * (upper + xi) - (mu * mu + sigma2)) / upper
    } else {
        mu
    })
}

/// As [`mvs_upper_bound`], with the extremal distribution and the dual
/// majorant attached.
pub fn mvs_worst_case(mu: f64, sigma2: f64, upper: f64, xi: f64) -> Result<MomentBoundCertificate> {
    let value = mvs_upper_bound(mu, sigma2, upper, xi)?;
    let xi = check_xi(xi, upper)?;
    let q2 = mu * mu + sigma2;
    let phi = |x: f64| x * x;
    let basis = MajorantBasis::Polynomial2;

    if sigma2 == 0.0 {
        let (regime, dual) = if xi <= mu {
            (1, Majorant::new(basis, xi, 0.0, 0.0))
        } else {
            (3, Majorant::new(basis, 0.0, 1.0, 0.0))
        };
        return Ok(MomentBoundCertificate {
            value,
            regime,
            xi,
            primal: DiscreteDistribution::point_mass(mu),
            dual,
        });
    }

    let lo = mu - sigma2 / (upper - mu);
    let hi = mu + sigma2 / mu;
    let (regime, primal, dual) = if xi <= lo {
        let primal = extremal_on_support(&[xi, mu, upper], mu, q2, &phi)?;
        (1, primal, Majorant::new(basis, xi, 0.0, 0.0))
    } else if xi <= hi {
        let dual = Majorant::new(basis, 0.0, (upper + xi) / upper, -1.0 / upper);
        let primal = if upper - xi <= atom_merge_tolerance(upper) {
            // xi has reached the support bound (only possible when
            // sigma2 = mu*(upper - mu)); the three-point form collapses.
            extremal_on_support(&[0.0, upper], mu, q2, &phi)?
        } else {
            let p0 = (upper * xi - (upper + xi) * mu + q2) / (upper * xi);
            let p_xi = (upper * mu - q2) / ((upper - xi) * xi);
            let p_up = (q2 - xi * mu) / ((upper - xi) * upper);
            build_primal(&[0.0, xi, upper], &[p0, p_xi, p_up])?
        };
        (2, primal, dual)
    } else {
        let primal = extremal_on_support(&[0.0, mu, xi], mu, q2, &phi)?;
        (3, primal, Majorant::new(basis, 0.0, 1.0, 0.0))
    };
    Ok(MomentBoundCertificate { value, regime, xi, primal, dual })
}

fn build_primal(points: &[f64], probs: &[f64]) -> Result<DiscreteDistribution> {
    for &p in probs {
        if !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&p) {
            return Err(Error::InfeasibleSupportTriple { support: points.to_vec(), prob: p });
        }
    }
    let atoms = points.iter().zip(probs).map(|(&x, &p)| (x, p.clamp(0.0, 1.0))).collect();
    DiscreteDistribution::new(atoms)
}

// ---------------------------------------------------------------------------
// MAD family
// ---------------------------------------------------------------------------

/// Regime breakpoints of the mean-MAD-support bound.
///
/// Two candidate formulas for the lower breakpoint circulate:
///
/// ```text
/// statement:  xi1 = mu - d (L - mu) / (2 (L - mu) - d)
/// variant:    xi1 = mu - d L / (2 (L - mu))
/// ```
///
/// The statement value is the exact threshold at which the `{0, xi, L}`
/// three-point construction of the middle-low regime stops being a
/// distribution (its mass at 0 turns negative), and it is where the two
/// adjacent closed forms cross; the enumeration oracle confirms it. `xi1`
/// is therefore the statement value; the variant is kept for diagnosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MadBreakpoints {
    /// Adjudicated lower breakpoint (equals `xi1_statement`).
    pub xi1: f64,
    pub xi1_statement: f64,
    pub xi1_variant: f64,
    /// Upper breakpoint `mu + d mu / (2 mu - d)`.
    pub xi2: f64,
}

pub fn mad_breakpoints(mu: f64, d: f64, upper: f64) -> MadBreakpoints {
    let xi2 = mu + d * mu / (2.0 * mu - d);
    let (xi1_statement, xi1_variant) = if upper.is_finite() {
        let gap = upper - mu;
        (mu - d * gap / (2.0 * gap - d), mu - d * upper / (2.0 * gap))
    } else {
        (mu - d / 2.0, mu - d / 2.0)
    };
    MadBreakpoints { xi1: xi1_statement, xi1_statement, xi1_variant, xi2 }
}

fn validate_mad(mu: f64, d: f64, upper: f64) -> Result<()> {
    if upper.is_finite() {
        AmbiguitySpec::mean_mad_support(mu, d, upper).validate()?;
    } else {
        AmbiguitySpec::mean_mad(mu, d).validate()?;
    }
    Ok(())
}

/// Tight upper bound on `E[min(xi, X)]` over all distributions with mean
/// `mu`, mean absolute deviation `d` and support in `[0, upper]`.
///
/// `upper` may be `f64::INFINITY`: the regimes with `xi >= mu` are free of
/// the support bound and `xi = 0` is trivially 0, which is all the
/// threshold recursion ever visits; the bound for `0 < xi < mu` without a
/// support cap is not defined here and reports an error.
pub fn mad_upper_bound(mu: f64, d: f64, upper: f64, xi: f64) -> Result<f64> {
    validate_mad(mu, d, upper)?;
    let xi = check_xi(xi, upper)?;
    if d == 0.0 {
        return Ok(xi.min(mu));
    }
    let bp = mad_breakpoints(mu, d, upper);
    if !upper.is_finite() {
        return if xi == 0.0 {
            Ok(0.0)
        } else if xi < mu {
            Err(Error::PreconditionViolated(format!(
                "mean-MAD bound without a support cap is undefined for 0 < xi < mu (xi = {xi})"
            )))
        } else if xi <= bp.xi2 {
            Ok(xi - d * xi / (2.0 * mu))
        } else {
            Ok(mu)
        };
    }
    Ok(if xi <= bp.xi1 {
        xi
    } else if xi <= mu {
        mu - d * (upper - xi) / (2.0 * (upper - mu))
    } else if xi <= bp.xi2 {
        xi - d * xi / (2.0 * mu)
    } else {
        mu
    })
}

/// As [`mad_upper_bound`], with the extremal distribution and the dual
/// majorant attached.
pub fn mad_worst_case(mu: f64, d: f64, upper: f64, xi: f64) -> Result<MomentBoundCertificate> {
    let value = mad_upper_bound(mu, d, upper, xi)?;
    let xi = check_xi(xi, upper)?;
    let basis = MajorantBasis::MadBasis { center: mu };
    let phi = |x: f64| (x - mu).abs();

    if d == 0.0 {
        let (regime, dual) = if xi <= mu {
            (1, Majorant::new(basis, xi, 0.0, 0.0))
        } else {
            (4, Majorant::new(basis, 0.0, 1.0, 0.0))
        };
        return Ok(MomentBoundCertificate {
            value,
            regime,
            xi,
            primal: DiscreteDistribution::point_mass(mu),
            dual,
        });
    }

    let bp = mad_breakpoints(mu, d, upper);
    let two_point = || -> Result<DiscreteDistribution> {
        let p0 = d / (2.0 * mu);
        build_primal(&[0.0, bp.xi2], &[p0, 1.0 - p0])
    };

    if !upper.is_finite() {
        if xi == 0.0 {
            // E[min(0, X)] = 0 for every member; the fixed two-point
            // member doubles as the primal and the zero majorant is tight.
            return Ok(MomentBoundCertificate {
                value,
                regime: 1,
                xi,
                primal: two_point()?,
                dual: Majorant::new(basis, 0.0, 0.0, 0.0),
            });
        }
        if xi < mu {
            return Err(Error::PreconditionViolated(format!(
                "mean-MAD worst case without a support cap is undefined for 0 < xi < mu (xi = {xi})"
            )));
        }
    }

    let (regime, primal, dual) = if upper.is_finite() && xi <= bp.xi1 {
        let primal = extremal_on_support(&[xi, mu, upper], mu, d, &phi)?;
        (1, primal, Majorant::new(basis, xi, 0.0, 0.0))
    } else if upper.is_finite() && xi <= mu {
        let gap2 = 2.0 * (upper - mu);
        let p0 = 1.0 - mu / xi + d * (upper - xi) / (2.0 * xi * (upper - mu));
        let p_xi = mu / xi - d * upper / (2.0 * xi * (upper - mu));
        let p_up = d / gap2;
        let primal = build_primal(&[0.0, xi, upper], &[p0, p_xi, p_up])?;
        let dual = Majorant::new(
            basis,
            mu * (upper - xi) / gap2,
            (upper + xi - 2.0 * mu) / gap2,
            -(upper - xi) / gap2,
        );
        (2, primal, dual)
    } else if xi <= bp.xi2 {
        let dual = Majorant::new(basis, xi / 2.0, xi / (2.0 * mu), -xi / (2.0 * mu));
        (3, two_point()?, dual)
    } else {
        let primal = extremal_on_support(&[0.0, mu, xi], mu, d, &phi)?;
        (4, primal, Majorant::new(basis, 0.0, 1.0, 0.0))
    };
    Ok(MomentBoundCertificate { value, regime, xi, primal, dual })
}

// ---------------------------------------------------------------------------
// Tail bound
// ---------------------------------------------------------------------------

/// Lower bound on `P(X >= mu + sigma2/mu - eps)` holding uniformly over the
/// mean-variance-support set, used by the static-threshold analysis:
///
/// ```text
/// q = eps / (L (L - mu - sigma2/mu))
/// ```
///
/// Requires `sigma2 < mu (L - mu)` strictly and `0 < eps <= mu + sigma2/mu`.
pub fn tail_lower_bound(mu: f64, sigma2: f64, upper: f64, eps: f64) -> Result<f64> {
    AmbiguitySpec::mean_var_support(mu, sigma2, upper).validate()?;
    let b = mu + sigma2 / mu;
    if !(eps > 0.0 && eps <= b) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, {b}], got {eps}")));
    }
    let denom = upper * (upper - b);
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "needs sigma2 < mu*(L - mu) strictly; L - mu - sigma2/mu = {}",
            upper - b
        )));
    }
    Ok((eps / denom).min(1.0))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
