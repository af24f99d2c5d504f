//! Rate function and limit constants.
//!
//! `rate_function` is the convex dual of the cumulant generating function,
//! `sup_l { l z - log E[exp(l Y)] }`. The three limit constants are level
//! crossings of it:
//!
//! * `gamma`: where the rate function falls to `log k` below the mean; the
//!   almost sure limit of `M_m / m` for the branching random walk minimum.
//! * `lambda_k`: the largest `z` with `rate(1/z) <= log k`; the limit of
//!   `D_n / log n` in the DAG.
//! * `beta = max(1 - 1/(k alpha), 0)`; `min D_x / log n -> beta * lambda_k`.

use serde::{Deserialize, Serialize};

use crate::attachment::StepSpec;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
/// Bracket expansion for `lambda_k` stops here.
pub const BRACKET_CAP: f64 = 1e9;
pub const GOLDEN_MAX_ITER: usize = 200;
const BRACKET_MAX_ITER: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub k: u32,
    /// `None` when `rate(1/z)` never reaches `log k` (the constant is infinite).
    pub lambda_k: Option<f64>,
    pub gamma: f64,
    /// Present exactly when `alpha` is.
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub mean_y: f64,
}

impl LimitConstants {
    pub fn compute(spec: &StepSpec, k: u32, tol: f64) -> Result<Self> {
        spec.validate()?;
        let lambda_k = match lambda_k(spec, k, tol) {
            Ok(v) => Some(v),
            Err(Error::NoRoot(_)) => None,
            Err(e) => return Err(e),
        };
        let alpha = spec.exponential_rate();
        let beta = alpha.map(|a| beta(a, k)).transpose()?;
        Ok(LimitConstants {
            k,
            lambda_k,
            gamma: gamma(spec, k, tol)?,
            beta,
            alpha,
            mean_y: spec.mean(),
        })
    }

    /// Limit of the minimum depth over the upper half of the nodes, normalized by `log n`.
    pub fn min_depth_constant(&self) -> Option<f64> {
        Some(self.beta? * self.lambda_k?)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-4 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must lie in (0, 1e-4], got {tol}")))
    }
}

fn is_fair_bernoulli(support: &[f64], probs: &[f64]) -> bool {
    support == [0.0, 1.0] && probs == [0.5, 0.5]
}

/// Rate function at `z`, using closed forms where the spec has one.
pub fn rate_function(spec: &StepSpec, z: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    spec.validate()?;
    if z.is_nan() {
        return Err(Error::Domain("rate function argument is NaN".into()));
    }
    let z = snap_to_support(spec, z);
    match spec.canonical() {
        StepSpec::Exponential { rate } => {
            if z < 0.0 {
                Err(Error::Domain(format!("z = {z} is below the support of an exponential step")))
            } else if z == 0.0 {
                Ok(f64::INFINITY)
            } else {
                let az = rate * z;
                Ok(az - 1.0 - az.ln())
            }
        }
        StepSpec::Lattice { support, probs } if is_fair_bernoulli(&support, &probs) => {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Domain(format!("z = {z} is outside [0, 1]")));
            }
            Ok(xlogx(z) + xlogx(1.0 - z) + std::f64::consts::LN_2)
        }
        _ => legendre_numeric(spec, z, tol),
    }
}

/// Moves `z` onto an endpoint of the support when it is within a few ulps of it,
/// so that `1 / (1 / y)` round trips stay in the domain.
fn snap_to_support(spec: &StepSpec, z: f64) -> f64 {
    for end in [spec.ess_inf(), spec.ess_sup()] {
        if end.is_finite() && (z - end).abs() <= 4.0 * f64::EPSILON * end.abs() {
            return end;
        }
    }
    z
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Rate function, with `+inf` instead of a domain error outside the range of `Y`.
fn rate_or_inf(spec: &StepSpec, z: f64, tol: f64) -> Result<f64> {
    if z < spec.ess_inf() || z > spec.ess_sup() {
        return Ok(f64::INFINITY);
    }
    rate_function(spec, z, tol)
}

/// Rate function by golden-section maximization of `l z - cumulant(l)`.
///
/// Valid for every spec. Closed forms are not consulted, so this serves as an
/// independent route for the analytic cases.
pub fn legendre_numeric(spec: &StepSpec, z: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let z = snap_to_support(spec, z);
    let lo = spec.ess_inf();
    let hi = spec.ess_sup();
    if !(z >= lo && z <= hi) {
        return Err(Error::Domain(format!("z = {z} is outside the range [{lo}, {hi}] of the step")));
    }
    let mean = spec.mean();
    if z == mean {
        return Ok(0.0);
    }
    // At an endpoint of a bounded support the supremum is attained only at infinity.
    if hi.is_finite() && lo < hi && (z == lo || z == hi) {
        return Ok(-spec.atom(z).ln());
    }
    if z == lo && spec.atom(lo) == 0.0 {
        return Ok(f64::INFINITY);
    }

    let objective = |l: f64| -> f64 {
        match spec.cumulant(l) {
            Ok(c) => l * z - c,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let dom_sup = spec.cumulant_domain_sup();
    let next = |t: f64, step: f64| -> f64 {
        if z > mean {
            if dom_sup.is_finite() {
                t + 0.5 * (dom_sup - t)
            } else {
                t + step
            }
        } else {
            t - step
        }
    };

    // Walk outward from 0 until the objective turns down; the maximizer then lies in [a, c].
    let mut step = 1.0;
    let mut a = 0.0;
    let mut b = 0.0;
    let mut fb = 0.0;
    let mut c = next(b, step);
    let mut fc = objective(c);
    let mut expansions = 0;
    while fc > fb {
        expansions += 1;
        if expansions > BRACKET_MAX_ITER {
            return Err(Error::NoRoot(format!("no bracket for the dual maximizer at z = {z}")));
        }
        step *= 2.0;
        a = b;
        b = c;
        fb = fc;
        c = next(c, step);
        fc = objective(c);
    }

    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut best = fb.max(f1).max(f2);
    for _ in 0..GOLDEN_MAX_ITER {
        if hi - lo <= tol * (1.0 + x1.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(x1);
        }
        best = best.max(f1).max(f2);
    }
    Ok(best.max(0.0))
}

/// Almost sure limit of `M_m / m`: `inf { z <= E[Y] : rate(z) < log k }`.
pub fn gamma(spec: &StepSpec, k: u32, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    spec.validate()?;
    if k == 0 {
        return Err(Error::Domain("branching factor k must be at least 1".into()));
    }
    let mean = spec.mean();
    let z_inf = spec.ess_inf();
    if k == 1 || z_inf >= mean {
        return Ok(mean);
    }
    let level = (k as f64).ln();
    if rate_function(spec, z_inf, tol)? <= level {
        return Ok(z_inf);
    }
    // rate is decreasing on (z_inf, mean] and equals 0 at the mean
    let (mut lo, mut hi) = (z_inf, mean);
    // relative width keeps the result invariant under rescaling of Y
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if rate_function(spec, mid, tol)? < level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Limit of `D_n / log n`: `sup { z >= 1/E[Y] : rate(1/z) <= log k }`.
pub fn lambda_k(spec: &StepSpec, k: u32, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    spec.validate()?;
    if k == 0 {
        return Err(Error::Domain("branching factor k must be at least 1".into()));
    }
    let mean = spec.mean();
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Domain(format!("E[Y] must lie in (0, inf), got {mean}")));
    }
    let level = (k as f64).ln();
    let z_inf = spec.ess_inf();
    if z_inf < mean && rate_function(spec, z_inf, tol)? <= level {
        // rate(1/z) jumps to +inf past 1/z_inf, so the sup sits exactly there
        if z_inf > 0.0 {
            return Ok(1.0 / z_inf);
        }
        return Err(Error::NoRoot(format!("rate(1/z) stays below log {k} for every z")));
    }
    let excess = |z: f64| -> Result<f64> { Ok(rate_or_inf(spec, 1.0 / z, tol)? - level) };

    let mut lo = 1.0 / mean;
    let mut hi = 2.0 * lo;
    while excess(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::NoRoot(format!(
                "rate(1/z) stays below log {k} for all z up to {BRACKET_CAP:e}"
            )));
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `max(1 - 1/(k alpha), 0)`.
pub fn beta(alpha: f64, k: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || k == 0 {
        return Err(Error::Domain(format!("beta needs alpha > 0 and k >= 1, got alpha = {alpha}, k = {k}")));
    }
    Ok((1.0 - 1.0 / (k as f64 * alpha)).max(0.0))
}

/// `z log(k e / z) - 1`; for uniform attachment `lambda_k` is the root at or above 1.
pub fn uniform_equation_residual(z: f64, k: u32) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain(format!("z must be positive, got {z}")));
    }
    Ok(z * ((k as f64).ln() + 1.0 - z.ln()) - 1.0)
}
