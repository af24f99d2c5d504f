//! Attachment laws X on [0, 1) and branching-random-walk step laws Y.
//!
//! A DAG node `x` attaches to `floor(x * X)`. Along a path of ancestors the
//! labels shrink multiplicatively, so the relevant additive walk has steps
//! `Y = -log X`. Uniform attachment gives `Y ~ Exponential(1)` and the power
//! law `P(X <= t) = t^alpha` gives `Y ~ Exponential(alpha)`.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a lattice law.
const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttachmentSpec {
    Uniform,
    /// `P(X <= t) = t^alpha`, sampled as `U^(1/alpha)`.
    PowerTail { alpha: f64 },
}

impl AttachmentSpec {
    pub fn power_tail(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Spec(format!("power tail exponent must be positive, got {alpha}")));
        }
        Ok(AttachmentSpec::PowerTail { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AttachmentSpec::Uniform => Ok(()),
            AttachmentSpec::PowerTail { alpha } => Self::power_tail(alpha).map(|_| ()),
        }
    }

    /// Tail exponent alpha with `P(X <= t) = t^alpha`.
    pub fn tail_exponent(&self) -> f64 {
        match *self {
            AttachmentSpec::Uniform => 1.0,
            AttachmentSpec::PowerTail { alpha } => alpha,
        }
    }

    /// Supremum of the density on [0, 1). Infinite when alpha < 1.
    pub fn density_bound(&self) -> f64 {
        match *self {
            AttachmentSpec::Uniform => 1.0,
            AttachmentSpec::PowerTail { alpha } if alpha >= 1.0 => alpha,
            AttachmentSpec::PowerTail { .. } => f64::INFINITY,
        }
    }

    /// `E[-log X]`.
    pub fn mean_log(&self) -> f64 {
        1.0 / self.tail_exponent()
    }

    /// Exact CDF `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        t.clamp(0.0, 1.0).powf(self.tail_exponent())
    }

    /// Inverse-CDF transform of a uniform variate in [0, 1); the result stays in [0, 1).
    #[inline]
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            AttachmentSpec::Uniform => u,
            AttachmentSpec::PowerTail { alpha } => {
                let x = u.powf(1.0 / alpha);
                // powf can round up to exactly 1 for u = 1 - ulp
                if x < 1.0 {
                    x
                } else {
                    1.0 - f64::EPSILON / 2.0
                }
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.from_uniform(rng.random::<f64>())
    }

    /// The step law of `-log X`.
    pub fn step_spec(&self) -> StepSpec {
        StepSpec::FromAttachment { attachment: *self }
    }

    /// Short label used in tables: `uniform` or `power:ALPHA`.
    pub fn label(&self) -> String {
        match *self {
            AttachmentSpec::Uniform => "uniform".to_string(),
            AttachmentSpec::PowerTail { alpha } => format!("power:{alpha}"),
        }
    }
}

/// Nonnegative step law of a branching random walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSpec {
    Exponential { rate: f64 },
    Lattice { support: Vec<f64>, probs: Vec<f64> },
    FromAttachment { attachment: AttachmentSpec },
}

impl StepSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        let spec = StepSpec::Exponential { rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lattice(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let spec = StepSpec::Lattice { support, probs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepSpec::Exponential { rate } => {
                if rate.is_finite() && *rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Spec(format!("exponential rate must be positive, got {rate}")))
                }
            }
            StepSpec::Lattice { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(Error::Spec(
                        "lattice support and probs must be non-empty and of equal length".into(),
                    ));
                }
                if let Some(y) = support.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
                    return Err(Error::Spec(format!("lattice steps must be nonnegative, got {y}")));
                }
                if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::Spec(format!("lattice probabilities must be nonnegative, got {p}")));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::Spec(format!("lattice probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            StepSpec::FromAttachment { attachment: a } => a.validate(),
        }
    }

    /// Collapses `FromAttachment` to the equivalent exponential law.
    pub fn canonical(&self) -> StepSpec {
        match self {
            StepSpec::FromAttachment { attachment: a } => StepSpec::Exponential { rate: a.tail_exponent() },
            other => other.clone(),
        }
    }

    /// Rate of the exponential law, if the step is exponential in law.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.canonical() {
            StepSpec::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    /// `E[Y]`.
    pub fn mean(&self) -> f64 {
        match self.canonical() {
            StepSpec::Exponential { rate } => 1.0 / rate,
            StepSpec::Lattice { support, probs } => {
                support.iter().zip(&probs).map(|(y, p)| y * p).sum()
            }
            StepSpec::FromAttachment { .. } => unreachable!(),
        }
    }

    /// Essential infimum of Y.
    pub fn ess_inf(&self) -> f64 {
        match self.canonical() {
            StepSpec::Exponential { .. } => 0.0,
            StepSpec::Lattice { support, probs } => support
                .iter()
                .zip(&probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(y, _)| *y)
                .fold(f64::INFINITY, f64::min),
            StepSpec::FromAttachment { .. } => unreachable!(),
        }
    }

    /// Essential supremum of Y (infinite for exponential steps).
    pub fn ess_sup(&self) -> f64 {
        match self.canonical() {
            StepSpec::Exponential { .. } => f64::INFINITY,
            StepSpec::Lattice { support, probs } => support
                .iter()
                .zip(&probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(y, _)| *y)
                .fold(f64::NEG_INFINITY, f64::max),
            StepSpec::FromAttachment { .. } => unreachable!(),
        }
    }

    /// `P(Y = y)`; zero for continuous laws.
    pub fn atom(&self, y: f64) -> f64 {
        match self {
            StepSpec::Lattice { support, probs } => support
                .iter()
                .zip(probs)
                .filter(|(s, _)| **s == y)
                .map(|(_, p)| *p)
                .sum(),
            _ => 0.0,
        }
    }

    /// Upper end of the domain of the cumulant generating function (exclusive when finite).
    pub fn cumulant_domain_sup(&self) -> f64 {
        match self.canonical() {
            StepSpec::Exponential { rate } => rate,
            _ => f64::INFINITY,
        }
    }

    /// Cumulant generating function `log E[exp(lambda * Y)]`.
    pub fn cumulant(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(0.0);
        }
        match self {
            StepSpec::Exponential { rate } => exp_cumulant(*rate, lambda),
            StepSpec::FromAttachment { attachment: a } => exp_cumulant(a.tail_exponent(), lambda),
            StepSpec::Lattice { support, probs } => {
                // log-sum-exp over atoms with positive mass
                let terms = support
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(y, p)| lambda * y + p.ln());
                let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = terms.map(|t| (t - max).exp()).sum();
                Ok(max + sum.ln())
            }
        }
    }

    /// Maps a uniform variate in [0, 1) to a step by inverse CDF.
    #[inline]
    pub fn step_from_uniform(&self, u: f64) -> f64 {
        match self {
            StepSpec::Exponential { rate } => -(1.0 - u).ln() / rate,
            StepSpec::FromAttachment { attachment: a } => -(1.0 - u).ln() / a.tail_exponent(),
            StepSpec::Lattice { support, probs } => {
                let mut acc = 0.0;
                for (y, p) in support.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *y;
                    }
                }
                // rounding in the cumulative sum; fall back to the last atom with mass
                support
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, p)| **p > 0.0)
                    .map(|(y, _)| *y)
                    .unwrap_or(0.0)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.step_from_uniform(rng.random::<f64>())
    }

    /// Short label used in tables.
    pub fn label(&self) -> String {
        match self {
            StepSpec::Exponential { rate } => format!("exp:{rate}"),
            StepSpec::FromAttachment { attachment: a } => a.label(),
            StepSpec::Lattice { support, probs } => {
                let atoms: Vec<String> =
                    support.iter().zip(probs).map(|(y, p)| format!("{y}@{p}")).collect();
                format!("lattice:{}", atoms.join(";"))
            }
        }
    }
}

fn exp_cumulant(rate: f64, lambda: f64) -> Result<f64> {
    if lambda >= rate {
        return Err(Error::Domain(format!(
            "cumulant of Exponential({rate}) is infinite at lambda = {lambda}"
        )));
    }
    Ok((rate / (rate - lambda)).ln())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn specs() -> impl Strategy<Value = StepSpec> {
        prop_oneof![
            (0.2f64..5.0).prop_map(|rate| StepSpec::Exponential { rate }),
            (proptest::collection::vec((0.0f64..4.0, 0.05f64..1.0), 1..6)).prop_map(|atoms| {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                let support = atoms.iter().map(|a| a.0).collect();
                let mut probs: Vec<f64> = atoms.iter().map(|a| a.1 / total).collect();
                let head: f64 = probs[1..].iter().sum();
                probs[0] = 1.0 - head;
                StepSpec::Lattice { support, probs }
            }),
        ]
    }

    proptest! {
        #[test]
        fn cumulant_is_midpoint_convex(spec in specs(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let sup = spec.cumulant_domain_sup();
            let (a, b) = (a.min(sup * 0.95), b.min(sup * 0.95));
            let mid = spec.cumulant(0.5 * (a + b)).unwrap();
            let chord = 0.5 * (spec.cumulant(a).unwrap() + spec.cumulant(b).unwrap());
            prop_assert!(mid <= chord + 1e-10);
        }

        #[test]
        fn cumulant_slope_at_zero_is_mean(spec in specs()) {
            let h = 1e-5;
            let d = (spec.cumulant(h).unwrap() - spec.cumulant(-h).unwrap()) / (2.0 * h);
            prop_assert!((d - spec.mean()).abs() < 1e-6, "{} vs {}", d, spec.mean());
        }
    }
}
