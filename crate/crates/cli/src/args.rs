//! Parsers for distribution and grid arguments.

use std::path::PathBuf;
use std::str::FromStr;

use dagdepth_core::{AttachmentSpec, Error, Result, StepSpec};

/// Value of `--dist`.
#[derive(Clone, Debug, PartialEq)]
pub enum Dist {
    Uniform,
    Power(f64),
    Exp(f64),
    Lattice(PathBuf),
}

impl FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let number = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        match s.split_once(':') {
            None if s == "uniform" => Ok(Dist::Uniform),
            Some(("power", a)) => Ok(Dist::Power(number(a)?)),
            Some(("exp", r)) => Ok(Dist::Exp(number(r)?)),
            Some(("lattice", path)) if !path.is_empty() => Ok(Dist::Lattice(path.into())),
            _ => Err(format!("unknown distribution `{s}`; expected uniform, power:ALPHA, exp:RATE or lattice:FILE")),
        }
    }
}

impl Dist {
    /// Attachment law for DAG subcommands.
    ///
    /// `exp:RATE` names the attachment law whose step `-log X` is exponential,
    /// namely `X = U^(1/RATE)`.
    pub fn attachment(&self) -> Result<AttachmentSpec> {
        match self {
            Dist::Uniform => Ok(AttachmentSpec::Uniform),
            Dist::Power(a) | Dist::Exp(a) => AttachmentSpec::power_tail(*a),
            Dist::Lattice(_) => Err(Error::Spec("lattice step laws have no DAG attachment law".into())),
        }
    }

    /// Step law for BRW and constants subcommands.
    pub fn step(&self) -> Result<StepSpec> {
        let spec = match self {
            Dist::Lattice(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<StepSpec>(&text)?
            }
            Dist::Exp(rate) => StepSpec::exponential(*rate)?,
            other => other.attachment()?.step_spec(),
        };
        spec.validate()?;
        Ok(spec.canonical())
    }
}

/// Integer grid: `a`, `a,b,c`, or geometric `a:b:xSTEP`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid(pub Vec<u64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let int = |v: &str| {
            let v = v.trim();
            v.parse::<u64>()
                .or_else(|_| v.parse::<f64>().ok().filter(|f| f.fract() == 0.0 && *f >= 0.0 && *f < 1.8e19).map(|f| f as u64).ok_or(()))
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        };
        let values = if let Some((range, step)) = s.rsplit_once(":x") {
            let (a, b) = range.split_once(':').ok_or_else(|| format!("geometric grid `{s}` must read a:b:xSTEP"))?;
            let (a, b) = (int(a)?, int(b)?);
            let step: f64 = step.parse().map_err(|_| format!("`{step}` is not a number"))?;
            if step.is_nan() || step <= 1.0 || a == 0 || a > b {
                return Err(format!("geometric grid `{s}` needs 0 < a <= b and STEP > 1"));
            }
            let mut values = Vec::new();
            let mut x = a as f64;
            while x <= b as f64 * (1.0 + 1e-12) {
                let v = (x.round() as u64).min(b);
                if values.last() != Some(&v) {
                    values.push(v);
                }
                x *= step;
            }
            values
        } else {
            s.split(',').map(int).collect::<std::result::Result<Vec<_>, _>>()?
        };
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("grid `{s}` must be non-empty and strictly increasing"));
        }
        Ok(Grid(values))
    }
}

impl Grid {
    pub fn as_u32(&self) -> Result<Vec<u32>> {
        self.0
            .iter()
            .map(|&v| u32::try_from(v).map_err(|_| Error::Domain(format!("{v} does not fit in 32 bits"))))
            .collect()
    }
}
