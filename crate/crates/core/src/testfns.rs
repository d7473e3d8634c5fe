//! Catalogue of compactly supported smooth test functions and builtin inputs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step from 0 (`x ≤ 0`) to 1 (`x ≥ 1`).
pub fn smooth_step(x: f64) -> f64 {
    let a = psi(x);
    let b = psi(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Plateau equal to 1 on `|t| ≤ 1/2`, vanishing for `|t| ≥ 1`.
pub fn plateau(t: f64) -> f64 {
    smooth_step(2.0 * (1.0 - t.abs()))
}

/// A polynomial times the plateau, dilated to `[c - r, c + r]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub name: String,
    pub center: f64,
    pub radius: f64,
    /// Coefficients of the polynomial in the local variable `(t - c)/r`,
    /// lowest degree first.
    pub coefficients: Vec<f64>,
}

impl Bump {
    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.radius;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let p = self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
        p * plateau(x)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// The three catalogue bumps.
pub fn bumps() -> Vec<Bump> {
    vec![
        Bump {
            name: "bump-even".into(),
            center: 0.0,
            radius: 1.0,
            coefficients: vec![1.0],
        },
        Bump {
            name: "bump-odd".into(),
            center: 0.0,
            radius: 1.5,
            coefficients: vec![0.0, 1.0],
        },
        Bump {
            name: "bump-shifted".into(),
            center: 0.5,
            radius: 2.0,
            coefficients: vec![1.0, 2.0, -1.0],
        },
    ]
}

/// Builtin input functions for the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Zero,
    Linear,
    Gaussian,
    Runge,
    SqrtAbs,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Zero,
        Builtin::Linear,
        Builtin::Gaussian,
        Builtin::Runge,
        Builtin::SqrtAbs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Builtin::Zero => "zero",
            Builtin::Linear => "linear",
            Builtin::Gaussian => "gaussian",
            Builtin::Runge => "runge",
            Builtin::SqrtAbs => "sqrt-abs",
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Builtin::Zero => 0.0,
            Builtin::Linear => t,
            Builtin::Gaussian => (-t * t).exp(),
            Builtin::Runge => 1.0 / (1.0 + t * t),
            Builtin::SqrtAbs => t.abs().sqrt(),
        }
    }

    /// Classical derivative; `NaN` where it does not exist.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Builtin::Zero => 0.0,
            Builtin::Linear => 1.0,
            Builtin::Gaussian => -2.0 * t * (-t * t).exp(),
            Builtin::Runge => -2.0 * t / ((1.0 + t * t) * (1.0 + t * t)),
            Builtin::SqrtAbs => {
                if t == 0.0 {
                    f64::NAN
                } else {
                    t.signum() / (2.0 * t.abs().sqrt())
                }
            }
        }
    }

    /// Points where the function is not smooth.
    pub fn kinks(self) -> Vec<f64> {
        match self {
            Builtin::SqrtAbs => vec![0.0],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown builtin function `{s}`")))
    }
}
