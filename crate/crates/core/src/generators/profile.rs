//! Built-in scalar profiles of one variable, evaluated on jets.

use serde::{Deserialize, Serialize};

use crate::error::{HexError, Result};
use crate::jet::Jet2;
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Const {
        value: f64,
    },
    /// `Σ c_k x^k`.
    Poly {
        coeffs: Vec<f64>,
    },
    /// `offset + amp · sin(freq · x + phase)`.
    Trig {
        offset: f64,
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// `offset + amp · exp(rate · x)`.
    Exp {
        offset: f64,
        amp: f64,
        rate: f64,
    },
}

impl Profile {
    /// `slope · x + offset`.
    pub fn linear(slope: f64, offset: f64) -> Self {
        Profile::Poly { coeffs: vec![offset, slope] }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Profile::Const { value } => value.is_finite(),
            Profile::Poly { coeffs } => !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite()),
            Profile::Trig { offset, amp, freq, phase } => [offset, amp, freq, phase].iter().all(|c| c.is_finite()),
            Profile::Exp { offset, amp, rate } => [offset, amp, rate].iter().all(|c| c.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(HexError::InvalidParameter(format!("bad profile {self:?}")))
        }
    }

    pub fn eval<T: Real>(&self, x: Jet2<T>) -> Jet2<T> {
        let l = |c: f64| T::lit(c);
        match self {
            Profile::Const { value } => Jet2::constant(l(*value)),
            Profile::Poly { coeffs } => coeffs.iter().rev().fold(Jet2::constant(T::zero()), |acc, c| acc * x + l(*c)),
            Profile::Trig { offset, amp, freq, phase } => (x * l(*freq) + l(*phase)).sin() * l(*amp) + l(*offset),
            Profile::Exp { offset, amp, rate } => (x * l(*rate)).exp() * l(*amp) + l(*offset),
        }
    }

    /// Value and first two derivatives at `x`.
    pub fn eval_real<T: Real>(&self, x: T) -> [T; 3] {
        let j = self.eval(Jet2::var_x(x));
        [j.re, j.dx, j.dxx]
    }
}
