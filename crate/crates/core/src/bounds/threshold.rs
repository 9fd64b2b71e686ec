use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// f(x) = log x + ξ log log x.
pub fn threshold_f(x: f64, xi: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::domain(format!("threshold argument must exceed 1, got {x}")));
    }
    let l = x.ln();
    Ok(l + xi * l.ln())
}

/// The threshold family, fixed by its exponent ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFn {
    pub xi: f64,
}

impl ThresholdFn {
    pub fn new(xi: f64) -> Self {
        Self { xi }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        threshold_f(x, self.xi)
    }

    /// Smallest x at which f is non-decreasing from there on: max(e^{−ξ}, 1).
    pub fn monotone_from(&self) -> f64 {
        (-self.xi).exp().max(1.0)
    }

    /// The f(t/n) threshold requires ξ ≥ 0.
    pub fn check_scaled_variant(&self) -> Result<()> {
        if self.xi < 0.0 {
            return Err(Error::validity(format!(
                "the f(t/n) threshold needs xi >= 0, got {}",
                self.xi
            )));
        }
        Ok(())
    }
}
