use serde::{Deserialize, Serialize};

use super::config::CorollaryInputs;
use super::threshold::threshold_f;
use crate::error::{Error, Result};

/// Regime of t for the f(t/n) corollary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cor2Window {
    BelowRange,
    MidRange,
    HighRange,
}

impl Cor2Window {
    pub fn as_str(&self) -> &'static str {
        match self {
            Cor2Window::BelowRange => "below_range",
            Cor2Window::MidRange => "mid_range",
            Cor2Window::HighRange => "high_range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cor2Value {
    pub value: f64,
    pub window: Cor2Window,
}

/// Constants c, c′, t_χ and the left end 85 χ_ε⁻² of the f(t/n) corollary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cor2Constants {
    pub c: f64,
    pub c_prime: f64,
    pub t_chi: f64,
    pub t_low: f64,
}

pub fn cor2_constants(inputs: &CorollaryInputs) -> Result<Cor2Constants> {
    let chi = inputs.chi_eps;
    let half_k = inputs.k as f64 / 2.0;
    let c = chi * chi / (2.0 * 5f64.ln()).powi(2);
    let c_prime = if inputs.xi >= half_k {
        (threshold_f(5.0, inputs.xi)? / 5.0).sqrt()
    } else {
        (threshold_f(4.0, inputs.xi)? / 4.0).sqrt()
    };
    Ok(Cor2Constants { c, c_prime, t_chi: t_chi(chi), t_low: 85.0 / (chi * chi) })
}

/// t_χ = χ⁻² exp(ln(4.5)²/χ²) / (4 ln(4.5)²).
pub fn t_chi(chi: f64) -> f64 {
    let l2 = 4.5f64.ln().powi(2);
    (l2 / (chi * chi)).exp() / (chi * chi * 4.0 * l2)
}

/// Smallest t with √(4 log(t/4)) − √(log t) ≥ ln(4.5)/χ, the condition that
/// t_χ is meant to capture. Reported next to the closed form for comparison.
pub fn t_chi_root(chi: f64) -> f64 {
    let target = 4.5f64.ln() / chi;
    let g = |lt: f64| (4.0 * (lt - 4f64.ln())).sqrt() - lt.sqrt() - target;
    // g increases in log t beyond log 4·4/3
    let (mut lo, mut hi) = (4f64.ln() * 4.0 / 3.0, 10.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

fn check_cor1(t: f64, inputs: &CorollaryInputs) -> Result<f64> {
    if !(inputs.chi_eps > 0.0) {
        return Err(Error::validity("chi_eps must be positive"));
    }
    if !(t > 1.0) || t < (-inputs.xi).exp() {
        return Err(Error::validity(format!(
            "t = {t} must exceed 1 and e^(-xi) for the f(t) corollary"
        )));
    }
    let f = threshold_f(t, inputs.xi)?;
    if f < 1.0 {
        return Err(Error::validity(format!("f(t) = {f} < 1 at t = {t}; the f(t) corollary needs f(t) >= 1")));
    }
    Ok(f)
}

/// C(1+χ_ε)/(χ_ε t) · (1 + ξ loglog t/log t)^{K/2} · log(t)^{K/2−ξ} · exp(−χ_ε√(log t + ξ loglog t)),
/// clipped at 1.
pub fn cor1_bound(t: u64, inputs: &CorollaryInputs) -> Result<f64> {
    let tf = t as f64;
    check_cor1(tf, inputs)?;
    Ok(cor1_log_value(tf.ln(), inputs).exp().min(1.0))
}

/// Natural logarithm of the unclipped f(t) corollary bound, as a function of
/// log t; usable far beyond the range of u64.
pub fn cor1_log_value(log_t: f64, inputs: &CorollaryInputs) -> f64 {
    let CorollaryInputs { k, xi, chi_eps: chi, big_c } = *inputs;
    let half_k = k as f64 / 2.0;
    let ll = log_t.ln();
    big_c.ln() + (1.0 + chi).ln() - chi.ln() - log_t + half_k * (1.0 + xi * ll / log_t).ln()
        + (half_k - xi) * ll
        - chi * (log_t + xi * ll).sqrt()
}

/// The f(t/n) corollary with its three regimes in t.
pub fn cor2_bound(t: u64, inputs: &CorollaryInputs) -> Result<Cor2Value> {
    let CorollaryInputs { k, xi, chi_eps: chi, big_c } = *inputs;
    let half_k = k as f64 / 2.0;
    if xi < (half_k - 1.0).max(0.0) {
        return Err(Error::validity(format!(
            "the f(t/n) corollary needs xi >= max(K/2 - 1, 0) = {}, got {xi}",
            (half_k - 1.0).max(0.0)
        )));
    }
    if !(chi > 0.0) {
        return Err(Error::validity("chi_eps must be positive"));
    }
    let cs = cor2_constants(inputs)?;
    let tf = t as f64;
    let below = Cor2Value { value: 1.0, window: Cor2Window::BelowRange };
    if tf < cs.t_low || tf * cs.c <= 1.0 {
        return Ok(below);
    }
    let c = cs.c;
    let ltc = (tf * c).ln();
    let e = half_k - xi;
    let high = tf > cs.t_chi;
    let pow = |x: f64| -> Result<f64> {
        if e == 0.0 {
            return Ok(1.0);
        }
        if !(x > 0.0) {
            return Err(Error::domain(format!("logarithm {x} is not positive in the f(t/n) corollary")));
        }
        Ok(x.powf(e))
    };
    let bracket = if xi >= half_k {
        if high {
            144.0 * pow(1.25f64.ln())?
        } else {
            16.0 / 3.0 * pow((tf * c * ltc / 4.0).ln())? + 80.0 * pow(1.25f64.ln())?
        }
    } else if high {
        144.0 * pow((tf / 3.0).ln())?
    } else {
        let denom = 4.0 - c * ltc;
        if !(denom > 0.0) {
            return Err(Error::domain(format!("4 - c log(tc) = {denom} is not positive")));
        }
        16.0 / 3.0 * pow((tf / 3.0).ln())? + 80.0 * pow((tf * c * ltc / denom).ln())?
    };
    let second = (1.0 + xi).powf(half_k) / (c * tf * ltc) * bracket;
    let first = (-chi * tf.sqrt() * cs.c_prime).exp();
    let value = (big_c * (first + second)).min(1.0);
    Ok(Cor2Value { value, window: if high { Cor2Window::HighRange } else { Cor2Window::MidRange } })
}
