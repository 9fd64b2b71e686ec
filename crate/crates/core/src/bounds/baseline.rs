use super::threshold::threshold_f;
use crate::error::{Error, Result};
use crate::expfam::{FamilyModel, NaturalParam};
use crate::kinf::kinf;

/// Earlier f(t) bound `e ⌈f(t) log t⌉ e^{−f(t)}`, clipped at 1.
pub fn prior_bound_cgmms(t: u64, xi: f64) -> Result<f64> {
    let tf = t as f64;
    let f = threshold_f(tf, xi)?;
    let v = std::f64::consts::E * (f * tf.ln()).ceil() * (-f).exp();
    Ok(v.min(1.0))
}

/// exp(−(m/M) f(t/M)) for 1 ≤ m ≤ M < t.
pub fn dim1_maximal_bound(m: u64, big_m: u64, t: u64, xi: f64) -> Result<f64> {
    if m < 1 || m > big_m || big_m > t {
        return Err(Error::domain(format!("need 1 <= m <= M <= t, got m={m}, M={big_m}, t={t}")));
    }
    let f = threshold_f(t as f64 / big_m as f64, xi)?;
    Ok((-(m as f64 / big_m as f64) * f).exp())
}

/// exp(−t K_inf(ν_θ, μ)).
pub fn sanov_bound(model: &FamilyModel, theta: &NaturalParam, mu_threshold: f64, t: u64) -> Result<f64> {
    let k = kinf(model, theta, mu_threshold)?;
    Ok((-(t as f64) * k.value).exp())
}
