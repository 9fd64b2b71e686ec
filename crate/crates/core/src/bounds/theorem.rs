use serde::{Deserialize, Serialize};

use super::config::BoundConfig;
use super::threshold::threshold_f;
use crate::error::{Error, Result};

/// Which threshold enters the crossing event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdVariant {
    /// f(t/n)/n
    FOfTOverN,
    /// f(t)/n
    FOfT,
}

/// Peeling grid n_0 < n_1 < … < n_{I_t}: n_i = b^i for i < I_t and
/// n_{I_t} = t + 1, where I_t = ⌈log_b(q t)⌉ (at least 1).
pub fn peeling_grid(t: u64, b: f64, q: f64) -> Vec<f64> {
    let target = q * t as f64;
    let mut i_t = 0usize;
    let mut pow = 1.0;
    while pow < target {
        pow *= b;
        i_t += 1;
    }
    let i_t = i_t.max(1);
    let mut grid: Vec<f64> = (0..i_t).map(|i| b.powi(i as i32)).collect();
    grid.push(t as f64 + 1.0);
    grid
}

/// Checks that n ↦ f(t/n)/n is non-increasing and n ↦ n f(t/n) is
/// non-decreasing over the integers 1..=n_max.
pub fn check_scaled_monotonicity(t: u64, xi: f64, n_max: u64) -> Result<()> {
    let tf = t as f64;
    let mut prev: Option<(f64, f64)> = None;
    for n in 1..=n_max {
        let x = tf / n as f64;
        let f = threshold_f(x, xi).map_err(|_| {
            Error::validity(format!(
                "f(t/n) is undefined at n = {n} (t/n = {x} <= 1); the f(t/n) variant of the bound needs every \
                 peeling slice to keep t/n > 1"
            ))
        })?;
        let (a, b) = (f / n as f64, n as f64 * f);
        if let Some((pa, pb)) = prev {
            if a > pa * (1.0 + 1e-12) + 1e-300 || b < pb * (1.0 - 1e-12) {
                return Err(Error::validity(format!(
                    "monotonicity of f(t/n)/n or n f(t/n) fails at n = {n} (t = {t}, xi = {xi})"
                )));
            }
        }
        prev = Some((a, b));
    }
    Ok(())
}

/// Peeled sum
/// `C Σ_{i<I_t} exp(−n_i α² − χ_ε √(n_i f(t/n_i)) − f(t/(n_{i+1}−1))) f(t/(n_{i+1}−1))^{K/2}`
/// clipped at 1. The `FOfT` variant replaces every f(·) by f(t).
pub fn theorem_main_bound(t: u64, cfg: &BoundConfig, variant: ThresholdVariant) -> Result<f64> {
    let grid = peeling_grid(t, cfg.b, cfg.q);
    let tf = t as f64;
    let half_k = cfg.k as f64 / 2.0;
    let f_of = |x: f64| -> Result<f64> {
        match variant {
            ThresholdVariant::FOfT => threshold_f(tf, cfg.xi),
            ThresholdVariant::FOfTOverN => threshold_f(x, cfg.xi),
        }
    };
    match variant {
        ThresholdVariant::FOfT => {
            let f = threshold_f(tf, cfg.xi)?;
            if f < 0.0 {
                return Err(Error::validity(format!("f(t) = {f} is negative at t = {t}")));
            }
        }
        ThresholdVariant::FOfTOverN => {
            if cfg.xi < 0.0 {
                return Err(Error::validity(format!("the f(t/n) variant needs xi >= 0, got {}", cfg.xi)));
            }
            check_scaled_monotonicity(t, cfg.xi, t)?;
        }
    }
    let mut sum = 0.0;
    for w in grid.windows(2) {
        let (n_i, n_next) = (w[0], w[1]);
        let f_i = f_of(tf / n_i)?;
        let f_next = f_of(tf / (n_next - 1.0))?;
        let expo = -n_i * cfg.alpha * cfg.alpha - cfg.chi_eps * (n_i * f_i).sqrt() - f_next;
        sum += expo.exp() * f_next.powf(half_k);
    }
    Ok((cfg.big_c * sum).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::config::BoundParams;

    fn cfg(xi: f64) -> BoundConfig {
        BoundConfig::from_constants(1, 0.1, 0.09, 0.25, 0.8, 2, BoundParams::new(0.05, xi)).unwrap()
    }

    #[test]
    fn grid_shape() {
        assert_eq!(peeling_grid(100, 4.0, 1.0), vec![1.0, 4.0, 16.0, 64.0, 101.0]);
        assert_eq!(peeling_grid(64, 4.0, 1.0), vec![1.0, 4.0, 16.0, 65.0]);
        assert_eq!(peeling_grid(3, 4.0, 1.0), vec![1.0, 4.0]);
    }

    #[test]
    fn single_term_when_t_is_small() {
        let c = cfg(0.0);
        let t = 3;
        let f = (3f64).ln();
        let expect = c.big_c * (-c.alpha * c.alpha - c.chi_eps * f.sqrt() - f).exp() * f.sqrt();
        let got = theorem_main_bound(t, &c, ThresholdVariant::FOfT).unwrap();
        assert!((got - expect.min(1.0)).abs() < 1e-15);
    }

    #[test]
    fn scaled_variant_is_never_valid_at_the_last_slice() {
        let err = theorem_main_bound(1000, &cfg(1.0), ThresholdVariant::FOfTOverN).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
        let err = theorem_main_bound(1000, &cfg(-0.5), ThresholdVariant::FOfTOverN).unwrap_err();
        assert!(matches!(err, Error::Validity(_)));
    }

    #[test]
    fn clipped_to_one() {
        for &t in &[2u64, 10, 1000, 1_000_000] {
            let v = theorem_main_bound(t, &cfg(0.0), ThresholdVariant::FOfT).unwrap();
            assert!(v > 0.0 && v <= 1.0);
        }
    }
}
