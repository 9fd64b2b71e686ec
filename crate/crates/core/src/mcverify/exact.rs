use serde::{Deserialize, Serialize};

use super::{CrossingEvent, CrossingSpec};
use crate::bounds::threshold_f;
use crate::error::{Error, Result};
use crate::expfam::FamilyKind;
use crate::kinf::binary_kl;

/// Largest horizon accepted by the O(t²) dynamic program.
pub const DP_MAX_T: u64 = 2000;
/// Largest horizon accepted by path enumeration.
pub const ENUMERATE_MAX_T: u64 = 20;

fn bernoulli_mean(spec: &CrossingSpec) -> Result<f64> {
    if spec.model.kind() != FamilyKind::Bernoulli {
        return Err(Error::Config("the exact crossing probability is only available for Bernoulli".into()));
    }
    spec.model.mean(&spec.theta_star)
}

/// Exact probability of the crossing event for a Bernoulli family.
///
/// Dynamic program over (n, S_n): the mass of paths that have not crossed yet
/// is propagated with binomial steps, and mass entering a crossing state is
/// accumulated and removed.
pub fn exact_crossing_bernoulli(spec: &CrossingSpec) -> Result<f64> {
    if spec.t > DP_MAX_T {
        return Err(Error::Size(format!("t = {} exceeds the dynamic-program limit {DP_MAX_T}", spec.t)));
    }
    let p = bernoulli_mean(spec)?;
    let event = CrossingEvent::new(spec)?;
    let t = spec.t as usize;
    let mut mass = vec![0.0f64; t + 2];
    let mut next = vec![0.0f64; t + 2];
    mass[0] = 1.0;
    let mut crossed = 0.0;
    for n in 1..=t {
        next[0] = mass[0] * (1.0 - p);
        for s in 1..=n {
            next[s] = mass[s] * (1.0 - p) + mass[s - 1] * p;
        }
        for s in 0..=n {
            if next[s] > 0.0 && event.crossed(n, &[s as f64 / n as f64])? {
                crossed += next[s];
                next[s] = 0.0;
            }
        }
        std::mem::swap(&mut mass, &mut next);
    }
    Ok(crossed.clamp(0.0, 1.0))
}

/// The same probability by summing over all 2^t paths.
pub fn enumerate_crossing_bernoulli(spec: &CrossingSpec) -> Result<f64> {
    if spec.t > ENUMERATE_MAX_T {
        return Err(Error::Size(format!("t = {} exceeds the enumeration limit {ENUMERATE_MAX_T}", spec.t)));
    }
    let p = bernoulli_mean(spec)?;
    let event = CrossingEvent::new(spec)?;
    let t = spec.t as usize;
    // crossing status of every state, computed once
    let mut table = vec![vec![false; t + 1]; t + 1];
    for (n, row) in table.iter_mut().enumerate().skip(1) {
        for (s, cell) in row.iter_mut().enumerate().take(n + 1) {
            *cell = event.crossed(n, &[s as f64 / n as f64])?;
        }
    }
    let mut total = 0.0;
    for path in 0u64..(1u64 << t) {
        let mut s = 0usize;
        let mut hit = false;
        for n in 1..=t {
            s += ((path >> (n - 1)) & 1) as usize;
            if table[n][s] {
                hit = true;
                break;
            }
        }
        if hit {
            let ones = path.count_ones() as i32;
            total += p.powi(ones) * (1.0 - p).powi(t as i32 - ones);
        }
    }
    Ok(total)
}

/// Which deviations of θ̂_n from θ⋆ enter the one-dimensional event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim1Side {
    /// Only empirical means at or below μ⋆, where B(θ̂_n, θ⋆) coincides with
    /// the one-sided dual Φ⋆(F̂_n) used in the maximal inequality.
    Lower,
    Both,
}

/// Exact probability under Ber(μ⋆) of `∪_{m ≤ n < M} {B(θ̂_n, θ⋆) ≥ f(t/n)/n}`.
///
/// Requires n ↦ f(t/n)/n to be non-increasing on [m, M).
pub fn dim1_event_exact(mu_star: f64, m: u64, big_m: u64, t: u64, xi: f64, side: Dim1Side) -> Result<f64> {
    if !(mu_star > 0.0 && mu_star < 1.0) {
        return Err(Error::domain(format!("Bernoulli mean {mu_star} not in (0, 1)")));
    }
    if m < 1 || m >= big_m || big_m > t {
        return Err(Error::domain(format!("need 1 <= m < M <= t, got m={m}, M={big_m}, t={t}")));
    }
    if t > DP_MAX_T {
        return Err(Error::Size(format!("t = {t} exceeds the dynamic-program limit {DP_MAX_T}")));
    }
    let tf = t as f64;
    let mut thresholds = vec![f64::INFINITY; big_m as usize];
    for n in m..big_m {
        thresholds[n as usize] = threshold_f(tf / n as f64, xi)? / n as f64;
    }
    for n in (m + 1)..big_m {
        let (a, b) = (thresholds[n as usize - 1], thresholds[n as usize]);
        if b > a * (1.0 + 1e-12) {
            return Err(Error::validity(format!("f(t/n)/n increases between n = {} and n = {n}", n - 1)));
        }
    }
    let last = big_m as usize - 1;
    let mut mass = vec![0.0f64; last + 2];
    let mut next = vec![0.0f64; last + 2];
    mass[0] = 1.0;
    let mut crossed = 0.0;
    for n in 1..=last {
        next[0] = mass[0] * (1.0 - mu_star);
        for s in 1..=n {
            next[s] = mass[s] * (1.0 - mu_star) + mass[s - 1] * mu_star;
        }
        if n as u64 >= m {
            for s in 0..=n {
                let mu_hat = s as f64 / n as f64;
                if side == Dim1Side::Lower && mu_hat > mu_star {
                    continue;
                }
                if next[s] > 0.0 && binary_kl(mu_hat, mu_star) >= thresholds[n] {
                    crossed += next[s];
                    next[s] = 0.0;
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
    }
    Ok(crossed.clamp(0.0, 1.0))
}
