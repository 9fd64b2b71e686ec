//! Crossing probabilities of `{∃ n ≤ t : θ̂_n ∈ Θ_ρ, K_inf(Π(ν̂_n), μ⋆ − ε) ≥ f(·)/n}`
//! estimated by Monte Carlo, computed exactly for Bernoulli, and compared to
//! the bounds.

mod exact;

pub use exact::{
    dim1_event_exact, enumerate_crossing_bernoulli, exact_crossing_bernoulli, Dim1Side, DP_MAX_T, ENUMERATE_MAX_T,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    cor1_bound, cor2_bound, theorem_main_bound, threshold_f, BoundConfig, BoundParams, ThresholdVariant,
};
use crate::error::{Error, Result};
use crate::expfam::{replicate_rng, FamilyModel, MeanParam, NaturalParam, ParamRegion, Sampler};
use crate::kinf::kinf_from_mean;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Serialize)]
pub struct CrossingSpec {
    pub model: FamilyModel,
    pub theta_star: NaturalParam,
    pub epsilon: f64,
    pub region: ParamRegion,
    pub t: u64,
    pub xi: f64,
    pub variant: ThresholdVariant,
    pub restrict_to_region: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_runs: u64,
    pub envelope: f64,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// bound / p̂; infinite when p̂ = 0.
    pub ratio: f64,
    pub bound: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub exact: Option<f64>,
}

/// The crossing predicate with its thresholds f(·)/n precomputed.
///
/// Conventions: the event at n needs a positive divergence (the empirical
/// mean lies below μ⋆ − ε), which only matters where the threshold is not
/// positive; under f(t/n) the last step n = t, where f(t/t) is undefined, never
/// crosses (the index is then μ⁺). Under restriction, an n whose empirical
/// statistic has no natural parameter is outside Θ_ρ.
pub(crate) struct CrossingEvent<'a> {
    spec: &'a CrossingSpec,
    target: f64,
    thresholds: Vec<f64>,
}

impl<'a> CrossingEvent<'a> {
    pub(crate) fn new(spec: &'a CrossingSpec) -> Result<Self> {
        if spec.t < 2 {
            return Err(Error::Config(format!("horizon t must be at least 2, got {}", spec.t)));
        }
        if !(spec.epsilon >= 0.0 && spec.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be finite and nonnegative, got {}", spec.epsilon)));
        }
        spec.model.check_domain(&spec.theta_star)?;
        if spec.variant == ThresholdVariant::FOfTOverN && spec.xi < 0.0 {
            return Err(Error::validity(format!("the f(t/n) event needs xi >= 0, got {}", spec.xi)));
        }
        let target = spec.model.mean(&spec.theta_star)? - spec.epsilon;
        let tf = spec.t as f64;
        let mut thresholds = vec![f64::INFINITY; spec.t as usize + 1];
        match spec.variant {
            ThresholdVariant::FOfT => {
                let f = threshold_f(tf, spec.xi)?;
                for (n, th) in thresholds.iter_mut().enumerate().skip(1) {
                    *th = f / n as f64;
                }
            }
            ThresholdVariant::FOfTOverN => {
                for n in 1..spec.t as usize {
                    thresholds[n] = threshold_f(tf / n as f64, spec.xi)? / n as f64;
                }
            }
        }
        Ok(Self { spec, target, thresholds })
    }

    /// Whether the path crosses at step `n` with empirical statistic `f`.
    pub(crate) fn crossed(&self, n: usize, f: &[f64]) -> Result<bool> {
        let th = self.thresholds[n];
        if th == f64::INFINITY {
            return Ok(false);
        }
        let (value, _) = kinf_from_mean(&self.spec.model, f, self.target)?;
        if !(value > 0.0 && value >= th) {
            return Ok(false);
        }
        if self.spec.restrict_to_region {
            let theta = match self.spec.model.mean_to_natural(&MeanParam::new(f)) {
                Ok(th) => th,
                Err(Error::Boundary(_)) => return Ok(false),
                Err(e) => return Err(e),
            };
            return Ok(self.spec.region.contains(&theta));
        }
        Ok(true)
    }
}

/// Wilson score interval at level `z` for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

fn one_replicate(event: &CrossingEvent, sampler: &Sampler, seed: u64, replicate: u64) -> Result<bool> {
    let spec = event.spec;
    let k = spec.model.dim();
    let mut rng = replicate_rng(seed, replicate);
    let mut sum = vec![0.0; k];
    let mut stat = vec![0.0; k];
    let mut mean = vec![0.0; k];
    for n in 1..=spec.t as usize {
        let x = sampler.draw(&mut rng);
        spec.model.sufficient_stat(x, &mut stat);
        for j in 0..k {
            sum[j] += stat[j];
            mean[j] = sum[j] / n as f64;
        }
        if event.crossed(n, &mean)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fraction of `n_runs` independent paths that cross, with its Wilson 95%
/// interval. Replicate r uses stream r of `seed`, so the result does not
/// depend on the number of worker threads.
pub fn estimate_crossing(spec: &CrossingSpec, n_runs: u64, seed: u64) -> Result<CrossingEstimate> {
    estimate_crossing_with_threads(spec, n_runs, seed, None)
}

pub fn estimate_crossing_with_threads(
    spec: &CrossingSpec,
    n_runs: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<CrossingEstimate> {
    if n_runs < 100 {
        return Err(Error::Config(format!("n_runs must be at least 100, got {n_runs}")));
    }
    let event = CrossingEvent::new(spec)?;
    let sampler = Sampler::new(&spec.model, &spec.theta_star)?;
    let flags: Vec<bool> = crate::parallel::with_threads(threads, || {
        (0..n_runs).into_par_iter().map(|r| one_replicate(&event, &sampler, seed, r)).collect()
    })?;
    let hits = flags.iter().filter(|c| **c).count() as u64;
    let (ci_low, ci_high) = wilson_interval(hits, n_runs, Z95);
    Ok(CrossingEstimate {
        p_hat: hits as f64 / n_runs as f64,
        ci_low,
        ci_high,
        n_runs,
        envelope: envelope(spec)?,
        exact: None,
    })
}

/// Monte-Carlo estimate plus the exact value when the family is Bernoulli
/// and t is within the dynamic program's range.
pub fn estimate_with_exact(
    spec: &CrossingSpec,
    n_runs: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<CrossingEstimate> {
    let mut est = estimate_crossing_with_threads(spec, n_runs, seed, threads)?;
    if spec.model.kind() == crate::expfam::FamilyKind::Bernoulli && spec.t <= DP_MAX_T {
        est.exact = Some(exact_crossing_bernoulli(spec)?);
    }
    Ok(est)
}

/// Bound constants for the spec, with θ⋆ as the center of Θ_ρ and the default
/// b, p, q, η.
pub fn spec_bound_config(spec: &CrossingSpec) -> Result<BoundConfig> {
    let region = spec.region.clone().with_center(&spec.model, spec.theta_star.clone())?;
    BoundConfig::for_family(&spec.model, &region, BoundParams::new(spec.epsilon, spec.xi))
}

/// Smallest applicable bound on the crossing probability: the peeled sum
/// and the f(t) corollary for `FOfT`, the f(t/n) corollary for `FOfTOverN`.
/// Bounds whose validity conditions fail are skipped; 1 when none applies.
pub fn envelope(spec: &CrossingSpec) -> Result<f64> {
    if spec.epsilon <= 0.0 {
        return Ok(1.0);
    }
    let cfg = match spec_bound_config(spec) {
        Ok(c) => c,
        Err(Error::UnreachableMean(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let inputs = cfg.corollary_inputs();
    let candidates: Vec<Result<f64>> = match spec.variant {
        ThresholdVariant::FOfT => vec![
            theorem_main_bound(spec.t, &cfg, ThresholdVariant::FOfT),
            cor1_bound(spec.t, &inputs),
        ],
        ThresholdVariant::FOfTOverN => vec![
            theorem_main_bound(spec.t, &cfg, ThresholdVariant::FOfTOverN),
            cor2_bound(spec.t, &inputs).map(|v| v.value),
        ],
    };
    let mut best: f64 = 1.0;
    for c in candidates {
        match c {
            Ok(v) => best = best.min(v),
            Err(Error::Validity(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// PASS unless the Wilson lower end, or the exact value when present,
/// exceeds the bound.
pub fn compare_to_envelope(est: &CrossingEstimate, bound_value: f64) -> EnvelopeReport {
    let pass = est.ci_low <= bound_value && est.exact.is_none_or(|e| e <= bound_value);
    let ratio = if est.p_hat > 0.0 { bound_value / est.p_hat } else { f64::INFINITY };
    EnvelopeReport { pass, ratio, bound: bound_value, p_hat: est.p_hat, ci_low: est.ci_low, exact: est.exact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::RegionBox;

    pub(crate) fn bernoulli_spec(mu: f64, eps: f64, t: u64, xi: f64, restrict: bool) -> CrossingSpec {
        let model = FamilyModel::bernoulli();
        let theta_star = FamilyModel::bernoulli_theta(mu);
        let region = ParamRegion::new(
            &model,
            theta_star.clone(),
            RegionBox::Mean { mean: [(mu - 0.3).max(0.05), (mu + 0.05).min(0.95)] },
            0.1,
        )
        .unwrap();
        CrossingSpec {
            model,
            theta_star,
            epsilon: eps,
            region,
            t,
            xi,
            variant: ThresholdVariant::FOfT,
            restrict_to_region: restrict,
        }
    }

    #[test]
    fn wilson_known_values() {
        // 0 of 100: upper end z²/(n + z²)
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-15);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-15);
        assert!((lo - 0.403_831_4).abs() < 1e-6);
    }

    #[test]
    fn impossible_event() {
        let spec = bernoulli_spec(0.9, 1.5, 50, 0.0, false);
        let est = estimate_crossing(&spec, 200, 1).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(exact_crossing_bernoulli(&spec).unwrap(), 0.0);
        assert!(compare_to_envelope(&est, 1e-30).pass);
    }

    #[test]
    fn ci_shrinks_like_inverse_root() {
        let spec = bernoulli_spec(0.9, 0.1, 12, 0.0, false);
        let a = estimate_crossing(&spec, 20_000, 3).unwrap();
        let b = estimate_crossing(&spec, 40_000, 3).unwrap();
        let r = (b.ci_high - b.ci_low) / (a.ci_high - a.ci_low);
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05, "{r}");
    }

    #[test]
    fn monte_carlo_matches_dp() {
        let spec = bernoulli_spec(0.9, 0.1, 12, 0.0, false);
        let exact = exact_crossing_bernoulli(&spec).unwrap();
        let est = estimate_crossing(&spec, 100_000, 11).unwrap();
        assert!(est.ci_low <= exact && exact <= est.ci_high, "{exact} {est:?}");
    }

    #[test]
    fn thread_count_does_not_change_estimate() {
        let spec = bernoulli_spec(0.75, 0.05, 64, 0.5, true);
        let a = estimate_crossing_with_threads(&spec, 500, 9, Some(1)).unwrap();
        let b = estimate_crossing_with_threads(&spec, 500, 9, Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compare_flags_exact_violation() {
        let est = CrossingEstimate { p_hat: 0.0, ci_low: 0.0, ci_high: 0.01, n_runs: 100, envelope: 1.0, exact: Some(0.2) };
        assert!(!compare_to_envelope(&est, 0.1).pass);
        let est = CrossingEstimate { exact: None, ..est };
        let r = compare_to_envelope(&est, 0.1);
        assert!(r.pass && r.ratio.is_infinite());
    }

    #[test]
    fn scaled_variant_rejects_negative_xi() {
        let mut spec = bernoulli_spec(0.9, 0.1, 20, -0.5, false);
        spec.variant = ThresholdVariant::FOfTOverN;
        assert!(matches!(estimate_crossing(&spec, 100, 0), Err(Error::Validity(_))));
    }
}
