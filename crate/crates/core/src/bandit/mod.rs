//! KL-UCB and KL-UCB+ on exponential-family arms.

mod index;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::threshold_f;
use crate::error::{Error, Result};
use crate::expfam::{replicate_rng, Coords, FamilyModel, NaturalParam, Sampler};
use crate::kinf::kinf_from_mean;

pub use index::{ucb_index, INDEX_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// budget f(t)/N_a(t)
    #[serde(rename = "klucb")]
    KlUcb,
    /// budget f(t/N_a(t))/N_a(t)
    #[serde(rename = "klucb_plus")]
    KlUcbPlus,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::KlUcb => "klucb",
            Strategy::KlUcbPlus => "klucb_plus",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BanditInstance {
    pub arms: Vec<(FamilyModel, NaturalParam)>,
    pub means: Vec<f64>,
    pub mu_star: f64,
    pub gaps: Vec<f64>,
    /// Lowest-index optimal arm.
    pub best_arm: usize,
}

impl BanditInstance {
    pub fn new(arms: Vec<(FamilyModel, NaturalParam)>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Config("a bandit instance needs at least two arms".into()));
        }
        let means = arms.iter().map(|(m, t)| m.mean(t)).collect::<Result<Vec<f64>>>()?;
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("arm means must be finite".into()));
        }
        let mu_star = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best_arm = means.iter().position(|m| *m == mu_star).unwrap();
        let gaps = means.iter().map(|m| mu_star - m).collect();
        Ok(Self { arms, means, mu_star, gaps, best_arm })
    }

    /// Bernoulli arms with the given means.
    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        let model = FamilyModel::bernoulli();
        let arms = means
            .iter()
            .map(|m| Ok((model.clone(), model.theta_from_interpretable(&[*m])?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    /// Half of the smallest positive gap; zero if every arm is optimal.
    pub fn default_epsilon(&self) -> f64 {
        let g = self.gaps.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
        if g.is_finite() {
            0.5 * g
        } else {
            0.0
        }
    }

    /// Lai–Robbins constant Σ_{a:Δ_a>0} Δ_a / K_inf(ν_a, μ⋆).
    pub fn lai_robbins_constant(&self) -> Result<f64> {
        let mut s = 0.0;
        for ((model, theta), gap) in self.arms.iter().zip(&self.gaps) {
            if *gap > 0.0 {
                s += gap / crate::kinf::kinf(model, theta, self.mu_star)?.value;
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    /// Gap used by the crossing counter; defaults to half the minimal gap.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub horizon: u64,
    pub pulls: Vec<u64>,
    /// Arm played at each round.
    pub actions: Vec<u32>,
    /// Pseudo-regret Σ_a Δ_a N_a(t) after each round t = 1..=T.
    pub regret: Vec<f64>,
    /// Whether N⋆(t) K_inf(ν̂⋆, μ⋆ − ε) exceeded the threshold at round t.
    pub crossing: Vec<bool>,
    pub epsilon: f64,
    pub seed: u64,
    pub replicate: u64,
}

impl EpisodeRecord {
    pub fn crossing_count(&self) -> u64 {
        self.crossing.iter().filter(|c| **c).count() as u64
    }
}

/// Budget for arm a at time t with N_a pulls; f arguments ≤ 1 give +∞.
fn budget(strategy: Strategy, xi: f64, t: u64, n: u64) -> f64 {
    let x = match strategy {
        Strategy::KlUcb => t as f64,
        Strategy::KlUcbPlus => t as f64 / n as f64,
    };
    match threshold_f(x, xi) {
        Ok(f) => f / n as f64,
        Err(_) => f64::INFINITY,
    }
}

/// Plays T rounds: each arm once, then argmax of the indices (ties to the
/// lowest arm). Replicate `r` of seed `s` uses stream `r` of the seed.
pub fn run_episode(
    instance: &BanditInstance,
    strategy: Strategy,
    xi: f64,
    horizon: u64,
    seed: u64,
    replicate: u64,
    options: EpisodeOptions,
) -> Result<EpisodeRecord> {
    let n_arms = instance.arms.len();
    if horizon < n_arms as u64 {
        return Err(Error::Config(format!("horizon {horizon} is smaller than the number of arms {n_arms}")));
    }
    if !xi.is_finite() {
        return Err(Error::Config("xi must be finite".into()));
    }
    let epsilon = options.epsilon.unwrap_or_else(|| instance.default_epsilon());
    let samplers = instance
        .arms
        .iter()
        .map(|(m, t)| Sampler::new(m, t))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = replicate_rng(seed, replicate);
    let mut sums: Vec<Coords> = instance.arms.iter().map(|(m, _)| Coords::from_elem(0.0, m.dim())).collect();
    let mut buf: Vec<Coords> = sums.clone();
    let mut stat: Vec<Coords> = sums.clone();
    let mut pulls = vec![0u64; n_arms];
    let mut regret = Vec::with_capacity(horizon as usize);
    let mut actions = Vec::with_capacity(horizon as usize);
    let mut crossing = Vec::with_capacity(horizon as usize);
    let mut cum = 0.0;
    let best = instance.best_arm;
    let (best_model, _) = &instance.arms[best];
    let cross_level = instance.mu_star - epsilon;

    for t in 0..horizon {
        let arm = if (t as usize) < n_arms {
            t as usize
        } else {
            let mut best_a = 0;
            let mut best_u = f64::NEG_INFINITY;
            for a in 0..n_arms {
                let b = budget(strategy, xi, t, pulls[a]);
                let u = index::index_from_stat(&instance.arms[a].0, &stat[a], b)?;
                if u > best_u {
                    best_u = u;
                    best_a = a;
                }
            }
            best_a
        };
        let x = samplers[arm].draw(&mut rng);
        instance.arms[arm].0.sufficient_stat(x, &mut buf[arm]);
        pulls[arm] += 1;
        actions.push(arm as u32);
        let n = pulls[arm] as f64;
        for i in 0..sums[arm].len() {
            sums[arm][i] += buf[arm][i];
            stat[arm][i] = sums[arm][i] / n;
        }
        cum += instance.gaps[arm];
        regret.push(cum);

        let now = t + 1;
        let nb = pulls[best];
        let crossed = if nb == 0 || cross_level >= best_model.max_mean() {
            false
        } else {
            let thr = match strategy {
                Strategy::KlUcb => threshold_f(now as f64, xi),
                Strategy::KlUcbPlus => threshold_f(now as f64 / nb as f64, xi),
            };
            match thr {
                Ok(f) => nb as f64 * kinf_from_mean(best_model, &stat[best], cross_level)?.0 > f,
                Err(_) => false,
            }
        };
        crossing.push(crossed);
    }
    Ok(EpisodeRecord { horizon, pulls, actions, regret, crossing, epsilon, seed, replicate })
}

/// Σ_a Δ_a N_a(T).
pub fn pseudo_regret(record: &EpisodeRecord, instance: &BanditInstance) -> Result<f64> {
    if record.pulls.len() != instance.gaps.len() {
        return Err(Error::Mismatch(format!(
            "record has {} arms, instance has {}",
            record.pulls.len(),
            instance.gaps.len()
        )));
    }
    Ok(record.pulls.iter().zip(&instance.gaps).map(|(n, g)| *n as f64 * g).sum())
}

/// Geometric checkpoints 1, 2, 4, … ≤ T, always including T.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut t = 1u64;
    while t < horizon {
        v.push(t);
        t *= 2;
    }
    v.push(horizon);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub replicate: u64,
    pub t: u64,
    pub regret: f64,
    pub crossings: u64,
    pub pulls: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegretExperiment {
    pub strategy: Strategy,
    pub xi: f64,
    pub horizon: u64,
    pub replicates: u64,
    pub seed: u64,
}

/// Runs the replicates, possibly in parallel, and reports each one at the
/// geometric checkpoints. Output order is by replicate index, so the result
/// does not depend on `threads`.
pub fn run_regret_experiment(
    instance: &BanditInstance,
    exp: &RegretExperiment,
    options: EpisodeOptions,
    threads: Option<usize>,
) -> Result<Vec<Vec<CheckpointRow>>> {
    let cps = checkpoints(exp.horizon);
    let one = |r: u64| -> Result<Vec<CheckpointRow>> {
        let rec = run_episode(instance, exp.strategy, exp.xi, exp.horizon, exp.seed, r, options)?;
        let mut pulls = vec![0u64; instance.arms.len()];
        let mut crossings = 0u64;
        let mut out = Vec::with_capacity(cps.len());
        let mut next = 0;
        for t in 0..rec.horizon as usize {
            pulls[rec.actions[t] as usize] += 1;
            crossings += rec.crossing[t] as u64;
            if (t as u64 + 1) == cps[next] {
                out.push(CheckpointRow { replicate: r, t: cps[next], regret: rec.regret[t], crossings, pulls: pulls.clone() });
                next += 1;
            }
        }
        Ok(out)
    };
    crate::parallel::with_threads(threads, || (0..exp.replicates).into_par_iter().map(one).collect())
}

/// Mean over replicates of the pseudo-regret at each checkpoint.
pub fn mean_regret_by_checkpoint(rows: &[Vec<CheckpointRow>]) -> Vec<(u64, f64)> {
    if rows.is_empty() {
        return Vec::new();
    }
    let n = rows.len() as f64;
    (0..rows[0].len())
        .map(|j| (rows[0][j].t, rows.iter().map(|r| r[j].regret).sum::<f64>() / n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicated_optimal_arms_have_zero_regret() {
        let inst = BanditInstance::bernoulli(&[0.7, 0.7]).unwrap();
        let rec = run_episode(&inst, Strategy::KlUcb, 0.0, 500, 1, 0, EpisodeOptions::default()).unwrap();
        assert_eq!(pseudo_regret(&rec, &inst).unwrap(), 0.0);
        assert_eq!(rec.pulls.iter().sum::<u64>(), 500);
    }

    #[test]
    fn deterministic_and_conserving() {
        let inst = BanditInstance::bernoulli(&[0.9, 0.8, 0.5]).unwrap();
        for s in [Strategy::KlUcb, Strategy::KlUcbPlus] {
            let a = run_episode(&inst, s, 0.0, 2000, 11, 3, EpisodeOptions::default()).unwrap();
            let b = run_episode(&inst, s, 0.0, 2000, 11, 3, EpisodeOptions::default()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.pulls.iter().sum::<u64>(), 2000);
            assert!(a.regret.windows(2).all(|w| w[1] >= w[0]));
            assert!((pseudo_regret(&a, &inst).unwrap() - a.regret.last().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudo_regret_direct_sum() {
        let inst = BanditInstance::bernoulli(&[0.9, 0.8]).unwrap();
        let rec = EpisodeRecord {
            horizon: 15,
            pulls: vec![10, 5],
            actions: vec![],
            regret: vec![],
            crossing: vec![],
            epsilon: 0.05,
            seed: 0,
            replicate: 0,
        };
        assert!((pseudo_regret(&rec, &inst).unwrap() - 0.5).abs() < 1e-12);
        let bad = EpisodeRecord { pulls: vec![1, 2, 3], ..rec };
        assert!(matches!(pseudo_regret(&bad, &inst), Err(Error::Mismatch(_))));
    }

    #[test]
    fn horizon_must_cover_arms() {
        let inst = BanditInstance::bernoulli(&[0.9, 0.8, 0.1]).unwrap();
        assert!(matches!(
            run_episode(&inst, Strategy::KlUcb, 0.0, 2, 0, 0, EpisodeOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gaussian_and_discrete_arms_run() {
        let g = FamilyModel::gaussian();
        let inst = BanditInstance::new(vec![
            (g.clone(), FamilyModel::gaussian_theta(1.0, 1.0)),
            (g, FamilyModel::gaussian_theta(0.0, 2.0)),
        ])
        .unwrap();
        let rec = run_episode(&inst, Strategy::KlUcb, 0.0, 1000, 5, 0, EpisodeOptions::default()).unwrap();
        assert!(rec.pulls[0] > rec.pulls[1]);
        let d = FamilyModel::discrete(&[0.0, 0.5, 1.0]).unwrap();
        let inst = BanditInstance::new(vec![
            (d.clone(), FamilyModel::discrete_theta(&[0.2, 0.2, 0.6])),
            (d, FamilyModel::discrete_theta(&[0.6, 0.2, 0.2])),
        ])
        .unwrap();
        let rec = run_episode(&inst, Strategy::KlUcbPlus, 0.0, 1000, 5, 0, EpisodeOptions::default()).unwrap();
        assert!(rec.pulls[0] > rec.pulls[1]);
    }

    #[test]
    fn threads_do_not_change_results() {
        let inst = BanditInstance::bernoulli(&[0.9, 0.8]).unwrap();
        let exp = RegretExperiment { strategy: Strategy::KlUcb, xi: 0.0, horizon: 512, replicates: 8, seed: 3 };
        let a = run_regret_experiment(&inst, &exp, EpisodeOptions::default(), Some(1)).unwrap();
        let b = run_regret_experiment(&inst, &exp, EpisodeOptions::default(), Some(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].len(), 10);
    }

    #[test]
    fn lai_robbins_two_arm() {
        let inst = BanditInstance::bernoulli(&[0.9, 0.8]).unwrap();
        let c = inst.lai_robbins_constant().unwrap();
        assert!((c - 0.1 / crate::kinf::binary_kl(0.8, 0.9)).abs() < 1e-12);
    }
}
