use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::model::{sigmoid, FamilyKind, FamilyModel};
use super::params::{Coords, MeanParam, NaturalParam};
use crate::error::{Error, Result};

/// Generator for replicate `stream` of a run seeded with `seed`. Each stream
/// is independent of how many other streams are drawn, so replicates can be
/// executed in any order.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws observations from ν_θ.
#[derive(Debug, Clone)]
pub struct Sampler {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Bernoulli(f64),
    Gaussian(Normal<f64>),
    Discrete { cumulative: Vec<f64>, atoms: Vec<f64> },
}

impl Sampler {
    /// Bernoulli accepts θ = ±∞ for the degenerate laws δ₁, δ₀.
    pub fn new(model: &FamilyModel, theta: &NaturalParam) -> Result<Self> {
        let inner = match model.kind() {
            FamilyKind::Bernoulli => {
                if theta.dim() != 1 || theta.theta[0].is_nan() {
                    return Err(Error::domain(format!("invalid Bernoulli parameter {:?}", theta.theta)));
                }
                Inner::Bernoulli(sigmoid(theta.theta[0]))
            }
            FamilyKind::GaussianMeanVar => {
                model.check_domain(theta)?;
                let (m, v) = FamilyModel::gaussian_mean_var(theta);
                Inner::Gaussian(Normal::new(m, v.sqrt()).map_err(|e| Error::domain(e.to_string()))?)
            }
            FamilyKind::DiscreteAtoms => {
                let p = model.grad_log_partition(theta)?;
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = p
                    .f_mean
                    .iter()
                    .map(|q| {
                        acc += q;
                        acc
                    })
                    .collect();
                cumulative.push(1.0);
                Inner::Discrete { cumulative, atoms: model.atoms().to_vec() }
            }
        };
        Ok(Self { inner })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Bernoulli(p) => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Inner::Gaussian(n) => n.sample(rng),
            Inner::Discrete { cumulative, atoms } => {
                let u: f64 = rng.gen();
                let i = cumulative.partition_point(|c| *c <= u).min(atoms.len() - 1);
                atoms[i]
            }
        }
    }
}

/// Running averages F̂_1, …, F̂_n of the sufficient statistic.
pub struct SufficientStatStream<'a> {
    model: &'a FamilyModel,
    sampler: Sampler,
    rng: ChaCha8Rng,
    sum: Coords,
    buf: Coords,
    count: u64,
    remaining: u64,
}

impl<'a> Iterator for SufficientStatStream<'a> {
    type Item = MeanParam;

    fn next(&mut self) -> Option<MeanParam> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let x = self.sampler.draw(&mut self.rng);
        self.model.sufficient_stat(x, &mut self.buf);
        self.count += 1;
        for (s, f) in self.sum.iter_mut().zip(&self.buf) {
            *s += f;
        }
        let n = self.count as f64;
        Some(MeanParam { f_mean: self.sum.iter().map(|s| s / n).collect() })
    }
}

pub fn sample_sufficient_stats<'a>(
    model: &'a FamilyModel,
    theta: &NaturalParam,
    n: u64,
    seed: u64,
) -> Result<SufficientStatStream<'a>> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let k = model.dim();
    Ok(SufficientStatStream {
        model,
        sampler: Sampler::new(model, theta)?,
        rng: replicate_rng(seed, 0),
        sum: Coords::from_elem(0.0, k),
        buf: Coords::from_elem(0.0, k),
        count: 0,
        remaining: n,
    })
}
