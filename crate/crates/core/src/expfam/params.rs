use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Small inline vector used for parameter coordinates; K rarely exceeds 5.
pub type Coords = SmallVec<[f64; 6]>;

/// Canonical (natural) parameter θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NaturalParam {
    pub theta: Coords,
}

/// Expectation parameter ∇ψ(θ) = E_θ[F(X)], also used for empirical averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeanParam {
    pub f_mean: Coords,
}

impl NaturalParam {
    pub fn new(theta: &[f64]) -> Self {
        Self { theta: Coords::from_slice(theta) }
    }

    pub fn scalar(theta: f64) -> Self {
        Self::new(&[theta])
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn distance(&self, other: &NaturalParam) -> f64 {
        dist(&self.theta, &other.theta)
    }
}

impl MeanParam {
    pub fn new(f_mean: &[f64]) -> Self {
        Self { f_mean: Coords::from_slice(f_mean) }
    }

    pub fn scalar(f: f64) -> Self {
        Self::new(&[f])
    }

    pub fn dim(&self) -> usize {
        self.f_mean.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.f_mean
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
