use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::params::{dot, Coords, MeanParam, NaturalParam};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Bernoulli,
    #[serde(rename = "gaussian")]
    GaussianMeanVar,
    #[serde(rename = "discrete")]
    DiscreteAtoms,
}

/// An exponential family `ν_θ(x) ∝ exp(⟨θ, F(x)⟩ − ψ(θ)) ν₀(x)`.
///
/// * Bernoulli: `F(x) = x`, `x ∈ {0, 1}`.
/// * Gaussian with unknown mean and variance: `F(x) = (x, x²)`.
/// * Finitely supported on atoms `x_1 < … < x_K < x⋆`: `F(x) = (1{x = x_k})_{k ≤ K}`,
///   the last atom acting as reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr")]
pub struct FamilyModel {
    kind: FamilyKind,
    atoms: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRepr {
    kind: FamilyKind,
    #[serde(default)]
    atoms: Vec<f64>,
}

impl TryFrom<FamilyRepr> for FamilyModel {
    type Error = Error;

    fn try_from(r: FamilyRepr) -> Result<Self> {
        match r.kind {
            FamilyKind::DiscreteAtoms => Self::discrete(&r.atoms),
            _ if !r.atoms.is_empty() => Err(Error::Config("atoms are only meaningful for a discrete family".into())),
            FamilyKind::Bernoulli => Ok(Self::bernoulli()),
            FamilyKind::GaussianMeanVar => Ok(Self::gaussian()),
        }
    }
}

impl FamilyModel {
    pub fn bernoulli() -> Self {
        Self { kind: FamilyKind::Bernoulli, atoms: Vec::new() }
    }

    pub fn gaussian() -> Self {
        Self { kind: FamilyKind::GaussianMeanVar, atoms: Vec::new() }
    }

    /// Family supported on `atoms`, which must be finite and strictly increasing.
    /// At least two atoms are needed.
    pub fn discrete(atoms: &[f64]) -> Result<Self> {
        if atoms.len() < 2 {
            return Err(Error::Config("discrete family needs at least two atoms".into()));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("atoms must be finite".into()));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("atoms must be strictly increasing".into()));
        }
        Ok(Self { kind: FamilyKind::DiscreteAtoms, atoms: atoms.to_vec() })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Largest atom x⋆ (discrete families only).
    pub fn x_star(&self) -> Option<f64> {
        self.atoms.last().copied()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::Bernoulli => 1,
            FamilyKind::GaussianMeanVar => 2,
            FamilyKind::DiscreteAtoms => self.atoms.len() - 1,
        }
    }

    /// Supremum μ⁺ of the achievable means.
    pub fn max_mean(&self) -> f64 {
        match self.kind {
            FamilyKind::Bernoulli => 1.0,
            FamilyKind::GaussianMeanVar => f64::INFINITY,
            FamilyKind::DiscreteAtoms => *self.atoms.last().unwrap(),
        }
    }

    pub fn min_mean(&self) -> f64 {
        match self.kind {
            FamilyKind::Bernoulli => 0.0,
            FamilyKind::GaussianMeanVar => f64::NEG_INFINITY,
            FamilyKind::DiscreteAtoms => self.atoms[0],
        }
    }

    /// Whether the support is bounded (so that Pinsker-type brackets apply).
    pub fn is_bounded(&self) -> bool {
        self.kind != FamilyKind::GaussianMeanVar
    }

    /// Open-set membership in Θ_D.
    pub fn in_domain(&self, theta: &NaturalParam) -> bool {
        if theta.dim() != self.dim() || theta.theta.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self.kind {
            FamilyKind::GaussianMeanVar => theta.theta[1] < 0.0,
            _ => true,
        }
    }

    pub fn check_domain(&self, theta: &NaturalParam) -> Result<()> {
        if theta.dim() != self.dim() {
            return Err(Error::domain(format!(
                "parameter has dimension {}, family has dimension {}",
                theta.dim(),
                self.dim()
            )));
        }
        if !self.in_domain(theta) {
            return Err(Error::domain(format!("{:?} outside the natural domain", theta.theta)));
        }
        Ok(())
    }

    /// Mean functional E[X] as an affine map of the sufficient-statistic mean:
    /// `E X = a + ⟨c, ∇ψ(θ)⟩`.
    pub fn mean_functional(&self) -> (f64, Coords) {
        match self.kind {
            FamilyKind::Bernoulli => (0.0, Coords::from_slice(&[1.0])),
            FamilyKind::GaussianMeanVar => (0.0, Coords::from_slice(&[1.0, 0.0])),
            FamilyKind::DiscreteAtoms => {
                let xs = *self.atoms.last().unwrap();
                let c = self.atoms[..self.atoms.len() - 1].iter().map(|x| x - xs).collect();
                (xs, c)
            }
        }
    }

    /// E[X] computed from a sufficient-statistic mean.
    pub fn mean_of_stat(&self, f: &[f64]) -> f64 {
        match self.kind {
            FamilyKind::Bernoulli | FamilyKind::GaussianMeanVar => f[0],
            FamilyKind::DiscreteAtoms => {
                let xs = *self.atoms.last().unwrap();
                xs + self.atoms.iter().zip(f).map(|(x, p)| (x - xs) * p).sum::<f64>()
            }
        }
    }

    /// E_θ[X].
    pub fn mean(&self, theta: &NaturalParam) -> Result<f64> {
        let g = self.grad_log_partition(theta)?;
        Ok(self.mean_of_stat(&g.f_mean))
    }

    /// Sufficient statistic F(x) written into `out`.
    pub fn sufficient_stat(&self, x: f64, out: &mut [f64]) {
        match self.kind {
            FamilyKind::Bernoulli => out[0] = x,
            FamilyKind::GaussianMeanVar => {
                out[0] = x;
                out[1] = x * x;
            }
            FamilyKind::DiscreteAtoms => {
                for (o, a) in out.iter_mut().zip(&self.atoms) {
                    *o = if *a == x { 1.0 } else { 0.0 };
                }
            }
        }
    }

    pub fn log_partition(&self, theta: &NaturalParam) -> Result<f64> {
        self.check_domain(theta)?;
        let t = &theta.theta;
        Ok(match self.kind {
            FamilyKind::Bernoulli => softplus(t[0]),
            FamilyKind::GaussianMeanVar => {
                -t[0] * t[0] / (4.0 * t[1]) + 0.5 * (-std::f64::consts::PI / t[1]).ln()
            }
            FamilyKind::DiscreteAtoms => {
                let m = t.iter().copied().fold(0.0_f64, f64::max);
                let s: f64 = (-m).exp() + t.iter().map(|x| (x - m).exp()).sum::<f64>();
                m + s.ln()
            }
        })
    }

    pub fn grad_log_partition(&self, theta: &NaturalParam) -> Result<MeanParam> {
        self.check_domain(theta)?;
        let t = &theta.theta;
        let f = match self.kind {
            FamilyKind::Bernoulli => Coords::from_slice(&[sigmoid(t[0])]),
            FamilyKind::GaussianMeanVar => {
                let (m, v) = gaussian_moments(t);
                Coords::from_slice(&[m, v + m * m])
            }
            FamilyKind::DiscreteAtoms => discrete_probs(t),
        };
        Ok(MeanParam { f_mean: f })
    }

    pub fn hessian_log_partition(&self, theta: &NaturalParam) -> Result<DMatrix<f64>> {
        self.check_domain(theta)?;
        let t = &theta.theta;
        Ok(match self.kind {
            FamilyKind::Bernoulli => {
                let mu = sigmoid(t[0]);
                DMatrix::from_element(1, 1, mu * (1.0 - mu))
            }
            FamilyKind::GaussianMeanVar => {
                let (m, v) = gaussian_moments(t);
                let off = 2.0 * m * v;
                DMatrix::from_row_slice(2, 2, &[v, off, off, 2.0 * v * v + 4.0 * m * m * v])
            }
            FamilyKind::DiscreteAtoms => {
                let p = discrete_probs(t);
                let k = p.len();
                DMatrix::from_fn(k, k, |i, j| if i == j { p[i] - p[i] * p[i] } else { -p[i] * p[j] })
            }
        })
    }

    /// E_θ[X F(X)], needed by the KKT system of the projection problem.
    pub fn moment_x_stat(&self, theta: &NaturalParam) -> Result<Coords> {
        self.check_domain(theta)?;
        let t = &theta.theta;
        Ok(match self.kind {
            FamilyKind::Bernoulli => Coords::from_slice(&[sigmoid(t[0])]),
            FamilyKind::GaussianMeanVar => {
                let (m, v) = gaussian_moments(t);
                Coords::from_slice(&[v + m * m, m * m * m + 3.0 * m * v])
            }
            FamilyKind::DiscreteAtoms => {
                let p = discrete_probs(t);
                p.iter().zip(&self.atoms).map(|(p, x)| p * x).collect()
            }
        })
    }

    /// B^ψ(θ, θ′) = ψ(θ′) − ψ(θ) − ⟨θ′ − θ, ∇ψ(θ)⟩ = KL(ν_θ, ν_θ′).
    pub fn bregman(&self, theta: &NaturalParam, theta2: &NaturalParam) -> Result<f64> {
        let g = self.grad_log_partition(theta)?;
        let psi1 = self.log_partition(theta)?;
        let psi2 = self.log_partition(theta2)?;
        let lin: f64 = theta2
            .theta
            .iter()
            .zip(&theta.theta)
            .zip(&g.f_mean)
            .map(|((a, b), g)| (a - b) * g)
            .sum();
        Ok((psi2 - psi1 - lin).max(0.0))
    }

    /// Φ*(f) = sup_η ⟨η, f⟩ − ψ(θ⋆ + η) + ψ(θ⋆), evaluated as B^ψ(∇ψ⁻¹(f), θ⋆).
    pub fn fenchel_dual(&self, theta_star: &NaturalParam, f: &MeanParam) -> Result<f64> {
        let theta = self.mean_to_natural(f).map_err(|e| match e {
            Error::Boundary(m) => Error::Inversion(m),
            other => other,
        })?;
        self.bregman(&theta, theta_star)
    }

    /// Inverse of the mean map. Closed form for every supported kind.
    pub fn mean_to_natural(&self, f: &MeanParam) -> Result<NaturalParam> {
        if f.dim() != self.dim() {
            return Err(Error::domain(format!(
                "mean parameter has dimension {}, family has dimension {}",
                f.dim(),
                self.dim()
            )));
        }
        let v = &f.f_mean;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Boundary(format!("non-finite mean parameter {:?}", v)));
        }
        match self.kind {
            FamilyKind::Bernoulli => {
                let mu = v[0];
                if mu <= 0.0 || mu >= 1.0 {
                    return Err(Error::Boundary(format!("Bernoulli mean {mu} not in (0, 1)")));
                }
                Ok(NaturalParam::scalar((mu / (1.0 - mu)).ln()))
            }
            FamilyKind::GaussianMeanVar => {
                let m = v[0];
                let var = v[1] - m * m;
                if var <= 1e-300 || var <= 1e-14 * v[1].abs() {
                    return Err(Error::Boundary(format!("Gaussian variance {var} not positive")));
                }
                Ok(NaturalParam::new(&[m / var, -0.5 / var]))
            }
            FamilyKind::DiscreteAtoms => {
                let ps = 1.0 - v.iter().sum::<f64>();
                if ps <= 0.0 || v.iter().any(|p| *p <= 0.0) {
                    return Err(Error::Boundary(format!(
                        "discrete probabilities {:?} (reference mass {ps}) not all positive",
                        v
                    )));
                }
                Ok(NaturalParam { theta: v.iter().map(|p| (p / ps).ln()).collect() })
            }
        }
    }

    /// Damped Newton inversion of ∇ψ, usable for any kind. Kept as a
    /// cross-check of the closed forms.
    pub fn mean_to_natural_newton(&self, f: &MeanParam, start: &NaturalParam) -> Result<NaturalParam> {
        self.check_domain(start)?;
        let target = &f.f_mean;
        let scale = 1.0 + super::params::norm(target);
        let mut theta = start.clone();
        let resid = |th: &NaturalParam| -> Result<Coords> {
            let g = self.grad_log_partition(th)?;
            Ok(g.f_mean.iter().zip(target).map(|(a, b)| a - b).collect())
        };
        let mut r = resid(&theta)?;
        for _ in 0..200 {
            let rn = super::params::norm(&r);
            if rn <= 1e-12 * scale {
                return Ok(theta);
            }
            let h = self.hessian_log_partition(&theta)?;
            let rhs = nalgebra::DVector::from_iterator(r.len(), r.iter().map(|x| -x));
            let step = h
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Inversion("singular Hessian during inversion".into()))?;
            let mut s = 1.0;
            loop {
                let cand = NaturalParam {
                    theta: theta.theta.iter().zip(step.iter()).map(|(a, d)| a + s * d).collect(),
                };
                if self.in_domain(&cand) {
                    let rc = resid(&cand)?;
                    if super::params::norm(&rc) < rn {
                        theta = cand;
                        r = rc;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-12 {
                    return Err(Error::Inversion(format!("line search failed for {:?}", target)));
                }
            }
        }
        Err(Error::Convergence(format!("Newton inversion for {:?}", target)))
    }

    /// Natural parameter of a Bernoulli with mean `mu`.
    pub fn bernoulli_theta(mu: f64) -> NaturalParam {
        NaturalParam::scalar((mu / (1.0 - mu)).ln())
    }

    /// Natural parameter of N(mean, var).
    pub fn gaussian_theta(mean: f64, var: f64) -> NaturalParam {
        NaturalParam::new(&[mean / var, -0.5 / var])
    }

    /// Natural parameter from a full probability vector over all atoms
    /// (length K+1, reference atom last).
    pub fn discrete_theta(probs: &[f64]) -> NaturalParam {
        let ps = *probs.last().unwrap();
        NaturalParam { theta: probs[..probs.len() - 1].iter().map(|p| (p / ps).ln()).collect() }
    }

    /// Natural parameter from interpretable arm parameters: a Bernoulli mean,
    /// a Gaussian (mean, variance) pair or a full probability vector.
    pub fn theta_from_interpretable(&self, params: &[f64]) -> Result<NaturalParam> {
        let theta = match self.kind {
            FamilyKind::Bernoulli => {
                if params.len() != 1 || !(params[0] > 0.0 && params[0] < 1.0) {
                    return Err(Error::domain(format!("Bernoulli mean must lie in (0,1), got {:?}", params)));
                }
                Self::bernoulli_theta(params[0])
            }
            FamilyKind::GaussianMeanVar => {
                if params.len() != 2 || !(params[1] > 0.0) {
                    return Err(Error::domain(format!("Gaussian needs (mean, variance>0), got {:?}", params)));
                }
                Self::gaussian_theta(params[0], params[1])
            }
            FamilyKind::DiscreteAtoms => {
                if params.len() != self.atoms.len() {
                    return Err(Error::domain(format!(
                        "expected {} probabilities, got {}",
                        self.atoms.len(),
                        params.len()
                    )));
                }
                let s: f64 = params.iter().sum();
                if params.iter().any(|p| !(*p > 0.0)) || (s - 1.0).abs() > 1e-9 {
                    return Err(Error::domain(format!("probabilities must be positive and sum to 1: {:?}", params)));
                }
                Self::discrete_theta(params)
            }
        };
        self.check_domain(&theta)?;
        Ok(theta)
    }

    /// Gaussian (mean, variance) of a natural parameter.
    pub fn gaussian_mean_var(theta: &NaturalParam) -> (f64, f64) {
        gaussian_moments(&theta.theta)
    }

    /// E X = a + ⟨c, f⟩ gradient direction, i.e. ∇_θ E_θ X = ∇²ψ(θ) c.
    pub(crate) fn mean_gradient(&self, theta: &NaturalParam) -> Result<Coords> {
        let h = self.hessian_log_partition(theta)?;
        let (_, c) = self.mean_functional();
        let k = c.len();
        Ok((0..k).map(|i| (0..k).map(|j| h[(i, j)] * c[j]).sum()).collect())
    }

    pub(crate) fn mean_from_grad(&self, g: &MeanParam) -> f64 {
        let (a, c) = self.mean_functional();
        a + dot(&c, &g.f_mean)
    }
}

pub fn log_partition(model: &FamilyModel, theta: &NaturalParam) -> Result<f64> {
    model.log_partition(theta)
}

pub fn grad_log_partition(model: &FamilyModel, theta: &NaturalParam) -> Result<MeanParam> {
    model.grad_log_partition(theta)
}

pub fn hessian_log_partition(model: &FamilyModel, theta: &NaturalParam) -> Result<DMatrix<f64>> {
    model.hessian_log_partition(theta)
}

pub fn bregman(model: &FamilyModel, theta: &NaturalParam, theta2: &NaturalParam) -> Result<f64> {
    model.bregman(theta, theta2)
}

pub fn fenchel_dual(model: &FamilyModel, theta_star: &NaturalParam, f: &MeanParam) -> Result<f64> {
    model.fenchel_dual(theta_star, f)
}

pub fn mean_to_natural(model: &FamilyModel, f: &MeanParam) -> Result<NaturalParam> {
    model.mean_to_natural(f)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn gaussian_moments(t: &[f64]) -> (f64, f64) {
    let v = -0.5 / t[1];
    (t[0] * v, v)
}

fn discrete_probs(t: &[f64]) -> Coords {
    let m = t.iter().copied().fold(0.0_f64, f64::max);
    let z: f64 = (-m).exp() + t.iter().map(|x| (x - m).exp()).sum::<f64>();
    t.iter().map(|x| (x - m).exp() / z).collect()
}
