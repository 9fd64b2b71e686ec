//! The projected divergence
//! `K_inf(ν_θ, μ) = inf { B^ψ(θ, θ′) : E_θ′ X ≥ μ }`.

pub(crate) mod projection;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expfam::{norm, FamilyKind, FamilyModel, NaturalParam};
use projection::{project_on_mean, Objective};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinfResult {
    pub value: f64,
    /// Minimizing θ′; equal to θ when the constraint is inactive.
    pub minimizer: NaturalParam,
    /// KKT multiplier of the mean constraint. It equals the derivative of the
    /// value with respect to μ.
    pub lambda: f64,
    pub active: bool,
}

impl KinfResult {
    fn inactive(theta: &NaturalParam) -> Self {
        Self { value: 0.0, minimizer: theta.clone(), lambda: 0.0, active: false }
    }
}

/// Solution of the one-dimensional dual problem for a finitely supported law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDual {
    pub value: f64,
    /// Maximizer in `[0, 1)`.
    pub lambda: f64,
    /// Primal minimizer `q_x = p_x / (1 − λ(x−μ)/(x⋆−μ))`.
    pub q: Vec<f64>,
    pub active: bool,
}

/// Binary relative entropy kl(p, q) with the 0·log 0 = 0 convention.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a <= 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

pub fn kinf(model: &FamilyModel, theta: &NaturalParam, mu: f64) -> Result<KinfResult> {
    model.check_domain(theta)?;
    if !mu.is_finite() {
        return Err(Error::domain(format!("target mean {mu} is not finite")));
    }
    if mu >= model.max_mean() {
        return Err(Error::UnreachableMean(format!(
            "target {mu} is not below the largest achievable mean {}",
            model.max_mean()
        )));
    }
    let m = model.mean(theta)?;
    if m >= mu {
        return Ok(KinfResult::inactive(theta));
    }
    match model.kind() {
        FamilyKind::Bernoulli => Ok(KinfResult {
            value: binary_kl(m, mu),
            minimizer: FamilyModel::bernoulli_theta(mu),
            lambda: (mu - m) / (mu * (1.0 - mu)),
            active: true,
        }),
        FamilyKind::GaussianMeanVar => {
            let (m, var) = FamilyModel::gaussian_mean_var(theta);
            let d = mu - m;
            let s2 = var + d * d;
            Ok(KinfResult {
                value: 0.5 * (d * d / var).ln_1p(),
                minimizer: FamilyModel::gaussian_theta(mu, s2),
                lambda: d / s2,
                active: true,
            })
        }
        FamilyKind::DiscreteAtoms => {
            let g = model.grad_log_partition(theta)?;
            let probs = full_probs(&g.f_mean);
            let dual = kinf_discrete_dual(&probs, model.atoms(), mu)?;
            let xs = model.max_mean();
            Ok(KinfResult {
                value: dual.value,
                minimizer: FamilyModel::discrete_theta(&dual.q),
                lambda: dual.lambda / (xs - mu),
                active: dual.active,
            })
        }
    }
}

/// `K_inf` through the generic constrained solver, for any kind.
pub fn kinf_generic(model: &FamilyModel, theta: &NaturalParam, mu: f64) -> Result<KinfResult> {
    model.check_domain(theta)?;
    if mu >= model.max_mean() {
        return Err(Error::UnreachableMean(format!("target {mu} is not achievable")));
    }
    let m = model.mean(theta)?;
    if m >= mu {
        return Ok(KinfResult::inactive(theta));
    }
    let p = project_on_mean(model, Objective::Bregman(theta), mu)?;
    Ok(KinfResult { value: model.bregman(theta, &p.theta)?, minimizer: p.theta, lambda: p.lambda, active: true })
}

/// `sup_{λ∈[0,1]} Σ_x p(x) log(1 − λ(x−μ)/(x⋆−μ))` for probabilities over all
/// atoms (reference atom x⋆ last).
pub fn kinf_discrete_dual(probs: &[f64], atoms: &[f64], mu: f64) -> Result<DiscreteDual> {
    if probs.len() != atoms.len() || atoms.len() < 2 {
        return Err(Error::domain(format!(
            "{} probabilities for {} atoms",
            probs.len(),
            atoms.len()
        )));
    }
    if probs.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::domain("probabilities must be strictly positive".to_string()));
    }
    discrete_dual_solve(probs, atoms, mu)
}

/// Same as [`kinf_discrete_dual`] but zero probabilities are allowed.
pub(crate) fn discrete_dual_solve(probs: &[f64], atoms: &[f64], mu: f64) -> Result<DiscreteDual> {
    let xs = *atoms.last().unwrap();
    if mu >= xs {
        return Err(Error::UnreachableMean(format!("target {mu} is not below x⋆ = {xs}")));
    }
    let mean: f64 = probs.iter().zip(atoms).map(|(p, x)| p * x).sum();
    if mean >= mu {
        return Ok(DiscreteDual { value: 0.0, lambda: 0.0, q: probs.to_vec(), active: false });
    }
    let a: Vec<f64> = atoms.iter().map(|x| (x - mu) / (xs - mu)).collect();
    let terms: Vec<(f64, f64)> = probs.iter().zip(&a).filter(|(p, _)| **p > 0.0).map(|(p, a)| (*p, *a)).collect();
    let d1 = |l: f64| -terms.iter().map(|(p, a)| p * a / (1.0 - l * a)).sum::<f64>();
    let d2 = |l: f64| -terms.iter().map(|(p, a)| p * a * a / ((1.0 - l * a) * (1.0 - l * a))).sum::<f64>();
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-12);
    let lambda = if d1(hi) >= 0.0 {
        hi
    } else {
        let mut l = 0.5;
        for _ in 0..200 {
            let g = d1(l);
            if g > 0.0 {
                lo = l;
            } else {
                hi = l;
            }
            if hi - lo <= 1e-16 || g == 0.0 {
                break;
            }
            let newton = l - g / d2(l);
            l = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (newton - l).abs() == 0.0 && g.abs() < 1e-15 {
                break;
            }
        }
        l
    };
    let value: f64 = terms.iter().map(|(p, a)| p * (-lambda * a).ln_1p()).sum();
    let q = probs.iter().zip(&a).map(|(p, a)| p / (1.0 - lambda * a)).collect();
    Ok(DiscreteDual { value: value.max(0.0), lambda, q, active: true })
}

/// Stacked KKT residual of the projection problem at `(θ′, λ)`:
/// the K components of `∇ψ(θ′)(1 + λE_θ′X) − ∇ψ(θ) − λE_θ′[XF(X)]`, followed by
/// `|λ(μ − E_θ′X)| + max(μ − E_θ′X, 0)` (complementarity and feasibility).
pub fn kkt_residual(
    model: &FamilyModel,
    theta: &NaturalParam,
    theta2: &NaturalParam,
    lambda: f64,
    mu: f64,
) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("multiplier must be nonnegative, got {lambda}")));
    }
    let g = model.grad_log_partition(theta)?;
    let g2 = model.grad_log_partition(theta2)?;
    let m2 = model.mean_from_grad(&g2);
    let xf = model.moment_x_stat(theta2)?;
    let mut r: Vec<f64> = (0..model.dim())
        .map(|k| g2.f_mean[k] * (1.0 + lambda * m2) - g.f_mean[k] - lambda * xf[k])
        .collect();
    r.push((lambda * (mu - m2)).abs() + (mu - m2).max(0.0));
    Ok(r)
}

pub fn kkt_residual_norm(
    model: &FamilyModel,
    theta: &NaturalParam,
    theta2: &NaturalParam,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    Ok(norm(&kkt_residual(model, theta, theta2, lambda, mu)?))
}

/// `K_inf` evaluated from a sufficient-statistic mean that may sit on the
/// boundary of the realizable set (empirical means). Returns the value and
/// its derivative in `mu`. Requires `mu < μ⁺`.
pub fn kinf_from_mean(model: &FamilyModel, f: &[f64], mu: f64) -> Result<(f64, f64)> {
    let m = model.mean_of_stat(f);
    if m >= mu {
        return Ok((0.0, 0.0));
    }
    match model.kind() {
        FamilyKind::Bernoulli => {
            let m = m.clamp(0.0, 1.0);
            Ok((binary_kl(m, mu), (mu - m) / (mu * (1.0 - mu))))
        }
        FamilyKind::GaussianMeanVar => {
            let var = f[1] - f[0] * f[0];
            if var <= 0.0 {
                return Ok((f64::INFINITY, f64::INFINITY));
            }
            let d = mu - m;
            Ok((0.5 * (d * d / var).ln_1p(), d / (var + d * d)))
        }
        FamilyKind::DiscreteAtoms => {
            let probs: Vec<f64> = full_probs(f).iter().map(|p| p.max(0.0)).collect();
            let dual = discrete_dual_solve(&probs, model.atoms(), mu)?;
            Ok((dual.value, dual.lambda / (model.max_mean() - mu)))
        }
    }
}

fn full_probs(f: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = f.to_vec();
    p.push(1.0 - f.iter().sum::<f64>());
    p
}

/// Coordinates helper used by tests and the CLI.
pub fn minimizer_mean(model: &FamilyModel, r: &KinfResult) -> Result<f64> {
    model.mean(&r.minimizer)
}
