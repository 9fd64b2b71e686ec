//! Mean-constrained projections in natural coordinates.
//!
//! Solves `min_θ′ D(θ′) s.t. E_θ′ X = μ` for a Bregman or Euclidean objective
//! by Newton's method on the full stationarity system
//!
//! ```text
//! ∇D(θ′) − λ ∇²ψ(θ′) c = 0,     a + ⟨c, ∇ψ(θ′)⟩ − μ = 0,
//! ```
//!
//! with continuation in the target mean starting from the unconstrained
//! minimizer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expfam::{norm, Coords, FamilyModel, NaturalParam};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective<'a> {
    /// θ′ ↦ B^ψ(θ, θ′)
    Bregman(&'a NaturalParam),
    /// θ′ ↦ ½‖θ′ − θ‖²
    Euclidean(&'a NaturalParam),
}

impl Objective<'_> {
    fn source(&self) -> &NaturalParam {
        match self {
            Objective::Bregman(t) | Objective::Euclidean(t) => t,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Projection {
    pub theta: NaturalParam,
    /// Multiplier of the mean constraint, signed.
    pub lambda: f64,
}

struct System<'a> {
    model: &'a FamilyModel,
    obj: Objective<'a>,
    source_grad: Coords,
}

impl<'a> System<'a> {
    fn residual(&self, theta: &NaturalParam, lambda: f64, target: f64) -> Result<Coords> {
        let m = self.model.mean_gradient(theta)?;
        let g = self.model.grad_log_partition(theta)?;
        let mut r: Coords = match self.obj {
            Objective::Bregman(_) => g.f_mean.iter().zip(&self.source_grad).map(|(a, b)| a - b).collect(),
            Objective::Euclidean(src) => theta.theta.iter().zip(&src.theta).map(|(a, b)| a - b).collect(),
        };
        for (ri, mi) in r.iter_mut().zip(&m) {
            *ri -= lambda * mi;
        }
        r.push(self.model.mean_from_grad(&g) - target);
        Ok(r)
    }

    fn jacobian(&self, theta: &NaturalParam, lambda: f64) -> Result<DMatrix<f64>> {
        let k = theta.dim();
        let m = self.model.mean_gradient(theta)?;
        let h_obj = match self.obj {
            Objective::Bregman(_) => self.model.hessian_log_partition(theta)?,
            Objective::Euclidean(_) => DMatrix::identity(k, k),
        };
        let mut j = DMatrix::zeros(k + 1, k + 1);
        for col in 0..k {
            // derivative of ∇²ψ(θ′)c along coordinate `col`, central differences
            let h = 1e-6 * (1.0 + theta.theta[col].abs());
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp.theta[col] += h;
            tm.theta[col] -= h;
            let (mp, mm) = if self.model.in_domain(&tm) && self.model.in_domain(&tp) {
                (self.model.mean_gradient(&tp)?, self.model.mean_gradient(&tm)?)
            } else {
                (self.model.mean_gradient(&tp)?, m.clone())
            };
            let denom = if self.model.in_domain(&tm) { 2.0 * h } else { h };
            for row in 0..k {
                j[(row, col)] = h_obj[(row, col)] - lambda * (mp[row] - mm[row]) / denom;
            }
        }
        for i in 0..k {
            j[(i, k)] = -m[i];
            j[(k, i)] = m[i];
        }
        Ok(j)
    }

    /// Newton iterations at a fixed target; `None` when they fail to converge.
    fn newton(&self, theta: &NaturalParam, lambda: f64, target: f64) -> Result<Option<Projection>> {
        let k = theta.dim();
        let mut th = theta.clone();
        let mut lam = lambda;
        let mut r = self.residual(&th, lam, target)?;
        let tol = 1e-13 * (1.0 + norm(&th.theta) + target.abs());
        for _ in 0..60 {
            let rn = norm(&r);
            if rn <= tol {
                return Ok(Some(Projection { theta: th, lambda: lam }));
            }
            let j = self.jacobian(&th, lam)?;
            let rhs = DVector::from_iterator(k + 1, r.iter().map(|x| -x));
            let Some(step) = j.lu().solve(&rhs) else {
                return Ok(None);
            };
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-6 {
                let cand = NaturalParam { theta: (0..k).map(|i| th.theta[i] + s * step[i]).collect() };
                if self.model.in_domain(&cand) {
                    let lc = lam + s * step[k];
                    let rc = self.residual(&cand, lc, target)?;
                    if norm(&rc) < rn {
                        th = cand;
                        lam = lc;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !accepted {
                // stagnation at round-off level counts as convergence
                if rn <= 1e3 * tol {
                    return Ok(Some(Projection { theta: th, lambda: lam }));
                }
                return Ok(None);
            }
        }
        Ok(None)
    }
}

/// Projects onto `{θ′ : E_θ′ X = target}` for the given objective.
pub(crate) fn project_on_mean(model: &FamilyModel, obj: Objective<'_>, target: f64) -> Result<Projection> {
    let src = obj.source();
    model.check_domain(src)?;
    let sys = System { model, obj, source_grad: model.grad_log_partition(src)?.f_mean };
    let start_mean = model.mean(src)?;
    let mut cur = Projection { theta: src.clone(), lambda: 0.0 };
    let mut at = start_mean;
    let mut step = target - start_mean;
    let mut iterations = 0;
    while at != target {
        iterations += 1;
        if iterations > 10_000 || step.abs() < 1e-14 * (1.0 + target.abs()) {
            return Err(Error::Convergence(format!("continuation stalled at mean {at} towards {target}")));
        }
        let next = if (target - at).abs() <= step.abs() { target } else { at + step };
        match sys.newton(&cur.theta, cur.lambda, next)? {
            Some(p) => {
                cur = p;
                at = next;
                step *= 1.5;
            }
            None => step *= 0.25,
        }
    }
    Ok(cur)
}
