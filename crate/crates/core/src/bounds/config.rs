use serde::{Deserialize, Serialize};

use super::cover::cone_cover;
use super::omega::omega;
use crate::error::{Error, Result};
use crate::expfam::{FamilyModel, MeanParam, NaturalParam, ParamRegion};
use crate::kinf::projection::{project_on_mean, Objective};

/// Free parameters of the boundary-crossing bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub epsilon: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_half")]
    pub p: f64,
    /// Defaults to 0.8 when ξ ≥ K/2 and 1 otherwise (see [`BoundParams::default_q`]).
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "default_half")]
    pub eta: f64,
    pub xi: f64,
}

fn default_b() -> f64 {
    4.0
}

fn default_half() -> f64 {
    0.5
}

impl BoundParams {
    pub fn new(epsilon: f64, xi: f64) -> Self {
        Self { epsilon, b: 4.0, p: 0.5, q: None, eta: 0.5, xi }
    }

    pub fn default_q(xi: f64, k: usize) -> f64 {
        if xi >= k as f64 / 2.0 {
            0.8
        } else {
            1.0
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.b > 1.0) {
            return bad(format!("b must exceed 1, got {}", self.b));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p must lie in (0,1), got {}", self.p));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0,1), got {}", self.eta));
        }
        if let Some(q) = self.q {
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!("q must lie in (0,1], got {q}"));
            }
        }
        if !self.xi.is_finite() {
            return bad("xi must be finite".into());
        }
        Ok(())
    }
}

/// All constants entering the bounds, resolved for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConfig {
    pub k: usize,
    pub rho: f64,
    pub v_rho: f64,
    #[serde(rename = "V_rho")]
    pub big_v_rho: f64,
    pub epsilon: f64,
    pub rho_eps: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub eta: f64,
    pub xi: f64,
    /// η ρ_ε √(v_ρ/2).
    pub alpha: f64,
    /// p η ρ_ε √(2v_ρ²/V_ρ); equal to `chi_eps`.
    pub chi: f64,
    /// ρ_ε · p η √(2v_ρ²/V_ρ).
    pub chi_eps: f64,
    pub cover_count: usize,
    /// C(K, b, ρ, p, η).
    #[serde(rename = "C")]
    pub big_c: f64,
    /// C(K, 4, ρ, p, η), used by both corollaries.
    #[serde(rename = "C_b4")]
    pub big_c_b4: f64,
}

impl BoundConfig {
    /// Resolves every constant from explicit curvature data.
    #[allow(clippy::too_many_arguments)]
    pub fn from_constants(
        k: usize,
        rho: f64,
        v_rho: f64,
        big_v_rho: f64,
        rho_eps: f64,
        cover_count: usize,
        params: BoundParams,
    ) -> Result<Self> {
        params.validate()?;
        if !(v_rho > 0.0 && v_rho <= big_v_rho && big_v_rho.is_finite()) {
            return Err(Error::Config(format!("need 0 < v_rho <= V_rho < inf, got {v_rho}, {big_v_rho}")));
        }
        if !(rho > 0.0) {
            return Err(Error::Config(format!("the enlargement rho must be positive, got {rho}")));
        }
        if !(rho_eps > 0.0) {
            return Err(Error::Config(format!("rho_eps must be positive, got {rho_eps}")));
        }
        if cover_count < 2 {
            return Err(Error::Config("cover count must be at least 2".into()));
        }
        let BoundParams { epsilon, b, p, q, eta, xi } = params;
        let q = q.unwrap_or_else(|| BoundParams::default_q(xi, k));
        let alpha = eta * rho_eps * (v_rho / 2.0).sqrt();
        let chi_eps = rho_eps * p * eta * (2.0 * v_rho * v_rho / big_v_rho).sqrt();
        let big_c = constant_big_c(k, b, rho, v_rho, big_v_rho, p, cover_count);
        let big_c_b4 = constant_big_c(k, 4.0, rho, v_rho, big_v_rho, p, cover_count);
        Ok(Self {
            k,
            rho,
            v_rho,
            big_v_rho,
            epsilon,
            rho_eps,
            b,
            p,
            q,
            eta,
            xi,
            alpha,
            chi: chi_eps,
            chi_eps,
            cover_count,
            big_c,
            big_c_b4,
        })
    }

    /// Resolves constants for a family, with θ⋆ the region center.
    pub fn for_family(model: &FamilyModel, region: &ParamRegion, params: BoundParams) -> Result<Self> {
        params.validate()?;
        let k = model.dim();
        let rho_eps = rho_epsilon(model, &region.center, params.epsilon)?;
        let cover = cone_cover(k, params.p, params.eta, &region.center, rho_eps)?;
        Self::from_constants(k, region.rho, region.v_rho, region.big_v_rho, rho_eps, cover.count, params)
    }

    pub fn threshold(&self) -> super::ThresholdFn {
        super::ThresholdFn::new(self.xi)
    }

    /// Inputs of the corollary evaluators (b = 4).
    pub fn corollary_inputs(&self) -> CorollaryInputs {
        CorollaryInputs { k: self.k, xi: self.xi, chi_eps: self.chi_eps, big_c: self.big_c_b4 }
    }
}

/// The quantities the corollaries depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryInputs {
    pub k: usize,
    pub xi: f64,
    pub chi_eps: f64,
    /// C(K, 4, ρ, p, η).
    #[serde(rename = "C")]
    pub big_c: f64,
}

/// C(K,b,ρ,p,η) = C_{p,η,K}(2 ω_{p,K−2}/ω_{max(p,2/√5),K−2} · M^{K/2} + 1) with
/// M = max{2bV⁴/(pρ²v⁶), V³/v⁴, b²V⁵/(p v⁶ (1/2 + 1/K))}.
pub fn constant_big_c(k: usize, b: f64, rho: f64, v: f64, big_v: f64, p: f64, cover_count: usize) -> f64 {
    let kf = k as f64;
    let v6 = v.powi(6);
    let m = (2.0 * b * big_v.powi(4) / (p * rho * rho * v6))
        .max(big_v.powi(3) / v.powi(4))
        .max(b * b * big_v.powi(5) / (p * v6 * (0.5 + 1.0 / kf)));
    let kk = k as i32 - 2;
    let ratio = omega(p, kk) / omega(p.max(2.0 / 5f64.sqrt()), kk);
    cover_count as f64 * (2.0 * ratio * m.powf(kf / 2.0) + 1.0)
}

/// ρ_ε = inf{‖θ′ − θ⋆‖ : E_θ′ X = μ⋆ − ε}.
pub fn rho_epsilon(model: &FamilyModel, theta_star: &NaturalParam, epsilon: f64) -> Result<f64> {
    model.check_domain(theta_star)?;
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let target = model.mean(theta_star)? - epsilon;
    if target <= model.min_mean() {
        return Err(Error::UnreachableMean(format!(
            "mu* - epsilon = {target} is not above the smallest achievable mean {}",
            model.min_mean()
        )));
    }
    if model.dim() == 1 {
        // the mean determines the natural parameter
        let (a, c) = model.mean_functional();
        let f = (target - a) / c[0];
        let theta = model.mean_to_natural(&MeanParam::scalar(f))?;
        return Ok((theta.theta[0] - theta_star.theta[0]).abs());
    }
    let proj = project_on_mean(model, Objective::Euclidean(theta_star), target)?;
    Ok(proj.theta.distance(theta_star))
}
