use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{sigmoid, FamilyKind, FamilyModel};
use super::params::{Coords, NaturalParam};
use crate::error::{Error, Result};

/// Default number of grid points per axis for the discrete curvature scan.
pub const DEFAULT_GRID_POINTS: usize = 101;
/// Upper limit on the total number of grid points of the scan.
pub const MAX_GRID_TOTAL: usize = 1_000_000;

/// Base set Θ described as an axis-aligned box in interpretable coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RegionBoxRepr")]
pub enum RegionBox {
    /// Gaussian: mean range and variance range.
    MeanVariance { mean: [f64; 2], variance: [f64; 2] },
    /// Bernoulli: mean range.
    Mean { mean: [f64; 2] },
    /// Discrete: per-atom probability bounds (all K+1 atoms, reference last).
    Probs { probs_lo: Vec<f64>, probs_hi: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionBoxRepr {
    mean: Option<[f64; 2]>,
    variance: Option<[f64; 2]>,
    probs_lo: Option<Vec<f64>>,
    probs_hi: Option<Vec<f64>>,
}

impl TryFrom<RegionBoxRepr> for RegionBox {
    type Error = Error;

    fn try_from(r: RegionBoxRepr) -> Result<Self> {
        match r {
            RegionBoxRepr { mean: Some(mean), variance: Some(variance), probs_lo: None, probs_hi: None } => {
                Ok(RegionBox::MeanVariance { mean, variance })
            }
            RegionBoxRepr { mean: Some(mean), variance: None, probs_lo: None, probs_hi: None } => {
                Ok(RegionBox::Mean { mean })
            }
            RegionBoxRepr { mean: None, variance: None, probs_lo: Some(probs_lo), probs_hi: Some(probs_hi) } => {
                Ok(RegionBox::Probs { probs_lo, probs_hi })
            }
            _ => Err(Error::Config(
                "region box needs `mean`, `mean` and `variance`, or `probs_lo` and `probs_hi`".into(),
            )),
        }
    }
}

/// Description of Θ_ρ in natural coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum NaturalShape {
    /// `lo ≤ θ ≤ hi` coordinatewise.
    Box { lo: Coords, hi: Coords },
    /// `θ₂ ∈ [t2_lo, t2_hi]`, `θ₁ + 2aθ₂ ≥ −r_a`, `θ₁ + 2bθ₂ ≤ r_b`. With zero
    /// slack this is exactly the image of the (mean, variance) box.
    GaussianPolygon { t2_lo: f64, t2_hi: f64, a: f64, b: f64, r_a: f64, r_b: f64 },
}

/// Enlarged parameter set Θ_ρ with its curvature bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRegion {
    pub center: NaturalParam,
    pub base: RegionBox,
    pub rho: f64,
    /// Lower bound on the smallest Hessian eigenvalue over Θ_ρ.
    pub v_rho: f64,
    /// Upper bound on the largest Hessian eigenvalue over Θ_ρ.
    #[serde(rename = "V_rho")]
    pub big_v_rho: f64,
    pub shape: NaturalShape,
}

impl ParamRegion {
    /// Builds the region with `center` as θ⋆; the center must lie in the base box.
    pub fn new(model: &FamilyModel, center: NaturalParam, base: RegionBox, rho: f64) -> Result<Self> {
        let r = region_curvature(model, &base, rho)?;
        r.with_center(model, center)
    }

    pub fn with_center(mut self, model: &FamilyModel, center: NaturalParam) -> Result<Self> {
        model.check_domain(&center)?;
        if !base_contains(model, &self.base, &center)? {
            return Err(Error::Region(format!("center {:?} is outside the base region", center.theta)));
        }
        self.center = center;
        Ok(self)
    }

    /// Membership θ ∈ Θ_ρ.
    pub fn contains(&self, theta: &NaturalParam) -> bool {
        let t = &theta.theta;
        match &self.shape {
            NaturalShape::Box { lo, hi } => {
                t.len() == lo.len() && t.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| *l <= *x && *x <= *h)
            }
            NaturalShape::GaussianPolygon { t2_lo, t2_hi, a, b, r_a, r_b } => {
                t.len() == 2
                    && *t2_lo <= t[1]
                    && t[1] <= *t2_hi
                    && t[0] + 2.0 * a * t[1] >= -r_a
                    && t[0] + 2.0 * b * t[1] <= *r_b
            }
        }
    }

    /// Coordinatewise bounding box of Θ_ρ.
    pub fn bounding_box(&self) -> (Coords, Coords) {
        match &self.shape {
            NaturalShape::Box { lo, hi } => (lo.clone(), hi.clone()),
            NaturalShape::GaussianPolygon { t2_lo, t2_hi, a, b, r_a, r_b } => {
                let lo1 = (-2.0 * a * t2_lo).min(-2.0 * a * t2_hi) - r_a;
                let hi1 = (-2.0 * b * t2_lo).max(-2.0 * b * t2_hi) + r_b;
                (Coords::from_slice(&[lo1, *t2_lo]), Coords::from_slice(&[hi1, *t2_hi]))
            }
        }
    }

    /// Uniform draw from Θ_ρ by rejection from its bounding box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NaturalParam {
        let (lo, hi) = self.bounding_box();
        loop {
            let theta: Coords = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.gen::<f64>()).collect();
            let p = NaturalParam { theta };
            if self.contains(&p) {
                return p;
            }
        }
    }
}

/// Curvature bounds `v_ρ`, `V_ρ` over the enlargement of `base` by `rho`.
///
/// The returned region is centered at the natural parameter of the box
/// midpoint; use [`ParamRegion::with_center`] to move θ⋆.
pub fn region_curvature(model: &FamilyModel, base: &RegionBox, rho: f64) -> Result<ParamRegion> {
    region_curvature_with_grid(model, base, rho, DEFAULT_GRID_POINTS)
}

pub fn region_curvature_with_grid(
    model: &FamilyModel,
    base: &RegionBox,
    rho: f64,
    grid_points: usize,
) -> Result<ParamRegion> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Config(format!("rho must be a finite nonnegative number, got {rho}")));
    }
    match (model.kind(), base) {
        (FamilyKind::Bernoulli, RegionBox::Mean { mean: [lo, hi] }) => bernoulli_region(base, *lo, *hi, rho),
        (FamilyKind::GaussianMeanVar, RegionBox::MeanVariance { mean, variance }) => {
            gaussian_region(base, *mean, *variance, rho)
        }
        (FamilyKind::DiscreteAtoms, RegionBox::Probs { probs_lo, probs_hi }) => {
            discrete_region(model, base, probs_lo, probs_hi, rho, grid_points)
        }
        (kind, _) => Err(Error::Config(format!("region box does not match family kind {kind:?}"))),
    }
}

fn bernoulli_region(base: &RegionBox, lo: f64, hi: f64, rho: f64) -> Result<ParamRegion> {
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
        return Err(Error::Region(format!("Bernoulli mean range [{lo}, {hi}] must sit inside (0,1)")));
    }
    let logit = |m: f64| (m / (1.0 - m)).ln();
    let (t_lo, t_hi) = (logit(lo) - rho, logit(hi) + rho);
    let var = |t: f64| {
        let m = sigmoid(t);
        m * (1.0 - m)
    };
    let v = var(t_lo).min(var(t_hi));
    let big_v = if t_lo <= 0.0 && 0.0 <= t_hi { 0.25 } else { var(t_lo).max(var(t_hi)) };
    if !(v > 0.0) {
        return Err(Error::Region("enlarged Bernoulli region reaches a degenerate mean".into()));
    }
    let center = NaturalParam::scalar(logit(0.5 * (lo + hi)));
    Ok(ParamRegion {
        center,
        base: base.clone(),
        rho,
        v_rho: v,
        big_v_rho: big_v,
        shape: NaturalShape::Box { lo: Coords::from_slice(&[t_lo]), hi: Coords::from_slice(&[t_hi]) },
    })
}

fn gaussian_region(base: &RegionBox, mean: [f64; 2], variance: [f64; 2], rho: f64) -> Result<ParamRegion> {
    let [a, b] = mean;
    let [s_lo, s_hi] = variance;
    if !(a <= b && s_lo > 0.0 && s_lo <= s_hi && b.is_finite() && a.is_finite() && s_hi.is_finite()) {
        return Err(Error::Region(format!("invalid Gaussian box mean={mean:?} variance={variance:?}")));
    }
    let t2_lo = -0.5 / s_lo - rho;
    let t2_hi = -0.5 / s_hi + rho;
    if t2_hi >= 0.0 {
        return Err(Error::Region(format!(
            "enlargement rho={rho} reaches infinite variance (needs rho < {})",
            0.5 / s_hi
        )));
    }
    let r_a = rho * (1.0 + 4.0 * a * a).sqrt();
    let r_b = rho * (1.0 + 4.0 * b * b).sqrt();
    // Variance range and mean envelope of the enlarged polygon.
    let var_lo = -0.5 / t2_lo;
    let var_hi = -0.5 / t2_hi;
    let max_abs_mean = |s: f64| (a - r_a * s).abs().max((b + r_b * s).abs());
    // λ_min ≥ σ⁴/(1/2 + σ² + 2μ²) and λ_max ≤ σ²(1 + 2σ² + 4μ²).
    let lower = |s: f64, m: f64| s * s / (0.5 + s + 2.0 * m * m);
    let upper = |s: f64, m: f64| s * (1.0 + 2.0 * s + 4.0 * m * m);
    let big_v = upper(var_hi, max_abs_mean(var_hi));
    let v = if rho == 0.0 {
        // the mean envelope is constant and the lower envelope increases in σ²
        lower(var_lo, max_abs_mean(var_lo))
    } else {
        // cellwise bound: numerator at the left end, denominator at the right end
        let n = 4096;
        let mut best = f64::INFINITY;
        for j in 0..n {
            let s0 = var_lo + (var_hi - var_lo) * j as f64 / n as f64;
            let s1 = var_lo + (var_hi - var_lo) * (j + 1) as f64 / n as f64;
            let m1 = max_abs_mean(s1);
            best = best.min(s0 * s0 / (0.5 + s1 + 2.0 * m1 * m1));
        }
        best
    };
    if !(v > 0.0) {
        return Err(Error::Region("Gaussian region curvature lower bound is not positive".into()));
    }
    let center = FamilyModel::gaussian_theta(0.5 * (a + b), 0.5 * (s_lo + s_hi));
    Ok(ParamRegion {
        center,
        base: base.clone(),
        rho,
        v_rho: v,
        big_v_rho: big_v,
        shape: NaturalShape::GaussianPolygon { t2_lo, t2_hi, a, b, r_a, r_b },
    })
}

fn discrete_region(
    model: &FamilyModel,
    base: &RegionBox,
    lo: &[f64],
    hi: &[f64],
    rho: f64,
    grid_points: usize,
) -> Result<ParamRegion> {
    let n_atoms = model.atoms().len();
    if lo.len() != n_atoms || hi.len() != n_atoms {
        return Err(Error::Config(format!("probability bounds must have {n_atoms} entries")));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(*l > 0.0 && l <= h && *h <= 1.0)) {
        return Err(Error::Region("probability bounds must satisfy 0 < lo ≤ hi ≤ 1".into()));
    }
    if lo.iter().sum::<f64>() > 1.0 || hi.iter().sum::<f64>() < 1.0 {
        return Err(Error::Region("probability box does not meet the simplex".into()));
    }
    let k = n_atoms - 1;
    let (ls, hs) = (lo[k], hi[k]);
    let t_lo: Coords = (0..k).map(|i| (lo[i] / hs).ln() - rho).collect();
    let t_hi: Coords = (0..k).map(|i| (hi[i] / ls).ln() + rho).collect();

    // Analytic bounds: λ_min ≥ p⋆ min_k p_k and λ_max ≤ max_k p_k.
    let e_lo: Vec<f64> = t_lo.iter().map(|x| x.exp()).collect();
    let e_hi: Vec<f64> = t_hi.iter().map(|x| x.exp()).collect();
    let sum_hi: f64 = e_hi.iter().sum();
    let sum_lo: f64 = e_lo.iter().sum();
    let p_star_min = 1.0 / (1.0 + sum_hi);
    let p_min = (0..k)
        .map(|i| e_lo[i] / (1.0 + e_lo[i] + sum_hi - e_hi[i]))
        .fold(f64::INFINITY, f64::min);
    let p_max = (0..k)
        .map(|i| e_hi[i] / (1.0 + e_hi[i] + sum_lo - e_lo[i]))
        .fold(0.0, f64::max);
    let v_analytic = p_star_min * p_min;
    let big_v_analytic = p_max;

    // Grid scan over the natural box. The eigenvalues of ∇²ψ are
    // √2-Lipschitz in θ, so every point is within h√K/2 of a node.
    let per_axis = grid_points_per_axis(grid_points, k);
    let h = (0..k)
        .map(|i| (t_hi[i] - t_lo[i]) / (per_axis - 1) as f64)
        .fold(0.0, f64::max);
    let slack = h * (k as f64).sqrt();
    let mut idx = vec![0usize; k];
    let mut theta = NaturalParam { theta: t_lo.clone() };
    let (mut g_min, mut g_max) = (f64::INFINITY, 0.0_f64);
    loop {
        for i in 0..k {
            theta.theta[i] = t_lo[i] + (t_hi[i] - t_lo[i]) * idx[i] as f64 / (per_axis - 1) as f64;
        }
        let hm: DMatrix<f64> = model.hessian_log_partition(&theta)?;
        let eig = SymmetricEigen::new(hm).eigenvalues;
        g_min = g_min.min(eig.min());
        g_max = g_max.max(eig.max());
        let mut d = 0;
        loop {
            if d == k {
                break;
            }
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    let v = v_analytic.max(g_min - slack);
    let big_v = big_v_analytic.min(g_max + slack);
    if !(v > 0.0) {
        return Err(Error::Region("discrete region curvature lower bound is not positive".into()));
    }
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let s: f64 = mid.iter().sum();
    let mid: Vec<f64> = mid.iter().map(|p| p / s).collect();
    Ok(ParamRegion {
        center: FamilyModel::discrete_theta(&mid),
        base: base.clone(),
        rho,
        v_rho: v,
        big_v_rho: big_v,
        shape: NaturalShape::Box { lo: t_lo, hi: t_hi },
    })
}

fn grid_points_per_axis(requested: usize, k: usize) -> usize {
    let mut n = requested.max(2);
    while n > 2 && (n as f64).powi(k as i32) > MAX_GRID_TOTAL as f64 {
        n -= 1;
    }
    n
}

/// Whether θ lies in the base box Θ (no enlargement).
pub fn base_contains(model: &FamilyModel, base: &RegionBox, theta: &NaturalParam) -> Result<bool> {
    let g = model.grad_log_partition(theta)?;
    let f = &g.f_mean;
    let tol = 1e-12;
    Ok(match base {
        RegionBox::Mean { mean: [lo, hi] } => f[0] >= lo - tol && f[0] <= hi + tol,
        RegionBox::MeanVariance { mean, variance } => {
            let (m, v) = FamilyModel::gaussian_mean_var(theta);
            m >= mean[0] - tol && m <= mean[1] + tol && v >= variance[0] * (1.0 - tol) && v <= variance[1] * (1.0 + tol)
        }
        RegionBox::Probs { probs_lo, probs_hi } => {
            let ps = 1.0 - f.iter().sum::<f64>();
            f.iter()
                .chain(std::iter::once(&ps))
                .zip(probs_lo.iter().zip(probs_hi))
                .all(|(p, (l, h))| *p >= l - tol && *p <= h + tol)
        }
    })
}
