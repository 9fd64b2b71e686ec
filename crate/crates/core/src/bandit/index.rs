use crate::error::{Error, Result};
use crate::expfam::{FamilyKind, FamilyModel, MeanParam};
use crate::kinf::kinf_from_mean;

/// Accuracy of the returned index.
pub const INDEX_TOL: f64 = 1e-9;

/// `max{μ < μ⁺ : K_inf(Π(ν̂), μ) ≤ budget}` for an empirical sufficient
/// statistic. Statistics on the boundary of the realizable set that cannot be
/// mapped back to a natural parameter at the top of the support (mean = μ⁺,
/// or a Gaussian sample with zero variance) get the optimistic index μ⁺.
pub fn ucb_index(model: &FamilyModel, stat: &MeanParam, n_pulls: u64, budget: f64) -> Result<f64> {
    if n_pulls == 0 {
        return Err(Error::domain("index needs at least one observation"));
    }
    if budget.is_nan() {
        return Err(Error::domain("budget is NaN"));
    }
    index_from_stat(model, stat.as_slice(), budget)
}

pub(crate) fn index_from_stat(model: &FamilyModel, f: &[f64], budget: f64) -> Result<f64> {
    let top = model.max_mean();
    let m = model.mean_of_stat(f);
    if budget == f64::INFINITY || m >= top {
        return Ok(top);
    }
    if model.kind() == FamilyKind::GaussianMeanVar && f[1] - f[0] * f[0] <= 0.0 {
        return Ok(top);
    }
    let budget = budget.max(0.0);
    if budget == 0.0 {
        return Ok(m);
    }
    let kval = |mu: f64| kinf_from_mean(model, f, mu);

    // upper bracket
    let mut hi = if model.is_bounded() {
        let range = top - model.min_mean();
        let pinsker = m + range * (budget / 2.0).sqrt();
        if pinsker < top {
            pinsker
        } else {
            let near_top = top - 1e-12 * range;
            if kval(near_top)?.0 <= budget {
                return Ok(top);
            }
            near_top
        }
    } else {
        let sd = (f[1] - f[0] * f[0]).sqrt();
        let mut d = sd.max(1e-300);
        while kval(m + d)?.0 < budget {
            d *= 2.0;
        }
        m + d
    };
    let mut lo = m;
    let mut x = hi;
    for _ in 0..200 {
        let (v, slope) = kval(x)?;
        let g = v - budget;
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if g == 0.0 || hi - lo <= 0.1 * INDEX_TOL {
            break;
        }
        let newton = if slope > 0.0 { x - g / slope } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-3 * INDEX_TOL {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}
