use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expfam::{dot, replicate_rng, Coords, NaturalParam};

/// Number of directions used to certify a covering.
pub const CERTIFY_SAMPLES: usize = 100_000;
const GREEDY_SAMPLES: usize = 20_000;
const MAX_ROUNDS: usize = 10;
const COVER_SEED: u64 = 0x006b_6c62_6f75_6e64;

/// A covering of the unit sphere of directions by caps `{u : ⟨u, d_c⟩ ≥ p}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeCover {
    pub directions: Vec<Coords>,
    /// Base points θ⋆_c = θ⋆ + ((1+η)/2) ρ_ε d_c, all at distance ≥ ηρ_ε from θ⋆.
    pub base_points: Vec<NaturalParam>,
    /// Upper bound on the minimal covering number C_{p,η,K}.
    pub count: usize,
    /// Number of random directions checked against the caps.
    pub certified_with: usize,
}

/// Covers the directions around `center` by cones of cosine `p`.
pub fn cone_cover(k: usize, p: f64, eta: f64, center: &NaturalParam, rho_eps: f64) -> Result<ConeCover> {
    if k == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if !(p > 0.0 && p < 1.0) || !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Config(format!("need p, eta in (0,1), got p={p}, eta={eta}")));
    }
    if center.dim() != k {
        return Err(Error::Config("center dimension differs from K".into()));
    }
    let directions = match k {
        1 => vec![Coords::from_slice(&[1.0]), Coords::from_slice(&[-1.0])],
        2 => {
            let n = (std::f64::consts::PI / p.acos()).ceil() as usize;
            let n = n.max(2);
            (0..n)
                .map(|j| {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    Coords::from_slice(&[a.cos(), a.sin()])
                })
                .collect()
        }
        _ => greedy_cover(k, p)?,
    };
    let mut certified_with = 0;
    if k >= 2 {
        let (missed, n) = certify(k, p, &directions, 1)?;
        if !missed.is_empty() {
            return Err(Error::Cover(format!("uncovered direction found for K={k}, p={p}")));
        }
        certified_with = n;
    }
    let radius = 0.5 * (1.0 + eta) * rho_eps;
    let base_points = directions
        .iter()
        .map(|d| NaturalParam { theta: center.theta.iter().zip(d).map(|(c, u)| c + radius * u).collect() })
        .collect();
    Ok(ConeCover { count: directions.len(), directions, base_points, certified_with })
}

fn random_direction<R: Rng>(rng: &mut R, k: usize) -> Coords {
    loop {
        let v: Coords = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn covered(u: &[f64], centers: &[Coords], cos: f64) -> bool {
    centers.iter().any(|c| dot(u, c) >= cos)
}

fn greedy_cover(k: usize, p: f64) -> Result<Vec<Coords>> {
    // caps shrunk to 0.8 of the angular radius leave margin for unseen directions
    let shrunk = (0.8 * p.acos()).cos();
    let mut rng = replicate_rng(COVER_SEED, k as u64);
    let mut centers: Vec<Coords> = Vec::new();
    for _ in 0..GREEDY_SAMPLES {
        let u = random_direction(&mut rng, k);
        if !covered(&u, &centers, shrunk) {
            centers.push(u);
        }
    }
    for round in 0..MAX_ROUNDS {
        let (missed, _) = certify(k, p, &centers, 100 + round as u64)?;
        if missed.is_empty() {
            return Ok(centers);
        }
        for u in missed {
            if !covered(&u, &centers, p) {
                centers.push(u);
            }
        }
    }
    Err(Error::Cover(format!("covering for K={k}, p={p} not certified after {MAX_ROUNDS} rounds")))
}

/// Checks `CERTIFY_SAMPLES` fresh directions; returns the uncovered ones.
fn certify(k: usize, p: f64, centers: &[Coords], stream: u64) -> Result<(Vec<Coords>, usize)> {
    let mut rng = replicate_rng(COVER_SEED ^ 0xc0ffee, stream * 64 + k as u64);
    let mut missed = Vec::new();
    for _ in 0..CERTIFY_SAMPLES {
        let u = random_direction(&mut rng, k);
        if !covered(&u, centers, p - 1e-12) {
            missed.push(u);
        }
    }
    Ok((missed, CERTIFY_SAMPLES))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimension_has_two_cones() {
        let c = cone_cover(1, 0.7, 0.5, &NaturalParam::scalar(0.3), 1.0).unwrap();
        assert_eq!(c.count, 2);
        assert!((c.base_points[0].theta[0] - 1.05).abs() < 1e-15);
    }

    #[test]
    fn circle_with_sixty_degree_arcs() {
        let c = cone_cover(2, 0.5, 0.5, &NaturalParam::new(&[0.0, -0.5]), 0.2).unwrap();
        assert!(c.count <= 3);
        assert_eq!(c.certified_with, CERTIFY_SAMPLES);
    }

    #[test]
    fn circle_count_grows_as_p_approaches_one() {
        let a = cone_cover(2, 0.9, 0.5, &NaturalParam::new(&[0.0, -0.5]), 0.2).unwrap().count;
        let b = cone_cover(2, 0.99, 0.5, &NaturalParam::new(&[0.0, -0.5]), 0.2).unwrap().count;
        assert!(b > 2 * a);
    }

    #[test]
    fn sphere_cover_is_certified_and_repels() {
        let center = NaturalParam::new(&[0.1, 0.2, 0.3]);
        let c = cone_cover(3, 0.5, 0.5, &center, 0.4).unwrap();
        assert!(c.count >= 4);
        for b in &c.base_points {
            assert!(b.distance(&center) >= 0.5 * 0.4);
        }
    }
}
