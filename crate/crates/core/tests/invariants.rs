//! Property tests for the structural identities of the families, the K_inf
//! solvers, the index and the crossing estimators.

use klbound::bandit::{ucb_index, INDEX_TOL};
use klbound::bounds::ThresholdVariant;
use klbound::expfam::{region_curvature, FamilyModel, MeanParam, NaturalParam, ParamRegion, RegionBox};
use klbound::kinf::{kinf, kinf_from_mean, kinf_generic};
use klbound::mcverify::{enumerate_crossing_bernoulli, exact_crossing_bernoulli, wilson_interval, CrossingSpec, Z95};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

fn probs3() -> impl Strategy<Value = Vec<f64>> {
    (0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c;
        vec![a / s, b / s, c / s]
    })
}

/// (model, θ) over all three families.
fn any_family() -> impl Strategy<Value = (FamilyModel, NaturalParam)> {
    prop_oneof![
        (0.02f64..0.98).prop_map(|mu| (FamilyModel::bernoulli(), FamilyModel::bernoulli_theta(mu))),
        (-2.0f64..2.0, 0.3f64..3.0).prop_map(|(m, v)| (FamilyModel::gaussian(), FamilyModel::gaussian_theta(m, v))),
        probs3().prop_map(|p| (FamilyModel::discrete(&[0.0, 0.4, 1.0]).unwrap(), FamilyModel::discrete_theta(&p))),
    ]
}

fn perturbed(theta: &NaturalParam, d: &[f64]) -> NaturalParam {
    NaturalParam::new(&theta.as_slice().iter().zip(d).map(|(a, b)| a + b).collect::<Vec<_>>())
}

fn pair() -> impl Strategy<Value = (FamilyModel, NaturalParam, NaturalParam)> {
    prop_oneof![
        (0.02f64..0.98, 0.02f64..0.98).prop_map(|(a, b)| (
            FamilyModel::bernoulli(),
            FamilyModel::bernoulli_theta(a),
            FamilyModel::bernoulli_theta(b)
        )),
        (-2.0f64..2.0, 0.3f64..3.0, -2.0f64..2.0, 0.3f64..3.0).prop_map(|(m, v, m2, v2)| (
            FamilyModel::gaussian(),
            FamilyModel::gaussian_theta(m, v),
            FamilyModel::gaussian_theta(m2, v2)
        )),
        (probs3(), probs3()).prop_map(|(p, q)| (
            FamilyModel::discrete(&[0.0, 0.4, 1.0]).unwrap(),
            FamilyModel::discrete_theta(&p),
            FamilyModel::discrete_theta(&q)
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bregman_is_nonnegative_and_zero_on_diagonal((model, a, b) in pair()) {
        let d = model.bregman(&a, &b).unwrap();
        prop_assert!(d >= -1e-12, "B = {d}");
        prop_assert!(model.bregman(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences((model, theta) in any_family()) {
        let g = model.grad_log_partition(&theta).unwrap();
        let h = 1e-5;
        for j in 0..model.dim() {
            let mut e = vec![0.0; model.dim()];
            e[j] = h;
            let up = model.log_partition(&perturbed(&theta, &e)).unwrap();
            e[j] = -h;
            let down = model.log_partition(&perturbed(&theta, &e)).unwrap();
            let fd = (up - down) / (2.0 * h);
            prop_assert!(close(fd, g.as_slice()[j], 1e-6, 1e-8), "coordinate {j}: {fd} vs {}", g.as_slice()[j]);
        }
    }

    #[test]
    fn hessian_matches_finite_differences((model, theta) in any_family()) {
        let hess = model.hessian_log_partition(&theta).unwrap();
        let h = 1e-5;
        for j in 0..model.dim() {
            let mut e = vec![0.0; model.dim()];
            e[j] = h;
            let up = model.grad_log_partition(&perturbed(&theta, &e)).unwrap();
            e[j] = -h;
            let down = model.grad_log_partition(&perturbed(&theta, &e)).unwrap();
            for i in 0..model.dim() {
                let fd = (up.as_slice()[i] - down.as_slice()[i]) / (2.0 * h);
                prop_assert!(close(fd, hess[(i, j)], 1e-5, 1e-7), "({i},{j}): {fd} vs {}", hess[(i, j)]);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_positive_definite((model, theta) in any_family()) {
        let hess = model.hessian_log_partition(&theta).unwrap();
        prop_assert!((&hess - hess.transpose()).abs().max() < 1e-12);
        let eig = hess.symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn fenchel_dual_equals_divergence((model, theta, theta_star) in pair()) {
        let f = model.grad_log_partition(&theta).unwrap();
        let dual = model.fenchel_dual(&theta_star, &f).unwrap();
        let b = model.bregman(&theta, &theta_star).unwrap();
        prop_assert!(close(dual, b, 1e-8, 1e-10), "{dual} vs {b}");
    }

    #[test]
    fn mean_natural_round_trip((model, theta) in any_family()) {
        let f = model.grad_log_partition(&theta).unwrap();
        let back = model.mean_to_natural(&f).unwrap();
        prop_assert!(back.distance(&theta) < 1e-8 * (1.0 + theta.distance(&NaturalParam::new(&vec![0.0; model.dim()]))));
    }

    #[test]
    fn log_laplace_of_discrete_laws(p in probs3(), l1 in -3.0f64..3.0, l2 in -3.0f64..3.0) {
        // ψ(θ+λ) − ψ(θ) = log E_θ exp(λ·F(X)); F is the indicator of the
        // non-reference atoms.
        let model = FamilyModel::discrete(&[0.0, 0.4, 1.0]).unwrap();
        let theta = FamilyModel::discrete_theta(&p);
        let shifted = perturbed(&theta, &[l1, l2]);
        let lhs = model.log_partition(&shifted).unwrap() - model.log_partition(&theta).unwrap();
        let rhs = (p[0] * l1.exp() + p[1] * l2.exp() + p[2]).ln();
        prop_assert!(close(lhs, rhs, 1e-12, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn gaussian_log_laplace(m in -2.0f64..2.0, v in 0.3f64..3.0, l1 in -1.0f64..1.0, l2 in -0.1f64..0.1) {
        // E exp(l1 X + l2 X²) for X ~ N(m, v), valid while 1 − 2 l2 v > 0.
        let model = FamilyModel::gaussian();
        let theta = FamilyModel::gaussian_theta(m, v);
        let shifted = perturbed(&theta, &[l1, l2]);
        let lhs = model.log_partition(&shifted).unwrap() - model.log_partition(&theta).unwrap();
        let s = 1.0 - 2.0 * l2 * v;
        let rhs = -0.5 * s.ln() + (l1 * m + l2 * m * m + 0.5 * l1 * l1 * v) / s;
        prop_assert!(close(lhs, rhs, 1e-10, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn kinf_nondecreasing_in_threshold((model, theta) in any_family(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let m = model.mean(&theta).unwrap();
        let top = if model.is_bounded() { model.max_mean() } else { m + 3.0 };
        let lo_mu = m - 0.5;
        let at = |u: f64| lo_mu + u * (top - lo_mu) * 0.98;
        let (u1, u2) = if a <= b { (a, b) } else { (b, a) };
        let k1 = kinf(&model, &theta, at(u1)).unwrap().value;
        let k2 = kinf(&model, &theta, at(u2)).unwrap().value;
        prop_assert!(k1 >= 0.0);
        prop_assert!(k2 >= k1 - 1e-10, "K({}) = {k1} > K({}) = {k2}", at(u1), at(u2));
    }

    #[test]
    fn generic_solver_agrees_with_closed_forms((model, theta) in any_family(), u in 0.0f64..1.0) {
        let m = model.mean(&theta).unwrap();
        let top = if model.is_bounded() { model.max_mean() } else { m + 3.0 };
        let mu = m + u * (top - m) * 0.95;
        let direct = kinf(&model, &theta, mu).unwrap();
        let generic = kinf_generic(&model, &theta, mu).unwrap();
        prop_assert!(close(direct.value, generic.value, 1e-7, 1e-10), "{} vs {}", direct.value, generic.value);
        prop_assert!(close(direct.lambda, generic.lambda, 1e-5, 1e-8), "λ {} vs {}", direct.lambda, generic.lambda);
    }

    #[test]
    fn kinf_slope_matches_finite_difference((model, theta) in any_family(), u in 0.05f64..0.9) {
        let m = model.mean(&theta).unwrap();
        let top = if model.is_bounded() { model.max_mean() } else { m + 3.0 };
        let mu = m + u * (top - m);
        let f = model.grad_log_partition(&theta).unwrap();
        let (_, slope) = kinf_from_mean(&model, f.as_slice(), mu).unwrap();
        let h = 1e-6 * (top - m);
        let up = kinf(&model, &theta, mu + h).unwrap().value;
        let down = kinf(&model, &theta, mu - h).unwrap().value;
        prop_assert!(close(slope, (up - down) / (2.0 * h), 1e-4, 1e-7));
    }

    #[test]
    fn index_is_monotone_and_tight((model, theta) in any_family(), b1 in 0.0f64..2.0, b2 in 0.0f64..2.0) {
        let f = model.grad_log_partition(&theta).unwrap();
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let i_lo = ucb_index(&model, &f, 10, lo).unwrap();
        let i_hi = ucb_index(&model, &f, 10, hi).unwrap();
        prop_assert!(i_hi >= i_lo - 1e-9);
        let m = model.mean(&theta).unwrap();
        prop_assert!(i_lo >= m - 1e-12);
        if model.is_bounded() {
            prop_assert!(i_hi <= model.max_mean());
        }
        // The index is accurate to INDEX_TOL from above.
        let below = (i_hi - INDEX_TOL).max(m);
        let (value, _) = kinf_from_mean(&model, f.as_slice(), below).unwrap();
        prop_assert!(value <= hi + 1e-9, "K below the index {value} exceeds the budget {hi}");
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let hits = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(hits, n, Z95);
        let p = hits as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0, "[{lo}, {hi}] around {p}");
    }

    #[test]
    fn smoothness_sandwich_on_bernoulli_region(a in 0.2f64..0.8, b in 0.2f64..0.8) {
        let model = FamilyModel::bernoulli();
        let region = region_curvature(&model, &RegionBox::Mean { mean: [0.2, 0.8] }, 0.1).unwrap();
        let (ta, tb) = (FamilyModel::bernoulli_theta(a), FamilyModel::bernoulli_theta(b));
        let d2 = ta.distance(&tb).powi(2);
        let div = model.bregman(&ta, &tb).unwrap();
        prop_assert!(0.5 * region.v_rho * d2 <= div + 1e-12);
        prop_assert!(div <= 0.5 * region.big_v_rho * d2 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dynamic_programme_matches_enumeration(
        mu in 0.55f64..0.9,
        eps in 0.02f64..0.2,
        t in 2u64..13,
        xi in 0.0f64..1.5,
        over_n in any::<bool>(),
        restrict in any::<bool>(),
    ) {
        let model = FamilyModel::bernoulli();
        let theta_star = FamilyModel::bernoulli_theta(mu);
        let region = ParamRegion::new(
            &model,
            theta_star.clone(),
            RegionBox::Mean { mean: [(mu - 0.4).max(0.05), (mu + 0.05).min(0.95)] },
            0.1,
        )
        .unwrap();
        let spec = CrossingSpec {
            model,
            theta_star,
            epsilon: eps,
            region,
            t,
            xi,
            variant: if over_n { ThresholdVariant::FOfTOverN } else { ThresholdVariant::FOfT },
            restrict_to_region: restrict,
        };
        let dp = exact_crossing_bernoulli(&spec).unwrap();
        let all = enumerate_crossing_bernoulli(&spec).unwrap();
        prop_assert!((dp - all).abs() < 1e-12, "{dp} vs {all}");
    }
}

#[test]
fn index_inverts_bernoulli_divergence() {
    let model = FamilyModel::bernoulli();
    let budget = klbound::kinf::binary_kl(0.5, 0.9);
    let idx = ucb_index(&model, &MeanParam::scalar(0.5), 1, budget).unwrap();
    assert!((idx - 0.9).abs() < 1e-9, "{idx}");
}
