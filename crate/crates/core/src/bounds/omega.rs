/// ω_{p,K} = ∫_p^1 (1 − z²)^{K/2} dz, with ω_{p,−1} = 1.
///
/// Evaluated as ∫_0^{arccos p} sin^{K+1}φ dφ, which has a smooth integrand.
pub fn omega(p: f64, k: i32) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    assert!(k >= -1, "K must be at least -1");
    if k == -1 {
        return 1.0;
    }
    let upper = p.acos();
    if upper == 0.0 {
        return 0.0;
    }
    let g = |phi: f64| phi.sin().powi(k + 1);
    adaptive_simpson(&g, 0.0, upper, 1e-12, 50)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
