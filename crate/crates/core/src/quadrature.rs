//! Composite Gauss–Legendre quadrature with panel doubling.

use crate::scalar::Real;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Three-point rule used by the finite element assembly.
pub(crate) const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
pub(crate) const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureStall {
    pub panels: usize,
    pub coarse: f64,
    pub fine: f64,
}

/// Composite 5-point Gauss–Legendre rule on `panels` equal panels.
pub fn gauss_legendre<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, panels: usize) -> T {
    let width = (b - a) / T::from_usize_lossy(panels);
    let half = width * T::lit(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + (T::from_usize_lossy(p) + T::lit(0.5)) * width;
        let mut panel = T::zero();
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            panel = panel + T::lit(*w) * f(mid + half * T::lit(*x));
        }
        total = total + panel * half;
    }
    total
}

/// Integrates `f` over `[a, b]`, doubling the panel count until two
/// successive levels agree to `rel_tol` (relative to `max(|I|, 1)`).
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    rel_tol: T,
) -> Result<T, QuadratureStall> {
    if a == b {
        return Ok(T::zero());
    }
    let mut panels = 16;
    let mut coarse = gauss_legendre(&f, a, b, panels);
    while panels < (1 << 16) {
        panels *= 2;
        let fine = gauss_legendre(&f, a, b, panels);
        if (fine - coarse).abs() <= rel_tol * fine.abs().max(T::one()) {
            return Ok(fine);
        }
        coarse = fine;
    }
    let fine = gauss_legendre(&f, a, b, panels);
    Err(QuadratureStall {
        panels,
        coarse: coarse.as_f64(),
        fine: fine.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v: f64 = gauss_legendre(&|x: f64| x.powi(9) - 3.0 * x.powi(4) + 1.0, -1.0, 2.0, 1);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn smooth_integrand_converges() {
        let v = integrate(|x: f64| x.sin().powi(5), 0.3, 1.5, 1e-13).unwrap();
        let anti = |x: f64| -x.cos() + 2.0 * x.cos().powi(3) / 3.0 - x.cos().powi(5) / 5.0;
        assert!((v - (anti(1.5) - anti(0.3))).abs() < 1e-13);
    }

    #[test]
    fn impossible_tolerance_reports_stall() {
        let r = integrate(|x: f32| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!(r.is_err());
    }
}
