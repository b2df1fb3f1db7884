//! One-homogeneous `O(m) x O(k)`-invariant cones.
//!
//! A point of `R^d = R^m x R^k` is reduced to `(rho, sigma) = (|x'|, |x''|)`
//! and, on the unit sphere, to the angle `theta = atan2(sigma, rho)`. A cone is
//! `U = r g(theta)` with positive set `{theta > theta_fb}`; harmonicity of `U`
//! turns into
//!
//! ```text
//! g'' + [(k-1) cot(theta) - (m-1) tan(theta)] g' + (d-1) g = 0,
//! ```
//!
//! which is shot from `theta = pi/2` (where `g' = 0`) down to its first zero.
//! The profile is then scaled so that `g'(theta_fb) = 1`, i.e. `|grad U| = 1`
//! on the free boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{rk4_step, State};
use crate::scalar::{sphere_area, Real};

/// Offset from `theta = pi/2` at which the power series hands over to RK4.
pub const SERIES_START: f64 = 1e-6;

/// Largest sampling step used for stored profiles.
const SAMPLE_STEP: f64 = 2.5e-4;

/// Step halvings allowed when certifying `theta_fb`.
pub const MAX_HALVINGS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("split {split} has no zero crossing on (0, pi/2]")]
    NoZeroCrossing { split: SymmetrySplit },
    #[error("free-boundary angle not certified to {tol:e} (last change {change:e})")]
    NonConvergent { tol: f64, change: f64 },
    #[error("quadrature of {what} did not settle: {coarse} vs {fine}")]
    QuadratureFailure {
        what: &'static str,
        coarse: f64,
        fine: f64,
    },
}

/// Dimensions `(m, k)` of the two factors of `R^d = R^m x R^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymmetrySplit {
    pub m: usize,
    pub k: usize,
}

impl SymmetrySplit {
    pub fn new(m: usize, k: usize) -> Result<Self, ConeError> {
        if m == 0 || k == 0 {
            return Err(ConeError::InvalidInput(format!(
                "split factors must be >= 1, got ({m},{k})"
            )));
        }
        Ok(Self { m, k })
    }

    /// The split `(d-1, 1)`, whose only cone is the half-space solution.
    pub fn flat(d: usize) -> Self {
        Self { m: d - 1, k: 1 }
    }

    /// All ordered splits of `d`.
    pub fn enumerate(d: usize) -> impl Iterator<Item = SymmetrySplit> {
        (1..d).map(move |m| SymmetrySplit { m, k: d - m })
    }

    pub fn dim(&self) -> usize {
        self.m + self.k
    }

    /// First-order coefficient `(k-1) cot(theta) - (m-1) tan(theta)`.
    pub fn drift<T: Real>(&self, theta: T) -> T {
        let mut c = T::zero();
        if self.k > 1 {
            c = c + T::from_usize_lossy(self.k - 1) / theta.tan();
        }
        if self.m > 1 {
            c = c - T::from_usize_lossy(self.m - 1) * theta.tan();
        }
        c
    }

    /// Angular density `cos^{m-1} sin^{k-1}` of the sphere measure.
    pub fn weight<T: Real>(&self, theta: T) -> T {
        let c = theta.cos().max(T::zero());
        let s = theta.sin().max(T::zero());
        c.powi(self.m as i32 - 1) * s.powi(self.k as i32 - 1)
    }

    /// `|S^{m-1}| |S^{k-1}|`, the measure of the orbit through a unit point.
    pub fn orbit_area<T: Real>(&self) -> T {
        sphere_area::<T>(self.m) * sphere_area::<T>(self.k)
    }
}

impl fmt::Display for SymmetrySplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.m, self.k)
    }
}

impl FromStr for SymmetrySplit {
    type Err = ConeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| ConeError::InvalidInput(format!("expected M,K, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| ConeError::InvalidInput(format!("bad split component {t:?}")))
        };
        SymmetrySplit::new(parse(a)?, parse(b)?)
    }
}

/// A sampled cone profile `U = r g(theta)`.
///
/// Samples are ascending in `theta`, start at `theta_fb` and end at `pi/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProfile<T> {
    pub d: usize,
    pub split: SymmetrySplit,
    pub theta_fb: T,
    pub theta: Vec<T>,
    pub g: Vec<T>,
    pub g_prime: Vec<T>,
    /// Mean curvature of the free boundary at unit radius.
    pub mean_curvature: T,
    /// `|{U > 0} ∩ B_1|`.
    pub weiss_density: T,
    pub admissible: bool,
    /// Tolerance to which `theta_fb` was certified.
    pub tol: T,
    /// Integrator step at which the certificate was obtained.
    pub step: T,
    /// Number of leading samples on the uniform part of the grid.
    pub uniform_len: usize,
}

/// Integrals over the spherical section `{U > 0} ∩ S^{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionIntegrals<T> {
    pub hessian_sq: T,
    pub mean_curv_total: T,
    pub section_area: T,
}

/// Even power series of the regular solution at `s = pi/2 - theta = 0`,
/// coefficients of `s^0, s^2, s^4, s^6`.
fn series_coefficients<T: Real>(split: SymmetrySplit) -> [T; 4] {
    let m1 = T::from_usize_lossy(split.m - 1);
    let k1 = T::from_usize_lossy(split.k - 1);
    let d1 = T::from_usize_lossy(split.dim() - 1);
    // s [(m-1) cot s - (k-1) tan s] = p0 + p2 s^2 + p4 s^4 + p6 s^6 + ...
    let p = [
        m1,
        -m1 / T::lit(3.0) - k1,
        -m1 / T::lit(45.0) - k1 / T::lit(3.0),
        -T::lit(2.0) * m1 / T::lit(945.0) - T::lit(2.0) * k1 / T::lit(15.0),
    ];
    let mut c = [T::one(), T::zero(), T::zero(), T::zero()];
    for n in 1..4 {
        let deg = T::from_usize_lossy(2 * n);
        let mut acc = d1 * c[n - 1];
        for j in 1..=n {
            acc = acc + p[j] * T::from_usize_lossy(2 * (n - j)) * c[n - j];
        }
        c[n] = -acc / (deg * (deg - T::one() + m1));
    }
    c
}

/// `(h, dh/dtheta)` of the series solution at `s = pi/2 - theta`.
fn series_state<T: Real>(split: SymmetrySplit, s: T) -> State<T> {
    let c = series_coefficients::<T>(split);
    let s2 = s * s;
    let h = c[0] + s2 * (c[1] + s2 * (c[2] + s2 * c[3]));
    let dh_ds = s * (T::lit(2.0) * c[1] + s2 * (T::lit(4.0) * c[2] + s2 * T::lit(6.0) * c[3]));
    [h, -dh_ds]
}

struct Shooter<T> {
    split: SymmetrySplit,
    d1: T,
}

impl<T: Real> Shooter<T> {
    fn new(split: SymmetrySplit) -> Self {
        Self {
            split,
            d1: T::from_usize_lossy(split.dim() - 1),
        }
    }

    fn rhs(&self, theta: T, y: State<T>) -> State<T> {
        [y[1], -self.split.drift(theta) * y[1] - self.d1 * y[0]]
    }

    fn step(&self, theta: T, y: State<T>, dt: T) -> State<T> {
        rk4_step(&|t, v| self.rhs(t, v), theta, y, dt)
    }

    /// Step size allowed at distance `s` from the pole: graded near the
    /// regular singular point, `step` elsewhere.
    fn graded(&self, s: T, step: T) -> T {
        let c = T::lit(0.5) / T::from_usize_lossy(self.split.m.max(2) - 1);
        step.min(c * s)
    }

    /// Lowest angle the integration may reach.
    fn floor(&self) -> T {
        if self.split.k == 1 {
            // regular at theta = 0; continue past it to bracket a zero there
            T::lit(-0.25)
        } else {
            T::lit(1e-3)
        }
    }

    /// Integrates down from the pole and returns the first zero of `h`,
    /// bracketed to roughly `resolution`.
    fn first_zero(&self, step: T, resolution: T) -> Result<T, ConeError> {
        let half_pi = T::FRAC_PI_2();
        let s0 = T::lit(SERIES_START);
        let mut theta = half_pi - s0;
        let mut y = series_state(self.split, s0);
        let floor = self.floor();
        loop {
            let dt = self.graded(half_pi - theta, step);
            let next = self.step(theta, y, -dt);
            if next[0] <= T::zero() {
                let mut hi = T::zero(); // offset with h > 0
                let mut lo = -dt; // offset with h <= 0
                for _ in 0..200 {
                    if (hi - lo).abs() <= resolution {
                        break;
                    }
                    let mid = (hi + lo) * T::lit(0.5);
                    if mid == hi || mid == lo {
                        break;
                    }
                    if self.step(theta, y, mid)[0] > T::zero() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(theta + (hi + lo) * T::lit(0.5));
            }
            theta = theta - dt;
            y = next;
            if theta <= floor {
                return Err(ConeError::NoZeroCrossing { split: self.split });
            }
        }
    }

    /// Samples `(theta, h, h')` ascending from `theta_fb` to `pi/2`: graded
    /// steps near the pole, then a uniform stretch that lands on `theta_fb`.
    fn sample(&self, theta_fb: T, max_step: T) -> (Vec<T>, Vec<State<T>>, usize) {
        let half_pi = T::FRAC_PI_2();
        let s0 = T::lit(SERIES_START);
        let mut thetas = vec![half_pi];
        let mut states = vec![series_state(self.split, T::zero())];
        let mut theta = half_pi - s0;
        let mut y = series_state(self.split, s0);
        thetas.push(theta);
        states.push(y);
        loop {
            let dt = self.graded(half_pi - theta, max_step);
            if dt >= max_step || theta - dt <= theta_fb {
                break;
            }
            y = self.step(theta, y, -dt);
            theta = theta - dt;
            thetas.push(theta);
            states.push(y);
        }
        let span = theta - theta_fb;
        let n = (span / max_step).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::from_usize_lossy(n);
        let join = theta;
        for i in 1..=n {
            let t_prev = join - dt * T::from_usize_lossy(i - 1);
            y = self.step(t_prev, y, -dt);
            let t = if i == n {
                theta_fb
            } else {
                join - dt * T::from_usize_lossy(i)
            };
            thetas.push(t);
            states.push(y);
        }
        thetas.reverse();
        states.reverse();
        (thetas, states, n + 1)
    }
}

fn check_dimension(d: usize, split: SymmetrySplit) -> Result<(), ConeError> {
    if !(3..=32).contains(&d) {
        return Err(ConeError::InvalidInput(format!(
            "dimension must lie in 3..=32, got {d}"
        )));
    }
    if split.dim() != d || split.m == 0 || split.k == 0 {
        return Err(ConeError::InvalidInput(format!(
            "split ({split}) does not decompose d = {d}"
        )));
    }
    Ok(())
}

/// Builds the cone of the given split by shooting from the pole.
///
/// The free-boundary angle is certified by halving the integrator step until
/// two successive zeros agree to `tol`.
pub fn shoot_profile<T: Real>(
    d: usize,
    split: SymmetrySplit,
    tol: T,
) -> Result<ConeProfile<T>, ConeError> {
    shoot_profile_with(d, split, tol, MAX_HALVINGS)
}

/// [`shoot_profile`] with an explicit cap on step halvings.
pub fn shoot_profile_with<T: Real>(
    d: usize,
    split: SymmetrySplit,
    tol: T,
    max_halvings: usize,
) -> Result<ConeProfile<T>, ConeError> {
    check_dimension(d, split)?;
    if !(tol > T::zero()) {
        return Err(ConeError::InvalidInput("tolerance must be positive".into()));
    }
    let shooter = Shooter::<T>::new(split);
    let resolution = (tol * T::lit(1e-3)).max(T::epsilon() * T::lit(4.0));
    let mut step = T::lit(1.0 / 32.0);
    let mut previous = shooter.first_zero(step, resolution)?;
    let mut change = T::infinity();
    for _ in 0..max_halvings {
        step = step * T::lit(0.5);
        let z = shooter.first_zero(step, resolution)?;
        change = (z - previous).abs();
        previous = z;
        if change < tol {
            break;
        }
    }
    if !(change < tol) {
        return Err(ConeError::NonConvergent {
            tol: tol.as_f64(),
            change: change.as_f64(),
        });
    }
    let mut theta_fb = previous;
    if split.k == 1 && theta_fb.abs() <= tol {
        theta_fb = T::zero();
    }

    let max_step = step.min(T::lit(SAMPLE_STEP));
    let (theta, states, uniform_len) = shooter.sample(theta_fb, max_step);
    let scale = states[0][1];
    let mut g: Vec<T> = states.iter().map(|s| s[0] / scale).collect();
    let g_prime: Vec<T> = states.iter().map(|s| s[1] / scale).collect();
    g[0] = T::zero();

    let mean_curvature = split.drift(theta_fb);
    let admissible = mean_curvature >= -tol && g[1..].iter().all(|v| *v > T::zero());
    let mut profile = ConeProfile {
        d,
        split,
        theta_fb,
        theta,
        g,
        g_prime,
        mean_curvature,
        weiss_density: T::zero(),
        admissible,
        tol,
        step,
        uniform_len,
    };
    profile.weiss_density = profile.density_from_area()?;
    Ok(profile)
}

impl<T: Real> ConeProfile<T> {
    /// Spacing of the uniform part of the sample grid.
    pub fn uniform_spacing(&self) -> T {
        self.theta[1] - self.theta[0]
    }

    /// Cubic Hermite interpolation of `(g, g')` at `theta`.
    pub fn angular(&self, theta: T) -> (T, T) {
        let n = self.theta.len();
        if theta <= self.theta_fb {
            return (T::zero(), self.g_prime[0]);
        }
        if theta >= self.theta[n - 1] {
            return (self.g[n - 1], self.g_prime[n - 1]);
        }
        let i = if theta < self.theta[self.uniform_len - 1] {
            let idx = ((theta - self.theta_fb) / self.uniform_spacing())
                .floor()
                .to_usize()
                .unwrap_or(0);
            idx.min(self.uniform_len - 2)
        } else {
            self.theta.partition_point(|t| *t <= theta) - 1
        };
        let i = i.min(n - 2);
        let (t0, t1) = (self.theta[i], self.theta[i + 1]);
        let dt = t1 - t0;
        let x = (theta - t0) / dt;
        let (y0, y1) = (self.g[i], self.g[i + 1]);
        let (d0, d1) = (self.g_prime[i] * dt, self.g_prime[i + 1] * dt);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = two * x3 - three * x2 + T::one();
        let h10 = x3 - two * x2 + x;
        let h01 = -two * x3 + three * x2;
        let h11 = x3 - x2;
        let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let slope = ((T::lit(6.0) * x2 - T::lit(6.0) * x) * (y0 - y1)
            + (three * x2 - T::lit(4.0) * x + T::one()) * d0
            + (three * x2 - two * x) * d1)
            / dt;
        (value, slope)
    }

    /// `g''` from the ODE at an angle inside the section.
    pub fn second_derivative(&self, theta: T, g: T, gp: T) -> T {
        -self.split.drift(theta) * gp - T::from_usize_lossy(self.d - 1) * g
    }

    /// Largest pointwise residual of the profile ODE, with `g''` taken by a
    /// fourth-order difference of the stored `g'` samples.
    pub fn ode_residual(&self) -> T {
        let dt = self.uniform_spacing();
        let d1 = T::from_usize_lossy(self.d - 1);
        let mut worst = T::zero();
        if self.uniform_len < 5 {
            return worst;
        }
        for i in 2..self.uniform_len - 2 {
            let gp = &self.g_prime;
            let gpp = (-gp[i + 2] + T::lit(8.0) * (gp[i + 1] - gp[i - 1]) + gp[i - 2])
                / (T::lit(12.0) * dt);
            let r = gpp + self.split.drift(self.theta[i]) * gp[i] + d1 * self.g[i];
            worst = worst.max(r.abs());
        }
        worst
    }

    /// `|H + g''(theta_fb)|` with a one-sided fourth-order difference.
    pub fn curvature_mismatch(&self) -> T {
        let dt = self.uniform_spacing();
        let gp = &self.g_prime;
        let gpp = (-T::lit(25.0) * gp[0] + T::lit(48.0) * gp[1] - T::lit(36.0) * gp[2]
            + T::lit(16.0) * gp[3]
            - T::lit(3.0) * gp[4])
            / (T::lit(12.0) * dt);
        (self.mean_curvature + gpp).abs()
    }

    /// `max |grad U|` over the samples; on the sphere `|grad U|^2 = g^2 + g'^2`.
    pub fn max_gradient(&self) -> T {
        self.g
            .iter()
            .zip(&self.g_prime)
            .map(|(g, gp)| (*g * *g + *gp * *gp).sqrt())
            .fold(T::zero(), T::max)
    }

    /// Integrates `f(theta, g, g')` against the sphere measure of the section,
    /// with Gauss nodes aligned to the sample intervals. Fails when one level
    /// of interval splitting changes the result by more than `rel_tol`.
    pub fn section_integral<F>(&self, what: &'static str, rel_tol: T, f: F) -> Result<T, ConeError>
    where
        F: Fn(T, T, T) -> T,
    {
        let weighted = |t: T| {
            let (g, gp) = self.angular(t);
            f(t, g, gp) * self.split.weight(t)
        };
        let mut coarse = T::zero();
        let mut fine = T::zero();
        for w in self.theta.windows(2) {
            let (a, b) = (w[0], w[1]);
            coarse = coarse + crate::quadrature::gauss_legendre(&weighted, a, b, 1);
            fine = fine + crate::quadrature::gauss_legendre(&weighted, a, b, 2);
        }
        let c = self.split.orbit_area::<T>();
        let (coarse, fine) = (coarse * c, fine * c);
        if (fine - coarse).abs() > rel_tol * fine.abs().max(T::one()) {
            return Err(ConeError::QuadratureFailure {
                what,
                coarse: coarse.as_f64(),
                fine: fine.as_f64(),
            });
        }
        Ok(fine)
    }

    fn quad_tol(&self) -> T {
        T::lit(1e-11).max(T::epsilon() * T::lit(1e3))
    }

    fn density_from_area(&self) -> Result<T, ConeError> {
        let area = self.section_integral("section area", self.quad_tol(), |_, _, _| T::one())?;
        Ok(area / T::from_usize_lossy(self.d))
    }

    /// Surface measure of the free boundary on the unit sphere.
    pub fn free_boundary_area(&self) -> T {
        self.split.orbit_area::<T>() * self.split.weight(self.theta_fb)
    }
}

/// Hessian and mean-curvature integrals over the spherical section.
///
/// In the orthonormal frame at `r = 1` the Hessian of `r g(theta)` has the
/// entries `g'' + g` (angular), `g - tan(theta) g'` (`m-1` times),
/// `g + cot(theta) g'` (`k-1` times) and zero in the radial row.
pub fn section_integrals<T: Real>(
    profile: &ConeProfile<T>,
) -> Result<SectionIntegrals<T>, ConeError> {
    let split = profile.split;
    let m1 = T::from_usize_lossy(split.m - 1);
    let k1 = T::from_usize_lossy(split.k - 1);
    let tol = profile.quad_tol();
    let hessian_sq = profile.section_integral("hessian", tol, |t, g, gp| {
        let gpp = profile.second_derivative(t, g, gp);
        let mut s = (gpp + g) * (gpp + g);
        if split.m > 1 {
            let e = g - t.tan() * gp;
            s = s + m1 * e * e;
        }
        if split.k > 1 {
            let e = g + gp / t.tan();
            s = s + k1 * e * e;
        }
        s
    })?;
    let section_area = profile.section_integral("section area", tol, |_, _, _| T::one())?;
    Ok(SectionIntegrals {
        hessian_sq,
        mean_curv_total: profile.mean_curvature * profile.free_boundary_area(),
        section_area,
    })
}

/// `|{U > 0} ∩ B_1|`, cross-checked against `E(U; B_1) - ∫_{∂B_1} U^2`.
pub fn weiss_density<T: Real>(profile: &ConeProfile<T>) -> Result<T, ConeError> {
    let d = T::from_usize_lossy(profile.d);
    let tol = profile.quad_tol();
    let volume = profile.density_from_area()?;
    let dirichlet = profile.section_integral("dirichlet", tol, |_, g, gp| g * g + gp * gp)? / d;
    let boundary = profile.section_integral("boundary L2", tol, |_, g, _| g * g)?;
    let energy_form = dirichlet + volume - boundary;
    let agree = T::lit(1e-8).max(T::epsilon().sqrt() * T::lit(10.0));
    if (energy_form - volume).abs() > agree * volume.max(T::one()) {
        return Err(ConeError::QuadratureFailure {
            what: "weiss density cross-check",
            coarse: volume.as_f64(),
            fine: energy_form.as_f64(),
        });
    }
    Ok(volume)
}

/// `U(rho, sigma) = r g(theta)` on the positive side, `0` elsewhere.
pub fn evaluate_cone<T: Real>(profile: &ConeProfile<T>, rho: T, sigma: T) -> T {
    let (rho, sigma) = (rho.abs(), sigma.abs());
    let r = rho.hypot(sigma);
    if r == T::zero() {
        return T::zero();
    }
    let theta = sigma.atan2(rho);
    if theta <= profile.theta_fb {
        return T::zero();
    }
    r * profile.angular(theta).0
}
