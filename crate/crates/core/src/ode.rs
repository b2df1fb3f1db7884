//! Classical fourth-order Runge–Kutta for two-component systems.

use crate::scalar::Real;

pub type State<T> = [T; 2];

/// One RK4 step of size `dt` (may be negative) for `y' = f(t, y)`.
#[inline]
pub fn rk4_step<T: Real, F: Fn(T, State<T>) -> State<T>>(
    f: &F,
    t: T,
    y: State<T>,
    dt: T,
) -> State<T> {
    let half = dt * T::lit(0.5);
    let k1 = f(t, y);
    let k2 = f(t + half, [y[0] + half * k1[0], y[1] + half * k1[1]]);
    let k3 = f(t + half, [y[0] + half * k2[0], y[1] + half * k2[1]]);
    let k4 = f(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
    let sixth = dt / T::lit(6.0);
    [
        y[0] + sixth * (k1[0] + T::lit(2.0) * (k2[0] + k3[0]) + k4[0]),
        y[1] + sixth * (k1[1] + T::lit(2.0) * (k2[1] + k3[1]) + k4[1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let f = |_t: f64, y: State<f64>| [y[1], -y[0]];
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut y = [0.0, 1.0];
            for i in 0..n {
                y = rk4_step(&f, i as f64 * dt, y, dt);
            }
            (y[0] - 1f64.sin()).abs()
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}
