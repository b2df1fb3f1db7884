//! Symmetric tridiagonal pencils `A x = mu M x` with `M` positive definite.
//!
//! The smallest eigenvalue is located by Sturm bisection on the inertia of
//! `A - mu M` and its eigenvector by inverse iteration.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag<T> {
    pub diag: Vec<T>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![T::zero(); n],
            off: vec![T::zero(); n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.mul_vec(x)
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilError {
    /// The mass matrix failed its Cholesky factorization.
    MassNotPositive,
    /// Bracketing the spectrum failed (non-finite entries).
    NoBracket,
}

/// Number of eigenvalues of the pencil strictly below `mu`.
pub fn sturm_count<T: Real>(a: &SymTridiag<T>, m: &SymTridiag<T>, mu: T) -> usize {
    let n = a.len();
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut pivot = T::one();
    for i in 0..n {
        let mut d = a.diag[i] - mu * m.diag[i];
        if i > 0 {
            let e = a.off[i - 1] - mu * m.off[i - 1];
            d = d - e * e / pivot;
        }
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
        pivot = d;
    }
    count
}

fn mass_is_positive<T: Real>(m: &SymTridiag<T>) -> bool {
    let mut pivot = T::one();
    for i in 0..m.len() {
        let mut d = m.diag[i];
        if i > 0 {
            d = d - m.off[i - 1] * m.off[i - 1] / pivot;
        }
        if !(d > T::zero()) {
            return false;
        }
        pivot = d;
    }
    true
}

/// Solves `(A - mu M) x = rhs` by the Thomas algorithm.
fn shifted_solve<T: Real>(a: &SymTridiag<T>, m: &SymTridiag<T>, mu: T, rhs: &[T]) -> Vec<T> {
    let n = a.len();
    let tiny = T::epsilon() * T::epsilon();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut pivot = a.diag[0] - mu * m.diag[0];
    if pivot.abs() < tiny {
        pivot = tiny;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        let e = a.off[i - 1] - mu * m.off[i - 1];
        c[i - 1] = e / pivot;
        pivot = a.diag[i] - mu * m.diag[i] - e * c[i - 1];
        if pivot.abs() < tiny {
            pivot = tiny;
        }
        d[i] = (rhs[i] - e * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    x
}

/// Smallest eigenvalue of the pencil and an eigenvector scaled so that its
/// largest-magnitude entry is `+1`.
pub fn smallest_eigenpair<T: Real>(
    a: &SymTridiag<T>,
    m: &SymTridiag<T>,
) -> Result<(T, Vec<T>), PencilError> {
    assert_eq!(a.len(), m.len());
    if !mass_is_positive(m) {
        return Err(PencilError::MassNotPositive);
    }
    let n = a.len();
    // bracket
    let mut width = T::one();
    let mut lo = -width;
    let mut guard = 0;
    while sturm_count(a, m, lo) > 0 {
        width = width * T::lit(2.0);
        lo = -width;
        guard += 1;
        if guard > 200 {
            return Err(PencilError::NoBracket);
        }
    }
    let mut hi = width;
    guard = 0;
    while sturm_count(a, m, hi) == 0 {
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 200 {
            return Err(PencilError::NoBracket);
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, m, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = (lo + hi) * T::lit(0.5);

    // Inverse iteration with a shift just below the eigenvalue, on the pencil
    // congruent under diag(M)^{-1/2} so that degenerate-weight rows keep
    // pivots well above the floor of `shifted_solve`.
    let (sa, sm, s) = equilibrate(a, m);
    let scale = mu.abs().max(T::one());
    let shift = mu - T::lit(64.0) * T::epsilon() * scale;
    let mut x = vec![T::one(); n];
    for _ in 0..4 {
        let rhs = sm.mul_vec(&x);
        x = shifted_solve(&sa, &sm, shift, &rhs);
        let big = x.iter().fold(
            T::zero(),
            |acc, v| if v.abs() > acc.abs() { *v } else { acc },
        );
        for v in x.iter_mut() {
            *v = *v / big;
        }
    }
    let mut x: Vec<T> = x.iter().zip(&s).map(|(v, si)| *v * *si).collect();
    let big = x.iter().fold(
        T::zero(),
        |acc, v| if v.abs() > acc.abs() { *v } else { acc },
    );
    for v in x.iter_mut() {
        *v = *v / big;
    }
    Ok((mu, x))
}

/// `(S A S, S M S, S)` with `S = diag(M)^{-1/2}`.
fn equilibrate<T: Real>(
    a: &SymTridiag<T>,
    m: &SymTridiag<T>,
) -> (SymTridiag<T>, SymTridiag<T>, Vec<T>) {
    let s: Vec<T> = m.diag.iter().map(|d| T::one() / d.sqrt()).collect();
    let scale = |t: &SymTridiag<T>| SymTridiag {
        diag: t
            .diag
            .iter()
            .zip(&s)
            .map(|(d, si)| *d * *si * *si)
            .collect(),
        off: t
            .off
            .iter()
            .enumerate()
            .map(|(i, e)| *e * s[i] * s[i + 1])
            .collect(),
    };
    (scale(a), scale(m), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dirichlet Laplacian stiffness/mass of linear elements on (0, 1).
    fn fem_pencil(n: usize) -> (SymTridiag<f64>, SymTridiag<f64>) {
        let h = 1.0 / n as f64;
        let dim = n - 1;
        let mut a = SymTridiag::zeros(dim);
        let mut m = SymTridiag::zeros(dim);
        for i in 0..dim {
            a.diag[i] = 2.0 / h;
            m.diag[i] = 4.0 * h / 6.0;
        }
        for i in 0..dim - 1 {
            a.off[i] = -1.0 / h;
            m.off[i] = h / 6.0;
        }
        (a, m)
    }

    #[test]
    fn dirichlet_laplacian_ground_state() {
        let (a, m) = fem_pencil(400);
        let (mu, x) = smallest_eigenpair(&a, &m).unwrap();
        let exact = std::f64::consts::PI.powi(2);
        assert!((mu - exact).abs() < 1e-3 * exact);
        assert!(x.iter().all(|v| *v > 0.0));
        // eigen-residual
        let ax = a.mul_vec(&x);
        let mx = m.mul_vec(&x);
        let res = ax
            .iter()
            .zip(&mx)
            .map(|(p, q)| (p - mu * q).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn count_is_monotone() {
        let (a, m) = fem_pencil(50);
        let mut last = 0;
        for i in 0..200 {
            let c = sturm_count(&a, &m, i as f64 * 500.0);
            assert!(c >= last);
            last = c;
        }
        assert_eq!(last, 49);
    }

    #[test]
    fn rejects_indefinite_mass() {
        let a = SymTridiag {
            diag: vec![1.0, 1.0],
            off: vec![0.0],
        };
        let m = SymTridiag {
            diag: vec![1.0, -1.0],
            off: vec![0.0],
        };
        assert_eq!(
            smallest_eigenpair(&a, &m),
            Err(PencilError::MassNotPositive)
        );
    }
}
