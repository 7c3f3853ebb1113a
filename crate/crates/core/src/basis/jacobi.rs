//! Orthonormal Jacobi polynomials and Gauss-Jacobi quadrature.
//!
//! Polynomials are normalized so that
//! `∫_{-1}^{1} p_m(x) p_n(x) (1-x)^α (1+x)^β dx = δ_mn`. The exponents are
//! restricted to non-negative integers, which is all the simplex bases and
//! their collapsed quadratures need.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `α! β! / (α+β)!` as a reciprocal binomial coefficient.
fn inverse_binomial<T: Scalar>(alpha: u32, beta: u32) -> T {
    let (small, large) = if alpha < beta { (alpha, beta) } else { (beta, alpha) };
    let mut binom = T::one();
    for k in 1..=small {
        binom = binom * T::of_usize((large + k) as usize) / T::of_usize(k as usize);
    }
    T::one() / binom
}

/// Fills `out[n]` with the orthonormal Jacobi polynomial of degree `n` at `x`
/// for `n = 0..out.len()`.
pub fn jacobi_table<T: Scalar>(alpha: u32, beta: u32, x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    let a = T::of_usize(alpha as usize);
    let b = T::of_usize(beta as usize);
    let one = T::one();
    let two = T::two();

    let gamma0 = two.powi((alpha + beta + 1) as i32) / (a + b + one) * inverse_binomial(alpha, beta);
    out[0] = one / gamma0.sqrt();
    if out.len() == 1 {
        return;
    }
    let gamma1 = (a + one) * (b + one) / (a + b + T::of(3.0)) * gamma0;
    out[1] = ((a + b + two) * x / two + (a - b) / two) / gamma1.sqrt();

    let mut a_old = two / (two + a + b) * ((a + one) * (b + one) / (a + b + T::of(3.0))).sqrt();
    for i in 1..out.len() - 1 {
        let fi = T::of_usize(i);
        let h1 = two * fi + a + b;
        let a_new = two / (h1 + two)
            * ((fi + one) * (fi + one + a + b) * (fi + one + a) * (fi + one + b) / (h1 + one) / (h1 + T::of(3.0)))
                .sqrt();
        let b_new = -(a * a - b * b) / h1 / (h1 + two);
        out[i + 1] = ((x - b_new) * out[i] - a_old * out[i - 1]) / a_new;
        a_old = a_new;
    }
}

/// Orthonormal Jacobi polynomial of degree `n`.
pub fn jacobi<T: Scalar>(n: usize, alpha: u32, beta: u32, x: T) -> T {
    let mut table = vec![T::zero(); n + 1];
    jacobi_table(alpha, beta, x, &mut table);
    table[n]
}

/// Derivative of the orthonormal Jacobi polynomial of degree `n`.
pub fn jacobi_derivative<T: Scalar>(n: usize, alpha: u32, beta: u32, x: T) -> T {
    if n == 0 {
        return T::zero();
    }
    let scale = T::of_usize(n * (n + (alpha + beta) as usize + 1)).sqrt();
    scale * jacobi(n - 1, alpha + 1, beta + 1, x)
}

/// Values and derivatives of all degrees `0..values.len()` at `x`, obtained by
/// differentiating the three-term recurrence alongside the values.
pub fn jacobi_table_with_derivative<T: Scalar>(alpha: u32, beta: u32, x: T, values: &mut [T], derivatives: &mut [T]) {
    debug_assert_eq!(values.len(), derivatives.len());
    if values.is_empty() {
        return;
    }
    let a = T::of_usize(alpha as usize);
    let b = T::of_usize(beta as usize);
    let one = T::one();
    let two = T::two();

    let gamma0 = two.powi((alpha + beta + 1) as i32) / (a + b + one) * inverse_binomial(alpha, beta);
    values[0] = one / gamma0.sqrt();
    derivatives[0] = T::zero();
    if values.len() == 1 {
        return;
    }
    let gamma1 = (a + one) * (b + one) / (a + b + T::of(3.0)) * gamma0;
    let inv = one / gamma1.sqrt();
    values[1] = ((a + b + two) * x / two + (a - b) / two) * inv;
    derivatives[1] = (a + b + two) / two * inv;

    let mut a_old = two / (two + a + b) * ((a + one) * (b + one) / (a + b + T::of(3.0))).sqrt();
    for i in 1..values.len() - 1 {
        let fi = T::of_usize(i);
        let h1 = two * fi + a + b;
        let a_new = two / (h1 + two)
            * ((fi + one) * (fi + one + a + b) * (fi + one + a) * (fi + one + b) / (h1 + one) / (h1 + T::of(3.0)))
                .sqrt();
        let b_new = -(a * a - b * b) / h1 / (h1 + two);
        values[i + 1] = ((x - b_new) * values[i] - a_old * values[i - 1]) / a_new;
        derivatives[i + 1] = ((x - b_new) * derivatives[i] + values[i] - a_old * derivatives[i - 1]) / a_new;
        a_old = a_new;
    }
}

/// Gauss-Jacobi rule with `q` points for the weight `(1-x)^α (1+x)^β`.
///
/// Nodes are the roots of the degree-`q` orthonormal polynomial, found by
/// Newton iteration with deflation from Chebyshev starting values. Weights
/// are the reciprocal Christoffel function `1 / Σ_{n<q} p_n(x_i)²`.
/// Nodes are returned in ascending order.
pub fn gauss_jacobi<T: Scalar>(q: usize, alpha: u32, beta: u32) -> Result<(Vec<T>, Vec<T>)> {
    if q == 0 {
        return Err(Error::InvalidParameter(
            "Gauss-Jacobi rule needs at least one point".into(),
        ));
    }
    let pi = T::of(std::f64::consts::PI);
    let tol = T::epsilon() * T::of(4.0);
    let mut nodes: Vec<T> = Vec::with_capacity(q);
    let mut values = vec![T::zero(); q + 1];
    let mut derivs = vec![T::zero(); q + 1];

    for k in 0..q {
        let cheb = -(T::of_usize(2 * k + 1) * pi / T::of_usize(2 * q)).cos();
        let mut r = match nodes.last() {
            Some(&prev) => (cheb + prev) * T::half(),
            None => cheb,
        };
        for _ in 0..200 {
            jacobi_table_with_derivative(alpha, beta, r, &mut values, &mut derivs);
            let p = values[q];
            let dp = derivs[q];
            let deflation: T = nodes.iter().map(|&x| T::one() / (r - x)).sum();
            let delta = -p / (dp - deflation * p);
            r += delta;
            if delta.abs() <= tol * (T::one() + r.abs()) {
                break;
            }
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("Gauss-Jacobi node iteration"));
        }
        nodes.push(r);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));

    let mut table = vec![T::zero(); q];
    let weights = nodes
        .iter()
        .map(|&x| {
            jacobi_table(alpha, beta, x, &mut table);
            T::one() / table.iter().map(|&p| p * p).sum::<T>()
        })
        .collect();
    Ok((nodes, weights))
}

/// Gauss-Legendre rule with `q` points on `[-1, 1]`.
pub fn gauss_legendre<T: Scalar>(q: usize) -> Result<(Vec<T>, Vec<T>)> {
    gauss_jacobi(q, 0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_weighted(alpha: i32, beta: i32, f: impl Fn(f64) -> f64) -> f64 {
        // Composite Gauss-Legendre on many panels as an independent check.
        let (x, w) = gauss_legendre::<f64>(20).unwrap();
        let panels = 400;
        let h = 2.0 / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = -1.0 + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + (xi + 1.0) * h / 2.0;
                total += wi * h / 2.0 * f(t) * (1.0 - t).powi(alpha) * (1.0 + t).powi(beta);
            }
        }
        total
    }

    #[test]
    fn legendre_is_orthonormal() {
        for m in 0..6 {
            for n in 0..6 {
                let got = integrate_weighted(0, 0, |x| jacobi(m, 0, 0, x) * jacobi(n, 0, 0, x));
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-12, "m={m} n={n} got={got}");
            }
        }
    }

    #[test]
    fn jacobi_one_zero_is_orthonormal() {
        for m in 0..5 {
            for n in 0..5 {
                let got = integrate_weighted(1, 0, |x| jacobi(m, 1, 0, x) * jacobi(n, 1, 0, x));
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-11, "m={m} n={n} got={got}");
            }
        }
    }

    #[test]
    fn legendre_degree_two_at_origin() {
        // sqrt(5/2) * P2(0) = -sqrt(5/2)/2
        let got = jacobi(2, 0, 0, 0.0_f64);
        assert!((got + (2.5_f64).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &(a, b) in &[(0, 0), (1, 0), (3, 0), (2, 1)] {
            for n in 0..7 {
                for &x in &[-0.9_f64, -0.3, 0.1, 0.77] {
                    let h = 1e-6;
                    let fd = (jacobi(n, a, b, x + h) - jacobi(n, a, b, x - h)) / (2.0 * h);
                    let d = jacobi_derivative(n, a, b, x);
                    assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn derivative_table_agrees_with_shifted_family() {
        let mut v = [0.0_f64; 8];
        let mut d = [0.0; 8];
        for &(a, b) in &[(0, 0), (3, 0), (5, 0)] {
            jacobi_table_with_derivative(a, b, 0.37, &mut v, &mut d);
            for n in 0..8 {
                assert!((d[n] - jacobi_derivative(n, a, b, 0.37_f64)).abs() < 1e-11);
                assert!((v[n] - jacobi(n, a, b, 0.37_f64)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for q in 1..12 {
            let (x, w) = gauss_legendre::<f64>(q).unwrap();
            for deg in 0..(2 * q) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "q={q} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn gauss_jacobi_exactness() {
        for &alpha in &[1u32, 2] {
            for q in 1..9 {
                let (x, w) = gauss_jacobi::<f64>(q, alpha, 0).unwrap();
                for deg in 0..(2 * q) {
                    let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                    let want = integrate_weighted(alpha as i32, 0, |t| t.powi(deg as i32));
                    assert!((got - want).abs() < 1e-11, "alpha={alpha} q={q} deg={deg}");
                }
            }
        }
    }

    #[test]
    fn nodes_ascend_and_lie_inside() {
        let (x, _) = gauss_jacobi::<f64>(15, 2, 0).unwrap();
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x.iter().all(|&v| v > -1.0 && v < 1.0));
    }
}
