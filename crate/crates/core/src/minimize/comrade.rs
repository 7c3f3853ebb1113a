//! Real roots and exact minima of orthonormal Legendre series via the comrade
//! matrix, the analogue of the companion matrix for an orthogonal basis.

use super::MinResult;
use crate::basis::jacobi::jacobi_table_with_derivative;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Recurrence coefficient in `x ψ_k = β_{k+1} ψ_{k+1} + β_k ψ_{k-1}`.
fn beta<T: Scalar>(k: usize) -> T {
    let k = T::of_usize(k);
    k / (T::of(4.0) * k * k - T::one()).sqrt()
}

/// Value and derivative of `Σ c_k ψ_k(x)`.
pub fn legendre_series_eval<T: Scalar>(coeffs: &[T], x: T) -> (T, T) {
    if coeffs.is_empty() {
        return (T::zero(), T::zero());
    }
    let mut v = vec![T::zero(); coeffs.len()];
    let mut d = vec![T::zero(); coeffs.len()];
    jacobi_table_with_derivative(0, 0, x, &mut v, &mut d);
    coeffs
        .iter()
        .zip(v.iter().zip(&d))
        .fold((T::zero(), T::zero()), |(a, b), (&c, (&p, &dp))| {
            (a + c * p, b + c * dp)
        })
}

/// Coefficients of the derivative series: `ψ_n' = Σ_{k<n, n-k odd} sqrt((2n+1)(2k+1)) ψ_k`.
pub fn legendre_series_derivative<T: Scalar>(coeffs: &[T]) -> Vec<T> {
    let n = coeffs.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut out = vec![T::zero(); n - 1];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        let mut m = k + 1;
        while m < n {
            acc += coeffs[m] * T::of_usize((2 * m + 1) * (2 * k + 1)).sqrt();
            m += 2;
        }
        *o = acc;
    }
    out
}

/// Drops trailing coefficients that are negligible relative to the largest.
fn trim<T: Scalar>(coeffs: &[T]) -> &[T] {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    let cut = T::of(16.0) * T::epsilon() * scale;
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1].abs() <= cut {
        len -= 1;
    }
    &coeffs[..len]
}

/// Comrade matrix of `Σ_{k≤n} c_k ψ_k` (upper Hessenberg, row-major `n×n`).
fn comrade_matrix<T: Scalar>(c: &[T]) -> Vec<Vec<T>> {
    let n = c.len() - 1;
    let mut m = vec![vec![T::zero(); n]; n];
    for k in 0..n {
        if k >= 1 {
            m[k - 1][k] = beta(k);
        }
        if k + 1 < n {
            m[k + 1][k] = beta(k + 1);
        }
    }
    let lead = c[n];
    let bn: T = beta(n);
    for j in 0..n {
        m[j][n - 1] -= bn * c[j] / lead;
    }
    m
}

/// Diagonal similarity scaling that reduces the norm of a matrix before
/// eigenvalue computation.
pub fn balance<T: Scalar>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = T::two();
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < T::of(0.95) * s {
                done = false;
                let g = T::one() / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues `(re, im)` of an upper Hessenberg matrix by the shifted
/// double-step QR algorithm. The matrix is destroyed.
pub fn hessenberg_eigenvalues<T: Scalar>(h: &mut [Vec<T>]) -> Result<Vec<(T, T)>> {
    let n = h.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    // One-based working copy keeps the index arithmetic of the classical
    // formulation intact.
    let mut a = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[i][j];
        }
    }
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];

    let mut anorm = T::zero();
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = T::zero();
    let half = T::half();
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = T::zero();
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != T::zero() {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = T::zero();
                    wi[nn] = T::zero();
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == 60 {
                return Err(Error::EigenSolver);
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = T::of(0.75) * s;
                y = x;
                w = T::of(-0.4375) * s * s;
            }
            its += 1;

            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = T::zero();
                if i != m + 2 {
                    a[i][i - 3] = T::zero();
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = T::zero();
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
}

/// Real roots in `[lo, hi]` of an orthonormal Legendre series, polished by
/// Newton's method. Roots are returned in ascending order.
pub fn legendre_roots<T: Scalar>(coeffs: &[T], lo: T, hi: T) -> Result<Vec<T>> {
    let c = trim(coeffs);
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("polynomial coefficients"));
    }
    let mut m = comrade_matrix(c);
    balance(&mut m);
    let eig = hessenberg_eigenvalues(&mut m)?;
    let slack = T::of(1e-8);
    let derivative = legendre_series_derivative(c);
    let mut roots: Vec<T> = eig
        .into_iter()
        .filter(|&(re, im)| im.abs() <= T::of(1e-6) * (T::one() + re.abs()))
        .map(|(re, _)| re)
        .filter(|&re| re >= lo - slack && re <= hi + slack)
        .map(|mut r| {
            for _ in 0..3 {
                let (f, _) = legendre_series_eval(c, r);
                let (df, _) = legendre_series_eval(&derivative, r);
                if df == T::zero() || !df.is_finite() {
                    break;
                }
                let next = r - f / df;
                if !next.is_finite() || (next - r).abs() > T::of(1e-3) {
                    break;
                }
                r = next;
            }
            r.max(lo).min(hi)
        })
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    Ok(roots)
}

/// Global minimum over `[lo, hi] ⊆ [-1, 1]` of `Σ c_k ψ_k`: the smallest value
/// among both endpoints and the real critical points inside the interval.
pub fn minimize_1d<T: Scalar>(coeffs: &[T], lo: T, hi: T) -> Result<MinResult<T>> {
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("polynomial coefficients"));
    }
    if !(lo <= hi) || lo < -T::one() || hi > T::one() {
        return Err(Error::InvalidParameter("interval must lie within [-1, 1]".into()));
    }
    let derivative = legendre_series_derivative(coeffs);
    let mut candidates = vec![lo, hi];
    candidates.extend(legendre_roots(&derivative, lo, hi)?);
    let mut best = (lo, legendre_series_eval(coeffs, lo).0);
    for &x in &candidates[1..] {
        let value = legendre_series_eval(coeffs, x).0;
        if value < best.1 {
            best = (x, value);
        }
    }
    Ok(MinResult {
        x_star: [best.0, T::zero(), T::zero()],
        value: best.1,
        gd_iters: 0,
        seed_point: [lo, T::zero(), T::zero()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(mut m: Vec<Vec<f64>>) -> Vec<f64> {
        let mut e: Vec<f64> = hessenberg_eigenvalues(&mut m)
            .unwrap()
            .into_iter()
            .map(|p| p.0)
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = vec![vec![3.0, 1.0, 2.0], vec![0.0, -1.0, 4.0], vec![0.0, 0.0, 0.5]];
        let e = sorted_real(m);
        for (a, b) in e.iter().zip([-1.0, 0.5, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_pair_of_rotation() {
        let mut m = vec![vec![0.0_f64, -2.0], vec![2.0, 0.0]];
        let e = hessenberg_eigenvalues(&mut m).unwrap();
        for (re, im) in e {
            assert!(re.abs() < 1e-14 && (im.abs() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn companion_of_monomial_roots() {
        // Companion matrix of (x-1)(x-2)(x-3)(x-4)(x+0.5) as upper Hessenberg.
        let roots = [1.0, 2.0, 3.0, 4.0, -0.5];
        let mut poly = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= r * c;
            }
            poly = next;
        }
        let n = roots.len();
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            m[0][j] = -poly[j + 1];
        }
        for i in 1..n {
            m[i][i - 1] = 1.0;
        }
        balance(&mut m);
        let e = sorted_real(m);
        let mut want = roots.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{e:?}");
        }
    }

    #[test]
    fn derivative_series_matches_pointwise_derivative() {
        let c = [0.3_f64, -1.0, 0.25, 0.7, -0.2, 0.05];
        let d = legendre_series_derivative(&c);
        for &x in &[-0.8, -0.1, 0.4, 0.95] {
            let (_, want) = legendre_series_eval(&c, x);
            let (got, _) = legendre_series_eval(&d, x);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_of_legendre_mode_are_gauss_nodes() {
        let mut c = vec![0.0; 8];
        c[7] = 1.0;
        let roots = legendre_roots(&c, -1.0, 1.0).unwrap();
        let (nodes, _) = crate::basis::jacobi::gauss_legendre::<f64>(7).unwrap();
        assert_eq!(roots.len(), 7);
        for (r, n) in roots.iter().zip(&nodes) {
            assert!((r - n).abs() < 1e-13);
        }
    }

    #[test]
    fn parabola_minimum_at_origin() {
        let r = minimize_1d(&[0.0_f64, 0.0, 1.0], -1.0, 1.0).unwrap();
        assert!(r.x_star[0].abs() < 1e-14);
        assert!((r.value + 0.79056942).abs() < 1e-8);
    }

    #[test]
    fn monotone_series_has_endpoint_minimum() {
        let r = minimize_1d(&[0.0, 1.0], -1.0, 1.0).unwrap();
        assert_eq!(r.x_star[0], -1.0);
        let r = minimize_1d(&[2.0_f64], -1.0, 1.0).unwrap();
        assert!((r.value - 2.0_f64.sqrt()).abs() < 1e-15);
    }
}
