//! Orthonormal modal bases on reference elements.
//!
//! Segment, Quad and Hex use tensor products of normalized Legendre
//! polynomials. Tri and Tet use the collapsed-coordinate (Dubiner /
//! Proriol-Koornwinder-Dubiner) family built from Jacobi polynomials, so
//! that `∫_ref ψ_i ψ_j = δ_ij` on every element kind.

mod barycentric;
mod element;
pub mod jacobi;
pub mod quadrature;

pub use barycentric::{barycentric_weights, eval_nodal_barycentric, lagrange_values, NodalEvaluator};
pub use element::{collapsed_to_reference, reference_to_collapsed, ElementKind};
pub use quadrature::{ElementQuadrature, FaceQuadrature};

use crate::error::{Error, Result};
use crate::scalar::{dot, Point, Scalar};
use jacobi::jacobi_table_with_derivative;

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 20;
const TABLE: usize = MAX_ORDER + 1;

/// Containment tolerance for evaluation points on the element boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// Orthonormal basis of order `N` on a reference element together with its
/// quadrature rule and the basis values at the quadrature points.
#[derive(Debug, Clone)]
pub struct OrthoBasis<T> {
    kind: ElementKind,
    order: usize,
    modes: Vec<[usize; 3]>,
    quadrature: ElementQuadrature<T>,
    /// `size × quadrature.len()`, row-major by mode.
    vandermonde: Vec<T>,
}

/// Builds the orthonormal basis of `order` on `kind` with `q` quadrature
/// points per direction.
pub fn make_basis<T: Scalar>(kind: ElementKind, order: usize, q: usize) -> Result<OrthoBasis<T>> {
    OrthoBasis::new(kind, order, q)
}

impl<T: Scalar> OrthoBasis<T> {
    pub fn new(kind: ElementKind, order: usize, q: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "polynomial order {order} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        if q < order + 1 {
            return Err(Error::QuadratureTooSmall {
                order,
                given: q,
                required: order + 1,
            });
        }
        let modes = mode_indices(kind, order);
        let quadrature = ElementQuadrature::new(kind, q)?;
        let mut basis = Self {
            kind,
            order,
            modes,
            quadrature,
            vandermonde: Vec::new(),
        };
        let p = basis.size();
        let nq = basis.quadrature.len();
        let mut vandermonde = vec![T::zero(); p * nq];
        let mut column = vec![T::zero(); p];
        for (qi, x) in basis.quadrature.points.iter().enumerate() {
            basis.fill_values(x, &mut column);
            for j in 0..p {
                vandermonde[j * nq + qi] = column[j];
            }
        }
        basis.vandermonde = vandermonde;
        Ok(basis)
    }

    /// Basis with the default `N + 2` quadrature points per direction.
    pub fn with_default_quadrature(kind: ElementKind, order: usize) -> Result<Self> {
        Self::new(kind, order, order + 2)
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of modes `P`.
    pub fn size(&self) -> usize {
        self.modes.len()
    }

    /// Polynomial degree multi-index of each mode.
    pub fn modes(&self) -> &[[usize; 3]] {
        &self.modes
    }

    pub fn quadrature(&self) -> &ElementQuadrature<T> {
        &self.quadrature
    }

    pub fn quad_points(&self) -> &[Point<T>] {
        &self.quadrature.points
    }

    pub fn quad_weights(&self) -> &[T] {
        &self.quadrature.weights
    }

    /// `ψ_j(x_q)` for mode `j`, over all quadrature points.
    pub fn vandermonde_row(&self, j: usize) -> &[T] {
        let nq = self.quadrature.len();
        &self.vandermonde[j * nq..(j + 1) * nq]
    }

    fn check_len(&self, v: &[T]) -> Result<()> {
        if v.len() != self.size() {
            return Err(Error::CoefficientLength {
                expected: self.size(),
                found: v.len(),
            });
        }
        Ok(())
    }

    fn check_point(&self, x: &Point<T>) -> Result<()> {
        if !self.kind.contains(x, T::of(BOUNDARY_TOL)) {
            return Err(Error::OutsideElement {
                kind: self.kind,
                point: x.map(|c| c.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(())
    }

    /// `Σ_j v_j ψ_j(x)`.
    pub fn eval(&self, v: &[T], x: &Point<T>) -> Result<T> {
        self.check_len(v)?;
        self.check_point(x)?;
        Ok(self.value_at(v, x))
    }

    /// `∇_x Σ_j v_j ψ_j(x)`; entries beyond the element dimension are zero.
    pub fn eval_grad(&self, v: &[T], x: &Point<T>) -> Result<Point<T>> {
        self.check_len(v)?;
        self.check_point(x)?;
        Ok(self.value_and_gradient_at(v, x).1)
    }

    /// Unchecked evaluation for hot loops; `x` must lie in the element.
    pub fn value_at(&self, v: &[T], x: &Point<T>) -> T {
        let mut psi = vec![T::zero(); self.size()];
        self.fill_values(x, &mut psi);
        dot(v, &psi)
    }

    /// Unchecked value and gradient.
    pub fn value_and_gradient_at(&self, v: &[T], x: &Point<T>) -> (T, Point<T>) {
        let p = self.size();
        let mut psi = vec![T::zero(); p];
        let mut grad = vec![[T::zero(); 3]; p];
        self.fill_values_and_gradients(x, &mut psi, &mut grad);
        let mut g = [T::zero(); 3];
        for j in 0..p {
            for d in 0..3 {
                g[d] += v[j] * grad[j][d];
            }
        }
        (dot(v, &psi), g)
    }

    /// Writes `ψ_j(x)` for every mode into `out`.
    pub fn fill_values(&self, x: &Point<T>, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.size());
        match self.kind {
            ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => {
                let d = self.dim();
                let mut tables = [[T::zero(); TABLE]; 3];
                let mut scratch = [T::zero(); TABLE];
                for k in 0..d {
                    jacobi_table_with_derivative(
                        0,
                        0,
                        x[k],
                        &mut tables[k][..=self.order],
                        &mut scratch[..=self.order],
                    );
                }
                for (slot, m) in out.iter_mut().zip(&self.modes) {
                    let mut value = T::one();
                    for k in 0..d {
                        value *= tables[k][m[k]];
                    }
                    *slot = value;
                }
            }
            ElementKind::Tri => self.tri_modes(x, out, None),
            ElementKind::Tet => self.tet_modes(x, out, None),
        }
    }

    /// Writes `ψ_j(x)` and `∇ψ_j(x)` for every mode.
    pub fn fill_values_and_gradients(&self, x: &Point<T>, values: &mut [T], grads: &mut [Point<T>]) {
        debug_assert_eq!(values.len(), self.size());
        debug_assert_eq!(grads.len(), self.size());
        match self.kind {
            ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => {
                let d = self.dim();
                let mut tables = [[T::zero(); TABLE]; 3];
                let mut dtables = [[T::zero(); TABLE]; 3];
                for k in 0..d {
                    jacobi_table_with_derivative(
                        0,
                        0,
                        x[k],
                        &mut tables[k][..=self.order],
                        &mut dtables[k][..=self.order],
                    );
                }
                for ((value, grad), m) in values.iter_mut().zip(grads.iter_mut()).zip(&self.modes) {
                    let mut v = T::one();
                    for k in 0..d {
                        v *= tables[k][m[k]];
                    }
                    *value = v;
                    *grad = [T::zero(); 3];
                    for k in 0..d {
                        let mut g = dtables[k][m[k]];
                        for l in 0..d {
                            if l != k {
                                g *= tables[l][m[l]];
                            }
                        }
                        grad[k] = g;
                    }
                }
            }
            ElementKind::Tri => self.tri_modes(x, values, Some(grads)),
            ElementKind::Tet => self.tet_modes(x, values, Some(grads)),
        }
    }

    fn tri_modes(&self, x: &Point<T>, values: &mut [T], mut grads: Option<&mut [Point<T>]>) {
        let n = self.order;
        let one = T::one();
        let half = T::half();
        let c = reference_to_collapsed(ElementKind::Tri, x);
        let (a, b) = (c[0], c[1]);
        let hb = (one - b) * half;

        let mut fa = [T::zero(); TABLE];
        let mut dfa = [T::zero(); TABLE];
        jacobi_table_with_derivative(0, 0, a, &mut fa[..=n], &mut dfa[..=n]);
        let mut gb = [T::zero(); TABLE];
        let mut dgb = [T::zero(); TABLE];

        let mut idx = 0;
        for i in 0..=n {
            jacobi_table_with_derivative((2 * i + 1) as u32, 0, b, &mut gb[..=n - i], &mut dgb[..=n - i]);
            let scale = T::two().powi(i as i32) * T::of(std::f64::consts::SQRT_2);
            let hb_i = hb.powi(i as i32);
            let hb_im1 = if i > 0 { hb.powi(i as i32 - 1) } else { T::zero() };
            for j in 0..=n - i {
                values[idx] = scale * fa[i] * gb[j] * hb_i;
                if let Some(g) = grads.as_deref_mut() {
                    let dr = if i > 0 { dfa[i] * gb[j] * hb_im1 } else { T::zero() };
                    let mut tmp = dgb[j] * hb_i;
                    if i > 0 {
                        tmp -= T::of_usize(i) * half * gb[j] * hb_im1;
                    }
                    let ds = half * (one + a) * dr + fa[i] * tmp;
                    g[idx] = [scale * dr, scale * ds, T::zero()];
                }
                idx += 1;
            }
        }
    }

    fn tet_modes(&self, x: &Point<T>, values: &mut [T], mut grads: Option<&mut [Point<T>]>) {
        let n = self.order;
        let one = T::one();
        let half = T::half();
        let c = reference_to_collapsed(ElementKind::Tet, x);
        let (a, b, cc) = (c[0], c[1], c[2]);
        let hb = (one - b) * half;
        let hc = (one - cc) * half;

        let mut fa = [T::zero(); TABLE];
        let mut dfa = [T::zero(); TABLE];
        jacobi_table_with_derivative(0, 0, a, &mut fa[..=n], &mut dfa[..=n]);
        let mut gb = [T::zero(); TABLE];
        let mut dgb = [T::zero(); TABLE];
        let mut hcv = [T::zero(); TABLE];
        let mut dhc = [T::zero(); TABLE];

        let mut idx = 0;
        for i in 0..=n {
            jacobi_table_with_derivative((2 * i + 1) as u32, 0, b, &mut gb[..=n - i], &mut dgb[..=n - i]);
            let hb_i = hb.powi(i as i32);
            let hb_im1 = if i > 0 { hb.powi(i as i32 - 1) } else { T::zero() };
            for j in 0..=n - i {
                jacobi_table_with_derivative(
                    (2 * (i + j) + 2) as u32,
                    0,
                    cc,
                    &mut hcv[..=n - i - j],
                    &mut dhc[..=n - i - j],
                );
                let ij = i + j;
                let hc_ij = hc.powi(ij as i32);
                let hc_ijm1 = if ij > 0 { hc.powi(ij as i32 - 1) } else { T::zero() };
                let scale = T::two().powf(T::of((2 * i + j) as f64 + 1.5));
                for k in 0..=n - i - j {
                    values[idx] = scale * fa[i] * gb[j] * hb_i * hcv[k] * hc_ij;
                    if let Some(g) = grads.as_deref_mut() {
                        let mut dr = dfa[i] * gb[j] * hcv[k];
                        if i > 0 {
                            dr *= hb_im1;
                        }
                        if ij > 0 {
                            dr *= hc_ijm1;
                        }
                        let mut tmp = dgb[j] * hb_i;
                        if i > 0 {
                            tmp -= half * T::of_usize(i) * gb[j] * hb_im1;
                        }
                        if ij > 0 {
                            tmp *= hc_ijm1;
                        }
                        let tmp_s = fa[i] * tmp * hcv[k];
                        let ds = half * (one + a) * dr + tmp_s;
                        let mut tc = dhc[k] * hc_ij;
                        if ij > 0 {
                            tc -= half * T::of_usize(ij) * hcv[k] * hc_ijm1;
                        }
                        let dt = half * (one + a) * dr + half * (one + b) * tmp_s + fa[i] * gb[j] * tc * hb_i;
                        g[idx] = [scale * dr, scale * ds, scale * dt];
                    }
                    idx += 1;
                }
            }
        }
    }

    /// Galerkin projection `v_j = Σ_q w_q f(x_q) ψ_j(x_q)`.
    pub fn project(&self, f: impl Fn(&Point<T>) -> T) -> Result<Vec<T>> {
        let samples = self
            .quadrature
            .points
            .iter()
            .map(|x| {
                let value = f(x);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::NonFinite("projected function"))
                }
            })
            .collect::<Result<Vec<T>>>()?;
        self.nodal_to_modal(&samples)
    }

    /// Modal coefficients from values at the quadrature points.
    pub fn nodal_to_modal(&self, nodal: &[T]) -> Result<Vec<T>> {
        let nq = self.quadrature.len();
        if nodal.len() != nq {
            return Err(Error::CoefficientLength {
                expected: nq,
                found: nodal.len(),
            });
        }
        let weighted: Vec<T> = nodal
            .iter()
            .zip(&self.quadrature.weights)
            .map(|(&f, &w)| f * w)
            .collect();
        Ok((0..self.size())
            .map(|j| dot(self.vandermonde_row(j), &weighted))
            .collect())
    }

    /// Values at the quadrature points from modal coefficients.
    pub fn modal_to_nodal(&self, v: &[T]) -> Result<Vec<T>> {
        self.check_len(v)?;
        let nq = self.quadrature.len();
        let mut out = vec![T::zero(); nq];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            for (o, &psi) in out.iter_mut().zip(self.vandermonde_row(j)) {
                *o += vj * psi;
            }
        }
        Ok(out)
    }

    /// Barycentric evaluator for nodal data on the tensor quadrature grid.
    pub fn nodal_evaluator(&self) -> Result<NodalEvaluator<T>> {
        NodalEvaluator::new(self)
    }
}

fn mode_indices(kind: ElementKind, n: usize) -> Vec<[usize; 3]> {
    let mut modes = Vec::with_capacity(kind.basis_size(n));
    match kind {
        ElementKind::Segment => modes.extend((0..=n).map(|i| [i, 0, 0])),
        ElementKind::Quad => {
            for i in 0..=n {
                for j in 0..=n {
                    modes.push([i, j, 0]);
                }
            }
        }
        ElementKind::Hex => {
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=n {
                        modes.push([i, j, k]);
                    }
                }
            }
        }
        ElementKind::Tri => {
            for i in 0..=n {
                for j in 0..=n - i {
                    modes.push([i, j, 0]);
                }
            }
        }
        ElementKind::Tet => {
            for i in 0..=n {
                for j in 0..=n - i {
                    for k in 0..=n - i - j {
                        modes.push([i, j, k]);
                    }
                }
            }
        }
    }
    modes
}
