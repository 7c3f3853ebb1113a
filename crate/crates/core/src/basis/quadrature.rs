//! Tensor and collapsed-coordinate quadrature rules on reference elements.

use super::element::{collapsed_to_reference, ElementKind};
use super::jacobi::{gauss_jacobi, gauss_legendre};
use crate::error::Result;
use crate::scalar::{Point, Scalar};

/// A quadrature rule on a reference element.
///
/// Points are ordered lexicographically over `axes` with the first axis
/// slowest. For simplices the axes hold collapsed coordinates: Gauss-Legendre
/// on the first direction and Gauss-Jacobi with weight `(1-ξ)^k` on the
/// `k`-th collapsed direction.
#[derive(Debug, Clone)]
pub struct ElementQuadrature<T> {
    pub kind: ElementKind,
    /// Points per direction.
    pub q: usize,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    /// One-dimensional nodes per direction (tensor or collapsed).
    pub axes: Vec<Vec<T>>,
}

impl<T: Scalar> ElementQuadrature<T> {
    /// Builds the rule with `q` points per direction, exact for polynomials of
    /// degree `2q - 1` in each direction.
    pub fn new(kind: ElementKind, q: usize) -> Result<Self> {
        let d = kind.dim();
        let mut axes = Vec::with_capacity(d);
        let mut axis_weights = Vec::with_capacity(d);
        for k in 0..d {
            let (x, w) = if kind.is_simplex() {
                gauss_jacobi::<T>(q, k as u32, 0)?
            } else {
                gauss_legendre::<T>(q)?
            };
            axes.push(x);
            axis_weights.push(w);
        }
        // (1-b)/2 and ((1-c)/2)² Jacobians are absorbed in the Jacobi weights.
        let collapse_scale = match kind {
            ElementKind::Tri => T::half(),
            ElementKind::Tet => T::of(0.125),
            _ => T::one(),
        };

        let total = q.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unflatten(flat, q, d);
            let mut c = [T::zero(); 3];
            let mut w = collapse_scale;
            for k in 0..d {
                c[k] = axes[k][idx[k]];
                w *= axis_weights[k][idx[k]];
            }
            points.push(collapsed_to_reference(kind, &c));
            weights.push(w);
        }
        Ok(Self {
            kind,
            q,
            points,
            weights,
            axes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point<T>) -> T) -> T {
        self.points.iter().zip(&self.weights).map(|(x, &w)| w * f(x)).sum()
    }
}

/// Multi-index of a lexicographic flat index, first axis slowest.
pub(crate) fn unflatten(mut flat: usize, q: usize, d: usize) -> [usize; 3] {
    let mut idx = [0; 3];
    for k in (0..d).rev() {
        idx[k] = flat % q;
        flat /= q;
    }
    idx
}

/// Quadrature on a face given by its reference vertices, with weights
/// normalized to sum to one. Faces are points, segments, triangles or
/// parallelograms (first, second and last vertex).
#[derive(Debug, Clone)]
pub struct FaceQuadrature<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> FaceQuadrature<T> {
    pub fn new(face_vertices: &[Point<T>], q: usize) -> Result<Self> {
        let lerp = |a: &Point<T>, b: &Point<T>, t: T| -> Point<T> {
            [
                a[0] + (b[0] - a[0]) * t,
                a[1] + (b[1] - a[1]) * t,
                a[2] + (b[2] - a[2]) * t,
            ]
        };
        match face_vertices.len() {
            1 => Ok(Self {
                points: vec![face_vertices[0]],
                weights: vec![T::one()],
            }),
            2 => {
                let (x, w) = gauss_legendre::<T>(q)?;
                let points = x
                    .iter()
                    .map(|&t| lerp(&face_vertices[0], &face_vertices[1], (t + T::one()) * T::half()))
                    .collect();
                let weights = w.iter().map(|&wi| wi * T::half()).collect();
                Ok(Self { points, weights })
            }
            3 => {
                let rule = ElementQuadrature::<T>::new(ElementKind::Tri, q)?;
                let [v0, v1, v2] = [face_vertices[0], face_vertices[1], face_vertices[2]];
                let points = rule
                    .points
                    .iter()
                    .map(|p| {
                        let l1 = (p[0] + T::one()) * T::half();
                        let l2 = (p[1] + T::one()) * T::half();
                        let l0 = T::one() - l1 - l2;
                        let mut out = [T::zero(); 3];
                        for k in 0..3 {
                            out[k] = l0 * v0[k] + l1 * v1[k] + l2 * v2[k];
                        }
                        out
                    })
                    .collect();
                let weights = rule.weights.iter().map(|&w| w * T::half()).collect();
                Ok(Self { points, weights })
            }
            4 => {
                let rule = ElementQuadrature::<T>::new(ElementKind::Quad, q)?;
                let v0 = face_vertices[0];
                let e1 = face_vertices[1];
                let e2 = face_vertices[3];
                let points = rule
                    .points
                    .iter()
                    .map(|p| {
                        let s = (p[0] + T::one()) * T::half();
                        let t = (p[1] + T::one()) * T::half();
                        let mut out = [T::zero(); 3];
                        for k in 0..3 {
                            out[k] = v0[k] + (e1[k] - v0[k]) * s + (e2[k] - v0[k]) * t;
                        }
                        out
                    })
                    .collect();
                let weights = rule.weights.iter().map(|&w| w * T::of(0.25)).collect();
                Ok(Self { points, weights })
            }
            n => Err(crate::error::Error::InvalidParameter(format!(
                "faces with {n} vertices are not supported"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ElementKind; 5] = [
        ElementKind::Segment,
        ElementKind::Quad,
        ElementKind::Tri,
        ElementKind::Hex,
        ElementKind::Tet,
    ];

    #[test]
    fn weights_sum_to_reference_measure() {
        for kind in KINDS {
            let rule = ElementQuadrature::<f64>::new(kind, 4).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - kind.measure::<f64>()).abs() < 1e-13, "{kind:?}");
            assert!(rule.points.iter().all(|p| kind.contains(p, 1e-14)));
        }
    }

    #[test]
    fn triangle_monomials() {
        // ∫_T x^2 y dA over {x,y ≥ -1, x+y ≤ 0}, computed by hand: ∫_{-1}^{1} y ∫_{-1}^{-y} x² dx dy.
        let exact = {
            // inner = ((-y)^3 + 1)/3
            let (x, w) = gauss_legendre::<f64>(10).unwrap();
            x.iter()
                .zip(&w)
                .map(|(&y, &wi)| wi * y * ((-y).powi(3) + 1.0) / 3.0)
                .sum::<f64>()
        };
        let rule = ElementQuadrature::<f64>::new(ElementKind::Tri, 3).unwrap();
        let got = rule.integrate(|p| p[0] * p[0] * p[1]);
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn tet_linear_moment_matches_centroid() {
        let rule = ElementQuadrature::<f64>::new(ElementKind::Tet, 3).unwrap();
        let vol: f64 = rule.weights.iter().sum();
        let c = ElementKind::Tet.centroid::<f64>();
        for k in 0..3 {
            let m = rule.integrate(|p| p[k]) / vol;
            assert!((m - c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn face_rules_normalized() {
        let tri = ElementKind::Tet.vertices::<f64>();
        let f = FaceQuadrature::new(&tri[..3], 3).unwrap();
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let quad = ElementKind::Hex.vertices::<f64>();
        let f = FaceQuadrature::new(&quad[..4], 3).unwrap();
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // Mean of x over the bottom hex face is zero.
        let mean: f64 = f.points.iter().zip(&f.weights).map(|(p, w)| p[0] * w).sum();
        assert!(mean.abs() < 1e-14);
    }
}
