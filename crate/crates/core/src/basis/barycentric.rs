//! Barycentric Lagrange interpolation on tensor-product nodal grids.

use super::element::ElementKind;
use super::OrthoBasis;
use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

/// Barycentric weights `w_j = 1 / Π_{k≠j} (x_j - x_k)`, scaled so that the
/// largest magnitude is one.
pub fn barycentric_weights<T: Scalar>(nodes: &[T]) -> Vec<T> {
    let mut w: Vec<T> = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .fold(T::one(), |acc, (_, &xk)| acc * (xj - xk));
            T::one() / prod
        })
        .collect();
    let scale = w.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if scale > T::zero() {
        for v in &mut w {
            *v /= scale;
        }
    }
    w
}

/// Lagrange cardinal functions `ℓ_j(x)` via the second barycentric form.
pub fn lagrange_values<T: Scalar>(nodes: &[T], weights: &[T], x: T, out: &mut [T]) {
    debug_assert_eq!(nodes.len(), out.len());
    if let Some(hit) = nodes.iter().position(|&xj| x == xj) {
        out.iter_mut().for_each(|o| *o = T::zero());
        out[hit] = T::one();
        return;
    }
    let mut denom = T::zero();
    for ((o, &xj), &wj) in out.iter_mut().zip(nodes).zip(weights) {
        *o = wj / (x - xj);
        denom += *o;
    }
    for o in out.iter_mut() {
        *o /= denom;
    }
}

/// Interpolates nodal values on a tensor grid at `x`. `nodal` is ordered
/// lexicographically with the first axis slowest.
pub fn eval_nodal_barycentric<T: Scalar>(axes: &[Vec<T>], weights: &[Vec<T>], nodal: &[T], x: &Point<T>) -> T {
    let d = axes.len();
    let cardinals: Vec<Vec<T>> = (0..d)
        .map(|k| {
            let mut l = vec![T::zero(); axes[k].len()];
            lagrange_values(&axes[k], &weights[k], x[k], &mut l);
            l
        })
        .collect();
    // Contract the last axis first.
    let mut data = nodal.to_vec();
    for k in (0..d).rev() {
        let n = axes[k].len();
        data = data
            .chunks_exact(n)
            .map(|chunk| chunk.iter().zip(&cardinals[k]).map(|(&a, &b)| a * b).sum())
            .collect();
    }
    data[0]
}

/// Point evaluator for fields stored as values at the quadrature points of a
/// tensor-product basis.
#[derive(Debug, Clone)]
pub struct NodalEvaluator<T> {
    axes: Vec<Vec<T>>,
    weights: Vec<Vec<T>>,
}

impl<T: Scalar> NodalEvaluator<T> {
    pub fn new(basis: &OrthoBasis<T>) -> Result<Self> {
        let kind = basis.kind();
        if kind.is_simplex() {
            return Err(Error::UnsupportedElement {
                kind,
                context: "barycentric evaluation",
            });
        }
        let axes = basis.quadrature().axes.clone();
        let weights = axes.iter().map(|a| barycentric_weights(a)).collect();
        Ok(Self { axes, weights })
    }

    pub fn eval(&self, nodal: &[T], x: &Point<T>) -> Result<T> {
        let expected: usize = self.axes.iter().map(Vec::len).product();
        if nodal.len() != expected {
            return Err(Error::CoefficientLength {
                expected,
                found: nodal.len(),
            });
        }
        let kind = match self.axes.len() {
            1 => ElementKind::Segment,
            2 => ElementKind::Quad,
            _ => ElementKind::Hex,
        };
        if !kind.contains(x, T::of(1e-12)) {
            return Err(Error::OutsideElement {
                kind,
                point: x.map(|c| c.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(eval_nodal_barycentric(&self.axes, &self.weights, nodal, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_weights() {
        let w = barycentric_weights(&[-1.0_f64, 1.0]);
        assert_eq!(w, vec![-1.0, 1.0]);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let nodes = [-1.0_f64, -0.2, 0.5, 1.0];
        let w = barycentric_weights(&nodes);
        let data: Vec<f64> = nodes.iter().map(|x| 3.0 * x - 1.0).collect();
        let got = eval_nodal_barycentric(&[nodes.to_vec()], &[w], &data, &[0.37, 0.0, 0.0]);
        assert!((got - (3.0 * 0.37 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn node_hit_returns_nodal_value() {
        let nodes = vec![-0.5_f64, 0.0, 0.5];
        let w = barycentric_weights(&nodes);
        let got = eval_nodal_barycentric(&[nodes], &[w], &[4.0, 5.0, 6.0], &[0.0, 0.0, 0.0]);
        assert_eq!(got, 5.0);
    }
}
