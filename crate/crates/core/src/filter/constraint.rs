use std::fmt::Debug;

use crate::scalar::{Point, Scalar};

/// A family of pointwise linear constraints `L_x(u) ≤ ℓ(x)`, one per point
/// `x` of the reference element.
///
/// `L_x` is described by its action on the basis, `L_x(ψ_j)`, expressed in
/// terms of the basis values and gradients at `x`.
pub trait ConstraintFamily<T: Scalar>: Send + Sync + Debug {
    /// Writes `L_x(ψ_j)` for every mode.
    fn functional(&self, x: &Point<T>, psi: &[T], out: &mut [T]);

    /// Writes `∇_x L_x(ψ_j)` for every mode.
    fn functional_gradient(&self, x: &Point<T>, psi: &[T], grad_psi: &[Point<T>], out: &mut [Point<T>]);

    fn bound(&self, x: &Point<T>) -> T;

    fn bound_gradient(&self, _x: &Point<T>) -> Point<T> {
        [T::zero(); 3]
    }

    /// `Some((σ, ℓ))` when `L_x(u) = σ u(x)` and `ℓ(x) ≡ ℓ`.
    fn pointwise(&self) -> Option<(T, T)> {
        None
    }
}

/// Pointwise bound on the field value: `u ≥ a` or `u ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Lower(T),
    Upper(T),
}

impl<T: Scalar> Bound<T> {
    /// `u ≥ 0`.
    pub fn positivity() -> Self {
        Bound::Lower(T::zero())
    }

    fn sign_and_level(&self) -> (T, T) {
        match *self {
            Bound::Lower(a) => (-T::one(), -a),
            Bound::Upper(b) => (T::one(), b),
        }
    }
}

impl<T: Scalar> ConstraintFamily<T> for Bound<T> {
    fn functional(&self, _x: &Point<T>, psi: &[T], out: &mut [T]) {
        let (sign, _) = self.sign_and_level();
        for (o, &p) in out.iter_mut().zip(psi) {
            *o = sign * p;
        }
    }

    fn functional_gradient(&self, _x: &Point<T>, _psi: &[T], grad_psi: &[Point<T>], out: &mut [Point<T>]) {
        let (sign, _) = self.sign_and_level();
        for (o, g) in out.iter_mut().zip(grad_psi) {
            *o = g.map(|c| sign * c);
        }
    }

    fn bound(&self, _x: &Point<T>) -> T {
        self.sign_and_level().1
    }

    fn pointwise(&self) -> Option<(T, T)> {
        Some(self.sign_and_level())
    }
}
