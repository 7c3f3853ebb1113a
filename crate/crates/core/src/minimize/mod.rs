//! Global minimization over reference elements.
//!
//! In 1D the minimum of a polynomial is found exactly from the real roots of
//! its derivative. In 2D and 3D a lattice scan picks a seed which is refined
//! by steepest descent with backtracking.
//!
//! The backtracking recurrence starts at `γ` and shrinks the step by `c`
//! (`γ_j = c γ_{j-1}`), while `c` is also the sufficient-decrease constant.

pub mod comrade;

pub use comrade::{legendre_roots, minimize_1d};

use crate::basis::ElementKind;
use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

/// Steps shorter than this end the backtracking search.
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams<T> {
    /// Shrink factor and sufficient-decrease constant.
    pub c: T,
    /// Initial step length.
    pub gamma: T,
    pub max_gd_iters: usize,
    pub grad_tolerance: T,
    /// Stop once an accepted step lowers the objective by less than this.
    pub decrease_tolerance: T,
    /// Step along the unit steepest-descent direction instead of the raw
    /// gradient, so progress does not stall where the gradient is tiny.
    pub normalized: bool,
}

impl<T: Scalar> LineSearchParams<T> {
    pub fn new(c: T, gamma: T) -> Result<Self> {
        let params = Self {
            c,
            gamma,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: T| v > T::zero() && v < T::one();
        if !open(self.c) || !open(self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "line search needs c and gamma strictly inside (0, 1), got c = {}, gamma = {}",
                self.c, self.gamma
            )));
        }
        if !(self.grad_tolerance >= T::zero()) || !(self.decrease_tolerance >= T::zero()) {
            return Err(Error::InvalidParameter(
                "line search tolerances must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for LineSearchParams<T> {
    fn default() -> Self {
        Self {
            c: T::of(0.7),
            gamma: T::of(0.7),
            max_gd_iters: 200,
            grad_tolerance: T::of(1e-10),
            decrease_tolerance: T::zero(),
            normalized: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinResult<T> {
    pub x_star: Point<T>,
    pub value: T,
    /// Accepted descent steps.
    pub gd_iters: usize,
    pub seed_point: Point<T>,
}

/// A differentiable function on a reference element.
pub trait Objective<T> {
    fn value(&self, x: &Point<T>) -> T;
    fn value_and_gradient(&self, x: &Point<T>) -> (T, Point<T>);
}

/// Objective assembled from a value closure and a value-and-gradient closure.
pub struct FnObjective<F, G> {
    pub value: F,
    pub value_and_gradient: G,
}

impl<T, F, G> Objective<T> for FnObjective<F, G>
where
    F: Fn(&Point<T>) -> T,
    G: Fn(&Point<T>) -> (T, Point<T>),
{
    fn value(&self, x: &Point<T>) -> T {
        (self.value)(x)
    }

    fn value_and_gradient(&self, x: &Point<T>) -> (T, Point<T>) {
        (self.value_and_gradient)(x)
    }
}

fn check_finite<T: Scalar>(value: T, grad: &Point<T>) -> Result<()> {
    if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("objective or gradient"))
    }
}

/// Steepest descent with backtracking from `seed`, keeping iterates inside
/// `kind` by Euclidean projection.
///
/// A trial step `x_t = clamp(x - γ_j ∇f)` is accepted when
/// `f(x_t) ≤ f(x) + c ∇f·(x_t - x)`, which is the Armijo-Goldstein test
/// `f(x + γ_j p) ≤ f(x) + γ_j c ∇f·p` whenever the projection is inactive.
pub fn gd_backtracking<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    seed: &Point<T>,
    params: &LineSearchParams<T>,
    kind: ElementKind,
) -> Result<MinResult<T>> {
    if !kind.contains(seed, T::of(1e-12)) {
        return Err(Error::OutsideElement {
            kind,
            point: seed.map(|c| c.to_f64().unwrap_or(f64::NAN)),
        });
    }
    let d = kind.dim();
    let mut x = kind.clamp(seed);
    let (mut f, mut g) = objective.value_and_gradient(&x);
    check_finite(f, &g)?;
    let min_step = T::of(MIN_STEP);
    let mut iters = 0;

    while iters < params.max_gd_iters {
        let gnorm = g[..d].iter().map(|&v| v * v).sum::<T>().sqrt();
        if gnorm <= params.grad_tolerance {
            break;
        }
        let scale = if params.normalized {
            let pnorm = projected_gradient_norm(kind, &x, &g, gnorm);
            if pnorm <= params.grad_tolerance {
                break;
            }
            T::one() / pnorm
        } else {
            T::one()
        };
        let mut step = params.gamma * scale;
        let mut accepted = None;
        let min_step = min_step * scale;
        while step >= min_step {
            let mut trial = x;
            for k in 0..d {
                trial[k] = x[k] - step * g[k];
            }
            let trial = kind.clamp(&trial);
            let mut slope = T::zero();
            let mut moved = false;
            for k in 0..d {
                let dx = trial[k] - x[k];
                moved |= dx != T::zero();
                slope += g[k] * dx;
            }
            if !moved {
                break;
            }
            let ft = objective.value(&trial);
            if !ft.is_finite() {
                return Err(Error::NonFinite("objective"));
            }
            if ft <= f + params.c * slope {
                accepted = Some(trial);
                break;
            }
            step *= params.c;
        }
        let Some(next) = accepted else { break };
        let (fn_, gn) = objective.value_and_gradient(&next);
        check_finite(fn_, &gn)?;
        let decrease = f - fn_;
        x = next;
        f = fn_;
        g = gn;
        iters += 1;
        if decrease <= params.decrease_tolerance && params.decrease_tolerance > T::zero() {
            break;
        }
    }
    Ok(MinResult {
        x_star: x,
        value: f,
        gd_iters: iters,
        seed_point: *seed,
    })
}

/// Length of the feasible part of `g` at `x`, probed with a short step so
/// that components blocked by an active face do not count.
fn projected_gradient_norm<T: Scalar>(kind: ElementKind, x: &Point<T>, g: &Point<T>, gnorm: T) -> T {
    let h = T::of(1e-6) / gnorm;
    let mut probe = *x;
    for k in 0..kind.dim() {
        probe[k] = x[k] - h * g[k];
    }
    let probe = kind.clamp(&probe);
    (0..kind.dim())
        .map(|k| (x[k] - probe[k]) * (x[k] - probe[k]))
        .sum::<T>()
        .sqrt()
        / h
}

/// Index of the smallest value, first on ties.
pub fn argmin<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Lattice scan followed by descent from the worst lattice point.
pub fn global_min<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    lattice: &[Point<T>],
    params: &LineSearchParams<T>,
    kind: ElementKind,
) -> Result<MinResult<T>> {
    let values: Vec<T> = lattice.iter().map(|x| objective.value(x)).collect();
    global_min_from_values(objective, lattice, &values, params, kind, 1)
}

/// [`global_min`] with precomputed lattice values and descent from the
/// `seeds` lowest lattice points. Returns the best of the lattice minimum and
/// all descent results.
pub fn global_min_from_values<T: Scalar, O: Objective<T> + ?Sized>(
    objective: &O,
    lattice: &[Point<T>],
    values: &[T],
    params: &LineSearchParams<T>,
    kind: ElementKind,
    seeds: usize,
) -> Result<MinResult<T>> {
    if lattice.is_empty() || lattice.len() != values.len() {
        return Err(Error::InvalidParameter(
            "lattice values must match a non-empty lattice".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective on lattice"));
    }
    let first = argmin(values).expect("non-empty lattice");
    let mut order = vec![first];
    if seeds > 1 {
        let mut rest: Vec<usize> = (0..values.len()).filter(|&i| i != first).collect();
        rest.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite").then(a.cmp(&b)));
        order.extend(rest.into_iter().take(seeds - 1));
    }
    let mut best = MinResult {
        x_star: lattice[first],
        value: values[first],
        gd_iters: 0,
        seed_point: lattice[first],
    };
    let mut total_iters = 0;
    for &i in &order {
        let r = gd_backtracking(objective, &lattice[i], params, kind)?;
        total_iters += r.gd_iters;
        if r.value < best.value {
            best = r;
        }
    }
    best.gd_iters = total_iters;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> FnObjective<impl Fn(&Point<f64>) -> f64, impl Fn(&Point<f64>) -> (f64, Point<f64>)> {
        FnObjective {
            value: |x: &Point<f64>| x[0] * x[0] + x[1] * x[1],
            value_and_gradient: |x: &Point<f64>| (x[0] * x[0] + x[1] * x[1], [2.0 * x[0], 2.0 * x[1], 0.0]),
        }
    }

    #[test]
    fn convex_quadratic_converges_to_origin() {
        let params = LineSearchParams::new(0.7, 0.7).unwrap();
        let r = gd_backtracking(&quadratic(), &[0.5, 0.5, 0.0], &params, ElementKind::Quad).unwrap();
        assert!(r.x_star[0].abs() < 1e-6 && r.x_star[1].abs() < 1e-6);
        assert!(r.gd_iters > 0);
    }

    #[test]
    fn shifted_paraboloid_reaches_exact_minimum() {
        let f = |x: &Point<f64>| (x[0] + 0.6).powi(2) + (x[1] - 0.2).powi(2);
        let obj = FnObjective {
            value: f,
            value_and_gradient: |x: &Point<f64>| (f(x), [2.0 * (x[0] + 0.6), 2.0 * (x[1] - 0.2), 0.0]),
        };
        let params = LineSearchParams::new(0.7, 0.7).unwrap();
        let r = gd_backtracking(&obj, &[0.9, -0.9, 0.0], &params, ElementKind::Quad).unwrap();
        assert!(r.value <= 1e-7);
    }

    #[test]
    fn iterates_stay_inside_simplex() {
        // Unconstrained minimum lies outside the triangle.
        let f = |x: &Point<f64>| (x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2);
        let obj = FnObjective {
            value: f,
            value_and_gradient: |x: &Point<f64>| (f(x), [2.0 * (x[0] - 2.0), 2.0 * (x[1] - 2.0), 0.0]),
        };
        let params = LineSearchParams::new(0.5, 0.9).unwrap();
        let r = gd_backtracking(&obj, &[-0.8, -0.8, 0.0], &params, ElementKind::Tri).unwrap();
        assert!(ElementKind::Tri.contains(&r.x_star, 1e-15));
        assert!(r.x_star[0].abs() < 1e-6 && r.x_star[1].abs() < 1e-6);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(LineSearchParams::new(0.0, 0.5).is_err());
        assert!(LineSearchParams::new(0.5, 1.0).is_err());
    }

    #[test]
    fn seed_outside_element_is_rejected() {
        let params = LineSearchParams::new(0.5, 0.5).unwrap();
        assert!(gd_backtracking(&quadratic(), &[1.5, 0.0, 0.0], &params, ElementKind::Quad).is_err());
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let obj = FnObjective {
            value: |_: &Point<f64>| f64::NAN,
            value_and_gradient: |_: &Point<f64>| (f64::NAN, [0.0; 3]),
        };
        let params = LineSearchParams::new(0.5, 0.5).unwrap();
        assert!(gd_backtracking(&obj, &[0.0; 3], &params, ElementKind::Quad).is_err());
    }

    #[test]
    fn global_min_returns_lattice_minimum_with_zero_gradient() {
        let lattice = vec![[0.5, 0.5, 0.0], [0.0, 0.0, 0.0], [-0.5, 0.2, 0.0]];
        let params = LineSearchParams::new(0.7, 0.7).unwrap();
        let r = global_min(&quadratic(), &lattice, &params, ElementKind::Quad).unwrap();
        assert_eq!(r.x_star, [0.0; 3]);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.gd_iters, 0);
    }

    #[test]
    fn normalized_descent_crosses_flat_regions() {
        let shallow = FnObjective {
            value: |x: &Point<f64>| 1e-8 * ((x[0] - 0.5).powi(2) + (x[1] + 0.3).powi(2)),
            value_and_gradient: |x: &Point<f64>| {
                let v = 1e-8 * ((x[0] - 0.5).powi(2) + (x[1] + 0.3).powi(2));
                (v, [2e-8 * (x[0] - 0.5), 2e-8 * (x[1] + 0.3), 0.0])
            },
        };
        let seed = [-0.9, 0.8, 0.0];
        let raw = LineSearchParams {
            grad_tolerance: 0.0,
            ..LineSearchParams::default()
        };
        let unit = LineSearchParams {
            normalized: true,
            ..raw
        };
        let slow = gd_backtracking(&shallow, &seed, &raw, ElementKind::Quad).unwrap();
        let fast = gd_backtracking(&shallow, &seed, &unit, ElementKind::Quad).unwrap();
        assert!((slow.x_star[0] - 0.5).abs() > 1.0);
        assert!((fast.x_star[0] - 0.5).abs() < 1e-6 && (fast.x_star[1] + 0.3).abs() < 1e-6);
    }

    #[test]
    fn normalized_descent_slides_along_an_active_face() {
        let tilted = FnObjective {
            value: |x: &Point<f64>| x[0] + 1e-3 * (x[1] - 0.4).powi(2),
            value_and_gradient: |x: &Point<f64>| (x[0] + 1e-3 * (x[1] - 0.4).powi(2), [1.0, 2e-3 * (x[1] - 0.4), 0.0]),
        };
        let params = LineSearchParams {
            normalized: true,
            grad_tolerance: 0.0,
            ..LineSearchParams::default()
        };
        let r = gd_backtracking(&tilted, &[-1.0, -0.9, 0.0], &params, ElementKind::Quad).unwrap();
        assert_eq!(r.x_star[0], -1.0);
        assert!((r.x_star[1] - 0.4).abs() < 1e-6, "{:?}", r.x_star);
    }

    #[test]
    fn argmin_prefers_first_on_ties() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), Some(1));
        assert_eq!(argmin::<f64>(&[]), None);
    }
}
