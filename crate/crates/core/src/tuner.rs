//! Grid search for the backtracking parameters `(c, γ)`.
//!
//! Every pair on a `k × k` grid inside `(0, 1)²` runs gradient descent on a
//! set of projected test functions. Pairs with the fewest descent
//! iterations are kept, and among those the ones with the smallest error.
//! Ties are all returned.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{ElementKind, OrthoBasis};
use crate::error::{Error, Result};
use crate::geometry::build_lattice;
use crate::minimize::{global_min, FnObjective, LineSearchParams};
use crate::scalar::{Point, Scalar};

/// Scalar test function on a reference element.
pub type TestFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;

/// Quadrature points per direction used to project the test functions.
pub const TUNING_QUADRATURE: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneRecord<T> {
    pub c: T,
    pub gamma: T,
    pub function: String,
    pub order: usize,
    pub niter: usize,
    /// `|found minimum - golden minimum|`.
    pub err: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult<T> {
    pub selected: Vec<(T, T)>,
    pub table: Vec<TuneRecord<T>>,
}

/// How per-function, per-order results are combined for one `(c, γ)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Sum,
    Max,
}

/// Reference value for the minimum of a test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoldenMode<T> {
    /// Known closed-form minimum.
    Analytic(T),
    /// Minimum of the order-`order` projection over a grid of `points` per
    /// direction.
    Numeric { order: usize, points: usize },
}

impl<T> GoldenMode<T> {
    /// Order 8 on 400 points per direction in 1D and 2D, 100 in 3D.
    pub fn numeric_default(kind: ElementKind) -> Self {
        let points = if kind.dim() == 3 { 100 } else { 400 };
        GoldenMode::Numeric { order: 8, points }
    }
}

/// A named function with its golden minimum.
#[derive(Clone)]
pub struct TuneFunction<T> {
    pub name: String,
    pub f: TestFn<T>,
    pub golden: T,
}

impl<T: Scalar> std::fmt::Debug for TuneFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TuneFunction")
            .field("name", &self.name)
            .field("golden", &self.golden)
            .finish()
    }
}

/// One descent problem of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneCase<T> {
    pub function: String,
    pub order: usize,
    pub golden: T,
}

/// `k` equispaced samples `i / (k + 1)`, `i = 1..=k`.
pub fn parameter_grid<T: Scalar>(k: usize) -> Vec<T> {
    (1..=k).map(|i| T::of_usize(i) / T::of_usize(k + 1)).collect()
}

/// Minimum of `f` on the reference element.
pub fn golden_minimum<T: Scalar>(f: impl Fn(&Point<T>) -> T, kind: ElementKind, mode: GoldenMode<T>) -> Result<T> {
    match mode {
        GoldenMode::Analytic(value) => Ok(value),
        GoldenMode::Numeric { order, points } => {
            if points < 2 {
                return Err(Error::InvalidParameter(
                    "golden minimum needs at least 2 points per direction".into(),
                ));
            }
            let basis = OrthoBasis::<T>::with_default_quadrature(kind, order)?;
            let v = basis.project(f)?;
            let d = kind.dim();
            let step = T::two() / T::of_usize(points - 1);
            let mut best = T::infinity();
            for flat in 0..points.pow(d as u32) {
                let mut x = [T::zero(); 3];
                let mut r = flat;
                for xk in x.iter_mut().take(d) {
                    *xk = -T::one() + step * T::of_usize(r % points);
                    r /= points;
                }
                if kind.contains(&x, T::of(1e-12)) {
                    best = best.min(basis.value_at(&v, &x));
                }
            }
            Ok(best)
        }
    }
}

/// Sweeps the `k × k` grid with a caller-supplied descent. `runner` gets
/// the case index, the case and `(c, γ)` and returns `(niter, found minimum)`.
pub fn tune_with<T, R>(cases: &[TuneCase<T>], k: usize, aggregation: Aggregation, runner: R) -> Result<TuneResult<T>>
where
    T: Scalar,
    R: Fn(usize, &TuneCase<T>, T, T) -> Result<(usize, T)> + Sync,
{
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid count must be at least 2, got {k}"
        )));
    }
    if cases.is_empty() {
        return Err(Error::InvalidParameter("no tuning cases".into()));
    }
    let grid = parameter_grid::<T>(k);
    let pairs: Vec<(T, T)> = grid
        .iter()
        .flat_map(|&gamma| grid.iter().map(move |&c| (c, gamma)))
        .collect();
    let rows: Vec<Vec<TuneRecord<T>>> = pairs
        .par_iter()
        .map(|&(c, gamma)| {
            cases
                .iter()
                .enumerate()
                .map(|(i, case)| {
                    let (niter, found) = runner(i, case, c, gamma)?;
                    Ok(TuneRecord {
                        c,
                        gamma,
                        function: case.function.clone(),
                        order: case.order,
                        niter,
                        err: (found - case.golden).abs(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let selected = select(&pairs, &rows, aggregation);
    Ok(TuneResult {
        selected,
        table: rows.into_iter().flatten().collect(),
    })
}

fn select<T: Scalar>(pairs: &[(T, T)], rows: &[Vec<TuneRecord<T>>], aggregation: Aggregation) -> Vec<(T, T)> {
    let scores: Vec<(usize, T)> = rows
        .iter()
        .map(|records| match aggregation {
            Aggregation::Sum => (
                records.iter().map(|r| r.niter).sum(),
                records.iter().map(|r| r.err).sum(),
            ),
            Aggregation::Max => (
                records.iter().map(|r| r.niter).max().unwrap_or(0),
                records.iter().map(|r| r.err).fold(T::zero(), T::max),
            ),
        })
        .collect();
    let least_niter = scores.iter().map(|s| s.0).min().expect("non-empty grid");
    let least_err = scores
        .iter()
        .filter(|s| s.0 == least_niter)
        .map(|s| s.1)
        .fold(T::infinity(), T::min);
    pairs
        .iter()
        .zip(&scores)
        .filter(|(_, s)| s.0 == least_niter && s.1 == least_err)
        .map(|(&p, _)| p)
        .collect()
}

/// Sweeps the grid with lattice-seeded descent on the projection of every
/// function at every order. Descent that does not converge counts
/// `max_gd_iters` iterations.
pub fn tune<T: Scalar>(
    functions: &[TuneFunction<T>],
    kind: ElementKind,
    orders: &[usize],
    k: usize,
    base: &LineSearchParams<T>,
    aggregation: Aggregation,
) -> Result<TuneResult<T>> {
    struct Prepared<T> {
        basis: OrthoBasis<T>,
        coeffs: Vec<T>,
        lattice: Vec<Point<T>>,
    }
    let mut cases = Vec::new();
    let mut prepared = Vec::new();
    for func in functions {
        for &order in orders {
            let q = TUNING_QUADRATURE.max(order + 2);
            let basis = OrthoBasis::new(kind, order, q)?;
            let coeffs = basis.project(|x| (func.f)(x))?;
            let lattice = build_lattice(&basis)?.points;
            cases.push(TuneCase {
                function: func.name.clone(),
                order,
                golden: func.golden,
            });
            prepared.push(Prepared { basis, coeffs, lattice });
        }
    }
    tune_with(&cases, k, aggregation, |index, _, c, gamma| {
        let p = &prepared[index];
        let params = LineSearchParams { c, gamma, ..*base };
        let objective = FnObjective {
            value: |x: &Point<T>| p.basis.value_at(&p.coeffs, x),
            value_and_gradient: |x: &Point<T>| p.basis.value_and_gradient_at(&p.coeffs, x),
        };
        let r = global_min(&objective, &p.lattice, &params, kind)?;
        Ok((r.gd_iters, r.value))
    })
}

/// Writes the full table with header `c,gamma,function,order,niter,err`.
pub fn write_tune_csv<T: Scalar, W: Write>(out: &mut W, table: &[TuneRecord<T>]) -> Result<()> {
    writeln!(out, "c,gamma,function,order,niter,err")?;
    for r in table {
        writeln!(
            out,
            "{},{},{},{},{},{:e}",
            r.c, r.gamma, r.function, r.order, r.niter, r.err
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(name: &str) -> TuneCase<f64> {
        TuneCase {
            function: name.into(),
            order: 2,
            golden: 0.0,
        }
    }

    #[test]
    fn grid_is_strictly_inside_unit_interval() {
        let g = parameter_grid::<f64>(9);
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[8] - 0.9).abs() < 1e-15);
        assert!(g.iter().any(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn small_grid_is_rejected() {
        let r = tune_with(&[case("a")], 1, Aggregation::Sum, |_, _, _, _| Ok((0, 0.0)));
        assert!(r.is_err());
    }

    #[test]
    fn selection_keeps_ties() {
        // niter depends on c only; err is zero everywhere.
        let r = tune_with(&[case("a")], 3, Aggregation::Sum, |_, _, c, _| {
            Ok(((c * 4.0).round() as usize, 0.0))
        })
        .unwrap();
        assert_eq!(r.table.len(), 9);
        assert_eq!(r.selected.len(), 3);
        assert!(r.selected.iter().all(|&(c, _)| (c - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sum_and_max_aggregation_can_disagree() {
        let cases = [case("a"), case("b")];
        // (c small) -> niter (0, 10); (c large) -> niter (6, 6).
        let runner = |_: usize, case: &TuneCase<f64>, c: f64, _g: f64| {
            let n = match (case.function.as_str(), c < 0.5) {
                ("a", true) => 0,
                ("b", true) => 10,
                _ => 6,
            };
            Ok((n, 0.0))
        };
        let sum = tune_with(&cases, 2, Aggregation::Sum, runner).unwrap();
        let max = tune_with(&cases, 2, Aggregation::Max, runner).unwrap();
        assert!(sum.selected.iter().all(|&(c, _)| c < 0.5));
        assert!(max.selected.iter().all(|&(c, _)| c > 0.5));
    }

    #[test]
    fn golden_minimum_modes() {
        assert_eq!(
            golden_minimum(|_: &Point<f64>| 5.0, ElementKind::Quad, GoldenMode::Analytic(5.0)).unwrap(),
            5.0
        );
        let m = golden_minimum(
            |_: &Point<f64>| 5.0,
            ElementKind::Quad,
            GoldenMode::Numeric { order: 3, points: 20 },
        )
        .unwrap();
        assert!((m - 5.0).abs() < 1e-12);
        let quad = |x: &Point<f64>| (x[0] + 0.6).powi(2) + (x[1] - 0.2).powi(2);
        let m = golden_minimum(quad, ElementKind::Quad, GoldenMode::Numeric { order: 2, points: 51 }).unwrap();
        assert!((m - 0.0).abs() < 1e-12, "{m}");
    }

    #[test]
    fn csv_has_fixed_header() {
        let rec = TuneRecord {
            c: 0.5,
            gamma: 0.25,
            function: "f0".into(),
            order: 3,
            niter: 7,
            err: 1e-9,
        };
        let mut buf = Vec::new();
        write_tune_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "c,gamma,function,order,niter,err\n0.5,0.25,f0,3,7,1e-9\n");
    }
}
