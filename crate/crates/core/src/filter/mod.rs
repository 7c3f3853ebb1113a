//! Structure-preserving filter.
//!
//! The admissible set for one element is the intersection of half-spaces
//! `{v : L_x(Σ v_j ψ_j) ≤ ℓ(x)}` over all points `x` and all constraint
//! families. With `λ(x) = 1 / ‖L_x(ψ)‖` the scaled residual
//!
//! ```text
//! s(x) = λ(x) (ℓ(x) - L_x(u))
//! ```
//!
//! is the signed Euclidean distance of the coefficient vector to the
//! half-space at `x`, negative when the constraint is violated. The filter
//! repeatedly locates the most negative `s` and projects the coefficients
//! onto that hyperplane, `v ← v + λ L_x(ψ) s(x)`.

mod constraint;

pub use constraint::{Bound, ConstraintFamily};

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::basis::jacobi::{gauss_legendre, jacobi_table_with_derivative};
use crate::basis::{ElementKind, OrthoBasis};
use crate::error::{Error, Result};
use crate::geometry::{build_lattice_with_boundary, Lattice};
use crate::minimize::{argmin, gd_backtracking, global_min_from_values, legendre_roots, LineSearchParams, Objective};
use crate::scalar::{dot, norm2, Point, Scalar};

/// Consecutive negligible updates that end the filter loop.
const STAGNATION_LIMIT: usize = 10;
const STAGNATION_STEP: f64 = 1e-14;
/// Recent hidden violations retried first by the certification search.
const MAX_HINTS: usize = 16;

/// How the filter locates the minimum of `s` on an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Minimizer {
    /// Minimum over the lattice points only.
    Lattice,
    /// Lattice scan refined by projected gradient descent.
    #[default]
    Descent,
    /// Exact minimum from the critical points of `s` (segments with
    /// pointwise bounds only).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig<T> {
    /// Admissible violation of `s`, in distance units.
    pub tolerance: T,
    pub max_iterations: usize,
    pub line_search: LineSearchParams<T>,
    pub minimizer: Minimizer,
    /// Descent seeds per family. The first is the worst lattice point; once
    /// it reports no violation, descent restarts from the next lowest lattice
    /// points, up to this count, until one finds a violation.
    pub seeds: usize,
}

impl<T: Scalar> Default for FilterConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-7),
            max_iterations: 5000,
            line_search: LineSearchParams::default(),
            minimizer: Minimizer::Descent,
            seeds: 1,
        }
    }
}

impl<T: Scalar> FilterConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidParameter("filter tolerance must be positive".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("at least one descent seed is required".into()));
        }
        self.line_search.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport<T> {
    /// Hyperplane projections performed.
    pub iterations: usize,
    pub converged: bool,
    /// Minimum of `s` over all families for the returned coefficients.
    pub final_min_s: T,
    /// Seconds spent in the filter.
    pub wall_time: f64,
    pub gd_iterations_total: usize,
}

/// Per-family values of `L_x(ψ_j)`, `ℓ(x)` and `λ(x)` on the lattice.
#[derive(Debug, Clone)]
struct FamilyTable<T> {
    functional: Vec<T>,
    bound: Vec<T>,
    lambda: Vec<T>,
}

/// Precomputed samples of the exact 1D minimizer: Gauss weights,
/// the basis with derivatives, and the Legendre modes of the critical-point
/// polynomial.
#[derive(Debug, Clone)]
struct LineTables<T> {
    weights: Vec<T>,
    psi: Vec<Vec<T>>,
    dpsi: Vec<Vec<T>>,
    modes: Vec<Vec<T>>,
}

/// Everything the filter needs for one basis and one set of constraint
/// families. Shareable across threads.
#[derive(Debug, Clone)]
pub struct FilterPlan<T: Scalar> {
    basis: Arc<OrthoBasis<T>>,
    families: Vec<Arc<dyn ConstraintFamily<T>>>,
    lattice: Lattice<T>,
    tables: Vec<FamilyTable<T>>,
    line: Option<LineTables<T>>,
}

impl<T: Scalar> FilterPlan<T> {
    /// Plan whose detection points are the lattice plus the boundary trace of
    /// the quadrature grid.
    pub fn new(basis: Arc<OrthoBasis<T>>, families: Vec<Arc<dyn ConstraintFamily<T>>>) -> Result<Self> {
        let lattice = build_lattice_with_boundary(&basis)?;
        Self::with_lattice(basis, families, lattice)
    }

    /// Plan with caller-supplied detection points.
    pub fn with_lattice(
        basis: Arc<OrthoBasis<T>>,
        families: Vec<Arc<dyn ConstraintFamily<T>>>,
        lattice: Lattice<T>,
    ) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one constraint family is required".into(),
            ));
        }
        if lattice.is_empty() {
            return Err(Error::InvalidParameter("empty detection lattice".into()));
        }
        let p = basis.size();
        let mut psi = vec![T::zero(); p];
        let mut ell = vec![T::zero(); p];
        let mut tables = Vec::with_capacity(families.len());
        for family in &families {
            let mut table = FamilyTable {
                functional: Vec::with_capacity(lattice.len() * p),
                bound: Vec::with_capacity(lattice.len()),
                lambda: Vec::with_capacity(lattice.len()),
            };
            for x in &lattice.points {
                basis.fill_values(x, &mut psi);
                family.functional(x, &psi, &mut ell);
                let norm = norm2(&ell);
                if !(norm > T::zero()) || !norm.is_finite() {
                    return Err(Error::NonFinite("constraint scaling λ on the lattice"));
                }
                table.functional.extend_from_slice(&ell);
                table.bound.push(family.bound(x));
                table.lambda.push(T::one() / norm);
            }
            tables.push(table);
        }
        let line = if basis.kind() == ElementKind::Segment && basis.order() > 0 {
            Some(line_tables(basis.order())?)
        } else {
            None
        };
        Ok(Self {
            basis,
            families,
            lattice,
            tables,
            line,
        })
    }

    /// Plan for `u ≥ 0`.
    pub fn positivity(basis: Arc<OrthoBasis<T>>) -> Result<Self> {
        Self::new(basis, vec![Arc::new(Bound::<T>::positivity())])
    }

    pub fn basis(&self) -> &OrthoBasis<T> {
        &self.basis
    }

    pub fn families(&self) -> &[Arc<dyn ConstraintFamily<T>>] {
        &self.families
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    /// `s` at every lattice point for `family`.
    pub fn lattice_distances(&self, v: &[T], family: usize) -> Vec<T> {
        let p = self.basis.size();
        let table = &self.tables[family];
        table
            .functional
            .chunks_exact(p)
            .zip(&table.bound)
            .zip(&table.lambda)
            .map(|((row, &b), &lam)| lam * (b - dot(row, v)))
            .collect()
    }

    /// Smallest `s` over all lattice points and families.
    pub fn lattice_min(&self, v: &[T]) -> T {
        (0..self.families.len())
            .flat_map(|f| self.lattice_distances(v, f))
            .fold(T::infinity(), T::min)
    }

    /// Smallest unscaled residual `ℓ(x) - L_x(u)` over all lattice points and
    /// families. For positivity this is the lattice minimum of `u`.
    pub fn lattice_residual_min(&self, v: &[T]) -> T {
        let p = self.basis.size();
        self.tables
            .iter()
            .flat_map(|table| {
                table
                    .functional
                    .chunks_exact(p)
                    .zip(&table.bound)
                    .map(|(row, &b)| b - dot(row, v))
            })
            .fold(T::infinity(), T::min)
    }

    /// Largest `‖L_x(ψ)‖` over the lattice and the element vertices.
    pub fn max_functional_norm(&self) -> T {
        let p = self.basis.size();
        let mut psi = vec![T::zero(); p];
        let mut ell = vec![T::zero(); p];
        let mut best = T::zero();
        for table in &self.tables {
            for &lam in &table.lambda {
                best = best.max(T::one() / lam);
            }
        }
        for x in self.basis.kind().vertices::<T>() {
            self.basis.fill_values(&x, &mut psi);
            for family in &self.families {
                family.functional(&x, &psi, &mut ell);
                best = best.max(norm2(&ell));
            }
        }
        best
    }

    /// Distance tolerance guaranteeing `L_x(u) - ℓ(x) ≤ value_tolerance`
    /// wherever `s ≥ -tolerance`.
    pub fn distance_tolerance_for_value(&self, value_tolerance: T) -> T {
        value_tolerance / self.max_functional_norm()
    }

    /// `(s, L_x(ψ), λ)` at an arbitrary point.
    fn distance_parts(&self, v: &[T], family: usize, x: &Point<T>) -> (T, Vec<T>, T) {
        let p = self.basis.size();
        let mut psi = vec![T::zero(); p];
        let mut ell = vec![T::zero(); p];
        self.basis.fill_values(x, &mut psi);
        let fam = &self.families[family];
        fam.functional(x, &psi, &mut ell);
        let lam = T::one() / norm2(&ell);
        let s = lam * (fam.bound(x) - dot(&ell, v));
        (s, ell, lam)
    }

    /// `s(x)` for `family`.
    pub fn signed_distance(&self, v: &[T], family: usize, x: &Point<T>) -> Result<T> {
        self.check(v, family, x)?;
        Ok(self.distance_parts(v, family, x).0)
    }

    fn check(&self, v: &[T], family: usize, x: &Point<T>) -> Result<()> {
        if v.len() != self.basis.size() {
            return Err(Error::CoefficientLength {
                expected: self.basis.size(),
                found: v.len(),
            });
        }
        if family >= self.families.len() {
            return Err(Error::InvalidParameter(format!("no constraint family {family}")));
        }
        let kind = self.basis.kind();
        if !kind.contains(x, T::of(1e-12)) {
            return Err(Error::OutsideElement {
                kind,
                point: x.map(|c| c.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(())
    }

    /// Projects `v` onto the hyperplane `s(x) = 0` when `s(x) < 0`. Returns
    /// whether a projection happened; feasible points leave `v` untouched.
    pub fn project_onto_hyperplane(&self, v: &mut [T], family: usize, x: &Point<T>) -> Result<bool> {
        self.check(v, family, x)?;
        let (s, ell, lam) = self.distance_parts(v, family, x);
        if !(s < T::zero()) {
            return Ok(false);
        }
        let scale = lam * s;
        for (vj, &lj) in v.iter_mut().zip(&ell) {
            *vj += scale * lj;
        }
        Ok(true)
    }

    /// Minimum of `s` for one family: `(x*, s*, gd_iters)`.
    fn family_min(&self, v: &[T], family: usize, config: &FilterConfig<T>) -> Result<(Point<T>, T, usize)> {
        let values = self.lattice_distances(v, family);
        let kind = self.basis.kind();
        match config.minimizer {
            Minimizer::Lattice => {
                let i = argmin(&values).expect("non-empty lattice");
                Ok((self.lattice.points[i], values[i], 0))
            }
            Minimizer::Exact => {
                let (x, s) = self.exact_line_min(v, family)?;
                let i = argmin(&values).expect("non-empty lattice");
                if values[i] < s {
                    Ok((self.lattice.points[i], values[i], 0))
                } else {
                    Ok((x, s, 0))
                }
            }
            Minimizer::Descent => {
                let objective = DistanceObjective { plan: self, family, v };
                let r =
                    global_min_from_values(&objective, &self.lattice.points, &values, &config.line_search, kind, 1)?;
                Ok((r.x_star, r.value, r.gd_iters))
            }
        }
    }

    /// Exact minimum of `s = g / √K` on the segment, where `g = ℓ - σu` and
    /// `K = Σ ψ_j²`. Critical points are the roots of `2 g' K - g K'`.
    fn exact_line_min(&self, v: &[T], family: usize) -> Result<(Point<T>, T)> {
        let kind = self.basis.kind();
        let Some((sign, level)) = self.families[family].pointwise() else {
            return Err(Error::UnsupportedElement {
                kind,
                context: "exact minimization of non-pointwise constraints",
            });
        };
        if kind != ElementKind::Segment {
            return Err(Error::UnsupportedElement {
                kind,
                context: "exact minimization",
            });
        }
        let one = T::one();
        let mut candidates = vec![-one, one];
        if let Some(line) = &self.line {
            let q: Vec<T> = line
                .psi
                .iter()
                .zip(&line.dpsi)
                .map(|(psi, dpsi)| {
                    let u = dot(psi, v);
                    let du = dot(dpsi, v);
                    let k = dot(psi, psi);
                    let dk = T::two() * dot(psi, dpsi);
                    let g = level - sign * u;
                    let dg = -sign * du;
                    T::two() * dg * k - g * dk
                })
                .collect();
            let series: Vec<T> = line
                .modes
                .iter()
                .map(|mode| {
                    q.iter()
                        .zip(mode)
                        .zip(&line.weights)
                        .map(|((&qi, &m), &w)| qi * m * w)
                        .sum()
                })
                .collect();
            candidates.extend(legendre_roots(&series, -one, one)?);
        }
        let mut best = ([-one, T::zero(), T::zero()], T::infinity());
        for x in candidates {
            let point = [x, T::zero(), T::zero()];
            let s = self.distance_parts(v, family, &point).0;
            if s < best.1 {
                best = (point, s);
            }
        }
        Ok(best)
    }

    /// Global minimum of `s` over all families: `(family, x*, s*, gd_iters)`.
    /// Ties go to the lowest family index.
    fn find_min(
        &self,
        v: &[T],
        config: &FilterConfig<T>,
        hints: &mut Vec<(usize, Point<T>)>,
    ) -> Result<(usize, Point<T>, T, usize)> {
        let mut best: Option<(usize, Point<T>, T)> = None;
        let mut gd = 0;
        for family in 0..self.families.len() {
            let (x, s, iters) = self.family_min(v, family, config)?;
            gd += iters;
            if best.as_ref().is_none_or(|b| s < b.2) {
                best = Some((family, x, s));
            }
        }
        let (f, x, s) = best.expect("at least one family");
        if s >= -config.tolerance && config.seeds > 1 && config.minimizer == Minimizer::Descent {
            if let Some((f2, x2, s2, extra)) = self.search_hidden_violation(v, config, hints)? {
                if hints.len() == MAX_HINTS {
                    hints.remove(0);
                }
                hints.push((f2, x2));
                return Ok((f2, x2, s2, gd + extra));
            }
        }
        Ok((f, x, s, gd))
    }

    /// Descent until one run reaches `s < -tolerance`: first from the most
    /// recent hidden violations, then from the next lowest lattice points,
    /// family by family.
    fn search_hidden_violation(
        &self,
        v: &[T],
        config: &FilterConfig<T>,
        hints: &[(usize, Point<T>)],
    ) -> Result<Option<(usize, Point<T>, T, usize)>> {
        let kind = self.basis.kind();
        let params = LineSearchParams {
            normalized: true,
            ..config.line_search
        };
        let mut gd = 0;
        for &(family, x) in hints.iter().rev() {
            let objective = DistanceObjective { plan: self, family, v };
            let r = gd_backtracking(&objective, &x, &params, kind)?;
            gd += r.gd_iters;
            if r.value < -config.tolerance {
                return Ok(Some((family, r.x_star, r.value, gd)));
            }
        }
        for family in 0..self.families.len() {
            let values = self.lattice_distances(v, family);
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite").then(a.cmp(&b)));
            let objective = DistanceObjective { plan: self, family, v };
            for &i in order.iter().skip(1).take(config.seeds - 1) {
                let r = gd_backtracking(&objective, &self.lattice.points[i], &params, kind)?;
                gd += r.gd_iters;
                if r.value < -config.tolerance {
                    return Ok(Some((family, r.x_star, r.value, gd)));
                }
            }
        }
        Ok(None)
    }
}

fn line_tables<T: Scalar>(order: usize) -> Result<LineTables<T>> {
    let m = 3 * order;
    let (nodes, weights) = gauss_legendre::<T>(m)?;
    let mut psi = Vec::with_capacity(m);
    let mut dpsi = Vec::with_capacity(m);
    let mut modes = vec![vec![T::zero(); m]; m];
    let mut vals = vec![T::zero(); m];
    let mut ders = vec![T::zero(); m];
    for (i, &x) in nodes.iter().enumerate() {
        jacobi_table_with_derivative(0, 0, x, &mut vals, &mut ders);
        psi.push(vals[..=order].to_vec());
        dpsi.push(ders[..=order].to_vec());
        for k in 0..m {
            modes[k][i] = vals[k];
        }
    }
    Ok(LineTables {
        weights,
        psi,
        dpsi,
        modes,
    })
}

/// `s(x)` for a fixed coefficient vector and family, as a descent objective.
struct DistanceObjective<'a, T: Scalar> {
    plan: &'a FilterPlan<T>,
    family: usize,
    v: &'a [T],
}

impl<T: Scalar> Objective<T> for DistanceObjective<'_, T> {
    fn value(&self, x: &Point<T>) -> T {
        self.plan.distance_parts(self.v, self.family, x).0
    }

    fn value_and_gradient(&self, x: &Point<T>) -> (T, Point<T>) {
        let basis = &self.plan.basis;
        let p = basis.size();
        let mut psi = vec![T::zero(); p];
        let mut grad_psi = vec![[T::zero(); 3]; p];
        basis.fill_values_and_gradients(x, &mut psi, &mut grad_psi);
        let fam = &self.plan.families[self.family];
        let mut ell = vec![T::zero(); p];
        let mut grad_ell = vec![[T::zero(); 3]; p];
        fam.functional(x, &psi, &mut ell);
        fam.functional_gradient(x, &psi, &grad_psi, &mut grad_ell);
        let lam = T::one() / norm2(&ell);
        let residual = fam.bound(x) - dot(&ell, self.v);
        let db = fam.bound_gradient(x);
        let mut grad = [T::zero(); 3];
        for k in 0..basis.dim() {
            let mut ldl = T::zero();
            let mut dlv = T::zero();
            for j in 0..p {
                ldl += ell[j] * grad_ell[j][k];
                dlv += grad_ell[j][k] * self.v[j];
            }
            grad[k] = -lam * lam * lam * ldl * residual + lam * (db[k] - dlv);
        }
        (lam * residual, grad)
    }
}

/// `s(x)` for `family` of `plan`.
pub fn signed_distance<T: Scalar>(plan: &FilterPlan<T>, v: &[T], family: usize, x: &Point<T>) -> Result<T> {
    plan.signed_distance(v, family, x)
}

/// Returns the projection of `v` onto the hyperplane at `x` and whether it
/// moved.
pub fn project_onto_hyperplane<T: Scalar>(
    plan: &FilterPlan<T>,
    v: &[T],
    family: usize,
    x: &Point<T>,
) -> Result<(Vec<T>, bool)> {
    let mut out = v.to_vec();
    let moved = plan.project_onto_hyperplane(&mut out, family, x)?;
    Ok((out, moved))
}

/// Greedy projection onto the most violated hyperplane until the minimum of
/// `s` is within tolerance.
///
/// If the iteration limit is reached, or the updates stagnate, the iterate
/// with the largest minimum `s` is returned with `converged = false`.
pub fn filter_element<T: Scalar>(
    v: &[T],
    plan: &FilterPlan<T>,
    config: &FilterConfig<T>,
) -> Result<(Vec<T>, FilterReport<T>)> {
    let start = Instant::now();
    config.validate()?;
    if v.len() != plan.basis.size() {
        return Err(Error::CoefficientLength {
            expected: plan.basis.size(),
            found: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("filter input coefficients"));
    }
    let mut current = v.to_vec();
    let mut best = (current.clone(), T::neg_infinity());
    let mut iterations = 0;
    let mut gd_total = 0;
    let mut stagnant = 0;
    let mut converged = false;
    let mut last_min;
    let mut hints = Vec::new();
    loop {
        let (family, x, s, gd) = plan.find_min(&current, config, &mut hints)?;
        gd_total += gd;
        last_min = s;
        if s > best.1 {
            best = (current.clone(), s);
        }
        if s >= -config.tolerance {
            converged = true;
            break;
        }
        if iterations >= config.max_iterations || stagnant >= STAGNATION_LIMIT {
            break;
        }
        let before = current.clone();
        plan.project_onto_hyperplane(&mut current, family, &x)?;
        iterations += 1;
        let step: T = before
            .iter()
            .zip(&current)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt();
        if step < T::of(STAGNATION_STEP) {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
    }
    let (out, final_min_s) = if converged { (current, last_min) } else { best };
    Ok((
        out,
        FilterReport {
            iterations,
            converged,
            final_min_s,
            wall_time: start.elapsed().as_secs_f64(),
            gd_iterations_total: gd_total,
        },
    ))
}

/// Indices of elements with a lattice point where `s < -tolerance`.
/// `plans[e]` is the plan for element `e`.
pub fn flag_elements<T: Scalar>(coeffs: &[Vec<T>], plans: &[&FilterPlan<T>], tolerance: T) -> Vec<usize> {
    coeffs
        .par_iter()
        .zip(plans.par_iter())
        .enumerate()
        .filter(|(_, (v, plan))| plan.lattice_min(v) < -tolerance)
        .map(|(e, _)| e)
        .collect()
}
