//! Discontinuous Galerkin solver for linear advection `u_t + a·∇u = 0`
//! with upwind fluxes, classical RK4 and an optional per-step filter.
//!
//! After every completed step the solver flags elements whose lattice shows
//! a violation and filters only those.

mod operator;

pub use operator::DgOperator;

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::basis::ElementKind;
use crate::error::{Error, Result};
use crate::filter::{filter_element, Bound, ConstraintFamily, FilterConfig, FilterPlan};
use crate::geometry::Mesh;
use crate::scalar::{Point, Scalar};

use operator::SampleTables;

/// Spatially varying velocity field.
pub type VelocityFn<T> = Arc<dyn Fn(&Point<T>) -> Point<T> + Send + Sync>;

/// Time-independent advection velocity.
#[derive(Clone)]
pub enum Velocity<T> {
    Constant(Point<T>),
    Field(VelocityFn<T>),
}

impl<T: Scalar> Velocity<T> {
    pub fn at(&self, x: &Point<T>) -> Point<T> {
        match self {
            Velocity::Constant(a) => *a,
            Velocity::Field(f) => f(x),
        }
    }
}

impl<T: Scalar> std::fmt::Debug for Velocity<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Velocity::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            Velocity::Field(_) => f.write_str("Field(..)"),
        }
    }
}

/// Solid-body rotation `ω (-(y - c_y), x - c_x)` in the `xy` plane. One
/// revolution takes `2π / ω`.
pub fn rotation_velocity<T: Scalar>(center: [T; 2], angular_speed: T) -> Velocity<T> {
    Velocity::Field(Arc::new(move |x: &Point<T>| {
        [
            -angular_speed * (x[1] - center[1]),
            angular_speed * (x[0] - center[0]),
            T::zero(),
        ]
    }))
}

/// Modal coefficients of every element at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGState<T> {
    pub coeffs: Vec<Vec<T>>,
    pub time: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Flux {
    #[default]
    Upwind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub dt: T,
    pub n_steps: usize,
    pub order: usize,
    pub flux: Flux,
    pub filter_enabled: bool,
    /// Filter settings; `tolerance` is replaced per element type by the
    /// distance equivalent of `value_tolerance`.
    pub filter_config: FilterConfig<T>,
    /// Admissible constraint violation in field units.
    pub value_tolerance: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(dt: T, n_steps: usize, order: usize) -> Self {
        Self {
            dt,
            n_steps,
            order,
            flux: Flux::Upwind,
            filter_enabled: true,
            filter_config: FilterConfig::default(),
            value_tolerance: T::of(1e-7),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.value_tolerance > T::zero()) {
            return Err(Error::InvalidParameter("value tolerance must be positive".into()));
        }
        self.filter_config.validate()
    }
}

/// One row of the run diagnostics. Step 0 describes the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics<T> {
    pub step: usize,
    pub time: T,
    /// `None` when no exact solution was supplied.
    pub l2_error: Option<T>,
    pub n_flagged: usize,
    pub filter_iters: usize,
    pub gd_iters: usize,
    /// Seconds in the RK4 step.
    pub t_solver: f64,
    /// Seconds in flagging and filtering.
    pub t_filter: f64,
    /// Smallest constraint residual over all lattice points after the step.
    pub lattice_min: T,
}

/// Exact solution `u(x, t)`.
pub type ExactFn<'a, T> = &'a (dyn Fn(&Point<T>, T) -> T + Sync);

/// Operator, filter plans and evaluation tables for one mesh and order.
pub struct DgSolver<T: Scalar> {
    op: DgOperator<T>,
    plans: HashMap<ElementKind, Arc<FilterPlan<T>>>,
    velocity: Velocity<T>,
}

impl<T: Scalar> DgSolver<T> {
    /// Solver enforcing `u ≥ 0`.
    pub fn new(mesh: Arc<Mesh<T>>, order: usize, velocity: Velocity<T>) -> Result<Self> {
        Self::with_constraints(mesh, order, velocity, vec![Arc::new(Bound::positivity())])
    }

    pub fn with_constraints(
        mesh: Arc<Mesh<T>>,
        order: usize,
        velocity: Velocity<T>,
        families: Vec<Arc<dyn ConstraintFamily<T>>>,
    ) -> Result<Self> {
        let op = DgOperator::new(mesh, order, &velocity)?;
        let mut plans = HashMap::new();
        for el in &op.mesh().elements {
            if let std::collections::hash_map::Entry::Vacant(slot) = plans.entry(el.kind) {
                slot.insert(Arc::new(FilterPlan::new(op.basis(el.kind).clone(), families.clone())?));
            }
        }
        Ok(Self { op, plans, velocity })
    }

    pub fn operator(&self) -> &DgOperator<T> {
        &self.op
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.op.mesh()
    }

    pub fn velocity(&self) -> &Velocity<T> {
        &self.velocity
    }

    pub fn plan(&self, kind: ElementKind) -> &Arc<FilterPlan<T>> {
        &self.plans[&kind]
    }

    /// Projects `f` onto every element.
    pub fn project(&self, f: impl Fn(&Point<T>) -> T + Sync) -> Result<DGState<T>> {
        let mesh = self.mesh();
        let coeffs = (0..mesh.len())
            .into_par_iter()
            .map(|e| {
                let map = &mesh.elements[e].map;
                self.op.element_basis(e).project(|xi| f(&map.to_physical(xi)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DGState {
            coeffs,
            time: T::zero(),
        })
    }

    pub fn rhs(&self, state: &DGState<T>) -> Result<Vec<Vec<T>>> {
        self.op.rhs(&state.coeffs)
    }

    /// Classical four-stage Runge-Kutta step.
    pub fn step_rk4(&self, state: &DGState<T>, dt: T) -> Result<DGState<T>> {
        let v = &state.coeffs;
        let axpy = |k: &[Vec<T>], h: T| -> Vec<Vec<T>> {
            v.iter()
                .zip(k)
                .map(|(ve, ke)| ve.iter().zip(ke).map(|(&a, &b)| a + h * b).collect())
                .collect()
        };
        let half = dt * T::half();
        let k1 = self.op.rhs(v)?;
        let k2 = self.op.rhs(&axpy(&k1, half))?;
        let k3 = self.op.rhs(&axpy(&k2, half))?;
        let k4 = self.op.rhs(&axpy(&k3, dt))?;
        let sixth = dt / T::of(6.0);
        let coeffs = v
            .iter()
            .enumerate()
            .map(|(e, ve)| {
                (0..ve.len())
                    .map(|i| ve[i] + sixth * (k1[e][i] + T::two() * (k2[e][i] + k3[e][i]) + k4[e][i]))
                    .collect()
            })
            .collect();
        Ok(DGState {
            coeffs,
            time: state.time + dt,
        })
    }

    /// Per-kind filter configs with the distance tolerance matching
    /// `value_tolerance`.
    fn filter_configs(&self, config: &SolverConfig<T>) -> HashMap<ElementKind, FilterConfig<T>> {
        self.plans
            .iter()
            .map(|(&kind, plan)| {
                let cfg = FilterConfig {
                    tolerance: plan.distance_tolerance_for_value(config.value_tolerance),
                    ..config.filter_config.clone()
                };
                (kind, cfg)
            })
            .collect()
    }

    /// Flags and filters violating elements in place:
    /// `(n_flagged, filter_iters, gd_iters)`.
    fn filter_state(
        &self,
        state: &mut DGState<T>,
        configs: &HashMap<ElementKind, FilterConfig<T>>,
    ) -> Result<(usize, usize, usize)> {
        let mesh = self.mesh();
        let results = state
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(e, v)| {
                let kind = mesh.elements[e].kind;
                let plan = &self.plans[&kind];
                let cfg = &configs[&kind];
                if plan.lattice_min(v) >= -cfg.tolerance {
                    return Ok(None);
                }
                let (out, report) = filter_element(v, plan, cfg)?;
                if !report.converged {
                    log::warn!(
                        "filter did not converge on element {e} after {} iterations (min s = {:e})",
                        report.iterations,
                        report.final_min_s
                    );
                }
                Ok(Some((out, report.iterations, report.gd_iterations_total)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut totals = (0, 0, 0);
        for (e, r) in results.into_iter().enumerate() {
            if let Some((out, iters, gd)) = r {
                state.coeffs[e] = out;
                totals.0 += 1;
                totals.1 += iters;
                totals.2 += gd;
            }
        }
        Ok(totals)
    }

    /// Smallest constraint residual over every element's lattice.
    pub fn lattice_min(&self, state: &DGState<T>) -> T {
        let mesh = self.mesh();
        state
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(e, v)| self.plans[&mesh.elements[e].kind].lattice_residual_min(v))
            .reduce(T::infinity, T::min)
    }

    /// Warns when `dt > h_min / (|a| (2N + 1))`.
    pub fn check_cfl(&self, dt: T) -> bool {
        let limit = self.mesh().h_min() / (self.op.max_speed() * T::of_usize(2 * self.op.order() + 1));
        let ok = dt <= limit;
        if !ok {
            log::warn!("time step {dt} exceeds the CFL estimate {limit}");
        }
        ok
    }

    /// Runs `config.n_steps` steps from `initial`. The initial state is
    /// filtered first if it violates the constraints.
    pub fn run(
        &self,
        config: &SolverConfig<T>,
        initial: DGState<T>,
        exact: Option<ExactFn<'_, T>>,
    ) -> Result<(DGState<T>, Vec<StepDiagnostics<T>>)> {
        self.run_with(config, initial, exact, |_, _| Ok(()))
    }

    /// [`DgSolver::run`] calling `observe(step, state)` after every
    /// completed (and filtered) step, including step 0.
    pub fn run_with(
        &self,
        config: &SolverConfig<T>,
        initial: DGState<T>,
        exact: Option<ExactFn<'_, T>>,
        mut observe: impl FnMut(usize, &DGState<T>) -> Result<()>,
    ) -> Result<(DGState<T>, Vec<StepDiagnostics<T>>)> {
        config.validate()?;
        self.check_cfl(config.dt);
        let configs = self.filter_configs(config);
        let tables = match exact {
            Some(_) => Some(SampleTables::new(&self.op, L2_POINTS)?),
            None => None,
        };
        let mut diagnostics = Vec::with_capacity(config.n_steps + 1);
        let mut state = initial;
        let mut record =
            |step: usize, state: &DGState<T>, filt: (usize, usize, usize), t_solver: f64, t_filter: f64| {
                let l2_error = match (exact, &tables) {
                    (Some(f), Some(t)) => Some(self.l2_error_with(state, f, t)),
                    _ => None,
                };
                diagnostics.push(StepDiagnostics {
                    step,
                    time: state.time,
                    l2_error,
                    n_flagged: filt.0,
                    filter_iters: filt.1,
                    gd_iters: filt.2,
                    t_solver,
                    t_filter,
                    lattice_min: self.lattice_min(state),
                });
            };

        let start = Instant::now();
        let filt = if config.filter_enabled {
            self.filter_state(&mut state, &configs)?
        } else {
            (0, 0, 0)
        };
        record(0, &state, filt, 0.0, start.elapsed().as_secs_f64());
        observe(0, &state)?;

        for step in 1..=config.n_steps {
            let start = Instant::now();
            state = self.step_rk4(&state, config.dt)?;
            if state.coeffs.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteState { step });
            }
            let t_solver = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let filt = if config.filter_enabled {
                self.filter_state(&mut state, &configs)?
            } else {
                (0, 0, 0)
            };
            let t_filter = start.elapsed().as_secs_f64();
            record(step, &state, filt, t_solver, t_filter);
            observe(step, &state)?;
        }
        Ok((state, diagnostics))
    }

    /// Global L2 difference to `exact(·, state.time)` on a Gauss grid of
    /// `points` nodes per direction in every element.
    pub fn l2_error(&self, state: &DGState<T>, exact: ExactFn<'_, T>, points: usize) -> Result<T> {
        let tables = SampleTables::new(&self.op, points)?;
        Ok(self.l2_error_with(state, exact, &tables))
    }

    fn l2_error_with(&self, state: &DGState<T>, exact: ExactFn<'_, T>, tables: &SampleTables<T>) -> T {
        let mesh = self.mesh();
        let sum: T = (0..mesh.len())
            .into_par_iter()
            .map(|e| {
                let el = &mesh.elements[e];
                let (quad, table) = &tables.kinds[&el.kind];
                let v = &state.coeffs[e];
                let mut acc = T::zero();
                for ((xi, &w), row) in quad.points.iter().zip(&quad.weights).zip(table) {
                    let u: T = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
                    let diff = u - exact(&el.map.to_physical(xi), state.time);
                    acc += w * diff * diff;
                }
                acc * el.map.det()
            })
            .sum();
        sum.sqrt()
    }

    /// Field value at physical point `x`, from the first element containing
    /// it, or `None` outside the mesh.
    pub fn sample(&self, state: &DGState<T>, x: &Point<T>) -> Option<T> {
        let tol = T::of(1e-10);
        self.mesh().elements.iter().enumerate().find_map(|(e, el)| {
            let xi = el.map.to_reference(x);
            el.kind
                .contains(&xi, tol)
                .then(|| self.op.element_basis(e).value_at(&state.coeffs[e], &el.kind.clamp(&xi)))
        })
    }

    /// `n ≥ 2` samples on the segment from `a` to `b`: `(x, u(x))`.
    pub fn sample_line(&self, state: &DGState<T>, a: &Point<T>, b: &Point<T>, n: usize) -> Vec<(Point<T>, T)> {
        let denom = T::of_usize(n.max(2) - 1);
        (0..n)
            .filter_map(|i| {
                let t = T::of_usize(i) / denom;
                let x = [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * t);
                self.sample(state, &x).map(|u| (x, u))
            })
            .collect()
    }

    /// Field values at each element's vertices, for VTK export.
    pub fn vertex_values(&self, state: &DGState<T>) -> Vec<Vec<T>> {
        self.mesh()
            .elements
            .iter()
            .enumerate()
            .map(|(e, el)| {
                el.kind
                    .vertices::<T>()
                    .iter()
                    .map(|xi| self.op.element_basis(e).value_at(&state.coeffs[e], xi))
                    .collect()
            })
            .collect()
    }
}

/// Gauss points per direction for the L2 error in [`DgSolver::run`].
pub const L2_POINTS: usize = 10;

/// `u0(x - a t)` wrapped into the periodic box `[lo, hi]`.
pub fn periodic_translate<T: Scalar>(
    u0: impl Fn(&Point<T>) -> T + Sync,
    a: Point<T>,
    lo: Point<T>,
    hi: Point<T>,
    dim: usize,
) -> impl Fn(&Point<T>, T) -> T + Sync {
    move |x: &Point<T>, t: T| {
        let mut y = *x;
        for k in 0..dim {
            let len = hi[k] - lo[k];
            let shifted = x[k] - a[k] * t - lo[k];
            y[k] = lo[k] + (shifted - len * (shifted / len).floor());
        }
        u0(&y)
    }
}

/// Writes diagnostics with header
/// `step,time,l2_error,n_flagged,filter_iters,gd_iters,t_solver,t_filter,lattice_min`.
/// A missing L2 error is written as an empty field.
pub fn write_diagnostics_csv<T: Scalar, W: Write>(out: &mut W, rows: &[StepDiagnostics<T>]) -> Result<()> {
    writeln!(
        out,
        "step,time,l2_error,n_flagged,filter_iters,gd_iters,t_solver,t_filter,lattice_min"
    )?;
    for r in rows {
        let l2 = r.l2_error.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{:e}",
            r.step, r.time, l2, r.n_flagged, r.filter_iters, r.gd_iters, r.t_solver, r.t_filter, r.lattice_min
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
