//! Experiment drivers. Each writes CSV tables, VTK snapshots and a manifest
//! into the configured output directory and returns its results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use spfilter::basis::{ElementKind, ElementQuadrature, OrthoBasis};
use spfilter::dgsolver::{
    periodic_translate, rotation_velocity, write_diagnostics_csv, DGState, DgSolver, SolverConfig, StepDiagnostics,
    Velocity,
};
use spfilter::filter::{filter_element, FilterConfig, FilterPlan, FilterReport};
use spfilter::geometry::vtk::{write_vtk, VertexField};
use spfilter::geometry::{make_structured_mesh, Mesh, MeshLayout};
use spfilter::minimize::LineSearchParams;
use spfilter::tuner::{tune, write_tune_csv, TuneResult};
use spfilter::Point;

use crate::config::{Experiment, ExperimentConfig, SolidKind};
use crate::experiments::{self, Cell};
use crate::CliError;

pub fn line_search(cfg: &ExperimentConfig) -> Result<LineSearchParams<f64>, CliError> {
    let params = LineSearchParams {
        max_gd_iters: cfg.max_gd_iters,
        ..LineSearchParams::new(cfg.c, cfg.gamma)?
    };
    Ok(params)
}

/// Filter settings from the configuration. The distance tolerance is set
/// per element type by the caller.
pub fn filter_config(cfg: &ExperimentConfig) -> Result<FilterConfig<f64>, CliError> {
    Ok(FilterConfig {
        line_search: line_search(cfg)?,
        seeds: cfg.seeds,
        ..FilterConfig::default()
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `manifest.txt`: a re-runnable configuration preceded by the
/// version, start time and wall-clock duration as comments.
pub fn write_manifest(cfg: &ExperimentConfig, started: SystemTime, elapsed: f64) -> Result<(), CliError> {
    let mut out = create(&cfg.output.join("manifest.txt"))?;
    let stamp = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(out, "# spfilter {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# started_unix = {stamp}")?;
    writeln!(out, "# wall_clock_seconds = {elapsed:.3}")?;
    write!(out, "{}", cfg.echo())?;
    out.flush()?;
    Ok(())
}

/// Runs the experiment named in `cfg` and writes its manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    match cfg.experiment {
        Experiment::Project => {
            cmd_project(cfg)?;
        }
        Experiment::Advect2d | Experiment::Advect3d => {
            cmd_advect(cfg)?;
        }
        Experiment::Rotate => {
            cmd_rotate(cfg)?;
        }
        Experiment::Torus3d => {
            cmd_torus3d(cfg)?;
        }
        Experiment::Tune => {
            cmd_tune(cfg)?;
        }
    }
    write_manifest(cfg, started, clock.elapsed().as_secs_f64())
}

/// One order of a single-element projection study.
#[derive(Debug, Clone)]
pub struct ProjectionRow {
    pub order: usize,
    pub unfiltered: Vec<f64>,
    pub filtered: Vec<f64>,
    pub l2_unfiltered: f64,
    pub l2_filtered: f64,
    pub lattice_min_unfiltered: f64,
    pub report: FilterReport<f64>,
}

/// A field projected on one element covering `cell`.
pub struct ProjectionProblem<'a> {
    pub f: &'a (dyn Fn(&Point<f64>) -> f64 + Sync),
    pub kind: ElementKind,
    pub cell: Cell,
}

impl ProjectionProblem<'_> {
    fn at_reference(&self, xi: &Point<f64>) -> f64 {
        (self.f)(&self.cell.to_physical(xi, self.kind.dim()))
    }

    /// Physical measure over reference measure.
    fn jacobian(&self) -> f64 {
        (0..self.kind.dim())
            .map(|k| 0.5 * (self.cell.hi[k] - self.cell.lo[k]))
            .product()
    }

    /// Projects at `order`, filters for `u ≥ -tol` unless `base` is `None`,
    /// and measures both fields.
    pub fn solve(&self, order: usize, tol: f64, base: Option<&FilterConfig<f64>>) -> Result<ProjectionRow, CliError> {
        let basis = Arc::new(OrthoBasis::with_default_quadrature(self.kind, order)?);
        let v = basis.project(|xi| self.at_reference(xi))?;
        let plan = FilterPlan::positivity(basis.clone())?;
        let (filtered, report) = match base {
            Some(base) => {
                let config = FilterConfig {
                    tolerance: plan.distance_tolerance_for_value(tol),
                    ..base.clone()
                };
                filter_element(&v, &plan, &config)?
            }
            None => (
                v.clone(),
                FilterReport {
                    iterations: 0,
                    converged: false,
                    final_min_s: plan.lattice_min(&v),
                    wall_time: 0.0,
                    gd_iterations_total: 0,
                },
            ),
        };
        let l2 = |c: &[f64]| self.l2_error(&basis, c);
        Ok(ProjectionRow {
            order,
            l2_unfiltered: l2(&v)?,
            l2_filtered: l2(&filtered)?,
            lattice_min_unfiltered: plan.lattice_residual_min(&v),
            unfiltered: v,
            filtered,
            report,
        })
    }

    /// L2 distance to the field with 10 Gauss points per direction.
    pub fn l2_error(&self, basis: &OrthoBasis<f64>, v: &[f64]) -> Result<f64, CliError> {
        let quad = ElementQuadrature::<f64>::new(self.kind, spfilter::dgsolver::L2_POINTS)?;
        let sum = quad.integrate(|xi| {
            let d = basis.value_at(v, xi) - self.at_reference(xi);
            d * d
        });
        Ok((sum * self.jacobian()).sqrt())
    }
}

/// Minimum of the field on a uniform grid of `n` points per direction over
/// the reference element.
pub fn dense_min(basis: &OrthoBasis<f64>, v: &[f64], n: usize) -> f64 {
    let d = basis.dim();
    let step = 2.0 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    for flat in 0..n.pow(d as u32) {
        let mut x = [0.0; 3];
        let mut r = flat;
        for xk in x.iter_mut().take(d) {
            *xk = -1.0 + step * (r % n) as f64;
            r /= n;
        }
        best = best.min(basis.value_at(v, &x));
    }
    best
}

/// Writes a projection as a VTK file sampled on a refined grid of the cell.
fn write_projection_vtk(
    path: &Path,
    kind: ElementKind,
    cell: &Cell,
    order: usize,
    fields: &[(&str, &[f64])],
) -> Result<(), CliError> {
    let basis = OrthoBasis::<f64>::with_default_quadrature(kind, order)?;
    let (layout, counts) = if kind.dim() == 3 {
        (MeshLayout::Hexes, [16, 16, 16])
    } else {
        (MeshLayout::Quads, [64, 64, 1])
    };
    let lo = [-1.0, -1.0, if kind.dim() == 3 { -1.0 } else { 0.0 }];
    let hi = [1.0, 1.0, if kind.dim() == 3 { 1.0 } else { 0.0 }];
    let sample: Mesh<f64> = make_structured_mesh(lo, hi, counts, layout, [false; 3])?;
    let values: Vec<Vec<Vec<f64>>> = fields
        .iter()
        .map(|(_, v)| {
            sample
                .elements
                .iter()
                .map(|el| el.vertices.iter().map(|xi| basis.value_at(v, xi)).collect())
                .collect()
        })
        .collect();
    let mut physical = sample.clone();
    for el in &mut physical.elements {
        for p in &mut el.vertices {
            *p = cell.to_physical(p, kind.dim());
        }
    }
    let vtk_fields: Vec<VertexField<'_, f64>> = fields
        .iter()
        .zip(&values)
        .map(|((name, _), vals)| VertexField { name, values: vals })
        .collect();
    let mut out = create(path)?;
    write_vtk(&mut out, &physical, &format!("projection order {order}"), &vtk_fields)?;
    out.flush()?;
    Ok(())
}

/// Clamped sinusoid projected on one element for every order, filtered
/// and unfiltered. Writes `project_l2.csv` and one VTK file per order.
pub fn cmd_project(cfg: &ExperimentConfig) -> Result<Vec<ProjectionRow>, CliError> {
    let (problem, dense) = if cfg.dim == 3 {
        (
            ProjectionProblem {
                f: &experiments::clamped_sinusoid_3d,
                kind: ElementKind::Hex,
                cell: Cell::REFERENCE_CUBE,
            },
            50,
        )
    } else {
        (
            ProjectionProblem {
                f: &experiments::clamped_sinusoid_2d,
                kind: ElementKind::Quad,
                cell: Cell::UNIT_SQUARE,
            },
            200,
        )
    };
    let base = filter_config(cfg)?;
    let mut out = create(&cfg.output.join("project_l2.csv"))?;
    writeln!(
        out,
        "order,l2_unfiltered,l2_filtered,lattice_min_unfiltered,dense_min_filtered,filter_iters,converged,t_filter"
    )?;
    let mut rows = Vec::new();
    for &order in &cfg.orders {
        let row = problem.solve(order, cfg.tol, cfg.filter.then_some(&base))?;
        let basis = OrthoBasis::<f64>::with_default_quadrature(problem.kind, order)?;
        let dmin = dense_min(&basis, &row.filtered, dense);
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{},{},{:e}",
            order,
            row.l2_unfiltered,
            row.l2_filtered,
            row.lattice_min_unfiltered,
            dmin,
            row.report.iterations,
            row.report.converged,
            row.report.wall_time
        )?;
        write_projection_vtk(
            &cfg.output.join(format!("field_N{order}.vtk")),
            problem.kind,
            &problem.cell,
            order,
            &[("unfiltered", &row.unfiltered), ("filtered", &row.filtered)],
        )?;
        log::info!("order {order}: {} filter iterations", row.report.iterations);
        rows.push(row);
    }
    out.flush()?;
    Ok(rows)
}

/// One time-dependent run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub diagnostics: Vec<StepDiagnostics<f64>>,
    pub initial: DGState<f64>,
    pub final_state: DGState<f64>,
    pub wall_time: f64,
}

impl RunOutcome {
    pub fn min_lattice(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.lattice_min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn final_l2(&self) -> Option<f64> {
        self.diagnostics.last().and_then(|d| d.l2_error)
    }
}

/// Filtered and unfiltered runs of one advection problem.
#[derive(Debug, Clone)]
pub struct AdvectionReport {
    pub filtered: Option<RunOutcome>,
    pub unfiltered: RunOutcome,
    /// `(t_filtered - t_unfiltered) / t_unfiltered` in percent.
    pub percent_time_increase: Option<f64>,
}

/// An advection problem on a periodic mesh.
pub struct AdvectionSetup<'a> {
    pub mesh: Arc<Mesh<f64>>,
    pub velocity: Velocity<f64>,
    pub initial: &'a (dyn Fn(&Point<f64>) -> f64 + Sync),
    pub exact: Option<&'a (dyn Fn(&Point<f64>, f64) -> f64 + Sync)>,
}

/// Runs `setup` with the filter (if enabled) and without it, writing
/// diagnostics, timing and VTK snapshots into `dir`.
pub fn run_advection(
    setup: &AdvectionSetup<'_>,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(AdvectionReport, DgSolver<f64>), CliError> {
    fs::create_dir_all(dir)?;
    let order = cfg.orders[0];
    let solver = DgSolver::new(setup.mesh.clone(), order, setup.velocity.clone())?;
    let initial = solver.project(setup.initial)?;
    let base = SolverConfig {
        filter_config: filter_config(cfg)?,
        value_tolerance: cfg.tol,
        ..SolverConfig::new(cfg.dt, cfg.steps, order)
    };
    let run_one = |filter: bool| -> Result<RunOutcome, CliError> {
        let label = if filter { "filtered" } else { "unfiltered" };
        let config = SolverConfig {
            filter_enabled: filter,
            ..base.clone()
        };
        let clock = Instant::now();
        let mut first = None;
        let (final_state, diagnostics) = solver.run_with(&config, initial.clone(), setup.exact, |step, state| {
            if step == 0 {
                first = Some(state.clone());
            }
            let snapshot = step == 0 || step == cfg.steps || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
            if snapshot {
                write_state_vtk(&solver, state, &dir.join(format!("{label}_{step:06}.vtk")))?;
            }
            Ok(())
        })?;
        let wall_time = clock.elapsed().as_secs_f64();
        let mut out = create(&dir.join(format!("diagnostics_{label}.csv")))?;
        write_diagnostics_csv(&mut out, &diagnostics)?;
        out.flush()?;
        Ok(RunOutcome {
            diagnostics,
            initial: first.unwrap_or_else(|| initial.clone()),
            final_state,
            wall_time,
        })
    };
    let unfiltered = run_one(false)?;
    let filtered = if cfg.filter { Some(run_one(true)?) } else { None };
    let percent_time_increase = filtered
        .as_ref()
        .map(|f| 100.0 * (f.wall_time - unfiltered.wall_time) / unfiltered.wall_time);
    let mut out = create(&dir.join("timing.csv"))?;
    writeln!(out, "run,wall_time,percent_increase")?;
    writeln!(out, "unfiltered,{:e},", unfiltered.wall_time)?;
    if let (Some(f), Some(p)) = (&filtered, percent_time_increase) {
        writeln!(out, "filtered,{:e},{p:.3}", f.wall_time)?;
    }
    out.flush()?;
    Ok((
        AdvectionReport {
            filtered,
            unfiltered,
            percent_time_increase,
        },
        solver,
    ))
}

fn write_state_vtk(solver: &DgSolver<f64>, state: &DGState<f64>, path: &Path) -> std::io::Result<()> {
    let values = solver.vertex_values(state);
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(
        &mut out,
        solver.mesh(),
        &format!("t = {}", state.time),
        &[VertexField {
            name: "u",
            values: &values,
        }],
    )?;
    out.flush()
}

/// Smooth advection on the composite 2D mesh (`advect2d`) or the hex cube
/// (`advect3d`) with velocity `(1, 1[, 1])`.
pub fn cmd_advect(cfg: &ExperimentConfig) -> Result<AdvectionReport, CliError> {
    let three_d = cfg.experiment == Experiment::Advect3d;
    let (mesh, ic, a): (_, fn(&Point<f64>) -> f64, _) = if three_d {
        (
            experiments::box_mesh(MeshLayout::Hexes, cfg.cells)?,
            experiments::advection_ic_3d,
            [1.0, 1.0, 1.0],
        )
    } else {
        let layout = MeshLayout::Composite;
        (
            experiments::box_mesh(layout, cfg.cells)?,
            experiments::advection_ic_2d,
            [1.0, 1.0, 0.0],
        )
    };
    let exact = periodic_translate(ic, a, mesh.lo, mesh.hi, mesh.dim);
    let setup = AdvectionSetup {
        mesh,
        velocity: Velocity::Constant(a),
        initial: &ic,
        exact: Some(&exact),
    };
    Ok(run_advection(&setup, cfg, &cfg.output)?.0)
}

/// Solid-body rotation of the slotted cylinder, cone and hump, one
/// revolution per unit time. Also writes slices `y = slice_y` and
/// `x = slice_x` of the initial and final states.
pub fn cmd_rotate(cfg: &ExperimentConfig) -> Result<AdvectionReport, CliError> {
    let mesh = experiments::box_mesh(MeshLayout::Quads, cfg.cells)?;
    let omega = 2.0 * std::f64::consts::PI;
    let exact = move |x: &Point<f64>, t: f64| {
        let (s, c) = (omega * t).sin_cos();
        experiments::rotation_ic(&[c * x[0] + s * x[1], -s * x[0] + c * x[1], 0.0])
    };
    let setup = AdvectionSetup {
        mesh: mesh.clone(),
        velocity: rotation_velocity([0.0, 0.0], omega),
        initial: &experiments::rotation_ic,
        exact: Some(&exact),
    };
    let (report, solver) = run_advection(&setup, cfg, &cfg.output)?;
    let mut states = vec![
        ("initial", &report.unfiltered.initial),
        ("unfiltered", &report.unfiltered.final_state),
    ];
    if let Some(f) = &report.filtered {
        states.push(("filtered", &f.final_state));
    }
    for (label, state) in states {
        let (lo, hi) = (mesh.lo, mesh.hi);
        let along_x = solver.sample_line(
            state,
            &[lo[0], cfg.slice_y, 0.0],
            &[hi[0], cfg.slice_y, 0.0],
            cfg.slice_points,
        );
        write_slice(
            &cfg.output.join(format!("slice_y{}_{label}.csv", cfg.slice_y)),
            &along_x,
        )?;
        let along_y = solver.sample_line(
            state,
            &[cfg.slice_x, lo[1], 0.0],
            &[cfg.slice_x, hi[1], 0.0],
            cfg.slice_points,
        );
        write_slice(
            &cfg.output.join(format!("slice_x{}_{label}.csv", cfg.slice_x)),
            &along_y,
        )?;
    }
    Ok(report)
}

fn write_slice(path: &Path, samples: &[(Point<f64>, f64)]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "x,y,u")?;
    for (x, u) in samples {
        writeln!(out, "{},{},{:e}", x[0], x[1], u)?;
    }
    out.flush()?;
    Ok(())
}

/// Torus-shaped field advected with velocity `(1, 1, 1)` on a hex and/or a
/// tet mesh, each in its own subdirectory.
pub fn cmd_torus3d(cfg: &ExperimentConfig) -> Result<Vec<(SolidKind, AdvectionReport)>, CliError> {
    let a = [1.0, 1.0, 1.0];
    let mut reports = Vec::new();
    for &solid in &cfg.solids {
        let layout = match solid {
            SolidKind::Hex => MeshLayout::Hexes,
            SolidKind::Tet => MeshLayout::Tets,
        };
        let mesh = experiments::box_mesh(layout, cfg.cells)?;
        let exact = periodic_translate(experiments::torus, a, mesh.lo, mesh.hi, 3);
        let setup = AdvectionSetup {
            mesh,
            velocity: Velocity::Constant(a),
            initial: &experiments::torus,
            exact: Some(&exact),
        };
        let (report, _) = run_advection(&setup, cfg, &cfg.output.join(solid.name()))?;
        reports.push((solid, report));
    }
    Ok(reports)
}

/// Parameter sweep on the quadrilateral (`dim = 2`) or hexahedron
/// (`dim = 3`). Writes `tune.csv` and `selected.csv`.
pub fn cmd_tune(cfg: &ExperimentConfig) -> Result<TuneResult<f64>, CliError> {
    let kind = if cfg.dim == 3 {
        ElementKind::Hex
    } else {
        ElementKind::Quad
    };
    let functions = experiments::tuning_functions(cfg.dim)?;
    let base = line_search(cfg)?;
    let result = tune(&functions, kind, &cfg.orders, cfg.grid, &base, cfg.aggregation)?;
    let mut out = create(&cfg.output.join("tune.csv"))?;
    write_tune_csv(&mut out, &result.table)?;
    out.flush()?;
    let mut out = create(&cfg.output.join("selected.csv"))?;
    writeln!(out, "c,gamma")?;
    for (c, g) in &result.selected {
        writeln!(out, "{c},{g}")?;
    }
    out.flush()?;
    Ok(result)
}
