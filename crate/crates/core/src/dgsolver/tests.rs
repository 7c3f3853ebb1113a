use std::f64::consts::PI;

use super::*;
use crate::geometry::{make_structured_mesh, MeshLayout};

fn mesh(layout: MeshLayout, counts: [usize; 3]) -> Arc<Mesh<f64>> {
    let d = layout.dim();
    let lo = [-1.0, if d > 1 { -1.0 } else { 0.0 }, if d > 2 { -1.0 } else { 0.0 }];
    let hi = [1.0, if d > 1 { 1.0 } else { 0.0 }, if d > 2 { 1.0 } else { 0.0 }];
    Arc::new(make_structured_mesh(lo, hi, counts, layout, [true; 3]).unwrap())
}

fn unfiltered(dt: f64, steps: usize, order: usize) -> SolverConfig<f64> {
    SolverConfig {
        filter_enabled: false,
        ..SolverConfig::new(dt, steps, order)
    }
}

#[test]
fn constants_are_steady_on_every_mesh() {
    let cases = [
        (MeshLayout::Segments, [4, 1, 1], Velocity::Constant([1.0, 0.0, 0.0])),
        (MeshLayout::Quads, [3, 3, 1], Velocity::Constant([1.0, 0.5, 0.0])),
        (MeshLayout::Composite, [4, 4, 1], Velocity::Constant([1.0, 1.0, 0.0])),
        (MeshLayout::Hexes, [2, 2, 2], Velocity::Constant([1.0, 1.0, 1.0])),
        (MeshLayout::Tets, [2, 2, 2], Velocity::Constant([1.0, -1.0, 0.5])),
        (MeshLayout::Quads, [4, 4, 1], rotation_velocity([0.0, 0.0], 2.0 * PI)),
    ];
    for (layout, counts, velocity) in cases {
        let solver = DgSolver::new(mesh(layout, counts), 3, velocity).unwrap();
        let state = solver.project(|_| 1.0).unwrap();
        let rhs = solver.rhs(&state).unwrap();
        let worst = rhs.iter().flatten().fold(0.0_f64, |m, r| m.max(r.abs()));
        assert!(worst < 1e-11, "{layout:?}: {worst:e}");
    }
}

#[test]
fn single_segment_matches_hand_assembly() {
    // N = 1 on one periodic element: the operator is diag(0, -3).
    let solver = DgSolver::new(
        mesh(MeshLayout::Segments, [1, 1, 1]),
        1,
        Velocity::Constant([1.0, 0.0, 0.0]),
    )
    .unwrap();
    let state = DGState {
        coeffs: vec![vec![0.0, 1.0]],
        time: 0.0,
    };
    let r = solver.rhs(&state).unwrap();
    assert!(r[0][0].abs() < 1e-14);
    assert!((r[0][1] + 3.0).abs() < 1e-13, "{:?}", r[0]);
    let state = DGState {
        coeffs: vec![vec![1.0, 0.0]],
        time: 0.0,
    };
    let r = solver.rhs(&state).unwrap();
    assert!(r[0][0].abs() < 1e-14 && r[0][1].abs() < 1e-13);
}

#[test]
fn rk4_error_is_fifth_order_per_step() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Segments, [1, 1, 1]),
        1,
        Velocity::Constant([1.0, 0.0, 0.0]),
    )
    .unwrap();
    let state = DGState {
        coeffs: vec![vec![0.0, 1.0]],
        time: 0.0,
    };
    let err = |dt: f64| {
        let next = solver.step_rk4(&state, dt).unwrap();
        assert!((next.time - dt).abs() < 1e-15);
        (next.coeffs[0][1] - (-3.0 * dt).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 32.0).abs() < 3.0, "{ratio}");
}

#[test]
fn zero_rhs_leaves_state_unchanged() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Quads, [2, 2, 1]),
        2,
        Velocity::Constant([1.0, 1.0, 0.0]),
    )
    .unwrap();
    let state = solver.project(|_| 0.0).unwrap();
    let (out, diag) = solver.run(&SolverConfig::new(1e-2, 5, 2), state.clone(), None).unwrap();
    assert_eq!(out.coeffs, state.coeffs);
    assert!(diag.iter().all(|d| d.n_flagged == 0 && d.l2_error.is_none()));
    assert_eq!(diag.len(), 6);
}

#[test]
fn one_period_error_decreases_with_order() {
    let u0 = |x: &Point<f64>| (PI * x[0]).sin();
    let mut errors = Vec::new();
    for order in [1, 2, 3, 4] {
        let m = mesh(MeshLayout::Segments, [6, 1, 1]);
        let solver = DgSolver::new(m.clone(), order, Velocity::Constant([1.0, 0.0, 0.0])).unwrap();
        let state = solver.project(u0).unwrap();
        let exact = periodic_translate(u0, [1.0, 0.0, 0.0], m.lo, m.hi, 1);
        let (out, _) = solver.run(&unfiltered(2e-3, 1000, order), state, None).unwrap();
        assert!((out.time - 2.0).abs() < 1e-9);
        errors.push(solver.l2_error(&out, &exact, 10).unwrap());
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[3] < 1e-4, "{errors:?}");
}

#[test]
fn l2_error_of_exact_polynomial_vanishes() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Composite, [4, 4, 1]),
        3,
        Velocity::Constant([1.0, 1.0, 0.0]),
    )
    .unwrap();
    let f = |x: &Point<f64>| x[0] * x[0] * x[1] - 0.5 * x[1] + 2.0;
    let state = solver.project(f).unwrap();
    let err = solver.l2_error(&state, &|x: &Point<f64>, _| f(x), 10).unwrap();
    assert!(err < 1e-12, "{err:e}");
    let err = solver.l2_error(&state, &|x: &Point<f64>, _| f(x) + 1.0, 10).unwrap();
    assert!((err - 2.0).abs() < 1e-12, "area of [-1,1]^2 is 4");
}

#[test]
fn rotation_velocity_values() {
    let a = rotation_velocity([0.0, 0.0], 2.0 * PI);
    assert_eq!(a.at(&[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
    let v = a.at(&[0.3, 0.4, 0.0]);
    let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
    assert!((speed - 2.0 * PI * 0.5).abs() < 1e-14);
    let b = rotation_velocity([0.5, 0.0], 1.0);
    assert_eq!(b.at(&[0.5, 0.0, 0.0]), [0.0, 0.0, 0.0]);
}

#[test]
fn quarter_rotation_moves_a_bump() {
    let m = mesh(MeshLayout::Quads, [8, 8, 1]);
    let solver = DgSolver::new(m, 4, rotation_velocity([0.0, 0.0], 2.0 * PI)).unwrap();
    let bump = |x: &Point<f64>| (-((x[0] - 0.5).powi(2) + x[1].powi(2)) / 0.02).exp();
    let state = solver.project(bump).unwrap();
    let (out, _) = solver.run(&unfiltered(1e-3, 250, 4), state, None).unwrap();
    // After a quarter turn the peak sits at (0, 0.5).
    let peak = solver.sample(&out, &[0.0, 0.5, 0.0]).unwrap();
    let origin = solver.sample(&out, &[0.5, 0.0, 0.0]).unwrap();
    assert!(peak > 0.9 && origin.abs() < 0.05, "{peak} {origin}");
}

#[test]
fn filtered_run_keeps_lattice_nonnegative() {
    let m = mesh(MeshLayout::Quads, [4, 4, 1]);
    let solver = DgSolver::new(m, 3, Velocity::Constant([1.0, 0.5, 0.0])).unwrap();
    let pulse = |x: &Point<f64>| if x[0].abs() < 0.4 && x[1].abs() < 0.4 { 1.0 } else { 0.0 };
    let state = solver.project(pulse).unwrap();
    assert!(solver.lattice_min(&state) < -1e-3);
    let (_, diag) = solver
        .run(&SolverConfig::new(5e-3, 30, 3), state.clone(), None)
        .unwrap();
    assert!(diag.iter().all(|d| d.lattice_min >= -1e-7), "{diag:?}");
    assert!(diag[0].n_flagged > 0);
    let (_, raw) = solver.run(&unfiltered(5e-3, 30, 3), state, None).unwrap();
    assert!(raw.iter().any(|d| d.lattice_min < -1e-7));
}

#[test]
fn unfiltered_runs_are_reproducible() {
    let m = mesh(MeshLayout::Tets, [2, 2, 2]);
    let solver = DgSolver::new(m, 2, Velocity::Constant([1.0, 1.0, 1.0])).unwrap();
    let state = solver.project(|x| (x[0] + 2.0 * x[1] - x[2]).cos()).unwrap();
    let a = solver.run(&unfiltered(1e-2, 10, 2), state.clone(), None).unwrap().0;
    let b = solver.run(&unfiltered(1e-2, 10, 2), state, None).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn mass_is_conserved() {
    let m = mesh(MeshLayout::Composite, [4, 4, 1]);
    let solver = DgSolver::new(m.clone(), 3, Velocity::Constant([1.0, 1.0, 0.0])).unwrap();
    let state = solver
        .project(|x| 1.0 - (PI * x[0] / 2.0).cos() * (PI * x[1] / 2.0).cos())
        .unwrap();
    let mass = |s: &DGState<f64>| -> f64 {
        // ∫ψ_0 = √(measure) on the reference element.
        s.coeffs
            .iter()
            .zip(&m.elements)
            .map(|(v, el)| v[0] * el.kind.measure::<f64>().sqrt() * el.map.det())
            .sum()
    };
    let (out, _) = solver.run(&unfiltered(5e-3, 20, 3), state.clone(), None).unwrap();
    assert!((mass(&out) - mass(&state)).abs() < 1e-12);
}

#[test]
fn non_finite_state_reports_step() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Segments, [2, 1, 1]),
        1,
        Velocity::Constant([1.0, 0.0, 0.0]),
    )
    .unwrap();
    let state = DGState {
        coeffs: vec![vec![f64::NAN, 0.0], vec![0.0, 0.0]],
        time: 0.0,
    };
    let err = solver.run(&unfiltered(1e-2, 3, 1), state, None).unwrap_err();
    assert!(matches!(err, Error::NonFiniteState { step: 1 }));
}

#[test]
fn cfl_estimate() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Quads, [4, 4, 1]),
        4,
        Velocity::Constant([1.0, 1.0, 0.0]),
    )
    .unwrap();
    // h_min = 0.5, |a| = √2, 2N + 1 = 9.
    let limit = 0.5 / (2.0_f64.sqrt() * 9.0);
    assert!(solver.check_cfl(limit * 0.99));
    assert!(!solver.check_cfl(limit * 1.01));
}

#[test]
fn periodic_translate_wraps() {
    let exact = periodic_translate(
        |x: &Point<f64>| x[0],
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        1,
    );
    assert!((exact(&[0.5, 0.0, 0.0], 0.25) - 0.25).abs() < 1e-15);
    assert!((exact(&[-0.9, 0.0, 0.0], 0.5) - 0.6).abs() < 1e-15);
    assert!((exact(&[0.3, 0.0, 0.0], 2.0) - 0.3).abs() < 1e-14);
}

#[test]
fn diagnostics_csv_layout() {
    let row = StepDiagnostics {
        step: 1,
        time: 0.5,
        l2_error: None,
        n_flagged: 2,
        filter_iters: 3,
        gd_iters: 4,
        t_solver: 0.25,
        t_filter: 0.125,
        lattice_min: -1.0,
    };
    let mut buf = Vec::new();
    write_diagnostics_csv(&mut buf, &[row]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,time,l2_error,n_flagged,filter_iters,gd_iters,t_solver,t_filter,lattice_min"
    );
    assert_eq!(lines.next().unwrap(), "1,0.5,,2,3,4,2.5e-1,1.25e-1,-1e0");
}

#[test]
fn slices_and_vertex_values() {
    let solver = DgSolver::new(
        mesh(MeshLayout::Triangles, [2, 2, 1]),
        2,
        Velocity::Constant([1.0, 0.0, 0.0]),
    )
    .unwrap();
    let state = solver.project(|x| x[0] + 2.0 * x[1]).unwrap();
    let line = solver.sample_line(&state, &[-1.0, 0.5, 0.0], &[1.0, 0.5, 0.0], 11);
    assert_eq!(line.len(), 11);
    for (x, u) in line {
        assert!((u - (x[0] + 1.0)).abs() < 1e-12);
    }
    assert!(solver.sample(&state, &[2.0, 0.0, 0.0]).is_none());
    let vv = solver.vertex_values(&state);
    assert_eq!(vv.len(), 8);
    for (vals, el) in vv.iter().zip(&solver.mesh().elements) {
        for (u, p) in vals.iter().zip(&el.vertices) {
            assert!((u - (p[0] + 2.0 * p[1])).abs() < 1e-12);
        }
    }
}
