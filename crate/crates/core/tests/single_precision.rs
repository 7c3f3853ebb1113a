use std::sync::Arc;

use spfilter::basis::{ElementKind, OrthoBasis};
use spfilter::filter::{filter_element, FilterConfig, FilterPlan};
use spfilter::minimize::minimize_1d;

#[test]
fn filter_runs_in_f32() {
    let basis = Arc::new(OrthoBasis::<f32>::with_default_quadrature(ElementKind::Quad, 3).unwrap());
    let v = basis.project(|x| x[0] * x[1] - 0.1).unwrap();
    let plan = FilterPlan::positivity(basis.clone()).unwrap();
    assert!(plan.lattice_residual_min(&v) < 0.0);
    let config = FilterConfig {
        tolerance: plan.distance_tolerance_for_value(1e-4),
        ..FilterConfig::default()
    };
    let (out, report) = filter_element(&v, &plan, &config).unwrap();
    assert!(report.converged);
    assert!(plan.lattice_residual_min(&out) >= -1e-4);
}

#[test]
fn exact_minimum_in_f32() {
    // (x - 0.25)² in orthonormal Legendre modes.
    let s2 = 2f32.sqrt();
    let p2 = (2.0f32 / 5.0).sqrt() * 2.0 / 3.0;
    let coeffs = [s2 * (1.0 / 3.0 + 0.0625), -0.5 * (2.0f32 / 3.0).sqrt(), p2];
    let found = minimize_1d(&coeffs, -1.0f32, 1.0).unwrap();
    assert!((found.x_star[0] - 0.25).abs() < 1e-3);
    assert!(found.value.abs() < 1e-5);
}
