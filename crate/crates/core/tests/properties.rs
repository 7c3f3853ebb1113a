use std::sync::Arc;

use proptest::prelude::*;

use spfilter::basis::{ElementKind, ElementQuadrature, OrthoBasis};
use spfilter::filter::{filter_element, Bound, ConstraintFamily, FilterConfig, FilterPlan};
use spfilter::minimize::comrade::legendre_series_eval;
use spfilter::minimize::minimize_1d;
use spfilter::tuner::{parameter_grid, tune_with, Aggregation, TuneCase};

const KINDS: [ElementKind; 5] = [
    ElementKind::Segment,
    ElementKind::Quad,
    ElementKind::Tri,
    ElementKind::Hex,
    ElementKind::Tet,
];

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn plan(kind: ElementKind, order: usize) -> FilterPlan<f64> {
    let basis = Arc::new(OrthoBasis::with_default_quadrature(kind, order).unwrap());
    FilterPlan::positivity(basis).unwrap()
}

fn config(plan: &FilterPlan<f64>) -> FilterConfig<f64> {
    FilterConfig {
        tolerance: plan.distance_tolerance_for_value(1e-7),
        ..FilterConfig::default()
    }
}

#[test]
fn bases_are_orthonormal() {
    for kind in KINDS {
        let order = if kind.dim() == 3 { 4 } else { 6 };
        let basis = OrthoBasis::<f64>::with_default_quadrature(kind, order).unwrap();
        let quad = ElementQuadrature::<f64>::new(kind, order + 3).unwrap();
        let n = basis.size();
        assert_eq!(n, kind.basis_size(order));
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = 1.0;
            for j in i..n {
                let mut f = vec![0.0; n];
                f[j] = 1.0;
                let gram = quad.integrate(|x| basis.value_at(&e, x) * basis.value_at(&f, x));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram - expected).abs() < 1e-11, "{kind:?} ({i}, {j}): {gram}");
            }
            e[i] = 0.0;
        }
    }
}

#[test]
fn lattice_includes_the_element_vertices() {
    for kind in KINDS {
        let p = plan(kind, 3);
        for vertex in kind.vertices::<f64>() {
            let near = p
                .lattice()
                .points
                .iter()
                .any(|x| (0..3).all(|k| (x[k] - vertex[k]).abs() < 1e-12));
            assert!(near, "{kind:?} vertex {vertex:?}");
        }
    }
}

fn kind_and_coeffs() -> impl Strategy<Value = (ElementKind, usize, Vec<f64>)> {
    (
        prop::sample::select(vec![ElementKind::Segment, ElementKind::Quad, ElementKind::Tri]),
        1usize..=4,
    )
        .prop_flat_map(|(kind, order)| {
            let n = kind.basis_size(order);
            (Just(kind), Just(order), prop::collection::vec(-1.0f64..1.0, n))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filter_never_increases_the_norm((kind, order, v) in kind_and_coeffs()) {
        let p = plan(kind, order);
        let (out, _) = filter_element(&v, &p, &config(&p)).unwrap();
        prop_assert!(norm(&out) <= norm(&v));
    }

    #[test]
    fn converged_filter_output_is_feasible_on_the_lattice((kind, order, v) in kind_and_coeffs()) {
        let p = plan(kind, order);
        let (out, report) = filter_element(&v, &p, &config(&p)).unwrap();
        prop_assert!(report.converged);
        prop_assert!(p.lattice_residual_min(&out) >= -1e-7);
    }

    #[test]
    fn filter_leaves_feasible_input_alone((kind, order, mut v) in kind_and_coeffs(), lift in 0.0f64..2.0) {
        let p = plan(kind, order);
        let shift = -p.lattice_residual_min(&v).min(0.0) + lift;
        let basis = p.basis();
        let one = basis.project(|_| 1.0).unwrap();
        for (c, o) in v.iter_mut().zip(&one) {
            *c += shift * o;
        }
        prop_assume!(p.lattice_residual_min(&v) > 1e-9);
        let (out, report) = filter_element(&v, &p, &config(&p)).unwrap();
        prop_assert!(report.converged);
        if report.iterations == 0 {
            prop_assert_eq!(out, v);
        } else {
            // Only a hidden violation between lattice points may trigger work.
            prop_assert!(norm(&out) <= norm(&v));
        }
    }

    #[test]
    fn two_sided_bounds_hold_after_filtering((kind, order, v) in kind_and_coeffs()) {
        let basis = Arc::new(OrthoBasis::with_default_quadrature(kind, order).unwrap());
        let families: Vec<Arc<dyn ConstraintFamily<f64>>> =
            vec![Arc::new(Bound::Lower(-0.2)), Arc::new(Bound::Upper(0.3))];
        let p = FilterPlan::new(basis.clone(), families).unwrap();
        let (out, report) = filter_element(&v, &p, &config(&p)).unwrap();
        prop_assert!(report.converged);
        for x in &p.lattice().points {
            let u = basis.value_at(&out, x);
            prop_assert!((-0.2 - 1e-7..=0.3 + 1e-7).contains(&u), "u = {} at {:?}", u, x);
        }
    }

    #[test]
    fn exact_1d_minimum_bounds_every_sample(coeffs in prop::collection::vec(-1.0f64..1.0, 1..10), xs in prop::collection::vec(-1.0f64..1.0, 64)) {
        let found = minimize_1d(&coeffs, -1.0, 1.0).unwrap();
        prop_assert!((legendre_series_eval(&coeffs, found.x_star[0]).0 - found.value).abs() < 1e-13);
        for x in xs {
            prop_assert!(found.value <= legendre_series_eval(&coeffs, x).0 + 1e-12);
        }
    }

    #[test]
    fn projection_reproduces_the_polynomial_space((kind, order, v) in kind_and_coeffs()) {
        let basis = OrthoBasis::<f64>::with_default_quadrature(kind, order).unwrap();
        let back = basis.project(|x| basis.value_at(&v, x)).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tuner_selects_exactly_the_least_iterations_then_least_error(
        k in 2usize..5,
        table in prop::collection::vec((0usize..4, 0u8..3), 16 * 3),
    ) {
        let cases: Vec<TuneCase<f64>> = (0..3)
            .map(|i| TuneCase { function: format!("f{i}"), order: 2, golden: 0.0 })
            .collect();
        let grid = parameter_grid::<f64>(k);
        let slot = |case: usize, c: f64, gamma: f64| {
            let i = grid.iter().position(|&g| g == c).unwrap();
            let j = grid.iter().position(|&g| g == gamma).unwrap();
            table[(j * k + i) * 3 + case]
        };
        let result = tune_with(&cases, k, Aggregation::Sum, |case, _, c, gamma| {
            let (niter, err) = slot(case, c, gamma);
            Ok((niter, f64::from(err) * 0.25))
        })
        .unwrap();
        let score = |c: f64, gamma: f64| {
            (0..3).fold((0usize, 0.0f64), |(n, e), case| {
                let (ni, ei) = slot(case, c, gamma);
                (n + ni, e + f64::from(ei) * 0.25)
            })
        };
        let all: Vec<(f64, f64)> = grid.iter().flat_map(|&g| grid.iter().map(move |&c| (c, g))).collect();
        let best = all.iter().map(|&(c, g)| score(c, g)).fold((usize::MAX, f64::INFINITY), |a, b| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }
        });
        let expected: Vec<(f64, f64)> = all.iter().copied().filter(|&(c, g)| score(c, g) == best).collect();
        prop_assert_eq!(result.selected, expected);
        prop_assert_eq!(result.table.len(), k * k * 3);
    }
}
