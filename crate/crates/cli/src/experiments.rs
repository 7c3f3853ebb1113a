//! Test fields, initial conditions and meshes of the reproduced experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use spfilter::geometry::{make_structured_mesh, Mesh, MeshLayout};
use spfilter::tuner::TuneFunction;
use spfilter::{Point, Result};

/// `(x + 0.6)² + (y - 0.2)²`, minimum 0 at `(-0.6, 0.2)`.
pub fn f0(x: &Point<f64>) -> f64 {
    (x[0] + 0.6).powi(2) + (x[1] - 0.2).powi(2)
}

/// `-sin((x - 0.1) + π/2) cos(y - 0.2)`, minimum -1 at `(0.1, 0.2)`.
pub fn f1(x: &Point<f64>) -> f64 {
    -((x[0] - 0.1) + 0.5 * PI).sin() * (x[1] - 0.2).cos()
}

/// Indicator of the quadrant `x ≤ 0, y ≤ 0`.
pub fn f2(x: &Point<f64>) -> f64 {
    if x[0] <= 0.0 && x[1] <= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `(x + 0.6)² + (y - 0.2)² + (z + 0.1)²`, minimum 0 at `(-0.6, 0.2, -0.1)`.
pub fn f3(x: &Point<f64>) -> f64 {
    (x[0] + 0.6).powi(2) + (x[1] - 0.2).powi(2) + (x[2] + 0.1).powi(2)
}

/// `-sin((x - 0.1) + π/2) cos(y - 0.2) cos(z - 0.2)`, minimum -1 at
/// `(0.1, 0.2, 0.2)`.
pub fn f4(x: &Point<f64>) -> f64 {
    -((x[0] - 0.1) + 0.5 * PI).sin() * (x[1] - 0.2).cos() * (x[2] - 0.2).cos()
}

/// Indicator of the octant `x, y, z ≤ 0`.
pub fn f5(x: &Point<f64>) -> f64 {
    if x[0] <= 0.0 && x[1] <= 0.0 && x[2] <= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Closed-form minima of the smooth test functions.
pub const F0_MIN: f64 = 0.0;
pub const F1_MIN: f64 = -1.0;
pub const F3_MIN: f64 = 0.0;
pub const F4_MIN: f64 = -1.0;

/// Test functions for parameter tuning in `dim` dimensions, with golden
/// minima (numeric for the indicators).
pub fn tuning_functions(dim: usize) -> Result<Vec<TuneFunction<f64>>> {
    use spfilter::basis::ElementKind;
    use spfilter::tuner::{golden_minimum, GoldenMode};
    type Entry = (&'static str, fn(&Point<f64>) -> f64, Option<f64>);
    let (kind, list): (ElementKind, [Entry; 3]) = if dim == 3 {
        (
            ElementKind::Hex,
            [("f3", f3, Some(F3_MIN)), ("f4", f4, Some(F4_MIN)), ("f5", f5, None)],
        )
    } else {
        (
            ElementKind::Quad,
            [("f0", f0, Some(F0_MIN)), ("f1", f1, Some(F1_MIN)), ("f2", f2, None)],
        )
    };
    list.into_iter()
        .map(|(name, f, min)| {
            let mode = min.map_or(GoldenMode::numeric_default(kind), GoldenMode::Analytic);
            Ok(TuneFunction {
                name: name.into(),
                f: Arc::new(f),
                golden: golden_minimum(f, kind, mode)?,
            })
        })
        .collect()
}

/// `sin(2πx) sin(2πy - 0.85π)` on the unit square.
pub fn sinusoid_2d(x: &Point<f64>) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1] - 0.85 * PI).sin()
}

/// [`sinusoid_2d`] restricted to `x ∈ [0, 0.5]`, `y ∈ [0.4, 0.85]`, zero
/// elsewhere.
pub fn clamped_sinusoid_2d(x: &Point<f64>) -> f64 {
    let inside = (0.0..=0.5).contains(&x[0]) && (0.4..=0.85).contains(&x[1]);
    if inside {
        sinusoid_2d(x)
    } else {
        0.0
    }
}

/// `sin(π(0.2 - x)) sin(π(y + 0.2)) sin(π(z + 0.2))`.
pub fn sinusoid_3d(x: &Point<f64>) -> f64 {
    (PI * (0.2 - x[0])).sin() * (PI * (x[1] + 0.2)).sin() * (PI * (x[2] + 0.2)).sin()
}

/// [`sinusoid_3d`] restricted to `x ∈ [-0.8, 0.2]`, `y, z ∈ [-0.2, 0.8]`.
pub fn clamped_sinusoid_3d(x: &Point<f64>) -> f64 {
    let inside = (-0.8..=0.2).contains(&x[0]) && (-0.2..=0.8).contains(&x[1]) && (-0.2..=0.8).contains(&x[2]);
    if inside {
        sinusoid_3d(x)
    } else {
        0.0
    }
}

/// Physical box of one element used for a projection study: `lo`, `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: Point<f64>,
    pub hi: Point<f64>,
}

impl Cell {
    pub const UNIT_SQUARE: Cell = Cell {
        lo: [0.0, 0.0, 0.0],
        hi: [1.0, 1.0, 0.0],
    };
    pub const REFERENCE_CUBE: Cell = Cell {
        lo: [-1.0, -1.0, -1.0],
        hi: [1.0, 1.0, 1.0],
    };
    /// A sub-box of the clamp region where [`sinusoid_2d`] is at least 0.26.
    pub const POSITIVE_SINUSOID: Cell = Cell {
        lo: [0.1, 0.5, 0.0],
        hi: [0.4, 0.85, 0.0],
    };

    pub fn to_physical(&self, xi: &Point<f64>, dim: usize) -> Point<f64> {
        let mut x = [0.0; 3];
        for k in 0..dim {
            x[k] = self.lo[k] + (xi[k] + 1.0) * 0.5 * (self.hi[k] - self.lo[k]);
        }
        x
    }
}

/// `1 - cos(πx/2) cos(πy/2)`.
pub fn advection_ic_2d(x: &Point<f64>) -> f64 {
    1.0 - (0.5 * PI * x[0]).cos() * (0.5 * PI * x[1]).cos()
}

/// `1 - cos(πx/2) cos(πy/2) cos(πz/2)`.
pub fn advection_ic_3d(x: &Point<f64>) -> f64 {
    1.0 - (0.5 * PI * x[0]).cos() * (0.5 * PI * x[1]).cos() * (0.5 * PI * x[2]).cos()
}

/// `0.2 ((1 - √(x² + y²))² + z²)`.
pub fn torus(x: &Point<f64>) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    0.2 * ((1.0 - r).powi(2) + x[2] * x[2])
}

/// Radius of the three rotating bodies.
pub const BODY_RADIUS: f64 = 0.3;
/// Half-width of the slot cut into the cylinder.
pub const NOTCH_HALF_WIDTH: f64 = 0.05;
/// The slot reaches from the bottom of the cylinder to this height above
/// its center.
pub const NOTCH_TOP: f64 = 0.2;

/// Slotted cylinder at `(0, 0.5)`, cone at `(0, -0.5)` and cosine hump at
/// `(-0.6, 0)`, each of radius 0.3 and height 1.
pub fn rotation_ic(x: &Point<f64>) -> f64 {
    let dist = |cx: f64, cy: f64| ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt() / BODY_RADIUS;
    let r = dist(0.0, 0.5);
    if r <= 1.0 {
        let in_slot = x[0].abs() < NOTCH_HALF_WIDTH && x[1] < 0.5 + NOTCH_TOP;
        return if in_slot { 0.0 } else { 1.0 };
    }
    let r = dist(0.0, -0.5);
    if r <= 1.0 {
        return 1.0 - r;
    }
    let r = dist(-0.6, 0.0);
    if r <= 1.0 {
        return 0.25 * (1.0 + (PI * r).cos());
    }
    0.0
}

/// Periodic structured mesh of `[-1, 1]^d`.
pub fn box_mesh(layout: MeshLayout, counts: [usize; 3]) -> Result<Arc<Mesh<f64>>> {
    let d = layout.dim();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for k in 0..d {
        lo[k] = -1.0;
        hi[k] = 1.0;
    }
    Ok(Arc::new(make_structured_mesh(lo, hi, counts, layout, [true; 3])?))
}

/// 16 triangles and 8 quadrilaterals on `[-1, 1]²`.
pub fn composite_mesh() -> Result<Arc<Mesh<f64>>> {
    box_mesh(MeshLayout::Composite, [4, 4, 1])
}

/// 48 quadrilaterals (8 × 6) on `[-1, 1]²`.
pub fn rotation_mesh() -> Result<Arc<Mesh<f64>>> {
    box_mesh(MeshLayout::Quads, [8, 6, 1])
}

/// 27 hexahedra on `[-1, 1]³`.
pub fn torus_hex_mesh() -> Result<Arc<Mesh<f64>>> {
    box_mesh(MeshLayout::Hexes, [3, 3, 3])
}

/// 162 tetrahedra on `[-1, 1]³`.
pub fn torus_tet_mesh() -> Result<Arc<Mesh<f64>>> {
    box_mesh(MeshLayout::Tets, [3, 3, 3])
}
