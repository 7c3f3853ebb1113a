use crate::scalar::{Point, Scalar};

/// Reference element shapes.
///
/// Segment is `[-1, 1]`, Quad and Hex are `[-1, 1]^d`, Tri is
/// `{x, y ≥ -1, x + y ≤ 0}` and Tet is `{x, y, z ≥ -1, x + y + z ≤ -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Segment,
    Quad,
    Tri,
    Hex,
    Tet,
}

const SEGMENT_VERTICES: [[f64; 3]; 2] = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
const QUAD_VERTICES: [[f64; 3]; 4] = [[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]];
const TRI_VERTICES: [[f64; 3]; 3] = [[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [-1.0, 1.0, 0.0]];
const HEX_VERTICES: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];
const TET_VERTICES: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

// Faces list vertices in cyclic order; for quadrilateral faces the first,
// second and last vertex span the face parallelogram.
const SEGMENT_FACES: &[&[usize]] = &[&[0], &[1]];
const QUAD_FACES: &[&[usize]] = &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]];
const TRI_FACES: &[&[usize]] = &[&[0, 1], &[1, 2], &[2, 0]];
const HEX_FACES: &[&[usize]] = &[
    &[0, 1, 2, 3],
    &[4, 5, 6, 7],
    &[0, 1, 5, 4],
    &[1, 2, 6, 5],
    &[2, 3, 7, 6],
    &[3, 0, 4, 7],
];
const TET_FACES: &[&[usize]] = &[&[0, 1, 2], &[0, 1, 3], &[1, 2, 3], &[0, 2, 3]];

impl ElementKind {
    pub fn dim(self) -> usize {
        match self {
            ElementKind::Segment => 1,
            ElementKind::Quad | ElementKind::Tri => 2,
            ElementKind::Hex | ElementKind::Tet => 3,
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(self, ElementKind::Tri | ElementKind::Tet)
    }

    /// Dimension of the polynomial space of order `order`.
    pub fn basis_size(self, order: usize) -> usize {
        let n = order;
        match self {
            ElementKind::Segment => n + 1,
            ElementKind::Quad => (n + 1) * (n + 1),
            ElementKind::Hex => (n + 1) * (n + 1) * (n + 1),
            ElementKind::Tri => (n + 1) * (n + 2) / 2,
            ElementKind::Tet => (n + 1) * (n + 2) * (n + 3) / 6,
        }
    }

    fn raw_vertices(self) -> &'static [[f64; 3]] {
        match self {
            ElementKind::Segment => &SEGMENT_VERTICES,
            ElementKind::Quad => &QUAD_VERTICES,
            ElementKind::Tri => &TRI_VERTICES,
            ElementKind::Hex => &HEX_VERTICES,
            ElementKind::Tet => &TET_VERTICES,
        }
    }

    pub fn vertices<T: Scalar>(self) -> Vec<Point<T>> {
        self.raw_vertices()
            .iter()
            .map(|v| [T::of(v[0]), T::of(v[1]), T::of(v[2])])
            .collect()
    }

    pub fn vertex_count(self) -> usize {
        self.raw_vertices().len()
    }

    /// Local faces as lists of reference vertex indices.
    pub fn faces(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Segment => SEGMENT_FACES,
            ElementKind::Quad => QUAD_FACES,
            ElementKind::Tri => TRI_FACES,
            ElementKind::Hex => HEX_FACES,
            ElementKind::Tet => TET_FACES,
        }
    }

    pub fn centroid<T: Scalar>(self) -> Point<T> {
        let verts = self.vertices::<T>();
        let n = T::of_usize(verts.len());
        let mut c = [T::zero(); 3];
        for v in &verts {
            for d in 0..3 {
                c[d] += v[d];
            }
        }
        c.map(|x| x / n)
    }

    /// Reference measure (length, area or volume).
    pub fn measure<T: Scalar>(self) -> T {
        T::of(match self {
            ElementKind::Segment => 2.0,
            ElementKind::Quad => 4.0,
            ElementKind::Tri => 2.0,
            ElementKind::Hex => 8.0,
            ElementKind::Tet => 4.0 / 3.0,
        })
    }

    /// Whether `x` lies in the closed element, up to `tol`.
    pub fn contains<T: Scalar>(self, x: &Point<T>, tol: T) -> bool {
        let d = self.dim();
        let lo = -T::one() - tol;
        if x[..d].iter().any(|&c| !(c >= lo)) {
            return false;
        }
        match self {
            ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => x[..d].iter().all(|&c| c <= T::one() + tol),
            ElementKind::Tri => x[0] + x[1] <= tol,
            ElementKind::Tet => x[0] + x[1] + x[2] <= -T::one() + tol,
        }
    }

    /// Euclidean projection of `x` onto the closed element: a box clamp for
    /// tensor elements and an exact projection onto the simplex otherwise.
    pub fn clamp<T: Scalar>(self, x: &Point<T>) -> Point<T> {
        let d = self.dim();
        let mut out = [T::zero(); 3];
        match self {
            ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => {
                for k in 0..d {
                    out[k] = x[k].max(-T::one()).min(T::one());
                }
            }
            ElementKind::Tri | ElementKind::Tet => {
                // Shifted coordinates z = x + 1 live in {z ≥ 0, Σz ≤ 2}.
                let cap = T::two();
                let mut z = [T::zero(); 3];
                for k in 0..d {
                    z[k] = x[k] + T::one();
                }
                let clipped: Vec<T> = z[..d].iter().map(|&v| v.max(T::zero())).collect();
                let sum: T = clipped.iter().copied().sum();
                let projected = if sum <= cap {
                    clipped
                } else {
                    project_onto_simplex_face(&z[..d], cap)
                };
                for k in 0..d {
                    out[k] = projected[k] - T::one();
                }
            }
        }
        out
    }
}

/// Projects `z` onto `{w ≥ 0, Σw = cap}` (sort-based algorithm).
fn project_onto_simplex_face<T: Scalar>(z: &[T], cap: T) -> Vec<T> {
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - cap) / T::of_usize(i + 1);
        if s - candidate > T::zero() {
            theta = candidate;
        }
    }
    z.iter().map(|&v| (v - theta).max(T::zero())).collect()
}

/// Maps collapsed coordinates (each in `[-1, 1]`) to reference coordinates.
/// Identity for tensor elements.
pub fn collapsed_to_reference<T: Scalar>(kind: ElementKind, c: &Point<T>) -> Point<T> {
    let one = T::one();
    let half = T::half();
    match kind {
        ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => *c,
        ElementKind::Tri => {
            let (a, b) = (c[0], c[1]);
            [(one + a) * (one - b) * half - one, b, T::zero()]
        }
        ElementKind::Tet => {
            let (a, b, cc) = (c[0], c[1], c[2]);
            let quarter = T::of(0.25);
            [
                (one + a) * (one - b) * (one - cc) * quarter - one,
                (one + b) * (one - cc) * half - one,
                cc,
            ]
        }
    }
}

/// Inverse of [`collapsed_to_reference`]. Singular edges and vertices map to
/// the `-1` collapsed coordinate.
pub fn reference_to_collapsed<T: Scalar>(kind: ElementKind, x: &Point<T>) -> Point<T> {
    let one = T::one();
    let two = T::two();
    let tiny = T::epsilon() * T::of(16.0);
    match kind {
        ElementKind::Segment | ElementKind::Quad | ElementKind::Hex => *x,
        ElementKind::Tri => {
            let denom = one - x[1];
            let a = if denom.abs() > tiny {
                two * (one + x[0]) / denom - one
            } else {
                -one
            };
            [a, x[1], T::zero()]
        }
        ElementKind::Tet => {
            let denom_a = -x[1] - x[2];
            let a = if denom_a.abs() > tiny {
                two * (one + x[0]) / denom_a - one
            } else {
                -one
            };
            let denom_b = one - x[2];
            let b = if denom_b.abs() > tiny {
                two * (one + x[1]) / denom_b - one
            } else {
                -one
            };
            [a, b, x[2]]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapsed_round_trip() {
        for kind in [ElementKind::Tri, ElementKind::Tet] {
            let c: [f64; 3] = [0.3, -0.4, 0.1];
            let c = if kind == ElementKind::Tri { [c[0], c[1], 0.0] } else { c };
            let x = collapsed_to_reference(kind, &c);
            assert!(kind.contains(&x, 1e-14));
            let back = reference_to_collapsed(kind, &x);
            for d in 0..kind.dim() {
                assert!((back[d] - c[d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn clamp_is_identity_inside_and_lands_on_boundary_outside() {
        for kind in [
            ElementKind::Segment,
            ElementKind::Quad,
            ElementKind::Tri,
            ElementKind::Hex,
            ElementKind::Tet,
        ] {
            let c = kind.centroid::<f64>();
            let back = kind.clamp(&c);
            assert!((0..3).all(|k| (back[k] - c[k]).abs() < 1e-15), "{kind:?}");
            let far = [5.0_f64, 4.0, 3.0];
            let p = kind.clamp(&far);
            assert!(kind.contains(&p, 1e-14), "{kind:?} {p:?}");
            assert!(!kind.contains(&far, 1e-14));
        }
    }

    #[test]
    fn simplex_clamp_is_a_projection() {
        // The projection of a point beyond the hypotenuse is its foot point.
        let p = ElementKind::Tri.clamp(&[0.5_f64, 0.5, 0.0]);
        assert!((p[0]).abs() < 1e-15 && (p[1]).abs() < 1e-15);
        let p = ElementKind::Tet.clamp(&[0.0_f64, 0.0, 0.0]);
        let third = -1.0 / 3.0;
        for k in 0..3 {
            assert!((p[k] - third).abs() < 1e-15);
        }
    }
}
