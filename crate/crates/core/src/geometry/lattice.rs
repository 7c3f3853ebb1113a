use crate::basis::quadrature::unflatten;
use crate::basis::{collapsed_to_reference, OrthoBasis};
use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

/// Violation-detection points on a reference element: the quadrature grid
/// followed by the centroids of its `(Q-1)^d` index cells.
///
/// On simplices the cells live in collapsed coordinates; each centroid is the
/// average of the cell's corner quadrature points mapped to the element.
#[derive(Debug, Clone)]
pub struct Lattice<T> {
    pub points: Vec<Point<T>>,
    /// Number of leading points that are quadrature points.
    pub grid_len: usize,
}

impl<T> Lattice<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_lattice<T: Scalar>(basis: &OrthoBasis<T>) -> Result<Lattice<T>> {
    let quad = basis.quadrature();
    let q = quad.q;
    if q < 2 {
        return Err(Error::LatticeTooSmall(q));
    }
    let kind = basis.kind();
    let d = kind.dim();
    let mut points = quad.points.clone();
    let grid_len = points.len();

    let cells = (q - 1).pow(d as u32);
    let corners = 1usize << d;
    let inv = T::one() / T::of_usize(corners);
    for cell in 0..cells {
        let base = unflatten(cell, q - 1, d);
        let mut centroid = [T::zero(); 3];
        for corner in 0..corners {
            let mut c = [T::zero(); 3];
            for k in 0..d {
                let offset = (corner >> k) & 1;
                c[k] = quad.axes[k][base[k] + offset];
            }
            let x = collapsed_to_reference(kind, &c);
            for k in 0..d {
                centroid[k] += x[k];
            }
        }
        points.push(centroid.map(|v| v * inv));
    }
    Ok(Lattice { points, grid_len })
}

/// [`build_lattice`] followed by the boundary trace of the quadrature grid:
/// the points of the grid extended by `±1` in every (collapsed) direction
/// that have at least one endpoint coordinate. Gauss points never reach the
/// element boundary, where violations of projected fields tend to peak.
pub fn build_lattice_with_boundary<T: Scalar>(basis: &OrthoBasis<T>) -> Result<Lattice<T>> {
    let mut lattice = build_lattice(basis)?;
    let quad = basis.quadrature();
    let kind = basis.kind();
    let d = kind.dim();
    let one = T::one();
    let axes: Vec<Vec<T>> = quad
        .axes
        .iter()
        .map(|a| {
            let mut ext = Vec::with_capacity(a.len() + 2);
            ext.push(-one);
            ext.extend_from_slice(a);
            ext.push(one);
            ext
        })
        .collect();
    let m = quad.q + 2;
    let mut seen: Vec<Point<T>> = Vec::new();
    for flat in 0..m.pow(d as u32) {
        let idx = unflatten(flat, m, d);
        if (0..d).all(|k| idx[k] != 0 && idx[k] != m - 1) {
            continue;
        }
        let mut c = [T::zero(); 3];
        for k in 0..d {
            c[k] = axes[k][idx[k]];
        }
        let x = collapsed_to_reference(kind, &c);
        if !seen.contains(&x) {
            seen.push(x);
        }
    }
    lattice.points.extend(seen);
    Ok(lattice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_basis, ElementKind};

    #[test]
    fn counts_match_grid_plus_staggered_grid() {
        let cases = [
            (ElementKind::Quad, 1, 3, 13),
            (ElementKind::Segment, 2, 4, 7),
            (ElementKind::Hex, 1, 3, 35),
            (ElementKind::Tri, 2, 4, 16 + 9),
            (ElementKind::Tet, 1, 3, 27 + 8),
        ];
        for (kind, n, q, count) in cases {
            let basis = make_basis::<f64>(kind, n, q).unwrap();
            let lattice = build_lattice(&basis).unwrap();
            assert_eq!(lattice.len(), count, "{kind:?}");
            assert!(lattice.points.iter().all(|p| kind.contains(p, 1e-14)));
        }
    }

    #[test]
    fn staggered_points_differ_from_grid_points() {
        let basis = make_basis::<f64>(ElementKind::Quad, 3, 5).unwrap();
        let lattice = build_lattice(&basis).unwrap();
        let (grid, stag) = lattice.points.split_at(lattice.grid_len);
        for s in stag {
            assert!(grid.iter().all(|g| (g[0] - s[0]).abs() + (g[1] - s[1]).abs() > 1e-6));
        }
    }

    #[test]
    fn boundary_trace_lies_on_the_boundary() {
        let basis = make_basis::<f64>(ElementKind::Quad, 3, 5).unwrap();
        let plain = build_lattice(&basis).unwrap();
        let full = build_lattice_with_boundary(&basis).unwrap();
        assert_eq!(full.len(), plain.len() + 7 * 7 - 5 * 5);
        for p in &full.points[plain.len()..] {
            assert!(p[0].abs() == 1.0 || p[1].abs() == 1.0);
        }
        let basis = make_basis::<f64>(ElementKind::Tet, 2, 4).unwrap();
        let full = build_lattice_with_boundary(&basis).unwrap();
        assert!(full.points.iter().all(|p| ElementKind::Tet.contains(p, 1e-14)));
        assert!(full.points.contains(&[-1.0, -1.0, 1.0]));
    }

    #[test]
    fn single_point_rule_is_rejected() {
        let basis = make_basis::<f64>(ElementKind::Quad, 0, 1).unwrap();
        assert!(matches!(build_lattice(&basis), Err(Error::LatticeTooSmall(1))));
    }
}
