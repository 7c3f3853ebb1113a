use std::collections::HashMap;

use crate::basis::ElementKind;
use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

type Mat3<T> = [[T; 3]; 3];

/// Affine map `x = X0 + J (ξ - ξ0)` from a reference element to a physical
/// element, where `ξ0` is reference vertex 0 and `X0` its image.
#[derive(Debug, Clone)]
pub struct AffineMap<T> {
    dim: usize,
    origin: Point<T>,
    ref_origin: Point<T>,
    jacobian: Mat3<T>,
    inverse: Mat3<T>,
    det: T,
}

/// Reference vertices whose offsets from vertex 0 span the element.
fn spanning_vertices(kind: ElementKind) -> &'static [usize] {
    match kind {
        ElementKind::Segment => &[1],
        ElementKind::Quad => &[1, 3],
        ElementKind::Tri => &[1, 2],
        ElementKind::Hex => &[1, 3, 4],
        ElementKind::Tet => &[1, 2, 3],
    }
}

impl<T: Scalar> AffineMap<T> {
    /// Builds the map from physical vertices listed in reference order.
    /// Returns `None` if the vertices are not an affine image of the
    /// reference element.
    pub fn from_vertices(kind: ElementKind, vertices: &[Point<T>]) -> Option<Self> {
        if vertices.len() != kind.vertex_count() {
            return None;
        }
        let d = kind.dim();
        let origin = vertices[0];
        let ref_vertices = kind.vertices::<T>();
        let ref_origin = ref_vertices[0];
        let mut jacobian = [[T::zero(); 3]; 3];
        for k in d..3 {
            jacobian[k][k] = T::one();
        }
        for (col, &v) in spanning_vertices(kind).iter().enumerate() {
            for row in 0..d {
                jacobian[row][col] = (vertices[v][row] - origin[row]) * T::half();
            }
        }
        let det = det3(&jacobian);
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let inverse = inverse3(&jacobian, det);
        let map = Self {
            dim: d,
            origin,
            ref_origin,
            jacobian,
            inverse,
            det,
        };
        let scale = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(T::one(), |m, c| m.max(c.abs()));
        let tol = T::of(1e-10) * scale;
        for (rv, pv) in ref_vertices.iter().zip(vertices) {
            let image = map.to_physical(rv);
            if (0..d).any(|k| (image[k] - pv[k]).abs() > tol) {
                return None;
            }
        }
        Some(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_physical(&self, xi: &Point<T>) -> Point<T> {
        let mut x = [T::zero(); 3];
        for r in 0..self.dim {
            x[r] = self.origin[r];
            for c in 0..self.dim {
                x[r] += self.jacobian[r][c] * (xi[c] - self.ref_origin[c]);
            }
        }
        x
    }

    pub fn to_reference(&self, x: &Point<T>) -> Point<T> {
        let mut xi = [T::zero(); 3];
        for r in 0..self.dim {
            xi[r] = self.ref_origin[r];
            for c in 0..self.dim {
                xi[r] += self.inverse[r][c] * (x[c] - self.origin[c]);
            }
        }
        xi
    }

    /// `∂x_r/∂ξ_c` stored as `[r][c]`.
    pub fn jacobian(&self) -> &Mat3<T> {
        &self.jacobian
    }

    /// `∂ξ_r/∂x_c` stored as `[r][c]`.
    pub fn inverse_jacobian(&self) -> &Mat3<T> {
        &self.inverse
    }

    pub fn det(&self) -> T {
        self.det
    }

    /// Converts a reference gradient to a physical one: `J^{-T} ∇_ξ`.
    pub fn physical_gradient(&self, g: &Point<T>) -> Point<T> {
        let mut out = [T::zero(); 3];
        for c in 0..self.dim {
            for r in 0..self.dim {
                out[c] += self.inverse[r][c] * g[r];
            }
        }
        out
    }
}

fn det3<T: Scalar>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse3<T: Scalar>(m: &Mat3<T>, det: T) -> Mat3<T> {
    let inv_det = T::one() / det;
    let mut out = [[T::zero(); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            // Cofactor of (c, r) gives the adjugate entry (r, c).
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            out[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) * inv_det;
        }
    }
    out
}

/// A mesh cell: its shape, physical vertices in reference order and map.
#[derive(Debug, Clone)]
pub struct Element<T> {
    pub kind: ElementKind,
    pub vertices: Vec<Point<T>>,
    pub map: AffineMap<T>,
}

/// Connection of a local face to the matching face of a neighbouring element.
/// `shift` translates points on this face onto the neighbour's face; it is
/// nonzero only across periodic boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceLink<T> {
    pub neighbor: usize,
    pub neighbor_face: usize,
    pub shift: Point<T>,
}

/// Conforming mesh of affine elements on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub dim: usize,
    pub lo: Point<T>,
    pub hi: Point<T>,
    pub periodic: [bool; 3],
    pub elements: Vec<Element<T>>,
    /// `links[e][f]` is `None` on non-periodic domain boundaries.
    pub links: Vec<Vec<Option<FaceLink<T>>>>,
}

/// Element arrangement for [`make_structured_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshLayout {
    Segments,
    Quads,
    /// Every quad cell split along its `v0-v2` diagonal.
    Triangles,
    /// Quads, except that the middle half of the cell rows is split into
    /// triangles. A 4×4 grid gives 16 triangles and 8 quads.
    Composite,
    Hexes,
    /// Every hex cell split into six tetrahedra around its `v0-v6` diagonal.
    Tets,
}

impl MeshLayout {
    pub fn dim(self) -> usize {
        match self {
            MeshLayout::Segments => 1,
            MeshLayout::Quads | MeshLayout::Triangles | MeshLayout::Composite => 2,
            MeshLayout::Hexes | MeshLayout::Tets => 3,
        }
    }
}

const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 2, 3, 6],
    [0, 3, 7, 6],
    [0, 7, 4, 6],
    [0, 4, 5, 6],
    [0, 5, 1, 6],
];

/// Builds a structured mesh of `counts` cells per direction on `[lo, hi]`.
pub fn make_structured_mesh<T: Scalar>(
    lo: Point<T>,
    hi: Point<T>,
    counts: [usize; 3],
    layout: MeshLayout,
    periodic: [bool; 3],
) -> Result<Mesh<T>> {
    let d = layout.dim();
    for k in 0..d {
        if counts[k] == 0 {
            return Err(Error::InvalidParameter(format!(
                "cell count in direction {k} must be positive"
            )));
        }
        if !(hi[k] > lo[k]) {
            return Err(Error::InvalidParameter(format!("empty domain in direction {k}")));
        }
    }
    let n = [
        counts[0],
        if d > 1 { counts[1] } else { 1 },
        if d > 2 { counts[2] } else { 1 },
    ];
    let coord = |k: usize, i: usize| -> T {
        if i == n[k] {
            hi[k]
        } else {
            lo[k] + (hi[k] - lo[k]) * T::of_usize(i) / T::of_usize(n[k])
        }
    };
    let mut cells: Vec<(ElementKind, Vec<Point<T>>)> = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let x = [coord(0, i), coord(0, i + 1)];
                let y = if d > 1 {
                    [coord(1, j), coord(1, j + 1)]
                } else {
                    [T::zero(); 2]
                };
                let z = if d > 2 {
                    [coord(2, k), coord(2, k + 1)]
                } else {
                    [T::zero(); 2]
                };
                let square = [
                    [x[0], y[0], z[0]],
                    [x[1], y[0], z[0]],
                    [x[1], y[1], z[0]],
                    [x[0], y[1], z[0]],
                ];
                match layout {
                    MeshLayout::Segments => cells.push((ElementKind::Segment, vec![square[0], square[1]])),
                    MeshLayout::Quads => cells.push((ElementKind::Quad, square.to_vec())),
                    MeshLayout::Triangles => split_square(&square, &mut cells),
                    MeshLayout::Composite => {
                        let band = n[1] / 4;
                        if j >= band && j < n[1] - band {
                            split_square(&square, &mut cells);
                        } else {
                            cells.push((ElementKind::Quad, square.to_vec()));
                        }
                    }
                    MeshLayout::Hexes | MeshLayout::Tets => {
                        let mut cube = square.to_vec();
                        cube.extend(square.iter().map(|p| [p[0], p[1], z[1]]));
                        if layout == MeshLayout::Hexes {
                            cells.push((ElementKind::Hex, cube));
                        } else {
                            for tet in KUHN_TETS {
                                let mut verts: Vec<Point<T>> = tet.iter().map(|&v| cube[v]).collect();
                                if tet_volume_sign(&verts) < T::zero() {
                                    verts.swap(1, 2);
                                }
                                cells.push((ElementKind::Tet, verts));
                            }
                        }
                    }
                }
            }
        }
    }
    Mesh::new(cells, lo, hi, periodic)
}

fn split_square<T: Scalar>(square: &[Point<T>; 4], cells: &mut Vec<(ElementKind, Vec<Point<T>>)>) {
    cells.push((ElementKind::Tri, vec![square[0], square[1], square[2]]));
    cells.push((ElementKind::Tri, vec![square[0], square[2], square[3]]));
}

fn tet_volume_sign<T: Scalar>(v: &[Point<T>]) -> T {
    let mut m = [[T::zero(); 3]; 3];
    for c in 0..3 {
        for r in 0..3 {
            m[r][c] = v[c + 1][r] - v[0][r];
        }
    }
    det3(&m)
}

impl<T: Scalar> Mesh<T> {
    /// Builds maps and face connectivity for the given cells on `[lo, hi]`.
    pub fn new(
        cells: Vec<(ElementKind, Vec<Point<T>>)>,
        lo: Point<T>,
        hi: Point<T>,
        periodic: [bool; 3],
    ) -> Result<Self> {
        let dim = cells.first().map_or(1, |(k, _)| k.dim());
        let mut elements = Vec::with_capacity(cells.len());
        for (id, (kind, vertices)) in cells.into_iter().enumerate() {
            if kind.dim() != dim {
                return Err(Error::InvalidParameter("mixed element dimensions in one mesh".into()));
            }
            let map = AffineMap::from_vertices(kind, &vertices).ok_or(Error::NonAffine { element: id })?;
            if map.det() <= T::zero() {
                return Err(Error::InvertedElement { element: id });
            }
            elements.push(Element { kind, vertices, map });
        }
        let mut mesh = Self {
            dim,
            lo,
            hi,
            periodic,
            elements,
            links: Vec::new(),
        };
        mesh.links = mesh.connect()?;
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Physical vertices of local face `f` of element `e`.
    pub fn face_vertices(&self, e: usize, f: usize) -> Vec<Point<T>> {
        let el = &self.elements[e];
        el.kind.faces()[f].iter().map(|&v| el.vertices[v]).collect()
    }

    /// Shortest element edge length.
    pub fn h_min(&self) -> T {
        let mut h = T::infinity();
        for el in &self.elements {
            for (i, a) in el.vertices.iter().enumerate() {
                for b in &el.vertices[i + 1..] {
                    let dist = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<T>().sqrt();
                    h = h.min(dist);
                }
            }
        }
        h
    }

    fn face_key(&self, centroid: &Point<T>) -> ([i64; 3], bool) {
        let mut c = *centroid;
        let mut on_open_boundary = false;
        for k in 0..self.dim {
            let len = self.hi[k] - self.lo[k];
            let eps = T::of(1e-9) * len;
            if self.periodic[k] {
                c[k] = c[k] - len * ((c[k] - self.lo[k]) / len).floor();
                if c[k] > self.hi[k] - eps {
                    c[k] -= len;
                }
            } else if (c[k] - self.lo[k]).abs() < eps || (c[k] - self.hi[k]).abs() < eps {
                on_open_boundary = true;
            }
        }
        let key = c.map(|v| (v.to_f64().unwrap_or(f64::NAN) * 1e8).round() as i64);
        (key, on_open_boundary)
    }

    fn connect(&self) -> Result<Vec<Vec<Option<FaceLink<T>>>>> {
        let mut buckets: HashMap<[i64; 3], Vec<(usize, usize)>> = HashMap::new();
        let mut centroids: Vec<Vec<Point<T>>> = Vec::with_capacity(self.len());
        let mut boundary: Vec<Vec<bool>> = Vec::with_capacity(self.len());
        for (e, el) in self.elements.iter().enumerate() {
            let mut cs = Vec::new();
            let mut bs = Vec::new();
            for f in 0..el.kind.faces().len() {
                let verts = self.face_vertices(e, f);
                let inv = T::one() / T::of_usize(verts.len());
                let mut c = [T::zero(); 3];
                for v in &verts {
                    for k in 0..3 {
                        c[k] += v[k] * inv;
                    }
                }
                let (key, open) = self.face_key(&c);
                buckets.entry(key).or_default().push((e, f));
                cs.push(c);
                bs.push(open);
            }
            centroids.push(cs);
            boundary.push(bs);
        }

        let mut links: Vec<Vec<Option<FaceLink<T>>>> = self
            .elements
            .iter()
            .map(|el| vec![None; el.kind.faces().len()])
            .collect();
        for (e, el) in self.elements.iter().enumerate() {
            for f in 0..el.kind.faces().len() {
                let (key, _) = self.face_key(&centroids[e][f]);
                let partners: Vec<(usize, usize)> = buckets[&key].iter().copied().filter(|&p| p != (e, f)).collect();
                match partners.as_slice() {
                    [] if boundary[e][f] => {}
                    [(ne, nf)] => {
                        let mut shift = [T::zero(); 3];
                        for k in 0..3 {
                            shift[k] = centroids[*ne][*nf][k] - centroids[e][f][k];
                        }
                        if !self.faces_coincide(e, f, *ne, *nf, &shift) {
                            return Err(Error::NonConformingFace { element: e, face: f });
                        }
                        links[e][f] = Some(FaceLink {
                            neighbor: *ne,
                            neighbor_face: *nf,
                            shift,
                        });
                    }
                    _ => return Err(Error::NonConformingFace { element: e, face: f }),
                }
            }
        }
        Ok(links)
    }

    fn faces_coincide(&self, e: usize, f: usize, ne: usize, nf: usize, shift: &Point<T>) -> bool {
        let mine = self.face_vertices(e, f);
        let theirs = self.face_vertices(ne, nf);
        if mine.len() != theirs.len() {
            return false;
        }
        let scale = (0..self.dim).fold(T::zero(), |m, k| m.max(self.hi[k] - self.lo[k]));
        let tol = T::of(1e-9) * scale.max(T::one());
        mine.iter().all(|p| {
            theirs
                .iter()
                .any(|q| (0..3).all(|k| (p[k] + shift[k] - q[k]).abs() <= tol))
        })
    }
}
