use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{ElementKind, ElementQuadrature, FaceQuadrature, OrthoBasis};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::scalar::{Point, Scalar};

use super::Velocity;

/// Upwind coupling through one face: `rhs -= own · v_e + other · v_nb`.
#[derive(Debug, Clone)]
struct FaceBlock<T> {
    neighbor: Option<usize>,
    /// `P_e × P_e`, row-major.
    own: Vec<T>,
    /// `P_e × P_nb`, row-major; empty on boundary faces.
    other: Vec<T>,
}

/// Semi-discrete dG operator for `u_t + a·∇u = 0` on a fixed mesh.
///
/// With the orthonormal modal basis and affine maps the mass matrix is
/// `|det J| I`, so the operator is stored directly as `M⁻¹ (A - F)` with one
/// dense volume block per element and two flux blocks per face.
#[derive(Debug, Clone)]
pub struct DgOperator<T> {
    mesh: Arc<Mesh<T>>,
    order: usize,
    bases: HashMap<ElementKind, Arc<OrthoBasis<T>>>,
    volume: Vec<Vec<T>>,
    faces: Vec<Vec<FaceBlock<T>>>,
    max_speed: T,
}

fn measure<T: Scalar>(verts: &[Point<T>]) -> T {
    let sub = |a: &Point<T>, b: &Point<T>| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let len = |v: &Point<T>| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    match verts.len() {
        1 => T::one(),
        2 => len(&sub(&verts[1], &verts[0])),
        n => {
            let e1 = sub(&verts[1], &verts[0]);
            let e2 = sub(&verts[n - 1], &verts[0]);
            let area = len(&cross(&e1, &e2));
            if n == 3 {
                area * T::half()
            } else {
                area
            }
        }
    }
}

fn cross<T: Scalar>(a: &Point<T>, b: &Point<T>) -> Point<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Outward unit normal of a face with vertices `verts` of an element with
/// centroid `inside`.
fn outward_normal<T: Scalar>(dim: usize, verts: &[Point<T>], inside: &Point<T>) -> Point<T> {
    let mut n = match dim {
        1 => [T::one(), T::zero(), T::zero()],
        2 => {
            let t = [verts[1][0] - verts[0][0], verts[1][1] - verts[0][1]];
            [t[1], -t[0], T::zero()]
        }
        _ => {
            let e1 = [
                verts[1][0] - verts[0][0],
                verts[1][1] - verts[0][1],
                verts[1][2] - verts[0][2],
            ];
            let last = verts.len() - 1;
            let e2 = [
                verts[last][0] - verts[0][0],
                verts[last][1] - verts[0][1],
                verts[last][2] - verts[0][2],
            ];
            cross(&e1, &e2)
        }
    };
    let len = n.iter().map(|&c| c * c).sum::<T>().sqrt();
    n = n.map(|c| c / len);
    let outward: T = (0..3).map(|k| n[k] * (verts[0][k] - inside[k])).sum();
    if outward < T::zero() {
        n = n.map(|c| -c);
    }
    n
}

fn dot3<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl<T: Scalar> DgOperator<T> {
    /// Assembles the operator for polynomial order `order` with volume and
    /// face quadratures of `order + 2` points per direction.
    pub fn new(mesh: Arc<Mesh<T>>, order: usize, velocity: &Velocity<T>) -> Result<Self> {
        let mut bases = HashMap::new();
        for el in &mesh.elements {
            if let std::collections::hash_map::Entry::Vacant(slot) = bases.entry(el.kind) {
                slot.insert(Arc::new(OrthoBasis::with_default_quadrature(el.kind, order)?));
            }
        }
        let q = order + 2;
        let mut volume = Vec::with_capacity(mesh.len());
        let mut faces = Vec::with_capacity(mesh.len());
        let mut max_speed = T::zero();
        let mut values = Vec::new();
        let mut grads = Vec::new();
        let mut nb_values = Vec::new();
        for (e, el) in mesh.elements.iter().enumerate() {
            let basis = &bases[&el.kind];
            let p = basis.size();
            let d = el.kind.dim();
            let quad = basis.quadrature();
            let inv_j = el.map.inverse_jacobian();
            values.resize(p, T::zero());
            grads.resize(p, [T::zero(); 3]);

            // A_ij = Σ_q w_q (J⁻¹ a · ∇_ξ ψ_i) ψ_j; the |det J| factors of A
            // and M cancel.
            let mut block = vec![T::zero(); p * p];
            for (xi, &w) in quad.points.iter().zip(&quad.weights) {
                let a = velocity.at(&el.map.to_physical(xi));
                max_speed = max_speed.max(dot3(&a, &a).sqrt());
                let mut b = [T::zero(); 3];
                for r in 0..d {
                    for c in 0..d {
                        b[r] += inv_j[r][c] * a[c];
                    }
                }
                basis.fill_values_and_gradients(xi, &mut values, &mut grads);
                for i in 0..p {
                    let wi = w * dot3(&b, &grads[i]);
                    if wi == T::zero() {
                        continue;
                    }
                    for j in 0..p {
                        block[i * p + j] += wi * values[j];
                    }
                }
            }
            volume.push(block);

            let centroid = el.map.to_physical(&el.kind.centroid());
            let mut blocks = Vec::with_capacity(el.kind.faces().len());
            for (f, link) in mesh.links[e].iter().enumerate() {
                let verts = mesh.face_vertices(e, f);
                let normal = outward_normal(d, &verts, &centroid);
                let scale = measure(&verts) / el.map.det();
                let rule = FaceQuadrature::new(&verts, q)?;
                let neighbor = link.as_ref().map(|l| l.neighbor);
                let nb = link.as_ref().map(|l| {
                    let nel = &mesh.elements[l.neighbor];
                    (nel, bases[&nel.kind].clone(), l.shift)
                });
                let pn = nb.as_ref().map_or(0, |(_, b, _)| b.size());
                let mut own = vec![T::zero(); p * p];
                let mut other = vec![T::zero(); p * pn];
                nb_values.resize(pn, T::zero());
                for (x, &w) in rule.points.iter().zip(&rule.weights) {
                    let an = dot3(&velocity.at(x), &normal);
                    let c = w * scale * an;
                    basis.fill_values(&el.map.to_reference(x), &mut values);
                    if an >= T::zero() {
                        for i in 0..p {
                            for j in 0..p {
                                own[i * p + j] += c * values[i] * values[j];
                            }
                        }
                    } else if let Some((nel, nbasis, shift)) = &nb {
                        let y = [x[0] + shift[0], x[1] + shift[1], x[2] + shift[2]];
                        let eta = nel.kind.clamp(&nel.map.to_reference(&y));
                        nbasis.fill_values(&eta, &mut nb_values);
                        for i in 0..p {
                            for j in 0..pn {
                                other[i * pn + j] += c * values[i] * nb_values[j];
                            }
                        }
                    }
                }
                blocks.push(FaceBlock { neighbor, own, other });
            }
            faces.push(blocks);
        }
        Ok(Self {
            mesh,
            order,
            bases,
            volume,
            faces,
            max_speed,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis(&self, kind: ElementKind) -> &Arc<OrthoBasis<T>> {
        &self.bases[&kind]
    }

    pub fn element_basis(&self, e: usize) -> &Arc<OrthoBasis<T>> {
        &self.bases[&self.mesh.elements[e].kind]
    }

    /// Largest `|a|` over the volume quadrature points.
    pub fn max_speed(&self) -> T {
        self.max_speed
    }

    /// Time derivative of the modal coefficients.
    pub fn rhs(&self, coeffs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        if coeffs.len() != self.mesh.len() {
            return Err(Error::InvalidParameter(format!(
                "state has {} elements, mesh has {}",
                coeffs.len(),
                self.mesh.len()
            )));
        }
        for (e, v) in coeffs.iter().enumerate() {
            let expected = self.element_basis(e).size();
            if v.len() != expected {
                return Err(Error::CoefficientLength {
                    expected,
                    found: v.len(),
                });
            }
        }
        Ok((0..self.mesh.len())
            .into_par_iter()
            .map(|e| self.element_rhs(e, coeffs))
            .collect())
    }

    fn element_rhs(&self, e: usize, coeffs: &[Vec<T>]) -> Vec<T> {
        let v = &coeffs[e];
        let p = v.len();
        let mut out = vec![T::zero(); p];
        matvec_add(&self.volume[e], v, &mut out, T::one());
        for face in &self.faces[e] {
            matvec_add(&face.own, v, &mut out, -T::one());
            if let Some(nb) = face.neighbor {
                matvec_add(&face.other, &coeffs[nb], &mut out, -T::one());
            }
        }
        out
    }
}

fn matvec_add<T: Scalar>(m: &[T], v: &[T], out: &mut [T], sign: T) {
    let cols = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * cols..(i + 1) * cols];
        let mut acc = T::zero();
        for (&a, &b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o += sign * acc;
    }
}

/// Values of each element's basis on a Gauss grid with `points` nodes per
/// direction, with the matching physical weights `w |det J|`.
#[derive(Debug, Clone)]
pub(super) struct SampleTables<T> {
    pub kinds: HashMap<ElementKind, (ElementQuadrature<T>, Vec<Vec<T>>)>,
}

impl<T: Scalar> SampleTables<T> {
    pub fn new(op: &DgOperator<T>, points: usize) -> Result<Self> {
        let mut kinds = HashMap::new();
        for (&kind, basis) in &op.bases {
            let quad = ElementQuadrature::new(kind, points)?;
            let mut table = Vec::with_capacity(quad.points.len());
            for x in &quad.points {
                let mut row = vec![T::zero(); basis.size()];
                basis.fill_values(x, &mut row);
                table.push(row);
            }
            kinds.insert(kind, (quad, table));
        }
        Ok(Self { kinds })
    }
}
