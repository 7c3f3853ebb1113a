//! Legacy ASCII VTK export. Vertices are duplicated per element so that
//! discontinuous fields keep their element-local vertex values.

use std::io::{self, Write};

use super::mesh::Mesh;
use crate::basis::ElementKind;
use crate::scalar::Scalar;

fn cell_type(kind: ElementKind) -> u8 {
    match kind {
        ElementKind::Segment => 3,
        ElementKind::Tri => 5,
        ElementKind::Quad => 9,
        ElementKind::Tet => 10,
        ElementKind::Hex => 12,
    }
}

/// A named field given as `values[element][local vertex]`.
pub struct VertexField<'a, T> {
    pub name: &'a str,
    pub values: &'a [Vec<T>],
}

pub fn write_vtk<T: Scalar, W: Write>(
    out: &mut W,
    mesh: &Mesh<T>,
    title: &str,
    fields: &[VertexField<'_, T>],
) -> io::Result<()> {
    let n_points: usize = mesh.elements.iter().map(|e| e.vertices.len()).sum();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n_points} double")?;
    for el in &mesh.elements {
        for v in &el.vertices {
            writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
    }
    let size: usize = mesh.elements.iter().map(|e| e.vertices.len() + 1).sum();
    writeln!(out, "CELLS {} {size}", mesh.len())?;
    let mut next = 0;
    for el in &mesh.elements {
        write!(out, "{}", el.vertices.len())?;
        for _ in &el.vertices {
            write!(out, " {next}")?;
            next += 1;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.len())?;
    for el in &mesh.elements {
        writeln!(out, "{}", cell_type(el.kind))?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {n_points}")?;
        for field in fields {
            writeln!(out, "SCALARS {} double 1", field.name)?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for (el, vals) in mesh.elements.iter().zip(field.values) {
                if vals.len() != el.vertices.len() {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidInput,
                        format!(
                            "field {} has {} values for a {}-vertex element",
                            field.name,
                            vals.len(),
                            el.vertices.len()
                        ),
                    ));
                }
                for v in vals {
                    writeln!(out, "{v:e}")?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_structured_mesh, MeshLayout};

    #[test]
    fn writes_header_cells_and_data() {
        let mesh = make_structured_mesh::<f64>([0.0; 3], [1.0, 1.0, 0.0], [1, 1, 1], MeshLayout::Triangles, [false; 3])
            .unwrap();
        let values = vec![vec![1.0, 2.0, 3.0]; 2];
        let mut buf = Vec::new();
        write_vtk(
            &mut buf,
            &mesh,
            "t",
            &[VertexField {
                name: "u",
                values: &values,
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("POINTS 6 double"));
        assert!(text.contains("CELLS 2 8"));
        assert!(text.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(text.contains("POINT_DATA 6"));
    }
}
