//! Wavefront OBJ export of two-dimensional immersions.

use std::fmt::Write as _;

use cforge::linalg::sym_eigen;
use cforge::ImmersionField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Projection {
    /// The first three coordinates of R^d.
    #[value(name = "first-3-coords")]
    First3,
    /// The three principal axes of the vertex cloud.
    #[value(name = "pca3")]
    Pca3,
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("unsupported projection: mesh export needs n = 2, snapshot has n = {0}")]
    UnsupportedProjection(usize),
    #[error("target dimension {0} is below 3")]
    TooFewCoordinates(usize),
}

/// Vertex (i, j) for i, j ∈ 0..=N; indices equal to N wrap to the first
/// sample and add the period to the linear part, so the seam is duplicated.
fn vertices(u: &ImmersionField) -> Vec<Vec<f64>> {
    let dom = u.domain();
    let (np, d) = (dom.points_per_axis, u.d);
    let mut out = Vec::with_capacity((np + 1) * (np + 1));
    for i in 0..=np {
        for j in 0..=np {
            let p = dom.flat_index(&[i % np, j % np]);
            let wrap = [(i / np) as f64 * dom.period, (j / np) as f64 * dom.period];
            let v = u.values.at(p);
            out.push((0..d).map(|r| v[r] + u.linear[r * 2] * wrap[0] + u.linear[r * 2 + 1] * wrap[1]).collect());
        }
    }
    out
}

fn project(verts: &[Vec<f64>], d: usize, projection: Projection) -> Vec<[f64; 3]> {
    match projection {
        Projection::First3 => verts.iter().map(|v| [v[0], v[1], v[2]]).collect(),
        Projection::Pca3 => {
            let k = verts.len() as f64;
            let mean: Vec<f64> = (0..d).map(|r| verts.iter().map(|v| v[r]).sum::<f64>() / k).collect();
            let mut cov = vec![0.0; d * d];
            for v in verts {
                for a in 0..d {
                    for b in 0..d {
                        cov[a * d + b] += (v[a] - mean[a]) * (v[b] - mean[b]) / k;
                    }
                }
            }
            // Ascending eigenvalues; the last three columns span the top axes.
            let (_, vecs) = sym_eigen(&cov, d);
            let axes: Vec<usize> = (0..3).map(|t| d - 1 - t).collect();
            verts
                .iter()
                .map(|v| {
                    let mut out = [0.0; 3];
                    for (o, &c) in out.iter_mut().zip(&axes) {
                        *o = (0..d).map(|r| (v[r] - mean[r]) * vecs[r * d + c]).sum();
                    }
                    out
                })
                .collect()
        }
    }
}

/// OBJ text: one vertex per seam-duplicated grid point, two triangles per
/// cell, coordinates with 9 significant digits.
pub fn to_obj(u: &ImmersionField, projection: Projection) -> Result<String, MeshError> {
    let n = u.n();
    if n != 2 {
        return Err(MeshError::UnsupportedProjection(n));
    }
    if u.d < 3 {
        return Err(MeshError::TooFewCoordinates(u.d));
    }
    let np = u.domain().points_per_axis;
    let pts = project(&vertices(u), u.d, projection);
    let mut s = String::new();
    writeln!(s, "# cforge mesh {}x{} grid, {} vertices, {} triangles", np, np, pts.len(), 2 * np * np).unwrap();
    for p in &pts {
        writeln!(s, "v {:.8e} {:.8e} {:.8e}", p[0], p[1], p[2]).unwrap();
    }
    let idx = |i: usize, j: usize| i * (np + 1) + j + 1;
    for i in 0..np {
        for j in 0..np {
            let (a, b, c, e) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            writeln!(s, "f {a} {b} {c}").unwrap();
            writeln!(s, "f {a} {c} {e}").unwrap();
        }
    }
    Ok(s)
}
