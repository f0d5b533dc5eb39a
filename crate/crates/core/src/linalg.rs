use std::f64::consts::TAU;

use crate::{CMatrix, C64};

pub(crate) fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).camax()
}

/// Eigenpairs of a unitary matrix, sorted by eigenphase in `[0, 2π)`.
pub(crate) struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub eigenvalues: Vec<C64>,
    /// Orthonormal eigenvectors as columns, in the order of `phases`.
    pub vectors: CMatrix,
    pub residuals: Vec<f64>,
}

/// Complex Schur factorization `U = Q T Q†`. For a normal matrix `T` is
/// diagonal up to rounding, so the columns of `Q` form an orthonormal
/// eigenbasis even inside degenerate clusters.
pub(crate) fn unitary_eigen(u: &CMatrix) -> Option<UnitaryEigen> {
    let schur = u.clone().try_schur(f64::EPSILON, 0)?;
    let (q, t) = schur.unpack();
    let n = u.nrows();
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let mut th = t[(i, i)].arg();
            if th < 0.0 {
                th += TAU;
            }
            if th >= TAU {
                th -= TAU;
            }
            (th, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut vectors = CMatrix::zeros(n, n);
    let mut phases = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &(th, src)) in order.iter().enumerate() {
        let mut col = q.column(src).into_owned();
        let norm = col.norm();
        col.unscale_mut(norm);
        vectors.set_column(dst, &col);
        phases.push(th);
        eigenvalues.push(t[(src, src)]);
    }
    let av = u * &vectors;
    let residuals = (0..n)
        .map(|l| {
            let lambda = C64::from_polar(1.0, phases[l]);
            (av.column(l) - vectors.column(l) * lambda).norm()
        })
        .collect();
    Some(UnitaryEigen {
        phases,
        eigenvalues,
        vectors,
        residuals,
    })
}

/// Groups sorted eigenphases into clusters whose neighbouring eigenvalues are
/// closer than `eps` on the unit circle, including across the `2π` seam.
pub(crate) fn phase_clusters(phases: &[f64], eps: f64) -> Vec<Vec<usize>> {
    let n = phases.len();
    if n == 0 {
        return Vec::new();
    }
    let chord = |a: f64, b: f64| (C64::from_polar(1.0, a) - C64::from_polar(1.0, b)).norm();
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for l in 1..n {
        if chord(phases[l - 1], phases[l]) < eps {
            clusters.last_mut().unwrap().push(l);
        } else {
            clusters.push(vec![l]);
        }
    }
    if clusters.len() > 1 && chord(phases[n - 1], phases[0]) < eps {
        let last = clusters.pop().unwrap();
        clusters[0].splice(0..0, last);
    }
    clusters
}
