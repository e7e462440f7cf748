use nalgebra::{Complex, DMatrix, Schur};

use super::{PolyError, Polynomial};

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// Roots closer than this (relative to `1 + |z|`) are treated as one
/// multiple root and replaced by their centroid. A root of multiplicity `m`
/// splits into a ring of radius ~`eps^(1/m)` under eigenvalue perturbation,
/// while the ring's centroid stays accurate to working precision.
const CLUSTER_RELATIVE: f64 = 1e-4;

/// All complex roots of `p`, from the eigenvalues of its companion matrix
/// (real Schur decomposition), with clusters of a numerically split multiple
/// root collapsed onto their centroid.
pub fn roots(p: &Polynomial) -> Result<Vec<Complex<f64>>, PolyError> {
    p.check_for_stability()?;
    let n = p.degree();
    let lead = p.leading();
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for k in 0..n {
        companion[(k, n - 1)] = -p.coeff(k) / lead;
    }
    let schur = Schur::try_new(companion, SCHUR_EPS, SCHUR_MAX_ITER).ok_or(PolyError::ConvergenceFailure {
        degree: n,
        iterations: SCHUR_MAX_ITER,
        eps: SCHUR_EPS,
    })?;
    let raw: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    Ok(merge_clusters(raw))
}

fn merge_clusters(raw: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    let n = raw.len();
    // Single-linkage grouping through a tiny union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0 + raw[i].norm().max(raw[j].norm());
            if (raw[i] - raw[j]).norm() <= CLUSTER_RELATIVE * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut out = raw.clone();
    for i in 0..n {
        let root = find(&mut parent, i);
        let members: Vec<usize> = (0..n).filter(|&j| find(&mut parent, j) == root).collect();
        if members.len() > 1 {
            let sum: Complex<f64> = members.iter().map(|&j| raw[j]).sum();
            out[i] = sum / members.len() as f64;
        }
    }
    out
}

/// Largest real part among the roots of `p`.
///
/// Accuracy is well below `1e-6` for the degrees used here (at most 12),
/// including repeated roots.
pub fn max_real_part_of_roots(p: &Polynomial) -> Result<f64, PolyError> {
    Ok(roots(p)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}
