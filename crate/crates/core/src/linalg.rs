//! Thin SVD of a tall matrix given by its columns.
//!
//! One-sided (Hestenes) Jacobi: plane rotations are applied on the right until
//! all column pairs are orthogonal. This diagonalizes the small `m x m` Gram
//! matrix `Y^T Y` implicitly, without ever forming it, so small singular values
//! keep their absolute accuracy.

const MAX_SWEEPS: usize = 80;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Left singular vectors and singular values of the matrix whose columns are
/// `cols` (all of length `rows`).
///
/// Returns `min(rows, cols.len())` pairs sorted by descending singular value.
/// The left vectors are always orthonormal: directions whose singular value is
/// negligible are completed deterministically from the standard basis.
pub fn thin_svd_left(cols: &[Vec<f64>], rows: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = cols.len();
    let mut work: Vec<Vec<f64>> = cols.to_vec();
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = dot(&work[p], &work[p]);
                let beta = dot(&work[q], &work[q]);
                let gamma = dot(&work[p], &work[q]);
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = work.split_at_mut(q);
                let (cp, cq) = (&mut head[p], &mut tail[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let a = *x;
                    let b = *y;
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = work.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // stable sort keeps lower column first on exact ties
    order.sort_by(|&a, &b| {
        norms[b]
            .partial_cmp(&norms[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let r = rows.min(m);
    let top = order.first().map(|&i| norms[i]).unwrap_or(0.0);
    let cutoff = top * 1e-13;

    let mut sigmas = Vec::with_capacity(r);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut next_unit = 0usize;
    for &j in order.iter().take(r) {
        let sigma = norms[j];
        let mut v = if sigma > cutoff && sigma > 0.0 {
            let mut v = work[j].clone();
            v.iter_mut().for_each(|x| *x /= sigma);
            orthonormalize_against(&mut v, &basis)
        } else {
            None
        };
        while v.is_none() {
            let mut e = vec![0.0; rows];
            e[next_unit] = 1.0;
            next_unit += 1;
            v = orthonormalize_against(&mut e, &basis);
        }
        let v = v.expect("completion found");
        sigmas.push(if sigma > cutoff { sigma } else { 0.0 });
        basis.push(v);
    }
    (sigmas, basis)
}

/// Two passes of modified Gram-Schmidt; `None` if `v` lies (numerically)
/// inside the span of `basis`.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let before = dot(v, v).sqrt();
    if before == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let proj = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
    }
    let after = dot(v, v).sqrt();
    if after <= 1e-6 * before {
        return None;
    }
    Some(v.iter().map(|x| x / after).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        // columns e0*3, e1*5 in R^3
        let cols = vec![vec![3.0, 0.0, 0.0], vec![0.0, 5.0, 0.0]];
        let (s, u) = thin_svd_left(&cols, 3);
        assert_eq!(s, vec![5.0, 3.0]);
        assert_eq!(u[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(u[1], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_matrix_completes_with_unit_vectors() {
        let cols = vec![vec![0.0; 4]; 3];
        let (s, u) = thin_svd_left(&cols, 4);
        assert_eq!(s, vec![0.0; 3]);
        for (i, v) in u.iter().enumerate() {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            assert_eq!(*v, e);
        }
    }

    #[test]
    fn wide_matrix_yields_rows_many_values() {
        let cols = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0]];
        let (s, u) = thin_svd_left(&cols, 2);
        assert_eq!(s.len(), 2);
        // Y Y^T = [[2,1],[1,5]] -> eigenvalues (7 +- sqrt 13)/2
        let l0 = (7.0 + 13f64.sqrt()) / 2.0;
        let l1 = (7.0 - 13f64.sqrt()) / 2.0;
        assert!((s[0] * s[0] - l0).abs() < 1e-12);
        assert!((s[1] * s[1] - l1).abs() < 1e-12);
        assert!(dot(&u[0], &u[1]).abs() < 1e-14);
    }
}
