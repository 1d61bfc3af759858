//! Operator norms, symmetric eigendecomposition, Kronecker quadratic forms.

use crate::error::{Error, Result};
use crate::tensor::vec_ops::{dot, norm2};
use crate::tensor::{Matrix, Rng};

/// Result of a converged power iteration.
#[derive(Debug, Clone, Copy)]
pub struct OpNorm {
    pub value: f64,
    pub iters: usize,
}

/// Operator norm (largest absolute eigenvalue) of a symmetric operator
/// given matrix-free as `apply`.
///
/// Power iteration runs on the squared operator so that a +/- eigenvalue
/// pair cannot stall the Rayleigh quotient. The start vector is the
/// normalized all-ones vector; if the estimate stagnates at zero, one
/// seeded random restart is tried and the larger estimate wins.
/// Convergence: successive norm estimates within `tol` relatively.
pub fn operator_norm<A>(apply: A, dim: usize, tol: f64, max_iters: usize) -> Result<OpNorm>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return Err(Error::InvalidArg("operator_norm: dim 0".into()));
    }
    let ones = vec![1.0 / (dim as f64).sqrt(); dim];
    let first = power_iterate(&apply, ones, tol, max_iters)?;
    if first.value > 0.0 {
        return Ok(first);
    }
    // All-ones start may be orthogonal to the top eigenspace.
    let mut rng = Rng::new(0x5eed_0001);
    let mut start = rng.normal_vec(dim);
    let n = norm2(&start);
    if n > 0.0 {
        for v in &mut start {
            *v /= n;
        }
    }
    let second = power_iterate(&apply, start, tol, max_iters)?;
    Ok(if second.value > first.value { second } else { first })
}

fn power_iterate<A>(apply: &A, mut v: Vec<f64>, tol: f64, max_iters: usize) -> Result<OpNorm>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let mut last = f64::NAN;
    for it in 1..=max_iters {
        let av = apply(&v);
        let estimate = norm2(&av); // ||Av|| for unit v: current norm estimate
        if estimate == 0.0 {
            return Ok(OpNorm { value: 0.0, iters: it });
        }
        let aav = apply(&av);
        let norm_sq = dot(&v, &aav); // Rayleigh quotient of A^2
        let est = norm_sq.max(0.0).sqrt();
        if !est.is_finite() {
            return Err(Error::NonFinite("operator_norm".into()));
        }
        if last.is_finite() && (est - last).abs() <= tol * est.max(1e-300) {
            return Ok(OpNorm { value: est, iters: it });
        }
        last = est;
        let n = norm2(&aav);
        if n == 0.0 {
            return Ok(OpNorm { value: est, iters: it });
        }
        v = aav;
        for x in &mut v {
            *x /= n;
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        estimate: last,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors
/// as the columns of the returned matrix: `a = V diag(vals) V^T`.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::dim("sym_eigen", "matrix not square"));
    }
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);

    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in (r + 1)..n {
                s += m.get(r, c) * m.get(r, c);
            }
        }
        s.sqrt()
    };

    let scale: f64 = (0..n).map(|i| m.get(i, i).abs()).fold(1e-300, f64::max);
    let stop = 1e-14 * scale.max(off(&m));
    for _sweep in 0..100 {
        if off(&m) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/cols p, q
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for r in 0..n {
            vecs.set(r, new_col, v.get(r, old_col));
        }
    }
    Ok((vals, vecs))
}

/// Solve `a x = b` for symmetric `a` via eigendecomposition, dropping
/// components below a relative threshold (pseudo-inverse for PSD input).
pub fn sym_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (vals, vecs) = sym_eigen(a)?;
    let n = vals.len();
    if b.len() != n {
        return Err(Error::dim("sym_solve", "rhs length"));
    }
    let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = vmax * 1e-12;
    let mut x = vec![0.0; n];
    for j in 0..n {
        if vals[j].abs() <= cut {
            continue;
        }
        let mut col = vec![0.0; n];
        for r in 0..n {
            col[r] = vecs.get(r, j);
        }
        let coef = dot(&col, b) / vals[j];
        for r in 0..n {
            x[r] += coef * col[r];
        }
    }
    Ok(x)
}

fn kron_dims(a: &Matrix, g: &Matrix, v: &[f64]) -> Result<(usize, usize)> {
    let p = a.rows();
    let q = g.rows();
    if a.cols() != p || g.cols() != q {
        return Err(Error::dim("kron", "factors must be square"));
    }
    if v.len() != p * q {
        return Err(Error::dim(
            "kron",
            format!("vector length {} for {p}x{q} factors", v.len()),
        ));
    }
    Ok((p, q))
}

/// `v^T (A (x) G) v` without materializing the Kronecker product.
///
/// The vector is indexed `v[i*q + j]` with `i` running over the A side
/// and `j` over the G side; reshaped to a p-by-q block V, the form is
/// `sum(V o (A V G))` computed with two small matrix products.
pub fn kron_quadform(a: &Matrix, g: &Matrix, v: &[f64]) -> Result<f64> {
    let y = kron_apply(a, g, v)?;
    Ok(dot(v, &y))
}

/// `(A (x) G) v`, same indexing as [`kron_quadform`]: equals `vec(A V G)`.
pub fn kron_apply(a: &Matrix, g: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    let (p, q) = kron_dims(a, g, v)?;
    let vm = Matrix::from_vec(p, q, v.to_vec())?;
    let av = a.matmul(&vm)?;
    let avg = av.matmul(g)?;
    Ok(avg.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn operator_norm_diagonal() {
        let m = Matrix::diag(&[2.0, 1.0]);
        let n = operator_norm(|v| m.matvec(v).unwrap(), 2, 1e-12, 500).unwrap();
        assert!((n.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_plus_minus_pair() {
        let m = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let n = operator_norm(|v| m.matvec(v).unwrap(), 2, 1e-12, 500).unwrap();
        assert!((n.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_zero() {
        let n = operator_norm(|v| vec![0.0; v.len()], 4, 1e-12, 100).unwrap();
        assert_eq!(n.value, 0.0);
    }

    #[test]
    fn operator_norm_start_orthogonal_to_top() {
        // Top eigenvector (1, -1)/sqrt(2) is orthogonal to the all-ones start.
        let m = mat(&[vec![1.0, -2.0], vec![-2.0, 1.0]]); // eigenvalues 3, -1
        let n = operator_norm(|v| m.matvec(v).unwrap(), 2, 1e-12, 500).unwrap();
        assert!((n.value - 3.0).abs() < 1e-8, "got {}", n.value);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let m = mat(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (vals, vecs) = sym_eigen(&m).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // reconstruct
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = 0.0;
                for j in 0..2 {
                    acc += vals[j] * vecs.get(r, j) * vecs.get(c, j);
                }
                assert!((acc - m.get(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sym_solve_spd() {
        let m = mat(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = sym_solve(&m, &[1.0, 2.0]).unwrap();
        let b = m.matvec(&x).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-10 && (b[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn kron_identity_case() {
        let i2 = Matrix::identity(2);
        let v = [1.0, 2.0, 2.0, 0.0];
        assert!((kron_quadform(&i2, &i2, &v).unwrap() - 9.0).abs() < 1e-15);
    }

    #[test]
    fn kron_scalar_case() {
        let a = mat(&[vec![2.0]]);
        let g = mat(&[vec![3.0]]);
        assert!((kron_quadform(&a, &g, &[2.0]).unwrap() - 24.0).abs() < 1e-15);
    }

    #[test]
    fn kron_zero_vector() {
        let a = mat(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let g = mat(&[vec![1.0, 0.2], vec![0.2, 2.0]]);
        assert_eq!(kron_quadform(&a, &g, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn kron_dimension_mismatch() {
        let a = Matrix::identity(2);
        let g = Matrix::identity(2);
        assert!(kron_quadform(&a, &g, &[1.0; 3]).is_err());
    }
}
