//! Symmetric tridiagonal eigen solver: QL iteration with implicit Wilkinson shifts.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and eigenvectors (columns) of the symmetric
/// tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples rows `i` and `i + 1`).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "tridiagonal with {n} diagonal entries needs {} off-diagonal entries, got {}",
            n - 1,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // find a negligible off-diagonal element to split the matrix
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::Eigen(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[(k, i + 1)];
                    let zk = z[(k, i)];
                    z[(k, i + 1)] = s * zk + c * zk1;
                    z[(k, i)] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| z[(i, order[j])]);
    Ok((values, vectors))
}
