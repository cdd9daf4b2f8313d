//! Small dense inversions, for plain values and for jet-valued matrices.
//!
//! Both use partial pivoting on the (base-point) values, so indefinite
//! signatures are handled.

use std::sync::Arc;

use ndarray::Array2;

use crate::jet::{Jet, JetSpace};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub pivot: f64,
}

/// LU factorization with partial pivoting: `(inverse, determinant)`.
pub fn invert(a: &Array2<f64>) -> Result<(Array2<f64>, f64), Singular> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| lu[[i, col]].abs().total_cmp(&lu[[j, col]].abs()))
            .unwrap_or(col);
        let pivot = lu[[p, col]];
        if !(pivot.abs() >= PIVOT_THRESHOLD) {
            return Err(Singular { pivot });
        }
        if p != col {
            for k in 0..n {
                lu.swap([p, k], [col, k]);
            }
            perm.swap(p, col);
            det = -det;
        }
        det *= pivot;
        for r in col + 1..n {
            let f = lu[[r, col]] / pivot;
            lu[[r, col]] = f;
            for k in col + 1..n {
                lu[[r, k]] -= f * lu[[col, k]];
            }
        }
    }
    let mut inv = Array2::zeros((n, n));
    for c in 0..n {
        // solve L U x = P e_c
        let mut x: Vec<f64> = perm.iter().map(|&p| if p == c { 1.0 } else { 0.0 }).collect();
        for r in 0..n {
            for k in 0..r {
                x[r] -= lu[[r, k]] * x[k];
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                x[r] -= lu[[r, k]] * x[k];
            }
            x[r] /= lu[[r, r]];
        }
        for r in 0..n {
            inv[[r, c]] = x[r];
        }
    }
    Ok((inv, det))
}

pub fn determinant(a: &Array2<f64>) -> f64 {
    invert(a).map(|(_, d)| d).unwrap_or(0.0)
}

/// Gauss-Jordan inverse of a jet matrix, pivoting on base-point values.
pub fn invert_jets(a: &Array2<Jet>) -> Result<Array2<Jet>, Singular> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let space: Arc<JetSpace> = a[[0, 0]].space().clone();
    let order = a.iter().map(Jet::order).min().unwrap_or(0);
    let mut work = a.map(|j| j.truncate(order));
    let mut inv = Array2::from_shape_fn((n, n), |(i, j)| {
        Jet::constant(&space, if i == j { 1.0 } else { 0.0 }, order)
    });
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| work[[i, col]].value().abs().total_cmp(&work[[j, col]].value().abs()))
            .unwrap_or(col);
        let pivot = work[[p, col]].value();
        if !(pivot.abs() >= PIVOT_THRESHOLD) {
            return Err(Singular { pivot });
        }
        if p != col {
            for k in 0..n {
                work.swap([p, k], [col, k]);
                inv.swap([p, k], [col, k]);
            }
        }
        let r = work[[col, col]].recip().map_err(|_| Singular { pivot })?;
        for k in 0..n {
            work[[col, k]] = &work[[col, k]] * &r;
            inv[[col, k]] = &inv[[col, k]] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = work[[row, col]].clone();
            if f.raw().iter().all(|v| *v == 0.0) {
                continue;
            }
            for k in 0..n {
                work[[row, k]] = &work[[row, k]] - &(&f * &work[[col, k]]);
                inv[[row, k]] = &inv[[row, k]] - &(&f * &inv[[col, k]]);
            }
        }
    }
    Ok(inv)
}

/// Values of a jet matrix.
pub fn values(a: &Array2<Jet>) -> Array2<f64> {
    a.map(Jet::value)
}
