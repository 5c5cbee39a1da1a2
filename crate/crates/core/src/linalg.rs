//! Least squares through Householder QR.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Diagonal entries of R below this fraction of the largest one mark a
/// rank-deficient system.
pub const RANK_TOL: f64 = 1e-10;

/// Solves `min_X ‖A X − B‖_F` for a tall, full-column-rank `A`.
pub fn lstsq(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (m, n) = a.shape();
    if b.nrows() != m {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} rows, matrix has {m}",
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    if m < n {
        return Err(Error::Singular(format!("{n} unknowns but only {m} equations")));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let largest = r.diagonal().iter().map(|x| x.norm()).fold(0.0, f64::max);
    if largest == 0.0 || r.diagonal().iter().any(|x| x.norm() <= RANK_TOL * largest) {
        return Err(Error::Singular(format!("{m}x{n} system is rank-deficient")));
    }
    let mut qhb = b.clone();
    qr.q_tr_mul(&mut qhb);
    r.solve_upper_triangular(&qhb.rows(0, n).into_owned())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}
