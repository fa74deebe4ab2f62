//! Thomas algorithm for the per-column exchange systems.

use crate::error::{Error, Result};

/// Solves `lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]` in place
/// (`rhs` becomes the solution). `lower[0]` and `upper[n-1]` are ignored.
/// `scratch` must have the length of `rhs`.
pub fn solve_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
    column: usize,
) -> Result<()> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem(column));
    }
    rhs[0] /= pivot;
    for k in 1..n {
        scratch[k] = upper[k - 1] / pivot;
        pivot = diag[k] - lower[k] * scratch[k];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem(column));
        }
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / pivot;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k + 1] * rhs[k + 1];
    }
    Ok(())
}
