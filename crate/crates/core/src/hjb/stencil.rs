//! One-sided differences and the squared-gradient selections used by the
//! nonlinear term.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// How the squared x-gradient of the nonlinear term is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// Upwind selection that keeps the squared gradient monotone.
    #[default]
    Godunov,
    /// Average of the one-sided differences.
    Central,
}

impl GradientScheme {
    /// Signed gradient consistent with the squared value the scheme uses.
    ///
    /// Godunov picks the one-sided difference of its active case (zero in
    /// the sign-change case); central takes the average. Boundary rows use
    /// the only inward difference.
    #[inline]
    pub fn signed<S: Scalar>(self, pl: S, pr: S, j: usize, nx: usize) -> S {
        if j == 0 {
            return pr;
        }
        if j == nx {
            return pl;
        }
        match self {
            Self::Godunov => {
                if pl <= pr {
                    if pl * pr >= S::zero() {
                        if pr.abs() <= pl.abs() { pr } else { pl }
                    } else {
                        S::zero()
                    }
                } else if pr.abs() >= pl.abs() {
                    pr
                } else {
                    pl
                }
            }
            Self::Central => (pl + pr) * c(0.5),
        }
    }

    #[inline]
    pub fn squared<S: Scalar>(self, pl: S, pr: S, j: usize, nx: usize) -> S {
        match self {
            Self::Godunov => godunov_gradient_sq(pl, pr, j, nx),
            Self::Central => central_gradient_sq(pl, pr, j, nx),
        }
    }
}

/// Godunov-type squared gradient.
#[inline]
pub fn godunov_gradient_sq<S: Scalar>(pl: S, pr: S, j: usize, nx: usize) -> S {
    if j == 0 {
        pr * pr
    } else if j == nx {
        pl * pl
    } else if pl <= pr {
        if pl * pr >= S::zero() {
            let m = pr.abs().min(pl.abs());
            m * m
        } else {
            S::zero()
        }
    } else {
        let m = pr.abs().max(pl.abs());
        m * m
    }
}

/// Central squared gradient.
#[inline]
pub fn central_gradient_sq<S: Scalar>(pl: S, pr: S, j: usize, nx: usize) -> S {
    if j == 0 {
        pr * pr
    } else if j == nx {
        pl * pl
    } else {
        let m = (pr + pl) * c(0.5);
        m * m
    }
}

/// One-sided differences at a vertex; a direction pointing out of the grid
/// is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided<S> {
    pub left: Option<S>,
    pub right: Option<S>,
    pub down: Option<S>,
    pub up: Option<S>,
}

/// `(Ψ_j − Ψ_{j−1})/Δx`, `(Ψ_{j+1} − Ψ_j)/Δx` and the y analogues on a
/// layer indexed `[j, k]`.
pub fn one_sided_diffs<S: Scalar>(
    layer: &Array2<S>,
    j: usize,
    k: usize,
    dx: S,
    dy: S,
) -> Result<OneSided<S>> {
    let (rows, cols) = layer.dim();
    if j >= rows || k >= cols {
        return Err(Error::Contract(format!(
            "vertex ({j}, {k}) outside a {rows}x{cols} layer"
        )));
    }
    let here = layer[[j, k]];
    Ok(OneSided {
        left: (j > 0).then(|| (here - layer[[j - 1, k]]) / dx),
        right: (j + 1 < rows).then(|| (layer[[j + 1, k]] - here) / dx),
        down: (k > 0).then(|| (here - layer[[j, k - 1]]) / dy),
        up: (k + 1 < cols).then(|| (layer[[j, k + 1]] - here) / dy),
    })
}
