//! Direct eigensolver for the linear finite-difference Hamiltonian: Sturm
//! bisection for the eigenvalues, inverse iteration for the vectors. It
//! shares nothing with the imaginary-time path except the matrix itself.

use thiserror::Error;

use crate::linalg::Tridiagonal;
use crate::potential::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("requested {requested} eigenpairs from a {size}-point grid")]
    TooManyStates { requested: usize, size: usize },
    #[error("inverse iteration failed for level {0}")]
    InverseIteration(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Normalised with ∫ψ² = 1 and the same sign convention as the solver.
    pub states: Vec<Vec<f64>>,
}

impl Spectrum {
    /// E₁ − E₀, the Rabi splitting 2K of the linear problem.
    pub fn splitting(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn bisect_eigenvalue(h: &Tridiagonal, k: usize, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h.count_below(m) > k {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Lowest `k` eigenpairs of the linear Hamiltonian on `potential`.
pub fn diag_oracle(potential: &Potential, k: usize) -> Result<Spectrum, OracleError> {
    let grid = potential.grid();
    let n = grid.len();
    if k > n {
        return Err(OracleError::TooManyStates {
            requested: k,
            size: n,
        });
    }
    let h = Tridiagonal::hamiltonian(grid, potential.values());
    let (lo, hi) = h.spectral_bounds();
    let mut energies: Vec<f64> = Vec::with_capacity(k);
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(k);
    for level in 0..k {
        let e = bisect_eigenvalue(&h, level, lo, hi);
        // perturb the shift slightly so the solve stays non-singular
        let delta = 1e-10 * e.abs().max(1.0);
        let shift = vec![-(e - delta); n];
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            // orthogonalise against lower levels to keep near-degenerate pairs apart
            for s in &states {
                let c = grid.dot(&v, s);
                v.iter_mut().zip(s).for_each(|(a, b)| *a -= c * b);
            }
            v = h
                .solve_shifted(&shift, &v)
                .ok_or(OracleError::InverseIteration(level))?;
            let nrm = grid.norm_sqr(&v).sqrt();
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(OracleError::InverseIteration(level));
            }
            v.iter_mut().for_each(|a| *a /= nrm);
        }
        let odd_like = level % 2 == 1 && potential.is_symmetric();
        let s: f64 = if odd_like {
            v[..n / 2].iter().sum()
        } else {
            v.iter().sum()
        };
        if s < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        energies.push(e);
        states.push(v);
    }
    Ok(Spectrum { energies, states })
}
