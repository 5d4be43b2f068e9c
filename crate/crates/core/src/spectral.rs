//! Kinetic propagators diagonalised by the type-II discrete sine transform.
//!
//! The DST-II basis sin(πk(i+½)/n) vanishes half a cell outside the grid, so
//! it diagonalises exactly the finite-difference kinetic operator used by
//! [`Tridiagonal::hamiltonian`](crate::linalg::Tridiagonal::hamiltonian),
//! with eigenvalues T_k = (2/dx²)·sin²(πk/2n). Imaginary-time descent,
//! real-time propagation and the eigensolver oracle therefore share one
//! discrete Hamiltonian.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustdct::{DctPlanner, TransformType2And3};

use crate::grid::Grid;

/// Kinetic symbol T_k for k = 1..n, stored at index k−1.
pub fn kinetic_symbol(grid: &Grid) -> Vec<f64> {
    let n = grid.len();
    let h2 = grid.dx() * grid.dx();
    (1..=n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * n as f64)).sin();
            2.0 / h2 * s * s
        })
        .collect()
}

/// Per-trajectory transform workspace. Not shared between threads.
pub struct SineTransform {
    plan: Arc<dyn TransformType2And3<f64>>,
    scratch: Vec<f64>,
    symbol: Vec<f64>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform")
            .field("len", &self.symbol.len())
            .finish()
    }
}

impl SineTransform {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let plan = DctPlanner::new().plan_dst2(n);
        let scratch = vec![0.0; plan.get_scratch_len()];
        Self {
            plan,
            scratch,
            symbol: kinetic_symbol(grid),
        }
    }

    pub fn len(&self) -> usize {
        self.symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbol.is_empty()
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn forward(&mut self, buf: &mut [f64]) {
        self.plan.process_dst2_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse of [`forward`](Self::forward), including the 2/n factor.
    pub fn inverse(&mut self, buf: &mut [f64]) {
        self.plan.process_dst3_with_scratch(buf, &mut self.scratch);
        let s = 2.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Precomputes e^{−T_k τ} for imaginary-time steps.
    pub fn decay_factors(&self, tau: f64) -> Vec<f64> {
        self.symbol.iter().map(|t| (-t * tau).exp()).collect()
    }

    /// Precomputes e^{−i T_k t} for real-time steps.
    pub fn phase_factors(&self, t: f64) -> Vec<Complex64> {
        self.symbol
            .iter()
            .map(|&tk| Complex64::from_polar(1.0, -tk * t))
            .collect()
    }

    /// ψ ← e^{−Tτ}ψ for a real field, using precomputed factors.
    pub fn apply_real(&mut self, psi: &mut [f64], factors: &[f64]) {
        self.forward(psi);
        psi.iter_mut().zip(factors).for_each(|(p, f)| *p *= f);
        self.inverse(psi);
    }

    /// Ψ ← e^{−iTt}Ψ for a complex field split into real and imaginary parts.
    pub fn apply_complex(&mut self, re: &mut [f64], im: &mut [f64], factors: &[Complex64]) {
        self.forward(re);
        self.forward(im);
        for ((a, b), f) in re.iter_mut().zip(im.iter_mut()).zip(factors) {
            let z = Complex64::new(*a, *b) * f;
            *a = z.re;
            *b = z.im;
        }
        self.inverse(re);
        self.inverse(im);
    }
}
