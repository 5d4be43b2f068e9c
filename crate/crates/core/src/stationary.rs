//! Stationary states of −½∂² + V + gN|ψ|² with a fixed parity.
//!
//! Descent is imaginary-time Strang splitting with parity projection and
//! renormalisation every step. Once the energy stalls, a Newton iteration on
//! (ψ, μ) removes the O(dτ²) splitting bias so the residual of the discrete
//! stationary equation can be driven below the requested tolerance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::potential::Potential;
use crate::spectral::SineTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Even,
    Odd,
    /// No parity projection (tilted potentials).
    Free,
}

impl Symmetry {
    /// ψ ← (ψ ± Rψ)/2 in place; no-op for `Free`.
    pub fn project(self, psi: &mut [f64]) {
        let n = psi.len();
        let sign = match self {
            Symmetry::Even => 1.0,
            Symmetry::Odd => -1.0,
            Symmetry::Free => return,
        };
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let a = 0.5 * (psi[i] + sign * psi[j]);
            psi[i] = a;
            psi[j] = sign * a;
        }
    }

    /// max |ψ(x) ∓ ψ(−x)|.
    pub fn violation(self, psi: &[f64]) -> f64 {
        let n = psi.len();
        let sign = match self {
            Symmetry::Even => 1.0,
            Symmetry::Odd => -1.0,
            Symmetry::Free => return 0.0,
        };
        (0..n)
            .map(|i| (psi[i] - sign * psi[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error("odd parity requested for an asymmetric potential")]
    UnsupportedParity,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("collapse: rms width {width:e} fell below {limit:e}")]
    Collapse { width: f64, limit: f64 },
    #[error("initial guess has wrong length or zero norm")]
    BadGuess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub dtau: f64,
    pub energy_tolerance: f64,
    pub residual_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dtau: 1e-3,
            energy_tolerance: 1e-12,
            residual_tolerance: 1e-8,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub psi: Vec<f64>,
    pub energy: f64,
    pub chemical_potential: f64,
    pub parity: Symmetry,
    pub interaction: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl StationaryState {
    pub fn norm_sqr(&self, grid: &Grid) -> f64 {
        grid.norm_sqr(&self.psi)
    }
}

/// Energy functional, chemical potential and residual ‖(H − μ)ψ‖ of a
/// normalised real field.
pub fn evaluate(h0: &Tridiagonal, grid: &Grid, psi: &[f64], gn: f64) -> (f64, f64, f64) {
    let kin_pot = grid.dx() * h0.quadratic_form(psi);
    let quartic = grid.integrate(psi.iter().map(|p| p.powi(4)));
    let energy = kin_pot + 0.5 * gn * quartic;
    let mu = kin_pot + gn * quartic;
    let mut hpsi = vec![0.0; psi.len()];
    h0.apply(psi, &mut hpsi);
    let res = grid
        .integrate(
            hpsi.iter()
                .zip(psi)
                .map(|(h, p)| (h + gn * p * p * p - mu * p).powi(2)),
        )
        .sqrt();
    (energy, mu, res)
}

fn normalize(grid: &Grid, psi: &mut [f64]) -> bool {
    let n2 = grid.norm_sqr(psi);
    if !(n2 > 0.0 && n2.is_finite()) {
        return false;
    }
    let s = 1.0 / n2.sqrt();
    psi.iter_mut().for_each(|p| *p *= s);
    true
}

fn moments(x: &[f64], psi: &[f64]) -> f64 {
    let (m0, m1, m2) = x.iter().zip(psi).fold((0.0, 0.0, 0.0), |(a, b, c), (x, p)| {
        let d = p * p;
        (a + d, b + x * d, c + x * x * d)
    });
    if m0 <= 0.0 {
        return f64::INFINITY;
    }
    let mean = m1 / m0;
    (m2 / m0 - mean * mean).max(0.0).sqrt()
}

/// Width of the narrowest lump: the whole state, or either half about its
/// own centroid (a symmetric state can collapse into one lump per well).
fn rms_width(grid: &Grid, psi: &[f64]) -> f64 {
    let x = grid.nodes();
    let h = x.len() / 2;
    moments(x, psi)
        .min(moments(&x[..h], &psi[..h]))
        .min(moments(&x[h..], &psi[h..]))
}

/// Fixes the overall sign: even and free states have positive integral, odd
/// states are positive on the left half.
fn fix_sign(psi: &mut [f64], parity: Symmetry) {
    let s: f64 = match parity {
        Symmetry::Odd => psi[..psi.len() / 2].iter().sum(),
        _ => psi.iter().sum(),
    };
    if s < 0.0 {
        psi.iter_mut().for_each(|p| *p = -*p);
    }
}

/// Gaussians centred at the well minima with the single-well oscillator width.
pub fn initial_guess(potential: &Potential, parity: Symmetry) -> Vec<f64> {
    let x = potential.grid().nodes();
    let minima = potential.well_minima();
    let width = if potential.well_omega() > 0.0 {
        potential.well_oscillator_length()
    } else {
        0.1 * potential.grid().length()
    };
    let gauss = |c: f64| -> Vec<f64> {
        x.iter()
            .map(|xi| (-(xi - c).powi(2) / (2.0 * width * width)).exp())
            .collect()
    };
    let (left, right) = if minima.len() == 2 {
        (gauss(minima[0]), gauss(minima[1]))
    } else {
        let c = minima[0];
        let off = width.max(potential.grid().dx());
        (gauss(c - off), gauss(c + off))
    };
    match parity {
        Symmetry::Odd => left.iter().zip(&right).map(|(l, r)| l - r).collect(),
        _ => left.iter().zip(&right).map(|(l, r)| l + r).collect(),
    }
}

struct Descent<'a> {
    grid: &'a Grid,
    potential: &'a [f64],
    gn: f64,
    parity: Symmetry,
    transform: SineTransform,
    dtau: f64,
    half: Vec<f64>,
}

impl<'a> Descent<'a> {
    fn new(grid: &'a Grid, potential: &'a [f64], gn: f64, parity: Symmetry, dtau: f64) -> Self {
        let transform = SineTransform::new(grid);
        let half = transform.decay_factors(0.5 * dtau);
        Self {
            grid,
            potential,
            gn,
            parity,
            transform,
            dtau,
            half,
        }
    }

    fn set_dtau(&mut self, dtau: f64) {
        self.dtau = dtau;
        self.half = self.transform.decay_factors(0.5 * dtau);
    }

    fn step(&mut self, psi: &mut [f64]) -> bool {
        let half = std::mem::take(&mut self.half);
        self.transform.apply_real(psi, &half);
        for (p, v) in psi.iter_mut().zip(self.potential) {
            *p *= (-(v + self.gn * *p * *p) * self.dtau).exp();
        }
        self.transform.apply_real(psi, &half);
        self.half = half;
        self.parity.project(psi);
        normalize(self.grid, psi)
    }
}

/// Newton iteration on the discrete stationary equation. Returns the polished
/// state or `None` if a step fails.
fn newton_polish(
    h0: &Tridiagonal,
    grid: &Grid,
    psi: &[f64],
    gn: f64,
    parity: Symmetry,
    tol: f64,
) -> Option<Vec<f64>> {
    let mut psi = psi.to_vec();
    let (_, mut mu, mut res) = evaluate(h0, grid, &psi, gn);
    for _ in 0..40 {
        if res < 0.1 * tol {
            break;
        }
        let shift: Vec<f64> = psi.iter().map(|p| 3.0 * gn * p * p - mu).collect();
        let y = h0.solve_shifted(&shift, &psi)?;
        let rhs: Vec<f64> = psi.iter().map(|p| 2.0 * gn * p * p * p).collect();
        let u = h0.solve_shifted(&shift, &rhs)?;
        let py = grid.dot(&psi, &y);
        if py == 0.0 || !py.is_finite() {
            return None;
        }
        let dmu = (1.0 - grid.dot(&psi, &u)) / py;
        let mut next: Vec<f64> = u.iter().zip(&y).map(|(a, b)| a + dmu * b).collect();
        parity.project(&mut next);
        if !normalize(grid, &mut next) {
            return None;
        }
        // RQI can flip the sign each iteration
        if grid.dot(&next, &psi) < 0.0 {
            next.iter_mut().for_each(|p| *p = -*p);
        }
        let (_, m, r) = evaluate(h0, grid, &next, gn);
        if !r.is_finite() {
            return None;
        }
        psi = next;
        mu = m;
        res = r;
    }
    (res < tol).then_some(psi)
}

/// Lowest stationary state of the requested parity.
pub fn solve_stationary(
    potential: &Potential,
    gn: f64,
    parity: Symmetry,
    settings: &SolverSettings,
) -> Result<StationaryState, StationaryError> {
    solve_stationary_from(potential, gn, parity, settings, None)
}

/// As [`solve_stationary`], starting from `guess` when given.
pub fn solve_stationary_from(
    potential: &Potential,
    gn: f64,
    parity: Symmetry,
    settings: &SolverSettings,
    guess: Option<&[f64]>,
) -> Result<StationaryState, StationaryError> {
    if parity == Symmetry::Odd && !potential.is_symmetric() {
        return Err(StationaryError::UnsupportedParity);
    }
    let grid = potential.grid();
    let h0 = Tridiagonal::hamiltonian(grid, potential.values());
    let mut psi = match guess {
        Some(g) if g.len() == grid.len() => g.to_vec(),
        Some(_) => return Err(StationaryError::BadGuess),
        None => initial_guess(potential, parity),
    };
    parity.project(&mut psi);
    if !normalize(grid, &mut psi) {
        return Err(StationaryError::BadGuess);
    }
    let collapse_limit = 4.0 * grid.dx();
    let mut descent = Descent::new(grid, potential.values(), gn, parity, settings.dtau);
    let (mut energy, _, _) = evaluate(&h0, grid, &psi, gn);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < settings.max_iterations {
        let prev = psi.clone();
        if !descent.step(&mut psi) {
            return Err(StationaryError::NoConvergence {
                iterations,
                residual,
            });
        }
        iterations += 1;
        let (e, _, _) = evaluate(&h0, grid, &psi, gn);
        if e > energy + 1e-14 * energy.abs().max(1.0) && descent.dtau > 1e-8 {
            psi = prev;
            descent.set_dtau(0.5 * descent.dtau);
            continue;
        }
        let de = (e - energy).abs();
        energy = e;

        if gn < 0.0 && iterations % 64 == 0 {
            let w = rms_width(grid, &psi);
            if w < collapse_limit {
                return Err(StationaryError::Collapse {
                    width: w,
                    limit: collapse_limit,
                });
            }
        }

        // slow soft modes can keep ΔE above tolerance for a long time, so
        // polishing is also tried periodically once the descent has settled
        let settled = de < 1e-8 && iterations % 256 == 0;
        if de < settings.energy_tolerance || settled {
            if let Some(polished) =
                newton_polish(&h0, grid, &psi, gn, parity, settings.residual_tolerance)
            {
                let (ep, _, _) = evaluate(&h0, grid, &polished, gn);
                if ep <= energy + 1e-9 * energy.abs().max(1.0) {
                    psi = polished;
                    break;
                }
            }
            let (_, _, r) = evaluate(&h0, grid, &psi, gn);
            residual = r;
            if r < settings.residual_tolerance && de < settings.energy_tolerance {
                break;
            }
        }
    }

    fix_sign(&mut psi, parity);
    let (energy, mu, res) = evaluate(&h0, grid, &psi, gn);
    if !(res < settings.residual_tolerance) {
        return Err(StationaryError::NoConvergence {
            iterations,
            residual: res,
        });
    }
    if gn < 0.0 {
        let w = rms_width(grid, &psi);
        if w < collapse_limit {
            return Err(StationaryError::Collapse {
                width: w,
                limit: collapse_limit,
            });
        }
    }
    Ok(StationaryState {
        psi,
        energy,
        chemical_potential: mu,
        parity,
        interaction: gn,
        residual: res,
        iterations,
    })
}
