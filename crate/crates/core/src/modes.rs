//! Left/right modes built from the symmetric doublet, and the junction
//! energy scales E₀, K, U, I₂, I₃.
//!
//! All overlap integrals use the midpoint rule on the cell-centred grid
//! (dx·Σ). With the walls half a cell outside the end nodes this is the
//! quadrature under which the sine-transform basis is exactly orthogonal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::potential::Potential;
use crate::stationary::{
    solve_stationary, SolverSettings, StationaryError, StationaryState, Symmetry,
};
use crate::twomode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("{which} state does not have {expected:?} parity (violation {violation:e})")]
    ParityMismatch {
        which: &'static str,
        expected: Symmetry,
        violation: f64,
    },
    #[error("mode and grid sizes differ ({modes} vs {grid})")]
    Dimension { modes: usize, grid: usize },
    #[error(transparent)]
    Stationary(#[from] StationaryError),
}

const PARITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePair {
    pub grid: Grid,
    pub psi_l: Vec<f64>,
    pub psi_r: Vec<f64>,
    pub ground: StationaryState,
    pub excited: StationaryState,
    /// ∫_{x<0} ψ_L².
    pub f_l: f64,
    /// ∫_{x>0} ψ_R².
    pub f_r: f64,
}

impl ModePair {
    /// gN used to compute the source states.
    pub fn interaction(&self) -> f64 {
        self.ground.interaction
    }

    /// E_e − E_g of the energy functional.
    pub fn splitting(&self) -> f64 {
        self.excited.energy - self.ground.energy
    }
}

/// ψ_{L,R} = (ψ_g ± ψ_e)/√2.
pub fn make_modes(
    grid: &Grid,
    ground: StationaryState,
    excited: StationaryState,
) -> Result<ModePair, ModeError> {
    let n = grid.len();
    for s in [&ground, &excited] {
        if s.psi.len() != n {
            return Err(ModeError::Dimension {
                modes: s.psi.len(),
                grid: n,
            });
        }
    }
    let vg = Symmetry::Even.violation(&ground.psi);
    if vg > PARITY_TOLERANCE {
        return Err(ModeError::ParityMismatch {
            which: "ground",
            expected: Symmetry::Even,
            violation: vg,
        });
    }
    let ve = Symmetry::Odd.violation(&excited.psi);
    if ve > PARITY_TOLERANCE {
        return Err(ModeError::ParityMismatch {
            which: "excited",
            expected: Symmetry::Odd,
            violation: ve,
        });
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let psi_l: Vec<f64> = ground
        .psi
        .iter()
        .zip(&excited.psi)
        .map(|(g, e)| r * (g + e))
        .collect();
    let psi_r: Vec<f64> = ground
        .psi
        .iter()
        .zip(&excited.psi)
        .map(|(g, e)| r * (g - e))
        .collect();
    let half = grid.split_index(0.0);
    let f_l = grid.integrate(psi_l[..half].iter().map(|p| p * p));
    let f_r = grid.integrate(psi_r[half..].iter().map(|p| p * p));
    Ok(ModePair {
        grid: grid.clone(),
        psi_l,
        psi_r,
        ground,
        excited,
        f_l,
        f_r,
    })
}

/// Solves for the even and odd stationary states at `gn` and combines them.
pub fn compute_modes(
    potential: &Potential,
    gn: f64,
    settings: &SolverSettings,
) -> Result<ModePair, ModeError> {
    let ground = solve_stationary(potential, gn, Symmetry::Even, settings)?;
    let excited = solve_stationary(potential, gn, Symmetry::Odd, settings)?;
    make_modes(potential.grid(), ground, excited)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    pub e0: f64,
    pub k: f64,
    pub u: f64,
    pub i2: f64,
    pub i3: f64,
    pub atom_number: f64,
    /// Λ = NU/2K.
    pub lambda: f64,
    /// ω_R = 2K/ħ.
    pub omega_rabi: f64,
    /// (2K/ħ)√(1+Λ); `None` past the critical point Λ < −1.
    pub omega_josephson: Option<f64>,
    /// (2/Λ)√(Λ−1); `None` without MQST.
    pub z_c: Option<f64>,
    pub n_i2: f64,
    pub n_i3: f64,
    pub a_ho: f64,
    pub omega_x: f64,
    pub mu: f64,
    pub v0: f64,
    /// E_e − E_g from the two stationary solves.
    pub splitting: f64,
    /// |(2K − 2NI₃) − (E_e − E_g)|.
    pub identity_gap: f64,
}

impl JunctionParams {
    pub fn two_k(&self) -> f64 {
        2.0 * self.k
    }

    pub fn nu(&self) -> f64 {
        self.atom_number * self.u
    }

    /// Barrier above μ (measured from the well bottom).
    pub fn tunneling_regime(&self) -> bool {
        self.v0 > self.mu
    }
}

/// Evaluates the junction integrals of `modes` on `potential`. `gn` is g₁D·N,
/// so U = (gN/N)∫ψ_L⁴ and so on.
pub fn junction_integrals(
    modes: &ModePair,
    potential: &Potential,
    gn: f64,
    atom_number: f64,
) -> Result<JunctionParams, ModeError> {
    let grid = potential.grid();
    if !grid.same_as(&modes.grid) || modes.psi_l.len() != grid.len() {
        return Err(ModeError::Dimension {
            modes: modes.psi_l.len(),
            grid: grid.len(),
        });
    }
    let h0 = Tridiagonal::hamiltonian(grid, potential.values());
    let (l, r) = (&modes.psi_l, &modes.psi_r);
    let dx = grid.dx();
    let g = gn / atom_number;
    let e0 = dx * h0.quadratic_form(l);
    let k = -dx * h0.bilinear(l, r);
    let u = g * grid.integrate(l.iter().map(|p| p.powi(4)));
    let i2 = g * grid.integrate(l.iter().zip(r).map(|(a, b)| a * a * b * b));
    let i3 = g * grid.integrate(l.iter().zip(r).map(|(a, b)| a * a * a * b));
    let n = atom_number;
    let lambda = n * u / (2.0 * k);
    let splitting = modes.splitting();
    let jgp = twomode::TwoModeParams::josephson(2.0 * k, n * u);
    let mu = modes.ground.chemical_potential - potential.well_bottom();
    Ok(JunctionParams {
        e0,
        k,
        u,
        i2,
        i3,
        atom_number: n,
        lambda,
        omega_rabi: 2.0 * k,
        omega_josephson: twomode::plasma_frequency(&jgp, twomode::ModelVariant::Jgp).ok(),
        z_c: twomode::critical_imbalance(&jgp, twomode::ModelVariant::Jgp),
        n_i2: n * i2,
        n_i3: n * i3,
        a_ho: potential.well_oscillator_length(),
        omega_x: potential.well_omega(),
        mu,
        v0: potential.barrier_height(),
        splitting,
        identity_gap: ((2.0 * k - 2.0 * n * i3) - splitting).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::diag_oracle;
    use crate::potential::build_potential;
    use crate::trap::TrapConfig;
    use crate::units::UnitSystem;

    fn potential(vs: f64, n: usize) -> Potential {
        let u = UnitSystem::potassium_39();
        let p = TrapConfig {
            secondary_depth_hz: vs,
            ..TrapConfig::default()
        }
        .to_internal(&u)
        .unwrap();
        build_potential(&p, &Grid::new(-5.0, 5.0, n).unwrap()).unwrap()
    }

    #[test]
    fn linear_modes_identities() {
        let pot = potential(500.0, 512);
        let s = SolverSettings::default();
        let m = compute_modes(&pot, 0.0, &s).unwrap();
        let g = pot.grid();
        assert!(g.dot(&m.psi_l, &m.psi_r).abs() < 1e-10);
        let r2 = 2f64.sqrt();
        for i in 0..g.len() {
            assert!((m.psi_l[i] + m.psi_r[i] - r2 * m.ground.psi[i]).abs() < 1e-12);
            assert!((m.psi_l[i] - m.psi_r[g.mirror(i)]).abs() < 1e-8);
        }
        let jp = junction_integrals(&m, &pot, 0.0, 6000.0).unwrap();
        assert_eq!((jp.u, jp.i2, jp.i3), (0.0, 0.0, 0.0));
        assert!((2.0 * jp.k - m.splitting()).abs() < 1e-8 * m.splitting());
        assert!(jp.k > 0.0);
        // splitting from descent + polish vs Sturm bisection
        let sp = diag_oracle(&pot, 2).unwrap();
        assert!((m.splitting() - sp.splitting()).abs() < 1e-6 * sp.splitting());
    }

    #[test]
    fn parity_mismatch_rejected() {
        let pot = potential(500.0, 256);
        let s = SolverSettings::default();
        let m = compute_modes(&pot, 0.0, &s).unwrap();
        let err = make_modes(pot.grid(), m.excited.clone(), m.ground.clone()).unwrap_err();
        assert!(matches!(err, ModeError::ParityMismatch { .. }));
    }

    #[test]
    fn localisation_in_tunneling_regime() {
        let pot = potential(900.0, 512);
        let m = compute_modes(&pot, 0.0, &SolverSettings::default()).unwrap();
        let jp = junction_integrals(&m, &pot, 0.0, 6000.0).unwrap();
        assert!(jp.tunneling_regime());
        assert!(m.f_l > 0.95, "{}", m.f_l);
    }

    #[test]
    fn k_decreases_with_barrier() {
        let s = SolverSettings::default();
        let mut last = f64::INFINITY;
        for vs in [400.0, 500.0, 600.0, 700.0, 800.0] {
            let pot = potential(vs, 256);
            let m = compute_modes(&pot, 2.0, &s).unwrap();
            let jp = junction_integrals(&m, &pot, 2.0, 6000.0).unwrap();
            assert!(jp.k < last);
            last = jp.k;
        }
    }

    #[test]
    fn repulsive_overlaps_and_identity() {
        let pot = potential(500.0, 512);
        let gn = 5.0;
        let m = compute_modes(&pot, gn, &SolverSettings::default()).unwrap();
        let jp = junction_integrals(&m, &pot, gn, 6000.0).unwrap();
        assert!(jp.i2 > 0.0 && jp.i3 < 0.0);
        assert!(jp.lambda > 0.0);
        assert!(jp.identity_gap < 1e-10 * jp.splitting);
    }

    #[test]
    fn lambda_sign_follows_interaction() {
        let pot = potential(500.0, 256);
        let s = SolverSettings::default();
        for gn in [-0.3, 0.3] {
            let m = compute_modes(&pot, gn, &s).unwrap();
            let jp = junction_integrals(&m, &pot, gn, 6000.0).unwrap();
            assert_eq!(jp.lambda.signum(), gn.signum());
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let pot = potential(500.0, 256);
        let m = compute_modes(&pot, 0.0, &SolverSettings::default()).unwrap();
        let other = potential(500.0, 512);
        assert!(matches!(
            junction_integrals(&m, &other, 0.0, 6000.0),
            Err(ModeError::Dimension { .. })
        ));
    }
}
