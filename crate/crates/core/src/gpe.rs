//! Real-time propagation of the 1D Gross-Pitaevskii equation
//!
//! i∂ₜΨ = [−½∂ₓ² + V + gN|Ψ|²]Ψ
//!
//! by Strang splitting: half kinetic step in the sine basis, full local phase,
//! half kinetic step. Inside a sampling block adjacent half steps are merged.
//! The scheme is stable for any dt but only accurate while
//! dt·max|V + gN|Ψ|²| < 0.1, which is checked before each block.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::linalg::Tridiagonal;
use crate::modes::ModePair;
use crate::potential::Potential;
use crate::spectral::SineTransform;
use crate::stationary::{solve_stationary_from, SolverSettings, StationaryError, Symmetry};

pub const PHASE_STEP_LIMIT: f64 = 0.1;
pub const LEAKAGE_WARNING: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpeError {
    #[error("non-finite field at step {step}")]
    BlowUp { step: usize },
    #[error("dt·max|V + gN|Ψ|²| = {value} exceeds {PHASE_STEP_LIMIT}")]
    StepTooLarge { value: f64 },
    #[error("field and grid sizes differ ({field} vs {grid})")]
    Dimension { field: usize, grid: usize },
    #[error("initial field is not normalised (‖Ψ‖² = {0})")]
    NotNormalized(f64),
    #[error("preparation failed: {0}")]
    Preparation(String),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
}

/// Complex field stored as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn from_real(psi: &[f64]) -> Self {
        Self {
            re: psi.to_vec(),
            im: vec![0.0; psi.len()],
            t: 0.0,
        }
    }

    pub fn from_complex(psi: &[Complex64]) -> Self {
        Self {
            re: psi.iter().map(|c| c.re).collect(),
            im: psi.iter().map(|c| c.im).collect(),
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        self.re.iter().zip(&self.im).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn norm_sqr(&self, grid: &Grid) -> f64 {
        grid.integrate(self.re.iter().zip(&self.im).map(|(a, b)| a * a + b * b))
    }

    pub fn value(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }
}

/// Multiplies Ψ by e^{iφ₀} for x > x_b.
pub fn imprint_phase(state: &FieldState, grid: &Grid, phi0: f64, x_b: f64) -> FieldState {
    let mut out = state.clone();
    // exact negation at π rather than cos(π) rounding
    let (s, c) = if phi0 == PI { (0.0, -1.0) } else { phi0.sin_cos() };
    let f = Complex64::new(c, s);
    for i in grid.split_index(x_b)..grid.len() {
        let z = Complex64::new(out.re[i], out.im[i]) * f;
        out.re[i] = z.re;
        out.im[i] = z.im;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Projection method.
    pub z: f64,
    pub phi: f64,
    /// 1 − |c_L|² − |c_R|².
    pub leakage: f64,
    /// Density split at the barrier.
    pub z_density: f64,
    pub phi_density: f64,
    /// Leakage above the two-mode breakdown threshold.
    pub breakdown: bool,
}

/// (z, φ) by projection on the modes and by the density split at `x_b`.
pub fn measure_observables(state: &FieldState, modes: &ModePair, x_b: f64) -> Observables {
    let grid = &modes.grid;
    let dx = grid.dx();
    let mut cl = Complex64::new(0.0, 0.0);
    let mut cr = Complex64::new(0.0, 0.0);
    for i in 0..state.len() {
        let v = state.value(i);
        cl += v * modes.psi_l[i];
        cr += v * modes.psi_r[i];
    }
    cl *= dx;
    cr *= dx;
    let (nl, nr) = (cl.norm_sqr(), cr.norm_sqr());
    let split = grid.split_index(x_b);
    let mut left = Complex64::new(0.0, 0.0);
    let mut right = Complex64::new(0.0, 0.0);
    let (mut dl, mut dr) = (0.0, 0.0);
    for i in 0..state.len() {
        let v = state.value(i);
        if i < split {
            left += v;
            dl += v.norm_sqr();
        } else {
            right += v;
            dr += v.norm_sqr();
        }
    }
    let leakage = 1.0 - nl - nr;
    Observables {
        z: (nl - nr) / (nl + nr),
        phi: cl.arg() - cr.arg(),
        leakage,
        z_density: (dl - dr) * dx,
        phi_density: left.arg() - right.arg(),
        breakdown: leakage > LEAKAGE_WARNING,
    }
}

/// E[Ψ] = ⟨Ψ|H₀|Ψ⟩ + (gN/2)∫|Ψ|⁴.
pub fn energy_functional(h0: &Tridiagonal, grid: &Grid, state: &FieldState, gn: f64) -> f64 {
    let kin = grid.dx() * (h0.quadratic_form(&state.re) + h0.quadratic_form(&state.im));
    let quartic = grid.integrate(
        state
            .re
            .iter()
            .zip(&state.im)
            .map(|(a, b)| (a * a + b * b).powi(2)),
    );
    kin + 0.5 * gn * quartic
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GpeTrajectory {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// Unwrapped.
    pub phi: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub z_density: Vec<f64>,
    pub phi_density: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Decimated fields, when requested.
    pub snapshots: Vec<FieldState>,
    pub steps: usize,
}

impl GpeTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn norm_drift(&self) -> f64 {
        let n0 = self.norm[0];
        self.norm.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().cloned().fold(0.0, f64::max)
    }

    pub fn mean_z(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

/// Strang-split propagator with its own transform workspace.
#[derive(Debug)]
pub struct Propagator {
    grid: Grid,
    h0: Tridiagonal,
    potential: Vec<f64>,
    gn: f64,
    dt: f64,
    transform: SineTransform,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    steps: usize,
}

impl Propagator {
    pub fn new(potential: &Potential, gn: f64, dt: f64) -> Self {
        let grid = potential.grid().clone();
        let transform = SineTransform::new(&grid);
        let half = transform.phase_factors(0.5 * dt);
        let full = transform.phase_factors(dt);
        Self {
            h0: Tridiagonal::hamiltonian(&grid, potential.values()),
            grid,
            potential: potential.values().to_vec(),
            gn,
            dt,
            transform,
            half,
            full,
            steps: 0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn energy(&self, state: &FieldState) -> f64 {
        energy_functional(&self.h0, &self.grid, state, self.gn)
    }

    /// dt·max|V + gN|Ψ|²|.
    pub fn phase_step(&self, state: &FieldState) -> f64 {
        self.dt
            * self
                .potential
                .iter()
                .zip(state.re.iter().zip(&state.im))
                .map(|(v, (a, b))| (v + self.gn * (a * a + b * b)).abs())
                .fold(0.0, f64::max)
    }

    fn check(&self, state: &FieldState) -> Result<(), GpeError> {
        if state.len() != self.grid.len() {
            return Err(GpeError::Dimension {
                field: state.len(),
                grid: self.grid.len(),
            });
        }
        if !state.is_finite() {
            return Err(GpeError::BlowUp { step: self.steps });
        }
        let p = self.phase_step(state);
        if p >= PHASE_STEP_LIMIT {
            return Err(GpeError::StepTooLarge { value: p });
        }
        Ok(())
    }

    fn local_phase(&self, state: &mut FieldState) {
        for ((a, b), v) in state.re.iter_mut().zip(state.im.iter_mut()).zip(&self.potential) {
            let w = (v + self.gn * (*a * *a + *b * *b)) * self.dt;
            let (s, c) = w.sin_cos();
            let (x, y) = (*a, *b);
            *a = x * c + y * s;
            *b = y * c - x * s;
        }
    }

    /// Advances `m` steps, merging interior half kinetic steps.
    pub fn advance(&mut self, state: &mut FieldState, m: usize) -> Result<(), GpeError> {
        if m == 0 {
            return Ok(());
        }
        self.check(state)?;
        let half = std::mem::take(&mut self.half);
        let full = std::mem::take(&mut self.full);
        self.transform.apply_complex(&mut state.re, &mut state.im, &half);
        for j in 0..m {
            self.local_phase(state);
            let factors = if j + 1 < m { &full } else { &half };
            self.transform.apply_complex(&mut state.re, &mut state.im, factors);
        }
        self.half = half;
        self.full = full;
        self.steps += m;
        state.t += m as f64 * self.dt;
        if !state.is_finite() {
            return Err(GpeError::BlowUp { step: self.steps });
        }
        Ok(())
    }

    pub fn step(&mut self, state: &mut FieldState) -> Result<(), GpeError> {
        self.advance(state, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
    /// Keep Ψ every this many samples; 0 disables snapshots.
    pub snapshot_every: usize,
    pub x_b: f64,
}

/// Propagates `psi0` and records observables every `sample_every` steps. The
/// run is cut to a whole number of sample blocks.
pub fn gpe_evolve(
    psi0: &FieldState,
    potential: &Potential,
    gn: f64,
    modes: &ModePair,
    opts: &EvolveOptions,
) -> Result<GpeTrajectory, GpeError> {
    let grid = potential.grid();
    let n0 = psi0.norm_sqr(grid);
    if (n0 - 1.0).abs() > 1e-8 {
        return Err(GpeError::NotNormalized(n0));
    }
    let mut prop = Propagator::new(potential, gn, opts.dt);
    let every = opts.sample_every.max(1);
    // whole sample blocks only, so the samples stay uniform
    let steps = (opts.t_end / opts.dt).round() as usize / every * every;
    let mut state = psi0.clone();
    state.t = 0.0;
    let mut traj = GpeTrajectory::default();
    let record = |traj: &mut GpeTrajectory, s: &FieldState, prop: &Propagator, idx: usize| {
        let o = measure_observables(s, modes, opts.x_b);
        let (phi, phid) = match (traj.phi.last(), traj.phi_density.last()) {
            (Some(&p), Some(&q)) => (p + wrap(o.phi - p), q + wrap(o.phi_density - q)),
            _ => (o.phi, o.phi_density),
        };
        traj.t.push(s.t);
        traj.z.push(o.z);
        traj.phi.push(phi);
        traj.norm.push(s.norm_sqr(grid));
        traj.energy.push(prop.energy(s));
        traj.z_density.push(o.z_density);
        traj.phi_density.push(phid);
        traj.leakage.push(o.leakage);
        if opts.snapshot_every > 0 && idx.is_multiple_of(opts.snapshot_every) {
            traj.snapshots.push(s.clone());
        }
    };
    record(&mut traj, &state, &prop, 0);
    let mut done = 0;
    let mut idx = 0;
    while done < steps {
        prop.advance(&mut state, every)?;
        // keep the clock exact rather than accumulated
        done += every;
        idx += 1;
        state.t = done as f64 * opts.dt;
        record(&mut traj, &state, &prop, idx);
    }
    traj.steps = done;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGround {
    pub state: FieldState,
    pub tilt: f64,
    pub z: f64,
    pub solves: usize,
}

/// Tilt search for a ground state with imbalance `target`.
///
/// `family(ε)` builds the tilted potential, `measure(ψ)` returns its z, and
/// `estimate` is the first tilt to try. The search brackets the root by
/// doubling and then runs Illinois false position, warm-starting each solve
/// from the previous state.
#[allow(clippy::too_many_arguments)]
pub fn prepare_tilted_ground<F, M>(
    target: f64,
    family: F,
    gn: f64,
    settings: &SolverSettings,
    measure: M,
    estimate: f64,
    max_tilt: f64,
    tolerance: f64,
) -> Result<TiltedGround, GpeError>
where
    F: Fn(f64) -> Result<Potential, String>,
    M: Fn(&[f64]) -> f64,
{
    if target.abs() >= 0.95 {
        return Err(GpeError::Preparation(format!(
            "target imbalance {target} outside (-0.95, 0.95)"
        )));
    }
    let mut solves = 0;
    let mut guess: Option<Vec<f64>> = None;
    let mut eval = |eps: f64, guess: &mut Option<Vec<f64>>| -> Result<(f64, Vec<f64>), GpeError> {
        let pot = family(eps).map_err(GpeError::Preparation)?;
        let sym = if eps == 0.0 { Symmetry::Even } else { Symmetry::Free };
        let st = solve_stationary_from(&pot, gn, sym, settings, guess.as_deref())?;
        solves += 1;
        let z = measure(&st.psi);
        *guess = Some(st.psi.clone());
        Ok((z - target, st.psi))
    };

    let (f0, psi0) = eval(0.0, &mut guess)?;
    if target == 0.0 || f0.abs() < tolerance {
        return Ok(TiltedGround {
            state: FieldState::from_real(&psi0),
            tilt: 0.0,
            z: f0 + target,
            solves,
        });
    }
    // bracket [a, b] with f(a)·f(b) < 0, starting from the estimate
    let (mut a, mut fa) = (0.0, f0);
    let mut b = if estimate != 0.0 && estimate.signum() == target.signum() {
        estimate
    } else {
        target.signum() * 1e-3 * max_tilt
    };
    let (mut fb, mut psib) = eval(b, &mut guess)?;
    while fa * fb > 0.0 {
        if fb.abs() < tolerance {
            break;
        }
        a = b;
        fa = fb;
        b *= 2.0;
        if b.abs() > max_tilt {
            return Err(GpeError::Preparation(format!(
                "imbalance {target} not reached below tilt cap {max_tilt}"
            )));
        }
        let r = eval(b, &mut guess)?;
        fb = r.0;
        psib = r.1;
    }
    let mut side = 0;
    for _ in 0..60 {
        if fb.abs() < tolerance {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let (fc, psic) = eval(c, &mut guess)?;
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = c;
        fb = fc;
        psib = psic;
    }
    if fb.abs() >= tolerance {
        return Err(GpeError::Preparation(format!(
            "tilt search stalled at |z - target| = {}",
            fb.abs()
        )));
    }
    Ok(TiltedGround {
        state: FieldState::from_real(&psib),
        tilt: b,
        z: fb + target,
        solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::compute_modes;
    use crate::potential::build_potential;
    use crate::trap::{TrapConfig, TrapParams};
    use crate::units::UnitSystem;

    fn trap() -> TrapParams {
        TrapConfig::default()
            .to_internal(&UnitSystem::potassium_39())
            .unwrap()
    }

    fn setup(n: usize) -> (Potential, ModePair) {
        setup_with(trap(), n)
    }

    fn setup_with(p: TrapParams, n: usize) -> (Potential, ModePair) {
        let pot = build_potential(&p, &Grid::new(-5.0, 5.0, n).unwrap()).unwrap();
        let modes = compute_modes(&pot, 0.0, &SolverSettings::default()).unwrap();
        (pot, modes)
    }

    #[test]
    fn imprint_round_trip_sign() {
        let u = UnitSystem::potassium_39();
        let deep = trap().with_secondary_depth(u.energy_from_hz(1500.0));
        let (pot, modes) = setup_with(deep, 256);
        let g = pot.grid();
        let psi = FieldState::from_real(&modes.ground.psi);
        assert_eq!(imprint_phase(&psi, g, 0.0, 0.0), psi);
        let flipped = imprint_phase(&psi, g, PI, 0.0);
        assert_eq!(flipped.density(), psi.density());
        for i in g.len() / 2..g.len() {
            assert_eq!(flipped.re[i], -psi.re[i]);
        }
        for phi0 in [0.3, 1.0, -2.0] {
            let o = measure_observables(&imprint_phase(&psi, g, phi0, 0.0), &modes, 0.0);
            // projection mixes in the small cross-barrier tails of the modes
            assert!((o.phi + phi0).abs() < 1e-2, "{phi0}: {}", o.phi);
            assert!((o.phi_density + phi0).abs() < 1e-12);
        }
    }

    #[test]
    fn observables_of_reference_states() {
        let (_, modes) = setup(512);
        let g = FieldState::from_real(&modes.ground.psi);
        let o = measure_observables(&g, &modes, 0.0);
        assert!(o.z.abs() < 1e-12 && o.phi.abs() < 1e-12);
        assert!(o.z_density.abs() < 1e-12 && o.phi_density.abs() < 1e-12);
        let l = FieldState::from_real(&modes.psi_l);
        let o = measure_observables(&l, &modes, 0.0);
        assert!((o.z - 1.0).abs() < 1e-12);
        assert!((o.z_density - (2.0 * modes.f_l - 1.0)).abs() < 1e-12);
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let ph = Complex64::from_polar(1.0, PI / 3.0);
        let mix: Vec<Complex64> = modes
            .psi_l
            .iter()
            .zip(&modes.psi_r)
            .map(|(a, b)| (Complex64::new(*a, 0.0) + ph * b) * r2)
            .collect();
        let o = measure_observables(&FieldState::from_complex(&mix), &modes, 0.0);
        assert!(o.z.abs() < 1e-12);
        assert!((o.phi + PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_eigenstate_is_stationary() {
        let g = Grid::new(-8.0, 8.0, 512).unwrap();
        let pot = Potential::harmonic(&g, 1.0);
        let st = crate::stationary::solve_stationary(
            &pot,
            0.0,
            Symmetry::Even,
            &SolverSettings::default(),
        )
        .unwrap();
        let mut prop = Propagator::new(&pot, 0.0, 2e-4);
        let mut s = FieldState::from_real(&st.psi);
        prop.advance(&mut s, 10_000).unwrap();
        let t = s.t;
        let dens0 = FieldState::from_real(&st.psi).density();
        let dens = s.density();
        let dev = dens.iter().zip(&dens0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-8, "{dev}");
        // phase at the centre rotates at E
        let i = g.len() / 2;
        let expected = Complex64::from_polar(1.0, -st.energy * t);
        let got = s.value(i) / st.psi[i];
        assert!((got - expected).norm() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn step_limit_and_blow_up() {
        let (pot, modes) = setup(256);
        let mut prop = Propagator::new(&pot, 0.0, 0.5);
        let mut s = FieldState::from_real(&modes.ground.psi);
        assert!(matches!(prop.step(&mut s), Err(GpeError::StepTooLarge { .. })));
        let mut prop = Propagator::new(&pot, 0.0, 1e-3);
        s.re[3] = f64::NAN;
        assert!(matches!(prop.step(&mut s), Err(GpeError::BlowUp { step: 0 })));
    }

    #[test]
    fn tilt_preparation_hits_target() {
        let (pot, modes) = setup(256);
        let g = pot.grid().clone();
        let p = trap();
        let family = |eps: f64| build_potential(&p.with_tilt(eps), &g).map_err(|e| e.to_string());
        let measure = |psi: &[f64]| {
            measure_observables(&FieldState::from_real(psi), &modes, 0.0).z
        };
        let s = SolverSettings::default();
        let zero = prepare_tilted_ground(0.0, family, 0.0, &s, measure, 0.0, 2.0, 1e-4).unwrap();
        assert_eq!(zero.tilt, 0.0);
        let r = prepare_tilted_ground(0.2, family, 0.0, &s, measure, 0.0, 2.0, 1e-4).unwrap();
        assert!((r.z - 0.2).abs() < 0.005);
        assert!(r.tilt > 0.0);
        assert!((r.state.norm_sqr(&g) - 1.0).abs() < 1e-10);
        assert!(pot.is_symmetric());
    }
}
