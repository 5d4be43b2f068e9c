//! Double-well experiments run as declarative scenarios.
//!
//! Each scenario validates its inputs, tunes the trap (V_S for a target Rabi
//! frequency, a_s for a target Λ), computes the junction once per sweep
//! point and then runs every requested model. Sweep points run through
//! [`par_map`]; results are merged in input order and sorted stably, so the
//! tables do not depend on the thread count.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::cache::{key_of, Lookup, ModeCache};
use crate::config::{BarrierMode, Model, Resolved, RunParams, ScenarioId};
use crate::error::{Error, Result};
use crate::fit::{extract_frequency, FitError, SineFit};
use crate::gpe::{
    gpe_evolve, imprint_phase, measure_observables, prepare_tilted_ground, EvolveOptions,
    FieldState, GpeTrajectory,
};
use crate::grid::Grid;
use crate::modes::{compute_modes, junction_integrals, JunctionParams, ModePair};
use crate::oracle::diag_oracle;
use crate::output::{sort_rows, ResultRow};
use crate::potential::{build_potential, Potential};
use crate::stationary::SolverSettings;
use crate::trap::TrapParams;
use crate::twomode::{
    classify_regime, critical_imbalance, locate_boundary, plasma_frequency,
    tm_integrate_sampled, ModelVariant, Regime, TwoModeParams, TwoModeState, Trajectory,
};
use crate::units::UnitSystem;

/// Maps `f` over `items` on the rayon pool, keeping input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Sequential fallback when the `parallel` feature is off.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    seq_map(items, f)
}

pub fn seq_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[derive(Serialize)]
struct ModeKey<'a> {
    trap: &'a TrapParams,
    gn: f64,
    grid: (f64, f64, usize),
    settings: &'a SolverSettings,
}

/// Shared solver context: grid, settings, mode memo and optional disk cache.
pub struct Workbench<'a> {
    pub units: UnitSystem,
    pub grid: Grid,
    pub settings: SolverSettings,
    cache: Option<&'a ModeCache>,
    memo: Mutex<HashMap<String, ModePair>>,
    solve_nanos: AtomicU64,
    hits: AtomicU64,
    misses: AtomicU64,
    warnings: Mutex<Vec<String>>,
}

impl<'a> Workbench<'a> {
    pub fn new(units: UnitSystem, grid: Grid, settings: SolverSettings) -> Self {
        Self {
            units,
            grid,
            settings,
            cache: None,
            memo: Mutex::new(HashMap::new()),
            solve_nanos: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn from_resolved(r: &Resolved) -> Self {
        Self::new(r.units, r.grid.clone(), r.run.solver)
    }

    pub fn with_cache(mut self, cache: &'a ModeCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Wall time spent in stationary solves, summed over threads.
    pub fn solve_seconds(&self) -> f64 {
        self.solve_nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn cache_misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().unwrap())
    }

    fn warn(&self, msg: String) {
        self.warnings.lock().unwrap().push(msg);
    }

    pub fn potential(&self, trap: &TrapParams) -> Result<Potential> {
        Ok(build_potential(trap, &self.grid)?)
    }

    /// Even/odd stationary pair at `gn`, from memory, disk or a fresh solve.
    pub fn modes(&self, trap: &TrapParams, gn: f64) -> Result<ModePair> {
        let key = key_of(&ModeKey {
            trap,
            gn,
            grid: (self.grid.x_min(), self.grid.x_max(), self.grid.len()),
            settings: &self.settings,
        });
        if let Some(m) = self.memo.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        if let Some(cache) = self.cache {
            match cache.get::<ModePair>(&key) {
                Lookup::Hit(m) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    self.memo.lock().unwrap().insert(key, m.clone());
                    return Ok(m);
                }
                Lookup::Corrupt(why) => self.warn(format!("ignoring corrupt cache entry {why}")),
                Lookup::Miss => {}
            }
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        let start = Instant::now();
        let pot = self.potential(trap)?;
        let m = compute_modes(&pot, gn, &self.settings)?;
        self.solve_nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        if let Some(cache) = self.cache {
            if let Err(e) = cache.put(&key, &m) {
                self.warn(format!("could not write cache entry: {e}"));
            }
        }
        self.memo.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }

    /// Junction at `trap`. With `linear`, the TMS integrals from the
    /// non-interacting modes are evaluated as well.
    pub fn junction(&self, trap: &TrapParams, linear: bool) -> Result<Junction> {
        let trap = trap.with_tilt(0.0);
        let potential = self.potential(&trap)?;
        let gn = trap.interaction();
        let modes = self.modes(&trap, gn)?;
        let params = junction_integrals(&modes, &potential, gn, trap.atom_number)?;
        let linear = if gn == 0.0 {
            Some(params)
        } else if linear {
            let lin = self.modes(&trap.with_scattering_length(0.0), 0.0)?;
            Some(junction_integrals(&lin, &potential, gn, trap.atom_number)?)
        } else {
            None
        };
        Ok(Junction {
            trap,
            potential,
            modes,
            params,
            linear,
        })
    }
}

/// A computed junction: trap, potential, GPE modes and integrals.
#[derive(Debug, Clone)]
pub struct Junction {
    pub trap: TrapParams,
    pub potential: Potential,
    pub modes: ModePair,
    pub params: JunctionParams,
    /// Integrals over the non-interacting modes, used by TMS.
    pub linear: Option<JunctionParams>,
}

impl Junction {
    pub fn two_mode(&self, variant: ModelVariant) -> Result<TwoModeParams> {
        match variant {
            ModelVariant::Tms => {
                let l = self.linear.as_ref().ok_or_else(|| {
                    Error::Tuning("TMS requested without linear modes".to_string())
                })?;
                Ok(TwoModeParams::josephson(l.two_k(), l.nu()))
            }
            _ => Ok(TwoModeParams::from_junction(&self.params)),
        }
    }

    pub fn barrier(&self) -> f64 {
        self.potential.barrier_position()
    }

    /// Projection observables in the tunneling regime, density split
    /// otherwise.
    pub fn uses_projection(&self) -> bool {
        self.params.tunneling_regime()
    }

    /// Small-amplitude period used to size runs; falls back to the Rabi
    /// period past the critical point.
    pub fn period_estimate(&self) -> f64 {
        let p = TwoModeParams::from_junction(&self.params);
        let w = plasma_frequency(&p, ModelVariant::Jgp)
            .ok()
            .filter(|w| *w > 0.0)
            .unwrap_or(p.two_k.abs());
        2.0 * PI / w
    }

    pub fn describe(&self, row: &mut ResultRow, units: &UnitSystem) {
        let p = &self.params;
        row.lambda = Some(p.lambda);
        row.scattering_length_a0 = Some(units.length_to_bohr(self.trap.scattering_length));
        row.secondary_depth_hz = Some(units.energy_to_hz(self.trap.secondary_depth));
        row.two_k_hz = Some(units.energy_to_hz(p.two_k()));
        row.nu_hz = Some(units.energy_to_hz(p.nu()));
        row.n_i2_hz = Some(units.energy_to_hz(p.n_i2));
        row.n_i3_hz = Some(units.energy_to_hz(p.n_i3));
        row.mu_hz = Some(units.energy_to_hz(p.mu));
        row.v0_hz = Some(units.energy_to_hz(p.v0));
        row.barrier_above_mu = Some(p.tunneling_regime());
    }
}

/// V_S giving the requested 2K at a_s = 0, by bisection on the splitting of
/// the linear Hamiltonian.
pub fn tune_rabi_frequency(wb: &Workbench, trap: &TrapParams, two_k: f64) -> Result<TrapParams> {
    let base = trap.with_tilt(0.0);
    let split = |vs: f64| -> Result<f64> {
        let pot = wb.potential(&base.with_secondary_depth(vs))?;
        Ok(diag_oracle(&pot, 2)?.splitting())
    };
    let mut lo = 0.0;
    if split(lo)? <= two_k {
        return Err(Error::Tuning(format!(
            "2K = {two_k} exceeds the splitting without a barrier"
        )));
    }
    let mut hi = base.primary_depth.max(1e-3);
    while split(hi)? > two_k {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 * base.primary_depth {
            return Err(Error::Tuning(format!("2K = {two_k} not reached by raising V_S")));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if split(mid)? > two_k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(base.with_secondary_depth(0.5 * (lo + hi)))
}

/// Absolute Λ tolerance of the scattering-length search.
pub fn lambda_tolerance(target: f64) -> f64 {
    1e-4 * target.abs().max(1.0)
}

/// Junction with Λ = `target`, found by secant iteration on a_s starting
/// from the linear-mode estimate.
pub fn tune_lambda(
    wb: &Workbench,
    trap: &TrapParams,
    target: f64,
    linear: bool,
) -> Result<Junction> {
    if target == 0.0 {
        return wb.junction(&trap.with_scattering_length(0.0), linear);
    }
    let tol = lambda_tolerance(target);
    let a_ref = wb.units.length_from_bohr(1.0);
    let lin_trap = trap.with_tilt(0.0).with_scattering_length(0.0);
    let lin = wb.modes(&lin_trap, 0.0)?;
    let pot = wb.potential(&lin_trap)?;
    let ref_trap = lin_trap.with_scattering_length(a_ref);
    let slope = junction_integrals(&lin, &pot, ref_trap.interaction(), trap.atom_number)?.lambda / a_ref;
    let eval = |a: f64| -> Result<(f64, Junction)> {
        let j = wb.junction(&trap.with_scattering_length(a), linear)?;
        Ok((j.params.lambda - target, j))
    };
    let mut a1 = target / slope;
    let (mut f1, j1) = eval(a1)?;
    if f1.abs() < tol {
        return Ok(j1);
    }
    let lam1 = f1 + target;
    let mut a2 = if lam1 != 0.0 && lam1.signum() == target.signum() {
        a1 * target / lam1
    } else {
        0.5 * a1
    };
    let (mut f2, mut j2) = eval(a2)?;
    for _ in 0..40 {
        if f2.abs() < tol {
            return Ok(j2);
        }
        let a3 = a2 - f2 * (a2 - a1) / (f2 - f1);
        if !a3.is_finite() {
            break;
        }
        a1 = a2;
        f1 = f2;
        a2 = a3;
        let r = eval(a2)?;
        f2 = r.0;
        j2 = r.1;
    }
    Err(Error::Tuning(format!(
        "Λ = {target} not reached (last Λ = {})",
        f2 + target
    )))
}

/// As [`tune_lambda`], raising V_S by 15% steps until V₀ > margin·μ.
pub fn tune_lambda_tunneling(
    wb: &Workbench,
    trap: &TrapParams,
    target: f64,
    margin: f64,
    linear: bool,
) -> Result<Junction> {
    let mut t = *trap;
    for _ in 0..30 {
        let j = tune_lambda(wb, &t, target, linear)?;
        if j.params.v0 > margin * j.params.mu {
            return Ok(j);
        }
        t = t.with_secondary_depth(1.15 * t.secondary_depth);
    }
    Err(Error::Tuning(format!(
        "no barrier keeps V0 above μ at Λ = {target}"
    )))
}

/// Trap after the optional Rabi-frequency tuning.
pub fn base_trap(res: &Resolved, wb: &Workbench) -> Result<TrapParams> {
    match res.run.target_two_k {
        Some(k) => tune_rabi_frequency(wb, &res.trap, k),
        None => Ok(res.trap),
    }
}

/// Junction after all tuning requested by the run section.
pub fn base_junction(res: &Resolved, wb: &Workbench) -> Result<Junction> {
    let trap = base_trap(res, wb)?;
    let linear = res.run.models.contains(&Model::Tms);
    match res.run.target_lambda {
        Some(l) => tune_lambda(wb, &trap, l, linear),
        None => wb.junction(&trap, linear),
    }
}

/// Ground state of the tilted trap with imbalance `z0`, then the relative
/// phase `phi0` imprinted across the barrier.
pub fn prepare_state(
    wb: &Workbench,
    jn: &Junction,
    z0: f64,
    phi0: f64,
    tolerance: f64,
) -> Result<(FieldState, f64)> {
    let x_b = jn.barrier();
    let (state, tilt) = if z0 == 0.0 {
        (FieldState::from_real(&jn.modes.ground.psi), 0.0)
    } else {
        let projection = jn.uses_projection();
        let measure = |psi: &[f64]| {
            let o = measure_observables(&FieldState::from_real(psi), &jn.modes, x_b);
            if projection {
                o.z
            } else {
                o.z_density
            }
        };
        let family = |eps: f64| {
            build_potential(&jn.trap.with_tilt(eps), &wb.grid).map_err(|e| e.to_string())
        };
        let t = &jn.trap;
        let max_tilt = 2.0 * (t.primary_depth + t.secondary_depth) / t.half_domain();
        let prep = prepare_tilted_ground(
            z0,
            family,
            jn.trap.interaction(),
            &wb.settings,
            measure,
            0.0,
            max_tilt,
            tolerance,
        )?;
        (prep.state, prep.tilt)
    };
    // imprinting e^{iθ} on the right shifts arg c_L − arg c_R by −θ
    let state = if phi0 != 0.0 {
        imprint_phase(&state, &wb.grid, -phi0, x_b)
    } else {
        state
    };
    Ok((state, tilt))
}

/// Run length and sampling derived from an expected period.
#[derive(Debug, Clone, Copy)]
struct Plan {
    period: f64,
    duration: f64,
}

impl Plan {
    fn new(run: &RunParams, period: f64) -> Self {
        Self {
            period,
            duration: run.duration.unwrap_or(run.periods * period),
        }
    }

    /// Period seen by the fit when it rejected the sampling.
    fn observed(err: &FitError, sample_dt: f64) -> Option<f64> {
        match err {
            FitError::InsufficientSampling { per_period, .. } if per_period.is_finite() => {
                Some(per_period * sample_dt)
            }
            _ => None,
        }
    }
}

const FIT_ATTEMPTS: usize = 3;

/// Two-mode trajectory and its fit; re-planned from the observed period
/// when the first guess under- or over-shoots.
pub fn run_two_mode(
    params: &TwoModeParams,
    variant: ModelVariant,
    z0: f64,
    phi0: f64,
    run: &RunParams,
    period: f64,
) -> Result<(Trajectory, Result<SineFit, FitError>)> {
    let mut plan = Plan::new(run, period);
    let mut last = None;
    for _ in 0..FIT_ATTEMPTS {
        let dt = plan.period / run.rk4_steps_per_period as f64;
        let every = run.rk4_steps_per_period / run.samples_per_period;
        let traj = tm_integrate_sampled(
            TwoModeState::new(z0, phi0),
            params,
            variant,
            plan.duration,
            dt,
            every,
        )?;
        let fit = traj.fit();
        if let (Err(e), None) = (&fit, run.duration) {
            if let Some(p) = Plan::observed(e, dt * every as f64) {
                plan = Plan::new(run, p);
                last = Some((traj, fit));
                continue;
            }
        }
        return Ok((traj, fit));
    }
    Ok(last.expect("at least one attempt"))
}

/// z signal used for GPE fits: projection or density split.
pub fn gpe_signal<'t>(jn: &Junction, traj: &'t GpeTrajectory) -> (&'t [f64], &'t [f64]) {
    if jn.uses_projection() {
        (&traj.z, &traj.phi)
    } else {
        (&traj.z_density, &traj.phi_density)
    }
}

/// GPE trajectory from a prepared state, with the same re-planning as
/// [`run_two_mode`].
pub fn run_gpe(
    jn: &Junction,
    psi0: &FieldState,
    run: &RunParams,
    period: f64,
) -> Result<(GpeTrajectory, Result<SineFit, FitError>)> {
    let mut plan = Plan::new(run, period);
    let mut last = None;
    let gn = jn.trap.interaction();
    for _ in 0..FIT_ATTEMPTS {
        let every = ((plan.period / run.samples_per_period as f64) / run.gpe_dt)
            .floor()
            .max(1.0) as usize;
        let opts = EvolveOptions {
            t_end: plan.duration,
            dt: run.gpe_dt,
            sample_every: every,
            snapshot_every: run.snapshot_every,
            x_b: jn.barrier(),
        };
        let traj = gpe_evolve(psi0, &jn.potential, gn, &jn.modes, &opts)?;
        let fit = {
            let (z, _) = gpe_signal(jn, &traj);
            extract_frequency(&traj.t, z)
        };
        if let (Err(e), None) = (&fit, run.duration) {
            if let Some(p) = Plan::observed(e, run.gpe_dt * every as f64) {
                plan = Plan::new(run, p);
                last = Some((traj, fit));
                continue;
            }
        }
        return Ok((traj, fit));
    }
    Ok(last.expect("at least one attempt"))
}

fn sign_regime(z: &[f64]) -> Regime {
    let s0 = z[0].signum();
    if z.iter().any(|&v| v * s0 <= 0.0) {
        Regime::Oscillating
    } else {
        Regime::SelfTrapped
    }
}

/// Mean of `y` over the largest whole number of periods from t = 0.
fn mean_over_periods(t: &[f64], y: &[f64], omega: Option<f64>) -> f64 {
    let end = match omega {
        Some(w) if w > 0.0 => {
            let period = 2.0 * PI / w;
            let k = (t[t.len() - 1] / period).floor();
            if k >= 1.0 {
                t.iter().take_while(|&&ti| ti < k * period).count().max(1)
            } else {
                t.len()
            }
        }
        _ => t.len(),
    };
    y[..end].iter().sum::<f64>() / end as f64
}

fn fill_series(row: &mut ResultRow, t: &[f64], z: &[f64], phi: &[f64], fit: &Result<SineFit, FitError>) {
    let n = z.len() as f64;
    row.mean_z = Some(z.iter().sum::<f64>() / n);
    row.min_z = Some(z.iter().cloned().fold(f64::INFINITY, f64::min));
    row.max_z = Some(z.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    row.phi_advance_rad = Some(phi[phi.len() - 1] - phi[0]);
    row.mean_phi_rad = Some(mean_over_periods(t, phi, fit.as_ref().ok().map(|f| f.omega)));
}

fn fill_fit(row: &mut ResultRow, fit: &Result<SineFit, FitError>, units: &UnitSystem) {
    match fit {
        Ok(f) => {
            row.omega_hz = Some(units.angular_to_hz(f.omega));
            row.amplitude = Some(f.amplitude);
            row.offset = Some(f.offset);
            row.fit_residual = Some(f.residual);
        }
        Err(e) => row.error = Some(format!("fit: {e}")),
    }
}

/// A trajectory kept for output.
#[derive(Debug, Clone)]
pub enum TrajectoryData {
    TwoMode(Trajectory),
    Gpe(GpeTrajectory),
}

#[derive(Debug, Clone)]
pub struct NamedTrajectory {
    pub name: String,
    pub data: TrajectoryData,
}

/// Everything a scenario produces.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: &'static str,
    pub rows: Vec<ResultRow>,
    pub trajectories: Vec<NamedTrajectory>,
}

/// One model run at one initial condition, summarised as a row.
struct PointRun<'r> {
    scenario: &'static str,
    sweep_param: &'static str,
    sweep_value: f64,
    z0: f64,
    phi0: f64,
    run: &'r RunParams,
}

impl PointRun<'_> {
    fn row(&self, model: Model) -> ResultRow {
        let mut r = ResultRow::new(self.scenario, self.sweep_param, self.sweep_value, model.name());
        r.z0 = Some(self.z0);
        r.phi0_rad = Some(self.phi0);
        r
    }

    fn execute(
        &self,
        wb: &Workbench,
        jn: &Junction,
        model: Model,
    ) -> (ResultRow, Option<TrajectoryData>) {
        let mut row = self.row(model);
        jn.describe(&mut row, &wb.units);
        let out = match model.variant() {
            Some(v) => self.two_mode(wb, jn, v, &mut row),
            None => self.gpe(wb, jn, &mut row),
        };
        // measured phases start on the principal branch
        if let Some(m) = row.mean_phi_rad {
            row.mean_phi_rad = Some(m + 2.0 * PI * ((self.phi0 - m) / (2.0 * PI)).round());
        }
        match out {
            Ok(t) => (row, Some(t)),
            Err(e) => {
                row.error = Some(e.to_string());
                (row, None)
            }
        }
    }

    fn two_mode(
        &self,
        wb: &Workbench,
        jn: &Junction,
        v: ModelVariant,
        row: &mut ResultRow,
    ) -> Result<TrajectoryData> {
        let p = jn.two_mode(v)?;
        let omega = plasma_frequency(&p, v);
        row.omega_formula_hz = omega.as_ref().ok().map(|w| wb.units.angular_to_hz(*w));
        row.z_c = critical_imbalance(&p, v);
        row.regime = Some(classify_regime(self.z0, self.phi0, &p, v).name().to_string());
        let period = match omega {
            Ok(w) if w > 0.0 => 2.0 * PI / w,
            _ => 2.0 * PI / p.two_k,
        };
        let (traj, fit) = run_two_mode(&p, v, self.z0, self.phi0, self.run, period)?;
        fill_series(row, &traj.t, &traj.z, &traj.phi, &fit);
        fill_fit(row, &fit, &wb.units);
        row.energy_drift = Some(traj.energy_drift());
        row.duration_ms = Some(wb.units.time_to_ms(traj.t[traj.len() - 1]));
        Ok(TrajectoryData::TwoMode(traj))
    }

    fn gpe(&self, wb: &Workbench, jn: &Junction, row: &mut ResultRow) -> Result<TrajectoryData> {
        let (psi0, tilt) = prepare_state(wb, jn, self.z0, self.phi0, self.run.imbalance_tolerance)?;
        row.tilt_hz_per_um = Some(wb.units.energy_to_hz(tilt) * wb.units.length_from_um(1.0));
        let (traj, fit) = run_gpe(jn, &psi0, self.run, jn.period_estimate())?;
        let (z, phi) = gpe_signal(jn, &traj);
        fill_series(row, &traj.t, z, phi, &fit);
        fill_fit(row, &fit, &wb.units);
        row.regime = Some(sign_regime(z).name().to_string());
        row.leakage = Some(traj.max_leakage());
        row.norm_drift = Some(traj.norm_drift());
        row.energy_drift = Some(traj.energy_drift());
        row.duration_ms = Some(wb.units.time_to_ms(traj.t[traj.len() - 1]));
        Ok(TrajectoryData::Gpe(traj))
    }
}

fn require_linear(res: &Resolved, what: &str) -> Result<()> {
    if res.trap.scattering_length != 0.0 {
        return Err(Error::Spec(format!("{what} requires a_s = 0")));
    }
    if res.run.target_lambda.is_some_and(|l| l != 0.0) {
        return Err(Error::Spec(format!("{what} requires Λ = 0")));
    }
    Ok(())
}

fn require_sweep(res: &Resolved, what: &str) -> Result<Vec<f64>> {
    res.run
        .sweep
        .as_ref()
        .map(|s| s.values.clone())
        .ok_or_else(|| Error::Spec(format!("{what} needs run.sweep.values")))
}

fn traj_name(model: Model, tag: &str) -> String {
    format!("{}_{}", model.name(), tag)
}

fn format_value(v: f64) -> String {
    format!("{v:?}")
}

/// Rabi oscillations at a_s = 0 for each z₀.
pub fn run_rabi(res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    require_linear(res, "rabi")?;
    let jn = base_junction(res, wb)?;
    Ok(run_points(res, wb, &jn, "rabi", &res.run.models))
}

/// Every `models` entry from each configured z₀ at the configured φ₀.
pub fn run_points(
    res: &Resolved,
    wb: &Workbench,
    jn: &Junction,
    scenario: &'static str,
    models: &[Model],
) -> ScenarioOutput {
    let run = &res.run;
    let items: Vec<(f64, Model)> = run
        .z0
        .iter()
        .flat_map(|&z| models.iter().map(move |&m| (z, m)))
        .collect();
    let results = par_map(&items, |&(z0, m)| {
        let point = PointRun {
            scenario,
            sweep_param: "z0",
            sweep_value: z0,
            z0,
            phi0: run.phi0,
            run,
        };
        point.execute(wb, jn, m)
    });
    collect(scenario, &items, results, |&(z0, m)| {
        traj_name(m, &format!("z0_{}", format_value(z0)))
    })
}

fn collect<T>(
    id: &'static str,
    items: &[T],
    results: Vec<(ResultRow, Option<TrajectoryData>)>,
    name: impl Fn(&T) -> String,
) -> ScenarioOutput {
    let mut rows = Vec::with_capacity(results.len());
    let mut trajectories = Vec::new();
    for (item, (row, data)) in items.iter().zip(results) {
        rows.push(row);
        if let Some(data) = data {
            trajectories.push(NamedTrajectory {
                name: name(item),
                data,
            });
        }
    }
    sort_rows(&mut rows);
    ScenarioOutput {
        scenario: id,
        rows,
        trajectories,
    }
}

/// Oscillations about φ = π (offset δ), the π fixed point itself, and the
/// φ = δ reference, all from z₀ = 0 at a_s = 0.
pub fn run_pi_phase(res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    require_linear(res, "pi_phase")?;
    let jn = base_junction(res, wb)?;
    let run = &res.run;
    let d = run.phase_offset;
    let cases = [(PI + d, "pi_offset"), (PI, "pi"), (d, "zero_offset")];
    let items: Vec<(f64, &str, Model)> = cases
        .iter()
        .flat_map(|&(p, tag)| run.models.iter().map(move |&m| (p, tag, m)))
        .collect();
    let results = par_map(&items, |&(phi0, _, m)| {
        let point = PointRun {
            scenario: "pi_phase",
            sweep_param: "phi0",
            sweep_value: phi0,
            z0: 0.0,
            phi0,
            run,
        };
        let (mut row, data) = point.execute(wb, &jn, m);
        // the π point is a fixed point: no oscillation is the expected result
        let flat = row.max_z.zip(row.min_z).map(|(a, b)| a.abs().max(b.abs()));
        if flat.is_some_and(|v| v < 1e-3) && row.omega_hz.is_none() {
            row.error = None;
            row.regime = Some("stationary".to_string());
        }
        (row, data)
    });
    Ok(collect("pi_phase", &items, results, |&(_, tag, m)| traj_name(m, tag)))
}

/// Small-amplitude frequency against Λ.
pub fn sweep_lambda(res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    let values = require_sweep(res, "sweep_lambda")?;
    let run = &res.run;
    let mode = run.sweep.as_ref().map(|s| s.barrier).unwrap_or_default();
    let trap = base_trap(res, wb)?;
    let linear = run.models.contains(&Model::Tms);
    let z0 = run.z0[0];
    let per_point = par_map(&values, |&lambda| {
        let point = PointRun {
            scenario: "sweep_lambda",
            sweep_param: "lambda",
            sweep_value: lambda,
            z0,
            phi0: run.phi0,
            run,
        };
        if lambda <= -1.0 {
            return run
                .models
                .iter()
                .map(|&m| {
                    let mut r = point.row(m);
                    r.regime = Some("past_critical".to_string());
                    r.error = Some("past critical: Λ ≤ -1".to_string());
                    r
                })
                .collect::<Vec<_>>();
        }
        let jn = match mode {
            BarrierMode::Fixed => tune_lambda(wb, &trap, lambda, linear),
            BarrierMode::Tunneling => {
                tune_lambda_tunneling(wb, &trap, lambda, run.tunneling_margin, linear)
            }
        };
        let jn = match jn {
            Ok(j) => j,
            Err(e) => {
                return run
                    .models
                    .iter()
                    .map(|&m| {
                        let mut r = point.row(m);
                        r.error = Some(e.to_string());
                        r
                    })
                    .collect()
            }
        };
        run.models
            .iter()
            .map(|&m| {
                let (mut row, _) = point.execute(wb, &jn, m);
                if let Some(v) = m.variant() {
                    band(&mut row, &jn, v, run, &wb.units);
                }
                row
            })
            .collect()
    });
    let mut rows: Vec<ResultRow> = per_point.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(ScenarioOutput {
        scenario: "sweep_lambda",
        rows,
        trajectories: Vec::new(),
    })
}

/// Fitted frequencies at the two band-edge amplitudes.
fn band(row: &mut ResultRow, jn: &Junction, v: ModelVariant, run: &RunParams, units: &UnitSystem) {
    let Ok(p) = jn.two_mode(v) else { return };
    let Ok(w) = plasma_frequency(&p, v) else { return };
    if w <= 0.0 {
        return;
    }
    let fits: Vec<Option<f64>> = run
        .band_z0
        .iter()
        .map(|&z| {
            run_two_mode(&p, v, z, run.phi0, run, 2.0 * PI / w)
                .ok()
                .and_then(|(_, f)| f.ok())
                .map(|f| units.angular_to_hz(f.omega))
        })
        .collect();
    if let [Some(a), Some(b)] = fits[..] {
        row.omega_band_lo_hz = Some(a.min(b));
        row.omega_band_hi_hz = Some(a.max(b));
    }
}

/// Number of small-amplitude periods a trajectory classification runs for.
const CLASSIFY_PERIODS: f64 = 20.0;

/// Oscillating/trapped by whether z changes sign within a fixed window.
pub fn trajectory_regime(
    p: &TwoModeParams,
    v: ModelVariant,
    z0: f64,
    phi0: f64,
    period: f64,
) -> Option<Regime> {
    let dt = period / 1000.0;
    match tm_integrate_sampled(TwoModeState::new(z0, phi0), p, v, CLASSIFY_PERIODS * period, dt, 10) {
        Ok(t) => Some(sign_regime(&t.z)),
        Err(_) => None,
    }
}

/// Frequency and regime against z₀, plus the located regime boundaries.
pub fn sweep_z0(res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    let values = require_sweep(res, "sweep_z0")?;
    if values.iter().any(|&z| !(z > 0.0 && z < 0.95)) {
        return Err(Error::Spec("sweep_z0 values must lie in (0, 0.95)".to_string()));
    }
    let jn = base_junction(res, wb)?;
    let run = &res.run;
    let items: Vec<(f64, Model)> = values
        .iter()
        .flat_map(|&z| run.models.iter().map(move |&m| (z, m)))
        .collect();
    let results = par_map(&items, |&(z0, m)| {
        let point = PointRun {
            scenario: "sweep_z0",
            sweep_param: "z0",
            sweep_value: z0,
            z0,
            phi0: run.phi0,
            run,
        };
        point.execute(wb, &jn, m)
    });
    let mut out = collect("sweep_z0", &items, results, |_| String::new());
    out.trajectories.clear();
    out.rows.extend(boundaries(res, wb, &jn)?);
    sort_rows(&mut out.rows);
    Ok(out)
}

fn boundary_row(
    wb: &Workbench,
    jn: &Junction,
    model: Model,
    method: &str,
    found: Option<f64>,
    run: &RunParams,
) -> ResultRow {
    let mut r = ResultRow::new("sweep_z0", "z0", found.unwrap_or(f64::NAN), model.name());
    jn.describe(&mut r, &wb.units);
    r.phi0_rad = Some(run.phi0);
    r.regime = Some(format!("boundary_{method}"));
    if let Some(v) = model.variant() {
        r.z_c = jn.two_mode(v).ok().and_then(|p| critical_imbalance(&p, v));
    }
    if found.is_none() {
        r.error = Some("no oscillating/trapped boundary in the search interval".to_string());
    }
    r
}

const BOUNDARY_LO: f64 = 1e-3;
const BOUNDARY_HI: f64 = 0.94;

fn boundaries(res: &Resolved, wb: &Workbench, jn: &Junction) -> Result<Vec<ResultRow>> {
    let run = &res.run;
    let tol = run.boundary_tolerance;
    let mut rows = Vec::new();
    for v in run.two_mode_models() {
        let model = match v {
            ModelVariant::Tms => Model::Tms,
            ModelVariant::Jgp => Model::Jgp,
            ModelVariant::Tmgp => Model::Tmgp,
        };
        let p = jn.two_mode(v)?;
        let energy = locate_boundary(
            |z| Some(classify_regime(z, run.phi0, &p, v)),
            BOUNDARY_LO,
            BOUNDARY_HI,
            tol,
        );
        rows.push(boundary_row(wb, jn, model, "energy", energy, run));
        let period = plasma_frequency(&p, v)
            .ok()
            .filter(|w| *w > 0.0)
            .map(|w| 2.0 * PI / w)
            .unwrap_or(2.0 * PI / p.two_k);
        let traj = locate_boundary(
            |z| trajectory_regime(&p, v, z, run.phi0, period),
            BOUNDARY_LO,
            BOUNDARY_HI,
            tol,
        );
        rows.push(boundary_row(wb, jn, model, "trajectory", traj, run));
    }
    if run.gpe_boundary && run.has_gpe() {
        let period = jn.period_estimate();
        let classify = |z: f64| -> Option<Regime> {
            let (psi, _) = prepare_state(wb, jn, z, run.phi0, run.imbalance_tolerance).ok()?;
            let opts = EvolveOptions {
                t_end: run.periods * period,
                dt: run.gpe_dt,
                sample_every: ((period / run.samples_per_period as f64) / run.gpe_dt)
                    .floor()
                    .max(1.0) as usize,
                snapshot_every: 0,
                x_b: jn.barrier(),
            };
            let t = gpe_evolve(&psi, &jn.potential, jn.trap.interaction(), &jn.modes, &opts).ok()?;
            Some(sign_regime(gpe_signal(jn, &t).0))
        };
        let found = locate_boundary(classify, 0.05, 0.9, tol.max(0.01));
        rows.push(boundary_row(wb, jn, Model::Gpe, "trajectory", found, run));
    }
    Ok(rows)
}

/// Self-trapped runs with full trajectory dumps. Refuses initial conditions
/// that the energy classifier does not place in the trapped regime.
pub fn run_mqst(res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    let jn = base_junction(res, wb)?;
    let run = &res.run;
    for v in run.two_mode_models() {
        let p = jn.two_mode(v)?;
        for &z0 in &run.z0 {
            let r = classify_regime(z0, run.phi0, &p, v);
            if r != Regime::SelfTrapped {
                return Err(Error::Spec(format!(
                    "z0 = {z0} is {} for {} at Λ = {:.4} (z_c = {})",
                    r.name(),
                    v.name(),
                    p.lambda(),
                    critical_imbalance(&p, v).map_or("none".to_string(), |z| format!("{z:.4}"))
                )));
            }
        }
    }
    let items: Vec<(f64, Model)> = run
        .z0
        .iter()
        .flat_map(|&z| run.models.iter().map(move |&m| (z, m)))
        .collect();
    let results = par_map(&items, |&(z0, m)| {
        let point = PointRun {
            scenario: "mqst",
            sweep_param: "z0",
            sweep_value: z0,
            z0,
            phi0: run.phi0,
            run,
        };
        point.execute(wb, &jn, m)
    });
    Ok(collect("mqst", &items, results, |&(z0, m)| {
        traj_name(m, &format!("z0_{}", format_value(z0)))
    }))
}

pub fn run_scenario(id: ScenarioId, res: &Resolved, wb: &Workbench) -> Result<ScenarioOutput> {
    match id {
        ScenarioId::Rabi => run_rabi(res, wb),
        ScenarioId::PiPhase => run_pi_phase(res, wb),
        ScenarioId::SweepLambda => sweep_lambda(res, wb),
        ScenarioId::SweepZ0 => sweep_z0(res, wb),
        ScenarioId::Mqst => run_mqst(res, wb),
    }
}
