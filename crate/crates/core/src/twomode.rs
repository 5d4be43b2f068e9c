//! Two-mode dynamics of the junction in (z, φ) and amplitude form.
//!
//! With A = NU − 2NI₂, B = 2K − 2NI₃ and C = NI₂ the Hamiltonian is
//!
//! H(z, φ) = A z²/2 − B √(1−z²) cos φ + ½ C (1−z²) cos 2φ
//!
//! and the flow is ż = ∂H/∂φ, φ̇ = −∂H/∂z (ħ = 1). This orientation is the one
//! generated by the amplitude equations with φ = arg c_L − arg c_R, so both
//! integrators below describe the same motion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{extract_frequency, FitError, SineFit};
use crate::modes::JunctionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    #[serde(rename = "TMS")]
    Tms,
    #[serde(rename = "JGP")]
    Jgp,
    #[serde(rename = "TMGP")]
    Tmgp,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Tms => "TMS",
            ModelVariant::Jgp => "JGP",
            ModelVariant::Tmgp => "TMGP",
        }
    }

    fn keeps_overlaps(self) -> bool {
        self == ModelVariant::Tmgp
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoModeError {
    #[error("|z| = {z} at the pole of the phase equation")]
    Pole { z: f64 },
    #[error("|z| = {z} exceeded 0.9999 at t = {t}; integration stopped")]
    PoleProximity {
        t: f64,
        z: f64,
        partial: Box<Trajectory>,
    },
    #[error("beyond the symmetry-breaking transition (ω² = {omega_sqr})")]
    PastCritical { omega_sqr: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(&'static str),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Energy scales entering the two-mode equations. `n_i2` and `n_i3` are
/// ignored by the JGP and TMS variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeParams {
    pub two_k: f64,
    pub nu: f64,
    pub n_i2: f64,
    pub n_i3: f64,
    /// On-site energy E₀; only shifts the common phase.
    pub e0: f64,
}

impl TwoModeParams {
    pub fn josephson(two_k: f64, nu: f64) -> Self {
        Self {
            two_k,
            nu,
            n_i2: 0.0,
            n_i3: 0.0,
            e0: 0.0,
        }
    }

    /// Λ = NU/2K with 2K fixed.
    pub fn with_lambda(two_k: f64, lambda: f64) -> Self {
        Self::josephson(two_k, lambda * two_k)
    }

    pub fn from_junction(jp: &JunctionParams) -> Self {
        Self {
            two_k: jp.two_k(),
            nu: jp.nu(),
            n_i2: jp.n_i2,
            n_i3: jp.n_i3,
            e0: jp.e0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.nu / self.two_k
    }

    /// max(|2K|, |NU|/2), the scale used for relative energy checks.
    pub fn energy_scale(&self) -> f64 {
        self.two_k.abs().max(0.5 * self.nu.abs())
    }

    /// (A, B, C) for the variant.
    pub fn coefficients(&self, variant: ModelVariant) -> (f64, f64, f64) {
        if variant.keeps_overlaps() {
            (
                self.nu - 2.0 * self.n_i2,
                self.two_k - 2.0 * self.n_i3,
                self.n_i2,
            )
        } else {
            (self.nu, self.two_k, 0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeState {
    pub z: f64,
    pub phi: f64,
}

impl TwoModeState {
    pub fn new(z: f64, phi: f64) -> Self {
        Self { z, phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState {
    pub c_l: Complex64,
    pub c_r: Complex64,
}

impl AmplitudeState {
    /// c_L = √((1+z)/2), c_R = √((1−z)/2)·e^{−iφ}.
    pub fn from_z_phi(z: f64, phi: f64) -> Self {
        Self {
            c_l: Complex64::new((0.5 * (1.0 + z)).sqrt(), 0.0),
            c_r: Complex64::from_polar((0.5 * (1.0 - z)).sqrt(), -phi),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_l.norm_sqr() + self.c_r.norm_sqr()
    }

    pub fn z(&self) -> f64 {
        let (l, r) = (self.c_l.norm_sqr(), self.c_r.norm_sqr());
        (l - r) / (l + r)
    }

    pub fn phi(&self) -> f64 {
        self.c_l.arg() - self.c_r.arg()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// Unwrapped relative phase.
    pub phi: Vec<f64>,
    pub energy: Vec<f64>,
    pub variant: ModelVariant,
    pub params: TwoModeParams,
    /// max | |c_L|² + |c_R|² − 1 | for amplitude runs.
    pub norm_drift: Option<f64>,
}

impl Trajectory {
    fn with_capacity(variant: ModelVariant, params: TwoModeParams, cap: usize) -> Self {
        Self {
            t: Vec::with_capacity(cap),
            z: Vec::with_capacity(cap),
            phi: Vec::with_capacity(cap),
            energy: Vec::with_capacity(cap),
            variant,
            params,
            norm_drift: None,
        }
    }

    fn push(&mut self, t: f64, z: f64, phi: f64, e: f64) {
        self.t.push(t);
        self.z.push(z);
        self.phi.push(phi);
        self.energy.push(e);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// max |H(t) − H(0)| / energy scale.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = self.params.energy_scale();
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn mean_z(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }

    pub fn fit(&self) -> Result<SineFit, FitError> {
        extract_frequency(&self.t, &self.z)
    }
}

fn check_pole(z: f64) -> Result<f64, TwoModeError> {
    let s2 = 1.0 - z * z;
    if s2 <= 0.0 {
        Err(TwoModeError::Pole { z })
    } else {
        Ok(s2.sqrt())
    }
}

/// (ż, φ̇) at (z, φ).
pub fn tm_derivatives(
    state: TwoModeState,
    params: &TwoModeParams,
    variant: ModelVariant,
) -> Result<(f64, f64), TwoModeError> {
    let (a, b, c) = params.coefficients(variant);
    let TwoModeState { z, phi } = state;
    let s = check_pole(z)?;
    let (sin1, cos1) = phi.sin_cos();
    let (sin2, cos2) = (2.0 * phi).sin_cos();
    let zdot = b * s * sin1 - c * (1.0 - z * z) * sin2;
    let phidot = -a * z - b * z / s * cos1 + c * z * cos2;
    Ok((zdot, phidot))
}

pub fn tm_energy(z: f64, phi: f64, params: &TwoModeParams, variant: ModelVariant) -> f64 {
    let (a, b, c) = params.coefficients(variant);
    let s2 = (1.0 - z * z).max(0.0);
    0.5 * a * z * z - b * s2.sqrt() * phi.cos() + 0.5 * c * s2 * (2.0 * phi).cos()
}

/// Classical RK4 with fixed step, keeping every `sample_every`-th point.
pub fn tm_integrate_sampled(
    state0: TwoModeState,
    params: &TwoModeParams,
    variant: ModelVariant,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory, TwoModeError> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(TwoModeError::InvalidRequest("dt and t_end must be positive"));
    }
    if state0.z.abs() > 0.999 {
        return Err(TwoModeError::InvalidRequest("|z0| must not exceed 0.999"));
    }
    let every = sample_every.max(1);
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory::with_capacity(variant, *params, steps / every + 1);
    let (mut z, mut phi) = (state0.z, state0.phi);
    traj.push(0.0, z, phi, tm_energy(z, phi, params, variant));
    let f = |z: f64, p: f64| tm_derivatives(TwoModeState::new(z, p), params, variant);
    for i in 1..=steps {
        let t = i as f64 * dt;
        let step = (|| -> Result<(f64, f64), TwoModeError> {
            let k1 = f(z, phi)?;
            let k2 = f(z + 0.5 * dt * k1.0, phi + 0.5 * dt * k1.1)?;
            let k3 = f(z + 0.5 * dt * k2.0, phi + 0.5 * dt * k2.1)?;
            let k4 = f(z + dt * k3.0, phi + dt * k3.1)?;
            Ok((
                z + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                phi + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            ))
        })();
        match step {
            Ok((zn, pn)) if zn.abs() <= 0.9999 => {
                z = zn;
                phi = pn;
            }
            Ok((zn, _)) => {
                return Err(TwoModeError::PoleProximity {
                    t,
                    z: zn,
                    partial: Box::new(traj),
                })
            }
            Err(_) => {
                return Err(TwoModeError::PoleProximity {
                    t,
                    z,
                    partial: Box::new(traj),
                })
            }
        }
        if i % every == 0 {
            traj.push(t, z, phi, tm_energy(z, phi, params, variant));
        }
    }
    Ok(traj)
}

pub fn tm_integrate(
    state0: TwoModeState,
    params: &TwoModeParams,
    variant: ModelVariant,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, TwoModeError> {
    tm_integrate_sampled(state0, params, variant, t_end, dt, 1)
}

fn amp_rhs(c: [Complex64; 2], p: &TwoModeParams) -> [Complex64; 2] {
    let [cl, cr] = c;
    let (nl, nr) = (cl.norm_sqr(), cr.norm_sqr());
    let k = 0.5 * p.two_k;
    let (nu, ni2, ni3) = (p.nu, p.n_i2, p.n_i3);
    let m11 = p.e0 + nl * nu + ni3 * cr.conj() * cl + 2.0 * nr * ni2;
    let m12 = -k + 2.0 * nl * ni3 + ni2 * cl.conj() * cr + nr * ni3;
    let m21 = -k + 2.0 * nr * ni3 + ni2 * cr.conj() * cl + nl * ni3;
    let m22 = p.e0 + nr * nu + ni3 * cl.conj() * cr + 2.0 * nl * ni2;
    let mi = Complex64::new(0.0, -1.0);
    [mi * (m11 * cl + m12 * cr), mi * (m21 * cl + m22 * cr)]
}

fn wrap(d: f64) -> f64 {
    let mut d = (d + PI).rem_euclid(2.0 * PI) - PI;
    if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// RK4 on the complex amplitude equations. `variant` selects which overlap
/// terms are kept and labels the output.
pub fn amp_integrate(
    amp0: AmplitudeState,
    params: &TwoModeParams,
    variant: ModelVariant,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, TwoModeError> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(TwoModeError::InvalidRequest("dt and t_end must be positive"));
    }
    let p = if variant.keeps_overlaps() {
        *params
    } else {
        TwoModeParams {
            n_i2: 0.0,
            n_i3: 0.0,
            ..*params
        }
    };
    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory::with_capacity(variant, *params, steps + 1);
    let mut c = [amp0.c_l, amp0.c_r];
    let mut st = AmplitudeState { c_l: c[0], c_r: c[1] };
    let norm0 = st.norm_sqr();
    let mut phi = st.phi();
    let mut drift: f64 = 0.0;
    traj.push(0.0, st.z(), phi, tm_energy(st.z(), phi, params, variant));
    let add = |a: [Complex64; 2], b: [Complex64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for i in 1..=steps {
        let k1 = amp_rhs(c, &p);
        let k2 = amp_rhs(add(c, k1, 0.5 * dt), &p);
        let k3 = amp_rhs(add(c, k2, 0.5 * dt), &p);
        let k4 = amp_rhs(add(c, k3, dt), &p);
        for j in 0..2 {
            c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        let prev = st.phi();
        st = AmplitudeState { c_l: c[0], c_r: c[1] };
        phi += wrap(st.phi() - prev);
        drift = drift.max((st.norm_sqr() - norm0).abs());
        let z = st.z();
        traj.push(i as f64 * dt, z, phi, tm_energy(z, phi, params, variant));
    }
    traj.norm_drift = Some(drift);
    Ok(traj)
}

/// Small-amplitude oscillation frequency about (0, 0).
pub fn plasma_frequency(params: &TwoModeParams, variant: ModelVariant) -> Result<f64, TwoModeError> {
    let (a, b, c) = params.coefficients(variant);
    // H_zz and H_φφ at the origin
    let hzz = a + b - c;
    let hpp = b - 2.0 * c;
    let w2 = hzz * hpp;
    if hzz < 0.0 || hpp < 0.0 || w2 < 0.0 {
        return Err(TwoModeError::PastCritical { omega_sqr: w2 });
    }
    Ok(w2.sqrt())
}

/// Critical imbalance for self-trapping from φ₀ = 0: the root of
/// H(z, 0) = H(0, π). `None` when no such root exists; 1 when the only root
/// lies on the unphysical branch √(1−z²) < 0.
pub fn critical_imbalance(params: &TwoModeParams, variant: ModelVariant) -> Option<f64> {
    let (a, b, c) = params.coefficients(variant);
    let d = a - c;
    if params.nu == 0.0 || d == 0.0 {
        return None;
    }
    let q = b;
    let prod = q * (d - q);
    if prod <= 0.0 {
        return None;
    }
    let z = 2.0 / d.abs() * prod.sqrt();
    // √(1−z²) = 1 − 2B/D must be non-negative for a physical root
    if 1.0 - 2.0 * q / d < 0.0 || z > 1.0 {
        return Some(1.0);
    }
    Some(z)
}

/// JGP critical imbalance with the coupling renormalised to 2K − 2NI₃.
pub fn renormalized_critical_imbalance(params: &TwoModeParams) -> Option<f64> {
    let p = TwoModeParams::josephson(params.two_k - 2.0 * params.n_i3, params.nu);
    critical_imbalance(&p, ModelVariant::Jgp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Oscillating,
    SelfTrapped,
    Critical,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Oscillating => "oscillating",
            Regime::SelfTrapped => "self_trapped",
            Regime::Critical => "critical",
        }
    }
}

/// Energy-threshold classification: orbits with H above max_φ H(0, φ) or
/// below min_φ H(0, φ) cannot reach z = 0.
pub fn classify_regime(
    z0: f64,
    phi0: f64,
    params: &TwoModeParams,
    variant: ModelVariant,
) -> Regime {
    let h = tm_energy(z0, phi0, params, variant);
    let (_, b, c) = params.coefficients(variant);
    // H(0, φ) = −B cos φ + ½C cos 2φ; extrema at cos φ = ±1 or cos φ = B/2C
    let mut cands = vec![-b + 0.5 * c, b + 0.5 * c];
    if c != 0.0 && (b / (2.0 * c)).abs() <= 1.0 {
        let cp = b / (2.0 * c);
        cands.push(-b * cp + 0.5 * c * (2.0 * cp * cp - 1.0));
    }
    let hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * params.energy_scale();
    if (h - hi).abs() <= tol || (h - lo).abs() <= tol {
        Regime::Critical
    } else if h > hi || h < lo {
        Regime::SelfTrapped
    } else {
        Regime::Oscillating
    }
}

/// Oscillating if z(t) reaches the opposite sign of z(0) (or zero).
pub fn classify_trajectory(traj: &Trajectory) -> Regime {
    let s0 = traj.z[0].signum();
    if traj.z.iter().any(|&z| z * s0 <= 0.0) {
        Regime::Oscillating
    } else {
        Regime::SelfTrapped
    }
}

/// Bisection for the oscillating/self-trapped boundary in z₀ on
/// `[lo, hi]`, where `lo` oscillates and `hi` is trapped.
pub fn locate_boundary<F>(mut classify: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> Option<Regime>,
{
    if classify(lo)? != Regime::Oscillating || classify(hi)? != Regime::SelfTrapped {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match classify(mid)? {
            Regime::SelfTrapped => hi = mid,
            _ => lo = mid,
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hz(f: f64) -> f64 {
        crate::units::UnitSystem::potassium_39().energy_from_hz(f)
    }

    #[test]
    fn fixed_point_and_direct_substitution() {
        let p = TwoModeParams::with_lambda(0.2, 5.0);
        for v in [ModelVariant::Tms, ModelVariant::Jgp, ModelVariant::Tmgp] {
            assert_eq!(tm_derivatives(TwoModeState::new(0.0, 0.0), &p, v).unwrap(), (0.0, 0.0));
        }
        let (zd, pd) = tm_derivatives(TwoModeState::new(0.0, PI / 2.0), &p, ModelVariant::Jgp).unwrap();
        assert!((zd - 0.2).abs() < 1e-15);
        assert!(pd.abs() < 1e-15);
        assert!(matches!(
            tm_derivatives(TwoModeState::new(1.0, 0.0), &p, ModelVariant::Jgp),
            Err(TwoModeError::Pole { .. })
        ));
    }

    #[test]
    fn tmgp_rates_at_reference_point() {
        // independent transcription of the printed rate equations; the
        // implemented flow is their time reverse
        let two_k = hz(6.7);
        let ni2 = hz(0.3);
        let ni3 = hz(-1.7);
        let nu = 30.0 * two_k;
        let (z, phi): (f64, f64) = (0.3, 0.4);
        let s = (1.0 - z * z).sqrt();
        let printed_zdot =
            (-two_k + 2.0 * ni3) * s * phi.sin() + ni2 * (1.0 - z * z) * (2.0 * phi).sin();
        let printed_phidot = (nu - 2.0 * ni2) * z + (two_k - 2.0 * ni3) * z / s * phi.cos()
            - ni2 * z * (2.0 * phi).cos();
        let p = TwoModeParams {
            two_k,
            nu,
            n_i2: ni2,
            n_i3: ni3,
            e0: 0.0,
        };
        let (zd, pd) = tm_derivatives(TwoModeState::new(z, phi), &p, ModelVariant::Tmgp).unwrap();
        assert!((zd + printed_zdot).abs() < 1e-13 * printed_zdot.abs());
        assert!((pd + printed_phidot).abs() < 1e-13 * printed_phidot.abs());
    }

    #[test]
    fn canonical_form_matches_numerical_gradient() {
        let p = TwoModeParams {
            two_k: 0.3,
            nu: 4.0,
            n_i2: 0.02,
            n_i3: -0.05,
            e0: 0.0,
        };
        let v = ModelVariant::Tmgp;
        let (z, phi) = (0.35, 1.1);
        let h = 1e-6;
        let dh_dphi = (tm_energy(z, phi + h, &p, v) - tm_energy(z, phi - h, &p, v)) / (2.0 * h);
        let dh_dz = (tm_energy(z + h, phi, &p, v) - tm_energy(z - h, phi, &p, v)) / (2.0 * h);
        let (zd, pd) = tm_derivatives(TwoModeState::new(z, phi), &p, v).unwrap();
        assert!((zd - dh_dphi).abs() < 1e-8);
        assert!((pd + dh_dz).abs() < 1e-8);
    }

    #[test]
    fn energy_values() {
        let p = TwoModeParams::with_lambda(0.4, 2.0);
        let v = ModelVariant::Jgp;
        assert!((tm_energy(0.0, PI, &p, v) - 0.4).abs() < 1e-15);
        assert!((tm_energy(1.0, 0.7, &p, v) - 0.4).abs() < 1e-15);
        let zc = critical_imbalance(&p, v).unwrap();
        assert_eq!(zc, 1.0);
        assert!((tm_energy(zc, 0.0, &p, v) - tm_energy(0.0, PI, &p, v)).abs() < 1e-15);
    }

    #[test]
    fn rabi_closed_form() {
        let p = TwoModeParams::josephson(0.8, 0.0);
        let period = 2.0 * PI / 0.8;
        let dt = period / 1000.0;
        let tr = tm_integrate(TwoModeState::new(0.4, 0.0), &p, ModelVariant::Jgp, 5.0 * period, dt)
            .unwrap();
        let dev = tr
            .t
            .iter()
            .zip(&tr.z)
            .map(|(t, z)| (z - 0.4 * (0.8 * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn below_and_above_critical() {
        let p = TwoModeParams::with_lambda(0.2, 17.0);
        let w = plasma_frequency(&p, ModelVariant::Jgp).unwrap();
        let dt = 2.0 * PI / w / 1000.0;
        let t_end = 30.0 * 2.0 * PI / w;
        let osc = tm_integrate(TwoModeState::new(0.3, 0.0), &p, ModelVariant::Jgp, t_end, dt).unwrap();
        assert!(osc.mean_z().abs() < 0.01, "{}", osc.mean_z());
        let tr = tm_integrate(TwoModeState::new(0.7, 0.0), &p, ModelVariant::Jgp, t_end, dt).unwrap();
        assert!(tr.mean_z() > 0.4);
        assert!((tr.phi.last().unwrap() - tr.phi[0]).abs() > 4.0 * PI);
        assert_eq!(classify_trajectory(&tr), Regime::SelfTrapped);
        assert_eq!(classify_trajectory(&osc), Regime::Oscillating);
    }

    #[test]
    fn plasma_frequency_values() {
        let v = ModelVariant::Jgp;
        let two_k = 0.5;
        for (lam, ratio) in [(0.0, 1.0), (3.0, 2.0), (15.0, 4.0), (-1.0, 0.0)] {
            let w = plasma_frequency(&TwoModeParams::with_lambda(two_k, lam), v).unwrap();
            assert_eq!(w / two_k, ratio);
        }
        assert!(matches!(
            plasma_frequency(&TwoModeParams::with_lambda(two_k, -1.2), v),
            Err(TwoModeError::PastCritical { .. })
        ));
        // TMGP against the printed bracket form
        let p = TwoModeParams {
            two_k: 0.3,
            nu: 3.0,
            n_i2: 0.01,
            n_i3: -0.04,
            e0: 0.0,
        };
        let k = 0.15;
        let n = 1.0;
        let (i2, i3) = (p.n_i2, p.n_i3);
        let printed = 2.0 * k
            * ((1.0 - 2.0 * n * (i3 + i2) / (2.0 * k))
                * (1.0 + p.nu / (2.0 * k) - n * (3.0 * i2 + 2.0 * i3) / (2.0 * k)))
                .sqrt();
        let w = plasma_frequency(&p, ModelVariant::Tmgp).unwrap();
        assert!((w - printed).abs() < 1e-14);
    }

    #[test]
    fn critical_imbalance_values() {
        let v = ModelVariant::Jgp;
        let z17 = critical_imbalance(&TwoModeParams::with_lambda(0.3, 17.0), v).unwrap();
        assert!((z17 - 2.0 / 17.0 * 4.0).abs() < 1e-15);
        let z10 = critical_imbalance(&TwoModeParams::with_lambda(0.3, 10.0), v).unwrap();
        assert!((z10 - 0.6).abs() < 1e-15);
        for lam in [-3.0, 0.0, 0.5, 1.0] {
            assert_eq!(critical_imbalance(&TwoModeParams::with_lambda(0.3, lam), v), None);
        }
        // printed TMGP closed form
        let p = TwoModeParams {
            two_k: hz(6.7),
            nu: 30.0 * hz(6.7),
            n_i2: hz(0.3),
            n_i3: hz(-1.7),
            e0: 0.0,
        };
        let (k, nu, ni2, ni3) = (0.5 * p.two_k, p.nu, p.n_i2, p.n_i3);
        let printed = 4.0 * k / nu / (1.0 - 3.0 * ni2 / nu)
            * ((1.0 - ni3 / k) * (nu / (2.0 * k) - 1.0 + (2.0 * ni3 - 3.0 * ni2) / (2.0 * k))).sqrt();
        let zc = critical_imbalance(&p, ModelVariant::Tmgp).unwrap();
        assert!((zc - printed).abs() < 1e-13);
        let no_i2 = TwoModeParams { n_i2: 0.0, ..p };
        assert_eq!(
            renormalized_critical_imbalance(&p),
            critical_imbalance(&no_i2, ModelVariant::Tmgp)
        );
    }

    #[test]
    fn classifier_thresholds() {
        let p = TwoModeParams::with_lambda(0.3, 17.0);
        let v = ModelVariant::Jgp;
        assert_eq!(classify_regime(0.1, 0.0, &p, v), Regime::Oscillating);
        assert_eq!(classify_regime(0.7, 0.0, &p, v), Regime::SelfTrapped);
        let zc = critical_imbalance(&p, v).unwrap();
        assert_eq!(classify_regime(zc, 0.0, &p, v), Regime::Critical);
        let p10 = TwoModeParams::with_lambda(0.3, 10.0);
        assert_eq!(classify_regime(0.6, 0.0, &p10, v), Regime::Critical);
        assert_eq!(classify_regime(0.7, 0.0, &p10, v), Regime::SelfTrapped);
    }

    #[test]
    fn tmgp_without_overlaps_is_jgp() {
        let p = TwoModeParams::with_lambda(0.3, 6.0);
        let a = tm_integrate(TwoModeState::new(0.4, 0.2), &p, ModelVariant::Jgp, 40.0, 0.01).unwrap();
        let b = tm_integrate(TwoModeState::new(0.4, 0.2), &p, ModelVariant::Tmgp, 40.0, 0.01).unwrap();
        let d = a.z.iter().zip(&b.z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn amplitude_form_matches_rabi() {
        let p = TwoModeParams::josephson(0.6, 0.0);
        let amp = AmplitudeState::from_z_phi(1.0 - 1e-15, 0.0);
        let tr = amp_integrate(amp, &p, ModelVariant::Jgp, 30.0, 0.005).unwrap();
        for (t, z) in tr.t.iter().zip(&tr.z) {
            assert!((z - (0.6 * t).cos()).abs() < 1e-8);
        }
        assert!(tr.norm_drift.unwrap() < 1e-10);
    }

    #[test]
    fn omega_increasing_in_lambda() {
        let v = ModelVariant::Jgp;
        let mut last = -1.0;
        for i in 0..50 {
            let lam = -0.999 + 20.0 * i as f64 / 49.0;
            let w = plasma_frequency(&TwoModeParams::with_lambda(0.4, lam), v).unwrap();
            assert!(w > last);
            last = w;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mirror_trajectory(z0 in -0.8f64..0.8, phi0 in -1.0f64..1.0, lam in -0.9f64..20.0) {
            let p = TwoModeParams::with_lambda(0.3, lam);
            for v in [ModelVariant::Jgp, ModelVariant::Tmgp] {
                let a = tm_integrate(TwoModeState::new(z0, phi0), &p, v, 20.0, 0.01);
                let b = tm_integrate(TwoModeState::new(-z0, -phi0), &p, v, 20.0, 0.01);
                if let (Ok(a), Ok(b)) = (a, b) {
                    for i in 0..a.len() {
                        prop_assert!((a.z[i] + b.z[i]).abs() < 1e-12);
                        prop_assert!((a.phi[i] + b.phi[i]).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn amplitude_and_phase_forms_agree(z0 in -0.9f64..0.9, phi0 in -3.0f64..3.0, lam in -0.9f64..12.0) {
            let p = TwoModeParams::with_lambda(0.3, lam);
            // fastest rate is the trapped phase rotation, ~2K(1 + |Λ|)
            let dt = 2.0 * PI / (p.two_k * (1.0 + lam.abs())) / 4000.0;
            let a = tm_integrate(TwoModeState::new(z0, phi0), &p, ModelVariant::Jgp, 20.0, dt);
            let b = amp_integrate(AmplitudeState::from_z_phi(z0, phi0), &p, ModelVariant::Jgp, 20.0, dt).unwrap();
            if let Ok(a) = a {
                let d = a.z.iter().zip(&b.z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                prop_assert!(d < 1e-8, "{}", d);
            }
        }
    }
}
