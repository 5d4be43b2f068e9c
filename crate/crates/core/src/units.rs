//! Physical constants and the internal unit system.
//!
//! Internally every quantity is expressed with ħ = 1, m = m(³⁹K) = 1 and a
//! length unit of 1 μm. The energy unit is then E_u = ħ²/(m·L₀²) ≈ h·259.2 Hz
//! and the time unit t_u = ħ/E_u ≈ 0.614 ms.

use serde::{Deserialize, Serialize};

/// Constants in SI units. All values are CODATA 2018 recommended values.
pub mod constants {
    /// Planck constant h (exact by definition of the SI), J·s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant ħ = h/2π, J·s (1.054 571 817e-34 to the
    /// quoted digits; derived from h so that h = 2πħ holds in floating point).
    pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
    /// Boltzmann constant k_B (exact), J/K.
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Unified atomic mass unit, kg.
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// Bohr radius a₀, m.
    pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
    /// Mass number of ³⁹K times the atomic mass unit, kg.
    pub const POTASSIUM_39_MASS: f64 = 39.0 * ATOMIC_MASS_UNIT;
    /// One micrometre, m.
    pub const MICROMETRE: f64 = 1.0e-6;
}

use constants::*;

/// Conversion between SI-flavoured lab units and internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Mass unit, kg.
    pub mass: f64,
    /// Length unit, m.
    pub length: f64,
    /// Energy unit ħ²/(m L₀²), J.
    pub energy: f64,
    /// Time unit ħ/E_u, s.
    pub time: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::potassium_39()
    }
}

impl UnitSystem {
    pub fn new(mass: f64, length: f64) -> Self {
        let energy = HBAR * HBAR / (mass * length * length);
        Self {
            mass,
            length,
            energy,
            time: HBAR / energy,
        }
    }

    /// ³⁹K with L₀ = 1 μm.
    pub fn potassium_39() -> Self {
        Self::new(POTASSIUM_39_MASS, MICROMETRE)
    }

    /// E_u / h in Hz.
    pub fn energy_unit_hz(&self) -> f64 {
        self.energy / PLANCK
    }

    /// Energy h·f (f in Hz) to internal units.
    pub fn energy_from_hz(&self, hz: f64) -> f64 {
        hz * PLANCK / self.energy
    }

    pub fn energy_to_hz(&self, e: f64) -> f64 {
        e * self.energy / PLANCK
    }

    /// Energy k_B·T (T in nK) to internal units.
    pub fn energy_from_nk(&self, nk: f64) -> f64 {
        nk * 1e-9 * BOLTZMANN / self.energy
    }

    pub fn energy_to_nk(&self, e: f64) -> f64 {
        e * self.energy / BOLTZMANN * 1e9
    }

    /// Angular frequency 2π·f (f in Hz) to internal units. Same number as
    /// [`energy_from_hz`](Self::energy_from_hz) because ħ = 1.
    pub fn angular_from_hz(&self, hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * hz * self.time
    }

    /// Internal angular frequency to an ordinary frequency in Hz.
    pub fn angular_to_hz(&self, omega: f64) -> f64 {
        omega / (2.0 * std::f64::consts::PI * self.time)
    }

    pub fn length_from_um(&self, um: f64) -> f64 {
        um * MICROMETRE / self.length
    }

    pub fn length_to_um(&self, l: f64) -> f64 {
        l * self.length / MICROMETRE
    }

    pub fn length_from_bohr(&self, a0: f64) -> f64 {
        a0 * BOHR_RADIUS / self.length
    }

    pub fn length_to_bohr(&self, l: f64) -> f64 {
        l * self.length / BOHR_RADIUS
    }

    pub fn time_from_ms(&self, ms: f64) -> f64 {
        ms * 1e-3 / self.time
    }

    pub fn time_to_ms(&self, t: f64) -> f64 {
        t * self.time * 1e3
    }

    /// Effective 1D coupling g₁D = 2ħω⊥a_s for a Gaussian radial ground state.
    /// Both arguments and the result are in internal units.
    pub fn coupling_1d(radial_omega: f64, scattering_length: f64) -> f64 {
        2.0 * radial_omega * scattering_length
    }
}
