//! Trap, cloud and interaction parameters in lab units and internal units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::UnitSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error("trap field `{field}` is not finite")]
    NonFinite { field: &'static str },
    #[error("trap field `{field}` = {value}: {reason}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Lab-unit description of the double well and the condensate.
///
/// Energies are stored as h·(value in Hz), lengths in μm, the scattering
/// length in Bohr radii and the radial trap as an ordinary frequency in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub atom_number: f64,
    pub scattering_length_a0: f64,
    pub primary_depth_hz: f64,
    pub secondary_depth_hz: f64,
    /// Half wavelength λ_P/2 of the primary lattice, μm.
    pub primary_period_um: f64,
    /// Half wavelength λ_S/2 of the secondary lattice, μm.
    pub secondary_period_um: f64,
    pub radial_frequency_hz: f64,
    /// Linear gradient ε of the potential, h·Hz per μm.
    pub tilt_hz_per_um: f64,
    pub imprint_duration_ms: Option<f64>,
    pub well_gap_hz: Option<f64>,
}

impl Default for TrapConfig {
    /// 6000 atoms of ³⁹K at a_s = 0 in a 10 μm / 5 μm superlattice with a
    /// k_B·40 nK primary lattice and a 200 Hz radial trap.
    fn default() -> Self {
        let units = UnitSystem::potassium_39();
        Self {
            atom_number: 6000.0,
            scattering_length_a0: 0.0,
            primary_depth_hz: units.energy_to_hz(units.energy_from_nk(40.0)),
            secondary_depth_hz: 500.0,
            primary_period_um: 10.0,
            secondary_period_um: 5.0,
            radial_frequency_hz: 200.0,
            tilt_hz_per_um: 0.0,
            imprint_duration_ms: None,
            well_gap_hz: None,
        }
    }
}

/// Internal-unit trap parameters (ħ = m = 1, lengths in μm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub atom_number: f64,
    pub scattering_length: f64,
    pub primary_depth: f64,
    pub secondary_depth: f64,
    /// Full wavelength λ_P (the lattice period is λ_P/2).
    pub primary_wavelength: f64,
    pub secondary_wavelength: f64,
    pub radial_omega: f64,
    pub tilt: f64,
    pub imprint_duration: Option<f64>,
    pub well_gap: Option<f64>,
}

impl TrapParams {
    /// g₁D per atom.
    pub fn coupling(&self) -> f64 {
        UnitSystem::coupling_1d(self.radial_omega, self.scattering_length)
    }

    /// g₁D·N, the coefficient of |ψ|² for a unit-normalised field.
    pub fn interaction(&self) -> f64 {
        self.coupling() * self.atom_number
    }

    /// Half-width λ_P/4 of the single-period domain.
    pub fn half_domain(&self) -> f64 {
        self.primary_wavelength / 4.0
    }

    pub fn with_tilt(&self, tilt: f64) -> Self {
        Self { tilt, ..*self }
    }

    pub fn with_scattering_length(&self, a: f64) -> Self {
        Self {
            scattering_length: a,
            ..*self
        }
    }

    pub fn with_secondary_depth(&self, v: f64) -> Self {
        Self {
            secondary_depth: v,
            ..*self
        }
    }
}

fn finite(field: &'static str, v: f64) -> Result<f64, TrapError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TrapError::NonFinite { field })
    }
}

fn out(field: &'static str, value: f64, reason: &'static str) -> TrapError {
    TrapError::OutOfRange {
        field,
        value,
        reason,
    }
}

impl TrapConfig {
    pub fn validate(&self) -> Result<(), TrapError> {
        let n = finite("atom_number", self.atom_number)?;
        finite("scattering_length", self.scattering_length_a0)?;
        let vp = finite("primary_depth", self.primary_depth_hz)?;
        let vs = finite("secondary_depth", self.secondary_depth_hz)?;
        let lp = finite("primary_period", self.primary_period_um)?;
        let ls = finite("secondary_period", self.secondary_period_um)?;
        let wr = finite("radial_frequency", self.radial_frequency_hz)?;
        finite("tilt", self.tilt_hz_per_um)?;
        if n < 1.0 {
            return Err(out("atom_number", n, "must be at least 1"));
        }
        if vp <= 0.0 {
            return Err(out("primary_depth", vp, "must be positive"));
        }
        if vs < 0.0 {
            return Err(out("secondary_depth", vs, "must be non-negative"));
        }
        if lp <= 0.0 {
            return Err(out("primary_period", lp, "must be positive"));
        }
        if ls <= 0.0 || (lp - 2.0 * ls).abs() > 1e-9 * lp {
            return Err(out(
                "secondary_period",
                ls,
                "must be half of the primary period",
            ));
        }
        if wr <= 0.0 {
            return Err(out("radial_frequency", wr, "must be positive"));
        }
        if let Some(tau) = self.imprint_duration_ms {
            if finite("imprint_duration", tau)? < 0.0 {
                return Err(out("imprint_duration", tau, "must be non-negative"));
            }
        }
        if let Some(gap) = self.well_gap_hz {
            finite("well_gap", gap)?;
        }
        Ok(())
    }

    /// Converts to internal units. Deterministic; fails on non-finite or
    /// out-of-range fields and names the field.
    pub fn to_internal(&self, units: &UnitSystem) -> Result<TrapParams, TrapError> {
        self.validate()?;
        Ok(TrapParams {
            atom_number: self.atom_number,
            scattering_length: units.length_from_bohr(self.scattering_length_a0),
            primary_depth: units.energy_from_hz(self.primary_depth_hz),
            secondary_depth: units.energy_from_hz(self.secondary_depth_hz),
            primary_wavelength: 2.0 * units.length_from_um(self.primary_period_um),
            secondary_wavelength: 2.0 * units.length_from_um(self.secondary_period_um),
            radial_omega: units.angular_from_hz(self.radial_frequency_hz),
            tilt: units.energy_from_hz(self.tilt_hz_per_um) / units.length_from_um(1.0),
            imprint_duration: self.imprint_duration_ms.map(|t| units.time_from_ms(t)),
            well_gap: self.well_gap_hz.map(|e| units.energy_from_hz(e)),
        })
    }

    /// Inverse of [`to_internal`](Self::to_internal).
    pub fn from_internal(p: &TrapParams, units: &UnitSystem) -> Self {
        Self {
            atom_number: p.atom_number,
            scattering_length_a0: units.length_to_bohr(p.scattering_length),
            primary_depth_hz: units.energy_to_hz(p.primary_depth),
            secondary_depth_hz: units.energy_to_hz(p.secondary_depth),
            primary_period_um: units.length_to_um(p.primary_wavelength) / 2.0,
            secondary_period_um: units.length_to_um(p.secondary_wavelength) / 2.0,
            radial_frequency_hz: units.angular_to_hz(p.radial_omega),
            tilt_hz_per_um: units.energy_to_hz(p.tilt) * units.length_from_um(1.0),
            imprint_duration_ms: p.imprint_duration.map(|t| units.time_to_ms(t)),
            well_gap_hz: p.well_gap.map(|e| units.energy_to_hz(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_converts() {
        let u = UnitSystem::potassium_39();
        let p = TrapConfig::default().to_internal(&u).unwrap();
        assert_eq!(p.primary_wavelength, 20.0);
        assert_eq!(p.half_domain(), 5.0);
        assert!((p.primary_depth - 833.46 / 259.167).abs() < 1e-3);
        assert_eq!(p.interaction(), 0.0);
    }

    #[test]
    fn errors_name_the_field() {
        let u = UnitSystem::potassium_39();
        let cfg = TrapConfig {
            radial_frequency_hz: f64::NAN,
            ..TrapConfig::default()
        };
        let err = cfg.to_internal(&u).unwrap_err();
        assert!(err.to_string().contains("radial_frequency"));

        let cfg = TrapConfig {
            secondary_depth_hz: -1.0,
            ..TrapConfig::default()
        };
        assert!(cfg.to_internal(&u).unwrap_err().to_string().contains("secondary_depth"));

        let cfg = TrapConfig {
            secondary_period_um: 4.0,
            ..TrapConfig::default()
        };
        assert!(cfg.to_internal(&u).is_err());

        let cfg = TrapConfig {
            atom_number: 0.5,
            ..TrapConfig::default()
        };
        assert!(cfg.to_internal(&u).unwrap_err().to_string().contains("atom_number"));
    }

    #[test]
    fn internal_round_trip() {
        let u = UnitSystem::potassium_39();
        let cfg = TrapConfig {
            scattering_length_a0: 4.0,
            tilt_hz_per_um: 3.5,
            imprint_duration_ms: Some(2.0),
            well_gap_hz: Some(100.0),
            ..TrapConfig::default()
        };
        let back = TrapConfig::from_internal(&cfg.to_internal(&u).unwrap(), &u);
        let pairs = [
            (back.scattering_length_a0, cfg.scattering_length_a0),
            (back.primary_depth_hz, cfg.primary_depth_hz),
            (back.secondary_depth_hz, cfg.secondary_depth_hz),
            (back.radial_frequency_hz, cfg.radial_frequency_hz),
            (back.tilt_hz_per_um, cfg.tilt_hz_per_um),
            (back.imprint_duration_ms.unwrap(), 2.0),
            (back.well_gap_hz.unwrap(), 100.0),
        ];
        for (a, b) in pairs {
            assert!(((a - b) / b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
