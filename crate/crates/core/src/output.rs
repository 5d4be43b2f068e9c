//! CSV tables for scenario results and trajectories.
//!
//! Floats are written in their shortest round-trip decimal form with '.' as
//! the separator; missing values are empty fields.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::gpe::GpeTrajectory;
use crate::twomode::Trajectory;
use crate::units::UnitSystem;

/// One line of a scenario table: one sweep point and one model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub model: String,
    pub z0: Option<f64>,
    pub phi0_rad: Option<f64>,
    pub lambda: Option<f64>,
    pub scattering_length_a0: Option<f64>,
    pub secondary_depth_hz: Option<f64>,
    pub two_k_hz: Option<f64>,
    pub nu_hz: Option<f64>,
    pub n_i2_hz: Option<f64>,
    pub n_i3_hz: Option<f64>,
    pub mu_hz: Option<f64>,
    pub v0_hz: Option<f64>,
    pub barrier_above_mu: Option<bool>,
    /// Fitted ω/2π.
    pub omega_hz: Option<f64>,
    /// Small-amplitude ω/2π of the model.
    pub omega_formula_hz: Option<f64>,
    pub omega_band_lo_hz: Option<f64>,
    pub omega_band_hi_hz: Option<f64>,
    pub amplitude: Option<f64>,
    pub offset: Option<f64>,
    pub fit_residual: Option<f64>,
    pub mean_z: Option<f64>,
    pub min_z: Option<f64>,
    pub max_z: Option<f64>,
    pub mean_phi_rad: Option<f64>,
    pub phi_advance_rad: Option<f64>,
    pub regime: Option<String>,
    pub z_c: Option<f64>,
    pub leakage: Option<f64>,
    pub norm_drift: Option<f64>,
    pub energy_drift: Option<f64>,
    pub tilt_hz_per_um: Option<f64>,
    pub duration_ms: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn new(scenario: &str, sweep_param: &str, sweep_value: f64, model: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            sweep_param: sweep_param.to_string(),
            sweep_value,
            model: model.to_string(),
            ..Self::default()
        }
    }
}

fn model_rank(m: &str) -> usize {
    ["TMS", "JGP", "TMGP", "GPE"]
        .iter()
        .position(|x| *x == m)
        .unwrap_or(4)
}

/// Stable sort by sweep value, then model.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(model_rank(&a.model).cmp(&model_rank(&b.model)))
    });
}

pub fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        // header only
        out.serialize(ResultRow::default())?;
        return Ok(());
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TwoModeLine<'a> {
    t_ms: f64,
    z: f64,
    phi_rad: f64,
    energy_internal: f64,
    model_variant: &'a str,
}

#[derive(Serialize)]
struct GpeLine<'a> {
    t_ms: f64,
    z: f64,
    phi_rad: f64,
    energy_internal: f64,
    model_variant: &'a str,
    norm: f64,
    z_density: f64,
    phi_density: f64,
    leakage: f64,
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory, units: &UnitSystem) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let name = traj.variant.name();
    for i in 0..traj.len() {
        out.serialize(TwoModeLine {
            t_ms: units.time_to_ms(traj.t[i]),
            z: traj.z[i],
            phi_rad: traj.phi[i],
            energy_internal: traj.energy[i],
            model_variant: name,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_gpe_trajectory<W: Write>(w: W, traj: &GpeTrajectory, units: &UnitSystem) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for i in 0..traj.len() {
        out.serialize(GpeLine {
            t_ms: units.time_to_ms(traj.t[i]),
            z: traj.z[i],
            phi_rad: traj.phi[i],
            energy_internal: traj.energy[i],
            model_variant: "GPE",
            norm: traj.norm[i],
            z_density: traj.z_density[i],
            phi_density: traj.phi_density[i],
            leakage: traj.leakage[i],
        })?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SnapshotLine {
    t_ms: f64,
    x_um: f64,
    re: f64,
    im: f64,
}

/// Decimated Ψ profiles as long-format rows.
pub fn write_snapshots<W: Write>(
    w: W,
    traj: &GpeTrajectory,
    nodes: &[f64],
    units: &UnitSystem,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in &traj.snapshots {
        for (i, x) in nodes.iter().enumerate() {
            out.serialize(SnapshotLine {
                t_ms: units.time_to_ms(s.t),
                x_um: units.length_to_um(*x),
                re: s.re[i],
                im: s.im[i],
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_floats() {
        let mut r = ResultRow::new("rabi", "z0", 0.1, "GPE");
        r.omega_hz = Some(1.0 / 3.0);
        r.min_z = Some(1e-7);
        r.error = Some("fit, failed".into());
        let mut buf = Vec::new();
        write_rows(&mut buf, &[r]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("scenario,sweep_param,sweep_value,model,z0"));
        let line = lines.next().unwrap();
        assert!(line.contains("0.3333333333333333"), "{line}");
        assert!(line.contains("1e-7"), "{line}");
        assert!(line.ends_with("\"fit, failed\""), "{line}");
        let parsed: f64 = "0.3333333333333333".parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }

    #[test]
    fn sort_is_stable_by_value_then_model() {
        let mut rows = vec![
            ResultRow::new("s", "x", 2.0, "GPE"),
            ResultRow::new("s", "x", 1.0, "GPE"),
            ResultRow::new("s", "x", 1.0, "JGP"),
            ResultRow::new("s", "x", 1.0, "JGP"),
        ];
        rows[2].regime = Some("first".into());
        rows[3].regime = Some("second".into());
        sort_rows(&mut rows);
        let order: Vec<_> = rows.iter().map(|r| (r.sweep_value, r.model.as_str())).collect();
        assert_eq!(order, vec![(1.0, "JGP"), (1.0, "JGP"), (1.0, "GPE"), (2.0, "GPE")]);
        assert_eq!(rows[0].regime.as_deref(), Some("first"));
    }
}
