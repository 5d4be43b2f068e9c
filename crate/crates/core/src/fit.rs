//! Sinusoid fit y ≈ A sin(ωt + θ) + C for uniformly sampled signals.
//!
//! The initial ω comes from the zero-padded periodogram peak; the fit then
//! minimises the residual over ω alone, solving for the linear coefficients
//! of sin, cos and 1 at every trial frequency.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("signal has no oscillation above the noise floor")]
    NoOscillation,
    #[error("need at least 4 periods at 32 samples per period (have {periods:.2} periods, {per_period:.1} samples per period)")]
    InsufficientSampling { periods: f64, per_period: f64 },
    #[error("frequency fit did not converge (residual {residual:e})")]
    NonConvergent { residual: f64 },
    #[error("time samples must be uniform and match the signal length")]
    BadSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    /// Angular frequency.
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

const PAD: usize = 8;

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Least-squares [s, c, C] at fixed ω on centred time τ; returns coefficients
/// and residual sum of squares.
fn linear_fit(tau: &[f64], y: &[f64], omega: f64) -> Option<([f64; 3], f64)> {
    let mut m = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&t, &v) in tau.iter().zip(y) {
        let (s, c) = (omega * t).sin_cos();
        let basis = [s, c, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            b[i] += basis[i] * v;
        }
    }
    let coef = solve3(m, b)?;
    let rss = tau
        .iter()
        .zip(y)
        .map(|(&t, &v)| {
            let (s, c) = (omega * t).sin_cos();
            (v - coef[0] * s - coef[1] * c - coef[2]).powi(2)
        })
        .sum();
    Some((coef, rss))
}

/// Angular frequency of the periodogram peak, refined by a parabola through
/// the three highest bins.
fn spectral_peak(y: &[f64], dt: f64) -> Result<f64, FitError> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let len = (n * PAD).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = y.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let power: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm_sqr()).collect();
    let (k, &peak) = power
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(FitError::NoOscillation)?;
    let total: f64 = power.iter().sum();
    if !(peak > 0.0) || peak < 10.0 * total / power.len() as f64 {
        return Err(FitError::NoOscillation);
    }
    let shift = if k + 1 < power.len() {
        let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            0.5 * (a - c) / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(2.0 * PI * (k as f64 + shift) / (len as f64 * dt))
}

pub fn extract_frequency(t: &[f64], y: &[f64]) -> Result<SineFit, FitError> {
    let n = y.len();
    if t.len() != n || n < 8 {
        return Err(FitError::BadSampling);
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) || (t[1] - t[0] - dt).abs() > 1e-6 * dt {
        return Err(FitError::BadSampling);
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var.sqrt() > 1e-12 * (1.0 + mean.abs())) {
        return Err(FitError::NoOscillation);
    }
    let w0 = spectral_peak(y, dt)?;
    let duration = dt * n as f64;
    let periods = duration * w0 / (2.0 * PI);
    let per_period = 2.0 * PI / (w0 * dt);
    if periods < 4.0 || per_period < 32.0 {
        return Err(FitError::InsufficientSampling {
            periods,
            per_period,
        });
    }
    let t_mid = 0.5 * (t[0] + t[n - 1]);
    let tau: Vec<f64> = t.iter().map(|v| v - t_mid).collect();
    let rss = |w: f64| linear_fit(&tau, y, w).map(|r| r.1).unwrap_or(f64::INFINITY);

    // bracket half a natural bin either side of the spectral estimate
    let half = 0.5 * 2.0 * PI / duration;
    let (mut a, mut b) = (w0 - half, w0 + half);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (rss(c), rss(d));
    for _ in 0..200 {
        if b - a <= 1e-13 * w0 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = rss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = rss(d);
        }
    }
    let omega = 0.5 * (a + b);
    let (coef, r) = linear_fit(&tau, y, omega).ok_or(FitError::NonConvergent {
        residual: f64::INFINITY,
    })?;
    let residual = (r / n as f64).sqrt();
    let edge = (omega - (w0 - half)).abs() < 1e-6 * half || (w0 + half - omega).abs() < 1e-6 * half;
    if edge || !residual.is_finite() {
        return Err(FitError::NonConvergent { residual });
    }
    // A sin(ωτ + θ') = s sin ωτ + c cos ωτ; shift θ' back to absolute time
    let amplitude = coef[0].hypot(coef[1]);
    let phase = (coef[1].atan2(coef[0]) - omega * t_mid).rem_euclid(2.0 * PI);
    Ok(SineFit {
        omega,
        amplitude,
        phase,
        offset: coef[2],
        residual,
    })
}
