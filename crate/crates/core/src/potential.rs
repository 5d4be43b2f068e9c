//! Sampled double-well potential and its landmarks (wells, barrier).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::trap::TrapParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("grid [{x_min}, {x_max}] does not span one primary period [-{half}, {half}]")]
    DomainMismatch { x_min: f64, x_max: f64, half: f64 },
    #[error("potential is not finite at x = {0}")]
    NonFinite(f64),
}

/// Analytic form behind a sampled potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// V_P sin²(k_P x) + V_S sin²(k_S x + π/2) + ε x with k = 2π/λ.
    DoubleWell {
        primary_depth: f64,
        secondary_depth: f64,
        primary_k: f64,
        secondary_k: f64,
        tilt: f64,
    },
    /// ½ ω² x² (test potential).
    Harmonic { omega: f64 },
}

impl Shape {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Shape::DoubleWell {
                primary_depth,
                secondary_depth,
                primary_k,
                secondary_k,
                tilt,
            } => {
                let p = (primary_k * x).sin();
                let s = (secondary_k * x + PI / 2.0).sin();
                primary_depth * p * p + secondary_depth * s * s + tilt * x
            }
            Shape::Harmonic { omega } => 0.5 * omega * omega * x * x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    grid: Grid,
    values: Vec<f64>,
    shape: Shape,
    symmetric: bool,
    barrier_position: f64,
    barrier_height: f64,
    well_minima: Vec<f64>,
    well_bottom: f64,
    well_gap: f64,
    well_omega: f64,
}

impl Potential {
    /// Samples `shape` on `grid` and locates wells and barrier.
    pub fn from_shape(grid: &Grid, shape: Shape) -> Result<Self, PotentialError> {
        let values: Vec<f64> = grid.nodes().iter().map(|&x| shape.eval(x)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite(grid.nodes()[i]));
        }
        let symmetric = (0..grid.len()).all(|i| {
            let a = values[i];
            let b = values[grid.mirror(i)];
            (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        });
        let landmarks = Landmarks::locate(grid, &values, &shape);
        Ok(Self {
            grid: grid.clone(),
            values,
            shape,
            symmetric,
            barrier_position: landmarks.barrier,
            barrier_height: landmarks.height,
            well_minima: landmarks.minima,
            well_bottom: landmarks.bottom,
            well_gap: landmarks.gap,
            well_omega: landmarks.omega,
        })
    }

    pub fn harmonic(grid: &Grid, omega: f64) -> Self {
        Self::from_shape(grid, Shape::Harmonic { omega }).expect("harmonic potential is finite")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.shape.eval(x)
    }

    /// True when V(x) = V(−x) at every node (to 1e-12 relative).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn barrier_position(&self) -> f64 {
        self.barrier_position
    }

    /// V₀ = V(x_b) minus the mean of the two well minima; zero without a barrier.
    pub fn barrier_height(&self) -> f64 {
        self.barrier_height
    }

    pub fn barrier_top(&self) -> f64 {
        self.eval(self.barrier_position)
    }

    pub fn well_minima(&self) -> &[f64] {
        &self.well_minima
    }

    /// Mean of V at the well minima.
    pub fn well_bottom(&self) -> f64 {
        self.well_bottom
    }

    /// V(right minimum) − V(left minimum), the energy offset between wells.
    pub fn well_gap(&self) -> f64 {
        self.well_gap
    }

    /// Harmonic frequency √V'' at the well minima (mean over wells).
    pub fn well_omega(&self) -> f64 {
        self.well_omega
    }

    /// Oscillator length 1/√ω_x of a single well.
    pub fn well_oscillator_length(&self) -> f64 {
        1.0 / self.well_omega.sqrt()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds V_dw(x) + εx for `trap` on `grid`. The grid must cover exactly one
/// primary period [−λ_P/4, λ_P/4].
pub fn build_potential(trap: &TrapParams, grid: &Grid) -> Result<Potential, PotentialError> {
    let half = trap.half_domain();
    let tol = 1e-9 * half;
    if (grid.x_max() - half).abs() > tol || (grid.x_min() + half).abs() > tol {
        return Err(PotentialError::DomainMismatch {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            half,
        });
    }
    let shape = Shape::DoubleWell {
        primary_depth: trap.primary_depth,
        secondary_depth: trap.secondary_depth,
        primary_k: 2.0 * PI / trap.primary_wavelength,
        secondary_k: 2.0 * PI / trap.secondary_wavelength,
        tilt: trap.tilt,
    };
    Potential::from_shape(grid, shape)
}

struct Landmarks {
    barrier: f64,
    height: f64,
    minima: Vec<f64>,
    bottom: f64,
    gap: f64,
    omega: f64,
}

impl Landmarks {
    fn locate(grid: &Grid, v: &[f64], shape: &Shape) -> Self {
        let x = grid.nodes();
        let n = v.len();
        let f = |t: f64| shape.eval(t);
        let dx = grid.dx();

        // interior local maxima of the samples; the barrier is the one closest to 0
        let barrier_idx = (1..n - 1)
            .filter(|&i| v[i] >= v[i - 1] && v[i] > v[i + 1])
            .min_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));

        let (barrier, minima) = match barrier_idx {
            Some(ib) => {
                let xb = golden_max(&f, x[ib] - dx, x[ib] + dx);
                let il = argmin(&v[..=ib]);
                let ir = ib + argmin(&v[ib..]);
                let xl = golden_min(&f, x[il.saturating_sub(1)], x[(il + 1).min(n - 1)]);
                let xr = golden_min(&f, x[ir.saturating_sub(1)], x[(ir + 1).min(n - 1)]);
                (xb, vec![xl, xr])
            }
            None => {
                let i = argmin(v);
                let xm = golden_min(&f, x[i.saturating_sub(1)], x[(i + 1).min(n - 1)]);
                (xm, vec![xm])
            }
        };

        let vals: Vec<f64> = minima.iter().map(|&m| f(m)).collect();
        let bottom = vals.iter().sum::<f64>() / vals.len() as f64;
        let height = if minima.len() == 2 {
            (f(barrier) - bottom).max(0.0)
        } else {
            0.0
        };
        let gap = if vals.len() == 2 { vals[1] - vals[0] } else { 0.0 };
        let h = 1e-3;
        let omega = minima
            .iter()
            .map(|&m| ((f(m + h) - 2.0 * f(m) + f(m - h)) / (h * h)).max(0.0).sqrt())
            .sum::<f64>()
            / minima.len() as f64;
        Self {
            barrier,
            height,
            minima,
            bottom,
            gap,
            omega,
        }
    }
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn golden_max(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    golden_min(&|t| -f(t), a, b)
}
