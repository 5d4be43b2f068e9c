//! Symmetric tridiagonal operators: the finite-difference Hamiltonian, a
//! pivoted solver and a Sturm-sequence eigenvalue counter.

use crate::grid::Grid;

/// Symmetric tridiagonal matrix with a constant off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiagonal {
    /// −½∂² + V with Dirichlet walls half a cell outside the end nodes
    /// (ghost value ψ₋₁ = −ψ₀), which raises the end diagonals to 3/(2dx²).
    pub fn hamiltonian(grid: &Grid, potential: &[f64]) -> Self {
        let n = grid.len();
        let h2 = grid.dx() * grid.dx();
        let mut diag: Vec<f64> = potential.iter().map(|v| v + 1.0 / h2).collect();
        diag[0] += 0.5 / h2;
        diag[n - 1] += 0.5 / h2;
        Self {
            diag,
            off: -0.5 / h2,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = M x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        let e = self.off;
        if n == 1 {
            y[0] = self.diag[0] * x[0];
            return;
        }
        y[0] = self.diag[0] * x[0] + e * x[1];
        for i in 1..n - 1 {
            y[i] = e * (x[i - 1] + x[i + 1]) + self.diag[i] * x[i];
        }
        y[n - 1] = e * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// xᵀ M x without allocating.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
        }
        for i in 0..n - 1 {
            acc += 2.0 * self.off * x[i] * x[i + 1];
        }
        acc
    }

    /// xᵀ M y without allocating.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * y[i];
        }
        for i in 0..n - 1 {
            acc += self.off * (x[i] * y[i + 1] + x[i + 1] * y[i]);
        }
        acc
    }

    /// Solves (M + diag(shift)) x = b with partial pivoting. Returns `None`
    /// on an exactly singular pivot.
    pub fn solve_shifted(&self, shift: &[f64], b: &[f64]) -> Option<Vec<f64>> {
        let d: Vec<f64> = self.diag.iter().zip(shift).map(|(a, s)| a + s).collect();
        solve_tridiagonal(self.off, &d, b)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let mut q = 1.0;
        let mut count = 0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + lambda.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }
}

/// Gaussian elimination with row interchanges for a tridiagonal system with
/// constant off-diagonal `e` and main diagonal `d`.
pub fn solve_tridiagonal(e: f64, d: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Some(Vec::new());
    }
    // rows are stored as (diag, super, super-super) after elimination
    let mut dd = d.to_vec();
    let mut du = vec![e; n.saturating_sub(1)];
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut dl = vec![e; n.saturating_sub(1)];
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                return None;
            }
            let f = dl[i] / dd[i];
            dd[i + 1] -= f * du[i];
            x[i + 1] -= f * x[i];
            dl[i] = 0.0;
        } else {
            let f = dd[i] / dl[i];
            dd[i] = dl[i];
            let tmp = dd[i + 1];
            dd[i + 1] = du[i] - f * tmp;
            du[i] = tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            x.swap(i, i + 1);
            x[i + 1] -= f * x[i];
        }
    }
    if dd[n - 1] == 0.0 {
        return None;
    }
    x[n - 1] /= dd[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(m: &Tridiagonal, shift: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = m.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m.diag[i] + shift[i]
            } else if i.abs_diff(j) == 1 {
                m.off
            } else {
                0.0
            }
        })
    }

    #[test]
    fn pivoted_solve_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 17, 64] {
            let m = Tridiagonal {
                diag: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                off: 0.9,
            };
            let shift = vec![0.0; n];
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = m.solve_shifted(&shift, &b).unwrap();
            let mut y = vec![0.0; n];
            m.apply(&x, &mut y);
            let oracle = dense(&m, &shift)
                .lu()
                .solve(&nalgebra::DVector::from_vec(b.clone()))
                .unwrap();
            for i in 0..n {
                assert!((y[i] - b[i]).abs() < 1e-9, "n={n}");
                assert!((x[i] - oracle[i]).abs() < 1e-8 * (1.0 + oracle[i].abs()));
            }
        }
    }

    #[test]
    fn sturm_count_matches_dense_spectrum() {
        let g = Grid::new(-5.0, 5.0, 64).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| 0.3 * x * x).collect();
        let m = Tridiagonal::hamiltonian(&g, &v);
        let eig = dense(&m, &vec![0.0; 64]).symmetric_eigenvalues();
        for lambda in [-1.0, 0.5, 2.0, 10.0, 100.0] {
            let expect = eig.iter().filter(|&&e| e < lambda).count();
            assert_eq!(m.count_below(lambda), expect);
        }
    }

    #[test]
    fn quadratic_form_consistent_with_apply() {
        let g = Grid::new(-5.0, 5.0, 128).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let m = Tridiagonal::hamiltonian(&g, &v);
        let x: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let y: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let mut mx = vec![0.0; x.len()];
        m.apply(&x, &mut mx);
        let direct: f64 = mx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((m.quadratic_form(&x) - direct).abs() < 1e-10 * direct.abs());
        let cross: f64 = mx.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((m.bilinear(&y, &x) - cross).abs() < 1e-10 * (1.0 + cross.abs()));
    }
}
