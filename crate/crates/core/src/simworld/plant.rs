use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Discrete-time `x[j+1] = A x[j] + B u[j] (+ w[j])`, `y = C x`, step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dt: f64,
    pub process_noise_std: f64,
}

impl LinearPlant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, dt: f64, process_noise_std: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::config(format!(
                "inconsistent plant shapes: A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) || process_noise_std < 0.0 {
            return Err(Error::config("plant step must be positive and process noise non-negative"));
        }
        let p = Self { a, b, c, dt, process_noise_std };
        let rho = p.spectral_radius();
        if rho > 1.0 + 1e-9 {
            return Err(Error::config(format!("plant is unstable: spectral radius {rho}")));
        }
        Ok(p)
    }

    /// Zero-order-hold discretization of `x' = Ac x + Bc u` at step `dt`.
    pub fn from_continuous(ac: &DMatrix<f64>, bc: &DMatrix<f64>, c: DMatrix<f64>, dt: f64) -> Result<Self> {
        let (n, m) = (ac.nrows(), bc.ncols());
        let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
        let e = aug.exp();
        let a = e.view((0, 0), (n, n)).into_owned();
        let b = e.view((0, n), (n, m)).into_owned();
        Self::new(a, b, c, dt, 0.0)
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// One step in place; `scratch` must have `states()` entries.
    pub fn step(&self, x: &mut [f64], u: &[f64], scratch: &mut [f64]) {
        let n = self.states();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.a[(i, j)] * x[j];
            }
            for (j, &uj) in u.iter().enumerate() {
                acc += self.b[(i, j)] * uj;
            }
            scratch[i] = acc;
        }
        x.copy_from_slice(&scratch[..n]);
    }

    pub fn output_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..self.states()).map(|j| self.c[(i, j)] * x[j]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoh_of_integrator() {
        let ac = DMatrix::from_row_slice(1, 1, &[0.0]);
        let bc = DMatrix::from_row_slice(1, 1, &[1.0]);
        let p = LinearPlant::from_continuous(&ac, &bc, DMatrix::identity(1, 1), 0.1).unwrap();
        assert!((p.a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((p.b[(0, 0)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zoh_of_first_order_lag() {
        let tau = 0.05;
        let ac = DMatrix::from_row_slice(1, 1, &[-1.0 / tau]);
        let bc = DMatrix::from_row_slice(1, 1, &[1.0 / tau]);
        let dt = 0.005;
        let p = LinearPlant::from_continuous(&ac, &bc, DMatrix::identity(1, 1), dt).unwrap();
        let e = (-dt / tau).exp();
        assert!((p.a[(0, 0)] - e).abs() < 1e-12);
        assert!((p.b[(0, 0)] - (1.0 - e)).abs() < 1e-12);
    }

    #[test]
    fn rejects_unstable_and_bad_shapes() {
        let a = DMatrix::from_row_slice(1, 1, &[1.1]);
        assert!(LinearPlant::new(a, DMatrix::zeros(1, 1), DMatrix::identity(1, 1), 0.1, 0.0).is_err());
        let a = DMatrix::identity(2, 2);
        assert!(LinearPlant::new(a, DMatrix::zeros(3, 1), DMatrix::identity(2, 2), 0.1, 0.0).is_err());
    }
}
