//! Boundary traces on the inner (t = 1) and outer (t = 2) curves.
//!
//! Velocity data is prescribed on the inner curve; the outer velocity is
//! zero throughout this crate. Pressure traces are optional: the relaxation
//! solver needs both rows in pressure-Poisson mode, while the least-squares
//! fit treats the inner trace as an unknown.

use ndarray::Array1;

use crate::error::Error;
use crate::geometry::DomainGrid;
use crate::operators::{theta_derivative, DerivOrder};

/// Where the samples came from; file data gets finite-difference derivatives,
/// presets get exact ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    AnalyticPreset,
    Sampled,
}

/// Periodic θ-samples of the boundary traces and the first two θ-derivatives
/// of the velocity data (the fit basis consumes those).
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub u0: Array1<f64>,
    pub v0: Array1<f64>,
    pub u0_d1: Array1<f64>,
    pub u0_d2: Array1<f64>,
    pub v0_d1: Array1<f64>,
    pub v0_d2: Array1<f64>,
    /// Pressure trace on the inner curve, if prescribed.
    pub p0: Option<Array1<f64>>,
    /// Pressure trace on the outer curve, if prescribed.
    pub pf: Option<Array1<f64>>,
    pub provenance: Provenance,
}

impl BoundaryData {
    /// Builds data from closed-form traces with exact derivatives.
    fn from_analytic(
        grid: &DomainGrid,
        u: impl Fn(f64) -> f64,
        u1: impl Fn(f64) -> f64,
        u2: impl Fn(f64) -> f64,
        v: impl Fn(f64) -> f64,
        v1: impl Fn(f64) -> f64,
        v2: impl Fn(f64) -> f64,
    ) -> Self {
        let sample = |f: &dyn Fn(f64) -> f64| -> Array1<f64> {
            grid.theta.iter().map(|&th| f(th)).collect()
        };
        Self {
            u0: sample(&u),
            v0: sample(&v),
            u0_d1: sample(&u1),
            u0_d2: sample(&u2),
            v0_d1: sample(&v1),
            v0_d2: sample(&v2),
            p0: None,
            pf: None,
            provenance: Provenance::AnalyticPreset,
        }
    }

    /// Preset "example1": u₀ = −1.5 sin θ, v₀ = 1.5 cos θ (a rotating inner
    /// ring; the exact solution over the circular annulus is rotational
    /// Couette flow).
    pub fn example_one(grid: &DomainGrid) -> Self {
        Self::from_analytic(
            grid,
            |x| -1.5 * x.sin(),
            |x| -1.5 * x.cos(),
            |x| 1.5 * x.sin(),
            |x| 1.5 * x.cos(),
            |x| -1.5 * x.sin(),
            |x| -1.5 * x.cos(),
        )
    }

    /// Preset "example2": u₀ = −3 cos θ sin θ, v₀ = 2 cos²θ − sin²θ.
    pub fn example_two(grid: &DomainGrid) -> Self {
        Self::from_analytic(
            grid,
            |x| -3.0 * x.cos() * x.sin(),
            |x| -3.0 * (2.0 * x).cos(),
            |x| 6.0 * (2.0 * x).sin(),
            |x| 2.0 * x.cos().powi(2) - x.sin().powi(2),
            |x| -3.0 * (2.0 * x).sin(),
            |x| -6.0 * (2.0 * x).cos(),
        )
    }

    /// Preset "zero": homogeneous data.
    pub fn zero(grid: &DomainGrid) -> Self {
        Self::from_analytic(grid, |_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// Builds data from raw samples; derivatives come from the 4th-order
    /// periodic stencils.
    pub fn from_samples(
        u0: Array1<f64>,
        v0: Array1<f64>,
        grid: &DomainGrid,
    ) -> Result<Self, Error> {
        for (name, arr) in [("u0", &u0), ("v0", &v0)] {
            if arr.len() != grid.n_theta {
                return Err(Error::ShapeMismatch(format!(
                    "boundary row {name} has {} samples, grid wants {}",
                    arr.len(),
                    grid.n_theta
                )));
            }
            if arr.iter().any(|x| !x.is_finite()) {
                return Err(Error::ValidationError {
                    field: name.to_string(),
                    message: "boundary samples must be finite".into(),
                });
            }
        }
        let u0_d1 = theta_derivative(u0.view(), DerivOrder::First, grid);
        let u0_d2 = theta_derivative(u0.view(), DerivOrder::Second, grid);
        let v0_d1 = theta_derivative(v0.view(), DerivOrder::First, grid);
        let v0_d2 = theta_derivative(v0.view(), DerivOrder::Second, grid);
        Ok(Self {
            u0,
            v0,
            u0_d1,
            u0_d2,
            v0_d1,
            v0_d2,
            p0: None,
            pf: None,
            provenance: Provenance::Sampled,
        })
    }

    /// Attaches pressure traces to both curves.
    pub fn with_pressure(mut self, p0: Array1<f64>, pf: Array1<f64>) -> Result<Self, Error> {
        let m = self.u0.len();
        for (name, arr) in [("p0", &p0), ("pf", &pf)] {
            if arr.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "pressure row {name} has {} samples, boundary has {m}",
                    arr.len()
                )));
            }
        }
        self.p0 = Some(p0);
        self.pf = Some(pf);
        Ok(self)
    }

    pub fn n_theta(&self) -> usize {
        self.u0.len()
    }

    /// Resolves a preset name; `None` when the name is not a preset.
    pub fn preset(name: &str, grid: &DomainGrid) -> Option<Self> {
        match name {
            "example1" => Some(Self::example_one(grid)),
            "example2" => Some(Self::example_two(grid)),
            "zero" => Some(Self::zero(grid)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_one_samples_and_derivatives() {
        let grid = DomainGrid::new(4, 150).unwrap();
        let b = BoundaryData::example_one(&grid);
        for j in 0..150 {
            let th = grid.theta[j];
            assert!((b.u0[j] + 1.5 * th.sin()).abs() < 1e-15);
            assert!((b.v0[j] - 1.5 * th.cos()).abs() < 1e-15);
            assert!((b.u0_d2[j] - 1.5 * th.sin()).abs() < 1e-15);
            assert!((b.v0_d2[j] + 1.5 * th.cos()).abs() < 1e-15);
        }
        assert_eq!(b.provenance, Provenance::AnalyticPreset);
        assert!(b.p0.is_none() && b.pf.is_none());
    }

    #[test]
    fn preset_two_matches_double_angle_form() {
        let grid = DomainGrid::new(4, 64).unwrap();
        let b = BoundaryData::example_two(&grid);
        for j in 0..64 {
            let th = grid.theta[j];
            assert!((b.u0[j] + 1.5 * (2.0 * th).sin()).abs() < 1e-14);
            assert!((b.v0[j] - (0.5 + 1.5 * (2.0 * th).cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn sampled_derivatives_close_to_analytic() {
        let grid = DomainGrid::new(4, 150).unwrap();
        let exact = BoundaryData::example_one(&grid);
        let fd =
            BoundaryData::from_samples(exact.u0.clone(), exact.v0.clone(), &grid).unwrap();
        assert_eq!(fd.provenance, Provenance::Sampled);
        for j in 0..150 {
            assert!((fd.u0_d1[j] - exact.u0_d1[j]).abs() < 1e-6);
            assert!((fd.v0_d2[j] - exact.v0_d2[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn sample_length_checked() {
        let grid = DomainGrid::new(4, 16).unwrap();
        let err = BoundaryData::from_samples(Array1::zeros(15), Array1::zeros(16), &grid)
            .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn pressure_rows_attach() {
        let grid = DomainGrid::new(4, 16).unwrap();
        let b = BoundaryData::zero(&grid)
            .with_pressure(Array1::from_elem(16, 1.0), Array1::from_elem(16, 2.0))
            .unwrap();
        assert_eq!(b.p0.as_ref().unwrap()[0], 1.0);
        assert_eq!(b.pf.as_ref().unwrap()[0], 2.0);
        let err = BoundaryData::zero(&grid)
            .with_pressure(Array1::zeros(8), Array1::zeros(16))
            .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn preset_lookup() {
        let grid = DomainGrid::new(4, 16).unwrap();
        assert!(BoundaryData::preset("example1", &grid).is_some());
        assert!(BoundaryData::preset("example2", &grid).is_some());
        assert!(BoundaryData::preset("zero", &grid).is_some());
        assert!(BoundaryData::preset("displaced", &grid).is_none());
    }
}
