//! Star-shaped annular domains and the coefficient functions of the
//! radial-line coordinate transform.
//!
//! The annulus is Ω = {(r,θ): r(θ) ≤ r ≤ 2r(θ)} for a positive, smooth,
//! 2π-periodic boundary curve r(θ). Substituting t = r/r(θ) flattens Ω onto
//! the strip t ∈ [1,2]. Every differential operator picks up θ-dependent
//! coefficients built from r, r′ and r″; they are precomputed once per grid
//! by [`build_coefficients`] and treated as immutable afterwards, since the
//! solver reads them in every sweep.

use std::f64::consts::PI;

use ndarray::Array1;

use crate::error::Error;

/// Boundary curve r(θ) as a truncated Fourier series.
///
/// Supplying the curve in Fourier form keeps r′ and r″ exact; differencing a
/// sampled curve would leak noise into the second-derivative coefficient f2.
#[derive(Debug, Clone)]
pub struct BoundaryShape {
    /// `fourier_cosine[k]` multiplies cos(kθ); entry 0 is the mean radius.
    fourier_cosine: Vec<f64>,
    /// `fourier_sine[k]` multiplies sin((k+1)θ).
    fourier_sine: Vec<f64>,
}

impl BoundaryShape {
    /// Builds a shape and verifies r(θ) > 0 on a dense sample.
    pub fn new(fourier_cosine: Vec<f64>, fourier_sine: Vec<f64>) -> Result<Self, Error> {
        let shape = Self {
            fourier_cosine,
            fourier_sine,
        };
        let n = 4096.max(64 * (shape.fourier_cosine.len() + shape.fourier_sine.len()));
        shape.check_positive(n)?;
        Ok(shape)
    }

    /// r ≡ 1.
    pub fn unit_circle() -> Self {
        Self {
            fourier_cosine: vec![1.0],
            fourier_sine: Vec::new(),
        }
    }

    pub fn fourier_cosine(&self) -> &[f64] {
        &self.fourier_cosine
    }

    pub fn fourier_sine(&self) -> &[f64] {
        &self.fourier_sine
    }

    /// r(θ) together with its first two analytic derivatives.
    pub fn radius(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = 0.0;
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for (k, &c) in self.fourier_cosine.iter().enumerate() {
            let kf = k as f64;
            let (s, co) = (kf * theta).sin_cos();
            r += c * co;
            r1 -= c * kf * s;
            r2 -= c * kf * kf * co;
        }
        for (i, &sc) in self.fourier_sine.iter().enumerate() {
            let kf = (i + 1) as f64;
            let (s, co) = (kf * theta).sin_cos();
            r += sc * s;
            r1 += sc * kf * co;
            r2 -= sc * kf * kf * s;
        }
        (r, r1, r2)
    }

    fn check_positive(&self, samples: usize) -> Result<(), Error> {
        for i in 0..samples {
            let theta = 2.0 * PI * i as f64 / samples as f64;
            let (r, _, _) = self.radius(theta);
            if r <= 0.0 {
                return Err(Error::NonPositiveRadius { theta, r });
            }
        }
        Ok(())
    }
}

/// The (t,θ) mesh: N radial lines spanning t ∈ [1,2] and M periodic θ nodes.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    /// N: number of radial intervals; lines are indexed 0..=N.
    pub n_lines: usize,
    /// M: number of periodic θ nodes (node M is identified with node 0).
    pub n_theta: usize,
    /// Line spacing d = 1/N.
    pub d: f64,
    /// t_n = 1 + n·d for n = 0..=N; t_0 = 1 and t_N = 2 exactly.
    pub t: Vec<f64>,
    /// θ_j = 2πj/M for j = 0..M.
    pub theta: Vec<f64>,
}

impl DomainGrid {
    pub fn new(n_lines: usize, n_theta: usize) -> Result<Self, Error> {
        if n_lines < 2 {
            return Err(Error::BadDiscretization(format!(
                "need at least 2 radial lines, got {n_lines}"
            )));
        }
        if n_theta < 8 {
            return Err(Error::BadDiscretization(format!(
                "need at least 8 angular nodes, got {n_theta}"
            )));
        }
        let nf = n_lines as f64;
        // n/N instead of n*d so that t_N = 2 exactly.
        let t = (0..=n_lines).map(|n| 1.0 + n as f64 / nf).collect();
        let theta = (0..n_theta)
            .map(|j| 2.0 * PI * j as f64 / n_theta as f64)
            .collect();
        Ok(Self {
            n_lines,
            n_theta,
            d: 1.0 / nf,
            t,
            theta,
        })
    }

    /// Angular node spacing 2π/M.
    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }
}

/// Transform coefficients sampled at the θ nodes.
///
/// With f1 = −r′/r the radial-line transform turns the Laplacian into
///
/// ```text
/// L(u)·(r²/f0) = ∂²u/∂t² + (f2/t)∂u/∂t + (f3/t)∂²u/∂θ∂t + (f4/t²)∂²u/∂θ²
/// ```
///
/// and the Cartesian first derivatives into d1 = f̂5 ∂/∂t + (f̂6/t) ∂/∂θ and
/// d2 = f̂7 ∂/∂t + (f̂8/t) ∂/∂θ. The unhatted f5..f8 absorb the r²/f0 scaling
/// so that the whole momentum equation can be evaluated in one consistent
/// scaling; h3 = f0/r² converts back to the physical one.
#[derive(Debug, Clone)]
pub struct GeometryCoefficients {
    pub r: Array1<f64>,
    pub f0: Array1<f64>,
    pub f1: Array1<f64>,
    /// f1′, analytically −(r″r − r′²)/r².
    pub f1_prime: Array1<f64>,
    pub f2: Array1<f64>,
    pub f3: Array1<f64>,
    pub f4: Array1<f64>,
    pub fhat5: Array1<f64>,
    pub fhat6: Array1<f64>,
    pub fhat7: Array1<f64>,
    pub fhat8: Array1<f64>,
    pub f5: Array1<f64>,
    pub f6: Array1<f64>,
    pub f7: Array1<f64>,
    pub f8: Array1<f64>,
    pub h3: Array1<f64>,
}

/// Samples every transform coefficient at the grid's θ nodes.
pub fn build_coefficients(
    shape: &BoundaryShape,
    grid: &DomainGrid,
) -> Result<GeometryCoefficients, Error> {
    // Re-check positivity densely relative to this grid, then at the nodes.
    shape.check_positive(4096.max(8 * grid.n_theta))?;

    let m = grid.n_theta;
    let mut geo = GeometryCoefficients {
        r: Array1::zeros(m),
        f0: Array1::zeros(m),
        f1: Array1::zeros(m),
        f1_prime: Array1::zeros(m),
        f2: Array1::zeros(m),
        f3: Array1::zeros(m),
        f4: Array1::zeros(m),
        fhat5: Array1::zeros(m),
        fhat6: Array1::zeros(m),
        fhat7: Array1::zeros(m),
        fhat8: Array1::zeros(m),
        f5: Array1::zeros(m),
        f6: Array1::zeros(m),
        f7: Array1::zeros(m),
        f8: Array1::zeros(m),
        h3: Array1::zeros(m),
    };

    for j in 0..m {
        let theta = grid.theta[j];
        let (r, r1, r2) = shape.radius(theta);
        if r <= 0.0 {
            return Err(Error::NonPositiveRadius { theta, r });
        }
        let (sin_t, cos_t) = theta.sin_cos();

        let f1 = -r1 / r;
        let f1p = -(r2 * r - r1 * r1) / (r * r);
        let f0 = 1.0 + f1 * f1;
        geo.r[j] = r;
        geo.f1[j] = f1;
        geo.f1_prime[j] = f1p;
        geo.f0[j] = f0;
        geo.f2[j] = 1.0 + f1p / f0;
        geo.f3[j] = 2.0 * f1 / f0;
        geo.f4[j] = 1.0 / f0;

        let fhat5 = cos_t / r + sin_t * r1 / (r * r);
        let fhat6 = -sin_t / r;
        let fhat7 = sin_t / r - cos_t * r1 / (r * r);
        let fhat8 = cos_t / r;
        geo.fhat5[j] = fhat5;
        geo.fhat6[j] = fhat6;
        geo.fhat7[j] = fhat7;
        geo.fhat8[j] = fhat8;

        let scale = r * r / f0;
        geo.f5[j] = scale * fhat5;
        geo.f6[j] = scale * fhat6;
        geo.f7[j] = scale * fhat7;
        geo.f8[j] = scale * fhat8;
        geo.h3[j] = f0 / (r * r);
    }
    Ok(geo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, m: usize) -> DomainGrid {
        DomainGrid::new(n, m).unwrap()
    }

    #[test]
    fn radius_constant_circle() {
        let shape = BoundaryShape::unit_circle();
        let (r, r1, r2) = shape.radius(0.7);
        assert_eq!((r, r1, r2), (1.0, 0.0, 0.0));
    }

    #[test]
    fn radius_single_cosine_harmonic() {
        let shape = BoundaryShape::new(vec![1.0, 0.1], vec![]).unwrap();
        let (r, r1, r2) = shape.radius(0.0);
        assert!((r - 1.1).abs() < 1e-15);
        assert!(r1.abs() < 1e-15);
        assert!((r2 + 0.1).abs() < 1e-15);

        let (r, r1, r2) = shape.radius(std::f64::consts::FRAC_PI_2);
        assert!((r - 1.0).abs() < 1e-15);
        assert!((r1 + 0.1).abs() < 1e-15);
        assert!(r2.abs() < 1e-14);
    }

    #[test]
    fn radius_sine_harmonic() {
        // r = 1 + 0.2 sin(2θ): r′ = 0.4 cos(2θ), r″ = −0.8 sin(2θ).
        let shape = BoundaryShape::new(vec![1.0], vec![0.0, 0.2]).unwrap();
        let th = 0.3;
        let (r, r1, r2) = shape.radius(th);
        assert!((r - (1.0 + 0.2 * (2.0 * th).sin())).abs() < 1e-15);
        assert!((r1 - 0.4 * (2.0 * th).cos()).abs() < 1e-15);
        assert!((r2 + 0.8 * (2.0 * th).sin()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(matches!(
            BoundaryShape::new(vec![1.0, 1.5], vec![]),
            Err(Error::NonPositiveRadius { .. })
        ));
    }

    #[test]
    fn grid_endpoints_exact() {
        for n in [2, 7, 20, 33, 40] {
            let g = grid(n, 16);
            assert_eq!(g.t[0], 1.0);
            assert_eq!(g.t[n], 2.0);
            assert_eq!(g.t.len(), n + 1);
            assert_eq!(g.theta.len(), 16);
        }
    }

    #[test]
    fn grid_limits_enforced() {
        assert!(matches!(
            DomainGrid::new(1, 16),
            Err(Error::BadDiscretization(_))
        ));
        assert!(matches!(
            DomainGrid::new(10, 7),
            Err(Error::BadDiscretization(_))
        ));
    }

    #[test]
    fn unit_circle_tables() {
        let g = grid(10, 32);
        let geo = build_coefficients(&BoundaryShape::unit_circle(), &g).unwrap();
        for j in 0..32 {
            let th = g.theta[j];
            assert_eq!(geo.f1[j], 0.0);
            assert_eq!(geo.f0[j], 1.0);
            assert_eq!(geo.f2[j], 1.0);
            assert_eq!(geo.f3[j], 0.0);
            assert_eq!(geo.f4[j], 1.0);
            assert_eq!(geo.h3[j], 1.0);
            assert!((geo.f5[j] - th.cos()).abs() < 1e-15);
            assert!((geo.f6[j] + th.sin()).abs() < 1e-15);
            assert!((geo.f7[j] - th.sin()).abs() < 1e-15);
            assert!((geo.f8[j] - th.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_bump_tables_at_theta_zero() {
        // r = 1 + 0.1 cos θ at θ = 0: r = 1.1, r′ = 0, r″ = −0.1, so
        // f1 = 0, f1′ = 0.11/1.21 = 1/11, f2 = 12/11, f̂5 = 1/1.1, f5 = 1.1.
        let g = grid(10, 32);
        let shape = BoundaryShape::new(vec![1.0, 0.1], vec![]).unwrap();
        let geo = build_coefficients(&shape, &g).unwrap();
        assert!(geo.f1[0].abs() < 1e-15);
        assert!((geo.f1_prime[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((geo.f2[0] - 12.0 / 11.0).abs() < 1e-14);
        assert!((geo.fhat5[0] - 1.0 / 1.1).abs() < 1e-14);
        assert!((geo.f5[0] - 1.1).abs() < 1e-14);
    }

    #[test]
    fn unit_circle_direction_determinant() {
        // f̂5·f̂8 − f̂6·f̂7 = 1/r², which is 1 on the unit circle.
        let g = grid(4, 64);
        let geo = build_coefficients(&BoundaryShape::unit_circle(), &g).unwrap();
        for j in 0..64 {
            let det = geo.fhat5[j] * geo.fhat8[j] - geo.fhat6[j] * geo.fhat7[j];
            assert!((det - 1.0).abs() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn f0_times_f4_is_one(
            c1 in -0.2f64..0.2,
            c2 in -0.15f64..0.15,
            s1 in -0.2f64..0.2,
            s2 in -0.15f64..0.15,
        ) {
            let g = grid(5, 48);
            let shape = BoundaryShape::new(vec![1.0, c1, c2], vec![s1, s2]).unwrap();
            let geo = build_coefficients(&shape, &g).unwrap();
            for j in 0..48 {
                proptest::prop_assert!((geo.f0[j] * geo.f4[j] - 1.0).abs() < 1e-14);
                proptest::prop_assert!(geo.f0[j] >= 1.0);
                proptest::prop_assert!(geo.h3[j] > 0.0);
                proptest::prop_assert!(
                    (geo.f3[j] - 2.0 * geo.f1[j] * geo.f4[j]).abs() < 1e-14
                );
                // Determinant identity in general form.
                let det = geo.fhat5[j] * geo.fhat8[j] - geo.fhat6[j] * geo.fhat7[j];
                proptest::prop_assert!(
                    (det - 1.0 / (geo.r[j] * geo.r[j])).abs() < 1e-12
                );
            }
        }

        /// Rotating the shape by a whole number of grid steps permutes the
        /// scalar tables and rotates the direction tables as plane vectors:
        /// the pairs (f̂5, f̂7) and (f̂6, f̂8) are gradients of t and (scaled) θ,
        /// so a rotation by Δ mixes each pair with cos Δ / sin Δ weights.
        #[test]
        fn rotation_equivariance(
            c1 in -0.2f64..0.2,
            s1 in -0.2f64..0.2,
            shift in 1usize..47,
        ) {
            let m = 48;
            let g = grid(5, m);
            let delta = 2.0 * std::f64::consts::PI * shift as f64 / m as f64;
            let (sd, cd) = delta.sin_cos();

            let base = BoundaryShape::new(vec![1.0, c1], vec![s1]).unwrap();
            // Same curve with its Fourier phase advanced by Δ: r̃(θ) = r(θ−Δ).
            let rot = BoundaryShape::new(
                vec![1.0, c1 * cd - s1 * sd],
                vec![c1 * sd + s1 * cd],
            ).unwrap();

            let geo = build_coefficients(&base, &g).unwrap();
            let geo_rot = build_coefficients(&rot, &g).unwrap();

            for j in 0..m {
                let src = (j + m - shift) % m;
                for (a, b) in [
                    (&geo_rot.r, &geo.r),
                    (&geo_rot.f0, &geo.f0),
                    (&geo_rot.f1, &geo.f1),
                    (&geo_rot.f2, &geo.f2),
                    (&geo_rot.f3, &geo.f3),
                    (&geo_rot.f4, &geo.f4),
                    (&geo_rot.h3, &geo.h3),
                ] {
                    proptest::prop_assert!((a[j] - b[src]).abs() < 1e-12);
                }
                let want5 = cd * geo.fhat5[src] - sd * geo.fhat7[src];
                let want7 = sd * geo.fhat5[src] + cd * geo.fhat7[src];
                let want6 = cd * geo.fhat6[src] - sd * geo.fhat8[src];
                let want8 = sd * geo.fhat6[src] + cd * geo.fhat8[src];
                proptest::prop_assert!((geo_rot.fhat5[j] - want5).abs() < 1e-12);
                proptest::prop_assert!((geo_rot.fhat7[j] - want7).abs() < 1e-12);
                proptest::prop_assert!((geo_rot.fhat6[j] - want6).abs() < 1e-12);
                proptest::prop_assert!((geo_rot.fhat8[j] - want8).abs() < 1e-12);
            }
        }
    }
}
