//! Geometry of the unit disk and circle: pseudohyperbolic distance, Stolz
//! regions, non-tangential approach sweeps and uniform circle grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible grid.
pub const MIN_GRID: usize = 16;
/// Largest grid the resolution policy will hand out.
pub const MAX_GRID: usize = 1 << 20;
/// Target for `r^N`, the decay of the slowest rational content over one grid period.
pub const ALIAS_TOL: f64 = 1e-12;
/// Deepest admissible depth: points closer than this to the circle are rejected.
pub const MIN_GAP: f64 = 1e-13;

const UNIMODULAR_TOL: f64 = 1e-14;
const RAY_MARGIN: f64 = 0.95;

/// Uniform grid `θ_j = 2πj/N` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleGrid {
    size: usize,
}

impl CircleGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < MIN_GRID || !size.is_power_of_two() {
            return Err(Error::InvalidGrid(size));
        }
        Ok(Self { size })
    }

    /// Smallest grid with `max_modulus^N < 1e-12`, capped at `2^20`.
    ///
    /// Fourier coefficients of rational functions with poles at `1/conj(a_j)`
    /// decay like `max|a_j|^n`, so this keeps trapezoidal aliasing below round-off.
    pub fn for_max_modulus(max_modulus: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&max_modulus) {
            return Err(Error::Domain {
                what: "zero modulus must lie in [0, 1)",
                modulus: max_modulus,
            });
        }
        let mut size = MIN_GRID;
        while max_modulus.powi(size as i32) >= ALIAS_TOL {
            size *= 2;
            if size > MAX_GRID {
                return Err(Error::ResolutionExceeded { max_modulus });
            }
        }
        Ok(Self { size })
    }

    pub fn for_zeros<'a>(zeros: impl IntoIterator<Item = &'a Complex64>) -> Result<Self> {
        let max = zeros.into_iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self::for_max_modulus(max)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.size as f64
    }

    pub fn node(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta(j))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.size).map(move |j| self.node(j))
    }

    pub fn doubled(&self) -> Result<Self> {
        if self.size * 2 > MAX_GRID {
            return Err(Error::InvalidGrid(self.size * 2));
        }
        Ok(Self { size: self.size * 2 })
    }

    /// Largest interior radius this grid resolves under the same policy that
    /// sized it, i.e. the `r` with `r^N = 1e-12`.
    pub fn max_probe_radius(&self) -> f64 {
        ALIAS_TOL.powf(1.0 / self.size as f64)
    }
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "point must lie in the open disk",
            modulus: z.norm(),
        })
    }
}

/// `|z - w| / |1 - conj(w) z|`.
pub fn pseudohyperbolic_distance(z: Complex64, w: Complex64) -> Result<f64> {
    check_disk(z)?;
    check_disk(w)?;
    Ok((z - w).norm() / (1.0 - w.conj() * z).norm())
}

/// Non-tangential approach region `{z : |z - ζ| / (1 - |z|) < α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StolzRegion {
    vertex: Complex64,
    aperture: f64,
}

impl StolzRegion {
    pub fn new(vertex: Complex64, aperture: f64) -> Result<Self> {
        if (vertex.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::Domain {
                what: "Stolz vertex must be unimodular",
                modulus: vertex.norm(),
            });
        }
        if !(aperture > 1.0) || !aperture.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Stolz aperture must exceed 1, got {aperture}"
            )));
        }
        Ok(Self { vertex, aperture })
    }

    pub fn vertex(&self) -> Complex64 {
        self.vertex
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn contains(&self, z: Complex64) -> Result<bool> {
        check_disk(z)?;
        Ok((z - self.vertex).norm() / (1.0 - z.norm()) < self.aperture)
    }

    /// Half-width of the admissible direction sector at distance `gap` from the
    /// vertex: the point `ζ(1 - gap·e^{iφ})` lies on the region boundary when
    /// `cos φ = 1/α + gap(1 - 1/α²)/2`.
    fn sector(&self, gap: f64) -> f64 {
        let alpha = self.aperture;
        let c = 1.0 / alpha + 0.5 * gap * (1.0 - 1.0 / (alpha * alpha));
        c.min(1.0).acos()
    }
}

/// Points tending to a boundary vertex, ordered by strictly decreasing distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachSequence {
    pub vertex: Complex64,
    /// Direction of the ray relative to the sector half-width, in `[-1, 1]`.
    pub ray_fraction: f64,
    pub depths: Vec<f64>,
    pub points: Vec<Complex64>,
}

impl ApproachSequence {
    pub fn is_radial(&self) -> bool {
        self.ray_fraction == 0.0
    }
}

/// Depth schedule `1 - q^n`, `n = 1..=count`.
pub fn geometric_depths(q: f64, count: usize) -> Result<Vec<f64>> {
    if !(q > 0.0 && q < 1.0) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "geometric depths need q in (0,1) and count >= 1 (got {q}, {count})"
        )));
    }
    Ok((1..=count as i32).map(|n| 1.0 - q.powi(n)).collect())
}

/// Drops the depths a series evaluator on `grid` cannot support.
pub fn cap_depths(depths: &[f64], max_radius: f64) -> Vec<f64> {
    depths.iter().copied().filter(|&r| r <= max_radius).collect()
}

fn ray_fractions(rays: usize) -> Vec<f64> {
    // radial first, then alternating sides moving outwards
    let levels = rays / 2;
    (0..rays)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                let level = i.div_ceil(2) as f64 / levels.max(1) as f64;
                if i % 2 == 1 {
                    level
                } else {
                    -level
                }
            }
        })
        .collect()
}

/// Deterministic sweep of a Stolz region: one approach sequence per ray, each
/// ray sampled at the given depths. Depth `r` on the radial ray is the point
/// `rζ`; other rays sit at the same distance `1 - r` from the vertex, tilted
/// within 95% of the admissible sector at that distance.
pub fn stolz_sample(
    region: &StolzRegion,
    rays: usize,
    depths: &[f64],
) -> Result<Vec<ApproachSequence>> {
    if rays == 0 {
        return Err(Error::InvalidArgument("need at least one ray".into()));
    }
    if depths.is_empty() {
        return Err(Error::InvalidArgument("empty depth schedule".into()));
    }
    for w in depths.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "depths must be strictly increasing".into(),
            ));
        }
    }
    if depths[0] <= 0.0 || 1.0 - depths[depths.len() - 1] < MIN_GAP {
        return Err(Error::InvalidArgument(format!(
            "depths must lie in (0, 1 - {MIN_GAP:e}]"
        )));
    }

    let zeta = region.vertex;
    ray_fractions(rays)
        .into_iter()
        .map(|fraction| {
            let points = depths
                .iter()
                .map(|&r| {
                    let gap = 1.0 - r;
                    let phi = fraction * RAY_MARGIN * region.sector(gap);
                    let z = if fraction == 0.0 {
                        zeta * r
                    } else {
                        zeta * (1.0 - gap * Complex64::from_polar(1.0, phi))
                    };
                    if !region.contains(z)? {
                        return Err(Error::StolzEscape { re: z.re, im: z.im });
                    }
                    Ok(z)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ApproachSequence {
                vertex: zeta,
                ray_fraction: fraction,
                depths: depths.to_vec(),
                points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pseudohyperbolic_examples() {
        assert_eq!(pseudohyperbolic_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert!((pseudohyperbolic_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let d = pseudohyperbolic_distance(c(0.75, 0.0), c(0.9375, 0.0)).unwrap();
        assert!((d - 0.1875 / 0.296875).abs() < 1e-14);
        assert!((d - 0.63158).abs() < 1e-5);
        assert!(pseudohyperbolic_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn stolz_membership_examples() {
        let r2 = StolzRegion::new(c(1.0, 0.0), 2.0).unwrap();
        assert!(r2.contains(c(0.0, 0.0)).unwrap());
        assert!(r2.contains(c(0.9, 0.0)).unwrap());
        let r15 = StolzRegion::new(c(1.0, 0.0), 1.5).unwrap();
        assert!(!r15.contains(c(0.0, 0.9)).unwrap());
        assert!(r2.contains(c(1.0, 0.0)).is_err());
        assert!(StolzRegion::new(c(1.0, 0.0), 1.0).is_err());
        assert!(StolzRegion::new(c(0.9, 0.0), 2.0).is_err());
    }

    #[test]
    fn stolz_sample_examples() {
        let r = StolzRegion::new(c(1.0, 0.0), 2.0).unwrap();
        let s = stolz_sample(&r, 1, &[0.5, 0.9]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points, vec![c(0.5, 0.0), c(0.9, 0.0)]);

        let ri = StolzRegion::new(c(0.0, 1.0), 2.0).unwrap();
        let s = stolz_sample(&ri, 1, &[0.5]).unwrap();
        assert!((s[0].points[0] - c(0.0, 0.5)).norm() < 1e-15);

        let r4 = StolzRegion::new(c(1.0, 0.0), 4.0).unwrap();
        let s = stolz_sample(&r4, 3, &[0.9]).unwrap();
        assert_eq!(s.len(), 3);
        for seq in &s {
            let z = seq.points[0];
            assert!((z - 1.0).norm() / (1.0 - z.norm()) < 4.0);
        }
    }

    #[test]
    fn rays_include_radial_and_stay_in_unit_range() {
        for rays in 1..8 {
            let f = ray_fractions(rays);
            assert_eq!(f.len(), rays);
            assert_eq!(f[0], 0.0);
            assert!(f.iter().all(|x| x.abs() <= 1.0));
        }
    }

    #[test]
    fn deep_geometric_schedule_stays_inside() {
        let depths = geometric_depths(0.5, 40).unwrap();
        for alpha in [1.1, 2.0, 8.0] {
            let r = StolzRegion::new(c(0.0, -1.0), alpha).unwrap();
            let s = stolz_sample(&r, 5, &depths).unwrap();
            for seq in s {
                for w in seq.points.windows(2) {
                    assert!((w[1] - seq.vertex).norm() < (w[0] - seq.vertex).norm());
                }
            }
        }
    }

    #[test]
    fn grid_policy() {
        assert_eq!(CircleGrid::for_max_modulus(0.0).unwrap().size(), 16);
        assert_eq!(CircleGrid::for_max_modulus(0.5).unwrap().size(), 64);
        assert_eq!(CircleGrid::for_max_modulus(0.99609375).unwrap().size(), 8192);
        assert!(CircleGrid::for_max_modulus(1.0 - 1e-6).is_err());
        assert!(CircleGrid::new(24).is_err());
        assert!(CircleGrid::new(8).is_err());
        let g = CircleGrid::new(1024).unwrap();
        assert!((g.max_probe_radius().powi(1024) - 1e-12).abs() < 1e-20);
    }

    fn disk_point() -> impl Strategy<Value = Complex64> {
        (0.0..0.999f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    proptest! {
        #[test]
        fn pseudohyperbolic_triangle_inequality(a in disk_point(), b in disk_point(), z in disk_point()) {
            let ab = pseudohyperbolic_distance(a, b).unwrap();
            let az = pseudohyperbolic_distance(a, z).unwrap();
            let zb = pseudohyperbolic_distance(z, b).unwrap();
            prop_assert!(ab <= az + zb + 1e-12);
            prop_assert!((ab - pseudohyperbolic_distance(b, a).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn sampling_is_rotation_equivariant(t in 0.0..(2.0 * PI), alpha in 1.05..10.0f64, rays in 1usize..6) {
            let zeta = Complex64::from_polar(1.0, t);
            let depths = geometric_depths(0.5, 20).unwrap();
            let base = stolz_sample(&StolzRegion::new(Complex64::new(1.0, 0.0), alpha).unwrap(), rays, &depths).unwrap();
            let rot = stolz_sample(&StolzRegion::new(zeta, alpha).unwrap(), rays, &depths).unwrap();
            for (b, r) in base.iter().zip(&rot) {
                for (p, q) in b.points.iter().zip(&r.points) {
                    prop_assert!((zeta * p - q).norm() < 1e-14);
                }
            }
        }

        #[test]
        fn radial_points_always_inside(t in 0.0..(2.0 * PI), alpha in 1.0001..50.0f64, r in 0.0..0.999999f64) {
            let zeta = Complex64::from_polar(1.0, t);
            let region = StolzRegion::new(zeta, alpha).unwrap();
            prop_assert!(region.contains(zeta * r).unwrap());
        }
    }
}
