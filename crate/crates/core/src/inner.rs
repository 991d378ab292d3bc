//! Inner functions built from finitely many Blaschke zeros and singular atoms,
//! together with the kernel-norm functional `(1 - |I(λ)|²)/(1 - |λ|²)` and the
//! Stolz-region growth probe built on top of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::{stolz_sample, CircleGrid, StolzRegion};
use crate::error::{Error, Result};

const UNIMODULAR_TOL: f64 = 1e-12;
/// Per-decade growth factor below which kernel norms count as bounded.
pub const BOUNDED_GROWTH_FACTOR: f64 = 1.05;

/// Point mass `mass` of the singular measure at `location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Complex64,
    pub mass: f64,
}

/// `phase · ∏ b_{a_j}(z) · ∏ exp(-s_k (ζ_k + z)/(ζ_k - z))`.
///
/// Each Blaschke factor is normalized as `b_a(z) = (conj(a)/|a|)(a - z)/(1 - conj(a) z)`
/// (positive at the origin) and `b_0(z) = z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnerSpec", into = "InnerSpec")]
pub struct InnerFunction {
    phase: Complex64,
    zeros: Vec<Complex64>,
    atoms: Vec<Atom>,
}

/// Config-file form: zeros as `[re, im]`, atoms as `{zeta, mass}`, phase in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSpec {
    #[serde(default)]
    pub zeros: Vec<[f64; 2]>,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub zeta: [f64; 2],
    pub mass: f64,
}

impl TryFrom<InnerSpec> for InnerFunction {
    type Error = Error;

    fn try_from(spec: InnerSpec) -> Result<Self> {
        let zeros = spec.zeros.iter().map(|z| Complex64::new(z[0], z[1])).collect();
        let atoms = spec
            .atoms
            .iter()
            .map(|a| Atom {
                location: Complex64::new(a.zeta[0], a.zeta[1]),
                mass: a.mass,
            })
            .collect();
        InnerFunction::new(Complex64::from_polar(1.0, spec.phase), zeros, atoms)
    }
}

impl From<InnerFunction> for InnerSpec {
    fn from(f: InnerFunction) -> Self {
        InnerSpec {
            zeros: f.zeros.iter().map(|z| [z.re, z.im]).collect(),
            atoms: f
                .atoms
                .iter()
                .map(|a| AtomSpec {
                    zeta: [a.location.re, a.location.im],
                    mass: a.mass,
                })
                .collect(),
            phase: f.phase.arg(),
        }
    }
}

/// Blaschke factor with the positive-at-origin normalization.
pub fn blaschke_factor(a: Complex64, z: Complex64) -> Complex64 {
    if a == Complex64::new(0.0, 0.0) {
        z
    } else {
        (a.conj() / a.norm()) * (a - z) / (1.0 - a.conj() * z)
    }
}

/// `(1 - exp(-x)) / x`, continuous at 0.
fn one_minus_exp_ratio(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

impl InnerFunction {
    pub fn new(phase: Complex64, zeros: Vec<Complex64>, atoms: Vec<Atom>) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::Domain {
                what: "phase must be unimodular",
                modulus: phase.norm(),
            });
        }
        if let Some(z) = zeros.iter().find(|z| !(z.norm() < 1.0)) {
            return Err(Error::Domain {
                what: "Blaschke zeros must lie in the open disk",
                modulus: z.norm(),
            });
        }
        for atom in &atoms {
            if (atom.location.norm() - 1.0).abs() > UNIMODULAR_TOL {
                return Err(Error::Domain {
                    what: "atom location must be unimodular",
                    modulus: atom.location.norm(),
                });
            }
            if !(atom.mass > 0.0) || !atom.mass.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom mass must be positive, got {}",
                    atom.mass
                )));
            }
        }
        Ok(Self { phase, zeros, atoms })
    }

    /// Finite Blaschke product with unit phase.
    pub fn blaschke(zeros: Vec<Complex64>) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), zeros, Vec::new())
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        Self {
            phase: Complex64::new(1.0, 0.0),
            zeros: vec![Complex64::new(0.0, 0.0); n],
            atoms: Vec::new(),
        }
    }

    /// Single singular atom `exp(-s (ζ + z)/(ζ - z))`.
    pub fn atom(location: Complex64, mass: f64) -> Result<Self> {
        Self::new(
            Complex64::new(1.0, 0.0),
            Vec::new(),
            vec![Atom { location, mass }],
        )
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_finite_blaschke(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn has_origin_zero(&self) -> bool {
        self.zeros.iter().any(|z| z.norm() == 0.0)
    }

    pub fn max_zero_modulus(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Product formed by concatenating zero and atom lists.
    pub fn product(&self, other: &InnerFunction) -> InnerFunction {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        InnerFunction {
            phase: self.phase * other.phase,
            zeros,
            atoms,
        }
    }

    fn atom_exponent(&self, z: Complex64) -> Result<Complex64> {
        let mut exponent = Complex64::new(0.0, 0.0);
        for atom in &self.atoms {
            let denom = atom.location - z;
            if denom.norm() == 0.0 {
                return Err(Error::Singularity { re: z.re, im: z.im });
            }
            exponent -= atom.mass * (atom.location + z) / denom;
        }
        Ok(exponent)
    }

    /// Value at a point of the closed disk.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain {
                what: "inner functions are evaluated on the closed disk",
                modulus: z.norm(),
            });
        }
        let blaschke = self
            .zeros
            .iter()
            .fold(self.phase, |acc, &a| acc * blaschke_factor(a, z));
        if self.atoms.is_empty() {
            return Ok(blaschke);
        }
        // one exponential for all atoms keeps tiny factors from underflowing separately
        Ok(blaschke * self.atom_exponent(z)?.exp())
    }

    /// Samples on every node of `grid`.
    pub fn sample(&self, grid: &CircleGrid) -> Result<Vec<Complex64>> {
        grid.nodes().map(|z| self.eval(z)).collect()
    }

    /// `‖k_λ^I‖² = (1 - |I(λ)|²)/(1 - |λ|²)`.
    ///
    /// Evaluated without cancellation: the Blaschke part telescopes into
    /// `Σ_j (1 - |a_j|²)/|1 - conj(a_j)λ|² ∏_{i<j} |b_i(λ)|²` and the atom part
    /// uses `expm1`, so the result keeps full relative accuracy near the circle.
    pub fn kernel_norm_sq(&self, lambda: Complex64) -> Result<f64> {
        let r = lambda.norm();
        if r >= 1.0 {
            return Err(Error::Domain {
                what: "kernel norms need an interior point",
                modulus: r,
            });
        }
        let gap = (1.0 - r) * (1.0 + r);

        let mut blaschke_part = 0.0;
        let mut prefix = 1.0;
        for &a in &self.zeros {
            let d = (1.0 - a.conj() * lambda).norm_sqr();
            blaschke_part += prefix * (1.0 - a.norm_sqr()) / d;
            prefix *= blaschke_factor(a, lambda).norm_sqr();
        }
        if self.atoms.is_empty() {
            return Ok(blaschke_part);
        }

        // x = 2 Σ s_k (1 - |λ|²)/|ζ_k - λ|², |S(λ)|² = e^{-x}
        let per_gap: f64 = self
            .atoms
            .iter()
            .map(|a| 2.0 * a.mass / (a.location - lambda).norm_sqr())
            .sum();
        let x = per_gap * gap;
        let singular_part = one_minus_exp_ratio(x) * per_gap;
        Ok(blaschke_part + prefix * singular_part)
    }
}

/// Finite Blaschke product with zeros `1 - q^n`, `n = 1..=count`.
pub fn blaschke_lambda(q: f64, count: usize) -> Result<InnerFunction> {
    if !(q > 0.0 && q < 1.0) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "blaschke_lambda needs q in (0,1) and count >= 1 (got {q}, {count})"
        )));
    }
    let deepest = 1.0 - q.powi(count as i32);
    CircleGrid::for_max_modulus(deepest)?;
    let zeros = (1..=count as i32)
        .map(|n| Complex64::new(1.0 - q.powi(n), 0.0))
        .collect();
    InnerFunction::blaschke(zeros)
}

/// Result of probing `‖k_λ^I‖²` along a Stolz sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcVerdict {
    pub bounded: bool,
    pub sup_norm_sq: f64,
    pub samples: Vec<(Complex64, f64)>,
    /// Least-squares slope of `log ‖k‖²` against `log 1/(1 - r)` over all samples.
    pub growth_exponent_estimate: f64,
    /// Worst per-decade growth factor over the deepest decade, across rays.
    pub growth_factor: f64,
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Growth summary of a positive quantity sampled along rays.
///
/// `rays[i]` holds `(depth, value)` pairs ordered by increasing depth.
/// Returns `(bounded, growth_exponent, worst_growth_factor)`.
pub(crate) fn assess_growth(rays: &[Vec<(f64, f64)>]) -> (bool, f64, f64) {
    let floor = 1e-300;
    let mut pooled = Vec::new();
    let mut worst = 0.0f64;
    for ray in rays {
        if ray.is_empty() {
            continue;
        }
        let pts: Vec<(f64, f64)> = ray
            .iter()
            .map(|&(r, v)| ((1.0 / (1.0 - r)).log10(), v.max(floor).log10()))
            .collect();
        pooled.extend(pts.iter().copied());
        let deepest = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        let last: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= deepest - 1.0).collect();
        let slope = if last.len() >= 2 {
            least_squares_slope(&last)
        } else if pts.len() >= 2 {
            least_squares_slope(&pts[pts.len() - 2..])
        } else {
            0.0
        };
        worst = worst.max(10f64.powf(slope));
    }
    // log10 on both axes gives the same slope as natural logs
    let exponent = least_squares_slope(&pooled);
    (worst < BOUNDED_GROWTH_FACTOR, exponent, worst)
}

/// Probes boundedness of `‖k_λ^I‖²` in the Stolz region `Γ_α(ζ)`.
///
/// The verdict is a heuristic on finitely many samples, not a proof.
pub fn adc_probe(
    inner: &InnerFunction,
    zeta: Complex64,
    aperture: f64,
    depths: &[f64],
    rays: usize,
) -> Result<AdcVerdict> {
    let region = StolzRegion::new(zeta, aperture)?;
    let sweep = stolz_sample(&region, rays, depths)?;
    let mut samples = Vec::new();
    let mut per_ray = Vec::new();
    for seq in &sweep {
        let mut ray = Vec::with_capacity(seq.points.len());
        for (&z, &r) in seq.points.iter().zip(&seq.depths) {
            let v = inner.kernel_norm_sq(z)?;
            samples.push((z, v));
            ray.push((r, v));
        }
        per_ray.push(ray);
    }
    let (bounded, growth_exponent_estimate, growth_factor) = assess_growth(&per_ray);
    let sup_norm_sq = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(AdcVerdict {
        bounded,
        sup_norm_sq,
        samples,
        growth_exponent_estimate,
        growth_factor,
    })
}

/// Uniformly random boundary point, handy for sweeps.
pub fn boundary_point(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk::geometric_depths;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let z = InnerFunction::monomial(1);
        assert_eq!(z.eval(c(0.5, 0.0)).unwrap(), c(0.5, 0.0));

        let atom = InnerFunction::atom(c(1.0, 0.0), 1.0).unwrap();
        assert!((atom.eval(c(0.0, 0.0)).unwrap() - (-1.0f64).exp()).norm() < 1e-15);
        assert!((atom.eval(c(0.0, 0.0)).unwrap().re - 0.3678794).abs() < 1e-7);
        assert!(matches!(atom.eval(c(1.0, 0.0)), Err(Error::Singularity { .. })));

        let b = InnerFunction::blaschke(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(b.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn kernel_norm_examples() {
        let z = InnerFunction::monomial(1);
        assert!((z.kernel_norm_sq(c(0.3, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let z2 = InnerFunction::monomial(2);
        assert!((z2.kernel_norm_sq(c(0.5, 0.0)).unwrap() - 1.25).abs() < 1e-15);
        let atom = InnerFunction::atom(c(1.0, 0.0), 1.0).unwrap();
        let expected = (1.0 - (-38.0f64).exp()) / 0.19;
        assert!((atom.kernel_norm_sq(c(0.9, 0.0)).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 5.26316).abs() < 1e-5);
        assert!(z.kernel_norm_sq(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn kernel_norm_matches_naive_formula_away_from_circle() {
        let f = InnerFunction::new(
            Complex64::from_polar(1.0, 0.4),
            vec![c(0.0, 0.0), c(0.3, -0.4), c(-0.6, 0.1)],
            vec![Atom { location: c(0.0, 1.0), mass: 0.7 }],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let lam = Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..6.3));
            let naive = (1.0 - f.eval(lam).unwrap().norm_sqr()) / (1.0 - lam.norm_sqr());
            assert!((naive - f.kernel_norm_sq(lam).unwrap()).abs() < 1e-12 * naive.max(1.0));
        }
    }

    #[test]
    fn kernel_norm_at_origin() {
        let f = InnerFunction::blaschke(vec![c(0.2, 0.3), c(-0.5, 0.0)]).unwrap();
        let i0 = f.eval(c(0.0, 0.0)).unwrap();
        assert!((f.kernel_norm_sq(c(0.0, 0.0)).unwrap() - (1.0 - i0.norm_sqr())).abs() < 1e-15);
        let g = f.product(&InnerFunction::monomial(1));
        assert!((g.kernel_norm_sq(c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn modulus_bounds() {
        let f = InnerFunction::new(
            c(0.0, 1.0),
            vec![c(0.9, 0.1), c(-0.2, 0.5), c(0.0, 0.0)],
            vec![Atom { location: c(-1.0, 0.0), mass: 2.0 }],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.999), rng.gen_range(0.0..std::f64::consts::TAU));
            assert!(f.eval(z).unwrap().norm() < 1.0);
            let t: f64 = rng.gen_range(0.01..0.99);
            let w = boundary_point(t);
            assert!((f.eval(w).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn multiplicative() {
        let f = InnerFunction::new(c(0.0, 1.0), vec![c(0.3, 0.1)], vec![]).unwrap();
        let g = InnerFunction::atom(c(0.0, -1.0), 0.4).unwrap();
        let fg = f.product(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..std::f64::consts::TAU));
            let lhs = fg.eval(z).unwrap();
            let rhs = f.eval(z).unwrap() * g.eval(z).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn lambda_products() {
        let b = blaschke_lambda(0.25, 1).unwrap();
        assert_eq!(b.zeros(), &[c(0.75, 0.0)]);
        let b = blaschke_lambda(0.5, 2).unwrap();
        assert_eq!(b.zeros(), &[c(0.5, 0.0), c(0.75, 0.0)]);
        let b = blaschke_lambda(0.5, 6).unwrap();
        let expected: f64 = (1..=6).map(|n| 1.0 - 0.5f64.powi(n)).product();
        let v = b.eval(c(0.0, 0.0)).unwrap();
        assert!((v.re - expected).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!(matches!(blaschke_lambda(0.5, 30), Err(Error::ResolutionExceeded { .. })));
    }

    #[test]
    fn adc_probe_examples() {
        let depths = geometric_depths(0.5, 30).unwrap();
        let v = adc_probe(&InnerFunction::monomial(2), c(1.0, 0.0), 2.0, &depths, 3).unwrap();
        assert!(v.bounded);
        assert!(v.sup_norm_sq <= 2.0);

        let atom = InnerFunction::atom(c(1.0, 0.0), 1.0).unwrap();
        let v = adc_probe(&atom, c(1.0, 0.0), 2.0, &depths, 3).unwrap();
        assert!(!v.bounded);
        assert!((v.growth_exponent_estimate - 1.0).abs() < 0.1);

        let far = InnerFunction::atom(c(-1.0, 0.0), 1.0).unwrap();
        let v = adc_probe(&far, c(1.0, 0.0), 2.0, &depths, 3).unwrap();
        assert!(v.bounded);
    }

    #[test]
    fn serde_roundtrip() {
        let f = InnerFunction::new(
            Complex64::from_polar(1.0, 0.25),
            vec![c(0.0, 0.0), c(0.5, -0.1)],
            vec![Atom { location: c(0.0, 1.0), mass: 0.5 }],
        )
        .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"zeta\""));
        let back: InnerFunction = serde_json::from_str(&json).unwrap();
        assert!((back.phase() - f.phase()).norm() < 1e-15);
        assert_eq!(back.zeros(), f.zeros());
        assert!(serde_json::from_str::<InnerFunction>(r#"{"zeros": [[1.5, 0.0]]}"#).is_err());
    }
}
