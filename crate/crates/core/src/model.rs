//! Model spaces `K_I = H² ⊖ I H²` for finite Blaschke products, in the
//! Takenaka–Malmquist orthonormal basis
//!
//! ```text
//! e_k(z) = sqrt(1 - |a_k|²) / (1 - conj(a_k) z) · ∏_{j<k} b_{a_j}(z)
//! ```
//!
//! Zeros at the origin are placed first, so `e_1 = 1 = k_0^I` whenever `I(0) = 0`.

use std::io;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{inner_product_samples, BoundaryFunction};
use crate::disk::CircleGrid;
use crate::error::{Error, Result};
use crate::inner::{blaschke_factor, InnerFunction};

/// `k_λ^I(z) = (1 - conj(I(λ)) I(z)) / (1 - conj(λ) z)`; the diagonal `z = λ`
/// returns `‖k_λ^I‖²`.
pub fn kernel_eval(inner: &InnerFunction, lambda: Complex64, z: Complex64) -> Result<Complex64> {
    if lambda.norm() >= 1.0 {
        return Err(Error::Domain {
            what: "kernel base point must lie in the open disk",
            modulus: lambda.norm(),
        });
    }
    if z == lambda {
        return Ok(Complex64::new(inner.kernel_norm_sq(lambda)?, 0.0));
    }
    let il = inner.eval(lambda)?;
    let iz = inner.eval(z)?;
    Ok((1.0 - il.conj() * iz) / (1.0 - lambda.conj() * z))
}

/// Orthonormal basis of `K_I` with its samples on a grid.
#[derive(Debug, Clone)]
pub struct TMBasis {
    inner: InnerFunction,
    zeros: Vec<Complex64>,
    grid: CircleGrid,
    samples: Vec<Vec<Complex64>>,
}

impl TMBasis {
    /// Builds the basis on `grid`; the grid must be at least as fine as the
    /// resolution policy demands for the zeros of `inner`.
    pub fn new(inner: InnerFunction, grid: CircleGrid) -> Result<Self> {
        if !inner.is_finite_blaschke() {
            return Err(Error::AtomsUnsupported);
        }
        if inner.degree() == 0 {
            return Err(Error::InvalidArgument("K_I is trivial for constant I".into()));
        }
        let required = CircleGrid::for_max_modulus(inner.max_zero_modulus())?;
        if grid.size() < required.size() {
            return Err(Error::GridMismatch {
                left: required.size(),
                right: grid.size(),
            });
        }
        let (mut zeros, rest): (Vec<_>, Vec<_>) =
            inner.zeros().iter().partition(|z| z.norm() == 0.0);
        zeros.extend(rest);

        let mut basis = Self {
            inner,
            zeros,
            grid,
            samples: Vec::new(),
        };
        let n = basis.zeros.len();
        let mut samples = vec![Vec::with_capacity(grid.size()); n];
        for z in grid.nodes() {
            for (k, v) in basis.eval_all(z).into_iter().enumerate() {
                samples[k].push(v);
            }
        }
        basis.samples = samples;
        Ok(basis)
    }

    /// Basis on the policy grid for `inner`.
    pub fn with_policy(inner: InnerFunction) -> Result<Self> {
        let grid = CircleGrid::for_max_modulus(inner.max_zero_modulus())?;
        Self::new(inner, grid)
    }

    pub fn inner(&self) -> &InnerFunction {
        &self.inner
    }

    /// Zeros in basis order.
    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn dim(&self) -> usize {
        self.zeros.len()
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    /// Index of `e_k` equal to the constant 1, if `I(0) = 0`.
    pub fn origin_index(&self) -> Option<usize> {
        (self.zeros.first()?.norm() == 0.0).then_some(0)
    }

    /// All basis values at `z` (closed disk).
    pub fn eval_all(&self, z: Complex64) -> Vec<Complex64> {
        let mut prefix = Complex64::new(1.0, 0.0);
        self.zeros
            .iter()
            .map(|&a| {
                let e = (1.0 - a.norm_sqr()).sqrt() / (1.0 - a.conj() * z) * prefix;
                prefix *= blaschke_factor(a, z);
                e
            })
            .collect()
    }

    pub fn basis_samples(&self, k: usize) -> &[Complex64] {
        &self.samples[k]
    }

    pub fn basis_function(&self, k: usize) -> BoundaryFunction {
        BoundaryFunction::from_samples(self.grid, self.samples[k].clone())
            .expect("basis samples live on the basis grid")
    }

    /// `G[j][k] = ⟨e_k, e_j⟩` by quadrature.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |j, k| {
            inner_product_samples(&self.samples[k], &self.samples[j])
        })
    }

    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let n = self.dim();
        (g - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Coordinates `conj(e_k(λ))` of `k_λ^I`; `λ` may sit on the circle.
    pub fn kernel_coords(&self, lambda: Complex64) -> Result<Vec<Complex64>> {
        if lambda.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain {
                what: "kernel point outside the closed disk",
                modulus: lambda.norm(),
            });
        }
        Ok(self.eval_all(lambda).into_iter().map(|e| e.conj()).collect())
    }

    pub fn element(self: &Arc<Self>, coeffs: Vec<Complex64>) -> Result<ModelSpaceElement> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok(ModelSpaceElement {
            basis: Arc::clone(self),
            coeffs,
        })
    }

    /// Reproducing kernel of `K_I` at a boundary point; every boundary point
    /// is an angular-derivative point for a finite Blaschke product.
    pub fn boundary_kernel(self: &Arc<Self>, zeta: Complex64) -> Result<ModelSpaceElement> {
        if (zeta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: "boundary kernel needs a unimodular point",
                modulus: zeta.norm(),
            });
        }
        let coeffs = self.kernel_coords(zeta)?;
        self.element(coeffs)
    }

    /// `P_I f` with coefficients `⟨f, e_k⟩`.
    pub fn project(self: &Arc<Self>, f: &BoundaryFunction) -> Result<ModelSpaceElement> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.size(),
                right: f.grid().size(),
            });
        }
        let coeffs = self
            .samples
            .iter()
            .map(|e| inner_product_samples(f.samples(), e))
            .collect();
        self.element(coeffs)
    }

    /// Samples of `Σ c_k e_k`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.size()];
        for (c, e) in coeffs.iter().zip(&self.samples) {
            for (o, v) in out.iter_mut().zip(e) {
                *o += c * v;
            }
        }
        out
    }
}

/// An element of `K_I` in Takenaka–Malmquist coordinates.
#[derive(Debug, Clone)]
pub struct ModelSpaceElement {
    basis: Arc<TMBasis>,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoeffRow {
    k: usize,
    re: f64,
    im: f64,
}

impl ModelSpaceElement {
    pub fn basis(&self) -> &Arc<TMBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ c_k e_k(z)` for `|z| ≤ 1`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain {
                what: "model space elements are evaluated on the closed disk",
                modulus: z.norm(),
            });
        }
        Ok(self
            .basis
            .eval_all(z)
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| e * c)
            .sum())
    }

    pub fn samples(&self) -> BoundaryFunction {
        BoundaryFunction::from_samples(self.basis.grid(), self.basis.synthesize(&self.coeffs))
            .expect("basis grid")
    }

    /// CSV with header `k,re,im`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (k, c) in self.coeffs.iter().enumerate() {
            w.serialize(CoeffRow { k, re: c.re, im: c.im })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(zeros: Vec<Complex64>, n: usize) -> Arc<TMBasis> {
        Arc::new(
            TMBasis::new(
                InnerFunction::blaschke(zeros).unwrap(),
                CircleGrid::new(n).unwrap(),
            )
            .unwrap(),
        )
    }

    fn random_zeros(rng: &mut ChaCha8Rng, n: usize, max: f64) -> Vec<Complex64> {
        let mut z = vec![c(0.0, 0.0)];
        z.extend((1..n).map(|_| Complex64::from_polar(rng.gen_range(0.0..max), rng.gen_range(0.0..6.3))));
        z
    }

    #[test]
    fn kernel_eval_examples() {
        let f = InnerFunction::blaschke(vec![c(0.0, 0.0), c(0.3, 0.4)]).unwrap();
        for z in [c(0.1, 0.2), c(-0.5, 0.5), c(1.0, 0.0)] {
            assert!((kernel_eval(&f, c(0.0, 0.0), z).unwrap() - 1.0).norm() < 1e-15);
        }
        let z2 = InnerFunction::monomial(2);
        assert!((kernel_eval(&z2, c(0.5, 0.0), c(0.5, 0.0)).unwrap() - 1.25).norm() < 1e-15);
        assert!((kernel_eval(&z2, c(0.5, 0.0), c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        assert!(kernel_eval(&z2, c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn boundary_kernel_examples() {
        let b1 = Arc::new(TMBasis::with_policy(InnerFunction::monomial(1)).unwrap());
        let k = b1.boundary_kernel(c(1.0, 0.0)).unwrap();
        assert!((k.coeffs()[0] - 1.0).norm() < 1e-15);

        let b2 = Arc::new(TMBasis::with_policy(InnerFunction::monomial(2)).unwrap());
        let k = b2.boundary_kernel(c(1.0, 0.0)).unwrap();
        assert!((k.coeffs()[0] - 1.0).norm() < 1e-15 && (k.coeffs()[1] - 1.0).norm() < 1e-15);
        let k = b2.boundary_kernel(c(0.0, 1.0)).unwrap();
        assert!((k.coeffs()[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((k.eval(c(0.5, 0.0)).unwrap() - c(1.0, -0.5)).norm() < 1e-15);

        let atoms = TMBasis::with_policy(InnerFunction::atom(c(1.0, 0.0), 1.0).unwrap());
        assert!(matches!(atoms, Err(Error::AtomsUnsupported)));
    }

    #[test]
    fn boundary_kernel_reproduces_boundary_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = basis(random_zeros(&mut rng, 5, 0.9), 1024);
        for _ in 0..20 {
            let zeta = Complex64::from_polar(1.0, rng.gen_range(0.0..6.3));
            let coeffs: Vec<_> = (0..5).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = b.element(coeffs).unwrap();
            let kz = b.boundary_kernel(zeta).unwrap();
            let ip = f.samples().inner_product(&kz.samples()).unwrap();
            assert!((ip - f.eval(zeta).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn project_examples() {
        let b = Arc::new(TMBasis::new(InnerFunction::monomial(2), CircleGrid::new(64).unwrap()).unwrap());
        let z3 = BoundaryFunction::character(b.grid(), 3);
        assert!(b.project(&z3).unwrap().norm() < 1e-15);
        let f = BoundaryFunction::from_fn(b.grid(), |z| 3.0 + 2.0 * z);
        let p = b.project(&f).unwrap();
        assert!((p.coeffs()[0] - 3.0).norm() < 1e-14 && (p.coeffs()[1] - 2.0).norm() < 1e-14);

        let inner = InnerFunction::blaschke(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let b = Arc::new(TMBasis::with_policy(inner.clone()).unwrap());
        let k = BoundaryFunction::szego_kernel(b.grid(), c(0.3, 0.0)).unwrap();
        let p = b.project(&k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.3));
            let expected = kernel_eval(&inner, c(0.3, 0.0), z).unwrap();
            assert!((p.eval(z).unwrap() - expected).norm() < 1e-9);
        }
        let wrong = BoundaryFunction::constant(CircleGrid::new(128).unwrap(), c(1.0, 0.0));
        assert!(matches!(b.project(&wrong), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn eval_element_examples() {
        let b = Arc::new(TMBasis::with_policy(InnerFunction::monomial(2)).unwrap());
        let e = b.element(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((e.eval(c(0.3, 0.2)).unwrap() - b.eval_all(c(0.3, 0.2))[0]).norm() < 1e-15);
        let e = b.element(vec![c(3.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!((e.eval(c(0.5, 0.0)).unwrap() - 4.0).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = basis(random_zeros(&mut rng, 4, 0.8), 512);
        let coeffs: Vec<_> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let e = b.element(coeffs.clone()).unwrap();
        assert!((e.eval(c(0.0, 0.0)).unwrap() - coeffs[0]).norm() < 1e-15);
    }

    #[test]
    fn origin_zero_goes_first() {
        let b = TMBasis::with_policy(
            InnerFunction::blaschke(vec![c(0.5, 0.0), c(0.0, 0.0), c(0.2, 0.2)]).unwrap(),
        )
        .unwrap();
        assert_eq!(b.origin_index(), Some(0));
        assert!(b.basis_samples(0).iter().all(|s| (s - 1.0).norm() < 1e-15));
    }

    #[test]
    fn gram_identity_including_repeated_zeros() {
        let b = basis(vec![c(0.0, 0.0), c(0.6, 0.1), c(0.6, 0.1), c(-0.3, -0.7)], 1024);
        assert!(b.gram_deviation() < 1e-12);
    }

    #[test]
    fn kernel_expansion_and_reproducing_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for deg in 2..7 {
            let zeros = random_zeros(&mut rng, deg, 0.95);
            let inner = InnerFunction::blaschke(zeros).unwrap();
            let b = Arc::new(TMBasis::with_policy(inner.clone()).unwrap());
            for _ in 0..10 {
                let lam = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..6.3));
                let z = Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..6.3));
                let direct = kernel_eval(&inner, lam, z).unwrap();
                let expanded: Complex64 = b
                    .eval_all(lam)
                    .iter()
                    .zip(b.eval_all(z))
                    .map(|(el, ez)| el.conj() * ez)
                    .sum();
                assert!((direct - expanded).norm() < 1e-10 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn boundary_kernel_norm_is_radial_limit() {
        let inner = InnerFunction::blaschke(vec![c(0.0, 0.0), c(0.7, 0.2), c(-0.4, 0.5)]).unwrap();
        let b = Arc::new(TMBasis::with_policy(inner.clone()).unwrap());
        for t in [0.0, 1.0, 2.5, 4.0] {
            let zeta = Complex64::from_polar(1.0, t);
            let norm_sq = b.boundary_kernel(zeta).unwrap().norm().powi(2);
            let radial = inner.kernel_norm_sq(zeta * (1.0 - 1e-9)).unwrap();
            assert!((norm_sq - radial).abs() < 1e-6);
        }
    }

    #[test]
    fn coefficient_csv() {
        let b = Arc::new(TMBasis::with_policy(InnerFunction::monomial(2)).unwrap());
        let e = b.element(vec![c(1.0, 2.0), c(-0.5, 0.0)]).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("k,re,im"));
        assert_eq!(text.lines().count(), 3);
    }
}
