//! L² functions on the circle represented by uniform grid samples, with
//! eagerly computed Fourier coefficients.
//!
//! All inner products use the normalized measure `dθ/2π`, i.e. the trapezoidal
//! mean over the grid. Coefficients are stored in FFT order; index `k` in
//! `-N/2..N/2` maps to bin `k mod N`, so the Nyquist bin counts as negative.

use std::fmt;
use std::io;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::disk::CircleGrid;
use crate::error::{Error, Result};
use crate::inner::InnerFunction;

/// Relative negative-frequency leakage tolerated by [`HardyEvaluator`].
pub const LEAKAGE_TOL: f64 = 1e-8;
/// Smallest modulus sample accepted by [`outer_from_modulus`].
pub const MODULUS_FLOOR: f64 = 1e-8;

fn forward(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf
}

/// Grid samples of a function on the circle together with its Fourier coefficients.
#[derive(Clone, PartialEq)]
pub struct BoundaryFunction {
    grid: CircleGrid,
    samples: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunction")
            .field("grid", &self.grid.size())
            .field("norm", &self.norm())
            .finish()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    j: usize,
    theta: f64,
    re: f64,
    im: f64,
}

impl BoundaryFunction {
    pub fn from_samples(grid: CircleGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.size() {
            return Err(Error::GridMismatch {
                left: grid.size(),
                right: samples.len(),
            });
        }
        let coeffs = forward(&samples);
        Ok(Self { grid, samples, coeffs })
    }

    fn from_coefficients(grid: CircleGrid, coeffs: Vec<Complex64>) -> Self {
        let samples = inverse(&coeffs);
        Self { grid, samples, coeffs }
    }

    pub fn from_fn(grid: CircleGrid, f: impl Fn(Complex64) -> Complex64) -> Self {
        let samples = grid.nodes().map(f).collect();
        Self::from_samples(grid, samples).expect("sample count matches grid")
    }

    pub fn try_from_fn(
        grid: CircleGrid,
        f: impl Fn(Complex64) -> Result<Complex64>,
    ) -> Result<Self> {
        let samples = grid.nodes().map(f).collect::<Result<Vec<_>>>()?;
        Self::from_samples(grid, samples)
    }

    pub fn constant(grid: CircleGrid, c: Complex64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// `e^{ikθ}`.
    pub fn character(grid: CircleGrid, k: i64) -> Self {
        let n = grid.size() as i64;
        Self::from_samples(
            grid,
            (0..grid.size())
                .map(|j| grid.node(((k * j as i64).rem_euclid(n)) as usize))
                .collect(),
        )
        .expect("sample count matches grid")
    }

    /// Samples of the Szegő kernel `k_λ(z) = 1/(1 - conj(λ) z)`.
    pub fn szego_kernel(grid: CircleGrid, lambda: Complex64) -> Result<Self> {
        if lambda.norm() >= 1.0 {
            return Err(Error::Domain {
                what: "kernel point must lie in the open disk",
                modulus: lambda.norm(),
            });
        }
        Ok(Self::from_fn(grid, |z| 1.0 / (1.0 - lambda.conj() * z)))
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Coefficients in FFT order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Fourier coefficient `f̂(k)` for `k` in `-N/2..N/2`; zero outside.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let n = self.grid.size() as i64;
        if k < -n / 2 || k >= n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[k.rem_euclid(n) as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest modulus among the negative-index coefficients.
    pub fn negative_leakage(&self) -> f64 {
        let n = self.grid.size();
        self.coeffs[n / 2..].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_grid(&self, other: &BoundaryFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.size(),
                right: other.grid.size(),
            });
        }
        Ok(())
    }

    /// `⟨f, g⟩ = (1/N) Σ f(θ_j) conj(g(θ_j))`.
    pub fn inner_product(&self, other: &BoundaryFunction) -> Result<Complex64> {
        self.check_grid(other)?;
        Ok(inner_product_samples(&self.samples, &other.samples))
    }

    /// Orthogonal projection onto H²: negative-index coefficients are dropped.
    pub fn riesz_project(&self) -> BoundaryFunction {
        let n = self.grid.size();
        let mut coeffs = self.coeffs.clone();
        coeffs[n / 2..].iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        Self::from_coefficients(self.grid, coeffs)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> BoundaryFunction {
        let samples = self.samples.iter().map(|&s| f(s)).collect();
        Self::from_samples(self.grid, samples).expect("same grid")
    }

    pub fn conj(&self) -> BoundaryFunction {
        self.map(|s| s.conj())
    }

    pub fn scale(&self, c: Complex64) -> BoundaryFunction {
        self.map(|s| s * c)
    }

    pub fn zip_with(
        &self,
        other: &BoundaryFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<BoundaryFunction> {
        self.check_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_samples(self.grid, samples)
    }

    pub fn mul(&self, other: &BoundaryFunction) -> Result<BoundaryFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &BoundaryFunction) -> Result<BoundaryFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &BoundaryFunction) -> Result<BoundaryFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// CSV with header `j,theta,re,im`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (j, s) in self.samples.iter().enumerate() {
            w.serialize(SampleRow {
                j,
                theta: self.grid.theta(j),
                re: s.re,
                im: s.im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["j", "theta", "re", "im"] {
            return Err(Error::InvalidArgument(
                "sample CSV header must be j,theta,re,im".into(),
            ));
        }
        let mut samples = Vec::new();
        for (row_index, row) in r.deserialize::<SampleRow>().enumerate() {
            let row = row?;
            if row.j != row_index {
                return Err(Error::InvalidArgument(format!(
                    "sample rows must be ordered by j (row {row_index} has j = {})",
                    row.j
                )));
            }
            samples.push(Complex64::new(row.re, row.im));
        }
        let grid = CircleGrid::new(samples.len())?;
        Self::from_samples(grid, samples)
    }
}

pub(crate) fn inner_product_samples(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let sum: Complex64 = f.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
    sum / f.len() as f64
}

/// Pointwise evaluator for the interior of the disk.
pub type PointFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// An H² element given by boundary samples whose negative-frequency content is
/// negligible, optionally paired with a closed form for pointwise evaluation.
#[derive(Clone)]
pub struct HardyEvaluator {
    source: BoundaryFunction,
    pointwise: Option<PointFn>,
}

impl fmt::Debug for HardyEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HardyEvaluator")
            .field("source", &self.source)
            .field("closed_form", &self.pointwise.is_some())
            .finish()
    }
}

impl HardyEvaluator {
    pub fn new(source: BoundaryFunction) -> Result<Self> {
        let leakage = source.negative_leakage();
        let tolerance = LEAKAGE_TOL * source.norm();
        if leakage > tolerance {
            return Err(Error::UnderResolved { leakage, tolerance });
        }
        Ok(Self { source, pointwise: None })
    }

    /// Samples `f` on the grid and keeps `f` itself for interior evaluation.
    /// `f` must be analytic on the open disk and continuous up to the circle.
    pub fn from_closed_form(
        grid: CircleGrid,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let source = BoundaryFunction::from_fn(grid, &f);
        let mut out = Self::new(source)?;
        out.pointwise = Some(Arc::new(move |z| Ok(f(z))));
        Ok(out)
    }

    pub fn constant(grid: CircleGrid, c: Complex64) -> Self {
        Self::from_closed_form(grid, move |_| c).expect("constants are analytic")
    }

    /// Attaches a pointwise evaluator; the samples remain the quadrature carrier.
    pub fn with_pointwise(mut self, pointwise: PointFn) -> Self {
        self.pointwise = Some(pointwise);
        self
    }

    pub fn source(&self) -> &BoundaryFunction {
        &self.source
    }

    pub fn grid(&self) -> CircleGrid {
        self.source.grid()
    }

    pub fn norm(&self) -> f64 {
        self.source.norm()
    }

    pub fn has_closed_form(&self) -> bool {
        self.pointwise.is_some()
    }

    /// Radius up to which [`eval`](Self::eval) is admissible.
    pub fn max_probe_radius(&self) -> f64 {
        if self.pointwise.is_some() {
            1.0
        } else {
            self.grid().max_probe_radius()
        }
    }

    fn series(&self, lambda: Complex64) -> Complex64 {
        let n = self.grid().size();
        self.source.coeffs[..n / 2]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * lambda + c)
    }

    /// `⟨f, k_λ⟩ = Σ_{j≥0} f̂(j) λ^j`.
    pub fn cauchy_eval(&self, lambda: Complex64) -> Result<Complex64> {
        if lambda.norm() >= 1.0 {
            return Err(Error::Domain {
                what: "Cauchy evaluation needs an interior point",
                modulus: lambda.norm(),
            });
        }
        Ok(self.series(lambda))
    }

    /// Value at `z`: the closed form when present, otherwise the coefficient
    /// series, which is only admitted up to the grid's probe radius (or on the
    /// circle itself, where it is trigonometric interpolation).
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if let Some(f) = &self.pointwise {
            return f(z);
        }
        let r = z.norm();
        if (r - 1.0).abs() <= 1e-12 {
            return Ok(self.series(z));
        }
        if r > 1.0 {
            return Err(Error::Domain {
                what: "evaluation outside the closed disk",
                modulus: r,
            });
        }
        let max = self.grid().max_probe_radius();
        if r > max {
            return Err(Error::DepthExceeded { radius: r, max });
        }
        Ok(self.series(z))
    }

    /// `sqrt(Σ_{j≥N} |f̂(j)|²)`, the norm of the backward shift applied `N` times.
    pub fn tail_norm(&self, n: usize) -> f64 {
        let half = self.grid().size() / 2;
        if n >= half {
            return 0.0;
        }
        self.source.coeffs[n..half]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Winding number of `f(r e^{iθ})` around the origin.
    pub fn winding_number(&self, r: f64) -> i64 {
        let n = self.grid().size();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        let mut rk = 1.0;
        for (k, c) in self.source.coeffs[..n / 2].iter().enumerate() {
            coeffs[k] = c * rk;
            rk *= r;
        }
        let values = inverse(&coeffs);
        let total: f64 = (0..n)
            .map(|j| (values[(j + 1) % n] / values[j]).arg())
            .sum();
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }

    /// Product of two evaluators on the same grid.
    pub fn mul(&self, other: &HardyEvaluator) -> Result<HardyEvaluator> {
        let source = self.source.mul(&other.source)?;
        let mut out = HardyEvaluator::new(source)?;
        if self.pointwise.is_some() || other.pointwise.is_some() {
            let (a, b) = (self.clone(), other.clone());
            out.pointwise = Some(Arc::new(move |z| Ok(a.eval(z)? * b.eval(z)?)));
        }
        Ok(out)
    }

    /// Product with an inner function, evaluated in closed form for that factor.
    pub fn mul_inner(&self, inner: &InnerFunction) -> Result<HardyEvaluator> {
        let samples = inner.sample(&self.grid())?;
        let source = self
            .source
            .zip_with(&BoundaryFunction::from_samples(self.grid(), samples)?, |a, b| a * b)?;
        let mut out = HardyEvaluator::new(source)?;
        let (f, inner) = (self.clone(), inner.clone());
        out.pointwise = Some(Arc::new(move |z| Ok(inner.eval(z)? * f.eval(z)?)));
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> HardyEvaluator {
        let mut out = HardyEvaluator {
            source: self.source.scale(c),
            pointwise: None,
        };
        if let Some(f) = self.pointwise.clone() {
            out.pointwise = Some(Arc::new(move |z| Ok(c * f(z)?)));
        }
        out
    }
}

/// Outer function with boundary modulus `w` and positive value at the origin.
///
/// `log O` is the analytic completion of `log w`: mean plus twice the
/// positive-frequency part. The Nyquist term is kept once so that `|O| = w`
/// holds exactly on the grid.
pub fn outer_from_modulus(grid: CircleGrid, w: &[f64]) -> Result<HardyEvaluator> {
    if w.len() != grid.size() {
        return Err(Error::GridMismatch {
            left: grid.size(),
            right: w.len(),
        });
    }
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min >= MODULUS_FLOOR) {
        return Err(Error::DegenerateModulus {
            min,
            floor: MODULUS_FLOOR,
        });
    }
    let n = grid.size();
    let logs: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x.ln(), 0.0)).collect();
    let c = forward(&logs);
    let mut analytic = vec![Complex64::new(0.0, 0.0); n];
    analytic[0] = Complex64::new(c[0].re, 0.0);
    for k in 1..n / 2 {
        analytic[k] = 2.0 * c[k];
    }
    analytic[n / 2] = Complex64::new(c[n / 2].re, 0.0);
    let log_outer = inverse(&analytic);
    let samples = log_outer.iter().map(|l| l.exp()).collect();
    HardyEvaluator::new(BoundaryFunction::from_samples(grid, samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> CircleGrid {
        CircleGrid::new(n).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(256);
        let one = BoundaryFunction::constant(g, c(1.0, 0.0));
        let e1 = BoundaryFunction::character(g, 1);
        assert!((one.inner_product(&one).unwrap() - 1.0).norm() < 1e-15);
        assert!(e1.inner_product(&one).unwrap().norm() < 1e-15);
        let k3 = BoundaryFunction::szego_kernel(g, c(0.3, 0.0)).unwrap();
        let k5 = BoundaryFunction::szego_kernel(g, c(0.5, 0.0)).unwrap();
        let v = k3.inner_product(&k5).unwrap();
        assert!((v - 1.0 / 0.85).norm() < 1e-13);
        assert!((v.re - 1.1764706).abs() < 1e-7);
        let other = BoundaryFunction::constant(grid(512), c(1.0, 0.0));
        assert!(matches!(one.inner_product(&other), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn riesz_examples() {
        let g = grid(64);
        let em1 = BoundaryFunction::character(g, -1);
        assert!(em1.riesz_project().norm() < 1e-15);
        let e1 = BoundaryFunction::character(g, 1);
        assert!(e1.riesz_project().sub(&e1).unwrap().sup_norm() < 1e-14);
        let cos2 = e1.add(&em1).unwrap();
        assert!(cos2.riesz_project().sub(&e1).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn cauchy_examples() {
        let g = grid(512);
        let one = HardyEvaluator::new(BoundaryFunction::constant(g, c(1.0, 0.0))).unwrap();
        assert!((one.cauchy_eval(c(0.7, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        let z2 = HardyEvaluator::new(BoundaryFunction::character(g, 2)).unwrap();
        assert!((z2.cauchy_eval(c(0.5, 0.0)).unwrap() - 0.25).norm() < 1e-15);
        let k3 = BoundaryFunction::szego_kernel(g, c(0.3, 0.0)).unwrap();
        let v = HardyEvaluator::new(k3.clone()).unwrap().cauchy_eval(c(0.5, 0.0)).unwrap();
        assert!((v - 1.0 / 0.85).norm() < 1e-13);
        // against the sampled-kernel inner product
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = HardyEvaluator::new(k3).unwrap();
        for _ in 0..20 {
            let lam = Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..6.3));
            let via_ip = f
                .source()
                .inner_product(&BoundaryFunction::szego_kernel(g, lam).unwrap())
                .unwrap();
            assert!((via_ip - f.cauchy_eval(lam).unwrap()).norm() < 1e-10);
        }
        assert!(one.cauchy_eval(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn anti_analytic_input_rejected() {
        let g = grid(64);
        let cos2 = BoundaryFunction::character(g, 1)
            .add(&BoundaryFunction::character(g, -1))
            .unwrap();
        assert!(matches!(HardyEvaluator::new(cos2), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn outer_examples() {
        let g = grid(256);
        let w = vec![2.5; 256];
        let o = outer_from_modulus(g, &w).unwrap();
        assert!(o.source().samples().iter().all(|s| (s - 2.5).norm() < 1e-14));

        let g = grid(1024);
        let w: Vec<f64> = g.nodes().map(|z| (1.0 - 0.5 * z).norm()).collect();
        let o = outer_from_modulus(g, &w).unwrap();
        for (z, s) in g.nodes().zip(o.source().samples()) {
            assert!((s - (1.0 - 0.5 * z)).norm() < 1e-13);
        }
        assert_eq!(o.winding_number(0.99), 0);

        let mut w = vec![1.0; 64];
        w[3] = 1e-9;
        assert!(matches!(
            outer_from_modulus(grid(64), &w),
            Err(Error::DegenerateModulus { .. })
        ));
    }

    #[test]
    fn outer_of_sarason_modulus() {
        // modulus sqrt(1 - |a|²) with a = 1/2 + B/4, B the Blaschke factor at 3/4
        let g = grid(1024);
        let b1 = crate::inner::blaschke_lambda(0.25, 1).unwrap();
        let a: Vec<Complex64> = g.nodes().map(|z| 0.5 + 0.25 * b1.eval(z).unwrap()).collect();
        let w: Vec<f64> = a.iter().map(|a| (1.0 - a.norm_sqr()).sqrt()).collect();
        let o = outer_from_modulus(g, &w).unwrap();
        for (a, b) in a.iter().zip(o.source().samples()) {
            assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-8);
        }
        assert!(o.cauchy_eval(c(0.0, 0.0)).unwrap().re > 0.0);
        assert_eq!(o.winding_number(0.99), 0);
    }

    #[test]
    fn outer_grid_convergence_and_log_additivity() {
        let w1 = |z: Complex64| (1.0 - 0.3 * z * z).norm() * (2.0 + z.re).sqrt();
        let w2 = |z: Complex64| 1.5 + 0.5 * (3.0 * z.im).sin();
        let build = |n: usize, f: &dyn Fn(Complex64) -> f64| {
            let g = grid(n);
            outer_from_modulus(g, &g.nodes().map(f).collect::<Vec<_>>()).unwrap()
        };
        let coarse = build(2048, &w1);
        let fine = build(4096, &w1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let lam = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..6.3));
            let a = coarse.cauchy_eval(lam).unwrap();
            let b = fine.cauchy_eval(lam).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
        let o1 = build(2048, &w1);
        let o2 = build(2048, &w2);
        let o12 = build(2048, &|z| w1(z) * w2(z));
        for _ in 0..50 {
            let lam = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..6.3));
            let lhs = o12.cauchy_eval(lam).unwrap();
            let rhs = o1.cauchy_eval(lam).unwrap() * o2.cauchy_eval(lam).unwrap();
            assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn tail_examples() {
        let g = grid(256);
        let z3 = HardyEvaluator::new(BoundaryFunction::character(g, 3)).unwrap();
        assert!(z3.tail_norm(4) < 1e-15);
        assert!((z3.tail_norm(3) - 1.0).abs() < 1e-14);
        let k = HardyEvaluator::new(BoundaryFunction::szego_kernel(g, c(0.5, 0.0)).unwrap()).unwrap();
        let expected = (0.25f64 * 0.25 / 0.75).sqrt();
        assert!((k.tail_norm(2) - expected).abs() < 1e-14);
        assert!((k.tail_norm(2) - 0.28868).abs() < 1e-5);
        assert!((k.tail_norm(0) - k.norm()).abs() < 1e-14);
    }

    #[test]
    fn probe_radius_enforced_for_series_only() {
        let g = grid(64);
        let series = HardyEvaluator::new(BoundaryFunction::character(g, 1)).unwrap();
        let max = g.max_probe_radius();
        assert!(series.eval(c(max * 0.999, 0.0)).is_ok());
        assert!(matches!(series.eval(c(0.5 * (1.0 + max), 0.0)), Err(Error::DepthExceeded { .. })));
        let closed = HardyEvaluator::from_closed_form(g, |z| z).unwrap();
        assert!((closed.eval(c(1.0 - 1e-12, 0.0)).unwrap() - (1.0 - 1e-12)).norm() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_and_header_required() {
        let g = grid(16);
        let f = BoundaryFunction::from_fn(g, |z| z * z + 0.5);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("j,theta,re,im\n"));
        let back = BoundaryFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), f.samples());
        let headerless = text.lines().skip(1).collect::<Vec<_>>().join("\n");
        assert!(BoundaryFunction::read_csv(headerless.as_bytes()).is_err());
    }

    fn trig_poly() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..12)
    }

    fn realize(g: CircleGrid, coeffs: &[(f64, f64)], offset: i64) -> BoundaryFunction {
        let mut out = BoundaryFunction::constant(g, c(0.0, 0.0));
        for (k, &(re, im)) in coeffs.iter().enumerate() {
            out = out
                .add(&BoundaryFunction::character(g, k as i64 - offset).scale(c(re, im)))
                .unwrap();
        }
        out
    }

    proptest! {
        #[test]
        fn parseval(coeffs in trig_poly()) {
            let g = grid(64);
            let f = realize(g, &coeffs, 5);
            let mean = f.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() / 64.0;
            let direct: f64 = coeffs.iter().map(|(a, b)| a * a + b * b).sum();
            prop_assert!((f.norm_sqr() - mean).abs() < 1e-12 * (1.0 + mean));
            prop_assert!((f.norm_sqr() - direct).abs() < 1e-12 * (1.0 + direct));
        }

        #[test]
        fn riesz_is_self_adjoint_idempotent_contractive(a in trig_poly(), b in trig_poly()) {
            let g = grid(64);
            let f = realize(g, &a, 6);
            let h = realize(g, &b, 4);
            let pf = f.riesz_project();
            let lhs = pf.inner_product(&h).unwrap();
            let rhs = f.inner_product(&h.riesz_project()).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            prop_assert!(pf.riesz_project().sub(&pf).unwrap().sup_norm() < 1e-12);
            prop_assert!(pf.norm() <= f.norm() + 1e-12);
        }
    }
}
