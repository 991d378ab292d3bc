//! Nearly invariant subspaces `M = g K_I` with `g = a / (1 - I b)`.
//!
//! Coordinates on `M` are the Takenaka–Malmquist coordinates of `K_I`
//! carried over by `U_g h = g h`, so `{g e_k}` is the working basis of `M`.

use std::io;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{inner_product_samples, outer_from_modulus, BoundaryFunction, HardyEvaluator};
use crate::disk::{CircleGrid, MAX_GRID};
use crate::error::{Error, Result};
use crate::inner::{blaschke_lambda, InnerFunction};
use crate::linalg::{self, CMatrix};
use crate::model::{kernel_eval, ModelSpaceElement, TMBasis};
use crate::toeplitz::{
    self, compress, conjugation, defect_decomposition, BasisTag, ConjugationMap, DefectDecomposition,
    OperatorMatrix, RankOneKind,
};

/// Sup-norm slack allowed for `a` and `b` on the grid.
pub const SUP_TOL: f64 = 1e-10;
/// Allowed deviation of `|a|² + |b|²` from 1 on the grid.
pub const PAIR_TOL: f64 = 1e-8;
/// Smallest admissible `|1 - I b|` on the grid.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;
/// Allowed deviation of `‖g‖` from 1.
pub const NORM_TOL: f64 = 1e-6;
/// Allowed Gram deviation of `{g e_k}`.
pub const ISOMETRY_TOL: f64 = 1e-8;

/// Functions `a, b` in the unit ball of `H^∞` with `|a|² + |b|² = 1` on the circle.
#[derive(Debug, Clone)]
pub struct SarasonPair {
    a: HardyEvaluator,
    b: HardyEvaluator,
}

impl SarasonPair {
    pub fn new(a: HardyEvaluator, b: HardyEvaluator) -> Result<Self> {
        let pair = Self::new_unchecked(a, b)?;
        pair.validate()?;
        Ok(pair)
    }

    /// Skips the modulus checks; still requires a common grid.
    pub fn new_unchecked(a: HardyEvaluator, b: HardyEvaluator) -> Result<Self> {
        if a.grid() != b.grid() {
            return Err(Error::GridMismatch {
                left: a.grid().size(),
                right: b.grid().size(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn validate(&self) -> Result<()> {
        let (sa, sb) = (self.a.source().sup_norm(), self.b.source().sup_norm());
        if sa > 1.0 + SUP_TOL || sb > 1.0 + SUP_TOL {
            return Err(Error::InvalidPair(format!(
                "sup norms {sa} and {sb} exceed the unit ball"
            )));
        }
        let dev = self.modulus_residual();
        if dev >= PAIR_TOL {
            return Err(Error::InvalidPair(format!(
                "max ||a|^2 + |b|^2 - 1| = {dev:e} on the grid"
            )));
        }
        Ok(())
    }

    /// `a ≡ 1, b ≡ 0`, giving `g ≡ 1`.
    pub fn trivial(grid: CircleGrid) -> Self {
        Self {
            a: HardyEvaluator::constant(grid, Complex64::new(1.0, 0.0)),
            b: HardyEvaluator::constant(grid, Complex64::new(0.0, 0.0)),
        }
    }

    /// `a = J` inner, `b ≡ 0`.
    pub fn inner_multiplier(inner: &InnerFunction, grid: CircleGrid) -> Result<Self> {
        let a = HardyEvaluator::constant(grid, Complex64::new(1.0, 0.0)).mul_inner(inner)?;
        Self::new(a, HardyEvaluator::constant(grid, Complex64::new(0.0, 0.0)))
    }

    /// `a = (1 - conj(ζ) z)/2`, `b = (1 + conj(ζ) z)/2`; the resulting `g`
    /// vanishes to first order at `ζ`.
    pub fn vanishing(zeta: Complex64, grid: CircleGrid) -> Result<Self> {
        if (zeta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: "vanishing point must be unimodular",
                modulus: zeta.norm(),
            });
        }
        Self::vanishing_phased(zeta, Complex64::new(1.0, 0.0), grid)
    }

    /// [`SarasonPair::vanishing`] with `b` rotated so that `I(ζ) b(ζ) = -1`.
    ///
    /// `|I b| = 1` at `ζ`, so `1 - I b` has zeros just outside the circle
    /// wherever `arg(I b)` crosses 0 near `ζ`; pinning the phase at `ζ` to
    /// `π` keeps those crossings away and `g` cheap to resolve.
    pub fn vanishing_for(inner: &InnerFunction, zeta: Complex64, grid: CircleGrid) -> Result<Self> {
        if (zeta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: "vanishing point must be unimodular",
                modulus: zeta.norm(),
            });
        }
        let iz = inner.eval(zeta)?;
        Self::vanishing_phased(zeta, -iz.conj() / iz.norm(), grid)
    }

    fn vanishing_phased(zeta: Complex64, phase: Complex64, grid: CircleGrid) -> Result<Self> {
        let w = zeta.conj();
        let a = HardyEvaluator::from_closed_form(grid, move |z| (1.0 - w * z) / 2.0)?;
        let b = HardyEvaluator::from_closed_form(grid, move |z| phase * (1.0 + w * z) / 2.0)?;
        Self::new(a, b)
    }

    /// `a = ½ + ¼ B₁`, `b = B₂ b₀` with `b₀` outer and `|b₀|² = 1 - |a|²`,
    /// where `B₁, B₂` have zeros `1 - 4^{-n}` (n ≤ n1) and `1 - 2^{-n}` (n ≤ n2).
    pub fn oscillating(n1: usize, n2: usize, grid: CircleGrid) -> Result<Self> {
        if n2 != 2 * n1 {
            return Err(Error::SubsetViolation { n1, n2 });
        }
        let b1 = blaschke_lambda(0.25, n1)?;
        let b2 = blaschke_lambda(0.5, n2)?;
        let b1c = b1.clone();
        let a = HardyEvaluator::from_closed_form(grid, move |z| {
            0.5 + 0.25 * b1c.eval(z).expect("finite Blaschke is entire in the closed disk")
        })?;
        let modulus: Vec<f64> = a
            .source()
            .samples()
            .iter()
            .map(|v| (1.0 - v.norm_sqr()).max(0.0).sqrt())
            .collect();
        let b0 = outer_from_modulus(grid, &modulus)?;
        let b = b0.mul_inner(&b2)?;
        Self::new(a, b)
    }

    /// Scales both functions by `s`; used to build invalid pairs on purpose.
    pub fn scaled_unchecked(&self, s: f64) -> Self {
        let c = Complex64::new(s, 0.0);
        Self {
            a: self.a.scale(c),
            b: self.b.scale(c),
        }
    }

    /// Pair from boundary samples; both must pass the analyticity check.
    pub fn from_samples(a: BoundaryFunction, b: BoundaryFunction) -> Result<Self> {
        Self::new(HardyEvaluator::new(a)?, HardyEvaluator::new(b)?)
    }

    pub fn a(&self) -> &HardyEvaluator {
        &self.a
    }

    pub fn b(&self) -> &HardyEvaluator {
        &self.b
    }

    pub fn grid(&self) -> CircleGrid {
        self.a.grid()
    }

    /// `max ||a|² + |b|² - 1|` over the grid.
    pub fn modulus_residual(&self) -> f64 {
        self.a
            .source()
            .samples()
            .iter()
            .zip(self.b.source().samples())
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Residuals recorded when a space is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildResiduals {
    pub pair_modulus: f64,
    pub denominator_min: f64,
    pub g_norm_deviation: f64,
    pub isometry: f64,
    pub leakage: f64,
}

/// `M = g K_I` with its transported basis tables.
#[derive(Debug, Clone)]
pub struct NearlyInvariantSpace {
    pair: SarasonPair,
    basis: Arc<TMBasis>,
    g: HardyEvaluator,
    g_zero: f64,
    rotation: Complex64,
    m_samples: Vec<Vec<Complex64>>,
    residuals: BuildResiduals,
}

/// Builds `M` and enforces the extremality and isometry gates.
pub fn build_space(inner: &InnerFunction, pair: SarasonPair) -> Result<NearlyInvariantSpace> {
    pair.validate()?;
    let space = build_unchecked(inner, pair)?;
    let r = space.residuals;
    if r.g_norm_deviation > NORM_TOL {
        return Err(Error::NonExtremal(format!(
            "‖g‖ deviates from 1 by {:e}",
            r.g_norm_deviation
        )));
    }
    if r.isometry > ISOMETRY_TOL {
        return Err(Error::NotIsometric { residual: r.isometry });
    }
    Ok(space)
}

/// Builds `M` without the pair, norm and isometry gates; the residuals are
/// still computed. Structural failures (denominator, analyticity) still error.
pub fn build_unchecked(inner: &InnerFunction, pair: SarasonPair) -> Result<NearlyInvariantSpace> {
    if !inner.is_finite_blaschke() {
        return Err(Error::AtomsUnsupported);
    }
    if !inner.has_origin_zero() {
        return Err(Error::MissingOriginZero);
    }
    let grid = pair.grid();
    let basis = Arc::new(TMBasis::new(inner.clone(), grid)?);
    let i_samples = inner.sample(&grid)?;
    let a_s = pair.a.source().samples();
    let b_s = pair.b.source().samples();

    let denominators: Vec<Complex64> = i_samples.iter().zip(b_s).map(|(i, b)| 1.0 - i * b).collect();
    let denominator_min = denominators.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    if denominator_min < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator { min: denominator_min });
    }
    let raw: Vec<Complex64> = a_s.iter().zip(&denominators).map(|(a, d)| a / d).collect();
    let g0_raw: Complex64 = raw.iter().sum::<Complex64>() / grid.size() as f64;
    if g0_raw.norm() < 1e-10 {
        return Err(Error::NonExtremal("g(0) vanishes".into()));
    }
    let rotation = g0_raw.conj() / g0_raw.norm();
    let samples: Vec<Complex64> = raw.iter().map(|v| v * rotation).collect();
    let source = BoundaryFunction::from_samples(grid, samples)?;
    let leakage = source.negative_leakage();

    let (a, b, inner_c) = (pair.a.clone(), pair.b.clone(), inner.clone());
    let g = HardyEvaluator::new(source)?.with_pointwise(Arc::new(move |z| {
        let d = 1.0 - inner_c.eval(z)? * b.eval(z)?;
        if d.norm() == 0.0 {
            return Err(Error::Singularity { re: z.re, im: z.im });
        }
        Ok(rotation * a.eval(z)? / d)
    }));
    let g_zero = g.source().coefficient(0).re;

    let g_s = g.source().samples();
    let m_samples: Vec<Vec<Complex64>> = (0..basis.dim())
        .map(|k| basis.basis_samples(k).iter().zip(g_s).map(|(e, g)| e * g).collect())
        .collect();

    let mut space = NearlyInvariantSpace {
        residuals: BuildResiduals {
            pair_modulus: pair.modulus_residual(),
            denominator_min,
            g_norm_deviation: (g.norm() - 1.0).abs(),
            isometry: 0.0,
            leakage,
        },
        pair,
        basis,
        g,
        g_zero,
        rotation,
        m_samples,
    };
    space.residuals.isometry = space.isometry_residual();
    Ok(space)
}

/// Builds a space, doubling the grid whenever `g` turns out under-resolved.
/// The start grid is raised to the policy grid of `inner` if needed.
pub fn build_adaptive(
    inner: &InnerFunction,
    start: CircleGrid,
    make_pair: impl Fn(CircleGrid) -> Result<SarasonPair>,
) -> Result<NearlyInvariantSpace> {
    let policy = CircleGrid::for_max_modulus(inner.max_zero_modulus())?;
    let mut grid = if start.size() < policy.size() { policy } else { start };
    loop {
        match make_pair(grid).and_then(|p| build_space(inner, p)) {
            Err(Error::UnderResolved { .. }) if grid.size() < MAX_GRID => grid = grid.doubled()?,
            other => return other,
        }
    }
}

/// Outcome of the Monte-Carlo extremality test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub trials: usize,
    pub g_zero: f64,
    pub max_re_f0: f64,
    pub violations: usize,
    /// `Re f(0)` for `f = g`.
    pub attained: f64,
}

/// Serializable description of a built space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceBundle {
    pub inner: InnerFunction,
    pub a_samples_ref: String,
    pub b_samples_ref: String,
    pub grid_size: usize,
    pub g_zero: f64,
    pub rotation: [f64; 2],
    pub residuals: BuildResiduals,
}

impl NearlyInvariantSpace {
    fn tag(&self) -> BasisTag {
        BasisTag::NearlyInvariant { degree: self.dim() }
    }

    pub fn inner(&self) -> &InnerFunction {
        self.basis.inner()
    }

    pub fn pair(&self) -> &SarasonPair {
        &self.pair
    }

    pub fn basis(&self) -> &Arc<TMBasis> {
        &self.basis
    }

    pub fn g(&self) -> &HardyEvaluator {
        &self.g
    }

    pub fn g_zero(&self) -> f64 {
        self.g_zero
    }

    /// Unimodular constant applied to `a / (1 - I b)` to make `g(0) > 0`.
    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn residuals(&self) -> BuildResiduals {
        self.residuals
    }

    pub fn grid(&self) -> CircleGrid {
        self.basis.grid()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn m_basis_samples(&self, k: usize) -> &[Complex64] {
        &self.m_samples[k]
    }

    /// Gram matrix of `{g e_k}` by quadrature.
    pub fn gram(&self) -> CMatrix {
        let n = self.dim();
        DMatrix::from_fn(n, n, |j, k| inner_product_samples(&self.m_samples[k], &self.m_samples[j]))
    }

    /// `max |Gram({g e_k}) - 1|`.
    pub fn isometry_residual(&self) -> f64 {
        let n = self.dim();
        linalg::max_abs(&(self.gram() - CMatrix::identity(n, n)))
    }

    /// Samples of `g h` for `h = Σ c_k e_k`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<BoundaryFunction> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid().size()];
        for (c, m) in coeffs.iter().zip(&self.m_samples) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += c * v;
            }
        }
        BoundaryFunction::from_samples(self.grid(), out)
    }

    /// `P_M f = g P_I(conj(g) f)`, returned as `h = P_I(conj(g) f)` in `K_I`.
    pub fn project_m(&self, f: &BoundaryFunction) -> Result<ModelSpaceElement> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch {
                left: self.grid().size(),
                right: f.grid().size(),
            });
        }
        let gf = f.zip_with(self.g.source(), |f, g| g.conj() * f)?;
        self.basis.project(&gf)
    }

    /// Orthogonal projection onto `span{g e_k}` by least squares on the
    /// samples, independent of the `g P_I conj(g)` formula.
    pub fn project_least_squares(&self, f: &BoundaryFunction) -> Result<Vec<Complex64>> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch {
                left: self.grid().size(),
                right: f.grid().size(),
            });
        }
        let rhs: Vec<Complex64> = self
            .m_samples
            .iter()
            .map(|m| inner_product_samples(f.samples(), m))
            .collect();
        let sol = self
            .gram()
            .lu()
            .solve(&linalg::column(&rhs))
            .ok_or(Error::NotIsometric { residual: f64::INFINITY })?;
        Ok(sol.iter().cloned().collect())
    }

    /// `k_λ^M(z) = conj(g(λ)) g(z) k_λ^I(z)`.
    pub fn kernel_m(&self, lambda: Complex64, z: Complex64) -> Result<Complex64> {
        if lambda.norm() >= 1.0 {
            return Err(Error::Domain {
                what: "kernel base point must lie in the open disk",
                modulus: lambda.norm(),
            });
        }
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain {
                what: "kernel argument outside the closed disk",
                modulus: z.norm(),
            });
        }
        Ok(self.g.eval(lambda)?.conj() * self.g.eval(z)? * kernel_eval(self.inner(), lambda, z)?)
    }

    /// Grid samples of `k_λ^M`, using the stored samples of `g` rather than
    /// pointwise evaluation.
    pub fn kernel_m_samples(&self, lambda: Complex64) -> Result<BoundaryFunction> {
        let gl = self.g.eval(lambda)?.conj();
        let inner = self.inner();
        let samples = self
            .grid()
            .nodes()
            .zip(self.g.source().samples())
            .map(|(z, g)| Ok(gl * g * kernel_eval(inner, lambda, z)?))
            .collect::<Result<Vec<_>>>()?;
        BoundaryFunction::from_samples(self.grid(), samples)
    }

    /// Coordinates of `k_λ^M` in `{g e_k}`: `conj(g(λ)) conj(e_k(λ))`.
    pub fn kernel_coords(&self, lambda: Complex64) -> Result<Vec<Complex64>> {
        let gl = self.g.eval(lambda)?.conj();
        Ok(self.basis.kernel_coords(lambda)?.into_iter().map(|c| gl * c).collect())
    }

    /// `‖k_λ^M‖² = |g(λ)|² ‖k_λ^I‖²`.
    pub fn kernel_norm_sq(&self, lambda: Complex64) -> Result<f64> {
        Ok(self.g.eval(lambda)?.norm_sqr() * self.inner().kernel_norm_sq(lambda)?)
    }

    /// Matrix of `A_φ^M f = P_M(φ f)` in `{g e_k}`, assembled as a Galerkin
    /// system on the `M` samples.
    pub fn assemble_am(&self, phi: &BoundaryFunction) -> Result<OperatorMatrix> {
        if phi.grid() != self.grid() {
            return Err(Error::GridMismatch {
                left: self.grid().size(),
                right: phi.grid().size(),
            });
        }
        let n = self.dim();
        let mut b = CMatrix::zeros(n, n);
        for j in 0..n {
            let pm: Vec<Complex64> = phi.samples().iter().zip(&self.m_samples[j]).map(|(p, m)| p * m).collect();
            for k in 0..n {
                b[(k, j)] = inner_product_samples(&pm, &self.m_samples[k]);
            }
        }
        let m = self
            .gram()
            .lu()
            .solve(&b)
            .ok_or(Error::NotIsometric { residual: f64::INFINITY })?;
        OperatorMatrix::new(self.tag(), m)
    }

    /// `A_{|g|² φ}` on `K_I`.
    pub fn weighted_symbol_matrix(&self, phi: &BoundaryFunction) -> Result<OperatorMatrix> {
        let w = phi.zip_with(self.g.source(), |p, g| g.norm_sqr() * p)?;
        toeplitz::assemble(&self.basis, &w)
    }

    /// `‖A_φ^M − A_{|g|²φ}‖`.
    pub fn spatial_isomorphism_residual(&self, phi: &BoundaryFunction) -> Result<f64> {
        let am = self.assemble_am(phi)?;
        let ai = self.weighted_symbol_matrix(phi)?;
        Ok(linalg::op_norm(&(am.entries() - ai.entries())))
    }

    /// `C_g = U_g C U_g*`; in transported coordinates it is the matrix of `C`.
    pub fn conjugation_g(&self) -> ConjugationMap {
        conjugation(&self.basis).with_tag(self.tag())
    }

    /// `S_g = U_g A_z U_g*`.
    pub fn shift_g(&self) -> OperatorMatrix {
        let s = toeplitz::compressed_shift(&self.basis);
        OperatorMatrix::new(self.tag(), s.entries().clone()).expect("same dimension")
    }

    /// Rank-one operators on `M` built from transported coordinates.
    pub fn rank_one_m(&self, kind: RankOneKind, point: Complex64) -> Result<OperatorMatrix> {
        let m = toeplitz::rank_one(&self.basis, kind, point)?;
        // k_λ^M = conj(g(λ)) U_g k_λ and C_g k_λ^M = g(λ) U_g C k_λ
        let scale = match kind {
            RankOneKind::Boundary => Complex64::new(1.0, 0.0),
            RankOneKind::KCk => self.g.eval(point)?.conj().powi(2),
            RankOneKind::Ckk => self.g.eval(point)?.powi(2),
        };
        OperatorMatrix::new(self.tag(), m.entries() * scale)
    }

    /// The same operators assembled from samples: `x ⊗ y` has entries
    /// `⟨g e_j, y⟩⟨x, g e_k⟩`, with `C_g` applied as `g·conj(z f / g)·I`.
    pub fn rank_one_m_direct(&self, kind: RankOneKind, point: Complex64) -> Result<OperatorMatrix> {
        let grid = self.grid();
        let g_s = self.g.source().samples();
        let kernel: Vec<Complex64> = match kind {
            RankOneKind::Boundary => {
                let k = self.basis.boundary_kernel(point)?.samples();
                k.samples().iter().zip(g_s).map(|(k, g)| k * g).collect()
            }
            _ => self.kernel_m_samples(point)?.samples().to_vec(),
        };
        let i_s = self.inner().sample(&grid)?;
        let conj_g = |f: &[Complex64]| -> Vec<Complex64> {
            f.iter()
                .zip(g_s)
                .zip(grid.nodes())
                .zip(&i_s)
                .map(|(((f, g), z), i)| {
                    // f = g h, so the sample is g conj(z h) I and vanishes with g
                    if *g == Complex64::new(0.0, 0.0) {
                        *g
                    } else {
                        g * (z * f / g).conj() * i
                    }
                })
                .collect()
        };
        let (x, y) = match kind {
            RankOneKind::KCk => (kernel.clone(), conj_g(&kernel)),
            RankOneKind::Ckk => (conj_g(&kernel), kernel.clone()),
            RankOneKind::Boundary => (kernel.clone(), kernel),
        };
        let n = self.dim();
        let yj: Vec<Complex64> = self.m_samples.iter().map(|m| inner_product_samples(m, &y)).collect();
        let xk: Vec<Complex64> = self.m_samples.iter().map(|m| inner_product_samples(&x, m)).collect();
        OperatorMatrix::new(self.tag(), DMatrix::from_fn(n, n, |k, j| yj[j] * xk[k]))
    }

    /// `g k_ζ^I ⊗ g k_ζ^I` at a boundary point.
    pub fn selfadjoint_rank_one_m(&self, zeta: Complex64) -> Result<OperatorMatrix> {
        self.rank_one_m(RankOneKind::Boundary, zeta)
    }

    /// Defect `A − S_g A S_g*` split against `k_0^M`.
    pub fn defect(&self, a: &OperatorMatrix) -> Result<DefectDecomposition> {
        let origin = self.basis.origin_index().ok_or(Error::MissingOriginZero)?;
        let mut k0 = vec![Complex64::new(0.0, 0.0); self.dim()];
        k0[origin] = Complex64::new(self.g_zero, 0.0);
        defect_decomposition(a.entries(), self.shift_g().entries(), &k0)
    }

    /// `‖Q_N f‖` for `f = g h` given by the coordinates of `h`.
    pub fn q_tail(&self, n: usize, coeffs: &[Complex64]) -> Result<f64> {
        let h = self.basis.element(coeffs.to_vec())?;
        Ok(HardyEvaluator::new(h.samples())?.tail_norm(n))
    }

    /// Draws `trials` random unit vectors in `M` and checks `Re f(0) ≤ g(0)`.
    pub fn extremality_check<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<ExtremalityReport> {
        if trials == 0 {
            return Err(Error::InvalidArgument("extremality check needs at least one trial".into()));
        }
        let n = self.dim();
        let mut max_re = f64::NEG_INFINITY;
        let mut violations = 0;
        for _ in 0..trials {
            let coeffs: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = self.synthesize(&coeffs)?;
            let norm = f.norm();
            if norm == 0.0 {
                continue;
            }
            let f0 = f.coefficient(0).re / norm;
            max_re = max_re.max(f0);
            if f0 > self.g_zero + 1e-9 {
                violations += 1;
            }
        }
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        unit[self.basis.origin_index().ok_or(Error::MissingOriginZero)?] = Complex64::new(1.0, 0.0);
        let g = self.synthesize(&unit)?;
        let attained = g.coefficient(0).re / g.norm();
        Ok(ExtremalityReport {
            trials,
            g_zero: self.g_zero,
            max_re_f0: max_re.max(attained),
            violations,
            attained,
        })
    }

    pub fn bundle(&self, a_samples_ref: &str, b_samples_ref: &str) -> SpaceBundle {
        SpaceBundle {
            inner: self.inner().clone(),
            a_samples_ref: a_samples_ref.to_string(),
            b_samples_ref: b_samples_ref.to_string(),
            grid_size: self.grid().size(),
            g_zero: self.g_zero,
            rotation: [self.rotation.re, self.rotation.im],
            residuals: self.residuals,
        }
    }

    /// Writes the pair samples in the boundary CSV format.
    pub fn write_pair_samples<W: io::Write>(&self, a: W, b: W) -> Result<()> {
        self.pair.a.source().write_csv(a)?;
        self.pair.b.source().write_csv(b)
    }
}

/// Matrix of `A_φ^M` restricted to transported K_I coordinates, i.e. `A_{|g|²φ}`
/// written directly with entries `⟨φ |g|² e_j, e_k⟩`.
pub fn transported_matrix(space: &NearlyInvariantSpace, phi: &BoundaryFunction) -> Result<CMatrix> {
    let w: Vec<Complex64> = phi
        .samples()
        .iter()
        .zip(space.g.source().samples())
        .map(|(p, g)| p * g.norm_sqr())
        .collect();
    Ok(compress(&space.basis, &w))
}
