//! Boundary behaviour near a point of the circle: non-tangential limits,
//! kernel-norm growth for `M = g K_I`, the oscillating Blaschke construction,
//! and the split between angular-derivative points and points where all of
//! `M` tends to zero.

use std::io;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::HardyEvaluator;
use crate::disk::{stolz_sample, CircleGrid, StolzRegion};
use crate::error::{Error, Result};
use crate::inner::{assess_growth, blaschke_lambda, InnerFunction};
use crate::nearly::{build_adaptive, NearlyInvariantSpace, SarasonPair};

/// Relative agreement required of the deepest samples.
pub const LIMIT_TOL: f64 = 1e-6;
/// `|L|` above this puts the point on the angular-derivative side.
pub const ADC_THRESHOLD: f64 = 1e-4;
/// `|L|` at or below this counts as a zero limit.
pub const NM_THRESHOLD: f64 = 1e-6;
/// Number of deepest samples per ray compared for convergence.
pub const TAIL_SAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub aperture: f64,
    pub ray: usize,
    pub ray_fraction: f64,
    pub depth: f64,
    pub point: Complex64,
    pub value: Complex64,
}

/// Estimate of a non-tangential limit from Stolz sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub converged: bool,
    /// Deepest radial value; meaningful when `converged`.
    pub value: Option<Complex64>,
    /// Largest distance of a tail sample from the deepest radial value.
    pub residual: f64,
    pub tolerance: f64,
    pub samples: Vec<LimitSample>,
}

/// Samples `f` along every ray of every aperture and checks that the deepest
/// `TAIL_SAMPLES` values of all rays agree with the deepest radial one.
pub fn nt_limit(
    f: impl Fn(Complex64) -> Result<Complex64>,
    zeta: Complex64,
    apertures: &[f64],
    depths: &[f64],
    rays: usize,
) -> Result<LimitEstimate> {
    if apertures.is_empty() {
        return Err(Error::InvalidArgument("need at least one aperture".into()));
    }
    if depths.len() < TAIL_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {TAIL_SAMPLES} depths, got {}",
            depths.len()
        )));
    }
    let mut samples = Vec::new();
    let mut tails = Vec::new();
    let mut last = None;
    for &aperture in apertures {
        let region = StolzRegion::new(zeta, aperture)?;
        for (ray, seq) in stolz_sample(&region, rays, depths)?.into_iter().enumerate() {
            let n = seq.points.len();
            for (i, (&z, &depth)) in seq.points.iter().zip(&seq.depths).enumerate() {
                let value = f(z)?;
                samples.push(LimitSample {
                    aperture,
                    ray,
                    ray_fraction: seq.ray_fraction,
                    depth,
                    point: z,
                    value,
                });
                if i + TAIL_SAMPLES >= n {
                    tails.push(value);
                }
            }
            if last.is_none() && seq.is_radial() {
                last = samples.last().map(|s| s.value);
            }
        }
    }
    let last = last.expect("the first ray of every sweep is radial");
    let tolerance = LIMIT_TOL * (1.0 + last.norm());
    let residual = tails.iter().map(|v| (v - last).norm()).fold(0.0, f64::max);
    let converged = residual.is_finite() && residual < tolerance;
    Ok(LimitEstimate {
        converged,
        value: converged.then_some(last),
        residual,
        tolerance,
        samples,
    })
}

/// One row of the probe tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub depth: f64,
    pub ray: usize,
    pub re: f64,
    pub im: f64,
    pub norm_sq: f64,
}

/// CSV with header `depth,ray,re,im,norm_sq`.
pub fn write_probe_csv<W: io::Write>(rows: &[ProbeRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Both conditions for every function of `M` to have a limit at `ζ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MntlReport {
    /// Limit of `g`.
    pub cond1: LimitEstimate,
    /// Boundedness verdict for `‖k_λ^M‖²` on the sampled region.
    pub cond2: bool,
    pub sup_norm_sq: f64,
    pub growth_factor: f64,
    pub growth_exponent_estimate: f64,
    /// `g(λ)` and `‖k_λ^M‖²` on the sweep of the widest aperture.
    pub rows: Vec<ProbeRow>,
}

/// Checks both conditions for an arbitrary `g` and inner `I`; `I` may carry
/// singular atoms here.
pub fn mntl_check_parts(
    g: &HardyEvaluator,
    inner: &InnerFunction,
    zeta: Complex64,
    apertures: &[f64],
    depths: &[f64],
    rays: usize,
) -> Result<MntlReport> {
    let cond1 = nt_limit(|z| g.eval(z), zeta, apertures, depths, rays)?;
    let widest = apertures.iter().copied().fold(f64::MIN, f64::max);
    let region = StolzRegion::new(zeta, widest)?;
    let mut per_ray = Vec::new();
    let mut rows = Vec::new();
    for (ray, seq) in stolz_sample(&region, rays, depths)?.into_iter().enumerate() {
        let mut series = Vec::with_capacity(seq.points.len());
        for (&z, &depth) in seq.points.iter().zip(&seq.depths) {
            let gz = g.eval(z)?;
            let norm_sq = gz.norm_sqr() * inner.kernel_norm_sq(z)?;
            series.push((depth, norm_sq));
            rows.push(ProbeRow {
                depth,
                ray,
                re: gz.re,
                im: gz.im,
                norm_sq,
            });
        }
        per_ray.push(series);
    }
    let (cond2, growth_exponent_estimate, growth_factor) = assess_growth(&per_ray);
    let sup_norm_sq = rows.iter().map(|r| r.norm_sq).fold(0.0, f64::max);
    Ok(MntlReport {
        cond1,
        cond2,
        sup_norm_sq,
        growth_factor,
        growth_exponent_estimate,
        rows,
    })
}

pub fn mntl_check(
    space: &NearlyInvariantSpace,
    zeta: Complex64,
    apertures: &[f64],
    depths: &[f64],
    rays: usize,
) -> Result<MntlReport> {
    mntl_check_parts(space.g(), space.inner(), zeta, apertures, depths, rays)
}

/// Largest `|f(z)| sqrt(1 - |z|²) / ‖f‖` over random admissible points.
pub fn growth_bound_check<R: Rng>(f: &HardyEvaluator, sample_count: usize, rng: &mut R) -> Result<f64> {
    let norm = f.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let r_max = f.max_probe_radius().min(1.0 - 1e-12);
    let mut worst = 0.0f64;
    for _ in 0..sample_count {
        // spread radii logarithmically towards the admissible edge
        let r = 1.0 - (1.0 - r_max).powf(rng.gen_range(0.0..1.0));
        let z = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        worst = worst.max(growth_ratio(f, z, norm)?);
    }
    Ok(worst)
}

/// `|f(z)| sqrt(1 - |z|²) / ‖f‖` at a single point.
pub fn growth_ratio(f: &HardyEvaluator, z: Complex64, norm: f64) -> Result<f64> {
    Ok(f.eval(z)?.norm() * (1.0 - z.norm_sqr()).sqrt() / norm)
}

/// One point of the truncated sequence `1 - 2^{-n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub n: usize,
    pub lambda: f64,
    /// Whether `λ = 1 - 4^{-m}` is a zero of `B₁`.
    pub in_lambda1: bool,
    /// `g(λ) - ½` through the pointwise formula.
    pub g_minus_half: Complex64,
    /// `g(λ)` from the coefficient series of the `g` samples.
    pub g_series: Complex64,
    pub a_value: Complex64,
    /// `|B₁(λ)|`.
    pub b1_modulus: f64,
    /// `max(|g_formula - a|, |g_series - a|)`.
    pub residual: f64,
}

/// The oscillating construction with its diagnostics.
#[derive(Debug, Clone)]
pub struct PaperExample {
    pub n1: usize,
    pub n2: usize,
    pub space: NearlyInvariantSpace,
    pub delta: f64,
    pub oscillation: Vec<OscillationRow>,
    pub a_min: f64,
    pub a_max: f64,
    pub pair_residual: f64,
}

/// Serializable part of [`PaperExample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperExampleSummary {
    pub n1: usize,
    pub n2: usize,
    pub grid_size: usize,
    pub delta: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub pair_residual: f64,
    pub max_identity_residual: f64,
    pub oscillation: Vec<OscillationRow>,
}

impl PaperExample {
    pub fn max_identity_residual(&self) -> f64 {
        self.oscillation.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> PaperExampleSummary {
        PaperExampleSummary {
            n1: self.n1,
            n2: self.n2,
            grid_size: self.space.grid().size(),
            delta: self.delta,
            a_min: self.a_min,
            a_max: self.a_max,
            pair_residual: self.pair_residual,
            max_identity_residual: self.max_identity_residual(),
            oscillation: self.oscillation.clone(),
        }
    }
}

/// `min |B₁(1 - 2^{-n})|` over odd `n ≤ n2`, the points of the finer sequence
/// that are not zeros of `B₁`.
pub fn oscillation_delta(n1: usize, n2: usize) -> Result<f64> {
    if n2 != 2 * n1 {
        return Err(Error::SubsetViolation { n1, n2 });
    }
    let b1 = blaschke_lambda(0.25, n1)?;
    let mut delta = f64::INFINITY;
    for n in (1..=n2).step_by(2) {
        let lambda = 1.0 - 0.5f64.powi(n as i32);
        delta = delta.min(b1.eval(Complex64::new(lambda, 0.0))?.norm());
    }
    Ok(delta)
}

/// Builds `a = ½ + ¼B₁`, `b = B₂ b₀`, `M = g K_I` and tabulates `g - ½` on the
/// zeros of `B₂`. The grid starts at `start` (raised to the policy grid) and
/// doubles until `g` is resolved.
pub fn paper_example(n1: usize, n2: usize, inner: &InnerFunction, start: CircleGrid) -> Result<PaperExample> {
    if n2 != 2 * n1 {
        return Err(Error::SubsetViolation { n1, n2 });
    }
    let b1 = blaschke_lambda(0.25, n1)?;
    let b2 = blaschke_lambda(0.5, n2)?;
    let policy = CircleGrid::for_max_modulus(b2.max_zero_modulus())?;
    let start = if start.size() < policy.size() { policy } else { start };
    let space = build_adaptive(inner, start, |grid| SarasonPair::oscillating(n1, n2, grid))?;

    let a = space.pair().a();
    let moduli: Vec<f64> = a.source().samples().iter().map(|v| v.norm()).collect();
    let a_min = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = moduli.iter().copied().fold(0.0, f64::max);
    let pair_residual = space.pair().modulus_residual();

    let g = space.g();
    let mut oscillation = Vec::with_capacity(n2);
    for (i, zero) in b2.zeros().iter().enumerate() {
        let n = i + 1;
        let gv = g.eval(*zero)?;
        let gs = g.cauchy_eval(*zero)?;
        let av = a.eval(*zero)?;
        oscillation.push(OscillationRow {
            n,
            lambda: zero.re,
            in_lambda1: n % 2 == 0,
            g_minus_half: gv - 0.5,
            g_series: gs,
            a_value: av,
            b1_modulus: b1.eval(*zero)?.norm(),
            residual: (gv - av).norm().max((gs - av).norm()),
        });
    }
    Ok(PaperExample {
        n1,
        n2,
        delta: oscillation_delta(n1, n2)?,
        space,
        oscillation,
        a_min,
        a_max,
        pair_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `ζ` is an angular-derivative point of `I`.
    AdcBranch,
    /// Every function of `M` tends to 0 at `ζ`.
    NmBranch,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEvidence {
    /// Limits of `e_k` (angular-derivative side) or `g e_k` (zero side).
    pub basis_limits: Vec<LimitEstimate>,
    /// `|k_λ^M(0)|` along the radial sequence.
    pub kernel_at_origin: Vec<(f64, f64)>,
    pub kernel_vanishing: bool,
    pub adc_threshold: f64,
    pub nm_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub g_limit: LimitEstimate,
    pub branch: Branch,
    pub evidence: DichotomyEvidence,
}

/// Decides which side of the dichotomy the sampled data supports.
pub fn dichotomy_classify(
    space: &NearlyInvariantSpace,
    zeta: Complex64,
    apertures: &[f64],
    depths: &[f64],
    rays: usize,
) -> Result<DichotomyReport> {
    let g = space.g();
    let g_limit = nt_limit(|z| g.eval(z), zeta, apertures, depths, rays)?;
    let basis = space.basis();

    let kernel_at_origin = depths
        .iter()
        .map(|&r| Ok((r, space.kernel_m(zeta * r, Complex64::new(0.0, 0.0))?.norm())))
        .collect::<Result<Vec<_>>>()?;
    let kernel_vanishing = kernel_at_origin.last().is_some_and(|k| k.1 <= NM_THRESHOLD);

    let magnitude = g_limit.value.map(|v| v.norm());
    let mut basis_limits = Vec::new();
    let branch = match magnitude {
        Some(m) if m > ADC_THRESHOLD => {
            for k in 0..basis.dim() {
                basis_limits.push(nt_limit(|z| Ok(basis.eval_all(z)[k]), zeta, apertures, depths, rays)?);
            }
            if basis_limits.iter().all(|l| l.converged) {
                Branch::AdcBranch
            } else {
                Branch::Inconclusive
            }
        }
        Some(m) if m <= NM_THRESHOLD => {
            for k in 0..basis.dim() {
                basis_limits.push(nt_limit(
                    |z| Ok(g.eval(z)? * basis.eval_all(z)[k]),
                    zeta,
                    apertures,
                    depths,
                    rays,
                )?);
            }
            let all_zero = basis_limits
                .iter()
                .all(|l| l.value.is_some_and(|v| v.norm() <= NM_THRESHOLD));
            if all_zero && kernel_vanishing {
                Branch::NmBranch
            } else {
                Branch::Inconclusive
            }
        }
        _ => Branch::Inconclusive,
    };
    Ok(DichotomyReport {
        g_limit,
        branch,
        evidence: DichotomyEvidence {
            basis_limits,
            kernel_at_origin,
            kernel_vanishing,
            adc_threshold: ADC_THRESHOLD,
            nm_threshold: NM_THRESHOLD,
        },
    })
}
