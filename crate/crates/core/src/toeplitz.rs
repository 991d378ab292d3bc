//! Truncated Toeplitz operators `A_φ f = P_I(φ f)` as dense matrices in an
//! orthonormal basis, the conjugation `Cf = conj(z f)·I`, the Sarason defect
//! and the rank-one operators.

use std::io;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{inner_product_samples, BoundaryFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{ModelSpaceElement, TMBasis};

/// Singular values below this fraction of `‖D‖` are treated as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Which basis a matrix is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisTag {
    /// Takenaka–Malmquist basis of `K_I`.
    ModelSpace { degree: usize },
    /// The transported basis `g e_k` of a nearly invariant space `g K_I`.
    NearlyInvariant { degree: usize },
}

impl BasisTag {
    pub fn degree(&self) -> usize {
        match *self {
            BasisTag::ModelSpace { degree } | BasisTag::NearlyInvariant { degree } => degree,
        }
    }
}

/// A square matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    tag: BasisTag,
    entries: CMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixRow {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixBundle {
    pub basis: BasisTag,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl OperatorMatrix {
    pub fn new(tag: BasisTag, entries: CMatrix) -> Result<Self> {
        let n = tag.degree();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(Self { tag, entries })
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        Self {
            tag: self.tag,
            entries: self.entries.adjoint(),
        }
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.entries)
    }

    /// Matrix-vector product on coordinates.
    pub fn apply(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok((&self.entries * linalg::column(coeffs)).iter().cloned().collect())
    }

    /// CSV with header `row,col,re,im`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in 0..self.dim() {
            for col in 0..self.dim() {
                let c = self.entries[(row, col)];
                w.serialize(MatrixRow { row, col, re: c.re, im: c.im })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bundle(&self) -> MatrixBundle {
        MatrixBundle {
            basis: self.tag,
            entries: (0..self.dim())
                .map(|r| {
                    (0..self.dim())
                        .map(|c| {
                            let v = self.entries[(r, c)];
                            [v.re, v.im]
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_bundle(bundle: &MatrixBundle) -> Result<Self> {
        let n = bundle.entries.len();
        if bundle.entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix bundle is not square".into()));
        }
        let entries = DMatrix::from_fn(n, n, |r, c| {
            let [re, im] = bundle.entries[r][c];
            Complex64::new(re, im)
        });
        Self::new(bundle.basis, entries)
    }
}

/// Antilinear map with action `x ↦ J·conj(x)` on coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugationMap {
    tag: BasisTag,
    matrix: CMatrix,
}

impl ConjugationMap {
    pub(crate) fn with_tag(&self, tag: BasisTag) -> Self {
        Self {
            tag,
            matrix: self.matrix.clone(),
        }
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let x = linalg::column(coeffs).map(|c| c.conj());
        (&self.matrix * x).iter().cloned().collect()
    }

    /// `max |J conj(J) − 1|`.
    pub fn involution_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        linalg::max_abs(&(&self.matrix * linalg::conj(&self.matrix) - CMatrix::identity(n, n)))
    }

    /// Matrix of `C A C`.
    pub fn conjugate_operator(&self, a: &CMatrix) -> CMatrix {
        &self.matrix * linalg::conj(a) * linalg::conj(&self.matrix)
    }
}

fn model_tag(basis: &TMBasis) -> BasisTag {
    BasisTag::ModelSpace { degree: basis.dim() }
}

/// Entries `⟨w e_j, e_k⟩` for a weight sampled on the basis grid.
pub(crate) fn compress(basis: &TMBasis, weight: &[Complex64]) -> CMatrix {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        let we: Vec<Complex64> = weight
            .iter()
            .zip(basis.basis_samples(j))
            .map(|(w, e)| w * e)
            .collect();
        for k in 0..n {
            m[(k, j)] = inner_product_samples(&we, basis.basis_samples(k));
        }
    }
    m
}

fn check_grid(basis: &TMBasis, phi: &BoundaryFunction) -> Result<()> {
    if phi.grid() != basis.grid() {
        return Err(Error::GridMismatch {
            left: basis.grid().size(),
            right: phi.grid().size(),
        });
    }
    Ok(())
}

/// Matrix of `A_φ` with `M[k][j] = ⟨φ e_j, e_k⟩`.
pub fn assemble(basis: &TMBasis, phi: &BoundaryFunction) -> Result<OperatorMatrix> {
    check_grid(basis, phi)?;
    OperatorMatrix::new(model_tag(basis), compress(basis, phi.samples()))
}

/// The compressed shift `A_z`.
pub fn compressed_shift(basis: &TMBasis) -> OperatorMatrix {
    let z = BoundaryFunction::character(basis.grid(), 1);
    assemble(basis, &z).expect("same grid")
}

/// `C f = conj(z f)·I`, with `J[k][j] = ⟨conj(z e_j)·I, e_k⟩`.
pub fn conjugation(basis: &TMBasis) -> ConjugationMap {
    let grid = basis.grid();
    let i_samples = basis.inner().sample(&grid).expect("finite Blaschke on the circle");
    let n = basis.dim();
    let ce: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            basis
                .basis_samples(j)
                .iter()
                .zip(grid.nodes())
                .zip(&i_samples)
                .map(|((e, z), i)| (z * e).conj() * i)
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |k, j| {
        inner_product_samples(&ce[j], basis.basis_samples(k))
    });
    ConjugationMap {
        tag: model_tag(basis),
        matrix,
    }
}

/// `‖C A_φ C − A_φ*‖`.
pub fn complex_symmetry_residual(basis: &TMBasis, phi: &BoundaryFunction) -> Result<f64> {
    let a = assemble(basis, phi)?;
    let c = conjugation(basis);
    Ok(linalg::op_norm(&(c.conjugate_operator(a.entries()) - a.entries().adjoint())))
}

/// `‖A_φ‖`, which vanishes exactly when `φ ∈ IH² + conj(IH²)`.
pub fn zero_symbol_residual(basis: &TMBasis, phi: &BoundaryFunction) -> Result<f64> {
    Ok(assemble(basis, phi)?.norm())
}

/// Decomposition `D = φ₁ v^H + v φ₂^H` of a defect matrix in coordinates.
#[derive(Debug, Clone)]
pub struct DefectDecomposition {
    pub matrix: CMatrix,
    pub rank_estimate: usize,
    pub phi1: Vec<Complex64>,
    pub phi2: Vec<Complex64>,
    pub residual: f64,
    pub norm: f64,
}

/// Computes `D = A − S A S^H` and splits it against the direction `v`,
/// pinning the gauge with `⟨φ₂, v⟩ = 0`.
pub fn defect_decomposition(a: &CMatrix, shift: &CMatrix, v: &[Complex64]) -> Result<DefectDecomposition> {
    let d = a - shift * a * shift.adjoint();
    let norm = linalg::op_norm(&d);
    let rank_estimate = linalg::numerical_rank(&d, RANK_TOL);
    if rank_estimate > 2 {
        return Err(Error::RankViolation { rank: rank_estimate });
    }
    let v = linalg::column(v);
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return Err(Error::InvalidArgument("defect direction vanishes".into()));
    }
    let u = &v / Complex64::new(vnorm, 0.0);
    let psi1 = &d * &u;
    let duu = (u.adjoint() * &psi1)[(0, 0)];
    let psi2 = d.adjoint() * &u - &u * duu.conj();
    let scale = Complex64::new(1.0 / vnorm, 0.0);
    let phi1: Vec<Complex64> = psi1.iter().map(|c| c * scale).collect();
    let phi2: Vec<Complex64> = psi2.iter().map(|c| c * scale).collect();
    let vs: Vec<Complex64> = v.iter().cloned().collect();
    let rebuilt = linalg::outer(&phi1, &vs) + linalg::outer(&vs, &phi2);
    let residual = linalg::op_norm(&(&d - rebuilt));
    Ok(DefectDecomposition {
        matrix: d,
        rank_estimate,
        phi1,
        phi2,
        residual,
        norm,
    })
}

/// The Sarason defect of `A_φ` with `φ₁, φ₂` as elements of `K_I`.
#[derive(Debug, Clone)]
pub struct SarasonDefect {
    pub matrix: OperatorMatrix,
    pub rank_estimate: usize,
    pub phi1: ModelSpaceElement,
    pub phi2: ModelSpaceElement,
    pub residual: f64,
}

pub fn sarason_defect(basis: &Arc<TMBasis>, phi: &BoundaryFunction) -> Result<SarasonDefect> {
    let origin = basis.origin_index().ok_or(Error::MissingOriginZero)?;
    let a = assemble(basis, phi)?;
    let s = compressed_shift(basis);
    let mut k0 = vec![Complex64::new(0.0, 0.0); basis.dim()];
    k0[origin] = Complex64::new(1.0, 0.0);
    let dec = defect_decomposition(a.entries(), s.entries(), &k0)?;
    Ok(SarasonDefect {
        matrix: OperatorMatrix::new(model_tag(basis), dec.matrix)?,
        rank_estimate: dec.rank_estimate,
        phi1: basis.element(dec.phi1)?,
        phi2: basis.element(dec.phi2)?,
        residual: dec.residual,
    })
}

/// The three families of rank-one truncated Toeplitz operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneKind {
    /// `k_λ ⊗ C k_λ`
    KCk,
    /// `C k_λ ⊗ k_λ`
    Ckk,
    /// `k_ζ ⊗ k_ζ` at a boundary point
    Boundary,
}

pub fn rank_one(basis: &TMBasis, kind: RankOneKind, point: Complex64) -> Result<OperatorMatrix> {
    let r = point.norm();
    match kind {
        RankOneKind::Boundary if (r - 1.0).abs() > 1e-12 => {
            return Err(Error::Domain {
                what: "boundary rank-one operator needs a unimodular point",
                modulus: r,
            })
        }
        RankOneKind::KCk | RankOneKind::Ckk if r >= 1.0 => {
            return Err(Error::Domain {
                what: "interior rank-one operator needs |λ| < 1",
                modulus: r,
            })
        }
        _ => {}
    }
    let k = basis.kernel_coords(point)?;
    let ck = || conjugation(basis).apply(&k);
    let m = match kind {
        RankOneKind::KCk => linalg::outer(&k, &ck()),
        RankOneKind::Ckk => linalg::outer(&ck(), &k),
        RankOneKind::Boundary => linalg::outer(&k, &k),
    };
    OperatorMatrix::new(model_tag(basis), m)
}

/// `‖(A_z*)^N c‖`.
pub fn backward_shift_tail(basis: &TMBasis, coeffs: &[Complex64], n: usize) -> Result<f64> {
    let s = compressed_shift(basis).adjoint();
    let mut x = coeffs.to_vec();
    for _ in 0..n {
        x = s.apply(&x)?;
    }
    Ok(x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
}
