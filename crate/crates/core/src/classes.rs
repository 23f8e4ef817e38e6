//! Symmetry relations between left and right eigenstates and the closed-form
//! geometric amplification factors they imply.
//!
//! Four relation classes are supported, each with a λ-independent matrix `M`:
//!
//! * `A`:  `|L> = M |R>`   with Hermitian `M`
//! * `B`:  `|L> = M |R*>`  with symmetric `M`
//! * `A'`: `|R> = M |L>`   with Hermitian `M`
//! * `B'`: `|R> = M |L*>`  with symmetric `M`
//!
//! A verified relation makes the geometric amplification factor depend on the
//! endpoints only. The closed forms dispatch on whether `M` is additionally
//! unitary or a projector; the relations themselves are verified by sampling,
//! since they are algebraic identities over the whole parameter domain.

use ndarray_linalg::{Inverse, SVD};

use crate::error::{Error, Result};
use crate::geometry::petermann;
use crate::linalg::{adjoint, conj_mat, conj_vec, eye, fro_norm, inner, is_finite_mat, norm, quad_form};
use crate::parameter::{HamiltonianFamily, ParameterPoint};
use crate::spectral::{eig_full_with, BandSelector, EigenPair, SpectralOptions};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    /// `|L> = M |R>`, Hermitian `M`.
    A,
    /// `|L> = M |R*>`, symmetric `M`.
    B,
    /// `|R> = M |L>`, Hermitian `M`.
    APrime,
    /// `|R> = M |L*>`, symmetric `M`.
    BPrime,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassTag::A => write!(f, "A"),
            ClassTag::B => write!(f, "B"),
            ClassTag::APrime => write!(f, "A'"),
            ClassTag::BPrime => write!(f, "B'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixFlags {
    pub hermitian: bool,
    pub symmetric: bool,
    pub unitary: bool,
    pub projector: bool,
}

#[derive(Debug, Clone)]
pub struct MatrixClassification {
    pub flags: MatrixFlags,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassesOptions {
    /// Residual bound under which a sampled relation counts as verified.
    pub relation_tol: f64,
    /// Tolerance for the structural matrix flags.
    pub flag_tol: f64,
    /// Condition-number bound for similarity transforms.
    pub cond_limit: f64,
    pub spectral: SpectralOptions,
}

impl Default for ClassesOptions {
    fn default() -> Self {
        Self {
            relation_tol: 1e-8,
            flag_tol: 1e-10,
            cond_limit: 1e12,
            spectral: SpectralOptions::default(),
        }
    }
}

pub fn classify_matrix(m: &CMatrix) -> Result<MatrixClassification> {
    classify_matrix_with(m, &ClassesOptions::default())
}

pub fn classify_matrix_with(m: &CMatrix, opts: &ClassesOptions) -> Result<MatrixClassification> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if !is_finite_mat(m) {
        return Err(Error::NonFinite("matrix"));
    }
    let tol = opts.flag_tol;
    let hermitian = fro_norm(&(m - &adjoint(m))) <= tol;
    let symmetric = fro_norm(&(m - &m.t().to_owned())) <= tol;
    let unitary = fro_norm(&(&adjoint(m).dot(m) - &eye(m.nrows()))) <= tol;
    let projector = fro_norm(&(&m.dot(m) - m)) <= tol;
    let (_, sigma, _) = m.svd(false, false)?;
    let smax = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let rank = sigma.iter().filter(|&&s| s > tol * smax).count();
    Ok(MatrixClassification {
        flags: MatrixFlags {
            hermitian,
            symmetric,
            unitary,
            projector,
        },
        rank,
    })
}

/// A candidate relation with the evidence gathered for it: flags and rank of
/// `M` and the worst proportionality residual over the sample points.
#[derive(Debug, Clone)]
pub struct SymmetryRelation {
    pub class_tag: ClassTag,
    pub matrix: CMatrix,
    pub flags: MatrixFlags,
    pub rank: usize,
    /// `max over samples of min_c |v - c w| / |v|`.
    pub residual: f64,
}

impl SymmetryRelation {
    pub fn is_verified(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Residual of `v ∝ w`: `|v - c w|/|v|` minimized over the complex scalar
/// `c = <w|v>/<w|w>`.
fn proportionality_residual(v: &CVector, w: &CVector) -> f64 {
    let ww = inner(w, w);
    if ww.norm() == 0.0 {
        return 1.0;
    }
    let c = inner(w, v) / ww;
    norm(&(v - &w.mapv(|z| z * c))) / norm(v)
}

/// Check the class relation at each sample point for the band chosen by
/// `selector`; for classes B and B' the eigenvector is conjugated entrywise
/// before `M` is applied.
pub fn verify_relation(
    family: &HamiltonianFamily,
    m: &CMatrix,
    class_tag: ClassTag,
    sample_points: &[ParameterPoint],
    selector: &BandSelector,
) -> Result<SymmetryRelation> {
    verify_relation_with(
        family,
        m,
        class_tag,
        sample_points,
        selector,
        &ClassesOptions::default(),
    )
}

pub fn verify_relation_with(
    family: &HamiltonianFamily,
    m: &CMatrix,
    class_tag: ClassTag,
    sample_points: &[ParameterPoint],
    selector: &BandSelector,
    opts: &ClassesOptions,
) -> Result<SymmetryRelation> {
    if sample_points.len() < 3 {
        return Err(Error::InvalidInput(
            "relation verification needs at least 3 sample points".into(),
        ));
    }
    let classification = classify_matrix_with(m, opts)?;
    let mut residual = 0.0f64;
    for point in sample_points {
        let sys = eig_full_with(&family.eval(point), &opts.spectral)?;
        let pair = &sys.pairs[selector.pick(&sys)?];
        let (v, w) = relation_vectors(m, class_tag, pair);
        residual = residual.max(proportionality_residual(&v, &w));
    }
    Ok(SymmetryRelation {
        class_tag,
        matrix: m.clone(),
        flags: classification.flags,
        rank: classification.rank,
        residual,
    })
}

fn relation_vectors(m: &CMatrix, class_tag: ClassTag, pair: &EigenPair) -> (CVector, CVector) {
    match class_tag {
        ClassTag::A => (pair.left.clone(), m.dot(&pair.right)),
        ClassTag::B => (pair.left.clone(), m.dot(&conj_vec(&pair.right))),
        ClassTag::APrime => (pair.right.clone(), m.dot(&pair.left)),
        ClassTag::BPrime => (pair.right.clone(), m.dot(&conj_vec(&pair.left))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMode {
    /// `P⁻¹ H P` Hermitian at every sample: class A with `M = (P P†)⁻¹`.
    Hermitian,
    /// `P⁻¹ H P` symmetric at every sample: class B with `M = (P* P†)⁻¹`.
    Symmetric,
}

#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub mode: SimilarityMode,
    pub condition_number: f64,
    pub max_residual: f64,
    /// The implied relation matrix `M`.
    pub implied_matrix: CMatrix,
}

/// Verify that a supplied `P` reduces the family to Hermitian or symmetric
/// form, and return the implied relation matrix.
pub fn similarity_check(
    family: &HamiltonianFamily,
    p: &CMatrix,
    mode: SimilarityMode,
    sample_points: &[ParameterPoint],
) -> Result<SimilarityReport> {
    similarity_check_with(family, p, mode, sample_points, &ClassesOptions::default())
}

pub fn similarity_check_with(
    family: &HamiltonianFamily,
    p: &CMatrix,
    mode: SimilarityMode,
    sample_points: &[ParameterPoint],
    opts: &ClassesOptions,
) -> Result<SimilarityReport> {
    if !is_finite_mat(p) {
        return Err(Error::NonFinite("similarity transform"));
    }
    let (_, sigma, _) = p.svd(false, false)?;
    let smax = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = sigma.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let condition_number = smax / smin;
    if !condition_number.is_finite() || condition_number > opts.cond_limit {
        return Err(Error::IllConditioned(condition_number));
    }
    let p_inv = p.inv()?;
    let mut max_residual = 0.0f64;
    for point in sample_points {
        let g = p_inv.dot(&family.eval(point)).dot(p);
        let deviation = match mode {
            SimilarityMode::Hermitian => fro_norm(&(&g - &adjoint(&g))),
            SimilarityMode::Symmetric => fro_norm(&(&g - &g.t().to_owned())),
        };
        max_residual = max_residual.max(deviation / fro_norm(&g).max(1.0));
    }
    if max_residual > opts.relation_tol {
        return Err(Error::NotSimilarityReducible {
            residual: max_residual,
            tol: opts.relation_tol,
        });
    }
    let implied_matrix = match mode {
        SimilarityMode::Hermitian => p.dot(&adjoint(p)).inv()?,
        SimilarityMode::Symmetric => conj_mat(p).dot(&adjoint(p)).inv()?,
    };
    Ok(SimilarityReport {
        mode,
        condition_number,
        max_residual,
        implied_matrix,
    })
}

/// Closed-form geometric amplification factor between two endpoint eigenpairs
/// under a verified relation.
///
/// Dispatch: a projector `M` gives `K_T/K_0` for classes A, B (rank one only
/// for B/B') and exactly 1 for A'/B'; a unitary `M` gives `sqrt(K_T/K_0)`;
/// otherwise the general expressions in terms of `M²` (A, A') or `M*M`
/// (B, B') apply. Invariant under rescaling of the supplied eigenvectors.
pub fn closed_form_ag(
    relation: &SymmetryRelation,
    start: &EigenPair,
    end: &EigenPair,
) -> Result<f64> {
    closed_form_ag_with(relation, start, end, &ClassesOptions::default())
}

pub fn closed_form_ag_with(
    relation: &SymmetryRelation,
    start: &EigenPair,
    end: &EigenPair,
    opts: &ClassesOptions,
) -> Result<f64> {
    if !relation.is_verified(opts.relation_tol) {
        return Err(Error::InvalidInput(format!(
            "relation {} not verified: residual {:.3e} > {:.1e}",
            relation.class_tag, relation.residual, opts.relation_tol
        )));
    }
    let k0 = petermann(start)?;
    let kt = petermann(end)?;
    let ratio = kt / k0;
    let flags = relation.flags;
    let m = &relation.matrix;
    let value = match relation.class_tag {
        ClassTag::A => {
            if flags.projector {
                ratio
            } else if flags.unitary {
                ratio.sqrt()
            } else {
                let m2 = m.dot(m);
                let qt = quad_real(&end.right, &m2)?;
                let q0 = quad_real(&start.right, &m2)?;
                (ratio * (norm_sq_re(&end.right) / qt) * (q0 / norm_sq_re(&start.right))).sqrt()
            }
        }
        ClassTag::B => {
            if flags.projector {
                if relation.rank == 1 {
                    ratio
                } else {
                    return Err(Error::UnsupportedBranch(relation.rank));
                }
            } else if flags.unitary {
                ratio.sqrt()
            } else {
                let mm = conj_mat(m).dot(m);
                let qt = quad_real(&conj_vec(&end.right), &mm)?;
                let q0 = quad_real(&conj_vec(&start.right), &mm)?;
                (ratio * (norm_sq_re(&end.right) / qt) * (q0 / norm_sq_re(&start.right))).sqrt()
            }
        }
        ClassTag::APrime => {
            if flags.projector {
                1.0
            } else if flags.unitary {
                ratio.sqrt()
            } else {
                let m2 = m.dot(m);
                let qt = quad_real(&end.left, &m2)?;
                let q0 = quad_real(&start.left, &m2)?;
                (ratio * (qt / norm_sq_re(&end.left)) * (norm_sq_re(&start.left) / q0)).sqrt()
            }
        }
        ClassTag::BPrime => {
            if flags.projector {
                if relation.rank == 1 {
                    1.0
                } else {
                    return Err(Error::UnsupportedBranch(relation.rank));
                }
            } else if flags.unitary {
                ratio.sqrt()
            } else {
                let mm = conj_mat(m).dot(m);
                let qt = quad_real(&conj_vec(&end.left), &mm)?;
                let q0 = quad_real(&conj_vec(&start.left), &mm)?;
                (ratio * (qt / norm_sq_re(&end.left)) * (norm_sq_re(&start.left) / q0)).sqrt()
            }
        }
    };
    Ok(value)
}

fn norm_sq_re(v: &CVector) -> f64 {
    crate::linalg::norm_sq(v)
}

fn quad_real(v: &CVector, a: &CMatrix) -> Result<f64> {
    let q = quad_form(v, a);
    if q.re <= 0.0 {
        return Err(Error::DomainError(format!(
            "quadratic form not positive: {q}"
        )));
    }
    Ok(q.re)
}
