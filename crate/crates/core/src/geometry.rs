//! Gauge-invariant geometric quantities of a tracked band: Petermann factor,
//! the projector-form amplification integrand, line integrals of it, discrete
//! left-right Berry phases, and plaquette Berry curvatures.
//!
//! Everything here is built from projectors or closed link products, so the
//! results do not depend on how the eigensolver normalizes or re-phases
//! eigenvectors between calls. Discrete links are endpoint-symmetrized:
//!
//! ```text
//! ln link(k -> k+1) = [ln(<B_k|R_{k+1}>/<B_k|R_k>) + ln(<B_{k+1}|R_{k+1}>/<B_{k+1}|R_k>)] / 2
//! ```
//!
//! with `B = L` (left-right) or `B = R` (right-right). The naive one-sided
//! link carries a quantum-geometric bias of the same order as the curvature
//! signal itself and does not converge as the plaquette shrinks; the
//! symmetrized form restores O(h²) convergence.

use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, norm_sq};
use crate::parameter::{HamiltonianFamily, ParameterPoint, Path};
use crate::spectral::{
    best_overlap_index, eig_full_with, track_band_points, BandSelector, EigenPair, SpectralOptions,
};
use crate::CVector;

#[derive(Debug, Clone, Copy)]
pub struct GeometryOptions {
    /// Central-difference step, relative to the local parameter scale.
    pub fd_step: f64,
    /// Relative tolerance for line-integral refinement.
    pub line_tol: f64,
    /// Sample cap for line-integral refinement.
    pub max_samples: usize,
    /// Bound on the imaginary part of the (exactly real) trace-ratio
    /// integrand.
    pub im_tol: f64,
    pub spectral: SpectralOptions,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-4,
            line_tol: 1e-8,
            max_samples: (1 << 17) + 1,
            im_tol: 1e-6,
            spectral: SpectralOptions::default(),
        }
    }
}

/// Petermann factor `K = <L|L><R|R> / |<L|R>|²` of one eigenpair.
///
/// Invariant under independent rescaling of the two vectors; equals 1 exactly
/// when left and right are parallel (Hermitian case) and diverges toward an
/// exceptional point.
pub fn petermann(pair: &EigenPair) -> Result<f64> {
    petermann_vectors(&pair.left, &pair.right)
}

pub fn petermann_vectors(left: &CVector, right: &CVector) -> Result<f64> {
    let ll = norm_sq(left);
    let rr = norm_sq(right);
    let lr = inner(left, right).norm();
    if lr < 1e-14 * ll.sqrt() * rr.sqrt() {
        return Err(Error::ZeroOverlap(lr / (ll.sqrt() * rr.sqrt())));
    }
    Ok(ll * rr / (lr * lr))
}

/// Value of the projector-form integrand at one point, per coordinate, with
/// the Petermann factor and the tracked eigenvalue.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub point: ParameterPoint,
    pub petermann: f64,
    /// `Re Tr(P_L ∂_i P_R) / Tr(P_L P_R)` per coordinate; entries are zero
    /// for axes the caller marked inactive.
    pub integrand: Vec<f64>,
    pub eigenvalue: C64,
    /// Largest `|Im|` of the computed trace ratios (exactly real quantity;
    /// this is a numerical diagnostic).
    pub im_residual: f64,
}

/// Central-difference derivative of `Tr(P_L(c) P_R(v))` divided by
/// `Tr(P_L(c) P_R(c))`, from raw eigenvectors. The `<L|L>` normalizations
/// cancel between numerator and denominator.
pub fn trace_ratio_derivative(
    center_left: &CVector,
    center_right: &CVector,
    right_plus: &CVector,
    right_minus: &CVector,
    h: f64,
) -> Result<C64> {
    let t = |v: &CVector| -> C64 {
        let a = inner(center_left, v);
        let b = inner(v, center_left);
        a * b / C64::new(norm_sq(v), 0.0)
    };
    let tc = t(center_right);
    let scale = norm_sq(center_left) * norm_sq(center_right);
    if tc.norm() < 1e-28 * scale {
        return Err(Error::ZeroOverlap(tc.norm() / scale));
    }
    Ok((t(right_plus) - t(right_minus)) / (2.0 * h * tc))
}

fn matched_pair(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    reference_right: &CVector,
    opts: &GeometryOptions,
) -> Result<EigenPair> {
    let sys = eig_full_with(&family.eval(point), &opts.spectral)?;
    let (idx, ov) = best_overlap_index(reference_right, &sys);
    if ov < opts.spectral.continuity_threshold {
        return Err(Error::StencilBandSwap(format!(
            "best overlap {ov:.3e} at {:?}",
            point.coords
        )));
    }
    Ok(sys.pairs[idx].clone())
}

fn local_scale(point: &ParameterPoint) -> f64 {
    point
        .coords
        .iter()
        .fold(1.0f64, |acc, c| acc.max(c.abs()))
}

/// Projector-form amplification integrand at `point` for the band chosen by
/// `selector`, via central differences of step `opts.fd_step * scale`.
pub fn geometric_integrand(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> Result<GeometrySample> {
    let sys = eig_full_with(&family.eval(point), &opts.spectral)?;
    let idx = selector.pick(&sys)?;
    let active: Vec<usize> = (0..family.param_dim()).collect();
    integrand_for_pair(family, point, &sys.pairs[idx], &active, opts)
}

fn integrand_for_pair(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    center: &EigenPair,
    active_axes: &[usize],
    opts: &GeometryOptions,
) -> Result<GeometrySample> {
    let h = opts.fd_step * local_scale(point);
    let mut integrand = vec![0.0; family.param_dim()];
    let mut im_residual = 0.0f64;
    for &axis in active_axes {
        let plus = matched_pair(family, &point.shifted(axis, h), &center.right, opts)?;
        let minus = matched_pair(family, &point.shifted(axis, -h), &center.right, opts)?;
        let ratio =
            trace_ratio_derivative(&center.left, &center.right, &plus.right, &minus.right, h)?;
        integrand[axis] = ratio.re;
        im_residual = im_residual.max(ratio.im.abs());
    }
    if im_residual > opts.im_tol {
        return Err(Error::DomainError(format!(
            "trace-ratio integrand has imaginary residual {im_residual:.3e} > {:.1e}",
            opts.im_tol
        )));
    }
    Ok(GeometrySample {
        point: point.clone(),
        petermann: petermann(center)?,
        integrand,
        eigenvalue: center.eigenvalue,
        im_residual,
    })
}

/// Geometric amplification factor `A_g = exp[-∫_C integrand · dλ]` over the
/// path, by composite trapezoid with automatic step doubling until two
/// consecutive refinements agree to `opts.line_tol` (relative).
pub fn amplification_line_integral(
    family: &HamiltonianFamily,
    path: &Path,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> Result<f64> {
    let mut n = path.n_steps().max(17);
    let h_scale = path
        .samples()
        .iter()
        .map(local_scale)
        .fold(1.0f64, f64::max);
    let mut prev: Option<f64> = None;
    loop {
        let value = line_integral_once(family, path, selector, n, h_scale, opts)?;
        if let Some(p) = prev {
            let change = (value - p).abs();
            if change <= opts.line_tol * value.abs().max(f64::MIN_POSITIVE) {
                return Ok(value);
            }
            if 2 * (n - 1) + 1 > opts.max_samples {
                return Err(Error::NoConvergence {
                    tol: opts.line_tol,
                    max_samples: opts.max_samples,
                    last_change: change / value.abs().max(f64::MIN_POSITIVE),
                });
            }
        }
        prev = Some(value);
        n = 2 * (n - 1) + 1;
    }
}

fn line_integral_once(
    family: &HamiltonianFamily,
    path: &Path,
    selector: &BandSelector,
    n: usize,
    h_scale: f64,
    opts: &GeometryOptions,
) -> Result<f64> {
    let points = path.with_n_steps(n).samples();
    let band = track_band_points(family, &points, selector, &opts.spectral)?;
    // Only stencil the coordinates that actually vary along the path.
    let d = family.param_dim();
    let mut active = Vec::new();
    for axis in 0..d {
        let lo = points.iter().map(|p| p.get(axis)).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|p| p.get(axis))
            .fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 0.0 {
            active.push(axis);
        }
    }
    let h = opts.fd_step * h_scale;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for (point, pair) in &band.points {
        let mut row = vec![0.0; d];
        let mut im_residual = 0.0f64;
        for &axis in &active {
            let plus = matched_pair(family, &point.shifted(axis, h), &pair.right, opts)?;
            let minus = matched_pair(family, &point.shifted(axis, -h), &pair.right, opts)?;
            let ratio =
                trace_ratio_derivative(&pair.left, &pair.right, &plus.right, &minus.right, h)?;
            row[axis] = ratio.re;
            im_residual = im_residual.max(ratio.im.abs());
        }
        if im_residual > opts.im_tol {
            return Err(Error::DomainError(format!(
                "trace-ratio integrand has imaginary residual {im_residual:.3e} > {:.1e}",
                opts.im_tol
            )));
        }
        values.push(row);
    }
    let mut integral = 0.0;
    for k in 0..points.len() - 1 {
        for axis in 0..d {
            let dl = points[k + 1].get(axis) - points[k].get(axis);
            integral += 0.5 * (values[k][axis] + values[k + 1][axis]) * dl;
        }
    }
    Ok((-integral).exp())
}

/// Log of one endpoint-symmetrized link, `bra` side selecting left-right or
/// right-right flavor. Each one-sided factor keeps its principal branch and
/// must stay within `|arg| <= π/2`.
pub fn symmetric_link_log(
    bra0: &CVector,
    ket0: &CVector,
    bra1: &CVector,
    ket1: &CVector,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for (bra, num, den) in [(bra0, ket1, ket0), (bra1, ket1, ket0)] {
        let a = inner(bra, num);
        let b = inner(bra, den);
        if b.norm() == 0.0 || a.norm() == 0.0 {
            return Err(Error::ZeroOverlap(0.0));
        }
        let f = a / b;
        let phase = f.arg();
        if phase.abs() > FRAC_PI_2 {
            return Err(Error::BranchJump { phase });
        }
        total += f.ln();
    }
    Ok(0.5 * total)
}

/// Discrete left-right Berry phase `i Σ_k ln link_k` along the path. Fully
/// gauge invariant for closed paths; for open paths the endpoint gauge
/// ambiguity remains and the value is meaningful only under a fixed gauge
/// convention.
pub fn berry_phase_links(
    family: &HamiltonianFamily,
    path: &Path,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> Result<C64> {
    let points = path.samples();
    let band = track_band_points(family, &points, selector, &opts.spectral)?;
    let mut total = C64::new(0.0, 0.0);
    for k in 0..band.points.len() - 1 {
        let (_, p0) = &band.points[k];
        let (_, p1) = &band.points[k + 1];
        total += symmetric_link_log(&p0.left, &p0.right, &p1.left, &p1.right)?;
    }
    Ok(C64::i() * total)
}

/// One component of the Berry curvature two-form measured on a square
/// plaquette.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub point: ParameterPoint,
    pub plane: (usize, usize),
    pub omega_lr: C64,
    pub omega_rr: C64,
}

/// Berry curvature component `Ω_ij` from the four-corner plaquette of half
/// width `h` centered at `point`, traversed counterclockwise (`+e_i` first).
/// With the vector convention `Ω_x = Ω_{yz}` this sign reproduces the
/// two-level closed form.
pub fn curvature_plaquette(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    plane: (usize, usize),
    h: f64,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> Result<CurvatureSample> {
    if plane.0 == plane.1 || plane.0 >= family.param_dim() || plane.1 >= family.param_dim() {
        return Err(Error::InvalidInput(format!("invalid plaquette plane {plane:?}")));
    }
    let sys = eig_full_with(&family.eval(point), &opts.spectral)?;
    let idx = selector.pick(&sys)?;
    let center = &sys.pairs[idx];
    let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut corners = Vec::with_capacity(4);
    for (si, sj) in signs {
        let p = point.shifted(plane.0, si * h).shifted(plane.1, sj * h);
        corners.push(matched_pair(family, &p, &center.right, opts)?);
    }
    let mut log_lr = C64::new(0.0, 0.0);
    let mut log_rr = C64::new(0.0, 0.0);
    for k in 0..4 {
        let p0 = &corners[k];
        let p1 = &corners[(k + 1) % 4];
        log_lr += symmetric_link_log(&p0.left, &p0.right, &p1.left, &p1.right)?;
        log_rr += symmetric_link_log(&p0.right, &p0.right, &p1.right, &p1.right)?;
    }
    let area = (2.0 * h) * (2.0 * h);
    Ok(CurvatureSample {
        point: point.clone(),
        plane,
        omega_lr: C64::i() * log_lr / area,
        omega_rr: C64::i() * log_rr / area,
    })
}

/// Rectangular 2D slice of parameter space.
#[derive(Debug, Clone)]
pub struct SliceSpec {
    /// Coordinates held fixed outside the slice plane.
    pub base: ParameterPoint,
    pub plane: (usize, usize),
    pub range_i: (f64, f64),
    pub range_j: (f64, f64),
    pub n_i: usize,
    pub n_j: usize,
}

impl SliceSpec {
    pub fn nodes(&self) -> Vec<ParameterPoint> {
        let mut out = Vec::with_capacity(self.n_i * self.n_j);
        for u in 0..self.n_i {
            let x = if self.n_i == 1 {
                self.range_i.0
            } else {
                self.range_i.0
                    + (self.range_i.1 - self.range_i.0) * u as f64 / (self.n_i - 1) as f64
            };
            for v in 0..self.n_j {
                let y = if self.n_j == 1 {
                    self.range_j.0
                } else {
                    self.range_j.0
                        + (self.range_j.1 - self.range_j.0) * v as f64 / (self.n_j - 1) as f64
                };
                let mut p = self.base.clone();
                p.coords[self.plane.0] = x;
                p.coords[self.plane.1] = y;
                out.push(p);
            }
        }
        out
    }
}

#[derive(Debug)]
pub struct CurvatureMap {
    pub plane: (usize, usize),
    pub samples: Vec<CurvatureSample>,
    /// Per-node failures; they do not abort the scan.
    pub failures: Vec<(ParameterPoint, Error)>,
    pub max_abs_im_lr: f64,
    pub max_abs_im_rr: f64,
}

/// Plaquette curvature at every node of the slice; per-node errors are
/// collected, not fatal.
pub fn curvature_map(
    family: &HamiltonianFamily,
    slice: &SliceSpec,
    h: f64,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> CurvatureMap {
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut max_lr = 0.0f64;
    let mut max_rr = 0.0f64;
    for node in slice.nodes() {
        match curvature_plaquette(family, &node, slice.plane, h, selector, opts) {
            Ok(s) => {
                max_lr = max_lr.max(s.omega_lr.im.abs());
                max_rr = max_rr.max(s.omega_rr.im.abs());
                samples.push(s);
            }
            Err(e) => failures.push((node, e)),
        }
    }
    CurvatureMap {
        plane: slice.plane,
        samples,
        failures,
        max_abs_im_lr: max_lr,
        max_abs_im_rr: max_rr,
    }
}

/// Gauge convention for the Ξ diagnostic, which is not gauge invariant.
#[derive(Debug, Clone)]
pub enum XiGauge {
    /// Unit norms; the component largest in magnitude at the stencil center
    /// is made real positive (the same component index is reused at the
    /// shifted points so the gauge stays smooth across the stencil).
    Canonical,
    /// The left field is locked to a symmetry relation, `|L> := M |R̂>` (or
    /// `M |R̂*>` with `conjugate`), with `R̂` canonically fixed. This is the
    /// gauge in which a class A/B relation forces Ξ to vanish identically;
    /// the canonical gauge reproduces that only for unitary `M`, where the
    /// locked left field already has constant norm.
    RelationLocked { matrix: crate::CMatrix, conjugate: bool },
}

/// Gauge-fixed diagnostic `Ξ_i = Re[<L|∂_i R>/<L|R> - <R|∂_i L>/<R|L>]` in
/// the canonical gauge.
pub fn xi_term(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    h: f64,
    selector: &BandSelector,
    opts: &GeometryOptions,
) -> Result<Vec<f64>> {
    xi_term_impl(family, point, h, selector, opts, &XiGauge::Canonical, None)
}

pub fn xi_term_with_gauge(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    h: f64,
    selector: &BandSelector,
    opts: &GeometryOptions,
    gauge: &XiGauge,
) -> Result<Vec<f64>> {
    xi_term_impl(family, point, h, selector, opts, gauge, None)
}

fn xi_term_impl(
    family: &HamiltonianFamily,
    point: &ParameterPoint,
    h: f64,
    selector: &BandSelector,
    opts: &GeometryOptions,
    gauge: &XiGauge,
    log_amplitude_twist: Option<&dyn Fn(&ParameterPoint) -> f64>,
) -> Result<Vec<f64>> {
    let sys = eig_full_with(&family.eval(point), &opts.spectral)?;
    let idx = selector.pick(&sys)?;
    let center = &sys.pairs[idx];
    let anchor_r = argmax_component(&center.right);
    let anchor_l = argmax_component(&center.left);
    // Ξ only feels the moduli of gauge functions (pure phases drop under the
    // real part), and a twist common to both fields cancels; the test twist
    // therefore modulates the amplitude of the right field alone.
    let fix = |v: &CVector, anchor: usize, p: &ParameterPoint, twisted: bool| -> Result<CVector> {
        let amp = v[anchor];
        if amp.norm() == 0.0 {
            return Err(Error::DomainError(
                "gauge-fixing component vanishes on the stencil".into(),
            ));
        }
        let mut scale = amp / amp.norm() * norm(v);
        if twisted {
            if let Some(twist) = log_amplitude_twist {
                scale *= C64::new(twist(p).exp(), 0.0);
            }
        }
        Ok(v.mapv(|z| z / scale))
    };
    let left_field = |raw_left: &CVector,
                      right_fixed: &CVector,
                      p: &ParameterPoint|
     -> Result<CVector> {
        match gauge {
            XiGauge::Canonical => fix(raw_left, anchor_l, p, false),
            XiGauge::RelationLocked { matrix, conjugate } => {
                let source = if *conjugate {
                    crate::linalg::conj_vec(right_fixed)
                } else {
                    right_fixed.clone()
                };
                let locked = matrix.dot(&source);
                if norm(&locked) == 0.0 {
                    return Err(Error::DomainError(
                        "relation-locked left field vanishes".into(),
                    ));
                }
                Ok(locked)
            }
        }
    };
    let rc = fix(&center.right, anchor_r, point, true)?;
    let lc = left_field(&center.left, &rc, point)?;
    let mut xi = vec![0.0; family.param_dim()];
    for axis in 0..family.param_dim() {
        let pp = point.shifted(axis, h);
        let pm = point.shifted(axis, -h);
        let plus = matched_pair(family, &pp, &center.right, opts)?;
        let minus = matched_pair(family, &pm, &center.right, opts)?;
        let rp = fix(&plus.right, anchor_r, &pp, true)?;
        let rm = fix(&minus.right, anchor_r, &pm, true)?;
        let lp = left_field(&plus.left, &rp, &pp)?;
        let lm = left_field(&minus.left, &rm, &pm)?;
        let dr = (&rp - &rm).mapv(|z| z / (2.0 * h));
        let dl = (&lp - &lm).mapv(|z| z / (2.0 * h));
        let term = inner(&lc, &dr) / inner(&lc, &rc) - inner(&rc, &dl) / inner(&rc, &lc);
        xi[axis] = term.re;
    }
    Ok(xi)
}

fn argmax_component(v: &CVector) -> usize {
    let mut best = 0usize;
    let mut best_mag = -1.0f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{two_level_closed_forms, two_level_family, Band, TwoLevelParams};
    use crate::spectral::eig_full;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_level_pair(delta: f64, j: f64, d: f64, band: Band) -> EigenPair {
        let fam = two_level_family();
        let sys = eig_full(&fam.eval(&[delta, j, d].into())).unwrap();
        let target = two_level_closed_forms(
            &TwoLevelParams {
                detuning: delta,
                coupling: j,
                asymmetry: d,
            },
            band,
        )
        .unwrap()
        .eigenvalue;
        let idx = BandSelector::Nearest(c(target, 0.)).pick(&sys).unwrap();
        sys.pairs[idx].clone()
    }

    #[test]
    fn petermann_closed_form_values() {
        let p = two_level_pair(0.0, 5.0, 1.0, Band::Upper);
        assert!((petermann(&p).unwrap() - 25.0 / 24.0).abs() < 1e-10);
        let p = two_level_pair(0.0, 5.0, 3.0, Band::Lower);
        assert!((petermann(&p).unwrap() - 25.0 / 16.0).abs() < 1e-10);
        let p = two_level_pair(0.0, 5.0, 0.0, Band::Upper);
        assert!((petermann(&p).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn petermann_rescaling_invariance_and_zero_overlap() {
        let mut p = two_level_pair(1.0, 5.0, 2.0, Band::Upper);
        let k = petermann(&p).unwrap();
        p.left = p.left.mapv(|z| z * c(-3.25, 1.5));
        p.right = p.right.mapv(|z| z * c(0.0, 0.7));
        assert!((petermann(&p).unwrap() - k).abs() <= 1e-12 * k);
        let left = CVector::from(vec![c(1., 0.), c(0., 0.)]);
        let right = CVector::from(vec![c(0., 0.), c(1., 0.)]);
        assert!(matches!(
            petermann_vectors(&left, &right),
            Err(Error::ZeroOverlap(_))
        ));
    }

    #[test]
    fn integrand_vanishes_for_hermitian_subfamily() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let s = geometric_integrand(
            &fam,
            &[0.7, 5.0, 0.0].into(),
            &BandSelector::Index(1),
            &opts,
        )
        .unwrap();
        assert!((s.petermann - 1.0).abs() < 1e-10);
        for v in &s.integrand {
            assert!(v.abs() < 1e-8, "integrand {v}");
        }
    }

    #[test]
    fn integrand_matches_connection_difference() {
        // At (0, 5, 1) the δ component equals 2·Im[A^LR - A^RR] = -1/24.
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let cf = two_level_closed_forms(
            &TwoLevelParams {
                detuning: 0.0,
                coupling: 5.0,
                asymmetry: 1.0,
            },
            Band::Upper,
        )
        .unwrap();
        let sel = BandSelector::Nearest(c(cf.eigenvalue, 0.));
        let s = geometric_integrand(&fam, &[0.0, 5.0, 1.0].into(), &sel, &opts).unwrap();
        for axis in 0..3 {
            let expected = 2.0 * cf.connection_diff[axis].im;
            assert!(
                (s.integrand[axis] - expected).abs() < 1e-6,
                "axis {axis}: {} vs {expected}",
                s.integrand[axis]
            );
        }
        assert!((s.integrand[2] + 1.0 / 24.0).abs() < 1e-6);
        assert!(s.im_residual <= 1e-6);
    }

    #[test]
    fn trace_ratio_is_scale_free() {
        // A wide stencil keeps the central difference far above rounding so
        // the comparison is meaningful at 1e-12 relative.
        let h = 1e-2;
        let pc = two_level_pair(0.4, 5.0, 1.3, Band::Upper);
        let pp = two_level_pair(0.4, 5.0, 1.3 + h, Band::Upper);
        let pm = two_level_pair(0.4, 5.0, 1.3 - h, Band::Upper);
        let base = trace_ratio_derivative(&pc.left, &pc.right, &pp.right, &pm.right, h).unwrap();
        let scale = |v: &CVector, z: C64| v.mapv(|x| x * z);
        let rescaled = trace_ratio_derivative(
            &scale(&pc.left, c(2.0, -1.0)),
            &scale(&pc.right, c(0.0, 3.0)),
            &scale(&pp.right, c(-0.3, 0.4)),
            &scale(&pm.right, c(7.0, 2.0)),
            h,
        )
        .unwrap();
        assert!((base - rescaled).norm() <= 1e-12 * base.norm());
    }

    #[test]
    fn line_integral_reproduces_petermann_ratio() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let path = Path::line([0.0, 5.0, 1.0].into(), [0.0, 5.0, 3.0].into(), 33).unwrap();
        let sel = BandSelector::Nearest(c(24f64.sqrt(), 0.));
        let a = amplification_line_integral(&fam, &path, &sel, &opts).unwrap();
        assert!((a - 1.5f64.sqrt()).abs() < 1e-7, "A_g = {a}");
        let rev = amplification_line_integral(&fam, &path.reversed(), &sel, &opts).unwrap();
        assert!((a * rev - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_loop_in_flat_region_gives_unity() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let loop_path = Path::polyline(
            vec![
                [0.0, 5.0, 1.0].into(),
                [0.0, 5.5, 2.0].into(),
                [0.0, 4.6, 2.6].into(),
                [0.0, 5.0, 1.0].into(),
            ],
            65,
        )
        .unwrap();
        let sel = BandSelector::Index(1);
        let a = amplification_line_integral(&fam, &loop_path, &sel, &opts).unwrap();
        assert!((a - 1.0).abs() < 1e-6, "closed-loop A_g = {a}");
        let phase = berry_phase_links(&fam, &loop_path, &sel, &opts).unwrap();
        assert!(phase.norm() < 1e-6, "closed-loop Berry phase {phase}");
    }

    #[test]
    fn berry_phase_constant_family_is_zero() {
        let fam = HamiltonianFamily::new("const", 2, 2, |_p| {
            ndarray::array![[c(0., 0.), c(8., 0.)], [c(2., 0.), c(0., 0.)]]
        });
        let path = Path::line([0.0, 0.0].into(), [1.0, 0.7].into(), 21).unwrap();
        let phase =
            berry_phase_links(&fam, &path, &BandSelector::Index(0), &GeometryOptions::default())
                .unwrap();
        assert!(phase.norm() < 1e-12);
    }

    #[test]
    fn plaquette_matches_two_level_curvature_difference() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let point: ParameterPoint = [1.0, 5.0, 2.0].into();
        let cf = two_level_closed_forms(
            &TwoLevelParams {
                detuning: 1.0,
                coupling: 5.0,
                asymmetry: 2.0,
            },
            Band::Upper,
        )
        .unwrap();
        let sel = BandSelector::Nearest(c(cf.eigenvalue, 0.));
        // Ω vector components: Ω_Δ = Ω_{(J,δ)}, Ω_J = Ω_{(δ,Δ)}, Ω_δ = Ω_{(Δ,J)}.
        let planes = [(1, 2), (2, 0), (0, 1)];
        for (axis, plane) in planes.iter().enumerate() {
            let s = curvature_plaquette(&fam, &point, *plane, 1e-3, &sel, &opts).unwrap();
            let diff = s.omega_lr - s.omega_rr;
            let expected = cf.curvature_diff[axis];
            assert!(
                (diff - expected).norm() < 1e-6,
                "plane {plane:?}: {diff} vs {expected}"
            );
            assert!(s.omega_rr.im.abs() < 1e-8);
        }
    }

    #[test]
    fn plaquette_h_convergence_is_second_order() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let point: ParameterPoint = [1.0, 5.0, 2.0].into();
        let sel = BandSelector::Index(1);
        let exact = two_level_closed_forms(
            &TwoLevelParams {
                detuning: 1.0,
                coupling: 5.0,
                asymmetry: 2.0,
            },
            Band::Upper,
        )
        .unwrap()
        .curvature_diff[0];
        let h = 0.02;
        let coarse = curvature_plaquette(&fam, &point, (1, 2), h, &sel, &opts).unwrap();
        let fine = curvature_plaquette(&fam, &point, (1, 2), h / 2.0, &sel, &opts).unwrap();
        let err_c = ((coarse.omega_lr - coarse.omega_rr) - exact).norm();
        let err_f = ((fine.omega_lr - fine.omega_rr) - exact).norm();
        let ratio = err_c / err_f;
        assert!(
            (2.0..8.0).contains(&ratio),
            "h-refinement ratio {ratio} (errors {err_c:.3e}, {err_f:.3e})"
        );
    }

    #[test]
    fn stokes_consistency_on_small_rectangle() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let sel = BandSelector::Index(1);
        let (j0, d0, w) = (5.0, 2.0, 0.1);
        let rect = Path::polyline(
            vec![
                [1.0, j0 - w, d0 - w].into(),
                [1.0, j0 + w, d0 - w].into(),
                [1.0, j0 + w, d0 + w].into(),
                [1.0, j0 - w, d0 + w].into(),
                [1.0, j0 - w, d0 - w].into(),
            ],
            201,
        )
        .unwrap();
        let phase = berry_phase_links(&fam, &rect, &sel, &opts).unwrap();
        let centre = curvature_plaquette(&fam, &[1.0, j0, d0].into(), (1, 2), 1e-3, &sel, &opts)
            .unwrap();
        let expected = centre.omega_lr.im * (2.0 * w) * (2.0 * w);
        assert!(
            (phase.im - expected).abs() <= 0.05 * expected.abs(),
            "loop Im phase {} vs curvature * area {expected}",
            phase.im
        );
    }

    #[test]
    fn curvature_map_two_level_slices() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let sel = BandSelector::Index(1);
        let vanishing = SliceSpec {
            base: [0.0, 0.0, 0.0].into(),
            plane: (2, 1),
            range_i: (0.5, 3.5),
            range_j: (4.0, 6.0),
            n_i: 5,
            n_j: 5,
        };
        let map = curvature_map(&fam, &vanishing, 1e-3, &sel, &opts);
        assert!(map.failures.is_empty());
        assert!(map.max_abs_im_lr <= 1e-6, "max Im = {}", map.max_abs_im_lr);
        assert!(map.max_abs_im_rr <= 1e-8);
        let tilted = SliceSpec {
            base: [1.0, 0.0, 0.0].into(),
            ..vanishing
        };
        let map = curvature_map(&fam, &tilted, 1e-3, &sel, &opts);
        assert!(map.max_abs_im_lr > 1e-3);
    }

    #[test]
    fn xi_vanishes_on_reciprocal_subfamily_in_canonical_gauge() {
        // The Δ = 0 subfamily over (J, δ) is class B with a unitary M, for
        // which the canonical gauge coincides with the relation-locked one.
        let restricted = HamiltonianFamily::new("two-level-delta0", 2, 2, |p| {
            two_level_family().eval(&[0.0, p.get(0), p.get(1)].into())
        });
        let opts = GeometryOptions::default();
        let sel = BandSelector::Index(1);
        let xi = xi_term(&restricted, &[5.0, 1.5].into(), 1e-4, &sel, &opts).unwrap();
        let n0: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(n0 <= 1e-6, "Xi at Delta=0: {n0:.3e}");
    }

    #[test]
    fn xi_is_gauge_dependent_away_from_the_symmetric_subfamily() {
        let fam = two_level_family();
        let opts = GeometryOptions::default();
        let sel = BandSelector::Index(1);
        let point: ParameterPoint = [1.0, 5.0, 2.0].into();
        let plain = xi_term(&fam, &point, 1e-4, &sel, &opts).unwrap();
        let n1: f64 = plain.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(n1 > 1e-3, "Xi generic: {n1:.3e}");
        let twist = |p: &ParameterPoint| 3.0 * p.get(0) + 0.5 * p.get(2);
        let twisted = xi_term_impl(
            &fam,
            &point,
            1e-4,
            &sel,
            &opts,
            &XiGauge::Canonical,
            Some(&twist),
        )
        .unwrap();
        let delta: f64 = plain
            .iter()
            .zip(&twisted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(delta > 1e-3, "gauge twist changed Xi by {delta:.3e}");
    }
}
