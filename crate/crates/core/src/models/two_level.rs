//! Non-Hermitian two-level model
//!
//! ```text
//! H(Δ, J, δ) = [ -Δ   J+δ ]
//!              [ J-δ   Δ  ]
//! ```
//!
//! parameterized by λ = (Δ, J, δ): detuning, coupling, and the nonreciprocal
//! coupling asymmetry. All closed forms (eigensystem, Petermann factor,
//! gauge-invariant connection and curvature differences, and the analytic
//! amplification integral along the detuning axis) are exposed as references
//! for the numerical modules.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::parameter::HamiltonianFamily;
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    /// Δ, the diagonal detuning.
    pub detuning: f64,
    /// J, the reciprocal part of the coupling.
    pub coupling: f64,
    /// δ, the nonreciprocal coupling asymmetry.
    pub asymmetry: f64,
}

impl TwoLevelParams {
    pub fn new(detuning: f64, coupling: f64, asymmetry: f64) -> Self {
        Self {
            detuning,
            coupling,
            asymmetry,
        }
    }

    /// Δ² + J² − δ²; nonnegative in the PT-symmetric regime where both
    /// eigenvalues are real.
    pub fn pt_discriminant(&self) -> f64 {
        self.detuning * self.detuning + self.coupling * self.coupling
            - self.asymmetry * self.asymmetry
    }

    pub fn is_pt_symmetric(&self) -> bool {
        self.pt_discriminant() >= 0.0
    }

    /// Closed-form Petermann factor `(Δ² + J²)/(Δ² + J² − δ²)`, identical for
    /// both bands.
    pub fn petermann(&self) -> Result<f64> {
        let disc = self.pt_discriminant();
        if disc <= 0.0 {
            return Err(Error::PTBroken(disc));
        }
        Ok((self.detuning * self.detuning + self.coupling * self.coupling) / disc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Upper,
    Lower,
}

impl Band {
    pub fn sign(&self) -> f64 {
        match self {
            Band::Upper => 1.0,
            Band::Lower => -1.0,
        }
    }
}

/// The model as a `HamiltonianFamily` over λ = (Δ, J, δ).
pub fn two_level_family() -> HamiltonianFamily {
    HamiltonianFamily::new("two-level", 2, 3, |p| {
        let (detuning, coupling, asymmetry) = (p.get(0), p.get(1), p.get(2));
        let mut h = CMatrix::zeros((2, 2));
        h[[0, 0]] = C64::new(-detuning, 0.0);
        h[[0, 1]] = C64::new(coupling + asymmetry, 0.0);
        h[[1, 0]] = C64::new(coupling - asymmetry, 0.0);
        h[[1, 1]] = C64::new(detuning, 0.0);
        h
    })
}

/// Closed-form quantities of one band in the PT-symmetric regime.
#[derive(Debug, Clone)]
pub struct TwoLevelClosedForms {
    /// `E = ±sqrt(Δ² + J² − δ²)`.
    pub eigenvalue: f64,
    /// Non-normalized right eigenstate `(-Δ ± sqrt(·), J - δ)`.
    pub right: CVector,
    /// Non-normalized left eigenstate `(-Δ ± sqrt(·), J + δ)`.
    pub left: CVector,
    pub petermann: f64,
    /// Gauge-invariant `A^LR - A^RR` per coordinate (Δ, J, δ).
    pub connection_diff: [C64; 3],
    /// `Ω^LR - Ω^RR = ±i (Δ, J, δ) / (2 (Δ²+J²−δ²)^{3/2})`, purely imaginary.
    pub curvature_diff: [C64; 3],
}

pub fn two_level_closed_forms(p: &TwoLevelParams, band: Band) -> Result<TwoLevelClosedForms> {
    let disc = p.pt_discriminant();
    if disc <= 0.0 {
        return Err(Error::PTBroken(disc));
    }
    let root = disc.sqrt();
    let e = band.sign() * root;
    let right = CVector::from(vec![
        C64::new(-p.detuning + e, 0.0),
        C64::new(p.coupling - p.asymmetry, 0.0),
    ]);
    let left = CVector::from(vec![
        C64::new(-p.detuning + e, 0.0),
        C64::new(p.coupling + p.asymmetry, 0.0),
    ]);
    let dj2 = p.detuning * p.detuning + p.coupling * p.coupling;
    let prefactor = C64::new(0.0, p.asymmetry / 2.0) / (dj2 * e * e);
    let connection_diff = [
        prefactor * (p.detuning * p.asymmetry + p.coupling * e),
        prefactor * (p.coupling * p.asymmetry - p.detuning * e),
        prefactor * (-dj2),
    ];
    let curv_scale = band.sign() / (2.0 * disc * root);
    let curvature_diff = [
        C64::new(0.0, curv_scale * p.detuning),
        C64::new(0.0, curv_scale * p.coupling),
        C64::new(0.0, curv_scale * p.asymmetry),
    ];
    Ok(TwoLevelClosedForms {
        eigenvalue: e,
        right,
        left,
        petermann: dj2 / disc,
        connection_diff,
        curvature_diff,
    })
}

/// Analytic geometric amplification for a sweep of the detuning alone, at
/// fixed `J` and `δ`.
///
/// In terms of `w(Δ) = δΔ / (J sqrt(Δ²+J²−δ²))` the result is
/// `A_g = (1 ∓ w_T)/(1 ∓ w_0)` with the upper sign for the upper band. On
/// `Δ ≥ 0` this is `(1 ∓ sqrt(1 − K_T/K⁰))/(1 ∓ sqrt(1 − K_0/K⁰))` with
/// `K⁰ = J²/(J²−δ²)` the Petermann factor at Δ = 0; the signed form stays
/// exact when the sweep changes the sign of Δ.
pub fn two_level_ag_along_detuning(
    coupling: f64,
    asymmetry: f64,
    detuning_from: f64,
    detuning_to: f64,
    band: Band,
) -> Result<f64> {
    let disc_at = |detuning: f64| {
        TwoLevelParams::new(detuning, coupling, asymmetry).pt_discriminant()
    };
    let min_disc = if detuning_from * detuning_to <= 0.0 {
        disc_at(0.0)
    } else {
        disc_at(detuning_from).min(disc_at(detuning_to))
    };
    if min_disc <= 0.0 {
        return Err(Error::PTBroken(min_disc));
    }
    if coupling * coupling - asymmetry * asymmetry <= 0.0 {
        return Err(Error::DomainError(
            "J² must exceed δ² for the analytic detuning integral".into(),
        ));
    }
    let w = |detuning: f64| {
        asymmetry * detuning / (coupling * disc_at(detuning).sqrt())
    };
    let s = band.sign();
    Ok((1.0 - s * w(detuning_to)) / (1.0 - s * w(detuning_from)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_matches_direct_substitution() {
        let fam = two_level_family();
        let h = fam.eval(&[0.0, 0.0, 0.0].into());
        assert!(h.iter().all(|z| z.norm() == 0.0));
        let h = fam.eval(&[0.0, 5.0, 3.0].into());
        assert_eq!(h[[0, 1]], C64::new(8.0, 0.0));
        assert_eq!(h[[1, 0]], C64::new(2.0, 0.0));
        let h = fam.eval(&[1.0, 5.0, 2.0].into());
        assert_eq!(h[[0, 0]], C64::new(-1.0, 0.0));
        assert_eq!(h[[0, 1]], C64::new(7.0, 0.0));
        assert_eq!(h[[1, 0]], C64::new(3.0, 0.0));
        assert_eq!(h[[1, 1]], C64::new(1.0, 0.0));
    }

    #[test]
    fn closed_forms_at_reference_points() {
        let cf = two_level_closed_forms(&TwoLevelParams::new(0.0, 5.0, 0.0), Band::Upper).unwrap();
        assert!((cf.eigenvalue - 5.0).abs() < 1e-14);
        assert!((cf.petermann - 1.0).abs() < 1e-14);
        assert!(cf.connection_diff.iter().all(|z| z.norm() == 0.0));
        assert!((cf.curvature_diff[1] - C64::new(0.0, 5.0 / 250.0)).norm() < 1e-15);

        let cf = two_level_closed_forms(&TwoLevelParams::new(0.0, 5.0, 3.0), Band::Lower).unwrap();
        assert!((cf.eigenvalue + 4.0).abs() < 1e-14);
        assert!((cf.petermann - 25.0 / 16.0).abs() < 1e-14);

        let cf = two_level_closed_forms(&TwoLevelParams::new(1.0, 5.0, 2.0), Band::Upper).unwrap();
        let scale = 1.0 / (2.0 * 22.0f64.powf(1.5));
        for (z, c) in cf.curvature_diff.iter().zip([1.0, 5.0, 2.0]) {
            assert!((z - C64::new(0.0, scale * c)).norm() < 1e-15);
        }
    }

    #[test]
    fn pt_broken_rejected() {
        assert!(matches!(
            two_level_closed_forms(&TwoLevelParams::new(0.0, 3.0, 4.0), Band::Upper),
            Err(Error::PTBroken(_))
        ));
        assert!(!TwoLevelParams::new(0.0, 3.0, 4.0).is_pt_symmetric());
    }

    #[test]
    fn detuning_integral_closed_form() {
        assert!((two_level_ag_along_detuning(5.0, 3.0, 2.0, 2.0, Band::Upper).unwrap() - 1.0)
            .abs()
            < 1e-15);
        let up = two_level_ag_along_detuning(5.0, 3.0, 0.0, 4.0, Band::Upper).unwrap();
        assert!((up - (1.0 - 0.18f64.sqrt())).abs() < 1e-12, "up = {up}");
        let down = two_level_ag_along_detuning(5.0, 3.0, 0.0, 4.0, Band::Lower).unwrap();
        assert!((down - (1.0 + 0.18f64.sqrt())).abs() < 1e-12);
        assert!(matches!(
            two_level_ag_along_detuning(3.0, 4.0, 0.0, 1.0, Band::Upper),
            Err(Error::PTBroken(_))
        ));
        assert!(matches!(
            two_level_ag_along_detuning(3.0, 3.0, 5.0, 6.0, Band::Upper),
            Err(Error::DomainError(_))
        ));
    }
}
