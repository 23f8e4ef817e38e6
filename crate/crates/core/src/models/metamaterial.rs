//! Robotic-metamaterial chain: N coupled oscillators whose dynamical matrix
//! factorizes as `M = Q R`, rewritten as a first-order Schrödinger problem
//! with effective Hamiltonian
//!
//! ```text
//! H = i [ 0   Q ]        H_damped = i [ 0   Q      ]
//!       [ -R  0 ],                    [ -R  -Γ I   ]
//! ```
//!
//! on the (2N−1)-dimensional state (x, p). The coupling blocks are the
//! nonreciprocal SSH pattern `R[n][n] = -a`, `R[n][n+1] = b` (N−1 × N) and
//! `Q[n][n] = -a'`, `Q[n+1][n] = b'` (N × N−1), which pins a single zero mode
//! with exponentially localized right profile `(a/b)^n` and left profile
//! `(a'/b')^n` on the position sites.

use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;

use crate::dynamics::{Schedule, SpeedProfile};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, fro_norm, norm};
use crate::parameter::{HamiltonianFamily, Path};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetamaterialConfig {
    /// Number of position sites N (momentum sites are N−1).
    pub oscillators: usize,
    pub a: C64,
    pub b: C64,
    pub a_prime: C64,
    pub b_prime: C64,
    /// Velocity-damping rate Γ ≥ 0.
    pub damping: f64,
}

impl MetamaterialConfig {
    pub fn new(
        oscillators: usize,
        a: C64,
        b: C64,
        a_prime: C64,
        b_prime: C64,
        damping: f64,
    ) -> Result<Self> {
        if oscillators < 2 {
            return Err(Error::InvalidInput("need at least 2 oscillators".into()));
        }
        if b.norm() == 0.0 || b_prime.norm() == 0.0 {
            return Err(Error::InvalidInput(
                "couplings b and b' must be nonzero".into(),
            ));
        }
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(Error::InvalidInput("damping must be finite and >= 0".into()));
        }
        for z in [a, b, a_prime, b_prime] {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite("couplings"));
            }
        }
        Ok(Self {
            oscillators,
            a,
            b,
            a_prime,
            b_prime,
            damping,
        })
    }

    pub fn momentum_count(&self) -> usize {
        self.oscillators - 1
    }

    pub fn state_dim(&self) -> usize {
        2 * self.oscillators - 1
    }

    /// Nonreciprocity parameter `ε = (ab' - ba')/(ab' + ba')`.
    pub fn nonreciprocity(&self) -> C64 {
        let num = self.a * self.b_prime - self.b * self.a_prime;
        let den = self.a * self.b_prime + self.b * self.a_prime;
        num / den
    }
}

#[derive(Debug, Clone)]
pub struct MetamaterialMatrices {
    /// (N−1) × N block acting on positions.
    pub coupling_r: CMatrix,
    /// N × (N−1) block acting on momenta.
    pub coupling_q: CMatrix,
    /// Undamped effective Hamiltonian, (2N−1) × (2N−1).
    pub hamiltonian: CMatrix,
    /// Effective Hamiltonian with the −iΓ well on the momentum block.
    pub damped: CMatrix,
}

pub fn metamaterial_matrices(cfg: &MetamaterialConfig) -> MetamaterialMatrices {
    let n = cfg.oscillators;
    let np = cfg.momentum_count();
    let mut r = CMatrix::zeros((np, n));
    let mut q = CMatrix::zeros((n, np));
    for k in 0..np {
        r[[k, k]] = -cfg.a;
        r[[k, k + 1]] = cfg.b;
        q[[k, k]] = -cfg.a_prime;
        q[[k + 1, k]] = cfg.b_prime;
    }
    let dim = cfg.state_dim();
    let i = C64::i();
    let mut h = CMatrix::zeros((dim, dim));
    for row in 0..n {
        for col in 0..np {
            h[[row, n + col]] = i * q[[row, col]];
        }
    }
    for row in 0..np {
        for col in 0..n {
            h[[n + row, col]] = -i * r[[row, col]];
        }
    }
    // i · (-Γ) on the momentum diagonal.
    let mut damped = h.clone();
    for k in 0..np {
        damped[[n + k, n + k]] = C64::new(0.0, -cfg.damping);
    }
    MetamaterialMatrices {
        coupling_r: r,
        coupling_q: q,
        hamiltonian: h,
        damped,
    }
}

/// Infinite-system Petermann factor of the zero mode: finite in the stable
/// phase (ξη = 1), divergent in the directionally unstable one. Kept as an
/// explicit sentinel, never a floating-point overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfinitePetermann {
    Finite(f64),
    Unbounded,
}

impl InfinitePetermann {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Self::Unbounded)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZeroModeInfo {
    /// Analytic right zero mode on the full (x, p) state, unit-normalized;
    /// momentum components are exactly zero.
    pub right: CVector,
    /// Analytic left zero mode as a ket, unit-normalized.
    pub left: CVector,
    /// Band gap `2 sqrt((|a|-|b|)(|a'|-|b'|))`; `None` outside the SSH-gapped
    /// configuration where the product is negative.
    pub band_gap: Option<f64>,
    /// ξ = sgn(|b|² − |a|²): +1 localizes the right mode at the near end.
    pub right_localization: i8,
    /// η = sgn(|b'|² − |a'|²).
    pub left_localization: i8,
    pub nonreciprocity: C64,
    pub petermann_infinite: InfinitePetermann,
}

pub fn metamaterial_zero_mode(cfg: &MetamaterialConfig) -> Result<ZeroModeInfo> {
    let n = cfg.oscillators;
    let dim = cfg.state_dim();
    let mut right = CVector::zeros(dim);
    let mut left = CVector::zeros(dim);
    let r_ratio = cfg.a / cfg.b;
    let l_ratio = (cfg.a_prime / cfg.b_prime).conj();
    for site in 1..=n {
        right[site - 1] = r_ratio.powi(site as i32);
        left[site - 1] = l_ratio.powi(site as i32);
    }
    let rn = norm(&right);
    let ln = norm(&left);
    right.mapv_inplace(|z| z / rn);
    left.mapv_inplace(|z| z / ln);

    let da = cfg.a.norm() - cfg.b.norm();
    let dp = cfg.a_prime.norm() - cfg.b_prime.norm();
    let band_gap = if da * dp >= 0.0 {
        Some(2.0 * (da * dp).sqrt())
    } else {
        None
    };
    let xi = sign_of(cfg.b.norm_sqr() - cfg.a.norm_sqr());
    let eta = sign_of(cfg.b_prime.norm_sqr() - cfg.a_prime.norm_sqr());
    let petermann_infinite = if xi as i32 * eta as i32 == 1 {
        let num = (cfg.a * cfg.a_prime - cfg.b * cfg.b_prime).norm_sqr();
        let den = (cfg.a.norm_sqr() - cfg.b.norm_sqr())
            * (cfg.a_prime.norm_sqr() - cfg.b_prime.norm_sqr());
        InfinitePetermann::Finite(num / den)
    } else {
        InfinitePetermann::Unbounded
    };
    Ok(ZeroModeInfo {
        right,
        left,
        band_gap,
        right_localization: xi,
        left_localization: eta,
        nonreciprocity: cfg.nonreciprocity(),
        petermann_infinite,
    })
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Couplings of the constant-rate ramp: `a = a'(1+ε)`, `b = b'(1−ε)`.
pub fn ramp_coupling(a_prime: C64, b_prime: C64, eps: f64) -> (C64, C64) {
    (a_prime * (1.0 + eps), b_prime * (1.0 - eps))
}

/// Band gap of the reciprocal system (ε = 0): `Δ0 = 2 ||a'| - |b'||`.
pub fn reciprocal_band_gap(a_prime: C64, b_prime: C64) -> f64 {
    2.0 * (a_prime.norm() - b_prime.norm()).abs()
}

/// One-parameter family over λ = ε with fixed left couplings, i.e. a fixed
/// left zero mode.
pub fn metamaterial_ramp_family(
    oscillators: usize,
    a_prime: C64,
    b_prime: C64,
    damping: f64,
) -> HamiltonianFamily {
    let dim = 2 * oscillators - 1;
    HamiltonianFamily::new("metamaterial-ramp", dim, 1, move |p| {
        let eps = p.get(0);
        let (a, b) = ramp_coupling(a_prime, b_prime, eps);
        let cfg = MetamaterialConfig::new(oscillators, a, b, a_prime, b_prime, damping)
            .expect("ramp family configuration");
        metamaterial_matrices(&cfg).damped
    })
}

/// Duration of the constant-rate ramp `ε(t) = ε_min + γ Δ0 t` over
/// `[ε_min, ε_max]`.
pub fn ramp_total_time(a_prime: C64, b_prime: C64, eps_min: f64, eps_max: f64, rate: f64) -> f64 {
    (eps_max - eps_min) / (rate * reciprocal_band_gap(a_prime, b_prime))
}

/// Constant-speed schedule for the ε ramp.
pub fn ramp_schedule(
    a_prime: C64,
    b_prime: C64,
    eps_min: f64,
    eps_max: f64,
    rate: f64,
    n_steps: usize,
) -> Result<Schedule> {
    if !(0.0..1.0).contains(&eps_min) || !(0.0..1.0).contains(&eps_max) || eps_max <= eps_min {
        return Err(Error::InvalidInput(
            "ramp needs 0 <= eps_min < eps_max < 1".into(),
        ));
    }
    if rate <= 0.0 {
        return Err(Error::InvalidInput("ramp rate must be positive".into()));
    }
    let path = Path::line([eps_min].into(), [eps_max].into(), n_steps)?;
    Schedule::new(
        path,
        ramp_total_time(a_prime, b_prime, eps_min, eps_max, rate),
        SpeedProfile::Constant,
    )
}

/// Reciprocal family (`a = a'`, `b = b' = b0` real) over λ = (Re a, Im a),
/// with velocity damping Γ to push bulk resonances into the lower half plane.
pub fn metamaterial_complex_a_family(
    oscillators: usize,
    b0: f64,
    damping: f64,
) -> Result<HamiltonianFamily> {
    if b0 == 0.0 || !b0.is_finite() {
        return Err(Error::InvalidInput("b0 must be real nonzero".into()));
    }
    let dim = 2 * oscillators - 1;
    Ok(HamiltonianFamily::new(
        "metamaterial-reciprocal",
        dim,
        2,
        move |p| {
            let a = C64::new(p.get(0), p.get(1));
            let b = C64::new(b0, 0.0);
            let cfg = MetamaterialConfig::new(oscillators, a, b, a, b, damping)
                .expect("reciprocal family configuration");
            metamaterial_matrices(&cfg).damped
        },
    ))
}

/// Effective momenta from velocities via the left inverse of Q:
/// `p = (Q†Q)⁻¹ Q† (dx/dt)`.
pub fn momentum_from_velocity(cfg: &MetamaterialConfig, velocity: &CVector) -> Result<CVector> {
    let n = cfg.oscillators;
    if velocity.len() != n {
        return Err(Error::InvalidInput(format!(
            "velocity must have {n} components"
        )));
    }
    let q = metamaterial_matrices(cfg).coupling_q;
    let qd = adjoint(&q);
    let gram = qd.dot(&q);
    let gram_inv = gram
        .inv()
        .map_err(|e| Error::RankDeficient(format!("Q†Q not invertible: {e}")))?;
    let left_inv = gram_inv.dot(&qd);
    let identity_residual = fro_norm(&(&left_inv.dot(&q) - &crate::linalg::eye(n - 1)));
    if identity_residual > 1e-10 * fro_norm(&q).max(1.0) {
        return Err(Error::RankDeficient(format!(
            "left-inverse identity residual {identity_residual:.3e}"
        )));
    }
    Ok(left_inv.dot(velocity))
}
