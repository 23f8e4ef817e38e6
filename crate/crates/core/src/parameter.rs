//! Parameter-space primitives: points, Hamiltonian families, and paths.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::CMatrix;

/// A point in the real parameter space (dimension 1 to 3 in practice).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub coords: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self {
            coords: coords.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn get(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Copy with `coords[axis]` shifted by `dh`.
    pub fn shifted(&self, axis: usize, dh: f64) -> Self {
        let mut c = self.coords.clone();
        c[axis] += dh;
        Self { coords: c }
    }

    pub fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x + (y - x) * t)
            .collect();
        Self { coords }
    }

    pub fn dist(a: &Self, b: &Self) -> f64 {
        a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl<const N: usize> From<[f64; N]> for ParameterPoint {
    fn from(coords: [f64; N]) -> Self {
        Self {
            coords: coords.to_vec(),
        }
    }
}

/// A map from parameter points to Hamiltonian matrices, with metadata.
#[derive(Clone)]
pub struct HamiltonianFamily {
    label: String,
    dim: usize,
    param_dim: usize,
    eval: Arc<dyn Fn(&ParameterPoint) -> CMatrix + Send + Sync>,
}

impl fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .finish()
    }
}

impl HamiltonianFamily {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        param_dim: usize,
        eval: impl Fn(&ParameterPoint) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            param_dim,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, point: &ParameterPoint) -> CMatrix {
        assert_eq!(
            point.dim(),
            self.param_dim,
            "parameter point dimension mismatch for family `{}`",
            self.label
        );
        let h = (self.eval)(point);
        debug_assert_eq!(h.nrows(), self.dim);
        debug_assert_eq!(h.ncols(), self.dim);
        h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Geometric curve in parameter space with a discretization count.
///
/// `at(s)` parametrizes the curve by `s` in `[0, 1]`: arc length for
/// polylines, angle fraction for circular arcs. `samples()` returns `n_steps`
/// uniformly spaced points including both endpoints.
#[derive(Debug, Clone)]
pub enum Path {
    Polyline {
        waypoints: Vec<ParameterPoint>,
        n_steps: usize,
    },
    CircularArc {
        center: ParameterPoint,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        plane: (usize, usize),
        n_steps: usize,
    },
}

impl Path {
    pub fn polyline(waypoints: Vec<ParameterPoint>, n_steps: usize) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput(
                "polyline needs at least two waypoints".into(),
            ));
        }
        if n_steps < 2 {
            return Err(Error::InvalidInput("path needs n_steps >= 2".into()));
        }
        if waypoints.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("path waypoints"));
        }
        let d = waypoints[0].dim();
        if waypoints.iter().any(|w| w.dim() != d) {
            return Err(Error::InvalidInput(
                "polyline waypoints have mixed dimensions".into(),
            ));
        }
        for (a, b) in waypoints.iter().zip(waypoints.iter().skip(1)) {
            if ParameterPoint::dist(a, b) == 0.0 {
                return Err(Error::InvalidInput(
                    "consecutive polyline waypoints coincide".into(),
                ));
            }
        }
        Ok(Self::Polyline { waypoints, n_steps })
    }

    /// Straight segment between two points.
    pub fn line(from: ParameterPoint, to: ParameterPoint, n_steps: usize) -> Result<Self> {
        Self::polyline(vec![from, to], n_steps)
    }

    pub fn arc(
        center: ParameterPoint,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        plane: (usize, usize),
        n_steps: usize,
    ) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::InvalidInput("path needs n_steps >= 2".into()));
        }
        if !center.is_finite() || !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidInput("arc center/radius invalid".into()));
        }
        if start_angle == end_angle {
            return Err(Error::InvalidInput("arc has zero angular extent".into()));
        }
        if plane.0 >= center.dim() || plane.1 >= center.dim() || plane.0 == plane.1 {
            return Err(Error::InvalidInput("arc plane indices invalid".into()));
        }
        Ok(Self::CircularArc {
            center,
            radius,
            start_angle,
            end_angle,
            plane,
            n_steps,
        })
    }

    pub fn n_steps(&self) -> usize {
        match self {
            Self::Polyline { n_steps, .. } | Self::CircularArc { n_steps, .. } => *n_steps,
        }
    }

    pub fn with_n_steps(&self, n_steps: usize) -> Self {
        let mut p = self.clone();
        match &mut p {
            Self::Polyline { n_steps: n, .. } | Self::CircularArc { n_steps: n, .. } => {
                *n = n_steps
            }
        }
        p
    }

    /// Point at curve fraction `s` in `[0, 1]`.
    pub fn at(&self, s: f64) -> ParameterPoint {
        let s = s.clamp(0.0, 1.0);
        match self {
            Self::Polyline { waypoints, .. } => {
                let segs: Vec<f64> = waypoints
                    .iter()
                    .zip(waypoints.iter().skip(1))
                    .map(|(a, b)| ParameterPoint::dist(a, b))
                    .collect();
                let total: f64 = segs.iter().sum();
                let mut target = s * total;
                for (i, len) in segs.iter().enumerate() {
                    if target <= *len || i == segs.len() - 1 {
                        let u = (target / len).clamp(0.0, 1.0);
                        return ParameterPoint::lerp(&waypoints[i], &waypoints[i + 1], u);
                    }
                    target -= len;
                }
                waypoints.last().unwrap().clone()
            }
            Self::CircularArc {
                center,
                radius,
                start_angle,
                end_angle,
                plane,
                ..
            } => {
                let theta = start_angle + (end_angle - start_angle) * s;
                let mut p = center.clone();
                p.coords[plane.0] += radius * theta.cos();
                p.coords[plane.1] += radius * theta.sin();
                p
            }
        }
    }

    /// `n_steps` uniformly spaced points along the curve, endpoints included.
    pub fn samples(&self) -> Vec<ParameterPoint> {
        let n = self.n_steps();
        (0..n)
            .map(|k| self.at(k as f64 / (n - 1) as f64))
            .collect()
    }

    pub fn start(&self) -> ParameterPoint {
        self.at(0.0)
    }

    pub fn end(&self) -> ParameterPoint {
        self.at(1.0)
    }

    pub fn reversed(&self) -> Self {
        match self {
            Self::Polyline { waypoints, n_steps } => {
                let mut w = waypoints.clone();
                w.reverse();
                Self::Polyline {
                    waypoints: w,
                    n_steps: *n_steps,
                }
            }
            Self::CircularArc {
                center,
                radius,
                start_angle,
                end_angle,
                plane,
                n_steps,
            } => Self::CircularArc {
                center: center.clone(),
                radius: *radius,
                start_angle: *end_angle,
                end_angle: *start_angle,
                plane: *plane,
                n_steps: *n_steps,
            },
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Self::Polyline { waypoints, .. } => waypoints
                .iter()
                .zip(waypoints.iter().skip(1))
                .map(|(a, b)| ParameterPoint::dist(a, b))
                .sum(),
            Self::CircularArc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
        }
    }

    pub fn is_closed(&self) -> bool {
        let scale = self.length().max(1e-300);
        ParameterPoint::dist(&self.start(), &self.end()) <= 1e-12 * scale
    }
}

/// Low-discrepancy (Halton) points inside an axis-aligned box; `skip` drops
/// the first entries of the sequence so a seed can shift the sample set.
pub fn halton_points(lo: &[f64], hi: &[f64], n: usize, skip: usize) -> Vec<ParameterPoint> {
    const BASES: [u64; 3] = [2, 3, 5];
    assert_eq!(lo.len(), hi.len());
    assert!(lo.len() <= BASES.len(), "halton_points supports up to 3 dims");
    (0..n)
        .map(|k| {
            let idx = (k + skip + 1) as u64;
            let coords = lo
                .iter()
                .zip(hi)
                .enumerate()
                .map(|(d, (&a, &b))| a + (b - a) * radical_inverse(idx, BASES[d]))
                .collect();
            ParameterPoint { coords }
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * f;
        i /= base;
        f /= base as f64;
    }
    inv
}
