//! Complex eigendecomposition with paired left/right eigenvectors.
//!
//! Left eigenvectors are obtained from an independent eigendecomposition of
//! `H†` and paired to the right ones through conjugated eigenvalues; inverting
//! the right-eigenvector matrix would amplify exactly the ill-conditioning
//! (large Petermann factors) this crate is built to measure. Eigenvalue
//! clusters within `gap_tol` are re-paired by eigenvector overlap; if the
//! left/right overlap matrix of a cluster cannot be made diagonally dominant
//! the matrix is reported as defective (near an exceptional point).

use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, fro_norm, inner, is_finite_mat, norm};
use crate::parameter::{HamiltonianFamily, ParameterPoint, Path};
use crate::{CMatrix, CVector};

/// One eigenvalue with its right and left eigenvectors.
///
/// `left` is stored as the ket `|L>`; the linear functional acting on states
/// is its conjugate transpose. No normalization is imposed beyond nonzero
/// norms.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalue: C64,
    pub right: CVector,
    pub left: CVector,
    /// Max normalized off-diagonal overlap `|<L_i|R_j>|/(|L_i||R_j|)` of this
    /// pair's row and column in the paired system.
    pub biorth_residual: f64,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.right.len()
    }

    /// `<L|R>` of the pair.
    pub fn lr_overlap(&self) -> C64 {
        inner(&self.left, &self.right)
    }
}

/// A full paired spectrum, sorted lexicographically by `(-Im E, Re E)` so the
/// adiabatically dominant band (largest imaginary part) comes first.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub pairs: Vec<EigenPair>,
    /// Smallest pairwise eigenvalue distance (infinite for dim 1).
    pub min_gap: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn select(&self, selector: &BandSelector) -> Result<usize> {
        selector.pick(self)
    }
}

/// Picks one pair out of an [`EigenSystem`], by sorted index or by eigenvalue
/// target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandSelector {
    Index(usize),
    Nearest(C64),
}

impl BandSelector {
    pub fn pick(&self, system: &EigenSystem) -> Result<usize> {
        match *self {
            Self::Index(i) => {
                if i < system.pairs.len() {
                    Ok(i)
                } else {
                    Err(Error::InvalidInput(format!(
                        "band index {i} out of range for dim {}",
                        system.pairs.len()
                    )))
                }
            }
            Self::Nearest(target) => {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (i, p) in system.pairs.iter().enumerate() {
                    let d = (p.eigenvalue - target).norm();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                Ok(best)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Eigenvalue cluster tolerance, relative to `|H|_F`.
    pub gap_tol: f64,
    /// Minimal successive overlap for band continuity tracking.
    pub continuity_threshold: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            continuity_threshold: 0.5,
        }
    }
}

/// `|<a|b>| / (|a||b|)`.
pub fn normalized_overlap(a: &CVector, b: &CVector) -> f64 {
    inner(a, b).norm() / (norm(a) * norm(b))
}

/// Relative eigen-equation residuals `(|H r - E r|, |H† l - E* l|)`, each
/// scaled by `|H|_F` times the vector norm.
pub fn eigen_residuals(h: &CMatrix, pair: &EigenPair) -> (f64, f64) {
    let scale = fro_norm(h).max(f64::MIN_POSITIVE);
    let r = &h.dot(&pair.right) - &pair.right.mapv(|z| z * pair.eigenvalue);
    let hl = adjoint(h).dot(&pair.left);
    let l = &hl - &pair.left.mapv(|z| z * pair.eigenvalue.conj());
    (
        norm(&r) / (scale * norm(&pair.right)),
        norm(&l) / (scale * norm(&pair.left)),
    )
}

/// Full biorthogonal eigendecomposition with default options.
pub fn eig_full(h: &CMatrix) -> Result<EigenSystem> {
    eig_full_with(h, &SpectralOptions::default())
}

pub fn eig_full_with(h: &CMatrix, opts: &SpectralOptions) -> Result<EigenSystem> {
    if h.nrows() != h.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
    }
    if !is_finite_mat(h) {
        return Err(Error::NonFinite("matrix"));
    }
    let (evals_r, vecs_r) = h.eig()?;
    let (evals_l, vecs_l) = adjoint(h).eig()?;
    let rights: Vec<(C64, CVector)> = evals_r
        .iter()
        .enumerate()
        .map(|(j, &e)| (e, vecs_r.column(j).to_owned()))
        .collect();
    let lefts: Vec<(C64, CVector)> = evals_l
        .iter()
        .enumerate()
        .map(|(j, &e)| (e, vecs_l.column(j).to_owned()))
        .collect();
    let gap_scale = fro_norm(h);
    pair_impl(&rights, &lefts, opts, gap_scale, false)
}

/// Pair independently computed right and left eigendata.
///
/// `lefts` carries the eigendata of `H†` as returned by the solver, i.e. with
/// eigenvalues that conjugate to those of `H`. Pairing is greedy on
/// `|E_i - conj(mu_j)|`; an ambiguous crossing (two pairings equal in total
/// distance to within 1e-12) is an error here, while [`eig_full`] resolves
/// such clusters by eigenvector overlap.
pub fn pair_left_right(rights: &[(C64, CVector)], lefts: &[(C64, CVector)]) -> Result<EigenSystem> {
    let scale = rights
        .iter()
        .map(|(e, _)| e.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    pair_impl(rights, lefts, &SpectralOptions::default(), scale, true)
}

fn pair_impl(
    rights: &[(C64, CVector)],
    lefts: &[(C64, CVector)],
    opts: &SpectralOptions,
    gap_scale: f64,
    fail_on_ambiguous: bool,
) -> Result<EigenSystem> {
    let n = rights.len();
    if n == 0 || lefts.len() != n {
        return Err(Error::InvalidInput(
            "left/right eigendata counts differ or are empty".into(),
        ));
    }
    for (e, v) in rights.iter().chain(lefts.iter()) {
        if !e.re.is_finite() || !e.im.is_finite() || !crate::linalg::is_finite_vec(v) {
            return Err(Error::NonFinite("eigendata"));
        }
        if norm(v) == 0.0 {
            return Err(Error::InvalidInput("zero eigenvector supplied".into()));
        }
    }

    let gap_tol = opts.gap_tol * gap_scale.max(f64::MIN_POSITIVE);
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_gap = min_gap.min((rights[i].0 - rights[j].0).norm());
        }
    }

    // Greedy nearest-eigenvalue assignment right i <- left j.
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, (e, _)) in rights.iter().enumerate() {
        for (j, (mu, _)) in lefts.iter().enumerate() {
            edges.push(((*e - mu.conj()).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    let mut left_of = vec![usize::MAX; n];
    let mut used_left = vec![false; n];
    let mut assigned = 0usize;
    for &(d, i, j) in &edges {
        if left_of[i] != usize::MAX || used_left[j] {
            continue;
        }
        if fail_on_ambiguous {
            // A crossing: another free left j' for this right and another free
            // right i' for this left, at indistinguishable distance.
            let alt_left = (0..n).any(|j2| {
                j2 != j && !used_left[j2] && ((rights[i].0 - lefts[j2].0.conj()).norm() - d).abs() < 1e-12
            });
            let alt_right = (0..n).any(|i2| {
                i2 != i
                    && left_of[i2] == usize::MAX
                    && ((rights[i2].0 - lefts[j].0.conj()).norm() - d).abs() < 1e-12
            });
            if alt_left && alt_right {
                return Err(Error::PairingAmbiguous(format!(
                    "eigenvalue {} admits multiple pairings at distance {d:.3e}",
                    rights[i].0
                )));
            }
        }
        left_of[i] = j;
        used_left[j] = true;
        assigned += 1;
        if assigned == n {
            break;
        }
    }

    // Cluster nearly degenerate right eigenvalues and re-pair the lefts inside
    // each cluster by overlap.
    let clusters = eigenvalue_clusters(rights, gap_tol);
    for cluster in clusters.iter().filter(|c| c.len() > 1) {
        let left_pool: Vec<usize> = cluster.iter().map(|&i| left_of[i]).collect();
        let mut ov = vec![vec![0.0f64; cluster.len()]; left_pool.len()];
        for (a, &lj) in left_pool.iter().enumerate() {
            for (b, &ri) in cluster.iter().enumerate() {
                ov[a][b] = normalized_overlap(&lefts[lj].1, &rights[ri].1);
            }
        }
        // Greedy max-overlap assignment within the cluster.
        let mut cells: Vec<(f64, usize, usize)> = Vec::new();
        for (a, row) in ov.iter().enumerate() {
            for (b, &o) in row.iter().enumerate() {
                cells.push((o, a, b));
            }
        }
        cells.sort_by(|x, y| (y.0, x.1, x.2).partial_cmp(&(x.0, y.1, y.2)).unwrap());
        let mut a_used = vec![false; left_pool.len()];
        let mut b_left = vec![usize::MAX; cluster.len()];
        for &(_, a, b) in &cells {
            if a_used[a] || b_left[b] != usize::MAX {
                continue;
            }
            a_used[a] = true;
            b_left[b] = left_pool[a];
        }
        for (b, &ri) in cluster.iter().enumerate() {
            left_of[ri] = b_left[b];
        }
    }

    // Normalized biorthogonality matrix and diagonal-dominance validation.
    let right_norms: Vec<f64> = rights.iter().map(|(_, v)| norm(v)).collect();
    let left_norms: Vec<f64> = (0..n).map(|i| norm(&lefts[left_of[i]].1)).collect();
    let mut g = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = inner(&lefts[left_of[i]].1, &rights[j].1).norm()
                / (left_norms[i] * right_norms[j]);
        }
    }
    let mut residual = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if g[i][j] >= g[i][i] || g[i][j] >= g[j][j] {
                return Err(Error::DefectiveMatrix(format!(
                    "biorthogonality matrix not diagonally dominant \
                     (|G[{i},{j}]| = {:.3e} vs diag {:.3e}/{:.3e}); min eigenvalue gap {min_gap:.3e}",
                    g[i][j], g[i][i], g[j][j]
                )));
            }
            residual[i] = residual[i].max(g[i][j]).max(g[j][i]);
        }
    }

    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|i| EigenPair {
            eigenvalue: rights[i].0,
            right: rights[i].1.clone(),
            left: lefts[left_of[i]].1.clone(),
            biorth_residual: residual[i],
        })
        .collect();
    pairs.sort_by(|a, b| {
        (-a.eigenvalue.im, a.eigenvalue.re)
            .partial_cmp(&(-b.eigenvalue.im, b.eigenvalue.re))
            .unwrap()
    });
    Ok(EigenSystem { pairs, min_gap })
}

fn eigenvalue_clusters(rights: &[(C64, CVector)], gap_tol: f64) -> Vec<Vec<usize>> {
    let n = rights.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (rights[i].0 - rights[j].0).norm() <= gap_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Whether the tracked eigenvalue has the largest imaginary part; an all-real
/// (tied) spectrum counts as satisfied.
pub fn largest_im_flag(eigenvalues: &[C64], tracked: usize) -> bool {
    let scale = eigenvalues.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
    let tie_tol = 1e-9 * scale;
    let max_im = eigenvalues.iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max);
    eigenvalues[tracked].im >= max_im - tie_tol
}

/// One band followed along a parameter path by eigenvector-overlap continuity.
#[derive(Debug, Clone)]
pub struct TrackedBand {
    pub points: Vec<(ParameterPoint, EigenPair)>,
    /// Successive normalized overlaps `|<R_k|R_{k+1}>|/(|R_k||R_{k+1}|)`.
    pub overlaps: Vec<f64>,
    /// Per-point adiabaticity flag: tracked eigenvalue has the largest
    /// imaginary part in the instantaneous spectrum.
    pub largest_im_flags: Vec<bool>,
    /// Smallest distance from the tracked eigenvalue to the rest of the
    /// spectrum, over all points.
    pub min_band_gap: f64,
}

pub fn track_band(
    family: &HamiltonianFamily,
    path: &Path,
    start: &BandSelector,
) -> Result<TrackedBand> {
    track_band_with(family, path, start, &SpectralOptions::default())
}

pub fn track_band_with(
    family: &HamiltonianFamily,
    path: &Path,
    start: &BandSelector,
    opts: &SpectralOptions,
) -> Result<TrackedBand> {
    let samples = path.samples();
    track_band_points(family, &samples, start, opts)
}

/// Track a band through an explicit point sequence.
pub fn track_band_points(
    family: &HamiltonianFamily,
    points: &[ParameterPoint],
    start: &BandSelector,
    opts: &SpectralOptions,
) -> Result<TrackedBand> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "band tracking needs at least two points".into(),
        ));
    }
    let mut out = Vec::with_capacity(points.len());
    let mut overlaps = Vec::with_capacity(points.len() - 1);
    let mut flags = Vec::with_capacity(points.len());
    let mut min_band_gap = f64::INFINITY;
    let mut prev_right: Option<CVector> = None;
    for (step, point) in points.iter().enumerate() {
        let system = eig_full_with(&family.eval(point), opts)?;
        let idx = match &prev_right {
            None => start.pick(&system)?,
            Some(prev) => {
                let (idx, best) = best_overlap_index(prev, &system);
                if best < opts.continuity_threshold {
                    return Err(Error::BandSwap {
                        step,
                        overlap: best,
                        threshold: opts.continuity_threshold,
                    });
                }
                overlaps.push(best);
                idx
            }
        };
        let evs = system.eigenvalues();
        flags.push(largest_im_flag(&evs, idx));
        for (j, e) in evs.iter().enumerate() {
            if j != idx {
                min_band_gap = min_band_gap.min((*e - evs[idx]).norm());
            }
        }
        let pair = system.pairs[idx].clone();
        prev_right = Some(pair.right.clone());
        out.push((point.clone(), pair));
    }
    Ok(TrackedBand {
        points: out,
        overlaps,
        largest_im_flags: flags,
        min_band_gap,
    })
}

/// Index of the pair whose right eigenvector best overlaps `prev`, with the
/// overlap value. Ties resolve to the lowest index, deterministically.
pub fn best_overlap_index(prev: &CVector, system: &EigenSystem) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_ov = -1.0f64;
    for (j, p) in system.pairs.iter().enumerate() {
        let ov = normalized_overlap(prev, &p.right);
        if ov > best_ov {
            best_ov = ov;
            best = j;
        }
    }
    (best, best_ov)
}
