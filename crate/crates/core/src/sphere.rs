//! Regularized list sphere decoder over binary lattice coordinates.
//!
//! The underdetermined row `y = H' u + z` (one equation, `L` unknowns) is
//! augmented to `[H'; αI]`, factored by modified Gram-Schmidt, and searched
//! depth first with Schnorr-Euchner child ordering. Tree level `k` (1-based)
//! assigns coordinate `u[k-1]`; the root is level `L`.

use rand::Rng;
use thiserror::Error;

use crate::channel::{complex_gaussian, EffectiveRow};
use crate::C64;

/// Default tail probability of the chi-square radius.
pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("list capacity must be at least 1")]
    EmptyList,
    #[error("PAM entry {0} is not an odd integer within ±(M-1)")]
    PamEntry(i64),
    #[error("PAM order {0} is not a power of two")]
    PamOrder(usize),
    #[error("tail probability {0} outside (0, 1)")]
    Epsilon(f64),
}

/// Binary expansion of `M`-PAM entries: `u = Γ u'` with weights
/// `[2^{q-1}, …, 2, 1]` and `u' ∈ {-1,+1}^q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PamExpansion {
    pub weights: Vec<i64>,
    /// `q` signs per input entry, concatenated.
    pub signs: Vec<i8>,
}

pub fn pam_to_bpsk(u_pam: &[i64], m_pam: usize) -> Result<PamExpansion, SphereError> {
    if m_pam < 2 || !m_pam.is_power_of_two() {
        return Err(SphereError::PamOrder(m_pam));
    }
    let q = m_pam.trailing_zeros() as usize;
    let weights: Vec<i64> = (0..q).rev().map(|i| 1i64 << i).collect();
    let top = m_pam as i64 - 1;
    let mut signs = Vec::with_capacity(u_pam.len() * q);
    for &v in u_pam {
        if v % 2 == 0 || v.abs() > top {
            return Err(SphereError::PamEntry(v));
        }
        let mut rest = v;
        for &w in &weights {
            // The remainder stays odd, so it is never zero here.
            let s: i8 = if rest > 0 { 1 } else { -1 };
            rest -= w * i64::from(s);
            signs.push(s);
        }
    }
    Ok(PamExpansion { weights, signs })
}

/// `[H'; αI] = Q R` with `R` upper triangular and real positive diagonal.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    l: usize,
    alpha: f64,
    /// `Q_1`, `(L+1)×L` row-major.
    q: Vec<C64>,
    /// `R`, `L×L` row-major.
    r: Vec<C64>,
    y_reduced: Vec<C64>,
    /// `‖ỹ‖² - ‖y'‖²`, the part of the augmented distance outside span(Q_1).
    residual: f64,
}

/// Augments one effective row and factors it by modified Gram-Schmidt.
pub fn augment_and_factor(row: &EffectiveRow, y_n: C64, alpha: f64) -> AugmentedSystem {
    assert!(alpha > 0.0, "regularization weight must be positive");
    let l = row.len();
    let rows = l + 1;
    // Columns of H̃.
    let mut cols: Vec<Vec<C64>> = (0..l)
        .map(|j| {
            let mut c = vec![C64::new(0.0, 0.0); rows];
            c[0] = row.coeffs[j];
            c[j + 1] = C64::new(alpha, 0.0);
            c
        })
        .collect();
    let mut r = vec![C64::new(0.0, 0.0); l * l];
    for j in 0..l {
        let norm = cols[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        r[j * l + j] = C64::new(norm, 0.0);
        cols[j].iter_mut().for_each(|v| *v /= norm);
        let (done, rest) = cols.split_at_mut(j + 1);
        let qj = &done[j];
        for (off, c) in rest.iter_mut().enumerate() {
            let dot: C64 = qj.iter().zip(c.iter()).map(|(a, b)| a.conj() * b).sum();
            r[j * l + j + 1 + off] = dot;
            c.iter_mut().zip(qj).for_each(|(v, &qv)| *v -= dot * qv);
        }
    }
    let mut q = vec![C64::new(0.0, 0.0); rows * l];
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            q[i * l + j] = v;
        }
    }
    // ỹ = [y_n; 0], so Q_1^† ỹ only sees the first row of Q_1.
    let y_reduced: Vec<C64> = (0..l).map(|j| q[j].conj() * y_n).collect();
    let residual = (y_n.norm_sqr() - y_reduced.iter().map(|v| v.norm_sqr()).sum::<f64>()).max(0.0);
    AugmentedSystem {
        l,
        alpha,
        q,
        r,
        y_reduced,
        residual,
    }
}

impl AugmentedSystem {
    /// Tree depth `L`.
    pub fn depth(&self) -> usize {
        self.l
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r(&self, i: usize, j: usize) -> C64 {
        self.r[i * self.l + j]
    }

    pub fn q(&self, i: usize, j: usize) -> C64 {
        self.q[i * self.l + j]
    }

    pub fn y_reduced(&self) -> &[C64] {
        &self.y_reduced
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `‖y' - R u‖²`.
    pub fn reduced_distance(&self, u: &[i8]) -> f64 {
        (0..self.l)
            .map(|i| {
                let ru: C64 = (i..self.l).map(|j| self.r(i, j) * f64::from(u[j])).sum();
                (self.y_reduced[i] - ru).norm_sqr()
            })
            .sum()
    }

    /// `‖ỹ - H̃ u‖² = ‖y' - R u‖² + residual`.
    pub fn augmented_distance(&self, u: &[i8]) -> f64 {
        self.reduced_distance(u) + self.residual
    }

    /// `|y - H' u|²` recovered from a reduced distance: the regularizer adds
    /// the constant `α² L` for binary `u`.
    pub fn data_distance(&self, reduced: f64) -> f64 {
        reduced + self.residual - self.alpha * self.alpha * self.l as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusPolicy {
    Infinite,
    /// Radius covering the transmitted point with probability `1 - ε`.
    ChiSquare {
        epsilon: f64,
        sigma2: f64,
    },
}

/// Initial squared radius. Chi-square mode: `(σ²/2)·F⁻¹(1-ε; 2) + α² L`
/// with `F⁻¹(1-ε; 2) = -2 ln ε`.
pub fn initial_radius(policy: RadiusPolicy, l: usize, alpha: f64) -> Result<f64, SphereError> {
    match policy {
        RadiusPolicy::Infinite => Ok(f64::INFINITY),
        RadiusPolicy::ChiSquare { epsilon, sigma2 } => {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(SphereError::Epsilon(epsilon));
            }
            Ok(-sigma2 * epsilon.ln() + alpha * alpha * l as f64)
        }
    }
}

/// Fraction of `trials` noise draws with `|z|² + α² L` above the chi-square
/// radius.
pub fn chi2_coverage_test<R: Rng + ?Sized>(
    sigma2: f64,
    alpha: f64,
    l: usize,
    epsilon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64, SphereError> {
    let c = initial_radius(RadiusPolicy::ChiSquare { epsilon, sigma2 }, l, alpha)?;
    let offset = alpha * alpha * l as f64;
    let misses = (0..trials)
        .filter(|_| complex_gaussian(rng, sigma2).norm_sqr() + offset > c)
        .count();
    Ok(misses as f64 / trials as f64)
}

/// Bounded list of the best lattice points found so far.
#[derive(Debug, Clone)]
pub struct CandidateList {
    capacity: usize,
    entries: Vec<(Vec<i8>, f64)>,
    radius: f64,
}

impl CandidateList {
    pub fn new(capacity: usize, radius: f64) -> Result<Self, SphereError> {
        if capacity == 0 {
            return Err(SphereError::EmptyList);
        }
        Ok(CandidateList {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            radius,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Entries in insertion order, as `(u, ‖y' - R u‖²)`.
    pub fn entries(&self) -> &[(Vec<i8>, f64)] {
        &self.entries
    }

    fn worst(&self) -> (usize, f64) {
        self.entries
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |w, (i, e)| if e.1 > w.1 { (i, e.1) } else { w })
    }

    /// Inserts a leaf. Returns whether the radius was recomputed. A leaf that
    /// does not strictly beat the worst entry of a full list is dropped.
    fn insert(&mut self, u: &[i8], dist: f64) -> bool {
        if !self.is_full() {
            self.entries.push((u.to_vec(), dist));
            if self.is_full() {
                self.radius = self.worst().1;
                return true;
            }
            return false;
        }
        let (idx, worst) = self.worst();
        if dist >= worst {
            return false;
        }
        self.entries[idx] = (u.to_vec(), dist);
        self.radius = self.worst().1;
        true
    }
}

/// Visited nodes per level and radius updates of one search.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// `visited[k-1]` counts nodes at level `k` (level 1 holds the leaves).
    pub visited: Vec<u64>,
    pub radius_updates: u64,
}

impl SearchStats {
    pub fn new(l: usize) -> Self {
        SearchStats {
            visited: vec![0; l],
            radius_updates: 0,
        }
    }

    pub fn total_visited(&self) -> u64 {
        self.visited.iter().sum()
    }

    /// `Σ_k (2k + 7) N_k`.
    pub fn flops(&self) -> u64 {
        self.visited
            .iter()
            .enumerate()
            .map(|(i, &v)| (2 * (i as u64 + 1) + 7) * v)
            .sum()
    }

    /// Adds another search's counts level by level.
    pub fn merge(&mut self, other: &SearchStats) {
        if self.visited.len() < other.visited.len() {
            self.visited.resize(other.visited.len(), 0);
        }
        for (a, b) in self.visited.iter_mut().zip(&other.visited) {
            *a += b;
        }
        self.radius_updates += other.radius_updates;
    }
}

/// Partial-path admissibility check, consulted each time the coordinates
/// `u[block·D..]` of a whole layer block have been assigned.
pub trait NodeFilter {
    fn admit(&self, block: usize, u: &[i8]) -> bool;
}

/// Admits every path.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFilter;

impl NodeFilter for NoFilter {
    fn admit(&self, _block: usize, _u: &[i8]) -> bool {
        true
    }
}

/// One node expansion, recorded by [`lsd_search_traced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub level: usize,
    pub sign: i8,
    pub increment: f64,
}

/// Depth-first list sphere decoding of `sys`.
///
/// `block` is the number of coordinates per layer; the filter is consulted
/// at levels that are multiples of `block` (counting from 0 at the leaves).
pub fn lsd_search<F: NodeFilter + ?Sized>(
    sys: &AugmentedSystem,
    radius: f64,
    t_max: usize,
    block: usize,
    filter: &F,
) -> Result<(CandidateList, SearchStats), SphereError> {
    search(sys, radius, t_max, block, filter, None)
}

/// [`lsd_search`] that also records every distance increment computed.
pub fn lsd_search_traced<F: NodeFilter + ?Sized>(
    sys: &AugmentedSystem,
    radius: f64,
    t_max: usize,
    block: usize,
    filter: &F,
) -> Result<(CandidateList, SearchStats, Vec<TraceStep>), SphereError> {
    let mut trace = Vec::new();
    let (list, stats) = search(sys, radius, t_max, block, filter, Some(&mut trace))?;
    Ok((list, stats, trace))
}

// Sign with ties going to -1.
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

fn search<F: NodeFilter + ?Sized>(
    sys: &AugmentedSystem,
    radius: f64,
    t_max: usize,
    block: usize,
    filter: &F,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<(CandidateList, SearchStats), SphereError> {
    let l = sys.l;
    let mut list = CandidateList::new(t_max, radius)?;
    let mut stats = SearchStats::new(l);
    if l == 0 {
        return Ok((list, stats));
    }
    let mut u = vec![0i8; l];
    // Per level: PED above it, interference-cancelled target, children tried.
    let mut ped_above = vec![0.0f64; l + 1];
    let mut target = vec![C64::new(0.0, 0.0); l];
    let mut tried = vec![0u8; l];
    let mut first = vec![0i8; l];

    let centre = |u: &[i8], i: usize| -> C64 {
        let mut t = sys.y_reduced[i];
        for j in i + 1..l {
            t -= sys.r(i, j) * f64::from(u[j]);
        }
        t
    };

    let mut i = l - 1;
    target[i] = centre(&u, i);
    first[i] = sign(target[i].re);
    tried[i] = 0;
    loop {
        if tried[i] == 2 {
            // Both children done: backtrack.
            if i == l - 1 {
                break;
            }
            i += 1;
            continue;
        }
        let s = if tried[i] == 0 { first[i] } else { -first[i] };
        tried[i] += 1;
        let inc = (target[i] - sys.r(i, i) * f64::from(s)).norm_sqr();
        stats.visited[i] += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep {
                level: i + 1,
                sign: s,
                increment: inc,
            });
        }
        let ped = ped_above[i + 1] + inc;
        if ped > list.radius() {
            // The sibling's increment is no smaller, so it is out too.
            tried[i] = 2;
            continue;
        }
        u[i] = s;
        if block > 0 && i.is_multiple_of(block) && !filter.admit(i / block, &u) {
            continue;
        }
        if i == 0 {
            if list.insert(&u, ped) {
                stats.radius_updates += 1;
            }
            continue;
        }
        ped_above[i] = ped;
        i -= 1;
        target[i] = centre(&u, i);
        first[i] = sign(target[i].re);
        tried[i] = 0;
    }
    Ok((list, stats))
}
