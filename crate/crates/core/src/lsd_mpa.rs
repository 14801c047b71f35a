//! List sphere decoding feeding message passing, node pruning, and the
//! decoder variants.

use std::fmt;
use std::str::FromStr;

use log::debug;
use thiserror::Error;

use crate::channel::{effective_row, ChannelError, ChannelRealization};
use crate::codebook::{symbol_index, Codebook, DEFAULT_PROJECTION_TOL};
use crate::factor_graph::FactorGraph;
use crate::mpa::{run_on_hypotheses, LlrOutput, MaxStarMode, ResourceHypotheses};
use crate::sphere::{
    augment_and_factor, initial_radius, lsd_search, CandidateList, NodeFilter, RadiusPolicy, SearchStats, SphereError,
    DEFAULT_EPSILON,
};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("unknown decoder `{0}`")]
    UnknownKind(String),
    #[error("decoder {0} needs a codebook with repeated projections")]
    NeedsLnpCodebook(DecoderKind),
    #[error("list capacity {t_max} exceeds the search space of {space} points")]
    ListCapacity { t_max: usize, space: usize },
    #[error("at least one message passing iteration is required")]
    NoIterations,
    #[error("expected {expected} bit priors, got {got}")]
    PriorLength { expected: usize, got: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecoderKind {
    MaxLogMpa,
    LogMpa,
    LsdMpa,
    NpLsdMpa,
    Lnp,
    LsdLnp,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 6] = [
        DecoderKind::MaxLogMpa,
        DecoderKind::LogMpa,
        DecoderKind::LsdMpa,
        DecoderKind::NpLsdMpa,
        DecoderKind::Lnp,
        DecoderKind::LsdLnp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::MaxLogMpa => "maxlog-mpa",
            DecoderKind::LogMpa => "log-mpa",
            DecoderKind::LsdMpa => "lsd-mpa",
            DecoderKind::NpLsdMpa => "np-lsd-mpa",
            DecoderKind::Lnp => "lnp",
            DecoderKind::LsdLnp => "lsd-lnp",
        }
    }

    /// Resource updates run over a sphere-decoder list.
    pub fn uses_list(self) -> bool {
        matches!(self, DecoderKind::LsdMpa | DecoderKind::NpLsdMpa | DecoderKind::LsdLnp)
    }

    /// Codewords with coinciding projections are merged.
    pub fn uses_groups(self) -> bool {
        matches!(self, DecoderKind::Lnp | DecoderKind::LsdLnp)
    }

    /// Chi-square radius and cross-subcarrier pruning.
    pub fn prunes(self) -> bool {
        matches!(self, DecoderKind::NpLsdMpa | DecoderKind::LsdLnp)
    }

    pub fn mode(self) -> MaxStarMode {
        match self {
            DecoderKind::LogMpa => MaxStarMode::Exact,
            _ => MaxStarMode::MaxLog,
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| DetectError::UnknownKind(s.to_string()))
    }
}

/// Decoder selection plus its tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderVariant {
    pub kind: DecoderKind,
    /// List capacity; ignored by exhaustive kinds.
    pub t_max: usize,
    /// Chi-square tail probability for pruning kinds.
    pub epsilon: f64,
    /// Regularization weight; `None` uses `σ`.
    pub alpha: Option<f64>,
    /// Message passing iterations.
    pub it: usize,
}

impl DecoderVariant {
    pub fn new(kind: DecoderKind, t_max: usize, it: usize) -> Self {
        DecoderVariant {
            kind,
            t_max,
            epsilon: DEFAULT_EPSILON,
            alpha: None,
            it,
        }
    }
}

/// Codeword indices ruled out by earlier candidate lists, per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionMask {
    m: usize,
    excluded: Vec<bool>,
}

impl ExclusionMask {
    pub fn new(k: usize, m: usize) -> Self {
        ExclusionMask {
            m,
            excluded: vec![false; k * m],
        }
    }

    pub fn exclude(&mut self, k: usize, m: usize) {
        self.excluded[k * self.m + m] = true;
    }

    pub fn is_excluded(&self, k: usize, m: usize) -> bool {
        self.excluded[k * self.m + m]
    }

    pub fn count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Excludes, for each layer of `users`, every codeword whose group has
    /// no entry in a nonempty `list`.
    pub fn absorb(&mut self, list: &CandidateList, users: &[usize], groups: &[Vec<Vec<usize>>], dims: usize) {
        if list.is_empty() {
            return;
        }
        for (j, &k) in users.iter().enumerate() {
            let mut seen = vec![false; self.m];
            for (u, _) in list.entries() {
                seen[symbol_index(&u[j * dims..(j + 1) * dims])] = true;
            }
            for members in &groups[j] {
                if !members.iter().any(|&m| seen[m]) {
                    for &m in members {
                        self.exclude(k, m);
                    }
                }
            }
        }
    }
}

/// Rejects a layer block whose symbol group is entirely excluded.
#[derive(Debug, Clone)]
pub struct CrossSubcarrierPruner {
    dims: usize,
    reject: Vec<Vec<bool>>,
}

impl CrossSubcarrierPruner {
    pub fn new(mask: &ExclusionMask, users: &[usize], groups: &[Vec<Vec<usize>>], dims: usize) -> Self {
        let reject = users
            .iter()
            .zip(groups)
            .map(|(&k, gs)| {
                let mut row = vec![false; mask.m];
                for members in gs {
                    if members.iter().all(|&m| mask.is_excluded(k, m)) {
                        for &m in members {
                            row[m] = true;
                        }
                    }
                }
                row
            })
            .collect();
        CrossSubcarrierPruner { dims, reject }
    }

    pub fn rejects_anything(&self) -> bool {
        self.reject.iter().flatten().any(|&r| r)
    }
}

impl NodeFilter for CrossSubcarrierPruner {
    fn admit(&self, block: usize, u: &[i8]) -> bool {
        let m = symbol_index(&u[block * self.dims..(block + 1) * self.dims]);
        !self.reject[block][m]
    }
}

/// Expands only the first member of each projection group.
#[derive(Debug, Clone)]
pub struct DuplicatePruner {
    dims: usize,
    representative: Vec<Vec<bool>>,
}

impl DuplicatePruner {
    pub fn new(groups: &[Vec<Vec<usize>>], dims: usize) -> Self {
        let representative = groups
            .iter()
            .map(|gs| {
                let mut row = vec![false; gs.iter().map(Vec::len).sum()];
                for members in gs {
                    row[members[0]] = true;
                }
                row
            })
            .collect();
        DuplicatePruner { dims, representative }
    }
}

impl NodeFilter for DuplicatePruner {
    fn admit(&self, block: usize, u: &[i8]) -> bool {
        self.representative[block][symbol_index(&u[block * self.dims..(block + 1) * self.dims])]
    }
}

/// Conjunction of optional filters.
struct Both<'a> {
    cross: Option<&'a CrossSubcarrierPruner>,
    dup: Option<&'a DuplicatePruner>,
}

impl NodeFilter for Both<'_> {
    fn admit(&self, block: usize, u: &[i8]) -> bool {
        self.dup.is_none_or(|p| p.admit(block, u)) && self.cross.is_none_or(|p| p.admit(block, u))
    }
}

/// Eq.-32 style resource table: one tuple per list entry with metric
/// `|y - H'u|²/σ²`.
pub fn list_hypotheses(
    list: &CandidateList,
    resource: usize,
    groups: Vec<Vec<Vec<usize>>>,
    dims: usize,
    to_metric: impl Fn(f64) -> f64,
) -> ResourceHypotheses {
    let slots = groups.len();
    let mut hyp = ResourceHypotheses::new(resource, groups);
    let mut syms = vec![0usize; slots];
    for (u, d) in list.entries() {
        for (j, s) in syms.iter_mut().enumerate() {
            *s = symbol_index(&u[j * dims..(j + 1) * dims]);
        }
        hyp.push_codewords(&syms, to_metric(*d));
    }
    hyp
}

/// Detector output with search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub llr: LlrOutput,
    /// Summed over resources; empty for exhaustive kinds.
    pub stats: SearchStats,
    /// Final list length per resource.
    pub list_sizes: Vec<usize>,
    /// Exclusion flags set by the list-building pass.
    pub excluded: usize,
    /// Resources whose search returned no candidate.
    pub empty_lists: usize,
}

/// Which search-side reductions a list detector applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Chi-square initial radius instead of an infinite one.
    pub chi_square_radius: bool,
    /// Skip subtrees holding symbols excluded on earlier resources.
    pub cross_subcarrier: bool,
    /// Expand one member per projection group.
    pub duplicates: bool,
}

impl SearchOptions {
    pub fn for_kind(kind: DecoderKind) -> Self {
        SearchOptions {
            chi_square_radius: kind.prunes(),
            cross_subcarrier: kind.prunes(),
            duplicates: kind == DecoderKind::LsdLnp,
        }
    }
}

/// A decoder bound to one codebook.
#[derive(Debug, Clone)]
pub struct Detector {
    variant: DecoderVariant,
    options: SearchOptions,
    cb: Codebook,
    graph: FactorGraph,
    // Per resource, per slot: partition of the codeword indices.
    partitions: Vec<Vec<Vec<Vec<usize>>>>,
}

impl Detector {
    pub fn new(variant: DecoderVariant, cb: &Codebook) -> Result<Self, DetectError> {
        if variant.it == 0 {
            return Err(DetectError::NoIterations);
        }
        let graph = cb.factor_graph();
        let kind = variant.kind;
        if kind.uses_groups() && !cb.has_repeated_projections() {
            return Err(DetectError::NeedsLnpCodebook(kind));
        }
        if kind.uses_list() && !cb.is_lattice() {
            return Err(ChannelError::NotLattice.into());
        }
        let partitions: Vec<Vec<Vec<Vec<usize>>>> = (0..graph.n())
            .map(|n| {
                graph
                    .xi(n)
                    .iter()
                    .map(|&k| {
                        if kind.uses_groups() {
                            cb.projection_groups(k, n, DEFAULT_PROJECTION_TOL)
                                .expect("layer occupies its resource")
                        } else {
                            (0..cb.m()).map(|m| vec![m]).collect()
                        }
                    })
                    .collect()
            })
            .collect();
        if kind.uses_list() {
            let space = partitions
                .iter()
                .map(|slots| slots.iter().fold(1usize, |acc, g| acc.saturating_mul(g.len())))
                .min()
                .unwrap_or(0);
            if variant.t_max == 0 {
                return Err(SphereError::EmptyList.into());
            }
            if variant.t_max > space {
                return Err(DetectError::ListCapacity {
                    t_max: variant.t_max,
                    space,
                });
            }
        }
        Ok(Detector {
            variant,
            options: SearchOptions::for_kind(kind),
            cb: cb.clone(),
            graph,
            partitions,
        })
    }

    /// Overrides the search reductions implied by the decoder kind.
    pub fn with_search_options(mut self, options: SearchOptions) -> Self {
        self.options = options;
        self
    }

    pub fn search_options(&self) -> SearchOptions {
        self.options
    }

    pub fn variant(&self) -> &DecoderVariant {
        &self.variant
    }

    pub fn codebook(&self) -> &Codebook {
        &self.cb
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    /// Detects one channel use. `bit_priors` holds `K·log2(M)` a-priori LLRs.
    pub fn detect(&self, y: &[C64], ch_est: &ChannelRealization, bit_priors: &[f64]) -> Result<Detection, DetectError> {
        let d = self.cb.bits_per_symbol();
        let expected = self.graph.k() * d;
        if bit_priors.len() != expected {
            return Err(DetectError::PriorLength {
                expected,
                got: bit_priors.len(),
            });
        }
        let kind = self.variant.kind;
        let mut stats = SearchStats::default();
        let mut list_sizes = vec![0; self.graph.n()];
        let mut mask = ExclusionMask::new(self.graph.k(), self.cb.m());
        let mut empty_lists = 0;
        let mut hyps: Vec<Option<ResourceHypotheses>> = vec![None; self.graph.n()];
        if kind.uses_list() {
            let sigma2 = ch_est.noise_var();
            let alpha = self.variant.alpha.unwrap_or_else(|| sigma2.sqrt());
            let opts = self.options;
            let policy = if opts.chi_square_radius {
                RadiusPolicy::ChiSquare {
                    epsilon: self.variant.epsilon,
                    sigma2,
                }
            } else {
                RadiusPolicy::Infinite
            };
            for n in (0..self.graph.n()).rev() {
                let groups = &self.partitions[n];
                let row = effective_row(&self.cb, &self.graph, ch_est, n)?;
                let sys = augment_and_factor(&row, y[n], alpha);
                let radius = initial_radius(policy, sys.depth(), alpha)?;
                let cross = opts
                    .cross_subcarrier
                    .then(|| CrossSubcarrierPruner::new(&mask, &row.users, groups, d));
                let dup_pruner = opts.duplicates.then(|| DuplicatePruner::new(groups, d));
                let filter = Both {
                    cross: cross.as_ref(),
                    dup: dup_pruner.as_ref(),
                };
                let (mut list, s) = lsd_search(&sys, radius, self.variant.t_max, d, &filter)?;
                stats.merge(&s);
                if list.is_empty() && radius.is_finite() {
                    let (retry, s) = lsd_search(&sys, f64::INFINITY, self.variant.t_max, d, &filter)?;
                    stats.merge(&s);
                    list = retry;
                }
                if list.is_empty() {
                    empty_lists += 1;
                    debug!("resource {n}: empty candidate list");
                }
                list_sizes[n] = list.len();
                mask.absorb(&list, &row.users, groups, d);
                hyps[n] = Some(list_hypotheses(&list, n, groups.clone(), d, |dist| {
                    sys.data_distance(dist) / sigma2
                }));
            }
        } else {
            for (n, slot) in hyps.iter_mut().enumerate() {
                *slot = Some(ResourceHypotheses::exhaustive(
                    &self.cb,
                    &self.graph,
                    y[n],
                    ch_est,
                    n,
                    self.partitions[n].clone(),
                ));
                list_sizes[n] = slot.as_ref().map_or(0, ResourceHypotheses::len);
            }
        }
        let hyps: Vec<ResourceHypotheses> = hyps.into_iter().map(|h| h.expect("every resource visited")).collect();
        let llr = run_on_hypotheses(
            &hyps,
            &self.graph,
            self.cb.m(),
            bit_priors,
            self.variant.it,
            kind.mode(),
        );
        if llr.degenerate_edges > 0 {
            debug!("{} edges fell back to uniform messages", llr.degenerate_edges);
        }
        Ok(Detection {
            llr,
            stats,
            list_sizes,
            excluded: mask.count(),
            empty_lists,
        })
    }
}

/// One-shot detection without keeping a [`Detector`] around.
pub fn detect(
    variant: DecoderVariant,
    y: &[C64],
    cb: &Codebook,
    ch_est: &ChannelRealization,
    bit_priors: &[f64],
) -> Result<Detection, DetectError> {
    Detector::new(variant, cb)?.detect(y, ch_est, bit_priors)
}
