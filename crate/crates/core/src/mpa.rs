//! Log-domain message passing over the layer/resource graph.
//!
//! Messages are `Option<f64>`: `None` is a log-probability of `-∞` (the
//! hypothesis was excluded), which keeps `max*` total and NaN-free.
//!
//! Every resource update runs over a [`ResourceHypotheses`] table: a set of
//! symbol tuples for the colliding layers with their metric `f_n`. Exact
//! detectors enumerate all tuples; list detectors fill the table from a
//! sphere-decoder candidate list.

use crate::channel::ChannelRealization;
use crate::codebook::{bits_of, Codebook};
use crate::factor_graph::FactorGraph;
use crate::C64;

/// Bit LLR reported when one hypothesis side is empty.
pub const LLR_SATURATION: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxStarMode {
    /// Jacobian logarithm `log(e^a + e^b)`.
    Exact,
    /// `max(a, b)`.
    MaxLog,
}

/// `max*(a, b)`; either argument may be `-∞`.
pub fn max_star(a: f64, b: f64, mode: MaxStarMode) -> f64 {
    let hi = a.max(b);
    match mode {
        MaxStarMode::MaxLog => hi,
        MaxStarMode::Exact => {
            if hi == f64::NEG_INFINITY {
                return hi;
            }
            hi + (-(a - b).abs()).exp().ln_1p()
        }
    }
}

fn acc(slot: &mut Option<f64>, v: f64, mode: MaxStarMode) {
    *slot = Some(match *slot {
        Some(old) => max_star(old, v, mode),
        None => v,
    });
}

/// Shifts the finite entries so their maximum is zero. Returns false if all
/// entries are `None`.
pub fn normalize(msg: &mut [Option<f64>]) -> bool {
    let top = msg.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return false;
    }
    for v in msg.iter_mut().flatten() {
        *v -= top;
    }
    true
}

/// Symbol tuples of the layers colliding on one resource and their metrics
/// `f_n = |y_n - Σ h x|² / σ²`.
///
/// Symbols are group indices: codeword indices whose component on this
/// resource coincides share a group, and messages are computed per group
/// then copied to every member. Singleton groups give the plain update.
#[derive(Debug, Clone)]
pub struct ResourceHypotheses {
    resource: usize,
    slots: usize,
    groups: Vec<Vec<Vec<usize>>>,
    member_group: Vec<Vec<usize>>,
    symbols: Vec<u16>,
    metric: Vec<f64>,
}

impl ResourceHypotheses {
    /// Empty table; `groups[j]` partitions the codeword indices of slot `j`.
    pub fn new(resource: usize, groups: Vec<Vec<Vec<usize>>>) -> Self {
        let member_group = groups
            .iter()
            .map(|gs| {
                let m = gs.iter().map(Vec::len).sum();
                let mut map = vec![0; m];
                for (g, members) in gs.iter().enumerate() {
                    for &idx in members {
                        map[idx] = g;
                    }
                }
                map
            })
            .collect();
        ResourceHypotheses {
            resource,
            slots: groups.len(),
            groups,
            member_group,
            symbols: Vec::new(),
            metric: Vec::new(),
        }
    }

    /// Singleton groups over `m` codeword indices for each of `slots` layers.
    pub fn singletons(resource: usize, slots: usize, m: usize) -> Self {
        let groups = vec![(0..m).map(|i| vec![i]).collect(); slots];
        ResourceHypotheses::new(resource, groups)
    }

    /// Every tuple of groups, metric from the codeword tables. The first slot
    /// is the most significant digit of the enumeration order.
    pub fn exhaustive(
        cb: &Codebook,
        graph: &FactorGraph,
        y_n: C64,
        ch_est: &ChannelRealization,
        resource: usize,
        groups: Vec<Vec<Vec<usize>>>,
    ) -> Self {
        let mut hyp = ResourceHypotheses::new(resource, groups);
        let users = graph.xi(resource);
        // Faded component of each group representative.
        let comps: Vec<Vec<C64>> = users
            .iter()
            .zip(&hyp.groups)
            .map(|(&k, gs)| {
                let h = ch_est.gain(resource, k);
                gs.iter().map(|g| h * cb.layer(k).codeword(g[0])[resource]).collect()
            })
            .collect();
        let radix: Vec<usize> = hyp.groups.iter().map(Vec::len).collect();
        let total: usize = radix.iter().product();
        let inv = ch_est.noise_var().recip();
        let mut digits = vec![0usize; hyp.slots];
        hyp.symbols.reserve(total * hyp.slots);
        hyp.metric.reserve(total);
        for _ in 0..total {
            let mut s = y_n;
            for (j, &d) in digits.iter().enumerate() {
                s -= comps[j][d];
                hyp.symbols.push(d as u16);
            }
            hyp.metric.push(s.norm_sqr() * inv);
            for j in (0..hyp.slots).rev() {
                digits[j] += 1;
                if digits[j] < radix[j] {
                    break;
                }
                digits[j] = 0;
            }
        }
        hyp
    }

    /// Appends a tuple given by codeword indices.
    pub fn push_codewords(&mut self, codewords: &[usize], metric: f64) {
        debug_assert_eq!(codewords.len(), self.slots);
        for (j, &m) in codewords.iter().enumerate() {
            self.symbols.push(self.member_group[j][m] as u16);
        }
        self.metric.push(metric);
    }

    pub fn resource(&self) -> usize {
        self.resource
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn groups(&self, slot: usize) -> &[Vec<usize>] {
        &self.groups[slot]
    }

    pub fn tuple(&self, h: usize) -> &[u16] {
        &self.symbols[h * self.slots..(h + 1) * self.slots]
    }

    pub fn metric(&self, h: usize) -> f64 {
        self.metric[h]
    }
}

/// Edge messages in both directions plus codeword priors.
///
/// Edge `(n, j)` joins resource `n` and the `j`-th layer of `ξ_n`; entry `m`
/// of edge `e` lives at `e·M + m`.
#[derive(Debug, Clone)]
pub struct MessageTable {
    m: usize,
    dc: usize,
    res_to_layer: Vec<Option<f64>>,
    layer_to_res: Vec<Option<f64>>,
    priors: Vec<f64>,
}

impl MessageTable {
    /// Layer-to-resource messages start at the priors (`K·M`, layer-major).
    pub fn new(graph: &FactorGraph, m: usize, priors: Vec<f64>) -> Self {
        assert_eq!(priors.len(), graph.k() * m);
        let edges = graph.num_edges();
        let mut table = MessageTable {
            m,
            dc: graph.dc(),
            res_to_layer: vec![Some(0.0); edges * m],
            layer_to_res: vec![Some(0.0); edges * m],
            priors,
        };
        for n in 0..graph.n() {
            for (j, &k) in graph.xi(n).iter().enumerate() {
                let e = graph.edge(n, j);
                for idx in 0..m {
                    table.layer_to_res[e * m + idx] = Some(table.priors[k * m + idx]);
                }
                normalize(&mut table.layer_to_res[e * m..(e + 1) * m]);
            }
        }
        table
    }

    pub fn res_to_layer(&self, n: usize, slot: usize) -> &[Option<f64>] {
        let e = n * self.dc + slot;
        &self.res_to_layer[e * self.m..(e + 1) * self.m]
    }

    pub fn layer_to_res(&self, n: usize, slot: usize) -> &[Option<f64>] {
        let e = n * self.dc + slot;
        &self.layer_to_res[e * self.m..(e + 1) * self.m]
    }

    pub fn prior(&self, k: usize) -> &[f64] {
        &self.priors[k * self.m..(k + 1) * self.m]
    }
}

/// Resource-node update over `hyp`:
/// `I_{g→v_j}(m) = max*_{tuples with x_j = m} { -f_n + Σ_{u≠j} I_{v_u→g}(x_u) }`.
///
/// A slot whose every output is `-∞` gets uniform zero messages instead;
/// the return value counts such slots.
pub fn resource_update(table: &mut MessageTable, hyp: &ResourceHypotheses, mode: MaxStarMode) -> usize {
    let n = hyp.resource;
    let m = table.m;
    let dc = hyp.slots;
    // Incoming messages collapsed onto groups.
    let incoming: Vec<Vec<Option<f64>>> = (0..dc)
        .map(|j| {
            let msg = table.layer_to_res(n, j);
            hyp.groups[j]
                .iter()
                .map(|members| {
                    let mut v = None;
                    for &idx in members {
                        if let Some(x) = msg[idx] {
                            acc(&mut v, x, mode);
                        }
                    }
                    v
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<Option<f64>>> = hyp.groups.iter().map(|g| vec![None; g.len()]).collect();
    for h in 0..hyp.len() {
        let tuple = hyp.tuple(h);
        let base = -hyp.metric[h];
        for j in 0..dc {
            let mut s = Some(base);
            for (u, &g) in tuple.iter().enumerate() {
                if u != j {
                    s = s.zip(incoming[u][g as usize]).map(|(a, b)| a + b);
                }
            }
            if let Some(v) = s {
                acc(&mut out[j][tuple[j] as usize], v, mode);
            }
        }
    }
    let mut degenerate = 0;
    for j in 0..dc {
        let e = n * table.dc + j;
        let dst = &mut table.res_to_layer[e * m..(e + 1) * m];
        for (g, members) in hyp.groups[j].iter().enumerate() {
            for &idx in members {
                dst[idx] = out[j][g];
            }
        }
        if !normalize(dst) {
            dst.fill(Some(0.0));
            degenerate += 1;
        }
    }
    degenerate
}

/// Layer-node update `I_{v_k→g_n}(m) = L(x_k^m) + Σ_{l∈ζ_k∖n} I_{g_l→v_k}(m)`.
pub fn layer_update(table: &mut MessageTable, graph: &FactorGraph, k: usize, n: usize) {
    let m = table.m;
    let slot = graph.slot(n, k).expect("layer uses resource");
    let mut msg: Vec<Option<f64>> = table.prior(k).iter().map(|&p| Some(p)).collect();
    for &l in graph.zeta(k) {
        if l == n {
            continue;
        }
        let other = table.res_to_layer(l, graph.slot(l, k).expect("edge"));
        for (v, &x) in msg.iter_mut().zip(other) {
            *v = v.zip(x).map(|(a, b)| a + b);
        }
    }
    if !normalize(&mut msg) {
        msg.fill(Some(0.0));
    }
    let e = graph.edge(n, slot);
    table.layer_to_res[e * m..(e + 1) * m].copy_from_slice(&msg);
}

/// Codeword posterior `I(x_k)(m) = L(x_k^m) + Σ_{l∈ζ_k} I_{g_l→v_k}(m)`.
pub fn posterior(table: &MessageTable, graph: &FactorGraph, k: usize) -> Vec<Option<f64>> {
    let mut post: Vec<Option<f64>> = table.prior(k).iter().map(|&p| Some(p)).collect();
    for &l in graph.zeta(k) {
        let msg = table.res_to_layer(l, graph.slot(l, k).expect("edge"));
        for (v, &x) in post.iter_mut().zip(msg) {
            *v = v.zip(x).map(|(a, b)| a + b);
        }
    }
    post
}

/// `L(b_i) = max*_{m: b_i=1} I(m) - max*_{m: b_i=0} I(m)` with bits labeled
/// MSB first. One empty side gives `±LLR_SATURATION`, both empty give 0.
pub fn bit_llr(codeword_llr: &[Option<f64>], bits: usize, mode: MaxStarMode) -> Vec<f64> {
    (0..bits)
        .map(|i| {
            let shift = bits - 1 - i;
            let (mut one, mut zero) = (None, None);
            for (m, v) in codeword_llr.iter().enumerate() {
                if let Some(v) = *v {
                    if (m >> shift) & 1 == 1 {
                        acc(&mut one, v, mode);
                    } else {
                        acc(&mut zero, v, mode);
                    }
                }
            }
            match (one, zero) {
                (Some(a), Some(b)) => a - b,
                (Some(_), None) => LLR_SATURATION,
                (None, Some(_)) => -LLR_SATURATION,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Codeword log-priors `L(x^m) = Σ_i b_i(m)·La_i` from bit LLRs of one layer.
pub fn codeword_priors(bit_priors: &[f64]) -> Vec<f64> {
    let d = bit_priors.len();
    (0..1usize << d)
        .map(|m| {
            bits_of(m, d)
                .zip(bit_priors)
                .map(|(b, &la)| if b == 1 { la } else { 0.0 })
                .sum()
        })
        .collect()
}

/// Detector output. Bit vectors are layer-major, `log2(M)` bits per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrOutput {
    pub codeword_llr: Vec<Vec<Option<f64>>>,
    pub bit_llr: Vec<f64>,
    /// `bit_llr` minus the bit priors.
    pub extrinsic: Vec<f64>,
    /// Edges whose messages collapsed to all `-∞` and were reset.
    pub degenerate_edges: usize,
}

impl LlrOutput {
    /// Hard decisions: bit 1 when its LLR is positive.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.bit_llr.iter().map(|&l| u8::from(l > 0.0)).collect()
    }

    /// Most likely codeword index per layer.
    pub fn hard_symbols(&self) -> Vec<usize> {
        self.codeword_llr
            .iter()
            .map(|post| {
                post.iter()
                    .enumerate()
                    .filter_map(|(m, v)| v.map(|v| (m, v)))
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, (m, v)| if v > best.1 { (m, v) } else { best },
                    )
                    .0
            })
            .collect()
    }
}

/// Flooding schedule over precomputed hypothesis tables, one per resource.
///
/// `bit_priors` holds `K·log2(M)` a-priori LLRs (zeros when uncoded).
pub fn run_on_hypotheses(
    hyps: &[ResourceHypotheses],
    graph: &FactorGraph,
    m: usize,
    bit_priors: &[f64],
    it: usize,
    mode: MaxStarMode,
) -> LlrOutput {
    assert!(it >= 1, "at least one iteration");
    let d = m.trailing_zeros() as usize;
    assert_eq!(bit_priors.len(), graph.k() * d);
    let priors: Vec<f64> = bit_priors.chunks(d).flat_map(codeword_priors).collect();
    let mut table = MessageTable::new(graph, m, priors);
    let mut degenerate_edges = 0;
    for _ in 0..it {
        degenerate_edges = 0;
        for hyp in hyps {
            degenerate_edges += resource_update(&mut table, hyp, mode);
        }
        for k in 0..graph.k() {
            for &n in graph.zeta(k) {
                layer_update(&mut table, graph, k, n);
            }
        }
    }
    let codeword_llr: Vec<Vec<Option<f64>>> = (0..graph.k()).map(|k| posterior(&table, graph, k)).collect();
    let bit_llr: Vec<f64> = codeword_llr.iter().flat_map(|p| bit_llr(p, d, mode)).collect();
    let extrinsic = bit_llr.iter().zip(bit_priors).map(|(l, a)| l - a).collect();
    LlrOutput {
        codeword_llr,
        bit_llr,
        extrinsic,
        degenerate_edges,
    }
}

/// Exact Log-MPA or Max-log-MPA detection of one channel use.
pub fn run_mpa(
    y: &[C64],
    cb: &Codebook,
    graph: &FactorGraph,
    ch_est: &ChannelRealization,
    bit_priors: &[f64],
    it: usize,
    mode: MaxStarMode,
) -> LlrOutput {
    let hyps: Vec<ResourceHypotheses> = (0..graph.n())
        .map(|n| {
            let groups = vec![(0..cb.m()).map(|i| vec![i]).collect(); graph.dc()];
            ResourceHypotheses::exhaustive(cb, graph, y[n], ch_est, n, groups)
        })
        .collect();
    run_on_hypotheses(&hyps, graph, cb.m(), bit_priors, it, mode)
}
