//! Operation counts and BER bookkeeping.
//!
//! Counts follow the complex-operation convention: one complex
//! multiplication or summation is one FLOP (six or two real operations), a
//! square root costs six FLOPs, comparisons are counted separately.

use crate::lsd_mpa::DecoderKind;
use crate::sphere::SearchStats;

/// Real operations per square root.
pub const SQRT_FLOPS: u64 = 6;

/// Inputs of the closed-form complexity rows. Counts are per detection of
/// one channel use over all `N` resources.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityParams {
    pub n: u64,
    pub k: u64,
    pub dc: u64,
    pub p: u64,
    /// Codebook size `M`.
    pub m: u64,
    /// Distinct projections per resource for LNP codebooks.
    pub projections: u64,
    pub it: u64,
    pub t_max: u64,
    /// Visited nodes per level summed over the `N` searches,
    /// `visited[k-1]` for level `k`.
    pub visited: Vec<u64>,
    /// Radius updates summed over the `N` searches.
    pub radius_updates: u64,
    /// Plain iterations before reference symbols are fixed (PM-MPA).
    pub pm_plain_iterations: u64,
    /// Reference-symbol budget `R_s` (PM-MPA).
    pub pm_reference_symbols: u64,
}

impl ComplexityParams {
    /// Tree depth `L = d_c log2 M`.
    pub fn depth(&self) -> u64 {
        self.dc * u64::from(self.m.trailing_zeros())
    }
}

/// One row of the complexity table plus its operation-type split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComplexityReport {
    /// QR, `y'` and tree search.
    pub sphere_decoding: u64,
    pub resource_update: u64,
    pub layer_update: u64,
    pub posterior: u64,
    pub summations: u64,
    pub multiplications: u64,
    pub comparisons: u64,
    pub sqrts: u64,
}

impl ComplexityReport {
    /// Table total: the four column entries added up.
    pub fn table_total(&self) -> u64 {
        self.sphere_decoding + self.resource_update + self.layer_update + self.posterior
    }

    /// Complex-FLOP view: summations, multiplications and comparisons, plus
    /// six FLOPs per square root.
    pub fn flops(&self) -> u64 {
        self.summations + self.multiplications + self.comparisons + SQRT_FLOPS * self.sqrts
    }

    /// Real-operation view: complex products cost 6, sums 2.
    pub fn real_ops(&self) -> u64 {
        2 * self.summations + 6 * self.multiplications + self.comparisons + SQRT_FLOPS * self.sqrts
    }

    pub fn merge(&mut self, o: &ComplexityReport) {
        self.sphere_decoding += o.sphere_decoding;
        self.resource_update += o.resource_update;
        self.layer_update += o.layer_update;
        self.posterior += o.posterior;
        self.summations += o.summations;
        self.multiplications += o.multiplications;
        self.comparisons += o.comparisons;
        self.sqrts += o.sqrts;
    }
}

/// `Σ_k (2k + 7) N_k`.
pub fn search_flops(visited: &[u64]) -> u64 {
    visited
        .iter()
        .enumerate()
        .map(|(i, &v)| (2 * (i as u64 + 1) + 7) * v)
        .sum()
}

/// `2L³ + 2L² + L`: MGS factorization of the augmented matrix and `y'`.
pub fn preprocessing_flops(l: u64) -> u64 {
    2 * l * l * l + 2 * l * l + l
}

/// `C_PM = (N - T)·M^{d_c - ⌊R_s/N⌋} + T·M^{d_c - ⌈R_s/N⌉}` with
/// `T = R_s mod N`.
pub fn pm_reduced_space(n: u64, m: u64, dc: u64, rs: u64) -> u64 {
    let t = rs % n;
    let lo = dc.saturating_sub(rs / n);
    let hi = dc.saturating_sub(rs.div_ceil(n));
    (n - t) * m.pow(lo as u32) + t * m.pow(hi as u32)
}

/// Which closed-form row to evaluate. Exact Log-MPA shares the MPA row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityRow {
    Mpa,
    PmMpa,
    Lnp,
    LsdMpa,
}

impl From<DecoderKind> for ComplexityRow {
    fn from(k: DecoderKind) -> Self {
        match k {
            DecoderKind::MaxLogMpa | DecoderKind::LogMpa => ComplexityRow::Mpa,
            DecoderKind::Lnp => ComplexityRow::Lnp,
            DecoderKind::LsdMpa | DecoderKind::NpLsdMpa | DecoderKind::LsdLnp => ComplexityRow::LsdMpa,
        }
    }
}

/// Evaluates one row of the complexity table.
pub fn analytic_complexity(row: ComplexityRow, p: &ComplexityParams) -> ComplexityReport {
    let ComplexityParams {
        n, dc, m, it, t_max, ..
    } = *p;
    let layer_update = it * n * dc * (p.p - 1) * m;
    let posterior = n * dc * m;
    let exhaustive = |space: u64, plain: u64, reduced: u64| {
        // Per hypothesis: (2dc²-dc) sums, (dc²+3dc) products, dc comparisons.
        let hyps = plain * space + reduced;
        ComplexityReport {
            sphere_decoding: 0,
            resource_update: (3 * dc * dc + 3 * dc) * hyps,
            layer_update,
            posterior,
            summations: (2 * dc * dc - dc) * hyps + layer_update + posterior,
            multiplications: (dc * dc + 3 * dc) * hyps,
            comparisons: dc * hyps,
            sqrts: 0,
        }
    };
    match row {
        ComplexityRow::Mpa => exhaustive(m.pow(dc as u32), it * n, 0),
        ComplexityRow::Lnp => exhaustive(p.projections.pow(dc as u32), it * n, 0),
        ComplexityRow::PmMpa => {
            let plain = p.pm_plain_iterations.min(it);
            let reduced = (it - plain) * pm_reduced_space(n, m, dc, p.pm_reference_symbols);
            exhaustive(m.pow(dc as u32), plain * n, reduced)
        }
        ComplexityRow::LsdMpa => {
            let l = p.depth();
            let search = search_flops(&p.visited);
            let sphere_decoding = n * preprocessing_flops(l) + search;
            let list_sums = it * n * (dc * dc - dc) * t_max;
            let list_cmps = it * n * dc * t_max + p.radius_updates * t_max;
            // Search node at level k: (k+4) products and (k+3) sums.
            let (node_mul, node_sum) = p.visited.iter().enumerate().fold((0, 0), |(a, b), (i, &v)| {
                let k = i as u64 + 1;
                (a + (k + 4) * v, b + (k + 3) * v)
            });
            ComplexityReport {
                sphere_decoding,
                resource_update: it * n * dc * dc * t_max + p.radius_updates * t_max,
                layer_update,
                posterior,
                summations: n * (l * l * l + l * l) + node_sum + list_sums + layer_update + posterior,
                multiplications: n * (l * l * l + l * l + l) + node_mul,
                comparisons: list_cmps,
                sqrts: n * l,
            }
        }
    }
}

/// Bit and frame error tallies at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub decoder: DecoderKind,
    pub ebno_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// Counters accumulated over frames; merging is associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunCounters {
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    /// Channel uses detected.
    pub detections: u64,
    pub search: SearchStats,
}

impl RunCounters {
    pub fn merge(&mut self, o: &RunCounters) {
        self.frames += o.frames;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.detections += o.detections;
        self.search.merge(&o.search);
    }

    /// Mean visited nodes per level per detection.
    pub fn mean_visited(&self) -> Vec<f64> {
        if self.detections == 0 {
            return Vec::new();
        }
        self.search
            .visited
            .iter()
            .map(|&v| v as f64 / self.detections as f64)
            .collect()
    }
}

/// Complexity summed over every detection in `counters`, from measured
/// search statistics; `per_detection` carries the structural parameters.
pub fn measure(row: ComplexityRow, per_detection: &ComplexityParams, counters: &RunCounters) -> ComplexityReport {
    let d = counters.detections;
    if d == 0 {
        return ComplexityReport::default();
    }
    let base = ComplexityParams {
        visited: Vec::new(),
        radius_updates: 0,
        ..per_detection.clone()
    };
    let fixed = analytic_complexity(row, &base);
    let scale = |v: u64| v * d;
    let mut report = ComplexityReport {
        sphere_decoding: scale(fixed.sphere_decoding),
        resource_update: scale(fixed.resource_update),
        layer_update: scale(fixed.layer_update),
        posterior: scale(fixed.posterior),
        summations: scale(fixed.summations),
        multiplications: scale(fixed.multiplications),
        comparisons: scale(fixed.comparisons),
        sqrts: scale(fixed.sqrts),
    };
    if row == ComplexityRow::LsdMpa {
        let variable = ComplexityParams {
            n: 0,
            it: 0,
            visited: counters.search.visited.clone(),
            radius_updates: counters.search.radius_updates,
            ..per_detection.clone()
        };
        let v = analytic_complexity(row, &variable);
        report.merge(&ComplexityReport {
            layer_update: 0,
            posterior: 0,
            ..v
        });
    }
    report
}
