//! Exhaustive reference computations. Slow by design; used to check the
//! detectors on small instances.

use thiserror::Error;

use crate::channel::EffectiveRow;
use crate::codebook::lattice_point;
use crate::mpa::MaxStarMode;
use crate::sphere::AugmentedSystem;
use crate::C64;

/// Largest tree depth [`brute_force_ml`] enumerates.
pub const MAX_ML_DEPTH: usize = 20;
/// Largest number of symbol combinations [`exact_marginals`] enumerates.
pub const MAX_COMBINATIONS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub ml_point: Vec<i8>,
    /// Every binary point with `|y - H'u|²`, ascending; ties keep
    /// enumeration order.
    pub ranking: Vec<(Vec<i8>, f64)>,
}

/// Exhaustive minimization of `|y - H' u|²` over `u ∈ {-1,+1}^L`.
pub fn brute_force_ml(y: C64, row: &EffectiveRow) -> Result<OracleResult, OracleError> {
    let l = row.len();
    if l > MAX_ML_DEPTH {
        return Err(OracleError::TooLarge(format!("depth {l}")));
    }
    let mut ranking: Vec<(Vec<i8>, f64)> = (0..1usize << l)
        .map(|m| {
            let u = lattice_point(m, l);
            let d = (y - row.apply(&u)).norm_sqr();
            (u, d)
        })
        .collect();
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(OracleResult {
        ml_point: ranking[0].0.clone(),
        ranking,
    })
}

/// Log-marginals `log Σ exp(-f + Σ_u prior_u)` (or the max) over every
/// symbol combination, for each slot and symbol.
///
/// `components[j][m]` is the faded contribution of symbol `m` of slot `j`
/// to `y_n`; `priors[j][m]` its log-prior.
pub fn exact_marginals(
    y_n: C64,
    components: &[Vec<C64>],
    noise_var: f64,
    priors: &[Vec<f64>],
    mode: MaxStarMode,
) -> Result<Vec<Vec<f64>>, OracleError> {
    let radix: Vec<usize> = components.iter().map(Vec::len).collect();
    let total = radix
        .iter()
        .try_fold(1usize, |acc, &r| acc.checked_mul(r).filter(|&v| v <= MAX_COMBINATIONS))
        .ok_or_else(|| OracleError::TooLarge(format!("radix {radix:?}")))?;
    let mut terms: Vec<Vec<Vec<f64>>> = radix.iter().map(|&r| vec![Vec::new(); r]).collect();
    let mut digits = vec![0usize; radix.len()];
    for _ in 0..total {
        let mut s = y_n;
        let mut log_prior = 0.0;
        for (j, &d) in digits.iter().enumerate() {
            s -= components[j][d];
            log_prior += priors[j][d];
        }
        let v = -s.norm_sqr() / noise_var + log_prior;
        for (j, &d) in digits.iter().enumerate() {
            terms[j][d].push(v);
        }
        for j in (0..digits.len()).rev() {
            digits[j] += 1;
            if digits[j] < radix[j] {
                break;
            }
            digits[j] = 0;
        }
    }
    Ok(terms
        .into_iter()
        .map(|slot| {
            slot.into_iter()
                .map(|vals| {
                    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    match mode {
                        MaxStarMode::MaxLog => top,
                        MaxStarMode::Exact => top + vals.iter().map(|v| (v - top).exp()).sum::<f64>().ln(),
                    }
                })
                .collect()
        })
        .collect())
}

/// Every binary point with `‖y' - R u‖² ≤ radius`, found with per-level
/// interval bounds instead of Schnorr-Euchner stepping.
pub fn interval_bound_enumerate(sys: &AugmentedSystem, radius: f64) -> Vec<(Vec<i8>, f64)> {
    let l = sys.depth();
    let mut out = Vec::new();
    let mut u = vec![0i8; l];
    descend(sys, radius, l, 0.0, &mut u, &mut out);
    out
}

fn descend(sys: &AugmentedSystem, radius: f64, level: usize, ped: f64, u: &mut [i8], out: &mut Vec<(Vec<i8>, f64)>) {
    if level == 0 {
        out.push((u.to_vec(), ped));
        return;
    }
    let i = level - 1;
    let mut t = sys.y_reduced()[i];
    for j in i + 1..u.len() {
        t -= sys.r(i, j) * f64::from(u[j]);
    }
    let r = sys.r(i, i).re;
    // (Re t - r u)² ≤ radius - ped - (Im t)²
    let slack = radius - ped - t.im * t.im;
    if slack < 0.0 {
        return;
    }
    let half = slack.sqrt();
    let (lo, hi) = ((t.re - half) / r, (t.re + half) / r);
    for s in [-1i8, 1] {
        let v = f64::from(s);
        if v < lo || v > hi {
            continue;
        }
        let inc = (t - sys.r(i, i) * v).norm_sqr();
        if ped + inc > radius {
            continue;
        }
        u[i] = s;
        descend(sys, radius, level - 1, ped + inc, u, out);
    }
}
