//! Parallel concatenated turbo code built from two 8-state recursive
//! systematic convolutional encoders (feedback `1+D²+D³`, feedforward
//! `1+D+D³`), punctured to rate 1/2.
//!
//! Codeword layout for `L` info bits: `L` pairs `(x_t, p_t)` where `p_t`
//! comes from encoder 1 at even `t` and from encoder 2 at odd `t`, followed
//! by three termination pairs of encoder 1. Length `2L + 6`.
//!
//! LLRs are `log P(b=1)/P(b=0)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{clip, CodingError};

const STATES: usize = 8;
const TAIL: usize = 3;

/// Next state and parity for state `(s1,s2,s3) = (a_{t-1},a_{t-2},a_{t-3})`
/// and input `x`.
fn step(state: usize, x: u8) -> (usize, u8) {
    let s1 = (state >> 2) as u8 & 1;
    let s2 = (state >> 1) as u8 & 1;
    let s3 = state as u8 & 1;
    let a = x ^ s2 ^ s3;
    let p = a ^ s1 ^ s3;
    ((usize::from(a) << 2) | (usize::from(s1) << 1) | usize::from(s2), p)
}

/// Input that drives the feedback register towards zero.
fn flush_input(state: usize) -> u8 {
    ((state >> 1) as u8 ^ state as u8) & 1
}

/// Encodes `bits` from the zero state. Returns parities and the final state.
pub fn rsc_encode(bits: &[u8]) -> (Vec<u8>, usize) {
    let mut s = 0;
    let parity = bits
        .iter()
        .map(|&x| {
            let (ns, p) = step(s, x & 1);
            s = ns;
            p
        })
        .collect();
    (parity, s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    /// Uniform random permutation of `len` positions.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = x[perm[i]]`.
    pub fn interleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurboConfig {
    pub info_len: usize,
    pub inner_iterations: usize,
    pub interleaver_seed: u64,
}

impl Default for TurboConfig {
    fn default() -> Self {
        TurboConfig {
            info_len: 4096,
            inner_iterations: 4,
            interleaver_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboOutput {
    pub info_bits: Vec<u8>,
    /// A-posteriori info LLRs.
    pub info_llr: Vec<f64>,
    /// Extrinsic LLR of every coded bit: posterior minus channel input.
    pub extrinsic: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TurboCode {
    cfg: TurboConfig,
    interleaver: Interleaver,
}

impl TurboCode {
    pub fn new(cfg: TurboConfig) -> Result<Self, CodingError> {
        if cfg.info_len == 0 {
            return Err(CodingError::EmptyBlock);
        }
        Ok(TurboCode {
            cfg,
            interleaver: Interleaver::random(cfg.info_len, cfg.interleaver_seed),
        })
    }

    pub fn config(&self) -> &TurboConfig {
        &self.cfg
    }

    pub fn info_len(&self) -> usize {
        self.cfg.info_len
    }

    pub fn coded_len(&self) -> usize {
        2 * (self.cfg.info_len + TAIL)
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>, CodingError> {
        let l = self.cfg.info_len;
        if bits.len() != l {
            return Err(CodingError::Length {
                expected: l,
                got: bits.len(),
            });
        }
        let (p1, mut s) = rsc_encode(bits);
        let (p2, _) = rsc_encode(&self.interleaver.interleave(bits));
        let mut out = Vec::with_capacity(self.coded_len());
        for t in 0..l {
            out.push(bits[t] & 1);
            out.push(if t % 2 == 0 { p1[t] } else { p2[t] });
        }
        for _ in 0..TAIL {
            let x = flush_input(s);
            let (ns, p) = step(s, x);
            out.push(x);
            out.push(p);
            s = ns;
        }
        debug_assert_eq!(s, 0);
        Ok(out)
    }

    /// Iterative max-log BCJR decoding. `channel_llrs` has one LLR per coded
    /// bit; `prior_llrs` optional a-priori LLRs for the info bits.
    pub fn decode(&self, channel_llrs: &[f64], prior_llrs: Option<&[f64]>) -> Result<TurboOutput, CodingError> {
        let l = self.cfg.info_len;
        if channel_llrs.len() != self.coded_len() {
            return Err(CodingError::Length {
                expected: self.coded_len(),
                got: channel_llrs.len(),
            });
        }
        if let Some(p) = prior_llrs {
            if p.len() != l {
                return Err(CodingError::Length {
                    expected: l,
                    got: p.len(),
                });
            }
        }
        let ch: Vec<f64> = channel_llrs.iter().map(|&v| clip(v)).collect();
        let n1 = l + TAIL;
        let mut sys1 = vec![0.0; n1];
        let mut par1 = vec![0.0; n1];
        let mut par2 = vec![0.0; l];
        for t in 0..l {
            sys1[t] = ch[2 * t];
            if t % 2 == 0 {
                par1[t] = ch[2 * t + 1];
            } else {
                par2[t] = ch[2 * t + 1];
            }
        }
        for j in 0..TAIL {
            sys1[l + j] = ch[2 * (l + j)];
            par1[l + j] = ch[2 * (l + j) + 1];
        }
        let sys2 = self.interleaver.interleave(&sys1[..l]);
        let prior = prior_llrs.map_or_else(|| vec![0.0; l], |p| p.iter().map(|&v| clip(v)).collect());

        let mut ext2 = vec![0.0; l]; // decoder 2 extrinsic, natural order
        let mut out1 = Component::default();
        let mut out2 = Component::default();
        for _ in 0..self.cfg.inner_iterations.max(1) {
            let mut apriori1 = vec![0.0; n1];
            for t in 0..l {
                apriori1[t] = clip(prior[t] + ext2[t]);
            }
            out1 = bcjr(&sys1, &par1, &apriori1, true);
            let natural: Vec<f64> = (0..l).map(|t| clip(prior[t] + out1.info_ext[t])).collect();
            let apriori2 = self.interleaver.interleave(&natural);
            out2 = bcjr(&sys2, &par2, &apriori2, false);
            ext2 = self.interleaver.deinterleave(&out2.info_ext);
        }

        let info_llr: Vec<f64> = (0..l)
            .map(|t| sys1[t] + prior[t] + out1.info_ext[t] + ext2[t])
            .collect();
        let info_bits = info_llr.iter().map(|&v| u8::from(v > 0.0)).collect();
        let mut extrinsic = Vec::with_capacity(self.coded_len());
        for t in 0..l {
            extrinsic.push(clip(out1.info_ext[t] + ext2[t]));
            extrinsic.push(clip(if t % 2 == 0 {
                out1.parity_ext[t]
            } else {
                out2.parity_ext[t]
            }));
        }
        for j in 0..TAIL {
            extrinsic.push(clip(out1.info_ext[l + j]));
            extrinsic.push(clip(out1.parity_ext[l + j]));
        }
        Ok(TurboOutput {
            info_bits,
            info_llr,
            extrinsic,
        })
    }
}

#[derive(Debug, Clone, Default)]
struct Component {
    info_ext: Vec<f64>,
    parity_ext: Vec<f64>,
}

/// Max-log BCJR over the 8-state trellis. Starts in state 0; ends in state
/// 0 when `terminated`, otherwise in any state.
fn bcjr(sys: &[f64], par: &[f64], apriori: &[f64], terminated: bool) -> Component {
    const NEG: f64 = f64::NEG_INFINITY;
    let n = sys.len();
    let trellis: Vec<[(usize, u8); 2]> = (0..STATES).map(|s| [step(s, 0), step(s, 1)]).collect();
    let gamma = |t: usize, x: u8, p: u8| f64::from(x) * (sys[t] + apriori[t]) + f64::from(p) * par[t];

    let mut alpha = vec![[NEG; STATES]; n + 1];
    alpha[0][0] = 0.0;
    for t in 0..n {
        for s in 0..STATES {
            let a = alpha[t][s];
            if a == NEG {
                continue;
            }
            for x in 0..2u8 {
                let (ns, p) = trellis[s][x as usize];
                let v = a + gamma(t, x, p);
                if v > alpha[t + 1][ns] {
                    alpha[t + 1][ns] = v;
                }
            }
        }
        let top = alpha[t + 1].iter().copied().fold(NEG, f64::max);
        alpha[t + 1].iter_mut().for_each(|v| *v -= top);
    }
    let mut beta = vec![[NEG; STATES]; n + 1];
    if terminated {
        beta[n][0] = 0.0;
    } else {
        beta[n] = [0.0; STATES];
    }
    for t in (0..n).rev() {
        for s in 0..STATES {
            let mut best = NEG;
            for x in 0..2u8 {
                let (ns, p) = trellis[s][x as usize];
                let v = beta[t + 1][ns] + gamma(t, x, p);
                if v > best {
                    best = v;
                }
            }
            beta[t][s] = best;
        }
        let top = beta[t].iter().copied().fold(NEG, f64::max);
        beta[t].iter_mut().for_each(|v| *v -= top);
    }

    let mut info_ext = vec![0.0; n];
    let mut parity_ext = vec![0.0; n];
    for t in 0..n {
        let mut x_best = [NEG; 2];
        let mut p_best = [NEG; 2];
        for s in 0..STATES {
            let a = alpha[t][s];
            if a == NEG {
                continue;
            }
            for x in 0..2u8 {
                let (ns, p) = trellis[s][x as usize];
                let v = a + gamma(t, x, p) + beta[t + 1][ns];
                x_best[x as usize] = x_best[x as usize].max(v);
                p_best[p as usize] = p_best[p as usize].max(v);
            }
        }
        info_ext[t] = clip(x_best[1] - x_best[0] - sys[t] - apriori[t]);
        parity_ext[t] = clip(p_best[1] - p_best[0] - par[t]);
    }
    Component { info_ext, parity_ext }
}
