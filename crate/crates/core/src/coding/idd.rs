//! Iterative detection and decoding: the SCMA detector and the per-layer
//! turbo decoders exchange extrinsic LLRs.
//!
//! Each layer turbo-encodes its own info block, scrambles the coded bits with
//! a per-layer channel interleaver, pads to a whole number of symbols with
//! zeros, and maps `log2(M)` bits per channel use.

use crate::channel::{bits_to_symbol, ChannelRealization};
use crate::lsd_mpa::{DetectError, Detector};
use crate::sphere::SearchStats;
use crate::C64;

use super::turbo::{Interleaver, TurboCode, TurboConfig};
use super::CodingError;

/// Per-layer coding chain shared by transmitter and receiver.
#[derive(Debug, Clone)]
pub struct CodedLink {
    layers: usize,
    bits_per_symbol: usize,
    turbo: TurboCode,
    channel_interleavers: Vec<Interleaver>,
}

/// Decisions and diagnostics of one IDD frame.
#[derive(Debug, Clone, PartialEq)]
pub struct IddResult {
    /// Info-bit decisions per layer after the last outer loop.
    pub decoded: Vec<Vec<u8>>,
    /// Info-bit decisions per layer after each outer loop.
    pub per_loop: Vec<Vec<Vec<u8>>>,
    /// Search statistics summed over every detector call.
    pub stats: SearchStats,
    pub detector_calls: usize,
}

impl CodedLink {
    pub fn new(layers: usize, bits_per_symbol: usize, cfg: TurboConfig, seed: u64) -> Result<Self, CodingError> {
        let turbo = TurboCode::new(cfg)?;
        let coded = turbo.coded_len();
        let channel_interleavers = (0..layers)
            .map(|k| Interleaver::random(coded, seed ^ ((k as u64 + 1) << 32)))
            .collect();
        Ok(CodedLink {
            layers,
            bits_per_symbol,
            turbo,
            channel_interleavers,
        })
    }

    pub fn info_len(&self) -> usize {
        self.turbo.info_len()
    }

    pub fn turbo(&self) -> &TurboCode {
        &self.turbo
    }

    /// Channel uses per frame.
    pub fn symbols_per_frame(&self) -> usize {
        self.turbo.coded_len().div_ceil(self.bits_per_symbol)
    }

    fn padded_len(&self) -> usize {
        self.symbols_per_frame() * self.bits_per_symbol
    }

    /// Codeword index of every layer for every channel use, `[t][k]`.
    pub fn encode_frame(&self, info: &[Vec<u8>]) -> Result<Vec<Vec<usize>>, CodingError> {
        if info.len() != self.layers {
            return Err(CodingError::Length {
                expected: self.layers,
                got: info.len(),
            });
        }
        let d = self.bits_per_symbol;
        let streams: Vec<Vec<u8>> = info
            .iter()
            .zip(&self.channel_interleavers)
            .map(|(bits, il)| {
                let mut s = il.interleave(&self.turbo.encode(bits)?);
                s.resize(self.padded_len(), 0);
                Ok(s)
            })
            .collect::<Result<_, CodingError>>()?;
        Ok((0..self.symbols_per_frame())
            .map(|t| streams.iter().map(|s| bits_to_symbol(&s[t * d..(t + 1) * d])).collect())
            .collect())
    }

    /// Runs `outer_loops` detector/decoder exchanges over one frame.
    /// `ys[t]` and `ch_est[t]` are the received vector and estimated channel
    /// of channel use `t`.
    pub fn idd_run(
        &self,
        detector: &Detector,
        ys: &[Vec<C64>],
        ch_est: &[ChannelRealization],
        outer_loops: usize,
    ) -> Result<IddResult, DetectError> {
        assert!(outer_loops >= 1, "at least one outer loop");
        let d = self.bits_per_symbol;
        let k = self.layers;
        let uses = self.symbols_per_frame();
        let coded = self.turbo.coded_len();
        assert_eq!(ys.len(), uses);
        // A-priori LLRs of the transmitted (interleaved, padded) bit streams.
        let mut priors = vec![vec![0.0; self.padded_len()]; k];
        let mut stats = SearchStats::default();
        let mut per_loop = Vec::with_capacity(outer_loops);
        let mut detector_calls = 0;
        for _ in 0..outer_loops {
            let mut det_ext = vec![vec![0.0; self.padded_len()]; k];
            let mut frame_priors = vec![0.0; k * d];
            for t in 0..uses {
                for layer in 0..k {
                    frame_priors[layer * d..(layer + 1) * d].copy_from_slice(&priors[layer][t * d..(t + 1) * d]);
                }
                let det = detector.detect(&ys[t], &ch_est[t], &frame_priors)?;
                stats.merge(&det.stats);
                detector_calls += 1;
                for layer in 0..k {
                    det_ext[layer][t * d..(t + 1) * d].copy_from_slice(&det.llr.extrinsic[layer * d..(layer + 1) * d]);
                }
            }
            let mut decisions = Vec::with_capacity(k);
            for layer in 0..k {
                let il = &self.channel_interleavers[layer];
                let llr = il.deinterleave(&det_ext[layer][..coded]);
                let out = self
                    .turbo
                    .decode(&llr, None)
                    .expect("coded length fixed by construction");
                let fed_back = il.interleave(&out.extrinsic);
                priors[layer][..coded].copy_from_slice(&fed_back);
                decisions.push(out.info_bits);
            }
            per_loop.push(decisions);
        }
        Ok(IddResult {
            decoded: per_loop.last().cloned().unwrap_or_default(),
            per_loop,
            stats,
            detector_calls,
        })
    }
}
