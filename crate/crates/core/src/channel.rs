//! Fading, noise and the uplink superposition `y = Σ_k diag(h_k) x_k + z`.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::codebook::Codebook;
use crate::factor_graph::FactorGraph;
use crate::C64;

/// Sinusoids per Jakes fading process.
pub const JAKES_OSCILLATORS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("normalized Doppler {0} outside [0, 0.5)")]
    Doppler(f64),
    #[error("CSI error variance {0} outside [0, 1)")]
    CsiVariance(f64),
    #[error("noise variance must be positive, got {0}")]
    NoiseVariance(f64),
    #[error("codebook has no lattice generator")]
    NotLattice,
    #[error("resource {0} out of range")]
    Resource(usize),
}

/// Gains `h_{n,k}` for one channel use and the complex noise variance `σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n: usize,
    k: usize,
    h: Vec<C64>,
    noise_var: f64,
}

impl ChannelRealization {
    /// `h` is row-major `N×K`.
    pub fn new(n: usize, k: usize, h: Vec<C64>, noise_var: f64) -> Result<Self, ChannelError> {
        assert_eq!(h.len(), n * k, "gain matrix must be N×K");
        if noise_var <= 0.0 || !noise_var.is_finite() {
            return Err(ChannelError::NoiseVariance(noise_var));
        }
        Ok(ChannelRealization { n, k, h, noise_var })
    }

    /// All gains equal to one.
    pub fn unit(n: usize, k: usize, noise_var: f64) -> Result<Self, ChannelError> {
        ChannelRealization::new(n, k, vec![C64::new(1.0, 0.0); n * k], noise_var)
    }

    /// Independent `CN(0,1)` gains.
    pub fn rayleigh<R: Rng + ?Sized>(n: usize, k: usize, noise_var: f64, rng: &mut R) -> Result<Self, ChannelError> {
        let h = (0..n * k).map(|_| complex_gaussian(rng, 1.0)).collect();
        ChannelRealization::new(n, k, h, noise_var)
    }

    pub fn gain(&self, n: usize, k: usize) -> C64 {
        self.h[n * self.k + k]
    }

    pub fn gains(&self) -> &[C64] {
        &self.h
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Result<Self, ChannelError> {
        if noise_var <= 0.0 || !noise_var.is_finite() {
            return Err(ChannelError::NoiseVariance(noise_var));
        }
        self.noise_var = noise_var;
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.k)
    }
}

/// `CN(0, var)`: real and imaginary parts each with variance `var/2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Complex noise variance for a given `E_b/N_0`, with unit codeword energy
/// per layer: `σ² = 1 / (R · log2(M) · 10^(EbN0/10))`.
pub fn noise_variance(ebno_db: f64, code_rate: f64, bits_per_symbol: usize) -> f64 {
    1.0 / (code_rate * bits_per_symbol as f64 * 10f64.powf(ebno_db / 10.0))
}

/// Time-correlated Rayleigh gains: one sum-of-sinusoids process per
/// `(resource, layer)` with autocorrelation `J0(2π f_d T_s Δ)`.
///
/// Process `h(t) = N₀^{-1/2} Σ_i exp(j(2π f_d T_s t cos α_i + φ_i))` with
/// `α_i = (2πi - π + θ)/N₀`. The random offset `θ` makes the arrival angles
/// uniform on the circle, so the ensemble autocorrelation is exactly `J0`.
#[derive(Debug, Clone)]
pub struct JakesFading {
    n: usize,
    k: usize,
    fd_ts: f64,
    // Per process: (Doppler factor cos α_i, phase φ_i) for each oscillator.
    oscillators: Vec<Vec<(f64, f64)>>,
}

impl JakesFading {
    pub fn new<R: Rng + ?Sized>(n: usize, k: usize, fd_ts: f64, rng: &mut R) -> Result<Self, ChannelError> {
        if !(0.0..0.5).contains(&fd_ts) {
            return Err(ChannelError::Doppler(fd_ts));
        }
        let count = JAKES_OSCILLATORS;
        let oscillators = (0..n * k)
            .map(|_| {
                let theta = rng.random_range(-PI..PI);
                (1..=count)
                    .map(|i| {
                        let alpha = (2.0 * PI * i as f64 - PI + theta) / count as f64;
                        (alpha.cos(), rng.random_range(-PI..PI))
                    })
                    .collect()
            })
            .collect();
        Ok(JakesFading {
            n,
            k,
            fd_ts,
            oscillators,
        })
    }

    /// Gains at channel use `t`, row-major `N×K`.
    pub fn gains_at(&self, t: u64) -> Vec<C64> {
        let w = 2.0 * PI * self.fd_ts * t as f64;
        let norm = (self.oscillators[0].len() as f64).sqrt().recip();
        self.oscillators
            .iter()
            .map(|osc| {
                osc.iter()
                    .map(|&(c, phi)| C64::from_polar(1.0, w * c + phi))
                    .sum::<C64>()
                    * norm
            })
            .collect()
    }

    pub fn realization_at(&self, t: u64, noise_var: f64) -> Result<ChannelRealization, ChannelError> {
        ChannelRealization::new(self.n, self.k, self.gains_at(t), noise_var)
    }
}

/// `frames` consecutive realizations of a Jakes process seeded by `rng`.
pub fn jakes_fading<R: Rng + ?Sized>(
    frames: usize,
    n: usize,
    k: usize,
    fd_ts: f64,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<ChannelRealization>, ChannelError> {
    let jakes = JakesFading::new(n, k, fd_ts, rng)?;
    (0..frames as u64).map(|t| jakes.realization_at(t, noise_var)).collect()
}

/// Channel estimation error of variance `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiErrorModel {
    xi: f64,
}

impl CsiErrorModel {
    pub fn new(xi: f64) -> Result<Self, ChannelError> {
        if !(0.0..1.0).contains(&xi) {
            return Err(ChannelError::CsiVariance(xi));
        }
        Ok(CsiErrorModel { xi })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Draws an estimate `h̃` with `h = h̃ + Δh`, `E|h̃|² = 1-ξ`, `E|Δh|² = ξ`
/// and `Δh` independent of `h̃`: `h̃ = (1-ξ)h + sqrt(ξ(1-ξ)) w`.
pub fn corrupt_csi<R: Rng + ?Sized>(ch: &ChannelRealization, model: CsiErrorModel, rng: &mut R) -> ChannelRealization {
    let xi = model.xi;
    if xi == 0.0 {
        return ch.clone();
    }
    let spread = (xi * (1.0 - xi)).sqrt();
    let h =
        ch.h.iter()
            .map(|&h| h * (1.0 - xi) + complex_gaussian(rng, 1.0) * spread)
            .collect();
    ChannelRealization { h, ..ch.clone() }
}

/// Noiseless superposition for codeword indices `symbols[k]`.
pub fn superimpose(cb: &Codebook, symbols: &[usize], ch: &ChannelRealization) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); cb.n()];
    for (k, &m) in symbols.iter().enumerate() {
        let layer = cb.layer(k);
        for &n in layer.mapping().rows() {
            y[n] += ch.gain(n, k) * layer.codeword(m)[n];
        }
    }
    y
}

/// Received vector for codeword indices `symbols[k]` plus `CN(0,σ²)` noise.
pub fn transmit<R: Rng + ?Sized>(cb: &Codebook, symbols: &[usize], ch: &ChannelRealization, rng: &mut R) -> Vec<C64> {
    let mut y = superimpose(cb, symbols, ch);
    for v in &mut y {
        *v += complex_gaussian(rng, ch.noise_var);
    }
    y
}

/// Codeword index of a group of `log2(M)` bits, MSB first.
pub fn bits_to_symbol(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Transmits one codeword per layer given `bits[k]` of length `log2(M)`.
pub fn transmit_bits<R: Rng + ?Sized>(
    cb: &Codebook,
    bits: &[Vec<u8>],
    ch: &ChannelRealization,
    rng: &mut R,
) -> Vec<C64> {
    let symbols: Vec<usize> = bits.iter().map(|b| bits_to_symbol(b)).collect();
    transmit(cb, &symbols, ch, rng)
}

/// Row `H'_n` of the per-resource lattice model `y_n = H'_n u_n + z`.
///
/// `u_n` concatenates the `D` binary coordinates of each colliding layer in
/// the order of `users` (ascending layer index).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRow {
    pub resource: usize,
    pub coeffs: Vec<C64>,
    pub users: Vec<usize>,
    pub dims: usize,
}

impl EffectiveRow {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coordinates of the `slot`-th colliding user.
    pub fn user_span(&self, slot: usize) -> Range<usize> {
        slot * self.dims..(slot + 1) * self.dims
    }

    /// `H'_n u`.
    pub fn apply(&self, u: &[i8]) -> C64 {
        self.coeffs.iter().zip(u).map(|(&h, &ui)| h * f64::from(ui)).sum()
    }
}

/// Builds `H'_n = h_nᵀ diag(g_{n,κ(1)}ᵀ, …, g_{n,κ(d_c)}ᵀ)` from estimated gains.
pub fn effective_row(
    cb: &Codebook,
    graph: &FactorGraph,
    ch_est: &ChannelRealization,
    n: usize,
) -> Result<EffectiveRow, ChannelError> {
    if n >= graph.n() {
        return Err(ChannelError::Resource(n));
    }
    let users = graph.xi(n).to_vec();
    let mut coeffs = Vec::with_capacity(users.len() * cb.bits_per_symbol());
    for &k in &users {
        let g = cb.generator_row(k, n).ok_or(ChannelError::NotLattice)?;
        let h = ch_est.gain(n, k);
        coeffs.extend(g.into_iter().map(|v| h * v));
    }
    Ok(EffectiveRow {
        resource: n,
        coeffs,
        users,
        dims: cb.bits_per_symbol(),
    })
}
