//! Monte-Carlo scenario runner.
//!
//! Frame `f` at grid index `e` draws all of its randomness (bits, fading,
//! noise, CSI error) from the ChaCha8 stream `f + (e << 40)` of the master
//! seed, so results do not depend on the worker count. Every decoder sees
//! the same frames. Frames run in fixed-size batches and the stopping rule
//! is checked between batches only.

use std::path::Path;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use scma_core::channel::{corrupt_csi, noise_variance, transmit, ChannelRealization, CsiErrorModel, JakesFading};
use scma_core::codebook::{bits_of, DEFAULT_PROJECTION_TOL};
use scma_core::coding::{CodedLink, TurboConfig};
use scma_core::format::{parse_codebook, write_codebook};
use scma_core::lsd_mpa::{DecoderVariant, DetectError};
use scma_core::metrics::{measure, ComplexityParams, ComplexityReport, ComplexityRow, RunCounters};
use scma_core::{Codebook, DecoderKind, Detector, C64};
use thiserror::Error;

use crate::config::{CodebookSource, ConfigError, SimConfig};
use crate::output;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("detection failed: {0}")]
    Detect(#[from] DetectError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Counters of one decoder at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub decoder: DecoderKind,
    pub ebno_db: f64,
    pub counters: RunCounters,
    /// Operation counts summed over every detection.
    pub complexity: ComplexityReport,
}

/// Results in grid order, decoders in configuration order within a point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioResult {
    pub points: Vec<PointResult>,
}

impl ScenarioResult {
    pub fn point(&self, decoder: DecoderKind, ebno_db: f64) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.decoder == decoder && p.ebno_db == ebno_db)
    }

    /// Writes `ber.csv`, `nodes.csv` and `flops.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<(), SimError> {
        output::write_all(self, dir)
    }
}

/// A validated scenario with its codebook and per-decoder settings resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: SimConfig,
    codebook: Codebook,
    variants: Vec<DecoderVariant>,
    link: Option<CodedLink>,
}

impl Scenario {
    pub fn new(cfg: SimConfig) -> Result<Self, ConfigError> {
        let codebook = match &cfg.codebook {
            CodebookSource::Build(p) => Codebook::build(*p).map_err(|e| cfg.invalid("k", e.to_string()))?,
            CodebookSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_codebook(&text).map_err(|e| cfg.invalid("codebook", e.to_string()))?
            }
        };
        let it = cfg.it.unwrap_or(if codebook.m() <= 4 { 5 } else { 10 });
        let mut variants = Vec::with_capacity(cfg.decoders.len());
        for &kind in &cfg.decoders {
            let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(kind, &codebook));
            let variant = DecoderVariant {
                epsilon: cfg.epsilon,
                alpha: cfg.alpha,
                ..DecoderVariant::new(kind, t_max, it)
            };
            Detector::new(variant, &codebook).map_err(|e| match e {
                DetectError::ListCapacity { .. } => cfg.invalid("tmax", e.to_string()),
                _ => cfg.invalid("decoder", e.to_string()),
            })?;
            variants.push(variant);
        }
        let link = if cfg.coded {
            let turbo = TurboConfig {
                info_len: cfg.info_len,
                ..TurboConfig::default()
            };
            let link = CodedLink::new(codebook.k(), codebook.bits_per_symbol(), turbo, cfg.seed)
                .map_err(|e| cfg.invalid("info_len", e.to_string()))?;
            Some(link)
        } else {
            None
        };
        Ok(Scenario {
            cfg,
            codebook,
            variants,
            link,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn variants(&self) -> &[DecoderVariant] {
        &self.variants
    }

    /// Codebook in the text exchange format.
    pub fn export_codebook(&self) -> String {
        write_codebook(&self.codebook)
    }

    /// Structural complexity parameters of one detection with `variant`.
    pub fn complexity_params(&self, variant: &DecoderVariant) -> ComplexityParams {
        let graph = self.codebook.factor_graph();
        ComplexityParams {
            n: graph.n() as u64,
            k: graph.k() as u64,
            dc: graph.dc() as u64,
            p: graph.p() as u64,
            m: self.codebook.m() as u64,
            projections: projections(&self.codebook) as u64,
            it: variant.it as u64,
            t_max: variant.t_max as u64,
            visited: Vec::new(),
            radius_updates: 0,
            pm_plain_iterations: 0,
            pm_reference_symbols: 0,
        }
    }

    /// Runs every grid point on a pool of `cfg.workers` threads.
    pub fn run(&self) -> Result<ScenarioResult, SimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .expect("thread pool");
        pool.install(|| self.run_inner())
    }

    fn run_inner(&self) -> Result<ScenarioResult, SimError> {
        let detectors: Vec<Detector> = self
            .variants
            .iter()
            .map(|v| Detector::new(*v, &self.codebook))
            .collect::<Result<_, _>>()?;
        let mut result = ScenarioResult::default();
        for (e, &ebno) in self.cfg.ebno_db.iter().enumerate() {
            let totals = self.run_point(&detectors, e as u64, ebno)?;
            for (variant, counters) in self.variants.iter().zip(totals) {
                let row = ComplexityRow::from(variant.kind);
                let complexity = measure(row, &self.complexity_params(variant), &counters);
                info!(
                    "{} {ebno} dB: {} errors / {} bits over {} frames",
                    variant.kind, counters.bit_errors, counters.bits, counters.frames
                );
                result.points.push(PointResult {
                    decoder: variant.kind,
                    ebno_db: ebno,
                    counters,
                    complexity,
                });
            }
        }
        Ok(result)
    }

    fn run_point(&self, detectors: &[Detector], e: u64, ebno: f64) -> Result<Vec<RunCounters>, SimError> {
        let rate = if self.cfg.coded { 0.5 } else { 1.0 };
        let noise_var = noise_variance(ebno, rate, self.codebook.bits_per_symbol());
        let mut totals = vec![RunCounters::default(); detectors.len()];
        let mut done = 0;
        while done < self.cfg.frames {
            let end = (done + self.cfg.batch).min(self.cfg.frames);
            let batch: Vec<Vec<RunCounters>> = (done..end)
                .into_par_iter()
                .map(|f| self.run_frame(detectors, e, f, noise_var))
                .collect::<Result<_, _>>()?;
            for frame in &batch {
                for (t, c) in totals.iter_mut().zip(frame) {
                    t.merge(c);
                }
            }
            done = end;
            let target = self.cfg.target_errors;
            if target > 0 && totals.iter().all(|t| t.bit_errors >= target) {
                debug!("{ebno} dB: error target reached after {done} frames");
                break;
            }
        }
        Ok(totals)
    }

    /// RNG of frame `frame` at grid index `e`.
    pub fn frame_rng(&self, e: u64, frame: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(frame + (e << 40));
        rng
    }

    fn run_frame(
        &self,
        detectors: &[Detector],
        e: u64,
        frame: u64,
        noise_var: f64,
    ) -> Result<Vec<RunCounters>, SimError> {
        let mut rng = self.frame_rng(e, frame);
        let cb = &self.codebook;
        let (k, d) = (cb.k(), cb.bits_per_symbol());
        let (info, symbols) = match &self.link {
            Some(link) => {
                let info: Vec<Vec<u8>> = (0..k)
                    .map(|_| (0..link.info_len()).map(|_| rng.random_range(0..2u8)).collect())
                    .collect();
                let symbols = link.encode_frame(&info).expect("info length fixed by construction");
                (info, symbols)
            }
            None => {
                let symbols: Vec<Vec<usize>> = (0..self.cfg.symbols_per_frame)
                    .map(|_| (0..k).map(|_| rng.random_range(0..cb.m())).collect())
                    .collect();
                (Vec::new(), symbols)
            }
        };
        let fading = self
            .cfg
            .fd_ts
            .map(|fd_ts| JakesFading::new(cb.n(), k, fd_ts, &mut rng).expect("Doppler validated"));
        let csi = CsiErrorModel::new(self.cfg.csi_xi).expect("CSI variance validated");
        let mut ys: Vec<Vec<C64>> = Vec::with_capacity(symbols.len());
        let mut estimates: Vec<ChannelRealization> = Vec::with_capacity(symbols.len());
        for (t, s) in symbols.iter().enumerate() {
            let ch = match &fading {
                Some(j) => j.realization_at(t as u64, noise_var).expect("dimensions fixed"),
                None => ChannelRealization::rayleigh(cb.n(), k, noise_var, &mut rng).expect("dimensions fixed"),
            };
            ys.push(transmit(cb, s, &ch, &mut rng));
            estimates.push(corrupt_csi(&ch, csi, &mut rng));
        }

        let mut out = Vec::with_capacity(detectors.len());
        for det in detectors {
            let mut c = RunCounters {
                frames: 1,
                ..RunCounters::default()
            };
            match &self.link {
                Some(link) => {
                    let res = link.idd_run(det, &ys, &estimates, self.cfg.outer_loops)?;
                    for (sent, got) in info.iter().zip(&res.decoded) {
                        c.bits += sent.len() as u64;
                        c.bit_errors += sent.iter().zip(got).filter(|(a, b)| a != b).count() as u64;
                    }
                    c.detections = res.detector_calls as u64;
                    c.search = res.stats;
                }
                None => {
                    let priors = vec![0.0; k * d];
                    for ((s, y), est) in symbols.iter().zip(&ys).zip(&estimates) {
                        let det_out = det.detect(y, est, &priors)?;
                        let sent = s.iter().flat_map(|&m| bits_of(m, d));
                        c.bit_errors += sent.zip(det_out.llr.hard_bits()).filter(|(a, b)| *a != *b).count() as u64;
                        c.bits += (k * d) as u64;
                        c.detections += 1;
                        c.search.merge(&det_out.stats);
                    }
                }
            }
            out.push(c);
        }
        Ok(out)
    }
}

/// Largest number of distinct projections of any layer on any resource.
fn projections(cb: &Codebook) -> usize {
    let graph = cb.factor_graph();
    (0..cb.k())
        .flat_map(|k| graph.zeta(k).iter().map(move |&n| (k, n)))
        .filter_map(|(k, n)| cb.projection_groups(k, n, DEFAULT_PROJECTION_TOL).ok())
        .map(|g| g.len())
        .max()
        .unwrap_or(cb.m())
}

/// List size used when none is configured: 600 (120 for LNP lists) with 16
/// points, a quarter of the search space otherwise.
pub fn default_t_max(kind: DecoderKind, cb: &Codebook) -> usize {
    let per_user = if kind.uses_groups() { projections(cb) } else { cb.m() };
    let space = per_user.saturating_pow(cb.factor_graph().dc() as u32);
    let t = if cb.m() >= 16 {
        if kind.uses_groups() {
            120
        } else {
            600
        }
    } else {
        space / 4
    };
    t.clamp(1, space.max(1))
}

/// Validates `cfg`, runs it, writes the CSV files into `cfg.out`.
pub fn run_scenario(cfg: SimConfig) -> Result<ScenarioResult, SimError> {
    let scenario = Scenario::new(cfg)?;
    let result = scenario.run()?;
    let out = &scenario.config().out;
    std::fs::create_dir_all(out).map_err(|source| SimError::Io {
        path: out.clone(),
        source,
    })?;
    result.write_csv(out)?;
    Ok(result)
}
