//! Scenario configuration: a flat TOML file overridden by command-line flags.
//!
//! Every flag has a file key of the same name with `-` replaced by `_`
//! (`--csi-xi` is `csi_xi`). Semantic errors point at the offending line
//! when the value came from the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;
use scma_core::codebook::{CodebookParams, RotationStyle};
use scma_core::DecoderKind;
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{origin}: {key}: {message}")]
    Invalid {
        origin: Origin,
        key: &'static str,
        message: String,
    },
}

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    Flag,
    File { path: PathBuf, line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::Flag => f.write_str("command line"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
        }
    }
}

/// Command-line interface of `scma-sim`.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "scma-sim", version, about = "SCMA uplink BER and complexity simulator")]
pub struct Cli {
    /// TOML scenario file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated decoders: maxlog-mpa, log-mpa, lsd-mpa, np-lsd-mpa, lnp, lsd-lnp.
    #[arg(long)]
    pub decoder: Option<String>,
    /// Comma-separated Eb/N0 grid in dB.
    #[arg(long)]
    pub ebno: Option<String>,
    /// Maximum frames per Eb/N0 point.
    #[arg(long)]
    pub frames: Option<u64>,
    /// Stop a point once every decoder has this many bit errors (0 disables).
    #[arg(long)]
    pub target_errors: Option<u64>,
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Regularization weight; defaults to the noise standard deviation.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// MPA iterations; defaults to 5 for M <= 4, otherwise 10.
    #[arg(long)]
    pub it: Option<usize>,
    /// Outer detection/decoding loops (coded runs).
    #[arg(long)]
    pub outer: Option<usize>,
    #[arg(long, action = clap::ArgAction::Set)]
    pub coded: Option<bool>,
    /// Normalized Doppler; omit for independent fading per channel use.
    #[arg(long)]
    pub fdts: Option<f64>,
    /// CSI error variance.
    #[arg(long)]
    pub csi_xi: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Codebook text file; overrides k, n, p, m and style.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// Output directory for ber.csv, nodes.csv and flops.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Rotation style: diversity, lnp or identity.
    #[arg(long)]
    pub style: Option<String>,
    /// Channel uses per uncoded frame.
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Info bits per layer per coded frame.
    #[arg(long)]
    pub info_len: Option<usize>,
    /// Frames simulated between stopping checks.
    #[arg(long)]
    pub batch: Option<u64>,
    /// Write the configured codebook in text form to this path and exit.
    #[arg(long)]
    pub export_codebook: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    decoder: Option<Spanned<Vec<String>>>,
    ebno: Option<Spanned<Vec<f64>>>,
    frames: Option<Spanned<u64>>,
    target_errors: Option<Spanned<u64>>,
    tmax: Option<Spanned<usize>>,
    epsilon: Option<Spanned<f64>>,
    alpha: Option<Spanned<f64>>,
    it: Option<Spanned<usize>>,
    outer: Option<Spanned<usize>>,
    coded: Option<Spanned<bool>>,
    fdts: Option<Spanned<f64>>,
    csi_xi: Option<Spanned<f64>>,
    seed: Option<Spanned<u64>>,
    codebook: Option<Spanned<PathBuf>>,
    out: Option<Spanned<PathBuf>>,
    workers: Option<Spanned<usize>>,
    k: Option<Spanned<usize>>,
    n: Option<Spanned<usize>>,
    p: Option<Spanned<usize>>,
    m: Option<Spanned<usize>>,
    style: Option<Spanned<String>>,
    symbols: Option<Spanned<usize>>,
    info_len: Option<Spanned<usize>>,
    batch: Option<Spanned<u64>>,
}

/// Codebook selection.
#[derive(Debug, Clone, PartialEq)]
pub enum CodebookSource {
    Build(CodebookParams),
    File(PathBuf),
}

/// Fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub codebook: CodebookSource,
    pub decoders: Vec<DecoderKind>,
    pub ebno_db: Vec<f64>,
    pub frames: u64,
    pub target_errors: u64,
    /// List size for list-based decoders; `None` picks a per-codebook default.
    pub t_max: Option<usize>,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub it: Option<usize>,
    pub outer_loops: usize,
    pub coded: bool,
    pub fd_ts: Option<f64>,
    pub csi_xi: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub symbols_per_frame: usize,
    pub info_len: usize,
    pub batch: u64,
    origins: BTreeMap<&'static str, Origin>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            codebook: CodebookSource::Build(CodebookParams {
                k: 6,
                n: 4,
                p: 2,
                m: 4,
                style: RotationStyle::Diversity,
            }),
            decoders: vec![DecoderKind::MaxLogMpa, DecoderKind::LsdMpa, DecoderKind::NpLsdMpa],
            ebno_db: vec![0.0, 2.0, 4.0, 6.0],
            frames: 1000,
            target_errors: 200,
            t_max: None,
            epsilon: 0.001,
            alpha: None,
            it: None,
            outer_loops: 3,
            coded: false,
            fd_ts: None,
            csi_xi: 0.0,
            seed: 1,
            out: PathBuf::from("results"),
            workers: 1,
            symbols_per_frame: 256,
            info_len: 4096,
            batch: 16,
            origins: BTreeMap::new(),
        }
    }
}

impl SimConfig {
    /// Origin of `key`, for error messages raised after validation.
    pub fn origin(&self, key: &str) -> Origin {
        self.origins.get(key).cloned().unwrap_or(Origin::Default)
    }

    /// Error attributed to the setting `key`.
    pub fn invalid(&self, key: &'static str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            origin: self.origin(key),
            key,
            message: message.into(),
        }
    }

    /// Parses a config file body. `path` only labels error messages.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        Self::resolve(Some((text, path)), &Cli::default())
    }

    /// Reads `cli.config` if given and applies the flags on top.
    pub fn from_cli(cli: &Cli) -> Result<Self, ConfigError> {
        match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                Self::resolve(Some((&text, path)), cli)
            }
            None => Self::resolve(None, cli),
        }
    }

    fn resolve(file: Option<(&str, &Path)>, cli: &Cli) -> Result<Self, ConfigError> {
        let (raw, text, path) = match file {
            Some((text, path)) => {
                let raw: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
                    origin: Origin::File {
                        path: path.to_path_buf(),
                        line: e.span().map_or(1, |s| line_of(text, s.start)),
                    },
                    message: e.message().to_string(),
                })?;
                (raw, text, path.to_path_buf())
            }
            None => (FileConfig::default(), "", PathBuf::new()),
        };
        let mut b = Builder {
            cfg: SimConfig::default(),
            text,
            path,
        };
        let d = SimConfig::default();

        let decoders: Option<Vec<String>> = cli.decoder.as_ref().map(|s| s.split(',').map(str::to_string).collect());
        let names = b.pick("decoder", raw.decoder, decoders, Vec::new());
        if !names.is_empty() {
            b.cfg.decoders = names
                .iter()
                .map(|s| {
                    s.parse::<DecoderKind>()
                        .map_err(|e| b.cfg.invalid("decoder", e.to_string()))
                })
                .collect::<Result<_, _>>()?;
        }
        let ebno = match &cli.ebno {
            Some(s) => Some(
                s.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ConfigError::Invalid {
                        origin: Origin::Flag,
                        key: "ebno",
                        message: e.to_string(),
                    })?,
            ),
            None => None,
        };
        b.cfg.ebno_db = b.pick("ebno", raw.ebno, ebno, d.ebno_db);
        b.cfg.frames = b.pick("frames", raw.frames, cli.frames, d.frames);
        b.cfg.target_errors = b.pick("target_errors", raw.target_errors, cli.target_errors, d.target_errors);
        b.cfg.t_max = b.pick_opt("tmax", raw.tmax, cli.tmax);
        b.cfg.epsilon = b.pick("epsilon", raw.epsilon, cli.epsilon, d.epsilon);
        b.cfg.alpha = b.pick_opt("alpha", raw.alpha, cli.alpha);
        b.cfg.it = b.pick_opt("it", raw.it, cli.it);
        b.cfg.outer_loops = b.pick("outer", raw.outer, cli.outer, d.outer_loops);
        b.cfg.coded = b.pick("coded", raw.coded, cli.coded, d.coded);
        b.cfg.fd_ts = b.pick_opt("fdts", raw.fdts, cli.fdts);
        b.cfg.csi_xi = b.pick("csi_xi", raw.csi_xi, cli.csi_xi, d.csi_xi);
        b.cfg.seed = b.pick("seed", raw.seed, cli.seed, d.seed);
        b.cfg.out = b.pick("out", raw.out, cli.out.clone(), d.out);
        b.cfg.workers = b.pick("workers", raw.workers, cli.workers, d.workers);
        b.cfg.symbols_per_frame = b.pick("symbols", raw.symbols, cli.symbols, d.symbols_per_frame);
        b.cfg.info_len = b.pick("info_len", raw.info_len, cli.info_len, d.info_len);
        b.cfg.batch = b.pick("batch", raw.batch, cli.batch, d.batch);

        let CodebookSource::Build(dp) = d.codebook else {
            unreachable!("default codebook is built")
        };
        let k = b.pick("k", raw.k, cli.k, dp.k);
        let n = b.pick("n", raw.n, cli.n, dp.n);
        let p = b.pick("p", raw.p, cli.p, dp.p);
        let m = b.pick("m", raw.m, cli.m, dp.m);
        let style_name = b.pick("style", raw.style, cli.style.clone(), "diversity".to_string());
        let style = style_name
            .parse::<RotationStyle>()
            .map_err(|e| b.cfg.invalid("style", e.to_string()))?;
        let file = b.pick_opt("codebook", raw.codebook, cli.codebook.clone());
        b.cfg.codebook = match file {
            Some(path) => CodebookSource::File(path),
            None => CodebookSource::Build(CodebookParams { k, n, p, m, style }),
        };
        b.cfg.validate()?;
        Ok(b.cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.decoders.is_empty() {
            return Err(self.invalid("decoder", "at least one decoder is required"));
        }
        if self.ebno_db.is_empty() {
            return Err(self.invalid("ebno", "grid must not be empty"));
        }
        if self.ebno_db.iter().any(|v| !v.is_finite()) {
            return Err(self.invalid("ebno", "values must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(self.invalid("epsilon", "must lie in (0, 1)"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(self.invalid("alpha", "must be positive"));
            }
        }
        if self.t_max == Some(0) {
            return Err(self.invalid("tmax", "must be at least 1"));
        }
        if self.it == Some(0) {
            return Err(self.invalid("it", "must be at least 1"));
        }
        if self.outer_loops == 0 {
            return Err(self.invalid("outer", "must be at least 1"));
        }
        if let Some(f) = self.fd_ts {
            if !(0.0..0.5).contains(&f) {
                return Err(self.invalid("fdts", "must lie in [0, 0.5)"));
            }
        }
        if !(0.0..1.0).contains(&self.csi_xi) {
            return Err(self.invalid("csi_xi", "must lie in [0, 1)"));
        }
        for (key, v) in [
            ("workers", self.workers),
            ("symbols", self.symbols_per_frame),
            ("info_len", self.info_len),
        ] {
            if v == 0 {
                return Err(self.invalid(key, "must be at least 1"));
            }
        }
        if self.batch == 0 {
            return Err(self.invalid("batch", "must be at least 1"));
        }
        match &self.codebook {
            CodebookSource::File(path) if !path.is_file() => {
                Err(self.invalid("codebook", format!("{} does not exist", path.display())))
            }
            CodebookSource::Build(p) if p.m < 2 || !p.m.is_power_of_two() => {
                Err(self.invalid("m", "must be a power of two, at least 2"))
            }
            _ => Ok(()),
        }
    }
}

struct Builder<'a> {
    cfg: SimConfig,
    text: &'a str,
    path: PathBuf,
}

impl Builder<'_> {
    fn pick<T>(&mut self, key: &'static str, file: Option<Spanned<T>>, flag: Option<T>, default: T) -> T {
        self.pick_opt(key, file, flag).unwrap_or(default)
    }

    fn pick_opt<T>(&mut self, key: &'static str, file: Option<Spanned<T>>, flag: Option<T>) -> Option<T> {
        if let Some(v) = flag {
            self.cfg.origins.insert(key, Origin::Flag);
            return Some(v);
        }
        let s = file?;
        let line = line_of(self.text, s.span().start);
        self.cfg.origins.insert(
            key,
            Origin::File {
                path: self.path.clone(),
                line,
            },
        );
        Some(s.into_inner())
    }
}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}
