//! Plain-text codebook and indicator-matrix files.
//!
//! Codebook file:
//!
//! ```text
//! # optional comment lines
//! K N P M
//! <layer 0: N lines of M `re,im` pairs>
//! <layer 1: ...>
//! ```
//!
//! Row `n` of a layer lists component `n` of codewords `0..M`. Numbers are
//! written with the shortest representation that parses back to the same
//! `f64`, so export followed by import is lossless.
//!
//! Indicator file: `N` rows of `K` whitespace-separated `0`/`1` entries.

use std::fmt::Write as _;

use thiserror::Error;

use crate::codebook::{Codebook, CodebookError};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
}

// Enough for any codebook this crate can search over.
const MAX_DIM: usize = 4096;
const MAX_CELLS: usize = 1 << 20;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, FormatError> {
    tok.parse().map_err(|_| FormatError::Syntax {
        line,
        msg: format!("expected a non-negative integer, found `{tok}`"),
    })
}

fn parse_complex(tok: &str, line: usize) -> Result<C64, FormatError> {
    let err = || FormatError::Syntax {
        line,
        msg: format!("expected `re,im`, found `{tok}`"),
    };
    let (re, im) = tok.split_once(',').ok_or_else(err)?;
    let re: f64 = re.parse().map_err(|_| err())?;
    let im: f64 = im.parse().map_err(|_| err())?;
    if !re.is_finite() || !im.is_finite() {
        return Err(err());
    }
    Ok(C64::new(re, im))
}

/// Parses a codebook file.
pub fn parse_codebook(text: &str) -> Result<Codebook, FormatError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| FormatError::Truncated("missing `K N P M` header".into()))?;
    let dims = header
        .split_whitespace()
        .map(|t| parse_usize(t, hline))
        .collect::<Result<Vec<_>, _>>()?;
    let [k, n, p, m] = dims[..] else {
        return Err(FormatError::Syntax {
            line: hline,
            msg: format!("header needs 4 integers, found {}", dims.len()),
        });
    };
    if k == 0 || n == 0 || p == 0 || m == 0 || k.saturating_mul(n).saturating_mul(m) > MAX_CELLS {
        return Err(FormatError::Syntax {
            line: hline,
            msg: "dimensions out of range".into(),
        });
    }
    let mut tables = vec![vec![vec![C64::new(0.0, 0.0); n]; m]; k];
    for (layer, table) in tables.iter_mut().enumerate() {
        for row in 0..n {
            let (line, body) = lines
                .next()
                .ok_or_else(|| FormatError::Truncated(format!("layer {layer} row {row} missing")))?;
            let mut count = 0;
            for (col, tok) in body.split_whitespace().enumerate() {
                if col >= m {
                    return Err(FormatError::Syntax {
                        line,
                        msg: format!("more than {m} entries"),
                    });
                }
                table[col][row] = parse_complex(tok, line)?;
                count += 1;
            }
            if count != m {
                return Err(FormatError::Syntax {
                    line,
                    msg: format!("expected {m} entries, found {count}"),
                });
            }
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(FormatError::Syntax {
            line,
            msg: "trailing data after last layer".into(),
        });
    }
    Ok(Codebook::from_codewords(n, p, tables)?)
}

/// Serializes a codebook; [`parse_codebook`] restores the same codeword tables.
pub fn write_codebook(cb: &Codebook) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# SCMA codebook: K N P M, then per layer N rows of M re,im pairs");
    let _ = writeln!(out, "{} {} {} {}", cb.k(), cb.n(), cb.p(), cb.m());
    for layer in cb.layers() {
        for row in 0..cb.n() {
            let cells: Vec<String> = layer
                .codewords()
                .iter()
                .map(|x| format!("{:?},{:?}", x[row].re, x[row].im))
                .collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
    out
}

/// Row-major `N×K` binary indicator matrix read from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<u8>,
}

pub fn parse_indicator(text: &str) -> Result<IndicatorMatrix, FormatError> {
    let mut entries = Vec::new();
    let mut k = None;
    let mut n = 0;
    for (line, body) in content_lines(text) {
        let row = body
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(FormatError::Syntax {
                    line,
                    msg: format!("expected 0 or 1, found `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        match k {
            None => k = Some(row.len()),
            Some(k) if k != row.len() => {
                return Err(FormatError::Syntax {
                    line,
                    msg: format!("row has {} entries, expected {k}", row.len()),
                })
            }
            _ => {}
        }
        if row.len() > MAX_DIM || n >= MAX_DIM {
            return Err(FormatError::Syntax {
                line,
                msg: "matrix too large".into(),
            });
        }
        entries.extend(row);
        n += 1;
    }
    let k = k.ok_or_else(|| FormatError::Truncated("empty indicator matrix".into()))?;
    Ok(IndicatorMatrix { n, k, entries })
}

pub fn write_indicator(f: &IndicatorMatrix) -> String {
    let mut out = String::new();
    for row in f.entries.chunks(f.k) {
        let cells: Vec<&str> = row.iter().map(|&b| if b != 0 { "1" } else { "0" }).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{CodebookParams, RotationStyle};

    fn sample() -> Codebook {
        Codebook::build(CodebookParams {
            k: 6,
            n: 4,
            p: 2,
            m: 4,
            style: RotationStyle::Diversity,
        })
        .unwrap()
    }

    #[test]
    fn export_import_is_lossless() {
        let cb = sample();
        let text = write_codebook(&cb);
        let back = parse_codebook(&text).unwrap();
        for (a, b) in cb.layers().iter().zip(back.layers()) {
            assert_eq!(a.codewords(), b.codewords());
            assert_eq!(a.mapping(), b.mapping());
        }
        assert_eq!(write_codebook(&back), text);
    }

    #[test]
    fn header_errors_carry_line_numbers() {
        let err = parse_codebook("# c\n6 4 2\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 2, .. }));
        assert!(parse_codebook("").is_err());
    }

    #[test]
    fn truncated_tables_are_rejected() {
        let text = write_codebook(&sample());
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_codebook(&cut), Err(FormatError::Truncated(_))));
    }

    #[test]
    fn bad_pairs_are_rejected() {
        let err = parse_codebook("1 1 1 2\n1.0,0.0 nan,1\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 2, .. }));
    }

    #[test]
    fn indicator_round_trip() {
        let text = "1 1 1 0 0 0\n1 0 0 1 1 0\n0 1 0 1 0 1\n0 0 1 0 1 1\n";
        let f = parse_indicator(text).unwrap();
        assert_eq!((f.n, f.k), (4, 6));
        assert_eq!(write_indicator(&f), text);
    }

    #[test]
    fn ragged_indicator_is_rejected() {
        assert!(parse_indicator("1 0\n1\n").is_err());
        assert!(parse_indicator("1 2\n").is_err());
        assert!(parse_indicator("\n# only comments\n").is_err());
    }
}
