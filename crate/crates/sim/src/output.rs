//! CSV artifacts. Headers are always written, so a run without frames
//! leaves header-only files.

use std::path::Path;

use crate::runner::{ScenarioResult, SimError};

pub const BER_HEADER: [&str; 6] = ["decoder", "ebno_db", "bits", "errors", "ber", "frames"];
pub const NODES_HEADER: [&str; 4] = ["decoder", "ebno_db", "level", "mean_visited"];
pub const FLOPS_HEADER: [&str; 6] = [
    "decoder",
    "ebno_db",
    "summations",
    "multiplications",
    "comparisons",
    "sqrts",
];

pub fn write_all(result: &ScenarioResult, dir: &Path) -> Result<(), SimError> {
    let mut ber = csv::Writer::from_path(dir.join("ber.csv"))?;
    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    let mut flops = csv::Writer::from_path(dir.join("flops.csv"))?;
    ber.write_record(BER_HEADER)?;
    nodes.write_record(NODES_HEADER)?;
    flops.write_record(FLOPS_HEADER)?;
    for p in result.points.iter().filter(|p| p.counters.frames > 0) {
        let c = &p.counters;
        let name = p.decoder.name();
        let ebno = p.ebno_db.to_string();
        let rate = if c.bits == 0 {
            0.0
        } else {
            c.bit_errors as f64 / c.bits as f64
        };
        ber.write_record([
            name,
            &ebno,
            &c.bits.to_string(),
            &c.bit_errors.to_string(),
            &rate.to_string(),
            &c.frames.to_string(),
        ])?;
        if p.decoder.uses_list() {
            for (level, mean) in c.mean_visited().iter().enumerate() {
                nodes.write_record([name, &ebno, &(level + 1).to_string(), &mean.to_string()])?;
            }
        }
        // Per-detection averages of the accumulated counts.
        let per = |v: u64| (v as f64 / c.detections.max(1) as f64).to_string();
        let r = &p.complexity;
        flops.write_record([
            name,
            &ebno,
            &per(r.summations),
            &per(r.multiplications),
            &per(r.comparisons),
            &per(r.sqrts),
        ])?;
    }
    ber.flush()
        .and(nodes.flush())
        .and(flops.flush())
        .map_err(|source| SimError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    Ok(())
}
