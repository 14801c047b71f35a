use std::process::ExitCode;

use clap::Parser;
use scma_sim::{Cli, Scenario, SimConfig, SimError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let scenario = match SimConfig::from_cli(&cli).and_then(Scenario::new) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &cli.export_codebook {
        return match std::fs::write(path, scenario.export_codebook()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ExitCode::FAILURE
            }
        };
    }
    match run(&scenario) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(scenario: &Scenario) -> Result<(), SimError> {
    let result = scenario.run()?;
    let out = &scenario.config().out;
    std::fs::create_dir_all(out).map_err(|source| SimError::Io {
        path: out.clone(),
        source,
    })?;
    result.write_csv(out)?;
    for p in &result.points {
        let c = &p.counters;
        println!(
            "{:<11} {:>6} dB  ber {:.3e}  ({} / {} bits, {} frames)",
            p.decoder.name(),
            p.ebno_db,
            if c.bits == 0 {
                0.0
            } else {
                c.bit_errors as f64 / c.bits as f64
            },
            c.bit_errors,
            c.bits,
            c.frames
        );
    }
    Ok(())
}
