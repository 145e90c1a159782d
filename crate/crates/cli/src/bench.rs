use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use acme_eqtl::scan::format_float;
use acme_eqtl::simulation::{time_fitters, SimConfig};
use acme_eqtl::Result;
use clap::Args;

use crate::manifest::write_manifest;
use crate::write_file;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Simulated pairs; each fitter runs once per pair.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    #[arg(long, default_value_t = 105)]
    n: usize,
    #[arg(long, default_value_t = 19)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Timing table TSV.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: BenchArgs) -> Result<()> {
    let started = Instant::now();
    let config = SimConfig {
        n: args.n,
        p: args.p,
        seed: args.seed,
        ..SimConfig::default()
    };
    let timings = time_fitters(&config, args.pairs)?;
    write_file(&args.out, |w| {
        writeln!(w, "method\tpairs\tmean_ms\tsd_ms\tfailures")?;
        for t in &timings {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                t.method,
                t.pairs,
                format_float(t.mean_ms),
                format_float(t.sd_ms),
                t.failures
            )?;
        }
        Ok(())
    })?;
    write_manifest(&args.out, started, Some(args.seed), 1, &[], std::slice::from_ref(&args.out))
}
