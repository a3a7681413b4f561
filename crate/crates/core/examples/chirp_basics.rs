//! Chirp parameters, the reference up-chirp and the time/frequency map.

use chirploc::phy::{freq_to_time, preamble, upchirp, ChirpParams};
use chirploc::Result;

pub fn run_example() -> Result<ChirpParams> {
    let p = ChirpParams::new(7, 125e3, 1e6, 8)?;
    let symbol = upchirp(&p)?;
    println!(
        "SF{} at {} kHz: T = {:.3} ms, rate = {:.3e} Hz/s, {} samples/symbol",
        p.sf,
        p.bw / 1e3,
        p.symbol_duration() * 1e3,
        p.chirp_rate(),
        symbol.len()
    );
    println!("preamble: {} samples", preamble(&p)?.len());
    for f in [-60e3, 0.0, 60e3] {
        println!("  {:>+7.0} Hz is swept at t = {:.1} us", f, freq_to_time(f, &p)? * 1e6);
    }
    Ok(p)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
