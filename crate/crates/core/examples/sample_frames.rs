//! Frame timestamps from the uniform and jittered samplers.
//!
//!     cargo run --example sample_frames -- [num_frames] [duration_s] [seed]

use vtg_harness::sampling::{interval_boundaries, sample_timestamps, SamplingConfig};

fn show(label: &str, ts: &[f64]) {
    let parts: Vec<String> = ts.iter().map(|t| format!("{t:.2}")).collect();
    println!("{label:>9}: {}", parts.join(" "));
}

fn main() -> vtg_harness::Result<()> {
    let mut args = std::env::args().skip(1);
    let f: usize = args.next().map_or(8, |a| a.parse().expect("num_frames"));
    let d: f64 = args.next().map_or(60.0, |a| a.parse().expect("duration_s"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    show("bounds", &interval_boundaries(f, d));
    show("uniform", &sample_timestamps(&SamplingConfig::uniform(f), d)?);
    for s in [seed, seed, seed + 1] {
        show(&format!("seed {s}"), &sample_timestamps(&SamplingConfig::jittered(f, Some(s)), d)?);
    }
    Ok(())
}
