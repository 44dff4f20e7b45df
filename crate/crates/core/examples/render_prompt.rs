//! Print the prompt sequence for one query in every timestamp style.
//!
//!     cargo run --example render_prompt -- [num_frames] [duration_s]

use vtg_harness::blueprint::{build_sequence, ImageRef, PromptTemplate};
use vtg_harness::runner::AblationMatrix;
use vtg_harness::sampling::{sample_timestamps, SamplingConfig};
use vtg_harness::{AnnotationSample, TimeInterval};

fn main() -> vtg_harness::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: usize = args.next().map_or(4, |a| a.parse().expect("num_frames"));
    let duration: f64 = args.next().map_or(47.3, |a| a.parse().expect("duration_s"));

    let gt = TimeInterval::new(0.0, duration / 4.0)?;
    let sample = AnnotationSample::moment_retrieval("demo", duration, "person pours coffee", vec![gt])?;
    let timestamps = sample_timestamps(&SamplingConfig::uniform(frames), duration)?;
    let images: Vec<ImageRef> = (0..frames).map(|i| ImageRef::path(format!("frame_{i:03}.jpg"))).collect();

    for row in AblationMatrix::timestamp_design().rows {
        let seq = build_sequence(&sample, &timestamps, &row.style, &PromptTemplate::default(), &images)?;
        println!("== {} {} ({} items)", row.label, row.style, seq.len());
        print!("{}", seq.to_fixture_text());
    }

    let seq = build_sequence(&sample, &timestamps, &Default::default(), &PromptTemplate::zero_shot(), &images)?;
    println!("== zero-shot template");
    print!("{}", seq.to_fixture_text());
    Ok(())
}
