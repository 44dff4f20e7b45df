//! Score hand-written predictions and print the metrics report.

use vtg_harness::metrics::{evaluate, MetricsConfig};
use vtg_harness::{AnnotationSample, Prediction, TimeInterval};

fn iv(a: f64, b: f64) -> TimeInterval {
    TimeInterval::new(a, b).unwrap()
}

fn main() -> vtg_harness::Result<()> {
    let pairs = vec![
        // exact hit
        (
            AnnotationSample::moment_retrieval("v1", 30.0, "dog jumps", vec![iv(3.0, 9.0)])?,
            Prediction::from_windows(vec![iv(3.0, 9.0)]),
        ),
        // IoU 0.6: passes R1@0.5, fails R1@0.7
        (
            AnnotationSample::moment_retrieval("v2", 60.0, "man sits", vec![iv(10.0, 20.0)])?,
            Prediction::from_windows(vec![iv(12.0, 22.0)]),
        ),
        // right window ranked second
        (
            AnnotationSample::moment_retrieval("v3", 90.0, "car leaves", vec![iv(40.0, 50.0)])?,
            Prediction::from_windows(vec![iv(70.0, 80.0), iv(40.0, 50.0)]),
        ),
        // unparseable completion
        (
            AnnotationSample::moment_retrieval("v4", 45.0, "lights off", vec![iv(0.0, 5.0)])?,
            Prediction::from_windows(vec![]),
        ),
    ];
    let (report, per_sample) = evaluate(&pairs, &MetricsConfig::default())?;
    for ((s, _), score) in pairs.iter().zip(&per_sample) {
        println!("{}: IoU {:.3}, R1 hits {:?}", s.video_id, score.iou, score.r1_hits);
    }
    print!("{}", report.to_text());
    Ok(())
}
