//! Send one prompt to the bundled mock endpoint, twice, and watch the cache.

use vtg_harness::blueprint::{build_sequence, ImageRef, PromptTemplate, TimestampStyle};
use vtg_harness::client::mock::{MockRule, MockScript, MockServer};
use vtg_harness::client::{ChatClient, ClientConfig};
use vtg_harness::parsing::{parse_prediction, ParseConfig};
use vtg_harness::sampling::{sample_timestamps, SamplingConfig};
use vtg_harness::{AnnotationSample, TimeInterval};

fn main() -> vtg_harness::Result<()> {
    let script = MockScript {
        default_response: "[]".into(),
        rules: vec![MockRule {
            contains: "person opens door".into(),
            response: "The door opens early on.\nANSWER: [[2, 7]]".into(),
        }],
        ..MockScript::default()
    };
    let server = MockServer::start(script)?;
    let cache = std::env::temp_dir().join(format!("vtg-mock-roundtrip-{}", std::process::id()));

    let sample = AnnotationSample::moment_retrieval("toy", 30.0, "person opens door", vec![TimeInterval::new(3.0, 9.0)?])?;
    let ts = sample_timestamps(&SamplingConfig::uniform(3), sample.duration_s)?;
    let images: Vec<ImageRef> = (0..3u8)
        .map(|i| ImageRef::Bytes { media_type: "image/jpeg".into(), data: vec![0xff, 0xd8, i] })
        .collect();
    let style = TimestampStyle::default();
    let seq = build_sequence(&sample, &ts, &style, &PromptTemplate::default(), &images)?;

    let client = ChatClient::new(ClientConfig {
        endpoint_url: server.url(),
        cache_dir: Some(cache.clone()),
        ..ClientConfig::default()
    })?;
    for attempt in 0..2 {
        let text = client.complete(&seq, 0)?;
        let pred = parse_prediction(&text, &ParseConfig::new(style, sample.duration_s));
        println!(
            "call {attempt}: {:?} -> {} ({}), network requests so far {}",
            text,
            pred.windows[0],
            pred.parse_status,
            client.network_requests()
        );
    }
    std::fs::remove_dir_all(cache).ok();
    Ok(())
}
