//! Parse model completions into windows. Reads one completion per line from
//! stdin when given `-`, otherwise runs through a few canned ones.
//!
//!     cargo run --example parse_outputs -- [style] [duration_s] [-]

use std::io::BufRead;

use vtg_harness::blueprint::TimestampStyle;
use vtg_harness::parsing::{parse_prediction, ParseConfig};

const CANNED: &[&str] = &[
    "[[12, 25], [40, 44]]",
    "The person closes the door near the end.\nANSWER: [50, 58]",
    "```json\n[[30, 10]]\n```",
    "between (20s, 31.5s)",
    "[[1,020, 1,100]]",
    "ANSWER: C [[3, 9]]",
    "I could not find it.",
];

fn main() -> vtg_harness::Result<()> {
    let mut args = std::env::args().skip(1);
    let style: TimestampStyle = args.next().as_deref().unwrap_or("abs-int").parse()?;
    let duration: f64 = args.next().map_or(60.0, |a| a.parse().expect("duration_s"));
    let lines: Vec<String> = if args.next().as_deref() == Some("-") {
        std::io::stdin().lock().lines().map_while(Result::ok).collect()
    } else {
        CANNED.iter().map(|s| s.to_string()).collect()
    };

    let cfg = ParseConfig::new(style, duration).with_options(5);
    for raw in lines {
        let p = parse_prediction(&raw, &cfg);
        let windows: Vec<String> = p.windows.iter().map(ToString::to_string).collect();
        println!("{:<9} {:<28} answer={:?}  <- {:?}", p.parse_status.as_str(), windows.join(" "), p.answer_index, raw);
    }
    Ok(())
}
