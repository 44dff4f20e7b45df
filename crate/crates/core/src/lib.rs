//! Evaluation harness for video temporal grounding with chat-style vision models.
//!
//! The pieces, in pipeline order:
//!
//! - [`sampling`] picks frame timestamps (uniform midpoints or jittered);
//! - [`blueprint`] renders frames interleaved with their timestamps, the video
//!   duration, the query and the task prompt, in any timestamp style;
//! - [`client`] sends the sequence to a chat-completions endpoint, with an
//!   on-disk cache and a scriptable [`client::mock::MockServer`];
//! - [`parsing`] turns completions back into ranked windows;
//! - [`metrics`] computes R1@τ, mIoU, mAP, IoP and grounded-QA accuracies;
//! - [`runner`] wires it all together, including ablation matrices and
//!   fine-tuning exports; [`datasets`] and [`config`] feed it.
//!
//! ```
//! use vtg_harness::blueprint::{render_timestamp, TimestampStyle};
//! use vtg_harness::parsing::{parse_prediction, ParseConfig};
//!
//! let style = TimestampStyle::default();
//! assert_eq!(render_timestamp(&style, 79.9, 200.0).unwrap(), "80");
//!
//! let pred = parse_prediction("ANSWER: [[12, 25]]", &ParseConfig::new(style, 150.0));
//! assert_eq!(pred.windows[0].end_s(), 25.0);
//! ```

pub mod blueprint;
pub mod client;
pub mod config;
pub mod datasets;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod parsing;
pub mod runner;
pub mod sampling;
pub mod synthetic;

pub use domain::{interval_iop, interval_iou, AnnotationSample, ParseStatus, Prediction, Task, TimeInterval};
pub use error::{Error, Result};
