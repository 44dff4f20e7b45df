//! Moment-retrieval and grounded-QA scoring.
//!
//! Generative models emit no confidence scores, so the position of a window in
//! the predicted list is its rank. Average precision is the uninterpolated
//! area under the precision/recall curve: precision at each true-positive rank
//! summed and divided by the number of ground-truth windows. Absolute mAP
//! values are therefore comparable only across runs of this harness, not with
//! leaderboards that score ranked proposals.

use serde::{Deserialize, Serialize};

use crate::domain::{interval_iop, interval_iou, AnnotationSample, ParseStatus, Prediction, Task, TimeInterval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub recall_thresholds: Vec<f64>,
    pub map_thresholds: Vec<f64>,
    pub report_map_at: Vec<f64>,
    pub iop_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            recall_thresholds: vec![0.5, 0.7],
            map_thresholds: (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect(),
            report_map_at: vec![0.5, 0.75],
            iop_threshold: 0.5,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .recall_thresholds
            .iter()
            .chain(&self.map_thresholds)
            .chain(&self.report_map_at)
            .chain(std::iter::once(&self.iop_threshold));
        for &t in all {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("threshold {t} outside (0, 1]")));
            }
        }
        if self.map_thresholds.is_empty() {
            return Err(Error::Config("map_thresholds must not be empty".into()));
        }
        Ok(())
    }
}

/// Metric value at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtThreshold {
    pub threshold: f64,
    pub value: f64,
}

fn lookup(list: &[AtThreshold], threshold: f64) -> Option<f64> {
    list.iter()
        .find(|a| (a.threshold - threshold).abs() < 1e-9)
        .map(|a| a.value)
}

/// Dataset-level scores. Every value except the counts is a percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub r1_at: Vec<AtThreshold>,
    pub miou: f64,
    pub map_at: Vec<AtThreshold>,
    pub map_avg: f64,
    pub miop: f64,
    pub iop_at: Vec<AtThreshold>,
    pub a_gqa: Option<f64>,
    pub a_qa: Option<f64>,
    pub n_samples: usize,
    pub n_failed_parses: usize,
    pub n_runs: usize,
}

impl MetricsReport {
    pub fn r1(&self, threshold: f64) -> Option<f64> {
        lookup(&self.r1_at, threshold)
    }

    pub fn map(&self, threshold: f64) -> Option<f64> {
        lookup(&self.map_at, threshold)
    }

    pub fn iop(&self, threshold: f64) -> Option<f64> {
        lookup(&self.iop_at, threshold)
    }

    /// Mean of per-run reports. Failed parses are summed across runs.
    pub fn average(runs: &[MetricsReport]) -> Result<MetricsReport> {
        let first = runs
            .first()
            .ok_or_else(|| Error::invalid("cannot average zero reports"))?;
        let n = runs.len() as f64;
        let mean = |f: &dyn Fn(&MetricsReport) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let mean_at = |f: &dyn Fn(&MetricsReport) -> &Vec<AtThreshold>| {
            f(first)
                .iter()
                .enumerate()
                .map(|(i, a)| AtThreshold {
                    threshold: a.threshold,
                    value: runs.iter().map(|r| f(r)[i].value).sum::<f64>() / n,
                })
                .collect::<Vec<_>>()
        };
        let mean_opt = |f: &dyn Fn(&MetricsReport) -> Option<f64>| {
            f(first).map(|_| runs.iter().map(|r| f(r).unwrap_or(0.0)).sum::<f64>() / n)
        };
        Ok(MetricsReport {
            r1_at: mean_at(&|r| &r.r1_at),
            miou: mean(&|r| r.miou),
            map_at: mean_at(&|r| &r.map_at),
            map_avg: mean(&|r| r.map_avg),
            miop: mean(&|r| r.miop),
            iop_at: mean_at(&|r| &r.iop_at),
            a_gqa: mean_opt(&|r| r.a_gqa),
            a_qa: mean_opt(&|r| r.a_qa),
            n_samples: first.n_samples,
            n_failed_parses: runs.iter().map(|r| r.n_failed_parses).sum(),
            n_runs: runs.iter().map(|r| r.n_runs).sum(),
        })
    }

    /// Aligned two-column plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        for a in &self.r1_at {
            rows.push((format!("R1@{}", a.threshold), format!("{:.2}", a.value)));
        }
        rows.push(("mIoU".into(), format!("{:.2}", self.miou)));
        for a in &self.map_at {
            rows.push((format!("mAP@{}", a.threshold), format!("{:.2}", a.value)));
        }
        rows.push(("mAP avg".into(), format!("{:.2}", self.map_avg)));
        rows.push(("mIoP".into(), format!("{:.2}", self.miop)));
        for a in &self.iop_at {
            rows.push((format!("IoP@{}", a.threshold), format!("{:.2}", a.value)));
        }
        if let Some(v) = self.a_qa {
            rows.push(("A@QA".into(), format!("{v:.2}")));
        }
        if let Some(v) = self.a_gqa {
            rows.push(("A@GQA".into(), format!("{v:.2}")));
        }
        rows.push(("samples".into(), self.n_samples.to_string()));
        rows.push(("runs".into(), self.n_runs.to_string()));
        rows.push(("failed parses".into(), self.n_failed_parses.to_string()));
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<w$}  {v:>8}\n"));
        }
        out
    }

    /// Header and value rows for a one-line CSV summary.
    pub fn csv_fields(&self) -> Vec<(String, String)> {
        let mut f = Vec::new();
        for a in &self.r1_at {
            f.push((format!("r1@{}", a.threshold), a.value.to_string()));
        }
        f.push(("miou".into(), self.miou.to_string()));
        for a in &self.map_at {
            f.push((format!("map@{}", a.threshold), a.value.to_string()));
        }
        f.push(("map_avg".into(), self.map_avg.to_string()));
        f.push(("miop".into(), self.miop.to_string()));
        for a in &self.iop_at {
            f.push((format!("iop@{}", a.threshold), a.value.to_string()));
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        f.push(("a_qa".into(), opt(self.a_qa)));
        f.push(("a_gqa".into(), opt(self.a_gqa)));
        f.push(("n_samples".into(), self.n_samples.to_string()));
        f.push(("n_runs".into(), self.n_runs.to_string()));
        f.push(("n_failed_parses".into(), self.n_failed_parses.to_string()));
        f
    }
}

fn best_over<F>(window: &TimeInterval, gts: &[TimeInterval], score: F) -> f64
where
    F: Fn(&TimeInterval, &TimeInterval) -> f64,
{
    gts.iter().map(|g| score(window, g)).fold(0.0, f64::max)
}

/// Top-1 window reaches IoU >= `tau` with some ground-truth window.
pub fn recall1_hit(pred: &Prediction, gts: &[TimeInterval], tau: f64) -> bool {
    pred.top1()
        .is_some_and(|w| best_over(w, gts, interval_iou) >= tau)
}

/// IoU of the top-1 window against its best-matching ground truth.
pub fn sample_miou(pred: &Prediction, gts: &[TimeInterval]) -> f64 {
    pred.top1().map_or(0.0, |w| best_over(w, gts, interval_iou))
}

/// IoP of the top-1 window against its best-matching ground truth.
pub fn sample_iop(pred: &Prediction, gts: &[TimeInterval]) -> f64 {
    pred.top1().map_or(0.0, |w| best_over(w, gts, interval_iop))
}

/// Rank-order greedy matching: for each prediction, whether it is a true positive.
///
/// A prediction claims the unmatched ground truth with the highest IoU at or
/// above `tau`; ties go to the earlier-starting ground truth.
pub fn match_predictions(preds: &[TimeInterval], gts: &[TimeInterval], tau: f64) -> Vec<bool> {
    let mut taken = vec![false; gts.len()];
    preds
        .iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if taken[j] {
                    continue;
                }
                let iou = interval_iou(p, g);
                if iou < tau {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bj, biou)) => {
                        iou > biou || (iou == biou && g.start_s() < gts[bj].start_s())
                    }
                };
                if better {
                    best = Some((j, iou));
                }
            }
            match best {
                Some((j, _)) => {
                    taken[j] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

pub fn average_precision(preds: &[TimeInterval], gts: &[TimeInterval], tau: f64) -> Result<f64> {
    if gts.is_empty() {
        return Err(Error::invalid("average precision needs at least one ground-truth window"));
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (k, hit) in match_predictions(preds, gts, tau).into_iter().enumerate() {
        if hit {
            tp += 1;
            sum += tp as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / gts.len() as f64)
}

/// Per-sample, per-run scores; the rows of `per_sample.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub r1_hits: Vec<bool>,
    pub iou: f64,
    pub ap: Vec<f64>,
    pub iop: f64,
    pub answer_correct: Option<bool>,
    pub grounded_correct: Option<bool>,
    pub parse_status: ParseStatus,
}

fn all_map_thresholds(cfg: &MetricsConfig) -> Vec<f64> {
    let mut ts = cfg.map_thresholds.clone();
    for &t in &cfg.report_map_at {
        if !ts.iter().any(|x| (x - t).abs() < 1e-9) {
            ts.push(t);
        }
    }
    ts
}

pub fn score_sample(sample: &AnnotationSample, pred: &Prediction, cfg: &MetricsConfig) -> Result<SampleScore> {
    let gts = &sample.gt_windows;
    let ap = all_map_thresholds(cfg)
        .into_iter()
        .map(|t| average_precision(&pred.windows, gts, t))
        .collect::<Result<Vec<_>>>()?;
    let iop = sample_iop(pred, gts);
    let (answer_correct, grounded_correct) = match sample.task {
        Task::GroundedQa => {
            let gold = sample.qa_answer_index.ok_or_else(|| {
                Error::invalid(format!("video `{}`: grounded QA sample without answer", sample.video_id))
            })?;
            let correct = pred.answer_index == Some(gold);
            (Some(correct), Some(correct && iop >= cfg.iop_threshold))
        }
        Task::MomentRetrieval => (None, None),
    };
    Ok(SampleScore {
        r1_hits: cfg
            .recall_thresholds
            .iter()
            .map(|&t| recall1_hit(pred, gts, t))
            .collect(),
        iou: sample_miou(pred, gts),
        ap,
        iop,
        answer_correct,
        grounded_correct,
        parse_status: pred.parse_status,
    })
}

fn pct(count: usize, n: usize) -> f64 {
    100.0 * count as f64 / n as f64
}

/// Aggregate per-sample scores of a single run.
pub fn aggregate(scores: &[SampleScore], cfg: &MetricsConfig) -> Result<MetricsReport> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::invalid("cannot score an empty sample set"));
    }
    let nf = n as f64;
    let map_ts = all_map_thresholds(cfg);
    let mean_ap = |idx: usize| 100.0 * scores.iter().map(|s| s.ap[idx]).sum::<f64>() / nf;
    let map_avg = (0..cfg.map_thresholds.len()).map(mean_ap).sum::<f64>() / cfg.map_thresholds.len() as f64;
    let map_at = cfg
        .report_map_at
        .iter()
        .map(|&t| {
            let idx = map_ts.iter().position(|x| (x - t).abs() < 1e-9).unwrap();
            AtThreshold { threshold: t, value: mean_ap(idx) }
        })
        .collect();
    let r1_at = cfg
        .recall_thresholds
        .iter()
        .enumerate()
        .map(|(i, &t)| AtThreshold {
            threshold: t,
            value: pct(scores.iter().filter(|s| s.r1_hits[i]).count(), n),
        })
        .collect();
    let qa: Vec<&SampleScore> = scores.iter().filter(|s| s.answer_correct.is_some()).collect();
    let (a_qa, a_gqa) = if qa.is_empty() {
        (None, None)
    } else {
        (
            Some(pct(qa.iter().filter(|s| s.answer_correct == Some(true)).count(), qa.len())),
            Some(pct(qa.iter().filter(|s| s.grounded_correct == Some(true)).count(), qa.len())),
        )
    };
    Ok(MetricsReport {
        r1_at,
        miou: 100.0 * scores.iter().map(|s| s.iou).sum::<f64>() / nf,
        map_at,
        map_avg,
        miop: 100.0 * scores.iter().map(|s| s.iop).sum::<f64>() / nf,
        iop_at: vec![AtThreshold {
            threshold: cfg.iop_threshold,
            value: pct(scores.iter().filter(|s| s.iop >= cfg.iop_threshold).count(), n),
        }],
        a_gqa,
        a_qa,
        n_samples: n,
        n_failed_parses: scores.iter().filter(|s| s.parse_status == ParseStatus::Failed).count(),
        n_runs: 1,
    })
}

/// Score one run over `(sample, prediction)` pairs.
pub fn evaluate(pairs: &[(AnnotationSample, Prediction)], cfg: &MetricsConfig) -> Result<(MetricsReport, Vec<SampleScore>)> {
    cfg.validate()?;
    let scores = pairs
        .iter()
        .map(|(s, p)| score_sample(s, p, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((aggregate(&scores, cfg)?, scores))
}

/// Grounded-QA statistics as percentages: `(mIoP, IoP@threshold, A@GQA, A@QA)`.
pub fn gqa_metrics(pairs: &[(AnnotationSample, Prediction)], cfg: &MetricsConfig) -> Result<(f64, f64, f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::invalid("cannot score an empty sample set"));
    }
    let n = pairs.len();
    let (mut iop_sum, mut iop_hits, mut qa, mut gqa) = (0.0, 0usize, 0usize, 0usize);
    for (sample, pred) in pairs {
        let gold = sample.qa_answer_index.ok_or_else(|| {
            Error::invalid(format!("video `{}`: grounded QA sample without answer", sample.video_id))
        })?;
        let iop = sample_iop(pred, &sample.gt_windows);
        iop_sum += iop;
        let grounded = iop >= cfg.iop_threshold;
        iop_hits += usize::from(grounded);
        if pred.answer_index == Some(gold) {
            qa += 1;
            gqa += usize::from(grounded);
        }
    }
    Ok((100.0 * iop_sum / n as f64, pct(iop_hits, n), pct(gqa, n), pct(qa, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    fn pred(ws: &[(f64, f64)]) -> Prediction {
        Prediction::from_windows(ws.iter().map(|&(a, b)| iv(a, b)).collect())
    }

    #[test]
    fn recall_examples() {
        assert!(recall1_hit(&pred(&[(0.0, 10.0)]), &[iv(0.0, 10.0)], 0.7));
        assert!(!recall1_hit(&pred(&[(0.0, 10.0)]), &[iv(5.0, 15.0)], 0.5));
        assert!(!recall1_hit(&pred(&[]), &[iv(0.0, 10.0)], 0.1));
    }

    #[test]
    fn miou_examples() {
        assert_eq!(sample_miou(&pred(&[(0.0, 10.0)]), &[iv(5.0, 15.0), iv(0.0, 10.0)]), 1.0);
        assert_eq!(sample_miou(&pred(&[]), &[iv(0.0, 5.0)]), 0.0);
        assert!((sample_miou(&pred(&[(0.0, 4.0)]), &[iv(2.0, 6.0)]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[iv(0.0, 10.0)], &[iv(0.0, 10.0)], 0.5).unwrap(), 1.0);
        assert_eq!(
            average_precision(&[iv(50.0, 60.0), iv(0.0, 10.0)], &[iv(0.0, 10.0)], 0.5).unwrap(),
            0.5
        );
        assert_eq!(
            average_precision(&[iv(0.0, 10.0), iv(20.0, 30.0)], &[iv(0.0, 10.0), iv(20.0, 30.0)], 0.7)
                .unwrap(),
            1.0
        );
        assert_eq!(average_precision(&[], &[iv(0.0, 10.0)], 0.5).unwrap(), 0.0);
        assert!(average_precision(&[iv(0.0, 1.0)], &[], 0.5).is_err());
    }

    #[test]
    fn tie_goes_to_earlier_ground_truth() {
        // pred [5,15] has IoU 1/3 with both [0,10] and [10,20]
        let m = match_predictions(&[iv(5.0, 15.0), iv(0.0, 10.0)], &[iv(10.0, 20.0), iv(0.0, 10.0)], 0.3);
        // first claims [0,10] (earlier start), so second has nothing left at IoU >= 0.3
        assert_eq!(m, vec![true, false]);
    }

    fn gqa(answer: usize, gt: (f64, f64)) -> AnnotationSample {
        AnnotationSample::grounded_qa("v", 30.0, "q", vec![iv(gt.0, gt.1)], vec!["a".into(), "b".into()], answer)
            .unwrap()
    }

    fn with_answer(mut p: Prediction, a: usize) -> Prediction {
        p.answer_index = Some(a);
        p
    }

    #[test]
    fn gqa_accuracy_cases() {
        let cfg = MetricsConfig::default();
        let inside = (gqa(0, (0.0, 20.0)), with_answer(pred(&[(5.0, 10.0)]), 0));
        assert_eq!(gqa_metrics(&[inside], &cfg).unwrap(), (100.0, 100.0, 100.0, 100.0));

        let disjoint = (gqa(0, (0.0, 5.0)), with_answer(pred(&[(10.0, 12.0)]), 0));
        assert_eq!(gqa_metrics(&[disjoint], &cfg).unwrap(), (0.0, 0.0, 0.0, 100.0));

        let wrong = (gqa(0, (0.0, 5.0)), with_answer(pred(&[(0.0, 5.0)]), 1));
        assert_eq!(gqa_metrics(&[wrong], &cfg).unwrap(), (100.0, 100.0, 0.0, 0.0));
    }

    #[test]
    fn gqa_requires_gold_answer() {
        let mut s = gqa(0, (0.0, 5.0));
        s.qa_answer_index = None;
        assert!(gqa_metrics(&[(s, pred(&[(0.0, 1.0)]))], &MetricsConfig::default()).is_err());
    }

    #[test]
    fn default_map_thresholds() {
        let cfg = MetricsConfig::default();
        assert_eq!(cfg.map_thresholds.len(), 10);
        assert_eq!(cfg.map_thresholds[0], 0.5);
        assert_eq!(cfg.map_thresholds[9], 0.95);
    }

    #[test]
    fn report_averaging() {
        let cfg = MetricsConfig::default();
        let s = AnnotationSample::moment_retrieval("v", 30.0, "q", vec![iv(0.0, 10.0)]).unwrap();
        let (hit, _) = evaluate(&[(s.clone(), pred(&[(0.0, 10.0)]))], &cfg).unwrap();
        let (miss, _) = evaluate(&[(s, pred(&[]))], &cfg).unwrap();
        let avg = MetricsReport::average(&[hit, miss]).unwrap();
        assert_eq!(avg.r1(0.5), Some(50.0));
        assert_eq!(avg.miou, 50.0);
        assert_eq!(avg.map_avg, 50.0);
        assert_eq!(avg.n_failed_parses, 1);
        assert_eq!(avg.n_runs, 2);
    }
}
