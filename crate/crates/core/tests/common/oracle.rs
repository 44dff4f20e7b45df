//! Brute-force reference implementations, kept independent of the library.

pub type Iv = (f64, f64);

pub fn iou(a: Iv, b: Iv) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    let inter = if hi > lo { hi - lo } else { 0.0 };
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union == 0.0 {
        if a.0 == b.0 {
            1.0
        } else {
            0.0
        }
    } else {
        inter / union
    }
}

/// True-positive flags under rank-order greedy matching: each prediction
/// takes the best still-free ground truth (highest IoU, then earliest start)
/// among those at or above `tau`.
pub fn tp_flags(preds: &[Iv], gts: &[Iv], tau: f64) -> Vec<bool> {
    let mut free = vec![true; gts.len()];
    let mut flags = Vec::new();
    for &p in preds {
        let mut cands: Vec<(f64, f64, usize)> = gts
            .iter()
            .enumerate()
            .filter(|(j, _)| free[*j])
            .map(|(j, &g)| (iou(p, g), g.0, j))
            .filter(|c| c.0 >= tau)
            .collect();
        cands.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.partial_cmp(&y.1).unwrap()));
        match cands.first() {
            Some(&(_, _, j)) => {
                free[j] = false;
                flags.push(true);
            }
            None => flags.push(false),
        }
    }
    flags
}

/// Area under the uninterpolated precision/recall curve, enumerated cutoff by
/// cutoff: sum over k of (recall_k - recall_{k-1}) * precision_k.
pub fn average_precision(preds: &[Iv], gts: &[Iv], tau: f64) -> f64 {
    let flags = tp_flags(preds, gts, tau);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for k in 1..=flags.len() {
        let tp = flags[..k].iter().filter(|f| **f).count() as f64;
        let precision = tp / k as f64;
        let recall = tp / gts.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Random AP instance: at most 4 predictions and 3 ground truths inside a
/// video of at most 100 s, on a 0.5 s grid so exact threshold hits and ties
/// occur.
pub fn random_instance<R: rand::Rng>(rng: &mut R) -> (Vec<Iv>, Vec<Iv>) {
    let half_steps: u32 = rng.gen_range(2..=200);
    let duration = f64::from(half_steps) * 0.5;
    let window = |rng: &mut R| {
        let a = f64::from(rng.gen_range(0..half_steps)) * 0.5;
        let len = f64::from(rng.gen_range(0..=half_steps / 2)) * 0.5;
        (a, (a + len).min(duration))
    };
    let n_gt = rng.gen_range(1..=3);
    let n_pred = rng.gen_range(0..=4);
    let gts = (0..n_gt).map(|_| window(rng)).collect();
    let preds = (0..n_pred).map(|_| window(rng)).collect();
    (preds, gts)
}
