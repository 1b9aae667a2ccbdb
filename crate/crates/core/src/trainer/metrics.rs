use crate::error::{Error, Result};

/// Lower and upper clamp applied to scores before taking logarithms.
pub const SCORE_CLAMP: f64 = 1e-12;

fn clamp_score(f: f64) -> f64 {
    f.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP)
}

/// Binary cross-entropy of one edge whose pseudo label is `anomalous`.
pub fn edge_loss(score: f64, anomalous: bool) -> f64 {
    let f = clamp_score(score);
    if anomalous {
        -f.ln()
    } else {
        -(1.0 - f).ln()
    }
}

/// `-sum(log(1 - f(pos)) + log(f(neg)))`. Observed edges are the normal
/// class, sampled negatives the anomalous one.
pub fn compute_loss(pos_scores: &[f64], neg_scores: &[f64]) -> Result<f64> {
    if pos_scores.len() != neg_scores.len() {
        return Err(Error::Shape(format!(
            "{} positive scores but {} negative scores",
            pos_scores.len(),
            neg_scores.len()
        )));
    }
    let pos: f64 = pos_scores.iter().map(|&f| edge_loss(f, false)).sum();
    let neg: f64 = neg_scores.iter().map(|&f| edge_loss(f, true)).sum();
    Ok(pos + neg)
}

fn check_binary(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Data(format!("labels must be 0 or 1, found {bad}")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numerical("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data(format!(
            "AUC needs both classes, got {positives} anomalous and {negatives} normal"
        )));
    }
    Ok((positives, negatives))
}

/// Exact ROC-AUC via the Mann-Whitney statistic; tied scores count one half.
/// Label 1 is the anomalous (positive) class.
pub fn compute_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (positives, negatives) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of midranks (1-based) of the positives. Midranks are half-integers,
    // so the sum is exact in f64 for any realistic length.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        let tied_pos = order[i..=j].iter().filter(|&&o| labels[o] == 1).count();
        rank_sum += midrank * tied_pos as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// ROC curve as `(false positive rate, true positive rate)` points, one per
/// distinct score threshold, from `(0, 0)` to `(1, 1)`.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>> {
    let (positives, negatives) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_closed_forms() {
        let two_ln2 = compute_loss(&[0.5], &[0.5]).unwrap();
        assert!((two_ln2 - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((compute_loss(&[0.9], &[0.1]).unwrap() - 4.605170185988091).abs() < 1e-12);
        let perfect = compute_loss(&[0.0], &[1.0]).unwrap();
        assert!((0.0..1e-11).contains(&perfect));
        assert!(compute_loss(&[0.1, 0.2], &[0.3]).is_err());
    }

    #[test]
    fn clamping_keeps_loss_finite() {
        let worst = compute_loss(&[1.0], &[0.0]).unwrap();
        assert!(worst.is_finite());
        // 1 - (1 - 1e-12) is not exactly 1e-12 in f64.
        assert!((worst - 2.0 * -(1e-12f64).ln()).abs() < 1e-3);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(compute_auc(&[0.9, 0.8, 0.1], &[1, 0, 0]).unwrap(), 1.0);
        assert_eq!(compute_auc(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
        assert_eq!(compute_auc(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn auc_rejects_bad_input() {
        assert!(compute_auc(&[0.3, 0.4], &[1, 1]).is_err());
        assert!(compute_auc(&[0.3], &[0, 1]).is_err());
        assert!(compute_auc(&[0.3, 0.4], &[2, 0]).is_err());
        assert!(compute_auc(&[f64::NAN, 0.4], &[1, 0]).is_err());
    }

    #[test]
    fn roc_endpoints_and_area() {
        let scores = [0.9, 0.7, 0.7, 0.4, 0.2];
        let labels = [1, 1, 0, 0, 1];
        let pts = roc_points(&scores, &labels).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        let trapezoid: f64 = pts
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum();
        assert!((trapezoid - compute_auc(&scores, &labels).unwrap()).abs() < 1e-12);
    }
}
