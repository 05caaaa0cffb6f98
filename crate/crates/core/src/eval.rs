//! Confusion counts, ROC curves, and trapezoidal AUC.
//!
//! An example is predicted positive iff its score is >= the threshold. The
//! ROC sweep visits every distinct score from +inf downward, moving tied
//! examples together (one curve point per distinct score), which makes the
//! trapezoidal area agree exactly with the Mann-Whitney statistic where ties
//! count one half.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Counts of a thresholded binary decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// tp / (tp + fn); NaN when there are no positives.
    pub fn tpr(&self) -> f64 {
        self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
    }

    /// fp / (fp + tn); NaN when there are no negatives.
    pub fn fpr(&self) -> f64 {
        self.false_pos as f64 / (self.false_pos + self.true_neg) as f64
    }
}

fn validate_scored(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scored examples"));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score at index {i}")));
    }
    Ok(())
}

/// Counts outcomes of the rule `predict positive iff score >= threshold`.
pub fn confusion_at_threshold(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<ConfusionCounts> {
    validate_scored(scores, labels)?;
    if threshold.is_nan() {
        return Err(Error::NonFinite("threshold".into()));
    }
    let mut counts = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (&score, &positive) in scores.iter().zip(labels) {
        let predicted = score >= threshold;
        match (predicted, positive) {
            (true, true) => counts.true_pos += 1,
            (true, false) => counts.false_pos += 1,
            (false, true) => counts.false_neg += 1,
            (false, false) => counts.true_neg += 1,
        }
    }
    Ok(counts)
}

/// ROC curve: (fpr, tpr) points with their thresholds, from (0,0) at +inf
/// to (1,1) at the minimum score.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

/// Sweeps thresholds over the distinct score values, descending.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    validate_scored(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        // consume the whole tie group at this score
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(score);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the ROC curve.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        let (x1, y1) = pair[0];
        let (x2, y2) = pair[1];
        area += (x2 - x1) * (y1 + y2) / 2.0;
    }
    area
}

/// Convenience: ROC then AUC.
pub fn auc_from_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(auc(&roc_curve(scores, labels)?))
}

/// Writes the curve as CSV (`threshold,fpr,tpr` rows) with a trailing
/// `# auc=<value>` comment line.
pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "threshold,fpr,tpr").map_err(io_err)?;
    for (threshold, (fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
        writeln!(w, "{threshold},{fpr},{tpr}").map_err(io_err)?;
    }
    writeln!(w, "# auc={}", auc(curve)).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Renders the curve as a standalone SVG with unit axes and a chance
/// diagonal.
pub fn write_roc_svg(path: &Path, curve: &RocCurve) -> Result<()> {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 50.0;
    let span = SIZE - 2.0 * MARGIN;
    let x = |fpr: f64| MARGIN + fpr * span;
    let y = |tpr: f64| SIZE - MARGIN - tpr * span;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"{m}\" y=\"{m}\" width=\"{span}\" height=\"{span}\" fill=\"white\" \
         stroke=\"black\"/>\n",
        m = MARGIN
    ));
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" \
         stroke-dasharray=\"6 4\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    ));
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|&(fpr, tpr)| format!("{:.2},{:.2}", x(fpr), y(tpr)))
        .collect();
    svg.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    ));
    for (value, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
            x(value),
            SIZE - MARGIN + 16.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
            MARGIN - 6.0,
            y(value) + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">FPR</text>\n",
        x(0.5),
        SIZE - 10.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.1})\">TPR</text>\n",
        y(0.5),
        y(0.5)
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\">AUC = {:.4}</text>\n",
        x(0.55),
        y(0.08),
        auc(curve)
    ));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    /// Mann-Whitney oracle: fraction of (positive, negative) pairs ranked
    /// correctly, ties counting one half.
    fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut correct = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if !labels[i] {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    correct += 1.0;
                } else if si == sj {
                    correct += 0.5;
                }
            }
        }
        correct / pairs
    }

    #[test]
    fn confusion_simple_cases() {
        let c = confusion_at_threshold(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                true_pos: 1,
                false_pos: 0,
                false_neg: 0,
                true_neg: 1
            }
        );

        // a threshold below every score predicts everything positive
        let c = confusion_at_threshold(&[0.9, 0.1], &[true, false], f64::NEG_INFINITY).unwrap();
        assert_eq!(c.false_neg, 0);
        assert_eq!(c.true_neg, 0);
        assert_eq!(c.total(), 2);

        let c = confusion_at_threshold(
            &[0.9, 0.8, 0.3, 0.1],
            &[true, false, true, false],
            0.5,
        )
        .unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                true_pos: 1,
                false_pos: 1,
                false_neg: 1,
                true_neg: 1
            }
        );
        assert_eq!(c.tpr(), 0.5);
        assert_eq!(c.fpr(), 0.5);
    }

    #[test]
    fn confusion_rejects_bad_input() {
        assert!(confusion_at_threshold(&[0.5], &[], 0.5).is_err());
        assert!(confusion_at_threshold(&[], &[], 0.5).is_err());
        assert!(confusion_at_threshold(&[f64::NAN], &[true], 0.5).is_err());
    }

    #[test]
    fn roc_points_enumerate_thresholds() {
        let curve = roc_curve(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(
            curve.points,
            vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_eq!(curve.thresholds[0], f64::INFINITY);
        assert_eq!(&curve.thresholds[1..], &[0.9, 0.8, 0.3, 0.1]);
    }

    #[test]
    fn tied_scores_collapse_to_the_diagonal() {
        let curve = roc_curve(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]).unwrap();
        assert_eq!(curve.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&curve), 0.5);
    }

    #[test]
    fn roc_requires_both_classes() {
        assert!(matches!(
            roc_curve(&[0.1, 0.9], &[true, true]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn perfect_separation_gives_unit_auc() {
        let scores = [0.9, 0.85, 0.2, 0.1, 0.05];
        let labels = [true, true, false, false, false];
        assert_eq!(auc_from_scores(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn pair_counting_example() {
        // 3 of the 4 positive/negative pairs are ordered correctly
        let scores = [0.9, 0.35, 0.6, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(pair_count_auc(&scores, &labels), 0.75);
        assert_eq!(auc_from_scores(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn label_flip_reverses_auc() {
        let mut rng = Rng::new(77);
        let scores: Vec<f64> = (0..60).map(|_| rng.next_f64()).collect();
        let labels: Vec<bool> = (0..60).map(|_| rng.next_f64() < 0.4).collect();
        let a = auc_from_scores(&scores, &labels).unwrap();
        let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
        let b = auc_from_scores(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
        // flipping labels and negating scores leaves the ranking intact
        let negated: Vec<f64> = scores.iter().map(|&s| -s).collect();
        let c = auc_from_scores(&negated, &flipped).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn csv_output_has_footer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        let curve = roc_curve(&[0.9, 0.1], &[true, false]).unwrap();
        write_roc_csv(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "threshold,fpr,tpr");
        assert_eq!(lines[1], "inf,0,0");
        assert!(lines.last().unwrap().starts_with("# auc="));
        assert!(text.contains("# auc=1"));
    }

    #[test]
    fn svg_output_is_wellformed_enough() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.svg");
        let curve = roc_curve(&[0.9, 0.4, 0.1], &[true, false, false]).unwrap();
        write_roc_svg(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("polyline"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trapezoid_matches_pair_counting(seed in 0u64..10_000) {
            let mut rng = Rng::new(seed);
            let n = 2 + (rng.next_below(200) as usize);
            // quantized scores force plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| rng.next_below(12) as f64 / 11.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.5).collect();
            labels[0] = true;
            labels[1] = false;
            let fast = auc_from_scores(&scores, &labels).unwrap();
            let slow = pair_count_auc(&scores, &labels);
            prop_assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        }

        #[test]
        fn curve_is_monotone_and_auc_in_range(seed in 0u64..10_000) {
            let mut rng = Rng::new(seed);
            let n = 2 + (rng.next_below(100) as usize);
            let scores: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.5).collect();
            labels[0] = true;
            labels[1] = false;
            let curve = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(curve.points[0], (0.0, 0.0));
            prop_assert_eq!(*curve.points.last().unwrap(), (1.0, 1.0));
            for pair in curve.points.windows(2) {
                prop_assert!(pair[0].0 <= pair[1].0);
                prop_assert!(pair[0].1 <= pair[1].1);
            }
            let a = auc(&curve);
            prop_assert!((0.0..=1.0).contains(&a));
            // AUC hits 1 exactly when the classes separate
            let min_pos = scores.iter().zip(&labels).filter(|(_, &l)| l)
                .map(|(&s, _)| s).fold(f64::INFINITY, f64::min);
            let max_neg = scores.iter().zip(&labels).filter(|(_, &l)| !l)
                .map(|(&s, _)| s).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(a == 1.0, min_pos > max_neg);
        }

        #[test]
        fn monotone_transforms_preserve_the_curve(seed in 0u64..10_000) {
            let mut rng = Rng::new(seed);
            let n = 2 + (rng.next_below(80) as usize);
            let scores: Vec<f64> = (0..n).map(|_| rng.next_uniform(-3.0, 3.0)).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.5).collect();
            labels[0] = true;
            labels[1] = false;
            let base = roc_curve(&scores, &labels).unwrap();
            let warped: Vec<f64> = scores.iter().map(|&s| (2.0 * s + 1.0).atan()).collect();
            let transformed = roc_curve(&warped, &labels).unwrap();
            prop_assert_eq!(&base.points, &transformed.points);
            prop_assert_eq!(auc(&base), auc(&transformed));
        }
    }
}
