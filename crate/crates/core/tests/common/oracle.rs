//! Metric computed from first principles, without the confusion matrix.

/// Macro-averaged F1 over `n_classes`; an undefined ratio counts as 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let mut sum = 0.0;
    for c in 0..n_classes {
        let tp = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p == c && t == c)
            .count() as f64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as f64;
        let actual = truth.iter().filter(|&&t| t == c).count() as f64;
        // F1 = 2tp / (predicted + actual), identical to the harmonic mean form.
        if predicted + actual > 0.0 {
            sum += 2.0 * tp / (predicted + actual);
        }
    }
    sum / n_classes as f64
}
