use super::{check_lengths, DegenerateReason, MetricError, MetricValue};

/// F1 of `pred` against `gold` for the given positive class.
pub fn binary_f1<T: PartialEq>(
    pred: &[T],
    gold: &[T],
    positive: &T,
) -> Result<MetricValue, MetricError> {
    check_lengths(pred.len(), gold.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        match (p == positive, g == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return Ok(MetricValue::degenerate(
            DegenerateReason::NoPositives,
            pred.len(),
        ));
    }
    let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    Ok(MetricValue::defined(f1, pred.len()))
}
