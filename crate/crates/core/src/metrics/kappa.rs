use super::{check_lengths, DegenerateReason, MetricError, MetricValue};

/// Ordinal ratings over an explicit, ordered category set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingVector {
    values: Vec<u8>,
    categories: Vec<u8>,
}

impl RatingVector {
    /// Ratings on the fixed `1..=5` scale.
    pub fn new(values: Vec<u8>) -> Result<Self, MetricError> {
        Self::with_categories(values, vec![1, 2, 3, 4, 5])
    }

    pub fn with_categories(values: Vec<u8>, categories: Vec<u8>) -> Result<Self, MetricError> {
        if let Some(&bad) = values.iter().find(|v| !categories.contains(v)) {
            return Err(MetricError::UnknownCategory(bad as i64));
        }
        Ok(Self { values, categories })
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn categories(&self) -> &[u8] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn index_of(&self, v: u8) -> usize {
        self.categories
            .iter()
            .position(|&c| c == v)
            .expect("validated on construction")
    }
}

/// Cohen's kappa with quadratic weights `(i - j)^2 / (k - 1)^2` over the
/// vector's full category set, whether or not every category is observed.
pub fn quadratic_weighted_kappa(
    a: &RatingVector,
    b: &RatingVector,
) -> Result<MetricValue, MetricError> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if a.categories != b.categories {
        return Err(MetricError::LengthMismatch {
            left: a.categories.len(),
            right: b.categories.len(),
        });
    }
    let k = a.categories.len();
    let n = a.len() as f64;

    let mut observed = vec![vec![0.0f64; k]; k];
    let mut row = vec![0.0f64; k];
    let mut col = vec![0.0f64; k];
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (i, j) = (a.index_of(x), b.index_of(y));
        observed[i][j] += 1.0;
        row[i] += 1.0;
        col[j] += 1.0;
    }

    let denom = if k > 1 {
        ((k - 1) * (k - 1)) as f64
    } else {
        1.0
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64) - (j as f64)).powi(2) / denom;
            num += w * observed[i][j] / n;
            den += w * row[i] * col[j] / (n * n);
        }
    }
    if den == 0.0 {
        return Ok(MetricValue::degenerate(
            DegenerateReason::ZeroExpectedDisagreement,
            a.len(),
        ));
    }
    Ok(MetricValue::defined(1.0 - num / den, a.len()))
}
