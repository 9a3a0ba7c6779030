use serde::{Deserialize, Serialize};

use super::{DegenerateReason, MetricError, MetricValue};

/// Difference function between two rating values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Interval,
    Ordinal,
    Nominal,
}

/// Krippendorff's alpha over an items x raters matrix; `None` marks a
/// missing rating. Only items with at least two ratings are pairable.
pub fn krippendorff_alpha(
    ratings: &[Vec<Option<f64>>],
    distance: Distance,
) -> Result<MetricValue, MetricError> {
    let mut values: Vec<f64> = ratings.iter().flatten().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let k = values.len();
    let index = |v: f64| {
        values
            .binary_search_by(|p| p.total_cmp(&v))
            .expect("value collected above")
    };

    // coincidence matrix
    let mut o = vec![vec![0.0f64; k]; k];
    let mut pairable_items = 0;
    for unit in ratings {
        let present: Vec<usize> = unit.iter().flatten().map(|&v| index(v)).collect();
        let m = present.len();
        if m < 2 {
            continue;
        }
        pairable_items += 1;
        let w = 1.0 / (m - 1) as f64;
        for (i, &c) in present.iter().enumerate() {
            for (j, &d) in present.iter().enumerate() {
                if i != j {
                    o[c][d] += w;
                }
            }
        }
    }
    let marginals: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if pairable_items == 0 || n < 2.0 {
        return Err(MetricError::NoPairableValues);
    }

    let delta = distance_matrix(&values, &marginals, distance);
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..k {
        for d in 0..k {
            d_o += o[c][d] * delta[c][d];
            d_e += marginals[c] * marginals[d] * delta[c][d];
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        return Ok(MetricValue::degenerate(
            DegenerateReason::SingleValue,
            pairable_items,
        ));
    }
    Ok(MetricValue::defined(1.0 - d_o / d_e, pairable_items))
}

fn distance_matrix(values: &[f64], marginals: &[f64], distance: Distance) -> Vec<Vec<f64>> {
    let k = values.len();
    let mut delta = vec![vec![0.0; k]; k];
    for c in 0..k {
        for d in 0..k {
            delta[c][d] = match distance {
                Distance::Nominal => f64::from(u8::from(c != d)),
                Distance::Interval => (values[c] - values[d]).powi(2),
                Distance::Ordinal => {
                    let (lo, hi) = (c.min(d), c.max(d));
                    let span: f64 = marginals[lo..=hi].iter().sum();
                    (span - (marginals[lo] + marginals[hi]) / 2.0).powi(2)
                }
            };
        }
    }
    delta
}
