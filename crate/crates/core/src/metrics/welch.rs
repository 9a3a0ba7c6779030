use serde::{Deserialize, Serialize};

use super::special::student_t_two_tailed;
use super::{Definedness, DegenerateReason, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p_two_tailed: f64,
    pub definedness: Definedness,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom and a two-tailed p-value.
///
/// When both samples have zero variance the statistic is undefined: the
/// result is flagged degenerate with `p = 1` for equal means and `p = 0`
/// otherwise.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<WelchResult, MetricError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(MetricError::TooFewItems {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if se2 == 0.0 {
        let equal = mx == my;
        return Ok(WelchResult {
            t: if equal {
                0.0
            } else {
                f64::INFINITY.copysign(mx - my)
            },
            dof: f64::NAN,
            p_two_tailed: if equal { 1.0 } else { 0.0 },
            definedness: Definedness::Degenerate(DegenerateReason::ZeroVariance),
        });
    }
    let t = (mx - my) / se2.sqrt();
    let dof = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    Ok(WelchResult {
        t,
        dof,
        p_two_tailed: student_t_two_tailed(t, dof),
        definedness: Definedness::Defined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[1.0, 2.0, 4.0], &[4.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
    }

    #[test]
    fn shifted_samples_closed_form() {
        // equal variances 2.5, n = 5: t = -1 / sqrt(1) = -1, dof = 8
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t + 1.0).abs() < 1e-15);
        assert!((r.dof - 8.0).abs() < 1e-12);
        // I_{8/9}(4, 1/2) at 40 digits: 0.34659350708733424782...
        assert!((r.p_two_tailed - 0.346_593_507_087_334_25).abs() < 1e-9);
    }

    #[test]
    fn antisymmetry() {
        let x = [2.0, 3.5, 1.0, 4.0];
        let y = [5.0, 4.5, 6.0, 3.0, 5.5];
        let a = welch_t_test(&x, &y).unwrap();
        let b = welch_t_test(&y, &x).unwrap();
        assert_eq!(a.t, -b.t);
        assert_eq!(a.p_two_tailed, b.p_two_tailed);
        assert!(a.p_two_tailed > 0.0 && a.p_two_tailed <= 1.0);
    }

    #[test]
    fn degenerate_cases() {
        let r = welch_t_test(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.p_two_tailed, 1.0);
        assert!(matches!(r.definedness, Definedness::Degenerate(_)));
        let r = welch_t_test(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r.p_two_tailed, 0.0);
        assert!(matches!(r.definedness, Definedness::Degenerate(_)));
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }
}
