use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{check_alpha, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub alpha: f64,
    pub reject_null: bool,
    pub note: Option<String>,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Two-sided tail probability of Student's t, `I_{ν/(ν+t²)}(ν/2, 1/2)`.
fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Welch's unequal-variance two-sample t-test, two-sided.
pub fn two_sample_t_test(
    sample_a: &[f64],
    sample_b: &[f64],
    alpha: f64,
) -> Result<TTestResult, StatsError> {
    check_alpha(alpha)?;
    for s in [sample_a, sample_b] {
        if s.len() < 2 {
            return Err(StatsError::InsufficientSample { got: s.len() });
        }
    }
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (mean_a, var_a) = mean_and_variance(sample_a);
    let (mean_b, var_b) = mean_and_variance(sample_b);
    let (sa, sb) = (var_a / na, var_b / nb);
    let se2 = sa + sb;

    let (t_statistic, degrees_of_freedom, p_value, note) = if se2 == 0.0 {
        let df = na + nb - 2.0;
        if mean_a == mean_b {
            (0.0, df, 1.0, None)
        } else {
            let t = if mean_a > mean_b { f64::INFINITY } else { f64::NEG_INFINITY };
            (
                t,
                df,
                0.0,
                Some("both samples have zero variance and different means".to_string()),
            )
        }
    } else {
        let t = (mean_a - mean_b) / se2.sqrt();
        // Welch–Satterthwaite.
        let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        (t, df, student_t_two_sided(t, df), None)
    };

    Ok(TTestResult {
        t_statistic,
        degrees_of_freedom,
        p_value,
        mean_a,
        mean_b,
        alpha,
        reject_null: p_value < alpha,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_samples() {
        let a = [0.2, 0.4, 0.1, 0.9];
        let r = two_sample_t_test(&a, &a, 0.05).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject_null);
    }

    #[test]
    fn separated_samples_match_reference() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [0.1, 0.2, 0.15, 0.25];
        let b = [0.6, 0.7, 0.65, 0.75];
        let r = two_sample_t_test(&a, &b, 0.05).unwrap();
        assert_relative_eq!(r.t_statistic, -10.95445115010332, max_relative = 1e-10);
        assert_relative_eq!(r.degrees_of_freedom, 6.0, max_relative = 1e-10);
        assert_relative_eq!(r.p_value, 3.436402807612153e-05, max_relative = 1e-8);
        assert!(r.reject_null);
    }

    #[test]
    fn unequal_sizes_match_reference() {
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let b = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let r = two_sample_t_test(&a, &b, 0.05).unwrap();
        assert_relative_eq!(r.t_statistic, 1.2725968992846217, max_relative = 1e-10);
        assert_relative_eq!(r.degrees_of_freedom, 14.999749312568058, max_relative = 1e-10);
        assert_relative_eq!(r.p_value, 0.2225343134067113, max_relative = 1e-8);
        assert!(!r.reject_null);
    }

    #[test]
    fn zero_variance_cases() {
        let r = two_sample_t_test(&[1.0, 1.0], &[1.0, 1.0, 1.0], 0.05).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
        assert!(r.note.is_none());

        let r = two_sample_t_test(&[1.0, 1.0], &[0.0, 0.0], 0.05).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.reject_null);
        assert!(r.note.is_some());
    }

    #[test]
    fn insufficient_sample() {
        assert_eq!(
            two_sample_t_test(&[1.0], &[1.0, 2.0], 0.05),
            Err(StatsError::InsufficientSample { got: 1 })
        );
    }
}
