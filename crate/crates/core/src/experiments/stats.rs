//! Paired significance tests on per-repetition selection indicators.

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

/// Exact McNemar test on discordant pair counts: `b` repetitions where only
/// the first method was correct, `c` where only the second was. Two-sided
/// exact binomial p-value under the null that discordances split evenly.
pub fn mcnemar_exact_p(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    let tail = dist.cdf(b.min(c));
    (2.0 * tail).min(1.0)
}

/// One-sided sign test: probability of at least `b` successes out of `b + c`
/// fair coin flips. Small values support "the first method wins more often".
pub fn sign_test_one_sided_p(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    if b == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    1.0 - dist.cdf(b - 1)
}

/// Two-sided paired t-test on per-repetition differences. Degenerate inputs
/// (fewer than two samples, zero variance) return 1.0 when the mean is zero
/// and 0.0 otherwise.
pub fn paired_t_p(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    if n < 2 {
        return 1.0;
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return if mean == 0.0 { 1.0 } else { 0.0 };
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("valid dof");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcnemar_no_discordance_is_one() {
        assert_eq!(mcnemar_exact_p(0, 0), 1.0);
    }

    #[test]
    fn mcnemar_balanced_discordance_is_large() {
        assert!(mcnemar_exact_p(10, 10) > 0.5);
    }

    #[test]
    fn mcnemar_lopsided_discordance_is_small() {
        assert!(mcnemar_exact_p(25, 2) < 0.001);
        // symmetric in its arguments
        assert_eq!(mcnemar_exact_p(25, 2), mcnemar_exact_p(2, 25));
    }

    #[test]
    fn sign_test_directionality() {
        assert!(sign_test_one_sided_p(25, 5) < 0.001);
        assert!(sign_test_one_sided_p(5, 25) > 0.99);
        assert_eq!(sign_test_one_sided_p(0, 0), 1.0);
        // single win out of one trial: p = 1/2
        assert!((sign_test_one_sided_p(1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn paired_t_detects_shift() {
        let shifted: Vec<f64> = (0..50).map(|i| 1.0 + ((i % 5) as f64 - 2.0) * 0.1).collect();
        assert!(paired_t_p(&shifted) < 1e-6);
        let zeros = vec![0.0; 50];
        assert_eq!(paired_t_p(&zeros), 1.0);
    }

    #[test]
    fn paired_t_on_balanced_signs_is_large() {
        let diffs: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(paired_t_p(&diffs) > 0.9);
    }
}
