use statrs::distribution::{Binomial, DiscreteCDF};

/// One-sided sign test: probability of at least `positive` successes out of
/// `positive + negative` fair coin flips. Ties are dropped by the caller.
pub fn sign_test_p(positive: usize, negative: usize) -> f64 {
    let n = (positive + negative) as u64;
    if n == 0 || positive == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    // sf(k) = P(X > k)
    dist.sf(positive as u64 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(positive: usize, negative: usize) -> f64 {
        let n = positive + negative;
        let mut total = 0.0;
        for k in positive..=n {
            let mut c = 1.0;
            for i in 0..k {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            total += c;
        }
        total / 2f64.powi(n as i32)
    }

    #[test]
    fn matches_direct_sum() {
        for (p, q) in [(5, 0), (7, 3), (10, 10), (60, 15), (1, 1)] {
            assert!((sign_test_p(p, q) - brute(p, q)).abs() < 1e-10, "{p} {q}");
        }
        assert_eq!(sign_test_p(0, 0), 1.0);
        assert_eq!(sign_test_p(0, 4), 1.0);
        assert!((sign_test_p(5, 0) - 1.0 / 32.0).abs() < 1e-12);
    }
}
