//! Small helpers for probability arithmetic.

/// Chains longer than this are multiplied in log space.
pub const LOG_SPACE_THRESHOLD: usize = 64;

/// Tolerance used when checking that a distribution sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Multiplies a chain of probabilities.
///
/// Short chains are multiplied directly. Chains longer than
/// [`LOG_SPACE_THRESHOLD`] are summed in log space and converted back, which
/// keeps dense queries with many factors from underflowing midway.
pub fn chain_product<I>(factors: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let factors: Vec<f64> = factors.into_iter().collect();
    if factors.len() <= LOG_SPACE_THRESHOLD {
        return factors.iter().product();
    }
    if factors.iter().any(|&f| f <= 0.0) {
        return 0.0;
    }
    factors.iter().map(|f| f.ln()).sum::<f64>().exp()
}

pub fn is_probability(p: f64) -> bool {
    p.is_finite() && (0.0..=1.0).contains(&p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_chain_is_plain_product() {
        assert_eq!(chain_product([0.5, 0.5, 1.0]), 0.25);
        assert_eq!(chain_product(std::iter::empty()), 1.0);
    }

    #[test]
    fn long_chain_matches_plain_product() {
        let factors: Vec<f64> = (0..100).map(|i| 0.9 + (i as f64) * 0.001).collect();
        let direct: f64 = factors.iter().product();
        let logged = chain_product(factors.iter().copied());
        assert!((direct - logged).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn long_chain_with_zero_is_zero() {
        let mut factors = vec![0.5; 80];
        factors[3] = 0.0;
        assert_eq!(chain_product(factors), 0.0);
    }
}
