//! Small statistical helpers shared by the verification suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test over shared bins. Bins empty in
/// both samples are dropped; with fewer than two occupied bins the samples
/// are trivially homogeneous.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    assert_eq!(a.len(), b.len(), "histograms must share bins");
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    assert!(total_a > 0 && total_b > 0, "both samples must be nonempty");
    let (ta, tb) = (total_a as f64, total_b as f64);
    let mut statistic = 0.0;
    let mut bins = 0u64;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai + bi == 0 {
            continue;
        }
        bins += 1;
        let (ai, bi) = (ai as f64, bi as f64);
        let diff = ai * tb - bi * ta;
        statistic += diff * diff / ((ai + bi) * ta * tb);
    }
    if bins < 2 {
        return ChiSquareResult {
            statistic: 0.0,
            degrees_of_freedom: 0,
            p_value: 1.0,
        };
    }
    let degrees_of_freedom = bins - 1;
    let dist = ChiSquared::new(degrees_of_freedom as f64).expect("df >= 1");
    let p_value = 1.0 - dist.cdf(statistic);
    ChiSquareResult {
        statistic,
        degrees_of_freedom,
        p_value,
    }
}
