//! Order statistics shared by intensity rescaling and HD95.
//!
//! One percentile definition is used toolkit-wide: linear interpolation
//! between order statistics at fractional rank `p / 100 * (n - 1)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

fn cmp<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::validation(format!("percentile must lie in [0, 100], got {p}")));
    }
    Ok(())
}

/// Percentile of `values`, reordering the slice in place.
///
/// Runs in expected linear time via selection.
pub fn percentile_in_place<T: Real>(values: &mut [T], p: f64) -> Result<T> {
    check_p(p)?;
    if values.is_empty() {
        return Err(Error::validation("percentile of an empty set"));
    }
    let rank = p / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let (_, &mut lo_val, upper) = values.select_nth_unstable_by(lo, cmp);
    if frac == 0.0 || upper.is_empty() {
        return Ok(lo_val);
    }
    // The next order statistic is the minimum of the upper partition.
    let hi_val = upper.iter().copied().min_by(cmp).unwrap_or(lo_val);
    Ok(lo_val + (hi_val - lo_val) * T::of(frac))
}

/// Several percentiles of the same data, sorting once.
pub fn percentiles<T: Real>(values: &[T], ps: &[f64]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::validation("percentile of an empty set"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(cmp);
    ps.iter()
        .map(|&p| {
            check_p(p)?;
            Ok(percentile_sorted(&sorted, p))
        })
        .collect()
}

/// Percentile of already-sorted values.
pub fn percentile_sorted<T: Real>(sorted: &[T], p: f64) -> T {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * T::of(frac)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(cmp);
    percentile_sorted(&sorted, 50.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_numpy_linear_convention() {
        let v: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        // numpy.percentile([1,2,3,4], [0, 25, 50, 95, 100]) with linear interpolation
        let got = percentiles(&v, &[0.0, 25.0, 50.0, 95.0, 100.0]).unwrap();
        let want = [1.0, 1.75, 2.5, 3.85, 4.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn selection_agrees_with_sort() {
        let v: Vec<f32> = (0..101).map(|i| ((i * 37) % 101) as f32 * 0.5).collect();
        for p in [0.0, 0.1, 12.5, 50.0, 95.0, 99.9, 100.0] {
            let mut scratch = v.clone();
            let a = percentile_in_place(&mut scratch, p).unwrap();
            let b = percentiles(&v, &[p]).unwrap()[0];
            assert_eq!(a, b, "p={p}");
        }
    }

    #[test]
    fn single_value_and_errors() {
        assert_eq!(percentile_in_place(&mut [7.0f64], 95.0).unwrap(), 7.0);
        assert!(percentile_in_place::<f64>(&mut [], 50.0).is_err());
        assert!(percentile_in_place(&mut [1.0f64], 101.0).is_err());
    }

    #[test]
    fn moments() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&v), 5.0);
        assert_eq!(std_dev(&v), 2.0);
        assert_eq!(median(&v), 4.5);
    }
}
