use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    (!xs.is_empty()).then(|| xs.iter().copied().sum::<T>() / T::from_count(xs.len()))
}

/// Sample standard deviation (denominator `n - 1`); `None` below two values.
pub fn sample_sd<T: Real>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::from_count(xs.len() - 1)).sqrt())
}

pub fn median<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    })
}

/// Pearson correlation of two equal-length series (at least three points).
pub fn pearson_corr<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::Invalid("correlation needs at least three points".into()));
    }
    let mx = mean(x).unwrap();
    let my = mean(y).unwrap();
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx == T::zero() {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == T::zero() {
        return Err(Error::ZeroVariance("y"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sd_uses_n_minus_one() {
        assert_eq!(sample_sd(&[2.0, 4.0, 6.0]), Some(2.0));
        assert_eq!(sample_sd(&[0.0, 0.0]), Some(0.0));
        assert_eq!(sample_sd(&[1.0]), None);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median::<f64>(&[]), None);
    }

    #[test]
    fn correlation_extremes() {
        let x = [1.0f64, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_corr(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_corr(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(pearson_corr(&x, &[1.0; 4]), Err(Error::ZeroVariance("y"))));
        assert!(pearson_corr(&x[..2], &x[..2]).is_err());
        assert!(pearson_corr(&x, &x[..3]).is_err());
    }

    #[test]
    fn correlation_matches_covariance_formula() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0, 6.5];
        let y = [2.0, 2.5, 2.0, 4.0, 3.0, 7.0];
        // oracle: cov / (sd_x sd_y), all with n - 1
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
        let r = cov / (sample_sd(&x).unwrap() * sample_sd(&y).unwrap());
        assert!((pearson_corr(&x, &y).unwrap() - r).abs() < 1e-14);
    }
}
