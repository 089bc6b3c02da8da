use serde::Serialize;

use super::describe::{mean, sample_sd};
use super::special::t_two_tailed_p;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest<T = f64> {
    pub t: T,
    pub df: T,
    pub p_two_tailed: T,
}

/// Welch's unequal-variance t-test with Satterthwaite degrees of freedom.
pub fn welch_ttest<T: Real>(a: &[T], b: &[T]) -> Result<TTest<T>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid("each group needs at least two values".into()));
    }
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let (sa, sb) = (sample_sd(a).unwrap(), sample_sd(b).unwrap());
    let va = sa * sa / T::from_count(a.len());
    let vb = sb * sb / T::from_count(b.len());
    let se2 = va + vb;
    if se2 == T::zero() {
        return Err(Error::ZeroVariance("both groups"));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (va * va / T::from_count(a.len() - 1) + vb * vb / T::from_count(b.len() - 1));
    Ok(TTest {
        t,
        df,
        p_two_tailed: t_two_tailed_p(t, df),
    })
}

/// One-sample t-test of paired differences against zero.
pub fn paired_ttest<T: Real>(diffs: &[T]) -> Result<TTest<T>> {
    if diffs.len() < 2 {
        return Err(Error::Invalid("paired test needs at least two differences".into()));
    }
    let m = mean(diffs).unwrap();
    let sd = sample_sd(diffs).unwrap();
    if sd == T::zero() {
        return Err(Error::ZeroVariance("paired differences"));
    }
    let t = m / (sd / T::from_count(diffs.len()).sqrt());
    let df = T::from_count(diffs.len() - 1);
    Ok(TTest {
        t,
        df,
        p_two_tailed: t_two_tailed_p(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = welch_ttest(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
    }

    #[test]
    fn separated_groups() {
        let a = [0.0, 1e-6, -1e-6, 0.0];
        let b = [1.0, 1.0 + 1e-6, 1.0, 1.0 - 1e-6];
        let r = welch_ttest(&a, &b).unwrap();
        assert!(r.t < 0.0);
        assert!(r.p_two_tailed < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            welch_ttest(&[1.0, 1.0], &[2.0, 2.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(welch_ttest(&[1.0], &[2.0, 3.0]).is_err());
        assert!(paired_ttest(&[1.0]).is_err());
        assert!(paired_ttest(&[2.0, 2.0]).is_err());
    }

    #[test]
    fn welch_df_equal_sizes_and_variances() {
        // equal n and variance: df = 2(n - 1)
        let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let b = [3.0, 4.0, 5.0, 6.0, 7.0];
        let r = welch_ttest(&a, &b).unwrap();
        assert!((r.df - 8.0).abs() < 1e-12);
        assert!((r.t + 2.0).abs() < 1e-12);
    }

    #[test]
    fn paired_statistic() {
        let d = [1.0, 2.0, 3.0];
        let r = paired_ttest(&d).unwrap();
        // mean 2, sd 1, n 3: t = 2 sqrt(3)
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 2.0);
        // df = 2 closed form
        let expect = 1.0 - r.t / (2.0 + r.t * r.t).sqrt();
        assert!((r.p_two_tailed - expect).abs() < 1e-12);
    }
}
