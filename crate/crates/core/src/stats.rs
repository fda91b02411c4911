//! Binning and jackknife resampling.
//!
//! For M bins with full-sample statistic U₀ and leave-one-out values U_i:
//!
//! U  = U₀ − (M−1)(Ū − U₀)
//! ΔU = √(M−1) · [ (1/M) Σ U_i² − Ū² ]^½
//!
//! The variance bracket is evaluated as the mean squared deviation from Ū,
//! which is the same quantity without the cancellation.

use crate::error::{StatsError, Result};
use crate::greens::GreensFunction;
use crate::linalg::CMatrix;
use crate::par;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct JackknifeEstimate {
    /// Bias-corrected mean.
    pub mean: f64,
    pub std: f64,
    pub bins: usize,
}

/// Means of `m` contiguous equal-size bins.
pub fn bin_means(samples: &[f64], m: usize) -> Result<Vec<f64>, StatsError> {
    if m == 0 || samples.len() % m != 0 {
        return Err(StatsError::Indivisible {
            len: samples.len(),
            bins: m,
        });
    }
    let size = samples.len() / m;
    Ok(samples
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect())
}

/// Jackknife from a full-sample value and the `M` leave-one-out values.
pub fn jackknife_from_subsamples(
    full: f64,
    leave_one_out: &[f64],
) -> Result<JackknifeEstimate, StatsError> {
    let m = leave_one_out.len();
    if m < 2 {
        return Err(StatsError::TooFewBins(m));
    }
    let mf = m as f64;
    // shift by the first value so identical inputs give exactly zero spread
    let pivot = leave_one_out[0];
    let shift = leave_one_out.iter().map(|u| u - pivot).sum::<f64>() / mf;
    let u_bar = pivot + shift;
    let var = leave_one_out
        .iter()
        .map(|u| (u - pivot - shift).powi(2))
        .sum::<f64>()
        / mf;
    Ok(JackknifeEstimate {
        mean: full - (mf - 1.0) * (u_bar - full),
        std: ((mf - 1.0) * var.max(0.0)).sqrt(),
        bins: m,
    })
}

/// Leave-one-out averages of equally weighted bins.
pub fn leave_one_out_means(bins: &[f64]) -> Vec<f64> {
    let m = bins.len() as f64;
    let total: f64 = bins.iter().sum();
    bins.iter().map(|b| (total - b) / (m - 1.0)).collect()
}

/// Jackknife of the plain mean of `bins`.
pub fn jackknife(bins: &[f64]) -> Result<JackknifeEstimate, StatsError> {
    if bins.len() < 2 {
        return Err(StatsError::TooFewBins(bins.len()));
    }
    let full = bins.iter().sum::<f64>() / bins.len() as f64;
    jackknife_from_subsamples(full, &leave_one_out_means(bins))
}

/// Excess kurtosis `m₄/m₂² − 3`; zero for a normal distribution. Returns
/// `None` for fewer than four samples or zero spread.
pub fn excess_kurtosis(samples: &[f64]) -> Option<f64> {
    let n = samples.len();
    if n < 4 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
    if m2 <= 0.0 {
        return None;
    }
    Some(m4 / (m2 * m2) - 3.0)
}

/// Bin-level inputs that can be averaged with weights.
pub trait BinAverage: Sized {
    fn weighted_mean(items: &[&Self], weights: &[f64]) -> Self;
}

impl BinAverage for f64 {
    fn weighted_mean(items: &[&Self], weights: &[f64]) -> Self {
        let w: f64 = weights.iter().sum();
        items.iter().zip(weights).map(|(x, k)| *x * k).sum::<f64>() / w
    }
}

impl BinAverage for CMatrix {
    fn weighted_mean(items: &[&Self], weights: &[f64]) -> Self {
        let w: f64 = weights.iter().sum();
        let mut acc = CMatrix::zeros(items[0].nrows(), items[0].ncols());
        for (x, &k) in items.iter().zip(weights) {
            acc += x.map(|v| v * k);
        }
        acc.map(|v| v / w)
    }
}

/// Jackknife a nonlinear pipeline over bins.
///
/// `bins[b]` holds the bin-level inputs with statistical weight `weights[b]`
/// (its shot count). The pipeline runs once on the weighted mean of all bins
/// and once per leave-one-out subsample; every real and imaginary
/// Green's-function element is then jackknifed independently. The returned
/// values are the bias-corrected means, with standard deviations attached.
pub fn propagate<I, F>(bins: &[I], weights: &[f64], pipeline: F) -> Result<GreensFunction>
where
    I: BinAverage + Sync,
    F: Fn(&I) -> Result<GreensFunction> + Sync + Send,
{
    let m = bins.len();
    if m < 2 {
        return Err(StatsError::TooFewBins(m).into());
    }
    assert_eq!(weights.len(), m, "one weight per bin");
    let all: Vec<&I> = bins.iter().collect();
    let full = pipeline(&I::weighted_mean(&all, weights))?;
    let subsamples = par::try_map_range(m, |skip| {
        let items: Vec<&I> = (0..m).filter(|&b| b != skip).map(|b| &bins[b]).collect();
        let w: Vec<f64> = (0..m).filter(|&b| b != skip).map(|b| weights[b]).collect();
        pipeline(&I::weighted_mean(&items, &w)).map_err(|e| {
            crate::Error::from(StatsError::Subsample {
                index: skip,
                msg: e.to_string(),
            })
        })
    })?;
    let n = full.n_orbitals();
    let mut values = Vec::with_capacity(full.values.len());
    let mut errors = Vec::with_capacity(full.values.len());
    let mut re = vec![0.0; m];
    let mut im = vec![0.0; m];
    for (k, g_full) in full.values.iter().enumerate() {
        let mut v = CMatrix::zeros(n, n);
        let mut e = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                for (b, s) in subsamples.iter().enumerate() {
                    re[b] = s.values[k][(i, j)].re;
                    im[b] = s.values[k][(i, j)].im;
                }
                let jr = jackknife_from_subsamples(g_full[(i, j)].re, &re)?;
                let ji = jackknife_from_subsamples(g_full[(i, j)].im, &im)?;
                v[(i, j)] = Complex64::new(jr.mean, ji.mean);
                e[(i, j)] = Complex64::new(jr.std, ji.std);
            }
        }
        values.push(v);
        errors.push(e);
    }
    Ok(GreensFunction {
        grid: full.grid,
        values,
        errors: Some(errors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::matsubara_grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binning() {
        assert_eq!(bin_means(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![1.5, 3.5]);
        assert_eq!(bin_means(&[0.7; 6], 3).unwrap(), vec![0.7; 3]);
        assert_eq!(
            bin_means(&[1.0, 2.0, 3.0], 2),
            Err(StatsError::Indivisible { len: 3, bins: 2 })
        );
    }

    #[test]
    fn hand_evaluated_case() {
        let j = jackknife(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(j.mean, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(j.std, 0.645497, epsilon = 1e-6);
        assert_eq!(j.bins, 4);
        assert_eq!(
            leave_one_out_means(&[1.0, 2.0, 3.0, 4.0]),
            vec![3.0, 8.0 / 3.0, 7.0 / 3.0, 2.0]
        );
    }

    #[test]
    fn constant_bins() {
        let j = jackknife(&[0.1; 7]).unwrap();
        assert_eq!(j.std, 0.0);
        assert_abs_diff_eq!(j.mean, 0.1, epsilon = 1e-16);
        assert_eq!(jackknife(&[1.0]), Err(StatsError::TooFewBins(1)));
    }

    #[test]
    fn kurtosis() {
        assert_eq!(excess_kurtosis(&[1.0, 1.0, 1.0, 1.0]), None);
        // two-point distribution: m4/m2² = 1
        assert_abs_diff_eq!(excess_kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap(), -2.0, epsilon = 1e-15);
    }

    fn scalar_gf(v: f64) -> GreensFunction {
        GreensFunction {
            grid: matsubara_grid(1.0, 1).unwrap(),
            values: vec![CMatrix::from_element(1, 1, Complex64::new(v, -v * v))],
            errors: None,
        }
    }

    #[test]
    fn zero_variance_propagation() {
        let bins = vec![0.3; 5];
        let g = propagate(&bins, &[1.0; 5], |x| Ok(scalar_gf(1.0 / (1.0 + x)))).unwrap();
        let exact = scalar_gf(1.0 / 1.3);
        assert_eq!(g.values, exact.values);
        assert!(g.errors.unwrap().iter().all(|e| e[(0, 0)] == Complex64::default()));
    }

    #[test]
    fn subsample_failures_are_indexed() {
        let bins = vec![1.0, 2.0, 3.0];
        let r = propagate(&bins, &[1.0; 3], |x| {
            if (*x - 2.0).abs() < 1e-12 {
                Err(crate::error::QseError::EmptySubspace(0.0).into())
            } else {
                Ok(scalar_gf(*x))
            }
        });
        // the full mean is 2.0, so the full-sample run fails before any subsample
        assert!(r.is_err());
        let r = propagate(&bins, &[1.0; 3], |x| {
            if (*x - 2.5).abs() < 1e-12 {
                Err(crate::error::QseError::EmptySubspace(0.0).into())
            } else {
                Ok(scalar_gf(*x))
            }
        });
        match r {
            Err(crate::Error::Stats(StatsError::Subsample { index, .. })) => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_enter_the_subsample_means() {
        let g = propagate(&[1.0, 4.0], &[3.0, 1.0], |x| Ok(scalar_gf(*x))).unwrap();
        // weighted full mean 7/4; dropping either bin leaves the other
        let j = jackknife_from_subsamples(1.75, &[4.0, 1.0]).unwrap();
        assert_abs_diff_eq!(g.values[0][(0, 0)].re, j.mean, epsilon = 1e-15);
        assert_abs_diff_eq!(g.errors.unwrap()[0][(0, 0)].re, j.std, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn linear_statistic_is_exact(bins in proptest::collection::vec(-10.0f64..10.0, 2..40)) {
            let m = bins.len() as f64;
            let mean = bins.iter().sum::<f64>() / m;
            let se = (bins.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (m * (m - 1.0))).sqrt();
            let j = jackknife(&bins).unwrap();
            prop_assert!((j.mean - mean).abs() < 1e-12);
            prop_assert!((j.std - se).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(mut bins in proptest::collection::vec(-5.0f64..5.0, 2..20), k in 0usize..1000) {
            let before = jackknife(&bins).unwrap();
            let len = bins.len();
            bins.rotate_left(k % len);
            bins.swap(0, len - 1);
            let after = jackknife(&bins).unwrap();
            prop_assert!((before.std - after.std).abs() < 1e-12);
            prop_assert!((before.mean - after.mean).abs() < 1e-12);
        }

        #[test]
        fn identity_statistic_recovers_full_mean(bins in proptest::collection::vec(-5.0f64..5.0, 2..20)) {
            let full = bins.iter().sum::<f64>() / bins.len() as f64;
            let j = jackknife(&bins).unwrap();
            prop_assert!((j.mean - full).abs() < 1e-12);
            prop_assert!(j.std >= 0.0);
        }
    }
}
