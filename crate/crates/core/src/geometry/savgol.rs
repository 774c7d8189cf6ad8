//! Savitzky–Golay smoothing as a least-squares polynomial projection.
//!
//! For a window of `m` samples and polynomial order `p`, the hat matrix
//! `H = A (A^T A)^-1 A^T` (with `A` the `m x (p+1)` Vandermonde matrix of
//! sample offsets) maps raw samples to the fitted polynomial values. Row `c` of
//! `H` is the convolution kernel that evaluates the fit at offset `c`. `H` is
//! built from an orthonormal basis of the column space (modified Gram-Schmidt
//! with one re-orthogonalization pass) instead of forming `A^T A`.

use alloc::vec;
use alloc::vec::Vec;

use super::{GeometryError, SavGolSpec};
use crate::math::sqrt;

/// Condition numbers of `A^T A` above this are treated as singular.
const MAX_CONDITION: f64 = 1e14;

/// Full `window x window` hat matrix, row-major.
pub fn savgol_matrix(spec: &SavGolSpec) -> Result<Vec<Vec<f64>>, GeometryError> {
    spec.validate()?;
    let m = spec.window;
    let cols = spec.order + 1;
    if cols == m {
        // Interpolation limit: the fit passes through every sample.
        return Ok((0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect());
    }

    // Offsets scaled to [-1, 1]; the projection does not depend on the
    // affine parametrization of the abscissa.
    let half = (m as f64 - 1.0) / 2.0;
    let xs: Vec<f64> = (0..m)
        .map(|j| {
            if half > 0.0 {
                (j as f64 - half) / half
            } else {
                0.0
            }
        })
        .collect();

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut r_diag = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut col: Vec<f64> = xs.iter().map(|&x| crate::math::powi(x, k as i32)).collect();
        for _pass in 0..2 {
            for basis in &q {
                let proj: f64 = basis.iter().zip(&col).map(|(b, c)| b * c).sum();
                for (c, b) in col.iter_mut().zip(basis) {
                    *c -= proj * b;
                }
            }
        }
        let norm = sqrt(col.iter().map(|v| v * v).sum());
        r_diag.push(norm);
        if !(norm > 0.0) {
            return Err(GeometryError::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        for c in &mut col {
            *c /= norm;
        }
        q.push(col);
    }

    let max_r = r_diag.iter().cloned().fold(0.0, f64::max);
    let min_r = r_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = (max_r / min_r) * (max_r / min_r);
    if !(condition < MAX_CONDITION) {
        return Err(GeometryError::IllConditioned { condition });
    }

    let mut h = vec![vec![0.0; m]; m];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, hij) in row.iter_mut().enumerate() {
            *hij = q.iter().map(|b| b[i] * b[j]).sum();
        }
    }
    Ok(h)
}

/// Weights evaluating the local polynomial fit at `center_index` of the
/// window. They sum to one.
pub fn savgol_coefficients(
    spec: &SavGolSpec,
    center_index: usize,
) -> Result<Vec<f64>, GeometryError> {
    spec.validate()?;
    if center_index >= spec.window {
        return Err(GeometryError::BadCenter {
            center: center_index,
            window: spec.window,
        });
    }
    let mut h = savgol_matrix(spec)?;
    Ok(h.swap_remove(center_index))
}

/// Length-preserving Savitzky–Golay smoothing.
///
/// Interior samples are evaluated at [`SavGolSpec::center`]; near the edges
/// the window is pinned inside the series and the fit is evaluated off-center.
pub fn savgol_filter(series: &[f64], spec: &SavGolSpec) -> Result<Vec<f64>, GeometryError> {
    spec.validate()?;
    let n = series.len();
    let m = spec.window;
    if n < m {
        return Err(GeometryError::SeriesTooShort { len: n, window: m });
    }
    let h = savgol_matrix(spec)?;
    let c = spec.center();
    let out = (0..n)
        .map(|i| {
            let start = i.saturating_sub(c).min(n - m);
            let weights = &h[i - start];
            weights
                .iter()
                .zip(&series[start..start + m])
                .map(|(w, x)| w * x)
                .sum()
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Independent oracle: fit the polynomial by solving the normal equations
    /// with Gauss-Jordan elimination on integer offsets, then evaluate it.
    #[allow(clippy::needless_range_loop)]
    fn lsq_eval(ys: &[f64], order: usize, at: usize) -> f64 {
        let m = ys.len();
        let n = order + 1;
        // Offsets relative to the evaluation point keep the system small.
        let xs: Vec<f64> = (0..m).map(|j| (j as f64 - at as f64) / m as f64).collect();
        let mut a = vec![vec![0.0; n + 1]; n];
        for r in 0..n {
            for c in 0..n {
                a[r][c] = xs.iter().map(|x| x.powi((r + c) as i32)).sum();
            }
            a[r][n] = xs.iter().zip(ys).map(|(x, y)| x.powi(r as i32) * y).sum();
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        // Polynomial value at offset 0 is the constant coefficient.
        a[0][n] / a[0][0]
    }

    /// Pseudoinverse oracle for the kernel: the weight of sample j is the
    /// fitted value at `center` when the input is the unit impulse at j.
    fn oracle_weights(window: usize, order: usize, center: usize) -> Vec<f64> {
        (0..window)
            .map(|j| {
                let mut e = vec![0.0; window];
                e[j] = 1.0;
                lsq_eval(&e, order, center)
            })
            .collect()
    }

    #[test]
    fn five_point_quadratic_kernel() {
        let w = savgol_coefficients(&SavGolSpec::new(5, 2).unwrap(), 2).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        let oracle = oracle_weights(5, 2, 2);
        for j in 0..5 {
            assert!((w[j] - expected[j]).abs() < 1e-12, "{w:?}");
            assert!((oracle[j] - expected[j]).abs() < 1e-12, "{oracle:?}");
        }
    }

    #[test]
    fn three_point_quadratic_is_interpolation() {
        let w = savgol_coefficients(&SavGolSpec::new(3, 2).unwrap(), 1).unwrap();
        let oracle = oracle_weights(3, 2, 1);
        for j in 0..3 {
            let e = if j == 1 { 1.0 } else { 0.0 };
            assert!((w[j] - e).abs() < 1e-12);
            assert!((oracle[j] - e).abs() < 1e-9);
        }
    }

    #[test]
    fn even_window_kernel_matches_oracle() {
        let spec = SavGolSpec::default();
        for center in [0, 7, 25, 49] {
            let w = savgol_coefficients(&spec, center).unwrap();
            let oracle = oracle_weights(50, 4, center);
            for j in 0..50 {
                assert!((w[j] - oracle[j]).abs() < 1e-10, "center {center} j {j}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for (window, order) in [(5, 2), (7, 0), (11, 3), (50, 4), (51, 4), (21, 6), (9, 8)] {
            let spec = SavGolSpec::new(window, order).unwrap();
            for c in 0..window {
                let s: f64 = savgol_coefficients(&spec, c).unwrap().iter().sum();
                assert!(
                    (s - 1.0).abs() < 1e-12,
                    "window {window} order {order} center {c}: {s}"
                );
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(SavGolSpec::new(3, 3).is_err());
        assert!(SavGolSpec::new(0, 0).is_err());
        let spec = SavGolSpec::new(5, 2).unwrap();
        assert_eq!(
            savgol_coefficients(&spec, 5),
            Err(GeometryError::BadCenter {
                center: 5,
                window: 5
            })
        );
        assert_eq!(
            savgol_filter(&[1.0, 2.0], &spec),
            Err(GeometryError::SeriesTooShort { len: 2, window: 5 })
        );
        let err = savgol_matrix(&SavGolSpec {
            window: 200,
            order: 40,
        })
        .unwrap_err();
        assert!(matches!(err, GeometryError::IllConditioned { condition } if condition > 1e14));
    }

    #[test]
    fn constant_series_is_unchanged() {
        let xs = vec![3.25; 120];
        let ys = savgol_filter(&xs, &SavGolSpec::default()).unwrap();
        assert!(ys.iter().all(|y| (y - 3.25).abs() < 1e-12));
    }

    #[test]
    fn quartic_is_reproduced() {
        let p = |t: f64| t.powi(4) - 3.0 * t * t + 2.0;
        let xs: Vec<f64> = (0..300).map(|i| p(-3.0 + i as f64 * 0.02)).collect();
        let ys = savgol_filter(&xs, &SavGolSpec::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn smoothing_reduces_noise_on_a_sine() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let clean: Vec<f64> = (0..1000)
            .map(|i| 20.0 * (2.0 * core::f64::consts::PI * i as f64 / 50.0).sin())
            .collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        let spec = SavGolSpec::default();
        let filtered = savgol_filter(&noisy, &spec).unwrap();
        let rmse = |a: &[f64]| {
            crate::math::rms(&a.iter().zip(&clean).map(|(x, c)| x - c).collect::<Vec<_>>())
        };
        assert!(
            rmse(&filtered) < rmse(&noisy),
            "{} vs {}",
            rmse(&filtered),
            rmse(&noisy)
        );

        // The filter output equals a direct least-squares refit per window.
        let n = noisy.len();
        for i in [0usize, 3, 24, 25, 500, 975, 976, 999] {
            let start = i.saturating_sub(25).min(n - 50);
            let oracle = lsq_eval(&noisy[start..start + 50], 4, i - start);
            assert!((oracle - filtered[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolation_limit_is_identity() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let ys = savgol_filter(&xs, &SavGolSpec::new(7, 6).unwrap()).unwrap();
        assert_eq!(xs, ys);
    }

    proptest! {
        #[test]
        fn filter_is_linear(xs in prop::collection::vec(-100.0f64..100.0, 60..120),
                            a in -5.0f64..5.0, b in -5.0f64..5.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = xs.iter().map(|_| rng.random_range(-100.0..100.0)).collect();
            let spec = SavGolSpec::default();
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let lhs = savgol_filter(&combo, &spec).unwrap();
            let fx = savgol_filter(&xs, &spec).unwrap();
            let fy = savgol_filter(&ys, &spec).unwrap();
            for i in 0..xs.len() {
                let rhs = a * fx[i] + b * fy[i];
                let scale = 1.0f64.max((a * fx[i]).abs() + (b * fy[i]).abs());
                prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn full_order_reproduces_input(xs in prop::collection::vec(-1e3f64..1e3, 12..40)) {
            let spec = SavGolSpec::new(9, 8).unwrap();
            let ys = savgol_filter(&xs, &spec).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
            }
        }
    }
}
