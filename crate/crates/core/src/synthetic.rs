//! Simulated binned-Poisson data, including the sin²/cos² toy ratio on `[-1, 1]`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::counts::CountData;
use crate::error::{parameter, Result};
use crate::kernel::BinGrid;
use crate::ratio::QoiModel;

/// Numerator mean `25 sin²(πx/2) + 10`.
pub fn toy_numerator_mean(x: f64) -> f64 {
    25.0 * (FRAC_PI_2 * x).sin().powi(2) + 10.0
}

/// Denominator mean `8 cos²(πx/2) + 10`.
pub fn toy_denominator_mean(x: f64) -> f64 {
    8.0 * (FRAC_PI_2 * x).cos().powi(2) + 10.0
}

pub fn toy_ratio(x: f64) -> f64 {
    toy_numerator_mean(x) / toy_denominator_mean(x)
}

/// `T = 5(Z² + 2)`, i.e. `Z = (T/5 − 2)^(1/2)`.
pub fn toy_qoi(x: f64) -> f64 {
    5.0 * (toy_ratio(x).powi(2) + 2.0)
}

/// Forward model of the nonlinear toy problem: `m = 1/5`, `z0 = −2`, `p = 1/2`.
pub fn toy_qoi_model() -> QoiModel {
    QoiModel { m: 0.2, z0: -2.0, p: 0.5 }
}

#[derive(Debug, Clone)]
pub struct ToyRatioData {
    pub grid: BinGrid,
    pub numerator: CountData,
    pub denominator: CountData,
    /// True ratio at each bin center.
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyQoiData {
    pub ratio: ToyRatioData,
    /// True quantity of interest at each bin center.
    pub truth: Vec<f64>,
    pub model: QoiModel,
}

/// One realization per bin of each process on `n_bins` equal bins of `[-1, 1]`,
/// with Poisson means taken at the bin centers.
pub fn toy_ratio_problem(n_bins: usize, seed: u64) -> Result<ToyRatioData> {
    if n_bins < 2 {
        return Err(parameter(format!("toy problem needs at least 2 bins, got {n_bins}")));
    }
    let grid = BinGrid::uniform_1d(-1.0, 1.0, n_bins)?;
    let centers = grid.centers_1d();
    let num_mean: Vec<f64> = centers.iter().map(|&x| toy_numerator_mean(x)).collect();
    let den_mean: Vec<f64> = centers.iter().map(|&x| toy_denominator_mean(x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let numerator = simulate_with(&num_mean, 1, &mut rng)?;
    let denominator = simulate_with(&den_mean, 1, &mut rng)?;
    let truth = centers.iter().map(|&x| toy_ratio(x)).collect();
    Ok(ToyRatioData { grid, numerator, denominator, truth })
}

/// Same counts as [`toy_ratio_problem`], with truth `T = 5(Z² + 2)`.
pub fn toy_qoi_problem(n_bins: usize, seed: u64) -> Result<ToyQoiData> {
    let ratio = toy_ratio_problem(n_bins, seed)?;
    let truth = ratio.grid.centers_1d().iter().map(|&x| toy_qoi(x)).collect();
    Ok(ToyQoiData { ratio, truth, model: toy_qoi_model() })
}

/// Independent Poisson draws, `realizations` per bin.
pub fn simulate_binned_poisson(intensity: &[f64], realizations: usize, seed: u64) -> Result<CountData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(intensity, realizations, &mut rng)
}

fn simulate_with<R: Rng>(intensity: &[f64], realizations: usize, rng: &mut R) -> Result<CountData> {
    if realizations == 0 {
        return Err(parameter("need at least one realization"));
    }
    if let Some(l) = intensity.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(parameter(format!("intensity must be finite and non-negative, got {l}")));
    }
    let samplers: Vec<Option<Poisson<f64>>> = intensity
        .iter()
        .map(|&l| (l > 0.0).then(|| Poisson::new(l).expect("positive finite rate")))
        .collect();
    let mut m = DMatrix::zeros(intensity.len(), realizations);
    for r in 0..realizations {
        for (i, s) in samplers.iter().enumerate() {
            if let Some(s) = s {
                m[(i, r)] = s.sample(rng);
            }
        }
    }
    CountData::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn toy_means_at_landmarks() {
        assert_relative_eq!(toy_numerator_mean(0.0), 10.0);
        assert_relative_eq!(toy_denominator_mean(0.0), 18.0);
        assert_relative_eq!(toy_ratio(0.0), 10.0 / 18.0);
        for x in [-1.0, 1.0] {
            assert_relative_eq!(toy_numerator_mean(x), 35.0, max_relative = 1e-14);
            assert_relative_eq!(toy_denominator_mean(x), 10.0, max_relative = 1e-14);
            assert_relative_eq!(toy_ratio(x), 3.5, max_relative = 1e-14);
        }
        assert_relative_eq!(toy_qoi(0.0), 5.0 * (25.0 / 81.0 + 2.0), max_relative = 1e-14);
        assert_relative_eq!(toy_qoi(0.0), 11.54320987654321, max_relative = 1e-12);
    }

    #[test]
    fn qoi_forward_consistency() {
        let data = toy_qoi_problem(50, 3).unwrap();
        let QoiModel { m, z0, p } = data.model;
        for (t, z) in data.truth.iter().zip(&data.ratio.truth) {
            assert_relative_eq!((m * t + z0).powf(p), *z, max_relative = 1e-12);
        }
        // Z = 1 maps to T = 15
        assert_relative_eq!(5.0 * (1.0f64.powi(2) + 2.0), 15.0);
    }

    #[test]
    fn zero_intensity_gives_zero_counts() {
        let c = simulate_binned_poisson(&[0.0, 0.0, 0.0], 4, 1).unwrap();
        assert!(c.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = toy_ratio_problem(20, 9).unwrap();
        let b = toy_ratio_problem(20, 9).unwrap();
        assert_eq!(a.numerator, b.numerator);
        assert_eq!(a.denominator, b.denominator);
        let c = toy_ratio_problem(20, 10).unwrap();
        assert_ne!(a.numerator, c.numerator);
        assert_eq!(
            simulate_binned_poisson(&[3.0, 4.0], 5, 2).unwrap(),
            simulate_binned_poisson(&[3.0, 4.0], 5, 2).unwrap()
        );
    }

    #[test]
    fn poisson_mean_clt() {
        let c = simulate_binned_poisson(&[100.0], 100_000, 5).unwrap();
        let mean = c.totals()[0] / 1e5;
        assert!((mean - 100.0).abs() < 3.0 * (100.0f64 / 1e5).sqrt(), "mean {mean}");
    }

    #[test]
    fn numerator_mean_at_center() {
        // 10⁴ draws at x = 0 where the numerator mean is 10
        let c = simulate_binned_poisson(&[toy_numerator_mean(0.0)], 10_000, 21).unwrap();
        let mean = c.totals()[0] / 1e4;
        assert!((mean - 10.0).abs() < 3.0 * (10.0f64 / 1e4).sqrt(), "mean {mean}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(toy_ratio_problem(1, 0).is_err());
        assert!(simulate_binned_poisson(&[-1.0], 1, 0).is_err());
        assert!(simulate_binned_poisson(&[1.0], 0, 0).is_err());
    }
}
