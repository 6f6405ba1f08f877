//! Scoring and credible sets: CRPS for gridded and Gaussian predictive laws,
//! highest-posterior-density sets for gridded densities (any number of modes)
//! and for the Gaussian.

use std::f64::consts::PI;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::betaprime::GenBetaPrime;
use crate::error::{domain, parameter, shape, Error, Result};

/// Tolerance on the total mass of a gridded density before a warning is raised.
pub const MASS_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Density,
    Cdf,
}

/// A predictive law tabulated on a strictly increasing grid, either as a
/// density or as a CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    kind: DensityKind,
}

impl GriddedDensity {
    pub fn density(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, DensityKind::Density)
    }

    pub fn cdf(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, DensityKind::Cdf)
    }

    pub fn new(grid: Vec<f64>, values: Vec<f64>, kind: DensityKind) -> Result<Self> {
        if grid.is_empty() {
            return Err(domain("empty evaluation grid"));
        }
        if grid.len() < 2 {
            return Err(domain("evaluation grid needs at least two points"));
        }
        if values.len() != grid.len() {
            return Err(shape(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(parameter("grid must be finite and strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(parameter(format!("tabulated values must be finite and non-negative, got {v}")));
        }
        if kind == DensityKind::Cdf {
            if values.windows(2).any(|w| w[1] < w[0] - 1e-12) {
                return Err(parameter("CDF values must be non-decreasing"));
            }
            if values.iter().any(|&v| v > 1.0 + 1e-9) {
                return Err(parameter("CDF values must lie in [0, 1]"));
            }
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }
}

/// Trapezoid quadrature weights for an increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

fn cumulative_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpsScore {
    pub value: f64,
    /// The grid misses more than `MASS_TOLERANCE` of the predictive mass.
    pub truncated: bool,
}

/// `∫ (F(y) − H(y − x̂))² dy` by the trapezoid rule on the grid, with `H(0) = 1`.
///
/// A density is first integrated to a CDF by the cumulative trapezoid rule and
/// scaled so that it ends at one. When `x̂` lies outside the grid the gap
/// between the grid and `x̂` is added with `F` held at its end value.
pub fn crps(dist: &GriddedDensity, xhat: f64) -> Result<CrpsScore> {
    if !xhat.is_finite() {
        return Err(domain(format!("observation must be finite, got {xhat}")));
    }
    let grid = &dist.grid;
    let (cdf, truncated) = match dist.kind {
        DensityKind::Density => {
            let raw = cumulative_trapezoid(grid, &dist.values);
            let total = *raw.last().expect("non-empty grid");
            if !(total > 0.0) {
                return Err(domain("density has zero mass on the grid"));
            }
            let truncated = (total - 1.0).abs() > MASS_TOLERANCE;
            (raw.iter().map(|v| (v / total).min(1.0)).collect::<Vec<_>>(), truncated)
        }
        DensityKind::Cdf => {
            let first = dist.values[0];
            let last = *dist.values.last().expect("non-empty grid");
            let truncated = first > MASS_TOLERANCE || last < 1.0 - MASS_TOLERANCE;
            (dist.values.iter().map(|v| v.min(1.0)).collect(), truncated)
        }
    };
    let integrand: Vec<f64> = grid
        .iter()
        .zip(&cdf)
        .map(|(&y, &f)| {
            let h = if y >= xhat { 1.0 } else { 0.0 };
            (f - h) * (f - h)
        })
        .collect();
    let mut value: f64 = integrand.iter().zip(trapezoid_weights(grid)).map(|(v, w)| v * w).sum();
    let (lo, hi) = (grid[0], *grid.last().expect("non-empty grid"));
    if xhat > hi {
        let f = *cdf.last().expect("non-empty grid");
        value += (xhat - hi) * f * f;
    } else if xhat < lo {
        let f = cdf[0];
        value += (lo - xhat) * (1.0 - f) * (1.0 - f);
    }
    Ok(CrpsScore { value, truncated })
}

/// Closed-form CRPS of `N(μ, σ²)`: `σ [z(2Φ(z) − 1) + 2φ(z) − 1/√π]`, `z = (x̂ − μ)/σ`.
pub fn crps_gaussian(mu: f64, sigma: f64, xhat: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let z = (xhat - mu) / sigma;
    let n = standard_normal();
    Ok(sigma * (z * (2.0 * n.cdf(z) - 1.0) + 2.0 * n.pdf(z) - 1.0 / PI.sqrt()))
}

fn standard_normal() -> Normal {
    Normal::standard()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(parameter(format!("standard deviation must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("coverage must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// A highest-posterior-density set on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdSet {
    /// Grid points inside the set, in increasing order.
    pub member_points: Vec<f64>,
    /// Maximal runs of consecutive member points, as closed intervals.
    pub intervals: Vec<(f64, f64)>,
    /// Density threshold `h`; members satisfy `f(x) ≥ h`.
    pub threshold: f64,
    /// Normalized mass of the set.
    pub achieved_mass: f64,
    /// The input integrated to something other than one (beyond `MASS_TOLERANCE`)
    /// and was rescaled.
    pub renormalized: bool,
}

impl HpdSet {
    pub fn lower(&self) -> f64 {
        self.intervals.first().map_or(f64::NAN, |iv| iv.0)
    }

    pub fn upper(&self) -> f64 {
        self.intervals.last().map_or(f64::NAN, |iv| iv.1)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

/// Solves `∫_{f ≥ h} f dx = α` for `h` by bisection on `[0, max f]` and returns
/// the grid points with `f ≥ h`.
///
/// Masses are trapezoid-weighted sums over grid points. When the density is
/// flat at the threshold over a region carrying appreciable mass (a plateau),
/// tied points are admitted from left to right until the mass reaches `α`.
pub fn hpd_set(dist: &GriddedDensity, alpha: f64) -> Result<HpdSet> {
    check_alpha(alpha)?;
    if dist.kind != DensityKind::Density {
        return Err(parameter("HPD sets need a density, not a CDF"));
    }
    let grid = &dist.grid;
    let weights = trapezoid_weights(grid);
    let total: f64 = dist.values.iter().zip(&weights).map(|(f, w)| f * w).sum();
    if !(total > 0.0) {
        return Err(domain("density has zero mass on the grid"));
    }
    let renormalized = (total - 1.0).abs() > MASS_TOLERANCE;
    let f: Vec<f64> = dist.values.iter().map(|v| v / total).collect();
    let fmax = f.iter().copied().fold(0.0, f64::max);

    let mass_above = |h: f64| -> f64 { f.iter().zip(&weights).filter(|(v, _)| **v >= h).map(|(v, w)| v * w).sum() };

    // g(h) = mass(h) − α: g(0) = 1 − α > 0, g is non-increasing in h.
    let (mut lo, mut hi) = (0.0, fmax);
    if mass_above(fmax) >= alpha {
        lo = fmax;
    } else {
        while hi - lo > 1e-10 * fmax {
            let mid = 0.5 * (lo + hi);
            if mass_above(mid) >= alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    // snap to the smallest density value still admitted
    let threshold = f.iter().copied().filter(|&v| v >= lo).fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * fmax;
    let mut member = vec![false; f.len()];
    let mut mass = 0.0;
    let mut tied = Vec::new();
    for i in 0..f.len() {
        if f[i] > threshold + tie {
            member[i] = true;
            mass += f[i] * weights[i];
        } else if f[i] >= threshold - tie {
            tied.push(i);
        }
    }
    let tied_mass: f64 = tied.iter().map(|&i| f[i] * weights[i]).sum();
    let max_step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let plateau = mass + tied_mass - alpha > MASS_TOLERANCE.max(2.0 * max_step * fmax);
    for &i in &tied {
        if plateau && mass >= alpha {
            break;
        }
        member[i] = true;
        mass += f[i] * weights[i];
    }

    let member_points: Vec<f64> = grid.iter().zip(&member).filter(|(_, m)| **m).map(|(x, _)| *x).collect();
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=f.len() {
        let inside = i < f.len() && member[i];
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                intervals.push((grid[s], grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    Ok(HpdSet { member_points, intervals, threshold: threshold * total, achieved_mass: mass, renormalized })
}

/// `[μ + σΦ⁻¹((1−α)/2), μ + σΦ⁻¹((1+α)/2)]`.
pub fn hpd_interval_gaussian(mu: f64, sigma: f64, alpha: f64) -> Result<HpdSet> {
    check_sigma(sigma)?;
    check_alpha(alpha)?;
    let n = standard_normal();
    let zq = n.inverse_cdf(0.5 * (1.0 + alpha));
    let (lo, hi) = (mu - sigma * zq, mu + sigma * zq);
    Ok(HpdSet {
        member_points: Vec::new(),
        intervals: vec![(lo, hi)],
        threshold: n.pdf(zq) / sigma,
        achieved_mass: alpha,
        renormalized: false,
    })
}

/// Log-spaced grid covering a Beta Prime law between its `tail` and `1 − tail`
/// quantiles, optionally stretched to include `include`.
pub fn beta_prime_grid(law: &GenBetaPrime, n: usize, tail: f64, include: Option<f64>) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(parameter("grid needs at least two points"));
    }
    let mut lo = law.quantile(tail)?;
    let mut hi = law.isf(tail)?;
    if let Some(x) = include.filter(|x| *x > 0.0 && x.is_finite()) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !(lo > 0.0 && hi.is_finite() && hi > lo) {
        return Err(Error::Numerical(format!("cannot grid beta prime law on [{lo}, {hi}]")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    grid.dedup();
    Ok(grid)
}

/// Tabulated density of `shift + X`, `X ~ law`, on a log-spaced grid.
pub fn beta_prime_density(law: &GenBetaPrime, shift: f64, n: usize, include: Option<f64>) -> Result<GriddedDensity> {
    let grid = beta_prime_grid(law, n, 1e-9, include.map(|t| t - shift))?;
    let values = grid.iter().map(|&x| law.pdf(x)).collect::<Result<Vec<_>>>()?;
    GriddedDensity::density(grid.iter().map(|x| x + shift).collect(), values)
}

/// Gridded CRPS of `shift + BP(...)` against `truth`.
pub fn crps_beta_prime(law: &GenBetaPrime, shift: f64, truth: f64, n: usize) -> Result<CrpsScore> {
    crps(&beta_prime_density(law, shift, n, Some(truth))?, truth)
}

/// Gridded HPD set of `shift + BP(...)`.
pub fn hpd_beta_prime(law: &GenBetaPrime, shift: f64, alpha: f64, n: usize) -> Result<HpdSet> {
    hpd_set(&beta_prime_density(law, shift, n, None)?, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    }

    fn normal_pdf(x: f64, mu: f64, s: f64) -> f64 {
        Normal::new(mu, s).unwrap().pdf(x)
    }

    #[test]
    fn gaussian_crps_at_mean() {
        let s = 1.7;
        let expected = s * (2.0f64.sqrt() - 1.0) / PI.sqrt();
        assert_relative_eq!(crps_gaussian(3.0, s, 3.0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_crps_rejects_bad_sigma() {
        assert!(matches!(crps_gaussian(0.0, 0.0, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(crps_gaussian(0.0, -1.0, 1.0), Err(Error::Parameter(_))));
        assert!(hpd_interval_gaussian(0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn tight_forecast_scores_near_zero() {
        let y = grid(-1.0, 3.0, 1e-4);
        let pdf = y.iter().map(|&x| normal_pdf(x, 1.0, 0.001)).collect();
        let s = crps(&GriddedDensity::density(y, pdf).unwrap(), 1.0).unwrap();
        assert!(s.value < 1e-3, "{}", s.value);
        assert!(!s.truncated);
    }

    #[test]
    fn truncated_grid_is_flagged() {
        let y = grid(-1.0, 1.0, 1e-3);
        let pdf = y.iter().map(|&x| normal_pdf(x, 0.0, 1.0)).collect();
        assert!(crps(&GriddedDensity::density(y, pdf).unwrap(), 0.0).unwrap().truncated);
    }

    #[test]
    fn observation_outside_grid_adds_gap() {
        let y = grid(-6.0, 6.0, 1e-3);
        let cdf: Vec<f64> = y.iter().map(|&x| Normal::standard().cdf(x)).collect();
        let d = GriddedDensity::cdf(y, cdf).unwrap();
        let s = crps(&d, 8.0).unwrap().value;
        assert_relative_eq!(s, crps_gaussian(0.0, 1.0, 8.0).unwrap(), max_relative = 1e-3);
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(GriddedDensity::density(vec![], vec![]), Err(Error::Domain(_))));
        assert!(GriddedDensity::density(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GriddedDensity::density(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(GriddedDensity::density(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(GriddedDensity::cdf(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        assert!(GriddedDensity::cdf(vec![0.0, 1.0], vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn hpd_rejects_bad_alpha() {
        let y = grid(0.0, 1.0, 0.01);
        let d = GriddedDensity::density(y.clone(), vec![1.0; y.len()]).unwrap();
        for a in [0.0, 1.0, -0.1, 1.5] {
            assert!(matches!(hpd_set(&d, a), Err(Error::Domain(_))));
            assert!(hpd_interval_gaussian(0.0, 1.0, a).is_err());
        }
    }

    #[test]
    fn uniform_plateau_fills_left_to_right() {
        let y = grid(0.0, 1.0, 1e-3);
        let d = GriddedDensity::density(y.clone(), vec![1.0; y.len()]).unwrap();
        let set = hpd_set(&d, 0.5).unwrap();
        assert_eq!(set.intervals.len(), 1);
        assert_eq!(set.lower(), 0.0);
        assert!((set.upper() - 0.5).abs() <= 2e-3, "{}", set.upper());
        assert!((set.achieved_mass - 0.5).abs() <= 2e-3);
    }

    #[test]
    fn unnormalized_density_is_rescaled() {
        let y = grid(-6.0, 6.0, 1e-3);
        let pdf: Vec<f64> = y.iter().map(|&x| 3.0 * normal_pdf(x, 0.0, 1.0)).collect();
        let set = hpd_set(&GriddedDensity::density(y, pdf).unwrap(), 0.9).unwrap();
        assert!(set.renormalized);
        assert!((set.upper() - 1.6449).abs() < 2e-3);
        assert!((set.threshold - 3.0 * normal_pdf(set.upper(), 0.0, 1.0)).abs() < 1e-2);
    }

    #[test]
    fn gaussian_interval_quartiles() {
        let set = hpd_interval_gaussian(10.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(set.lower(), 10.0 - 2.0 * 0.6744897501960817, max_relative = 1e-12);
        assert_relative_eq!(set.upper(), 10.0 + 2.0 * 0.6744897501960817, max_relative = 1e-12);
        let tiny = hpd_interval_gaussian(1.0, 1.0, 1e-12).unwrap();
        assert!(tiny.upper() - tiny.lower() < 1e-11);
        assert!(tiny.contains(1.0));
    }

    #[test]
    fn beta_prime_hpd_contains_mode() {
        let law = GenBetaPrime::new(31.0, 11.0, 1.0, 1.0).unwrap();
        let set = hpd_beta_prime(&law, 0.0, 0.95, 2001).unwrap();
        assert_eq!(set.intervals.len(), 1);
        assert!(set.contains(law.mode()));
        assert!((set.achieved_mass - 0.95).abs() < 2e-3);
        // HPD of a right-skewed law sits left of the equal-tailed interval
        assert!(set.lower() < law.quantile(0.025).unwrap());
    }
}
