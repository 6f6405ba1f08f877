//! Posterior laws for intensity ratios `Z = Λ_a / Λ_b` and for a quantity of
//! interest `T` linked to the ratio by `Z = (mT + z0)^p`.
//!
//! If `Λ_a ~ Γ(α_a, β_a)` and `Λ_b ~ Γ(α_b, β_b)` independently (rates),
//! then `Z ~ BP(α_a, α_b, 1, β_b/β_a)` and, for `m, p > 0`,
//! `T ~ −z0/m + BP(α_a, α_b, p, q^(1/p)/m)`.

use crate::betaprime::GenBetaPrime;
use crate::counts::CountData;
use crate::error::{parameter, shape, Error, Result};
use crate::kernel::KernelMatrix;
use crate::permanental::{permprocest, PermanentalFit, PermanentalOptions};

/// How the per-process intensities were estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Permanental,
    Pointwise,
}

/// Per-bin ratio laws. Bins where the posterior is improper carry `None`.
#[derive(Debug, Clone)]
pub struct RatioPosterior {
    pub laws: Vec<Option<GenBetaPrime>>,
    /// Ratio of MAP (permanental) or posterior-mode (pointwise) intensities.
    pub map_estimate: Vec<f64>,
    pub kind: EstimatorKind,
    /// Numerator and denominator fits for the permanental estimator.
    pub fits: Option<Box<(PermanentalFit, PermanentalFit)>>,
}

impl RatioPosterior {
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    /// False when either permanental fit stopped before the gradient tolerance.
    pub fn converged(&self) -> bool {
        self.fits.as_ref().is_none_or(|f| f.0.converged && f.1.converged)
    }

    pub fn invalid_bins(&self) -> Vec<usize> {
        self.laws.iter().enumerate().filter(|(_, l)| l.is_none()).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatioOptions {
    pub numerator: PermanentalOptions,
    pub denominator: PermanentalOptions,
}

/// Fits both processes with the permanental model and combines the Gamma
/// posteriors into per-bin Beta Prime laws. `km_denominator` defaults to `km_numerator`.
pub fn ratio_estimation_permproc(
    counts_num: &CountData,
    counts_denom: &CountData,
    km_numerator: &KernelMatrix,
    km_denominator: Option<&KernelMatrix>,
    opts: &RatioOptions,
) -> Result<RatioPosterior> {
    if counts_num.n_bins() != counts_denom.n_bins() {
        return Err(shape(format!(
            "numerator has {} bins, denominator {}",
            counts_num.n_bins(),
            counts_denom.n_bins()
        )));
    }
    let km_den = km_denominator.unwrap_or(km_numerator);
    let (fit_a, fit_b) = std::thread::scope(|s| {
        let a = s.spawn(|| permprocest(counts_num, km_numerator, &opts.numerator));
        let b = permprocest(counts_denom, km_den, &opts.denominator);
        (a.join().expect("numerator fit panicked"), b)
    });
    let (fit_a, fit_b) = (fit_a?, fit_b?);

    let d = counts_num.n_bins();
    let mut laws = Vec::with_capacity(d);
    let mut map_estimate = Vec::with_capacity(d);
    for i in 0..d {
        let (ga, gb) = (&fit_a.gamma_post, &fit_b.gamma_post);
        let q = gb.rate[i] / ga.rate[i];
        laws.push(Some(GenBetaPrime::new(ga.shape[i], gb.shape[i], 1.0, q)?));
        map_estimate.push(fit_a.lambda_hat[i] / fit_b.lambda_hat[i]);
    }
    Ok(RatioPosterior {
        laws,
        map_estimate,
        kind: EstimatorKind::Permanental,
        fits: Some(Box::new((fit_a, fit_b))),
    })
}

/// Gamma prior with shape and rate; the default `(1, 0)` is flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 1.0, rate: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConjugatePriors {
    pub numerator: GammaPrior,
    pub denominator: GammaPrior,
}

/// Pointwise conjugate update: per bin `Γ(a + S, b + n)` for each process,
/// with `S` the summed counts and `n` the number of observed realizations.
/// Bins whose posterior rate is zero are returned as `None`.
pub fn zbetaprime(counts_num: &CountData, counts_denom: &CountData, priors: &ConjugatePriors) -> Result<RatioPosterior> {
    for (name, pr) in [("numerator", priors.numerator), ("denominator", priors.denominator)] {
        if !(pr.shape.is_finite() && pr.shape > 0.0) {
            return Err(parameter(format!("{name} prior shape must be positive, got {}", pr.shape)));
        }
        if !(pr.rate.is_finite() && pr.rate >= 0.0) {
            return Err(parameter(format!("{name} prior rate must be non-negative, got {}", pr.rate)));
        }
    }
    if counts_num.n_bins() != counts_denom.n_bins() {
        return Err(shape(format!(
            "numerator has {} bins, denominator {}",
            counts_num.n_bins(),
            counts_denom.n_bins()
        )));
    }
    let (sa, na) = (counts_num.totals(), counts_num.exposures());
    let (sb, nb) = (counts_denom.totals(), counts_denom.exposures());
    let mut laws = Vec::with_capacity(sa.len());
    let mut map_estimate = Vec::with_capacity(sa.len());
    for i in 0..sa.len() {
        let shape_a = priors.numerator.shape + sa[i];
        let rate_a = priors.numerator.rate + na[i];
        let shape_b = priors.denominator.shape + sb[i];
        let rate_b = priors.denominator.rate + nb[i];
        if rate_a > 0.0 && rate_b > 0.0 {
            laws.push(Some(GenBetaPrime::new(shape_a, shape_b, 1.0, rate_b / rate_a)?));
            let mode_a = (shape_a - 1.0).max(0.0) / rate_a;
            let mode_b = (shape_b - 1.0).max(0.0) / rate_b;
            map_estimate.push(mode_a / mode_b);
        } else {
            laws.push(None);
            map_estimate.push(f64::NAN);
        }
    }
    Ok(RatioPosterior { laws, map_estimate, kind: EstimatorKind::Pointwise, fits: None })
}

/// Forward model `Z = (mT + z0)^p`. Only increasing transforms (`m > 0`, `p > 0`)
/// are supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiModel {
    pub m: f64,
    pub z0: f64,
    pub p: f64,
}

impl QoiModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.z0.is_finite() && self.p.is_finite()) {
            return Err(parameter("forward model coefficients must be finite"));
        }
        if self.m <= 0.0 || self.p <= 0.0 {
            return Err(Error::UnsupportedModel(format!(
                "need m > 0 and p > 0, got m = {}, p = {}",
                self.m, self.p
            )));
        }
        Ok(())
    }

    /// Lower end of the support of `T`, `−z0/m`.
    pub fn shift(&self) -> f64 {
        -self.z0 / self.m
    }

    /// `T = (Z^(1/p) − z0)/m`.
    pub fn qoi_from_ratio(&self, z: f64) -> f64 {
        (z.powf(1.0 / self.p) - self.z0) / self.m
    }

    /// `Z = (mT + z0)^p`.
    pub fn ratio_from_qoi(&self, t: f64) -> f64 {
        (self.m * t + self.z0).powf(self.p)
    }
}

/// Per-bin shifted Beta Prime laws for the quantity of interest.
#[derive(Debug, Clone)]
pub struct QoiPosterior {
    pub shift: Vec<f64>,
    pub laws: Vec<Option<GenBetaPrime>>,
    /// MAP ratio pushed through the inverse forward model.
    pub map_estimate: Vec<f64>,
    pub models: Vec<QoiModel>,
    pub ratio: RatioPosterior,
}

impl QoiPosterior {
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    fn law(&self, bin: usize) -> Result<&GenBetaPrime> {
        self.laws
            .get(bin)
            .ok_or_else(|| shape(format!("bin {bin} out of range")))?
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("bin {bin} has no valid posterior")))
    }

    pub fn cdf(&self, bin: usize, t: f64) -> Result<f64> {
        let law = self.law(bin)?;
        let x = t - self.shift[bin];
        if x <= 0.0 {
            return Ok(0.0);
        }
        law.cdf(x)
    }

    pub fn pdf(&self, bin: usize, t: f64) -> Result<f64> {
        let law = self.law(bin)?;
        let x = t - self.shift[bin];
        if x < 0.0 {
            return Ok(0.0);
        }
        law.pdf(x)
    }

    pub fn quantile(&self, bin: usize, u: f64) -> Result<f64> {
        Ok(self.shift[bin] + self.law(bin)?.quantile(u)?)
    }
}

/// Pushes ratio laws through `T = (Z^(1/p) − z0)/m`. `models` holds either one
/// shared model or one per bin.
pub fn qoi_posterior(ratio: RatioPosterior, models: &[QoiModel]) -> Result<QoiPosterior> {
    let d = ratio.len();
    let models: Vec<QoiModel> = match models.len() {
        1 => vec![models[0]; d],
        n if n == d => models.to_vec(),
        n => return Err(shape(format!("{n} forward models for {d} bins"))),
    };
    for m in &models {
        m.validate()?;
    }
    let mut laws = Vec::with_capacity(d);
    for (law, m) in ratio.laws.iter().zip(&models) {
        laws.push(match law {
            Some(l) => Some(l.with_power_scale(m.p, l.q().powf(1.0 / m.p) / m.m)?),
            None => None,
        });
    }
    let shift = models.iter().map(QoiModel::shift).collect();
    let map_estimate = ratio.map_estimate.iter().zip(&models).map(|(&z, m)| m.qoi_from_ratio(z)).collect();
    Ok(QoiPosterior { shift, laws, map_estimate, models, ratio })
}

/// Which intensity model feeds the quantity-of-interest posterior.
#[derive(Debug, Clone, Copy)]
pub enum RatioModel<'a> {
    /// Spatially correlated permanental fits (the usual choice).
    Spatial {
        numerator_kernel: &'a KernelMatrix,
        denominator_kernel: Option<&'a KernelMatrix>,
        options: RatioOptions,
    },
    /// Independent conjugate updates per bin.
    Pointwise(ConjugatePriors),
}

/// Posterior of the quantity of interest given numerator and denominator counts.
pub fn t_given_ab(
    counts_num: &CountData,
    counts_denom: &CountData,
    models: &[QoiModel],
    model: &RatioModel,
) -> Result<QoiPosterior> {
    for m in models {
        m.validate()?;
    }
    let ratio = match model {
        RatioModel::Spatial { numerator_kernel, denominator_kernel, options } => {
            ratio_estimation_permproc(counts_num, counts_denom, numerator_kernel, *denominator_kernel, options)?
        }
        RatioModel::Pointwise(priors) => zbetaprime(counts_num, counts_denom, priors)?,
    };
    qoi_posterior(ratio, models)
}
