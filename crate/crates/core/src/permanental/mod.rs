//! MAP estimation of a binned Poisson intensity under a permanental-process
//! prior `Λ_i = (c/2) f_i²`, `f ~ N(0, γ⁻¹K)`, with a Laplace approximation of
//! the posterior of `f` and per-bin Gamma laws for `Λ` matched on the first
//! two moments.
//!
//! With the representer form `f = K̃ψ` the log-posterior is
//!
//! ```text
//! ℓ(ψ) = Σ_i a_i log((c/2)(K̃ψ)_i²) − ½ ψᵀK̃ψ
//! ∇ℓ(ψ) = −K̃ψ + 2 K̃ (a ⊘ K̃ψ)
//! ```
//!
//! Several realizations of the same intensity are pooled: counts are summed
//! per bin and the exposure term is scaled by the number of observed
//! realizations, which enters through the equivalent kernel
//! `K̃⁻¹ = c·diag(n) + γK⁻¹`.

mod optimize;

use nalgebra::{DMatrix, DVector};

use crate::counts::CountData;
use crate::error::{parameter, shape, Error, Result};
use crate::kernel::{equivalent_kernel_with_exposure, EquivalentKernel, KernelMatrix};

use optimize::{maximize, Problem};

/// Tuning for [`permprocest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanentalOptions {
    /// Marginal precision γ of the latent field.
    pub gamma: f64,
    /// Intensity scaling c in `Λ = (c/2) f²`.
    pub c: f64,
    pub maxiter: usize,
    /// Relative gradient tolerance: stop when
    /// `‖∇ℓ‖_∞ ≤ tol · (1 + ‖K̃a‖_∞)`.
    pub tol: f64,
}

impl Default for PermanentalOptions {
    fn default() -> Self {
        Self { gamma: 1.0, c: 1.0, maxiter: 300, tol: 1e-6 }
    }
}

/// Per-bin Gamma laws (shape, rate) for the intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaPosterior {
    pub shape: Vec<f64>,
    pub rate: Vec<f64>,
}

impl GammaPosterior {
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.shape[i] / self.rate[i]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.shape[i] / (self.rate[i] * self.rate[i])
    }
}

/// Gamma law matching the mean and variance of `(c/2) f²` for `f ~ N(μ, σ²)`.
///
/// Returns `(shape, rate)` with
/// `shape = (μ²+σ²)² / (2σ²(2μ²+σ²))` and `rate = (μ²+σ²) / (σ² c (2μ²+σ²))`.
pub fn gamma_moment_match(mu: f64, sigma2: f64, c: f64) -> Result<(f64, f64)> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(parameter(format!("latent variance must be positive, got {sigma2}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(parameter(format!("c must be positive, got {c}")));
    }
    if !mu.is_finite() {
        return Err(parameter(format!("latent mean must be finite, got {mu}")));
    }
    let m2 = mu * mu;
    let second = m2 + sigma2;
    let spread = 2.0 * m2 + sigma2;
    Ok((second * second / (2.0 * sigma2 * spread), second / (sigma2 * c * spread)))
}

/// Result of [`permprocest`].
#[derive(Debug, Clone)]
pub struct PermanentalFit {
    /// Representer coefficients ψ̂.
    pub psi_hat: DVector<f64>,
    /// MAP latent field f̂ = K̃ψ̂.
    pub f_hat: DVector<f64>,
    /// MAP intensities (c/2) f̂².
    pub lambda_hat: DVector<f64>,
    /// Laplace covariance of f at the MAP.
    pub sigma_hat: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub sigma2: DVector<f64>,
    pub gamma_post: GammaPosterior,
    pub converged: bool,
    pub iterations: usize,
    /// `‖∇ℓ(ψ̂)‖_∞` at termination.
    pub grad_norm: f64,
    /// Why the optimizer stopped early, if it did.
    pub message: Option<String>,
    /// Counts summed over realizations.
    pub pooled_counts: DVector<f64>,
    /// Observed realizations per bin.
    pub exposure: Vec<f64>,
    pub c: f64,
    pub equivalent: EquivalentKernel,
}

/// `Σ_i a_i log((c/2)(K̃ψ)_i²) − ½ ψᵀK̃ψ`.
///
/// Returns `-∞` when `(K̃ψ)_i = 0` at a bin with `a_i > 0`.
pub fn log_posterior(psi: &DVector<f64>, counts: &DVector<f64>, eq: &EquivalentKernel, c: f64) -> f64 {
    let f = eq.apply(psi);
    let mut total = -0.5 * psi.dot(&f);
    for (a, fi) in counts.iter().zip(f.iter()) {
        if *a > 0.0 {
            if *fi == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += a * (0.5 * c * fi * fi).ln();
        }
    }
    total
}

/// `−K̃ψ + 2 K̃ (a ⊘ K̃ψ)`, with zero-count bins contributing nothing to the quotient.
pub fn log_posterior_gradient(
    psi: &DVector<f64>,
    counts: &DVector<f64>,
    eq: &EquivalentKernel,
) -> Result<DVector<f64>> {
    if psi.len() != eq.dim() || counts.len() != eq.dim() {
        return Err(shape(format!(
            "psi ({}) and counts ({}) must match kernel dimension {}",
            psi.len(),
            counts.len(),
            eq.dim()
        )));
    }
    let f = eq.apply(psi);
    let mut quotient = DVector::zeros(f.len());
    for i in 0..f.len() {
        if counts[i] > 0.0 {
            if f[i] == 0.0 {
                return Err(Error::Numerical(format!("latent value vanishes at bin {i} with counts")));
            }
            quotient[i] = counts[i] / f[i];
        }
    }
    Ok(eq.apply(&quotient) * 2.0 - f)
}

/// Fits the permanental model to `counts` under prior kernel `km`.
///
/// An optimizer that stops short of the gradient tolerance still yields a fit,
/// with `converged = false` and a diagnostic `message`.
pub fn permprocest(counts: &CountData, km: &KernelMatrix, opts: &PermanentalOptions) -> Result<PermanentalFit> {
    let d = km.dim();
    if counts.n_bins() != d {
        return Err(shape(format!("{} count bins for a {d}-bin kernel", counts.n_bins())));
    }
    if opts.maxiter == 0 {
        return Err(parameter("maxiter must be at least 1"));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(parameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let exposure = counts.exposures();
    if let Some(i) = exposure.iter().position(|&n| n == 0.0) {
        return Err(parameter(format!("bin {i} has no observed realizations")));
    }
    let c = opts.c;
    let eq = equivalent_kernel_with_exposure(km, c, opts.gamma, &exposure)?;
    let pooled = DVector::from_vec(counts.totals());

    let problem = Problem { ek: &eq, counts: &pooled, c };
    // count-anchored positive start fixes the f > 0 branch
    let f0 = DVector::from_fn(d, |i, _| (2.0 * (pooled[i] / exposure[i] + 0.5) / c).sqrt());
    let v0 = problem.from_latent(&f0);
    let outcome = maximize(&problem, v0, opts.maxiter, opts.tol);

    let psi_hat = problem.psi(&outcome.v);
    let f_hat = problem.latent(&outcome.v);
    let sigma_hat = laplace_covariance(&eq, &pooled, &f_hat)?;
    let sigma2 = DVector::from_fn(d, |i, _| sigma_hat[(i, i)].max(f64::MIN_POSITIVE));
    let mut shape_v = Vec::with_capacity(d);
    let mut rate_v = Vec::with_capacity(d);
    for i in 0..d {
        let (s, r) = gamma_moment_match(f_hat[i], sigma2[i], c)?;
        shape_v.push(s);
        rate_v.push(r);
    }
    let lambda_hat = f_hat.map(|f| 0.5 * c * f * f);

    Ok(PermanentalFit {
        psi_hat,
        mu: f_hat.clone(),
        f_hat,
        lambda_hat,
        sigma_hat,
        sigma2,
        gamma_post: GammaPosterior { shape: shape_v, rate: rate_v },
        converged: outcome.converged,
        iterations: outcome.iterations,
        grad_norm: outcome.grad_norm,
        message: outcome.message,
        pooled_counts: pooled,
        exposure,
        c,
        equivalent: eq,
    })
}

/// `Σ̂ = (K̃⁻¹ + W)⁻¹` with `W = diag(2a_i / f_i²)`, evaluated as
/// `K̃ − K̃ W^½ (I + W^½ K̃ W^½)⁻¹ W^½ K̃`. Bins with `a_i = 0` have `W_ii = 0`.
pub fn laplace_covariance(eq: &EquivalentKernel, counts: &DVector<f64>, f_hat: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = eq.dim();
    let kt = eq.matrix();
    let w_sqrt = DVector::from_fn(d, |i, _| {
        if counts[i] > 0.0 {
            (2.0 * counts[i]).sqrt() / f_hat[i].abs()
        } else {
            0.0
        }
    });
    if w_sqrt.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical("latent MAP vanishes at a bin with counts".into()));
    }
    // M = W^½ K̃
    let m = DMatrix::from_fn(d, d, |i, j| w_sqrt[i] * kt[(i, j)]);
    let mut b = DMatrix::from_fn(d, d, |i, j| m[(i, j)] * w_sqrt[j]);
    for i in 0..d {
        b[(i, i)] += 1.0;
    }
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::Numerical("Laplace system is not positive definite".into()))?;
    let mut x = m;
    if !chol.l().solve_lower_triangular_mut(&mut x) {
        return Err(Error::Numerical("singular Cholesky factor".into()));
    }
    let sigma = kt - x.tr_mul(&x);
    Ok((&sigma + sigma.transpose()) * 0.5)
}
