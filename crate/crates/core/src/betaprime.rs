//! The generalized Beta Prime distribution `BP(α, β, p, q)` on `[0, ∞)`.
//!
//! Density
//!
//! ```text
//! f(x) = p x^(αp−1) / (q^(αp) B(α, β) (1 + (x/q)^p)^(α+β))
//! ```
//!
//! With `Y = (X/q)^p`, the variable `Y/(1+Y)` is `Beta(α, β)`. The CDF, quantile
//! and sampler all go through that relation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::{checked_beta_reg, ln_beta};

use crate::error::{domain, parameter, Error, Result};

/// Generalized Beta Prime law with shapes `alpha`, `beta`, power `p` and scale `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenBetaPrime {
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
}

impl GenBetaPrime {
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("p", p), ("q", q)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(parameter(format!(
                    "beta prime {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self { alpha, beta, p, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Same shapes with a new power and scale.
    pub fn with_power_scale(&self, p: f64, q: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, p, q)
    }

    /// Law of `1/X`: `BP(β, α, p, 1/q)`.
    pub fn reciprocal(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha, p: self.p, q: 1.0 / self.q }
    }

    /// Log density. Returns `+∞` at `x = 0` when `αp < 1`.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let ap = self.alpha * self.p;
        let norm = self.p.ln() - ap * self.q.ln() - ln_beta(self.alpha, self.beta);
        if x == 0.0 {
            return Ok(if ap > 1.0 {
                f64::NEG_INFINITY
            } else if ap == 1.0 {
                norm
            } else {
                f64::INFINITY
            });
        }
        if x.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        // log(1 + (x/q)^p) without forming (x/q)^p, which overflows in the far tail
        let lt = self.p * (x.ln() - self.q.ln());
        let log1p_t = if lt > 0.0 { lt + (-lt).exp().ln_1p() } else { lt.exp().ln_1p() };
        Ok(norm + (ap - 1.0) * x.ln() - (self.alpha + self.beta) * log1p_t)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let (lower, upper) = self.tails(x)?;
        Ok(if lower <= 0.5 { lower } else { 1.0 - upper })
    }

    /// Survival function `1 − F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let (lower, upper) = self.tails(x)?;
        Ok(if upper <= 0.5 { upper } else { 1.0 - lower })
    }

    // Returns (F(x), 1 − F(x)); whichever is smaller is computed directly.
    fn tails(&self, x: f64) -> Result<(f64, f64)> {
        if x == 0.0 {
            return Ok((0.0, 1.0));
        }
        if x.is_infinite() {
            return Ok((1.0, 0.0));
        }
        let lt = self.p * (x.ln() - self.q.ln());
        // z = t/(1+t), 1 − z = 1/(1+t), t = (x/q)^p
        let z = 1.0 / (1.0 + (-lt).exp());
        let zc = 1.0 / (1.0 + lt.exp());
        if z <= 0.5 {
            let lower = beta_reg(self.alpha, self.beta, z)?;
            Ok((lower, 1.0 - lower))
        } else {
            let upper = beta_reg(self.beta, self.alpha, zc)?;
            Ok((1.0 - upper, upper))
        }
    }

    /// Quantile function. `u = 1` returns `+∞`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(domain(format!("quantile level must lie in [0, 1], got {u}")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(f64::INFINITY);
        }
        let (w, wc) = beta_quantile(self.alpha, self.beta, u)?;
        if wc == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.q * ((w.ln() - wc.ln()) / self.p).exp())
    }

    /// Inverse of [`sf`](Self::sf): the `x` with `1 − F(x) = s`. Keeps full
    /// precision in the upper tail, where `1 − s` rounds to one.
    pub fn isf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(domain(format!("survival level must lie in [0, 1], got {s}")));
        }
        if s == 0.0 {
            return Ok(f64::INFINITY);
        }
        if s == 1.0 {
            return Ok(0.0);
        }
        let (wc, w) = beta_quantile(self.beta, self.alpha, s)?;
        if wc == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.q * ((w.ln() - wc.ln()) / self.p).exp())
    }

    pub fn median(&self) -> f64 {
        // u = 1/2 is always inside the domain
        self.quantile(0.5).unwrap_or(f64::NAN)
    }

    /// Mean `q B(α + 1/p, β − 1/p) / B(α, β)`, finite only when `βp > 1`.
    pub fn mean(&self) -> Option<f64> {
        let inv_p = 1.0 / self.p;
        (self.beta > inv_p).then(|| {
            self.q
                * (ln_beta(self.alpha + inv_p, self.beta - inv_p) - ln_beta(self.alpha, self.beta))
                    .exp()
        })
    }

    /// Mode of the density; zero when `αp ≤ 1`.
    pub fn mode(&self) -> f64 {
        let ap = self.alpha * self.p;
        if ap <= 1.0 {
            0.0
        } else {
            self.q * ((ap - 1.0) / (self.beta * self.p + 1.0)).powf(1.0 / self.p)
        }
    }

    /// `n` independent draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        // shapes are validated positive and finite in `new`
        let beta = Beta::new(self.alpha, self.beta).expect("valid beta shapes");
        (0..n)
            .map(|_| {
                let z: f64 = beta.sample(rng);
                self.q * (z / (1.0 - z)).powf(1.0 / self.p)
            })
            .collect()
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("beta prime support is [0, inf), got {x}")));
    }
    Ok(())
}

fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    checked_beta_reg(a, b, x).map_err(|e| Error::Numerical(format!("incomplete beta: {e}")))
}

fn beta_ln_pdf(a: f64, b: f64, lnb: f64, w: f64) -> f64 {
    (a - 1.0) * w.ln() + (b - 1.0) * (-w).ln_1p() - lnb
}

/// Solves `I_w(a, b) = u` and returns `(w, 1 − w)`, each accurate to full
/// relative precision on the side of the distribution that `u` falls in.
pub(crate) fn beta_quantile(a: f64, b: f64, u: f64) -> Result<(f64, f64)> {
    if u <= 0.5 {
        let w = invert_beta_cdf(a, b, u)?;
        Ok((w, 1.0 - w))
    } else {
        // 1 − W ~ Beta(b, a)
        let wc = invert_beta_cdf(b, a, 1.0 - u)?;
        Ok((1.0 - wc, wc))
    }
}

// Safeguarded Newton iteration on the regularized incomplete Beta function.
fn invert_beta_cdf(a: f64, b: f64, target: f64) -> Result<f64> {
    if target <= 0.0 {
        return Ok(0.0);
    }
    if target >= 1.0 {
        return Ok(1.0);
    }
    let lnb = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut w = (a / (a + b)).clamp(1e-3, 1.0 - 1e-3);
    for _ in 0..400 {
        let resid = beta_reg(a, b, w)? - target;
        if resid == 0.0 {
            return Ok(w);
        }
        if resid < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let dens = beta_ln_pdf(a, b, lnb, w).exp();
        let newton = w - resid / dens;
        let next = if dens.is_finite() && dens > 0.0 && newton > lo && newton < hi {
            newton
        } else if lo == 0.0 {
            // geometric steps reach tiny quantiles quickly
            0.1 * hi
        } else {
            0.5 * (lo + hi)
        };
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}
