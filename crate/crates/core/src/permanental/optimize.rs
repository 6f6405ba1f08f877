//! Preconditioned Polak–Ribière conjugate gradient for the representer
//! log-posterior.
//!
//! The search runs in the eigen-coordinates `v = Φᵀ S ψ` of the equivalent
//! kernel, where `f = S Φ diag(h) v` and `ψᵀK̃ψ = Σ h_j v_j²`. In these
//! coordinates the prior part of the Hessian is diagonal, so the
//! preconditioner `1 / (h_j (1 + c h_j))` is exact for it and roughly right
//! for the likelihood part near the mode. Along any search line the objective
//! is strictly concave until some `f_i` with `a_i > 0` hits zero, so the line
//! search solves `φ'(t) = 0` to high accuracy with a safeguarded Newton method.

use nalgebra::DVector;

use crate::kernel::EquivalentKernel;

pub(crate) struct Outcome {
    pub v: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `‖∇_ψ ℓ‖_∞` at the returned point.
    pub grad_norm: f64,
    pub message: Option<String>,
}

pub(crate) struct Problem<'a> {
    pub ek: &'a EquivalentKernel,
    pub counts: &'a DVector<f64>,
    pub c: f64,
}

impl Problem<'_> {
    pub fn latent(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.ek.basis() * v.component_mul(self.ek.spectrum())).component_mul(self.ek.scale())
    }

    pub fn psi(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.ek.basis() * v).component_div(self.ek.scale())
    }

    pub fn from_latent(&self, f: &DVector<f64>) -> DVector<f64> {
        self.ek.basis().tr_mul(&f.component_div(self.ek.scale())).component_div(self.ek.spectrum())
    }

    fn grad_v(&self, v: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let ratio = DVector::from_fn(f.len(), |i, _| {
            let a = self.counts[i];
            if a > 0.0 {
                2.0 * a / f[i] * self.ek.scale()[i]
            } else {
                0.0
            }
        });
        (self.ek.basis().tr_mul(&ratio) - v).component_mul(self.ek.spectrum())
    }

    fn grad_psi_norm(&self, g: &DVector<f64>) -> f64 {
        (self.ek.basis() * g).component_mul(self.ek.scale()).amax()
    }
}

pub(crate) fn maximize(problem: &Problem, v0: DVector<f64>, maxiter: usize, tol: f64) -> Outcome {
    let h = problem.ek.spectrum();
    let n = v0.len();
    let precond = h.map(|hj| 1.0 / (hj * (1.0 + problem.c * hj)));
    let threshold = tol * (1.0 + problem.ek.apply(problem.counts).amax());

    let mut v = v0;
    let mut f = problem.latent(&v);
    let mut g = problem.grad_v(&v, &f);
    let mut z = g.component_mul(&precond);
    let mut dir = z.clone();
    let mut grad_norm = problem.grad_psi_norm(&g);
    let mut since_restart = 0;

    for iter in 0..maxiter {
        if grad_norm <= threshold {
            return Outcome { v, converged: true, iterations: iter, grad_norm, message: None };
        }
        let mut slope = g.dot(&dir);
        if !(slope > 0.0) || since_restart >= n {
            dir = z.clone();
            slope = g.dot(&dir);
            since_restart = 0;
        }
        let step_f = (problem.ek.basis() * dir.component_mul(h)).component_mul(problem.ek.scale());
        let Some(t) = line_search(problem, &v, &dir, &f, &step_f, slope) else {
            return Outcome {
                v,
                converged: false,
                iterations: iter,
                grad_norm,
                message: Some("line search failed to find an ascent step".into()),
            };
        };
        v.axpy(t, &dir, 1.0);
        f = problem.latent(&v);
        let g_new = problem.grad_v(&v, &f);
        let z_new = g_new.component_mul(&precond);
        let beta = (z_new.dot(&(&g_new - &g)) / z.dot(&g)).max(0.0);
        dir = &z_new + &dir * beta;
        g = g_new;
        z = z_new;
        grad_norm = problem.grad_psi_norm(&g);
        since_restart += 1;
        if !grad_norm.is_finite() {
            return Outcome {
                v,
                converged: false,
                iterations: iter + 1,
                grad_norm,
                message: Some("non-finite gradient".into()),
            };
        }
    }
    let converged = grad_norm <= threshold;
    Outcome {
        v,
        converged,
        iterations: maxiter,
        grad_norm,
        message: (!converged).then(|| format!("gradient norm {grad_norm:e} above {threshold:e} after {maxiter} iterations")),
    }
}

// Maximizes φ(t) = ℓ(v + t·dir) for t > 0.
fn line_search(
    problem: &Problem,
    v: &DVector<f64>,
    dir: &DVector<f64>,
    f: &DVector<f64>,
    step_f: &DVector<f64>,
    slope: f64,
) -> Option<f64> {
    let h = problem.ek.spectrum();
    let hdv: f64 = h.iter().zip(dir.iter().zip(v.iter())).map(|(h, (d, v))| h * d * v).sum();
    let hdd: f64 = h.iter().zip(dir.iter()).map(|(h, d)| h * d * d).sum();
    let a = problem.counts;

    // first zero crossing of a latent value at a bin with counts
    let mut t_max = f64::INFINITY;
    for i in 0..f.len() {
        if a[i] > 0.0 && f[i] * step_f[i] < 0.0 {
            t_max = t_max.min(-f[i] / step_f[i]);
        }
    }

    let derivs = |t: f64| -> (f64, f64) {
        let mut d1 = -(hdv + t * hdd);
        let mut d2 = -hdd;
        for i in 0..f.len() {
            if a[i] > 0.0 {
                let r = step_f[i] / (f[i] + t * step_f[i]);
                d1 += 2.0 * a[i] * r;
                d2 -= 2.0 * a[i] * r * r;
            }
        }
        (d1, d2)
    };

    let (mut lo, mut hi) = (0.0, t_max);
    let mut t = 1.0_f64;
    if !t_max.is_finite() {
        loop {
            let (d1, _) = derivs(t);
            if d1 <= 0.0 {
                hi = t;
                break;
            }
            lo = t;
            t *= 4.0;
            if t > 1e300 {
                return None;
            }
        }
    } else if t >= t_max {
        t = 0.5 * t_max;
    }

    let tiny = 1e-14 * slope.abs();
    for _ in 0..200 {
        let (d1, d2) = derivs(t);
        if !d1.is_finite() {
            hi = t;
            t = 0.5 * (lo + hi);
            continue;
        }
        if d1.abs() <= tiny {
            break;
        }
        if d1 > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - d1 / d2;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-15 * t.abs() {
            t = next;
            break;
        }
        t = next;
    }
    (t > 0.0 && t.is_finite()).then_some(t)
}
