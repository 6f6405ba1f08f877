//! Python bindings. Arrays cross the boundary as lists; count tables are either
//! a flat list (one realization) or a list of per-bin rows, with `nan` for
//! missing entries.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use poisratio::kernel::BinGrid;
use poisratio::uq::DensityKind;
use poisratio::{
    ConjugatePriors, CountData, GammaPrior, GriddedDensity, KernelMatrix, PermanentalOptions, QoiModel, RatioModel,
    RatioOptions, RatioPosterior,
};

fn err(e: poisratio::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[derive(FromPyObject)]
enum Counts {
    Single(Vec<f64>),
    Table(Vec<Vec<f64>>),
}

impl Counts {
    fn into_data(self) -> PyResult<CountData> {
        match self {
            Counts::Single(v) => CountData::from_counts(&v).map_err(err),
            Counts::Table(rows) => {
                let r = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|row| row.len() != r) {
                    return Err(PyValueError::new_err("count rows must all have the same length"));
                }
                let flat: Vec<f64> = rows.concat();
                CountData::new(DMatrix::from_row_slice(rows.len(), r, &flat)).map_err(err)
            }
        }
    }
}

fn kernel_from_rows(rows: Vec<Vec<f64>>) -> PyResult<KernelMatrix> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("kernel must be a square matrix"));
    }
    KernelMatrix::from_matrix(DMatrix::from_row_slice(d, d, &rows.concat())).map_err(err)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Generalized Beta Prime law BP(alpha, beta, p, q).
#[pyclass(name = "GenBetaPrime", module = "poisratio", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGenBetaPrime {
    inner: poisratio::GenBetaPrime,
}

#[pymethods]
impl PyGenBetaPrime {
    #[new]
    #[pyo3(signature = (alpha, beta, p = 1.0, q = 1.0))]
    fn new(alpha: f64, beta: f64, p: f64, q: f64) -> PyResult<Self> {
        Ok(Self { inner: poisratio::GenBetaPrime::new(alpha, beta, p, q).map_err(err)? })
    }

    #[getter]
    fn params(&self) -> (f64, f64, f64, f64) {
        let l = &self.inner;
        (l.alpha(), l.beta(), l.p(), l.q())
    }

    fn pdf(&self, x: f64) -> PyResult<f64> {
        self.inner.pdf(x).map_err(err)
    }

    fn cdf(&self, x: f64) -> PyResult<f64> {
        self.inner.cdf(x).map_err(err)
    }

    fn sf(&self, x: f64) -> PyResult<f64> {
        self.inner.sf(x).map_err(err)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.inner.quantile(u).map_err(err)
    }

    fn isf(&self, s: f64) -> PyResult<f64> {
        self.inner.isf(s).map_err(err)
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.inner.sample(n, seed)
    }

    fn mean(&self) -> Option<f64> {
        self.inner.mean()
    }

    fn median(&self) -> f64 {
        self.inner.median()
    }

    fn mode(&self) -> f64 {
        self.inner.mode()
    }

    fn __repr__(&self) -> String {
        let (a, b, p, q) = self.params();
        format!("GenBetaPrime(alpha={a}, beta={b}, p={p}, q={q})")
    }
}

#[pyfunction]
#[pyo3(signature = (centers, support_width = 0.75, variance = 1.0))]
fn wendland_kernel(centers: Vec<f64>, support_width: f64, variance: f64) -> PyResult<Vec<Vec<f64>>> {
    let grid = BinGrid::from_centers_1d(&centers, 1.0).map_err(err)?;
    let k = poisratio::wendland_kernel(&grid, support_width, variance).map_err(err)?;
    Ok(rows_of(k.matrix()))
}

#[pyfunction]
#[pyo3(signature = (counts, kernel, gamma = 1.0, c = 1.0, maxiter = 300))]
fn permprocest<'py>(
    py: Python<'py>,
    counts: Counts,
    kernel: Vec<Vec<f64>>,
    gamma: f64,
    c: f64,
    maxiter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let counts = counts.into_data()?;
    let km = kernel_from_rows(kernel)?;
    let opts = PermanentalOptions { gamma, c, maxiter, ..Default::default() };
    let fit = poisratio::permprocest(&counts, &km, &opts).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("psi_hat", fit.psi_hat.as_slice().to_vec())?;
    out.set_item("f_hat", fit.f_hat.as_slice().to_vec())?;
    out.set_item("lambda_hat", fit.lambda_hat.as_slice().to_vec())?;
    out.set_item("sigma_hat", rows_of(&fit.sigma_hat))?;
    out.set_item("sigma2", fit.sigma2.as_slice().to_vec())?;
    out.set_item("shape", fit.gamma_post.shape.clone())?;
    out.set_item("rate", fit.gamma_post.rate.clone())?;
    out.set_item("converged", fit.converged)?;
    out.set_item("iterations", fit.iterations)?;
    Ok(out)
}

fn ratio_dict<'py>(py: Python<'py>, post: &RatioPosterior) -> PyResult<Bound<'py, PyDict>> {
    let field = |f: fn(&poisratio::GenBetaPrime) -> f64| -> Vec<f64> {
        post.laws.iter().map(|l| l.as_ref().map_or(f64::NAN, f)).collect()
    };
    let out = PyDict::new(py);
    out.set_item("map", post.map_estimate.clone())?;
    out.set_item("alpha_num", field(poisratio::GenBetaPrime::alpha))?;
    out.set_item("alpha_denom", field(poisratio::GenBetaPrime::beta))?;
    out.set_item("p", field(poisratio::GenBetaPrime::p))?;
    out.set_item("q", field(poisratio::GenBetaPrime::q))?;
    out.set_item("converged", post.converged())?;
    out.set_item("invalid_bins", post.invalid_bins())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (counts_num, counts_denom, kernel, kernel_denom = None, c1 = 1.0, c2 = 1.0, g1 = 1.0, g2 = 1.0, maxiter = 300))]
#[allow(clippy::too_many_arguments)]
fn ratio_estimation_permproc<'py>(
    py: Python<'py>,
    counts_num: Counts,
    counts_denom: Counts,
    kernel: Vec<Vec<f64>>,
    kernel_denom: Option<Vec<Vec<f64>>>,
    c1: f64,
    c2: f64,
    g1: f64,
    g2: f64,
    maxiter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = (counts_num.into_data()?, counts_denom.into_data()?);
    let km = kernel_from_rows(kernel)?;
    let kd = kernel_denom.map(kernel_from_rows).transpose()?;
    let opts = RatioOptions {
        numerator: PermanentalOptions { gamma: g1, c: c1, maxiter, ..Default::default() },
        denominator: PermanentalOptions { gamma: g2, c: c2, maxiter, ..Default::default() },
    };
    let post = poisratio::ratio_estimation_permproc(&a, &b, &km, kd.as_ref(), &opts).map_err(err)?;
    ratio_dict(py, &post)
}

#[pyfunction]
#[pyo3(signature = (counts_num, counts_denom, a1 = 1.0, b1 = 0.0, a2 = 1.0, b2 = 0.0))]
fn zbetaprime<'py>(
    py: Python<'py>,
    counts_num: Counts,
    counts_denom: Counts,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let priors = ConjugatePriors {
        numerator: GammaPrior { shape: a1, rate: b1 },
        denominator: GammaPrior { shape: a2, rate: b2 },
    };
    let post = poisratio::zbetaprime(&counts_num.into_data()?, &counts_denom.into_data()?, &priors).map_err(err)?;
    ratio_dict(py, &post)
}

/// Posterior of `T` with `Z = (mT + z0)^p`: `T = shift + BP(alpha_num, alpha_denom, p, scale)` per bin.
#[pyfunction]
#[pyo3(signature = (counts_num, counts_denom, m, z0, p, kernel = None, spatial = true, c1 = 1.0, c2 = 1.0, g1 = 1.0, g2 = 1.0, maxiter = 300))]
#[allow(clippy::too_many_arguments)]
fn t_given_ab<'py>(
    py: Python<'py>,
    counts_num: Counts,
    counts_denom: Counts,
    m: f64,
    z0: f64,
    p: f64,
    kernel: Option<Vec<Vec<f64>>>,
    spatial: bool,
    c1: f64,
    c2: f64,
    g1: f64,
    g2: f64,
    maxiter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = (counts_num.into_data()?, counts_denom.into_data()?);
    let km = match (spatial, kernel) {
        (true, Some(k)) => Some(kernel_from_rows(k)?),
        (true, None) => return Err(PyValueError::new_err("the spatial model needs a kernel")),
        (false, _) => None,
    };
    let model = match &km {
        Some(k) => RatioModel::Spatial {
            numerator_kernel: k,
            denominator_kernel: None,
            options: RatioOptions {
                numerator: PermanentalOptions { gamma: g1, c: c1, maxiter, ..Default::default() },
                denominator: PermanentalOptions { gamma: g2, c: c2, maxiter, ..Default::default() },
            },
        },
        None => RatioModel::Pointwise(ConjugatePriors::default()),
    };
    let post = poisratio::t_given_ab(&a, &b, &[QoiModel { m, z0, p }], &model).map_err(err)?;
    let out = ratio_dict(py, &post.ratio)?;
    out.set_item("shift", post.shift.clone())?;
    out.set_item("qoi_p", post.laws.iter().map(|l| l.as_ref().map_or(f64::NAN, |l| l.p())).collect::<Vec<_>>())?;
    out.set_item("qoi_scale", post.laws.iter().map(|l| l.as_ref().map_or(f64::NAN, |l| l.q())).collect::<Vec<_>>())?;
    out.set_item("qoi_map", post.map_estimate.clone())?;
    Ok(out)
}

/// CRPS of a gridded predictive law; `kind` is "pdf" or "cdf".
#[pyfunction]
#[pyo3(signature = (grid, values, xhat, kind = "pdf"))]
fn crps(grid: Vec<f64>, values: Vec<f64>, xhat: f64, kind: &str) -> PyResult<f64> {
    let kind = match kind {
        "pdf" => DensityKind::Density,
        "cdf" => DensityKind::Cdf,
        other => return Err(PyValueError::new_err(format!("kind must be 'pdf' or 'cdf', got {other:?}"))),
    };
    let dist = GriddedDensity::new(grid, values, kind).map_err(err)?;
    Ok(poisratio::crps(&dist, xhat).map_err(err)?.value)
}

#[pyfunction]
fn crps_gaussian(mu: f64, sigma: f64, xhat: f64) -> PyResult<f64> {
    poisratio::crps_gaussian(mu, sigma, xhat).map_err(err)
}

/// HPD set of a gridded density as a list of `(lower, upper)` intervals.
#[pyfunction]
fn hpd_set(grid: Vec<f64>, pdf: Vec<f64>, alpha: f64) -> PyResult<Vec<(f64, f64)>> {
    let dist = GriddedDensity::density(grid, pdf).map_err(err)?;
    Ok(poisratio::hpd_set(&dist, alpha).map_err(err)?.intervals)
}

#[pyfunction]
fn hpd_interval_gaussian(mu: f64, sigma: f64, alpha: f64) -> PyResult<(f64, f64)> {
    let set = poisratio::hpd_interval_gaussian(mu, sigma, alpha).map_err(err)?;
    Ok((set.lower(), set.upper()))
}

#[pyfunction]
#[pyo3(signature = (n_bins = 50, seed = 0))]
fn toy_ratio_problem<'py>(py: Python<'py>, n_bins: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let data = poisratio::synthetic::toy_ratio_problem(n_bins, seed).map_err(err)?;
    let column = |c: &CountData| c.matrix().column(0).iter().copied().collect::<Vec<f64>>();
    let out = PyDict::new(py);
    out.set_item("centers", data.grid.centers_1d())?;
    out.set_item("numerator", column(&data.numerator))?;
    out.set_item("denominator", column(&data.denominator))?;
    out.set_item("truth", data.truth)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "poisratio")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenBetaPrime>()?;
    m.add_function(wrap_pyfunction!(wendland_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(permprocest, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_estimation_permproc, m)?)?;
    m.add_function(wrap_pyfunction!(zbetaprime, m)?)?;
    m.add_function(wrap_pyfunction!(t_given_ab, m)?)?;
    m.add_function(wrap_pyfunction!(crps, m)?)?;
    m.add_function(wrap_pyfunction!(crps_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(hpd_set, m)?)?;
    m.add_function(wrap_pyfunction!(hpd_interval_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(toy_ratio_problem, m)?)?;
    Ok(())
}
