//! Prior kernel matrices over bin centers and the equivalent kernel
//! `K̃ = (cI + γK⁻¹)⁻¹`, built from the eigendecomposition of `K`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{parameter, shape, Error, Result};

/// Eigenvalues below this fraction of the largest are floored.
pub const EIGEN_JITTER: f64 = 1e-10;

/// Bin centers (one row per bin, one column per spatial dimension) and bin measures.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    centers: DMatrix<f64>,
    widths: Vec<f64>,
}

impl BinGrid {
    pub fn new(centers: DMatrix<f64>, widths: Vec<f64>) -> Result<Self> {
        let d = centers.nrows();
        if d < 2 {
            return Err(shape(format!("need at least two bins, got {d}")));
        }
        if centers.ncols() == 0 {
            return Err(shape("bin centers have zero spatial dimensions"));
        }
        if widths.len() != d {
            return Err(shape(format!("{} widths for {d} bins", widths.len())));
        }
        if let Some(w) = widths.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(parameter(format!("bin widths must be positive, got {w}")));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(parameter("bin centers must be finite"));
        }
        let grid = Self { centers, widths };
        for i in 0..d {
            for j in 0..i {
                if grid.distance(i, j) == 0.0 {
                    return Err(parameter(format!("bins {j} and {i} share a center")));
                }
            }
        }
        Ok(grid)
    }

    /// One-dimensional grid from explicit centers, all with the same width.
    pub fn from_centers_1d(centers: &[f64], width: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(centers.len(), 1, centers),
            vec![width; centers.len()],
        )
    }

    /// `n` equal bins on `[lo, hi]`, centers at the midpoints.
    pub fn uniform_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(parameter(format!("empty interval [{lo}, {hi}]")));
        }
        let width = (hi - lo) / n as f64;
        let centers: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * width).collect();
        Self::from_centers_1d(&centers, width)
    }

    pub fn len(&self) -> usize {
        self.centers.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    /// First coordinate of every center.
    pub fn centers_1d(&self) -> Vec<f64> {
        self.centers.column(0).iter().copied().collect()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.centers.row(i) - self.centers.row(j)).norm()
    }
}

/// Symmetric positive-semidefinite prior kernel with its eigendecomposition
/// (eigenvalues descending, eigenvectors as columns).
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl KernelMatrix {
    /// Validates symmetry and semidefiniteness, then decomposes.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(shape(format!(
                "kernel matrix must be square and non-empty, got {}x{}",
                d,
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(parameter("kernel matrix has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(parameter(format!("kernel matrix is not symmetric (max |K - K^T| = {asym:e})")));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let (eigenvalues, eigenvectors) = sorted_eigen(&matrix);
        let top = eigenvalues[0];
        if top <= 0.0 {
            return Err(Error::DegenerateKernel("kernel matrix has no positive eigenvalue".into()));
        }
        let low = eigenvalues[d - 1];
        if low < -EIGEN_JITTER * top {
            return Err(parameter(format!(
                "kernel matrix is not positive semidefinite (eigenvalue {low:e}, largest {top:e})"
            )));
        }
        Ok(Self { matrix, eigenvalues, eigenvectors })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(d, order.iter().map(|&j| eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Wendland C² kernel `σ² (1 − r/ρ)₊⁴ (4r/ρ + 1)` at lag `r`.
pub fn wendland_c2(r: f64, support_width: f64, variance: f64) -> f64 {
    let s = r / support_width;
    if s >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s;
        variance * t * t * t * t * (4.0 * s + 1.0)
    }
}

pub fn wendland_kernel(grid: &BinGrid, support_width: f64, variance: f64) -> Result<KernelMatrix> {
    if !(support_width.is_finite() && support_width > 0.0) {
        return Err(parameter(format!("support width must be positive, got {support_width}")));
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(parameter(format!("kernel variance must be positive, got {variance}")));
    }
    let d = grid.len();
    let k = DMatrix::from_fn(d, d, |i, j| wendland_c2(grid.distance(i, j), support_width, variance));
    KernelMatrix::from_matrix(k)
}

/// Equivalent kernel in factored form `K̃ = S Φ diag(h) Φᵀ S`.
///
/// `S = diag(scale)` is the identity for the plain construction; exposure-weighted
/// kernels (bins observed a different number of times) use `scale = n^(-1/2)`.
#[derive(Debug, Clone)]
pub struct EquivalentKernel {
    matrix: DMatrix<f64>,
    c: f64,
    gamma: f64,
    scale: DVector<f64>,
    basis: DMatrix<f64>,
    spectrum: DVector<f64>,
    floored: usize,
}

impl EquivalentKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Per-bin scaling `S` (all ones without exposure weights).
    pub fn scale(&self) -> &DVector<f64> {
        &self.scale
    }

    /// Orthonormal eigenbasis `Φ` of the (weighted) prior kernel.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `h_j = η_j / (c η_j + γ)`.
    pub fn spectrum(&self) -> &DVector<f64> {
        &self.spectrum
    }

    /// Number of eigenvalues raised to the jitter floor.
    pub fn floored(&self) -> usize {
        self.floored
    }

    /// `K̃ x` through the factorization, `O(d²)`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let sx = x.component_mul(&self.scale);
        let mut coef = self.basis.tr_mul(&sx);
        coef.component_mul_assign(&self.spectrum);
        (&self.basis * coef).component_mul(&self.scale)
    }
}

/// `K̃ = Φ diag(η_j/(cη_j + γ)) Φᵀ`, eigenvalues floored at `EIGEN_JITTER · η₁`.
pub fn equivalent_kernel(km: &KernelMatrix, c: f64, gamma: f64) -> Result<EquivalentKernel> {
    check_cg(c, gamma)?;
    let d = km.dim();
    build(km.eigenvalues.clone(), km.eigenvectors.clone(), DVector::from_element(d, 1.0), c, gamma)
}

/// Equivalent kernel for pooled realizations with per-bin exposure `n_i`:
/// `K̃⁻¹ = c·diag(n) + γK⁻¹`. Uniform exposure `n` reduces to
/// `equivalent_kernel(km, n·c, γ)`.
pub fn equivalent_kernel_with_exposure(
    km: &KernelMatrix,
    c: f64,
    gamma: f64,
    exposure: &[f64],
) -> Result<EquivalentKernel> {
    check_cg(c, gamma)?;
    let d = km.dim();
    if exposure.len() != d {
        return Err(shape(format!("{} exposures for a {d}-bin kernel", exposure.len())));
    }
    if let Some(n) = exposure.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
        return Err(parameter(format!("bin exposure must be positive, got {n}")));
    }
    let first = exposure[0];
    if exposure.iter().all(|&n| n == first) {
        // K' = nK shares the eigenvectors of K
        build(
            &km.eigenvalues * first,
            km.eigenvectors.clone(),
            DVector::from_element(d, first.sqrt().recip()),
            c,
            gamma,
        )
    } else {
        let root = DVector::from_iterator(d, exposure.iter().map(|n| n.sqrt()));
        let weighted = DMatrix::from_fn(d, d, |i, j| root[i] * km.matrix[(i, j)] * root[j]);
        let (values, vectors) = sorted_eigen(&weighted);
        build(values, vectors, root.map(f64::recip), c, gamma)
    }
}

fn check_cg(c: f64, gamma: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(parameter(format!("c must be positive, got {c}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(parameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

fn build(
    eigenvalues: DVector<f64>,
    basis: DMatrix<f64>,
    scale: DVector<f64>,
    c: f64,
    gamma: f64,
) -> Result<EquivalentKernel> {
    let top = eigenvalues.max();
    if !(top > 0.0) {
        return Err(Error::DegenerateKernel("all kernel eigenvalues are zero".into()));
    }
    let floor = EIGEN_JITTER * top;
    let mut floored = 0;
    let spectrum = eigenvalues.map(|eta| {
        let eta = if eta < floor {
            floored += 1;
            floor
        } else {
            eta
        };
        eta / (c * eta + gamma)
    });
    let d = basis.nrows();
    let mut scaled = basis.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= spectrum[j];
    }
    let mut matrix = scaled * basis.transpose();
    for i in 0..d {
        for j in 0..d {
            matrix[(i, j)] *= scale[i] * scale[j];
        }
    }
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(EquivalentKernel { matrix, c, gamma, scale, basis, spectrum, floored })
}
