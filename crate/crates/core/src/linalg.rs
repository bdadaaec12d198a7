//! Small dense linear-algebra and order-statistic helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Symmetric eigendecomposition with eigenvalues sorted in nonincreasing order.
///
/// Ties keep the solver's output order, which is deterministic for a given input.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |row, col| {
        eig.eigenvectors[(row, order[col])]
    });
    (values, vectors)
}

/// `max |MᵀM - I|` entrywise.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Thin QR orthonormalization with the sign of each column chosen so that
/// `R` has a nonnegative diagonal; an already-orthonormal input is returned
/// (up to rounding) unchanged.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal `p×r` matrix.
///
/// Columns of `I − UUᵀ` are picked by greedy pivoting on their residual norm
/// and then orthonormalized in index order. The basis therefore varies
/// smoothly with `U` except where the pivot choice changes; a fixed-order
/// projection of `e₁, e₂, …` would instead be singular whenever `U` nears an
/// axis.
pub fn complement_basis(u: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, r) = u.shape();
    let projector = DMatrix::identity(p, p) - u * u.transpose();
    let mut residual = projector.clone();
    let mut chosen = Vec::with_capacity(p - r);
    for _ in 0..p - r {
        let (j, norm) = (0..p)
            .filter(|j| !chosen.contains(j))
            .map(|j| (j, residual.column(j).norm()))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        chosen.push(j);
        let q = residual.column(j) / norm;
        let coef = q.tr_mul(&residual);
        residual -= &q * coef;
    }
    chosen.sort_unstable();
    let picked = DMatrix::from_fn(p, p - r, |i, c| projector[(i, chosen[c])]);
    // Two passes keep the result orthogonal to U to rounding.
    let q = orthonormalize(&picked);
    let q = &q - u * u.tr_mul(&q);
    orthonormalize(&q)
}

/// Symmetric square root of a symmetric PSD matrix; negative eigenvalues
/// from rounding are clamped to zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, |v| v.max(0.0).sqrt())
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Sample covariance about the sample mean, divisor `n`.
pub fn covariance(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let d = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = DVector::zeros(d);
    for s in samples {
        mean += s;
    }
    mean /= n;
    let mut centered = DMatrix::zeros(d, samples.len());
    for (j, s) in samples.iter().enumerate() {
        centered.set_column(j, &(s - &mean));
    }
    let cov = (&centered * centered.transpose()) / n;
    (mean, symmetrize(cov))
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Median with the midpoint convention for an even count. NaN-free input assumed.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
