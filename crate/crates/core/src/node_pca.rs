//! Sharding, per-node PCA and the first-order influence representation of a
//! node estimate.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::geometry::{self, Frame, ProductPoint, SubspaceBasis, TangentVector};
use crate::linalg;

/// Observations as rows of an `n×p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("data contains non-finite entries"));
        }
        Ok(Self { values })
    }

    /// Builds from row-major entries.
    pub fn from_rows(n: usize, p: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != n * p {
            return Err(Error::DimensionMismatch {
                what: "row-major entry count",
                expected: n * p,
                found: row_major.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, p, row_major))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(rows),
        }
    }
}

/// One node's summary `(μ̂_k, Û_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate {
    pub node_id: i64,
    pub b: usize,
    pub mu_hat: DVector<f64>,
    pub subspace_hat: SubspaceBasis,
    /// Leading `r+1` eigenvalues of the node covariance, nonincreasing.
    pub eigenvalues: Option<Vec<f64>>,
    /// `λ̂_r` and `λ̂_{r+1}` coincide; the basis is the solver's choice.
    pub tie: bool,
}

impl NodeEstimate {
    pub fn p(&self) -> usize {
        self.mu_hat.len()
    }

    pub fn r(&self) -> usize {
        self.subspace_hat.r()
    }

    pub fn theta(&self) -> ProductPoint {
        ProductPoint {
            mu: self.mu_hat.clone(),
            subspace: self.subspace_hat.clone(),
        }
    }

    /// Wraps a product point as a node summary (used for synthetic nodes and aggregates).
    pub fn from_point(node_id: i64, b: usize, theta: ProductPoint) -> Self {
        Self {
            node_id,
            b,
            mu_hat: theta.mu,
            subspace_hat: theta.subspace,
            eigenvalues: None,
            tie: false,
        }
    }

    /// Empirical eigengap `λ̂_r − λ̂_{r+1}` when eigenvalues are stored.
    pub fn eigengap(&self) -> Option<f64> {
        let ev = self.eigenvalues.as_ref()?;
        let r = self.r();
        (ev.len() > r).then(|| ev[r - 1] - ev[r])
    }
}

/// Population parameters of a spiked covariance model.
#[derive(Debug, Clone)]
pub struct SpikedModel {
    p: usize,
    r: usize,
    mu0: DVector<f64>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
}

impl SpikedModel {
    pub fn new(r: usize, mu0: DVector<f64>, eigvals: Vec<f64>, eigvecs: DMatrix<f64>) -> Result<Self> {
        let p = mu0.len();
        if r == 0 || r >= p {
            return Err(Error::InvalidRank { p, r });
        }
        if eigvals.len() != p || eigvecs.shape() != (p, p) {
            return Err(Error::DimensionMismatch {
                what: "model eigen-system size",
                expected: p,
                found: eigvals.len(),
            });
        }
        if eigvals.windows(2).any(|w| w[0] < w[1]) || eigvals[p - 1] <= 0.0 {
            return Err(Error::param("eigenvalues must be positive and nonincreasing"));
        }
        let gap = eigvals[r - 1] - eigvals[r];
        if gap <= 0.0 {
            return Err(Error::SingularEigengap { gap });
        }
        let deviation = linalg::orthonormality_error(&eigvecs);
        if deviation > geometry::ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { p, r, mu0, eigvals, eigvecs })
    }

    /// Trailing eigenvalues 1 and leading `λ_j = 1 + Δ + (r−j)/2`, axis-aligned, zero mean.
    pub fn spiked(p: usize, r: usize, eigengap: f64) -> Result<Self> {
        if !(eigengap > 0.0) {
            return Err(Error::SingularEigengap { gap: eigengap });
        }
        let eigvals = (1..=p)
            .map(|j| if j <= r { 1.0 + eigengap + (r - j) as f64 * 0.5 } else { 1.0 })
            .collect();
        Self::new(r, DVector::zeros(p), eigvals, DMatrix::identity(p, p))
    }

    pub fn with_mean(mut self, mu0: DVector<f64>) -> Result<Self> {
        if mu0.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "model mean length",
                expected: self.p,
                found: mu0.len(),
            });
        }
        self.mu0 = mu0;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigengap(&self) -> f64 {
        self.eigvals[self.r - 1] - self.eigvals[self.r]
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigvals));
        &self.eigvecs * d * self.eigvecs.transpose()
    }

    pub fn covariance_sqrt(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.p,
            self.eigvals.iter().map(|v| v.sqrt()),
        ));
        &self.eigvecs * d * self.eigvecs.transpose()
    }

    /// `θ₀ = (μ₀, span(u_1..u_r))`.
    pub fn theta0(&self) -> ProductPoint {
        ProductPoint {
            mu: self.mu0.clone(),
            subspace: SubspaceBasis::from_trusted(self.eigvecs.columns(0, self.r).into_owned()),
        }
    }

    /// Frame at `θ₀` whose complement is `(u_{r+1}, …, u_p)`, the coordinates
    /// in which the influence function is expressed.
    pub fn frame(&self) -> Frame {
        Frame::with_complement(
            self.theta0(),
            self.eigvecs.columns(self.r, self.p - self.r).into_owned(),
        )
        .expect("model eigenvectors are orthonormal")
    }
}

/// How rows are assigned to nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShardPolicy {
    Contiguous,
    SeededPermutation(u64),
}

#[derive(Debug, Clone)]
pub struct Sharding {
    /// Row indices per node.
    pub indices: Vec<Vec<usize>>,
    /// Trailing rows dropped so that all nodes have equal size.
    pub dropped: usize,
}

impl Sharding {
    pub fn block_size(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }

    pub fn block(&self, data: &DataMatrix, k: usize) -> DataMatrix {
        data.select_rows(&self.indices[k])
    }
}

/// Splits `n` rows into `K` equal blocks of `b = ⌊n/K⌋`, dropping the remainder.
///
/// Fails when `b < min_block` (typically `r + 1`).
pub fn shard(n: usize, k: usize, policy: ShardPolicy, min_block: usize) -> Result<Sharding> {
    if k == 0 || n / k < min_block.max(1) {
        return Err(Error::InfeasibleShard { n, k, min_block });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let ShardPolicy::SeededPermutation(seed) = policy {
        let mut rng = crate::rng::stream(seed, &[crate::rng::tag("shard")]);
        order.shuffle(&mut rng);
    }
    let b = n / k;
    let dropped = n - b * k;
    if dropped > 0 {
        log::warn!("dropping {dropped} trailing rows to shard {n} rows into {k} nodes");
    }
    let indices = (0..k).map(|i| order[i * b..(i + 1) * b].to_vec()).collect();
    Ok(Sharding { indices, dropped })
}

/// Relative tolerance for flagging `λ̂_r = λ̂_{r+1}`.
const TIE_TOL: f64 = 1e-12;

/// Sample mean, divisor-`b` covariance and its leading `r`-dimensional eigenspace.
pub fn node_estimate(block: &DataMatrix, r: usize, node_id: i64) -> Result<NodeEstimate> {
    let (b, p) = (block.n(), block.p());
    if r == 0 || r >= p {
        return Err(Error::InvalidRank { p, r });
    }
    if b < r + 1 {
        return Err(Error::InfeasibleShard { n: b, k: 1, min_block: r + 1 });
    }
    let x = block.values();
    let mu_hat: DVector<f64> = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu_hat.transpose();
    }
    let cov = linalg::symmetrize(centered.tr_mul(&centered) / b as f64);
    let (values, vectors) = linalg::sym_eigen_desc(&cov);
    let scale = values[0].abs().max(1.0);
    let tie = (values[r - 1] - values[r]).abs() <= TIE_TOL * scale;
    let basis = linalg::orthonormalize(&vectors.columns(0, r).into_owned());
    Ok(NodeEstimate {
        node_id,
        b,
        mu_hat,
        subspace_hat: SubspaceBasis::from_trusted(basis),
        eigenvalues: Some(values[..=r].to_vec()),
        tie,
    })
}

/// Node estimates for every block of a sharding, in node order.
pub fn node_estimates(data: &DataMatrix, sharding: &Sharding, r: usize) -> Result<Vec<NodeEstimate>> {
    let results = crate::par::map_indexed(sharding.indices.len(), |k| {
        node_estimate(&sharding.block(data, k), r, k as i64)
    });
    results.into_iter().collect()
}

const EIGENGAP_TOL: f64 = 1e-12;

/// First-order tangent perturbation of the leading eigenspace under a
/// symmetric perturbation `E` of the model covariance:
/// `B_{aj} = u_{r+a}ᵀ E u_j / (λ_j − λ_{r+a})`.
pub fn subspace_perturbation(e: &DMatrix<f64>, model: &SpikedModel) -> Result<DMatrix<f64>> {
    let gap = model.eigengap();
    if gap <= EIGENGAP_TOL {
        return Err(Error::SingularEigengap { gap });
    }
    let (p, r) = (model.p, model.r);
    if e.shape() != (p, p) {
        return Err(Error::DimensionMismatch {
            what: "perturbation size",
            expected: p,
            found: e.nrows(),
        });
    }
    let rotated = model.eigvecs.tr_mul(e) * &model.eigvecs;
    Ok(DMatrix::from_fn(p - r, r, |a, j| {
        rotated[(r + a, j)] / (model.eigvals[j] - model.eigvals[r + a])
    }))
}

/// Influence function `ζ(x) = (x − μ₀, vec B(x))` with `E_x = (x−μ₀)(x−μ₀)ᵀ − Σ`.
pub fn influence_zeta(x: &DVector<f64>, model: &SpikedModel) -> Result<DVector<f64>> {
    let gap = model.eigengap();
    if gap <= EIGENGAP_TOL {
        return Err(Error::SingularEigengap { gap });
    }
    let (p, r) = (model.p, model.r);
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            what: "observation length",
            expected: p,
            found: x.len(),
        });
    }
    let centered = x - &model.mu0;
    // In the eigenbasis Σ is diagonal, so its off-diagonal block contributes nothing.
    let c = model.eigvecs.tr_mul(&centered);
    let b = DMatrix::from_fn(p - r, r, |a, j| {
        c[r + a] * c[j] / (model.eigvals[j] - model.eigvals[r + a])
    });
    Ok(TangentVector { w_mu: centered, w_sub: b }.to_vec())
}

/// `W = √b · log_ref(θ̂_k)`.
pub fn node_error(node: &NodeEstimate, reference: &Frame) -> Result<TangentVector> {
    let w = geometry::product_log(reference, &node.theta())?;
    Ok(w.scaled((node.b as f64).sqrt()))
}

/// Node errors for all nodes; nodes outside the reference's injectivity
/// neighborhood are skipped and counted.
pub fn node_errors(nodes: &[NodeEstimate], reference: &Frame) -> Result<(Vec<TangentVector>, usize)> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut excluded = 0;
    for node in nodes {
        match node_error(node, reference) {
            Ok(w) => out.push(w),
            Err(Error::OutOfNeighborhood { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, excluded))
}
