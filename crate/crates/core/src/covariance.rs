//! Scale-dependent covariance of the spatial median: `Γ̂`, `(A_α, S_α, V_α)`,
//! the spherical constant `c_d`, finite-block medians and the node bootstrap.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::aggregation::{self, MedianResult, MedianSettings, Metric};
use crate::calibration;
use crate::error::{Error, Result};
use crate::geometry::{self, Frame, ProductPoint, ScaleAlpha, TangentVector};
use crate::linalg;
use crate::node_pca::NodeEstimate;
use crate::rng::{self, Rng};

/// Draws with `R` below this are dropped from the moment estimates.
pub const RADIUS_FLOOR: f64 = 1e-10;
/// Smallest admissible eigenvalue of `A`.
pub const DERIVATIVE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GammaEstimate {
    pub matrix: DMatrix<f64>,
    /// Fewer than `d + 1` samples, so the estimate cannot be full rank.
    pub singular: bool,
}

/// Empirical covariance (divisor `n`) of tangent samples about their mean.
pub fn estimate_gamma(samples: &[DVector<f64>]) -> Result<GammaEstimate> {
    if samples.len() < 2 {
        return Err(Error::Empty("covariance needs at least two samples"));
    }
    let d = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch { what: "sample length", expected: d, found: bad.len() });
    }
    let (_, matrix) = linalg::covariance(samples);
    Ok(GammaEstimate { matrix, singular: samples.len() < d + 1 })
}

/// Where the transformed draws `Y = H^{1/2}W` are centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// The population median of `Y` is known to be zero.
    Zero,
    /// Center at the spatial median of the draws.
    Estimated,
}

/// `A_α`, `S_α` and `V_α = H^{-1/2} A⁻¹ S A⁻ᵀ H^{-1/2}`, estimated by Monte Carlo.
#[derive(Debug, Clone)]
pub struct MedianGeometry {
    pub scale: ScaleAlpha,
    pub a: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `A⁻¹ S A⁻ᵀ` in the transformed coordinates.
    pub core: DMatrix<f64>,
    /// Centering point in `W` coordinates.
    pub center: DVector<f64>,
    pub mc_samples: usize,
    pub excluded: usize,
    pub d: usize,
}

/// Moment estimates from draws of `W` (vectorized tangent coordinates with a
/// length-`p` Euclidean block).
pub fn median_geometry(
    draws: &[DVector<f64>],
    scale: ScaleAlpha,
    p: usize,
    centering: Centering,
    settings: &MedianSettings,
) -> Result<MedianGeometry> {
    let first = draws.first().ok_or(Error::Empty("median geometry needs draws"))?;
    let d = first.len();
    if d < 2 {
        return Err(Error::UnsupportedDimension { d });
    }
    let metric = Metric::Scaled { scale, p };
    let root = DVector::from_fn(d, |i, _| {
        if i < p { scale.mean_weight().sqrt() } else { scale.subspace_weight().sqrt() }
    });
    let center = match centering {
        Centering::Zero => DVector::zeros(d),
        Centering::Estimated => aggregation::spatial_median(draws, &metric, settings)?.point,
    };
    let y_center = center.component_mul(&root);

    let mut a = DMatrix::zeros(d, d);
    let mut outer = DMatrix::zeros(d, d);
    let mut mean_u = DVector::zeros(d);
    let mut used = 0usize;
    for w in draws {
        if w.len() != d {
            return Err(Error::DimensionMismatch { what: "draw length", expected: d, found: w.len() });
        }
        let y = w.component_mul(&root) - &y_center;
        let radius = y.norm();
        if !(radius >= RADIUS_FLOOR) {
            continue;
        }
        let u = y / radius;
        // (I − uuᵀ)/R accumulated as I/R minus the rank-one part.
        let inv = 1.0 / radius;
        for i in 0..d {
            a[(i, i)] += inv;
        }
        a.ger(-inv, &u, &u, 1.0);
        outer.ger(1.0, &u, &u, 1.0);
        mean_u += &u;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Empty("every draw coincided with the center"));
    }
    let n = used as f64;
    let a = linalg::symmetrize(a / n);
    mean_u /= n;
    let s = linalg::symmetrize(outer / n - &mean_u * mean_u.transpose());
    let min_eigenvalue = linalg::min_eigenvalue(&a);
    if !(min_eigenvalue >= DERIVATIVE_FLOOR) {
        return Err(Error::SingularDerivative { min_eigenvalue });
    }
    let a_inv = linalg::sym_fn(&a, |x| 1.0 / x);
    let core = linalg::symmetrize(&a_inv * &s * &a_inv);
    let inv_root = root.map(|x| 1.0 / x);
    let v = DMatrix::from_fn(d, d, |i, j| inv_root[i] * core[(i, j)] * inv_root[j]);
    Ok(MedianGeometry {
        scale,
        a,
        s,
        v,
        core,
        center,
        mc_samples: draws.len(),
        excluded: draws.len() - used,
        d,
    })
}

/// Source of i.i.d. node-error draws.
pub trait SampleProvider: Sync {
    fn dim(&self) -> usize;
    fn draw(&self, count: usize, rng: &mut Rng) -> Vec<DVector<f64>>;
}

/// `W = m + Γ^{1/2} Z`.
#[derive(Debug, Clone)]
pub struct GaussianProvider {
    root: DMatrix<f64>,
    mean: DVector<f64>,
}

impl GaussianProvider {
    pub fn new(gamma: &DMatrix<f64>) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() {
            return Err(Error::DimensionMismatch { what: "gamma columns", expected: gamma.nrows(), found: gamma.ncols() });
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("gamma contains non-finite entries"));
        }
        Ok(Self { root: linalg::sym_sqrt(&linalg::symmetrize(gamma.clone())), mean: DVector::zeros(gamma.nrows()) })
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.root.nrows() {
            return Err(Error::DimensionMismatch { what: "provider mean", expected: self.root.nrows(), found: mean.len() });
        }
        self.mean = mean;
        Ok(self)
    }
}

impl SampleProvider for GaussianProvider {
    fn dim(&self) -> usize {
        self.root.nrows()
    }

    fn draw(&self, count: usize, rng: &mut Rng) -> Vec<DVector<f64>> {
        let d = self.dim();
        let z = DMatrix::from_fn(d, count, |_, _| StandardNormal.sample(rng));
        let w = &self.root * z;
        w.column_iter().map(|c| c + &self.mean).collect()
    }
}

/// Resamples a fixed set of draws with replacement.
#[derive(Debug, Clone)]
pub struct EmpiricalProvider {
    samples: Vec<DVector<f64>>,
}

impl EmpiricalProvider {
    pub fn new(samples: Vec<DVector<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("empirical provider needs samples"));
        }
        Ok(Self { samples })
    }
}

impl SampleProvider for EmpiricalProvider {
    fn dim(&self) -> usize {
        self.samples[0].len()
    }

    fn draw(&self, count: usize, rng: &mut Rng) -> Vec<DVector<f64>> {
        use rand::Rng as _;
        (0..count).map(|_| self.samples[rng.random_range(0..self.samples.len())].clone()).collect()
    }
}

/// `c_d = 2d Γ(d/2)² / ((d−1)² Γ((d−1)/2)²)`, the spherical-Gaussian
/// efficiency factor of the spatial median.
pub fn c_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::UnsupportedDimension { d });
    }
    let x = d as f64;
    let log = (2.0 * x).ln() + 2.0 * ln_gamma(x / 2.0) - 2.0 * (x - 1.0).ln() - 2.0 * ln_gamma((x - 1.0) / 2.0);
    Ok(log.exp())
}

/// `s_{α,b}`: spatial median under `H_α` of a large sample of node errors.
pub fn finite_block_median(
    draws: &[DVector<f64>],
    scale: ScaleAlpha,
    p: usize,
    settings: &MedianSettings,
) -> Result<MedianResult> {
    aggregation::spatial_median(draws, &Metric::Scaled { scale, p }, settings)
}

/// How the bootstrap chooses `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    Fixed(ScaleAlpha),
    /// Robust rPCA calibration, redone inside every replicate.
    Recompute { epsilon: f64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// `{δ : (δ − c)ᵀ Σ⁻¹ (δ − c) ≤ radius2}` in tangent coordinates.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub center: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub radius2: f64,
}

impl Ellipsoid {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        mahalanobis2(&self.covariance, &self.center, x).is_some_and(|m| m <= self.radius2)
    }
}

fn mahalanobis2(cov: &DMatrix<f64>, center: &DVector<f64>, x: &DVector<f64>) -> Option<f64> {
    let diff = x - center;
    let sol = cov.clone().cholesky()?.solve(&diff);
    Some(diff.dot(&sol))
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub estimate: ProductPoint,
    pub scale: ScaleAlpha,
    pub replicates: Vec<ProductPoint>,
    /// `log_{θ̃}(θ*)` per replicate, vectorized.
    pub deviations: Vec<DVector<f64>>,
    /// Per-replicate `α` under the recompute policy.
    pub alphas: Vec<f64>,
    pub dropped: usize,
    pub level: f64,
    /// Percentile intervals for each tangent coordinate of the truth at `θ̃`.
    pub intervals: Vec<Interval>,
    /// Present when the deviation covariance is positive definite.
    pub ellipsoid: Option<Ellipsoid>,
}

impl BootstrapResult {
    /// Covariance of the deviations, divisor `reps`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        (self.deviations.len() >= 2).then(|| linalg::covariance(&self.deviations).1)
    }
}

fn aggregate_with(nodes: &[NodeEstimate], policy: AlphaPolicy, settings: &MedianSettings) -> Result<(ProductPoint, ScaleAlpha)> {
    let scale = match policy {
        AlphaPolicy::Fixed(s) => s,
        AlphaPolicy::Recompute { epsilon } => calibration::calibrate_rpca(nodes, epsilon, settings)?.alpha.scale,
    };
    Ok((aggregation::product_mom(nodes, scale, settings)?.estimate, scale))
}

/// Node bootstrap: resample node estimates with replacement and re-aggregate.
pub fn node_bootstrap(
    nodes: &[NodeEstimate],
    policy: AlphaPolicy,
    reps: usize,
    seed: u64,
    level: f64,
    settings: &MedianSettings,
) -> Result<BootstrapResult> {
    if nodes.len() < 2 {
        return Err(Error::param("bootstrap needs at least two nodes"));
    }
    if reps == 0 {
        return Err(Error::param("bootstrap needs at least one replicate"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("confidence level must lie in (0,1)"));
    }
    let (estimate, scale) = aggregate_with(nodes, policy, settings)?;
    let frame = Frame::new(estimate.clone());
    let k = nodes.len();
    let outcomes = crate::par::map_indexed(reps, |i| {
        let mut g = rng::stream(seed, &[rng::tag("bootstrap"), i as u64]);
        let sample: Vec<NodeEstimate> = (0..k)
            .map(|_| nodes[rand::Rng::random_range(&mut g, 0..k)].clone())
            .collect();
        let (theta, s) = aggregate_with(&sample, policy, settings)?;
        let dev = geometry::product_log(&frame, &theta)?;
        Ok::<_, Error>((theta, dev, s.alpha()))
    });
    let mut replicates = Vec::with_capacity(reps);
    let mut deviations = Vec::with_capacity(reps);
    let mut alphas = Vec::new();
    let mut dropped = 0;
    for outcome in outcomes {
        match outcome {
            Ok((theta, dev, a)) => {
                replicates.push(theta);
                deviations.push(dev.to_vec());
                if matches!(policy, AlphaPolicy::Recompute { .. }) {
                    alphas.push(a);
                }
            }
            Err(_) => dropped += 1,
        }
    }
    if deviations.is_empty() {
        return Err(Error::Numerical("every bootstrap replicate failed".into()));
    }
    let d = deviations[0].len();
    let tail = 0.5 * (1.0 - level);
    let intervals = (0..d)
        .map(|j| {
            let mut col: Vec<f64> = deviations.iter().map(|v| v[j]).collect();
            col.sort_by(f64::total_cmp);
            Interval { lo: linalg::quantile_sorted(&col, tail), hi: linalg::quantile_sorted(&col, 1.0 - tail) }
        })
        .collect();
    let ellipsoid = (deviations.len() > d).then(|| {
        let (center, covariance) = linalg::covariance(&deviations);
        let dists: Option<Vec<f64>> =
            deviations.iter().map(|x| mahalanobis2(&covariance, &center, x)).collect();
        dists.map(|m| Ellipsoid { radius2: linalg::quantile(&m, level), center, covariance })
    });
    Ok(BootstrapResult {
        estimate,
        scale,
        replicates,
        deviations,
        alphas,
        dropped,
        level,
        intervals,
        ellipsoid: ellipsoid.flatten(),
    })
}

/// Node errors at a point estimate, vectorized: the plug-in input for `Γ̂`.
pub fn plug_in_errors(nodes: &[NodeEstimate], estimate: &ProductPoint) -> Result<(Vec<DVector<f64>>, usize)> {
    let frame = Frame::new(estimate.clone());
    let (errors, excluded) = crate::node_pca::node_errors(nodes, &frame)?;
    Ok((errors.iter().map(TangentVector::to_vec).collect(), excluded))
}
