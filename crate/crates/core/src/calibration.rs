//! Scale selection: whitening, block-noise, robust radial (rPCA) and
//! risk-minimizing rules.

use nalgebra::DMatrix;

use crate::aggregation::{self, MedianSettings};
use crate::error::{Error, Result};
use crate::geometry::{self, ProductPoint, ScaleAlpha};
use crate::linalg;
use crate::node_pca::NodeEstimate;

/// Radial node scales and their per-dimension proxies.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BlockScales {
    pub s_mu: f64,
    pub s_sub: f64,
    pub tau_mu: f64,
    pub tau_sub: f64,
    pub p: usize,
    pub r: usize,
}

impl BlockScales {
    pub fn from_radii(s_mu: f64, s_sub: f64, p: usize, r: usize) -> Result<Self> {
        if r == 0 || r >= p {
            return Err(Error::InvalidRank { p, r });
        }
        if !(s_mu >= 0.0 && s_sub >= 0.0) {
            return Err(Error::param("radial scales must be nonnegative"));
        }
        Ok(Self {
            s_mu,
            s_sub,
            tau_mu: s_mu * s_mu / p as f64,
            tau_sub: s_sub * s_sub / (r * (p - r)) as f64,
            p,
            r,
        })
    }
}

/// Medians of `√b‖μ̂_k − μ̃‖` and `√b·d_Gr(Û_k, 𝒰̃)` about a preliminary estimate.
pub fn robust_block_scales(nodes: &[NodeEstimate], prelim: &ProductPoint) -> Result<BlockScales> {
    if nodes.is_empty() {
        return Err(Error::Empty("calibration needs at least one node"));
    }
    let mut mean_radii = Vec::with_capacity(nodes.len());
    let mut sub_radii = Vec::with_capacity(nodes.len());
    for n in nodes {
        if n.p() != prelim.p() {
            return Err(Error::DimensionMismatch { what: "node ambient dimension", expected: prelim.p(), found: n.p() });
        }
        let root_b = (n.b as f64).sqrt();
        mean_radii.push(root_b * (&n.mu_hat - &prelim.mu).norm());
        sub_radii.push(root_b * geometry::grassmann_distance(&n.subspace_hat, &prelim.subspace)?);
    }
    BlockScales::from_radii(linalg::median(&mean_radii), linalg::median(&sub_radii), prelim.p(), prelim.r())
}

/// A selected scale, flagged when the rule had nothing to go on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibrated {
    pub scale: ScaleAlpha,
    /// Both variance proxies were at round-off level; `α = 1` was used.
    pub degenerate: bool,
}

/// Proxies below this are round-off from nodes that coincide with the centre.
const DEGENERATE_TOTAL: f64 = 1e-24;

fn ratio_rule(tau_mu: f64, tau_sub: f64, epsilon: f64) -> Result<Calibrated> {
    if !(tau_mu >= 0.0 && tau_sub >= 0.0) {
        return Err(Error::param("variance proxies must be nonnegative"));
    }
    let total = tau_mu + tau_sub;
    if total <= DEGENERATE_TOTAL {
        return Ok(Calibrated { scale: ScaleAlpha::new(1.0, epsilon)?, degenerate: true });
    }
    Ok(Calibrated { scale: ScaleAlpha::new(2.0 * tau_sub / total, epsilon)?, degenerate: false })
}

/// `α̂ = 2τ̂_𝒰/(τ̂_μ + τ̂_𝒰)`, clamped to `I_ε`.
pub fn alpha_rpca(scales: &BlockScales, epsilon: f64) -> Result<Calibrated> {
    ratio_rule(scales.tau_mu, scales.tau_sub, epsilon)
}

/// Block-noise rule with `τ_μ = tr(Γ_μμ)/p` and `τ_𝒰 = tr(Γ_𝒰𝒰)/(r(p−r))`.
pub fn alpha_block(gamma: &DMatrix<f64>, p: usize, r: usize, epsilon: f64) -> Result<Calibrated> {
    if r == 0 || r >= p {
        return Err(Error::InvalidRank { p, r });
    }
    let d = geometry::tangent_dim(p, r);
    if gamma.shape() != (d, d) {
        return Err(Error::DimensionMismatch { what: "gamma size", expected: d, found: gamma.nrows() });
    }
    let tr_mu: f64 = (0..p).map(|i| gamma[(i, i)]).sum();
    let tr_sub: f64 = (p..d).map(|i| gamma[(i, i)]).sum();
    ratio_rule(tr_mu / p as f64, tr_sub / (d - p) as f64, epsilon)
}

/// Whitening rule `2σ_𝒰²/(σ_μ² + σ_𝒰²)` for block-spherical noise.
pub fn alpha_white(sigma_mu2: f64, sigma_sub2: f64, epsilon: f64) -> Result<Calibrated> {
    ratio_rule(sigma_mu2, sigma_sub2, epsilon)
}

/// Robust calibration end to end: `α = 1` MoM, radial scales, ratio rule.
#[derive(Debug, Clone)]
pub struct RpcaCalibration {
    pub prelim: ProductPoint,
    pub scales: BlockScales,
    pub alpha: Calibrated,
}

pub fn calibrate_rpca(nodes: &[NodeEstimate], epsilon: f64, settings: &MedianSettings) -> Result<RpcaCalibration> {
    let prelim = aggregation::product_mom(nodes, ScaleAlpha::new(1.0, epsilon)?, settings)?.estimate;
    let scales = robust_block_scales(nodes, &prelim)?;
    let alpha = alpha_rpca(&scales, epsilon)?;
    Ok(RpcaCalibration { prelim, scales, alpha })
}

/// Scalar summary of a covariance matrix minimized over `α`.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskKind {
    /// `tr(W₀ V)`; `None` means `W₀ = I`.
    Trace(Option<DMatrix<f64>>),
    LogDet,
    MaxEig,
}

impl RiskKind {
    pub fn describe(&self) -> String {
        match self {
            RiskKind::Trace(None) => "trace(I)".into(),
            RiskKind::Trace(Some(_)) => "trace(W0)".into(),
            RiskKind::LogDet => "logdet".into(),
            RiskKind::MaxEig => "max-eig".into(),
        }
    }

    pub fn evaluate(&self, v: &DMatrix<f64>) -> Result<f64> {
        let value = match self {
            RiskKind::Trace(None) => v.trace(),
            RiskKind::Trace(Some(w)) => {
                if w.shape() != v.shape() {
                    return Err(Error::DimensionMismatch { what: "risk weight", expected: v.nrows(), found: w.nrows() });
                }
                (w * v).trace()
            }
            RiskKind::LogDet => {
                let (values, _) = linalg::sym_eigen_desc(v);
                values.iter().map(|x| x.ln()).sum()
            }
            RiskKind::MaxEig => linalg::sym_eigen_desc(v).0[0],
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Numerical(format!("{} risk is not finite", self.describe())))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiskCurve {
    /// `(α, R̂(α))` at every grid point that evaluated.
    pub points: Vec<(f64, f64)>,
    /// Grid points whose provider call failed, with the reason.
    pub skipped: Vec<(f64, String)>,
    pub weight: String,
    pub alpha_star: ScaleAlpha,
}

/// `α` grid over `I_ε` with the given step, endpoints included.
pub fn alpha_grid(epsilon: f64, step: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(step > 0.0) {
        return Err(Error::param("grid needs epsilon in (0,1) and a positive step"));
    }
    let hi = 2.0 - epsilon;
    let count = ((hi - epsilon) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| epsilon + i as f64 * step).collect();
    if hi - grid[grid.len() - 1] > 1e-9 {
        grid.push(hi);
    }
    Ok(grid)
}

/// Grid minimizer of `R̂(α)` over `V̂_α` from `provider`; ties go to the smaller `α`.
pub fn alpha_star<F>(provider: F, risk: &RiskKind, grid: &[f64], epsilon: f64) -> Result<RiskCurve>
where
    F: Fn(ScaleAlpha) -> Result<DMatrix<f64>> + Sync + Send,
{
    if grid.is_empty() {
        return Err(Error::Empty("alpha grid"));
    }
    let lo = epsilon - 1e-12;
    let hi = 2.0 - epsilon + 1e-12;
    if grid.iter().any(|a| !(*a >= lo && *a <= hi)) {
        return Err(Error::param(format!("alpha grid must lie in [{epsilon}, {}]", 2.0 - epsilon)));
    }
    let evaluated = crate::par::map_indexed(grid.len(), |i| {
        let scale = ScaleAlpha::new(grid[i], epsilon)?;
        risk.evaluate(&provider(scale)?)
    });
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (&a, result) in grid.iter().zip(evaluated) {
        match result {
            Ok(v) => points.push((a, v)),
            Err(e) => skipped.push((a, e.to_string())),
        }
    }
    let best = points
        .iter()
        .fold(None::<(f64, f64)>, |best, &(a, v)| match best {
            Some((ba, bv)) if bv < v || (bv == v && ba <= a) => Some((ba, bv)),
            _ => Some((a, v)),
        })
        .ok_or_else(|| Error::Numerical("risk failed at every grid point".into()))?;
    Ok(RiskCurve {
        points,
        skipped,
        weight: risk.describe(),
        alpha_star: ScaleAlpha::new(best.0, epsilon)?,
    })
}
