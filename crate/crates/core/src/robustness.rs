//! Bad-node contamination and the deterministic robustness checks.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Frame, ProductPoint, ScaleAlpha, TangentVector};
use crate::node_pca::NodeEstimate;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContaminationKind {
    /// Shift the node mean by `severity` in norm; subspace untouched.
    MeanShift,
    /// Move the node subspace `severity` radians along a random geodesic; mean untouched.
    SubspaceTilt,
}

/// Node-level corruption applied to a fraction of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    pub fraction: f64,
    pub severity: f64,
    pub seed: u64,
    /// Mean shifts share one random direction instead of drawing one per node.
    #[serde(default)]
    pub shared_direction: bool,
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction >= 0.0 && self.fraction < 0.5) {
            return Err(Error::param(format!("contamination fraction {} must lie in [0, 0.5)", self.fraction)));
        }
        if !(self.severity >= 0.0 && self.severity.is_finite()) {
            return Err(Error::param("severity must be finite and nonnegative"));
        }
        if self.kind == ContaminationKind::SubspaceTilt && self.severity >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::param("tilt angle must stay below pi/2"));
        }
        Ok(())
    }

    /// `round(fraction·K)`.
    pub fn bad_count(&self, k: usize) -> usize {
        (self.fraction * k as f64).round() as usize
    }
}

fn unit_gaussian(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    loop {
        let m: DMatrix<f64> = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
        let n = m.norm();
        if n > 0.0 {
            return m / n;
        }
    }
}

/// Corrupts `round(fraction·K)` nodes chosen without replacement; returns the
/// modified nodes and the corrupted node ids in ascending node order.
pub fn contaminate(nodes: &[NodeEstimate], spec: &ContaminationSpec) -> Result<(Vec<NodeEstimate>, Vec<i64>)> {
    spec.validate()?;
    let k = nodes.len();
    let bad = spec.bad_count(k);
    if bad == 0 {
        return Ok((nodes.to_vec(), Vec::new()));
    }
    if 2 * bad >= k {
        return Err(Error::Breakdown { bad, k });
    }
    let mut g = rng::stream(spec.seed, &[rng::tag("contaminate")]);
    let mut chosen = index::sample(&mut g, k, bad).into_vec();
    chosen.sort_unstable();
    let p = nodes[0].p();
    let shared = unit_gaussian(p, 1, &mut g).column(0).into_owned();
    let mut out = nodes.to_vec();
    let mut ids = Vec::with_capacity(bad);
    for &i in &chosen {
        let node = &mut out[i];
        match spec.kind {
            ContaminationKind::MeanShift => {
                let dir: DVector<f64> = if spec.shared_direction {
                    shared.clone()
                } else {
                    unit_gaussian(p, 1, &mut g).column(0).into_owned()
                };
                node.mu_hat += dir * spec.severity;
            }
            ContaminationKind::SubspaceTilt => {
                let r = node.r();
                let frame = Frame::new(node.theta());
                let dir = unit_gaussian(p - r, r, &mut g);
                node.subspace_hat = geometry::grassmann_exp(&frame, &(dir * spec.severity))?;
            }
        }
        node.eigenvalues = None;
        node.tie = false;
        ids.push(node.node_id);
    }
    Ok((out, ids))
}

/// `(1 + 1/(2γ))·radius`: the distance bound for the median when at least
/// `(1/2 + γ)K` nodes lie within `radius` of the target.
pub fn good_node_bound(radius: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::param(format!("gamma {gamma} must lie in (0, 1/2]")));
    }
    if !(radius >= 0.0) {
        return Err(Error::param("radius must be nonnegative"));
    }
    Ok((1.0 + 1.0 / (2.0 * gamma)) * radius)
}

/// Node score `ψ_α(w) = w/‖w‖_{H_α}`.
pub fn influence_score(w: &TangentVector, scale: ScaleAlpha) -> Result<TangentVector> {
    let n = geometry::h_norm(w, scale);
    if !(n > 0.0) {
        return Err(Error::param("influence score is undefined at zero"));
    }
    Ok(w.scaled(1.0 / n))
}

/// Factorwise suprema `(α^{-1/2}, (2−α)^{-1/2})` of the node score.
pub fn influence_constants(scale: ScaleAlpha) -> (f64, f64) {
    (scale.mean_weight().powf(-0.5), scale.subspace_weight().powf(-0.5))
}

/// Factorwise consequences of a `d_α` deviation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorwiseReport {
    pub mean_error: f64,
    pub mean_bound: f64,
    pub mean_holds: bool,
    pub subspace_error: f64,
    pub subspace_bound: f64,
    pub subspace_holds: bool,
}

impl FactorwiseReport {
    pub fn mean_slack(&self) -> f64 {
        self.mean_bound - self.mean_error
    }

    pub fn subspace_slack(&self) -> f64 {
        self.subspace_bound - self.subspace_error
    }
}

/// Checks `‖μ̃−μ₀‖ ≤ bound/√α` and `d_Gr(𝒰̃,𝒰₀) ≤ bound/√(2−α)`.
pub fn factorwise_check(estimate: &ProductPoint, theta0: &ProductPoint, scale: ScaleAlpha, bound: f64) -> Result<FactorwiseReport> {
    if estimate.p() != theta0.p() {
        return Err(Error::DimensionMismatch { what: "mean length", expected: theta0.p(), found: estimate.p() });
    }
    let mean_error = (&estimate.mu - &theta0.mu).norm();
    let subspace_error = geometry::grassmann_distance(&estimate.subspace, &theta0.subspace)?;
    let mean_bound = bound / scale.mean_weight().sqrt();
    let subspace_bound = bound / scale.subspace_weight().sqrt();
    Ok(FactorwiseReport {
        mean_error,
        mean_bound,
        mean_holds: mean_error <= mean_bound,
        subspace_error,
        subspace_bound,
        subspace_holds: subspace_error <= subspace_bound,
    })
}
