//! Spatial medians in `R^d` and on `R^p × Gr(r,p)`, plus non-robust baselines.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{self, Frame, ProductPoint, ScaleAlpha, SubspaceBasis, TangentVector};
use crate::linalg;
use crate::node_pca::{self, DataMatrix, NodeEstimate};
use crate::rng::Rng;

/// Weiszfeld controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianSettings {
    /// Relative step tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Distance below which an iterate coincides with a data point.
    pub anchor_radius: f64,
    /// Bound on the mean subgradient norm for a non-anchored solution to count as converged.
    pub grad_tol: f64,
}

impl Default for MedianSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            anchor_radius: 1e-12,
            grad_tol: 1e-8,
        }
    }
}

impl MedianSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.anchor_radius >= 0.0) {
            return Err(Error::param("median settings need tol > 0, max_iter >= 1, anchor_radius >= 0"));
        }
        Ok(())
    }
}

/// Diagonal metric for the Euclidean spatial median.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Identity,
    /// `H_α` on vectorized tangent coordinates with a length-`p` Euclidean block.
    Scaled { scale: ScaleAlpha, p: usize },
    /// Explicit positive diagonal of `H`.
    Diagonal(DVector<f64>),
}

impl Metric {
    fn diagonal(&self, d: usize) -> Result<DVector<f64>> {
        match self {
            Metric::Identity => Ok(DVector::from_element(d, 1.0)),
            Metric::Scaled { scale, p } => {
                if *p > d {
                    return Err(Error::DimensionMismatch { what: "scaled metric mean block", expected: d, found: *p });
                }
                Ok(DVector::from_fn(d, |i, _| {
                    if i < *p { scale.mean_weight() } else { scale.subspace_weight() }
                }))
            }
            Metric::Diagonal(h) => {
                if h.len() != d {
                    return Err(Error::DimensionMismatch { what: "metric diagonal", expected: d, found: h.len() });
                }
                if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::param("metric diagonal must be positive and finite"));
                }
                Ok(h.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MedianResult {
    pub point: DVector<f64>,
    pub iterations: usize,
    /// `(1/K) Σ ‖s − W_k‖_H` at the returned point.
    pub objective: f64,
    pub converged: bool,
    pub anchored: bool,
    /// Objective after each iteration, starting with the initial point.
    pub trace: Vec<f64>,
}

struct Pull {
    /// Σ unit directions over non-coincident points.
    unit_sum: DVector<f64>,
    weight_sum: DVector<f64>,
    weights: f64,
    coincident: usize,
    objective: f64,
}

/// Points are the columns of `points`.
fn pull(points: &DMatrix<f64>, y: &DVector<f64>, anchor: f64) -> Pull {
    let (d, k) = points.shape();
    let mut out = Pull {
        unit_sum: DVector::zeros(d),
        weight_sum: DVector::zeros(d),
        weights: 0.0,
        coincident: 0,
        objective: 0.0,
    };
    let ys = y.as_slice();
    let all = points.as_slice();
    let unit = out.unit_sum.as_mut_slice();
    let pulled = out.weight_sum.as_mut_slice();
    for j in 0..k {
        let x = &all[j * d..(j + 1) * d];
        let dist = x.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        out.objective += dist;
        if dist <= anchor {
            out.coincident += 1;
            continue;
        }
        let w = 1.0 / dist;
        for i in 0..d {
            unit[i] += w * (x[i] - ys[i]);
            pulled[i] += w * x[i];
        }
        out.weights += w;
    }
    out.objective /= k as f64;
    out
}

fn mean_subgradient(unit_norm: f64, coincident: usize, k: usize) -> f64 {
    (unit_norm - coincident as f64).max(0.0) / k as f64
}

/// Plain Euclidean Weiszfeld with the Vardi–Zhang modification for iterates
/// that land on a data point.
fn weiszfeld(points: &DMatrix<f64>, settings: &MedianSettings) -> MedianResult {
    let k = points.ncols();
    let mut y: DVector<f64> = points.column_mean();
    let mut state = pull(points, &y, settings.anchor_radius);
    let mut trace = vec![state.objective];
    let mut iterations = 0;
    let mut anchored = false;
    while iterations < settings.max_iter {
        let r = state.unit_sum.norm();
        let eta = state.coincident as f64;
        if state.weights == 0.0 || (state.coincident > 0 && r <= eta) {
            anchored = true;
            break;
        }
        let t = &state.weight_sum / state.weights;
        let next = if state.coincident > 0 {
            let lam = eta / r;
            t * (1.0 - lam) + &y * lam
        } else {
            t
        };
        let step = (&next - &y).norm();
        let next_state = pull(points, &next, settings.anchor_radius);
        if next_state.objective > state.objective * (1.0 + BACKTRACK_SLACK) {
            // Weiszfeld steps never increase the objective beyond rounding.
            break;
        }
        iterations += 1;
        y = next;
        state = next_state;
        trace.push(state.objective);
        let scale = y.norm().max(1.0);
        let grad = mean_subgradient(state.unit_sum.norm(), state.coincident, k);
        if (step <= settings.tol * scale && grad <= settings.grad_tol) || step <= f64::EPSILON * scale {
            break;
        }
    }
    let grad = mean_subgradient(state.unit_sum.norm(), state.coincident, k);
    if !anchored && state.coincident > 0 && state.unit_sum.norm() <= state.coincident as f64 {
        anchored = true;
    }
    MedianResult {
        point: y,
        iterations,
        objective: state.objective,
        converged: anchored || grad <= settings.grad_tol,
        anchored,
        trace,
    }
}

/// Minimizer of `(1/K) Σ ‖s − W_k‖_H`, solved in the coordinates `y = H^{1/2} s`.
pub fn spatial_median(points: &[DVector<f64>], metric: &Metric, settings: &MedianSettings) -> Result<MedianResult> {
    let first = points.first().ok_or(Error::Empty("spatial median needs at least one point"))?;
    let d = first.len();
    if let Some(bad) = points.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch { what: "point length", expected: d, found: bad.len() });
    }
    spatial_median_columns(&DMatrix::from_fn(d, points.len(), |i, j| points[j][i]), metric, settings)
}

/// [`spatial_median`] for points stored as the columns of a `d×K` matrix.
pub fn spatial_median_columns(points: &DMatrix<f64>, metric: &Metric, settings: &MedianSettings) -> Result<MedianResult> {
    settings.validate()?;
    let (d, k) = points.shape();
    if k == 0 {
        return Err(Error::Empty("spatial median needs at least one point"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("points contain non-finite entries"));
    }
    let h = metric.diagonal(d)?;
    let root = h.map(f64::sqrt);
    let mut transformed = points.clone();
    for mut col in transformed.column_iter_mut() {
        col.component_mul_assign(&root);
    }
    let mut result = weiszfeld(&transformed, settings);
    result.point = result.point.component_div(&root);
    Ok(result)
}

/// Output of the product-manifold and tangent-reduction medians.
#[derive(Debug, Clone)]
pub struct AggregationResult {
    pub estimate: ProductPoint,
    pub iterations: usize,
    /// `Q_{K,α}(θ) = (1/K) Σ d_α(θ, θ̂_k)` at the estimate.
    pub objective: f64,
    pub converged: bool,
    pub anchored: bool,
    /// Nodes dropped for leaving the injectivity neighborhood (tangent reduction only).
    pub excluded: usize,
    /// Log evaluations that hit the cut locus and used the principal-vector fallback.
    pub cut_locus_events: usize,
    pub trace: Vec<f64>,
}

fn check_nodes(nodes: &[NodeEstimate]) -> Result<(usize, usize)> {
    let first = nodes.first().ok_or(Error::Empty("aggregation needs at least one node"))?;
    let (p, r) = (first.p(), first.r());
    for n in nodes {
        if n.p() != p || n.subspace_hat.p() != p {
            return Err(Error::DimensionMismatch { what: "node ambient dimension", expected: p, found: n.p() });
        }
        if n.r() != r {
            return Err(Error::DimensionMismatch { what: "node subspace rank", expected: r, found: n.r() });
        }
    }
    Ok((p, r))
}

/// Node logs at an iterate, in ambient horizontal-lift form.
struct Logs {
    dmu: Vec<DVector<f64>>,
    lift: Vec<DMatrix<f64>>,
    dist: Vec<f64>,
    cut: usize,
    objective: f64,
}

fn node_logs(mu: &DVector<f64>, u: &DMatrix<f64>, nodes: &[NodeEstimate], scale: ScaleAlpha) -> Logs {
    let mut logs = Logs {
        dmu: Vec::with_capacity(nodes.len()),
        lift: Vec::with_capacity(nodes.len()),
        dist: Vec::with_capacity(nodes.len()),
        cut: 0,
        objective: 0.0,
    };
    for n in nodes {
        let dmu = &n.mu_hat - mu;
        let (lift, cut) = geometry::horizontal_log_guarded(u, n.subspace_hat.matrix());
        logs.cut += cut as usize;
        let d = (scale.mean_weight() * dmu.norm_squared() + scale.subspace_weight() * lift.norm_squared()).sqrt();
        logs.objective += d;
        logs.dmu.push(dmu);
        logs.lift.push(lift);
        logs.dist.push(d);
    }
    logs.objective /= nodes.len() as f64;
    logs
}

struct Direction {
    step_mu: DVector<f64>,
    step_lift: DMatrix<f64>,
    /// H-norm of Σ unit directions over non-coincident nodes.
    unit_norm: f64,
    coincident: usize,
}

fn direction(logs: &Logs, scale: ScaleAlpha, anchor: f64) -> Direction {
    let (p, r) = (logs.lift[0].nrows(), logs.lift[0].ncols());
    let mut unit_mu = DVector::zeros(p);
    let mut unit_lift = DMatrix::zeros(p, r);
    let mut weights = 0.0;
    let mut coincident = 0;
    for ((dmu, lift), &d) in logs.dmu.iter().zip(&logs.lift).zip(&logs.dist) {
        if d <= anchor {
            coincident += 1;
            continue;
        }
        let w = 1.0 / d;
        unit_mu.axpy(w, dmu, 1.0);
        unit_lift += lift * w;
        weights += w;
    }
    let unit_norm = (scale.mean_weight() * unit_mu.norm_squared()
        + scale.subspace_weight() * unit_lift.norm_squared())
    .sqrt();
    let mut factor = if weights > 0.0 { 1.0 / weights } else { 0.0 };
    if coincident > 0 && unit_norm > 0.0 {
        factor *= (1.0 - coincident as f64 / unit_norm).max(0.0);
    }
    Direction {
        step_mu: unit_mu * factor,
        step_lift: unit_lift * factor,
        unit_norm,
        coincident,
    }
}

fn point(mu: DVector<f64>, u: DMatrix<f64>) -> ProductPoint {
    ProductPoint { mu, subspace: SubspaceBasis::from_trusted(u) }
}

const BACKTRACK_SLACK: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;
const MAX_STALLED: usize = 5;

/// Geometric median-of-means on `R^p × Gr(r,p)` under `d_α`, by Riemannian
/// Weiszfeld iteration.
///
/// Starts from the mean of node means paired with the projector-average
/// subspace. `K = 1` returns the node and `K = 2` the geodesic midpoint.
pub fn product_mom(nodes: &[NodeEstimate], scale: ScaleAlpha, settings: &MedianSettings) -> Result<AggregationResult> {
    settings.validate()?;
    check_nodes(nodes)?;
    let k = nodes.len();
    let done = |estimate: ProductPoint, objective: f64, cut: usize| AggregationResult {
        estimate,
        iterations: 0,
        objective,
        converged: true,
        anchored: true,
        excluded: 0,
        cut_locus_events: cut,
        trace: vec![objective],
    };
    if nodes.iter().all(|n| n.mu_hat == nodes[0].mu_hat && n.subspace_hat == nodes[0].subspace_hat) {
        return Ok(done(nodes[0].theta(), 0.0, 0));
    }
    if k == 2 {
        let (a, b) = (&nodes[0], &nodes[1]);
        let (lift, cut) = geometry::horizontal_log_guarded(a.subspace_hat.matrix(), b.subspace_hat.matrix());
        let u = geometry::horizontal_exp(a.subspace_hat.matrix(), &(lift * 0.5));
        let mu = (&a.mu_hat + &b.mu_hat) * 0.5;
        let logs = node_logs(&mu, &u, nodes, scale);
        let mut out = done(point(mu, u), logs.objective, cut as usize);
        out.anchored = false;
        return Ok(out);
    }

    let mut mu = nodes.iter().fold(DVector::zeros(nodes[0].p()), |acc, n| acc + &n.mu_hat) / k as f64;
    let mut u = projector_average(nodes)?.estimate.subspace.into_matrix();
    let mut logs = node_logs(&mu, &u, nodes, scale);
    let mut cut_events = logs.cut;
    let mut trace = vec![logs.objective];
    let mut iterations = 0;
    let mut anchored = false;
    let mut stalled = 0;

    while iterations < settings.max_iter {
        let dir = direction(&logs, scale, settings.anchor_radius);
        if dir.coincident > 0 && dir.unit_norm <= dir.coincident as f64 {
            anchored = true;
            break;
        }
        let full_norm = (scale.mean_weight() * dir.step_mu.norm_squared()
            + scale.subspace_weight() * dir.step_lift.norm_squared())
        .sqrt();
        if full_norm == 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand_mu = &mu + &dir.step_mu * t;
            let cand_u = geometry::horizontal_exp(&u, &(&dir.step_lift * t));
            let cand = node_logs(&cand_mu, &cand_u, nodes, scale);
            if cand.objective <= logs.objective * (1.0 + BACKTRACK_SLACK) {
                accepted = Some((cand_mu, cand_u, cand));
                break;
            }
            t *= 0.5;
        }
        let Some((next_mu, next_u, next_logs)) = accepted else { break };
        let step = t * full_norm;
        stalled = if next_logs.objective < logs.objective { 0 } else { stalled + 1 };
        iterations += 1;
        mu = next_mu;
        u = next_u;
        cut_events += next_logs.cut;
        logs = next_logs;
        trace.push(logs.objective);
        let scale_ref = mu.norm().max(1.0);
        let d = direction(&logs, scale, settings.anchor_radius);
        let grad = mean_subgradient(d.unit_norm, d.coincident, k);
        if (step <= settings.tol * scale_ref && grad <= settings.grad_tol)
            || step <= f64::EPSILON * scale_ref
            || stalled >= MAX_STALLED
        {
            break;
        }
    }
    let dir = direction(&logs, scale, settings.anchor_radius);
    if dir.coincident > 0 && dir.unit_norm <= dir.coincident as f64 {
        anchored = true;
    }
    let grad = mean_subgradient(dir.unit_norm, dir.coincident, k);
    Ok(AggregationResult {
        estimate: point(mu, u),
        iterations,
        objective: logs.objective,
        converged: anchored || grad <= settings.grad_tol,
        anchored,
        excluded: 0,
        cut_locus_events: cut_events,
        trace,
    })
}

/// Spatial median of the node errors `W_k = √b·log(θ̂_k)` at a fixed
/// reference, mapped back through `exp(ŝ/√b)`.
pub fn tangent_reduction(
    nodes: &[NodeEstimate],
    reference: &Frame,
    scale: ScaleAlpha,
    settings: &MedianSettings,
) -> Result<AggregationResult> {
    let (p, r) = check_nodes(nodes)?;
    if reference.p() != p || reference.r() != r {
        return Err(Error::DimensionMismatch { what: "reference frame", expected: p, found: reference.p() });
    }
    let b = nodes[0].b;
    if let Some(n) = nodes.iter().find(|n| n.b != b) {
        return Err(Error::Record { node_id: n.node_id, message: format!("block size {} differs from {b}", n.b) });
    }
    let (errors, excluded) = node_pca::node_errors(nodes, reference)?;
    if errors.is_empty() {
        return Err(Error::Empty("every node left the reference neighborhood"));
    }
    let points: Vec<DVector<f64>> = errors.iter().map(TangentVector::to_vec).collect();
    let med = spatial_median(&points, &Metric::Scaled { scale, p }, settings)?;
    let s = TangentVector::from_vec(p, r, &med.point)?;
    let estimate = geometry::product_exp(reference, &s.scaled(1.0 / (b as f64).sqrt()))?;
    let logs = node_logs(&estimate.mu, estimate.subspace.matrix(), nodes, scale);
    Ok(AggregationResult {
        estimate,
        iterations: med.iterations,
        objective: logs.objective,
        converged: med.converged,
        anchored: med.anchored,
        excluded,
        cut_locus_events: 0,
        trace: med.trace,
    })
}

#[derive(Debug, Clone)]
pub struct ProjectorAverage {
    pub estimate: ProductPoint,
    /// The averaged projector has `λ_r = λ_{r+1}`.
    pub tie: bool,
}

/// Arithmetic mean of node means and the top-`r` eigenspace of the mean projector.
pub fn projector_average(nodes: &[NodeEstimate]) -> Result<ProjectorAverage> {
    let (p, r) = check_nodes(nodes)?;
    let k = nodes.len() as f64;
    let mut mu = DVector::zeros(p);
    let mut proj = DMatrix::zeros(p, p);
    for n in nodes {
        mu += &n.mu_hat;
        proj += n.subspace_hat.projector();
    }
    mu /= k;
    proj /= k;
    let (values, vectors) = linalg::sym_eigen_desc(&linalg::symmetrize(proj));
    let tie = (values[r - 1] - values[r]).abs() <= 1e-12 * values[0].abs().max(1.0);
    let basis = linalg::orthonormalize(&vectors.columns(0, r).into_owned());
    Ok(ProjectorAverage { estimate: point(mu, basis), tie })
}

/// One node chosen uniformly at random (a single node-sized subsample).
pub fn random_subset(nodes: &[NodeEstimate], rng: &mut Rng) -> Result<ProductPoint> {
    check_nodes(nodes)?;
    Ok(nodes[rng.random_range(0..nodes.len())].theta())
}

/// PCA of the full data matrix.
pub fn full_pca(data: &DataMatrix, r: usize) -> Result<ProductPoint> {
    Ok(node_pca::node_estimate(data, r, -1)?.theta())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::dvector;

    fn v2(x: f64, y: f64) -> DVector<f64> {
        dvector![x, y]
    }

    #[test]
    fn anchored_center_of_a_cross() {
        let pts = vec![v2(0.0, 0.0), v2(1.0, 0.0), v2(-1.0, 0.0), v2(0.0, 1.0), v2(0.0, -1.0)];
        let m = spatial_median(&pts, &Metric::Identity, &MedianSettings::default()).unwrap();
        assert!(m.point.norm() < 1e-15);
        assert!(m.anchored && m.converged);
    }

    #[test]
    fn three_point_median() {
        let pts = vec![v2(1.0, 0.0), v2(-1.0, 0.0), v2(0.0, 1.0)];
        let m = spatial_median(&pts, &Metric::Identity, &MedianSettings::default()).unwrap();
        assert!(m.converged);
        assert!((m.point - v2(0.0, 1.0 / 3f64.sqrt())).norm() < 1e-9);
        assert!(m.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn single_point_and_weighted_metric() {
        let pts = vec![v2(3.0, -1.0)];
        let m = spatial_median(&pts, &Metric::Identity, &MedianSettings::default()).unwrap();
        assert_eq!(m.point, v2(3.0, -1.0));
        let h = Metric::Diagonal(dvector![4.0, 0.25]);
        let pts = vec![v2(1.0, 0.0), v2(-1.0, 0.0), v2(0.0, 1.0), v2(0.5, 2.0)];
        let m = spatial_median(&pts, &h, &MedianSettings::default()).unwrap();
        let scaled: Vec<_> = pts.iter().map(|x| v2(2.0 * x[0], 0.5 * x[1])).collect();
        let e = spatial_median(&scaled, &Metric::Identity, &MedianSettings::default()).unwrap();
        assert!((m.point - v2(e.point[0] / 2.0, e.point[1] * 2.0)).norm() < 1e-9);
    }

    fn node(id: i64, mu: DVector<f64>, u: DMatrix<f64>) -> NodeEstimate {
        NodeEstimate::from_point(id, 10, ProductPoint::new(mu, SubspaceBasis::new(u).unwrap()).unwrap())
    }

    fn line(angle: f64) -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 1, &[angle.cos(), angle.sin(), 0.0])
    }

    #[test]
    fn product_median_of_geodesic_triple_is_middle() {
        let nodes: Vec<_> = [-1.0, 0.0, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| node(i as i64, dvector![0.3 * t, 0.0, 0.1 * t], line(0.2 * t)))
            .collect();
        let res = product_mom(&nodes, ScaleAlpha::unit(), &MedianSettings::default()).unwrap();
        let d = geometry::product_distance(&res.estimate, &nodes[1].theta(), ScaleAlpha::unit()).unwrap();
        assert!(d < 1e-8, "{d}");
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn degenerate_node_counts() {
        let a = node(0, dvector![1.0, 0.0, 0.0], line(0.0));
        let b = node(1, dvector![0.0, 1.0, 0.0], line(0.4));
        let s = MedianSettings::default();
        let one = product_mom(std::slice::from_ref(&a), ScaleAlpha::unit(), &s).unwrap();
        assert_eq!(one.estimate, a.theta());
        assert_eq!(one.iterations, 0);
        let two = product_mom(&[a.clone(), b.clone()], ScaleAlpha::unit(), &s).unwrap();
        let expect = line(0.2);
        assert!(geometry::grassmann_distance(&two.estimate.subspace, &SubspaceBasis::new(expect).unwrap()).unwrap() < 1e-12);
        assert_eq!(two.estimate.mu, dvector![0.5, 0.5, 0.0]);
        let same = product_mom(&[a.clone(), a.clone(), a.clone()], ScaleAlpha::unit(), &s).unwrap();
        assert_eq!(same.estimate, a.theta());
        assert_eq!(same.iterations, 0);
    }

    #[test]
    fn orthogonal_pair_projector_tie() {
        let a = node(0, dvector![0.0, 0.0], DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let b = node(1, dvector![0.0, 0.0], DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
        assert!(projector_average(&[a, b]).unwrap().tie);
    }

    #[test]
    fn baselines_agree_on_identical_nodes() {
        let a = node(0, dvector![1.0, 2.0, 3.0], line(0.3));
        let nodes = vec![a.clone(), a.clone(), a.clone()];
        let pa = projector_average(&nodes).unwrap().estimate;
        assert!(geometry::product_distance(&pa, &a.theta(), ScaleAlpha::unit()).unwrap() < 1e-12);
        let mut g = rng::stream(1, &[]);
        assert_eq!(random_subset(&nodes, &mut g).unwrap(), a.theta());
    }

    #[test]
    fn cut_locus_nodes_do_not_stall() {
        let nodes = vec![
            node(0, dvector![0.0, 0.0, 0.0], line(0.0)),
            node(1, dvector![0.0, 0.0, 0.0], line(0.01)),
            node(2, dvector![0.0, 0.0, 0.0], line(-0.01)),
            node(3, dvector![0.0, 0.0, 0.0], line(std::f64::consts::FRAC_PI_2)),
        ];
        let res = product_mom(&nodes, ScaleAlpha::unit(), &MedianSettings::default()).unwrap();
        assert!(res.objective.is_finite());
        assert!(geometry::grassmann_distance(&res.estimate.subspace, &nodes[0].subspace_hat).unwrap() < 0.02);
    }
}
