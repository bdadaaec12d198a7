#![allow(dead_code)]

use std::path::PathBuf;

use mompca::geometry::{self, Frame, ProductPoint, SubspaceBasis, TangentVector};
use mompca::rng::Rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(len: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

pub fn random_basis(p: usize, r: usize, rng: &mut Rng) -> SubspaceBasis {
    SubspaceBasis::orthonormalized(&gaussian_matrix(p, r, rng)).unwrap()
}

pub fn random_orthogonal(r: usize, rng: &mut Rng) -> DMatrix<f64> {
    let q = gaussian_matrix(r, r, rng).qr();
    q.q()
}

pub fn random_point(p: usize, r: usize, rng: &mut Rng) -> ProductPoint {
    ProductPoint::new(gaussian_vector(p, rng), random_basis(p, r, rng)).unwrap()
}

/// Random `(p, r)` with `2 <= p <= max_p` and `1 <= r < p`.
pub fn random_shape(max_p: usize, rng: &mut Rng) -> (usize, usize) {
    let p = rng.random_range(2..=max_p);
    (p, rng.random_range(1..p))
}

/// Tangent vector at `frame` with Frobenius norm of the subspace block equal to `sub_norm`.
pub fn random_tangent(frame: &Frame, mean_norm: f64, sub_norm: f64, rng: &mut Rng) -> TangentVector {
    let (p, r) = (frame.p(), frame.r());
    let mut w_mu = gaussian_vector(p, rng);
    w_mu *= mean_norm / w_mu.norm();
    let mut w_sub = gaussian_matrix(p - r, r, rng);
    w_sub *= sub_norm / w_sub.norm();
    TangentVector { w_mu, w_sub }
}

/// Principal angles from the eigenvalues `cos²θ` of `(AᵀB)ᵀ(AᵀB)`.
pub fn oracle_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Vec<f64> {
    let m = a.matrix().tr_mul(b.matrix());
    let gram = m.tr_mul(&m);
    gram.symmetric_eigenvalues().iter().map(|c2| c2.clamp(0.0, 1.0).sqrt().acos()).collect()
}

pub fn oracle_grassmann(a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    oracle_angles(a, b).iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn load_config(name: &str) -> mompca::experiments::ExperimentConfig {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    mompca::experiments::ExperimentConfig::from_toml(&text).unwrap()
}

pub fn product_distance(a: &ProductPoint, b: &ProductPoint, alpha: f64) -> f64 {
    geometry::product_distance(a, b, geometry::ScaleAlpha::fixed(alpha).unwrap()).unwrap()
}

/// Nodes with at least `⌈(1/2+γ)K⌉` points within `d_α`-radius `ρ` of `θ₀`
/// and the rest far away in both factors.
pub struct GoodNodeInstance {
    pub nodes: Vec<mompca::node_pca::NodeEstimate>,
    pub theta0: ProductPoint,
    pub scale: geometry::ScaleAlpha,
    pub radius: f64,
    pub gamma: f64,
}

pub fn good_node_instance(rng: &mut Rng) -> GoodNodeInstance {
    use mompca::node_pca::NodeEstimate;
    let gamma = [0.125, 0.25, 0.5][rng.random_range(0..3)];
    let k: usize = rng.random_range(5..=40);
    let good = ((0.5 + gamma) * k as f64).ceil() as usize;
    let (p, r) = random_shape(8, rng);
    let p = p.max(3);
    let r = r.min(p - 1);
    let scale = geometry::ScaleAlpha::fixed(rng.random_range(0.1..1.9)).unwrap();
    let radius = rng.random_range(0.05..0.5);
    let theta0 = random_point(p, r, rng);
    let frame = Frame::new(theta0.clone());
    let nodes = (0..k)
        .map(|i| {
            let theta = if i < good {
                let mut w = random_tangent(&frame, rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng);
                let n = geometry::h_norm(&w, scale);
                if n > 0.0 {
                    w = w.scaled(rng.random_range(0.0..=radius) / n);
                }
                geometry::product_exp(&frame, &w).unwrap()
            } else {
                let mut mu = gaussian_vector(p, rng);
                mu *= 1e3 / (scale.alpha().sqrt() * mu.norm());
                ProductPoint::new(&theta0.mu + mu, random_basis(p, r, rng)).unwrap()
            };
            NodeEstimate::from_point(i as i64, 100, theta)
        })
        .collect();
    GoodNodeInstance { nodes, theta0, scale, radius, gamma }
}

/// `d_α(MoM, θ₀)` and the guaranteed bound for one instance.
pub fn good_node_check(inst: &GoodNodeInstance) -> (f64, f64) {
    let settings = mompca::aggregation::MedianSettings::default();
    let agg = mompca::aggregation::product_mom(&inst.nodes, inst.scale, &settings).unwrap();
    let d = geometry::product_distance(&agg.estimate, &inst.theta0, inst.scale).unwrap();
    (d, mompca::robustness::good_node_bound(inst.radius, inst.gamma).unwrap())
}

/// Spiked model with a random eigenbasis and mean.
pub fn rotated_model(p: usize, r: usize, eigengap: f64, rng: &mut Rng) -> mompca::node_pca::SpikedModel {
    let base = mompca::node_pca::SpikedModel::spiked(p, r, eigengap).unwrap();
    mompca::node_pca::SpikedModel::new(r, gaussian_vector(p, rng), base.eigvals().to_vec(), random_orthogonal(p, rng)).unwrap()
}

/// Mean over `blocks` of `‖W_k − b^{-1/2} Σ ζ(x_i)‖` for blocks of size `b`.
pub fn expansion_remainder(model: &mompca::node_pca::SpikedModel, b: usize, blocks: usize, seed: u64) -> f64 {
    use mompca::node_pca;
    let frame = model.frame();
    let total: f64 = (0..blocks)
        .map(|j| {
            let mut g = mompca::rng::stream(seed, &[b as u64, j as u64]);
            let data = mompca::experiments::gen_spiked(model, b, &mut g);
            let node = node_pca::node_estimate(&data, model.r(), 0).unwrap();
            let w = node_pca::node_error(&node, &frame).unwrap().to_vec();
            let mut sum = DVector::zeros(w.len());
            for i in 0..b {
                sum += node_pca::influence_zeta(&data.row(i), model).unwrap();
            }
            (w - sum / (b as f64).sqrt()).norm()
        })
        .sum();
    total / blocks as f64
}

/// `‖log_{𝒰₀}(𝒰(Σ+tE)) − t·B(E)‖ / t²` for each step `t`.
pub fn perturbation_second_order(model: &mompca::node_pca::SpikedModel, e: &DMatrix<f64>, steps: &[f64]) -> Vec<f64> {
    let frame = model.frame();
    let linear = mompca::node_pca::subspace_perturbation(e, model).unwrap();
    steps
        .iter()
        .map(|&t| {
            let sigma = model.covariance() + e * t;
            let (_, vecs) = mompca::linalg::sym_eigen_desc(&mompca::linalg::symmetrize(sigma));
            let u = SubspaceBasis::orthonormalized(&vecs.columns(0, model.r()).into_owned()).unwrap();
            let log = geometry::grassmann_log(&frame, &u).unwrap().w_sub;
            (log - &linear * t).norm() / (t * t)
        })
        .collect()
}

pub fn mean_distance(points: &[DVector<f64>], x: &DVector<f64>) -> f64 {
    points.iter().map(|p| (p - x).norm()).sum::<f64>() / points.len() as f64
}

/// Coarse-to-fine grid search of the mean Euclidean distance in the plane.
pub fn brute_force_median_2d(points: &[DVector<f64>]) -> DVector<f64> {
    let mut center = nalgebra::dvector![0.0, 0.0];
    let mut half = 4.0;
    for _ in 0..12 {
        let mut best = (f64::INFINITY, center.clone());
        for i in 0..=100 {
            for j in 0..=100 {
                let x = nalgebra::dvector![
                    center[0] - half + 2.0 * half * i as f64 / 100.0,
                    center[1] - half + 2.0 * half * j as f64 / 100.0
                ];
                let f = mean_distance(points, &x);
                if f < best.0 {
                    best = (f, x);
                }
            }
        }
        center = best.1;
        half /= 10.0;
    }
    center
}
