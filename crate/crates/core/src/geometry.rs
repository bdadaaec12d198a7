//! Grassmann primitives and the scaled product metric on `R^p × Gr(r,p)`.
//!
//! A subspace is carried by an orthonormal `p×r` basis, but every quantity
//! computed here depends only on its span. Tangent vectors at a base point are
//! expressed in a [`Frame`]: the Euclidean block is an ordinary `p`-vector and
//! the Grassmann block is the `(p−r)×r` coordinate matrix `U_⊥ᵀ Δ` of the
//! horizontal lift `Δ`.
//!
//! Vectorized tangent coordinates put the Euclidean block first and then the
//! column-major entries of the Grassmann block, giving dimension
//! `d = p + r(p−r)`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg;

/// Orthonormality tolerance applied when a basis is constructed or loaded.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// `grassmann_log` refuses targets whose cross-Gram matrix has a singular
/// value below this (a principal angle numerically at `π/2`).
pub const INJECTIVITY_GUARD: f64 = 1e-10;
/// Default clamp margin for the scale interval `[ε, 2−ε]`.
pub const DEFAULT_EPSILON: f64 = 0.05;

const SMALL_ANGLE: f64 = 1e-4;

/// Orthonormal basis representing a point of `Gr(r,p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    matrix: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Validates orthonormality (within [`ORTHONORMAL_TOL`]) and `1 ≤ r < p`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (p, r) = matrix.shape();
        if r == 0 || r >= p {
            return Err(Error::InvalidRank { p, r });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("basis contains non-finite entries"));
        }
        let deviation = linalg::orthonormality_error(&matrix);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { matrix })
    }

    /// Spans the columns of an arbitrary full-rank `p×r` matrix (QR repair).
    pub fn orthonormalized(matrix: &DMatrix<f64>) -> Result<Self> {
        let (p, r) = matrix.shape();
        if r == 0 || r >= p {
            return Err(Error::InvalidRank { p, r });
        }
        Self::new(linalg::orthonormalize(matrix))
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(p: usize, axes: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(p, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            if i >= p {
                return Err(Error::param(format!("axis {i} out of range for p={p}")));
            }
            m[(i, j)] = 1.0;
        }
        Self::new(m)
    }

    pub(crate) fn from_trusted(matrix: DMatrix<f64>) -> Self {
        debug_assert!(linalg::orthonormality_error(&matrix) < 1e-6);
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn r(&self) -> usize {
        self.matrix.ncols()
    }

    /// Orthogonal projector `UUᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }
}

/// A mean–subspace pair `θ = (μ, 𝒰)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub mu: DVector<f64>,
    pub subspace: SubspaceBasis,
}

impl ProductPoint {
    pub fn new(mu: DVector<f64>, subspace: SubspaceBasis) -> Result<Self> {
        if mu.len() != subspace.p() {
            return Err(Error::DimensionMismatch {
                what: "mean length vs subspace ambient dimension",
                expected: subspace.p(),
                found: mu.len(),
            });
        }
        Ok(Self { mu, subspace })
    }

    pub fn p(&self) -> usize {
        self.subspace.p()
    }

    pub fn r(&self) -> usize {
        self.subspace.r()
    }

    /// Product tangent dimension `p + r(p−r)`.
    pub fn tangent_dim(&self) -> usize {
        tangent_dim(self.p(), self.r())
    }
}

pub fn tangent_dim(p: usize, r: usize) -> usize {
    p + r * (p - r)
}

/// Base point together with an orthonormal complement `U_⊥`, fixing tangent coordinates.
#[derive(Debug, Clone)]
pub struct Frame {
    base: ProductPoint,
    complement: DMatrix<f64>,
}

impl Frame {
    /// Complement from the full QR of the base basis; deterministic in the base matrix.
    pub fn new(base: ProductPoint) -> Self {
        let complement = linalg::complement_basis(base.subspace.matrix());
        Self { base, complement }
    }

    /// Uses a caller-supplied complement, e.g. the trailing eigenvectors of a model.
    pub fn with_complement(base: ProductPoint, complement: DMatrix<f64>) -> Result<Self> {
        let (p, r) = (base.p(), base.r());
        if complement.shape() != (p, p - r) {
            return Err(Error::DimensionMismatch {
                what: "frame complement columns",
                expected: p - r,
                found: complement.ncols(),
            });
        }
        let mut full = DMatrix::zeros(p, p);
        full.view_mut((0, 0), (p, r)).copy_from(base.subspace.matrix());
        full.view_mut((0, r), (p, p - r)).copy_from(&complement);
        let deviation = linalg::orthonormality_error(&full);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { base, complement })
    }

    pub fn base(&self) -> &ProductPoint {
        &self.base
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    pub fn p(&self) -> usize {
        self.base.p()
    }

    pub fn r(&self) -> usize {
        self.base.r()
    }
}

/// Product tangent vector `(w_μ, w_𝒰)` in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub w_mu: DVector<f64>,
    pub w_sub: DMatrix<f64>,
}

impl TangentVector {
    pub fn zeros(p: usize, r: usize) -> Self {
        Self {
            w_mu: DVector::zeros(p),
            w_sub: DMatrix::zeros(p - r, r),
        }
    }

    pub fn p(&self) -> usize {
        self.w_mu.len()
    }

    pub fn r(&self) -> usize {
        self.w_sub.ncols()
    }

    pub fn dim(&self) -> usize {
        self.w_mu.len() + self.w_sub.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w_mu.iter().chain(self.w_sub.iter()).all(|v| v.is_finite())
    }

    /// Euclidean block first, then `w_sub` column-major.
    pub fn to_vec(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.w_mu.iter().copied().chain(self.w_sub.iter().copied()),
        )
    }

    pub fn from_vec(p: usize, r: usize, v: &DVector<f64>) -> Result<Self> {
        let d = tangent_dim(p, r);
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                what: "vectorized tangent length",
                expected: d,
                found: v.len(),
            });
        }
        Ok(Self {
            w_mu: v.rows(0, p).into_owned(),
            w_sub: DMatrix::from_column_slice(p - r, r, &v.as_slice()[p..]),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w_mu: &self.w_mu * factor,
            w_sub: &self.w_sub * factor,
        }
    }

    /// Unscaled Euclidean norm of the vectorized tangent.
    pub fn norm(&self) -> f64 {
        (self.w_mu.norm_squared() + self.w_sub.norm_squared()).sqrt()
    }
}

/// Relative mean/subspace weight `α` restricted to `I_ε = [ε, 2−ε]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleAlpha {
    alpha: f64,
    epsilon: f64,
}

impl ScaleAlpha {
    /// Clamps `alpha ∈ [0, 2]` into `[ε, 2−ε]`.
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if !(0.0..=2.0).contains(&alpha) {
            return Err(Error::param(format!("alpha must lie in [0,2], got {alpha}")));
        }
        Ok(Self {
            alpha: alpha.clamp(epsilon, 2.0 - epsilon),
            epsilon,
        })
    }

    /// `α` with the default margin [`DEFAULT_EPSILON`].
    pub fn fixed(alpha: f64) -> Result<Self> {
        Self::new(alpha, DEFAULT_EPSILON)
    }

    pub fn unit() -> Self {
        Self {
            alpha: 1.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Weight on the Euclidean block (`α`).
    pub fn mean_weight(&self) -> f64 {
        self.alpha
    }

    /// Weight on the Grassmann block (`2−α`).
    pub fn subspace_weight(&self) -> f64 {
        2.0 - self.alpha
    }

    /// Same margin, different `α`.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha: alpha.clamp(self.epsilon, 2.0 - self.epsilon),
            epsilon: self.epsilon,
        }
    }
}

/// Power of `H_α` applied by [`h_scale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HPower {
    Half,
    NegHalf,
}

fn check_pair(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<()> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch {
            what: "subspace ambient dimension",
            expected: a.p(),
            found: b.p(),
        });
    }
    if a.r() != b.r() {
        return Err(Error::DimensionMismatch {
            what: "subspace rank",
            expected: a.r(),
            found: b.r(),
        });
    }
    Ok(())
}

fn sorted_singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m, false, false).singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Principal angles between two subspaces, ascending in `[0, π/2]`.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let cross = a.matrix().tr_mul(b.matrix());
    // ascending cosines -> descending angles; reverse for ascending angles
    let mut angles: Vec<f64> = sorted_singular_values(cross.clone())
        .into_iter()
        .rev()
        .map(|c| c.clamp(0.0, 1.0).acos())
        .collect();
    if angles.iter().any(|&t| t < SMALL_ANGLE) {
        // arccos loses precision near 1; sines of the residual are accurate there
        let residual = b.matrix() - a.matrix() * cross;
        let sines = sorted_singular_values(residual);
        for (angle, s) in angles.iter_mut().zip(sines) {
            if *angle < SMALL_ANGLE {
                *angle = s.clamp(0.0, 1.0).asin();
            }
        }
    }
    Ok(angles)
}

/// Geodesic distance `sqrt(Σ ϑ_j²)`.
pub fn grassmann_distance(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    Ok(principal_angles(a, b)?.iter().map(|t| t * t).sum::<f64>().sqrt())
}

/// `x ↦ g(√x)` with the removable singularity at zero filled by `g0`.
fn root_fn(x: f64, g: impl Fn(f64) -> f64, g0: f64) -> f64 {
    let t = x.max(0.0).sqrt();
    if t < 1e-8 { g0 } else { g(t) }
}

// Singular vectors are avoided throughout: nalgebra's SVD returns inaccurate
// vectors for rank-deficient inputs, which tangent matrices routinely are.
// Everything is written as matrix functions of small symmetric Gram matrices.

/// Horizontal lift (a `p×r` matrix orthogonal to `base`) of the Grassmann log.
pub(crate) fn horizontal_log(base: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = base.tr_mul(target);
    let min_cosine = SVD::new(m.clone(), false, false).singular_values.min();
    if !(min_cosine >= INJECTIVITY_GUARD) {
        return Err(Error::OutOfNeighborhood { min_cosine });
    }
    let m_inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::OutOfNeighborhood { min_cosine })?;
    // T = Q tan(Θ) Vᵀ, so Q Θ Vᵀ = T · f(TᵀT) with f(x) = atan(√x)/√x.
    let tangent = (target - base * &m) * m_inv;
    let gram = tangent.tr_mul(&tangent);
    Ok(&tangent * linalg::sym_fn(&gram, |x| root_fn(x, |t| t.atan() / t, 1.0)))
}

/// Like [`horizontal_log`], but a target on the cut locus still gets a
/// (non-unique) minimizing lift built from principal vectors. The flag
/// reports whether that fallback was used.
pub(crate) fn horizontal_log_guarded(base: &DMatrix<f64>, target: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    match horizontal_log(base, target) {
        Ok(lift) => (lift, false),
        Err(_) => (principal_log(base, target), true),
    }
}

fn principal_log(base: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    let r = base.ncols();
    let m = base.tr_mul(target);
    // MᵀM = B cos²Θ Bᵀ; a_j = M b_j / cos θ_j where the cosine is nonzero and
    // an orthonormal completion where it vanishes.
    let (cos2, b) = linalg::sym_eigen_desc(&m.tr_mul(&m));
    let mut a = DMatrix::zeros(r, r);
    let mut found = 0;
    for j in 0..r {
        let c = cos2[j].max(0.0).sqrt();
        if c > INJECTIVITY_GUARD {
            a.set_column(j, &(&m * b.column(j) / c));
            found += 1;
        }
    }
    if found == 0 {
        a = DMatrix::identity(r, r);
    } else if found < r {
        let completion = linalg::complement_basis(&linalg::orthonormalize(&a.columns(0, found).into_owned()));
        a.columns_mut(found, r - found).copy_from(&completion);
    }
    let tb = target * &b;
    // Column j is q_j·sin(θ_j) with q_j orthogonal to the base.
    let resid = &tb - base * base.tr_mul(&tb);
    let mut lift = DMatrix::zeros(base.nrows(), r);
    for j in 0..r {
        let theta = cos2[j].clamp(0.0, 1.0).sqrt().acos();
        let col = resid.column(j);
        let norm = col.norm();
        if norm > 0.0 && theta > 0.0 {
            lift += (col / norm) * theta * a.column(j).transpose();
        }
    }
    lift
}

/// Geodesic endpoint from `base` along the horizontal lift `lift` (unit time):
/// `U cos(√G) + L sinc(√G)` with `G = LᵀL`.
pub(crate) fn horizontal_exp(base: &DMatrix<f64>, lift: &DMatrix<f64>) -> DMatrix<f64> {
    if lift.iter().all(|&v| v == 0.0) {
        return base.clone();
    }
    let gram = lift.tr_mul(lift);
    let cos = linalg::sym_fn(&gram, |x| root_fn(x, f64::cos, 1.0));
    let sinc = linalg::sym_fn(&gram, |x| root_fn(x, |t| t.sin() / t, 1.0));
    let moved = base * cos + lift * sinc;
    linalg::orthonormalize(&moved)
}

/// Grassmann log at the frame base, in frame coordinates (`w_mu` is zero).
pub fn grassmann_log(frame: &Frame, target: &SubspaceBasis) -> Result<TangentVector> {
    check_pair(&frame.base.subspace, target)?;
    let lift = horizontal_log(frame.base.subspace.matrix(), target.matrix())?;
    Ok(TangentVector {
        w_mu: DVector::zeros(frame.p()),
        w_sub: frame.complement.tr_mul(&lift),
    })
}

/// Grassmann exp at the frame base of the coordinate matrix `w_sub`.
pub fn grassmann_exp(frame: &Frame, w_sub: &DMatrix<f64>) -> Result<SubspaceBasis> {
    let (p, r) = (frame.p(), frame.r());
    if w_sub.shape() != (p - r, r) {
        return Err(Error::DimensionMismatch {
            what: "tangent coordinate rows",
            expected: p - r,
            found: w_sub.nrows(),
        });
    }
    if w_sub.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("tangent contains non-finite entries"));
    }
    let lift = &frame.complement * w_sub;
    Ok(SubspaceBasis::from_trusted(horizontal_exp(
        frame.base.subspace.matrix(),
        &lift,
    )))
}

/// `sqrt(α‖μ_a−μ_b‖² + (2−α) d_Gr(𝒰_a,𝒰_b)²)`.
pub fn product_distance(a: &ProductPoint, b: &ProductPoint, scale: ScaleAlpha) -> Result<f64> {
    if a.mu.len() != b.mu.len() {
        return Err(Error::DimensionMismatch {
            what: "mean length",
            expected: a.mu.len(),
            found: b.mu.len(),
        });
    }
    let dg = grassmann_distance(&a.subspace, &b.subspace)?;
    let dm2 = (&a.mu - &b.mu).norm_squared();
    Ok((scale.mean_weight() * dm2 + scale.subspace_weight() * dg * dg).sqrt())
}

/// `‖w‖_{H_α} = sqrt(α‖w_μ‖² + (2−α)‖w_𝒰‖_F²)`.
pub fn h_norm(w: &TangentVector, scale: ScaleAlpha) -> f64 {
    (scale.mean_weight() * w.w_mu.norm_squared() + scale.subspace_weight() * w.w_sub.norm_squared())
        .sqrt()
}

/// Multiplies the blocks of `w` by `α^power` and `(2−α)^power`.
pub fn h_scale(w: &TangentVector, scale: ScaleAlpha, power: HPower) -> TangentVector {
    let e = match power {
        HPower::Half => 0.5,
        HPower::NegHalf => -0.5,
    };
    TangentVector {
        w_mu: &w.w_mu * scale.mean_weight().powf(e),
        w_sub: &w.w_sub * scale.subspace_weight().powf(e),
    }
}

/// Componentwise log: mean difference plus Grassmann log.
pub fn product_log(frame: &Frame, target: &ProductPoint) -> Result<TangentVector> {
    if target.mu.len() != frame.p() {
        return Err(Error::DimensionMismatch {
            what: "mean length",
            expected: frame.p(),
            found: target.mu.len(),
        });
    }
    let mut w = grassmann_log(frame, &target.subspace)?;
    w.w_mu = &target.mu - &frame.base.mu;
    Ok(w)
}

/// Componentwise exp: mean translation plus Grassmann exp.
pub fn product_exp(frame: &Frame, w: &TangentVector) -> Result<ProductPoint> {
    if w.w_mu.len() != frame.p() {
        return Err(Error::DimensionMismatch {
            what: "tangent mean block",
            expected: frame.p(),
            found: w.w_mu.len(),
        });
    }
    let subspace = grassmann_exp(frame, &w.w_sub)?;
    Ok(ProductPoint {
        mu: &frame.base.mu + &w.w_mu,
        subspace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn line(p: usize, v: &[f64]) -> SubspaceBasis {
        let m = DMatrix::from_column_slice(p, 1, v);
        SubspaceBasis::orthonormalized(&m).unwrap()
    }

    #[test]
    fn angles_of_simple_lines() {
        let e1 = SubspaceBasis::coordinate(3, &[0]).unwrap();
        assert_eq!(principal_angles(&e1, &e1).unwrap(), vec![0.0]);

        let a = SubspaceBasis::coordinate(2, &[0]).unwrap();
        let b = SubspaceBasis::coordinate(2, &[1]).unwrap();
        assert!((principal_angles(&a, &b).unwrap()[0] - FRAC_PI_2).abs() < 1e-15);

        let c = line(2, &[1.0, 1.0]);
        assert!((principal_angles(&a, &c).unwrap()[0] - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn two_plane_rotation_distance() {
        let t = PI / 6.0;
        let u0 = SubspaceBasis::coordinate(4, &[0, 1]).unwrap();
        let v = SubspaceBasis::new(DMatrix::from_column_slice(
            4,
            2,
            &[t.cos(), 0.0, t.sin(), 0.0, 0.0, t.cos(), 0.0, t.sin()],
        ))
        .unwrap();
        let d = grassmann_distance(&u0, &v).unwrap();
        assert!((d - t * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_bases() {
        let m = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!(matches!(SubspaceBasis::new(m), Err(Error::NotOrthonormal { .. })));
        assert!(matches!(
            SubspaceBasis::new(DMatrix::identity(3, 3)),
            Err(Error::InvalidRank { .. })
        ));
        let a = SubspaceBasis::coordinate(3, &[0]).unwrap();
        let b = SubspaceBasis::coordinate(4, &[0]).unwrap();
        assert!(matches!(principal_angles(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tiny_angles_are_accurate() {
        let t: f64 = 1e-9;
        let a = SubspaceBasis::coordinate(3, &[0]).unwrap();
        let b = SubspaceBasis::new(DMatrix::from_column_slice(3, 1, &[t.cos(), t.sin(), 0.0])).unwrap();
        let angle = principal_angles(&a, &b).unwrap()[0];
        assert!((angle - t).abs() < 1e-20, "{angle}");
    }

    #[test]
    fn log_of_planar_rotation() {
        // span(e1) rotated by π/5 toward e2 in R^3; the QR complement of e1 is (±e2, ±e3)
        let t = PI / 5.0;
        let base = ProductPoint::new(DVector::zeros(3), SubspaceBasis::coordinate(3, &[0]).unwrap()).unwrap();
        let complement = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let frame = Frame::with_complement(base, complement).unwrap();
        let target = line(3, &[t.cos(), t.sin(), 0.0]);
        let w = grassmann_log(&frame, &target).unwrap();
        assert!((w.w_sub[(0, 0)] - t).abs() < 1e-14);
        assert!(w.w_sub[(1, 0)].abs() < 1e-15);
        assert_eq!(w.w_mu.norm(), 0.0);
    }

    #[test]
    fn log_rejects_orthogonal_target() {
        let base = ProductPoint::new(DVector::zeros(2), SubspaceBasis::coordinate(2, &[0]).unwrap()).unwrap();
        let frame = Frame::new(base);
        let target = SubspaceBasis::coordinate(2, &[1]).unwrap();
        assert!(matches!(
            grassmann_log(&frame, &target),
            Err(Error::OutOfNeighborhood { .. })
        ));
    }

    #[test]
    fn cut_locus_fallback_reaches_target() {
        for axes in [[2, 3], [1, 2]] {
            let base = SubspaceBasis::coordinate(4, &[0, 1]).unwrap();
            let target = SubspaceBasis::coordinate(4, &axes).unwrap();
            let (lift, fallback) = horizontal_log_guarded(base.matrix(), target.matrix());
            assert!(fallback);
            let expected = grassmann_distance(&base, &target).unwrap();
            assert!((lift.norm() - expected).abs() < 1e-12);
            let reached = SubspaceBasis::new(horizontal_exp(base.matrix(), &lift)).unwrap();
            assert!(grassmann_distance(&reached, &target).unwrap() < 1e-12);
        }
    }

    #[test]
    fn exp_of_zero_is_base_and_speed_is_unit() {
        let base = ProductPoint::new(
            DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            SubspaceBasis::coordinate(4, &[1, 3]).unwrap(),
        )
        .unwrap();
        let frame = Frame::new(base.clone());
        let zero = TangentVector::zeros(4, 2);
        let back = product_exp(&frame, &zero).unwrap();
        assert_eq!(back, base);

        let mut w = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.5]);
        w /= w.norm();
        for t in [0.1, 0.7, 1.5] {
            let moved = grassmann_exp(&frame, &(&w * t)).unwrap();
            let d = grassmann_distance(&base.subspace, &moved).unwrap();
            assert!((d - t).abs() < 1e-12, "t={t} d={d}");
        }
    }

    #[test]
    fn product_distance_arithmetic() {
        let e = SubspaceBasis::coordinate(3, &[0]).unwrap();
        let a = ProductPoint::new(DVector::zeros(3), e.clone()).unwrap();
        let b = ProductPoint::new(DVector::from_vec(vec![2.0, 0.0, 0.0]), e.clone()).unwrap();
        let d = product_distance(&a, &b, ScaleAlpha::fixed(0.5).unwrap()).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(product_distance(&a, &a, ScaleAlpha::unit()).unwrap(), 0.0);

        // ‖Δμ‖ = 3 and d_Gr = 4: eight principal angles of √2 each
        let axes: Vec<usize> = (0..8).collect();
        let u0 = SubspaceBasis::coordinate(16, &axes).unwrap();
        let t = 2f64.sqrt();
        let mut m = DMatrix::zeros(16, 8);
        for j in 0..8 {
            m[(j, j)] = t.cos();
            m[(j + 8, j)] = t.sin();
        }
        let v = SubspaceBasis::new(m).unwrap();
        assert!((grassmann_distance(&u0, &v).unwrap() - 4.0).abs() < 1e-12);
        let a = ProductPoint::new(DVector::zeros(16), u0).unwrap();
        let mut mu = DVector::zeros(16);
        mu[0] = 3.0;
        let b = ProductPoint::new(mu, v).unwrap();
        assert!((product_distance(&a, &b, ScaleAlpha::unit()).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn h_norm_and_scaling() {
        let w = TangentVector {
            w_mu: DVector::from_vec(vec![3.0, 4.0]),
            w_sub: DMatrix::zeros(1, 1),
        };
        let half = ScaleAlpha::fixed(0.5).unwrap();
        assert!((h_norm(&w, half) - 0.5f64.sqrt() * 5.0).abs() < 1e-15);

        let w = TangentVector {
            w_mu: DVector::from_vec(vec![1.0, -2.0]),
            w_sub: DMatrix::from_element(1, 1, 0.7),
        };
        assert!((h_norm(&w, ScaleAlpha::unit()) - w.to_vec().norm()).abs() < 1e-15);
        let s = ScaleAlpha::fixed(1.3).unwrap();
        let back = h_scale(&h_scale(&w, s, HPower::NegHalf), s, HPower::Half);
        assert!((back.to_vec() - w.to_vec()).amax() < 1e-12);
    }

    #[test]
    fn scale_clamps_into_interval() {
        let s = ScaleAlpha::new(1.99, 0.05).unwrap();
        assert_eq!(s.alpha(), 1.95);
        assert!(ScaleAlpha::new(1.0, 0.0).is_err());
        assert!(ScaleAlpha::new(1.0, 1.0).is_err());
    }

    #[test]
    fn vectorization_is_column_major_after_mean() {
        let w = TangentVector {
            w_mu: DVector::from_vec(vec![1.0, 2.0, 3.0]),
            w_sub: DMatrix::from_row_slice(2, 1, &[4.0, 5.0]),
        };
        assert_eq!(w.to_vec().as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let p4 = TangentVector {
            w_mu: DVector::zeros(4),
            w_sub: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
        };
        assert_eq!(&p4.to_vec().as_slice()[4..], &[1.0, 3.0, 2.0, 4.0]);
        let round = TangentVector::from_vec(4, 2, &p4.to_vec()).unwrap();
        assert_eq!(round, p4);
    }
}
