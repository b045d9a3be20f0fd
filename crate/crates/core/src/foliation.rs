//! 3+1 splittings of Minkowski space-time.
//!
//! An [`Embedding`] maps radar coordinates `(τ, σ^r)` to events `z^μ(τ, σ)`.
//! From its tangents `z^μ_A` we derive the induced metric `g_AB`, the unit
//! normal `l^μ`, lapse `N`, shift `N_r`, 3-metric `³g_rs` and extrinsic
//! curvature `K_rs`, and check the three admissibility conditions on a grid.
//!
//! `τ` is a time parameter: inertial families use `z⁰ = c τ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3x2, SymmetricEigen, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{FourVector, LorentzTransform, Mat3, Mat4, Signature, Vec3};

/// `[z_τ, z_1, z_2, z_3]`.
pub type Tangents = [FourVector; 4];

/// Threshold on the normalized ε-contraction below which the tangent
/// triple is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Relative finite-difference step (multiplied by the embedding scale).
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-4;

pub trait EmbeddingMap: Send + Sync + fmt::Debug {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector;

    fn closed_form_tangents(&self, _tau: f64, _sigma: &Vec3) -> Option<Tangents> {
        None
    }

    /// Characteristic length used to size finite-difference steps.
    fn scale(&self) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    ClosedForm,
    FiniteDifference { step: f64 },
}

#[derive(Clone, Debug)]
pub struct Embedding {
    map: Arc<dyn EmbeddingMap>,
    mode: DerivativeMode,
}

impl Embedding {
    /// Uses closed-form tangents when the map provides them, central
    /// differences otherwise.
    pub fn new<M: EmbeddingMap + 'static>(map: M) -> Self {
        let has_closed = map.closed_form_tangents(0.0, &Vec3::zeros()).is_some();
        let mode = if has_closed {
            DerivativeMode::ClosedForm
        } else {
            DerivativeMode::FiniteDifference { step: DEFAULT_RELATIVE_STEP * map.scale() }
        };
        Embedding { map: Arc::new(map), mode }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn scale(&self) -> f64 {
        self.map.scale()
    }

    pub fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        self.map.position(tau, sigma)
    }

    pub fn tangents(&self, tau: f64, sigma: &Vec3) -> Tangents {
        match self.mode {
            DerivativeMode::ClosedForm => self
                .map
                .closed_form_tangents(tau, sigma)
                .unwrap_or_else(|| self.fd_tangents(tau, sigma, DEFAULT_RELATIVE_STEP * self.scale())),
            DerivativeMode::FiniteDifference { step } => self.fd_tangents(tau, sigma, step),
        }
    }

    /// Second-order central differences of the position map.
    pub fn fd_tangents(&self, tau: f64, sigma: &Vec3, step: f64) -> Tangents {
        let mut out = [FourVector::zero(); 4];
        let inv = 0.5 / step;
        out[0] = (self.position(tau + step, sigma) - self.position(tau - step, sigma)) * inv;
        for r in 0..3 {
            let mut sp = *sigma;
            let mut sm = *sigma;
            sp[r] += step;
            sm[r] -= step;
            out[r + 1] = (self.position(tau, &sp) - self.position(tau, &sm)) * inv;
        }
        out
    }
}

fn shift_point(tau: f64, sigma: &Vec3, axis: usize, h: f64) -> (f64, Vec3) {
    if axis == 0 {
        (tau + h, *sigma)
    } else {
        let mut s = *sigma;
        s[axis - 1] += h;
        (tau, s)
    }
}

// ---------------------------------------------------------------------------
// Embedding families

/// `z = (c τ, σ)`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityEmbedding {
    pub c: f64,
}

impl EmbeddingMap for IdentityEmbedding {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        FourVector::from_parts(self.c * tau, *sigma)
    }

    fn closed_form_tangents(&self, _tau: f64, _sigma: &Vec3) -> Option<Tangents> {
        Some([
            FourVector::new(self.c, 0.0, 0.0, 0.0),
            FourVector::new(0.0, 1.0, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 1.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ])
    }
}

/// Hyperplanes of an inertial frame moving with `β = v/c` along `x¹`:
/// `z⁰ = γ(c τ + β σ¹)`, `z¹ = γ(σ¹ + β c τ)`.
#[derive(Clone, Copy, Debug)]
pub struct TiltedHyperplanes {
    pub beta: f64,
    pub c: f64,
}

impl EmbeddingMap for TiltedHyperplanes {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        let g = 1.0 / (1.0 - self.beta * self.beta).sqrt();
        FourVector::new(
            g * (self.c * tau + self.beta * sigma.x),
            g * (sigma.x + self.beta * self.c * tau),
            sigma.y,
            sigma.z,
        )
    }

    fn closed_form_tangents(&self, _tau: f64, _sigma: &Vec3) -> Option<Tangents> {
        let g = 1.0 / (1.0 - self.beta * self.beta).sqrt();
        Some([
            FourVector::new(g * self.c, g * self.beta * self.c, 0.0, 0.0),
            FourVector::new(g * self.beta, g, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 1.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ])
    }
}

/// `z⁰ = c τ (1 + a σ¹)`, `z^r = σ^r`. The lapse vanishes where `a σ¹ = -1`.
#[derive(Clone, Copy, Debug)]
pub struct LapseRamp {
    pub a: f64,
    pub c: f64,
}

impl EmbeddingMap for LapseRamp {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        FourVector::from_parts(self.c * tau * (1.0 + self.a * sigma.x), *sigma)
    }

    fn closed_form_tangents(&self, tau: f64, sigma: &Vec3) -> Option<Tangents> {
        Some([
            FourVector::new(self.c * (1.0 + self.a * sigma.x), 0.0, 0.0, 0.0),
            FourVector::new(self.c * tau * self.a, 1.0, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 1.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Rigid,
    Differential,
}

/// Flat hyperplanes `z⁰ = c τ` with 3-coordinates rotating about `σ³` by
/// `α(τ, ρ) = ω τ F(ρ)`; `F = 1` (rigid) or `F = 1 / (1 + ρ²/R₀²)`.
#[derive(Clone, Copy, Debug)]
pub struct RotatingEmbedding {
    pub kind: RotationKind,
    pub omega: f64,
    pub r0: f64,
    pub c: f64,
}

impl RotatingEmbedding {
    fn profile(&self, rho2: f64) -> (f64, f64) {
        // (F, dF/dρ / ρ)
        match self.kind {
            RotationKind::Rigid => (1.0, 0.0),
            RotationKind::Differential => {
                let f = 1.0 / (1.0 + rho2 / (self.r0 * self.r0));
                (f, -2.0 * f * f / (self.r0 * self.r0))
            }
        }
    }

    /// Speed `ω ρ F(ρ)` of a coordinate point at cylindrical radius `rho`.
    pub fn coordinate_speed(&self, rho: f64) -> f64 {
        (self.omega * rho * self.profile(rho * rho).0).abs()
    }

    fn spatial_parts(&self, tau: f64, sigma: &Vec3) -> (Vec3, Vec3, f64, f64) {
        let rho2 = sigma.x * sigma.x + sigma.y * sigma.y;
        let (f, fp_over_rho) = self.profile(rho2);
        let alpha = self.omega * tau * f;
        let (sa, ca) = alpha.sin_cos();
        let rotated = Vec3::new(ca * sigma.x - sa * sigma.y, sa * sigma.x + ca * sigma.y, sigma.z);
        let d_alpha = Vec3::new(-sa * sigma.x - ca * sigma.y, ca * sigma.x - sa * sigma.y, 0.0);
        (rotated, d_alpha, f, fp_over_rho)
    }
}

impl EmbeddingMap for RotatingEmbedding {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        let (rotated, _, _, _) = self.spatial_parts(tau, sigma);
        FourVector::from_parts(self.c * tau, rotated)
    }

    fn closed_form_tangents(&self, tau: f64, sigma: &Vec3) -> Option<Tangents> {
        let (_, d_alpha, f, fp_over_rho) = self.spatial_parts(tau, sigma);
        let rho2 = sigma.x * sigma.x + sigma.y * sigma.y;
        let alpha = self.omega * tau * f;
        let (sa, ca) = alpha.sin_cos();
        let z_tau = FourVector::from_parts(self.c, d_alpha * (self.omega * f));
        let mut out = [z_tau, FourVector::zero(), FourVector::zero(), FourVector::new(0.0, 0.0, 0.0, 1.0)];
        let columns = [Vec3::new(ca, sa, 0.0), Vec3::new(-sa, ca, 0.0)];
        for r in 0..2 {
            let dalpha_dr = if rho2 > 0.0 { self.omega * tau * fp_over_rho * sigma[r] } else { 0.0 };
            out[r + 1] = FourVector::from_parts(0.0, columns[r] + d_alpha * dalpha_dr);
        }
        Some(out)
    }

    fn scale(&self) -> f64 {
        match self.kind {
            RotationKind::Differential => self.r0,
            RotationKind::Rigid if self.omega != 0.0 => (self.c / self.omega).abs(),
            RotationKind::Rigid => 1.0,
        }
    }
}

/// A rotating family whose simultaneity surfaces carry a Gaussian bump
/// `z⁰ += A exp(-|σ|²/2W²)`; curved 3-spaces that are asymptotically flat.
#[derive(Clone, Copy, Debug)]
pub struct WarpedRotating {
    pub base: RotatingEmbedding,
    pub amplitude: f64,
    pub width: f64,
}

impl WarpedRotating {
    fn bump(&self, sigma: &Vec3) -> f64 {
        self.amplitude * (-sigma.norm_squared() / (2.0 * self.width * self.width)).exp()
    }
}

impl EmbeddingMap for WarpedRotating {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        let z = self.base.position(tau, sigma);
        FourVector::from_parts(z.t() + self.bump(sigma), z.spatial())
    }

    fn closed_form_tangents(&self, tau: f64, sigma: &Vec3) -> Option<Tangents> {
        let mut t = self.base.closed_form_tangents(tau, sigma)?;
        let b = self.bump(sigma);
        for r in 0..3 {
            let d = -b * sigma[r] / (self.width * self.width);
            t[r + 1] = t[r + 1] + FourVector::new(d, 0.0, 0.0, 0.0);
        }
        Some(t)
    }

    fn scale(&self) -> f64 {
        self.base.scale().min(self.width)
    }
}

/// Wigner hyperplanes orthogonal to `P^μ ∝ (√(1+h²), h)`:
/// `z(τ, σ) = B(h) (c τ, origin + σ)`, with `origin` given in rest-frame
/// coordinates.
#[derive(Clone, Copy, Debug)]
pub struct RestFrameHyperplanes {
    pub boost: LorentzTransform,
    pub origin: Vec3,
    pub c: f64,
}

impl RestFrameHyperplanes {
    pub fn new(h: &Vec3, origin: Vec3, c: f64) -> Self {
        RestFrameHyperplanes { boost: LorentzTransform::boost_from_h(h), origin, c }
    }

    /// Spatial tetrad `ε_r^μ(h)`: images of the rest-frame axes.
    pub fn tetrad(&self) -> [FourVector; 3] {
        let e = |i: usize| {
            let mut v = FourVector::zero();
            v.0[i] = 1.0;
            self.boost.apply(&v)
        };
        [e(1), e(2), e(3)]
    }
}

impl EmbeddingMap for RestFrameHyperplanes {
    fn position(&self, tau: f64, sigma: &Vec3) -> FourVector {
        self.boost.apply(&FourVector::from_parts(self.c * tau, self.origin + sigma))
    }

    fn closed_form_tangents(&self, _tau: f64, _sigma: &Vec3) -> Option<Tangents> {
        let u = self.boost.apply(&FourVector::new(self.c, 0.0, 0.0, 0.0));
        let [e1, e2, e3] = self.tetrad();
        Some([u, e1, e2, e3])
    }

    fn scale(&self) -> f64 {
        1.0_f64.max(self.origin.norm())
    }
}

pub fn identity_embedding(c: f64) -> Embedding {
    Embedding::new(IdentityEmbedding { c })
}

/// Rigid (`α = ω τ`) or differential (`α = ω τ / (1 + ρ²/R₀²)`) rotation of
/// the 3-coordinates on the hyperplanes `z⁰ = c τ`.
pub fn make_rotating_embedding(kind: RotationKind, omega: f64, r0: f64, c: f64) -> Result<Embedding> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("angular velocity must be finite, got {omega}")));
    }
    if kind == RotationKind::Differential && !(r0 > 0.0) {
        return Err(Error::Domain(format!("profile scale R0 must be positive, got {r0}")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    Ok(Embedding::new(RotatingEmbedding { kind, omega, r0, c }))
}

// ---------------------------------------------------------------------------
// Geometry

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryAtPoint {
    /// Induced metric `g_AB = z_A · z_B`.
    pub metric: Mat4,
    pub lapse: f64,
    /// Shift with lowered index, `N_r = -sgn g_τr`.
    pub shift: Vec3,
    /// `³g_rs = -sgn g_rs`.
    pub g3: Mat3,
    /// Future-pointing unit normal, `l · l = sgn`.
    pub normal: FourVector,
    /// `K_rs`, present when the lapse is positive.
    pub extrinsic_curvature: Option<Mat3>,
}

impl GeometryAtPoint {
    pub fn shift_up(&self) -> Result<Vec3> {
        let inv = self
            .g3
            .try_inverse()
            .ok_or_else(|| Error::Domain("3-metric is singular".into()))?;
        Ok(inv * self.shift)
    }

    /// `g_AB` rebuilt from lapse, shift and 3-metric.
    pub fn reconstruct_metric(&self, s: Signature) -> Result<Mat4> {
        let sg = s.sgn();
        let shift_up = self.shift_up()?;
        let mut g = Mat4::zeros();
        g[(0, 0)] = sg * (self.lapse * self.lapse - self.shift.dot(&shift_up));
        for r in 0..3 {
            g[(0, r + 1)] = -sg * self.shift[r];
            g[(r + 1, 0)] = -sg * self.shift[r];
            for q in 0..3 {
                g[(r + 1, q + 1)] = -sg * self.g3[(r, q)];
            }
        }
        Ok(g)
    }
}

/// Covector `ε_{μαβγ} a^α b^β c^γ` (with `ε_{0123} = 1`).
fn epsilon_contraction(a: &FourVector, b: &FourVector, c: &FourVector) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (mu, slot) in out.iter_mut().enumerate() {
        let mut m = Mat4::zeros();
        m[(0, mu)] = 1.0;
        for k in 0..4 {
            m[(1, k)] = a[k];
            m[(2, k)] = b[k];
            m[(3, k)] = c[k];
        }
        *slot = m.determinant();
    }
    out
}

/// Future unit normal to the span of the spatial tangents.
pub fn unit_normal(t: &Tangents) -> Result<FourVector> {
    let n = epsilon_contraction(&t[1], &t[2], &t[3]);
    let scale = t[1].0.norm() * t[2].0.norm() * t[3].0.norm();
    let size = (n.iter().map(|x| x * x).sum::<f64>()).sqrt();
    if !(size > DEGENERACY_THRESHOLD * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateSurface { contraction: size / scale.max(f64::MIN_POSITIVE) });
    }
    // Raising with (+,-,-,-); the overall sign is fixed by orientation below.
    let l = FourVector::new(n[0], -n[1], -n[2], -n[3]);
    let q = l.dot_plus(&l);
    if q <= 0.0 {
        return Err(Error::Admissibility(format!(
            "surface is not spacelike (normal norm {:e})",
            q / (size * size)
        )));
    }
    let l = l * (1.0 / q.sqrt());
    Ok(if l.t() < 0.0 { -l } else { l })
}

fn metric_from_tangents(t: &Tangents, s: Signature) -> Mat4 {
    Mat4::from_fn(|a, b| t[a].dot(&t[b], s))
}

fn lapse_shift_g3(t: &Tangents, l: &FourVector) -> (f64, Vec3, Mat3) {
    // N = sgn (z_τ · l) = (z_τ · l)_(+---); the signature cancels.
    let lapse = t[0].dot_plus(l);
    let shift = Vec3::from_fn(|r, _| -t[0].dot_plus(&t[r + 1]));
    let g3 = Mat3::from_fn(|r, q| -t[r + 1].dot_plus(&t[q + 1]));
    (lapse, shift, g3)
}

/// Metric, normal, lapse, shift and (when `N > 0`) extrinsic curvature.
pub fn induced_geometry(e: &Embedding, tau: f64, sigma: &Vec3, s: Signature) -> Result<GeometryAtPoint> {
    let t = e.tangents(tau, sigma);
    let normal = unit_normal(&t)?;
    let (lapse, shift, g3) = lapse_shift_g3(&t, &normal);
    let extrinsic_curvature =
        if lapse > 0.0 { Some(extrinsic_curvature(e, tau, sigma, s)?) } else { None };
    Ok(GeometryAtPoint { metric: metric_from_tangents(&t, s), lapse, shift, g3, normal, extrinsic_curvature })
}

struct LocalData {
    lapse: f64,
    shift: Vec3,
    g3: Mat3,
}

fn local_data(e: &Embedding, tau: f64, sigma: &Vec3) -> Result<LocalData> {
    let t = e.tangents(tau, sigma);
    let l = unit_normal(&t)?;
    let (lapse, shift, g3) = lapse_shift_g3(&t, &l);
    Ok(LocalData { lapse, shift, g3 })
}

/// `K_rs = (N_{r|s} + N_{s|r} - ∂_τ ³g_rs) / 2N`, with the covariant
/// derivatives and `∂_τ` taken by central differences on a local stencil.
pub fn extrinsic_curvature(e: &Embedding, tau: f64, sigma: &Vec3, _s: Signature) -> Result<Mat3> {
    extrinsic_curvature_with_step(e, tau, sigma, DEFAULT_RELATIVE_STEP * e.scale())
}

pub fn extrinsic_curvature_with_step(e: &Embedding, tau: f64, sigma: &Vec3, h: f64) -> Result<Mat3> {
    let centre = local_data(e, tau, sigma)?;
    if !(centre.lapse > 0.0) {
        return Err(Error::Admissibility(format!("lapse N = {} is not positive", centre.lapse)));
    }
    let g_inv = centre
        .g3
        .try_inverse()
        .ok_or_else(|| Error::Admissibility("3-metric is singular".into()))?;

    // d_shift[(r, u)] = ∂_u N_r ; d_g3[u] = ∂_u ³g ; d_g3[3] = ∂_τ ³g
    let mut d_shift = Mat3::zeros();
    let mut d_g3 = [Mat3::zeros(); 4];
    for axis in 0..4 {
        let (tp, sp) = shift_point(tau, sigma, axis, h);
        let (tm, sm) = shift_point(tau, sigma, axis, -h);
        let plus = local_data(e, tp, &sp)?;
        let minus = local_data(e, tm, &sm)?;
        let dg = (plus.g3 - minus.g3) / (2.0 * h);
        if axis == 0 {
            d_g3[3] = dg;
        } else {
            d_g3[axis - 1] = dg;
            let ds = (plus.shift - minus.shift) / (2.0 * h);
            d_shift.set_column(axis - 1, &ds);
        }
    }

    let mut k = Mat3::zeros();
    for r in 0..3 {
        for q in 0..3 {
            // Γ^u_rq N_u = g^{uv} Γ_{v,rq} N_u
            let mut gamma_n = 0.0;
            for v in 0..3 {
                let christoffel_low = 0.5 * (d_g3[r][(v, q)] + d_g3[q][(v, r)] - d_g3[v][(r, q)]);
                let n_up_v: f64 = (0..3).map(|u| g_inv[(v, u)] * centre.shift[u]).sum();
                gamma_n += christoffel_low * n_up_v;
            }
            let cov = d_shift[(r, q)] + d_shift[(q, r)] - 2.0 * gamma_n;
            k[(r, q)] = (cov - d_g3[3][(r, q)]) / (2.0 * centre.lapse);
        }
    }
    Ok((k + k.transpose()) * 0.5)
}

// ---------------------------------------------------------------------------
// Eigen-parameterization of the 3-metric

/// Constant `γ_āa` (rows `a`, columns `ā`) with `Σ_a γ_āa = 0` and
/// `Σ_a γ_āa γ_b̄a = δ_āb̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaMatrix(pub Matrix3x2<f64>);

impl Default for GammaMatrix {
    fn default() -> Self {
        let a = 1.0 / 2f64.sqrt();
        let b = 1.0 / 6f64.sqrt();
        GammaMatrix(Matrix3x2::new(a, b, -a, b, 0.0, -2.0 * b))
    }
}

impl GammaMatrix {
    pub fn new(m: Matrix3x2<f64>) -> Result<Self> {
        let g = GammaMatrix(m);
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let sums = self.0.row_sum();
        let gram = self.0.transpose() * self.0;
        let defect = sums.abs().max().max((gram - nalgebra::Matrix2::identity()).abs().max());
        if defect > 1e-12 {
            return Err(Error::Domain(format!("gamma constants violate zero-sum/orthonormality by {defect:e}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEigenData {
    /// `√det ³g`.
    pub phi_tilde: f64,
    /// Square roots of the eigenvalues of `³g`, descending.
    pub lambda: [f64; 3],
    pub r_bar: [f64; 2],
    /// Z-Y-Z Euler angles of the diagonalizing rotation `V(θ)`.
    pub theta: [f64; 3],
    pub gamma: GammaMatrix,
}

/// `V(θ) = R_z(θ¹) R_y(θ²) R_z(θ³)`.
pub fn euler_zyz(theta: &[f64; 3]) -> Mat3 {
    let rz = |a: f64| {
        let (s, c) = a.sin_cos();
        Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    };
    let (s, c) = theta[1].sin_cos();
    let ry = Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
    rz(theta[0]) * ry * rz(theta[2])
}

fn euler_angles_zyz(v: &Mat3) -> [f64; 3] {
    let c2 = v[(2, 2)].clamp(-1.0, 1.0);
    let t2 = c2.acos();
    let s2 = (v[(0, 2)].powi(2) + v[(1, 2)].powi(2)).sqrt();
    if s2 > 1e-12 {
        [v[(1, 2)].atan2(v[(0, 2)]), t2, v[(2, 1)].atan2(-v[(2, 0)])]
    } else if c2 > 0.0 {
        [v[(1, 0)].atan2(v[(0, 0)]), 0.0, 0.0]
    } else {
        [(-v[(1, 0)]).atan2(-v[(0, 0)]), std::f64::consts::PI, 0.0]
    }
}

impl MetricEigenData {
    pub fn rotation(&self) -> Mat3 {
        euler_zyz(&self.theta)
    }

    /// `³g_rs = φ̃^{2/3} Σ_a exp(2 Σ_b̄ γ_b̄a R_b̄) V_ra V_sa`.
    pub fn reconstruct(&self) -> Mat3 {
        let v = self.rotation();
        let r = Vector2::new(self.r_bar[0], self.r_bar[1]);
        let exps = self.gamma.0 * r;
        let pref = self.phi_tilde.powf(2.0 / 3.0);
        let d = Mat3::from_diagonal(&exps.map(|x| pref * (2.0 * x).exp()));
        v * d * v.transpose()
    }
}

/// Decomposes an SPD 3-metric into `(φ̃, R_ā, θ^i)` with `λ_a² = eig(³g)`.
pub fn metric_eigendecomposition(g3: &Mat3, gamma: &GammaMatrix) -> Result<MetricEigenData> {
    gamma.validate()?;
    let asym = (g3 - g3.transpose()).abs().max();
    if asym > 1e-10 * g3.abs().max().max(1.0) {
        return Err(Error::Domain(format!("3-metric is not symmetric (defect {asym:e})")));
    }
    let eig = SymmetricEigen::new((g3 + g3.transpose()) * 0.5);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if let Some(bad) = evals.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("3-metric is not positive definite (eigenvalue {bad:e})")));
    }

    let spread = (evals[0] - evals[2]).abs() / evals[0];
    let v = if spread < 1e-13 {
        Mat3::identity()
    } else {
        let mut v = Mat3::zeros();
        for (col, &i) in order.iter().enumerate() {
            let mut vec = eig.eigenvectors.column(i).into_owned();
            // deterministic sign: largest component positive
            let imax = vec.iamax();
            if vec[imax] < 0.0 {
                vec = -vec;
            }
            v.set_column(col, &vec);
        }
        if v.determinant() < 0.0 {
            let c = -v.column(2).into_owned();
            v.set_column(2, &c);
        }
        v
    };

    let lambda = [evals[0].sqrt(), evals[1].sqrt(), evals[2].sqrt()];
    let log_l: Vec<f64> = lambda.iter().map(|x| x.ln()).collect();
    let log_phi: f64 = log_l.iter().sum();
    let y = nalgebra::Vector3::new(log_l[0] - log_phi / 3.0, log_l[1] - log_phi / 3.0, log_l[2] - log_phi / 3.0);
    // Least squares γ R = y through the 2x2 normal equations.
    let normal = gamma.0.transpose() * gamma.0;
    let rhs = gamma.0.transpose() * y;
    let r = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("gamma constants are rank deficient".into()))?;

    Ok(MetricEigenData {
        phi_tilde: log_phi.exp(),
        lambda,
        r_bar: [r[0], r[1]],
        theta: euler_angles_zyz(&v),
        gamma: *gamma,
    })
}

// ---------------------------------------------------------------------------
// Admissibility

/// Tolerance on the deviation of asymptotic normals.
pub const ASYMPTOTIC_NORMAL_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub sigma_min: [f64; 3],
    pub sigma_max: [f64; 3],
    pub n_sigma: [usize; 3],
    /// Nodes with `|σ| ≥ shell_radius` form the asymptotic shell. When
    /// absent, the shell is the set of nodes on the outer faces of the box.
    pub shell_radius: Option<f64>,
}

impl GridSpec {
    pub fn cube(half_width: f64, n: usize, tau_max: f64, n_tau: usize) -> Self {
        GridSpec {
            tau_min: 0.0,
            tau_max,
            n_tau,
            sigma_min: [-half_width; 3],
            sigma_max: [half_width; 3],
            n_sigma: [n; 3],
            shell_radius: None,
        }
    }

    /// Planar `σ³ = 0` slab, convenient for rotating families.
    pub fn plane(half_width: f64, n: usize, tau_max: f64, n_tau: usize) -> Self {
        GridSpec {
            tau_min: 0.0,
            tau_max,
            n_tau,
            sigma_min: [-half_width, -half_width, 0.0],
            sigma_max: [half_width, half_width, 0.0],
            n_sigma: [n, n, 1],
            shell_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tau == 0 || self.n_sigma.iter().any(|&n| n == 0) {
            return Err(Error::Domain("grid must contain at least one node per axis".into()));
        }
        if !(self.tau_max >= self.tau_min) || (0..3).any(|i| !(self.sigma_max[i] >= self.sigma_min[i])) {
            return Err(Error::Domain("grid bounds are inverted".into()));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.n_tau).map(|i| Self::axis(self.tau_min, self.tau_max, self.n_tau, i)).collect()
    }

    pub fn sigmas(&self) -> Vec<([usize; 3], Vec3)> {
        let mut out = Vec::with_capacity(self.n_sigma.iter().product());
        for i in 0..self.n_sigma[0] {
            for j in 0..self.n_sigma[1] {
                for k in 0..self.n_sigma[2] {
                    let idx = [i, j, k];
                    let s = Vec3::from_fn(|a, _| {
                        Self::axis(self.sigma_min[a], self.sigma_max[a], self.n_sigma[a], idx[a])
                    });
                    out.push((idx, s));
                }
            }
        }
        out
    }

    fn on_shell(&self, idx: &[usize; 3], sigma: &Vec3) -> bool {
        match self.shell_radius {
            Some(r) => sigma.norm() >= r,
            None => (0..3).any(|a| self.n_sigma[a] > 1 && (idx[a] == 0 || idx[a] == self.n_sigma[a] - 1)),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_tau * self.n_sigma.iter().product::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1: lapse, 2: `sgn g_ττ` or 3-metric, 3: asymptotic normal.
    pub condition: u8,
    pub tau: f64,
    pub sigma: [f64; 3],
    pub quantity: String,
    pub witness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub nodes_checked: usize,
    pub violations: Vec<Violation>,
    pub grid: GridSpec,
}

impl AdmissibilityReport {
    pub fn violations_of(&self, condition: u8) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.condition == condition)
    }
}

struct NodeOutcome {
    violations: Vec<Violation>,
    shell_normal: Option<FourVector>,
}

fn check_node(e: &Embedding, tau: f64, sigma: &Vec3, s: Signature, shell: bool) -> NodeOutcome {
    let sarr = [sigma.x, sigma.y, sigma.z];
    let v = |condition: u8, quantity: &str, witness: f64| Violation {
        condition,
        tau,
        sigma: sarr,
        quantity: quantity.to_string(),
        witness,
    };
    let mut violations = Vec::new();
    let t = e.tangents(tau, sigma);
    if t.iter().any(|x| !x.0.iter().all(|c| c.is_finite())) {
        violations.push(v(1, "non-finite tangents", f64::NAN));
        return NodeOutcome { violations, shell_normal: None };
    }

    let g_tt = t[0].dot(&t[0], s) * s.sgn();
    if !(g_tt > 0.0) {
        violations.push(v(2, "sgn*g_tautau", g_tt));
    }
    let g3 = Mat3::from_fn(|r, q| -t[r + 1].dot_plus(&t[q + 1]));
    let min_eig = SymmetricEigen::new(g3).eigenvalues.min();
    if !(min_eig > 0.0) {
        violations.push(v(2, "min eigenvalue of 3-metric", min_eig));
    }

    let mut shell_normal = None;
    match unit_normal(&t) {
        Ok(l) => {
            let lapse = t[0].dot_plus(&l);
            if !(lapse > 0.0) {
                violations.push(v(1, "lapse", lapse));
            }
            if shell {
                shell_normal = Some(l);
            }
        }
        Err(err) => {
            if min_eig > 0.0 {
                violations.push(v(1, &format!("lapse undefined: {err}"), f64::NAN));
            }
        }
    }
    NodeOutcome { violations, shell_normal }
}

/// Evaluates the three admissibility conditions at every grid node.
///
/// Condition 3 compares the unit normal at each asymptotic-shell node with
/// the normal at the first shell node of the first `τ` sample.
pub fn check_admissibility(e: &Embedding, grid: &GridSpec, s: Signature) -> Result<AdmissibilityReport> {
    grid.validate()?;
    let taus = grid.taus();
    let sigmas = grid.sigmas();
    let nodes: Vec<(f64, [usize; 3], Vec3)> = taus
        .iter()
        .flat_map(|&t| sigmas.iter().map(move |(idx, sg)| (t, *idx, *sg)))
        .collect();

    let outcomes: Vec<(f64, Vec3, NodeOutcome)> = nodes
        .par_iter()
        .map(|(tau, idx, sigma)| (*tau, *sigma, check_node(e, *tau, sigma, s, grid.on_shell(idx, sigma))))
        .collect();

    let mut violations: Vec<Violation> = Vec::new();
    let mut reference: Option<FourVector> = None;
    for (tau, sigma, outcome) in &outcomes {
        violations.extend(outcome.violations.iter().cloned());
        if let Some(l) = outcome.shell_normal {
            match reference {
                None => reference = Some(l),
                Some(l_ref) => {
                    let dev = (l - l_ref).0.abs().max();
                    if dev > ASYMPTOTIC_NORMAL_TOL {
                        violations.push(Violation {
                            condition: 3,
                            tau: *tau,
                            sigma: [sigma.x, sigma.y, sigma.z],
                            quantity: "asymptotic normal deviation".into(),
                            witness: dev,
                        });
                    }
                }
            }
        }
    }

    violations.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then(a.sigma[0].total_cmp(&b.sigma[0]))
            .then(a.sigma[1].total_cmp(&b.sigma[1]))
            .then(a.sigma[2].total_cmp(&b.sigma[2]))
            .then(a.condition.cmp(&b.condition))
            .then(a.quantity.cmp(&b.quantity))
    });
    Ok(AdmissibilityReport {
        passed: violations.is_empty(),
        nodes_checked: nodes.len(),
        violations,
        grid: grid.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SIGNATURES: [Signature; 2] = [Signature::Particle, Signature::Relativity];

    #[test]
    fn identity_geometry() {
        for s in SIGNATURES {
            let e = identity_embedding(1.0);
            let g = induced_geometry(&e, 0.3, &Vec3::new(1.0, -2.0, 0.5), s).unwrap();
            assert!((g.metric - s.metric()).abs().max() < 1e-15);
            assert_eq!(g.lapse, 1.0);
            assert_eq!(g.shift, Vec3::zeros());
            assert_eq!(g.normal, FourVector::new(1.0, 0.0, 0.0, 0.0));
            assert!((g.normal.dot(&g.normal, s) - s.sgn()).abs() < 1e-15);
            assert_eq!(g.extrinsic_curvature.unwrap(), Mat3::zeros());
        }
    }

    #[test]
    fn rigid_rotation_g_tautau() {
        // ω ρ / c = 0.5 ⇒ sgn g_ττ = 0.75
        let e = make_rotating_embedding(RotationKind::Rigid, 0.5, 1.0, 1.0).unwrap();
        for s in SIGNATURES {
            let g = induced_geometry(&e, 0.7, &Vec3::new(0.6, 0.8, 0.0), s).unwrap();
            assert_relative_eq!(s.sgn() * g.metric[(0, 0)], 0.75, epsilon = 1e-14);
        }
    }

    #[test]
    fn tilted_hyperplanes_are_a_boosted_identity() {
        let beta: f64 = 0.6;
        let e = Embedding::new(TiltedHyperplanes { beta, c: 1.0 });
        for sigma in [Vec3::zeros(), Vec3::new(3.0, -1.0, 2.0)] {
            let g = induced_geometry(&e, 1.5, &sigma, Signature::Particle).unwrap();
            assert_relative_eq!(g.lapse, 1.0, epsilon = 1e-14);
            assert!(g.shift.norm() < 1e-14);
            let gamma = 1.0 / (1.0 - beta * beta).sqrt();
            assert_relative_eq!(g.normal.0, FourVector::new(gamma, gamma * beta, 0.0, 0.0).0, epsilon = 1e-14);
        }
    }

    #[test]
    fn metric_identities_on_differential_rotation() {
        let e = make_rotating_embedding(RotationKind::Differential, 0.8, 1.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = SIGNATURES[rng.gen_range(0..2)];
            let sigma = Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-1.0..1.0));
            let g = induced_geometry(&e, rng.gen_range(-2.0..2.0), &sigma, s).unwrap();
            let rebuilt = g.reconstruct_metric(s).unwrap();
            assert!((rebuilt - g.metric).abs().max() < 1e-10);
            let t = e.tangents(0.0, &sigma);
            for r in 1..4 {
                assert!(g.normal.dot(&e.tangents(0.0, &sigma)[r], s).abs() < 1e-8 || t[r].0.norm() == 0.0);
            }
        }
    }

    #[test]
    fn normal_is_orthogonal_to_spatial_tangents() {
        let e = Embedding::new(WarpedRotating {
            base: RotatingEmbedding { kind: RotationKind::Differential, omega: 0.7, r0: 1.0, c: 1.0 },
            amplitude: 0.3,
            width: 1.2,
        });
        for s in SIGNATURES {
            let (tau, sigma) = (0.9, Vec3::new(0.4, -0.7, 0.3));
            let t = e.tangents(tau, &sigma);
            let g = induced_geometry(&e, tau, &sigma, s).unwrap();
            for r in 1..4 {
                assert!(g.normal.dot(&t[r], s).abs() < 1e-12);
            }
            assert!((g.normal.dot(&g.normal, s) - s.sgn()).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_tangents_are_rejected() {
        let t = [
            FourVector::new(1.0, 0.0, 0.0, 0.0),
            FourVector::new(0.0, 1.0, 0.0, 0.0),
            FourVector::new(0.0, 2.0, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ];
        assert!(matches!(unit_normal(&t), Err(Error::DegenerateSurface { .. })));
    }

    #[test]
    fn finite_differences_match_closed_form() {
        let map = RotatingEmbedding { kind: RotationKind::Differential, omega: 1.1, r0: 0.8, c: 1.0 };
        let closed = Embedding::new(map);
        let fd = Embedding::new(map).with_mode(DerivativeMode::FiniteDifference { step: 1e-4 });
        let (tau, sigma) = (0.6, Vec3::new(0.5, 0.9, -0.2));
        let a = closed.tangents(tau, &sigma);
        let b = fd.tangents(tau, &sigma);
        for k in 0..4 {
            assert!((a[k] - b[k]).0.abs().max() < 1e-7);
        }
    }

    #[test]
    fn finite_difference_order_is_two() {
        let map = WarpedRotating {
            base: RotatingEmbedding { kind: RotationKind::Differential, omega: 0.9, r0: 1.0, c: 1.0 },
            amplitude: 0.4,
            width: 1.0,
        };
        let e = Embedding::new(map);
        let (tau, sigma) = (0.8, Vec3::new(0.3, 0.6, 0.2));
        let exact = e.tangents(tau, &sigma);
        let err = |h: f64| {
            let t = e.fd_tangents(tau, &sigma, h);
            (0..4).map(|k| (t[k] - exact[k]).0.abs().max()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn parallel_hyperplanes_have_zero_curvature() {
        for e in [
            Embedding::new(TiltedHyperplanes { beta: 0.4, c: 1.0 }),
            make_rotating_embedding(RotationKind::Differential, 0.5, 1.0, 1.0).unwrap(),
        ] {
            let k = extrinsic_curvature(&e, 0.4, &Vec3::new(0.7, -0.2, 0.1), Signature::Particle).unwrap();
            assert!(k.abs().max() < 1e-6, "{k}");
        }
    }

    #[test]
    fn curvature_requires_positive_lapse() {
        let e = Embedding::new(LapseRamp { a: 1.0, c: 1.0 });
        let r = extrinsic_curvature(&e, 0.0, &Vec3::new(-2.0, 0.0, 0.0), Signature::Particle);
        assert!(matches!(r, Err(Error::Admissibility(_))));
    }

    #[test]
    fn eigendecomposition_of_identity() {
        let d = metric_eigendecomposition(&Mat3::identity(), &GammaMatrix::default()).unwrap();
        assert_relative_eq!(d.phi_tilde, 1.0, epsilon = 1e-15);
        assert_eq!(d.lambda, [1.0, 1.0, 1.0]);
        assert!(d.r_bar[0].abs() < 1e-15 && d.r_bar[1].abs() < 1e-15);
        assert_eq!(d.theta, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn eigendecomposition_of_diag_411() {
        let gamma = GammaMatrix::default();
        let d = metric_eigendecomposition(&Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0)), &gamma).unwrap();
        assert_relative_eq!(d.phi_tilde, 2.0, epsilon = 1e-14);
        assert_relative_eq!(d.lambda[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(d.lambda[1], 1.0, epsilon = 1e-14);
        // Independent 2x2 solve: γ_1a R_1 + γ_2a R_2 = ln λ_a - ln φ̃ / 3 for a = 1, 2.
        let y = |l: f64| l.ln() - 2f64.ln() / 3.0;
        let m = nalgebra::Matrix2::new(gamma.0[(0, 0)], gamma.0[(0, 1)], gamma.0[(1, 0)], gamma.0[(1, 1)]);
        let r = m.lu().solve(&Vector2::new(y(2.0), y(1.0))).unwrap();
        assert_relative_eq!(d.r_bar[0], r[0], epsilon = 1e-13);
        assert_relative_eq!(d.r_bar[1], r[1], epsilon = 1e-13);
        assert!((d.reconstruct() - Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0))).abs().max() < 1e-12);
    }

    #[test]
    fn eigendecomposition_rejects_indefinite() {
        let g = Mat3::from_diagonal(&Vec3::new(1.0, -0.5, 2.0));
        match metric_eigendecomposition(&g, &GammaMatrix::default()) {
            Err(Error::Domain(msg)) => assert!(msg.contains("-5e-1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_constraints_are_enforced() {
        assert!(GammaMatrix::default().validate().is_ok());
        assert!(GammaMatrix::new(Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn identity_passes_admissibility() {
        let e = identity_embedding(1.0);
        for grid in [GridSpec::cube(3.0, 5, 1.0, 3), GridSpec::plane(100.0, 9, 10.0, 2)] {
            let rep = check_admissibility(&e, &grid, Signature::Particle).unwrap();
            assert!(rep.passed);
            assert_eq!(rep.nodes_checked, grid.node_count());
        }
    }

    #[test]
    fn rigid_rotation_fails_beyond_light_cylinder() {
        let e = make_rotating_embedding(RotationKind::Rigid, 1.0, 1.0, 1.0).unwrap();
        let rep = check_admissibility(&e, &GridSpec::plane(2.0, 11, 1.0, 2), Signature::Particle).unwrap();
        assert!(!rep.passed);
        for v in &rep.violations {
            assert_eq!(v.condition, 2);
            let rho = (v.sigma[0].powi(2) + v.sigma[1].powi(2)).sqrt();
            assert!(rho >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn differential_rotation_passes() {
        let e = make_rotating_embedding(RotationKind::Differential, 1.0, 1.0, 2.0).unwrap();
        let rep = check_admissibility(&e, &GridSpec::plane(10.0, 21, 3.0, 3), Signature::Particle).unwrap();
        assert!(rep.passed, "{:?}", rep.violations.first());
    }

    #[test]
    fn lapse_zero_crossing_is_condition_one() {
        let e = Embedding::new(LapseRamp { a: 1.0, c: 1.0 });
        let mut grid = GridSpec::plane(2.0, 9, 0.0, 1);
        grid.sigma_max[1] = -2.0;
        grid.sigma_min[1] = -2.0;
        grid.n_sigma[1] = 1;
        let rep = check_admissibility(&e, &grid, Signature::Particle).unwrap();
        let bad: Vec<f64> = rep.violations_of(1).map(|v| v.sigma[0]).collect();
        assert_eq!(bad, vec![-2.0, -1.5, -1.0]);
    }

    #[test]
    fn tilted_lapse_ramp_breaks_asymptotic_condition() {
        let e = Embedding::new(LapseRamp { a: 0.1, c: 1.0 });
        let rep = check_admissibility(&e, &GridSpec::plane(2.0, 5, 1.0, 3), Signature::Particle).unwrap();
        assert!(rep.violations_of(3).count() > 0);
    }

    #[test]
    fn report_serializes_to_json() {
        let e = make_rotating_embedding(RotationKind::Rigid, 1.0, 1.0, 1.0).unwrap();
        let rep = check_admissibility(&e, &GridSpec::plane(2.0, 3, 0.0, 1), Signature::Particle).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: AdmissibilityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.passed, rep.passed);
        assert_eq!(back.violations.len(), rep.violations.len());
    }
}
