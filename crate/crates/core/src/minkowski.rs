//! Minkowski space value types: events and momenta as 4-vectors, the flat
//! metric with selectable signature, Lorentz transformations and Wigner
//! rotations.
//!
//! All four components of a [`FourVector`] share one unit: events are stored
//! as `(c t, x, y, z)` and momenta as `(E / c, p)`. Contravariant matrices
//! `Λ^μ_ν` do not depend on the metric sign, so only contractions take a
//! [`Signature`].

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;

/// Sign convention of the flat metric `η = sgn · diag(+1, -1, -1, -1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Signature {
    /// `sgn = +1`, the particle-physics convention.
    Particle,
    /// `sgn = -1`, the general-relativity convention.
    Relativity,
}

impl Signature {
    #[inline]
    pub fn sgn(self) -> f64 {
        match self {
            Signature::Particle => 1.0,
            Signature::Relativity => -1.0,
        }
    }

    pub fn metric(self) -> Mat4 {
        Mat4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0)) * self.sgn()
    }
}

impl Default for Signature {
    fn default() -> Self {
        Signature::Particle
    }
}

impl TryFrom<i32> for Signature {
    type Error = String;

    fn try_from(value: i32) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(Signature::Particle),
            -1 => Ok(Signature::Relativity),
            other => Err(format!("signature must be +1 or -1, got {other}")),
        }
    }
}

impl From<Signature> for i32 {
    fn from(s: Signature) -> i32 {
        s.sgn() as i32
    }
}

/// Causal character of a 4-vector. Independent of the signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalType {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct FourVector(pub Vector4<f64>);

impl FourVector {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        FourVector(Vector4::new(x0, x1, x2, x3))
    }

    pub fn from_parts(x0: f64, spatial: Vec3) -> Self {
        FourVector::new(x0, spatial.x, spatial.y, spatial.z)
    }

    pub fn zero() -> Self {
        FourVector(Vector4::zeros())
    }

    /// On-shell momentum `(√(m²c² + k²), k)` for rest mass `m`.
    pub fn on_shell(mass: f64, c: f64, k: Vec3) -> Self {
        FourVector::from_parts((mass * mass * c * c + k.norm_squared()).sqrt(), k)
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn spatial(&self) -> Vec3 {
        Vec3::new(self.0[1], self.0[2], self.0[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    /// `sgn · (a⁰b⁰ - a·b)`.
    #[inline]
    pub fn dot(&self, other: &FourVector, s: Signature) -> f64 {
        s.sgn() * self.dot_plus(other)
    }

    /// Contraction in the `(+,-,-,-)` convention regardless of signature.
    #[inline]
    pub fn dot_plus(&self, other: &FourVector) -> f64 {
        self.0[0] * other.0[0] - self.0[1] * other.0[1] - self.0[2] * other.0[2]
            - self.0[3] * other.0[3]
    }

    /// Lowered components `η_μν v^ν`.
    pub fn lower(&self, s: Signature) -> FourVector {
        let g = s.sgn();
        FourVector::new(g * self.0[0], -g * self.0[1], -g * self.0[2], -g * self.0[3])
    }

    /// Classifies with a relative tolerance on `|v⁰|² + |v|²`.
    pub fn causal_type(&self, rel_tol: f64) -> CausalType {
        let q = self.dot_plus(self);
        let scale = self.0.norm_squared().max(f64::MIN_POSITIVE);
        if q.abs() <= rel_tol * scale {
            CausalType::Null
        } else if q > 0.0 {
            CausalType::Timelike
        } else {
            CausalType::Spacelike
        }
    }

    pub fn is_future_timelike(&self) -> bool {
        self.0[0] > 0.0 && self.dot_plus(self) > 0.0
    }

    /// Proper length `√(sgn v²)` of a timelike vector.
    pub fn invariant_norm(&self) -> Result<f64> {
        let q = self.dot_plus(self);
        if q > 0.0 {
            Ok(q.sqrt())
        } else {
            Err(Error::Domain(format!("vector {self} is not timelike (v² = {q:e})")))
        }
    }
}

/// Free function form of the flat contraction.
pub fn minkowski_dot(a: &FourVector, b: &FourVector, s: Signature) -> f64 {
    a.dot(b, s)
}

impl fmt::Display for FourVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector(self.0 + rhs.0)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector(self.0 - rhs.0)
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(-self.0)
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, k: f64) -> FourVector {
        FourVector(self.0 * k)
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, v: FourVector) -> FourVector {
        FourVector(v.0 * self)
    }
}

/// A homogeneous Lorentz transformation `x'^μ = Λ^μ_ν x^ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzTransform {
    matrix: Mat4,
}

impl LorentzTransform {
    pub fn identity() -> Self {
        LorentzTransform { matrix: Mat4::identity() }
    }

    /// Wraps a matrix after checking `Λᵀ η Λ = η` and proper orthochronicity.
    pub fn from_matrix(matrix: Mat4) -> Result<Self> {
        let t = LorentzTransform { matrix };
        let defect = t.metric_defect();
        if defect > 1e-9 {
            return Err(Error::Domain(format!("matrix is not a Lorentz transform (defect {defect:e})")));
        }
        if matrix[(0, 0)] < 1.0 - 1e-12 || matrix.determinant() < 0.0 {
            return Err(Error::Domain("transform is not proper orthochronous".into()));
        }
        Ok(t)
    }

    /// Pure boost mapping `(Mc, 0)` to `Mc (√(1 + h²), h)`.
    ///
    /// `h` is the momentum-per-mass vector; `v / c = h / √(1 + h²)`.
    pub fn boost_from_h(h: &Vec3) -> Self {
        let gamma = (1.0 + h.norm_squared()).sqrt();
        let mut m = Mat4::identity();
        m[(0, 0)] = gamma;
        for i in 0..3 {
            m[(0, i + 1)] = h[i];
            m[(i + 1, 0)] = h[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] += h[i] * h[j] / (1.0 + gamma);
            }
        }
        LorentzTransform { matrix: m }
    }

    /// Boost with rapidity `xi` along the unit direction `axis`.
    pub fn boost_rapidity(axis: &Vec3, xi: f64) -> Self {
        let n = axis.normalize();
        LorentzTransform::boost_from_h(&(n * xi.sinh()))
    }

    /// Boost to velocity `beta = v / c`, `|beta| < 1`.
    pub fn boost_velocity(beta: &Vec3) -> Result<Self> {
        let b2 = beta.norm_squared();
        if b2 >= 1.0 {
            return Err(Error::Domain(format!("|v|/c = {} is not subluminal", b2.sqrt())));
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        Ok(LorentzTransform::boost_from_h(&(beta * gamma)))
    }

    /// Standard boost `B(p)` taking the rest frame of `p` to the frame where
    /// it has momentum `p`, with `h = p / √(sgn p²)`.
    pub fn standard_boost(p: &FourVector) -> Result<Self> {
        if !p.is_future_timelike() {
            return Err(Error::Domain(format!("{p} is not future-pointing timelike")));
        }
        let m = p.invariant_norm()?;
        Ok(LorentzTransform::boost_from_h(&(p.spatial() / m)))
    }

    pub fn rotation(r: &Mat3) -> Self {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
        LorentzTransform { matrix: m }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        FourVector(self.matrix * v.0)
    }

    /// `Λ J Λᵀ` for a rank-2 contravariant tensor.
    pub fn apply_tensor(&self, j: &Mat4) -> Mat4 {
        self.matrix * j * self.matrix.transpose()
    }

    pub fn compose(&self, other: &LorentzTransform) -> LorentzTransform {
        LorentzTransform { matrix: self.matrix * other.matrix }
    }

    /// `Λ⁻¹ = η Λᵀ η` (with `η = diag(1,-1,-1,-1)`; the overall sign cancels).
    pub fn inverse(&self) -> LorentzTransform {
        let eta = Signature::Particle.metric();
        LorentzTransform { matrix: eta * self.matrix.transpose() * eta }
    }

    /// `max |Λᵀ η Λ - η|` componentwise.
    pub fn metric_defect(&self) -> f64 {
        let eta = Signature::Particle.metric();
        (self.matrix.transpose() * eta * self.matrix - eta).abs().max()
    }

    /// Spatial block, meaningful when the transform fixes the time axis.
    pub fn spatial_block(&self) -> Mat3 {
        self.matrix.fixed_view::<3, 3>(1, 1).into_owned()
    }
}

impl Mul for LorentzTransform {
    type Output = LorentzTransform;
    fn mul(self, rhs: LorentzTransform) -> LorentzTransform {
        self.compose(&rhs)
    }
}

/// Wigner rotation `R(Λ, p) = B⁻¹(Λp) Λ B(p)`.
pub fn wigner_rotation(p: &FourVector, lambda: &LorentzTransform) -> Result<Mat3> {
    let bp = LorentzTransform::standard_boost(p)?;
    let blp = LorentzTransform::standard_boost(&lambda.apply(p))?;
    let w = blp.inverse() * *lambda * bp;
    Ok(w.spatial_block())
}

/// Rotation by `angle` about the unit axis (Rodrigues form).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}

/// Levi-Civita symbol `ε_{ijk}` for 0-based indices.
pub(crate) fn levi_civita3(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
