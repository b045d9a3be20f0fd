//! Einstein synchronization along time-like world-lines and inversion of
//! foliation charts.

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::Embedding;
use crate::minkowski::{FourVector, Vec3};

pub trait Worldline: Send + Sync + fmt::Debug {
    /// Event at parameter `s` (proper time, in time units).
    fn position(&self, s: f64) -> FourVector;
    /// `dx^μ/ds`, normalized to `u·u = sgn c²`.
    fn velocity(&self, s: f64) -> FourVector;
    fn domain(&self) -> (f64, f64);
}

/// Checks that the velocity is future-pointing time-like on `n` samples.
pub fn validate_worldline(w: &dyn Worldline, n: usize) -> Result<()> {
    let (a, b) = w.domain();
    if !(b > a) {
        return Err(Error::Domain(format!("empty world-line domain [{a}, {b}]")));
    }
    for i in 0..n.max(2) {
        let s = a + (b - a) * i as f64 / (n.max(2) - 1) as f64;
        let u = w.velocity(s);
        if !(u.dot_plus(&u) > 0.0 && u.t() > 0.0) {
            return Err(Error::Domain(format!("world-line velocity is not future time-like at s = {s}")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct InertialObserver {
    pub origin: FourVector,
    pub beta: Vec3,
    pub c: f64,
    pub domain: (f64, f64),
}

impl InertialObserver {
    pub fn at_rest(c: f64, domain: (f64, f64)) -> Self {
        InertialObserver { origin: FourVector::zero(), beta: Vec3::zeros(), c, domain }
    }

    pub fn four_velocity(&self) -> FourVector {
        let g = 1.0 / (1.0 - self.beta.norm_squared()).sqrt();
        FourVector::from_parts(self.c * g, self.beta * (self.c * g))
    }
}

impl Worldline for InertialObserver {
    fn position(&self, s: f64) -> FourVector {
        self.origin + self.four_velocity() * s
    }

    fn velocity(&self, _s: f64) -> FourVector {
        self.four_velocity()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Uniform proper acceleration `a` along `x¹`:
/// `x = (c²/a) (sinh(a s/c), cosh(a s/c), 0, 0)`. The horizon is `x⁰ = x¹`.
#[derive(Clone, Copy, Debug)]
pub struct RindlerObserver {
    pub acceleration: f64,
    pub c: f64,
    pub domain: (f64, f64),
}

impl Worldline for RindlerObserver {
    fn position(&self, s: f64) -> FourVector {
        let k = self.c * self.c / self.acceleration;
        let x = self.acceleration * s / self.c;
        FourVector::new(k * x.sinh(), k * x.cosh(), 0.0, 0.0)
    }

    fn velocity(&self, s: f64) -> FourVector {
        let x = self.acceleration * s / self.c;
        FourVector::new(self.c * x.cosh(), self.c * x.sinh(), 0.0, 0.0)
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Piecewise cubic Hermite interpolation of sampled positions and velocities.
#[derive(Clone, Debug)]
pub struct SampledWorldline {
    s: Vec<f64>,
    x: Vec<FourVector>,
    u: Vec<FourVector>,
}

impl SampledWorldline {
    pub fn new(s: Vec<f64>, x: Vec<FourVector>, u: Vec<FourVector>) -> Result<Self> {
        if s.len() < 2 || s.len() != x.len() || s.len() != u.len() {
            return Err(Error::Domain("sampled world-line needs ≥ 2 consistent samples".into()));
        }
        if s.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Domain("sample parameters must be strictly increasing".into()));
        }
        Ok(SampledWorldline { s, x, u })
    }

    /// `n` uniform samples of `w` over its domain.
    pub fn resample(w: &dyn Worldline, n: usize) -> Result<Self> {
        let (a, b) = w.domain();
        let n = n.max(2);
        let s: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let x = s.iter().map(|&t| w.position(t)).collect();
        let u = s.iter().map(|&t| w.velocity(t)).collect();
        Self::new(s, x, u)
    }

    fn segment(&self, s: f64) -> (usize, f64, f64) {
        let i = match self.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.clamp(1, self.s.len() - 1) - 1,
        };
        let h = self.s[i + 1] - self.s[i];
        (i, (s - self.s[i]) / h, h)
    }
}

impl Worldline for SampledWorldline {
    fn position(&self, s: f64) -> FourVector {
        let (i, t, h) = self.segment(s);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.x[i] * h00 + self.u[i] * (h * h10) + self.x[i + 1] * h01 + self.u[i + 1] * (h * h11)
    }

    fn velocity(&self, s: f64) -> FourVector {
        let (i, t, h) = self.segment(s);
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (self.x[i] * d00 + self.x[i + 1] * d01) * (1.0 / h) + self.u[i] * d10 + self.u[i + 1] * d11
    }

    fn domain(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }
}

// ---------------------------------------------------------------------------
// Einstein synchronization

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarResult {
    pub tau_p: f64,
    pub s_emit: f64,
    pub s_absorb: f64,
    pub emit_event: FourVector,
    pub absorb_event: FourVector,
}

impl RadarResult {
    /// Scaled null residuals `|Δ·Δ| / |Δ|²` of the two signal legs.
    pub fn null_residuals(&self, p: &FourVector) -> (f64, f64) {
        let r = |d: FourVector| d.dot_plus(&d).abs() / d.0.norm_squared().max(f64::MIN_POSITIVE);
        (r(*p - self.emit_event), r(self.absorb_event - *p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncOptions {
    /// Number of uniform scan intervals over the world-line domain.
    pub scan_points: usize,
}

impl Default for SyncOptions {
    fn default() -> Self {
        SyncOptions { scan_points: 2048 }
    }
}

fn interval(w: &dyn Worldline, p: &FourVector, s: f64) -> f64 {
    let d = *p - w.position(s);
    d.dot_plus(&d)
}

/// Safeguarded Newton on a bracket `[a, b]` with `f(a) f(b) < 0`.
fn refine_root(w: &dyn Worldline, p: &FourVector, mut a: f64, mut b: f64) -> f64 {
    let mut fa = interval(w, p, a);
    let mut s = 0.5 * (a + b);
    for _ in 0..200 {
        let d = *p - w.position(s);
        let f = d.dot_plus(&d);
        if f == 0.0 {
            return s;
        }
        if (f < 0.0) == (fa < 0.0) {
            a = s;
            fa = f;
        } else {
            b = s;
        }
        let df = -2.0 * d.dot_plus(&w.velocity(s));
        let newton = s - f / df;
        let next = if df != 0.0 && newton > a.min(b) && newton < a.max(b) { newton } else { 0.5 * (a + b) };
        let tol = 4.0 * f64::EPSILON * s.abs().max(1.0);
        if (next - s).abs() <= tol || (b - a).abs() <= tol {
            return next;
        }
        s = next;
    }
    s
}

/// Radar time of `p` on `w`: the mid-point of the emission and absorption
/// parameters of light signals through `p`.
pub fn einstein_sync(w: &dyn Worldline, p: &FourVector) -> Result<RadarResult> {
    einstein_sync_with(w, p, &SyncOptions::default())
}

pub fn einstein_sync_with(w: &dyn Worldline, p: &FourVector, opts: &SyncOptions) -> Result<RadarResult> {
    let (s_min, s_max) = w.domain();
    let n = opts.scan_points.max(2);
    let no_solution = |reason: &str| Error::NoSolution { s_min, s_max, reason: reason.to_string() };

    let grid: Vec<f64> = (0..=n).map(|i| s_min + (s_max - s_min) * i as f64 / n as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&s| interval(w, p, s)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(no_solution("interval is not finite on the world-line domain"));
    }

    let mut emit: Option<f64> = None;
    let mut absorb: Option<f64> = None;
    for i in 0..n {
        let (fa, fb) = (values[i], values[i + 1]);
        let root = if fa == 0.0 {
            Some(grid[i])
        } else if fa * fb < 0.0 {
            Some(refine_root(w, p, grid[i], grid[i + 1]))
        } else {
            None
        };
        if let Some(s) = root {
            let dt = p.t() - w.position(s).t();
            if dt > 0.0 {
                emit.get_or_insert(s);
            } else if dt < 0.0 {
                absorb = Some(absorb.map_or(s, |a: f64| a.min(s)));
            }
        }
    }
    if values[n] == 0.0 {
        let dt = p.t() - w.position(grid[n]).t();
        if dt < 0.0 && absorb.is_none() {
            absorb = Some(grid[n]);
        }
    }

    match (emit, absorb) {
        (Some(se), Some(sa)) if se < sa => Ok(RadarResult {
            tau_p: 0.5 * (se + sa),
            s_emit: se,
            s_absorb: sa,
            emit_event: w.position(se),
            absorb_event: w.position(sa),
        }),
        (Some(_), Some(_)) => Err(no_solution("emission does not precede absorption")),
        (None, Some(_)) => Err(no_solution("no past light-cone intersection in domain")),
        (Some(_), None) => Err(no_solution("no future light-cone intersection in domain")),
        (None, None) => Err(no_solution("event is causally disconnected from the world-line segment")),
    }
}

pub fn einstein_sync_batch(w: &dyn Worldline, events: &[FourVector], opts: &SyncOptions) -> Vec<Result<RadarResult>> {
    events.par_iter().map(|p| einstein_sync_with(w, p, opts)).collect()
}

// ---------------------------------------------------------------------------
// Chart inversion

pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const MAX_STEP_HALVINGS: usize = 30;
/// Accepted residual, relative to `max(1, |x|_∞)`.
pub const INVERSION_TOL: f64 = 1e-9;

fn chart_residual(e: &Embedding, q: &Vector4<f64>, x: &FourVector) -> Vector4<f64> {
    (e.position(q[0], &Vec3::new(q[1], q[2], q[3])) - *x).0
}

/// Solves `z(τ, σ) = x` by damped Newton, starting at `guess = (τ, σ¹, σ², σ³)`.
pub fn radar_coordinates(e: &Embedding, x: &FourVector, guess: [f64; 4]) -> Result<[f64; 4]> {
    let scale = x.0.amax().max(1.0);
    let target = 1e-14 * scale;
    let accept = INVERSION_TOL * scale;
    let mut q = Vector4::from(guess);
    let mut r = chart_residual(e, &q, x);
    let mut res = r.amax();
    if !res.is_finite() {
        return Err(Error::Inversion { iterations: 0, residual: res });
    }

    for it in 0..MAX_NEWTON_ITERATIONS {
        if res <= target {
            return Ok(q.into());
        }
        let t = e.tangents(q[0], &Vec3::new(q[1], q[2], q[3]));
        let jac = Matrix4::from_fn(|mu, a| t[a][mu]);
        let col_scale = (0..4).map(|a| t[a].0.norm()).product::<f64>();
        if !(jac.determinant().abs() > 1e-14 * col_scale) {
            return Err(Error::Admissibility(format!(
                "singular chart Jacobian at (τ, σ) = ({}, {}, {}, {})",
                q[0], q[1], q[2], q[3]
            )));
        }
        let step = jac
            .lu()
            .solve(&(-r))
            .ok_or_else(|| Error::Admissibility("singular chart Jacobian".into()))?;

        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            let trial = q + step * lambda;
            let rt = chart_residual(e, &trial, x);
            let rt_max = rt.amax();
            if rt_max.is_finite() && rt_max < res {
                q = trial;
                r = rt;
                res = rt_max;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            return if res <= accept { Ok(q.into()) } else { Err(Error::Inversion { iterations: it + 1, residual: res }) };
        }
    }
    if res <= accept {
        Ok(q.into())
    } else {
        Err(Error::Inversion { iterations: MAX_NEWTON_ITERATIONS, residual: res })
    }
}
