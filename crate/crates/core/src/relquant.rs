//! Spectrum of the two-body relative mass operator
//! `c√(m₁²c² + k²) + c√(m₂²c² + k²) − α c / |ρ|` (ħ = 1).
//!
//! Radial mode works with `u(r) = r ψ(r)` on `r_j = j L/(n+1)`, where the
//! orthonormal DST-I diagonalizes `−d²/dr²` with Dirichlet walls. Cartesian
//! mode uses a periodic box and FFTs. Energies are reported with the rest
//! energy `(m₁ + m₂)c²` removed (binding) and restored (total).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rustdct::{Dst1, DctPlanner};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::restframe::kinetic_excess;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridKind {
    Radial { ell: u32 },
    Cartesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelGrid {
    pub kind: GridKind,
    pub n_points: usize,
    pub length: f64,
}

impl RelGrid {
    pub fn radial(n_points: usize, length: f64, ell: u32) -> Self {
        RelGrid { kind: GridKind::Radial { ell }, n_points, length }
    }

    pub fn cartesian(n_points: usize, length: f64) -> Self {
        RelGrid { kind: GridKind::Cartesian, n_points, length }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 16 {
            return Err(Error::Domain(format!("n_points must be at least 16, got {}", self.n_points)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Domain(format!("box length must be positive, got {}", self.length)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Radial { .. } => self.length / (self.n_points + 1) as f64,
            GridKind::Cartesian => self.length / self.n_points as f64,
        }
    }

    /// Coulomb softening length `L / (4 n)`.
    pub fn softening(&self) -> f64 {
        self.length / (4.0 * self.n_points as f64)
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            GridKind::Radial { .. } => self.n_points,
            GridKind::Cartesian => self.n_points.pow(3),
        }
    }

    /// Radial nodes `r_j`, `j = 1..n`.
    pub fn radii(&self) -> Vec<f64> {
        let dr = self.spacing();
        (1..=self.n_points).map(|j| j as f64 * dr).collect()
    }

    /// Cartesian node coordinate along one axis.
    fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Periodic momentum lattice along one axis (FFT ordering).
    fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n_points as i64;
        let m = if (i as i64) < (n + 1) / 2 { i as i64 } else { i as i64 - n };
        2.0 * PI * m as f64 / self.length
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelParams {
    pub m1: f64,
    pub m2: f64,
    pub alpha: f64,
    pub c: f64,
}

impl RelParams {
    pub fn reduced_mass(&self) -> f64 {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    pub fn rest_energy(&self) -> f64 {
        (self.m1 + self.m2) * self.c * self.c
    }

    /// `−μ c² α² / 2`.
    pub fn bohr_binding(&self) -> f64 {
        -0.5 * self.reduced_mass() * self.c * self.c * self.alpha * self.alpha
    }

    /// Relative kinetic energy at momentum `k`, rest energy removed.
    pub fn kinetic(&self, k: f64) -> f64 {
        let k2 = k * k;
        kinetic_excess(self.m1, k2, self.c) + kinetic_excess(self.m2, k2, self.c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.c > 0.0) {
            return Err(Error::Domain("masses and c must be positive".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Domain("coupling must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Operator {
    Dense(DMatrix<f64>),
    Cartesian { kinetic: Vec<f64>, potential: Vec<f64>, fft: Arc<Fft3> },
}

#[derive(Clone, Debug)]
pub struct RelHamiltonian {
    pub grid: RelGrid,
    pub params: RelParams,
    pub softening: f64,
    pub warnings: Vec<String>,
    op: Operator,
}

/// Orthonormal DST-I on `n` points (an involution).
pub struct SineTransform {
    plan: Arc<dyn Dst1<f64>>,
    scale: f64,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        SineTransform { plan: DctPlanner::new().plan_dst1(n), scale: (2.0 / (n + 1) as f64).sqrt() }
    }

    pub fn apply(&self, buf: &mut [f64]) {
        self.plan.process_dst1(buf);
        for x in buf.iter_mut() {
            *x *= self.scale;
        }
    }
}

/// `S diag(f) S` for the orthonormal sine transform `S`.
fn sine_conjugated(n: usize, f: &[f64]) -> DMatrix<f64> {
    let dst = SineTransform::new(n);
    let mut m = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[j] = 1.0;
        dst.apply(&mut col);
        for (x, fq) in col.iter_mut().zip(f) {
            *x *= fq;
        }
        dst.apply(&mut col);
        m.set_column(j, &DVector::from_column_slice(&col));
    }
    (&m + m.transpose()) * 0.5
}

fn soft_coulomb(alpha: f64, c: f64, r: f64, eps: f64) -> f64 {
    -alpha * c / (r * r + eps * eps).sqrt()
}

pub fn build_hamiltonian(grid: &RelGrid, params: &RelParams) -> Result<RelHamiltonian> {
    grid.validate()?;
    params.validate()?;
    let mut warnings = Vec::new();
    if params.alpha <= 0.0 {
        warnings.push(format!("coupling α = {} is not attractive; no bound states expected", params.alpha));
    }
    let eps = grid.softening();
    let n = grid.n_points;
    let op = match grid.kind {
        GridKind::Radial { ell } => {
            let l = grid.length;
            let radii = grid.radii();
            let mut h = if ell == 0 {
                let t: Vec<f64> = (1..=n).map(|q| params.kinetic(q as f64 * PI / l)).collect();
                sine_conjugated(n, &t)
            } else {
                let k2: Vec<f64> = (1..=n).map(|q| (q as f64 * PI / l).powi(2)).collect();
                let mut p2 = sine_conjugated(n, &k2);
                let cent = (ell * (ell + 1)) as f64;
                for (j, r) in radii.iter().enumerate() {
                    p2[(j, j)] += cent / (r * r);
                }
                let eig = SymmetricEigen::try_new(p2, 1e-14, 10_000).ok_or_else(|| Error::EigenSolver {
                    iterations: 10_000,
                    detail: "momentum-squared operator did not diagonalize".into(),
                })?;
                let t = eig.eigenvalues.map(|x| params.kinetic(x.max(0.0).sqrt()));
                let v = &eig.eigenvectors;
                let m = v * DMatrix::from_diagonal(&t) * v.transpose();
                (&m + m.transpose()) * 0.5
            };
            for (j, r) in radii.iter().enumerate() {
                h[(j, j)] += soft_coulomb(params.alpha, params.c, *r, eps);
            }
            Operator::Dense(h)
        }
        GridKind::Cartesian => {
            let mut kinetic = Vec::with_capacity(n * n * n);
            let mut potential = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let kk = (grid.wavenumber(i).powi(2) + grid.wavenumber(j).powi(2) + grid.wavenumber(k).powi(2))
                            .sqrt();
                        kinetic.push(params.kinetic(kk));
                        let r = (grid.coordinate(i).powi(2) + grid.coordinate(j).powi(2) + grid.coordinate(k).powi(2))
                            .sqrt();
                        potential.push(soft_coulomb(params.alpha, params.c, r, eps));
                    }
                }
            }
            Operator::Cartesian { kinetic, potential, fft: Arc::new(Fft3::new(n)) }
        }
    };
    Ok(RelHamiltonian { grid: *grid, params: *params, softening: eps, warnings, op })
}

impl RelHamiltonian {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn dense(&self) -> Option<&DMatrix<f64>> {
        match &self.op {
            Operator::Dense(m) => Some(m),
            Operator::Cartesian { .. } => None,
        }
    }

    /// `H x` (binding part, rest energy removed).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.op {
            Operator::Dense(m) => (m * DVector::from_column_slice(x)).as_slice().to_vec(),
            Operator::Cartesian { kinetic, potential, fft } => {
                let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft.forward(&mut buf);
                let norm = 1.0 / buf.len() as f64;
                for (b, t) in buf.iter_mut().zip(kinetic) {
                    *b *= t * norm;
                }
                fft.inverse(&mut buf);
                buf.iter().zip(x).zip(potential).map(|((b, xv), v)| b.re + v * xv).collect()
            }
        }
    }
}

/// In-place 3-D FFT on a row-major `n³` cube.
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft3({})", self.n)
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn rustfft::Fft<f64>>) {
        let n = self.n;
        // last axis is contiguous
        plan.process(buf);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for stride in [n, n * n] {
            for base in 0..n * n * n {
                let axis_index = (base / stride) % n;
                if axis_index != 0 {
                    continue;
                }
                for (m, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + m * stride];
                }
                plan.process(&mut line);
                for (m, v) in line.iter().enumerate() {
                    buf[base + m * stride] = *v;
                }
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd)
    }

    /// Unnormalized inverse.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv)
    }
}

// ---------------------------------------------------------------------------
// Eigen-solvers

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub rest_energy: f64,
    /// `E_n − (m₁+m₂)c²`, ascending.
    pub binding: Vec<f64>,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.binding.iter().map(|b| self.rest_energy + b).collect()
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues of a symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64], k: usize) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    (0..k.min(n))
        .map(|idx| {
            let (mut a, mut b) = (lo - 1e-12 * span, hi + 1e-12 * span);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(d, e, mid) > idx {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

fn dense_lowest(m: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenSolver { iterations: 0, detail: "operator has non-finite entries".into() });
    }
    let tri = nalgebra::linalg::SymmetricTridiagonal::new(m.clone());
    let (d, e) = tri.unpack_tridiagonal();
    Ok(tridiagonal_lowest(d.as_slice(), e.as_slice(), k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub max_krylov: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_krylov: 400, tol: 1e-10, seed: 7 }
    }
}

/// Lowest `k` Ritz values of a symmetric operator, Lanczos with full
/// re-orthogonalization. Fails with the residuals when not converged.
pub fn lanczos_lowest<F: Fn(&[f64]) -> Vec<f64>>(
    apply: F,
    dim: usize,
    k: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let m_max = opts.max_krylov.min(dim);
    let mut last_residual = f64::INFINITY;

    for j in 0..m_max {
        let mut w = apply(&basis[j]);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let b = dot(&w, &w).sqrt();

        let check = j + 1 >= k && ((j + 1) % 10 == 0 || j + 1 == m_max || b < 1e-14);
        if check {
            let m = j + 1;
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
            let residuals: Vec<f64> = order[..k].iter().map(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs()).collect();
            last_residual = residuals.iter().cloned().fold(0.0, f64::max);
            if last_residual <= opts.tol * scale || b < 1e-14 {
                let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
                let vecs = order[..k]
                    .iter()
                    .map(|&i| {
                        let mut y = vec![0.0; dim];
                        for (r, q) in basis.iter().enumerate() {
                            let s = eig.eigenvectors[(r, i)];
                            y.iter_mut().zip(q).for_each(|(acc, x)| *acc += s * x);
                        }
                        y
                    })
                    .collect();
                return Ok((vals, vecs));
            }
        }
        if b < 1e-14 {
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    Err(Error::EigenSolver {
        iterations: m_max,
        detail: format!("Lanczos did not converge; largest Ritz residual {last_residual:e}"),
    })
}

/// Lowest `n_levels` eigenvalues, ascending.
pub fn spectrum(h: &RelHamiltonian, n_levels: usize) -> Result<Spectrum> {
    if n_levels == 0 || n_levels > h.dim() {
        return Err(Error::Domain(format!("n_levels must be in 1..={}, got {n_levels}", h.dim())));
    }
    let binding = match &h.op {
        Operator::Dense(m) => dense_lowest(m, n_levels)?,
        Operator::Cartesian { .. } => {
            lanczos_lowest(|x| h.apply(x), h.dim(), n_levels, &LanczosOptions::default())?.0
        }
    };
    Ok(Spectrum { rest_energy: h.params.rest_energy(), binding })
}

/// Lowest levels with their eigenvectors (columns).
pub fn eigenstates(h: &RelHamiltonian, n_levels: usize) -> Result<(Spectrum, DMatrix<f64>)> {
    if n_levels == 0 || n_levels > h.dim() {
        return Err(Error::Domain(format!("n_levels must be in 1..={}, got {n_levels}", h.dim())));
    }
    let (vals, vecs) = match &h.op {
        Operator::Dense(m) => {
            let eig = SymmetricEigen::try_new(m.clone(), 1e-14, 100_000).ok_or_else(|| Error::EigenSolver {
                iterations: 100_000,
                detail: "dense symmetric eigen-decomposition did not converge".into(),
            })?;
            let mut order: Vec<usize> = (0..m.nrows()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let vals: Vec<f64> = order[..n_levels].iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = DMatrix::from_fn(m.nrows(), n_levels, |r, c| eig.eigenvectors[(r, order[c])]);
            (vals, vecs)
        }
        Operator::Cartesian { .. } => {
            let (vals, vecs) = lanczos_lowest(|x| h.apply(x), h.dim(), n_levels, &LanczosOptions::default())?;
            let m = DMatrix::from_fn(h.dim(), n_levels, |r, c| vecs[c][r]);
            (vals, m)
        }
    };
    Ok((Spectrum { rest_energy: h.params.rest_energy(), binding: vals }, vecs))
}

// ---------------------------------------------------------------------------
// Non-relativistic finite-difference oracle

/// Levels of `−∇²/2μ − α c/√(r² + ε²)` by second-order finite differences on
/// the same grid and softening. Radial grids use Sturm bisection on the
/// tridiagonal matrix, cartesian grids Lanczos on the 7-point Laplacian.
pub fn nonrel_oracle(grid: &RelGrid, mu: f64, alpha: f64, c: f64, n_levels: usize) -> Result<Vec<f64>> {
    nonrel_oracle_refined(grid, mu, alpha, c, n_levels, 1)
}

/// Radial oracle on a `refine`-times finer mesh of the same box, keeping the
/// grid's softening, followed by Richardson extrapolation against the mesh
/// twice as coarse when `refine > 1`. Cartesian grids ignore `refine`.
pub fn nonrel_oracle_refined(
    grid: &RelGrid,
    mu: f64,
    alpha: f64,
    c: f64,
    n_levels: usize,
    refine: usize,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if refine == 0 {
        return Err(Error::Domain("refine must be at least 1".into()));
    }
    let eps = grid.softening();
    let radial_fd = |ell: u32, factor: usize| {
        let n = (grid.n_points + 1) * factor - 1;
        let h = grid.length / (n + 1) as f64;
        let kin = 1.0 / (2.0 * mu * h * h);
        let cent = (ell * (ell + 1)) as f64 / (2.0 * mu);
        let d: Vec<f64> = (1..=n)
            .map(|j| {
                let r = j as f64 * h;
                2.0 * kin + cent / (r * r) + soft_coulomb(alpha, c, r, eps)
            })
            .collect();
        let e = vec![-kin; n - 1];
        tridiagonal_lowest(&d, &e, n_levels)
    };
    let h = grid.spacing();
    let kin = 1.0 / (2.0 * mu * h * h);
    match grid.kind {
        GridKind::Radial { ell } => {
            let fine = radial_fd(ell, refine);
            if refine == 1 {
                return Ok(fine);
            }
            if refine % 2 != 0 {
                return Err(Error::Domain("refine must be 1 or even".into()));
            }
            let coarse = radial_fd(ell, refine / 2);
            Ok(fine.iter().zip(&coarse).map(|(f, g)| (4.0 * f - g) / 3.0).collect())
        }
        GridKind::Cartesian => {
            let n = grid.n_points;
            let pot: Vec<f64> = (0..n * n * n)
                .map(|idx| {
                    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                    let r = (grid.coordinate(i).powi(2) + grid.coordinate(j).powi(2) + grid.coordinate(k).powi(2))
                        .sqrt();
                    soft_coulomb(alpha, c, r, eps)
                })
                .collect();
            let apply = |x: &[f64]| {
                let mut y = vec![0.0; x.len()];
                for idx in 0..x.len() {
                    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                    let nb = |a: usize, b: usize, cc: usize| x[a * n * n + b * n + cc];
                    let sum = nb((i + 1) % n, j, k)
                        + nb((i + n - 1) % n, j, k)
                        + nb(i, (j + 1) % n, k)
                        + nb(i, (j + n - 1) % n, k)
                        + nb(i, j, (k + 1) % n)
                        + nb(i, j, (k + n - 1) % n);
                    y[idx] = kin * (6.0 * x[idx] - sum) + pot[idx] * x[idx];
                }
                y
            };
            Ok(lanczos_lowest(apply, n * n * n, n_levels, &LanczosOptions::default())?.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(alpha: f64) -> RelParams {
        RelParams { m1: 1.0, m2: 1.0, alpha, c: 1.0 }
    }

    #[test]
    fn sine_transform_is_an_orthonormal_involution() {
        let n = 37;
        let dst = SineTransform::new(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let mut y = x.clone();
        dst.apply(&mut y);
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        assert_relative_eq!(nx, ny, max_relative = 1e-13);
        dst.apply(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn free_radial_levels_are_the_momentum_lattice() {
        let grid = RelGrid::radial(64, 50.0, 0);
        let p = params(0.0);
        let h = build_hamiltonian(&grid, &p).unwrap();
        assert_eq!(h.warnings.len(), 1);
        let s = spectrum(&h, 5).unwrap();
        for (q, b) in s.binding.iter().enumerate() {
            assert_relative_eq!(*b, p.kinetic((q + 1) as f64 * PI / 50.0), max_relative = 1e-10);
        }
    }

    #[test]
    fn operator_is_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for grid in [RelGrid::radial(128, 100.0, 0), RelGrid::radial(64, 100.0, 2), RelGrid::cartesian(16, 20.0)] {
            let h = build_hamiltonian(&grid, &params(0.3)).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..h.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let hx = h.apply(&x);
                let hy = h.apply(&y);
                let a: f64 = y.iter().zip(&hx).map(|(u, v)| u * v).sum();
                let b: f64 = x.iter().zip(&hy).map(|(u, v)| u * v).sum();
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sturm_bisection_matches_dense_solver() {
        let d = [2.0, -1.0, 0.5, 3.0, 1.0];
        let e = [0.3, -0.7, 1.1, 0.2];
        let m = DMatrix::from_fn(5, 5, |r, c| {
            if r == c {
                d[r]
            } else if r + 1 == c {
                e[r]
            } else if c + 1 == r {
                e[c]
            } else {
                0.0
            }
        });
        let mut exact: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
        exact.sort_by(f64::total_cmp);
        let got = tridiagonal_lowest(&d, &e, 5);
        for (a, b) in exact.iter().zip(&got) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn oracle_reproduces_balmer_levels() {
        // μ = 0.5, α = 0.5 ⇒ Bohr radius 4, levels −1/(16 n²).
        let grid = RelGrid::radial(4000, 200.0, 0);
        let lv = nonrel_oracle(&grid, 0.5, 0.5, 1.0, 2).unwrap();
        for (n, e) in lv.iter().enumerate() {
            let exact = -0.0625 / ((n + 1) * (n + 1)) as f64;
            assert_relative_eq!(*e, exact, max_relative = 2e-3);
        }
    }

    #[test]
    fn oracle_free_particle_in_box() {
        let grid = RelGrid::radial(999, 10.0, 0);
        let lv = nonrel_oracle(&grid, 1.0, 0.0, 1.0, 3).unwrap();
        for (q, e) in lv.iter().enumerate() {
            let k = (q + 1) as f64 * PI / 10.0;
            assert_relative_eq!(*e, k * k / 2.0, max_relative = 1e-5);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let h = build_hamiltonian(&RelGrid::radial(256, 60.0, 0), &params(0.3)).unwrap();
        let (s, v) = eigenstates(&h, 4).unwrap();
        let gram = v.transpose() * &v;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-8);
        let fast = spectrum(&h, 4).unwrap();
        for (a, b) in s.binding.iter().zip(&fast.binding) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_hamiltonian(&RelGrid::radial(8, 1.0, 0), &params(0.1)).is_err());
        assert!(build_hamiltonian(&RelGrid::radial(32, -1.0, 0), &params(0.1)).is_err());
        let h = build_hamiltonian(&RelGrid::radial(32, 1.0, 0), &params(0.1)).unwrap();
        assert!(spectrum(&h, 33).is_err());
    }
}
