//! Independent reference solvers: a dense-grid Strang split-step integrator
//! and a direct Picard fixed-point iteration on the quadrature grid.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::duhamel::{lwp_radius, DuhamelEngine, QuadratureSpec};
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::lattice::{fl_norm, propagate, LatticePoint, SparseSpectrum, MAX_DIM};
use crate::nonlinearity::{Cubic, Nonlinearity, WickOrdered};
use crate::sum::NeumaierSum;

/// Default number of Strang steps per run.
pub const DEFAULT_STEPS: usize = 2048;

pub const DEFAULT_CUTOFF: usize = 64;

/// Relative energy allowed beyond two thirds of the cutoff.
pub const ALIASING_TOL: f64 = 1e-6;

/// Fourier coefficients on the full periodic lattice (Z/L)^d, L ≥ 2K+1 a
/// power of two, stored row-major in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid {
    dim: usize,
    cutoff: usize,
    side: usize,
    values: Vec<Complex64>,
}

impl DenseGrid {
    pub fn zeros(dim: usize, cutoff: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Domain(format!("dimension must be 1..={MAX_DIM}, got {dim}")));
        }
        if cutoff == 0 {
            return Err(Error::Domain("frequency cutoff must be positive".into()));
        }
        let side = (2 * cutoff + 1).next_power_of_two();
        let total = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= 1 << 26)
            .ok_or_else(|| Error::Resource(format!("dense grid {side}^{dim} too large")))?;
        Ok(Self { dim, cutoff, side, values: vec![Complex64::new(0.0, 0.0); total] })
    }

    /// Embeds `f`, whose support must lie within |ξ|_∞ ≤ K/2.
    pub fn from_spectrum(f: &SparseSpectrum, cutoff: usize) -> Result<Self> {
        let mut grid = Self::zeros(f.dim(), cutoff)?;
        if 2 * f.max_radius() > cutoff as i64 {
            return Err(Error::Domain(format!(
                "cutoff K = {cutoff} must be at least twice the support radius {}",
                f.max_radius()
            )));
        }
        for (p, z) in f.iter() {
            let idx = grid.index_of(p);
            grid.values[idx] = *z;
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn side(&self) -> usize {
        self.side
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.side; self.dim]
    }

    fn index_of(&self, p: &LatticePoint) -> usize {
        let l = self.side as i64;
        p.coords().iter().fold(0usize, |acc, &c| acc * self.side + (c as i64).rem_euclid(l) as usize)
    }

    /// Signed frequency of a flat index.
    fn point_of(&self, mut idx: usize) -> LatticePoint {
        let mut coords = [0i64; MAX_DIM];
        for a in (0..self.dim).rev() {
            let c = (idx % self.side) as i64;
            idx /= self.side;
            coords[a] = if c >= (self.side / 2) as i64 { c - self.side as i64 } else { c };
        }
        LatticePoint::new(&coords[..self.dim]).expect("grid frequencies fit the lattice")
    }

    pub fn to_spectrum(&self) -> SparseSpectrum {
        let entries: Vec<(LatticePoint, Complex64)> =
            self.values.iter().enumerate().map(|(i, z)| (self.point_of(i), *z)).collect();
        SparseSpectrum::from_entries(self.dim, entries).expect("dimension is valid")
    }

    /// Σ_ξ |û(ξ)|².
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).collect::<NeumaierSum>().value()
    }

    /// Share of the mass carried by modes with |ξ|_∞ > 2K/3.
    pub fn high_mode_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let edge = 2 * self.cutoff as i64 / 3;
        let high: NeumaierSum = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.point_of(*i).linf() > edge)
            .map(|(_, z)| z.norm_sqr())
            .collect();
        high.value() / total
    }

    fn check_aliasing(&self) -> Result<()> {
        let fraction = self.high_mode_fraction();
        if fraction > ALIASING_TOL {
            return Err(Error::Aliasing { fraction });
        }
        Ok(())
    }

    /// û ← e^{iτ|ξ|²} û.
    fn linear_step(&mut self, tau: f64) {
        let side = self.side;
        let dim = self.dim;
        self.values.par_iter_mut().enumerate().for_each(|(mut idx, z)| {
            let mut k2 = 0i64;
            for _ in 0..dim {
                let c = (idx % side) as i64;
                idx /= side;
                let c = if c >= (side / 2) as i64 { c - side as i64 } else { c };
                k2 += c * c;
            }
            *z *= Complex64::from_polar(1.0, tau * k2 as f64);
        });
    }

    /// Exact flow of ∂ₜu = i·rate(|u|², M)·u over τ; |u| is invariant
    /// pointwise and M with it.
    fn nonlinear_step(&mut self, tau: f64, nl: &dyn Nonlinearity) {
        let shape = self.shape();
        let mass = self.mass();
        let norm = 1.0 / self.values.len() as f64;
        fft_nd(&mut self.values, &shape, FftDirection::Inverse);
        self.values.par_iter_mut().for_each(|u| {
            let rate = nl.phase_rate(u.norm_sqr(), mass);
            *u *= Complex64::from_polar(norm, tau * rate);
        });
        fft_nd(&mut self.values, &shape, FftDirection::Forward);
    }
}

/// Time step and nonlinearity of the split-step integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub wick: bool,
}

impl StepperConfig {
    pub fn new(dt: f64, wick: bool) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, wick })
    }

    /// dt = t / 2048.
    pub fn for_time(t: f64, wick: bool) -> Result<Self> {
        Self::new(t / DEFAULT_STEPS as f64, wick)
    }
}

/// Strang split-step solution at time t: half linear step, exact nonlinear
/// rotation, half linear step. The step is shortened so that it divides t.
pub fn evolve(u0: &SparseSpectrum, t: f64, cfg: StepperConfig, cutoff: usize) -> Result<SparseSpectrum> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("evolution time must be finite and nonnegative, got {t}")));
    }
    let mut grid = DenseGrid::from_spectrum(u0, cutoff)?;
    if t == 0.0 || u0.is_empty() {
        return Ok(u0.clone());
    }
    let nl: &dyn Nonlinearity = if cfg.wick { &WickOrdered } else { &Cubic };
    let steps = (t / cfg.dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let guard_every = 64;
    grid.linear_step(0.5 * dt);
    for step in 0..steps {
        grid.nonlinear_step(dt, nl);
        grid.linear_step(if step + 1 == steps { 0.5 * dt } else { dt });
        if (step + 1) % guard_every == 0 {
            grid.check_aliasing()?;
        }
    }
    grid.check_aliasing()?;
    Ok(grid.to_spectrum())
}

/// J-th Picard iterate P_J = S(t)u₀ + 𝐈³[P_{J−1}] with the default engine.
pub fn picard_solve(u0: &SparseSpectrum, t: f64, iterations: usize, q: QuadratureSpec) -> Result<SparseSpectrum> {
    picard_solve_with(&DuhamelEngine::default(), u0, t, iterations, q)
}

/// Picard iteration on the quadrature grid. Fails when the FL¹ norm of the
/// increment P_j − P_{j−1} grows, which signals a time outside the
/// contraction regime.
pub fn picard_solve_with(
    engine: &DuhamelEngine,
    u0: &SparseSpectrum,
    t: f64,
    iterations: usize,
    q: QuadratureSpec,
) -> Result<SparseSpectrum> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
    }
    let radius = lwp_radius(u0);
    if t >= radius {
        return Err(Error::Domain(format!("t = {t} is not below the local existence time {radius}")));
    }
    let grid = q.grid(t);
    let linear: Vec<SparseSpectrum> = grid.iter().map(|&s| propagate(u0, s)).collect();
    let mut current = linear.clone();
    let mut last_increment = f64::INFINITY;
    for j in 1..=iterations {
        let duhamel = engine.integrate_on_grid(&current, &current, &current, &grid)?;
        let next: Vec<SparseSpectrum> =
            linear.iter().zip(&duhamel).map(|(l, d)| l.add(d)).collect::<Result<_>>()?;
        let m = grid.len() - 1;
        let increment = fl_norm(&next[m].sub(&current[m])?, 1.0)?;
        if j >= 2 && increment > last_increment {
            return Err(Error::Divergence(format!(
                "Picard increment grew from {last_increment:.3e} to {increment:.3e} at iteration {j}"
            )));
        }
        last_increment = increment;
        current = next;
    }
    Ok(current.pop().expect("grid is nonempty"))
}

/// Engine for the Wick or standard nonlinearity with the default kernel.
pub fn engine_for(wick: bool) -> DuhamelEngine {
    let nl: Arc<dyn Nonlinearity> = if wick { Arc::new(WickOrdered) } else { Arc::new(Cubic) };
    DuhamelEngine::new(nl, Arc::new(crate::convolution::AutoKernel::default()))
}

/// ‖a − b‖_{L²} / ‖b‖_{L²}.
pub fn relative_l2(a: &SparseSpectrum, b: &SparseSpectrum) -> Result<f64> {
    Ok(fl_norm(&a.sub(b)?, 2.0)? / fl_norm(b, 2.0)?)
}
