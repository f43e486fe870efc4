//! Name-keyed registries of interchangeable strategies: convolution kernels,
//! nonlinearities, Ξ₁ evaluators and solvers. Each registry maps a name to a
//! constructor taking shared options, so callers pick variants at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::convolution::{AutoKernel, ClusterFftKernel, ConvolutionKernel, DirectKernel};
use crate::duhamel::{xi1_exact_with, DuhamelEngine, QuadratureSpec};
use crate::error::{Error, Result};
use crate::lattice::{propagate, SparseSpectrum};
use crate::nonlinearity::{Cubic, Nonlinearity, WickOrdered};
use crate::oracle::{evolve, picard_solve_with, StepperConfig, DEFAULT_CUTOFF, DEFAULT_STEPS};

type Constructor<T, C> = Box<dyn Fn(&C) -> Result<Arc<T>> + Send + Sync>;

pub struct Registry<T: ?Sized, C = ()> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Constructor<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    /// Adds or replaces the constructor registered under `name`.
    pub fn register<F>(&mut self, name: &'static str, ctor: F) -> &mut Self
    where
        F: Fn(&C) -> Result<Arc<T>> + Send + Sync + 'static,
    {
        self.entries.insert(name, Box::new(ctor));
        self
    }

    pub fn build(&self, name: &str, options: &C) -> Result<Arc<T>> {
        let ctor = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy { kind: self.kind, name: name.to_string() })?;
        ctor(options)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }
}

impl<T: ?Sized> Registry<T, ()> {
    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.build(name, &())
    }
}

pub fn kernels() -> Registry<dyn ConvolutionKernel> {
    let mut r: Registry<dyn ConvolutionKernel> = Registry::new("convolution kernel");
    r.register("direct", |_| Ok(Arc::new(DirectKernel)));
    r.register("cluster-fft", |_| Ok(Arc::new(ClusterFftKernel::default())));
    r.register("auto", |_| Ok(Arc::new(AutoKernel::default())));
    r
}

pub fn nonlinearities() -> Registry<dyn Nonlinearity> {
    let mut r: Registry<dyn Nonlinearity> = Registry::new("nonlinearity");
    r.register("cubic", |_| Ok(Arc::new(Cubic)));
    r.register("wick", |_| Ok(Arc::new(WickOrdered)));
    r
}

/// Shared options for evaluators and solvers.
#[derive(Debug, Clone)]
pub struct StrategyOptions {
    pub nonlinearity: String,
    pub kernel: String,
    pub quadrature: QuadratureSpec,
    /// Series order J or Picard iteration count.
    pub order: usize,
    /// Split-step steps per run.
    pub steps: usize,
    pub cutoff: usize,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        Self {
            nonlinearity: "cubic".into(),
            kernel: "auto".into(),
            quadrature: QuadratureSpec::default(),
            order: 4,
            steps: DEFAULT_STEPS,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl StrategyOptions {
    pub fn engine(&self) -> Result<DuhamelEngine> {
        Ok(DuhamelEngine::new(nonlinearities().get(&self.nonlinearity)?, kernels().get(&self.kernel)?))
    }

    fn wick(&self) -> Result<bool> {
        match self.nonlinearity.as_str() {
            "cubic" => Ok(false),
            "wick" => Ok(true),
            other => Err(Error::UnknownStrategy { kind: "nonlinearity", name: other.to_string() }),
        }
    }
}

/// Computes the first series term Ξ₁(φ)(t).
pub trait Xi1Evaluator: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, phi: &SparseSpectrum, t: f64) -> Result<SparseSpectrum>;
}

/// Exact time integration per frequency triple; O(|supp φ|³).
pub struct ExactXi1 {
    pub wick: bool,
}

impl Xi1Evaluator for ExactXi1 {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn evaluate(&self, phi: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
        xi1_exact_with(phi, t, self.wick)
    }
}

/// Trapezoid quadrature with fast convolutions; scales to large supports.
pub struct QuadratureXi1 {
    pub engine: DuhamelEngine,
    pub quadrature: QuadratureSpec,
}

impl Xi1Evaluator for QuadratureXi1 {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn evaluate(&self, phi: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
        let flow = |s: f64| Ok(propagate(phi, s));
        self.engine.duhamel_integral(&flow, &flow, &flow, t, self.quadrature)
    }
}

pub fn xi1_evaluators() -> Registry<dyn Xi1Evaluator, StrategyOptions> {
    let mut r: Registry<dyn Xi1Evaluator, StrategyOptions> = Registry::new("xi1 evaluator");
    r.register("exact", |o| Ok(Arc::new(ExactXi1 { wick: o.wick()? })));
    r.register("quadrature", |o| Ok(Arc::new(QuadratureXi1 { engine: o.engine()?, quadrature: o.quadrature })));
    r
}

/// Approximates the solution u(t) from initial data u₀.
pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, u0: &SparseSpectrum, t: f64) -> Result<SparseSpectrum>;
}

/// Partial sum Σ_{j≤J} Ξ_j(u₀)(t) of the tree series.
pub struct TreeSeriesSolver {
    pub engine: DuhamelEngine,
    pub quadrature: QuadratureSpec,
    pub order: usize,
}

impl Solver for TreeSeriesSolver {
    fn name(&self) -> &'static str {
        "tree-series"
    }

    fn solve(&self, u0: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
        let table = self.engine.build_series(u0, self.order, t, self.quadrature)?;
        crate::duhamel::partial_sum(&table, table.last_node())
    }
}

pub struct PicardSolver {
    pub engine: DuhamelEngine,
    pub quadrature: QuadratureSpec,
    pub iterations: usize,
}

impl Solver for PicardSolver {
    fn name(&self) -> &'static str {
        "picard"
    }

    fn solve(&self, u0: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
        picard_solve_with(&self.engine, u0, t, self.iterations, self.quadrature)
    }
}

pub struct SplitStepSolver {
    pub steps: usize,
    pub cutoff: usize,
    pub wick: bool,
}

impl Solver for SplitStepSolver {
    fn name(&self) -> &'static str {
        "split-step"
    }

    fn solve(&self, u0: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
        if t == 0.0 {
            return Ok(u0.clone());
        }
        evolve(u0, t, StepperConfig::new(t / self.steps.max(1) as f64, self.wick)?, self.cutoff)
    }
}

pub fn solvers() -> Registry<dyn Solver, StrategyOptions> {
    let mut r: Registry<dyn Solver, StrategyOptions> = Registry::new("solver");
    r.register("tree-series", |o| {
        Ok(Arc::new(TreeSeriesSolver { engine: o.engine()?, quadrature: o.quadrature, order: o.order }))
    });
    r.register("picard", |o| {
        Ok(Arc::new(PicardSolver { engine: o.engine()?, quadrature: o.quadrature, iterations: o.order }))
    });
    r.register("split-step", |o| Ok(Arc::new(SplitStepSolver { steps: o.steps, cutoff: o.cutoff, wick: o.wick()? })));
    r
}
