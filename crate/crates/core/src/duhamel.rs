//! The trilinear Duhamel operator 𝐈[u₁,u₂,u₃](t) = i ∫₀ᵗ S(t−t′)[u₁ ū₂ u₃](t′) dt′
//! and everything built from it: tree terms Ψ, the series terms Ξ_j, the
//! closed form of Ξ₁ and the memoized series table.
//!
//! Time integrals use a composite trapezoid rule in the interaction picture:
//! the integrand S(−t′)[u₁ ū₂ u₃](t′) only oscillates at the resonance
//! frequency ω, which stays small for t ≪ N^{−2}.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::convolution::{AutoKernel, ConvolutionKernel};
use crate::error::{Error, Result};
use crate::lattice::{fl_norm, propagate, LatticePoint, SparseSpectrum, MAX_DIM};
use crate::nonlinearity::{Cubic, Nonlinearity};
use crate::trees::{compositions, enumerate_trees, TernaryTree};

/// Contraction constant κ in T = κ ‖u₀‖_{FL¹}^{−2}.
pub const LWP_KAPPA: f64 = 1.0 / 16.0;

/// |ω| below this is treated as exactly resonant.
pub const OMEGA_EPS: f64 = 1e-12;

pub const DEFAULT_NODES: usize = 256;

/// Default cap on the support size of any intermediate spectrum.
pub const DEFAULT_SUPPORT_CAP: usize = 20_000_000;

/// Composite trapezoid rule with `nodes` uniform subintervals on [0, t].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    nodes: usize,
}

impl QuadratureSpec {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Domain(format!("quadrature needs at least 2 subintervals, got {nodes}")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// The M+1 grid points 0 = t₀ < … < t_M = t.
    pub fn grid(&self, t: f64) -> Vec<f64> {
        (0..=self.nodes).map(|m| t * m as f64 / self.nodes as f64).collect()
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES }
    }
}

/// K(ω, t) = ∫₀ᵗ e^{−it′ω} dt′ = (1 − e^{−itω})/(iω), with K(0, t) = t.
pub fn resonance_integral(omega: f64, t: f64) -> Complex64 {
    if omega.abs() < OMEGA_EPS {
        return Complex64::new(t, 0.0);
    }
    let x = t * omega;
    // (1 − e^{−ix})/(iω) = (sin x + i(cos x − 1))/ω, with cos x − 1 = −2 sin²(x/2).
    let half = (0.5 * x).sin();
    Complex64::new(x.sin() / omega, -2.0 * half * half / omega)
}

/// ω = |ξ|² − |ξ₁|² + |ξ₂|² − |ξ₃|² = 2(ξ₁ − ξ₂)·(ξ₃ − ξ₂) for ξ = ξ₁ − ξ₂ + ξ₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePhase {
    pub xi: LatticePoint,
    pub xi1: LatticePoint,
    pub xi2: LatticePoint,
    pub xi3: LatticePoint,
    pub omega: f64,
}

impl ResonancePhase {
    pub fn new(xi1: LatticePoint, xi2: LatticePoint, xi3: LatticePoint) -> Self {
        let xi = xi1.sub(&xi2).add(&xi3);
        let omega = 2 * xi1.sub(&xi2).dot(&xi3.sub(&xi2));
        Self { xi, xi1, xi2, xi3, omega: omega as f64 }
    }

    pub fn time_integral(&self, t: f64) -> Complex64 {
        resonance_integral(self.omega, t)
    }
}

/// Local well-posedness time κ‖u₀‖_{FL¹}^{−2}; infinite for zero data.
pub fn lwp_radius(u0: &SparseSpectrum) -> f64 {
    let n = fl_norm(u0, 1.0).expect("p = 1 is valid");
    if n == 0.0 {
        f64::INFINITY
    } else {
        LWP_KAPPA / (n * n)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("evaluation time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Values Ξ_j(φ)(t_m) for j ≤ J on the quadrature grid.
#[derive(Debug, Clone)]
pub struct SeriesTable {
    grid: Vec<f64>,
    values: Vec<Vec<SparseSpectrum>>,
}

impl SeriesTable {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn last_node(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn value(&self, j: usize, m: usize) -> &SparseSpectrum {
        &self.values[j][m]
    }

    pub fn level(&self, j: usize) -> &[SparseSpectrum] {
        &self.values[j]
    }

    /// Ξ_j at the final time.
    pub fn final_term(&self, j: usize) -> &SparseSpectrum {
        &self.values[j][self.last_node()]
    }
}

/// Σ_{j=0}^{J} Ξ_j(φ)(t_m).
pub fn partial_sum(table: &SeriesTable, m: usize) -> Result<SparseSpectrum> {
    partial_sum_range(table, 0, table.order(), m)
}

/// Σ_{j=lo}^{hi} Ξ_j(φ)(t_m); empty ranges give the zero spectrum.
pub fn partial_sum_range(table: &SeriesTable, lo: usize, hi: usize, m: usize) -> Result<SparseSpectrum> {
    let dim = table.values[0][0].dim();
    let mut acc: HashMap<LatticePoint, Complex64> = HashMap::new();
    for j in lo..=hi.min(table.order()) {
        for (p, z) in table.values[j][m].iter() {
            *acc.entry(*p).or_default() += z;
        }
    }
    SparseSpectrum::from_entries(dim, acc)
}

/// Series terms retained only at selected grid nodes.
#[derive(Debug, Clone)]
pub struct SeriesSnapshots {
    pub grid: Vec<f64>,
    pub nodes: Vec<usize>,
    /// `terms[k][j]` is Ξ_j at `grid[nodes[k]]`.
    pub terms: Vec<Vec<SparseSpectrum>>,
}

/// Evaluator for Duhamel integrals with a chosen nonlinearity and
/// convolution strategy.
#[derive(Clone)]
pub struct DuhamelEngine {
    nonlinearity: Arc<dyn Nonlinearity>,
    kernel: Arc<dyn ConvolutionKernel>,
    support_cap: usize,
}

impl Default for DuhamelEngine {
    fn default() -> Self {
        Self::new(Arc::new(Cubic), Arc::new(AutoKernel::default()))
    }
}

impl std::fmt::Debug for DuhamelEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DuhamelEngine")
            .field("nonlinearity", &self.nonlinearity.name())
            .field("kernel", &self.kernel.name())
            .field("support_cap", &self.support_cap)
            .finish()
    }
}

type Integrand<'a> = dyn Fn(usize) -> Result<SparseSpectrum> + Sync + 'a;

impl DuhamelEngine {
    pub fn new(nonlinearity: Arc<dyn Nonlinearity>, kernel: Arc<dyn ConvolutionKernel>) -> Self {
        Self { nonlinearity, kernel, support_cap: DEFAULT_SUPPORT_CAP }
    }

    pub fn with_support_cap(mut self, cap: usize) -> Self {
        self.support_cap = cap;
        self
    }

    pub fn nonlinearity(&self) -> &dyn Nonlinearity {
        self.nonlinearity.as_ref()
    }

    pub fn kernel(&self) -> &dyn ConvolutionKernel {
        self.kernel.as_ref()
    }

    pub fn trilinear(&self, f1: &SparseSpectrum, f2: &SparseSpectrum, f3: &SparseSpectrum) -> Result<SparseSpectrum> {
        let out = self.nonlinearity.trilinear(f1, f2, f3, self.kernel.as_ref())?;
        self.check_cap(&out)?;
        Ok(out)
    }

    fn check_cap(&self, f: &SparseSpectrum) -> Result<()> {
        if f.len() > self.support_cap {
            return Err(Error::Resource(format!(
                "support of {} frequencies exceeds the cap of {}",
                f.len(),
                self.support_cap
            )));
        }
        Ok(())
    }

    /// Cumulative trapezoid of i S(t_m − t′) F(t′) over the grid, where
    /// `integrand(m)` returns F(t_m). Outputs are materialized only at nodes
    /// accepted by `keep`.
    fn cumulative(
        &self,
        dim: usize,
        grid: &[f64],
        integrand: &Integrand<'_>,
        keep: &dyn Fn(usize) -> bool,
    ) -> Result<Vec<Option<SparseSpectrum>>> {
        let chunk = (2 * rayon::current_num_threads()).max(4);
        let mut acc: HashMap<LatticePoint, Complex64> = HashMap::new();
        let mut out = Vec::with_capacity(grid.len());
        let mut prev: Option<SparseSpectrum> = None;
        let mut start = 0;
        while start < grid.len() {
            let end = (start + chunk).min(grid.len());
            // Interaction-picture integrands S(−t_m) F(t_m), computed in parallel.
            let block: Vec<SparseSpectrum> = (start..end)
                .into_par_iter()
                .map(|m| integrand(m).map(|f| propagate(&f, -grid[m])))
                .collect::<Result<_>>()?;
            for (offset, g) in block.into_iter().enumerate() {
                let m = start + offset;
                if m > 0 {
                    let w = 0.5 * (grid[m] - grid[m - 1]);
                    for src in [prev.as_ref(), Some(&g)].into_iter().flatten() {
                        for (p, z) in src.iter() {
                            *acc.entry(*p).or_default() += z * w;
                        }
                    }
                }
                if keep(m) {
                    let t = grid[m];
                    let mut entries: Vec<(LatticePoint, Complex64)> = acc
                        .iter()
                        .map(|(p, z)| (*p, Complex64::new(0.0, 1.0) * z * Complex64::from_polar(1.0, t * p.norm_sq() as f64)))
                        .collect();
                    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                    let value = SparseSpectrum::from_sorted(dim, entries);
                    self.check_cap(&value)?;
                    out.push(Some(value));
                } else {
                    out.push(None);
                }
                prev = Some(g);
            }
            start = end;
        }
        Ok(out)
    }

    /// 𝐈[u₁,u₂,u₃](t_m) for every grid node, given the three arguments
    /// sampled on the same grid.
    pub fn integrate_on_grid(
        &self,
        u1: &[SparseSpectrum],
        u2: &[SparseSpectrum],
        u3: &[SparseSpectrum],
        grid: &[f64],
    ) -> Result<Vec<SparseSpectrum>> {
        if [u1.len(), u2.len(), u3.len()].iter().any(|&n| n != grid.len()) {
            return Err(Error::Domain("arguments must be sampled on the integration grid".into()));
        }
        let dim = u1.first().map(|f| f.dim()).ok_or(Error::Domain("empty grid".into()))?;
        let integrand = |m: usize| self.trilinear(&u1[m], &u2[m], &u3[m]);
        let vals = self.cumulative(dim, grid, &integrand, &|_| true)?;
        Ok(vals.into_iter().map(|v| v.expect("all nodes kept")).collect())
    }

    /// i ∫₀ᵗ S(t−t′)[u₁ ū₂ u₃](t′) dt′ for time-indexed arguments.
    pub fn duhamel_integral(
        &self,
        u1: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
        u2: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
        u3: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
        t: f64,
        q: QuadratureSpec,
    ) -> Result<SparseSpectrum> {
        check_time(t)?;
        let grid = q.grid(t);
        let dim = u1(0.0)?.dim();
        if t == 0.0 {
            return SparseSpectrum::zero(dim);
        }
        let integrand = |m: usize| {
            let s = grid[m];
            self.trilinear(&u1(s)?, &u2(s)?, &u3(s)?)
        };
        let last = grid.len() - 1;
        let mut vals = self.cumulative(dim, &grid, &integrand, &|m| m == last)?;
        Ok(vals.pop().flatten().expect("last node kept"))
    }

    /// Ψ(𝒯; φ₁, …, φ_{2j+1}) on every grid node.
    pub fn psi_trajectory(&self, tree: &TernaryTree, leaves: &[SparseSpectrum], grid: &[f64]) -> Result<Vec<SparseSpectrum>> {
        if leaves.len() != tree.leaves() {
            return Err(Error::Arity { expected: tree.leaves(), got: leaves.len() });
        }
        match tree {
            TernaryTree::Leaf => Ok(grid.iter().map(|&t| propagate(&leaves[0], t)).collect()),
            TernaryTree::Node(children) => {
                let mut offset = 0;
                let mut traj = Vec::with_capacity(3);
                for child in children.iter() {
                    let n = child.leaves();
                    traj.push(self.psi_trajectory(child, &leaves[offset..offset + n], grid)?);
                    offset += n;
                }
                self.integrate_on_grid(&traj[0], &traj[1], &traj[2], grid)
            }
        }
    }

    /// Ψ(𝒯; φ₁, …, φ_{2j+1})(t); leaves are assigned left to right.
    pub fn psi_eval(&self, tree: &TernaryTree, leaves: &[SparseSpectrum], t: f64, q: QuadratureSpec) -> Result<SparseSpectrum> {
        check_time(t)?;
        if leaves.len() != tree.leaves() {
            return Err(Error::Arity { expected: tree.leaves(), got: leaves.len() });
        }
        if let Some(first) = leaves.first() {
            if let Some(bad) = leaves.iter().find(|l| l.dim() != first.dim()) {
                return Err(Error::DimensionMismatch { left: first.dim(), right: bad.dim() });
            }
        }
        let mut traj = self.psi_trajectory(tree, leaves, &q.grid(t))?;
        Ok(traj.pop().expect("grid is nonempty"))
    }

    /// Σ_{𝒯 ∈ 𝐓(j)} Ψ_φ(𝒯)(t) evaluated tree by tree.
    pub fn tree_sum(&self, phi: &SparseSpectrum, j: usize, t: f64, q: QuadratureSpec) -> Result<SparseSpectrum> {
        let leaves = vec![phi.clone(); 2 * j + 1];
        let mut total = SparseSpectrum::zero(phi.dim())?;
        for tree in enumerate_trees(j)? {
            total = total.add(&self.psi_eval(&tree, &leaves, t, q)?)?;
        }
        Ok(total)
    }

    /// Integrand of level j at node m: Σ_{j₁+j₂+j₃=j−1} 𝒩(Ξ_{j₁}, Ξ_{j₂}, Ξ_{j₃}).
    /// Both nonlinearities are symmetric in the outer slots, so (a, b, c)
    /// and (c, b, a) are evaluated once.
    fn level_integrand(&self, levels: &[Vec<SparseSpectrum>], j: usize, m: usize) -> Result<SparseSpectrum> {
        let dim = levels[0][m].dim();
        let mut acc: HashMap<LatticePoint, Complex64> = HashMap::new();
        for (a, b, c) in compositions(j - 1) {
            if a > c {
                continue;
            }
            let weight = if a == c { 1.0 } else { 2.0 };
            let term = self.trilinear(&levels[a][m], &levels[b][m], &levels[c][m])?;
            for (p, z) in term.iter() {
                *acc.entry(*p).or_default() += z * weight;
            }
        }
        let mut entries: Vec<_> = acc.into_iter().collect();
        entries.sort_unstable_by(|x, y| x.0.cmp(&y.0));
        Ok(SparseSpectrum::from_sorted(dim, entries))
    }

    /// Fills Ξ_j(φ)(t_m) for j ≤ J on the quadrature grid by the recursion
    /// Ξ_j = Σ_{j₁+j₂+j₃=j−1} 𝐈[Ξ_{j₁}, Ξ_{j₂}, Ξ_{j₃}].
    pub fn build_series(&self, phi: &SparseSpectrum, order: usize, t: f64, q: QuadratureSpec) -> Result<SeriesTable> {
        check_time(t)?;
        let grid = q.grid(t);
        let mut levels: Vec<Vec<SparseSpectrum>> = vec![grid.iter().map(|&s| propagate(phi, s)).collect()];
        for j in 1..=order {
            let integrand = |m: usize| self.level_integrand(&levels, j, m);
            let vals = self.cumulative(phi.dim(), &grid, &integrand, &|_| true)?;
            levels.push(vals.into_iter().map(|v| v.expect("all nodes kept")).collect());
        }
        Ok(SeriesTable { grid, values: levels })
    }

    /// Like [`build_series`](Self::build_series) but the top level is only
    /// materialized at `nodes`, which bounds memory for large supports.
    pub fn build_series_at(
        &self,
        phi: &SparseSpectrum,
        order: usize,
        t: f64,
        q: QuadratureSpec,
        nodes: &[usize],
    ) -> Result<SeriesSnapshots> {
        check_time(t)?;
        let grid = q.grid(t);
        if let Some(&bad) = nodes.iter().find(|&&m| m >= grid.len()) {
            return Err(Error::Domain(format!("node {bad} outside the grid of {} points", grid.len())));
        }
        let mut levels: Vec<Vec<SparseSpectrum>> = vec![grid.iter().map(|&s| propagate(phi, s)).collect()];
        let mut top: Vec<Option<SparseSpectrum>> = Vec::new();
        for j in 1..=order {
            let integrand = |m: usize| self.level_integrand(&levels, j, m);
            if j < order {
                let vals = self.cumulative(phi.dim(), &grid, &integrand, &|_| true)?;
                levels.push(vals.into_iter().map(|v| v.expect("all nodes kept")).collect());
            } else {
                top = self.cumulative(phi.dim(), &grid, &integrand, &|m| nodes.contains(&m))?;
            }
        }
        let terms = nodes
            .iter()
            .map(|&m| {
                let mut row: Vec<SparseSpectrum> = levels.iter().map(|lvl| lvl[m].clone()).collect();
                if order > 0 {
                    row.push(top[m].clone().expect("requested node kept"));
                }
                row
            })
            .collect();
        Ok(SeriesSnapshots { grid, nodes: nodes.to_vec(), terms })
    }

    /// Ξ_j(u₀ + φ)(t) − Ξ_j(φ)(t).
    pub fn xi_diff(&self, u0: &SparseSpectrum, phi: &SparseSpectrum, j: usize, t: f64, q: QuadratureSpec) -> Result<SparseSpectrum> {
        let sum = u0.add(phi)?;
        let with = self.build_series(&sum, j, t, q)?;
        let without = self.build_series(phi, j, t, q)?;
        with.final_term(j).sub(without.final_term(j))
    }
}

/// Closed-form Ξ₁(φ)(t) by exact time integration of each frequency triple:
/// F[Ξ₁](ξ) = i e^{it|ξ|²} Σ_{ξ=ξ₁−ξ₂+ξ₃} K(ω, t) φ̂(ξ₁) conj(φ̂(ξ₂)) φ̂(ξ₃).
pub fn xi1_exact(phi: &SparseSpectrum, t: f64) -> Result<SparseSpectrum> {
    xi1_exact_with(phi, t, false)
}

/// As [`xi1_exact`], optionally with the Wick-ordered nonlinearity.
pub fn xi1_exact_with(phi: &SparseSpectrum, t: f64, wick: bool) -> Result<SparseSpectrum> {
    check_time(t)?;
    let dim = phi.dim();
    let entries = phi.entries();
    if entries.is_empty() || t == 0.0 {
        return SparseSpectrum::zero(dim);
    }
    // Dense accumulator over the bounding box of the output support.
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for a in 0..dim {
        let (mn, mx) = entries.iter().fold((i64::MAX, i64::MIN), |(mn, mx), (p, _)| {
            let c = p.coords()[a] as i64;
            (mn.min(c), mx.max(c))
        });
        lo[a] = 2 * mn - mx;
        hi[a] = 2 * mx - mn;
    }
    let extent: Vec<usize> = (0..dim).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let volume: usize = extent.iter().product();
    if volume > 50_000_000 {
        return Err(Error::Resource(format!("closed-form accumulator of {volume} cells")));
    }
    let index = |p: &LatticePoint| {
        let mut idx = 0usize;
        for a in 0..dim {
            idx = idx * extent[a] + (p.coords()[a] as i64 - lo[a]) as usize;
        }
        idx
    };
    let chunk = 32;
    let partials: Vec<Vec<Complex64>> = entries
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![Complex64::new(0.0, 0.0); volume];
            for (p1, a1) in block {
                for (p2, a2) in entries {
                    let d12 = p1.sub(p2);
                    let w12 = a1 * a2.conj();
                    for (p3, a3) in entries {
                        let xi = d12.add(p3);
                        if wick && (xi == *p1 || xi == *p3) {
                            continue;
                        }
                        let omega = (2 * d12.dot(&p3.sub(p2))) as f64;
                        acc[index(&xi)] += resonance_integral(omega, t) * w12 * a3;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); volume];
    for part in partials {
        for (x, y) in total.iter_mut().zip(part) {
            *x += y;
        }
    }
    if wick {
        for (p, a) in entries {
            total[index(p)] -= a * a.norm_sqr() * t;
        }
    }
    let mut out = Vec::new();
    let mut counter = vec![0usize; dim];
    for cell in total {
        if cell.norm() > 0.0 {
            let coords: Vec<i64> = (0..dim).map(|a| lo[a] + counter[a] as i64).collect();
            let p = LatticePoint::new(&coords)?;
            let phase = Complex64::from_polar(1.0, t * p.norm_sq() as f64);
            out.push((p, Complex64::new(0.0, 1.0) * phase * cell));
        }
        for a in (0..dim).rev() {
            counter[a] += 1;
            if counter[a] < extent[a] {
                break;
            }
            counter[a] = 0;
        }
    }
    Ok(SparseSpectrum::from_sorted(dim, out))
}

/// Exhaustive scan of the resonance frequencies ω over all triples of the
/// support: returns (min over triples of Re K(ω, t), max over triples of |tω|).
pub fn phase_scan(phi: &SparseSpectrum, t: f64) -> (f64, f64) {
    let entries = phi.entries();
    entries
        .par_chunks(32)
        .map(|block| {
            let mut min_re = f64::INFINITY;
            let mut max_phase: f64 = 0.0;
            for (p1, _) in block {
                for (p2, _) in entries {
                    let d12 = p1.sub(p2);
                    for (p3, _) in entries {
                        let omega = (2 * d12.dot(&p3.sub(p2))) as f64;
                        min_re = min_re.min(resonance_integral(omega, t).re);
                        max_phase = max_phase.max((t * omega).abs());
                    }
                }
            }
            (min_re, max_phase)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// Convenience entry points with the default engine (cubic nonlinearity,
/// automatic convolution kernel).
pub fn duhamel_integral(
    u1: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
    u2: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
    u3: &(dyn Fn(f64) -> Result<SparseSpectrum> + Sync),
    t: f64,
    q: QuadratureSpec,
) -> Result<SparseSpectrum> {
    DuhamelEngine::default().duhamel_integral(u1, u2, u3, t, q)
}

pub fn psi_eval(tree: &TernaryTree, leaves: &[SparseSpectrum], t: f64, q: QuadratureSpec) -> Result<SparseSpectrum> {
    DuhamelEngine::default().psi_eval(tree, leaves, t, q)
}

pub fn build_series(phi: &SparseSpectrum, order: usize, t: f64, q: QuadratureSpec) -> Result<SeriesTable> {
    DuhamelEngine::default().build_series(phi, order, t, q)
}

pub fn xi_diff(u0: &SparseSpectrum, phi: &SparseSpectrum, j: usize, t: f64, q: QuadratureSpec) -> Result<SparseSpectrum> {
    DuhamelEngine::default().xi_diff(u0, phi, j, t, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::cube_indicator;
    use crate::nonlinearity::WickOrdered;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(x: &[i64]) -> LatticePoint {
        LatticePoint::new(x).unwrap()
    }

    fn delta(k: i64, a: Complex64) -> SparseSpectrum {
        SparseSpectrum::single_mode(pt(&[k]), a)
    }

    fn two_mode() -> SparseSpectrum {
        delta(0, c(1.0, 0.0)).add(&delta(1, c(1.0, 0.0))).unwrap()
    }

    fn phi_n(n: i64, a: u64, r: f64) -> SparseSpectrum {
        cube_indicator(pt(&[n]), a, c(r, 0.0))
            .unwrap()
            .add(&cube_indicator(pt(&[2 * n]), a, c(r, 0.0)).unwrap())
            .unwrap()
    }

    fn fl1(f: &SparseSpectrum) -> f64 {
        fl_norm(f, 1.0).unwrap()
    }

    fn q(m: usize) -> QuadratureSpec {
        QuadratureSpec::new(m).unwrap()
    }

    fn flow(phi: &SparseSpectrum) -> impl Fn(f64) -> Result<SparseSpectrum> + Sync + '_ {
        move |s| Ok(propagate(phi, s))
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(1).is_err());
        assert_eq!(QuadratureSpec::default().nodes(), 256);
        assert_eq!(q(4).grid(1.0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn resonance_kernel_branches() {
        assert_eq!(resonance_integral(0.0, 0.3), c(0.3, 0.0));
        assert_eq!(resonance_integral(1e-13, 0.3), c(0.3, 0.0));
        let k = resonance_integral(2.0, 0.1);
        let direct = (c(1.0, 0.0) - Complex64::from_polar(1.0, -0.2)) / c(0.0, 2.0);
        assert!((k - direct).norm() < 1e-15);
        let r = ResonancePhase::new(pt(&[1]), pt(&[0]), pt(&[1]));
        assert_eq!(r.xi, pt(&[2]));
        assert_eq!(r.omega, 2.0);
        assert_eq!(r.omega as i64, r.xi.norm_sq() - r.xi1.norm_sq() + r.xi2.norm_sq() - r.xi3.norm_sq());
    }

    #[test]
    fn duhamel_integral_examples() {
        let phi = two_mode();
        let f = flow(&phi);
        assert!(duhamel_integral(&f, &f, &f, 0.0, q(8)).unwrap().is_empty());
        assert!(matches!(duhamel_integral(&f, &f, &f, -1.0, q(8)), Err(Error::Domain(_))));

        let a = c(0.6, 0.8);
        let single = delta(3, a);
        let g = flow(&single);
        let out = duhamel_integral(&g, &g, &g, 0.2, q(4)).unwrap();
        let exact = c(0.0, 0.2) * a * a.norm_sqr() * Complex64::from_polar(1.0, 0.2 * 9.0);
        assert_eq!(out.len(), 1);
        assert!((out.get(&pt(&[3])) - exact).norm() < 1e-15);

        let out = duhamel_integral(&f, &f, &f, 0.1, QuadratureSpec::default()).unwrap();
        assert!((out.get(&pt(&[2])).norm() - 0.1f64.sin()).abs() < 1e-7);
        assert!((out.get(&pt(&[2])).norm() - 0.0998334).abs() < 1e-7);
    }

    #[test]
    fn closed_form_examples() {
        let a = c(-0.5, 1.5);
        let out = xi1_exact(&delta(-2, a), 0.7).unwrap();
        let exact = c(0.0, 0.7) * a * a.norm_sqr() * Complex64::from_polar(1.0, 0.7 * 4.0);
        assert!((out.get(&pt(&[-2])) - exact).norm() < 1e-14);
        let out = xi1_exact(&two_mode(), 0.1).unwrap();
        assert!((out.get(&pt(&[2])).norm() - 0.1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        let phi = phi_n(8, 2, 1.0);
        let t = 1e-3;
        let exact = xi1_exact(&phi, t).unwrap();
        let f = flow(&phi);
        let err = |m: usize| fl1(&exact.sub(&duhamel_integral(&f, &f, &f, t, q(m)).unwrap()).unwrap());
        assert!(err(4096) <= 1e-8);
        let (e4, e8, e16) = (err(4), err(8), err(16));
        assert!(e4 / e8 >= 3.5 && e8 / e16 >= 3.5, "{e4} {e8} {e16}");
    }

    #[test]
    fn wick_closed_form_matches_wick_quadrature() {
        let phi = phi_n(8, 2, 1.0).add(&delta(0, c(0.5, 0.5))).unwrap();
        let t = 1e-3;
        let engine = DuhamelEngine::new(Arc::new(WickOrdered), Arc::new(AutoKernel::default()));
        let f = flow(&phi);
        let quad = engine.duhamel_integral(&f, &f, &f, t, q(1024)).unwrap();
        let exact = xi1_exact_with(&phi, t, true).unwrap();
        assert!(fl1(&exact.sub(&quad).unwrap()) < 1e-9);
        let single = delta(2, c(1.0, 0.0));
        let out = xi1_exact_with(&single, 0.5, true).unwrap();
        let expect = c(0.0, -0.5) * Complex64::from_polar(1.0, 2.0);
        assert!((out.get(&pt(&[2])) - expect).norm() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let phi = two_mode();
        let t = 0.05;
        let leaf = psi_eval(&TernaryTree::Leaf, &[phi.clone()], t, q(8)).unwrap();
        assert_eq!(leaf, propagate(&phi, t));
        let t1 = TernaryTree::node(TernaryTree::Leaf, TernaryTree::Leaf, TernaryTree::Leaf);
        assert!(matches!(psi_eval(&t1, &[phi.clone()], t, q(8)), Err(Error::Arity { expected: 3, got: 1 })));
        let psi = psi_eval(&t1, &[phi.clone(), phi.clone(), phi.clone()], t, q(512)).unwrap();
        assert!(fl1(&psi.sub(&xi1_exact(&phi, t).unwrap()).unwrap()) < 1e-7);
    }

    #[test]
    fn multilinearity_per_leaf() {
        let leaves: Vec<SparseSpectrum> = (0..5)
            .map(|k| delta(k - 2, c(1.0, 0.1 * k as f64)).add(&delta(k, c(0.3, -0.2))).unwrap())
            .collect();
        let scale = c(0.4, -1.3);
        for tree in enumerate_trees(2).unwrap() {
            let base = psi_eval(&tree, &leaves, 0.1, q(16)).unwrap();
            for (k, conj) in tree.leaf_conjugations().into_iter().enumerate() {
                let mut scaled = leaves.clone();
                scaled[k] = scaled[k].scale(scale);
                let out = psi_eval(&tree, &scaled, 0.1, q(16)).unwrap();
                let factor = if conj { scale.conj() } else { scale };
                let diff = fl1(&out.sub(&base.scale(factor)).unwrap());
                assert!(diff < 1e-12 * fl1(&base).max(1.0), "tree {tree} leaf {k}");
            }
        }
    }

    #[test]
    fn series_table_invariants() {
        let phi = two_mode();
        let t = 0.1;
        let table = build_series(&phi, 2, t, q(32)).unwrap();
        assert_eq!(table.order(), 2);
        for m in 0..=32 {
            assert_eq!(table.value(0, m), &propagate(&phi, table.grid()[m]));
        }
        for j in 1..=2 {
            assert!(table.value(j, 0).is_empty());
        }
        let only_linear = build_series(&phi, 0, t, q(8)).unwrap();
        assert_eq!(partial_sum(&only_linear, 8).unwrap(), propagate(&phi, t));

        let a = c(1.0, -0.5);
        let single = build_series(&delta(1, a), 1, t, q(8)).unwrap();
        let exact = c(0.0, t) * a * a.norm_sqr() * Complex64::from_polar(1.0, t);
        assert!((single.final_term(1).get(&pt(&[1])) - exact).norm() < 1e-15);
    }

    #[test]
    fn recursion_equals_tree_sum() {
        let phi = two_mode();
        let t = 0.2;
        let engine = DuhamelEngine::default();
        let table = engine.build_series(&phi, 3, t, q(16)).unwrap();
        for j in 0..=3 {
            let trees = engine.tree_sum(&phi, j, t, q(16)).unwrap();
            let rel = fl1(&table.final_term(j).sub(&trees).unwrap()) / fl1(&trees);
            assert!(rel <= 1e-8, "j={j}: {rel}");
        }
    }

    #[test]
    fn snapshots_match_full_table() {
        let phi = phi_n(8, 2, 1.0);
        let engine = DuhamelEngine::default();
        let full = engine.build_series(&phi, 2, 1e-3, q(16)).unwrap();
        let snap = engine.build_series_at(&phi, 2, 1e-3, q(16), &[5, 16]).unwrap();
        for (k, &m) in snap.nodes.iter().enumerate() {
            for j in 0..=2 {
                assert_eq!(&snap.terms[k][j], full.value(j, m));
            }
        }
        assert!(engine.build_series_at(&phi, 2, 1e-3, q(16), &[17]).is_err());
    }

    #[test]
    fn support_cap_is_enforced() {
        let phi = phi_n(8, 2, 1.0);
        let engine = DuhamelEngine::default().with_support_cap(5);
        assert!(matches!(engine.build_series(&phi, 1, 1e-3, q(4)), Err(Error::Resource(_))));
    }

    #[test]
    fn xi_diff_examples() {
        let phi = two_mode();
        let zero = SparseSpectrum::zero(1).unwrap();
        assert!(xi_diff(&zero, &phi, 2, 0.1, q(8)).unwrap().is_empty());
        let u0 = delta(3, c(0.2, 0.7));
        assert_eq!(xi_diff(&u0, &phi, 0, 0.1, q(8)).unwrap(), propagate(&u0, 0.1));

        // j = 1 with u₀ = δ₀, φ = δ₁: the 2³ − 1 mixed leaf assignments.
        let (u0, phi) = (delta(0, c(1.0, 0.0)), delta(1, c(1.0, 0.0)));
        let t1 = TernaryTree::node(TernaryTree::Leaf, TernaryTree::Leaf, TernaryTree::Leaf);
        let mut mixed = SparseSpectrum::zero(1).unwrap();
        for mask in 1..8u32 {
            let leaves: Vec<_> = (0..3).map(|k| if mask >> k & 1 == 1 { u0.clone() } else { phi.clone() }).collect();
            mixed = mixed.add(&psi_eval(&t1, &leaves, 0.1, q(32)).unwrap()).unwrap();
        }
        let diff = xi_diff(&u0, &phi, 1, 0.1, q(32)).unwrap();
        assert!(fl1(&diff.sub(&mixed).unwrap()) < 1e-13);
    }

    #[test]
    fn lwp_radius_examples() {
        assert!(lwp_radius(&SparseSpectrum::zero(2).unwrap()).is_infinite());
        let u = delta(0, c(1.0, 0.0)).add(&delta(5, c(0.0, 1.0))).unwrap();
        assert_eq!(lwp_radius(&u), 1.0 / 64.0);
        assert_eq!(lwp_radius(&u.scale(c(2.0, 0.0))), 1.0 / 256.0);
    }

    #[test]
    fn geometric_decay_at_the_radius() {
        let phi = cube_indicator(pt(&[0]), 4, c(1.0, 0.0)).unwrap();
        let t = lwp_radius(&phi);
        let table = build_series(&phi, 4, t, q(64)).unwrap();
        for j in 0..=3 {
            let ratio = fl1(table.final_term(j + 1)) / fl1(table.final_term(j));
            assert!(ratio <= 0.5, "j={j}: {ratio}");
        }
    }

    #[test]
    fn support_arithmetic_of_terms() {
        // supp Ξ_j(φ_n) lies in at most 2^{2j+1} cubes of side ≤ (2j+1)A,
        // centred at the multiples kN, |k| ≤ 2(2j+1).
        let (n, a) = (64i64, 4i64);
        let phi = phi_n(n, a as u64, 1.0);
        let table = build_series(&phi, 2, 1e-5, q(8)).unwrap();
        for j in 0..=2 {
            let half = (2 * j as i64 + 1) * a / 2;
            let mut centres = std::collections::BTreeSet::new();
            for (p, _) in table.final_term(j).iter() {
                let x = p.coords()[0] as i64;
                let k = (x as f64 / n as f64).round() as i64;
                assert!((x - k * n).abs() <= half, "j={j} x={x}");
                centres.insert(k);
            }
            assert!(centres.len() <= 1 << (2 * j + 1));
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let phi = phi_n(8, 2, 1.0).add(&delta(0, c(0.1, 0.2))).unwrap();
        let a = build_series(&phi, 3, 1e-3, q(16)).unwrap();
        let b = build_series(&phi, 3, 1e-3, q(16)).unwrap();
        assert_eq!(a.final_term(3), b.final_term(3));
    }

    fn small_spectrum() -> impl Strategy<Value = SparseSpectrum> {
        prop::collection::vec((-3i64..3, -1.0f64..1.0, -1.0f64..1.0), 1..3).prop_map(|v| {
            SparseSpectrum::from_entries(1, v.into_iter().map(|(x, re, im)| (pt(&[x]), c(re, im)))).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn xi_diff_is_the_mixed_leaf_sum(u0 in small_spectrum(), phi in small_spectrum(), j in 0usize..=2) {
            let (t, quad) = (0.05, q(8));
            let leaves_total = 2 * j + 1;
            let mut mixed = SparseSpectrum::zero(1).unwrap();
            for tree in enumerate_trees(j).unwrap() {
                for mask in 1..(1u32 << leaves_total) {
                    let leaves: Vec<_> = (0..leaves_total)
                        .map(|k| if mask >> k & 1 == 1 { u0.clone() } else { phi.clone() })
                        .collect();
                    mixed = mixed.add(&psi_eval(&tree, &leaves, t, quad).unwrap()).unwrap();
                }
            }
            let diff = xi_diff(&u0, &phi, j, t, quad).unwrap();
            let scale = fl1(&mixed).max(1e-6);
            prop_assert!(fl1(&diff.sub(&mixed).unwrap()) <= 1e-10 * scale);
        }

        #[test]
        fn first_term_obeys_the_fl1_bound(phi in small_spectrum(), t in 0.0f64..0.5) {
            let xi1 = xi1_exact(&phi, t).unwrap();
            prop_assert!(fl1(&xi1) <= t * fl1(&phi).powi(3) * (1.0 + 1e-12) + 1e-15);
        }
    }
}
