//! Discrete convolution of sparse spectra, (f * g)(ξ) = Σ_η f̂(η) ĝ(ξ − η).
//!
//! Two interchangeable kernels are provided behind [`ConvolutionKernel`]:
//! a direct pairwise sum and a cluster-wise FFT kernel that splits each
//! support into spatially separated blocks and convolves block pairs on
//! dense boxes. [`AutoKernel`] chooses per block pair by estimated cost.

use std::collections::{HashMap, HashSet, VecDeque};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::{fast_len, fft_nd};
use crate::lattice::{LatticePoint, SparseSpectrum, MAX_DIM};

pub trait ConvolutionKernel: Send + Sync {
    fn name(&self) -> &'static str;

    fn convolve(&self, f: &SparseSpectrum, g: &SparseSpectrum) -> Result<SparseSpectrum>;
}

/// Convolution with the default ([`AutoKernel`]) strategy.
pub fn convolve(f: &SparseSpectrum, g: &SparseSpectrum) -> Result<SparseSpectrum> {
    AutoKernel::default().convolve(f, g)
}

fn check_dims(f: &SparseSpectrum, g: &SparseSpectrum) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch { left: f.dim(), right: g.dim() });
    }
    Ok(())
}

fn finish(dim: usize, acc: HashMap<LatticePoint, Complex64>) -> SparseSpectrum {
    let mut entries: Vec<_> = acc.into_iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    SparseSpectrum::from_sorted(dim, entries)
}

/// Pairwise O(|f|·|g|) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectKernel;

impl DirectKernel {
    fn accumulate(
        f: &[(LatticePoint, Complex64)],
        g: &[(LatticePoint, Complex64)],
        acc: &mut HashMap<LatticePoint, Complex64>,
    ) {
        for (p, a) in f {
            for (q, b) in g {
                *acc.entry(p.add(q)).or_default() += a * b;
            }
        }
    }
}

impl ConvolutionKernel for DirectKernel {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn convolve(&self, f: &SparseSpectrum, g: &SparseSpectrum) -> Result<SparseSpectrum> {
        check_dims(f, g)?;
        let mut acc = HashMap::with_capacity(f.len() + g.len());
        Self::accumulate(f.entries(), g.entries(), &mut acc);
        Ok(finish(f.dim(), acc))
    }
}

/// A spatially connected block of a spectrum's support.
#[derive(Debug, Clone)]
struct Cluster {
    entries: Vec<(LatticePoint, Complex64)>,
    lo: [i64; MAX_DIM],
    hi: [i64; MAX_DIM],
}

impl Cluster {
    fn extent(&self, dim: usize) -> [usize; MAX_DIM] {
        let mut e = [1usize; MAX_DIM];
        for a in 0..dim {
            e[a] = (self.hi[a] - self.lo[a] + 1) as usize;
        }
        e
    }

    fn is_full_box(&self, dim: usize) -> bool {
        let vol: usize = self.extent(dim)[..dim].iter().product();
        vol == self.entries.len()
    }
}

/// Groups the support into connected components of occupied cells of side
/// `cell` (cells touching diagonally are connected).
fn clusters(f: &SparseSpectrum, cell: i64) -> Vec<Cluster> {
    let dim = f.dim();
    let key = |p: &LatticePoint| {
        let mut k = [0i64; MAX_DIM];
        for (a, &c) in p.coords().iter().enumerate() {
            k[a] = (c as i64).div_euclid(cell);
        }
        k
    };
    let mut by_cell: HashMap<[i64; MAX_DIM], Vec<usize>> = HashMap::new();
    for (i, (p, _)) in f.entries().iter().enumerate() {
        by_cell.entry(key(p)).or_default().push(i);
    }
    let mut cells: Vec<[i64; MAX_DIM]> = by_cell.keys().copied().collect();
    cells.sort_unstable();
    let mut offsets = vec![[0i64; MAX_DIM]];
    for a in 0..dim {
        let mut next = Vec::new();
        for o in &offsets {
            for delta in -1..=1 {
                let mut n = *o;
                n[a] = delta;
                next.push(n);
            }
        }
        offsets = next;
    }
    let mut seen: HashSet<[i64; MAX_DIM]> = HashSet::new();
    let mut out = Vec::new();
    for start in cells {
        if !seen.insert(start) {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            members.extend_from_slice(&by_cell[&c]);
            for o in &offsets {
                let mut n = c;
                for a in 0..dim {
                    n[a] += o[a];
                }
                if by_cell.contains_key(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        members.sort_unstable();
        let entries: Vec<_> = members.iter().map(|&i| f.entries()[i]).collect();
        let mut lo = [i64::MAX; MAX_DIM];
        let mut hi = [i64::MIN; MAX_DIM];
        for a in dim..MAX_DIM {
            lo[a] = 0;
            hi[a] = 0;
        }
        for (p, _) in &entries {
            for (a, &c) in p.coords().iter().enumerate() {
                lo[a] = lo[a].min(c as i64);
                hi[a] = hi[a].max(c as i64);
            }
        }
        out.push(Cluster { entries, lo, hi });
    }
    out
}

/// Cluster-wise FFT convolution on dense boxes.
#[derive(Debug, Clone, Copy)]
pub struct ClusterFftKernel {
    /// Cell side used for cluster detection.
    pub cell: i64,
}

impl Default for ClusterFftKernel {
    fn default() -> Self {
        Self { cell: 8 }
    }
}

/// Dense-box convolution of two clusters; returns (point, value) pairs on
/// the exact sumset of the two supports.
fn fft_pair(dim: usize, a: &Cluster, b: &Cluster) -> Vec<(LatticePoint, Complex64)> {
    let ea = a.extent(dim);
    let eb = b.extent(dim);
    let mut shape = [1usize; MAX_DIM];
    let mut out_extent = [1usize; MAX_DIM];
    for ax in 0..dim {
        out_extent[ax] = ea[ax] + eb[ax] - 1;
        shape[ax] = fast_len(out_extent[ax]);
    }
    let shape = &shape[..dim];
    let total: usize = shape.iter().product();
    let index = |p: &LatticePoint, lo: &[i64; MAX_DIM]| {
        let mut idx = 0usize;
        for ax in 0..dim {
            idx = idx * shape[ax] + (p.coords()[ax] as i64 - lo[ax]) as usize;
        }
        idx
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut fa = vec![zero; total];
    let mut fb = vec![zero; total];
    for (p, z) in &a.entries {
        fa[index(p, &a.lo)] = *z;
    }
    for (p, z) in &b.entries {
        fb[index(p, &b.lo)] = *z;
    }
    let need_mask = !(a.is_full_box(dim) && b.is_full_box(dim));
    let mask = if need_mask {
        let one = Complex64::new(1.0, 0.0);
        // Pack both indicators into one complex transform: real part for a,
        // imaginary part for b, then separate via conjugate symmetry.
        let mut m = vec![zero; total];
        for (p, _) in &a.entries {
            m[index(p, &a.lo)] += one;
        }
        for (p, _) in &b.entries {
            m[index(p, &b.lo)] += Complex64::new(0.0, 1.0);
        }
        fft_nd(&mut m, shape, FftDirection::Forward);
        let mut prod = vec![zero; total];
        for k in 0..total {
            let mk = m[k];
            let mneg = m[neg_index(k, shape)].conj();
            let ha = (mk + mneg) * 0.5;
            let hb = (mk - mneg) * Complex64::new(0.0, -0.5);
            prod[k] = ha * hb;
        }
        fft_nd(&mut prod, shape, FftDirection::Inverse);
        Some(prod)
    } else {
        None
    };
    fft_nd(&mut fa, shape, FftDirection::Forward);
    fft_nd(&mut fb, shape, FftDirection::Forward);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_nd(&mut fa, shape, FftDirection::Inverse);
    let norm = 1.0 / total as f64;
    let mut out = Vec::new();
    let mut counter = [0usize; MAX_DIM];
    loop {
        let mut idx = 0usize;
        for ax in 0..dim {
            idx = idx * shape[ax] + counter[ax];
        }
        let keep = match &mask {
            Some(m) => m[idx].re * norm > 0.5,
            None => true,
        };
        if keep {
            let mut coords = [0i32; MAX_DIM];
            for ax in 0..dim {
                coords[ax] = (a.lo[ax] + b.lo[ax] + counter[ax] as i64) as i32;
            }
            out.push((LatticePoint::from_raw(dim, coords), fa[idx] * norm));
        }
        // Odometer over the output box only.
        let mut ax = dim;
        loop {
            if ax == 0 {
                return out;
            }
            ax -= 1;
            counter[ax] += 1;
            if counter[ax] < out_extent[ax] {
                break;
            }
            counter[ax] = 0;
        }
    }
}

fn neg_index(k: usize, shape: &[usize]) -> usize {
    let mut rem = k;
    let mut idx = 0usize;
    let mut stride = 1usize;
    for &n in shape.iter().rev() {
        let c = rem % n;
        rem /= n;
        idx += ((n - c) % n) * stride;
        stride *= n;
    }
    idx
}

fn fft_cost(dim: usize, a: &Cluster, b: &Cluster) -> f64 {
    let ea = a.extent(dim);
    let eb = b.extent(dim);
    let total: f64 = (0..dim).map(|ax| fast_len(ea[ax] + eb[ax] - 1) as f64).product();
    let transforms = if a.is_full_box(dim) && b.is_full_box(dim) { 3.0 } else { 5.0 };
    transforms * total * total.log2().max(1.0) * 1.5 + 4.0 * total
}

fn cluster_convolve(f: &SparseSpectrum, g: &SparseSpectrum, cell: i64, allow_direct: bool) -> Result<SparseSpectrum> {
    check_dims(f, g)?;
    let dim = f.dim();
    if f.is_empty() || g.is_empty() {
        return SparseSpectrum::zero(dim);
    }
    let cf = clusters(f, cell);
    let cg = clusters(g, cell);
    let pairs: Vec<(usize, usize)> = (0..cf.len()).flat_map(|i| (0..cg.len()).map(move |j| (i, j))).collect();
    let parts: Vec<Vec<(LatticePoint, Complex64)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&cf[i], &cg[j]);
            let direct_cost = (a.entries.len() * b.entries.len()) as f64;
            if allow_direct && direct_cost <= fft_cost(dim, a, b) {
                let mut acc = HashMap::new();
                DirectKernel::accumulate(&a.entries, &b.entries, &mut acc);
                let mut v: Vec<_> = acc.into_iter().collect();
                v.sort_unstable_by(|x, y| x.0.cmp(&y.0));
                v
            } else {
                fft_pair(dim, a, b)
            }
        })
        .collect();
    let mut acc: HashMap<LatticePoint, Complex64> = HashMap::new();
    for part in parts {
        for (p, z) in part {
            *acc.entry(p).or_default() += z;
        }
    }
    Ok(finish(dim, acc))
}

impl ConvolutionKernel for ClusterFftKernel {
    fn name(&self) -> &'static str {
        "cluster-fft"
    }

    fn convolve(&self, f: &SparseSpectrum, g: &SparseSpectrum) -> Result<SparseSpectrum> {
        cluster_convolve(f, g, self.cell, false)
    }
}

/// Picks direct or FFT per cluster pair by estimated operation count.
#[derive(Debug, Clone, Copy)]
pub struct AutoKernel {
    pub cell: i64,
    /// Below this product of support sizes the direct sum is always used.
    pub direct_below: usize,
}

impl Default for AutoKernel {
    fn default() -> Self {
        Self { cell: 8, direct_below: 4096 }
    }
}

impl ConvolutionKernel for AutoKernel {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn convolve(&self, f: &SparseSpectrum, g: &SparseSpectrum) -> Result<SparseSpectrum> {
        if f.len().saturating_mul(g.len()) <= self.direct_below {
            return DirectKernel.convolve(f, g);
        }
        cluster_convolve(f, g, self.cell, true)
    }
}
