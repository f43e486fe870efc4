//! Fourier-side representation of functions on the torus: sparse maps from
//! integer frequencies to complex amplitudes, together with the
//! Fourier-Lebesgue and Sobolev norms and the linear Schrödinger flow.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::{compensated_sum, NeumaierSum};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// Entries with modulus below this are dropped when a spectrum is built.
pub const EPS_TRUNC: f64 = 1e-14;

/// A frequency ξ ∈ ℤ^d. Unused trailing coordinates are kept at zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Domain(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0i32; MAX_DIM];
        for (slot, &x) in c.iter_mut().zip(coords) {
            *slot = i32::try_from(x)
                .map_err(|_| Error::Domain(format!("frequency coordinate {x} out of range")))?;
        }
        Ok(Self { dim: coords.len() as u8, coords: c })
    }

    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Self { dim: dim as u8, coords: [0; MAX_DIM] }
    }

    /// `k · e_1` in dimension `dim`.
    pub fn on_axis(dim: usize, k: i64) -> Result<Self> {
        let mut c = vec![0i64; dim];
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        c[0] = k;
        Self::new(&c)
    }

    pub(crate) fn from_raw(dim: usize, coords: [i32; MAX_DIM]) -> Self {
        Self { dim: dim as u8, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    /// |ξ|², exact in integer arithmetic.
    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|&x| (x as i64) * (x as i64)).sum()
    }

    pub fn linf(&self) -> i64 {
        self.coords().iter().map(|&x| (x as i64).abs()).max().unwrap_or(0)
    }

    pub fn dot(&self, other: &Self) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| a as i64 * b as i64)
            .sum()
    }

    /// Japanese bracket ⟨ξ⟩ = (1 + |ξ|²)^{1/2}.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.norm_sq() as f64).sqrt()
    }

    pub fn neg(&self) -> Self {
        let mut c = self.coords;
        c.iter_mut().for_each(|x| *x = -*x);
        Self { dim: self.dim, coords: c }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut c = self.coords;
        for (a, b) in c.iter_mut().zip(other.coords) {
            *a += b;
        }
        Self { dim: self.dim, coords: c }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| self.coords.cmp(&other.coords))
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// Which norm to evaluate on a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    /// ‖f̂‖_{ℓ^p}; `p = f64::INFINITY` gives the sup norm.
    FourierLebesgue(f64),
    Sobolev(f64),
    L2,
}

/// Finite map ξ ↦ f̂(ξ), sorted by frequency, with no entry below
/// [`EPS_TRUNC`] in modulus.
#[derive(Clone, PartialEq)]
pub struct SparseSpectrum {
    dim: usize,
    entries: Vec<(LatticePoint, Complex64)>,
}

impl fmt::Debug for SparseSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseSpectrum")
            .field("dim", &self.dim)
            .field("len", &self.entries.len())
            .finish()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Domain(format!("lattice dimension must be in 1..={MAX_DIM}, got {dim}")));
    }
    Ok(())
}

impl SparseSpectrum {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, entries: Vec::new() })
    }

    /// Builds a spectrum from arbitrary (possibly repeated) entries; repeated
    /// frequencies are summed.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, Complex64)>,
    {
        check_dim(dim)?;
        let mut map: BTreeMap<LatticePoint, Complex64> = BTreeMap::new();
        for (p, z) in entries {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
            }
            *map.entry(p).or_default() += z;
        }
        Ok(Self::from_map(dim, map))
    }

    pub fn single_mode(point: LatticePoint, amplitude: Complex64) -> Self {
        Self::from_sorted(point.dim(), vec![(point, amplitude)])
    }

    pub(crate) fn from_map(dim: usize, map: BTreeMap<LatticePoint, Complex64>) -> Self {
        Self::from_sorted(dim, map.into_iter().collect())
    }

    /// `entries` must be strictly sorted by frequency.
    pub(crate) fn from_sorted(dim: usize, mut entries: Vec<(LatticePoint, Complex64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        entries.retain(|(_, z)| z.norm() >= EPS_TRUNC);
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &Complex64)> + '_ {
        self.entries.iter().map(|(p, z)| (p, z))
    }

    pub fn entries(&self) -> &[(LatticePoint, Complex64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.entries.iter().map(|(p, _)| *p)
    }

    pub fn get(&self, p: &LatticePoint) -> Complex64 {
        match self.entries.binary_search_by(|(q, _)| q.cmp(p)) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Largest |ξ|_∞ over the support (0 when empty).
    pub fn max_radius(&self) -> i64 {
        self.entries.iter().map(|(p, _)| p.linf()).max().unwrap_or(0)
    }

    fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    fn merge_with(&self, other: &Self, sign: f64) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b[j].0, b[j].1 * sign));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1 * sign));
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Self::from_sorted(self.dim, out))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.merge_with(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.merge_with(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let entries = self.entries.iter().map(|&(p, z)| (p, z * c)).collect();
        Self::from_sorted(self.dim, entries)
    }

    /// Spectrum of the complex conjugate function: η ↦ conj(f̂(−η)).
    pub fn conj_reflect(&self) -> Self {
        let entries = self.entries.iter().rev().map(|&(p, z)| (p.neg(), z.conj())).collect();
        Self::from_sorted(self.dim, entries)
    }

    /// Multiplies every amplitude by `phase(ξ)`.
    pub fn map_amplitudes<F: Fn(&LatticePoint, Complex64) -> Complex64>(&self, f: F) -> Self {
        let entries = self.entries.iter().map(|(p, z)| (*p, f(p, *z))).collect();
        Self::from_sorted(self.dim, entries)
    }

    /// Restriction to the frequencies accepted by `keep`.
    pub fn restrict<F: Fn(&LatticePoint) -> bool>(&self, keep: F) -> Self {
        let entries = self.entries.iter().filter(|(p, _)| keep(p)).copied().collect();
        Self::from_sorted(self.dim, entries)
    }

    /// ⟨f, g⟩ = Σ f̂(ξ) conj(ĝ(ξ)).
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.ensure_same_dim(other)?;
        let mut acc = crate::sum::ComplexSum::new();
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc.add(a[i].1 * b[j].1.conj());
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc.value())
    }

    pub fn norm(&self, spec: NormSpec) -> Result<f64> {
        match spec {
            NormSpec::FourierLebesgue(p) => fl_norm(self, p),
            NormSpec::Sobolev(s) => Ok(sobolev_norm(self, s)),
            NormSpec::L2 => fl_norm(self, 2.0),
        }
    }
}

/// (Σ |f̂(ξ)|^p)^{1/p}, or the sup norm when `p` is infinite.
pub fn fl_norm(f: &SparseSpectrum, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("Fourier-Lebesgue exponent must be >= 1, got {p}")));
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    if p.is_infinite() {
        return Ok(f.entries.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max));
    }
    if p == 1.0 {
        return Ok(compensated_sum(f.entries.iter().map(|(_, z)| z.norm())));
    }
    if p == 2.0 {
        return Ok(compensated_sum(f.entries.iter().map(|(_, z)| z.norm_sqr())).sqrt());
    }
    // Rescale by the maximum to keep |z|^p representable.
    let max = f.entries.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let s = compensated_sum(f.entries.iter().map(|(_, z)| (z.norm() / max).powf(p)));
    Ok(max * s.powf(1.0 / p))
}

/// (Σ ⟨ξ⟩^{2s} |f̂(ξ)|²)^{1/2}.
pub fn sobolev_norm(f: &SparseSpectrum, s: f64) -> f64 {
    let acc: NeumaierSum = f
        .entries
        .iter()
        .map(|(p, z)| (1.0 + p.norm_sq() as f64).powf(s) * z.norm_sqr())
        .collect();
    acc.value().sqrt()
}

/// Lower corner offset of the discretized cube Q_A = [−A/2, A/2)^d ∩ ℤ^d.
fn cube_range(side: u64) -> std::ops::Range<i64> {
    let a = side as i64;
    -(a / 2)..(a - a / 2)
}

/// Constant-amplitude indicator of `center + Q_A`.
pub fn cube_indicator(center: LatticePoint, side: u64, amplitude: Complex64) -> Result<SparseSpectrum> {
    if side == 0 {
        return Err(Error::Domain("cube side must be positive".into()));
    }
    let dim = center.dim();
    let range = cube_range(side);
    let total = (side as u128).pow(dim as u32);
    if total > 50_000_000 {
        return Err(Error::Resource(format!("cube with {total} lattice points")));
    }
    let mut entries = Vec::with_capacity(total as usize);
    let mut offset = vec![range.start; dim];
    'outer: loop {
        let coords: Vec<i64> = offset.iter().zip(center.coords()).map(|(&o, &c)| o + c as i64).collect();
        entries.push((LatticePoint::new(&coords)?, amplitude));
        // Odometer increment, last axis fastest.
        for axis in (0..dim).rev() {
            offset[axis] += 1;
            if offset[axis] < range.end {
                continue 'outer;
            }
            offset[axis] = range.start;
        }
        break;
    }
    Ok(SparseSpectrum::from_sorted(dim, entries))
}

/// Linear Schrödinger flow S(t): f̂(ξ) ↦ e^{i t |ξ|²} f̂(ξ).
pub fn propagate(f: &SparseSpectrum, t: f64) -> SparseSpectrum {
    if t == 0.0 {
        return f.clone();
    }
    f.map_amplitudes(|p, z| z * Complex64::from_polar(1.0, t * p.norm_sq() as f64))
}

impl fmt::Display for SparseSpectrum {
    /// Plain-text form: a `# d=<d>` header, then one `ξ_1 … ξ_d re im` line per
    /// support point.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# d={}", self.dim)?;
        for (p, z) in &self.entries {
            for c in p.coords() {
                write!(f, "{c} ")?;
            }
            writeln!(f, " {:e} {:e}", z.re, z.im)?;
        }
        Ok(())
    }
}

impl FromStr for SparseSpectrum {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("d=") {
                    let d: usize = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse { line: line_no, msg: format!("bad dimension `{v}`") })?;
                    check_dim(d).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
                    dim = Some(d);
                }
                continue;
            }
            let d = dim.ok_or(Error::Parse { line: line_no, msg: "missing `# d=<d>` header".into() })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != d + 2 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} fields, found {}", d + 2, fields.len()),
                });
            }
            let coords = fields[..d]
                .iter()
                .map(|s| s.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
            let re: f64 = fields[d].parse().map_err(|_| Error::Parse { line: line_no, msg: "bad real part".into() })?;
            let im: f64 =
                fields[d + 1].parse().map_err(|_| Error::Parse { line: line_no, msg: "bad imaginary part".into() })?;
            let p = LatticePoint::new(&coords).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
            entries.push((p, Complex64::new(re, im)));
        }
        let d = dim.ok_or(Error::Parse { line: 0, msg: "missing `# d=<d>` header".into() })?;
        SparseSpectrum::from_entries(d, entries)
    }
}
