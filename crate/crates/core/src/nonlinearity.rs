//! Trilinear nonlinearities u₁ ū₂ u₃ on the Fourier side.

use num_complex::Complex64;

use crate::convolution::ConvolutionKernel;
use crate::error::{Error, Result};
use crate::lattice::SparseSpectrum;

pub trait Nonlinearity: Send + Sync {
    fn name(&self) -> &'static str;

    /// Fourier coefficients of the trilinear form applied to (f1, f2, f3),
    /// conjugating the middle slot.
    fn trilinear(
        &self,
        f1: &SparseSpectrum,
        f2: &SparseSpectrum,
        f3: &SparseSpectrum,
        kernel: &dyn ConvolutionKernel,
    ) -> Result<SparseSpectrum>;

    /// Rate of the pointwise phase rotation u ← u·e^{i·rate·dt} used by the
    /// split-step oracle, given the local density |u(x)|² and the total mass.
    fn phase_rate(&self, density: f64, mass: f64) -> f64;
}

fn same_dims(f1: &SparseSpectrum, f2: &SparseSpectrum, f3: &SparseSpectrum) -> Result<()> {
    for g in [f2, f3] {
        if g.dim() != f1.dim() {
            return Err(Error::DimensionMismatch { left: f1.dim(), right: g.dim() });
        }
    }
    Ok(())
}

/// out(ξ) = Σ_{ξ = ξ₁ − ξ₂ + ξ₃} f̂₁(ξ₁) conj(f̂₂(ξ₂)) f̂₃(ξ₃).
#[derive(Debug, Default, Clone, Copy)]
pub struct Cubic;

impl Nonlinearity for Cubic {
    fn name(&self) -> &'static str {
        "cubic"
    }

    fn trilinear(
        &self,
        f1: &SparseSpectrum,
        f2: &SparseSpectrum,
        f3: &SparseSpectrum,
        kernel: &dyn ConvolutionKernel,
    ) -> Result<SparseSpectrum> {
        same_dims(f1, f2, f3)?;
        if f1.is_empty() || f2.is_empty() || f3.is_empty() {
            return SparseSpectrum::zero(f1.dim());
        }
        let pair = kernel.convolve(f1, &f2.conj_reflect())?;
        kernel.convolve(&pair, f3)
    }

    fn phase_rate(&self, density: f64, _mass: f64) -> f64 {
        density
    }
}

/// Wick-ordered product: the resonant interactions ξ = ξ₁ and ξ = ξ₃ are
/// removed and the diagonal term is subtracted. Equivalently
/// out = cubic − f̂₁·⟨f₃, f₂⟩ − f̂₃·⟨f₁, f₂⟩.
#[derive(Debug, Default, Clone, Copy)]
pub struct WickOrdered;

impl Nonlinearity for WickOrdered {
    fn name(&self) -> &'static str {
        "wick"
    }

    fn trilinear(
        &self,
        f1: &SparseSpectrum,
        f2: &SparseSpectrum,
        f3: &SparseSpectrum,
        kernel: &dyn ConvolutionKernel,
    ) -> Result<SparseSpectrum> {
        let full = Cubic.trilinear(f1, f2, f3, kernel)?;
        let m32: Complex64 = f3.inner(f2)?;
        let m12: Complex64 = f1.inner(f2)?;
        full.sub(&f1.scale(m32))?.sub(&f3.scale(m12))
    }

    fn phase_rate(&self, density: f64, mass: f64) -> f64 {
        density - 2.0 * mass
    }
}

/// Standard cubic product with the default convolution kernel.
pub fn trilinear_product(f1: &SparseSpectrum, f2: &SparseSpectrum, f3: &SparseSpectrum) -> Result<SparseSpectrum> {
    Cubic.trilinear(f1, f2, f3, &crate::convolution::AutoKernel::default())
}

/// Wick-ordered product with the default convolution kernel.
pub fn wick_trilinear_product(
    f1: &SparseSpectrum,
    f2: &SparseSpectrum,
    f3: &SparseSpectrum,
) -> Result<SparseSpectrum> {
    WickOrdered.trilinear(f1, f2, f3, &crate::convolution::AutoKernel::default())
}
