//! Asymptotic observables built from momentum spectra: pair number densities,
//! spectrum peaks and peak shifts.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{trapezoid, Real};

/// Largest relative change tolerated between a density and its value on the
/// half-resolution subgrid.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

/// Magnitude below which a negative occupation is treated as integration
/// noise on the unit-norm state rather than an error.
pub fn roundoff_floor<T: Real>() -> T {
    T::epsilon() * T::lit(16.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint<T> {
    /// Canonical momentum `P3`.
    pub canonical: T,
    /// Kinetic momentum at the end of the window, `P3 - A(t_end)`.
    pub kinetic: T,
    pub f: T,
}

/// Solver bookkeeping carried along with a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectrumDiagnostics<T> {
    pub max_residual: T,
    pub accepted_steps: usize,
}

/// Asymptotic distribution sampled on a longitudinal momentum grid at one
/// transverse momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub points: Vec<SpectrumPoint<T>>,
    pub transverse_momentum: T,
    pub field_fingerprint: String,
    pub diagnostics: SpectrumDiagnostics<T>,
}

impl<T: Real> Spectrum<T> {
    /// Spectrum from raw `(P3, f)` samples with zero vector potential at the
    /// end of the window.
    pub fn from_samples(samples: &[(T, T)], transverse_momentum: T) -> Self {
        Self {
            points: samples
                .iter()
                .map(|&(p, f)| SpectrumPoint { canonical: p, kinetic: p, f })
                .collect(),
            transverse_momentum,
            field_fingerprint: String::new(),
            diagnostics: SpectrumDiagnostics::default(),
        }
    }

    pub fn canonical(&self) -> Vec<T> {
        self.points.iter().map(|p| p.canonical).collect()
    }

    /// Occupations with round-off negatives clamped to zero.
    pub fn values(&self) -> Vec<T> {
        self.points.iter().map(|p| p.f.max(T::zero())).collect()
    }

    pub fn max_f(&self) -> T {
        self.points.iter().fold(T::zero(), |m, p| m.max(p.f))
    }

    pub fn validate(&self) -> Result<(), ObservableError> {
        if self.points.is_empty() {
            return Err(ObservableError::EmptySpectrum);
        }
        let floor = -roundoff_floor::<T>();
        if let Some(i) = self.points.iter().position(|p| !(p.f >= floor)) {
            return Err(ObservableError::NegativeOccupation {
                index: i,
                value: self.points[i].f.as_f64(),
            });
        }
        if let Some(i) = self.points.windows(2).position(|w| !(w[0].canonical < w[1].canonical)) {
            return Err(ObservableError::NotIncreasing(i + 1));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("occupation at index {index} is negative or NaN ({value:e})")]
    NegativeOccupation { index: usize, value: f64 },
    #[error("canonical momenta must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error(
        "grid too coarse: density {fine:e} differs from half-resolution value {coarse:e} by {change:.3e} (relative)"
    )]
    GridTooCoarse { fine: f64, coarse: f64, change: f64 },
    #[error("cylindrical density needs at least two transverse sheets, got {0}")]
    TooFewSheets(usize),
    #[error("transverse momenta must start at 0 and increase strictly")]
    BadTransverseGrid,
    #[error("sheet {0} does not share the longitudinal grid of sheet 0")]
    MismatchedSheets(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityMode {
    /// `2/(2π) ∫ f dP3` at a single transverse momentum.
    Reduced1D,
    /// `2/(2π)² ∫∫ f p⊥ dp⊥ dP3`.
    Cylindrical3D,
}

impl fmt::Display for DensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityMode::Reduced1D => "Reduced1D",
            DensityMode::Cylindrical3D => "Cylindrical3D",
        })
    }
}

/// Grid metadata stored with a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityGrid<T> {
    pub n_par: usize,
    pub n_perp: Option<usize>,
    pub range: (T, T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityResult<T> {
    pub value: T,
    pub mode: DensityMode,
    pub grid: DensityGrid<T>,
    /// Relative change against the half-resolution subgrid (zero when the
    /// grid is too small to subsample).
    pub refinement_change: T,
}

impl DensityResult<f64> {
    /// JSON document `{value, mode, grid: {n_par, n_perp, range}}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "mode": self.mode.to_string(),
            "grid": {
                "n_par": self.grid.n_par,
                "n_perp": self.grid.n_perp,
                "range": [self.grid.range.0, self.grid.range.1],
            }
        })
    }
}

/// Every other sample, keeping both endpoints when the count is odd.
fn even_subgrid<T: Copy>(v: &[T]) -> Vec<T> {
    v.iter().step_by(2).copied().collect()
}

fn relative_change<T: Real>(fine: T, coarse: T) -> T {
    if fine == T::zero() && coarse == T::zero() {
        T::zero()
    } else {
        (fine - coarse).abs() / fine.abs().max(coarse.abs())
    }
}

fn checked<T: Real>(result: DensityResult<T>, coarse: T) -> Result<DensityResult<T>, ObservableError> {
    if result.refinement_change > T::lit(REFINEMENT_TOLERANCE) {
        Err(ObservableError::GridTooCoarse {
            fine: result.value.as_f64(),
            coarse: coarse.as_f64(),
            change: result.refinement_change.as_f64(),
        })
    } else {
        Ok(result)
    }
}

/// Reduced one-dimensional density `2·(1/2π)·∫ f dP3` without the
/// refinement check.
pub fn reduced_density_value<T: Real>(spec: &Spectrum<T>) -> T {
    trapezoid(&spec.canonical(), &spec.values()) / T::PI()
}

/// Reduced one-dimensional density by the composite trapezoid rule.
///
/// The value is compared against the same rule on the half-resolution
/// subgrid; a relative change above 1% is reported as
/// [`ObservableError::GridTooCoarse`].
pub fn number_density_reduced<T: Real>(
    spec: &Spectrum<T>,
) -> Result<DensityResult<T>, ObservableError> {
    spec.validate()?;
    let xs = spec.canonical();
    let fs = spec.values();
    let value = trapezoid(&xs, &fs) / T::PI();
    let coarse = if xs.len() >= 5 {
        trapezoid(&even_subgrid(&xs), &even_subgrid(&fs)) / T::PI()
    } else {
        value
    };
    let result = DensityResult {
        value,
        mode: DensityMode::Reduced1D,
        grid: DensityGrid { n_par: xs.len(), n_perp: None, range: (xs[0], xs[xs.len() - 1]) },
        refinement_change: relative_change(value, coarse),
    };
    checked(result, coarse)
}

fn cylindrical_integral<T: Real>(sheets: &[&Spectrum<T>], stride: usize) -> T {
    let mut perp = Vec::new();
    let mut inner = Vec::new();
    for s in sheets.iter().step_by(stride) {
        let xs: Vec<T> = s.points.iter().step_by(stride).map(|p| p.canonical).collect();
        let fs: Vec<T> = s.points.iter().step_by(stride).map(|p| p.f.max(T::zero())).collect();
        perp.push(s.transverse_momentum);
        inner.push(trapezoid(&xs, &fs) * s.transverse_momentum);
    }
    let two_pi = T::lit(2.0) * T::PI();
    T::lit(2.0) * trapezoid(&perp, &inner) / (two_pi * two_pi)
}

/// Full density `2∫ d³p/(2π)³ f` for a cylindrically symmetric distribution,
/// from spectra at increasing transverse momenta starting at zero.
pub fn number_density_3d<T: Real>(
    spectra: &[Spectrum<T>],
) -> Result<DensityResult<T>, ObservableError> {
    if spectra.len() < 2 {
        return Err(ObservableError::TooFewSheets(spectra.len()));
    }
    for s in spectra {
        s.validate()?;
    }
    if spectra[0].transverse_momentum != T::zero()
        || spectra.windows(2).any(|w| !(w[0].transverse_momentum < w[1].transverse_momentum))
    {
        return Err(ObservableError::BadTransverseGrid);
    }
    let reference = spectra[0].canonical();
    if let Some(i) = spectra.iter().position(|s| s.canonical() != reference) {
        return Err(ObservableError::MismatchedSheets(i));
    }
    let sheets: Vec<&Spectrum<T>> = spectra.iter().collect();
    let value = cylindrical_integral(&sheets, 1);
    let coarse = if spectra.len() >= 5 && reference.len() >= 5 {
        cylindrical_integral(&sheets, 2)
    } else {
        value
    };
    let result = DensityResult {
        value,
        mode: DensityMode::Cylindrical3D,
        grid: DensityGrid {
            n_par: reference.len(),
            n_perp: Some(spectra.len()),
            range: (reference[0], reference[reference.len() - 1]),
        },
        refinement_change: relative_change(value, coarse),
    };
    checked(result, coarse)
}

/// Location and height of a spectrum maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub index: usize,
    pub canonical: T,
    /// Kinetic momentum at the end of the window; this is the abscissa used
    /// for shifts.
    pub kinetic: T,
    pub f: T,
}

/// Grid point of maximal `f`. Ties go to the smallest momentum.
///
/// # Panics
///
/// Panics on an empty spectrum.
pub fn spectrum_peak<T: Real>(spec: &Spectrum<T>) -> Peak<T> {
    let mut best = 0;
    for (i, p) in spec.points.iter().enumerate().skip(1) {
        if p.f > spec.points[best].f {
            best = i;
        }
    }
    let p = spec.points[best];
    Peak { index: best, canonical: p.canonical, kinetic: p.kinetic, f: p.f }
}

/// Peak displacement of `spec` relative to `reference` in canonical momentum.
pub fn spectrum_shift<T: Real>(spec: &Spectrum<T>, reference: &Spectrum<T>) -> T {
    spectrum_peak(spec).canonical - spectrum_peak(reference).canonical
}

/// Largest `|f(P3) - f(-P3)|` over the grid, relative to the spectrum
/// maximum. The grid must be symmetric about zero.
pub fn mirror_asymmetry<T: Real>(spec: &Spectrum<T>) -> T {
    let n = spec.points.len();
    let f_max = spec.max_f();
    if f_max == T::zero() {
        return T::zero();
    }
    (0..n / 2)
        .map(|i| (spec.points[i].f - spec.points[n - 1 - i].f).abs())
        .fold(T::zero(), T::max)
        / f_max
}
