//! Longitudinal momentum grids.

use thiserror::Error;

use crate::field::FieldConfig;
use crate::scalar::Real;

/// Padding around the vector-potential extrema, in units of `ε⊥`.
pub const AUTO_RANGE_PADDING: f64 = 4.0;

pub const DEFAULT_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("momentum grid is empty")]
    Empty,
    #[error("canonical momenta must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("transverse momentum must be finite and >= 0, got {0}")]
    BadTransverse(f64),
    #[error("grid range [{lo}, {hi}] is empty or not finite")]
    BadRange { lo: f64, hi: f64 },
}

/// How the longitudinal range of a grid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRange<T> {
    /// `[A_min - 4ε⊥, A_max + 4ε⊥]` from the field's vector potential.
    Auto,
    Explicit(T, T),
}

/// Canonical longitudinal momenta at one fixed transverse momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid<T> {
    pub canonical: Vec<T>,
    pub transverse: T,
}

impl<T: Real> MomentumGrid<T> {
    pub fn new(canonical: Vec<T>, transverse: T) -> Result<Self, GridError> {
        if canonical.is_empty() {
            return Err(GridError::Empty);
        }
        if !(transverse >= T::zero() && transverse.is_finite()) {
            return Err(GridError::BadTransverse(transverse.as_f64()));
        }
        if let Some(i) = canonical.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(GridError::NotIncreasing(i + 1));
        }
        Ok(Self { canonical, transverse })
    }

    /// `n` uniformly spaced points on `[lo, hi]` (a single point sits at `lo`).
    pub fn uniform(lo: T, hi: T, n: usize, transverse: T) -> Result<Self, GridError> {
        if n == 0 {
            return Err(GridError::Empty);
        }
        if !(lo.is_finite() && hi.is_finite() && (lo < hi || n == 1)) {
            return Err(GridError::BadRange { lo: lo.as_f64(), hi: hi.as_f64() });
        }
        let pts = if n == 1 {
            vec![lo]
        } else {
            let step = (hi - lo) / T::from_count(n - 1);
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + step * T::from_count(i) })
                .collect()
        };
        Self::new(pts, transverse)
    }

    /// Builds a grid of `n` points using `range`, resolving [`GridRange::Auto`]
    /// against `field` over the window `[t0, t1]`.
    pub fn with_range(
        range: GridRange<T>,
        n: usize,
        transverse: T,
        field: &FieldConfig<T>,
        window: (T, T),
    ) -> Result<Self, GridError> {
        let (lo, hi) = match range {
            GridRange::Explicit(lo, hi) => (lo, hi),
            GridRange::Auto => auto_range(field, window, transverse),
        };
        Self::uniform(lo, hi, n, transverse)
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    pub fn range(&self) -> (T, T) {
        (self.canonical[0], *self.canonical.last().unwrap())
    }
}

/// Range covering the kinetic-momentum support of created pairs: the
/// vector-potential extrema padded by `4ε⊥` on each side.
pub fn auto_range<T: Real>(field: &FieldConfig<T>, window: (T, T), transverse: T) -> (T, T) {
    let (a_min, a_max) = field.vector_potential_range(window.0, window.1);
    let pad = T::lit(AUTO_RANGE_PADDING) * (T::one() + transverse * transverse).sqrt();
    (a_min - pad, a_max + pad)
}
