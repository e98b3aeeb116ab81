//! Per-mode integration of the quantum Vlasov equation in its first-order
//! form.
//!
//! For a mode with canonical longitudinal momentum `P3` and transverse
//! momentum `p⊥` the state `(f, g, w, A)` evolves as
//!
//! ```text
//! f' = q·g/2
//! g' = q·(1 - 2f) - 2ω·w
//! w' = 2ω·g
//! A' = -E(t)
//! ```
//!
//! with `ω² = 1 + p⊥² + (P3 - A)²` and `q = E·ε⊥/ω²`. From vacuum data the
//! quantity `(1 - 2f)² + g² + w²` stays equal to one; the integrator checks
//! this on every accepted step.
//!
//! The integrator is an embedded Dormand-Prince pair (8(5,3) by default,
//! 5(4) on request) with a PI step-size controller. The step is additionally capped at `0.1/ω_max`, where `ω_max`
//! bounds both the mode energy and the fastest field oscillation over the
//! step, so the controller cannot skip over phase rotations while the field is
//! quiet.

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{ChirpLimit, FieldConfig, Violation};
use crate::grid::MomentumGrid;
use crate::observables::{Spectrum, SpectrumDiagnostics, SpectrumPoint};
use crate::rk::{Method, Tableau, Tolerance};
use crate::scalar::Real;

/// Fraction of an oscillation radian allowed per step.
pub const PHASE_STEP_FRACTION: f64 = 0.1;

/// Steps below this fraction of the window count as non-convergence.
pub const MIN_STEP_FRACTION: f64 = 1e-12;

/// Conservation residual allowed per unit of `rtol`.
pub const CONSERVATION_FACTOR: f64 = 100.0;

/// Momentum labels of a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams<T> {
    /// Conserved canonical longitudinal momentum `P3`.
    pub canonical_momentum: T,
    /// Transverse momentum `p⊥ >= 0`.
    pub transverse_momentum: T,
}

impl<T: Real> ModeParams<T> {
    pub fn new(canonical_momentum: T, transverse_momentum: T) -> Self {
        Self { canonical_momentum, transverse_momentum }
    }

    pub fn longitudinal(canonical_momentum: T) -> Self {
        Self::new(canonical_momentum, T::zero())
    }

    /// `ε⊥ = sqrt(1 + p⊥²)`.
    #[inline]
    pub fn transverse_energy(&self) -> T {
        (T::one() + self.transverse_momentum * self.transverse_momentum).sqrt()
    }

    /// Kinetic longitudinal momentum `P3 - A`.
    #[inline]
    pub fn kinetic_momentum(&self, potential: T) -> T {
        self.canonical_momentum - potential
    }
}

/// `ω(p, t) = sqrt(1 + p⊥² + (P3 - A)²)`.
#[inline]
pub fn total_energy<T: Real>(params: &ModeParams<T>, potential: T) -> T {
    let p_par = params.kinetic_momentum(potential);
    let p_perp = params.transverse_momentum;
    (T::one() + p_perp * p_perp + p_par * p_par).sqrt()
}

/// `q = E·ε⊥/ω²`, with `e·E` equal to the dimensionless field value.
#[inline]
pub fn coupling_q<T: Real>(params: &ModeParams<T>, field_value: T, potential: T) -> T {
    let omega = total_energy(params, potential);
    field_value * params.transverse_energy() / (omega * omega)
}

/// Dynamical state of one momentum mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeState<T> {
    /// Occupation number.
    pub f: T,
    /// Source-correlation component.
    pub g: T,
    /// Counter-term component.
    pub w: T,
    /// Vector potential, with `A(t_start) = 0`.
    pub potential: T,
}

impl<T: Real> ModeState<T> {
    pub fn vacuum() -> Self {
        Self { f: T::zero(), g: T::zero(), w: T::zero(), potential: T::zero() }
    }

    /// `(1 - 2f)² + g² + w² - 1`, written as `4f(f - 1) + g² + w²` so that
    /// small occupations do not cancel against the leading one.
    #[inline]
    pub fn conservation_residual(&self) -> T {
        T::lit(4.0) * self.f * (self.f - T::one()) + self.g * self.g + self.w * self.w
    }

    #[inline]
    fn to_array(self) -> [T; 4] {
        [self.f, self.g, self.w, self.potential]
    }

    #[inline]
    fn from_array(a: [T; 4]) -> Self {
        Self { f: a[0], g: a[1], w: a[2], potential: a[3] }
    }
}

/// Time derivative of the mode state. The returned struct holds
/// `(ḟ, ġ, ẇ, Ȧ)`.
#[inline]
pub fn mode_rhs<T: Real>(
    state: &ModeState<T>,
    params: &ModeParams<T>,
    t: T,
    field: &FieldConfig<T>,
) -> ModeState<T> {
    rhs_with_field(state, params, field.strength(t))
}

#[inline]
fn rhs_with_field<T: Real>(state: &ModeState<T>, params: &ModeParams<T>, e: T) -> ModeState<T> {
    let two = T::lit(2.0);
    let omega = total_energy(params, state.potential);
    let q = e * params.transverse_energy() / (omega * omega);
    ModeState {
        f: T::lit(0.5) * q * state.g,
        g: q * (T::one() - two * state.f) - two * omega * state.w,
        w: two * omega * state.g,
        potential: -e,
    }
}

/// Tolerances, window and recording switches for [`solve_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub t_start: T,
    pub t_end: T,
    pub max_step: T,
    pub method: Method,
    pub record_series: bool,
    pub series_stride: usize,
}

impl<T: Real> SolverOptions<T> {
    /// Defaults for `field`: `rtol = 1e-8`, `atol = 1e-12`, window
    /// `[-8τ_max, 8τ_max]`, `max_step = 1`.
    pub fn for_field(field: &FieldConfig<T>) -> Self {
        let (t_start, t_end) = field.default_window();
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-12),
            t_start,
            t_end,
            max_step: T::one(),
            method: Method::default(),
            record_series: false,
            series_stride: 1,
        }
    }

    pub fn with_tolerances(mut self, rtol: T, atol: T) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_window(mut self, t_start: T, t_end: T) -> Self {
        self.t_start = t_start;
        self.t_end = t_end;
        self
    }

    pub fn recording(mut self, stride: usize) -> Self {
        self.record_series = true;
        self.series_stride = stride;
        self
    }

    /// Every violated option invariant.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut out = Vec::new();
        if !(self.rtol > T::zero()) {
            out.push(format!("rtol must be > 0, got {}", self.rtol));
        }
        if !(self.atol > T::zero()) {
            out.push(format!("atol must be > 0, got {}", self.atol));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start < self.t_end) {
            out.push(format!(
                "t_start must be below t_end, got [{}, {}]",
                self.t_start, self.t_end
            ));
        }
        if !(self.max_step > T::zero()) {
            out.push(format!("max_step must be > 0, got {}", self.max_step));
        }
        if self.series_stride == 0 {
            out.push("series_stride must be a positive integer".to_string());
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// One recorded sample of a mode trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint<T> {
    pub t: T,
    pub state: ModeState<T>,
}

/// Outcome of a single mode integration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult<T> {
    pub final_f: T,
    pub final_potential: T,
    /// `P3 - A(t_end)`.
    pub kinetic_momentum_final: T,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest `|conservation_residual|` seen on an accepted step.
    pub max_residual: T,
    pub series: Option<Vec<SeriesPoint<T>>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid field: {}", join(.0))]
    InvalidField(Vec<Violation>),
    #[error("invalid solver options: {}", .0.join("; "))]
    InvalidOptions(Vec<String>),
    #[error("step size underflow at t = {t}: h = {h}")]
    NonConvergence { t: f64, h: f64 },
    #[error("conservation residual {residual:e} exceeds {bound:e} at t = {t}")]
    ToleranceViolation { t: f64, residual: f64, bound: f64 },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Error from a spectrum solve, tagged with the failing grid index.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("mode {index} (P3 = {canonical_momentum}): {source}")]
pub struct SpectrumError {
    pub index: usize,
    pub canonical_momentum: f64,
    #[source]
    pub source: SolveError,
}

/// Integrates one mode from vacuum at `t_start` to `t_end`.
pub fn solve_mode<T: Real>(
    params: &ModeParams<T>,
    field: &FieldConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<ModeResult<T>, SolveError> {
    field.validate_with(ChirpLimit::Allow).map_err(SolveError::InvalidField)?;
    opts.validate().map_err(SolveError::InvalidOptions)?;
    integrate(params, field, opts)
}

fn integrate<T: Real>(
    params: &ModeParams<T>,
    field: &FieldConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<ModeResult<T>, SolveError> {
    let tab = Tableau::<T>::new(opts.method);
    let tol = Tolerance { rtol: opts.rtol, atol: opts.atol };
    let (t0, t_end) = (opts.t_start, opts.t_end);
    let h_min = T::lit(MIN_STEP_FRACTION) * (t_end - t0);
    let phase_frac = T::lit(PHASE_STEP_FRACTION);
    let bound = T::lit(CONSERVATION_FACTOR) * opts.rtol;
    let active = field.peak_bound() > T::zero();

    let rhs = |t: T, y: &[T; 4]| -> [T; 4] {
        rhs_with_field(&ModeState::from_array(*y), params, field.strength(t)).to_array()
    };
    let step_cap = |t: T, h: T, y: &[T; 4]| -> T {
        let mut omega = total_energy(params, y[3]);
        if active {
            omega = omega.max(field.max_abs_frequency(t, t + h));
        }
        opts.max_step.min(phase_frac / omega)
    };

    let mut t = t0;
    let mut y = ModeState::<T>::vacuum().to_array();
    let mut k1 = rhs(t, &y);
    let mut h = step_cap(t, opts.max_step, &y);
    let mut ctrl = tab.controller();
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_residual = T::zero();
    let mut series = opts.record_series.then(|| {
        vec![SeriesPoint { t, state: ModeState::from_array(y) }]
    });

    while t < t_end {
        let remaining = t_end - t;
        h = h.min(remaining);
        h = h.min(step_cap(t, h, &y));
        if h < h_min {
            return Err(SolveError::NonConvergence { t: t.as_f64(), h: h.as_f64() });
        }
        // Fold a sliver left by rounding into this step.
        if remaining - h < h_min {
            h = remaining;
        }
        let last = h >= remaining;

        let t_new = if last { t_end } else { t + h };
        let trial = tab.attempt(&rhs, t, &y, &k1, h, t_new, &tol);
        let (y_new, k_end, err) = (trial.y, trial.k_end, trial.err);

        let (ok, h_next) = ctrl.decide(err, h);
        if ok {
            t = t_new;
            y = y_new;
            k1 = k_end;
            accepted += 1;
            let state = ModeState::from_array(y);
            let residual = state.conservation_residual().abs();
            max_residual = max_residual.max(residual);
            if !(residual <= bound) {
                return Err(SolveError::ToleranceViolation {
                    t: t.as_f64(),
                    residual: residual.as_f64(),
                    bound: bound.as_f64(),
                });
            }
            if let Some(s) = series.as_mut() {
                if accepted % opts.series_stride == 0 || t >= t_end {
                    s.push(SeriesPoint { t, state });
                }
            }
        } else {
            rejected += 1;
        }
        h = h_next;
    }

    let state = ModeState::from_array(y);
    Ok(ModeResult {
        final_f: state.f,
        final_potential: state.potential,
        kinetic_momentum_final: params.kinetic_momentum(state.potential),
        accepted_steps: accepted,
        rejected_steps: rejected,
        max_residual,
        series,
    })
}

/// Solves every mode of `grid` and assembles the spectrum in grid order.
///
/// Modes run on the current rayon pool. Each mode is a pure function of its
/// inputs, so the result does not depend on the pool width.
pub fn solve_spectrum<T: Real>(
    grid: &MomentumGrid<T>,
    field: &FieldConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<Spectrum<T>, SpectrumError> {
    let (spectrum, _) = solve_spectrum_with_results(grid, field, opts)?;
    Ok(spectrum)
}

/// Like [`solve_spectrum`] but also hands back the per-mode results (for
/// series dumps and diagnostics).
pub fn solve_spectrum_with_results<T: Real>(
    grid: &MomentumGrid<T>,
    field: &FieldConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<(Spectrum<T>, Vec<ModeResult<T>>), SpectrumError> {
    let tag = |index: usize, source: SolveError| SpectrumError {
        index,
        canonical_momentum: grid.canonical.get(index).map_or(f64::NAN, |p| p.as_f64()),
        source,
    };
    field.validate_with(ChirpLimit::Allow).map_err(|v| tag(0, SolveError::InvalidField(v)))?;
    opts.validate().map_err(|v| tag(0, SolveError::InvalidOptions(v)))?;

    let p_perp = grid.transverse;
    let outcomes: Vec<Result<ModeResult<T>, SolveError>> = grid
        .canonical
        .par_iter()
        .map(|&p3| integrate(&ModeParams::new(p3, p_perp), field, opts))
        .collect();

    let mut results = Vec::with_capacity(outcomes.len());
    for (i, r) in outcomes.into_iter().enumerate() {
        results.push(r.map_err(|e| tag(i, e))?);
    }

    let points = grid
        .canonical
        .iter()
        .zip(&results)
        .map(|(&p3, r)| SpectrumPoint {
            canonical: p3,
            kinetic: r.kinetic_momentum_final,
            f: r.final_f,
        })
        .collect();
    let diagnostics = SpectrumDiagnostics {
        max_residual: results.iter().fold(T::zero(), |m, r| m.max(r.max_residual)),
        accepted_steps: results.iter().map(|r| r.accepted_steps).sum(),
    };
    let spectrum = Spectrum {
        points,
        transverse_momentum: p_perp,
        field_fingerprint: field.fingerprint(),
        diagnostics,
    };
    Ok((spectrum, results))
}
