//! Reference solver for the integro-differential form of the kinetic
//! equation,
//!
//! ```text
//! f'(t) = ½ q(t) ∫_{t0}^{t} q(t') [1 - 2f(t')] cos(2Θ(t', t)) dt'
//! Θ(t', t) = Φ(t) - Φ(t'),   Φ(t) = ∫_{t0}^{t} ω(τ) dτ
//! ```
//!
//! Everything runs on one uniform time grid with the trapezoid rule: the
//! vector potential, the phase table `Φ`, the history integral, and the
//! update of `f` itself (which is implicit in `f_{n+1}` but linear, so it is
//! solved in closed form). Each step re-sums the whole history, so the cost
//! is quadratic in the number of steps. Keep it to short pulses.

use thiserror::Error;

use crate::field::{ChirpLimit, FieldConfig, Violation};
use crate::scalar::Real;
use crate::solver::{total_energy, ModeParams};

/// Steps per radian of the fastest oscillation, as `2π/(64·ω_max)`.
pub const STEPS_PER_PERIOD: f64 = 64.0;

/// Minimum number of steps per pulse width.
pub const STEPS_PER_WIDTH: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions<T> {
    pub step: T,
    pub t_start: T,
    pub t_end: T,
}

impl<T: Real> OracleOptions<T> {
    /// Largest admissible step over `[t_start, t_end]`, divided by
    /// `refinement`.
    pub fn admissible(
        params: &ModeParams<T>,
        field: &FieldConfig<T>,
        t_start: T,
        t_end: T,
        refinement: T,
    ) -> Self {
        let step = step_limit(params, field, t_start, t_end) / refinement;
        Self { step, t_start, t_end }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid field: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidField(Vec<Violation>),
    #[error("oracle window [{t_start}, {t_end}] is empty")]
    BadWindow { t_start: f64, t_end: f64 },
    #[error("oracle step {step} exceeds the admissible {limit}")]
    StepTooLarge { step: f64, limit: f64 },
}

/// `min(2π/(64·ω_max), τ_min/1000)`, with `ω_max` bounding the mode energy
/// and every pulse frequency over the window.
pub fn step_limit<T: Real>(params: &ModeParams<T>, field: &FieldConfig<T>, t0: T, t1: T) -> T {
    let (a_lo, a_hi) = field.vector_potential_range(t0, t1);
    let energy = total_energy(params, a_lo).max(total_energy(params, a_hi));
    let omega_max = energy.max(field.max_abs_frequency(t0, t1));
    let by_period = T::lit(2.0) * T::PI() / (T::lit(STEPS_PER_PERIOD) * omega_max);
    by_period.min(field.min_width() / T::lit(STEPS_PER_WIDTH))
}

/// Final occupation `f(t_end)` from vacuum data at `t_start`.
pub fn oracle_solve_mode<T: Real>(
    params: &ModeParams<T>,
    field: &FieldConfig<T>,
    opts: &OracleOptions<T>,
) -> Result<T, OracleError> {
    field.validate_with(ChirpLimit::Allow).map_err(OracleError::InvalidField)?;
    let (t0, t1) = (opts.t_start, opts.t_end);
    if !(t0 < t1) {
        return Err(OracleError::BadWindow { t_start: t0.as_f64(), t_end: t1.as_f64() });
    }
    let limit = step_limit(params, field, t0, t1);
    if !(opts.step > T::zero() && opts.step <= limit) {
        return Err(OracleError::StepTooLarge { step: opts.step.as_f64(), limit: limit.as_f64() });
    }

    let n = ((t1 - t0) / opts.step).ceil().to_usize().unwrap_or(1).max(1);
    let h = (t1 - t0) / T::from_count(n);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let eps_perp = params.transverse_energy();

    // Tables on the uniform grid: q, and cos/sin of twice the phase.
    let mut q = Vec::with_capacity(n + 1);
    let mut cos2 = Vec::with_capacity(n + 1);
    let mut sin2 = Vec::with_capacity(n + 1);
    let (mut a, mut phi) = (T::zero(), T::zero());
    let mut e_prev = field.strength(t0);
    let mut w_prev = total_energy(params, a);
    for j in 0..=n {
        let t = t0 + h * T::from_count(j);
        let e = field.strength(t);
        if j > 0 {
            a = a - half * h * (e_prev + e);
        }
        let w = total_energy(params, a);
        if j > 0 {
            phi = phi + half * h * (w_prev + w);
        }
        q.push(e * eps_perp / (w * w));
        cos2.push((two * phi).cos());
        sin2.push((two * phi).sin());
        e_prev = e;
        w_prev = w;
    }

    // source[j] = q_j (1 - 2 f_j), filled as f advances.
    let mut source = Vec::with_capacity(n + 1);
    let mut f = T::zero();
    let mut f_rate = T::zero();
    source.push(q[0]);
    for m in 1..=n {
        // History over j < m; the j = m endpoint is handled implicitly.
        let mut history = half * source[0] * (cos2[m] * cos2[0] + sin2[m] * sin2[0]);
        for j in 1..m {
            history = history + source[j] * (cos2[m] * cos2[j] + sin2[m] * sin2[j]);
        }
        history = history * h;
        let alpha = half * h * half * q[m];
        let numer = f + half * h * f_rate + alpha * (history + half * h * q[m]);
        let f_new = numer / (T::one() + alpha * h * q[m]);
        let s_new = q[m] * (T::one() - two * f_new);
        f_rate = half * q[m] * (history + half * h * s_new);
        f = f_new;
        source.push(s_new);
    }
    Ok(f)
}
