//! Spatially homogeneous electric field built from chirped Gaussian pulses.
//!
//! Units: electron mass, ħ and c are 1; field strengths are fractions of the
//! critical field, so `e·E` equals the dimensionless field value.
//!
//! A single pulse is
//!
//! ```text
//! E(t) = E0 · exp(-t² / 2τ²) · cos(b(t)·t² + ω·t)
//! ```
//!
//! where `b(t)` is the chirp, either constant or flipping sign at `t = 0`.
//! A [`FieldConfig`] is the superposition of one or more such pulses.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scalar::Real;

/// Sign of the chirp on the `t <= 0` half of a sign-flipping profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Time dependence of the chirp parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChirpProfile {
    /// `b(t) = chirp` everywhere.
    #[default]
    Constant,
    /// `b(t) = chirp·sign` for `t <= 0` and `-chirp·sign` for `t > 0`.
    SignFlip { first_half_sign: Sign },
}

/// One chirped Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpedPulse<T> {
    /// Peak field strength in units of the critical field.
    pub amplitude: T,
    /// Carrier frequency in units of the electron mass.
    pub carrier_frequency: T,
    /// Gaussian width τ in units of the inverse electron mass.
    pub width: T,
    /// Chirp parameter `b`, in units of mass squared.
    pub chirp: T,
    #[serde(default)]
    pub chirp_profile: ChirpProfile,
}

impl<T: Real> ChirpedPulse<T> {
    /// Unchirped pulse with a constant profile.
    pub fn new(amplitude: T, carrier_frequency: T, width: T) -> Self {
        Self {
            amplitude,
            carrier_frequency,
            width,
            chirp: T::zero(),
            chirp_profile: ChirpProfile::Constant,
        }
    }

    pub fn with_chirp(mut self, chirp: T) -> Self {
        self.chirp = chirp;
        self
    }

    pub fn with_profile(mut self, profile: ChirpProfile) -> Self {
        self.chirp_profile = profile;
        self
    }

    /// Chirp parameter in effect at time `t`.
    #[inline]
    pub fn chirp_at(&self, t: T) -> T {
        match self.chirp_profile {
            ChirpProfile::Constant => self.chirp,
            ChirpProfile::SignFlip { first_half_sign } => {
                let s = first_half_sign.value::<T>();
                if t <= T::zero() {
                    self.chirp * s
                } else {
                    -(self.chirp * s)
                }
            }
        }
    }

    #[inline]
    pub fn envelope(&self, t: T) -> T {
        let x = t / self.width;
        (-(x * x) * T::lit(0.5)).exp()
    }

    #[inline]
    pub fn phase(&self, t: T) -> T {
        self.chirp_at(t) * (t * t) + self.carrier_frequency * t
    }

    #[inline]
    pub fn strength(&self, t: T) -> T {
        self.amplitude * self.envelope(t) * self.phase(t).cos()
    }

    /// Exact time derivative of the phase, `2·b(t)·t + ω`.
    #[inline]
    pub fn instantaneous_frequency(&self, t: T) -> T {
        T::lit(2.0) * self.chirp_at(t) * t + self.carrier_frequency
    }

    /// Largest `|instantaneous_frequency|` over `[t0, t1]`.
    ///
    /// The frequency is piecewise linear in `t` with a possible break at
    /// `t = 0`, so the endpoints and the break point bound it.
    pub fn max_abs_frequency(&self, t0: T, t1: T) -> T {
        let mut m = self
            .instantaneous_frequency(t0)
            .abs()
            .max(self.instantaneous_frequency(t1).abs());
        if t0 <= T::zero() && t1 >= T::zero() {
            m = m.max(self.carrier_frequency.abs());
        }
        m
    }
}

/// What is wrong with a field configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NoPulses,
    NotFinite(&'static str),
    NegativeAmplitude,
    NonPositiveWidth,
    NegativeFrequency,
    /// `|b| < ω/τ` failed.
    ChirpTooLarge { chirp: f64, limit: f64 },
}

/// A single failed invariant, tagged with the offending pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub pulse: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.pulse {
            write!(f, "pulse {i}: ")?;
        }
        match &self.kind {
            ViolationKind::NoPulses => write!(f, "field has no pulses"),
            ViolationKind::NotFinite(name) => write!(f, "{name} is not finite"),
            ViolationKind::NegativeAmplitude => write!(f, "amplitude must be >= 0"),
            ViolationKind::NonPositiveWidth => write!(f, "width must be > 0"),
            ViolationKind::NegativeFrequency => write!(f, "carrier frequency must be >= 0"),
            ViolationKind::ChirpTooLarge { chirp, limit } => write!(
                f,
                "chirp |b| = {} must be strictly below carrier_frequency/width = {}",
                chirp.abs(),
                limit
            ),
        }
    }
}

/// Whether [`FieldConfig::validate_with`] enforces `|b| < ω/τ`.
///
/// Several published parameter sets exceed the limit, so callers may opt out
/// explicitly. The solvers themselves only need the structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChirpLimit {
    #[default]
    Enforce,
    Allow,
}

/// Superposition of chirped pulses. One pulse is the one-color field, two
/// pulses the two-color field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig<T> {
    pub pulses: Vec<ChirpedPulse<T>>,
}

impl<T: Real> FieldConfig<T> {
    pub fn new(pulses: Vec<ChirpedPulse<T>>) -> Self {
        Self { pulses }
    }

    pub fn one_color(pulse: ChirpedPulse<T>) -> Self {
        Self { pulses: vec![pulse] }
    }

    /// Every violated invariant, in pulse order, including the chirp limit.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        self.validate_with(ChirpLimit::Enforce)
    }

    pub fn validate_with(&self, limit: ChirpLimit) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.pulses.is_empty() {
            out.push(Violation { pulse: None, kind: ViolationKind::NoPulses });
        }
        for (i, p) in self.pulses.iter().enumerate() {
            let mut push = |kind| out.push(Violation { pulse: Some(i), kind });
            let named = [
                ("amplitude", p.amplitude),
                ("carrier_frequency", p.carrier_frequency),
                ("width", p.width),
                ("chirp", p.chirp),
            ];
            let mut finite = true;
            for (name, v) in named {
                if !v.is_finite() {
                    push(ViolationKind::NotFinite(name));
                    finite = false;
                }
            }
            if !finite {
                continue;
            }
            if p.amplitude < T::zero() {
                push(ViolationKind::NegativeAmplitude);
            }
            if p.width <= T::zero() {
                push(ViolationKind::NonPositiveWidth);
            }
            if p.carrier_frequency < T::zero() {
                push(ViolationKind::NegativeFrequency);
            }
            if limit == ChirpLimit::Enforce && p.width > T::zero() {
                let limit = p.carrier_frequency / p.width;
                if !(p.chirp.abs() < limit) {
                    push(ViolationKind::ChirpTooLarge {
                        chirp: p.chirp.as_f64(),
                        limit: limit.as_f64(),
                    });
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Field strength `E(t)` in units of the critical field.
    #[inline]
    pub fn strength(&self, t: T) -> T {
        self.pulses.iter().fold(T::zero(), |acc, p| acc + p.strength(t))
    }

    /// Sum of pulse amplitudes, an upper bound on `|E(t)|`.
    pub fn peak_bound(&self) -> T {
        self.pulses.iter().fold(T::zero(), |acc, p| acc + p.amplitude)
    }

    pub fn max_width(&self) -> T {
        self.pulses.iter().fold(T::zero(), |acc, p| acc.max(p.width))
    }

    pub fn min_width(&self) -> T {
        self.pulses.iter().fold(T::infinity(), |acc, p| acc.min(p.width))
    }

    /// Default integration window `[-8·τ_max, 8·τ_max]`.
    pub fn default_window(&self) -> (T, T) {
        let half = T::lit(8.0) * self.max_width();
        (-half, half)
    }

    /// Fastest instantaneous frequency over `[t0, t1]` among pulses that
    /// carry any amplitude.
    pub fn max_abs_frequency(&self, t0: T, t1: T) -> T {
        self.pulses
            .iter()
            .filter(|p| p.amplitude > T::zero())
            .fold(T::zero(), |acc, p| acc.max(p.max_abs_frequency(t0, t1)))
    }

    /// Stable content hash of the pulse parameters, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.pulses {
            for v in [p.amplitude, p.carrier_frequency, p.width, p.chirp] {
                h.update(v.as_f64().to_bits().to_le_bytes());
            }
            match p.chirp_profile {
                ChirpProfile::Constant => h.update([0u8]),
                ChirpProfile::SignFlip { first_half_sign } => {
                    h.update([1u8, i8::from(first_half_sign) as u8])
                }
            }
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Extrema of the vector potential `A(t) = -∫ E` over `[t0, t1]`, with
    /// `A(t0) = 0`.
    ///
    /// Uses the trapezoid rule on a uniform grid fine enough to resolve the
    /// fastest field oscillation in the window.
    pub fn vector_potential_range(&self, t0: T, t1: T) -> (T, T) {
        let fastest = self.max_abs_frequency(t0, t1).max(T::lit(1e-3));
        let h_max = (T::lit(0.05) / fastest).min(self.min_width() / T::lit(200.0));
        let n = ((t1 - t0) / h_max).ceil().to_usize().unwrap_or(1).max(1);
        let h = (t1 - t0) / T::from_count(n);
        let half = T::lit(0.5);
        let (mut a, mut lo, mut hi) = (T::zero(), T::zero(), T::zero());
        let mut e_prev = self.strength(t0);
        for i in 1..=n {
            let t = t0 + h * T::from_count(i);
            let e = self.strength(t);
            a = a - half * h * (e_prev + e);
            e_prev = e;
            lo = lo.min(a);
            hi = hi.max(a);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig1a(b: f64) -> ChirpedPulse<f64> {
        ChirpedPulse::new(0.1, 0.02, 100.0).with_chirp(b)
    }

    #[test]
    fn unchirped_peak_at_origin() {
        assert_eq!(FieldConfig::one_color(fig1a(0.0)).strength(0.0), 0.1);
    }

    #[test]
    fn direct_substitution_at_one_width() {
        let e = FieldConfig::one_color(fig1a(0.000125)).strength(100.0);
        let expected = 0.1 * (-0.5f64).exp() * 3.25f64.cos();
        assert!((e - expected).abs() < 1e-15, "{e} vs {expected}");
    }

    #[test]
    fn sign_flip_field_is_even() {
        let p = fig1a(0.000125).with_profile(ChirpProfile::SignFlip {
            first_half_sign: Sign::Plus,
        });
        for i in 0..2000 {
            let t = i as f64 * 0.4137;
            assert_eq!(p.strength(t), p.strength(-t), "t = {t}");
        }
    }

    #[test]
    fn validation_accepts_standard_parameter_sets() {
        assert!(FieldConfig::one_color(fig1a(0.000125)).validate().is_ok());
        let weak = ChirpedPulse::new(0.01, 0.2, 100.0).with_chirp(0.00125);
        assert!(FieldConfig::one_color(weak).validate().is_ok());
    }

    #[test]
    fn chirp_limit_is_strict() {
        let errs = FieldConfig::one_color(fig1a(0.0002)).validate().unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].pulse, Some(0));
        assert!(matches!(errs[0].kind, ViolationKind::ChirpTooLarge { .. }));
        assert!(FieldConfig::one_color(fig1a(-0.0002)).validate().is_err());
        let strong = FieldConfig::one_color(fig1a(0.00075));
        assert!(strong.validate().is_err());
        assert!(strong.validate_with(ChirpLimit::Allow).is_ok());
    }

    #[test]
    fn validation_reports_every_violation() {
        let bad = ChirpedPulse {
            amplitude: -1.0,
            carrier_frequency: 0.02,
            width: 0.0,
            chirp: 0.0,
            chirp_profile: ChirpProfile::Constant,
        };
        let ok = fig1a(0.0);
        let errs = FieldConfig::new(vec![ok, bad]).validate().unwrap_err();
        let kinds: Vec<_> = errs.iter().map(|v| (v.pulse, v.kind.clone())).collect();
        assert!(kinds.contains(&(Some(1), ViolationKind::NegativeAmplitude)));
        assert!(kinds.contains(&(Some(1), ViolationKind::NonPositiveWidth)));
        assert!(FieldConfig::<f64>::new(vec![]).validate().is_err());
    }

    #[test]
    fn instantaneous_frequency_examples() {
        assert_eq!(fig1a(0.0).instantaneous_frequency(123.0), 0.02);
        let p = ChirpedPulse::new(0.1f64, 0.02, 100.0).with_chirp(0.00075);
        assert!((p.instantaneous_frequency(100.0) - 0.17).abs() < 1e-15);
        let flip = p.with_profile(ChirpProfile::SignFlip { first_half_sign: Sign::Plus });
        assert!((flip.instantaneous_frequency(-100.0) + 0.13).abs() < 1e-15);
        assert!((flip.instantaneous_frequency(100.0) + 0.13).abs() < 1e-15);
        assert_eq!(flip.instantaneous_frequency(0.0), 0.02);
    }

    #[test]
    fn instantaneous_frequency_matches_phase_derivative() {
        let p = ChirpedPulse::new(0.1f64, 0.02, 100.0).with_chirp(-0.00015);
        let h = 1e-4;
        for t in [-300.0, -42.0, 7.5, 250.0] {
            let fd = (p.phase(t + h) - p.phase(t - h)) / (2.0 * h);
            assert!((fd - p.instantaneous_frequency(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn field_is_negligible_outside_default_window() {
        let cfg = FieldConfig::new(vec![
            fig1a(0.00015),
            ChirpedPulse::new(0.01, 0.2, 100.0).with_chirp(0.0015),
        ]);
        let (_, t1) = cfg.default_window();
        for k in 0..100 {
            let t = t1 + k as f64 * 3.3;
            assert!(cfg.strength(t).abs() < 1e-14 * cfg.peak_bound());
            assert!(cfg.strength(-t).abs() < 1e-14 * cfg.peak_bound());
        }
    }

    #[test]
    fn single_precision_field_agrees_with_double() {
        let p32 = ChirpedPulse::<f32>::new(0.1, 0.02, 100.0).with_chirp(0.000125);
        let p64 = fig1a(0.000125);
        for t in [-150.0f32, -3.0, 0.0, 55.5] {
            assert!((p32.strength(t) as f64 - p64.strength(t as f64)).abs() < 1e-6);
        }
    }

    #[test]
    fn vector_potential_of_unchirped_pulse_is_bounded_by_area() {
        // |A| <= ∫|E| <= E0·τ·sqrt(2π)
        let cfg = FieldConfig::one_color(fig1a(0.0));
        let (lo, hi) = cfg.vector_potential_range(-800.0, 800.0);
        let bound = 0.1 * 100.0 * (2.0 * std::f64::consts::PI).sqrt();
        assert!(lo < 0.0 && hi > 0.0);
        assert!(-lo < bound && hi < bound);
    }

    #[test]
    fn fingerprint_distinguishes_profiles() {
        let a = FieldConfig::one_color(fig1a(0.0001));
        let b = FieldConfig::one_color(
            fig1a(0.0001).with_profile(ChirpProfile::SignFlip { first_half_sign: Sign::Minus }),
        );
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn profile_serializes_as_tagged_value() {
        let p = fig1a(0.0001).with_profile(ChirpProfile::SignFlip { first_half_sign: Sign::Minus });
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains(r#""sign_flip":{"first_half_sign":-1}"#), "{s}");
        let back: ChirpedPulse<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let c: ChirpProfile = serde_json::from_str(r#""constant""#).unwrap();
        assert_eq!(c, ChirpProfile::Constant);
    }

    proptest! {
        #[test]
        fn constant_chirp_time_reverse_is_exact(
            b in -1.9e-4f64..1.9e-4, t in -900.0f64..900.0, w in 0.0f64..0.5,
        ) {
            let fwd = ChirpedPulse::new(0.1, w, 100.0).with_chirp(b);
            let rev = ChirpedPulse::new(0.1, w, 100.0).with_chirp(-b);
            prop_assert_eq!(fwd.strength(t), rev.strength(-t));
        }

        #[test]
        fn sign_flip_evenness(b in 0.0f64..2e-4, t in 0.0f64..900.0, plus in any::<bool>()) {
            let sign = if plus { Sign::Plus } else { Sign::Minus };
            let p = ChirpedPulse::new(0.1, 0.02, 100.0)
                .with_chirp(b)
                .with_profile(ChirpProfile::SignFlip { first_half_sign: sign });
            prop_assert_eq!(p.strength(t), p.strength(-t));
        }

        #[test]
        fn field_bounded_by_amplitude_sum(t in -2000.0f64..2000.0, b1 in -1.9e-4f64..1.9e-4) {
            let cfg = FieldConfig::new(vec![
                ChirpedPulse::new(0.1, 0.02, 100.0).with_chirp(b1),
                ChirpedPulse::new(0.01, 0.2, 100.0).with_chirp(10.0 * b1),
            ]);
            prop_assert!(cfg.strength(t).abs() <= cfg.peak_bound());
        }
    }
}
