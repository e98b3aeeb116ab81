//! Parameter scans: a base field, an axis of parameter values and a list of
//! labeled chirp assignments, mapped over the spectrum solver.
//!
//! Rows are independent and land in `(variant, axis)` order whatever the
//! execution order, so output does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ChirpLimit, ChirpProfile, ChirpedPulse, FieldConfig, Sign, Violation};
use crate::grid::{GridError, GridRange, MomentumGrid, DEFAULT_POINTS};
use crate::observables::{
    number_density_3d, number_density_reduced, DensityMode, DensityResult, ObservableError,
    Spectrum,
};
use crate::rk::Method;
use crate::scalar::Real;
use crate::solver::{solve_spectrum, SolverOptions, SpectrumError};

pub const DEFAULT_PERP_POINTS: usize = 64;
pub const DEFAULT_PERP_MAX: f64 = 1.5;

/// Momentum sampling used for every spectrum of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy<T> {
    pub n_par: usize,
    pub range: GridRange<T>,
    /// Transverse momentum of the single sheet used by reduced densities.
    pub p_perp: T,
    /// Number of transverse sheets for cylindrical densities.
    pub n_perp: usize,
    /// Largest transverse momentum for cylindrical densities.
    pub perp_max: T,
}

impl<T: Real> Default for GridPolicy<T> {
    fn default() -> Self {
        Self {
            n_par: DEFAULT_POINTS,
            range: GridRange::Auto,
            p_perp: T::zero(),
            n_perp: DEFAULT_PERP_POINTS,
            perp_max: T::lit(DEFAULT_PERP_MAX),
        }
    }
}

impl<T: Real> GridPolicy<T> {
    pub fn with_points(mut self, n_par: usize) -> Self {
        self.n_par = n_par;
        self
    }

    /// Transverse momenta of the cylindrical sheets, `0..=perp_max`.
    pub fn perp_values(&self) -> Vec<T> {
        let n = self.n_perp.max(2);
        (0..n).map(|j| self.perp_max * T::from_count(j) / T::from_count(n - 1)).collect()
    }
}

/// Solver settings applied to each field of a run; the window defaults to
/// the field's own `[-8τ, 8τ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: T,
    pub method: Method,
    pub window: Option<(T, T)>,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-12),
            max_step: T::one(),
            method: Method::default(),
            window: None,
        }
    }
}

impl<T: Real> SolverSettings<T> {
    pub fn options_for(&self, field: &FieldConfig<T>) -> SolverOptions<T> {
        let (t0, t1) = self.window.unwrap_or_else(|| field.default_window());
        let mut opts = SolverOptions::for_field(field)
            .with_tolerances(self.rtol, self.atol)
            .with_window(t0, t1)
            .with_method(self.method);
        opts.max_step = self.max_step;
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("invalid field: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidField(Vec<Violation>),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SpectrumError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

impl RunError {
    /// Whether the failure came out of the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            RunError::Solve(e) => !matches!(
                e.source,
                crate::solver::SolveError::InvalidField(_)
                    | crate::solver::SolveError::InvalidOptions(_)
            ),
            RunError::Observable(ObservableError::GridTooCoarse { .. }) => true,
            RunError::Observable(ObservableError::NegativeOccupation { .. }) => true,
            _ => false,
        }
    }
}

/// Spectra and density of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    /// One spectrum for reduced densities, one per transverse sheet otherwise.
    pub spectra: Vec<Spectrum<T>>,
    pub density: DensityResult<T>,
}

/// Solves the spectrum (or the stack of transverse sheets) of `field` and
/// integrates it into a density.
pub fn measure<T: Real>(
    field: &FieldConfig<T>,
    grid: &GridPolicy<T>,
    settings: &SolverSettings<T>,
    mode: DensityMode,
    limit: ChirpLimit,
) -> Result<Measurement<T>, RunError> {
    field.validate_with(limit).map_err(RunError::InvalidField)?;
    let opts = settings.options_for(field);
    let window = (opts.t_start, opts.t_end);
    match mode {
        DensityMode::Reduced1D => {
            let g = MomentumGrid::with_range(grid.range, grid.n_par, grid.p_perp, field, window)?;
            let spectrum = solve_spectrum(&g, field, &opts)?;
            let density = number_density_reduced(&spectrum)?;
            Ok(Measurement { spectra: vec![spectrum], density })
        }
        DensityMode::Cylindrical3D => {
            // Every sheet shares the longitudinal grid sized for the widest one.
            let base = MomentumGrid::with_range(grid.range, grid.n_par, grid.perp_max, field, window)?;
            let spectra = grid
                .perp_values()
                .into_iter()
                .map(|pt| {
                    let g = MomentumGrid::new(base.canonical.clone(), pt)?;
                    Ok(solve_spectrum(&g, field, &opts)?)
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            let density = number_density_3d(&spectra)?;
            Ok(Measurement { spectra, density })
        }
    }
}

/// What the axis value controls on the base field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Carrier frequency of the first pulse.
    CarrierFrequency,
    /// Chirp magnitude `|b|`, placed by the variants.
    ChirpMagnitude,
    /// Chirp-to-frequency ratio `|b|/ω`, applied to every pulse.
    SignCombination,
    /// `ω₂/ω₁`: the second pulse's carrier frequency relative to the first.
    FrequencyRatio,
}

/// Magnitude of a pulse's chirp within a variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChirpValue<T> {
    Fixed(T),
    /// The axis value itself.
    Axis,
    /// Axis value times the pulse's carrier frequency.
    AxisTimesFrequency,
}

/// Chirp assignment for one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseChirp<T> {
    pub value: ChirpValue<T>,
    pub sign: Sign,
    pub sign_flip: bool,
}

impl<T: Real> PulseChirp<T> {
    pub fn constant(value: ChirpValue<T>, sign: Sign) -> Self {
        Self { value, sign, sign_flip: false }
    }

    pub fn flip(value: ChirpValue<T>, first_half_sign: Sign) -> Self {
        Self { value, sign: first_half_sign, sign_flip: true }
    }

    pub fn none() -> Self {
        Self::constant(ChirpValue::Fixed(T::zero()), Sign::Plus)
    }

    fn apply(&self, pulse: &mut ChirpedPulse<T>, axis: T) {
        let magnitude = match self.value {
            ChirpValue::Fixed(v) => v,
            ChirpValue::Axis => axis,
            ChirpValue::AxisTimesFrequency => axis * pulse.carrier_frequency,
        };
        if self.sign_flip {
            pulse.chirp = magnitude;
            pulse.chirp_profile = ChirpProfile::SignFlip { first_half_sign: self.sign };
        } else {
            pulse.chirp = self.sign.value::<T>() * magnitude;
            pulse.chirp_profile = ChirpProfile::Constant;
        }
    }
}

/// A labeled field transformation: chirp assignments in pulse order.
/// Pulses beyond the list keep their base chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant<T> {
    pub label: String,
    pub chirps: Vec<PulseChirp<T>>,
}

impl<T: Real> Variant<T> {
    pub fn new(label: impl Into<String>, chirps: Vec<PulseChirp<T>>) -> Self {
        Self { label: label.into(), chirps }
    }
}

/// Published scan setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Density against carrier frequency, `b ∈ {0, ±0.00025}`.
    Fig2,
    /// Density against `|b|` for constant and sign-flipping chirps.
    Fig3,
    /// Two-color sign combinations against `|b|/ω`.
    Fig5,
    /// Two-color, a small chirp on one color, against `ω₂/ω₁`.
    Fig6,
    /// Two-color, larger `b₂`, against `ω₂/ω₁`.
    Fig7,
}

/// One-color pulse `E0 = 0.1, ω = 0.02, τ = 100`.
pub fn one_color_base<T: Real>() -> FieldConfig<T> {
    FieldConfig::one_color(ChirpedPulse::new(T::lit(0.1), T::lit(0.02), T::lit(100.0)))
}

/// Two-color pulse `E1 = 0.1, ω1 = 0.02`, `E2 = 0.01, ω2 = 0.2`, `τ = 100`.
pub fn two_color_base<T: Real>() -> FieldConfig<T> {
    FieldConfig::new(vec![
        ChirpedPulse::new(T::lit(0.1), T::lit(0.02), T::lit(100.0)),
        ChirpedPulse::new(T::lit(0.01), T::lit(0.2), T::lit(100.0)),
    ])
}

fn fixed<T: Real>(v: f64) -> ChirpValue<T> {
    ChirpValue::Fixed(T::lit(v))
}

/// `b = 0`, `b = +0.00025`, `b = -0.00025`.
pub fn fig2_variants<T: Real>() -> Vec<Variant<T>> {
    vec![
        Variant::new("b=0", vec![PulseChirp::none()]),
        Variant::new("b=+0.00025", vec![PulseChirp::constant(fixed(0.00025), Sign::Plus)]),
        Variant::new("b=-0.00025", vec![PulseChirp::constant(fixed(0.00025), Sign::Minus)]),
    ]
}

/// (a) constant `+|b|`, (b) constant `-|b|`, (c) sign flip starting `+`,
/// (d) sign flip starting `-`.
pub fn fig3_variants<T: Real>() -> Vec<Variant<T>> {
    vec![
        Variant::new("a", vec![PulseChirp::constant(ChirpValue::Axis, Sign::Plus)]),
        Variant::new("b", vec![PulseChirp::constant(ChirpValue::Axis, Sign::Minus)]),
        Variant::new("c", vec![PulseChirp::flip(ChirpValue::Axis, Sign::Plus)]),
        Variant::new("d", vec![PulseChirp::flip(ChirpValue::Axis, Sign::Minus)]),
    ]
}

/// The four sign combinations of `(b1, b2)` with `|b_k| = axis·ω_k`.
pub fn fig5_variants<T: Real>() -> Vec<Variant<T>> {
    let both = |label: &str, s1, s2| {
        Variant::new(
            label,
            vec![
                PulseChirp::constant(ChirpValue::AxisTimesFrequency, s1),
                PulseChirp::constant(ChirpValue::AxisTimesFrequency, s2),
            ],
        )
    };
    vec![
        both("b1+b2+", Sign::Plus, Sign::Plus),
        both("b1-b2-", Sign::Minus, Sign::Minus),
        both("b1+b2-", Sign::Plus, Sign::Minus),
        both("b1-b2+", Sign::Minus, Sign::Plus),
    ]
}

fn two_chirps<T: Real>(label: &str, b1: f64, b2: f64) -> Variant<T> {
    Variant::new(
        label,
        vec![
            PulseChirp::constant(fixed(b1), Sign::Plus),
            PulseChirp::constant(fixed(b2), Sign::Plus),
        ],
    )
}

/// Chirp-free reference, `b1 = 0.000125` alone, `b2 = 0.00125` alone.
pub fn fig6_variants<T: Real>() -> Vec<Variant<T>> {
    vec![
        two_chirps("chirp_free", 0.0, 0.0),
        two_chirps("b1=0.000125", 0.000125, 0.0),
        two_chirps("b2=0.00125", 0.0, 0.00125),
    ]
}

/// `b2` values of the four groups in [`fig7_variants`].
pub const FIG7_B2: [f64; 4] = [0.00125, 0.0025, 0.005, 0.0075];

/// Chirp-free reference, then per group `g` (`b2 = FIG7_B2[g-1]`) the
/// curves `b1 = 0` and `b1 = b2/10`.
pub fn fig7_variants<T: Real>() -> Vec<Variant<T>> {
    let mut out = vec![two_chirps("chirp_free", 0.0, 0.0)];
    for (g, b2) in FIG7_B2.iter().enumerate() {
        out.push(two_chirps(&format!("g{}:b2={b2}", g + 1), 0.0, *b2));
        out.push(two_chirps(&format!("g{}:b2={b2}:b1={}", g + 1, b2 / 10.0), b2 / 10.0, *b2));
    }
    out
}

/// `n` evenly spaced values on `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * T::from_count(i) / T::from_count(n - 1)
                }
            })
            .collect(),
    }
}

impl Preset {
    pub fn kind(self) -> SweepKind {
        match self {
            Preset::Fig2 => SweepKind::CarrierFrequency,
            Preset::Fig3 => SweepKind::ChirpMagnitude,
            Preset::Fig5 => SweepKind::SignCombination,
            Preset::Fig6 | Preset::Fig7 => SweepKind::FrequencyRatio,
        }
    }

    pub fn base_field<T: Real>(self) -> FieldConfig<T> {
        match self {
            Preset::Fig2 | Preset::Fig3 => one_color_base(),
            _ => two_color_base(),
        }
    }

    pub fn variants<T: Real>(self) -> Vec<Variant<T>> {
        match self {
            Preset::Fig2 => fig2_variants(),
            Preset::Fig3 => fig3_variants(),
            Preset::Fig5 => fig5_variants(),
            Preset::Fig6 => fig6_variants(),
            Preset::Fig7 => fig7_variants(),
        }
    }

    /// Default axis; `None` when the axis must be given explicitly.
    pub fn default_axis<T: Real>(self) -> Option<Vec<T>> {
        match self {
            Preset::Fig2 => Some(linspace(T::lit(0.005), T::lit(0.5), 100)),
            Preset::Fig3 => Some(linspace(T::zero(), T::lit(0.00075), 16)),
            Preset::Fig5 => None,
            Preset::Fig6 | Preset::Fig7 => {
                Some([10.0, 15.0, 20.0, 25.0, 30.0].iter().map(|&v| T::lit(v)).collect())
            }
        }
    }

    /// Whether the published parameters exceed `|b| < ω/τ` somewhere.
    pub fn needs_strong_chirp(self) -> bool {
        matches!(self, Preset::Fig2 | Preset::Fig3 | Preset::Fig7)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub kind: SweepKind,
    pub base_field: FieldConfig<T>,
    pub axis: Vec<T>,
    pub variants: Vec<Variant<T>>,
    pub solver: SolverSettings<T>,
    pub grid: GridPolicy<T>,
    pub mode: DensityMode,
    pub chirp_limit: ChirpLimit,
    /// Keep the spectra of every row in the result.
    pub keep_spectra: bool,
}

impl<T: Real> SweepSpec<T> {
    /// Preset sweep with its default axis (empty when the preset has none),
    /// default solver settings and grid.
    pub fn preset(preset: Preset) -> Self {
        Self {
            kind: preset.kind(),
            base_field: preset.base_field(),
            axis: preset.default_axis().unwrap_or_default(),
            variants: preset.variants(),
            solver: SolverSettings::default(),
            grid: GridPolicy::default(),
            mode: DensityMode::Reduced1D,
            chirp_limit: if preset.needs_strong_chirp() {
                ChirpLimit::Allow
            } else {
                ChirpLimit::Enforce
            },
            keep_spectra: false,
        }
    }

    pub fn with_axis(mut self, axis: Vec<T>) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_variants(mut self, variants: Vec<Variant<T>>) -> Self {
        self.variants = variants;
        self
    }

    /// Field for one `(variant, axis value)` row.
    pub fn field_for(&self, variant: &Variant<T>, x: T) -> FieldConfig<T> {
        let mut field = self.base_field.clone();
        match self.kind {
            SweepKind::CarrierFrequency => {
                if let Some(p) = field.pulses.first_mut() {
                    p.carrier_frequency = x;
                }
            }
            SweepKind::FrequencyRatio => {
                if field.pulses.len() >= 2 {
                    let w1 = field.pulses[0].carrier_frequency;
                    field.pulses[1].carrier_frequency = x * w1;
                }
            }
            SweepKind::ChirpMagnitude | SweepKind::SignCombination => {}
        }
        for (pulse, chirp) in field.pulses.iter_mut().zip(&variant.chirps) {
            chirp.apply(pulse, x);
        }
        field
    }

    /// Every structural problem with the sweep, including invalid row fields.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut out = Vec::new();
        if self.axis.is_empty() {
            out.push("axis must not be empty".to_string());
        }
        if let Some(i) = self.axis.windows(2).position(|w| !(w[0] < w[1])) {
            out.push(format!("axis must be strictly increasing (index {})", i + 1));
        }
        if self.axis.iter().any(|x| !x.is_finite()) {
            out.push("axis values must be finite".to_string());
        }
        if self.variants.is_empty() {
            out.push("at least one variant is required".to_string());
        }
        if self.kind == SweepKind::FrequencyRatio && self.base_field.pulses.len() < 2 {
            out.push("frequency-ratio sweeps need a two-color base field".to_string());
        }
        for v in &self.variants {
            if v.label.is_empty() || v.label.contains([',', '"', '\n', '\r']) {
                out.push(format!("variant label {:?} must be non-empty without commas, quotes or newlines", v.label));
            }
            if v.chirps.len() > self.base_field.pulses.len() {
                out.push(format!(
                    "variant {:?} assigns {} chirps to a field of {} pulses",
                    v.label,
                    v.chirps.len(),
                    self.base_field.pulses.len()
                ));
            }
            if v.chirps.iter().any(|c| matches!(c.value, ChirpValue::Fixed(b) if !(b >= T::zero())))
            {
                out.push(format!("variant {:?}: fixed chirp magnitudes must be >= 0", v.label));
            }
            for &x in &self.axis {
                if let Err(errs) = self.field_for(v, x).validate_with(self.chirp_limit) {
                    for e in errs {
                        out.push(format!("variant {:?} at axis value {x}: {e}", v.label));
                    }
                }
            }
        }
        if self.grid.n_par < 2 {
            out.push("grid needs at least two longitudinal points".to_string());
        }
        if self.mode == DensityMode::Cylindrical3D && self.grid.n_perp < 2 {
            out.push("cylindrical densities need at least two transverse points".to_string());
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn row_count(&self) -> usize {
        self.axis.len() * self.variants.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub variant: String,
    pub axis_value: T,
    pub outcome: Result<DensityResult<T>, RunError>,
    pub spectra: Option<Vec<Spectrum<T>>>,
}

impl<T: Real> SweepRow<T> {
    pub fn density(&self) -> Option<T> {
        self.outcome.as_ref().ok().map(|d| d.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub kind: SweepKind,
    pub mode: DensityMode,
    pub n_grid: usize,
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn row(&self, variant: &str, axis_value: T) -> Option<&SweepRow<T>> {
        self.rows.iter().find(|r| r.variant == variant && r.axis_value == axis_value)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow<T>> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }
}

/// Runs every `(variant, axis value)` row on the current rayon pool. Failed
/// rows keep their error and the sweep carries on.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>) -> SweepResult<T> {
    let tasks: Vec<(&Variant<T>, T)> = spec
        .variants
        .iter()
        .flat_map(|v| spec.axis.iter().map(move |&x| (v, x)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(v, x)| {
            let field = spec.field_for(v, x);
            let outcome = measure(&field, &spec.grid, &spec.solver, spec.mode, spec.chirp_limit);
            let (outcome, spectra) = match outcome {
                Ok(m) => (Ok(m.density), spec.keep_spectra.then_some(m.spectra)),
                Err(e) => (Err(e), None),
            };
            SweepRow { variant: v.label.clone(), axis_value: x, outcome, spectra }
        })
        .collect();
    SweepResult { kind: spec.kind, mode: spec.mode, n_grid: spec.grid.n_par, rows }
}

/// Runs `job` on a dedicated pool of `threads` workers (0 picks the rayon
/// default).
pub fn with_threads<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_has_four_variants_that_agree_at_zero_chirp() {
        let spec = SweepSpec::<f64>::preset(Preset::Fig3);
        assert_eq!(spec.variants.len(), 4);
        let fields: Vec<_> = spec.variants.iter().map(|v| spec.field_for(v, 0.0)).collect();
        for f in &fields {
            for t in [-250.0, -3.0, 0.0, 17.0, 400.0] {
                assert_eq!(f.strength(t), fields[0].strength(t));
            }
        }
    }

    #[test]
    fn fig3_variants_build_expected_profiles() {
        let spec = SweepSpec::<f64>::preset(Preset::Fig3);
        let p: Vec<_> = spec.variants.iter().map(|v| spec.field_for(v, 0.0005).pulses[0]).collect();
        assert_eq!(p[0].chirp, 0.0005);
        assert_eq!(p[1].chirp, -0.0005);
        assert_eq!(p[2].chirp_profile, ChirpProfile::SignFlip { first_half_sign: Sign::Plus });
        assert_eq!(p[3].chirp_profile, ChirpProfile::SignFlip { first_half_sign: Sign::Minus });
        assert_eq!(p[2].chirp_at(-1.0), 0.0005);
        assert_eq!(p[3].chirp_at(-1.0), -0.0005);
    }

    #[test]
    fn fig5_variants_scale_chirps_with_frequency() {
        let spec = SweepSpec::<f64>::preset(Preset::Fig5).with_axis(vec![0.0, 0.00625]);
        assert_eq!(spec.variants.len(), 4);
        let f = spec.field_for(&spec.variants[2], 0.00625);
        assert!((f.pulses[0].chirp - 0.000125).abs() < 1e-18);
        assert!((f.pulses[1].chirp + 0.00125).abs() < 1e-18);
        let base = two_color_base::<f64>();
        for v in &spec.variants {
            assert_eq!(spec.field_for(v, 0.0), base);
        }
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn fig5_has_no_default_axis() {
        let spec = SweepSpec::<f64>::preset(Preset::Fig5);
        assert!(spec.axis.is_empty());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn frequency_ratio_sets_second_color() {
        let spec = SweepSpec::<f64>::preset(Preset::Fig7);
        let f = spec.field_for(&spec.variants[8], 30.0);
        assert!((f.pulses[1].carrier_frequency - 0.6).abs() < 1e-15);
        assert_eq!(f.pulses[1].chirp, 0.0075);
        assert!((f.pulses[0].chirp - 0.00075).abs() < 1e-18);
        assert_eq!(spec.variants.len(), 9);
    }

    #[test]
    fn strong_chirp_needs_opt_in() {
        let mut spec = SweepSpec::<f64>::preset(Preset::Fig3);
        assert!(spec.validate().is_ok());
        spec.chirp_limit = ChirpLimit::Enforce;
        let errs = spec.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.contains("strictly below")), "{errs:?}");
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut spec = SweepSpec::<f64>::preset(Preset::Fig2).with_axis(vec![0.3, 0.2]);
        spec.variants[0].label = "bad,label".into();
        spec.grid.n_par = 1;
        let errs = spec.validate().unwrap_err();
        assert_eq!(errs.len(), 3, "{errs:?}");
    }

    #[test]
    fn rows_follow_variant_then_axis_order() {
        let mut spec = SweepSpec::<f64>::preset(Preset::Fig3).with_axis(vec![0.0, 0.0001]);
        spec.base_field.pulses[0].amplitude = 0.0;
        spec.grid = GridPolicy::default().with_points(5);
        spec.grid.range = GridRange::Explicit(-1.0, 1.0);
        let result = with_threads(2, || run_sweep(&spec));
        let order: Vec<(String, f64)> =
            result.rows.iter().map(|r| (r.variant.clone(), r.axis_value)).collect();
        let expected: Vec<(String, f64)> = ["a", "b", "c", "d"]
            .iter()
            .flat_map(|v| [0.0, 0.0001].map(|x| (v.to_string(), x)))
            .collect();
        assert_eq!(order, expected);
        assert!(result.rows.iter().all(|r| r.density() == Some(0.0)));
    }

    #[test]
    fn failed_rows_are_recorded() {
        let mut spec = SweepSpec::<f64>::preset(Preset::Fig3).with_axis(vec![0.0]);
        spec.grid = GridPolicy::default().with_points(5);
        spec.grid.range = GridRange::Explicit(-1.0, 1.0);
        spec.solver.max_step = 1e-14;
        let result = run_sweep(&spec);
        assert_eq!(result.failures().count(), 4);
        assert!(result.rows.iter().all(|r| r.outcome.as_ref().unwrap_err().is_numerical()));
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(0.0, 0.00075, 16);
        assert_eq!((v[0], v[15], v.len()), (0.0, 0.00075, 16));
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn perp_values_span_range() {
        let g = GridPolicy::<f64>::default();
        let v = g.perp_values();
        assert_eq!(v.len(), 64);
        assert_eq!((v[0], v[63]), (0.0, 1.5));
    }
}
