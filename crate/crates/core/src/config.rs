//! Run configuration: JSON parsing with full violation lists.
//!
//! Every problem found is reported with a JSON pointer to the offending
//! value; parsing never stops at the first error.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::field::{ChirpLimit, ChirpProfile, ChirpedPulse, FieldConfig, Sign};
use crate::grid::{GridRange, DEFAULT_POINTS};
use crate::observables::DensityMode;
use crate::rk::Method;
use crate::solver::SolverOptions;
use crate::sweeps::{
    linspace, ChirpValue, GridPolicy, Preset, PulseChirp, SolverSettings, SweepKind, SweepSpec,
    Variant, DEFAULT_PERP_MAX, DEFAULT_PERP_POINTS,
};

pub const SCHEMA_VERSION: u64 = 1;

pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const DENSITY_FILE: &str = "density.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ORACLE_FILE: &str = "oracle_report.json";
pub const SERIES_DIR: &str = "series";
pub const SPECTRA_DIR: &str = "spectra";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// JSON pointer to the offending value (`""` is the whole document).
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{at}: {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Density,
    Sweep,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Density => "density",
            Command::Sweep => "sweep",
            Command::OracleCheck => "oracle-check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Command::Spectrum, Command::Density, Command::Sweep, Command::OracleCheck]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_par: usize,
    pub range: GridRange<f64>,
    pub p_perp: f64,
    pub n_perp: usize,
    pub perp_max: f64,
}

impl GridConfig {
    pub fn policy(&self) -> GridPolicy<f64> {
        GridPolicy {
            n_par: self.n_par,
            range: self.range,
            p_perp: self.p_perp,
            n_perp: self.n_perp,
            perp_max: self.perp_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub max_step: f64,
    pub method: Method,
    pub record_series: bool,
    pub series_stride: usize,
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions<f64> {
        SolverOptions {
            rtol: self.rtol,
            atol: self.atol,
            t_start: self.t_start,
            t_end: self.t_end,
            max_step: self.max_step,
            method: self.method,
            record_series: self.record_series,
            series_stride: self.series_stride,
        }
    }

    pub fn settings(&self) -> SolverSettings<f64> {
        SolverSettings {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            method: self.method,
            window: Some((self.t_start, self.t_end)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub spec: SweepSpec<f64>,
    /// Also write every row's spectrum.
    pub write_spectra: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub p3: Vec<f64>,
    pub p_perp: f64,
    /// Divides the largest admissible oracle step.
    pub refinement: f64,
    /// Largest accepted relative deviation.
    pub tolerance: f64,
    /// Modes with an oracle value at or below this are not compared.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub overwrite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schema_version: u64,
    pub command: Command,
    pub field: FieldConfig<f64>,
    pub chirp_limit: ChirpLimit,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub density_mode: DensityMode,
    pub sweep: Option<SweepConfig>,
    pub oracle: Option<OracleConfig>,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Files the configured command will write, in output order.
    pub fn planned_outputs(&self) -> Vec<PathBuf> {
        let dir = &self.output.directory;
        match self.command {
            Command::Spectrum => {
                let mut out = vec![dir.join(SPECTRUM_FILE)];
                if self.solver.record_series {
                    out.extend((0..self.grid.n_par).map(|i| series_path(dir, i)));
                }
                out
            }
            Command::Density => vec![dir.join(DENSITY_FILE)],
            Command::Sweep => {
                let mut out = vec![dir.join(SWEEP_FILE)];
                if let Some(s) = self.sweep.as_ref().filter(|s| s.write_spectra) {
                    out.extend((0..s.spec.row_count()).map(|i| row_spectrum_path(dir, i)));
                }
                out
            }
            Command::OracleCheck => vec![dir.join(ORACLE_FILE)],
        }
    }

    /// Existing outputs that would be clobbered without `overwrite`.
    pub fn output_conflicts(&self) -> Vec<ConfigError> {
        if self.output.overwrite {
            return Vec::new();
        }
        self.planned_outputs()
            .into_iter()
            .filter(|p| p.exists())
            .map(|p| ConfigError {
                pointer: "/output/overwrite".into(),
                message: format!("{} exists and overwrite is false", p.display()),
            })
            .collect()
    }
}

pub fn series_path(dir: &Path, mode_index: usize) -> PathBuf {
    dir.join(SERIES_DIR).join(format!("mode_{mode_index:05}.csv"))
}

pub fn row_spectrum_path(dir: &Path, row: usize) -> PathBuf {
    dir.join(SPECTRA_DIR).join(format!("row_{row:05}.csv"))
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

struct Walker {
    errors: Vec<ConfigError>,
}

impl Walker {
    fn err(&mut self, pointer: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError { pointer: pointer.into(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, ptr: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(format!("{ptr}/{}", escape(k)), "unknown key");
                    }
                }
                Some(m)
            }
            None => {
                self.err(ptr, "expected an object");
                None
            }
        }
    }

    fn number(&mut self, v: &Value, ptr: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(ptr, "expected a finite number");
                None
            }
        }
    }

    fn opt_number(&mut self, m: &Map<String, Value>, ptr: &str, key: &str) -> Option<f64> {
        m.get(key).and_then(|v| self.number(v, &format!("{ptr}/{key}")))
    }

    fn req_number(&mut self, m: &Map<String, Value>, ptr: &str, key: &str) -> Option<f64> {
        if !m.contains_key(key) {
            self.err(format!("{ptr}/{key}"), "required");
        }
        self.opt_number(m, ptr, key)
    }

    fn count(&mut self, v: &Value, ptr: &str) -> Option<usize> {
        match v.as_u64() {
            Some(n) => Some(n as usize),
            None => {
                self.err(ptr, "expected a non-negative integer");
                None
            }
        }
    }

    fn opt_count(&mut self, m: &Map<String, Value>, ptr: &str, key: &str) -> Option<usize> {
        m.get(key).and_then(|v| self.count(v, &format!("{ptr}/{key}")))
    }

    fn opt_bool(&mut self, m: &Map<String, Value>, ptr: &str, key: &str) -> Option<bool> {
        let v = m.get(key)?;
        if v.is_boolean() {
            v.as_bool()
        } else {
            self.err(format!("{ptr}/{key}"), "expected true or false");
            None
        }
    }

    fn opt_str<'a>(&mut self, m: &'a Map<String, Value>, ptr: &str, key: &str) -> Option<&'a str> {
        let v = m.get(key)?;
        if v.is_string() {
            v.as_str()
        } else {
            self.err(format!("{ptr}/{key}"), "expected a string");
            None
        }
    }

    /// Either an explicit list or `{start, stop, points}`.
    fn axis(&mut self, v: &Value, ptr: &str) -> Option<Vec<f64>> {
        if let Some(list) = v.as_array() {
            let xs: Vec<Option<f64>> =
                list.iter().enumerate().map(|(i, x)| self.number(x, &format!("{ptr}/{i}"))).collect();
            return xs.into_iter().collect();
        }
        let m = self.object(v, ptr, &["start", "stop", "points"])?;
        let start = self.req_number(m, ptr, "start");
        let stop = self.req_number(m, ptr, "stop");
        if !m.contains_key("points") {
            self.err(format!("{ptr}/points"), "required");
        }
        let points = self.opt_count(m, ptr, "points");
        Some(linspace(start?, stop?, points?))
    }

    fn pulse(&mut self, v: &Value, ptr: &str) -> Option<ChirpedPulse<f64>> {
        let m = self.object(
            v,
            ptr,
            &["amplitude", "carrier_frequency", "width", "chirp", "chirp_profile", "first_half_sign"],
        )?;
        let amplitude = self.req_number(m, ptr, "amplitude");
        let frequency = self.req_number(m, ptr, "carrier_frequency");
        let width = self.req_number(m, ptr, "width");
        let chirp = self.opt_number(m, ptr, "chirp").unwrap_or(0.0);
        let sign = match m.get("first_half_sign") {
            None => Some(Sign::Plus),
            Some(s) => match s.as_i64().and_then(|x| i8::try_from(x).ok()).map(Sign::try_from) {
                Some(Ok(sign)) => Some(sign),
                _ => {
                    self.err(format!("{ptr}/first_half_sign"), "must be 1 or -1");
                    None
                }
            },
        };
        let profile = match self.opt_str(m, ptr, "chirp_profile") {
            None | Some("constant") => {
                if m.contains_key("first_half_sign") {
                    self.err(format!("{ptr}/first_half_sign"), "only meaningful with chirp_profile \"sign_flip\"");
                }
                Some(ChirpProfile::Constant)
            }
            Some("sign_flip") => sign.map(|s| ChirpProfile::SignFlip { first_half_sign: s }),
            Some(other) => {
                self.err(
                    format!("{ptr}/chirp_profile"),
                    format!("unknown profile {other:?} (expected \"constant\" or \"sign_flip\")"),
                );
                None
            }
        };
        Some(
            ChirpedPulse::new(amplitude?, frequency?, width?)
                .with_chirp(chirp)
                .with_profile(profile?),
        )
    }

    fn field(&mut self, v: &Value, ptr: &str) -> Option<FieldConfig<f64>> {
        let m = self.object(v, ptr, &["pulses"])?;
        let Some(list) = m.get("pulses") else {
            self.err(format!("{ptr}/pulses"), "required");
            return None;
        };
        let Some(list) = list.as_array() else {
            self.err(format!("{ptr}/pulses"), "expected an array");
            return None;
        };
        let pulses: Vec<Option<ChirpedPulse<f64>>> = list
            .iter()
            .enumerate()
            .map(|(i, p)| self.pulse(p, &format!("{ptr}/pulses/{i}")))
            .collect();
        pulses.into_iter().collect::<Option<Vec<_>>>().map(FieldConfig::new)
    }

    fn check_field(&mut self, field: &FieldConfig<f64>, ptr: &str, limit: ChirpLimit) {
        if let Err(violations) = field.validate_with(limit) {
            for v in violations {
                use crate::field::ViolationKind as K;
                let key = match v.kind {
                    K::NoPulses => "",
                    K::NotFinite(name) => name,
                    K::NegativeAmplitude => "amplitude",
                    K::NonPositiveWidth => "width",
                    K::NegativeFrequency => "carrier_frequency",
                    K::ChirpTooLarge { .. } => "chirp",
                };
                let at = match (v.pulse, key) {
                    (Some(i), "") => format!("{ptr}/pulses/{i}"),
                    (Some(i), key) => format!("{ptr}/pulses/{i}/{key}"),
                    (None, _) => format!("{ptr}/pulses"),
                };
                let hint = if matches!(v.kind, K::ChirpTooLarge { .. }) {
                    " (set allow_strong_chirp to run it anyway)"
                } else {
                    ""
                };
                self.err(at, format!("{v}{hint}"));
            }
        }
    }

    fn grid(&mut self, v: Option<&Value>) -> GridConfig {
        let mut g = GridConfig {
            n_par: DEFAULT_POINTS,
            range: GridRange::Auto,
            p_perp: 0.0,
            n_perp: DEFAULT_PERP_POINTS,
            perp_max: DEFAULT_PERP_MAX,
        };
        let Some(v) = v else { return g };
        let ptr = "/grid";
        let Some(m) = self.object(v, ptr, &["n_par", "range", "p_perp", "n_perp", "perp_max"]) else {
            return g;
        };
        if let Some(n) = self.opt_count(m, ptr, "n_par") {
            if n < 2 {
                self.err("/grid/n_par", "need at least 2 points");
            }
            g.n_par = n;
        }
        match m.get("range") {
            None => {}
            Some(Value::String(s)) if s == "auto" => {}
            Some(Value::Array(a)) if a.len() == 2 => {
                let lo = self.number(&a[0], "/grid/range/0");
                let hi = self.number(&a[1], "/grid/range/1");
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    if lo < hi {
                        g.range = GridRange::Explicit(lo, hi);
                    } else {
                        self.err("/grid/range", "lower bound must be below upper bound");
                    }
                }
            }
            Some(_) => self.err("/grid/range", "expected \"auto\" or [lo, hi]"),
        }
        if let Some(p) = self.opt_number(m, ptr, "p_perp") {
            if p < 0.0 {
                self.err("/grid/p_perp", "must be >= 0");
            }
            g.p_perp = p;
        }
        if let Some(n) = self.opt_count(m, ptr, "n_perp") {
            if n < 2 {
                self.err("/grid/n_perp", "need at least 2 transverse points");
            }
            g.n_perp = n;
        }
        if let Some(p) = self.opt_number(m, ptr, "perp_max") {
            if !(p > 0.0) {
                self.err("/grid/perp_max", "must be > 0");
            }
            g.perp_max = p;
        }
        g
    }

    fn solver(&mut self, v: Option<&Value>, field: Option<&FieldConfig<f64>>) -> SolverConfig {
        let (t0, t1) = field
            .filter(|f| !f.pulses.is_empty())
            .map_or((f64::NAN, f64::NAN), FieldConfig::default_window);
        let mut s = SolverConfig {
            rtol: 1e-8,
            atol: 1e-12,
            t_start: t0,
            t_end: t1,
            max_step: 1.0,
            method: Method::default(),
            record_series: false,
            series_stride: 1,
        };
        let ptr = "/solver";
        if let Some(m) = v.and_then(|v| {
            self.object(
                v,
                ptr,
                &[
                    "rtol",
                    "atol",
                    "t_start",
                    "t_end",
                    "max_step",
                    "method",
                    "record_series",
                    "series_stride",
                ],
            )
        }) {
            s.rtol = self.opt_number(m, ptr, "rtol").unwrap_or(s.rtol);
            s.atol = self.opt_number(m, ptr, "atol").unwrap_or(s.atol);
            s.t_start = self.opt_number(m, ptr, "t_start").unwrap_or(s.t_start);
            s.t_end = self.opt_number(m, ptr, "t_end").unwrap_or(s.t_end);
            s.max_step = self.opt_number(m, ptr, "max_step").unwrap_or(s.max_step);
            match self.opt_str(m, ptr, "method") {
                None => {}
                Some("dopri5") => s.method = Method::Dopri5,
                Some("dop853") => s.method = Method::Dop853,
                Some(other) => self.err(
                    "/solver/method",
                    format!("unknown method {other:?} (expected \"dopri5\" or \"dop853\")"),
                ),
            }
            s.record_series = self.opt_bool(m, ptr, "record_series").unwrap_or(false);
            s.series_stride = self.opt_count(m, ptr, "series_stride").unwrap_or(1);
        }
        if !(s.rtol > 0.0) {
            self.err("/solver/rtol", "must be > 0");
        }
        if !(s.atol > 0.0) {
            self.err("/solver/atol", "must be > 0");
        }
        if !(s.max_step > 0.0) {
            self.err("/solver/max_step", "must be > 0");
        }
        if s.series_stride == 0 {
            self.err("/solver/series_stride", "must be a positive integer");
        }
        if s.t_start.is_finite() && s.t_end.is_finite() && !(s.t_start < s.t_end) {
            self.err("/solver/t_start", format!("t_start ({}) must be below t_end ({})", s.t_start, s.t_end));
        }
        s
    }

    fn density_mode(&mut self, v: Option<&Value>) -> DensityMode {
        let Some(m) = v.and_then(|v| self.object(v, "/density", &["mode"])) else {
            return DensityMode::Reduced1D;
        };
        match self.opt_str(m, "/density", "mode") {
            None | Some("reduced_1d") => DensityMode::Reduced1D,
            Some("cylindrical_3d") => DensityMode::Cylindrical3D,
            Some(other) => {
                self.err(
                    "/density/mode",
                    format!("unknown mode {other:?} (expected \"reduced_1d\" or \"cylindrical_3d\")"),
                );
                DensityMode::Reduced1D
            }
        }
    }

    fn variant(&mut self, v: &Value, ptr: &str) -> Option<Variant<f64>> {
        let m = self.object(v, ptr, &["label", "pulses"])?;
        let label = self.opt_str(m, ptr, "label");
        if label.is_none() && !m.contains_key("label") {
            self.err(format!("{ptr}/label"), "required");
        }
        let Some(list) = m.get("pulses").and_then(Value::as_array) else {
            self.err(format!("{ptr}/pulses"), "expected an array of chirp assignments");
            return None;
        };
        let chirps: Vec<Option<PulseChirp<f64>>> = list
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = format!("{ptr}/pulses/{i}");
                let cm = self.object(c, &p, &["chirp", "sign", "sign_flip"])?;
                let value = match cm.get("chirp") {
                    Some(Value::String(s)) if s == "axis" => Some(ChirpValue::Axis),
                    Some(Value::String(s)) if s == "axis_times_frequency" => {
                        Some(ChirpValue::AxisTimesFrequency)
                    }
                    Some(x @ Value::Number(_)) => match self.number(x, &format!("{p}/chirp")) {
                        Some(b) if b >= 0.0 => Some(ChirpValue::Fixed(b)),
                        Some(_) => {
                            self.err(format!("{p}/chirp"), "fixed chirp magnitude must be >= 0; use sign");
                            None
                        }
                        None => None,
                    },
                    None => Some(ChirpValue::Fixed(0.0)),
                    Some(_) => {
                        self.err(
                            format!("{p}/chirp"),
                            "expected a magnitude, \"axis\" or \"axis_times_frequency\"",
                        );
                        None
                    }
                };
                let sign = match cm.get("sign") {
                    None => Some(Sign::Plus),
                    Some(s) => match s.as_i64() {
                        Some(1) => Some(Sign::Plus),
                        Some(-1) => Some(Sign::Minus),
                        _ => {
                            self.err(format!("{p}/sign"), "must be 1 or -1");
                            None
                        }
                    },
                };
                let sign_flip = self.opt_bool(cm, &p, "sign_flip").unwrap_or(false);
                Some(PulseChirp { value: value?, sign: sign?, sign_flip })
            })
            .collect();
        let chirps = chirps.into_iter().collect::<Option<Vec<_>>>()?;
        Some(Variant::new(label?, chirps))
    }

    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &mut self,
        v: &Value,
        field: Option<FieldConfig<f64>>,
        limit: ChirpLimit,
        grid: &GridConfig,
        solver: &SolverConfig,
        mode: DensityMode,
    ) -> Option<SweepConfig> {
        let ptr = "/sweep";
        let m = self.object(v, ptr, &["preset", "kind", "axis", "variants", "write_spectra"])?;
        let preset = match self.opt_str(m, ptr, "preset") {
            None => None,
            Some(name) => match serde_json::from_value::<Preset>(Value::String(name.into())) {
                Ok(p) => Some(p),
                Err(_) => {
                    self.err(
                        "/sweep/preset",
                        format!("unknown preset {name:?} (expected fig2, fig3, fig5, fig6 or fig7)"),
                    );
                    return None;
                }
            },
        };
        let kind = match m.get("kind") {
            Some(k) => match serde_json::from_value::<SweepKind>(k.clone()) {
                Ok(kind) => Some(kind),
                Err(_) => {
                    self.err(
                        "/sweep/kind",
                        "expected carrier_frequency, chirp_magnitude, sign_combination or frequency_ratio",
                    );
                    None
                }
            },
            None => preset.map(Preset::kind),
        };
        if kind.is_none() && !m.contains_key("kind") {
            self.err("/sweep/kind", "required without a preset");
        }
        let axis = match m.get("axis") {
            Some(a) => self.axis(a, "/sweep/axis"),
            None => {
                let d = preset.and_then(|p| p.default_axis());
                if d.is_none() {
                    self.err("/sweep/axis", "required (this sweep has no default axis)");
                }
                d
            }
        };
        let variants = match m.get("variants") {
            Some(Value::Array(list)) => list
                .iter()
                .enumerate()
                .map(|(i, v)| self.variant(v, &format!("/sweep/variants/{i}")))
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<Option<Vec<_>>>(),
            Some(_) => {
                self.err("/sweep/variants", "expected an array");
                None
            }
            None => {
                if preset.is_none() {
                    self.err("/sweep/variants", "required without a preset");
                }
                preset.map(|p| p.variants())
            }
        };
        let base_field = field.or_else(|| preset.map(|p| p.base_field()));
        if base_field.is_none() {
            self.err("/field", "required without a sweep preset");
        }
        let write_spectra = self.opt_bool(m, ptr, "write_spectra").unwrap_or(false);
        let spec = SweepSpec {
            kind: kind?,
            base_field: base_field?,
            axis: axis?,
            variants: variants?,
            solver: solver.settings(),
            grid: grid.policy(),
            mode,
            chirp_limit: limit,
            keep_spectra: write_spectra,
        };
        if let Err(errs) = spec.validate() {
            for e in errs {
                let hint = if e.contains("strictly below") {
                    " (set allow_strong_chirp to run it anyway)"
                } else {
                    ""
                };
                self.err("/sweep", format!("{e}{hint}"));
            }
        }
        Some(SweepConfig { spec, write_spectra })
    }

    fn oracle(&mut self, v: Option<&Value>) -> OracleConfig {
        let mut o = OracleConfig {
            p3: linspace(-1.0, 1.0, 11),
            p_perp: 0.0,
            refinement: 1.0,
            tolerance: 1e-4,
            threshold: 1e-20,
        };
        let ptr = "/oracle";
        let Some(m) = v.and_then(|v| {
            self.object(v, ptr, &["p3", "p_perp", "refinement", "tolerance", "threshold"])
        }) else {
            return o;
        };
        if let Some(a) = m.get("p3") {
            if let Some(p3) = self.axis(a, "/oracle/p3") {
                if p3.is_empty() {
                    self.err("/oracle/p3", "must not be empty");
                }
                o.p3 = p3;
            }
        }
        o.p_perp = self.opt_number(m, ptr, "p_perp").unwrap_or(0.0);
        if o.p_perp < 0.0 {
            self.err("/oracle/p_perp", "must be >= 0");
        }
        o.refinement = self.opt_number(m, ptr, "refinement").unwrap_or(1.0);
        if !(o.refinement >= 1.0) {
            self.err("/oracle/refinement", "must be >= 1");
        }
        o.tolerance = self.opt_number(m, ptr, "tolerance").unwrap_or(o.tolerance);
        if !(o.tolerance > 0.0) {
            self.err("/oracle/tolerance", "must be > 0");
        }
        o.threshold = self.opt_number(m, ptr, "threshold").unwrap_or(o.threshold);
        if !(o.threshold >= 0.0) {
            self.err("/oracle/threshold", "must be >= 0");
        }
        o
    }

    fn output(&mut self, v: Option<&Value>) -> OutputConfig {
        let mut o = OutputConfig { directory: PathBuf::from("out"), overwrite: false };
        if let Some(m) = v.and_then(|v| self.object(v, "/output", &["directory", "overwrite"])) {
            if let Some(d) = self.opt_str(m, "/output", "directory") {
                if d.is_empty() {
                    self.err("/output/directory", "must not be empty");
                }
                o.directory = PathBuf::from(d);
            }
            o.overwrite = self.opt_bool(m, "/output", "overwrite").unwrap_or(false);
        }
        o
    }
}

const TOP_KEYS: &[&str] = &[
    "schema_version",
    "command",
    "field",
    "allow_strong_chirp",
    "grid",
    "solver",
    "density",
    "sweep",
    "oracle",
    "output",
];

/// Parses and validates a run configuration. On failure every violation is
/// returned, each tagged with a JSON pointer.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        vec![ConfigError { pointer: String::new(), message: format!("not valid JSON: {e}") }]
    })?;
    let mut w = Walker { errors: Vec::new() };
    let Some(top) = w.object(&doc, "", TOP_KEYS) else {
        return Err(w.errors);
    };

    let schema_version = match top.get("schema_version") {
        None => {
            w.err("/schema_version", "required");
            None
        }
        Some(v) => match v.as_u64() {
            Some(SCHEMA_VERSION) => Some(SCHEMA_VERSION),
            _ => {
                w.err("/schema_version", format!("must be {SCHEMA_VERSION}"));
                None
            }
        },
    };
    let command = match top.get("command") {
        None => {
            w.err("/command", "required");
            None
        }
        Some(v) => match v.as_str().and_then(Command::parse) {
            Some(c) => Some(c),
            None => {
                w.err("/command", "expected \"spectrum\", \"density\", \"sweep\" or \"oracle-check\"");
                None
            }
        },
    };
    let limit = match w.opt_bool(top, "", "allow_strong_chirp") {
        Some(true) => ChirpLimit::Allow,
        _ => ChirpLimit::Enforce,
    };

    let field = top.get("field").and_then(|v| w.field(v, "/field"));
    if let Some(f) = &field {
        w.check_field(f, "/field", limit);
    }
    let is_sweep = command == Some(Command::Sweep);
    if !top.contains_key("field") && !(is_sweep && top.contains_key("sweep")) {
        w.err("/field", "required");
    }

    let density_mode = w.density_mode(top.get("density"));
    let grid = w.grid(top.get("grid"));
    let window_field = field.clone().or_else(|| {
        top.get("sweep")
            .and_then(|s| s.get("preset"))
            .and_then(|p| serde_json::from_value::<Preset>(p.clone()).ok())
            .map(|p| p.base_field())
    });
    let solver = w.solver(top.get("solver"), window_field.as_ref());

    match command {
        Some(Command::Sweep) if !top.contains_key("sweep") => {
            w.err("/sweep", "required for the sweep command");
        }
        Some(c) if c != Command::Sweep && top.contains_key("sweep") => {
            w.err("/sweep", format!("not allowed for the {} command", c.name()));
        }
        Some(c) if c != Command::OracleCheck && top.contains_key("oracle") => {
            w.err("/oracle", format!("not allowed for the {} command", c.name()));
        }
        _ => {}
    }
    if command == Some(Command::Density) && top.contains_key("solver") {
        if let Some(true) = top["solver"].get("record_series").and_then(Value::as_bool) {
            w.err("/solver/record_series", "series are only written by the spectrum command");
        }
    }

    let sweep = match (is_sweep, top.get("sweep")) {
        (true, Some(v)) => w.sweep(v, field.clone(), limit, &grid, &solver, density_mode),
        _ => None,
    };
    let oracle = (command == Some(Command::OracleCheck)).then(|| w.oracle(top.get("oracle")));
    let output = w.output(top.get("output"));

    let field = field.or_else(|| sweep.as_ref().map(|s| s.spec.base_field.clone()));
    let (Some(field), Some(schema_version), Some(command), true) =
        (field, schema_version, command, w.errors.is_empty())
    else {
        if w.errors.is_empty() {
            w.err("", "incomplete configuration");
        }
        return Err(w.errors);
    };
    Ok(RunConfig {
        schema_version,
        command,
        field,
        chirp_limit: limit,
        grid,
        solver,
        density_mode,
        sweep,
        oracle,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "command": "spectrum",
        "field": {"pulses": [{"amplitude": 0.1, "carrier_frequency": 0.02, "width": 100}]}
    }"#;

    fn pointers(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().into_iter().map(|e| e.pointer).collect()
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.command, Command::Spectrum);
        assert_eq!(c.solver.rtol, 1e-8);
        assert_eq!(c.solver.atol, 1e-12);
        assert_eq!((c.solver.t_start, c.solver.t_end), (-800.0, 800.0));
        assert_eq!(c.grid.n_par, 512);
        assert_eq!(c.grid.range, GridRange::Auto);
        assert_eq!(c.density_mode, DensityMode::Reduced1D);
        assert_eq!(c.chirp_limit, ChirpLimit::Enforce);
        assert_eq!(c.field.pulses[0].chirp, 0.0);
    }

    #[test]
    fn chirp_at_limit_is_reported() {
        let text = MINIMAL.replace(r#""width": 100"#, r#""width": 100, "chirp": 0.0002"#);
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].pointer, "/field/pulses/0/chirp");
        assert!(errs[0].message.contains("chirp"), "{}", errs[0]);
        let allowed = text.replace(r#""command""#, r#""allow_strong_chirp": true, "command""#);
        assert!(parse_config(&allowed).is_ok());
    }

    #[test]
    fn reversed_window_is_reported() {
        let text = MINIMAL.replace(
            r#""command": "spectrum","#,
            r#""command": "spectrum", "solver": {"t_start": 10, "t_end": 10},"#,
        );
        assert_eq!(pointers(&text), vec!["/solver/t_start"]);
    }

    #[test]
    fn every_violation_is_collected() {
        let text = r#"{
            "schema_version": 2,
            "command": "spectrum",
            "field": {"pulses": [{"amplitude": -1, "carrier_frequency": 0.02}]},
            "grid": {"n_par": 1, "bogus": true},
            "solver": {"rtol": 0}
        }"#;
        let mut ptrs = pointers(text);
        ptrs.sort();
        assert_eq!(
            ptrs,
            vec![
                "/field/pulses/0/width",
                "/grid/bogus",
                "/grid/n_par",
                "/schema_version",
                "/solver/rtol"
            ]
        );
    }

    #[test]
    fn payload_must_match_command() {
        let text = MINIMAL.replace(r#""command": "spectrum""#, r#""command": "sweep""#);
        assert_eq!(pointers(&text), vec!["/sweep"]);
        let text = MINIMAL.replace(
            r#""command": "spectrum","#,
            r#""command": "spectrum", "sweep": {"preset": "fig3"},"#,
        );
        assert_eq!(pointers(&text), vec!["/sweep"]);
    }

    #[test]
    fn preset_sweep_without_field() {
        let text = r#"{
            "schema_version": 1, "command": "sweep", "allow_strong_chirp": true,
            "sweep": {"preset": "fig3", "axis": {"start": 0, "stop": 0.00075, "points": 4}},
            "grid": {"n_par": 64}
        }"#;
        let c = parse_config(text).unwrap();
        let s = c.sweep.unwrap().spec;
        assert_eq!(s.axis.len(), 4);
        assert_eq!(s.variants.len(), 4);
        assert_eq!(s.grid.n_par, 64);
        assert_eq!(s.solver.window, Some((-800.0, 800.0)));
    }

    #[test]
    fn preset_sweep_needs_opt_in_for_strong_chirp() {
        let text = r#"{"schema_version": 1, "command": "sweep", "sweep": {"preset": "fig3"}}"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs.iter().all(|e| e.pointer == "/sweep" && e.message.contains("allow_strong_chirp")));
    }

    #[test]
    fn fig5_axis_is_mandatory() {
        let text = r#"{"schema_version": 1, "command": "sweep", "sweep": {"preset": "fig5"}}"#;
        assert_eq!(pointers(text), vec!["/sweep/axis"]);
    }

    #[test]
    fn custom_variants_parse() {
        let text = r#"{
            "schema_version": 1, "command": "sweep",
            "field": {"pulses": [{"amplitude": 0.1, "carrier_frequency": 0.2, "width": 100}]},
            "sweep": {"kind": "chirp_magnitude", "axis": [0.0, 0.001],
                      "variants": [{"label": "flip", "pulses": [{"chirp": "axis", "sign": -1, "sign_flip": true}]}]}
        }"#;
        let s = parse_config(text).unwrap().sweep.unwrap().spec;
        let f = s.field_for(&s.variants[0], 0.001);
        assert_eq!(f.pulses[0].chirp_at(-1.0), -0.001);
        assert_eq!(f.pulses[0].chirp_at(1.0), 0.001);
    }

    #[test]
    fn sign_flip_profile_parses() {
        let text = MINIMAL.replace(
            r#""width": 100"#,
            r#""width": 100, "chirp": 0.0001, "chirp_profile": "sign_flip", "first_half_sign": -1"#,
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(
            c.field.pulses[0].chirp_profile,
            ChirpProfile::SignFlip { first_half_sign: Sign::Minus }
        );
    }

    #[test]
    fn invalid_json_is_one_error_at_root() {
        let errs = parse_config("{").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].pointer, "");
    }

    #[test]
    fn existing_outputs_conflict_without_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = parse_config(MINIMAL).unwrap();
        c.output.directory = dir.path().to_path_buf();
        assert!(c.output_conflicts().is_empty());
        std::fs::write(dir.path().join(SPECTRUM_FILE), "x").unwrap();
        assert_eq!(c.output_conflicts().len(), 1);
        c.output.overwrite = true;
        assert!(c.output_conflicts().is_empty());
    }
}
