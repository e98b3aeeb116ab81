//! CSV/JSON rendering and atomic file output.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::observables::Spectrum;
use crate::scalar::Real;
use crate::solver::SeriesPoint;
use crate::sweeps::SweepResult;

pub const SPECTRUM_HEADER: &str = "P3,p_par_final,f";
pub const SERIES_HEADER: &str = "t,f,g,w,A";
pub const SWEEP_HEADER: &str = "variant,axis_value,density,mode,n_grid";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn spectrum_csv<T: Real>(spec: &Spectrum<T>) -> String {
    let mut out = String::with_capacity(64 * (spec.points.len() + 1));
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for p in &spec.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(p.canonical.as_f64()),
            fmt_num(p.kinetic.as_f64()),
            fmt_num(p.f.as_f64())
        );
    }
    out
}

pub fn series_csv<T: Real>(series: &[SeriesPoint<T>]) -> String {
    let mut out = String::with_capacity(96 * (series.len() + 1));
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for p in series {
        let s = &p.state;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(p.t.as_f64()),
            fmt_num(s.f.as_f64()),
            fmt_num(s.g.as_f64()),
            fmt_num(s.w.as_f64()),
            fmt_num(s.potential.as_f64())
        );
    }
    out
}

/// Failed rows carry `NaN` in the density column.
pub fn sweep_csv<T: Real>(result: &SweepResult<T>) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &result.rows {
        let density = r.density().map_or(f64::NAN, |d| d.as_f64());
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.variant,
            fmt_num(r.axis_value.as_f64()),
            fmt_num(density),
            result.mode,
            result.n_grid
        );
    }
    out
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
