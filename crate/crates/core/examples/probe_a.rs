use qve::grid::{GridRange, MomentumGrid};
use qve::observables::number_density_reduced;
use qve::solver::{solve_spectrum, SolverOptions};
use qve::sweeps::{Preset, SweepSpec};
fn main() {
    let spec = SweepSpec::<f64>::preset(Preset::Fig3);
    let field = spec.field_for(&spec.variants[0], 0.00075);
    let opts = SolverOptions::for_field(&field);
    for n in [512usize, 768] {
        let base = MomentumGrid::with_range(GridRange::Auto, n, 1.5, &field, (opts.t_start, opts.t_end)).unwrap();
        for pt in [0.0, 0.05, 0.1, 0.2, 0.3] {
            if n == 512 && pt > 0.0 { continue; }
            let g = MomentumGrid::new(base.canonical.clone(), pt).unwrap();
            let s = solve_spectrum(&g, &field, &opts).unwrap();
            match number_density_reduced(&s) {
                Ok(d) => println!("n={n} pt={pt}: {:.5e} change {:.3e} range {:?}", d.value, d.refinement_change, d.grid.range),
                Err(e) => println!("n={n} pt={pt}: {e}"),
            }
        }
    }
}
