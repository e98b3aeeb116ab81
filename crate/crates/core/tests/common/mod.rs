//! Independent reference quantities for the integration tests.
#![allow(dead_code)]

/// One Gaussian pulse `E0·exp(-t²/2τ²)·cos(b·t² + ω·t)` with constant chirp.
#[derive(Clone, Copy, Debug)]
pub struct Pulse {
    pub e0: f64,
    pub omega: f64,
    pub tau: f64,
    pub b: f64,
}

impl Pulse {
    pub fn at(&self, t: f64) -> f64 {
        self.e0 * (-t * t / (2.0 * self.tau * self.tau)).exp() * (self.b * t * t + self.omega * t).cos()
    }
}

/// First-order amplitude `|½∫ q(t) exp(2i∫ω dt') dt|²` of the linearized
/// kinetic equation, for longitudinal momentum `p3` at `p⊥ = 0`.
///
/// Along the linearized flow `u = g + i·w` obeys `u' = q + 2iω·u`, so
/// `u(∞) = e^{2iΦ(∞)} ∫ q e^{-2iΦ} dt` and `f' = q·g/2` integrates to the
/// modulus above. Integrals use composite Simpson on `n` panels over
/// `[t0, t1]`, with `A` and `Φ` carried by a fourth-order Runge-Kutta
/// pass on the same grid.
pub fn perturbative_occupation(pulse: Pulse, p3: f64, t0: f64, t1: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (t1 - t0) / n as f64;
    let energy = |a: f64| (1.0 + (p3 - a) * (p3 - a)).sqrt();
    // State (A, Φ): A' = -E, Φ' = ω(A).
    let rhs = |t: f64, a: f64| (-pulse.at(t), energy(a));
    let (mut a, mut phi) = (0.0f64, 0.0f64);
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for i in 0..=n {
        let t = t0 + h * i as f64;
        let w = energy(a);
        let q = pulse.at(t) / (w * w);
        let weight = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        re += weight * q * (2.0 * phi).cos();
        im += weight * q * (2.0 * phi).sin();
        if i < n {
            let (k1a, k1p) = rhs(t, a);
            let (k2a, k2p) = rhs(t + h / 2.0, a + h / 2.0 * k1a);
            let (k3a, k3p) = rhs(t + h / 2.0, a + h / 2.0 * k2a);
            let (k4a, k4p) = rhs(t + h, a + h * k3a);
            a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        }
    }
    let scale = 0.5 * h / 3.0;
    (scale * re).powi(2) + (scale * im).powi(2)
}
