//! Observation-layer formulas: Born cross sections, relativistic factors,
//! quantum-clock period laws, uncertainty products and a finite-matrix
//! witness of local motion.

#[cfg(feature = "std")]
mod moments;
mod witness;

#[cfg(feature = "std")]
pub use moments::{
    effective_hamiltonian, energy_operator_defect, relativistic_kinetic_operator, time_energy_uncertainty,
    uncertainty_product, EffectiveHamiltonian, MomentReport, TimeEnergyReport, ADMISSIBLE_MASS,
};
pub use witness::{local_motion_witness, FiniteModel, WitnessReport};

use alloc::format;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, range, Result};

/// Potential kinds with a closed-form Fourier transform
/// `V~(q) = int e^{-i q.r} V(r) d^3 r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BornKernel {
    /// `charge_product * e^2 * exp(-kappa r) / r`.
    ScreenedCoulomb { charge_product: f64, charge_unit: f64, kappa: f64 },
    /// `strength * exp(-r^2 / width^2)`.
    Gaussian { strength: f64, width: f64 },
}

impl BornKernel {
    pub fn fourier(&self, q: f64) -> f64 {
        match *self {
            BornKernel::ScreenedCoulomb { charge_product, charge_unit, kappa } => {
                4.0 * PI * charge_product * charge_unit * charge_unit / (q * q + kappa * kappa)
            }
            BornKernel::Gaussian { strength, width } => {
                strength * PI.powf(1.5) * width.powi(3) * (-0.25 * q * q * width * width).exp()
            }
        }
    }

    fn diverges_forward(&self) -> bool {
        matches!(self, BornKernel::ScreenedCoulomb { kappa, .. } if *kappa == 0.0)
    }
}

/// First Born differential cross section `|f|^2` with
/// `f = -(m / (2 pi hbar^2)) V~(2 k sin(theta/2))` and `k = sqrt(2 m E) / hbar`.
pub fn born_cross_section(kernel: &BornKernel, energy: f64, theta: f64, mass: f64, hbar: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(domain("energy must be positive"));
    }
    if !(theta > 0.0 && theta <= PI) {
        if theta == 0.0 && kernel.diverges_forward() {
            return Err(range("forward Coulomb cross section diverges"));
        }
        if theta != 0.0 {
            return Err(domain(format!("scattering angle {theta} not in (0, pi]")));
        }
    }
    if !(mass > 0.0 && hbar > 0.0) {
        return Err(domain("mass and hbar must be positive"));
    }
    let k = (2.0 * mass * energy).sqrt() / hbar;
    let q = 2.0 * k * (0.5 * theta).sin();
    let f = -mass / (2.0 * PI * hbar * hbar) * kernel.fourier(q);
    Ok(f * f)
}

/// `Z^2 e^4 / (16 E^2 sin^4(theta/2))`.
pub fn rutherford(charge_product: f64, charge_unit: f64, energy: f64, theta: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(domain("energy must be positive"));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(range("Rutherford cross section needs theta in (0, pi]"));
    }
    let s = (0.5 * theta).sin();
    Ok((charge_product * charge_unit.powi(2)).powi(2) / (16.0 * energy * energy * s.powi(4)))
}

fn beta(v: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(domain("speed of light must be positive"));
    }
    if !(v.abs() < c) {
        return Err(domain(format!("speed {v} must be below c = {c}")));
    }
    Ok((v / c).abs())
}

/// `1 - (v/c)^2` as `(1 - b)(1 + b)`; the first factor is exact for b >= 1/2.
fn contraction(v: f64, c: f64) -> Result<f64> {
    let b = beta(v, c)?;
    Ok((1.0 - b) * (1.0 + b))
}

/// Lorentz factor `1 / sqrt(1 - (v/c)^2)`.
pub fn lorentz_factor(v: f64, c: f64) -> Result<f64> {
    Ok(1.0 / contraction(v, c)?.sqrt())
}

/// Multiplies a cross section by `1 - (v/c)^2`.
pub fn relativistic_correction(cross_section: f64, v: f64, c: f64) -> Result<f64> {
    Ok(cross_section * contraction(v, c)?)
}

/// `c sqrt(p^2 + m^2 c^2) - m c^2`, written without cancellation.
pub fn relativistic_kinetic(p: f64, mass: f64, c: f64) -> f64 {
    let mc = mass * c;
    c * p * p / ((p * p + mc * mc).sqrt() + mc)
}

/// Kinetic energy of a particle at speed `v` with `p = gamma m v`.
pub fn relativistic_energy_at_speed(mass: f64, v: f64, c: f64) -> Result<f64> {
    let g = lorentz_factor(v, c)?;
    Ok(relativistic_kinetic(g * mass * v, mass, c))
}

/// `sum_a (c sqrt(xi_a^2 + m_a^2 c^2) - m_a c^2)` over momentum components.
pub fn relativistic_kinetic_multiplier(xi: &[f64], masses: &[f64], c: f64) -> f64 {
    xi.iter().zip(masses).map(|(p, m)| relativistic_kinetic(*p, *m, c)).sum()
}

/// `m = m0 / sqrt(1 - (v/c)^2)`.
pub fn relativistic_mass(m0: f64, v: f64, c: f64) -> Result<f64> {
    if !(m0 > 0.0) {
        return Err(domain("rest mass must be positive"));
    }
    Ok(m0 * lorentz_factor(v, c)?)
}

/// Clock period `p(v) = p(0) / sqrt(1 - (v/c)^2)` with `p(0) = 2 h / (m0 c^2)`.
pub fn clock_period(m0: f64, v: f64, h: f64, c: f64) -> Result<f64> {
    if !(m0 > 0.0 && h > 0.0) {
        return Err(domain("rest mass and Planck constant must be positive"));
    }
    Ok(2.0 * h / (m0 * c * c) * lorentz_factor(v, c)?)
}

/// `sqrt(h c / G)`.
pub fn planck_mass(h: f64, c: f64, g: f64) -> f64 {
    (h * c / g).sqrt()
}

/// `sqrt(h G / c^5)`.
pub fn planck_time(h: f64, c: f64, g: f64) -> f64 {
    (h * g / c.powi(5)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rutherford_at_right_angle() {
        assert!((rutherford(1.0, 1.0, 1.0, PI / 2.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unscreened_born_is_rutherford() {
        let k = BornKernel::ScreenedCoulomb { charge_product: 2.0, charge_unit: 1.3, kappa: 0.0 };
        for &th in &[0.3, 1.0, 2.0, PI] {
            let b = born_cross_section(&k, 0.7, th, 1.9, 0.8).unwrap();
            let r = rutherford(2.0, 1.3, 0.7, th).unwrap();
            assert!((b / r - 1.0).abs() < 1e-13);
        }
        assert!(matches!(born_cross_section(&k, 1.0, 0.0, 1.0, 1.0), Err(crate::Error::Range(_))));
    }

    #[test]
    fn backscatter_is_minimal() {
        let k = BornKernel::ScreenedCoulomb { charge_product: 1.0, charge_unit: 1.0, kappa: 0.1 };
        let back = born_cross_section(&k, 1.0, PI, 1.0, 1.0).unwrap();
        for j in 1..50 {
            let th = PI * j as f64 / 50.0;
            assert!(born_cross_section(&k, 1.0, th, 1.0, 1.0).unwrap() >= back);
        }
    }

    #[test]
    fn relativistic_factors() {
        assert_eq!(relativistic_correction(3.0, 0.0, 1.0).unwrap(), 3.0);
        assert!((relativistic_correction(1.0, 0.1, 1.0).unwrap() - 0.99).abs() < 1e-15);
        assert!(relativistic_correction(1.0, 1.0, 1.0).is_err());
        assert!((relativistic_mass(2.0, 0.6, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(relativistic_kinetic(0.0, 1.0, 1.0), 0.0);
        assert!((relativistic_kinetic(0.5, 1.0, 1.0) - (1.25f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn clock_law() {
        let p0 = clock_period(2.0, 0.0, 3.0, 1.5).unwrap();
        assert!((p0 - 2.0 * 3.0 / (2.0 * 2.25)).abs() < 1e-15);
        let p = clock_period(2.0, 0.9, 3.0, 1.5).unwrap();
        assert!((p / p0 - 1.25).abs() < 1e-12);
    }
}
