//! Reference solutions computed independently of the core kernels.

use ode_solvers::{Dop853, OutputType, System, Vector6};
use scatterlab_core::C64;
use std::f64::consts::PI;

/// Freely evolved Gaussian packet
/// `(2 pi s^2)^{-1/4} exp(-(x-x0)^2/(4 s^2) + i k0 x)` at time `t`:
/// the spreading Gaussian kernel composed with a Galilean boost.
pub fn free_gaussian(x: f64, t: f64, x0: f64, k0: f64, s: f64, mass: f64, hbar: f64) -> C64 {
    let spread = C64::new(1.0, hbar * t / (2.0 * mass * s * s));
    let y = x - x0 - hbar * k0 * t / mass;
    let envelope = (-(y * y) / (4.0 * s * s) / spread).exp() / spread.sqrt();
    let phase = C64::from_polar(1.0, k0 * x - hbar * k0 * k0 * t / (2.0 * mass));
    (2.0 * PI * s * s).powf(-0.25) * envelope * phase
}

/// Hamilton's equations `q' = p, p' = -grad V(t, q)`; unused trailing
/// dimensions stay at zero.
struct Hamilton<G: Fn(f64, &[f64], &mut [f64])> {
    dim: usize,
    gradient: G,
}

impl<G: Fn(f64, &[f64], &mut [f64])> System<f64, Vector6<f64>> for Hamilton<G> {
    fn system(&self, t: f64, y: &Vector6<f64>, dy: &mut Vector6<f64>) {
        let d = self.dim;
        let q = [y[0], y[1], y[2]];
        let mut g = [0.0; 3];
        (self.gradient)(t, &q[..d], &mut g[..d]);
        for a in 0..3 {
            dy[a] = y[3 + a];
            dy[3 + a] = -g[a];
        }
    }
}

/// Integrates an orbit in up to three dimensions from `(t0, q0, p0)` to
/// `t1` with the Dormand-Prince 8(5,3) pair at roundoff-level tolerances.
pub fn orbit(
    gradient: impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    t1: f64,
    q0: &[f64],
    p0: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), String> {
    let dim = q0.len();
    if !(1..=3).contains(&dim) || p0.len() != dim {
        return Err(format!("orbit oracle needs 1..=3 matching dimensions, got {} and {}", dim, p0.len()));
    }
    let mut y0 = Vector6::zeros();
    for a in 0..dim {
        y0[a] = q0[a];
        y0[3 + a] = p0[a];
    }
    // Tolerances sit at roundoff: the cutoffs switch on through exp(-1/u)
    // profiles, and the error estimator underrates those steps, so looser
    // settings leave 1e-8-sized global errors. The stiffness heuristic
    // misfires here and is switched off. Every accepted step is recorded.
    let span = t1 - t0;
    let mut solver = Dop853::from_param(
        Hamilton { dim, gradient },
        t0,
        t1,
        span,
        y0,
        1e-16,
        1e-16,
        0.9,
        0.0,
        0.333,
        6.0,
        span,
        0.0,
        10_000_000,
        u32::MAX,
        OutputType::Continuous,
    );
    solver.integrate().map_err(|e| format!("{e:?}"))?;
    let (Some(t), Some(y)) = (solver.x_out().last(), solver.y_out().last()) else {
        return Err("no output".into());
    };
    if (t - t1).abs() > 1e-12 * (1.0 + t1.abs()) {
        return Err(format!("integration stopped at {t}, not {t1}"));
    }
    Ok(((0..dim).map(|a| y[a]).collect(), (0..dim).map(|a| y[3 + a]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized_at_all_times() {
        for t in [0.0, 1.0, 5.0] {
            let dx = 0.01;
            let n: f64 = (-4000..4000).map(|j| free_gaussian(j as f64 * dx, t, 1.0, 0.7, 1.2, 2.0, 1.0).norm_sqr() * dx).sum();
            assert!((n - 1.0).abs() < 1e-10, "{t}: {n}");
        }
    }

    #[test]
    fn uniform_motion_without_force() {
        let (q, p) = orbit(|_, _, g| g.fill(0.0), 0.0, 10.0, &[1.0, 2.0], &[0.5, -0.25]).unwrap();
        assert!((q[0] - 6.0).abs() < 1e-12 && (q[1] + 0.5).abs() < 1e-12);
        assert_eq!(p, vec![0.5, -0.25]);
    }

    #[test]
    fn circular_orbit_in_harmonic_well() {
        // V = |q|^2/2: q(t) = (cos t, sin t) for q0 = (1, 0), p0 = (0, 1)
        let (q, _) = orbit(|_, x, g| g.copy_from_slice(x), 0.0, 2.0 * PI, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-10 && q[1].abs() < 1e-10, "{q:?}");
    }
}
