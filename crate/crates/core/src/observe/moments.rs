use alloc::vec::Vec;

use crate::dynamics::Propagator;
use crate::error::{check_dim, domain, Result};
use crate::spectral::{free_propagate, Domain, Grid, GridState};
use crate::C64;

use super::relativistic_kinetic;

/// Expectations and spreads of position and momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub position: [f64; 3],
    pub momentum: [f64; 3],
    /// `sqrt(sum_a m_a ||(x_a - q_a) psi||^2)`.
    pub delta_q: f64,
    /// `sqrt(sum_a ||(p_a - p_a) psi||^2 / m_a)`.
    pub delta_p: f64,
    pub product: f64,
}

fn require_normalized(psi: &GridState) -> Result<()> {
    let n = psi.norm2();
    if (n - 1.0).abs() > 1e-10 {
        return Err(domain(alloc::format!("state has squared norm {n}, expected 1")));
    }
    Ok(())
}

fn masses_for(grid: &Grid, masses: &[f64]) -> Result<Vec<f64>> {
    let m = if masses.len() == 1 { alloc::vec![masses[0]; grid.dim()] } else { masses.to_vec() };
    check_dim(grid.dim(), m.len())?;
    if m.iter().any(|x| !(*x > 0.0)) {
        return Err(domain("masses must be positive"));
    }
    Ok(m)
}

/// First and second moments weighted by `|psi|^2` in one representation.
fn moments(state: &GridState) -> ([f64; 3], [f64; 3]) {
    let g = state.grid();
    let w = g.cell(state.domain());
    let mut first = [0.0; 3];
    let mut second = [0.0; 3];
    for (k, v) in state.values().iter().enumerate() {
        let node = match state.domain() {
            Domain::Position => g.position(k),
            Domain::Momentum => g.momentum(k),
        };
        let p = v.norm_sqr() * w;
        for a in 0..g.dim() {
            first[a] += node[a] * p;
            second[a] += node[a] * node[a] * p;
        }
    }
    (first, second)
}

/// Position and momentum spreads in the mass metric. For one axis with
/// unit mass this is the textbook `dq dp >= hbar / 2`.
pub fn uncertainty_product(psi: &GridState, masses: &[f64]) -> Result<MomentReport> {
    require_normalized(psi)?;
    let m = masses_for(psi.grid(), masses)?;
    let (q1, q2) = moments(&psi.to_position());
    let (p1, p2) = moments(&psi.to_momentum());
    let mut dq2 = 0.0;
    let mut dp2 = 0.0;
    for a in 0..m.len() {
        dq2 += m[a] * (q2[a] - q1[a] * q1[a]).max(0.0);
        dp2 += (p2[a] - p1[a] * p1[a]).max(0.0) / m[a];
    }
    let (delta_q, delta_p) = (dq2.sqrt(), dp2.sqrt());
    Ok(MomentReport { position: q1, momentum: p1, delta_q, delta_p, product: delta_q * delta_p })
}

/// Spreads of the vector time operator `t_j = t p_j / |p|` and energy
/// operator `e_j = (|p| x_j + x_j |p|) / (4t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeEnergyReport {
    pub delta_t: f64,
    pub delta_e: f64,
    pub product: f64,
    /// `sqrt(sum_j ||t_j psi||^2)`, equal to `|t|` on admissible states.
    pub time_norm: f64,
    /// Squared norm of the momentum representation inside the excluded ball.
    pub low_momentum_mass: f64,
}

/// Above this, a state's momentum mass near the origin makes `p / |p|`
/// ill-defined on the lattice.
pub const ADMISSIBLE_MASS: f64 = 1e-12;

fn momentum_mass_below(psi: &GridState, radius: f64) -> f64 {
    let f = psi.to_momentum();
    let g = f.grid();
    let d = g.dim();
    f.values()
        .iter()
        .enumerate()
        .filter(|(k, _)| g.momentum(*k)[..d].iter().map(|x| x * x).sum::<f64>() < radius * radius)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * g.cell(Domain::Momentum)
}

fn abs_p(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `e_j psi` in position form.
fn energy_component(psi_x: &GridState, axis: usize, t: f64) -> GridState {
    let mut xpsi = psi_x.clone();
    xpsi.apply(|x| C64::new(x[axis], 0.0));
    let mut a = xpsi.to_momentum();
    a.apply(|xi| C64::new(abs_p(xi), 0.0));
    let mut b = psi_x.to_momentum();
    b.apply(|xi| C64::new(abs_p(xi), 0.0));
    let mut b = b.to_position();
    b.apply(|x| C64::new(x[axis], 0.0));
    let mut out = a.to_position();
    out.axpy(C64::new(1.0, 0.0), &b).expect("same grid");
    out.scale(C64::new(0.25 / t, 0.0));
    out
}

fn spread2(psi: &GridState, op: &GridState) -> f64 {
    let mean = psi.inner(op).expect("same grid").re;
    let mut d = op.clone();
    d.axpy(C64::new(-mean, 0.0), psi).expect("same grid");
    d.norm2()
}

/// Time/energy spreads on a 3-d grid. `gap` is the momentum radius whose
/// ball must carry at most [`ADMISSIBLE_MASS`].
pub fn time_energy_uncertainty(psi: &GridState, t: f64, gap: f64) -> Result<TimeEnergyReport> {
    check_dim(3, psi.grid().dim())?;
    if t == 0.0 || !t.is_finite() {
        return Err(domain("time must be finite and nonzero"));
    }
    require_normalized(psi)?;
    let low = momentum_mass_below(psi, gap);
    if low > ADMISSIBLE_MASS {
        return Err(domain(alloc::format!("momentum mass {low:e} within {gap} of the origin")));
    }
    let x = psi.to_position();
    let mut dt2 = 0.0;
    let mut de2 = 0.0;
    let mut tn2 = 0.0;
    for j in 0..3 {
        let mut tj = x.to_momentum();
        tj.apply(|xi| {
            let r = abs_p(xi);
            C64::new(if r == 0.0 { 0.0 } else { t * xi[j] / r }, 0.0)
        });
        let tj = tj.to_position();
        tn2 += tj.norm2();
        dt2 += spread2(&x, &tj);
        de2 += spread2(&x, &energy_component(&x, j, t));
    }
    let (delta_t, delta_e) = (dt2.sqrt(), de2.sqrt());
    Ok(TimeEnergyReport { delta_t, delta_e, product: delta_t * delta_e, time_norm: tn2.sqrt(), low_momentum_mass: low })
}

/// Relative defect `||(sum_j e_j^2 - H0^2) psi(t)|| / ||H0^2 psi(t)||`
/// along the free flow, which vanishes as `|t|` grows.
pub fn energy_operator_defect(psi0: &GridState, mass: f64, times: &[f64]) -> Result<Vec<f64>> {
    check_dim(3, psi0.grid().dim())?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            return Err(domain("defect needs t != 0"));
        }
        let psi = free_propagate(psi0, t, mass)?;
        let mut e2 = GridState::zeros(psi.grid(), Domain::Position);
        for j in 0..3 {
            let e = energy_component(&psi, j, t);
            e2.axpy(C64::new(1.0, 0.0), &energy_component(&e, j, t))?;
        }
        let mut h2 = psi.to_momentum();
        h2.apply(|xi| {
            let h = xi.iter().map(|p| p * p).sum::<f64>() / (2.0 * mass);
            C64::new(h * h, 0.0)
        });
        let h2 = h2.to_position();
        let reference = h2.norm();
        e2.axpy(C64::new(-1.0, 0.0), &h2)?;
        out.push(e2.norm() / reference);
    }
    Ok(out)
}

/// Relativistic kinetic multiplier `sum_a (c sqrt(xi_a^2 + m_a^2 c^2) - m_a c^2)`
/// tabulated on the momentum lattice.
pub fn relativistic_kinetic_operator(grid: &Grid, masses: &[f64], c: f64) -> Result<Vec<f64>> {
    let m = masses_for(grid, masses)?;
    if !(c > 0.0) {
        return Err(domain("speed of light must be positive"));
    }
    let d = grid.dim();
    Ok((0..grid.len()).map(|k| super::relativistic_kinetic_multiplier(&grid.momentum(k)[..d], &m, c)).collect())
}

/// Two-cluster effective Hamiltonian in the relative coordinate:
/// kinetic energy of the reduced mass (relativistic when `c` is given),
/// the internal interaction and softened Newtonian attraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub cluster_masses: [f64; 2],
    pub c: Option<f64>,
    pub gravity: f64,
    pub soft_core: f64,
}

impl EffectiveHamiltonian {
    pub fn reduced_mass(&self) -> f64 {
        let [a, b] = self.cluster_masses;
        a * b / (a + b)
    }

    pub fn gravity_at(&self, r: f64) -> f64 {
        let [a, b] = self.cluster_masses;
        -self.gravity * a * b / (r * r + self.soft_core * self.soft_core).sqrt()
    }
}

/// Builds a split-step propagator for `H = T(D) + I(x) - G M1 M2 / r`.
pub fn effective_hamiltonian(
    grid: &Grid,
    spec: &EffectiveHamiltonian,
    interaction: impl Fn(&[f64]) -> f64,
    dt: f64,
) -> Result<Propagator> {
    let [a, b] = spec.cluster_masses;
    if !(a > 0.0 && b > 0.0) {
        return Err(domain("cluster masses must be positive"));
    }
    if !(spec.soft_core > 0.0) && spec.gravity != 0.0 {
        return Err(domain("gravity needs a positive soft core"));
    }
    let mu = spec.reduced_mass();
    let c = spec.c;
    if let Some(c) = c {
        if !(c > 0.0) {
            return Err(domain("speed of light must be positive"));
        }
    }
    let s = *spec;
    Propagator::with_kinetic(
        grid,
        &[mu],
        move |xi| match c {
            Some(c) => xi.iter().map(|p| relativistic_kinetic(*p, mu, c)).sum(),
            None => xi.iter().map(|p| p * p).sum::<f64>() / (2.0 * mu),
        },
        move |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            interaction(x) + if s.gravity == 0.0 { 0.0 } else { s.gravity_at(r) }
        },
        dt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid, hermite: bool) -> GridState {
        GridState::from_fn(grid, |x| {
            let g = (-0.5 * x[0] * x[0]).exp();
            C64::new(if hermite { x[0] * g } else { g }, 0.0)
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn gaussian_and_first_excited() {
        let g = Grid::new(1, 256, 16.0, 1.0).unwrap();
        let r = uncertainty_product(&gaussian(&g, false), &[1.0]).unwrap();
        assert!((r.product - 0.5).abs() < 1e-10, "{}", r.product);
        let r = uncertainty_product(&gaussian(&g, true), &[1.0]).unwrap();
        assert!((r.product - 1.5).abs() < 1e-8, "{}", r.product);
    }

    #[test]
    fn unnormalized_is_rejected() {
        let g = Grid::new(1, 64, 8.0, 1.0).unwrap();
        let mut s = gaussian(&g, false);
        s.scale(C64::new(2.0, 0.0));
        assert!(uncertainty_product(&s, &[1.0]).is_err());
    }

    #[test]
    fn relativistic_operator_limits() {
        let g = Grid::new(1, 64, 8.0, 1.0).unwrap();
        let t = relativistic_kinetic_operator(&g, &[50.0], 1.0).unwrap();
        for k in 0..g.len() {
            let p = g.momentum(k)[0];
            let nr = p * p / 100.0;
            if p != 0.0 && p.abs() <= 5.0 {
                assert!((t[k] / nr - 1.0).abs() <= 0.01);
            }
        }
        assert_eq!(t[0], 0.0);
    }

    #[test]
    fn shell_state_has_unit_time_norm() {
        let g = Grid::new(3, 32, 10.0, 1.0).unwrap();
        let psi = GridState::from_momentum_fn(&g, |xi| {
            let r = abs_p(xi);
            C64::new((-8.0 * (r - 1.8).powi(2)).exp() * (1.0 + 0.3 * xi[0]), 0.0)
        })
        .normalized()
        .unwrap();
        let r = time_energy_uncertainty(&psi, 2.5, 0.5).unwrap();
        assert!((r.time_norm - 2.5).abs() < 1e-9);
        assert!(r.product >= 0.5 - 1e-6, "{}", r.product);
        let blob = GridState::from_fn(&g, |x| C64::new((-0.5 * abs_p(x).powi(2)).exp(), 0.0)).normalized().unwrap();
        assert!(time_energy_uncertainty(&blob, 1.0, 0.5).is_err());
    }
}
