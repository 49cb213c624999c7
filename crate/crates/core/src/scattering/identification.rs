//! The one-dimensional identification operator
//! `J psi(x) = (2 pi)^{-1/2} int e^{i phi(x, xi)} F psi(xi) dxi`
//! as a dense matrix on the momentum lattice.

use super::orbit::OrbitSolver;
use super::phase::{build_phase_function, PhaseFunction, PhaseParams};
use crate::dynamics::pcg;
use crate::error::{domain, Error, Result};
use crate::spectral::{dft, idft, Domain, Grid, GridState};
use crate::C64;

/// Chebyshev nodes per table axis used when none are given.
pub const DEFAULT_TABLE_NODES: usize = 36;

#[derive(Debug, Clone)]
pub struct Identification {
    grid: Grid,
    phase: PhaseFunction,
    /// Column-major by momentum index: `kernel[k * n + j] = c e^{i phi(x_j, xi_k)}`.
    kernel: Vec<C64>,
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(domain("the identification operator is one-dimensional"));
    }
    if (grid.hbar() - 1.0).abs() > 1e-15 {
        return Err(domain("phase functions assume hbar = 1"));
    }
    Ok(())
}

impl Identification {
    /// Tabulates `phase` over the grid and assembles the kernel.
    pub fn new(phase: PhaseFunction, grid: &Grid, nodes: usize) -> Result<Self> {
        check_grid(grid)?;
        if phase.solver().dim() != 1 {
            return Err(domain("phase function must be one-dimensional"));
        }
        let n = grid.points();
        let phase = if phase.has_table() {
            phase
        } else {
            phase.tabulate(grid.half_extent() * (1.0 + 1e-9), grid.momentum_cutoff() * (1.0 + 1e-9), nodes)?
        };
        let c = grid.dxi() / (2.0 * core::f64::consts::PI).sqrt();
        let mut kernel = Vec::with_capacity(n * n);
        for k in 0..n {
            let xi = grid.wavenumber(k);
            let row = phase.correction_row(xi)?;
            for j in 0..n {
                let x = grid.coordinate(j);
                let phi = if x == 0.0 { 0.0 } else { phase.glued_from_row(row.as_deref(), x, xi)? };
                kernel.push(C64::from_polar(c, phi));
            }
        }
        Ok(Self { grid: grid.clone(), phase, kernel })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phase(&self) -> &PhaseFunction {
        &self.phase
    }

    fn check(&self, psi: &GridState) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(domain("state lives on a different grid"));
        }
        Ok(())
    }

    fn forward(&self, hat: &[C64]) -> Vec<C64> {
        let n = self.grid.points();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, v) in hat.iter().enumerate() {
            if *v == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, m) in out.iter_mut().zip(&self.kernel[k * n..(k + 1) * n]) {
                *o += m * v;
            }
        }
        out
    }

    fn backward(&self, y: &[C64]) -> Vec<C64> {
        let n = self.grid.points();
        let w = self.grid.dx() / self.grid.dxi();
        (0..n)
            .map(|k| self.kernel[k * n..(k + 1) * n].iter().zip(y).map(|(m, v)| m.conj() * v).sum::<C64>() * w)
            .collect()
    }

    /// `J psi` without the momentum support check.
    pub fn apply(&self, psi: &GridState) -> Result<GridState> {
        self.check(psi)?;
        let hat = dft(psi).into_values();
        GridState::new(&self.grid, Domain::Position, self.forward(&hat))
    }

    /// `J* psi`.
    pub fn adjoint(&self, psi: &GridState) -> Result<GridState> {
        self.check(psi)?;
        let y = psi.to_position().into_values();
        let hat = GridState::new(&self.grid, Domain::Momentum, self.backward(&y))?;
        Ok(idft(&hat))
    }

    fn jjstar(&self, y: &[C64]) -> Vec<C64> {
        self.forward(&self.backward(y))
    }

    /// `J* (J J*)^{-1} psi` by conjugate gradients; the round-trip residual
    /// `|J J^{-1} psi - psi|` is checked against `tol`.
    pub fn inverse(&self, psi: &GridState, tol: f64) -> Result<GridState> {
        self.check(psi)?;
        let b = psi.to_position().into_values();
        let z = pcg(|v| self.jjstar(v), |v| v.to_vec(), &b, 0.1 * tol, 500).map_err(advise)?;
        let hat = GridState::new(&self.grid, Domain::Momentum, self.backward(&z))?;
        let out = idft(&hat);
        let round = self.apply(&out)?;
        let res = round.distance(psi)? / psi.norm().max(f64::MIN_POSITIVE);
        if !(res <= tol) {
            return Err(advise(Error::Convergence { what: "identification inverse round trip".into(), residual: res }));
        }
        Ok(out)
    }

    /// `(J* J)^{-1} J* psi`, the left-inverse form.
    pub fn inverse_normal(&self, psi: &GridState, tol: f64) -> Result<GridState> {
        self.check(psi)?;
        let y = psi.to_position().into_values();
        let b = self.backward(&y);
        let z = pcg(|v| self.backward(&self.forward(v)), |v| v.to_vec(), &b, tol, 500).map_err(advise)?;
        Ok(idft(&GridState::new(&self.grid, Domain::Momentum, z)?))
    }

    /// `max |psi - J J* psi| / |psi|` over the probes.
    pub fn identity_defect(&self, probes: &[GridState]) -> Result<f64> {
        probes.iter().try_fold(0.0f64, |acc, p| {
            self.check(p)?;
            let y = p.to_position();
            let back = GridState::new(&self.grid, Domain::Position, self.jjstar(y.values()))?;
            Ok(acc.max(back.distance(&y)? / y.norm()))
        })
    }

    /// `max |J psi| / |psi|` over the probes.
    pub fn bound(&self, probes: &[GridState]) -> Result<f64> {
        probes.iter().try_fold(0.0f64, |acc, p| Ok(acc.max(self.apply(p)?.norm() / p.norm())))
    }
}

fn advise(e: Error) -> Error {
    match e {
        Error::Convergence { what, residual } => {
            Error::Convergence { what: format!("{what}; J J* is poorly conditioned, try a larger r0"), residual }
        }
        other => other,
    }
}

/// Momentum mass of `psi` below `|xi| < d` relative to its norm.
pub fn low_momentum_fraction(psi: &GridState, d: f64) -> f64 {
    let m = psi.to_momentum();
    let g = psi.grid();
    let low: f64 = m
        .values()
        .iter()
        .enumerate()
        .filter(|(k, _)| g.momentum(*k)[0].abs() < d)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * g.cell(Domain::Momentum);
    low / m.norm2()
}

/// `J psi` for states with Fourier support in `|xi| >= d` (up to `tol`
/// relative mass).
pub fn identification_apply(j: &Identification, psi: &GridState, tol: f64) -> Result<GridState> {
    let frac = low_momentum_fraction(psi, j.phase().params().d);
    if frac > tol {
        return Err(domain(format!("state carries relative mass {frac:.3e} below |xi| = d")));
    }
    j.apply(psi)
}

/// Outcome of the `r0` search.
#[derive(Debug, Clone)]
pub struct RadiusSearch {
    pub r0: f64,
    /// `(r0, |I - J J*|)` for every candidate tried.
    pub trials: Vec<(f64, f64)>,
    pub identification: Identification,
}

/// Smallest power of two `r0 >= start` with `|I - J J*| < 1/2` on the probes.
pub fn search_r0(
    solver: &OrbitSolver,
    params: PhaseParams,
    grid: &Grid,
    probes: &[GridState],
    nodes: usize,
    start: f64,
) -> Result<RadiusSearch> {
    check_grid(grid)?;
    let mut r0 = 2f64.powi(start.max(2.0).log2().ceil() as i32);
    let mut trials = Vec::new();
    let mut phase = build_phase_function(solver.clone(), PhaseParams { r0, ..params })?;
    while r0 < grid.half_extent() {
        phase = phase.with_r0(r0)?;
        let j = Identification::new(phase.clone(), grid, nodes)?;
        phase = j.phase().clone();
        let defect = j.identity_defect(probes)?;
        trials.push((r0, defect));
        if defect < 0.5 {
            return Ok(RadiusSearch { r0, trials, identification: j });
        }
        r0 *= 2.0;
    }
    Err(Error::Convergence { what: format!("no r0 below the grid half extent; trials {trials:?}"), residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PairPotential;

    fn packet(grid: &Grid, x0: f64, k0: f64, s: f64) -> GridState {
        GridState::from_fn(grid, |x| C64::from_polar((-(x[0] - x0).powi(2) / (4.0 * s * s)).exp(), k0 * x[0]))
            .normalized()
            .unwrap()
    }

    #[test]
    fn free_phase_gives_identity() {
        let grid = Grid::new(1, 256, 64.0, 1.0).unwrap();
        let s = OrbitSolver::new(PairPotential::zero(), 0.1, 1).unwrap();
        let j = Identification::new(build_phase_function(s, PhaseParams::default()).unwrap(), &grid, 8).unwrap();
        let g = packet(&grid, 3.0, 1.5, 3.0);
        assert!(j.apply(&g).unwrap().distance(&g).unwrap() < 1e-10);
        assert!(j.inverse(&g, 1e-10).unwrap().distance(&g).unwrap() < 1e-10);
        assert!(identification_apply(&j, &packet(&grid, 0.0, 0.0, 3.0), 1e-8).is_err());
    }

    #[test]
    fn coulomb_inverse_agrees_with_normal_form() {
        let grid = Grid::new(1, 512, 128.0, 1.0).unwrap();
        let s = OrbitSolver::new(PairPotential::soft_coulomb(0.5, 1.0), 0.1, 1).unwrap();
        let params = PhaseParams { d: 1.0, r0: 32.0, ..PhaseParams::default() };
        let j = Identification::new(build_phase_function(s, params).unwrap(), &grid, 24).unwrap();
        let probes = [packet(&grid, 40.0, 2.0, 4.0), packet(&grid, -30.0, 1.5, 4.0)];
        let defect = j.identity_defect(&probes).unwrap();
        assert!(defect < 0.5, "{defect}");
        assert!(j.bound(&probes).unwrap() < 2.0);
        for p in &probes {
            let a = j.inverse(p, 1e-10).unwrap();
            let b = j.inverse_normal(p, 1e-12).unwrap();
            assert!(a.distance(&b).unwrap() < 1e-8, "{}", a.distance(&b).unwrap());
            assert!(j.adjoint(&j.apply(p).unwrap()).unwrap().distance(p).unwrap() < 0.5);
        }
    }

    #[test]
    fn table_matches_direct_phase() {
        let grid = Grid::new(1, 256, 128.0, 1.0).unwrap();
        let s = OrbitSolver::new(PairPotential::soft_coulomb(0.5, 1.0), 0.1, 1).unwrap();
        let params = PhaseParams { d: 1.0, r0: 32.0, ..PhaseParams::default() };
        let f = build_phase_function(s, params).unwrap();
        let j = Identification::new(f.clone(), &grid, 32).unwrap();
        for &(x, xi) in &[(50.0, 1.3), (-70.0, 2.2), (90.0, -0.8), (-25.0, -3.0)] {
            let row = j.phase().correction_row(xi).unwrap();
            let t = j.phase().glued_from_row(row.as_deref(), x, xi).unwrap();
            let d = f.value(&[x], &[xi]).unwrap();
            assert!((t - d).abs() < 1e-6, "{x} {xi}: {t} vs {d}");
        }
    }
}
