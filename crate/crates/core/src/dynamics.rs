//! Interacting propagation `exp(-itH/hbar)` on a grid and the time-decay
//! measurements built on it.
//!
//! `H = T(D) + V(x)` with `T` a momentum multiplier (by default
//! `sum_a xi_a^2 / (2 m_a)`) and `V` a real potential sampled on the grid.
//! Propagation uses the Strang split `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, config, domain, Error, Result};
use crate::linalg::symmetric_eigen;
use crate::potentials::linear_fit;
use crate::smooth::{falling, rising};
use crate::spectral::{apply_multiplier, dft, idft, Domain, Grid, GridState};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    masses: Vec<f64>,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    dt: f64,
    kin_phase: Vec<C64>,
    pot_half: Vec<C64>,
}

fn axis_masses(grid: &Grid, masses: &[f64]) -> Result<Vec<f64>> {
    let m = match masses.len() {
        1 => vec![masses[0]; grid.dim()],
        n if n == grid.dim() => masses.to_vec(),
        n => return Err(Error::Dimension { expected: grid.dim(), got: n }),
    };
    if m.iter().any(|x| !(*x > 0.0)) {
        return Err(domain("masses must be positive"));
    }
    Ok(m)
}

impl Propagator {
    /// Nonrelativistic kinetic energy with per-axis masses (one entry
    /// broadcasts to every axis).
    pub fn new(grid: &Grid, masses: &[f64], potential: impl Fn(&[f64]) -> f64, dt: f64) -> Result<Self> {
        let m = axis_masses(grid, masses)?;
        let mm = m.clone();
        Self::with_kinetic(grid, &m, move |xi| xi.iter().zip(&mm).map(|(p, m)| p * p / (2.0 * m)).sum(), potential, dt)
    }

    pub fn free(grid: &Grid, masses: &[f64], dt: f64) -> Result<Self> {
        Self::new(grid, masses, |_| 0.0, dt)
    }

    /// Arbitrary real kinetic multiplier `T(xi)`; `masses` still define
    /// the velocity `p / m` and the mass metric.
    pub fn with_kinetic(
        grid: &Grid,
        masses: &[f64],
        kinetic: impl Fn(&[f64]) -> f64,
        potential: impl Fn(&[f64]) -> f64,
        dt: f64,
    ) -> Result<Self> {
        let masses = axis_masses(grid, masses)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain("time step must be positive"));
        }
        let d = grid.dim();
        let kin: Vec<f64> = (0..grid.len()).map(|k| kinetic(&grid.momentum(k)[..d])).collect();
        let pot: Vec<f64> = (0..grid.len()).map(|k| potential(&grid.position(k)[..d])).collect();
        if kin.iter().chain(&pot).any(|v| !v.is_finite()) {
            return Err(domain("kinetic or potential term is not finite on the grid"));
        }
        let hbar = grid.hbar();
        let inv_n = 1.0 / grid.len() as f64;
        let kin_phase = kin.iter().map(|t| C64::from_polar(inv_n, -t * dt / hbar)).collect();
        let pot_half = pot.iter().map(|v| C64::from_polar(1.0, -0.5 * v * dt / hbar)).collect();
        Ok(Self { grid: grid.clone(), masses, kinetic: kin, potential: pot, dt, kin_phase, pot_half })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    /// Number of steps covering `t`; errors unless `t / dt` is integral.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        let q = t.abs() / self.dt;
        let n = q.round();
        if (q - n).abs() > 1e-9 * q.max(1.0) {
            return Err(domain(format!("time {t} is not a multiple of the step {}", self.dt)));
        }
        Ok(n as usize)
    }

    /// Strang steps in place; `backward` runs with `-dt`.
    pub fn step_in_place(&self, data: &mut [C64], steps: usize, backward: bool) {
        if steps == 0 {
            return;
        }
        let pot = |d: &mut [C64], sq: bool| {
            for (v, p) in d.iter_mut().zip(&self.pot_half) {
                let mut f = if backward { p.conj() } else { *p };
                if sq {
                    f *= f;
                }
                *v *= f;
            }
        };
        let kin: Vec<C64>;
        let mult = if backward {
            kin = self.kin_phase.iter().map(|c| c.conj()).collect();
            &kin
        } else {
            &self.kin_phase
        };
        pot(data, false);
        for s in 0..steps {
            apply_multiplier(&self.grid, data, mult);
            // adjacent half steps merge into one full potential step
            pot(data, s + 1 < steps);
        }
    }

    /// Approximates `exp(-itH/hbar) psi`; negative `t` runs backward.
    pub fn propagate(&self, psi: &GridState, t: f64) -> Result<GridState> {
        self.check(psi)?;
        let steps = self.steps_for(t)?;
        let mut data = psi.to_position().into_values();
        self.step_in_place(&mut data, steps, t < 0.0);
        GridState::new(&self.grid, Domain::Position, data)
    }

    /// Exact `exp(-itT(D)/hbar) psi` (the potential is ignored).
    pub fn kinetic_evolve(&self, psi: &GridState, t: f64) -> Result<GridState> {
        self.check(psi)?;
        let hbar = self.grid.hbar();
        let mut m = psi.to_momentum();
        for (v, e) in m.values_mut().iter_mut().zip(&self.kinetic) {
            *v *= C64::from_polar(1.0, -t * e / hbar);
        }
        Ok(idft(&m))
    }

    fn check(&self, psi: &GridState) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(domain("state lives on a different grid"));
        }
        Ok(())
    }

    fn apply_raw(&self, v: &[C64]) -> Vec<C64> {
        let mut t = v.to_vec();
        let mult: Vec<C64> = self.kinetic.iter().map(|e| C64::new(e / self.grid.len() as f64, 0.0)).collect();
        apply_multiplier(&self.grid, &mut t, &mult);
        for ((o, x), p) in t.iter_mut().zip(v).zip(&self.potential) {
            *o += x * p;
        }
        t
    }

    pub fn apply_hamiltonian(&self, psi: &GridState) -> Result<GridState> {
        self.check(psi)?;
        let p = psi.to_position();
        GridState::new(&self.grid, Domain::Position, self.apply_raw(p.values()))
    }

    /// `(psi, H psi) / (psi, psi)`.
    pub fn energy(&self, psi: &GridState) -> Result<f64> {
        let p = psi.to_position();
        let h = self.apply_hamiltonian(&p)?;
        Ok(p.inner(&h)?.re / p.norm2())
    }

    /// Lower and upper bounds of the discretized spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let vmin = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        let vmax = self.potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tmin = self.kinetic.iter().cloned().fold(f64::INFINITY, f64::min);
        let tmax = self.kinetic.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (vmin + tmin, vmax + tmax)
    }

    /// `p_a psi / m_a` for axis `a`, in position form.
    pub fn velocity(&self, psi: &GridState, axis: usize) -> Result<GridState> {
        self.check(psi)?;
        let m = self.masses[axis];
        let mut f = psi.to_momentum();
        f.apply(|xi| C64::new(xi[axis] / m, 0.0));
        Ok(idft(&f))
    }

    /// Lowest eigenpairs of the discretized `H` below `threshold`.
    ///
    /// Shift-invert Lanczos: `(H - s)^{-1}` with `s` under the spectrum is
    /// applied by preconditioned conjugate gradients, so the low end of the
    /// spectrum converges in a few dozen steps. At most `count` pairs are
    /// returned, each with its residual `||H v - E v||`.
    pub fn bound_states(&self, count: usize, threshold: f64, seed: u64) -> Result<Vec<BoundState>> {
        let n = self.grid.len();
        let (lo, _) = self.spectral_bounds();
        let shift = lo - 1.0;
        let mean_v = self.potential.iter().sum::<f64>() / n as f64 - shift;
        let precond: Vec<C64> =
            self.kinetic.iter().map(|t| C64::new(1.0 / ((t + mean_v) * n as f64), 0.0)).collect();
        let solve = |b: &[C64]| -> Result<Vec<C64>> {
            pcg(
                |x| {
                    let mut y = self.apply_raw(x);
                    for (o, v) in y.iter_mut().zip(x) {
                        *o -= v * shift;
                    }
                    y
                },
                |r| {
                    let mut z = r.to_vec();
                    apply_multiplier(&self.grid, &mut z, &precond);
                    z
                },
                b,
                1e-13,
                2000,
            )
        };
        let steps = (3 * count + 40).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
        let nq = dot(&q, &q).re.sqrt();
        q.iter_mut().for_each(|v| *v /= nq);
        let mut basis: Vec<Vec<C64>> = vec![q];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..steps {
            let mut w = solve(&basis[j])?;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let bn = dot(&w, &w).re.sqrt();
            if j + 1 == steps || bn < 1e-14 {
                break;
            }
            beta.push(bn);
            w.iter_mut().for_each(|v| *v /= bn);
            basis.push(w);
        }
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let e = symmetric_eigen(&t);
        let cell = self.grid.cell(Domain::Position);
        let mut out = Vec::new();
        for idx in (0..k).rev() {
            if out.len() == count {
                break;
            }
            let theta = e.values[idx];
            if theta <= 0.0 {
                break;
            }
            let energy = shift + 1.0 / theta;
            if energy >= threshold {
                break;
            }
            let mut v = vec![ZERO; n];
            for (i, b) in basis.iter().enumerate().take(k) {
                let c = e.vectors[(i, idx)];
                for (x, y) in v.iter_mut().zip(b) {
                    *x += y * c;
                }
            }
            let norm = (dot(&v, &v).re * cell).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let hv = self.apply_raw(&v);
            let res = hv.iter().zip(&v).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>() * cell;
            out.push(BoundState {
                energy,
                residual: res.sqrt(),
                state: GridState::new(&self.grid, Domain::Position, v)?,
            });
        }
        Ok(out)
    }

    /// `f(H) psi` for the smooth window
    /// `f(E) = (erf((E - lo)/edge) - erf((E - hi)/edge)) / 2`,
    /// by Chebyshev expansion on the spectral interval.
    pub fn window_apply(&self, psi: &GridState, lo: f64, hi: f64, edge: f64) -> Result<GridState> {
        self.check(psi)?;
        let (emin, emax) = self.spectral_bounds();
        if !(hi > lo) || !(edge > 0.0) {
            return Err(domain("energy window needs lo < hi and a positive edge"));
        }
        if hi < emin || lo > emax {
            return Err(domain(format!("window [{lo}, {hi}] outside the spectrum [{emin}, {emax}]")));
        }
        let c = 0.5 * (emax + emin);
        let h = 0.5 * (emax - emin) * (1.0 + 1e-9) + 1e-12;
        let f = |e: f64| 0.5 * (libm::erf((e - lo) / edge) - libm::erf((e - hi) / edge));
        let coeffs = chebyshev_coefficients(|u| f(c + h * u), 1e-15);
        let x = psi.to_position().into_values();
        let apply = |v: &[C64]| -> Vec<C64> {
            let mut y = self.apply_raw(v);
            for (o, a) in y.iter_mut().zip(v) {
                *o = (*o - a * c) / h;
            }
            y
        };
        let mut t0 = x.clone();
        let mut out: Vec<C64> = x.iter().map(|v| v * coeffs[0]).collect();
        if coeffs.len() > 1 {
            let mut t1 = apply(&t0);
            for (o, v) in out.iter_mut().zip(&t1) {
                *o += v * coeffs[1];
            }
            for ck in &coeffs[2..] {
                let mut t2 = apply(&t1);
                for (a, b) in t2.iter_mut().zip(&t0) {
                    *a = *a * 2.0 - b;
                }
                for (o, v) in out.iter_mut().zip(&t2) {
                    *o += v * *ck;
                }
                t0 = t1;
                t1 = t2;
            }
        }
        GridState::new(&self.grid, Domain::Position, out)
    }
}

/// Eigenpair of a discretized Hamiltonian.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub energy: f64,
    pub residual: f64,
    pub state: GridState,
}

/// Removes the components along normalized `states`.
pub fn project_out(psi: &GridState, states: &[BoundState]) -> Result<GridState> {
    let mut out = psi.to_position();
    for b in states {
        let c = b.state.inner(&out)?;
        out.axpy(-c, &b.state)?;
    }
    Ok(out)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn pcg(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    precond: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<C64>> {
    let bn = dot(b, b).re.sqrt();
    let mut x = vec![ZERO; b.len()];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rn = dot(&r, &r).re.sqrt();
        if rn <= tol * bn {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + p[i] * beta;
        }
    }
    let rn = dot(&r, &r).re.sqrt();
    Err(Error::Convergence { what: "preconditioned conjugate gradients".into(), residual: rn / bn })
}

/// Chebyshev coefficients of `f` on `[-1, 1]`, grown until the tail is
/// below `tol` relative to the largest coefficient.
fn chebyshev_coefficients(f: impl Fn(f64) -> f64, tol: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut n = 64;
    loop {
        // DCT-II through a complex FFT of the even extension
        let mut y = vec![ZERO; 2 * n];
        for j in 0..n {
            let v = f((PI * (j as f64 + 0.5) / n as f64).cos());
            y[j] = C64::new(v, 0.0);
            y[2 * n - 1 - j] = C64::new(v, 0.0);
        }
        rustfft::FftPlanner::new().plan_fft_forward(2 * n).process(&mut y);
        let coeffs: Vec<f64> = (0..n)
            .map(|k| {
                let c = (C64::from_polar(1.0, -PI * k as f64 / (2 * n) as f64) * y[k]).re / n as f64;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let tail = coeffs[n - n / 8..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if tail <= tol * max || n >= 1 << 20 {
            let keep = coeffs.iter().rposition(|c| c.abs() > tol * max * 1e-3).map_or(1, |i| i + 1);
            return coeffs[..keep].to_vec();
        }
        n *= 2;
    }
}

/// Values sampled at increasing times, with a log-log slope fitted over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_slope: f64,
    pub window: (f64, f64),
    /// Points entering the fit (values above the roundoff floor inside the window).
    pub fit_points: usize,
    /// Largest fraction of the squared norm seen near the box faces.
    pub boundary_mass: f64,
}

impl DecayTable {
    /// Fits `log value` against `log t` over `window`, skipping entries
    /// below `floor * max(values)`.
    pub fn new(times: Vec<f64>, values: Vec<f64>, window: (f64, f64), floor: f64) -> Result<Self> {
        check_dim(times.len(), values.len())?;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain("decay values must be finite and nonnegative"));
        }
        let max = values.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(&values)
            .filter(|(t, v)| **t >= window.0 && **t <= window.1 && **v > floor * max && **v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln()))
            .collect();
        let slope = if pts.len() >= 2 { linear_fit(&pts).0 } else { f64::NAN };
        Ok(Self { times, values, fitted_slope: slope, window, fit_points: pts.len(), boundary_mass: 0.0 })
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }
}

/// Default fit window for decay slopes.
pub const DEFAULT_WINDOW: (f64, f64) = (5.0, 50.0);

/// Default floor (relative to the largest entry) below which values are
/// treated as roundoff and left out of slope fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// `sqrt(sum_a m_a ||w_a||^2)` for position-form components `w_a`.
fn mass_norm(masses: &[f64], parts: &[GridState]) -> f64 {
    parts.iter().zip(masses).map(|(p, m)| m * p.norm2()).sum::<f64>().sqrt()
}

/// `||x psi||` in the mass metric.
pub fn position_moment(masses: &[f64], psi: &GridState) -> f64 {
    let p = psi.to_position();
    let parts: Vec<GridState> = (0..p.grid().dim())
        .map(|a| {
            let mut q = p.clone();
            q.apply(|x| C64::new(x[a], 0.0));
            q
        })
        .collect();
    mass_norm(masses, &parts)
}

/// `||(x/t - v) psi(t)||` in the mass metric at each requested time.
pub fn local_time_defect(prop: &Propagator, psi0: &GridState, times: &[f64]) -> Result<DecayTable> {
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(domain("local-time defect needs t > 0"));
    }
    let mut psi = psi0.to_position();
    let mut now = 0.0;
    let mut values = Vec::with_capacity(times.len());
    let mut boundary: f64 = 0.0;
    let dim = prop.grid().dim();
    for &t in times {
        psi = prop.propagate(&psi, t - now)?;
        now = t;
        boundary = boundary.max(psi.boundary_mass(0.05 * prop.grid().half_extent()));
        let parts: Vec<GridState> = (0..dim)
            .map(|a| {
                let mut w = psi.clone();
                w.apply(|x| C64::new(x[a] / t, 0.0));
                let v = prop.velocity(&psi, a)?;
                w.axpy(C64::new(-1.0, 0.0), &v)?;
                Ok(w)
            })
            .collect::<Result<_>>()?;
        values.push(mass_norm(prop.masses(), &parts));
    }
    let mut table = DecayTable::new(times.to_vec(), values, DEFAULT_WINDOW, ROUNDOFF_FLOOR)?;
    table.boundary_mass = boundary;
    Ok(table)
}

/// Expectation values of position and momentum at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrenfestRow {
    pub t: f64,
    pub position: [f64; 3],
    pub momentum: [f64; 3],
}

pub fn expectations(psi: &GridState) -> ([f64; 3], [f64; 3]) {
    let p = psi.to_position();
    let f = dft(&p);
    let g = p.grid();
    let (n2x, n2p) = (p.norm2(), f.norm2());
    let mut xm = [0.0; 3];
    let mut pm = [0.0; 3];
    for k in 0..g.len() {
        let (x, xi) = (g.position(k), g.momentum(k));
        let (wx, wp) = (p.values()[k].norm_sqr(), f.values()[k].norm_sqr());
        for a in 0..g.dim() {
            xm[a] += x[a] * wx;
            pm[a] += xi[a] * wp;
        }
    }
    for a in 0..g.dim() {
        xm[a] *= g.cell(Domain::Position) / n2x;
        pm[a] *= g.cell(Domain::Momentum) / n2p;
    }
    (xm, pm)
}

pub fn ehrenfest_track(prop: &Propagator, psi0: &GridState, times: &[f64]) -> Result<Vec<EhrenfestRow>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("times must be nondecreasing"));
    }
    let mut psi = psi0.to_position();
    let mut now = 0.0;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        psi = prop.propagate(&psi, t - now)?;
        now = t;
        let (position, momentum) = expectations(&psi);
        rows.push(EhrenfestRow { t, position, momentum });
    }
    Ok(rows)
}

/// Which free propagation estimate [`propagation_decay`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateFamily {
    /// `<x>^{-s} q(D) e^{-itH0} <x>^{-s}`; expected exponent `-s`.
    WeightWeight,
    /// `<x>^{-s} e^{-itH0} P_+ <x>^delta`; expected exponent `-s + delta`.
    WeightOutgoing,
    /// `<x>^delta P_- e^{-itH0} P_+ <x>^delta`; faster than any power.
    IncomingOutgoing,
}

/// Symbol parameters for the estimate families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSpec {
    pub family: EstimateFamily,
    pub s: f64,
    pub delta: f64,
    pub theta: f64,
    pub rho: f64,
    /// Low-momentum and small-radius cutoff.
    pub sigma: f64,
}

impl SymbolSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(config("sigma must be positive"));
        }
        if !(self.s >= 0.0) || !(self.delta >= 0.0) {
            return Err(config("s and delta must be nonnegative"));
        }
        if self.family == EstimateFamily::WeightOutgoing && self.delta > self.s {
            return Err(config("weight/outgoing family needs s >= delta"));
        }
        if self.family != EstimateFamily::WeightWeight {
            if !(self.theta > -1.0 && self.theta < 1.0 && self.rho > 0.0) {
                return Err(config("theta must lie in (-1, 1) and rho must be positive"));
            }
            if !(self.theta + self.rho < 1.0 && self.theta - self.rho > -1.0) {
                return Err(config("theta +- rho must stay inside (-1, 1)"));
            }
            if dim != 1 {
                return Err(config("outgoing/incoming symbols are implemented for m = 1 only"));
            }
        }
        Ok(())
    }

    /// `q(xi)`: 0 for `|xi| <= sigma`, 1 on `[1.5, 2.5] sigma`, 0 beyond `3 sigma`.
    pub fn energy_cutoff(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let s = self.sigma;
        rising(a, s, 1.5 * s) * falling(a, 2.5 * s, 3.0 * s)
    }

    // smooth half-line cutoffs vanishing for |u| < sigma
    fn plus(&self, u: f64) -> f64 {
        rising(u, self.sigma, 2.0 * self.sigma)
    }

    fn minus(&self, u: f64) -> f64 {
        rising(-u, self.sigma, 2.0 * self.sigma)
    }

    // momentum halves of the outgoing/incoming symbols; compact support
    // keeps the evolved probes inside the periodic box
    fn plus_momentum(&self, p: f64) -> f64 {
        self.plus(p) * falling(p, 2.5 * self.sigma, 3.0 * self.sigma)
    }

    fn minus_momentum(&self, p: f64) -> f64 {
        self.plus_momentum(-p)
    }
}

fn weight(psi: &mut GridState, power: f64) {
    psi.apply(|x| C64::new((1.0 + x.iter().map(|c| c * c).sum::<f64>()).powf(0.5 * power), 0.0));
}

fn multiplier(psi: &GridState, f: impl Fn(f64) -> f64) -> GridState {
    let mut m = psi.to_momentum();
    m.apply(|xi| C64::new(f(xi[0]), 0.0));
    idft(&m)
}

// P_+ = b_+(D) a_+(x) + b_-(D) a_-(x): outgoing in 1-D means x xi > 0.
fn outgoing(spec: &SymbolSpec, psi: &GridState) -> Result<GridState> {
    let mut ap = psi.to_position();
    ap.apply(|x| C64::new(spec.plus(x[0]), 0.0));
    let mut am = psi.to_position();
    am.apply(|x| C64::new(spec.minus(x[0]), 0.0));
    let mut out = multiplier(&ap, |p| spec.plus_momentum(p));
    out.axpy(C64::new(1.0, 0.0), &multiplier(&am, |p| spec.minus_momentum(p)))?;
    Ok(out)
}

// P_- = a_+(x) b_-(D) + a_-(x) b_+(D)
fn incoming(spec: &SymbolSpec, psi: &GridState) -> Result<GridState> {
    let mut bm = multiplier(psi, |p| spec.minus_momentum(p));
    bm.apply(|x| C64::new(spec.plus(x[0]), 0.0));
    let mut bp = multiplier(psi, |p| spec.plus_momentum(p));
    bp.apply(|x| C64::new(spec.minus(x[0]), 0.0));
    bm.axpy(C64::new(1.0, 0.0), &bp)?;
    Ok(bm)
}

/// Max over `probes` of `||A(t) f|| / ||f||` for the chosen estimate, with
/// exact free evolution (`H0 = |xi|^2/2`, unit mass).
pub fn propagation_decay(spec: &SymbolSpec, probes: &[GridState], times: &[f64]) -> Result<DecayTable> {
    let first = probes.first().ok_or_else(|| domain("probe set is empty"))?;
    let grid = first.grid().clone();
    spec.validate(grid.dim())?;
    let free = Propagator::free(&grid, &[1.0], 1.0)?;
    let mut values = vec![0.0f64; times.len()];
    let mut boundary: f64 = 0.0;
    for f in probes {
        let nf = f.norm();
        let mut start = f.to_position();
        match spec.family {
            EstimateFamily::WeightWeight => {
                // q(D) commutes with the free flow; applying it first keeps
                // fast components from wrapping around the box
                weight(&mut start, -spec.s);
                start = multiplier(&start, |p| spec.energy_cutoff(p));
            }
            EstimateFamily::WeightOutgoing | EstimateFamily::IncomingOutgoing => {
                weight(&mut start, spec.delta);
                start = outgoing(spec, &start)?;
            }
        }
        for (i, &t) in times.iter().enumerate() {
            let mut u = free.kinetic_evolve(&start, t)?;
            boundary = boundary.max(u.boundary_mass(0.05 * grid.half_extent()));
            let out = match spec.family {
                EstimateFamily::WeightWeight | EstimateFamily::WeightOutgoing => {
                    weight(&mut u, -spec.s);
                    u
                }
                EstimateFamily::IncomingOutgoing => {
                    let mut q = incoming(spec, &u)?;
                    weight(&mut q, spec.delta);
                    q
                }
            };
            values[i] = values[i].max(out.norm() / nf);
        }
    }
    let mut table = DecayTable::new(times.to_vec(), values, DEFAULT_WINDOW, ROUNDOFF_FLOOR)?;
    table.boundary_mass = boundary;
    Ok(table)
}

/// Seeded band-limited probe states: random lattice coefficients for
/// `|xi| <= kmax` with a smooth spectral edge, times a Gaussian envelope
/// of width `envelope` in position, normalized.
pub fn probe_states(grid: &Grid, count: usize, seed: u64, kmax: f64, envelope: f64) -> Result<Vec<GridState>> {
    if !(kmax > 0.0 && envelope > 0.0) {
        return Err(domain("probe band and envelope must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = GridState::zeros(grid, Domain::Momentum);
        for k in 0..grid.len() {
            let xi = grid.momentum(k);
            let r = xi[..grid.dim()].iter().map(|c| c * c).sum::<f64>().sqrt();
            let w = falling(r, 0.8 * kmax, kmax);
            let c = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            m.values_mut()[k] = c * w;
        }
        let mut p = idft(&m);
        p.apply(|x| C64::new((-0.5 * x.iter().map(|c| c * c).sum::<f64>() / (envelope * envelope)).exp(), 0.0));
        out.push(p.normalized()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::free_propagate;
    use std::f64::consts::PI;

    fn packet(grid: &Grid, x0: f64, p0: f64, w: f64) -> GridState {
        GridState::from_fn(grid, |x| {
            C64::from_polar((-(x[0] - x0).powi(2) / (2.0 * w * w)).exp(), p0 * x[0])
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn free_split_step_matches_spectral_propagator() {
        let g = Grid::new(1, 256, 20.0, 1.0).unwrap();
        let psi = packet(&g, -3.0, 1.0, 1.0);
        let p = Propagator::free(&g, &[1.0], 0.01).unwrap();
        let a = p.propagate(&psi, 1.0).unwrap();
        let b = free_propagate(&psi, 1.0, 1.0).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-10);
    }

    #[test]
    fn norm_is_conserved_with_potential() {
        let g = Grid::new(1, 256, 20.0, 1.0).unwrap();
        let psi = packet(&g, -3.0, 1.0, 1.0);
        let p = Propagator::new(&g, &[1.0], |x| -2.0 * (-x[0] * x[0]).exp(), 0.01).unwrap();
        let out = p.propagate(&psi, 2.0).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        assert!(p.propagate(&psi, 0.005).is_err());
    }

    #[test]
    fn backward_step_undoes_forward_step() {
        let g = Grid::new(1, 128, 15.0, 1.0).unwrap();
        let psi = packet(&g, 0.0, 0.5, 1.0);
        let p = Propagator::new(&g, &[1.0], |x| 0.3 * x[0].cos(), 0.02).unwrap();
        let back = p.propagate(&p.propagate(&psi, 1.0).unwrap(), -1.0).unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-11);
    }

    #[test]
    fn harmonic_ground_state_is_found() {
        let g = Grid::new(1, 128, 10.0, 1.0).unwrap();
        let p = Propagator::new(&g, &[1.0], |x| 0.5 * x[0] * x[0], 0.01).unwrap();
        let b = p.bound_states(3, 10.0, 7).unwrap();
        assert_eq!(b.len(), 3);
        for (k, s) in b.iter().enumerate() {
            assert!((s.energy - (k as f64 + 0.5)).abs() < 1e-10, "{k}: {}", s.energy);
            assert!(s.residual < 1e-8);
        }
    }

    #[test]
    fn window_of_eigenstate_is_scalar() {
        let g = Grid::new(1, 128, 10.0, 1.0).unwrap();
        let p = Propagator::new(&g, &[1.0], |x| 0.5 * x[0] * x[0], 0.01).unwrap();
        let b = p.bound_states(2, 10.0, 1).unwrap();
        let inside = p.window_apply(&b[1].state, 1.0, 2.0, 0.05).unwrap();
        assert!(inside.distance(&b[1].state).unwrap() < 1e-10);
        let outside = p.window_apply(&b[0].state, 1.0, 2.0, 0.05).unwrap();
        assert!(outside.norm() < 1e-10);
    }

    #[test]
    fn free_defect_is_moment_over_time() {
        let g = Grid::new(1, 1024, 60.0, 1.0).unwrap();
        let psi = packet(&g, 0.0, 0.0, 1.0);
        let p = Propagator::free(&g, &[2.0], 0.5).unwrap();
        let table = local_time_defect(&p, &psi, &[1.0, 2.0, 4.0]).unwrap();
        let x = position_moment(&[2.0], &psi);
        for (t, v) in table.times.iter().zip(&table.values) {
            assert!((v - x / t).abs() < 1e-10 * x / t);
        }
    }

    #[test]
    fn parity_keeps_mean_position_at_zero() {
        let g = Grid::new(1, 256, 20.0, 1.0).unwrap();
        let psi = packet(&g, 0.0, 0.0, 1.5);
        let p = Propagator::new(&g, &[1.0], |x| -(-x[0] * x[0]).exp(), 0.01).unwrap();
        for row in ehrenfest_track(&p, &psi, &[0.5, 1.0]).unwrap() {
            assert!(row.position[0].abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = SymbolSpec { family: EstimateFamily::IncomingOutgoing, s: 2.0, delta: 0.0, theta: 0.0, rho: 0.5, sigma: 1.0 };
        assert!(s.validate(1).is_ok());
        assert!(s.validate(2).is_err());
        s.rho = 1.2;
        assert!(s.validate(1).is_err());
        s.family = EstimateFamily::WeightOutgoing;
        s.rho = 0.5;
        s.delta = 3.0;
        assert!(s.validate(1).is_err());
        assert!((s.energy_cutoff(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(s.energy_cutoff(0.9), 0.0);
        assert_eq!(s.energy_cutoff(3.1), 0.0);
        let _ = PI;
    }
}
