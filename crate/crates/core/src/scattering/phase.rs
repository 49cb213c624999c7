//! Eikonal phases `phi_+-` as time limits along classical orbits and the
//! glued phase function used by the identification operator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::orbit::OrbitSolver;
use crate::error::{domain, Error, Result};
use crate::quad::{barycentric_lobatto, chebyshev_lobatto, composite_gauss};
use crate::smooth::rising;

/// Time direction of an asymptotic limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalOptions {
    /// Orbits are integrated to `+-horizon`; the remainder uses straight lines.
    pub horizon: f64,
    /// Largest accepted straight-line tail correction.
    pub tail_tolerance: f64,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self { horizon: 3200.0, tail_tolerance: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EikonalValue {
    pub value: f64,
    /// Contribution of `|t| > horizon`.
    pub tail: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// End state and action of the orbit from `x` that reaches momentum `xi` at `t`.
struct Shot {
    eta: Vec<f64>,
    q: Vec<f64>,
    action: f64,
}

fn shoot(solver: &OrbitSolver, t: f64, x: &[f64], xi: &[f64]) -> Result<Shot> {
    let eta = solver.orbit_inverse(t, 0.0, x, xi)?;
    let end = solver.orbit_with_action(t, 0.0, x, &eta, 0.5 * dot(xi, xi))?;
    Ok(Shot { eta, q: end.q, action: end.action })
}

/// `int_T^{+-inf} (V_rho(tau, q_x + (tau - T) xi) - V_rho(tau, q_0 + (tau - T) xi)) dtau`.
fn straight_tail(solver: &OrbitSolver, t: f64, qx: &[f64], q0: &[f64], xi: &[f64]) -> f64 {
    let d = qx.len();
    let (ws, wt) = composite_gauss(12, 12, 0.0, 1.0);
    let sign = t.signum();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut sum = 0.0;
    for (w, wgt) in ws.iter().zip(&wt) {
        // tau - T = |T| (1/w - 1) along the direction of time
        let lag = t.abs() * (1.0 / w - 1.0);
        let tau = t + sign * lag;
        for k in 0..d {
            a[k] = qx[k] + sign * lag * xi[k];
            b[k] = q0[k] + sign * lag * xi[k];
        }
        let f = solver.cutoff_potential(tau, &a) - solver.cutoff_potential(tau, &b);
        sum += wgt * f * t.abs() / (w * w);
    }
    sign * sum
}

/// `phi_+-(x, xi) = lim (phi(t, x, xi) - phi(t, 0, xi))`.
pub fn eikonal_phase(solver: &OrbitSolver, x: &[f64], xi: &[f64], sign: Sign, opts: &EikonalOptions) -> Result<EikonalValue> {
    let origin = shoot(solver, sign.factor() * opts.horizon, &vec![0.0; x.len()], xi)?;
    eikonal_with_origin(solver, x, xi, sign, opts, &origin)
}

fn eikonal_with_origin(
    solver: &OrbitSolver,
    x: &[f64],
    xi: &[f64],
    sign: Sign,
    opts: &EikonalOptions,
    origin: &Shot,
) -> Result<EikonalValue> {
    if !(opts.horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    let t = sign.factor() * opts.horizon;
    let shot = shoot(solver, t, x, xi)?;
    let tail = straight_tail(solver, t, &shot.q, &origin.q, xi);
    if !(tail.abs() <= opts.tail_tolerance) {
        return Err(Error::Convergence { what: format!("eikonal tail at horizon {}", opts.horizon), residual: tail.abs() });
    }
    Ok(EikonalValue { value: dot(x, &shot.eta) + shot.action - origin.action + tail, tail })
}

/// Gluing constants: phases are blended by the angle between `x` and `xi`
/// over `(sigma_minus, sigma_plus)` and switched on for `|xi| > d/2`,
/// `|x| > r0/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub d: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub r0: f64,
    pub eikonal: EikonalOptions,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self { d: 0.5, sigma_minus: -0.2, sigma_plus: 0.2, r0: 32.0, eikonal: EikonalOptions::default() }
    }
}

impl PhaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0 < self.sigma_minus && self.sigma_minus < self.sigma_plus && self.sigma_plus < 1.0) {
            return Err(domain("need -1 < sigma_minus < sigma_plus < 1"));
        }
        if !(self.d > 0.0) || !(self.r0 > 1.0) {
            return Err(domain("need d > 0 and r0 > 1"));
        }
        Ok(())
    }

    /// `(chi_+, chi_-)` at the given cosine.
    pub fn angular(&self, cos: f64) -> (f64, f64) {
        let plus = rising(cos, self.sigma_minus, self.sigma_plus);
        (plus, 1.0 - plus)
    }

    /// `phi(2 xi / d) phi(2 x / r0)`.
    pub fn radial(&self, x_norm: f64, xi_norm: f64) -> f64 {
        rising(2.0 * xi_norm / self.d, 1.0, 2.0) * rising(2.0 * x_norm / self.r0, 1.0, 2.0)
    }
}

/// Chebyshev table of `phi_+-(x, xi) - x xi` on one axis, in the variables
/// `log |x|` and `1 / |xi|`.
#[derive(Debug, Clone)]
struct Table {
    log_x: Vec<f64>,
    inv_xi: Vec<f64>,
    /// `[branch][i * inv_xi.len() + j]` on `x > 0`; branch 0 is phi_+ (`xi > 0`),
    /// branch 1 is phi_- (`xi < 0`). An even potential gives `x < 0` by
    /// `phi(-x, -xi) = phi(x, xi)`.
    values: [Vec<f64>; 2],
}

/// The glued phase `phi(x, xi)`.
#[derive(Debug, Clone)]
pub struct PhaseFunction {
    solver: OrbitSolver,
    params: PhaseParams,
    table: Option<Table>,
}

/// Eikonal residual check failure at build time.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub sign: Sign,
    pub residual: f64,
}

pub fn build_phase_function(solver: OrbitSolver, params: PhaseParams) -> Result<PhaseFunction> {
    params.validate()?;
    let f = PhaseFunction { solver, params, table: None };
    let bad: Vec<ResidualSample> = f
        .residual_probes()
        .into_iter()
        .map(|(x, xi, sign)| {
            let r = eikonal_residual(&f.solver, &x, &xi, sign, &params.eikonal, 1e-3)?;
            Ok(ResidualSample { x, xi, sign, residual: r })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|s| !(s.residual.abs() <= 1e-4))
        .collect();
    if let Some(s) = bad.first() {
        return Err(Error::Convergence {
            what: format!("eikonal residual at x = {:?}, xi = {:?} ({} offending probes)", s.x, s.xi, bad.len()),
            residual: s.residual,
        });
    }
    Ok(f)
}

/// `|grad_x phi_+-|^2 / 2 + V_L(x) - |xi|^2 / 2` with fourth-order central
/// differences of step `h`.
pub fn eikonal_residual(solver: &OrbitSolver, x: &[f64], xi: &[f64], sign: Sign, opts: &EikonalOptions, h: f64) -> Result<f64> {
    let origin = shoot(solver, sign.factor() * opts.horizon, &vec![0.0; x.len()], xi)?;
    let mut g2 = 0.0;
    let mut y = x.to_vec();
    for a in 0..x.len() {
        let mut val = |off: f64| -> Result<f64> {
            y[a] = x[a] + off;
            let v = eikonal_with_origin(solver, &y, xi, sign, opts, &origin)?.value;
            y[a] = x[a];
            Ok(v)
        };
        let g = (8.0 * (val(h)? - val(-h)?) - (val(2.0 * h)? - val(-2.0 * h)?)) / (12.0 * h);
        g2 += g * g;
    }
    let r = dot(x, x).sqrt();
    Ok(0.5 * g2 + solver.potential().long_value(r) - 0.5 * dot(xi, xi))
}

impl PhaseFunction {
    pub fn params(&self) -> &PhaseParams {
        &self.params
    }

    pub fn solver(&self) -> &OrbitSolver {
        &self.solver
    }

    fn residual_probes(&self) -> Vec<(Vec<f64>, Vec<f64>, Sign)> {
        let d = self.solver.dim();
        let r = self.params.r0.max(2.5 / self.solver.rho());
        let speed = 2.0 * self.params.d;
        let mut out = Vec::new();
        for (k, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
            let mut x = vec![0.0; d];
            let mut xi = vec![0.0; d];
            x[0] = r * (1.0 + 0.5 * k as f64);
            xi[0] = sign.factor() * speed;
            if d > 1 {
                xi[1] = 0.1 * speed;
            }
            out.push((x, xi, sign));
        }
        out
    }

    pub fn is_free(&self) -> bool {
        self.solver.potential().long_value(1.0) == 0.0 && self.solver.potential().long_value(10.0) == 0.0
    }

    /// `phi(x, xi)` evaluated directly from orbits.
    pub fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let free = dot(x, xi);
        let (xn, xin) = (dot(x, x).sqrt(), dot(xi, xi).sqrt());
        let w = self.params.radial(xn, xin);
        if w == 0.0 || self.is_free() {
            return Ok(free);
        }
        let (cp, cm) = self.params.angular(free / (xn * xin));
        let mut corr = 0.0;
        if cp > 0.0 {
            corr += cp * (eikonal_phase(&self.solver, x, xi, Sign::Plus, &self.params.eikonal)?.value - free);
        }
        if cm > 0.0 {
            corr += cm * (eikonal_phase(&self.solver, x, xi, Sign::Minus, &self.params.eikonal)?.value - free);
        }
        Ok(free + w * corr)
    }

    /// `a(x, xi) = |grad phi|^2/2 + V_L - |xi|^2/2 - (i/2) lap phi` as
    /// `(real, imaginary)` by central differences.
    pub fn amplitude(&self, x: &[f64], xi: &[f64], h: f64) -> Result<(f64, f64)> {
        let f0 = self.value(x, xi)?;
        let mut y = x.to_vec();
        let (mut g2, mut lap) = (0.0, 0.0);
        for a in 0..x.len() {
            let mut val = |off: f64| -> Result<f64> {
                y[a] = x[a] + off;
                let v = self.value(&y, xi)?;
                y[a] = x[a];
                Ok(v)
            };
            let (p1, m1, p2, m2) = (val(h)?, val(-h)?, val(2.0 * h)?, val(-2.0 * h)?);
            let g = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
            g2 += g * g;
            lap += (-p2 + 16.0 * p1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h);
        }
        let r = dot(x, x).sqrt();
        Ok((0.5 * g2 + self.solver.potential().long_value(r) - 0.5 * dot(xi, xi), -0.5 * lap))
    }

    /// Tabulates the one-dimensional phases for `r0/2 <= |x| <= x_max`
    /// and `d/2 <= |xi| <= xi_max` on `nodes x nodes` Chebyshev points.
    pub fn tabulate(mut self, x_max: f64, xi_max: f64, nodes: usize) -> Result<Self> {
        if self.solver.dim() != 1 {
            return Err(domain("phase tables are one-dimensional"));
        }
        let (x_lo, xi_lo) = (0.5 * self.params.r0, 0.5 * self.params.d);
        if !(x_max > x_lo && xi_max > xi_lo && nodes >= 4) {
            return Err(domain("table range is empty"));
        }
        let log_x = chebyshev_lobatto(nodes, x_lo.ln(), x_max.ln());
        let inv_xi = chebyshev_lobatto(nodes, 1.0 / xi_max, 1.0 / xi_lo);
        let mut values = [vec![0.0; nodes * nodes], vec![0.0; nodes * nodes]];
        if !self.is_free() {
            for (s, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
                let t = sign.factor() * self.params.eikonal.horizon;
                for (j, u) in inv_xi.iter().enumerate() {
                    let xi = sign.factor() / u;
                    let origin = shoot(&self.solver, t, &[0.0], &[xi])?;
                    for (i, lx) in log_x.iter().enumerate() {
                        let x = lx.exp();
                        let v = eikonal_with_origin(&self.solver, &[x], &[xi], sign, &self.params.eikonal, &origin)?;
                        values[s][i * nodes + j] = v.value - x * xi;
                    }
                }
            }
        }
        self.table = Some(Table { log_x, inv_xi, values });
        Ok(self)
    }

    /// Same phase with a different inner radius; an existing table is kept
    /// when it still covers `|x| >= r0 / 2`.
    pub fn with_r0(mut self, r0: f64) -> Result<Self> {
        let params = PhaseParams { r0, ..self.params };
        params.validate()?;
        if let Some(t) = &self.table {
            if 0.5 * r0 < t.log_x[0].exp() * (1.0 - 1e-12) {
                self.table = None;
            }
        }
        self.params = params;
        Ok(self)
    }

    pub fn has_table(&self) -> bool {
        self.table.is_some()
    }

    /// `phi(x, xi) - x xi` in one dimension from the table at the `x`
    /// nodes, as `[x > 0, x < 0]` pairs; `None` where the phase is `x xi`.
    pub fn correction_row(&self, xi: f64) -> Result<Option<Vec<[f64; 2]>>> {
        let t = self.table.as_ref().ok_or_else(|| domain("phase function has no table"))?;
        if xi.abs() < 0.5 * self.params.d || self.is_free() {
            return Ok(None);
        }
        let n = t.log_x.len();
        let u = 1.0 / xi.abs();
        if u < t.inv_xi[0] - 1e-12 {
            return Err(domain(format!("|xi| = {} beyond the tabulated range", xi.abs())));
        }
        let column = |branch: usize| -> Vec<f64> {
            let src = &t.values[branch];
            (0..n).map(|i| barycentric_lobatto(&t.inv_xi, &src[i * n..i * n + n], u)).collect()
        };
        // x > 0 takes phi_+ for xi > 0; x < 0 mirrors onto x > 0 with -xi
        let (pos, neg) = if xi > 0.0 { (column(0), column(1)) } else { (column(1), column(0)) };
        Ok(Some(pos.into_iter().zip(neg).map(|(a, b)| [a, b]).collect()))
    }

    /// Glued one-dimensional phase from a row produced by [`correction_row`].
    pub fn glued_from_row(&self, row: Option<&[[f64; 2]]>, x: f64, xi: f64) -> Result<f64> {
        let free = x * xi;
        let Some(row) = row else { return Ok(free) };
        let w = self.params.radial(x.abs(), xi.abs());
        if w == 0.0 {
            return Ok(free);
        }
        let t = self.table.as_ref().ok_or_else(|| domain("phase function has no table"))?;
        let n = t.log_x.len();
        let lx = x.abs().ln();
        if lx > t.log_x[n - 1] + 1e-12 {
            return Err(domain(format!("|x| = {} beyond the tabulated range", x.abs())));
        }
        let side = if x > 0.0 { 0 } else { 1 };
        let vals: Vec<f64> = row.iter().map(|r| r[side]).collect();
        Ok(free + w * barycentric_lobatto(&t.log_x, &vals, lx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PairPotential;

    #[test]
    fn free_phase_is_linear() {
        let s = OrbitSolver::new(PairPotential::soft_coulomb(0.0, 1.0), 0.1, 2).unwrap();
        let v = eikonal_phase(&s, &[30.0, 4.0], &[0.7, -0.2], Sign::Plus, &EikonalOptions::default()).unwrap();
        assert!((v.value - (30.0 * 0.7 - 4.0 * 0.2)).abs() < 1e-12);
        let f = build_phase_function(s, PhaseParams::default()).unwrap();
        assert_eq!(f.value(&[50.0, 1.0], &[1.0, 2.0]).unwrap(), 52.0);
    }

    #[test]
    fn one_dimensional_eikonal_holds() {
        let s = OrbitSolver::new(PairPotential::soft_coulomb(0.5, 1.0), 0.1, 1).unwrap();
        let opts = EikonalOptions::default();
        for &(x, xi, sign) in &[(40.0, 1.0, Sign::Plus), (40.0, -1.2, Sign::Minus), (-60.0, -0.8, Sign::Plus)] {
            let r = eikonal_residual(&s, &[x], &[xi], sign, &opts, 1e-3).unwrap();
            assert!(r.abs() < 1e-4, "{x} {xi}: {r}");
        }
    }
}
