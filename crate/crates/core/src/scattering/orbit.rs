//! Classical orbits of the cut-off Hamiltonian `|p|^2/2 + V_rho(t, q)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::potentials::PairPotential;
use crate::quad::{chebyshev_lobatto, gauss_legendre_on};
use crate::smooth::{rising, smooth_step_deriv};

const NODES: usize = 17;

/// Phase point at the end of an orbit, plus the accumulated action
/// `int (|p|^2/2 - shift + V_rho - q . grad V_rho) dtau`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitEnd {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub action: f64,
}

/// Integrates Hamilton's equations for the long-range part of a pair
/// potential with the spatial cutoff `phi(rho x)` and the time-dependent
/// cutoff `phi(<log<t>> x / <t>)`, by Picard iteration on Chebyshev panels.
#[derive(Debug, Clone)]
pub struct OrbitSolver {
    potential: PairPotential,
    rho: f64,
    dim: usize,
    tol: f64,
    max_iter: usize,
    nodes: Vec<f64>,
    /// `integ[k * NODES + j] = int_{-1}^{z_k} l_j(z) dz`.
    integ: Vec<f64>,
    /// Rows of the last two Chebyshev coefficients of an interpolant.
    tail_rows: Vec<f64>,
}

fn japanese(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

fn lagrange_basis(nodes: &[f64], j: usize, z: f64) -> f64 {
    let mut v = 1.0;
    for (k, zk) in nodes.iter().enumerate() {
        if k != j {
            v *= (z - zk) / (nodes[j] - zk);
        }
    }
    v
}

impl OrbitSolver {
    /// `rho` in `(0, 1)`; the long-range part of `potential` drives the orbits.
    pub fn new(potential: PairPotential, rho: f64, dim: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(domain(format!("cutoff parameter rho = {rho} must lie in (0, 1)")));
        }
        if !(1..=3).contains(&dim) {
            return Err(domain("orbits live in 1 to 3 dimensions"));
        }
        let nodes = chebyshev_lobatto(NODES, -1.0, 1.0);
        let mut integ = vec![0.0; NODES * NODES];
        for k in 1..NODES {
            let (zs, ws) = gauss_legendre_on(NODES, -1.0, nodes[k]);
            for j in 0..NODES {
                integ[k * NODES + j] = zs.iter().zip(&ws).map(|(z, w)| w * lagrange_basis(&nodes, j, *z)).sum();
            }
        }
        // Chebyshev coefficients from Lobatto samples (type-I DCT).
        let n1 = (NODES - 1) as f64;
        let mut tail_rows = vec![0.0; 2 * NODES];
        for (row, deg) in [NODES - 2, NODES - 1].into_iter().enumerate() {
            for j in 0..NODES {
                // nodes are increasing, i.e. z_j = -cos(pi j / n1) = cos(pi (n1 - j) / n1)
                let theta = core::f64::consts::PI * (n1 - j as f64) / n1;
                let mut w = 2.0 / n1 * (deg as f64 * theta).cos();
                if j == 0 || j == NODES - 1 {
                    w *= 0.5;
                }
                if deg == NODES - 1 {
                    w *= 0.5;
                }
                tail_rows[row * NODES + j] = w;
            }
        }
        Ok(Self { potential, rho, dim, tol: 1e-12, max_iter: 200, nodes, integ, tail_rows })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn potential(&self) -> &PairPotential {
        &self.potential
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn time_scale(t: f64) -> f64 {
        japanese(japanese(t).ln()) / japanese(t)
    }

    /// Long-range potential with both cutoffs applied.
    pub fn cutoff_potential(&self, t: f64, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let k = Self::time_scale(t);
        self.potential.long_value(r) * rising(self.rho * r, 1.0, 2.0) * rising(k * r, 1.0, 2.0)
    }

    /// `grad_x V_rho(t, x)` into `out`.
    pub fn cutoff_gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let k = Self::time_scale(t);
        let (c1, c2) = (rising(self.rho * r, 1.0, 2.0), rising(k * r, 1.0, 2.0));
        if c1 == 0.0 || c2 == 0.0 || r == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let v = self.potential.long_value(r);
        let dv = if v == 0.0 { 0.0 } else { self.potential.radial(r).1 };
        let d1 = self.rho * smooth_step_deriv(self.rho * r - 1.0);
        let d2 = k * smooth_step_deriv(k * r - 1.0);
        let radial = dv * c1 * c2 + v * d1 * c2 + v * c1 * d2;
        for (o, c) in out.iter_mut().zip(x) {
            *o = radial * c / r;
        }
    }

    fn check_point(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// `(q, p)(t, s, y, xi)`: the orbit through `(y, xi)` at time `s`.
    pub fn orbit(&self, t: f64, s: f64, y: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let e = self.orbit_with_action(t, s, y, xi, 0.0)?;
        Ok((e.q, e.p))
    }

    /// Orbit plus the action integral with the kinetic term offset by `shift`.
    pub fn orbit_with_action(&self, t: f64, s: f64, y: &[f64], xi: &[f64], shift: f64) -> Result<OrbitEnd> {
        self.check_point(y)?;
        self.check_point(xi)?;
        let d = self.dim;
        let mut q = y.to_vec();
        let mut p = xi.to_vec();
        let mut action = 0.0;
        let mut now = s;
        let dir = if t >= s { 1.0 } else { -1.0 };
        let mut h = 1.0f64;
        let mut qs = vec![0.0; NODES * d];
        let mut ps = vec![0.0; NODES * d];
        let mut fs = vec![0.0; NODES * d];
        let mut lag = vec![0.0; NODES];
        let mut grad = vec![0.0; d];
        while (t - now) * dir > 0.0 {
            let step = h.min((t - now).abs());
            let half = 0.5 * step * dir;
            let times: Vec<f64> = self.nodes.iter().map(|z| now + (1.0 + z) * half).collect();
            for k in 0..NODES {
                for a in 0..d {
                    qs[k * d + a] = q[a] + (times[k] - now) * p[a];
                    ps[k * d + a] = p[a];
                }
            }
            let mut converged = false;
            for _ in 0..self.max_iter {
                for k in 0..NODES {
                    self.cutoff_gradient(times[k], &qs[k * d..k * d + d], &mut fs[k * d..k * d + d]);
                }
                let mut change: f64 = 0.0;
                let mut scale: f64 = 1.0;
                for k in 1..NODES {
                    let row = &self.integ[k * NODES..k * NODES + NODES];
                    for a in 0..d {
                        let (mut ip, mut iff) = (0.0, 0.0);
                        for j in 0..NODES {
                            ip += row[j] * ps[j * d + a];
                            iff += row[j] * fs[j * d + a];
                        }
                        let nq = q[a] + half * ip;
                        let np = p[a] - half * iff;
                        change = change.max((nq - qs[k * d + a]).abs()).max((np - ps[k * d + a]).abs());
                        scale = scale.max(nq.abs()).max(np.abs());
                        qs[k * d + a] = nq;
                        ps[k * d + a] = np;
                    }
                }
                if change <= self.tol * scale {
                    converged = true;
                    break;
                }
            }
            // resolution: trailing Chebyshev coefficients of the force
            let mut tail: f64 = 0.0;
            if converged {
                for a in 0..d {
                    for row in 0..2 {
                        let c: f64 = (0..NODES).map(|j| self.tail_rows[row * NODES + j] * fs[j * d + a]).sum();
                        tail = tail.max(c.abs());
                    }
                }
            }
            let err = tail * step;
            if !converged || err > 1e-14 {
                h = 0.5 * step;
                if h < 1e-7 {
                    return Err(Error::Convergence {
                        what: format!("orbit panel at t = {now}; reduce the cutoff parameter rho"),
                        residual: err,
                    });
                }
                continue;
            }
            for k in 0..NODES {
                let (qk, pk) = (&qs[k * d..k * d + d], &ps[k * d..k * d + d]);
                let v = self.cutoff_potential(times[k], qk);
                self.cutoff_gradient(times[k], qk, &mut grad);
                let kin = 0.5 * pk.iter().map(|c| c * c).sum::<f64>() - shift;
                lag[k] = kin + v - qk.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();
            }
            let row = &self.integ[(NODES - 1) * NODES..];
            action += half * row.iter().zip(&lag).map(|(w, l)| w * l).sum::<f64>();
            q.copy_from_slice(&qs[(NODES - 1) * d..]);
            p.copy_from_slice(&ps[(NODES - 1) * d..]);
            now = times[NODES - 1];
            if (t - now).abs() < 1e-14 * (1.0 + t.abs()) {
                now = t;
            }
            if err < 1e-17 {
                h = step * 2.0;
            }
        }
        Ok(OrbitEnd { q, p, action })
    }

    /// `eta(t, s, x, xi)`: the momentum at time `s` through `x` whose orbit
    /// reaches momentum `xi` at time `t`. Newton iteration with a
    /// difference Jacobian.
    pub fn orbit_inverse(&self, t: f64, s: f64, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_point(xi)?;
        let d = self.dim;
        let scale = 1.0 + xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut eta = xi.to_vec();
        let mut resid = f64::INFINITY;
        for _ in 0..60 {
            let (_, p) = self.orbit(t, s, x, &eta)?;
            let r: Vec<f64> = p.iter().zip(xi).map(|(a, b)| a - b).collect();
            resid = r.iter().map(|c| c * c).sum::<f64>().sqrt();
            if resid <= 1e-13 * scale {
                return Ok(eta);
            }
            let h = 1e-6 * scale;
            let mut jac = nalgebra::DMatrix::<f64>::zeros(d, d);
            for b in 0..d {
                let mut e = eta.clone();
                e[b] += h;
                let (_, pp) = self.orbit(t, s, x, &e)?;
                e[b] -= 2.0 * h;
                let (_, pm) = self.orbit(t, s, x, &e)?;
                for a in 0..d {
                    jac[(a, b)] = (pp[a] - pm[a]) / (2.0 * h);
                }
            }
            let rhs = nalgebra::DVector::from_vec(r);
            let step = jac.lu().solve(&rhs).ok_or_else(|| Error::Convergence {
                what: "orbit inverse: singular momentum Jacobian".into(),
                residual: resid,
            })?;
            for a in 0..d {
                eta[a] -= step[a];
            }
        }
        Err(Error::Convergence { what: "orbit inverse; reduce rho or the horizon".into(), residual: resid })
    }

    /// `y(s, t, x, xi) = q(t, s, x, eta(t, s, x, xi))`.
    pub fn orbit_start(&self, s: f64, t: f64, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let eta = self.orbit_inverse(t, s, x, xi)?;
        Ok(self.orbit(t, s, x, &eta)?.0)
    }

    /// `|p(s, t, y, xi) - xi|`, the momentum deviation controlled by the
    /// contraction margin.
    pub fn momentum_deviation(&self, s: f64, t: f64, y: &[f64], xi: &[f64]) -> Result<f64> {
        let (_, p) = self.orbit(s, t, y, xi)?;
        Ok(p.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver(strength: f64) -> OrbitSolver {
        OrbitSolver::new(PairPotential::soft_coulomb(strength, 1.0), 0.1, 2).unwrap()
    }

    #[test]
    fn free_motion_is_exact() {
        let s = solver(0.0);
        let (q, p) = s.orbit(7.5, 1.0, &[1.0, -2.0], &[0.3, 0.4]).unwrap();
        assert!((q[0] - (1.0 + 6.5 * 0.3)).abs() < 1e-13 && (q[1] - (-2.0 + 6.5 * 0.4)).abs() < 1e-13);
        assert_eq!(p, vec![0.3, 0.4]);
        assert_eq!(s.orbit_inverse(9.0, 0.0, &[3.0, 1.0], &[0.5, 0.1]).unwrap(), vec![0.5, 0.1]);
    }

    #[test]
    fn flow_composes_and_inverts() {
        let s = solver(0.8);
        let (y, xi) = ([15.0, 4.0], [0.6, 0.2]);
        let (q1, p1) = s.orbit(10.0, 0.0, &y, &xi).unwrap();
        let (q2, p2) = s.orbit(30.0, 10.0, &q1, &p1).unwrap();
        let (q, p) = s.orbit(30.0, 0.0, &y, &xi).unwrap();
        for a in 0..2 {
            assert!((q2[a] - q[a]).abs() < 1e-8 && (p2[a] - p[a]).abs() < 1e-10);
        }
        let (qb, pb) = s.orbit(0.0, 30.0, &q, &p).unwrap();
        assert!((qb[0] - y[0]).abs() < 1e-8 && (pb[1] - xi[1]).abs() < 1e-10);
        let eta = s.orbit_inverse(40.0, 0.0, &y, &xi).unwrap();
        let (_, pe) = s.orbit(40.0, 0.0, &y, &eta).unwrap();
        assert!((pe[0] - xi[0]).abs() < 1e-12 && (pe[1] - xi[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_rho() {
        assert!(OrbitSolver::new(PairPotential::soft_coulomb(1.0, 1.0), 1.5, 1).is_err());
    }
}
