//! Uniform periodic grids, the unitary discrete Fourier transform and the
//! spectral representation of the free Hamiltonian `H0 = |xi|^2 / 2`.
//!
//! Position samples sit at `x_j = -L + j dx` with `dx = 2L/n`; momentum
//! samples at `xi_k = k dxi` in FFT order with `dxi = 2 pi hbar / (n dx)`.
//! The transform approximates the continuous unitary Fourier transform
//! `(F f)(xi) = (2 pi hbar)^{-m/2} int e^{-i x.xi/hbar} f(x) dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{check_dim, domain, range, Error, Result};
use crate::quad::{gauss_legendre, gauss_legendre_on, lagrange_weights};
use crate::C64;

/// Which representation a [`GridState`] currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Position,
    Momentum,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_extent: f64,
    hbar: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("half_extent", &self.half_extent)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.points == o.points && self.half_extent == o.half_extent && self.hbar == o.hbar
    }
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_extent: f64, hbar: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(domain(format!("grid dimension {dim} not in 1..=3")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(domain(format!("points per axis {points} must be a power of two >= 8")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(domain("half extent must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(domain("hbar must be positive"));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans { forward: planner.plan_fft_forward(points), inverse: planner.plan_fft_inverse(points) };
        Ok(Self { dim, points, half_extent, hbar, plans: Arc::new(plans) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Total number of samples, `points^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI * self.hbar / (self.points as f64 * self.dx())
    }

    /// Largest resolvable momentum magnitude per axis, `pi hbar / dx`.
    pub fn momentum_cutoff(&self) -> f64 {
        PI * self.hbar / self.dx()
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.dx()
    }

    /// Momentum of lattice index `k` in FFT order.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.points as i64;
        let s = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        s as f64 * self.dxi()
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx[..self.dim].iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.coordinate(idx[a]);
        }
        p
    }

    pub fn momentum(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.wavenumber(idx[a]);
        }
        p
    }

    /// Quadrature weight of one sample in the given representation.
    pub fn cell(&self, domain: Domain) -> f64 {
        let h = match domain {
            Domain::Position => self.dx(),
            Domain::Momentum => self.dxi(),
        };
        h.powi(self.dim as i32)
    }

    fn parity(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        idx[..self.dim].iter().sum::<usize>() % 2 == 1
    }

    // In-place unnormalized FFT along every axis.
    pub(crate) fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.points;
        let fft = if inverse { &self.plans.inverse } else { &self.plans.forward };
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let total = data.len();
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            let batch = stride.min(64);
            let mut buf = vec![C64::new(0.0, 0.0); batch * n];
            for base in (0..total).step_by(block) {
                for i0 in (0..stride).step_by(batch) {
                    let b = batch.min(stride - i0);
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for i in 0..b {
                            buf[i * n + j] = data[row + i];
                        }
                    }
                    fft.process_with_scratch(&mut buf[..b * n], &mut scratch);
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for i in 0..b {
                            data[row + i] = buf[i * n + j];
                        }
                    }
                }
            }
        }
    }
}

/// Applies the momentum multiplier `mult` (FFT order) to position samples
/// in place. `mult` must already carry the `1 / points^dim` normalization.
pub(crate) fn apply_multiplier(grid: &Grid, data: &mut [C64], mult: &[C64]) {
    grid.transform(data, false);
    for (v, m) in data.iter_mut().zip(mult) {
        *v *= m;
    }
    grid.transform(data, true);
}

/// Sampled wavefunction on a [`Grid`], in position or momentum form.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    grid: Grid,
    domain: Domain,
    values: Vec<C64>,
}

impl GridState {
    pub fn new(grid: &Grid, domain: Domain, values: Vec<C64>) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(domain_err("non-finite sample"));
        }
        Ok(Self { grid: grid.clone(), domain, values })
    }

    pub fn zeros(grid: &Grid, domain: Domain) -> Self {
        Self { grid: grid.clone(), domain, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every position node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|k| f(&grid.position(k)[..d])).collect();
        Self { grid: grid.clone(), domain: Domain::Position, values }
    }

    /// Samples `f` at every momentum node.
    pub fn from_momentum_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|k| f(&grid.momentum(k)[..d])).collect();
        Self { grid: grid.clone(), domain: Domain::Momentum, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell(self.domain)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// `(self, other)`, antilinear in `self`. Both must share grid and domain.
    pub fn inner(&self, other: &GridState) -> Result<C64> {
        self.compatible(other)?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell(self.domain))
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &GridState) -> Result<f64> {
        self.compatible(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell(self.domain)).sqrt())
    }

    fn compatible(&self, other: &GridState) -> Result<()> {
        if self.grid != other.grid {
            return Err(domain_err("states live on different grids"));
        }
        if self.domain != other.domain {
            return Err(domain_err("states are in different representations"));
        }
        Ok(())
    }

    pub fn scale(&mut self, c: C64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: C64, other: &GridState) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(domain_err("cannot normalize the zero state"));
        }
        self.scale(C64::new(1.0 / n, 0.0));
        Ok(self)
    }

    /// Multiplies every sample by `f(node)`, where the node is a position or
    /// momentum vector according to the current representation.
    pub fn apply(&mut self, f: impl Fn(&[f64]) -> C64) {
        let d = self.grid.dim();
        for k in 0..self.values.len() {
            let node = match self.domain {
                Domain::Position => self.grid.position(k),
                Domain::Momentum => self.grid.momentum(k),
            };
            self.values[k] *= f(&node[..d]);
        }
    }

    pub fn to_momentum(&self) -> GridState {
        match self.domain {
            Domain::Momentum => self.clone(),
            Domain::Position => dft(self),
        }
    }

    pub fn to_position(&self) -> GridState {
        match self.domain {
            Domain::Position => self.clone(),
            Domain::Momentum => idft(self),
        }
    }

    /// Fraction of the squared norm within `width` of the box faces.
    pub fn boundary_mass(&self, width: f64) -> f64 {
        let p = self.to_position();
        let d = self.grid.dim();
        let l = self.grid.half_extent();
        let total = p.norm2();
        if total == 0.0 {
            return 0.0;
        }
        let near: f64 = (0..p.values.len())
            .filter(|&k| self.grid.position(k)[..d].iter().any(|x| x.abs() >= l - width))
            .map(|k| p.values[k].norm_sqr())
            .sum::<f64>()
            * self.grid.cell(Domain::Position);
        near / total
    }
}

fn domain_err(msg: &str) -> Error {
    domain(msg)
}

/// Unitary forward transform; the input is taken as position samples.
pub fn dft(state: &GridState) -> GridState {
    let g = &state.grid;
    let mut data = match state.domain {
        Domain::Position => state.values.clone(),
        Domain::Momentum => idft(state).values,
    };
    g.transform(&mut data, false);
    let scale = (g.dx() / (2.0 * PI * g.hbar()).sqrt()).powi(g.dim() as i32);
    for (k, v) in data.iter_mut().enumerate() {
        *v *= if g.parity(k) { -scale } else { scale };
    }
    GridState { grid: g.clone(), domain: Domain::Momentum, values: data }
}

/// Unitary inverse transform; the input is taken as momentum samples.
pub fn idft(state: &GridState) -> GridState {
    let g = &state.grid;
    let mut data = match state.domain {
        Domain::Momentum => state.values.clone(),
        Domain::Position => dft(state).values,
    };
    let scale = (g.dxi() / (2.0 * PI * g.hbar()).sqrt()).powi(g.dim() as i32);
    for (k, v) in data.iter_mut().enumerate() {
        *v *= if g.parity(k) { -scale } else { scale };
    }
    g.transform(&mut data, true);
    GridState { grid: g.clone(), domain: Domain::Position, values: data }
}

/// `F^-1 exp(-i t |xi|^2 / (2 m hbar)) F psi`, returned in position form.
pub fn free_propagate(state: &GridState, t: f64, mass: f64) -> Result<GridState> {
    if !(mass > 0.0) {
        return Err(domain("mass must be positive"));
    }
    let hbar = state.grid.hbar();
    let mut m = state.to_momentum();
    m.apply(|xi| {
        let e = xi.iter().map(|p| p * p).sum::<f64>() / (2.0 * mass);
        C64::from_polar(1.0, -t * e / hbar)
    });
    Ok(idft(&m))
}

/// Quadrature rule on the unit sphere `S^{m-1}`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Default rule: `{+1, -1}` for m = 1, `nodes` uniform angles for m = 2,
    /// and a Gauss-Legendre(cos) x uniform-azimuth product with `nodes`
    /// polar nodes and `2 nodes` azimuths about the last axis for m = 3.
    pub fn new(dim: usize, nodes: usize) -> Result<Self> {
        match dim {
            1 => Ok(Self { dim, directions: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], weights: vec![1.0, 1.0] }),
            2 => {
                if nodes < 4 {
                    return Err(domain("need at least 4 circle nodes"));
                }
                Ok(Self::circle(nodes, [1.0, 0.0]))
            }
            3 => {
                if nodes < 2 {
                    return Err(domain("need at least 2 polar nodes"));
                }
                Ok(Self::about_axis(nodes, 2 * nodes, [0.0, 0.0, 1.0]))
            }
            _ => Err(domain(format!("sphere dimension {dim} not in 1..=3"))),
        }
    }

    fn circle(nodes: usize, start: [f64; 2]) -> Self {
        let base = start[1].atan2(start[0]);
        let directions = (0..nodes)
            .map(|k| {
                let a = base + 2.0 * PI * k as f64 / nodes as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        Self { dim: 2, directions, weights: vec![2.0 * PI / nodes as f64; nodes] }
    }

    /// Product rule on `S^2` with its pole along `axis` (normalized here).
    pub fn about_axis(polar: usize, azimuth: usize, axis: [f64; 3]) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let e3 = if n > 0.0 { [axis[0] / n, axis[1] / n, axis[2] / n] } else { [0.0, 0.0, 1.0] };
        // any unit vector orthogonal to e3
        let t = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = t[0] * e3[0] + t[1] * e3[1] + t[2] * e3[2];
        let mut e1 = [t[0] - d * e3[0], t[1] - d * e3[1], t[2] - d * e3[2]];
        let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        for c in &mut e1 {
            *c /= n1;
        }
        let e2 = [
            e3[1] * e1[2] - e3[2] * e1[1],
            e3[2] * e1[0] - e3[0] * e1[2],
            e3[0] * e1[1] - e3[1] * e1[0],
        ];
        let (ct, wt) = gauss_legendre(polar);
        let mut directions = Vec::with_capacity(polar * azimuth);
        let mut weights = Vec::with_capacity(polar * azimuth);
        let wa = 2.0 * PI / azimuth as f64;
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for k in 0..azimuth {
                let a = 2.0 * PI * (k as f64 + 0.5) / azimuth as f64;
                let (sa, ca) = a.sin_cos();
                let mut v = [0.0; 3];
                for i in 0..3 {
                    v[i] = s * ca * e1[i] + s * sa * e2[i] + c * e3[i];
                }
                directions.push(v);
                weights.push(w * wa);
            }
        }
        Self { dim: 3, directions, weights }
    }

    /// Rule adapted to integrating `e^{i kappa omega.axis}` against smooth data.
    pub fn oscillatory(dim: usize, kappa: f64, axis: &[f64]) -> Self {
        match dim {
            1 => Self::new(1, 2).expect("valid"),
            2 => Self::circle((kappa.abs().ceil() as usize + 40).max(16), [axis[0], axis[1]]),
            _ => {
                let polar = (0.5 * kappa.abs()).ceil() as usize + 24;
                let ax = [axis[0], axis[1], axis[2]];
                Self::about_axis(polar, 32, ax)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Values of `F(lambda) psi` on a set of unit directions.
#[derive(Debug, Clone)]
pub struct SphereTrace {
    pub energy: f64,
    pub directions: Vec<[f64; 3]>,
    pub values: Vec<C64>,
}

/// Evaluates `F psi` at arbitrary momenta.
///
/// The position samples are zero-padded by `oversample` per axis, which
/// refines the momentum lattice without changing the band, and the refined
/// lattice is interpolated with 8-point Lagrange stencils per axis.
#[derive(Debug, Clone)]
pub struct MomentumSampler {
    dim: usize,
    points: usize,
    step: f64,
    cutoff: f64,
    hbar: f64,
    base_dxi: f64,
    data: Vec<C64>,
}

const STENCIL: usize = 8;

impl MomentumSampler {
    pub fn new(state: &GridState, oversample: usize) -> Result<Self> {
        if oversample == 0 || !oversample.is_power_of_two() {
            return Err(domain("oversample must be a power of two"));
        }
        let g = &state.grid;
        let n = g.points();
        let big = Grid::new(g.dim(), n * oversample, g.half_extent() * oversample as f64, g.hbar())?;
        let pos = state.to_position();
        let off = (oversample - 1) * n / 2;
        let mut padded = GridState::zeros(&big, Domain::Position);
        for k in 0..pos.values.len() {
            let idx = g.unflatten(k);
            let mut j = [0usize; 3];
            for a in 0..g.dim() {
                j[a] = idx[a] + off;
            }
            padded.values[big.flatten(&j)] = pos.values[k];
        }
        let f = dft(&padded);
        Ok(Self {
            dim: g.dim(),
            points: big.points(),
            step: big.dxi(),
            cutoff: g.momentum_cutoff(),
            hbar: g.hbar(),
            base_dxi: g.dxi(),
            data: f.values,
        })
    }

    /// Default zero-padding factor: 4 in one and two dimensions, 2 in three.
    pub fn default_oversample(dim: usize) -> usize {
        if dim >= 3 {
            2
        } else {
            4
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Momentum lattice spacing of the unpadded grid.
    pub fn lattice_step(&self) -> f64 {
        self.base_dxi
    }

    /// Largest momentum magnitude per axis that can be interpolated.
    pub fn band(&self) -> f64 {
        self.cutoff - (STENCIL as f64 / 2.0 + 1.0) * self.step
    }

    pub fn eval(&self, xi: &[f64]) -> Result<C64> {
        check_dim(self.dim, xi.len())?;
        let band = self.band();
        if xi.iter().any(|p| p.abs() > band) {
            return Err(range(format!("momentum {xi:?} outside the resolvable band {band}")));
        }
        Ok(self.eval_unchecked(xi))
    }

    fn eval_unchecked(&self, xi: &[f64]) -> C64 {
        let n = self.points as i64;
        let mut w = [[0.0; STENCIL]; 3];
        let mut start = [0i64; 3];
        for a in 0..self.dim {
            let u = xi[a] / self.step;
            start[a] = u.floor() as i64 - (STENCIL as i64 / 2 - 1);
            lagrange_weights(start[a], STENCIL, u, &mut w[a]);
        }
        let wrap = |s: i64| -> usize { s.rem_euclid(n) as usize };
        let np = self.points;
        match self.dim {
            1 => (0..STENCIL).map(|i| self.data[wrap(start[0] + i as i64)] * w[0][i]).sum(),
            2 => {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..STENCIL {
                    let row = wrap(start[0] + i as i64) * np;
                    let mut inner = C64::new(0.0, 0.0);
                    for j in 0..STENCIL {
                        inner += self.data[row + wrap(start[1] + j as i64)] * w[1][j];
                    }
                    acc += inner * w[0][i];
                }
                acc
            }
            _ => {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..STENCIL {
                    let pi = wrap(start[0] + i as i64) * np * np;
                    let mut mid = C64::new(0.0, 0.0);
                    for j in 0..STENCIL {
                        let row = pi + wrap(start[1] + j as i64) * np;
                        let mut inner = C64::new(0.0, 0.0);
                        for k in 0..STENCIL {
                            inner += self.data[row + wrap(start[2] + k as i64)] * w[2][k];
                        }
                        mid += inner * w[1][j];
                    }
                    acc += mid * w[0][i];
                }
                acc
            }
        }
    }

    fn check_radius(&self, k: f64) -> Result<()> {
        if k > self.band() {
            Err(range(format!("momentum shell {k} outside the resolvable band {}", self.band())))
        } else {
            Ok(())
        }
    }

    /// `F(lambda) psi (omega) = (2 lambda)^{(m-2)/4} (F psi)(sqrt(2 lambda) omega)`.
    pub fn trace(&self, lambda: f64, directions: &[[f64; 3]]) -> Result<SphereTrace> {
        if !(lambda > 0.0) {
            return Err(domain("energy must be positive"));
        }
        let k = (2.0 * lambda).sqrt();
        self.check_radius(k)?;
        let pref = (2.0 * lambda).powf((self.dim as f64 - 2.0) / 4.0);
        let mut values = Vec::with_capacity(directions.len());
        for d in directions {
            let n: f64 = d[..self.dim].iter().map(|c| c * c).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(domain("direction is not a unit vector"));
            }
            let xi: Vec<f64> = d[..self.dim].iter().map(|c| k * c).collect();
            values.push(pref * self.eval_unchecked(&xi));
        }
        Ok(SphereTrace { energy: lambda, directions: directions.to_vec(), values })
    }
}

pub fn spectral_trace(state: &GridState, lambda: f64, directions: &[[f64; 3]]) -> Result<SphereTrace> {
    let s = MomentumSampler::new(state, MomentumSampler::default_oversample(state.grid.dim()))?;
    s.trace(lambda, directions)
}

/// `d/dlambda (E0(lambda) f, g)`, integrated over the sphere with `rule`.
pub fn spectral_density(f: &MomentumSampler, g: &MomentumSampler, lambda: f64, rule: &SphereRule) -> Result<C64> {
    if f.dim != g.dim || rule.dim != f.dim {
        return Err(domain("dimension mismatch between samplers and sphere rule"));
    }
    let tf = f.trace(lambda, &rule.directions)?;
    let tg = g.trace(lambda, &rule.directions)?;
    Ok(tf
        .values
        .iter()
        .zip(&tg.values)
        .zip(&rule.weights)
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum())
}

/// `int_0^inf ||F(lambda) psi||^2 dlambda` by composite Gauss-Legendre in
/// `k = sqrt(2 lambda)` over `[0, kmax]`.
pub fn spectral_mass(s: &MomentumSampler, kmax: f64, panels: usize, rule: &SphereRule) -> Result<f64> {
    s.check_radius(kmax)?;
    let (ks, ws) = crate::quad::composite_gauss(16, panels, 0.0, kmax);
    let mut total = 0.0;
    for (k, w) in ks.iter().zip(&ws) {
        let lambda = 0.5 * k * k;
        let d = spectral_density(s, s, lambda, rule)?;
        // dlambda = k dk
        total += w * k * d.re;
    }
    Ok(total)
}

/// Quadrature controls for [`resolvent_at`].
#[derive(Debug, Clone, Copy)]
pub struct ResolventOptions {
    /// Upper limit of the radial momentum integral.
    pub kmax: f64,
    /// Gauss-Legendre points per radial panel.
    pub order: usize,
    /// Maximum radial panel width (also capped by `pi / |x|`).
    pub panel: f64,
    /// Half-width of the principal-value exclusion window in lattice cells.
    pub window_cells: f64,
}

impl ResolventOptions {
    pub fn for_sampler(s: &MomentumSampler) -> Self {
        Self { kmax: s.band(), order: 16, panel: 0.25, window_cells: 4.0 }
    }
}

/// Boundary value `R0(mu +- i0) psi` at the given points.
///
/// Uses polar coordinates in momentum space: the radial integral splits
/// into a principal value, evaluated with a symmetric exclusion window of
/// `window_cells` lattice cells around `k0 = sqrt(2 mu)`, and the
/// `+- i pi` delta contribution on the energy shell. Returns the values
/// and a residual estimate from comparing two window rules.
pub fn resolvent_at(
    s: &MomentumSampler,
    mu: f64,
    outgoing: bool,
    points: &[[f64; 3]],
    opts: &ResolventOptions,
) -> Result<(Vec<C64>, f64)> {
    if !(mu > 0.0) {
        return Err(domain("spectral parameter must be positive"));
    }
    let m = s.dim;
    let hbar = s.hbar;
    let k0 = (2.0 * mu).sqrt();
    s.check_radius(opts.kmax)?;
    let w = opts.window_cells * s.base_dxi;
    if k0 - w <= 0.0 || k0 + w >= opts.kmax {
        return Err(range(format!("energy shell k0 = {k0} too close to 0 or the band edge")));
    }
    let sign = if outgoing { 1.0 } else { -1.0 };
    let norm = (2.0 * PI * hbar).powf(-(m as f64) / 2.0);
    let mut out = Vec::with_capacity(points.len());
    let mut residual: f64 = 0.0;
    for x in points {
        let r = x[..m].iter().map(|c| c * c).sum::<f64>().sqrt();
        let axis: Vec<f64> = if r > 0.0 { x[..m].iter().map(|c| c / r).collect() } else { unit(m) };
        let rule = SphereRule::oscillatory(m, opts.kmax * r / hbar, &axis);
        let amp = |k: f64| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            let mut xi = [0.0; 3];
            for (d, wt) in rule.directions.iter().zip(&rule.weights) {
                let mut dot = 0.0;
                for a in 0..m {
                    xi[a] = k * d[a];
                    dot += d[a] * x[a];
                }
                acc += C64::from_polar(*wt, k * dot / hbar) * s.eval_unchecked(&xi[..m]);
            }
            acc
        };
        let g = |k: f64| amp(k) * (2.0 * k.powi(m as i32 - 1) / (k + k0));
        let width = if r > 0.0 { opts.panel.min(PI * hbar / r) } else { opts.panel };
        let mut pv = integrate(&g, 0.0, k0 - w, width, opts.order, |k| 1.0 / (k - k0));
        pv += integrate(&g, k0 + w, opts.kmax, width, opts.order, |k| 1.0 / (k - k0));
        let g0 = g(k0);
        let window = |order: usize| -> C64 {
            let (ks, ws) = gauss_legendre_on(order, k0 - w, k0 + w);
            ks.iter().zip(&ws).map(|(k, wt)| (g(*k) - g0) * (*wt / (k - k0))).sum()
        };
        let fine = window(2 * opts.order);
        residual = residual.max((fine - window(opts.order)).norm());
        pv += fine;
        let delta = C64::new(0.0, sign * PI) * k0.powi(m as i32 - 2) * amp(k0);
        out.push((pv + delta) * norm);
    }
    Ok((out, residual * norm))
}

fn unit(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[m - 1] = 1.0;
    v
}

fn integrate(f: &impl Fn(f64) -> C64, a: f64, b: f64, width: f64, order: usize, weight: impl Fn(f64) -> f64) -> C64 {
    if b <= a {
        return C64::new(0.0, 0.0);
    }
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let (ks, ws) = crate::quad::composite_gauss(order, panels, a, b);
    ks.iter().zip(&ws).map(|(k, w)| f(*k) * (w * weight(*k))).sum()
}

/// `R0(mu +- i0) psi` on every node of the state's grid.
pub fn free_resolvent_boundary(state: &GridState, mu: f64, outgoing: bool) -> Result<(GridState, f64)> {
    let s = MomentumSampler::new(state, MomentumSampler::default_oversample(state.grid.dim()))?;
    let g = &state.grid;
    let pts: Vec<[f64; 3]> = (0..g.len()).map(|k| g.position(k)).collect();
    let (vals, res) = resolvent_at(&s, mu, outgoing, &pts, &ResolventOptions::for_sampler(&s))?;
    Ok((GridState { grid: g.clone(), domain: Domain::Position, values: vals }, res))
}

/// One row of a far-field extraction table.
#[derive(Debug, Clone, Copy)]
pub struct FarFieldRow {
    pub radius: f64,
    pub value: C64,
}

/// Rescales `R0(mu +- i0) psi (r omega)` so that it tends to
/// `F(mu) psi (+- omega)` as `r` grows. Requires `hbar = 1`, `m >= 2` and
/// radii no larger than `oversample * L` (the zero-padded period).
pub fn far_field_extract(
    s: &MomentumSampler,
    trusted_radius: f64,
    mu: f64,
    omega: &[f64],
    radii: &[f64],
    outgoing: bool,
    opts: &ResolventOptions,
) -> Result<(C64, Vec<FarFieldRow>)> {
    let m = s.dim;
    if m < 2 {
        return Err(domain("far-field extraction needs m >= 2"));
    }
    if (s.hbar - 1.0).abs() > 0.0 {
        return Err(domain("far-field extraction assumes hbar = 1"));
    }
    check_dim(m, omega.len())?;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("radii must be a nonempty increasing list"));
    }
    if let Some(r) = radii.iter().find(|r| **r > trusted_radius || **r <= 0.0) {
        return Err(range(format!("radius {r} outside the trusted region (0, {trusted_radius}]")));
    }
    let k0 = (2.0 * mu).sqrt();
    let sign = if outgoing { 1.0 } else { -1.0 };
    let pts: Vec<[f64; 3]> = radii
        .iter()
        .map(|r| {
            let mut p = [0.0; 3];
            for a in 0..m {
                p[a] = r * omega[a];
            }
            p
        })
        .collect();
    let (vals, _) = resolvent_at(s, mu, outgoing, &pts, opts)?;
    let phase0 = C64::from_polar(1.0, sign * (m as f64 - 3.0) * PI / 4.0);
    let rows: Vec<FarFieldRow> = radii
        .iter()
        .zip(&vals)
        .map(|(r, v)| {
            let f = (2.0 * PI).powf(-0.5)
                * (2.0 * mu).powf(0.25)
                * r.powf((m as f64 - 1.0) / 2.0);
            FarFieldRow { radius: *r, value: phase0 * C64::from_polar(f, -sign * k0 * r) * v }
        })
        .collect();
    Ok((rows.last().expect("nonempty").value, rows))
}

/// Trusted radius for far-field work: the zero-padded half period.
pub fn trusted_radius(grid: &Grid, oversample: usize) -> f64 {
    grid.half_extent() * oversample as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid) -> GridState {
        let d = grid.dim() as i32;
        GridState::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            C64::new(PI.powf(-0.25 * d as f64) * (-0.5 * r2).exp(), 0.0)
        })
    }

    #[test]
    fn lattice_duality() {
        let g = Grid::new(1, 64, 10.0, 1.0).unwrap();
        assert!((g.dx() * g.dxi() * 64.0 - 2.0 * PI).abs() < 1e-12);
        assert!((g.wavenumber(63) + g.dxi()).abs() < 1e-12);
        assert!(Grid::new(1, 100, 1.0, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_is_self_dual() {
        for dim in 1..=2 {
            let g = Grid::new(dim, 64, 10.0, 1.0).unwrap();
            let f = dft(&gaussian(&g));
            for k in 0..g.len() {
                let xi = g.momentum(k);
                let r2: f64 = xi[..dim].iter().map(|c| c * c).sum();
                let want = PI.powf(-0.25 * dim as f64) * (-0.5 * r2).exp();
                assert!((f.values()[k] - want).norm() < 1e-12, "dim {dim} k {k}");
            }
        }
    }

    #[test]
    fn round_trip_3d() {
        let g = Grid::new(3, 16, 4.0, 0.7).unwrap();
        let s = GridState::from_fn(&g, |x| C64::new((x[0] * 1.3).sin() + x[1], (x[2] - 0.2).cos()));
        let back = idft(&dft(&s));
        assert!(back.distance(&s).unwrap() < 1e-12 * s.norm());
        assert!((dft(&s).norm() - s.norm()).abs() < 1e-12 * s.norm());
    }

    #[test]
    fn free_propagation_at_zero_time_is_identity() {
        let g = Grid::new(1, 128, 10.0, 1.0).unwrap();
        let s = gaussian(&g);
        assert!(free_propagate(&s, 0.0, 1.0).unwrap().distance(&s).unwrap() < 1e-14);
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        assert!((SphereRule::new(1, 0).unwrap().weights().iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!((SphereRule::new(2, 12).unwrap().weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-13);
        let r = SphereRule::about_axis(8, 16, [1.0, 1.0, 0.0]);
        assert!((r.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        // second moment of any coordinate is 4 pi / 3
        let m: f64 = r.directions().iter().zip(r.weights()).map(|(d, w)| w * d[0] * d[0]).sum();
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_matches_closed_form() {
        let g = Grid::new(2, 64, 10.0, 1.0).unwrap();
        let s = MomentumSampler::new(&gaussian(&g), 4).unwrap();
        let v = s.eval(&[0.731, -1.17]).unwrap();
        let want = PI.powf(-0.5) * (-0.5 * (0.731f64.powi(2) + 1.17f64.powi(2))).exp();
        assert!((v - want).norm() < 1e-9, "{}", (v - want).norm());
        assert!(matches!(s.eval(&[100.0, 0.0]), Err(Error::Range(_))));
    }

    #[test]
    fn trace_in_one_dimension() {
        let g = Grid::new(1, 128, 12.0, 1.0).unwrap();
        let t = spectral_trace(&gaussian(&g), 0.5, &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        let want = PI.powf(-0.25) * (-0.5f64).exp();
        assert!((t.values[0] - want).norm() < 1e-10);
        assert!((t.values[1] - want).norm() < 1e-10);
        assert!(spectral_trace(&gaussian(&g), 1e4, &[[1.0, 0.0, 0.0]]).is_err());
    }
}
