//! Smooth partition of unity `{J_b}` on the shell `1 <= |x|^2 <= 1 + theta_{N-1}`
//! and the sharp cluster indicator weights of propagated states.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "std")]
use crate::coords::pair_norm2;
use crate::coords::{subsystem_norm2, ClusterDecomposition, ClusteredFrame, JacobiFrame};
use crate::error::{domain, Error, Result};
use crate::smooth::smooth_step;

/// Region constants `theta_j`, `rho_j`, the enlargement `gamma` and the
/// cutoff width `sigma`, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConstants {
    n: usize,
    gamma: f64,
    /// `theta_1 ..= theta_{N-1}`.
    theta: Vec<f64>,
    /// `rho_2 ..= rho_N`.
    rho: Vec<f64>,
    sigma: f64,
}

fn infeasible(what: String) -> Error {
    Error::Config(format!("partition constants infeasible: {what}"))
}

impl PartitionConstants {
    /// `theta` lists `theta_1..theta_{N-1}`, `rho` lists `rho_2..rho_N`.
    pub fn new(n: usize, gamma: f64, theta: Vec<f64>, rho: Vec<f64>, sigma: f64) -> Result<Self> {
        if n < 3 {
            return Err(domain("partition needs N >= 3"));
        }
        if theta.len() != n - 1 || rho.len() != n - 1 {
            return Err(domain(format!("expected {} theta and {} rho values", n - 1, n - 1)));
        }
        if !(gamma > 1.0) {
            return Err(infeasible(format!("gamma = {gamma} must exceed 1")));
        }
        let c = Self { n, gamma, theta, rho, sigma };
        c.verify()?;
        Ok(c)
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `theta_j` for `1 <= j <= N`; `theta_N = 0` so that the finest
    /// region is cut only by its pair conditions.
    pub fn theta(&self, j: usize) -> f64 {
        if j == self.n {
            0.0
        } else {
            self.theta[j - 1]
        }
    }

    /// `rho_j` for `2 <= j <= N`.
    pub fn rho(&self, j: usize) -> f64 {
        self.rho[j - 2]
    }

    /// `(gamma (1 + theta_{N-1}), (1 + gamma) / (1 + theta_{N-1}))`.
    pub fn gamma_prime(&self) -> (f64, f64) {
        let t = self.theta(self.n - 1);
        (self.gamma * (1.0 + t), (1.0 + self.gamma) / (1.0 + t))
    }

    /// `min_j rho_j / theta_j` over `2 <= j <= N-1`.
    pub fn r0(&self) -> f64 {
        (2..self.n).map(|j| self.rho(j) / self.theta(j)).fold(f64::INFINITY, f64::min)
    }

    /// Strict upper bound on `sigma`.
    pub fn sigma_bound(&self) -> f64 {
        let g = 1.0 - 1.0 / self.gamma;
        (2..self.n)
            .map(|j| (g * self.rho(j)).min((self.gamma - 1.0) * self.theta(j)))
            .fold(g * self.rho(self.n), f64::min)
    }

    fn verify(&self) -> Result<()> {
        let n = self.n;
        let t1 = self.theta(1);
        let rn = self.rho(n);
        if !(t1 <= 1.0 && rn > 0.0 && t1 > rn) {
            return Err(infeasible(format!("need 1 >= theta_1 > rho_N > 0, got theta_1 = {t1}, rho_N = {rn}")));
        }
        for j in 2..n {
            let (r, t) = (self.rho(j), self.theta(j));
            if !(t1 > r && r > t && t > rn) {
                return Err(infeasible(format!(
                    "need theta_1 > rho_{j} > theta_{j} > rho_N, got {t1} > {r} > {t} > {rn}"
                )));
            }
            if !(self.theta(j - 1) >= t + r) {
                return Err(infeasible(format!(
                    "theta_{} = {} < theta_{j} + rho_{j} = {}",
                    j - 1,
                    self.theta(j - 1),
                    t + r
                )));
            }
        }
        let (g1, g2) = self.gamma_prime();
        if !(g1 < 2.0) {
            return Err(infeasible(format!("gamma'_1 = {g1} >= 2 leaves no admissible support ratio")));
        }
        let r0 = self.r0();
        let a = self.gamma * (1.0 + self.gamma);
        let b = 2.0 * g1 * g2 / (2.0 - g1);
        if !(a < r0) {
            return Err(infeasible(format!("gamma (1 + gamma) = {a} >= r0 = {r0}")));
        }
        if !(b < r0) {
            return Err(infeasible(format!("2 g1 g2 / (2 - g1) = {b} >= r0 = {r0}")));
        }
        let bound = self.sigma_bound();
        if !(self.sigma > 0.0 && self.sigma < bound) {
            return Err(infeasible(format!("sigma = {} not in (0, {bound})", self.sigma)));
        }
        Ok(())
    }
}

/// Deterministic constants: `theta_1 = 1`, `theta_j = theta_{j-1} / (1 + r)`,
/// `rho_j = r theta_j`, `rho_N = theta_{N-1} / 2`, with the ratio `r`
/// increased geometrically until every condition holds; `sigma` is 0.9 of
/// its bound.
pub fn select_constants(n: usize, gamma: f64) -> Result<PartitionConstants> {
    if n < 3 {
        return Err(domain("partition needs N >= 3"));
    }
    if !(gamma > 1.0) {
        return Err(infeasible(format!("gamma = {gamma} must exceed 1")));
    }
    if gamma >= 2.0 {
        return Err(infeasible(format!("gamma'_1 = gamma (1 + theta_{{N-1}}) > {gamma} >= 2")));
    }
    let mut last = None;
    let mut r = 1.5;
    for _ in 0..400 {
        let mut theta = vec![1.0];
        let mut rho = Vec::new();
        for _ in 2..n {
            let t = theta.last().unwrap() / (1.0 + r);
            theta.push(t);
            rho.push(r * t);
        }
        rho.push(0.5 * theta.last().unwrap());
        let trial = PartitionConstants { n, gamma, theta, rho, sigma: 0.0 };
        let sigma = 0.9 * trial.sigma_bound();
        let trial = PartitionConstants { sigma, ..trial };
        match trial.verify() {
            Ok(()) => return Ok(trial),
            Err(e) => last = Some(e),
        }
        r *= 1.05;
    }
    Err(last.unwrap_or_else(|| infeasible("search exhausted".into())))
}

/// `phi_sigma(lambda < tau)` (`below`) or `phi_sigma(lambda > tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    pub sigma: f64,
    pub tau: f64,
    pub below: bool,
}

/// 1 on `u <= -1`, 0 on `u >= 0`, nonincreasing.
fn mollifier(u: f64) -> f64 {
    1.0 - smooth_step(u + 1.0)
}

fn below(sigma: f64, tau: f64, lambda: f64) -> f64 {
    mollifier((lambda - (tau + sigma)) / sigma)
}

pub fn cutoff_eval(c: &SmoothCutoff, lambda: f64) -> f64 {
    if c.below {
        below(c.sigma, c.tau, lambda)
    } else {
        1.0 - below(c.sigma, c.tau - c.sigma, lambda)
    }
}

fn above(sigma: f64, tau: f64, lambda: f64) -> f64 {
    cutoff_eval(&SmoothCutoff { sigma, tau, below: false }, lambda)
}

/// Every decomposition with at least two clusters, grouped by cluster
/// count, with its clustered frame.
#[derive(Debug, Clone)]
pub struct Partition {
    constants: PartitionConstants,
    frame: JacobiFrame,
    /// `levels[k - 2]` holds the decompositions with `k` clusters.
    levels: Vec<Vec<(ClusterDecomposition, ClusteredFrame)>>,
}

impl Partition {
    pub fn new(constants: PartitionConstants, frame: JacobiFrame) -> Result<Self> {
        let n = constants.particles();
        if frame.particles() != n {
            return Err(domain("frame and constants disagree on N"));
        }
        let levels = (2..=n)
            .map(|k| {
                ClusterDecomposition::with_count(n, k)
                    .into_iter()
                    .map(|b| {
                        let f = ClusteredFrame::new(&frame, &b)?;
                        Ok((b, f))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { constants, frame, levels })
    }

    pub fn constants(&self) -> &PartitionConstants {
        &self.constants
    }

    pub fn frame(&self) -> &JacobiFrame {
        &self.frame
    }

    /// All decompositions in level order.
    pub fn decompositions(&self) -> impl Iterator<Item = &ClusterDecomposition> {
        self.levels.iter().flatten().map(|(b, _)| b)
    }

    /// Squared radius range of the shell.
    pub fn shell(&self) -> (f64, f64) {
        (1.0, 1.0 + self.constants.theta(self.constants.particles() - 1))
    }

    pub fn on_shell(&self, x: &[f64]) -> Result<bool> {
        let r2 = self.frame.mass_norm2(x)?;
        let (lo, hi) = self.shell();
        let slack = 1e-12;
        Ok(r2 >= lo - slack && r2 <= hi + slack)
    }

    fn require_shell(&self, x: &[f64]) -> Result<()> {
        if !self.on_shell(x)? {
            return Err(domain(format!("configuration has |x|^2 = {} off the shell", self.frame.mass_norm2(x)?)));
        }
        Ok(())
    }

    fn region(&self, f: &ClusteredFrame, k: usize, x: &[f64]) -> Result<f64> {
        let c = &self.constants;
        let s = c.sigma();
        let mut v = above(s, 1.0 - c.theta(k), f.inter_norm2(x)?);
        for z in f.z_norms2(x)? {
            if v == 0.0 {
                break;
            }
            v *= above(s, c.rho(k), z);
        }
        Ok(v)
    }

    /// Region function `phi_b(x_b)` for every decomposition, level by level.
    fn regions(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, lvl)| lvl.iter().map(|(_, f)| self.region(f, i + 2, x)).collect())
            .collect()
    }

    fn members_unchecked(&self, x: &[f64]) -> Result<Vec<(ClusterDecomposition, f64)>> {
        let phi = self.regions(x)?;
        let mut out = Vec::new();
        let mut remainder = 1.0;
        for (lvl, vals) in self.levels.iter().zip(&phi) {
            for ((b, _), v) in lvl.iter().zip(vals) {
                out.push((b.clone(), v * remainder));
            }
            remainder *= 1.0 - vals.iter().sum::<f64>();
        }
        Ok(out)
    }

    /// `J_b(x)` for every decomposition `b`, in level order.
    pub fn members(&self, x: &[f64]) -> Result<Vec<(ClusterDecomposition, f64)>> {
        self.require_shell(x)?;
        self.members_unchecked(x)
    }

    /// Region values `phi_b(x_b)` for every decomposition, in level order.
    pub fn region_values(&self, x: &[f64]) -> Result<Vec<(ClusterDecomposition, f64)>> {
        let phi = self.regions(x)?;
        Ok(self.levels.iter().flatten().map(|(b, _)| b.clone()).zip(phi.into_iter().flatten()).collect())
    }

    fn gradient_norm(&self, idx: usize, x: &[f64]) -> Result<f64> {
        let h = 1e-4 * self.constants.sigma();
        let mut y = x.to_vec();
        let mut s = 0.0;
        for a in 0..x.len() {
            y[a] = x[a] + h;
            let p = self.members_unchecked(&y)?[idx].1;
            y[a] = x[a] - h;
            let m = self.members_unchecked(&y)?[idx].1;
            y[a] = x[a];
            s += ((p - m) / (2.0 * h)).powi(2);
        }
        Ok(s.sqrt())
    }
}

pub fn partition_member(partition: &Partition, b: &ClusterDecomposition, x: &[f64]) -> Result<f64> {
    if b.len() < 2 {
        return Err(domain("J_b needs at least two clusters"));
    }
    partition
        .members(x)?
        .into_iter()
        .find(|(c, _)| c == b)
        .map(|(_, v)| v)
        .ok_or_else(|| domain(format!("decomposition {b} does not match the partition's N")))
}

/// A sampled point where `J_b > 0` but some pair outside `b` is too close.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportViolation {
    pub point: Vec<f64>,
    pub decomposition: ClusterDecomposition,
    pub pair: (usize, usize),
    /// Mass-weighted size of the two clusters of `decomposition` the pair joins.
    pub pair_norm2: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub samples: usize,
    pub violations: Vec<SupportViolation>,
    pub max_sum_error: f64,
    pub min_member: f64,
    pub max_member: f64,
    /// Largest sampled `|grad J_b|` (Euclidean, Jacobi coordinates).
    pub gradient_sup: f64,
}

impl SupportReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty() && self.max_sum_error <= 1e-10 && self.min_member >= 0.0 && self.max_member <= 1.0
    }
}

/// Checks the sum rule, range, pair separation on every support and
/// samples the gradient (on the first `gradient_samples` points).
pub fn support_check(partition: &Partition, samples: &[Vec<f64>], gradient_samples: usize) -> Result<SupportReport> {
    let mut report = SupportReport {
        samples: samples.len(),
        violations: Vec::new(),
        max_sum_error: 0.0,
        min_member: f64::INFINITY,
        max_member: f64::NEG_INFINITY,
        gradient_sup: 0.0,
    };
    for (s, x) in samples.iter().enumerate() {
        let members = partition.members(x)?;
        let total: f64 = members.iter().map(|(_, v)| v).sum();
        report.max_sum_error = report.max_sum_error.max((total - 1.0).abs());
        let r2 = partition.frame.mass_norm2(x)?;
        for (idx, (b, v)) in members.iter().enumerate() {
            report.min_member = report.min_member.min(*v);
            report.max_member = report.max_member.max(*v);
            if *v <= 0.0 {
                continue;
            }
            let required = partition.constants.rho(b.len()) * r2 / 2.0;
            for (i, j) in b.intercluster_pairs() {
                // |x_alpha|^2 for alpha not in b: size of the two clusters it joins
                let (ci, cj) = (b.cluster_of(i), b.cluster_of(j));
                let joined: Vec<usize> = b.clusters()[ci].iter().chain(&b.clusters()[cj]).copied().collect();
                let p = subsystem_norm2(&partition.frame, x, &joined)?;
                if !(p > required) {
                    report.violations.push(SupportViolation {
                        point: x.clone(),
                        decomposition: b.clone(),
                        pair: (i, j),
                        pair_norm2: p,
                        required,
                    });
                }
            }
            if s < gradient_samples {
                report.gradient_sup = report.gradient_sup.max(partition.gradient_norm(idx, x)?);
            }
        }
    }
    Ok(report)
}

/// Number of sampled points where two region functions that must have
/// disjoint supports are both positive, with the first offending pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointnessReport {
    pub samples: usize,
    pub overlaps: usize,
    pub first: Option<(ClusterDecomposition, ClusterDecomposition)>,
}

/// For `b` not finer than `c` with `|b| >= |c|`, `phi_b phi_c = 0`.
pub fn disjointness_check(partition: &Partition, samples: &[Vec<f64>]) -> Result<DisjointnessReport> {
    let mut rep = DisjointnessReport { samples: samples.len(), overlaps: 0, first: None };
    for x in samples {
        partition.require_shell(x)?;
        let phi = partition.region_values(x)?;
        for (b, vb) in &phi {
            for (c, vc) in &phi {
                if b == c || b.len() < c.len() || *vb <= 0.0 || *vc <= 0.0 {
                    continue;
                }
                if !crate::coords::refines(b, c)? {
                    rep.overlaps += 1;
                    if rep.first.is_none() {
                        rep.first = Some((b.clone(), c.clone()));
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Seeded points uniform in volume on the shell, in Jacobi coordinates.
pub fn sample_shell(partition: &Partition, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let frame = &partition.frame;
    let d = frame.space_dim();
    let len = frame.config_len();
    let (lo, hi) = partition.shell();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = len as f64;
    let (a, b) = (lo.powf(nd / 2.0), hi.powf(nd / 2.0));
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..len).map(|_| standard_normal(&mut rng)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = (a + rng.random::<f64>() * (b - a)).powf(1.0 / nd);
            u.iter()
                .enumerate()
                .map(|(k, v)| v / norm * radius / frame.reduced_masses()[k / d].sqrt())
                .collect()
        })
        .collect()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let v = rng.random::<f64>();
    (-2.0 * u.ln()).sqrt() * (core::f64::consts::TAU * v).cos()
}

#[cfg(feature = "std")]
pub use indicator::cluster_indicator_weight;

#[cfg(feature = "std")]
mod indicator {
    use super::*;
    use crate::spectral::{Domain, GridState};

    /// `||prod_{alpha not in b} 1(|x_alpha| >= sigma t) 1(|x^b| <= delta t^r) psi||^2 / ||psi||^2`
    /// with sharp indicators and mass-metric lengths; the grid axes are the
    /// Jacobi coordinates of `frame`.
    #[allow(clippy::too_many_arguments)]
    pub fn cluster_indicator_weight(
        psi: &GridState,
        frame: &JacobiFrame,
        b: &ClusterDecomposition,
        sigma: f64,
        delta: f64,
        r: f64,
        t: f64,
    ) -> Result<f64> {
        if !(t > 0.0) {
            return Err(domain("indicator weight needs t > 0"));
        }
        crate::error::check_dim(frame.config_len(), psi.grid().dim())?;
        let cf = ClusteredFrame::new(frame, b)?;
        let p = psi.to_position();
        let g = p.grid();
        let dim = g.dim();
        let pairs = b.intercluster_pairs();
        let (sep, spread) = ((sigma * t).powi(2), (delta * t.powf(r)).powi(2));
        let mut kept = 0.0;
        for (k, v) in p.values().iter().enumerate() {
            let x = &g.position(k)[..dim];
            let mut inside = cf.internal_norm2(x)? <= spread;
            for &(i, j) in &pairs {
                if !inside {
                    break;
                }
                inside = pair_norm2(frame, x, i, j)? >= sep;
            }
            if inside {
                kept += v.norm_sqr();
            }
        }
        let total = p.norm2();
        if total == 0.0 {
            return Err(domain("zero state"));
        }
        Ok(kept * g.cell(Domain::Position) / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PartitionConstants {
        PartitionConstants::new(3, 1.05, vec![1.0, 0.05], vec![0.4, 0.02], 9e-4).unwrap()
    }

    #[test]
    fn stated_example_is_feasible() {
        let c = example();
        assert_eq!(c.r0(), 8.0);
        let (g1, g2) = c.gamma_prime();
        let b = 2.0 * g1 * g2 / (2.0 - g1);
        assert!((b - 4.796).abs() < 1e-3, "{b}");
        assert!((1.05f64 * 2.05 - 2.1525).abs() < 1e-12);
    }

    #[test]
    fn gamma_two_is_rejected() {
        let e = PartitionConstants::new(3, 2.0, vec![1.0, 0.05], vec![0.4, 0.02], 9e-4).unwrap_err();
        assert!(format!("{e}").contains("gamma'_1"), "{e}");
        assert!(select_constants(3, 2.0).is_err());
    }

    #[test]
    fn selected_constants_are_monotone() {
        for n in 3..=5 {
            for &g in &[1.02, 1.05, 1.2] {
                let c = select_constants(n, g).unwrap();
                for j in 2..n {
                    assert!(c.theta(j) < c.theta(j - 1));
                }
                assert_eq!(c, select_constants(n, g).unwrap());
            }
        }
    }

    #[test]
    fn cutoff_shape() {
        let c = SmoothCutoff { sigma: 0.2, tau: 1.0, below: true };
        assert_eq!(cutoff_eval(&c, 1.0), 1.0);
        assert_eq!(cutoff_eval(&c, 1.2), 0.0);
        let mid = cutoff_eval(&c, 1.1);
        assert!(mid > 0.0 && mid < 1.0);
        let a = SmoothCutoff { below: false, ..c };
        for k in 0..100 {
            let l = 0.5 + k as f64 * 0.01;
            let sum = cutoff_eval(&a, l) + cutoff_eval(&SmoothCutoff { tau: 0.8, ..c }, l);
            assert!((sum - 1.0).abs() <= f64::EPSILON, "{l}");
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let frame = JacobiFrame::new(&[1.0, 2.0, 3.0], 1).unwrap();
        let p = Partition::new(example(), frame).unwrap();
        let pts = sample_shell(&p, 2000, 5);
        let rep = support_check(&p, &pts, 20).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.gradient_sup.is_finite());
        assert_eq!(disjointness_check(&p, &pts).unwrap().overlaps, 0);
        assert!(partition_member(&p, &ClusterDecomposition::singletons(3), &[0.1, 0.1]).is_err());
    }
}
