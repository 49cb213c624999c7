//! Radial pair potentials, their lifting to Jacobi coordinates, and the
//! cluster splitting `V = V_b + I_b`.
//!
//! Every built-in kind is a member of the family
//! `g e^{-kappa r} (r^2 + a^2)^{-p/2}` or a Gaussian, so values and the
//! first two radial derivatives are available in closed form.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::coords::{ClusterDecomposition, JacobiFrame};
use crate::error::{check_dim, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairKind {
    /// `strength * exp(-r^2 / width^2)`.
    Gaussian { strength: f64, width: f64 },
    /// `strength * exp(-kappa r) / sqrt(r^2 + a^2)`.
    Yukawa { strength: f64, kappa: f64 },
    /// `charge_product * exp(-kappa r) / sqrt(r^2 + a^2)`, Gaussian units.
    ScreenedCoulomb { charge_product: f64, kappa: f64 },
    /// `strength / sqrt(r^2 + a^2)`.
    SoftCoulomb { strength: f64 },
    /// `strength / (r^2 + a^2)^{power/2}`.
    InversePower { strength: f64, power: f64 },
}

/// Whether a potential enters as a short-range or a long-range part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPotential {
    pub kind: PairKind,
    /// Soft-core length `a`; ignored by the Gaussian kind.
    pub soft_core: f64,
    pub range: Range,
    /// Declared decay exponent: `delta` for short parts, `epsilon` for long ones.
    pub exponent: f64,
}

impl PairPotential {
    pub fn new(kind: PairKind, soft_core: f64, range: Range, exponent: f64) -> Result<Self> {
        let ok = match kind {
            PairKind::Gaussian { width, strength } => width > 0.0 && strength.is_finite(),
            PairKind::Yukawa { kappa, strength } => kappa >= 0.0 && strength.is_finite(),
            PairKind::ScreenedCoulomb { kappa, charge_product } => kappa >= 0.0 && charge_product.is_finite(),
            PairKind::SoftCoulomb { strength } => strength.is_finite(),
            PairKind::InversePower { power, strength } => power > 0.0 && strength.is_finite(),
        };
        if !ok {
            return Err(domain(format!("invalid parameters for {kind:?}")));
        }
        if !(soft_core >= 0.0) {
            return Err(domain("soft-core length must be nonnegative"));
        }
        let singular = !matches!(kind, PairKind::Gaussian { .. });
        if singular && soft_core == 0.0 {
            return Err(domain("soft-core length must be positive for singular kinds"));
        }
        if !(exponent > 0.0) {
            return Err(domain("declared decay exponent must be positive"));
        }
        Ok(Self { kind, soft_core, range, exponent })
    }

    pub fn gaussian(strength: f64, width: f64) -> Self {
        Self { kind: PairKind::Gaussian { strength, width }, soft_core: 0.0, range: Range::Short, exponent: 1.0 }
    }

    pub fn soft_coulomb(strength: f64, soft_core: f64) -> Self {
        Self { kind: PairKind::SoftCoulomb { strength }, soft_core, range: Range::Long, exponent: 1.0 }
    }

    pub fn zero() -> Self {
        Self::gaussian(0.0, 1.0)
    }

    /// `(value, dV/dr, d^2V/dr^2)` at radius `r >= 0`.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        let a2 = self.soft_core * self.soft_core;
        let family = |g: f64, kappa: f64, p: f64| {
            let rho2 = r * r + a2;
            let h = g * (-kappa * r).exp() * rho2.powf(-0.5 * p);
            let l1 = -kappa - p * r / rho2;
            let l2 = -p * (a2 - r * r) / (rho2 * rho2);
            (h, h * l1, h * (l1 * l1 + l2))
        };
        match self.kind {
            PairKind::Gaussian { strength, width } => {
                let w2 = width * width;
                let v = strength * (-r * r / w2).exp();
                (v, -2.0 * r / w2 * v, (-2.0 / w2 + 4.0 * r * r / (w2 * w2)) * v)
            }
            PairKind::Yukawa { strength, kappa } => family(strength, kappa, 1.0),
            PairKind::ScreenedCoulomb { charge_product, kappa } => family(charge_product, kappa, 1.0),
            PairKind::SoftCoulomb { strength } => family(strength, 0.0, 1.0),
            PairKind::InversePower { strength, power } => family(strength, 0.0, power),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.radial(r).0
    }

    /// Value at a displacement vector.
    pub fn at(&self, v: &[f64]) -> f64 {
        self.value(v.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    pub fn short_value(&self, r: f64) -> f64 {
        if self.range == Range::Short {
            self.value(r)
        } else {
            0.0
        }
    }

    pub fn long_value(&self, r: f64) -> f64 {
        if self.range == Range::Long {
            self.value(r)
        } else {
            0.0
        }
    }

    /// Gradient of the long part at a displacement vector, written into `out`.
    pub fn long_gradient(&self, v: &[f64], out: &mut [f64]) {
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let d = if self.range == Range::Long && r > 0.0 { self.radial(r).1 / r } else { 0.0 };
        for (o, c) in out.iter_mut().zip(v) {
            *o = d * c;
        }
    }
}

/// Result of [`decay_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// Fitted power of `r` (negative infinity when the samples underflow).
    pub fitted_exponent: f64,
    pub constant: f64,
    /// Exponent the declared range requires, `-(1 + delta)` or `-(1 + epsilon)`.
    pub required: f64,
    pub pass: bool,
}

/// Log-log fit of `|V_S|` (short kinds) or `|dV_L/dr|` (long kinds).
pub fn decay_check(p: &PairPotential, radii: &[f64]) -> Result<DecayReport> {
    const SLACK: f64 = 0.15;
    if radii.len() < 8 {
        return Err(domain("need at least 8 radii"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(domain("radii must be positive and increasing"));
    }
    let required = -(1.0 + p.exponent);
    let sample = |r: f64| match p.range {
        Range::Short => p.value(r).abs(),
        Range::Long => p.radial(r).1.abs(),
    };
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, sample(r)))
        .filter(|(_, v)| *v > 1e-300)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < radii.len() {
        // tail underflows: faster than any power
        let all_zero = pts.is_empty();
        return Ok(DecayReport {
            fitted_exponent: f64::NEG_INFINITY,
            constant: if all_zero { 0.0 } else { pts[0].1.exp() },
            required,
            pass: true,
        });
    }
    let (slope, icept) = linear_fit(&pts);
    Ok(DecayReport { fitted_exponent: slope, constant: icept.exp(), required, pass: slope <= required + SLACK })
}

/// Least-squares line through `(x, y)` pairs: `(slope, intercept)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Pair potentials attached to the particles of a Jacobi frame.
#[derive(Debug, Clone)]
pub struct PotentialAssembly {
    frame: JacobiFrame,
    pairs: Vec<((usize, usize), PairPotential)>,
}

impl PotentialAssembly {
    pub fn new(frame: &JacobiFrame, pairs: Vec<((usize, usize), PairPotential)>) -> Result<Self> {
        let n = frame.particles();
        let mut seen = Vec::new();
        let mut out = Vec::with_capacity(pairs.len());
        for ((i, j), p) in pairs {
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            if i == j || j >= n {
                return Err(domain(format!("invalid pair ({}, {}) for N={n}", i + 1, j + 1)));
            }
            if seen.contains(&(i, j)) {
                return Err(domain(format!("pair ({}, {}) listed twice", i + 1, j + 1)));
            }
            seen.push((i, j));
            out.push(((i, j), p));
        }
        Ok(Self { frame: frame.clone(), pairs: out })
    }

    pub fn frame(&self) -> &JacobiFrame {
        &self.frame
    }

    pub fn pairs(&self) -> &[((usize, usize), PairPotential)] {
        &self.pairs
    }

    fn sum_over(&self, x: &[f64], keep: impl Fn(usize, usize) -> bool) -> Result<f64> {
        check_dim(self.frame.config_len(), x.len())?;
        let mut s = 0.0;
        for &((i, j), p) in &self.pairs {
            if keep(i, j) {
                s += p.at(&self.frame.pair_vector(x, i, j)?);
            }
        }
        Ok(s)
    }

    /// `sum_{i<j} V_ij(x_ij)` at a Jacobi configuration.
    pub fn evaluate_total(&self, x: &[f64]) -> Result<f64> {
        self.sum_over(x, |_, _| true)
    }

    pub fn cluster_split(&self, b: &ClusterDecomposition) -> Result<ClusterSplit<'_>> {
        if b.particles() != self.frame.particles() {
            return Err(domain("decomposition and assembly disagree on N"));
        }
        Ok(ClusterSplit { assembly: self, b: b.clone() })
    }
}

/// `V_b` (pairs inside clusters) and `I_b` (pairs across clusters).
#[derive(Debug, Clone)]
pub struct ClusterSplit<'a> {
    assembly: &'a PotentialAssembly,
    b: ClusterDecomposition,
}

impl ClusterSplit<'_> {
    pub fn internal(&self, x: &[f64]) -> Result<f64> {
        self.assembly.sum_over(x, |i, j| self.b.contains_pair(i, j))
    }

    pub fn intercluster(&self, x: &[f64]) -> Result<f64> {
        self.assembly.sum_over(x, |i, j| !self.b.contains_pair(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn derivatives_match_finite_differences() {
        let kinds = [
            PairPotential::gaussian(-2.0, 1.3),
            PairPotential::soft_coulomb(1.5, 0.4),
            PairPotential::new(PairKind::Yukawa { strength: 0.7, kappa: 0.3 }, 0.2, Range::Short, 1.0).unwrap(),
            PairPotential::new(PairKind::InversePower { strength: 1.0, power: 2.5 }, 0.5, Range::Short, 1.5).unwrap(),
        ];
        let h = 1e-5;
        for p in kinds {
            for &r in &[0.3, 1.0, 2.7] {
                let (_, d1, d2) = p.radial(r);
                let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
                let fd2 = (p.value(r + h) - 2.0 * p.value(r) + p.value(r - h)) / (h * h);
                assert!((d1 - fd1).abs() < 1e-8, "{p:?} r={r}");
                assert!((d2 - fd2).abs() < 1e-4, "{p:?} r={r}");
            }
        }
    }

    #[test]
    fn gaussian_peak_value() {
        let f = JacobiFrame::new(&[1.0, 1.0], 3).unwrap();
        let a = PotentialAssembly::new(&f, vec![((0, 1), PairPotential::gaussian(-3.0, 1.0))]).unwrap();
        assert_eq!(a.evaluate_total(&[0.0; 3]).unwrap(), -3.0);
    }

    #[test]
    fn singular_kind_needs_soft_core() {
        assert!(PairPotential::new(PairKind::SoftCoulomb { strength: 1.0 }, 0.0, Range::Long, 1.0).is_err());
        assert!(PairPotential::soft_coulomb(1.0, 0.1).value(0.0).is_finite());
    }

    #[test]
    fn decay_examples() {
        let radii: Vec<f64> = (0..12).map(|k| 4.0 * 1.4f64.powi(k)).collect();
        assert!(decay_check(&PairPotential::gaussian(1.0, 1.0), &radii).unwrap().pass);
        let sc = PairPotential::new(PairKind::ScreenedCoulomb { charge_product: 1.0, kappa: 0.5 }, 0.1, Range::Short, 3.0)
            .unwrap();
        assert!(decay_check(&sc, &radii).unwrap().pass);
        let coulomb_short = PairPotential::new(PairKind::SoftCoulomb { strength: 1.0 }, 0.1, Range::Short, 0.5).unwrap();
        let r = decay_check(&coulomb_short, &radii).unwrap();
        assert!(!r.pass && (r.fitted_exponent + 1.0).abs() < 0.01);
        let coulomb_long = PairPotential::soft_coulomb(1.0, 0.1);
        assert!(decay_check(&coulomb_long, &radii).unwrap().pass);
        assert!(decay_check(&coulomb_long, &radii[..5]).is_err());
    }

    #[test]
    fn split_examples() {
        let f = JacobiFrame::new(&[1.0, 1.0, 1.0], 2).unwrap();
        let p = PairPotential::gaussian(1.0, 2.0);
        let a = PotentialAssembly::new(&f, vec![((0, 1), p), ((0, 2), p), ((1, 2), p)]).unwrap();
        let x = [0.3, 0.2, -0.5, 1.0];
        let b = ClusterDecomposition::parse(3, "{1,2}|{3}").unwrap();
        let s = a.cluster_split(&b).unwrap();
        let v13 = p.at(&f.pair_vector(&x, 0, 2).unwrap());
        let v23 = p.at(&f.pair_vector(&x, 1, 2).unwrap());
        assert!((s.intercluster(&x).unwrap() - v13 - v23).abs() < 1e-15);
        let one = ClusterDecomposition::single(3);
        assert_eq!(a.cluster_split(&one).unwrap().intercluster(&x).unwrap(), 0.0);
        let fine = ClusterDecomposition::singletons(3);
        assert_eq!(a.cluster_split(&fine).unwrap().internal(&x).unwrap(), 0.0);
        assert!(PotentialAssembly::new(&f, vec![((0, 1), p), ((1, 0), p)]).is_err());
    }
}
