//! Cluster decompositions and Jacobi coordinate frames.
//!
//! Configurations are stored flat: a Jacobi configuration of an `N`-body
//! system in `d` dimensions is a slice of `(N-1)*d` reals, vector `i`
//! occupying `[i*d, (i+1)*d)`. Particle positions are `N*d` reals laid out
//! the same way. Particle labels are 0-based in the API and 1-based in the
//! text form (`{1,2}|{3}`).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{check_dim, domain, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterDecomposition {
    n: usize,
    clusters: Vec<Vec<usize>>,
}

impl ClusterDecomposition {
    /// Builds a decomposition from 0-based clusters and canonicalizes it.
    pub fn new(n: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(domain("particle count must be positive"));
        }
        let mut seen = vec![false; n];
        let mut cs = Vec::with_capacity(clusters.len());
        for mut c in clusters {
            if c.is_empty() {
                return Err(domain("empty cluster"));
            }
            c.sort_unstable();
            for &i in &c {
                if i >= n {
                    return Err(domain(format!("particle {} out of range for N={n}", i + 1)));
                }
                if seen[i] {
                    return Err(domain(format!("particle {} appears twice", i + 1)));
                }
                seen[i] = true;
            }
            cs.push(c);
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(domain(format!("particle {} not covered", i + 1)));
        }
        cs.sort_by_key(|c| c[0]);
        Ok(Self { n, clusters: cs })
    }

    pub fn singletons(n: usize) -> Self {
        Self { n, clusters: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn single(n: usize) -> Self {
        Self { n, clusters: vec![(0..n).collect()] }
    }

    /// Parses the text form, e.g. `{1,2}|{3}`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut clusters = Vec::new();
        for part in text.split('|') {
            let p = part.trim();
            let inner = p
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| domain(format!("malformed cluster `{p}`")))?;
            let mut c = Vec::new();
            for tok in inner.split(',') {
                let k: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| domain(format!("bad particle label `{}`", tok.trim())))?;
                if k == 0 {
                    return Err(domain("particle labels start at 1"));
                }
                c.push(k - 1);
            }
            clusters.push(c);
        }
        Self::new(n, clusters)
    }

    /// Every decomposition of `{0..n}`, in a deterministic order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut assign = vec![0usize; n];
        fn rec(i: usize, k: usize, assign: &mut Vec<usize>, out: &mut Vec<ClusterDecomposition>) {
            let n = assign.len();
            if i == n {
                let mut cs = vec![Vec::new(); k];
                for (p, &c) in assign.iter().enumerate() {
                    cs[c].push(p);
                }
                out.push(ClusterDecomposition { n, clusters: cs });
                return;
            }
            for c in 0..=k {
                assign[i] = c;
                rec(i + 1, if c == k { k + 1 } else { k }, assign, out);
            }
        }
        if n > 0 {
            rec(0, 0, &mut assign, &mut out);
        }
        out
    }

    /// All decompositions with exactly `k` clusters.
    pub fn with_count(n: usize, k: usize) -> Vec<Self> {
        Self::all(n).into_iter().filter(|b| b.len() == k).collect()
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    /// Number of clusters `|b|`.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters.iter().position(|c| c.contains(&i)).expect("covered")
    }

    /// True if the pair `{i, j}` sits inside one cluster.
    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        self.cluster_of(i) == self.cluster_of(j)
    }

    /// Pairs `{i, j}` (i < j) whose members lie in different clusters.
    pub fn intercluster_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.contains_pair(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn intracluster_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.contains_pair(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of intercluster centre-of-mass vectors, `C(|b|, 2)`.
    pub fn z_count(&self) -> usize {
        let k = self.len();
        k * (k.saturating_sub(1)) / 2
    }
}

/// True iff every cluster of `b` is contained in some cluster of `a`.
pub fn refines(b: &ClusterDecomposition, a: &ClusterDecomposition) -> Result<bool> {
    if b.n != a.n {
        return Err(domain(format!("particle counts differ: {} vs {}", b.n, a.n)));
    }
    Ok(b.clusters.iter().all(|cb| {
        let host = a.cluster_of(cb[0]);
        cb.iter().all(|&i| a.cluster_of(i) == host)
    }))
}

impl fmt::Display for ClusterDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .clusters
            .iter()
            .map(|c| {
                let labels: Vec<String> = c.iter().map(|i| format!("{}", i + 1)).collect();
                format!("{{{}}}", labels.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("|"))
    }
}

/// Jacobi coordinates for `N` particles in `d` dimensions.
///
/// `x_i = X_{i+1} - (m_1 X_1 + ... + m_i X_i)/(m_1 + ... + m_i)` for the
/// particle order given by `order` (identity unless built with
/// [`JacobiFrame::with_order`]).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiFrame {
    masses: Vec<f64>,
    dim: usize,
    order: Vec<usize>,
    reduced: Vec<f64>,
    // (N-1) x N: x_i = sum_j to[i][j] X_j
    to: DMatrix<f64>,
    // N x (N-1): X_j - X_C = sum_i from[j][i] x_i
    from: DMatrix<f64>,
}

pub fn jacobi_frame(masses: &[f64], dim: usize) -> Result<JacobiFrame> {
    JacobiFrame::new(masses, dim)
}

impl JacobiFrame {
    pub fn new(masses: &[f64], dim: usize) -> Result<Self> {
        let order: Vec<usize> = (0..masses.len()).collect();
        Self::with_order(masses, dim, &order)
    }

    /// Jacobi frame that adds particles in the sequence `order`.
    pub fn with_order(masses: &[f64], dim: usize, order: &[usize]) -> Result<Self> {
        let n = masses.len();
        if n < 2 {
            return Err(domain("need at least two particles"));
        }
        if !(1..=3).contains(&dim) {
            return Err(domain(format!("space dimension {dim} not in 1..=3")));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !(**m > 0.0) || !m.is_finite()) {
            return Err(domain(format!("mass {} = {m} must be positive", i + 1)));
        }
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(domain("order must be a permutation of the particles"));
        }
        let mut to = DMatrix::zeros(n - 1, n);
        let mut reduced = Vec::with_capacity(n - 1);
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += masses[order[i]];
            for k in 0..=i {
                to[(i, order[k])] = -masses[order[k]] / acc;
            }
            to[(i, order[i + 1])] = 1.0;
            reduced.push(1.0 / (1.0 / masses[order[i + 1]] + 1.0 / acc));
        }
        let total: f64 = masses.iter().sum();
        let mut full = DMatrix::zeros(n, n);
        full.rows_mut(0, n - 1).copy_from(&to);
        for j in 0..n {
            full[(n - 1, j)] = masses[j] / total;
        }
        let inv = full
            .try_inverse()
            .ok_or_else(|| domain("singular Jacobi map"))?;
        let from = inv.columns(0, n - 1).into_owned();
        Ok(Self { masses: masses.to_vec(), dim, order: order.to_vec(), reduced, to, from })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn particles(&self) -> usize {
        self.masses.len()
    }

    pub fn space_dim(&self) -> usize {
        self.dim
    }

    /// Length of a Jacobi configuration vector, `(N-1)*d`.
    pub fn config_len(&self) -> usize {
        (self.masses.len() - 1) * self.dim
    }

    pub fn reduced_masses(&self) -> &[f64] {
        &self.reduced
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Coefficient of `X_j` in `x_i`.
    pub fn to_coeff(&self, i: usize, j: usize) -> f64 {
        self.to[(i, j)]
    }

    /// Particle positions (any centre of mass) to Jacobi vectors.
    pub fn to_jacobi(&self, particles: &[f64]) -> Result<Vec<f64>> {
        let n = self.particles();
        let d = self.dim;
        check_dim(n * d, particles.len())?;
        let mut x = vec![0.0; (n - 1) * d];
        for i in 0..n - 1 {
            for j in 0..n {
                let c = self.to[(i, j)];
                if c != 0.0 {
                    for a in 0..d {
                        x[i * d + a] += c * particles[j * d + a];
                    }
                }
            }
        }
        Ok(x)
    }

    /// Jacobi vectors to particle positions with the centre of mass at 0.
    pub fn from_jacobi(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.particles();
        let d = self.dim;
        check_dim((n - 1) * d, x.len())?;
        let mut p = vec![0.0; n * d];
        for j in 0..n {
            for i in 0..n - 1 {
                let c = self.from[(j, i)];
                for a in 0..d {
                    p[j * d + a] += c * x[i * d + a];
                }
            }
        }
        Ok(p)
    }

    /// `sum_i mu_i x_i . y_i`.
    pub fn mass_inner_product(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.config_len(), x.len())?;
        check_dim(self.config_len(), y.len())?;
        let d = self.dim;
        Ok(self
            .reduced
            .iter()
            .enumerate()
            .map(|(i, mu)| mu * (0..d).map(|a| x[i * d + a] * y[i * d + a]).sum::<f64>())
            .sum())
    }

    pub fn mass_norm2(&self, x: &[f64]) -> Result<f64> {
        self.mass_inner_product(x, x)
    }

    /// `X_j - X_i` reconstructed from a Jacobi configuration.
    pub fn pair_vector(&self, x: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
        let n = self.particles();
        if i >= n || j >= n || i == j {
            return Err(domain(format!("invalid pair ({}, {})", i + 1, j + 1)));
        }
        check_dim(self.config_len(), x.len())?;
        let d = self.dim;
        let mut v = vec![0.0; d];
        for k in 0..n - 1 {
            let c = self.from[(j, k)] - self.from[(i, k)];
            for a in 0..d {
                v[a] += c * x[k * d + a];
            }
        }
        Ok(v)
    }

    /// Reduced mass of the pair `{i, j}`.
    pub fn pair_reduced_mass(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.masses[i], self.masses[j]);
        a * b / (a + b)
    }

    /// Matrix taking this frame's Jacobi vectors to `other`'s (same masses).
    /// Acts on each spatial component identically; returned as (N-1)x(N-1).
    pub fn change_to(&self, other: &JacobiFrame) -> Result<DMatrix<f64>> {
        if self.masses != other.masses {
            return Err(domain("frames describe different particles"));
        }
        Ok(&other.to * &self.from)
    }
}

/// A Jacobi frame split along a cluster decomposition `b` into the
/// intercluster part `x_b` and the internal part `x^b`.
#[derive(Debug, Clone)]
pub struct ClusteredFrame {
    base: JacobiFrame,
    decomposition: ClusterDecomposition,
    cluster_masses: Vec<f64>,
    internal: Vec<Option<JacobiFrame>>,
    inter: Option<JacobiFrame>,
    z_pairs: Vec<(usize, usize)>,
}

pub fn clustered_frame(frame: &JacobiFrame, b: &ClusterDecomposition) -> Result<ClusteredFrame> {
    ClusteredFrame::new(frame, b)
}

impl ClusteredFrame {
    pub fn new(frame: &JacobiFrame, b: &ClusterDecomposition) -> Result<Self> {
        if b.particles() != frame.particles() {
            return Err(domain("decomposition and frame disagree on N"));
        }
        let d = frame.space_dim();
        let cluster_masses: Vec<f64> = b
            .clusters()
            .iter()
            .map(|c| c.iter().map(|&i| frame.masses()[i]).sum())
            .collect();
        let mut internal = Vec::new();
        for c in b.clusters() {
            if c.len() >= 2 {
                let ms: Vec<f64> = c.iter().map(|&i| frame.masses()[i]).collect();
                internal.push(Some(JacobiFrame::new(&ms, d)?));
            } else {
                internal.push(None);
            }
        }
        let inter = if b.len() >= 2 { Some(JacobiFrame::new(&cluster_masses, d)?) } else { None };
        let mut z_pairs = Vec::new();
        for l in 0..b.len() {
            for m in l + 1..b.len() {
                z_pairs.push((l, m));
            }
        }
        Ok(Self { base: frame.clone(), decomposition: b.clone(), cluster_masses, internal, inter, z_pairs })
    }

    pub fn base(&self) -> &JacobiFrame {
        &self.base
    }

    pub fn decomposition(&self) -> &ClusterDecomposition {
        &self.decomposition
    }

    pub fn cluster_masses(&self) -> &[f64] {
        &self.cluster_masses
    }

    pub fn intercluster_frame(&self) -> Option<&JacobiFrame> {
        self.inter.as_ref()
    }

    pub fn internal_frame(&self, cluster: usize) -> Option<&JacobiFrame> {
        self.internal[cluster].as_ref()
    }

    /// Cluster index pairs `(l, m)` in the order of the z-vectors.
    pub fn z_pairs(&self) -> &[(usize, usize)] {
        &self.z_pairs
    }

    pub fn inter_dim(&self) -> usize {
        (self.decomposition.len() - 1) * self.base.space_dim()
    }

    pub fn internal_dim(&self) -> usize {
        (self.base.particles() - self.decomposition.len()) * self.base.space_dim()
    }

    fn centres(&self, particles: &[f64]) -> Vec<f64> {
        let d = self.base.space_dim();
        let mut r = vec![0.0; self.decomposition.len() * d];
        for (l, c) in self.decomposition.clusters().iter().enumerate() {
            for &i in c {
                let m = self.base.masses()[i];
                for a in 0..d {
                    r[l * d + a] += m * particles[i * d + a];
                }
            }
            for a in 0..d {
                r[l * d + a] /= self.cluster_masses[l];
            }
        }
        r
    }

    /// Intercluster Jacobi vector `x_b` (cluster order by least member).
    pub fn inter_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.base.from_jacobi(x)?;
        match &self.inter {
            Some(f) => f.to_jacobi(&self.centres(&p)),
            None => Ok(Vec::new()),
        }
    }

    /// Internal coordinates `x^b`: the concatenated Jacobi vectors of each cluster.
    pub fn internal_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.base.from_jacobi(x)?;
        let d = self.base.space_dim();
        let mut out = Vec::with_capacity(self.internal_dim());
        for (c, f) in self.decomposition.clusters().iter().zip(&self.internal) {
            if let Some(f) = f {
                let sub: Vec<f64> = c.iter().flat_map(|&i| p[i * d..(i + 1) * d].iter().copied()).collect();
                out.extend(f.to_jacobi(&sub)?);
            }
        }
        Ok(out)
    }

    pub fn split(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.inter_coords(x)?, self.internal_coords(x)?))
    }

    /// Inverse of [`split`](Self::split): rebuilds the base Jacobi configuration.
    pub fn join(&self, xb: &[f64], xint: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.inter_dim(), xb.len())?;
        check_dim(self.internal_dim(), xint.len())?;
        let d = self.base.space_dim();
        let n = self.base.particles();
        let centres = match &self.inter {
            Some(f) => f.from_jacobi(xb)?,
            None => vec![0.0; d],
        };
        let mut p = vec![0.0; n * d];
        let mut off = 0;
        for (l, (c, f)) in self.decomposition.clusters().iter().zip(&self.internal).enumerate() {
            match f {
                Some(f) => {
                    let len = f.config_len();
                    let rel = f.from_jacobi(&xint[off..off + len])?;
                    off += len;
                    for (k, &i) in c.iter().enumerate() {
                        for a in 0..d {
                            p[i * d + a] = centres[l * d + a] + rel[k * d + a];
                        }
                    }
                }
                None => {
                    for a in 0..d {
                        p[c[0] * d + a] = centres[l * d + a];
                    }
                }
            }
        }
        self.base.to_jacobi(&p)
    }

    /// `|x_b|^2` in the mass metric.
    pub fn inter_norm2(&self, x: &[f64]) -> Result<f64> {
        match &self.inter {
            Some(f) => f.mass_norm2(&self.inter_coords(x)?),
            None => {
                check_dim(self.base.config_len(), x.len())?;
                Ok(0.0)
            }
        }
    }

    /// `|x^b|^2` in the mass metric.
    pub fn internal_norm2(&self, x: &[f64]) -> Result<f64> {
        let xi = self.internal_coords(x)?;
        let mut s = 0.0;
        let mut off = 0;
        for f in self.internal.iter().flatten() {
            let len = f.config_len();
            s += f.mass_norm2(&xi[off..off + len])?;
            off += len;
        }
        Ok(s)
    }

    /// Squared mass-metric norms `|z_bk|^2` of every intercluster
    /// centre-of-mass difference, with reduced mass `M_l M_m / (M_l + M_m)`.
    pub fn z_norms2(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.base.from_jacobi(x)?;
        let r = self.centres(&p);
        let d = self.base.space_dim();
        Ok(self
            .z_pairs
            .iter()
            .map(|&(l, m)| {
                let (ml, mm) = (self.cluster_masses[l], self.cluster_masses[m]);
                let mu = ml * mm / (ml + mm);
                mu * (0..d).map(|a| (r[m * d + a] - r[l * d + a]).powi(2)).sum::<f64>()
            })
            .collect())
    }

    /// The z-vectors themselves, `R_m - R_l`.
    pub fn z_vectors(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let p = self.base.from_jacobi(x)?;
        let r = self.centres(&p);
        let d = self.base.space_dim();
        Ok(self
            .z_pairs
            .iter()
            .map(|&(l, m)| (0..d).map(|a| r[m * d + a] - r[l * d + a]).collect())
            .collect())
    }
}

/// `mu_ij |X_i - X_j|^2`: the mass-metric length of the pair coordinate.
pub fn pair_norm2(frame: &JacobiFrame, x: &[f64], i: usize, j: usize) -> Result<f64> {
    let v = frame.pair_vector(x, i, j)?;
    Ok(frame.pair_reduced_mass(i, j) * v.iter().map(|c| c * c).sum::<f64>())
}

/// `sum_{i in S} m_i |X_i - X_S|^2`, the mass-weighted size of the
/// subsystem `S` about its own centre of mass. For a pair this is
/// [`pair_norm2`].
pub fn subsystem_norm2(frame: &JacobiFrame, x: &[f64], members: &[usize]) -> Result<f64> {
    let n = frame.particles();
    if members.is_empty() || members.iter().any(|&i| i >= n) {
        return Err(domain("subsystem members must be nonempty particle indices"));
    }
    let d = frame.space_dim();
    let pos = frame.from_jacobi(x)?;
    let m = frame.masses();
    let total: f64 = members.iter().map(|&i| m[i]).sum();
    let mut cm = vec![0.0; d];
    for &i in members {
        for a in 0..d {
            cm[a] += m[i] * pos[i * d + a] / total;
        }
    }
    Ok(members.iter().map(|&i| m[i] * (0..d).map(|a| (pos[i * d + a] - cm[a]).powi(2)).sum::<f64>()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn two_equal_masses() {
        let f = JacobiFrame::new(&[1.0, 1.0], 1).unwrap();
        assert!(close(f.reduced_masses()[0], 0.5, 1e-15));
        let x = f.to_jacobi(&[0.3, 1.1]).unwrap();
        assert!(close(x[0], 0.8, 1e-15));
    }

    #[test]
    fn unequal_pair_reduced_mass() {
        let f = JacobiFrame::new(&[1.0, 2.0], 3).unwrap();
        assert!(close(f.reduced_masses()[0], 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn three_equal_masses() {
        let f = JacobiFrame::new(&[1.0, 1.0, 1.0], 1).unwrap();
        assert!(close(f.reduced_masses()[0], 0.5, 1e-15));
        assert!(close(f.reduced_masses()[1], 2.0 / 3.0, 1e-15));
        let x = f.to_jacobi(&[1.0, 2.0, 7.0]).unwrap();
        assert!(close(x[1], 7.0 - 1.5, 1e-15));
    }

    #[test]
    fn nonpositive_mass_rejected() {
        assert!(matches!(JacobiFrame::new(&[1.0, 0.0], 1), Err(crate::Error::Domain(_))));
        assert!(JacobiFrame::new(&[1.0, -2.0, 1.0], 1).is_err());
        assert!(JacobiFrame::new(&[1.0], 1).is_err());
    }

    #[test]
    fn round_trip_and_centre_of_mass() {
        let f = JacobiFrame::new(&[1.0, 3.0, 0.5, 2.0], 2).unwrap();
        let x: Vec<f64> = (0..6).map(|k| (k as f64 * 0.7).sin()).collect();
        let p = f.from_jacobi(&x).unwrap();
        let back = f.to_jacobi(&p).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        for a in 0..2 {
            let com: f64 = (0..4).map(|j| f.masses()[j] * p[j * 2 + a]).sum();
            assert!(com.abs() < 1e-12);
        }
    }

    #[test]
    fn inner_product_examples() {
        let f = JacobiFrame::new(&[1.0, 1.0], 3).unwrap();
        let x = [1.0, 0.0, 0.0];
        assert!(close(f.mass_inner_product(&x, &x).unwrap(), 0.5, 1e-15));
        assert_eq!(f.mass_inner_product(&x, &[0.0; 3]).unwrap(), 0.0);
        assert!(f.mass_inner_product(&x, &[0.0; 2]).is_err());
    }

    #[test]
    fn mass_norm_equals_particle_kinetic_metric() {
        let f = JacobiFrame::new(&[1.0, 2.0, 3.0], 3).unwrap();
        let x: Vec<f64> = (0..6).map(|k| (k as f64 + 0.3).cos()).collect();
        let p = f.from_jacobi(&x).unwrap();
        let direct: f64 = (0..3)
            .map(|j| f.masses()[j] * (0..3).map(|a| p[j * 3 + a].powi(2)).sum::<f64>())
            .sum();
        assert!(close(f.mass_norm2(&x).unwrap(), direct, 1e-12));
    }

    #[test]
    fn refinement_examples() {
        let fine = ClusterDecomposition::singletons(3);
        let a = ClusterDecomposition::parse(3, "{1,2}|{3}").unwrap();
        let b = ClusterDecomposition::parse(3, "{1}|{2,3}").unwrap();
        assert!(refines(&fine, &a).unwrap());
        assert!(refines(&a, &a).unwrap());
        assert!(!refines(&a, &b).unwrap());
        assert!(refines(&ClusterDecomposition::singletons(4), &a).is_err());
    }

    #[test]
    fn intercluster_pair_examples() {
        let a = ClusterDecomposition::parse(3, "{1,2}|{3}").unwrap();
        assert_eq!(a.intercluster_pairs(), vec![(0, 2), (1, 2)]);
        assert!(ClusterDecomposition::single(4).intercluster_pairs().is_empty());
        assert_eq!(ClusterDecomposition::singletons(5).intercluster_pairs().len(), 10);
    }

    #[test]
    fn text_form_is_canonical() {
        let a = ClusterDecomposition::parse(4, "{4,2}|{3}|{1}").unwrap();
        assert_eq!(format!("{a}"), "{1}|{2,4}|{3}");
        assert!(ClusterDecomposition::parse(3, "{1,2}").is_err());
        assert!(ClusterDecomposition::parse(3, "{1,2}|{2,3}").is_err());
        assert!(ClusterDecomposition::parse(3, "1,2|3").is_err());
    }

    #[test]
    fn partition_counts_are_bell_and_stirling_numbers() {
        assert_eq!(ClusterDecomposition::all(4).len(), 15);
        assert_eq!(ClusterDecomposition::all(5).len(), 52);
        assert_eq!(ClusterDecomposition::with_count(4, 2).len(), 7);
        assert_eq!(ClusterDecomposition::with_count(4, 3).len(), 6);
    }

    #[test]
    fn clustered_two_body_is_all_intercluster() {
        let f = JacobiFrame::new(&[1.0, 1.0], 3).unwrap();
        let cf = clustered_frame(&f, &ClusterDecomposition::singletons(2)).unwrap();
        let x = [0.2, -1.0, 0.5];
        let (xb, xi) = cf.split(&x).unwrap();
        assert!(xi.is_empty());
        for (a, b) in xb.iter().zip(&x) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn clustered_three_body_pieces() {
        let f = JacobiFrame::new(&[1.0, 1.0, 1.0], 1).unwrap();
        let b = ClusterDecomposition::parse(3, "{1,2}|{3}").unwrap();
        let cf = clustered_frame(&f, &b).unwrap();
        assert!(close(cf.internal_frame(0).unwrap().reduced_masses()[0], 0.5, 1e-15));
        assert!(close(cf.intercluster_frame().unwrap().reduced_masses()[0], 2.0 / 3.0, 1e-15));
        let p = [0.0, 1.0, 5.0];
        let x = f.to_jacobi(&p).unwrap();
        let (xb, xi) = cf.split(&x).unwrap();
        assert!(close(xi[0], 1.0, 1e-14));
        assert!(close(xb[0], 4.5, 1e-14));
    }

    #[test]
    fn norm_split_and_join() {
        let f = JacobiFrame::new(&[1.0, 2.0, 1.5, 0.7], 3).unwrap();
        let x: Vec<f64> = (0..9).map(|k| ((k * k) as f64 * 0.37).sin() * 2.0).collect();
        for b in ClusterDecomposition::all(4) {
            let cf = clustered_frame(&f, &b).unwrap();
            let total = f.mass_norm2(&x).unwrap();
            let parts = cf.inter_norm2(&x).unwrap() + cf.internal_norm2(&x).unwrap();
            assert!(close(total, parts, 1e-10), "{b}");
            let (xb, xi) = cf.split(&x).unwrap();
            assert_eq!(xb.len() + xi.len(), x.len());
            let back = cf.join(&xb, &xi).unwrap();
            for (a, c) in back.iter().zip(&x) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merged_pair_identity_for_two_clusters() {
        // |x_b|^2 = |z_b1|^2 when b has two clusters
        let f = JacobiFrame::new(&[1.0, 2.0, 3.0], 2).unwrap();
        let x = [0.3, -0.4, 1.2, 0.9];
        let b = ClusterDecomposition::parse(3, "{1,3}|{2}").unwrap();
        let cf = clustered_frame(&f, &b).unwrap();
        let z = cf.z_norms2(&x).unwrap();
        assert_eq!(z.len(), 1);
        assert!(close(z[0], cf.inter_norm2(&x).unwrap(), 1e-12));
    }

    #[test]
    fn pair_vector_matches_particles() {
        let f = JacobiFrame::new(&[1.0, 2.0, 3.0], 2).unwrap();
        let x = [0.3, -0.4, 1.2, 0.9];
        let p = f.from_jacobi(&x).unwrap();
        let v = f.pair_vector(&x, 0, 2).unwrap();
        assert!(close(v[0], p[4] - p[0], 1e-13));
        assert!(close(v[1], p[5] - p[1], 1e-13));
        assert!(f.pair_vector(&x, 1, 1).is_err());
    }
}
