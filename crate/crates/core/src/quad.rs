//! Gauss-Legendre rules and small interpolation helpers.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|v| v * h).collect(),
    )
}

/// Composite rule: `panels` equal panels of `order` points each on [a, b].
pub fn composite_gauss(order: usize, panels: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(order * panels);
    let mut ws = Vec::with_capacity(order * panels);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let (x, w) = gauss_legendre_on(order, lo, lo + h);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Chebyshev points of the second kind mapped to [a, b], in increasing order.
pub fn chebyshev_lobatto(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = -(PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Barycentric interpolation through Chebyshev-Lobatto nodes.
pub fn barycentric_lobatto(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let d = x - nodes[k];
        if d == 0.0 {
            return values[k];
        }
        let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
        if k == 0 || k == n - 1 {
            w *= 0.5;
        }
        let t = w / d;
        num += t * values[k];
        den += t;
    }
    num / den
}

/// Lagrange interpolation weights for `x` on the integer stencil
/// `start, start+1, ..., start+len-1` (coordinates in lattice units).
pub fn lagrange_weights(start: i64, len: usize, x: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate().take(len) {
        let xj = (start + j as i64) as f64;
        let mut w = 1.0;
        for k in 0..len {
            if k != j {
                let xk = (start + k as i64) as f64;
                w *= (x - xk) / (xj - xk);
            }
        }
        *o = w;
    }
}
