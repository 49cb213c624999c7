use proptest::prelude::*;
use scatterlab_core::dynamics::Propagator;
use scatterlab_core::potentials::{PairKind, PairPotential, Range};
use scatterlab_core::scattering::*;
use scatterlab_core::spectral::{Grid, GridState};
use scatterlab_core::C64;

fn solver(strength: f64, dim: usize) -> OrbitSolver {
    OrbitSolver::new(PairPotential::soft_coulomb(strength, 1.0), 0.1, dim).unwrap()
}

/// Classical RK4 with a fixed small step on `q' = p, p' = -grad V_rho(t, q)`.
fn rk4(s: &OrbitSolver, t: f64, t0: f64, y: &[f64], xi: &[f64], steps: usize) -> (Vec<f64>, Vec<f64>) {
    let d = y.len();
    let h = (t - t0) / steps as f64;
    let rhs = |tau: f64, z: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; d];
        s.cutoff_gradient(tau, &z[..d], &mut g);
        z[d..].iter().copied().chain(g.iter().map(|v| -v)).collect()
    };
    let mut z: Vec<f64> = y.iter().chain(xi).copied().collect();
    for k in 0..steps {
        let tau = t0 + k as f64 * h;
        let add = |a: &[f64], b: &[f64], c: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + c * y).collect() };
        let k1 = rhs(tau, &z);
        let k2 = rhs(tau + 0.5 * h, &add(&z, &k1, 0.5 * h));
        let k3 = rhs(tau + 0.5 * h, &add(&z, &k2, 0.5 * h));
        let k4 = rhs(tau + h, &add(&z, &k3, h));
        for i in 0..2 * d {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (z[..d].to_vec(), z[d..].to_vec())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn orbits_match_runge_kutta() {
    let s = solver(0.8, 2);
    for &(t, y, xi) in &[
        (40.0, [12.0, -3.0], [0.6, 0.4]),
        (25.0, [-15.0, 9.0], [-1.2, 0.1]),
        (60.0, [5.0, 11.0], [0.3, 0.9]),
    ] {
        let (q, p) = s.orbit(t, 0.0, &y, &xi).unwrap();
        let (qr, pr) = rk4(&s, t, 0.0, &y, &xi, 40_000);
        assert!(dist(&q, &qr) < 1e-8 && dist(&p, &pr) < 1e-8, "{:e} {:e}", dist(&q, &qr), dist(&p, &pr));
    }
}

#[test]
fn orbit_start_agrees_with_inverse() {
    let s = solver(0.8, 2);
    let (x, xi) = ([20.0, 5.0], [0.8, 0.3]);
    let (t, tau) = (80.0, 10.0);
    let eta = s.orbit_inverse(t, tau, &x, &xi).unwrap();
    let (_, p) = s.orbit(t, tau, &x, &eta).unwrap();
    assert!(dist(&p, &xi) < 1e-10);
    let y = s.orbit_start(tau, t, &x, &xi).unwrap();
    let (q, _) = s.orbit(t, tau, &x, &eta).unwrap();
    assert!(dist(&y, &q) < 1e-10);
}

#[test]
fn momentum_deviation_shrinks_with_start_time() {
    let s = solver(0.8, 2);
    let devs: Vec<f64> = [5.0, 20.0, 80.0]
        .iter()
        .map(|&t0| s.momentum_deviation(t0, 400.0, &[430.0, 80.0], &[1.0, 0.2]).unwrap())
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

/// Samples of the outgoing (`Plus`) or incoming (`Minus`) cone
/// `|x| >= r, |xi| >= d, +-cos(x, xi) >= sigma0`.
fn cone_samples(count: usize, sign: Sign, seed: u64) -> Vec<([f64; 2], [f64; 2])> {
    let mut state = seed;
    let mut unif = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = Vec::new();
    while out.len() < count {
        let (r, a) = (30.0 + 90.0 * unif(), std::f64::consts::TAU * unif());
        let (k, b) = (0.5 + 2.5 * unif(), std::f64::consts::TAU * unif());
        let x = [r * a.cos(), r * a.sin()];
        let xi = [k * b.cos(), k * b.sin()];
        if sign.factor() * (a - b).cos() >= 0.2 {
            out.push((x, xi));
        }
    }
    out
}

#[test]
fn eikonal_residual_on_cones() {
    let s = solver(0.5, 2);
    let opts = EikonalOptions::default();
    for sign in [Sign::Plus, Sign::Minus] {
        for (x, xi) in cone_samples(40, sign, 11) {
            let r = eikonal_residual(&s, &x, &xi, sign, &opts, 1e-3).unwrap();
            assert!(r.abs() <= 1e-4, "{x:?} {xi:?} {r:e}");
        }
    }
}

#[test]
fn phase_correction_grows_slowly() {
    // V_L ~ r^{-1/2}, declared exponent 1/2: the correction may grow like <x>^{1/2}
    let v = PairPotential::new(PairKind::InversePower { power: 0.5, strength: 0.5 }, 1.0, Range::Long, 0.5).unwrap();
    let s = OrbitSolver::new(v, 0.1, 1).unwrap();
    // slower decay leaves a larger, still straight-line-accurate, tail
    let opts = EikonalOptions { tail_tolerance: 5.0, ..EikonalOptions::default() };
    let corr = |x: f64, xi: f64| (eikonal_phase(&s, &[x], &[xi], Sign::Plus, &opts).unwrap().value - x * xi).abs();
    // increments over doublings remove the fitted constant and expose the power
    let xs = [20.0, 40.0, 80.0, 160.0, 320.0];
    let c: Vec<f64> = xs.iter().map(|x| corr(*x, 1.0)).collect();
    let radial: Vec<(f64, f64)> = xs.windows(2).zip(c.windows(2)).map(|(x, v)| (x[0].ln(), (v[1] - v[0]).abs().ln())).collect();
    let (sx, _) = scatterlab_core::potentials::linear_fit(&radial);
    assert!(sx <= 0.5 + 0.1, "{sx}");
    let speed: Vec<(f64, f64)> = [1.0, 2.0, 4.0].iter().map(|k| (f64::ln(*k), corr(100.0, *k).ln())).collect();
    let (sk, _) = scatterlab_core::potentials::linear_fit(&speed);
    assert!((-1.3..=-0.7).contains(&sk), "{sk}");
}

#[test]
fn glued_phase_cutoffs() {
    let s = solver(0.5, 2);
    let params = PhaseParams { r0: 32.0, ..PhaseParams::default() };
    let f = build_phase_function(s.clone(), params).unwrap();
    // inner ball and slow momenta keep the free phase
    assert_eq!(f.value(&[10.0, 3.0], &[1.0, 0.5]).unwrap(), 11.5);
    assert_eq!(f.value(&[60.0, 3.0], &[0.2, 0.0]).unwrap(), 12.0);
    // cone interiors take phi_+ or phi_- alone
    let (x, xi) = ([70.0, 10.0], [1.5, 0.4]);
    let plus = eikonal_phase(&s, &x, &xi, Sign::Plus, &params.eikonal).unwrap().value;
    assert!((f.value(&x, &xi).unwrap() - plus).abs() < 1e-12);
    let xi = [-1.5, -0.4];
    let minus = eikonal_phase(&s, &x, &xi, Sign::Minus, &params.eikonal).unwrap().value;
    assert!((f.value(&x, &xi).unwrap() - minus).abs() < 1e-12);
}

#[test]
fn amplitude_decays_on_cones() {
    let s = solver(0.5, 1);
    let f = build_phase_function(s, PhaseParams { r0: 16.0, ..PhaseParams::default() }).unwrap();
    let amp = |x: f64| {
        let (re, im) = f.amplitude(&[x], &[1.5], 1e-2).unwrap();
        re.hypot(im)
    };
    let pts: Vec<(f64, f64)> = [40.0, 80.0, 160.0].iter().map(|x| (f64::ln(*x), amp(*x).ln())).collect();
    let (slope, _) = scatterlab_core::potentials::linear_fit(&pts);
    assert!(slope <= -1.8, "{slope}");
}

fn packet(grid: &Grid, x0: f64, k0: f64, s: f64) -> GridState {
    GridState::from_fn(grid, |x| C64::from_polar((-(x[0] - x0).powi(2) / (4.0 * s * s)).exp(), k0 * x[0]))
        .normalized()
        .unwrap()
}

#[test]
fn modified_wave_operator_beats_cook_for_coulomb() {
    let grid = Grid::new(1, 2048, 256.0, 1.0).unwrap();
    let v = PairPotential::soft_coulomb(0.5, 1.0);
    let prop = Propagator::new(&grid, &[1.0], |x| v.at(x), 0.02).unwrap();
    let free = Propagator::free(&grid, &[1.0], 0.02).unwrap();
    let g = packet(&grid, 0.0, 2.0, 4.0);
    let probes = [g.clone(), packet(&grid, 10.0, -2.5, 4.0)];
    let params = PhaseParams { d: 1.0, ..PhaseParams::default() };
    let found = search_r0(&solver(0.5, 1), params, &grid, &probes, 28, 8.0).unwrap();
    let j = &found.identification;
    assert!(j.bound(&probes).unwrap() <= 2.0);
    let cook = cook_wave_operator(&prop, &free, &g, 40.0, Sign::Plus).unwrap();
    let modified = modified_wave_operator(&prop, &free, j, &g, 40.0, Sign::Plus).unwrap();
    assert!(modified.tail_decreasing());
    assert!(10.0 * modified.final_tail() <= cook.final_tail(), "{} {}", modified.final_tail(), cook.final_tail());
    assert!(cook.final_tail() > 0.1);
    let defect = completeness_defect(&prop, &free, Some(j), &g, 40.0, Sign::Plus, 1e-10).unwrap();
    assert!(defect < 1e-2, "{defect}");
}

#[test]
fn free_modified_operator_reduces_to_cook() {
    let grid = Grid::new(1, 256, 64.0, 1.0).unwrap();
    let v = PairPotential::gaussian(-1.0, 1.0);
    let prop = Propagator::new(&grid, &[1.0], |x| v.at(x), 0.02).unwrap();
    let free = Propagator::free(&grid, &[1.0], 0.02).unwrap();
    let f = build_phase_function(OrbitSolver::new(PairPotential::zero(), 0.1, 1).unwrap(), PhaseParams::default()).unwrap();
    let j = Identification::new(f, &grid, 8).unwrap();
    let g = packet(&grid, 0.0, 1.5, 2.0);
    let a = cook_wave_operator(&prop, &free, &g, 8.0, Sign::Minus).unwrap();
    let b = modified_wave_operator(&prop, &free, &j, &g, 8.0, Sign::Minus).unwrap();
    assert!(a.state.distance(&b.state).unwrap() < 1e-8);
}

#[test]
fn intertwining_improves_with_horizon() {
    let grid = Grid::new(1, 1024, 160.0, 1.0).unwrap();
    let v = PairPotential::gaussian(-1.0, 1.0);
    let prop = Propagator::new(&grid, &[1.0], |x| v.at(x), 0.01).unwrap();
    let free = Propagator::free(&grid, &[1.0], 0.01).unwrap();
    let g = packet(&grid, 0.0, 2.0, 2.0);
    let win = EnergyWindow { lo: 1.5, hi: 2.5, edge: 0.25 };
    let d: Vec<f64> =
        [5.0, 10.0, 40.0].iter().map(|t| intertwining_defect(&prop, &free, None, &g, *t, Sign::Plus, win).unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert!(d[2] <= 1e-3, "{d:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_composition(y0 in -20.0..20.0f64, y1 in -20.0..20.0f64, k0 in -1.5..1.5f64, k1 in -1.5..1.5f64, u in 1.0..30.0f64) {
        let s = solver(0.8, 2);
        let (y, xi) = ([y0, y1], [k0, k1]);
        let t = u + 15.0;
        let (qu, pu) = s.orbit(u, 0.0, &y, &xi).unwrap();
        let (q2, p2) = s.orbit(t, u, &qu, &pu).unwrap();
        let (q, p) = s.orbit(t, 0.0, &y, &xi).unwrap();
        prop_assert!(dist(&q, &q2) < 1e-8 && dist(&p, &p2) < 1e-8);
    }

    #[test]
    fn free_phase_is_exact(x0 in -200.0..200.0f64, x1 in -200.0..200.0f64, k0 in -3.0..3.0f64, k1 in -3.0..3.0f64) {
        let s = OrbitSolver::new(PairPotential::zero(), 0.1, 2).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let v = eikonal_phase(&s, &[x0, x1], &[k0, k1], sign, &EikonalOptions::default()).unwrap();
            prop_assert_eq!(v.value, x0 * k0 + x1 * k1);
        }
    }
}
