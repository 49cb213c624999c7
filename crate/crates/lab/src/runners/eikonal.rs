use super::{pair_potential, par_map, Context, Failure, Res};
use crate::cells;
use crate::oracle;
use crate::report::{Check, Outcome, Table};
use crate::scenario::EikonalSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterlab_core::potentials::PairPotential;
use scatterlab_core::scattering::{eikonal_phase, eikonal_residual, EikonalOptions, OrbitSolver, Sign};
use std::f64::consts::TAU;

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    match dim {
        1 => vec![if rng.random::<bool>() { 1.0 } else { -1.0 }],
        2 => {
            let a = TAU * rng.random::<f64>();
            vec![a.cos(), a.sin()]
        }
        _ => {
            let z: f64 = rng.random_range(-1.0..1.0);
            let a = TAU * rng.random::<f64>();
            let r = (1.0 - z * z).sqrt();
            vec![r * a.cos(), r * a.sin(), z]
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|c| c * s).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

struct Sample {
    sign: Sign,
    x: Vec<f64>,
    xi: Vec<f64>,
}

/// Points of the outgoing (`Plus`) or incoming (`Minus`) region
/// `|x| in radius, |xi| in speed, +-cos(x, xi) >= cone`.
fn cone_samples(spec: &EikonalSpec, sign: Sign, count: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let ux = unit(rng, spec.dim);
        let uk = unit(rng, spec.dim);
        if sign.factor() * dot(&ux, &uk) < spec.cone {
            continue;
        }
        let r = rng.random_range(spec.radius[0]..spec.radius[1]);
        let k = rng.random_range(spec.speed[0]..spec.speed[1]);
        out.push(Sample { sign, x: scaled(&ux, r), xi: scaled(&uk, k) });
    }
    out
}

pub fn run(spec: &EikonalSpec, seed: u64, threads: usize) -> Res<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = EikonalOptions { horizon: spec.horizon, tail_tolerance: spec.tail_tolerance };
    let solver = OrbitSolver::new(pair_potential(&spec.potential), spec.rho, spec.dim).ctx("orbit solver")?;

    // without a long-range part both limits are the free phase x.xi
    let free = OrbitSolver::new(PairPotential::zero(), spec.rho, spec.dim).ctx("free orbit solver")?;
    let mut worst_free: f64 = 0.0;
    for i in 0..spec.free_samples {
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let x = scaled(&unit(&mut rng, spec.dim), rng.random_range(0.0..2.0 * spec.radius[1]));
        let xi = scaled(&unit(&mut rng, spec.dim), rng.random_range(0.0..spec.speed[1]));
        let v = eikonal_phase(&free, &x, &xi, sign, &opts).ctx("free phase")?.value;
        worst_free = worst_free.max((v - dot(&x, &xi)).abs());
    }
    out.check(Check::at_most("free_phase.max_deviation", worst_free, 0.0));

    let half = spec.samples / 2;
    let mut samples = cone_samples(spec, Sign::Plus, half, &mut rng);
    samples.extend(cone_samples(spec, Sign::Minus, spec.samples - half, &mut rng));
    let residuals: Vec<Res<f64>> = par_map(&samples, threads, |s| {
        eikonal_residual(&solver, &s.x, &s.xi, s.sign, &opts, spec.difference_step).ctx("eikonal residual")
    });
    let mut table = Table::new("residuals.csv", &["sign", "x", "xi", "residual"]);
    let mut worst: f64 = 0.0;
    for (s, r) in samples.iter().zip(residuals) {
        let r = r?;
        worst = worst.max(r.abs());
        let sign = if s.sign == Sign::Plus { "plus" } else { "minus" };
        table.row(cells![sign, join(&s.x), join(&s.xi), r]);
    }
    out.artifact(table.finish());
    out.check(Check::at_most("eikonal.max_residual", worst, spec.residual_tolerance));

    // core orbit solver against an independent adaptive integrator
    let mut orbits = Table::new("orbits.csv", &["orbit", "y", "xi", "t", "q_error", "p_error"]);
    let mut worst_orbit: f64 = 0.0;
    for i in 0..spec.orbits {
        let y = scaled(&unit(&mut rng, spec.dim), rng.random_range(0.0..20.0));
        let xi = scaled(&unit(&mut rng, spec.dim), rng.random_range(0.3..1.5));
        let (q, p) = solver.orbit(spec.orbit_time, 0.0, &y, &xi).ctx("orbit")?;
        let (qr, pr) = oracle::orbit(|t, x, g| solver.cutoff_gradient(t, x, g), 0.0, spec.orbit_time, &y, &xi)
            .map_err(|e| Failure { context: "orbit oracle".into(), source: scatterlab_core::Error::Convergence { what: e, residual: f64::NAN } })?;
        let dq = distance(&q, &qr);
        let dp = distance(&p, &pr);
        worst_orbit = worst_orbit.max(dq).max(dp);
        orbits.row(cells![i, join(&y), join(&xi), spec.orbit_time, dq, dp]);
    }
    out.artifact(orbits.finish());
    out.check(Check::at_most("orbit.max_deviation", worst_orbit, spec.orbit_tolerance));
    Ok(out)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(" ")
}
