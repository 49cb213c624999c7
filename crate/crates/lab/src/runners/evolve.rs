use super::{Context, Res};
use crate::cells;
use crate::oracle::free_gaussian;
use crate::report::{Check, Outcome, Table};
use crate::scenario::{DftSpec, EvolveSpec, FarFieldSpec, GaussianSpec, PlancherelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterlab_core::spectral::{
    dft, far_field_extract, free_propagate, idft, spectral_mass, spectral_trace, trusted_radius, Grid, GridState, MomentumSampler,
    ResolventOptions, SphereRule,
};
use scatterlab_core::C64;
use std::time::Instant;

pub fn run(spec: &EvolveSpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    if let Some(s) = &spec.dft {
        dft_round_trip(s, seed, &mut out)?;
    }
    if let Some(s) = &spec.gaussian {
        gaussian(s, &mut out)?;
    }
    if let Some(s) = &spec.plancherel {
        plancherel(s, seed, &mut out)?;
    }
    if let Some(s) = &spec.far_field {
        far_field(s, &mut out)?;
    }
    Ok(out)
}

fn label(g: &Grid) -> String {
    format!("{}d-{}", g.dim(), g.points())
}

fn dft_round_trip(spec: &DftSpec, seed: u64, out: &mut Outcome) -> Res<()> {
    let mut table = Table::new("dft.csv", &["dim", "points", "round_trip_error", "norm_error"]);
    for (i, g) in spec.grids.iter().enumerate() {
        let grid = Grid::new(g.dim, g.points, g.half_extent, g.hbar).ctx("dft grid")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let values = (0..grid.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let psi = GridState::new(&grid, scatterlab_core::spectral::Domain::Position, values).ctx("dft state")?;
        let start = Instant::now();
        let hat = dft(&psi);
        let back = idft(&hat);
        out.timings.push((format!("dft.{}", label(&grid)), start.elapsed()));
        let norm = psi.norm();
        let round = back.distance(&psi).ctx("dft round trip")? / norm;
        let unitary = (hat.norm() - norm).abs() / norm;
        table.row(cells![g.dim, g.points, round, unitary]);
        out.check(Check::at_most(format!("dft.round_trip[{}]", label(&grid)), round, spec.tolerance));
        out.check(Check::at_most(format!("dft.norm[{}]", label(&grid)), unitary, spec.tolerance));
    }
    out.artifact(table.finish());
    Ok(())
}

fn gaussian(spec: &GaussianSpec, out: &mut Outcome) -> Res<()> {
    let grid = Grid::new(1, spec.points, spec.half_extent, spec.hbar).ctx("gaussian grid")?;
    let p = spec.packet;
    let exact = |x: f64, t: f64| free_gaussian(x, t, p.x0, p.k0, p.width, spec.mass, spec.hbar);
    let psi0 = GridState::from_fn(&grid, |x| exact(x[0], 0.0));
    let psi = free_propagate(&psi0, spec.time, spec.mass).ctx("free propagation")?;
    let mut table = Table::new("gaussian.csv", &["x", "re", "im", "exact_re", "exact_im", "error"]);
    let mut sup: f64 = 0.0;
    for (j, v) in psi.values().iter().enumerate() {
        let x = grid.coordinate(j);
        let e = exact(x, spec.time);
        let err = (v - e).norm();
        sup = sup.max(err);
        table.row(cells![x, v.re, v.im, e.re, e.im, err]);
    }
    out.artifact(table.finish());
    out.check(Check::at_most("gaussian.sup_error", sup, spec.tolerance));
    Ok(())
}

/// Sum of three seeded Gaussian packets, normalized.
fn random_packets(grid: &Grid, rng: &mut ChaCha8Rng) -> Res<GridState> {
    let params: Vec<[f64; 5]> = (0..3)
        .map(|_| {
            [
                rng.random_range(-5.0..5.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.8..1.5),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    GridState::from_fn(grid, |x| {
        params
            .iter()
            .map(|[x0, k0, s, a, b]| C64::new(*a, *b) * C64::from_polar((-(x[0] - x0).powi(2) / (4.0 * s * s)).exp(), k0 * x[0]))
            .sum()
    })
    .normalized()
    .ctx("plancherel state")
}

fn plancherel(spec: &PlancherelSpec, seed: u64, out: &mut Outcome) -> Res<()> {
    let grid = Grid::new(1, spec.points, spec.half_extent, 1.0).ctx("plancherel grid")?;
    let rule = SphereRule::new(1, 0).ctx("sphere rule")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("plancherel.csv", &["state", "norm2", "spectral_mass", "relative_error"]);
    let mut worst: f64 = 0.0;
    for i in 0..spec.states {
        let psi = random_packets(&grid, &mut rng)?;
        let sampler = MomentumSampler::new(&psi, spec.oversample).ctx("momentum sampler")?;
        let mass = spectral_mass(&sampler, sampler.band(), spec.panels, &rule).ctx("spectral mass")?;
        let n2 = psi.norm2();
        let rel = (mass - n2).abs() / n2;
        worst = worst.max(rel);
        table.row(cells![i, n2, mass, rel]);
    }
    out.artifact(table.finish());
    out.check(Check::at_most("plancherel.relative_error", worst, spec.tolerance));
    Ok(())
}

fn far_field(spec: &FarFieldSpec, out: &mut Outcome) -> Res<()> {
    let grid = Grid::new(3, spec.points, spec.half_extent, 1.0).ctx("far-field grid")?;
    // an anisotropic Gaussian, so the far field depends on the direction
    let psi = GridState::from_fn(&grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new(1.0 + 0.5 * x[0], 0.3 * x[2]) * (-0.5 * r2).exp()
    })
    .normalized()
    .ctx("far-field state")?;
    let n: f64 = spec.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    let omega: Vec<f64> = spec.direction.iter().map(|c| c / n).collect();
    let sign = if spec.outgoing { 1.0 } else { -1.0 };
    let target = [sign * omega[0], sign * omega[1], sign * omega[2]];
    let oracle = spectral_trace(&psi, spec.energy, &[target]).ctx("spectral trace")?.values[0];
    let sampler = MomentumSampler::new(&psi, spec.oversample).ctx("momentum sampler")?;
    let opts = ResolventOptions::for_sampler(&sampler);
    let trusted = trusted_radius(&grid, spec.oversample);
    let (_, rows) =
        far_field_extract(&sampler, trusted, spec.energy, &omega, &spec.radii, spec.outgoing, &opts).ctx("far-field extraction")?;
    let mut table = Table::new("far_field.csv", &["radius", "re", "im", "oracle_re", "oracle_im", "relative_error"]);
    let errors: Vec<f64> = rows.iter().map(|r| (r.value - oracle).norm() / oracle.norm()).collect();
    for (r, e) in rows.iter().zip(&errors) {
        table.row(cells![r.radius, r.value.re, r.value.im, oracle.re, oracle.im, *e]);
    }
    out.artifact(table.finish());
    let last = *errors.last().expect("validated radii");
    out.check(Check::at_most("far_field.relative_error", last, spec.tolerance));
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    out.check(Check::holds("far_field.error_decreasing", decreasing, last, "strictly decreasing over radii"));
    Ok(())
}
