use super::{Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::UncertaintySpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterlab_core::observe::{time_energy_uncertainty, uncertainty_product};
use scatterlab_core::spectral::{Grid, GridState};
use scatterlab_core::C64;

pub fn run(spec: &UncertaintySpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    let g = spec.grid;
    let hbar = g.hbar;
    let grid = Grid::new(1, g.points, g.half_extent, hbar).ctx("grid")?;
    let masses = [spec.mass];
    let mut table = Table::new("products.csv", &["state", "delta_q", "delta_p", "product"]);

    let gauss = |x: f64| (-0.5 * x * x).exp();
    let ground = GridState::from_fn(&grid, |x| C64::new(gauss(x[0]), 0.0)).normalized().ctx("gaussian")?;
    let r = uncertainty_product(&ground, &masses).ctx("gaussian product")?;
    table.row(cells!["gaussian", r.delta_q, r.delta_p, r.product]);
    out.check(Check::within("gaussian.product", r.product, 0.5 * hbar, spec.gaussian_tolerance));

    let first = GridState::from_fn(&grid, |x| C64::new(x[0] * gauss(x[0]), 0.0)).normalized().ctx("hermite")?;
    let r = uncertainty_product(&first, &masses).ctx("hermite product")?;
    table.row(cells!["hermite1", r.delta_q, r.delta_p, r.product]);
    out.check(Check::within("hermite1.product", r.product, 1.5 * hbar, spec.hermite_tolerance));

    // cubic polynomial times a Gaussian of random width, complex coefficients
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut smallest = f64::INFINITY;
    for i in 0..spec.random_states {
        let c: Vec<C64> = (0..4).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let w: f64 = rng.random_range(0.5..2.0);
        let x0: f64 = rng.random_range(-2.0..2.0);
        let k0: f64 = rng.random_range(-2.0..2.0);
        let psi = GridState::from_fn(&grid, |x| {
            let u = x[0] - x0;
            let poly = c[0] + c[1] * u + c[2] * u * u + c[3] * u * u * u;
            poly * C64::from_polar((-u * u / (2.0 * w * w)).exp(), k0 * x[0])
        })
        .normalized()
        .ctx("random state")?;
        let r = uncertainty_product(&psi, &masses).ctx("random product")?;
        smallest = smallest.min(r.product);
        table.row(cells![format!("random{i}"), r.delta_q, r.delta_p, r.product]);
    }
    out.artifact(table.finish());
    out.check(Check::at_least("random.min_product", smallest, 0.5 * hbar - spec.bound_tolerance));

    // time/energy pair on admissible shells: Fourier support away from p = 0
    let te = spec.time_energy;
    let grid3 = Grid::new(3, te.points, te.half_extent, hbar).ctx("3-d grid")?;
    let mut table = Table::new("time_energy.csv", &["state", "delta_t", "delta_e", "product", "low_momentum_mass"]);
    let mut smallest = f64::INFINITY;
    for i in 0..te.states {
        let radius: f64 = rng.random_range(1.8..2.6);
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-0.4..0.4)).collect();
        let phase: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let psi = GridState::from_momentum_fn(&grid3, |xi| {
            let r = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
            let tilt = 1.0 + a[0] * xi[0] + a[1] * xi[1] + a[2] * xi[2];
            let arg = phase[0] * xi[0] + phase[1] * xi[1] + phase[2] * xi[2];
            C64::from_polar((-10.0 * (r - radius).powi(2)).exp() * tilt, arg)
        })
        .normalized()
        .ctx("shell state")?;
        let r = time_energy_uncertainty(&psi, te.time, te.gap).ctx("time/energy spreads")?;
        smallest = smallest.min(r.product);
        table.row(cells![i, r.delta_t, r.delta_e, r.product, r.low_momentum_mass]);
    }
    out.artifact(table.finish());
    out.check(Check::at_least("time_energy.min_product", smallest, 0.5 * hbar - te.tolerance));
    Ok(out)
}
