use super::{pair_potential, Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::{LocalTimeSpec, PacketSpec};
use scatterlab_core::dynamics::{local_time_defect, position_moment, project_out, Propagator};
use scatterlab_core::spectral::{Grid, GridState};
use scatterlab_core::C64;

pub(crate) fn packet(grid: &Grid, p: &PacketSpec) -> Res<GridState> {
    GridState::from_fn(grid, |x| C64::from_polar((-(x[0] - p.x0).powi(2) / (4.0 * p.width * p.width)).exp(), p.k0 * x[0]))
        .normalized()
        .ctx("packet")
}

pub fn run(spec: &LocalTimeSpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    let g = spec.grid;
    let grid = Grid::new(1, g.points, g.half_extent, g.hbar).ctx("grid")?;
    let masses = [spec.mass];
    let psi0 = packet(&grid, &spec.packet)?;

    // free flow: the defect is exactly ||x psi0|| / t
    let free = Propagator::free(&grid, &masses, spec.dt).ctx("free propagator")?;
    let free_table = local_time_defect(&free, &psi0, &spec.times).ctx("free defect")?;
    let moment = position_moment(&masses, &psi0);
    let free_expected: Vec<f64> = spec.times.iter().map(|t| moment / t).collect();
    let free_err = free_table.values.iter().zip(&free_expected).map(|(v, e)| (v - e).abs() / e).fold(0.0, f64::max);
    out.check(Check::at_most("free.relative_error", free_err, spec.free_tolerance));

    // short-range well: scattering part decays, an eigenstate does not
    let v = pair_potential(&spec.potential);
    let prop = Propagator::new(&grid, &masses, |x| v.at(x), spec.dt).ctx("interacting propagator")?;
    let bound = prop.bound_states(8, 0.0, seed).ctx("bound states")?;
    let scattering = project_out(&psi0, &bound).ctx("projection")?.normalized().ctx("projection")?;
    let inter = local_time_defect(&prop, &scattering, &spec.times).ctx("interacting defect")?;
    out.check(Check::holds(
        "interacting.monotone_decreasing",
        inter.is_monotone_decreasing(),
        inter.fitted_slope,
        "strictly decreasing (value: fitted slope)",
    ));

    let eigen = match bound.first() {
        Some(b) => local_time_defect(&prop, &b.state, &spec.times).ctx("eigenstate defect")?,
        None => {
            return Err(super::Failure {
                context: "eigenstate case".into(),
                source: scatterlab_core::Error::Domain("the well has no bound state".into()),
            })
        }
    };
    let max = eigen.values.iter().cloned().fold(f64::MIN, f64::max);
    let min = eigen.values.iter().cloned().fold(f64::MAX, f64::min);
    out.check(Check::at_most("eigenstate.relative_variation", (max - min) / max, spec.flat_tolerance));

    let mut table = Table::new(
        "localtime.csv",
        &["t", "free", "free_expected", "interacting", "eigenstate"],
    );
    for (i, t) in spec.times.iter().enumerate() {
        table.row(cells![*t, free_table.values[i], free_expected[i], inter.values[i], eigen.values[i]]);
    }
    out.artifact(table.finish());
    let mut states = Table::new("bound_states.csv", &["index", "energy", "residual"]);
    for (i, b) in bound.iter().enumerate() {
        states.row(cells![i, b.energy, b.residual]);
    }
    out.artifact(states.finish());
    Ok(out)
}
