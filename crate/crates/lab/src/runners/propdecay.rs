use super::{Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::{EstimateKind, PropDecaySpec};
use scatterlab_core::dynamics::{probe_states, propagation_decay, EstimateFamily, SymbolSpec};
use scatterlab_core::spectral::Grid;

fn name(k: EstimateKind) -> &'static str {
    match k {
        EstimateKind::WeightWeight => "weight_weight",
        EstimateKind::WeightOutgoing => "weight_outgoing",
        EstimateKind::IncomingOutgoing => "incoming_outgoing",
    }
}

pub fn run(spec: &PropDecaySpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    let g = spec.grid;
    let grid = Grid::new(g.dim, g.points, g.half_extent, g.hbar).ctx("grid")?;
    let probes = probe_states(&grid, spec.probes, seed, spec.probe_band, spec.probe_envelope).ctx("probe states")?;
    let mut values = Table::new("decay.csv", &["estimate", "family", "s", "delta", "t", "value"]);
    let mut fits = Table::new(
        "slopes.csv",
        &["estimate", "family", "s", "delta", "expected", "fitted", "fit_points", "boundary_mass"],
    );
    for (i, e) in spec.estimates.iter().enumerate() {
        let family = match e.family {
            EstimateKind::WeightWeight => EstimateFamily::WeightWeight,
            EstimateKind::WeightOutgoing => EstimateFamily::WeightOutgoing,
            EstimateKind::IncomingOutgoing => EstimateFamily::IncomingOutgoing,
        };
        let symbol = SymbolSpec { family, s: e.s, delta: e.delta, theta: e.theta, rho: e.rho, sigma: spec.sigma };
        let table = propagation_decay(&symbol, &probes, &spec.times).ctx(&format!("estimate {i}"))?;
        for (t, v) in table.times.iter().zip(&table.values) {
            values.row(cells![i, name(e.family), e.s, e.delta, *t, *v]);
        }
        let label = format!("{}[s={}]", name(e.family), e.s);
        let slope = table.fitted_slope;
        let expected = match e.family {
            EstimateKind::WeightWeight => -e.s,
            EstimateKind::WeightOutgoing => -e.s + e.delta,
            EstimateKind::IncomingOutgoing => -e.s,
        };
        fits.row(cells![i, name(e.family), e.s, e.delta, expected, slope, table.fit_points, table.boundary_mass]);
        // the incoming/outgoing bound holds for every s, so decay faster
        // than the target still satisfies it
        out.check(match e.family {
            EstimateKind::IncomingOutgoing => Check::at_most(format!("{label}.slope"), slope, expected + spec.slope_tolerance),
            _ => Check::within(format!("{label}.slope"), slope, expected, spec.slope_tolerance),
        });
    }
    out.artifact(values.finish());
    out.artifact(fits.finish());
    Ok(out)
}
