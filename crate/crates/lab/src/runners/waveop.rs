use super::localtime::packet;
use super::{pair_potential, Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::{SignSpec, WaveOpSpec};
use scatterlab_core::dynamics::{project_out, Propagator};
use scatterlab_core::potentials::PairPotential;
use scatterlab_core::scattering::{
    completeness_defect, intertwining_defect, search_r0, wave_operator_at, EnergyWindow, Identification, OrbitSolver, PhaseParams,
    Sign, WaveOperatorResult,
};
use scatterlab_core::spectral::{Grid, GridState};

/// Defects that must not grow under refinement.
#[derive(Debug, Clone, Copy)]
struct Defects {
    isometry: f64,
    intertwining: f64,
    completeness: f64,
}

struct Setup<'a> {
    spec: &'a WaveOpSpec,
    potential: PairPotential,
    sign: Sign,
    seed: u64,
}

impl Setup<'_> {
    fn propagators(&self, grid: &Grid, dt: f64) -> Res<(Propagator, Propagator)> {
        let v = self.potential;
        let prop = Propagator::new(grid, &[1.0], |x| v.at(x), dt).ctx("interacting propagator")?;
        let free = Propagator::free(grid, &[1.0], dt).ctx("free propagator")?;
        Ok((prop, free))
    }

    /// Scattering packet with the bound states removed, normalized.
    fn scattering_state(&self, prop: &Propagator) -> Res<GridState> {
        let bound = prop.bound_states(8, 0.0, self.seed).ctx("bound states")?;
        let f = packet(prop.grid(), &self.spec.scattering_packet)?;
        project_out(&f, &bound).ctx("projection")?.normalized().ctx("projection")
    }

    fn defects(
        &self,
        prop: &Propagator,
        free: &Propagator,
        j: Option<&Identification>,
        g: &GridState,
        checkpoints: &[f64],
    ) -> Res<(WaveOperatorResult, Defects)> {
        let s = self.spec;
        let w = wave_operator_at(prop, free, j, g, checkpoints, self.sign).ctx("wave operator")?;
        let horizon = *checkpoints.last().expect("validated checkpoints");
        let win = EnergyWindow { lo: s.window.lo, hi: s.window.hi, edge: s.window.edge };
        let intertwining = intertwining_defect(prop, free, j, g, horizon, self.sign, win).ctx("intertwining")?;
        let f = self.scattering_state(prop)?;
        let completeness = completeness_defect(prop, free, j, &f, horizon, self.sign, s.solver_tolerance).ctx("completeness")?;
        let d = Defects { isometry: w.isometry_defect, intertwining, completeness };
        Ok((w, d))
    }
}

fn tails(table: &mut Table, label: &str, w: &WaveOperatorResult) {
    for (t, v) in w.tails.times.iter().zip(&w.tails.values) {
        table.row(cells![label, *t, *v]);
    }
}

pub fn run(spec: &WaveOpSpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    let g = spec.grid;
    let grid = Grid::new(1, g.points, g.half_extent, g.hbar).ctx("grid")?;
    let setup = Setup {
        spec,
        potential: pair_potential(&spec.potential),
        sign: match spec.sign {
            SignSpec::Plus => Sign::Plus,
            SignSpec::Minus => Sign::Minus,
        },
        seed,
    };
    let (prop, free) = setup.propagators(&grid, spec.dt)?;
    let g0 = packet(&grid, &spec.packet)?;
    let mut tail_table = Table::new("tails.csv", &["operator", "t", "tail"]);
    let mut defect_table = Table::new("defects.csv", &["operator", "dt", "horizon", "isometry", "intertwining", "completeness"]);

    match &spec.modifier {
        None => {
            let (cook, coarse) = setup.defects(&prop, &free, None, &g0, &spec.checkpoints)?;
            tails(&mut tail_table, "cook", &cook);
            defect_table.row(cells!["cook", spec.dt, spec.horizon, coarse.isometry, coarse.intertwining, coarse.completeness]);
            out.check(Check::holds("cook.tail_decreasing", cook.tail_decreasing(), cook.final_tail(), "strictly decreasing"));
            out.check(Check::at_most("cook.tail_slope", cook.tails.fitted_slope, -spec.decay + spec.slope_margin));
            out.check(Check::at_most("cook.isometry", coarse.isometry, spec.isometry_tolerance));
            out.check(Check::at_most("cook.intertwining", coarse.intertwining, spec.intertwining_tolerance));
            out.check(Check::at_most("cook.completeness", coarse.completeness, spec.completeness_tolerance));
            if spec.self_convergence {
                let (prop2, free2) = setup.propagators(&grid, 0.5 * spec.dt)?;
                let doubled: Vec<f64> = spec.checkpoints.iter().map(|t| 2.0 * t).collect();
                let (_, fine) = setup.defects(&prop2, &free2, None, &g0, &doubled)?;
                defect_table.row(cells!["cook", 0.5 * spec.dt, 2.0 * spec.horizon, fine.isometry, fine.intertwining, fine.completeness]);
                for (name, c, f, tol) in [
                    ("isometry", coarse.isometry, fine.isometry, spec.isometry_tolerance),
                    ("intertwining", coarse.intertwining, fine.intertwining, spec.intertwining_tolerance),
                    ("completeness", coarse.completeness, fine.completeness, spec.completeness_tolerance),
                ] {
                    // far below the tolerance both values are roundoff and
                    // their order carries no information
                    let noise = 1e-3 * tol;
                    let ok = f <= c || f.max(c) <= noise;
                    out.check(Check::holds(
                        format!("refined.{name}_not_worse"),
                        ok,
                        f,
                        format!("<= coarse {c:e} (or both <= {noise:e})"),
                    ));
                }
            }
        }
        Some(m) => {
            let solver = OrbitSolver::new(setup.potential, m.rho, 1).ctx("orbit solver")?;
            let params = PhaseParams { d: m.d, ..PhaseParams::default() };
            let probes = [g0.clone(), packet(&grid, &spec.scattering_packet)?];
            let found = search_r0(&solver, params, &grid, &probes, m.table_nodes, m.r0_start).ctx("r0 search")?;
            let mut search = Table::new("r0_search.csv", &["r0", "identity_defect"]);
            for (r, d) in &found.trials {
                search.row(cells![*r, *d]);
            }
            out.artifact(search.finish());
            let j = &found.identification;
            let cook = wave_operator_at(&prop, &free, None, &g0, &spec.checkpoints, setup.sign).ctx("cook wave operator")?;
            let (modified, d) = setup.defects(&prop, &free, Some(j), &g0, &spec.checkpoints)?;
            tails(&mut tail_table, "cook", &cook);
            tails(&mut tail_table, "modified", &modified);
            defect_table.row(cells!["modified", spec.dt, spec.horizon, d.isometry, d.intertwining, d.completeness]);
            out.check(Check::holds(
                "modified.tail_decreasing",
                modified.tail_decreasing(),
                modified.final_tail(),
                "strictly decreasing",
            ));
            let ratio = cook.final_tail() / modified.final_tail();
            out.check(Check::at_least("modified.superiority_ratio", ratio, m.superiority));
            out.check(Check::at_most("modified.isometry", d.isometry, spec.isometry_tolerance));
            out.check(Check::at_most("modified.intertwining", d.intertwining, spec.intertwining_tolerance));
            out.check(Check::at_most("modified.completeness", d.completeness, spec.completeness_tolerance));
        }
    }
    out.artifact(tail_table.finish());
    out.artifact(defect_table.finish());
    Ok(out)
}
