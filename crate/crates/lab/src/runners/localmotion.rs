use super::{Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::LocalMotionSpec;
use nalgebra::DMatrix;
use scatterlab_core::observe::{local_motion_witness, FiniteModel, WitnessReport};
use scatterlab_core::potentials::linear_fit;

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn run(spec: &LocalMotionSpec) -> Res<Outcome> {
    let mut out = Outcome::default();
    let (hl, he, k) = (matrix(&spec.h_local), matrix(&spec.h_environment), matrix(&spec.coupling));
    let witness = |interaction: DMatrix<f64>| -> Res<WitnessReport> {
        let model = FiniteModel::new(hl.clone(), he.clone(), interaction).ctx("finite model")?;
        local_motion_witness(&model).ctx("witness")
    };
    let mut table = Table::new(
        "witness.csv",
        &["interaction", "epsilon", "witness", "commutator", "ground_multiplicity", "degenerate", "subsystem_energy"],
    );
    let mut points = Vec::new();
    for (i, eps) in spec.epsilons.iter().enumerate() {
        let r = witness(&k * *eps)?;
        table.row(cells!["coupled", *eps, r.witness, r.commutator, r.ground_multiplicity, r.degenerate, r.subsystem_energy]);
        if i == 0 {
            out.check(Check::at_least(format!("coupled[eps={eps}].witness"), r.witness, spec.witness_floor));
        }
        points.push((eps.ln(), r.witness.ln()));
    }
    let n = k.nrows();
    let r = witness(DMatrix::identity(n, n) * spec.constant)?;
    table.row(cells!["constant", spec.constant, r.witness, r.commutator, r.ground_multiplicity, r.degenerate, r.subsystem_energy]);
    out.check(Check::at_most("constant.witness", r.witness, spec.zero_tolerance));
    out.check(Check::at_most("constant.commutator", r.commutator, spec.zero_tolerance));
    let (slope, _) = linear_fit(&points);
    out.check(Check::within("coupled.epsilon_slope", slope, 1.0, spec.slope_tolerance));
    out.artifact(table.finish());
    Ok(out)
}
