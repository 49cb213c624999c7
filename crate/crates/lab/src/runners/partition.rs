use super::{Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::PartitionSpec;
use scatterlab_core::coords::JacobiFrame;
use scatterlab_core::manybody::{disjointness_check, sample_shell, select_constants, support_check, Partition};

pub fn run(spec: &PartitionSpec, seed: u64) -> Res<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new(
        "partition.csv",
        &[
            "case", "masses", "dim", "samples", "max_sum_error", "support_violations", "overlaps", "min_member", "max_member",
            "gradient_sup",
        ],
    );
    let mut constants = Table::new("constants.csv", &["case", "level", "theta", "rho", "sigma", "r0"]);
    for (i, case) in spec.cases.iter().enumerate() {
        let n = case.masses.len();
        let c = select_constants(n, spec.gamma).ctx("partition constants")?;
        for level in 2..=n {
            constants.row(cells![i, level, c.theta(level), c.rho(level), c.sigma(), c.r0()]);
        }
        let frame = JacobiFrame::new(&case.masses, case.dim).ctx("frame")?;
        let partition = Partition::new(c, frame).ctx("partition")?;
        let points = sample_shell(&partition, spec.samples, seed.wrapping_add(i as u64));
        let support = support_check(&partition, &points, spec.gradient_samples).ctx("support check")?;
        let disjoint = disjointness_check(&partition, &points).ctx("disjointness check")?;
        let masses = case.masses.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ");
        table.row(cells![
            i,
            masses,
            case.dim,
            support.samples,
            support.max_sum_error,
            support.violations.len(),
            disjoint.overlaps,
            support.min_member,
            support.max_member,
            support.gradient_sup,
        ]);
        let label = format!("N={n}[case {i}]");
        out.check(Check::at_most(format!("{label}.sum_error"), support.max_sum_error, spec.sum_tolerance));
        out.check(Check::at_most(format!("{label}.support_violations"), support.violations.len() as f64, 0.0));
        out.check(Check::at_most(format!("{label}.same_level_overlaps"), disjoint.overlaps as f64, 0.0));
    }
    out.artifact(table.finish());
    out.artifact(constants.finish());
    Ok(out)
}
