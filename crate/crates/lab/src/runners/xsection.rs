use super::{Context, Res};
use crate::cells;
use crate::report::{Check, Outcome, Table};
use crate::scenario::XSectionSpec;
use scatterlab_core::observe::{
    born_cross_section, clock_period, lorentz_factor, planck_mass, planck_time, relativistic_correction,
    relativistic_energy_at_speed, relativistic_mass, rutherford, BornKernel,
};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

pub fn run(spec: &XSectionSpec) -> Res<Outcome> {
    let mut out = Outcome::default();

    // screened Coulomb in first Born approximation tends to Rutherford
    let kernel = BornKernel::ScreenedCoulomb { charge_product: spec.charge_product, charge_unit: spec.charge_unit, kappa: spec.kappa };
    let mut table = Table::new("born.csv", &["theta_deg", "born", "rutherford", "relative_error"]);
    let mut worst: f64 = 0.0;
    for deg in &spec.angles {
        let theta = deg.to_radians();
        let b = born_cross_section(&kernel, spec.energy, theta, spec.mass, spec.hbar).ctx("born cross section")?;
        let r = rutherford(spec.charge_product, spec.charge_unit, spec.energy, theta).ctx("rutherford")?;
        let e = rel(b, r);
        worst = worst.max(e);
        table.row(cells![*deg, b, r, e]);
    }
    out.artifact(table.finish());
    out.check(Check::at_most("born.rutherford_relative_error", worst, spec.born_tolerance));

    // relativistic factors against their textbook forms
    let c = spec.c;
    let theta = spec.angles[spec.angles.len() / 2].to_radians();
    let sigma = rutherford(spec.charge_product, spec.charge_unit, spec.energy, theta).ctx("rutherford")?;
    let clock = spec.clock;
    let mut table = Table::new(
        "relativistic.csv",
        &["beta", "correction", "expected_correction", "mass_ratio", "period_ratio", "gamma"],
    );
    let (mut worst_corr, mut worst_clock): (f64, f64) = (0.0, 0.0);
    for beta in &spec.speeds {
        let v = beta * c;
        let corr = relativistic_correction(sigma, v, c).ctx("relativistic correction")?;
        // oracle from the realized ratio, so rounding of v = beta c is shared
        let b = v / c;
        let expected = sigma * (1.0 - b * b);
        let vc = beta * clock.c;
        let bc = vc / clock.c;
        let gamma = 1.0 / ((1.0 - bc).sqrt() * (1.0 + bc).sqrt());
        let mass_ratio = relativistic_mass(clock.rest_mass, vc, clock.c).ctx("relativistic mass")? / clock.rest_mass;
        let period_ratio = clock_period(clock.rest_mass, vc, clock.h, clock.c).ctx("clock period")?
            / clock_period(clock.rest_mass, 0.0, clock.h, clock.c).ctx("clock period")?;
        worst_corr = worst_corr.max(rel(corr, expected));
        worst_clock = worst_clock.max(rel(mass_ratio, gamma)).max(rel(period_ratio, gamma)).max(rel(period_ratio, mass_ratio));
        let lf = lorentz_factor(v, c).ctx("lorentz factor")?;
        worst_clock = worst_clock.max(rel(lf, 1.0 / ((1.0 - b).sqrt() * (1.0 + b).sqrt())));
        table.row(cells![*beta, corr, expected, mass_ratio, period_ratio, gamma]);
    }
    out.artifact(table.finish());
    out.check(Check::at_most("relativistic.correction_factor", worst_corr, spec.exact_tolerance));
    out.check(Check::at_most("clock.dilation_ratios", worst_clock, spec.exact_tolerance));

    // E' = m v^2/2 (1 + 3/4 beta^2 + O(beta^4))
    let mut table = Table::new("kinetic.csv", &["beta", "kinetic", "newtonian", "second_order_remainder"]);
    let mut worst_ratio: f64 = 0.0;
    for beta in &spec.small_speeds {
        let v = beta * c;
        let e = relativistic_energy_at_speed(spec.mass, v, c).ctx("relativistic kinetic energy")?;
        let newton = 0.5 * spec.mass * v * v;
        let remainder = (e / newton - 1.0 - 0.75 * beta * beta).abs();
        worst_ratio = worst_ratio.max(remainder / beta.powi(4));
        table.row(cells![*beta, e, newton, remainder]);
    }
    out.artifact(table.finish());
    // the next coefficient is 5/8; the bound leaves room for roundoff
    out.check(Check::at_most("kinetic.fourth_order_coefficient", worst_ratio, 1.0));

    // least period of a Planck-mass clock is twice the Planck time
    let mp = planck_mass(clock.h, clock.c, clock.g);
    let lpt = clock_period(mp, 0.0, clock.h, clock.c).ctx("clock period")?;
    let tp = planck_time(clock.h, clock.c, clock.g);
    let mut table = Table::new("planck.csv", &["planck_mass", "least_period", "planck_time", "relative_error"]);
    let e = rel(lpt, 2.0 * tp);
    table.row(cells![mp, lpt, tp, e]);
    out.artifact(table.finish());
    out.check(Check::at_most("clock.planck_least_period", e, clock.tolerance));
    Ok(out)
}
