//! Measured wave operators `W(T) g = e^{iTH} J e^{-iTH_0} g` and the
//! intertwining and completeness defects built on them.

use super::identification::Identification;
use super::phase::Sign;
use crate::dynamics::{DecayTable, Propagator, ROUNDOFF_FLOOR};
use crate::error::{domain, Result};
use crate::spectral::GridState;

#[derive(Debug, Clone)]
pub struct WaveOperatorResult {
    /// `W(T) g` at the last checkpoint.
    pub state: GridState,
    pub horizon: f64,
    /// `|W(T_k) g - W(T_{k-1}) g|` against `T_k`, with a log-log slope over
    /// all checkpoints.
    pub tails: DecayTable,
    /// `| |W g| - |g| |`.
    pub isometry_defect: f64,
}

impl WaveOperatorResult {
    pub fn tail_decreasing(&self) -> bool {
        self.tails.is_monotone_decreasing()
    }

    pub fn final_tail(&self) -> f64 {
        self.tails.values.last().copied().unwrap_or(f64::NAN)
    }
}

/// `T/4, T/2, T`.
pub fn default_checkpoints(horizon: f64) -> Vec<f64> {
    vec![0.25 * horizon, 0.5 * horizon, horizon]
}

fn check_pair(prop: &Propagator, free: &Propagator) -> Result<()> {
    if prop.grid() != free.grid() {
        return Err(domain("interacting and free propagators use different grids"));
    }
    Ok(())
}

/// `e^{itH} J e^{-itH_0} g` with `J = 1` when `j` is `None`.
pub fn wave_map(prop: &Propagator, free: &Propagator, j: Option<&Identification>, g: &GridState, t: f64) -> Result<GridState> {
    check_pair(prop, free)?;
    let out = free.kinetic_evolve(g, t)?;
    let out = match j {
        Some(j) => j.apply(&out)?,
        None => out,
    };
    prop.propagate(&out, -t)
}

/// Evaluates the wave map at increasing checkpoints and tabulates the
/// successive differences.
pub fn wave_operator_at(
    prop: &Propagator,
    free: &Propagator,
    j: Option<&Identification>,
    g: &GridState,
    checkpoints: &[f64],
    sign: Sign,
) -> Result<WaveOperatorResult> {
    if checkpoints.len() < 2 || checkpoints.windows(2).any(|w| !(w[1] > w[0])) || !(checkpoints[0] > 0.0) {
        return Err(domain("need at least two increasing positive checkpoints"));
    }
    let mut prev = wave_map(prop, free, j, g, sign.factor() * checkpoints[0])?;
    let mut values = Vec::with_capacity(checkpoints.len() - 1);
    for &t in &checkpoints[1..] {
        let next = wave_map(prop, free, j, g, sign.factor() * t)?;
        values.push(next.distance(&prev)?);
        prev = next;
    }
    let horizon = *checkpoints.last().unwrap_or(&0.0);
    let times = checkpoints[1..].to_vec();
    let window = (times[0], horizon);
    let tails = DecayTable::new(times, values, window, ROUNDOFF_FLOOR)?;
    let isometry_defect = (prev.norm() - g.norm()).abs();
    Ok(WaveOperatorResult { state: prev, horizon, tails, isometry_defect })
}

/// Short-range wave operator `e^{iTH} e^{-iTH_0} g` at `T/4, T/2, T`.
pub fn cook_wave_operator(prop: &Propagator, free: &Propagator, g: &GridState, horizon: f64, sign: Sign) -> Result<WaveOperatorResult> {
    wave_operator_at(prop, free, None, g, &default_checkpoints(horizon), sign)
}

/// Modified wave operator `e^{iTH} J e^{-iTH_0} g` at `T/4, T/2, T`.
pub fn modified_wave_operator(
    prop: &Propagator,
    free: &Propagator,
    j: &Identification,
    g: &GridState,
    horizon: f64,
    sign: Sign,
) -> Result<WaveOperatorResult> {
    wave_operator_at(prop, free, Some(j), g, &default_checkpoints(horizon), sign)
}

/// Smooth energy window `(erf((E - lo)/edge) - erf((E - hi)/edge)) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
    pub edge: f64,
}

/// `|chi(H) W(T) g - W(T) chi(H_0) g|`.
pub fn intertwining_defect(
    prop: &Propagator,
    free: &Propagator,
    j: Option<&Identification>,
    g: &GridState,
    horizon: f64,
    sign: Sign,
    window: EnergyWindow,
) -> Result<f64> {
    let t = sign.factor() * horizon;
    let wg = wave_map(prop, free, j, g, t)?;
    let left = prop.window_apply(&wg, window.lo, window.hi, window.edge)?;
    let chi_g = free.window_apply(g, window.lo, window.hi, window.edge)?;
    let right = wave_map(prop, free, j, &chi_g, t)?;
    left.distance(&right)
}

/// Inverse wave map at `T` followed by the forward map at `2T`:
/// `g_T = e^{iTH_0} J^{-1} e^{-iTH} f` and the defect
/// `|e^{-2iTH} f - J e^{-2iTH_0} g_T|`. Vanishes when `f` has a free
/// asymptote reached by time `T`; stays of order `|f|` for bound states.
pub fn completeness_defect(
    prop: &Propagator,
    free: &Propagator,
    j: Option<&Identification>,
    f: &GridState,
    horizon: f64,
    sign: Sign,
    tol: f64,
) -> Result<f64> {
    check_pair(prop, free)?;
    let t = sign.factor() * horizon;
    let ft = prop.propagate(f, t)?;
    let back = match j {
        Some(j) => j.inverse(&ft, tol)?,
        None => ft.clone(),
    };
    let g = free.kinetic_evolve(&back, -t)?;
    let target = prop.propagate(&ft, t)?;
    let moved = free.kinetic_evolve(&g, 2.0 * t)?;
    let moved = match j {
        Some(j) => j.apply(&moved)?,
        None => moved,
    };
    target.distance(&moved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::project_out;
    use crate::potentials::PairPotential;
    use crate::spectral::Grid;
    use crate::C64;

    fn packet(grid: &Grid, x0: f64, k0: f64, s: f64) -> GridState {
        GridState::from_fn(grid, |x| C64::from_polar((-(x[0] - x0).powi(2) / (4.0 * s * s)).exp(), k0 * x[0]))
            .normalized()
            .unwrap()
    }

    fn setup(strength: f64) -> (Propagator, Propagator, GridState) {
        let grid = Grid::new(1, 1024, 160.0, 1.0).unwrap();
        let v = PairPotential::gaussian(strength, 1.0);
        let prop = Propagator::new(&grid, &[1.0], |x| v.at(x), 0.01).unwrap();
        let free = Propagator::free(&grid, &[1.0], 0.01).unwrap();
        let g = packet(&grid, 0.0, 2.0, 2.0);
        (prop, free, g)
    }

    #[test]
    fn free_case_is_trivial() {
        let (_, free, g) = setup(0.0);
        let w = cook_wave_operator(&free, &free, &g, 8.0, Sign::Plus).unwrap();
        assert!(w.state.distance(&g).unwrap() < 1e-10);
        let win = EnergyWindow { lo: 1.0, hi: 3.0, edge: 0.3 };
        assert!(intertwining_defect(&free, &free, None, &g, 8.0, Sign::Plus, win).unwrap() < 1e-10);
        assert!(completeness_defect(&free, &free, None, &g, 8.0, Sign::Minus, 1e-10).unwrap() < 1e-10);
    }

    #[test]
    fn gaussian_well_converges() {
        let (prop, free, g) = setup(-1.0);
        let w = wave_operator_at(&prop, &free, None, &g, &[5.0, 10.0, 20.0, 40.0], Sign::Plus).unwrap();
        assert!(w.tail_decreasing(), "{:?}", w.tails.values);
        assert!(w.isometry_defect < 1e-6);
        let bound = prop.bound_states(4, 0.0, 7).unwrap();
        assert!(!bound.is_empty());
        let f = project_out(&packet(&prop.grid().clone(), -20.0, 2.0, 2.0), &bound).unwrap();
        let defect = completeness_defect(&prop, &free, None, &f, 40.0, Sign::Plus, 1e-10).unwrap();
        assert!(defect < 1e-2 * f.norm(), "{defect}");
        let b = &bound[0].state;
        assert!(completeness_defect(&prop, &free, None, b, 40.0, Sign::Plus, 1e-10).unwrap() > 0.5 * b.norm());
    }
}
