use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::linalg::{spectral_norm, symmetric_eigen};

/// A subsystem `L` coupled to an exterior `E` on `C^dimL (x) C^dimE`.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub h_l: DMatrix<f64>,
    pub h_e: DMatrix<f64>,
    pub interaction: DMatrix<f64>,
}

/// Result of [`local_motion_witness`].
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    /// `||(1 - P_L) P||`.
    pub witness: f64,
    /// `||[P_L, P]||`.
    pub commutator: f64,
    /// Dimension of the lowest eigenspace of the total Hamiltonian.
    pub ground_multiplicity: usize,
    /// True when the lowest eigenvalue is degenerate.
    pub degenerate: bool,
    /// `H_L` eigenvalue whose eigenspace defines `P_L`.
    pub subsystem_energy: f64,
}

impl FiniteModel {
    pub fn new(h_l: DMatrix<f64>, h_e: DMatrix<f64>, interaction: DMatrix<f64>) -> Result<Self> {
        let (dl, de) = (h_l.nrows(), h_e.nrows());
        if !h_l.is_square() || !h_e.is_square() || dl == 0 || de == 0 {
            return Err(domain("subsystem Hamiltonians must be nonempty square matrices"));
        }
        if dl > 16 || de > 16 {
            return Err(domain("subsystem dimensions are limited to 16"));
        }
        if interaction.nrows() != dl * de || interaction.ncols() != dl * de {
            return Err(domain("interaction must act on the tensor product"));
        }
        for m in [&h_l, &h_e, &interaction] {
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(domain("matrices must be symmetric"));
            }
        }
        Ok(Self { h_l, h_e, interaction })
    }

    /// `H_L (x) 1 + 1 (x) H_E + I`.
    pub fn total(&self) -> DMatrix<f64> {
        let il = DMatrix::identity(self.h_l.nrows(), self.h_l.nrows());
        let ie = DMatrix::identity(self.h_e.nrows(), self.h_e.nrows());
        self.h_l.kronecker(&ie) + il.kronecker(&self.h_e) + &self.interaction
    }
}

fn clusters(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// `||(1 - P_L) P||` with `P` the lowest eigenprojection of the total
/// Hamiltonian and `P_L` the eigenprojection of `H_L (x) 1` carrying the
/// largest share of `P`. The value vanishes exactly when the ground
/// space sits inside one `H_L` eigenspace.
pub fn local_motion_witness(model: &FiniteModel) -> Result<WitnessReport> {
    const TOL: f64 = 1e-9;
    let h = model.total();
    let n = h.nrows();
    let scale = 1.0 + h.amax();
    let e = symmetric_eigen(&h);
    let ground = clusters(&e.values, TOL * scale)[0];
    let g = e.vectors.columns(ground.0, ground.1 - ground.0).into_owned();
    let p = &g * g.transpose();

    let el = symmetric_eigen(&model.h_l);
    let de = model.h_e.nrows();
    let ie = DMatrix::<f64>::identity(de, de);
    let mut best: Option<(f64, f64, DMatrix<f64>)> = None;
    for (a, b) in clusters(&el.values, TOL * (1.0 + model.h_l.amax())) {
        let u = el.vectors.columns(a, b - a).into_owned();
        let pl = (&u * u.transpose()).kronecker(&ie);
        let weight = (&pl * &g).norm();
        if best.as_ref().is_none_or(|(w, _, _)| weight > *w) {
            best = Some((weight, el.values[a], pl));
        }
    }
    let (_, energy, pl) = best.expect("H_L has at least one eigenvalue");
    let id = DMatrix::<f64>::identity(n, n);
    let witness = spectral_norm(&((id - &pl) * &p));
    let commutator = spectral_norm(&(&pl * &p - &p * &pl));
    Ok(WitnessReport {
        witness,
        commutator,
        ground_multiplicity: ground.1 - ground.0,
        degenerate: ground.1 - ground.0 > 1,
        subsystem_energy: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx_sx(eps: f64) -> DMatrix<f64> {
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        sx.kronecker(&sx) * eps
    }

    fn model(i: DMatrix<f64>) -> FiniteModel {
        FiniteModel::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![0.0, 1.0])),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![0.0, 2.0])),
            i,
        )
        .unwrap()
    }

    #[test]
    fn constant_interaction_decouples() {
        let r = local_motion_witness(&model(DMatrix::identity(4, 4) * 0.7)).unwrap();
        assert!(r.witness < 1e-12 && r.commutator < 1e-12);
    }

    #[test]
    fn coupled_model_matches_closed_form() {
        // ground state of the block [[0, e], [e, 3]] on span{|00>, |11>}
        let eps = 0.1f64;
        let lam = 1.5 - (2.25 + eps * eps).sqrt();
        let b = lam / eps;
        let want = b.abs() / (1.0 + b * b).sqrt();
        let r = local_motion_witness(&model(sx_sx(eps))).unwrap();
        assert!((r.witness - want).abs() < 1e-12, "{} vs {want}", r.witness);
        assert!(!r.degenerate);
    }

    #[test]
    fn rejects_bad_shapes() {
        let h = DMatrix::identity(2, 2);
        assert!(FiniteModel::new(h.clone(), h.clone(), DMatrix::identity(3, 3)).is_err());
        assert!(FiniteModel::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), h, DMatrix::identity(4, 4)).is_err());
    }
}
