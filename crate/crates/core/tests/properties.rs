use nalgebra::DMatrix;
use proptest::prelude::*;
use scatterlab_core::coords::{refines, ClusterDecomposition, JacobiFrame};
use scatterlab_core::dynamics::{local_time_defect, position_moment, Propagator};
use scatterlab_core::manybody::{disjointness_check, sample_shell, select_constants, support_check, Partition};
use scatterlab_core::observe::{
    born_cross_section, local_motion_witness, rutherford, uncertainty_product, BornKernel, FiniteModel,
};
use scatterlab_core::spectral::{dft, free_propagate, idft, Grid, GridState};
use scatterlab_core::C64;

fn masses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2..20.0f64, 2..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobi_round_trip(m in masses(), seed in any::<u64>()) {
        let n = m.len();
        let frame = JacobiFrame::new(&m, 3).unwrap();
        let mut s = seed;
        let x: Vec<f64> = (0..(n - 1) * 3)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 20.0
            })
            .collect();
        let back = frame.to_jacobi(&frame.from_jacobi(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        // reduced masses follow 1/mu_i = 1/m_{i+1} + 1/(m_1 + ... + m_i)
        let mut acc = m[0];
        for (i, mu) in frame.reduced_masses().iter().enumerate() {
            let want = 1.0 / (1.0 / m[i + 1] + 1.0 / acc);
            prop_assert!((mu - want).abs() <= 1e-12 * want);
            acc += m[i + 1];
        }
    }

    #[test]
    fn every_decomposition_refines_the_single_cluster(n in 2usize..6) {
        let one = ClusterDecomposition::single(n);
        for b in ClusterDecomposition::all(n) {
            prop_assert!(refines(&b, &one).unwrap());
            prop_assert!(refines(&ClusterDecomposition::singletons(n), &b).unwrap());
            let count = n * (n - 1) / 2 - b.clusters().iter().map(|c| c.len() * (c.len() - 1) / 2).sum::<usize>();
            prop_assert_eq!(b.intercluster_pairs().len(), count);
        }
    }

    #[test]
    fn dft_is_unitary(re in prop::collection::vec(-1.0..1.0f64, 64), im in prop::collection::vec(-1.0..1.0f64, 64)) {
        let grid = Grid::new(1, 64, 5.0, 1.0).unwrap();
        let mut psi = GridState::from_fn(&grid, |_| C64::new(0.0, 0.0));
        for (v, (a, b)) in psi.values_mut().iter_mut().zip(re.iter().zip(&im)) {
            *v = C64::new(*a, *b);
        }
        let hat = dft(&psi);
        prop_assert!((hat.norm2() - psi.norm2()).abs() <= 1e-12 * psi.norm2());
        prop_assert!(idft(&hat).distance(&psi).unwrap() <= 1e-12 * psi.norm());
    }

    #[test]
    fn uncertainty_is_bounded_below(c in prop::collection::vec(-1.0..1.0f64, 6), w in 0.5..3.0f64) {
        let grid = Grid::new(1, 256, 20.0, 1.0).unwrap();
        let psi = GridState::from_fn(&grid, |x| {
            let x = x[0];
            let poly = c[0] + c[1] * x + c[2] * x * x + c[3] * x.powi(3);
            C64::new(poly, c[4] * x + c[5]) * (-x * x / (2.0 * w * w)).exp()
        });
        prop_assume!(psi.norm2() > 1e-6);
        let r = uncertainty_product(&psi.normalized().unwrap(), &[1.0]).unwrap();
        prop_assert!(r.product >= 0.5 - 1e-10, "{}", r.product);
    }

    #[test]
    fn free_evolution_preserves_norm(k0 in -3.0..3.0f64, t in 0.1..5.0f64, m in 0.5..4.0f64) {
        let grid = Grid::new(1, 512, 40.0, 1.0).unwrap();
        let psi = GridState::from_fn(&grid, |x| C64::from_polar((-x[0] * x[0] / 4.0).exp(), k0 * x[0])).normalized().unwrap();
        let out = free_propagate(&psi, t, m).unwrap();
        prop_assert!((out.norm2() - 1.0).abs() < 1e-12);
        let back = free_propagate(&out, -t, m).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn born_matches_rutherford_when_screening_vanishes(e in 0.5..20.0f64, theta in 0.3..3.0f64) {
        let k = BornKernel::ScreenedCoulomb { charge_product: 2.0, charge_unit: 1.0, kappa: 1e-5 };
        let born = born_cross_section(&k, e, theta, 1.0, 1.0).unwrap();
        let ruth = rutherford(2.0, 1.0, e, theta).unwrap();
        prop_assert!((born / ruth - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_interaction_gives_zero_witness(a in -2.0..2.0f64, b in 0.1..2.0f64, c in -3.0..3.0f64) {
        let hl = DMatrix::from_row_slice(2, 2, &[a, b, b, -a]);
        let he = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.5]);
        let model = FiniteModel::new(hl, he, DMatrix::identity(4, 4) * c).unwrap();
        prop_assert!(local_motion_witness(&model).unwrap().witness < 1e-12);
    }
}

#[test]
fn partition_sums_to_one_for_three_and_four_bodies() {
    for masses in [vec![1.0, 2.0, 3.0], vec![1.0, 1.5, 2.0, 2.5]] {
        let n = masses.len();
        let frame = JacobiFrame::new(&masses, 1).unwrap();
        let partition = Partition::new(select_constants(n, 1.5).unwrap(), frame).unwrap();
        let samples = sample_shell(&partition, 2000, 5);
        let report = support_check(&partition, &samples, 100).unwrap();
        assert!(report.pass(), "{report:?}");
        assert!(report.max_sum_error <= 1e-10);
        assert_eq!(disjointness_check(&partition, &samples).unwrap().overlaps, 0);
    }
}

#[test]
fn free_local_time_defect_is_closed_form() {
    let grid = Grid::new(1, 1024, 100.0, 1.0).unwrap();
    let prop = Propagator::free(&grid, &[1.0], 0.05).unwrap();
    let psi = GridState::from_fn(&grid, |x| C64::from_polar((-(x[0] - 2.0).powi(2) / 4.0).exp(), 0.5 * x[0]))
        .normalized()
        .unwrap();
    let times = [5.0, 10.0, 20.0];
    let table = local_time_defect(&prop, &psi, &times).unwrap();
    let x0 = position_moment(&[1.0], &psi);
    for (t, v) in times.iter().zip(&table.values) {
        assert!((v - x0 / t).abs() <= 1e-8 * x0 / t, "{v} {}", x0 / t);
    }
}

#[test]
fn subsystem_norm_of_a_pair_is_the_pair_norm() {
    let frame = JacobiFrame::new(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
    let x = [0.3, -1.0, 2.0, 0.5, -0.7, 1.1];
    let a = scatterlab_core::coords::subsystem_norm2(&frame, &x, &[1, 3]).unwrap();
    let b = scatterlab_core::coords::pair_norm2(&frame, &x, 1, 3).unwrap();
    assert!((a - b).abs() < 1e-12 * b);
}
