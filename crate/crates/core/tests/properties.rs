use ising_lab::continuum::{lattice_index, susceptibility_nn, ScalingParams};
use ising_lab::exec::stream_rng;
use ising_lab::inequalities::{check_gks, CheckStatus, GksVariant};
use ising_lab::ising::{
    expectation_exact, nn_correlation_closed, pair_interaction, InteractionMap, Lattice, PairCoupling,
    TransferChain, TwoPoint,
};
use ising_lab::jump::{free_susceptibility, moment_closed, sample_path, JumpPath};
use ising_lab::quadrature::{integrate, integrate_with_breaks, Tolerance};
use ising_lab::Kernel;
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.01..2.0f64, 0.1..5.0f64).prop_map(|(a, b)| Kernel::exponential(a, b).unwrap()),
        (0.01..1.0f64, 2.1..5.0f64).prop_map(|(c, alpha)| Kernel::power_law_tail(c, alpha, 1.0).unwrap()),
        (0.01..1.0f64, 0.05..3.0f64).prop_map(|(h, w)| Kernel::compact_bump(h, w).unwrap()),
    ]
}

proptest! {
    #[test]
    fn lattice_index_brackets_time(t in -50.0..50.0f64, delta in 1e-3..1.0f64) {
        let i = lattice_index(t, delta) as f64;
        prop_assert!((i - 0.5) * delta <= t + 1e-12 * t.abs().max(1.0));
        prop_assert!(t < (i + 0.5) * delta + 1e-12 * t.abs().max(1.0));
    }

    #[test]
    fn path_exponent_is_bounded_by_square_integral(
        kernel in kernel_strategy(),
        horizon in 0.1..3.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = stream_rng(seed, 0);
        let path = sample_path(horizon, 1.0, &mut rng).unwrap();
        let bound = kernel.square_integral(horizon).unwrap();
        let value = path.interaction_double_integral(&kernel).unwrap();
        prop_assert!(value.abs() <= bound * (1.0 + 1e-9));
        let flipped = path.mirrored().interaction_double_integral(&kernel).unwrap();
        prop_assert!((flipped - value).abs() <= 1e-9 * bound);
    }

    #[test]
    fn gks_variants_hold_on_random_pair_couplings(
        w in prop::collection::vec(0.0..2.0f64, 1..4),
        a in prop::collection::btree_set(-3i64..=3, 1..4),
        b in prop::collection::btree_set(-3i64..=3, 1..3),
    ) {
        let j = pair_interaction(&PairCoupling::new(w).unwrap(), Lattice::new(3)).unwrap();
        let a: Vec<i64> = a.into_iter().collect();
        let b: Vec<i64> = b.into_iter().collect();
        for v in GksVariant::ALL {
            let r = check_gks(&j, &a, &b, v).unwrap();
            prop_assert_ne!(r.status, CheckStatus::Failed, "{}", r.name);
        }
    }

    #[test]
    fn transfer_matrix_agrees_with_enumeration(
        w in prop::collection::vec(0.0..1.5f64, 1..5),
        i in -4i64..=4,
        j in -4i64..=4,
    ) {
        let w = PairCoupling::new(w).unwrap();
        let lattice = Lattice::new(4);
        let exact = expectation_exact(&pair_interaction(&w, lattice).unwrap(), &[i, j]).unwrap();
        let chain = TransferChain::new(&w, lattice).unwrap();
        prop_assert!((chain.two_point(i, j) - exact).abs() < 1e-10);
    }
}

#[test]
fn nearest_neighbour_closed_form_matches_enumeration() {
    for coupling in [0.0, 0.3, 1.0, 2.5] {
        let j = InteractionMap::nearest_neighbor(coupling, Lattice::new(4)).unwrap();
        for sites in [vec![-4, 4], vec![-2, 0, 1, 3], vec![0, 2, 2, 3]] {
            let closed = nn_correlation_closed(coupling, &sites).unwrap();
            let exact = expectation_exact(&j, &sites).unwrap();
            assert!((closed - exact).abs() < 1e-12, "{coupling} {sites:?}");
        }
    }
}

#[test]
fn free_susceptibility_is_the_covariance_integral() {
    let tol = Tolerance::default();
    for (horizon, rate) in [(0.5, 1.0), (2.0, 1.0), (3.0, 0.25)] {
        let inner = |t: f64| {
            integrate_with_breaks(|s| (-2.0 * rate * (t - s).abs()).exp(), -horizon, horizon, &[t], tol)
                .unwrap()
                .value
        };
        let double = integrate(inner, -horizon, horizon, tol).unwrap().value;
        let chi = double / horizon;
        assert!((free_susceptibility(horizon, rate) - chi).abs() < 1e-10);
    }
}

#[test]
fn bare_chain_susceptibility_approaches_jump_process() {
    let horizon = 1.5;
    let target = free_susceptibility(horizon, 1.0);
    let gaps: Vec<f64> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&d| (susceptibility_nn(&ScalingParams::new(d, horizon).unwrap()) - target).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 5e-3);
}

#[test]
fn closed_moment_matches_path_average() {
    // two-point function of the free process at unit intensity
    let times = [-0.4, 0.35];
    let mut rng = stream_rng(9, 0);
    let n = 200_000;
    let sum: f64 = (0..n)
        .map(|_| {
            let p: JumpPath = sample_path(1.0, 1.0, &mut rng).unwrap();
            f64::from(p.value_at(times[0]) * p.value_at(times[1]))
        })
        .sum();
    let mean = sum / n as f64;
    let exact = moment_closed(&times).unwrap();
    let se = ((1.0 - exact * exact) / n as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
}
