use fmo_core::correlations::{
    coherent_information_of, conditional_entropy_for_basis, quantum_discord, quantum_discord_of,
    MeasurementBasis, MeasurementOptions,
};
use fmo_core::cut::embed_full;
use fmo_core::dynamics::{time_grid, GridKind};
use fmo_core::linalg::max_abs_diff;
use fmo_core::ree::GradientMode;
use fmo_core::sampling::{random_cut_state, random_density};
use fmo_core::{
    evolve, full_ree, reduce_to_cut, relative_entropy, single_excitation_ree, BipartiteCut,
    CutState, FmoModel, FullReeOptions, InitialState, Method, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::common::{brute_force_discord_a, sample_state};

#[test]
fn qubit_discord_matches_brute_force_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let rho = random_density(&mut rng, 4);
        let found =
            quantum_discord_of(&rho, [2, 2], Side::A, &MeasurementOptions::default()).unwrap();
        let brute = brute_force_discord_a(&rho);
        assert!(
            (found.discord - brute).abs() < 1e-6,
            "{} vs {brute}",
            found.discord
        );
    }
    let rho = sample_state();
    let found = quantum_discord_of(&rho, [2, 2], Side::A, &MeasurementOptions::default()).unwrap();
    assert!((found.discord - brute_force_discord_a(&rho)).abs() < 1e-6);
}

#[test]
fn qutrit_discord_beats_random_measurements() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let cut = BipartiteCut::new(&[1, 6], &[3]).unwrap();
    let chi = random_cut_state(&mut rng, &cut);
    let opts = MeasurementOptions::default();
    let d = quantum_discord(&chi, Side::A, &opts).unwrap();
    let rho = fmo_core::DensityOperator::unlabeled(chi.support_joint()).unwrap();
    let dims = [3, 2];
    let floor = coherent_information_of(&rho, dims).unwrap();
    for _ in 0..2000 {
        let params: Vec<f64> = (0..9).map(|_| rng.random_range(-3.0..3.0)).collect();
        let basis = MeasurementBasis::from_generator(&params, 3).unwrap();
        let sampled = floor + conditional_entropy_for_basis(&rho, dims, Side::A, &basis).unwrap();
        assert!(d.discord <= sampled + 1e-9, "{} > {sampled}", d.discord);
    }
}

fn snapshot(t: f64, cut: &str) -> CutState {
    let model = FmoModel::default_model();
    let rates = model.rates(Some(77.0)).unwrap();
    let traj = evolve(
        &InitialState::Site1.state().unwrap(),
        &model.hamiltonian,
        &rates,
        &[0.0, t],
        Method::rk4(),
    )
    .unwrap();
    reduce_to_cut(&traj.states[1], &cut.parse().unwrap()).unwrap()
}

#[test]
fn full_ree_is_below_restricted_ree_on_dynamics() {
    for t in [0.01, 0.3, 3.0] {
        let chi = snapshot(t, "A=1,6;B=3");
        let restricted = single_excitation_ree(&chi).unwrap();
        let r = full_ree(&chi, &FullReeOptions::default()).unwrap();
        assert!(
            r.value >= -1e-9 && r.value <= restricted + 1e-6,
            "t={t}: {} vs {restricted}",
            r.value
        );
        let direct = relative_entropy(embed_full(&chi).density(), &r.optimal_sigma).unwrap();
        if r.optimizer_trace.floor_removed {
            assert!(
                (direct - r.value).abs() < 1e-9,
                "t={t}: {direct} vs {}",
                r.value
            );
        } else {
            assert!(direct.is_infinite() && r.value == r.optimizer_trace.floored_value);
        }
    }
}

#[test]
fn gradient_modes_reach_the_same_minimum() {
    let chi = snapshot(0.5, "A=3;B=1");
    let base = FullReeOptions {
        k: Some(6),
        starts: 2,
        ..FullReeOptions::default()
    };
    let analytic = full_ree(&chi, &base).unwrap();
    let fd = full_ree(
        &chi,
        &FullReeOptions {
            gradient: GradientMode::FiniteDifference,
            ..base
        },
    )
    .unwrap();
    assert!(
        (analytic.value - fd.value).abs() < 1e-6,
        "{} vs {}",
        analytic.value,
        fd.value
    );
}

#[test]
fn integrators_agree_at_300k() {
    let model = FmoModel::default_model();
    let rates = model.rates(Some(300.0)).unwrap();
    let grid = time_grid(GridKind::Log, 5.0, 40).unwrap();
    let rho0 = InitialState::Mixture.state().unwrap();
    let a = evolve(&rho0, &model.hamiltonian, &rates, &grid, Method::rk4()).unwrap();
    let b = evolve(&rho0, &model.hamiltonian, &rates, &grid, Method::Expm).unwrap();
    let worst = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| max_abs_diff(x.matrix(), y.matrix()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
}
