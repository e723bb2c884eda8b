use fmo_core::correlations::{
    coherent_information, cut_entropies, mutual_information_of, quantum_discord, MeasurementOptions,
};
use fmo_core::dynamics::{time_grid, GridKind};
use fmo_core::harness::{parse_csv, to_csv, CorrelationTrace, RunConfig, TraceRow};
use fmo_core::sampling::{random_cut, random_cut_state, random_density};
use fmo_core::{
    block_decompose, delta_bar, embed_full, evolve, mutual_information, partial_trace_full,
    relative_entropy, single_excitation_ree, von_neumann_entropy, BipartiteCut, DecoherenceRates,
    FmoModel, InitialState, Method, Side,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_bounds_and_araki_lieb(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let rho = random_density(&mut rng(seed), da * db);
        let hab = von_neumann_entropy(&rho);
        let ha = von_neumann_entropy(&partial_trace_full(&rho, &[da, db], &[0]).unwrap());
        let hb = von_neumann_entropy(&partial_trace_full(&rho, &[da, db], &[1]).unwrap());
        prop_assert!(hab >= -1e-12 && hab <= ((da * db) as f64).log2() + 1e-12);
        prop_assert!(hab <= ha + hb + 1e-10);
        prop_assert!(hab >= (ha - hb).abs() - 1e-10);
        prop_assert!(mutual_information_of(&rho, [da, db]).unwrap() >= -1e-10);
    }

    #[test]
    fn klein_inequality(seed in any::<u64>(), d in 2usize..7) {
        let mut r = rng(seed);
        let (a, b) = (random_density(&mut r, d), random_density(&mut r, d));
        prop_assert!(relative_entropy(&a, &b).unwrap() >= -1e-12);
        prop_assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn cut_measures_are_ordered(seed in any::<u64>(), n_a in 1usize..3, n_b in 1usize..4) {
        let mut r = rng(seed);
        let cut = random_cut(&mut r, n_a, n_b);
        let chi = random_cut_state(&mut r, &cut);
        let opts = MeasurementOptions { starts: 8, ..MeasurementOptions::default() };
        let side = if n_a == 1 { Side::A } else { Side::B };
        let side = if chi.cut().sites(side).len() == 1 { side } else { side.other() };
        let d = quantum_discord(&chi, side, &opts).unwrap();
        let mi = mutual_information(&chi);
        prop_assert!(d.discord >= -1e-7 && d.discord <= mi + 1e-7);
        prop_assert!(single_excitation_ree(&chi).unwrap() >= -1e-12);
        let (ha, _, _) = cut_entropies(&chi);
        prop_assert!(coherent_information(&chi) <= ha + 1e-12);
    }

    #[test]
    fn block_structure_round_trips(seed in any::<u64>(), n_a in 1usize..4, n_b in 1usize..4) {
        let mut r = rng(seed);
        let cut = random_cut(&mut r, n_a, n_b);
        let chi = random_cut_state(&mut r, &cut);
        let bd = block_decompose(&chi);
        prop_assert!((bd.total_weight() - 1.0).abs() < 1e-10);
        prop_assert!(fmo_core::linalg::max_abs_diff(&bd.reassemble_matrix(), chi.matrix()) < 1e-14);
        let once = delta_bar(&chi);
        let twice = delta_bar(&once);
        prop_assert_eq!(once.matrix(), twice.matrix());
        prop_assert!((once.matrix().trace().re - 1.0).abs() < 1e-10);
        let back = embed_full(&chi).project().unwrap();
        prop_assert!(fmo_core::linalg::max_abs_diff(back.matrix(), chi.matrix()) < 1e-14);
    }

    #[test]
    fn cut_strings_round_trip(seed in any::<u64>(), n_a in 1usize..4, n_b in 1usize..4) {
        let cut = random_cut(&mut rng(seed), n_a, n_b);
        let text = cut.to_string();
        prop_assert_eq!(text.parse::<BipartiteCut>().unwrap(), cut);
    }

    #[test]
    fn csv_round_trips(values in proptest::collection::vec((0.0f64..200.0, -1e3f64..1e3, proptest::option::of(0.0f64..1.0)), 1..8)) {
        let rows = values
            .iter()
            .map(|&(t, mi, d)| TraceRow { t_ps: t, mi: Some(mi), discord: d, ..TraceRow::default() })
            .collect();
        let trace = CorrelationTrace { config: RunConfig::default(), rows };
        let back = parse_csv(&to_csv(&trace).unwrap()).unwrap();
        for (a, b) in trace.rows.iter().zip(&back.rows) {
            prop_assert!((a.t_ps - b.t_ps).abs() <= 1e-11 * a.t_ps.abs());
            prop_assert!((a.mi.unwrap() - b.mi.unwrap()).abs() <= 1e-11 * a.mi.unwrap().abs());
            prop_assert_eq!(a.discord.is_some(), b.discord.is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_physical(
        recomb in 0.0f64..0.1,
        sink in 0.0f64..2.0,
        deph in 0.0f64..300.0,
        init in 0usize..3,
    ) {
        let model = FmoModel::default_model();
        let rates = DecoherenceRates::new(recomb, sink, deph).unwrap();
        let rho0 = [InitialState::Site1, InitialState::Site6, InitialState::Mixture][init].state().unwrap();
        let grid = time_grid(GridKind::Log, 3.0, 25).unwrap();
        let traj = evolve(&rho0, &model.hamiltonian, &rates, &grid, Method::rk4()).unwrap();
        for s in &traj.states {
            prop_assert!((s.matrix().trace().re - 1.0).abs() < 1e-7);
            prop_assert!(s.density().min_eigenvalue() >= -1e-8);
            prop_assert!(fmo_core::dynamics::forbidden_coherence(s.matrix()) < 1e-8);
        }
    }
}
