use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsnhole::layout::{
    build_start_area, decay_stiffness, init_layout, run_kk_ms_ds, select_start_node, LayoutParams,
    Schedule, SpringModel, StepWorkspace,
};
use wsnhole::topology::{generate_topology, GeneratorConfig};

mod common;

fn params_with(step_scale: f64, move_fraction: f64) -> LayoutParams {
    LayoutParams {
        step_scale,
        move_fraction,
        ..LayoutParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With `step_scale ≤ 1` no step may raise the working-area energy,
    /// however many nodes move together.
    #[test]
    fn steps_never_raise_energy(
        n in 10usize..50,
        p in 0.08f64..0.4,
        seed in any::<u64>(),
        step_scale in 0.05f64..=1.0,
        move_fraction in 0.01f64..=1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_topology(&mut rng, n, p);
        let params = params_with(step_scale, move_fraction).resolved(n);
        let hops = t.hop_matrix();
        let model = SpringModel::new(&hops, params.spring_constant, params.edge_length_for(n));
        let mut state = init_layout(&t, &params, seed);
        state.in_working_set.fill(true);
        let mut ws = StepWorkspace::new(&model, &state);
        let mut energy = model.energy(&state.positions, &state.in_working_set);
        for _ in 0..200 {
            ws.step(&model, &mut state, &params);
            let next = model.energy(&state.positions, &state.in_working_set);
            prop_assert!(next <= energy * (1.0 + 1e-12) + 1e-15, "{} -> {}", energy, next);
            energy = next;
        }
    }

    #[test]
    fn incremental_gradients_track_fresh_ones(n in 5usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_topology(&mut rng, n, 0.2);
        let params = LayoutParams::default().resolved(n);
        let hops = t.hop_matrix();
        let model = SpringModel::new(&hops, params.spring_constant, params.edge_length_for(n));
        let mut state = init_layout(&t, &params, seed);
        state.in_working_set.fill(true);
        let mut ws = StepWorkspace::new(&model, &state);
        for _ in 0..100 {
            ws.step(&model, &mut state, &params);
        }
        for v in 0..n {
            let fresh = model.gradient(&state.positions, &state.in_working_set, v);
            prop_assert!((ws.gradient(v) - fresh).norm() <= 1e-9 * (1.0 + fresh.norm()));
        }
    }

    #[test]
    fn decay_is_monotone_and_nonnegative(
        m in 0.0f64..10.0,
        z in 0.0f64..5.0,
        p in 0.01f64..0.99,
        t in 0u32..200,
    ) {
        let next = decay_stiffness(m, z, p, t);
        prop_assert!(next <= m);
        prop_assert!(next >= 0.0);
        // Later selections take smaller bites.
        let a = m - decay_stiffness(m, z, p, t);
        let b = m - decay_stiffness(m, z, p, t + 1);
        prop_assert!(b <= a + 1e-15);
    }

    #[test]
    fn start_area_is_the_two_hop_ball(n in 3usize..40, p in 0.05f64..0.5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_topology(&mut rng, n, p);
        let s = select_start_node(&t).unwrap();
        prop_assert!((0..n).all(|v| t.degree(v) <= t.degree(s)));
        let mut state = init_layout(&t, &LayoutParams::default(), seed);
        build_start_area(&t, &mut state, s);
        let hops = common::bfs_hops(&t);
        for v in 0..n {
            prop_assert_eq!(state.in_working_set[v], hops[s][v].is_some_and(|h| h <= 2));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let (t, _) = generate_topology(&GeneratorConfig::new(150, 6.0, 4)).unwrap();
    let params = LayoutParams::default();
    let schedule = Schedule::Iterations(vec![100, 500]);
    let a = run_kk_ms_ds(&t, &params, 7, &schedule).unwrap();
    let b = run_kk_ms_ds(&t, &params, 7, &schedule).unwrap();
    assert_eq!(a.termination, b.termination);
    assert_eq!(a.snapshots.len(), b.snapshots.len());
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(x.iteration, y.iteration);
        assert_eq!(x.state, y.state);
    }
    let c = run_kk_ms_ds(&t, &params, 8, &schedule).unwrap();
    assert_ne!(a.final_state().positions, c.final_state().positions);
}

#[test]
fn generated_topology_converges_with_regular_edges() {
    let (t, _) = generate_topology(&GeneratorConfig::new(200, 6.0, 2)).unwrap();
    let run = run_kk_ms_ds(&t, &LayoutParams::default(), 2, &Schedule::default()).unwrap();
    assert!(run.converged(), "{:?}", run.termination);
    let cv = common::edge_length_cv(&t, &run.final_state().positions);
    assert!(cv < 0.5, "edge-length spread {cv}");
    // Snapshots are in iteration order and end at the final state.
    let its: Vec<u64> = run.snapshots.iter().map(|s| s.iteration).collect();
    assert!(its.windows(2).all(|w| w[0] < w[1]), "{its:?}");
}

#[test]
fn invalid_parameters_are_rejected() {
    let t = common::cycle(6);
    for bad in [
        params_with(0.0, 0.05),
        params_with(2.5, 0.05),
        params_with(0.9, 0.0),
        params_with(0.9, 1.5),
        LayoutParams {
            decay_rate: 1.0,
            ..LayoutParams::default()
        },
        LayoutParams {
            epsilon: -1.0,
            ..LayoutParams::default()
        },
    ] {
        assert!(run_kk_ms_ds(&t, &bad, 1, &Schedule::default()).is_err(), "{bad:?}");
    }
}
