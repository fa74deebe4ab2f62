use super::*;
use crate::rheology::RheologyParams;
use proptest::prelude::*;

fn beads() -> RheologyParams {
    RheologyParams::new(0.48, 0.74, 0.279, 7e-4, 2500.0, 0.62).unwrap()
}

fn flat_state(nx: usize, layers: usize, h: f64) -> GridState {
    let mut s = GridState::new(nx, 0.0, 0.01, layers).unwrap();
    s.h.fill(h);
    s
}

fn transport_only(state: &mut GridState, boundary: BoundaryPair, steps: usize, cfl: f64) {
    let env = Environment::new(0.0).unwrap();
    let p = LayerPartition::uniform(state.layers()).unwrap();
    let mut ws = TransportWorkspace::default();
    let mut transfer = Vec::new();
    for _ in 0..steps {
        let dt = stable_dt(state, &env, cfl, f64::INFINITY);
        hyperbolic_step(state, &env, &p, boundary, dt, &mut ws, &mut transfer).unwrap();
        state.t += dt;
    }
}

const WALLS: BoundaryPair = BoundaryPair {
    left: Boundary::Wall,
    right: Boundary::Wall,
};

#[test]
fn stable_dt_examples() {
    let env = Environment::new(0.0).unwrap();
    let s = flat_state(10, 1, 1.0);
    let dt = stable_dt(&s, &env, 0.5, 100.0);
    assert!((dt - 0.5 * 0.01 / 9.81f64.sqrt()).abs() < 1e-15);

    let mut coarse = s.clone();
    coarse.dx = 0.02;
    assert!((stable_dt(&coarse, &env, 0.5, 100.0) - 2.0 * dt).abs() < 1e-15);

    let dry = GridState::new(5, 0.0, 0.01, 3).unwrap();
    assert_eq!(stable_dt(&dry, &env, 0.5, 2.5), 2.5);
    assert_eq!(stable_dt(&s, &env, 0.5, 1e-6), 1e-6);
}

#[test]
fn lake_at_rest_over_varying_bed() {
    let mut s = GridState::new(40, 0.0, 0.01, 3).unwrap();
    for i in 0..40 {
        let z = 0.02 * (i as f64 * 0.4).sin().abs();
        s.z_b[i] = z;
        s.h[i] = 0.1 - z;
    }
    let before = s.clone();
    transport_only(&mut s, WALLS, 2000, 0.5);
    for i in 0..40 {
        assert!((s.h[i] - before.h[i]).abs() < 1e-14);
        for &u in s.column(i) {
            assert!(u.abs() < 1e-14);
        }
    }
}

#[test]
fn uniform_flow_state_unchanged_by_transport() {
    let mut s = flat_state(20, 2, 0.3);
    for i in 0..20 {
        s.column_mut(i).copy_from_slice(&[0.4, 0.4]);
    }
    let open = BoundaryPair {
        left: Boundary::Open,
        right: Boundary::Open,
    };
    transport_only(&mut s, open, 50, 0.5);
    for i in 0..20 {
        assert!((s.h[i] - 0.3).abs() < 1e-14);
        assert!((s.column(i)[0] - 0.4).abs() < 1e-14);
    }
}

#[test]
fn transfers_vanish_for_single_layer_and_uniform_columns() {
    let env = Environment::new(0.0).unwrap();
    let p = LayerPartition::uniform(3).unwrap();
    let mut s = GridState::new(10, 0.0, 0.01, 3).unwrap();
    for i in 0..10 {
        s.h[i] = 0.1 + 0.01 * i as f64;
        s.column_mut(i).fill(0.2);
    }
    let mut ws = TransportWorkspace::default();
    let mut transfer = Vec::new();
    hyperbolic_step(&mut s, &env, &p, WALLS, 1e-4, &mut ws, &mut transfer).unwrap();
    // Equal layer velocities: every layer flux is the same, so ξ-weighted sums cancel.
    assert!(transfer.iter().all(|g| g.abs() < 1e-12));
}

fn collapse_solver(layers: usize, law: FrictionLaw, theta: f64) -> Solver {
    let config = SolverConfig {
        t_end: 0.3,
        friction: law,
        stop_at_rest: false,
        ..SolverConfig::default()
    };
    Solver::new(
        Environment::new(theta).unwrap(),
        LayerPartition::uniform(layers).unwrap(),
        beads(),
        config,
    )
    .unwrap()
}

fn small_column(layers: usize) -> GridState {
    let mut s = GridState::new(80, -0.1, 0.005, layers).unwrap();
    for i in 0..80 {
        s.h[i] = if s.x[i] < 0.0 { 0.08 } else { 0.001 };
    }
    s
}

#[test]
fn mass_is_conserved_with_walls() {
    let mut solver = collapse_solver(4, FrictionLaw::MuI, 0.3);
    let summary = solver.run(small_column(4), &mut NullSink).unwrap();
    assert!(summary.max_step_mass_drift < 1e-12);
    let m = summary.state.mass();
    assert!((m - summary.initial_mass).abs() / summary.initial_mass < 1e-9);
}

#[test]
fn runs_are_deterministic() {
    let a = collapse_solver(3, FrictionLaw::MuI, 0.2)
        .run(small_column(3), &mut NullSink)
        .unwrap();
    let b = collapse_solver(3, FrictionLaw::MuI, 0.2)
        .run(small_column(3), &mut NullSink)
        .unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn zero_end_time_returns_initial_state() {
    let mut solver = collapse_solver(2, FrictionLaw::MuI, 0.0);
    solver.config.t_end = 0.0;
    let initial = small_column(2);
    let mut sink = MemorySink::default();
    let summary = solver.run(initial.clone(), &mut sink).unwrap();
    assert_eq!(summary.steps, 0);
    assert_eq!(summary.state, initial);
    assert_eq!(sink.snapshots.len(), 1);
}

#[test]
fn resting_layer_stays_at_rest() {
    let mut solver = collapse_solver(3, FrictionLaw::MuI, 0.0);
    solver.config.stop_at_rest = true;
    let summary = solver.run(flat_state(10, 3, 0.01), &mut NullSink).unwrap();
    assert_eq!(summary.steps, solver.config.n_stop);
    assert!(summary.stop_time.unwrap() > 0.0);
    assert!(summary.state.u.iter().all(|&u| u == 0.0));
}

#[test]
fn max_steps_is_an_error() {
    let mut solver = collapse_solver(2, FrictionLaw::MuI, 0.3);
    solver.config.max_steps = 5;
    let mut sink = MemorySink::default();
    let r = solver.run(small_column(2), &mut sink);
    assert!(matches!(r, Err(Error::MaxStepsExceeded(5))));
    assert_eq!(sink.snapshots.len(), 2);
}

#[test]
fn energy_does_not_grow_on_flat_bed() {
    let mut solver = collapse_solver(5, FrictionLaw::MuI, 0.0);
    let summary = solver.run(small_column(5), &mut NullSink).unwrap();
    let e_end = solver.energy(&summary.state);
    assert!(e_end <= summary.initial_energy);
    assert!(summary.cumulative_energy_increase <= 1e-3 * summary.initial_energy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn thickness_stays_non_negative(
        h in prop::collection::vec(0.0f64..0.2, 16),
        u in prop::collection::vec(-1.0f64..1.0, 32),
        cfl in 0.1f64..1.0,
    ) {
        let mut s = GridState::new(16, 0.0, 0.01, 2).unwrap();
        s.h.copy_from_slice(&h);
        s.u.copy_from_slice(&u);
        transport_only(&mut s, WALLS, 40, cfl);
        prop_assert!(s.h.iter().all(|&x| x >= 0.0 && x.is_finite()));
        prop_assert!(s.u.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn single_layer_column_solve_matches_projection() {
    let env = Environment::new(0.2).unwrap();
    let p = LayerPartition::uniform(1).unwrap();
    let solver = collapse_solver(1, FrictionLaw::MuI, 0.2);
    for u0 in [-2.0, -0.01, 0.0, 0.003, 0.5, 3.0] {
        let mut a = GridState::new(1, 0.0, 0.01, 1).unwrap();
        a.h[0] = 0.05;
        a.u[0] = u0;
        let mut b = a.clone();
        friction_step(&mut a, &p, &env, &solver.closure(), 0.01).unwrap();
        let mut ws = ExchangeWorkspace::default();
        exchange_with_closure(&mut b, &p, &env, &solver.closure(), &[0.0, 0.0], 0.01, &mut ws).unwrap();
        assert!((a.u[0] - b.u[0]).abs() < 1e-14, "{u0}: {} vs {}", a.u[0], b.u[0]);
    }
}

#[test]
fn static_column_below_yield_stays_at_rest() {
    // tan θ < μ_s: the whole column is held by the bed.
    let mut solver = collapse_solver(10, FrictionLaw::MuI, 0.3);
    solver.config.regularization = crate::rheology::Regularization::Delta { delta: 1e-6 };
    solver.config.t_end = 1.0;
    let open = BoundaryPair {
        left: Boundary::Open,
        right: Boundary::Open,
    };
    solver.config.boundary = open;
    let summary = solver.run(flat_state(4, 10, 0.1), &mut NullSink).unwrap();
    assert!(summary.state.max_speed() < 1e-4, "{}", summary.state.max_speed());
    assert!(summary.state.column(0)[0] == 0.0);
}
