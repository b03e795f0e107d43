use super::*;
use crate::models::build_default;
use crate::state::distance;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn run(name: &str, tau: f64) -> (crate::models::ModelSpec, DiscreteTrajectory) {
    let spec = build_default(name).unwrap();
    let grid = TimeGrid::new(1.0, tau, spec.energy.constants().tau_o).unwrap();
    let traj = solve(spec.energy.as_ref(), &spec.dissipation, &spec.default_u0, &grid, &opts()).unwrap();
    (spec, traj)
}

fn step_objective(spec: &crate::models::ModelSpec, prev: f64, t: f64, tau: f64, u: f64) -> f64 {
    let v = (u - prev) / tau;
    tau * spec.dissipation.eval(Some(&[prev]), &[v]).unwrap() + spec.energy.value(t, &[u]).unwrap()
}

#[test]
fn grid_rounds_and_rejects() {
    let g = TimeGrid::new(1.0, 0.1, None).unwrap();
    assert_eq!(g.steps(), 10);
    assert_eq!(g.nodes().len(), 11);
    assert_eq!(TimeGrid::new(1.0, 0.3, None).unwrap().steps(), 4);
    assert!(TimeGrid::new(1.0, -0.1, None).is_err());
    assert!(TimeGrid::new(0.0, 0.1, None).is_err());
    assert!(TimeGrid::new(1.0, 1.0, Some(1.0)).is_err());
    assert_eq!(g.node_index(0.3), Some(3));
    assert_eq!(g.node_index(0.35), None);
    assert_eq!(g.interval_of(0.0).unwrap(), 1);
    assert_eq!(g.interval_of(0.3).unwrap(), 3);
    assert_eq!(g.interval_of(0.31).unwrap(), 4);
    assert!(g.interval_of(1.5).is_err());
}

#[test]
fn quadratic_first_step_closed_form() {
    let spec = build_default("QuadraticBenchmark").unwrap();
    let out = incremental_step(spec.energy.as_ref(), &spec.dissipation, &[0.0], 0.1, 0.1, &opts()).unwrap();
    // (U − 0)/τ + (U − 1) = 0
    let exact = 0.1 / 1.1;
    assert!((out.state[0] - exact).abs() < 1e-10, "{}", out.state[0]);
    assert!((out.multiplier[0] - (out.state[0] - 1.0)).abs() < 1e-12);
    assert!(out.gap <= 1e-10);
    assert!(out.decrement >= 0.0);
}

#[test]
fn absolute_first_step_takes_lower_branch() {
    let spec = build_default("AbsoluteMarginal").unwrap();
    let (alpha, beta) = (0.5, 0.25);
    let tau = 1.0 / 128.0;
    let out = incremental_step(spec.energy.as_ref(), &spec.dissipation, &[0.0], tau, tau, &opts()).unwrap();
    assert!((out.state[0] + alpha * tau).abs() < 1e-12, "{}", out.state[0]);
    assert_eq!(out.multiplier[0], alpha);
    assert!(out.gap <= 1e-10);

    let lower = alpha * tau * (-alpha / 2.0 - beta);
    let upper = alpha * tau * (beta - alpha / 2.0);
    assert!(lower < upper);
    let j = |u: f64| step_objective(&spec, 0.0, tau, tau, u) - 2.0;
    assert!((j(-alpha * tau) - lower).abs() < 1e-15);
    assert!((j(alpha * tau) - upper).abs() < 1e-15);

    // exhaustive grid at spacing 1e-4 τ
    let h = 1e-4 * tau;
    let (mut best_u, mut best) = (0.0, f64::INFINITY);
    for k in -20_000..=20_000 {
        let u = k as f64 * h;
        let v = j(u);
        if v < best {
            best = v;
            best_u = u;
        }
    }
    assert!((best_u - out.state[0]).abs() <= h);
    assert!(out.objective - 2.0 <= best + 1e-15);
}

#[test]
fn stationary_point_is_kept() {
    let spec = build_default("QuadraticBenchmark").unwrap();
    let out = incremental_step(spec.energy.as_ref(), &spec.dissipation, &[1.0], 0.5, 0.1, &opts()).unwrap();
    assert_eq!(out.state[0], 1.0);
    assert_eq!(out.multiplier[0], 0.0);
    assert_eq!(out.gap, 0.0);

    let spec = build_default("StateWeightedToy").unwrap();
    let out = incremental_step(spec.energy.as_ref(), &spec.dissipation, &[1.0, 1.0], 0.5, 0.1, &opts()).unwrap();
    assert_eq!(out.state.as_slice(), &[1.0, 1.0]);
    assert_eq!(out.gap, 0.0);
}

#[test]
fn step_rejects_bad_input() {
    let spec = build_default("QuadraticBenchmark").unwrap();
    let e = spec.energy.as_ref();
    assert!(matches!(incremental_step(e, &spec.dissipation, &[0.0], 0.1, 0.0, &opts()), Err(Error::InvalidGrid(_))));
    assert!(matches!(
        incremental_step(e, &spec.dissipation, &[0.0, 0.0], 0.1, 0.1, &opts()),
        Err(Error::DimensionMismatch { .. })
    ));
    let spec = build_default("AllenCahn1D").unwrap();
    let u = vec![0.0; spec.dim];
    assert!(matches!(
        incremental_step(spec.energy.as_ref(), &spec.dissipation, &u, 1.0, 1.0, &opts()),
        Err(Error::InvalidGrid(_))
    ));
}

#[test]
fn quadratic_solve_tracks_exact_solution() {
    let (spec, traj) = run("QuadraticBenchmark", 1.0 / 128.0);
    let exact = 1.0 - (-1.0f64).exp();
    let last = traj.states[traj.steps()][0];
    assert!((last - exact).abs() <= 5e-3, "{last} vs {exact}");
    // implicit Euler of u' = 1 − u: U_n = 1 − (1 + τ)^{-n}
    let tau = traj.grid.tau();
    for (n, u) in traj.states.iter().enumerate() {
        let discrete = 1.0 - (1.0 + tau).powi(-(n as i32));
        assert!((u[0] - discrete).abs() < 1e-9, "n={n}: {} vs {discrete}", u[0]);
    }
    assert!(traj.gaps.iter().all(|&g| g <= 1e-8));
    assert!(traj.decrements.iter().all(|&d| d >= -1e-12));
    assert_eq!(spec.dim, 1);
}

#[test]
fn absolute_solve_is_exact_recursion() {
    let (_, traj) = run("AbsoluteMarginal", 1.0 / 128.0);
    let tau = traj.grid.tau();
    for n in 0..=traj.steps() {
        let target = -0.5 * traj.time(n);
        assert!((traj.states[n][0] - target).abs() <= 1e-10, "n={n}");
        assert!((traj.states[n][0] - target).abs() <= 0.5 * tau);
    }
    assert!(traj.multipliers[1..].iter().all(|x| x[0] == 0.5));
}

#[test]
fn frozen_allen_cahn_energy_nonincreasing() {
    let (_, traj) = run("AllenCahn1D", 1.0 / 64.0);
    for w in traj.energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "{} > {}", w[1], w[0]);
    }
}

#[test]
fn solve_is_deterministic() {
    let (_, a) = run("StateWeightedToy", 1.0 / 32.0);
    let (_, b) = run("StateWeightedToy", 1.0 / 32.0);
    assert_eq!(a, b);
}

#[test]
fn solve_failure_for_wrong_dimension() {
    let spec = build_default("QuadraticBenchmark").unwrap();
    let grid = TimeGrid::new(1.0, 0.1, None).unwrap();
    let u0 = StateVector::new(vec![0.0, 0.0]).unwrap();
    let err = solve(spec.energy.as_ref(), &spec.dissipation, &u0, &grid, &opts()).unwrap_err();
    assert_eq!(err.step, 0);
    assert!(err.partial.is_empty());
}

#[test]
fn rebuild_recovers_records() {
    let (spec, traj) = run("PhaseField1D", 1.0 / 16.0);
    let back = DiscreteTrajectory::rebuild(
        spec.energy.as_ref(),
        &spec.dissipation,
        traj.grid,
        traj.states.clone(),
        traj.multipliers.clone(),
    )
    .unwrap();
    assert_eq!(back.energies, traj.energies);
    for (a, b) in back.gaps.iter().zip(&traj.gaps) {
        assert!((a - b).abs() < 1e-14);
    }
    for (a, b) in back.decrements.iter().zip(&traj.decrements) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn interpolants_agree_at_nodes() {
    let (_, traj) = run("QuadraticBenchmark", 0.125);
    let it = traj.interpolants();
    let tau = traj.grid.tau();
    for n in 0..=traj.steps() {
        let t = traj.time(n);
        assert_eq!(it.linear(t).unwrap(), traj.states[n]);
        assert_eq!(it.left_continuous(t).unwrap(), traj.states[n]);
        assert_eq!(it.right_continuous(t).unwrap(), traj.states[n]);
    }
    for n in 1..=traj.steps() {
        let mid = traj.time(n) - 0.5 * tau;
        assert_eq!(it.left_continuous(mid).unwrap(), traj.states[n]);
        assert_eq!(it.right_continuous(mid).unwrap(), traj.states[n - 1]);
        let q = traj.rate(n);
        for s in [0.1, 0.5, 0.9] {
            let d = it.derivative(traj.time(n - 1) + s * tau).unwrap();
            assert_eq!(d.as_slice(), q.as_slice());
        }
        let lin = it.linear(mid).unwrap()[0];
        assert!((lin - 0.5 * (traj.states[n][0] + traj.states[n - 1][0])).abs() < 1e-15);
    }
    assert!(it.linear(-0.1).is_err());
    assert!(it.linear(1.1).is_err());
}

#[test]
fn interpolant_jumps_shrink_with_tau() {
    let jumps: Vec<f64> =
        [0.1, 0.05, 0.025].iter().map(|&tau| run("QuadraticBenchmark", tau).1.interpolants().max_jump()).collect();
    assert!(jumps[0] > jumps[1] && jumps[1] > jumps[2], "{jumps:?}");
    let (_, traj) = run("QuadraticBenchmark", 0.1);
    let direct = traj.states.windows(2).map(|w| (w[1][0] - w[0][0]).abs()).fold(0.0, f64::max);
    assert_eq!(traj.interpolants().max_jump(), direct);
}

#[test]
fn de_giorgi_at_nodes_and_midpoints() {
    let (spec, traj) = run("QuadraticBenchmark", 0.125);
    let (e, psi) = (spec.energy.as_ref(), &spec.dissipation);
    let tau = traj.grid.tau();
    let at_node = de_giorgi_interpolant(e, psi, &traj, traj.time(3), &opts()).unwrap();
    assert_eq!(at_node.n, 3);
    assert_eq!(at_node.r, tau);
    assert_eq!(at_node.state, traj.states[3]);
    assert_eq!(at_node.multiplier, traj.multipliers[3]);

    let n = 4;
    let prev = traj.states[n - 1][0];
    let mut last = f64::INFINITY;
    for r in [tau / 2.0, tau / 4.0, tau / 8.0] {
        let s = de_giorgi_interpolant(e, psi, &traj, traj.time(n - 1) + r, &opts()).unwrap();
        assert_eq!(s.n, n);
        assert!((s.r - r).abs() < 1e-15);
        // (U − p)/r + (U − 1) = 0
        let closed = (prev + r) / (1.0 + r);
        assert!((s.state[0] - closed).abs() < 1e-8, "r={r}");
        let d = distance(&s.state, &traj.states[n - 1]);
        assert!(d < last);
        last = d;
    }
    assert!(de_giorgi_interpolant(e, psi, &traj, 0.0, &opts()).is_err());
    assert!(de_giorgi_interpolant(e, psi, &traj, 1.5, &opts()).is_err());
}

#[test]
fn node_interval_and_global_estimate() {
    let (spec, traj) = run("QuadraticBenchmark", 0.0625);
    let d = node_interval_inequality(spec.energy.as_ref(), &spec.dissipation, &traj, &opts()).unwrap();
    assert_eq!(d.len(), traj.steps());
    let budget = 1e-6 * (1.0 + traj.energies[0]);
    for x in &d {
        assert!(x.worst <= budget, "{x:?}");
        assert!(x.at_node <= x.worst);
    }
    assert!(global_estimate_defect(&d, budget) <= 0.0);
}

#[test]
fn global_estimate_is_max_subarray() {
    let mk = |v: &[f64]| -> Vec<IntervalDefect> {
        v.iter().enumerate().map(|(i, &x)| IntervalDefect { n: i + 1, worst: x, at_node: x }).collect()
    };
    assert_eq!(global_estimate_defect(&mk(&[-1.0, 2.0, -0.5, 3.0, -10.0]), 0.0), 4.5);
    assert_eq!(global_estimate_defect(&mk(&[-1.0, -2.0]), 0.0), -1.0);
    assert_eq!(global_estimate_defect(&mk(&[1.0, 1.0, 1.0]), 1.0), 0.0);
}
