use super::*;
use crate::scheme::{solve, SolverOptions, TimeGrid};

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn registry_lists_all_models() {
    let names: Vec<&str> = list_models().iter().map(|m| m.name).collect();
    assert_eq!(names, ["QuadraticBenchmark", "AbsoluteMarginal", "PhaseField1D", "AllenCahn1D", "StateWeightedToy"]);
    for name in names {
        let spec = build_default(name).unwrap();
        assert_eq!(spec.name, name);
        assert_eq!(spec.dim, spec.energy.dim());
        assert_eq!(spec.default_u0.dim(), spec.dim);
        assert!(describe(name).unwrap().starts_with(name));
    }
}

#[test]
fn describe_names_constraints() {
    let text = describe("AbsoluteMarginal").unwrap();
    assert!(text.contains("alpha > beta > 0"));
    assert!(text.contains("beta < 1"));
    assert!(text.contains("marginal, clarke"));
    assert_eq!(describe("Nope").unwrap_err(), Error::UnknownModel("Nope".into()));
}

#[test]
fn build_checks_parameters() {
    assert!(build("AbsoluteMarginal", &params(&[("alpha", 0.5), ("beta", 0.25)]), None).is_ok());
    match build("AbsoluteMarginal", &params(&[("alpha", 0.2), ("beta", 0.25)]), None) {
        Err(Error::InvalidParameter { bound, .. }) => assert!(bound.contains("alpha > beta"), "{bound}"),
        other => panic!("{other:?}"),
    }
    match build("AbsoluteMarginal", &params(&[("beta", 1.5)]), None) {
        Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "beta"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(build("Nope", &BTreeMap::new(), None), Err(Error::UnknownModel(_))));
    assert!(matches!(
        build("QuadraticBenchmark", &params(&[("gamma", 1.0)]), None),
        Err(Error::UnknownParameter { .. })
    ));
    assert!(matches!(build("QuadraticBenchmark", &params(&[("dim", 1.5)]), None), Err(Error::InvalidParameter { .. })));
    assert!(matches!(
        build("QuadraticBenchmark", &BTreeMap::new(), Some(SubdiffMode::Clarke)),
        Err(Error::UnsupportedMode { .. })
    ));
    assert!(matches!(build("PhaseField1D", &params(&[("offset", 0.5)]), None), Err(Error::InvalidParameter { .. })));
    let clarke = build("AbsoluteMarginal", &BTreeMap::new(), Some(SubdiffMode::Clarke)).unwrap();
    assert_eq!(clarke.mode, SubdiffMode::Clarke);
    assert_eq!("marginal".parse::<SubdiffMode>().unwrap(), SubdiffMode::Marginal);
    assert!("fancy".parse::<SubdiffMode>().is_err());
}

#[test]
fn allen_cahn_energy_at_zero() {
    let spec = build("AllenCahn1D", &params(&[("N", 32.0), ("rho", 1.0), ("p", 2.0)]), None).unwrap();
    assert_eq!(spec.dim, 31);
    let e = spec.energy.value(0.0, &vec![0.0; 31]).unwrap();
    // W(0) = ¼ on the 31 interior nodes, weight 1/32
    let oracle: f64 = (1..32).map(|_| 0.25 / 32.0).sum();
    assert_eq!(oracle, 0.2421875);
    assert!((e - (oracle + 1.0)).abs() < 1e-15, "{e}");
}

#[test]
fn allen_cahn_gradient_matches_differences() {
    let spec = build("AllenCahn1D", &params(&[("N", 8.0), ("load", 0.5), ("q", 3.0)]), None).unwrap();
    let u: Vec<f64> = (0..7).map(|i| 0.3 * (i as f64 * 0.9).sin() - 0.1).collect();
    let t = 0.7;
    let g = spec.energy.gradient(t, &u).unwrap().unwrap();
    let h = 1e-6;
    for i in 0..7 {
        let mut up = u.clone();
        let mut dn = u.clone();
        up[i] += h;
        dn[i] -= h;
        let fd = (spec.energy.value(t, &up).unwrap() - spec.energy.value(t, &dn).unwrap()) / (2.0 * h);
        assert!((fd - g[i]).abs() < 1e-8, "{i}: {fd} vs {}", g[i]);
    }
    let dt = 1e-6;
    let p = spec.energy.time_derivative(t, &u, &g).unwrap();
    let fd = (spec.energy.value(t + dt, &u).unwrap() - spec.energy.value(t - dt, &u).unwrap()) / (2.0 * dt);
    assert!((p - fd).abs() < 1e-8);
}

#[test]
fn allen_cahn_grid_refinement() {
    let profile = |x: f64| 0.8 * (std::f64::consts::PI * x).sin();
    let energy_at = |n: usize| {
        let ac = AllenCahn::new(n, 2.0, 0.0, 1.0).unwrap();
        let u: Vec<f64> = ac.nodes().iter().map(|&x| profile(x)).collect();
        ac.value(0.0, &u).unwrap()
    };
    let mut prev_diff = f64::INFINITY;
    for n in [16, 32, 64, 128] {
        let diff = (energy_at(2 * n) - energy_at(n)).abs();
        assert!(diff <= 1.0 / n as f64, "N={n}: {diff}");
        assert!(diff < prev_diff);
        prev_diff = diff;
    }
}

#[test]
fn double_well_values() {
    assert_eq!(double_well(0.0), 0.5);
    assert_eq!(double_well(1.0), 0.0);
    assert_eq!(double_well(-1.0), 0.0);
    assert_eq!(double_well_prime(-1.0), 0.0);
    assert_eq!(double_well_prime(1.0), 0.0);
    for k in [-0.5f64, 0.5] {
        let outer = (k.abs() - 1.0) * (k.abs() - 1.0);
        let middle = 0.5 - k * k;
        assert!((outer - middle).abs() <= 1e-15);
        let below = double_well(k - 1e-9);
        let above = double_well(k + 1e-9);
        assert!((below - above).abs() < 3e-9);
    }
    assert_eq!(2.0 * (-0.5 + 1.0), -2.0 * -0.5);
    assert_eq!(double_well_prime(-0.5), 1.0);
    assert_eq!(double_well_prime(0.5), -1.0);
    assert!((double_well_prime(-0.5 - 1e-12) - 1.0).abs() < 1e-11);
    assert!((double_well_prime(0.5 + 1e-12) + 1.0).abs() < 1e-11);
}

#[test]
fn absolute_marginal_matches_closed_form() {
    let a = AbsoluteMarginal::new(0.5, 0.25, 2.0, SubdiffMode::Marginal).unwrap();
    for i in 0..=50 {
        let t = i as f64 / 50.0;
        for j in 0..=50 {
            let u = -1.5 + 3.0 * j as f64 / 50.0;
            let closed = -0.5 * (u - 0.25 * t).abs() + 2.0;
            assert!((a.value(t, &[u]).unwrap() - closed).abs() <= 1e-12);
        }
    }
}

#[test]
fn exact_solutions() {
    let q = build("QuadraticBenchmark", &params(&[("a", 2.0), ("u0", 0.5)]), None).unwrap();
    let exact = q.exact_solution.as_ref().unwrap();
    assert_eq!(exact(0.0), vec![0.5]);
    assert!((exact(1.0)[0] - (2.0 - 1.5 * (-1.0f64).exp())).abs() < 1e-15);
    let a = build_default("AbsoluteMarginal").unwrap();
    assert_eq!((a.exact_solution.as_ref().unwrap())(0.5), vec![-0.25]);
    assert!(build_default("PhaseField1D").unwrap().exact_solution.is_none());
}

#[test]
fn unit_weight_reproduces_benchmark() {
    let toy = build("StateWeightedToy", &params(&[("amplitude", 0.0), ("u0", -0.5)]), None).unwrap();
    let bench = build("QuadraticBenchmark", &params(&[("dim", 2.0), ("u0", -0.5)]), None).unwrap();
    let grid = TimeGrid::new(1.0, 1.0 / 32.0, None).unwrap();
    let opts = SolverOptions::default();
    let a = solve(toy.energy.as_ref(), &toy.dissipation, &toy.default_u0, &grid, &opts).unwrap();
    let b = solve(bench.energy.as_ref(), &bench.dissipation, &bench.default_u0, &grid, &opts).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.multipliers, b.multipliers);
    assert_eq!(a.energies, b.energies);
}
