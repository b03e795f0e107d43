use dnevo_bench::standard;

#[test]
fn every_fixture_solves() {
    for (name, f) in standard() {
        let traj = f.solve();
        assert_eq!(traj.steps(), f.grid.steps(), "{name}");
        assert!(traj.gaps.iter().all(|g| *g <= 1e-8), "{name}");
    }
}
