use qreset::experiment::{parse_override, run_scenario};

/// Strong coupling, no qubit loss, 0.32 μs. The reference endpoints are
/// (−0.998, −0.998, −1.000); bounds allow for 200-trajectory noise and the
/// two-level Fock cutoff.
#[test]
fn fig3b_endpoints() {
    let (cfg, table) = run_scenario("fig3b", &[]).unwrap();
    assert_eq!(cfg.sim.n_traj, 200);
    let ends = [
        table.final_value(Some(1), "sx").unwrap(),
        table.final_value(Some(2), "sy").unwrap(),
        table.final_value(Some(3), "sz").unwrap(),
    ];
    assert!(ends[0] <= -0.97 && ends[1] <= -0.97 && ends[2] <= -0.99, "{ends:?}");
    for q in 1..=3 {
        assert!(table.final_value(Some(q), "sz_rot").unwrap() <= -0.97);
    }
    let rows = table.rows();
    assert!(rows.iter().all(|r| r.solver == "trajectories" && r.stderr.is_some()));
}

#[test]
fn fig3_overrides_reach_the_run() {
    let overrides = [
        parse_override("sim.n_traj=4").unwrap(),
        parse_override("sim.t_final_us=0.02").unwrap(),
        parse_override("sim.n_samples=3").unwrap(),
    ];
    let (cfg, table) = run_scenario("fig3a", &overrides).unwrap();
    assert_eq!(cfg.sim.n_traj, 4);
    // Three qubits, four observables each, three samples.
    assert_eq!(table.len(), 3 * 4 * 3);
    // Initial (⟨σ_y¹⟩, ⟨σ_z²⟩, ⟨σ_x³⟩) = (1, 1, 1).
    let first = |q, o| table.series(Some(q), o).1[0];
    assert!((first(1, "sy") - 1.0).abs() < 1e-12);
    assert!((first(2, "sz") - 1.0).abs() < 1e-12);
    assert!((first(3, "sx") - 1.0).abs() < 1e-12);
}
