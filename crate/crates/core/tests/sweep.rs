use discord_witness::eigensolver::GroundStateKind;
use discord_witness::oracle::{certify_witness_sufficiency, OracleConfig};
use discord_witness::random::random_xstate;
use discord_witness::sweep::*;
use discord_witness::witness::witness_norm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_broken(workers: usize) -> SweepSpec {
    SweepSpec {
        model: ModelKind::XyBroken,
        n_spins: Some(8),
        start: Some(0.5),
        stop: Some(2.0),
        steps: Some(7),
        workers,
        ..Default::default()
    }
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run_sweep(&SweepSpec { out: Some(a.clone()), ..small_broken(2) }).unwrap();
    run_sweep(&SweepSpec { out: Some(b.clone()), ..small_broken(2) }).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn parallel_rows_equal_serial_rows() {
    let serial = run_sweep(&small_broken(1)).unwrap();
    let parallel = run_sweep(&small_broken(3)).unwrap();
    assert_eq!(serial.rows, parallel.rows);
}

#[test]
fn interrupted_sweep_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let spec = SweepSpec { out: Some(path.clone()), ..small_broken(1) };
    run_sweep(&spec).unwrap();
    let full = std::fs::read_to_string(&path).unwrap();

    // Keep the header, three rows and half of the fourth.
    let lines: Vec<&str> = full.lines().collect();
    let mut cut = lines[..5].join("\n");
    cut.push('\n');
    cut.push_str(&lines[5][..10]);
    std::fs::write(&path, cut).unwrap();

    let out = run_sweep(&spec).unwrap();
    assert_eq!(out.resumed, 3);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), full);
}

#[test]
fn resuming_a_different_spec_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    run_sweep(&SweepSpec { out: Some(path.clone()), ..small_broken(1) }).unwrap();
    let other = SweepSpec { out: Some(path), seed: 9, ..small_broken(1) };
    assert!(matches!(run_sweep(&other), Err(discord_witness::Error::Spec(_))));
}

#[test]
fn failed_points_are_recorded_and_sweep_continues() {
    // gamma above 1 makes every point fail at model construction.
    let spec = SweepSpec {
        model: ModelKind::XySymmetric,
        n_spins: Some(4),
        gamma: 1.5,
        steps: Some(3),
        workers: 1,
        ..Default::default()
    };
    let out = run_sweep(&spec).unwrap();
    assert_eq!(out.rows.len(), 3);
    assert_eq!(out.failures.len(), 3);
    assert!(out.rows.iter().all(|r| r.witness.is_none()));
}

#[test]
fn block_placement_is_immaterial() {
    let xy = SweepSpec { n_spins: Some(10), steps: Some(3), workers: 1, ..Default::default() };
    let at = SweepSpec {
        model: ModelKind::AshkinTeller,
        n_spins: Some(8),
        block: Block::Quartet,
        steps: Some(3),
        workers: 1,
        ..Default::default()
    };
    for (spec, shifted) in [(xy, Block::Custom(vec![3, 4])), (at, Block::Custom(vec![2, 3, 4, 5]))] {
        for x in [spec.grid()[1], spec.grid()[2]] {
            let info = ground_state_at(&spec, x, 0).unwrap();
            let a = witness_norm(&info.state.reduced(&spec.block.sites()).unwrap()).unwrap();
            let b = witness_norm(&info.state.reduced(&shifted.sites()).unwrap()).unwrap();
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn broken_branches_have_equal_witness() {
    let plus = small_broken(1);
    let minus = SweepSpec { ground_state: Some(GroundStateKind::BrokenMinus), ..small_broken(1) };
    for x in [1.0, 1.25, 2.0] {
        let a = evaluate_point(&plus, 0, x).unwrap().witness.unwrap();
        let b = evaluate_point(&minus, 0, x).unwrap().witness.unwrap();
        assert!((a - b).abs() <= 1e-9, "{x}: {a} vs {b}");
    }
}

#[test]
fn ed_symmetric_sweep_tracks_free_fermions() {
    let ed = SweepSpec { n_spins: Some(12), steps: Some(4), stop: Some(0.9), workers: 1, ..Default::default() };
    let ff = SweepSpec { n_spins: Some(0), ..ed.clone() };
    let a = run_sweep(&ed).unwrap();
    let b = run_sweep(&ff).unwrap();
    for (r, s) in a.rows.iter().zip(&b.rows) {
        assert!((r.witness.unwrap() - s.witness.unwrap()).abs() < 5e-3);
    }
}

#[test]
fn symmetric_classical_point_only_at_zero_coupling() {
    let out = run_sweep(&SweepSpec { steps: Some(61), workers: 1, ..Default::default() }).unwrap();
    let c = find_classical_points(&out.xs(), &out.witnesses(), 1e-5);
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].param, 0.0);
}

#[test]
fn sampled_xstates_with_positive_witness_are_nonclassical() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = OracleConfig::default();
    let mut tested = 0;
    while tested < 100 {
        let x = random_xstate(&mut rng);
        let rho = x.density_matrix();
        if witness_norm(&rho).unwrap() <= 1e-3 {
            continue;
        }
        let r = certify_witness_sufficiency(&rho, &cfg).unwrap();
        assert!(r.distance > 1e-6 && r.implication_holds, "{r:?}");
        tested += 1;
    }
}
