use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_discord-witness"))
}

#[test]
fn sweep_then_derivative_and_classify() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sym.csv");
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "# symmetric XY curve\nmodel = xy_symmetric\ngamma = 0.6\nsteps = 11\n").unwrap();
    let st = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--lambda-stop", "1.0", "--workers", "2", "--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# spec=model=xy_symmetric param=lambda start=0 stop=1 steps=11"));
    assert_eq!(lines.next().unwrap(), discord_witness::sweep::CSV_COLUMNS);
    assert_eq!(lines.count(), 11);

    let out = bin().arg("derivative").arg(&csv).args(["--stencil", "central-4"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 12);

    let out = bin().arg("classify").arg(&csv).arg("--certify").output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let fields: Vec<f64> = rows[0].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.0);
    assert!(fields[2] <= 1e-8);
}

#[test]
fn exit_codes() {
    let st = bin().args(["sweep", "--model", "potts"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["sweep", "--steps", "1"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["sweep", "--model", "ashkin_teller", "--block", "octet", "--n-spins", "6"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["sweep", "--n-spins", "4", "--gamma", "2", "--steps", "2"]).output().unwrap();
    assert_eq!(st.status.code(), Some(3));
}

#[test]
fn oracle_on_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bell.txt");
    let h = 0.5;
    std::fs::write(
        &path,
        format!("2 2\n{h},0 0,0 0,0 {h},0\n0,0 0,0 0,0 0,0\n0,0 0,0 0,0 0,0\n{h},0 0,0 0,0 {h},0\n"),
    )
    .unwrap();
    let out = bin().arg("oracle").arg(&path).output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    let get = |key: &str| -> f64 {
        s.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
    };
    assert!(get("distance ") > 0.4);
    assert!(get("witness ") <= 1e-14);

    std::fs::write(&path, "2 2\n1,0 0,0\n").unwrap();
    assert_eq!(bin().arg("oracle").arg(&path).status().unwrap().code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
