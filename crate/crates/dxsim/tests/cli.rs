use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dxsim::report::{read_csv, CSV_HEADER};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn dxsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dxsim"))
        .args(args)
        .current_dir(root())
        .env_remove("DX_SIM_SEED")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn verify_shipped_programs() {
    let out = dxsim(&["verify", "programs/gather.dx", "programs/spmv.dx"]);
    assert!(out.status.success(), "{}", text(&out.stdout));
    assert_eq!(
        text(&out.stdout)
            .lines()
            .filter(|l| l.starts_with("ok "))
            .count(),
        2
    );
}

#[test]
fn shipped_config_is_the_default() {
    let out = dxsim(&["defaults"]);
    assert!(out.status.success());
    assert_eq!(
        text(&out.stdout),
        std::fs::read_to_string(root().join("configs/default.toml")).unwrap()
    );
}

#[test]
fn run_writes_csv_trace_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    let out = dxsim(&[
        "run",
        "programs/gather.dx",
        "--config",
        "configs/default.toml",
        "--out",
        &p("s.csv"),
        "--trace",
        &p("t.jsonl"),
        "--dump-tiles",
        &p("tiles.bin"),
        "--baseline",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(p("s.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv(csv.as_bytes()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        (rows[0].mode.as_str(), rows[1].mode.as_str()),
        ("dx100", "baseline")
    );
    assert!(rows.iter().all(|r| r.label == "gather" && r.cycles > 0));
    let trace = std::fs::read_to_string(p("t.jsonl")).unwrap();
    assert!(trace
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(trace.contains("\"event\":\"cmd\""));
    let tiles = dxsim::image::load_image(Path::new(&p("tiles.bin"))).unwrap();
    let names: Vec<&str> = tiles.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["t0", "t1"]);
    assert_eq!(tiles[1].words.len(), 1024);
}

#[test]
fn missing_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let full = std::fs::read_to_string(root().join("configs/default.toml")).unwrap();
    std::fs::write(&cfg, full.replace("tccd_l = 5000\n", "")).unwrap();
    let out = dxsim(&[
        "run",
        "programs/gather.dx",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(
        text(&out.stderr).contains("dram.tccd_l"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn bad_seed_override_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_dxsim"))
        .args(["verify", "programs/gather.dx"])
        .current_dir(root())
        .env("DX_SIM_SEED", "seven")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("DX_SIM_SEED"));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bad.dx");
    std::fs::write(&prog, "array A u32 8\n# fine\nLOAD u32 A -> t0\n").unwrap();
    let out = dxsim(&[
        "run",
        prog.to_str().unwrap(),
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).contains("line 3: unknown statement `LOAD`"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn verify_fails_on_a_failing_program() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("oob.dx");
    std::fs::write(
        &prog,
        "array A u32 4\narray B u32 2\ninit B iota\nreg r1 = 2\nreg r2 = 1\nreg r3 = 3\n\
         SLD u32 B -> t0, r0, r1, r2\nALUS u32 ADD t1 <- t0, r3\nILD u32 A -> t2, t1\n",
    )
    .unwrap();
    let out = dxsim(&["verify", prog.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stdout).starts_with("FAIL "),
        "{}",
        text(&out.stdout)
    );
}

#[test]
fn gen_then_verify_each_kind() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        "rbh = 0.5\nchi = false\nrows_per_bank = 4\ncolumns = 8\nblock = 8\nseed = 9\n",
    )
    .unwrap();
    for kind in ["gather-spd", "gather-full", "scatter", "rmw", "random"] {
        let out = dxsim(&[
            "gen",
            kind,
            "--spec",
            spec.to_str().unwrap(),
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{kind}: {}", text(&out.stderr));
        let prog = dir.path().join(format!("{kind}.dx"));
        assert!(dir.path().join(format!("{kind}.bin")).exists());
        assert!(dir.path().join(format!("{kind}.lines")).exists());
        let out = dxsim(&["verify", prog.to_str().unwrap()]);
        assert!(out.status.success(), "{kind}: {}", text(&out.stdout));
    }
    let out = dxsim(&[
        "gen",
        "gups",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_emits_two_rows_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    std::fs::write(
        &spec,
        "kind = \"gather-full\"\nrows_per_bank = 2\ncolumns = 8\nblock = 8\n",
    )
    .unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = dxsim(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--jobs",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 16);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].label, pair[1].label);
        assert_eq!(
            (pair[0].mode.as_str(), pair[1].mode.as_str()),
            ("dx100", "baseline")
        );
    }
    let serial = dxsim(&["sweep", "--spec", spec.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(text(&serial.stdout), std::fs::read_to_string(&csv).unwrap());
}
