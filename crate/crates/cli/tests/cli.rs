use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn onebit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onebit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn experiment_writes_csv_with_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = onebit(&[
        "experiment", "--scheme", "btree", "--n", "1024", "--k", "2", "--b", "4", "--trials", "4",
        "--seed", "5", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: scheme=btree n=1024 k=2"), "{}", lines[0]);
    assert_eq!(
        lines[1],
        "trial_id,scheme,n,k,delta,m_total,success,err_sq,tail_sq,decode_ops,wall_ms,seed"
    );
    assert_eq!(lines.len(), 6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("success"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "experiment", "--scheme", "pipeline", "--n", "512", "--k", "2", "--mg", "200", "--trials", "3",
        "--model", "sparse-plus-tail(0.2)",
    ];
    let a = onebit(&args);
    let b = onebit(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# small run\nscheme = ppq\nn = 512\nk = 2\nparts = 64\ntrials = 5\n").unwrap();
    let out = onebit(&["experiment", "--config", cfg.to_str().unwrap(), "--trials", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("# config: scheme=ppq n=512"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn encode_then_decode_recovers_support() {
    let dir = tempfile::tempdir().unwrap();
    let signal = dir.path().join("x.txt");
    let mut values = vec!["0".to_string(); 1024];
    values[17] = "0.8".into();
    values[600] = "-0.6".into();
    fs::write(&signal, values.join("\n")).unwrap();
    let bits = dir.path().join("x.obcs");
    let out = onebit(&[
        "encode", "--scheme", "expander", "--n", "1024", "--k", "2", "--seed", "3",
        "--signal", signal.to_str().unwrap(), "--out", bits.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(&fs::read(&bits).unwrap()[..4], b"OBCS");

    let out = onebit(&["decode", "--input", bits.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["support"], serde_json::json!([17, 600]));
}

#[test]
fn errors_exit_with_code_two() {
    let out = onebit(&["experiment", "--scheme", "lasso"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));

    let out = onebit(&["decode", "--input", "/nonexistent.obcs"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new("/nonexistent.obcs").exists());
}

#[test]
fn selftest_passes_on_one_seed() {
    let out = onebit(&["selftest", "--seeds", "4"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    for name in ["complement-bits", "positive-scaling", "sign-flip-antisymmetry", "name-partition", "byte-identical-csv"] {
        assert!(text.contains(name), "{text}");
    }
}
