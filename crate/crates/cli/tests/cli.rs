use std::process::{Command as Process, Output};

use qent::{parse_args, CliError, Command, Format};
use qent_core::{MomentumMultiset, Statistics};

fn qent(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_qent"))
        .args(args)
        .env("QENT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn argv<'a>(args: &[&'a str]) -> Vec<&'a str> {
    std::iter::once("qent")
        .chain(args.iter().copied())
        .collect()
}

#[test]
fn measure_config_parses() {
    let cfg = parse_args(argv(&[
        "measure", "--stats", "boson", "--L", "256", "--x1", "0.25", "--x2", "0.25", "--y", "0",
        "--K", "1,2",
    ]))
    .unwrap();
    assert_eq!(cfg.format, Format::Json);
    match cfg.command {
        Command::Measure { stats, k, geometry } => {
            assert_eq!(stats, Statistics::Bosonic);
            assert_eq!(k, MomentumMultiset::from_momenta(&[1, 2]));
            assert_eq!(
                (
                    geometry.sites(),
                    geometry.ell1(),
                    geometry.d(),
                    geometry.ell2()
                ),
                (256, 64, 0, 64)
            );
        }
        other => panic!("unexpected command {other:?}"),
    }
}

#[test]
fn repeated_momenta_parse() {
    let cfg = parse_args(argv(&[
        "measure", "--stats", "boson", "--L", "8", "--ell1", "2", "--d", "1", "--ell2", "3", "--K",
        "1^2,3",
    ]))
    .unwrap();
    match cfg.command {
        Command::Measure { k, .. } => {
            assert_eq!(k, MomentumMultiset::from_pairs([(1, 2), (3, 1)]).unwrap())
        }
        other => panic!("unexpected command {other:?}"),
    }
}

#[test]
fn pauli_exclusion_is_a_usage_error() {
    let err = parse_args(argv(&[
        "measure", "--stats", "fermion", "--L", "16", "--x1", "0.25", "--x2", "0.25", "--K", "1^2",
    ]))
    .unwrap_err();
    assert!(matches!(err, CliError::Invalid(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("--K"), "{err}");

    let out = qent(&[
        "measure", "--stats", "fermion", "--L", "16", "--x1", "0.25", "--x2", "0.25", "--K", "1^2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_input_exits_2() {
    let cases: [&[&str]; 5] = [
        &[
            "measure", "--stats", "boson", "--L", "10", "--x1", "0.25", "--x2", "0.25", "--K", "1",
        ],
        &[
            "measure", "--stats", "boson", "--L", "16", "--x1", "0.25", "--x2", "0.25", "--K", "1",
            "--bogus",
        ],
        &[
            "measure", "--stats", "anyon", "--L", "16", "--x1", "0.25", "--x2", "0.25", "--K", "1",
        ],
        &["classical", "--x1", "0.25", "--x2", "0.25", "--y", "0.1"],
        &[
            "extrapolate",
            "--stats",
            "boson",
            "--K",
            "L/5",
            "--x1",
            "0.25",
            "--x2",
            "0.25",
            "--ladder",
            "32,64",
        ],
    ];
    for args in cases {
        let out = qent(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn classical_json() {
    let out = qent(&["classical", "--x1", "0.25", "--x2", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["E_N", "I", "S_R", "gap"]);
    let get = |k: &str| obj[k].as_f64().unwrap();
    assert!((get("S_R") - 0.832991061399).abs() < 1e-11);
    assert!((get("I") - 0.431523108678).abs() < 1e-11);
    assert!((get("E_N") - 0.188226406460).abs() < 1e-11);
    assert!((get("gap") - 0.401467952722).abs() < 1e-11);
    assert!(String::from_utf8_lossy(&out.stderr).contains("S_R=0.832991"));
}

#[test]
fn oracle_check_small_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.csv");
    let out = qent(&[
        "oracle-check",
        "--suite",
        "small",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("stats,L,ell1,d,ell2,K,"));
    assert_eq!(rows.len(), 121);
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));
}

#[test]
fn sweep_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        let p = dir.path().join(name);
        vec![
            "sweep".to_string(),
            "--stats".into(),
            "fermion".into(),
            "--K".into(),
            "1,L/4".into(),
            "--L".into(),
            "64".into(),
            "--x1".into(),
            "0.25".into(),
            "--param".into(),
            "x2".into(),
            "--values".into(),
            "0.5,0.125,0.25,0.375".into(),
            "--out".into(),
            p.to_str().unwrap().to_string(),
        ]
    };
    let mut a = args("a.csv");
    let b = args("b.csv");
    a.push("--sequential".into());
    for run in [&a, &b] {
        let refs: Vec<&str> = run.iter().map(String::as_str).collect();
        assert_eq!(qent(&refs).status.code(), Some(0));
    }
    let (x, y) = (
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap(),
    );
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert_eq!(text.lines().next().unwrap(), "L,x1,x2,y,K,S_R,I,E_N,gap");
    let x2: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(x2, ["0.125", "0.25", "0.375", "0.5"]);
}

#[test]
fn extrapolation_appends_limit_row() {
    let out = qent(&[
        "extrapolate",
        "--stats",
        "boson",
        "--K",
        "1,1+L/2",
        "--x1",
        "0.25",
        "--x2",
        "0.25",
        "--ladder",
        "32,64,128",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("inf,"), "{last}");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn fermionic_additivity_table() {
    let out = qent(&[
        "additivity",
        "--stats",
        "fermion",
        "--x1",
        "0.25",
        "--y",
        "0",
        "--K1",
        "1",
        "--K2",
        "L/4",
        "--ladder",
        "64,128,256",
        "--x2",
        "0.25",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.rsplitn(5, ',').collect();
            f[1..4].iter().rev().map(|s| s.parse().unwrap()).collect()
        })
        .collect();
    assert_eq!(rows.len(), 3);
    // S_R and I deviations shrink with L; the E_N deviation settles at a
    // finite value because the partial transpose of a fermionic product
    // state is not a product.
    for w in rows.windows(2) {
        assert!(w[1][0] < w[0][0] && w[1][1] < w[0][1]);
    }
    assert!(rows[2][2] > 0.03);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL x2=0.25"));
}

#[test]
fn bosonic_additivity_passes() {
    let out = qent(&[
        "additivity",
        "--stats",
        "boson",
        "--x1",
        "0.25",
        "--K1",
        "1",
        "--K2",
        "L/4",
        "--ladder",
        "64,128,256",
        "--format",
        "json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports
        .iter()
        .all(|r| r["pass"] == serde_json::Value::Bool(true)));
}
