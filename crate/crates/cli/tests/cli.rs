use std::process::{Command, Output};

use serde_json::Value;

fn lpsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpsym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lpsym(&[args, &["--format", "json"]].concat());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn classify_examples() {
    let v = json(&["classify", "--n", "2", "--p", "-3/1"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "classify");
    assert_eq!(v["results"]["dimension"], 8);
    let tags: Vec<&str> = v["results"]["generators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["tag"].as_str().unwrap())
        .collect();
    assert_eq!(tags.iter().filter(|t| **t == "projective").count(), 2);
    assert_eq!(tags.iter().filter(|t| **t == "x-translation").count(), 2);

    let v = json(&["classify", "--n", "2", "--p", "3"]);
    assert_eq!(v["results"]["dimension"], 4);
    assert!(v["results"]["generators"]
        .as_array()
        .unwrap()
        .iter()
        .any(|g| g["tag"] == "u-scaling"));
    assert!(v["results"]["stats"]["rank"].as_u64().unwrap() > 0);

    let text = String::from_utf8(lpsym(&["classify", "--n", "2", "--p", "1"]).stdout).unwrap();
    assert!(text.contains("dimension 6"));
    assert!(text.contains("d/du"));

    let bad = lpsym(&["classify", "--n", "0", "--p", "1"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));
    assert_eq!(code(&lpsym(&["classify", "--n", "2", "--p", "1/0"])), 1);
    assert_eq!(code(&lpsym(&["classify", "--n", "2", "--p", "abc"])), 1);
}

#[test]
fn decimal_exponent_is_exact() {
    let v = json(&["classify", "--n", "1", "--p", "0.5"]);
    assert_eq!(v["inputs"]["p"], "1/2");
}

#[test]
fn scan_examples() {
    let out = lpsym(&[
        "scan", "--n", "2", "--p-from", "-4", "--p-to", "4", "--step", "1",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let spikes: Vec<&str> = rows
        .iter()
        .filter(|r| !r.contains(",3,generic,"))
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(spikes, ["-3", "1", "3"]);

    let v = json(&[
        "scan", "--n", "2", "--p-from", "2", "--p-to", "2", "--step", "1",
    ]);
    assert_eq!(v["results"]["rows"].as_array().unwrap().len(), 1);
    assert_eq!(
        code(&lpsym(&[
            "scan", "--n", "2", "--p-from", "0", "--p-to", "1", "--step", "0"
        ])),
        1
    );
    assert_eq!(
        code(&lpsym(&[
            "scan", "--n", "2", "--p-from", "3", "--p-to", "1", "--step", "1"
        ])),
        1
    );
}

#[test]
fn verify_examples() {
    let v = json(&[
        "verify", "--n", "2", "--p", "3", "--action", "g2", "--eps", "2",
    ]);
    assert_eq!(v["results"]["report"]["verdict"], "symmetry-confirmed");
    assert!(v["results"]["report"]["max_abs"].as_f64().unwrap() <= 1e-9);

    let out = lpsym(&[
        "verify", "--n", "2", "--p", "2", "--action", "g2", "--eps", "2", "--expect", "refuted",
    ]);
    assert_eq!(code(&out), 0);
    // expecting the wrong verdict is a numerical mismatch
    let out = lpsym(&[
        "verify",
        "--n",
        "2",
        "--p",
        "2",
        "--action",
        "g2",
        "--eps",
        "2",
        "--expect",
        "confirmed",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISMATCH"));

    let out = lpsym(&["verify", "--n", "2", "--p", "2", "--action", "g99"]);
    assert_eq!(code(&out), 1);

    let v = json(&[
        "verify",
        "--n",
        "3",
        "--p",
        "-4",
        "--action",
        "g6",
        "--body",
        "non-round",
        "--samples",
        "200",
    ]);
    assert_eq!(v["results"]["report"]["verdict"], "symmetry-confirmed");
    assert_eq!(
        code(&lpsym(&[
            "verify",
            "--n",
            "2",
            "--p",
            "5",
            "--action",
            "g1",
            "--body",
            "non-round"
        ])),
        1
    );
}

#[test]
fn resolve_reports_transforms_and_shear_q_verdict() {
    let v = json(&[
        "resolve",
        "--n",
        "2",
        "--action",
        "g9",
        "--eps",
        "0.3",
        "--samples",
        "300",
    ]);
    assert_eq!(v["results"]["transforms"][0]["kind"], "centro-affine");
    assert_eq!(v["results"]["shear_q"]["winner"], "cross-axis");
    assert_eq!(v["results"]["unit_ball"]["verdict"], "symmetry-confirmed");

    let v = json(&[
        "resolve",
        "--n",
        "2",
        "--action",
        "g4",
        "--eps",
        "0.5",
        "--samples",
        "100",
    ]);
    assert_eq!(
        v["results"]["transforms"][0]["vector"],
        serde_json::json!([0.0, 0.0, -0.5])
    );

    let v = json(&[
        "resolve",
        "--n",
        "3",
        "--action",
        "g6",
        "--matrix",
        "2,0,0;0,1,0;0,0,0.5",
        "--samples",
        "100",
    ]);
    let kinds: Vec<&str> = v["results"]["transforms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["rotation", "scaling", "rotation"]);
    assert_eq!(v["results"]["ellipsoid"]["verdict"], "symmetry-confirmed");
}

#[test]
fn decompose_examples() {
    let v = json(&["decompose", "--matrix", "2,0;0,0.5"]);
    assert_eq!(v["results"]["lambda"], serde_json::json!([2.0, 0.5]));
    let v = json(&["decompose", "--matrix", "1,1;0,1"]);
    let l = v["results"]["lambda"].as_array().unwrap();
    assert!((l[0].as_f64().unwrap() - 1.618033988749895).abs() < 1e-14);
    assert!(v["results"]["reconstruction_error"].as_f64().unwrap() < 1e-14);
    let text = String::from_utf8(lpsym(&["decompose", "--matrix", "0,-1;1,0"]).stdout).unwrap();
    assert!(text.contains("lambda = [1.0, 1.0]"));
    let out = lpsym(&["decompose", "--matrix", "2,0;0,1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not special linear"));
}

#[test]
fn lemma_command() {
    for id in ["rotation", "scaling", "translation", "shear-h"] {
        let v = json(&["lemma", id, "--n", "2", "--samples", "200"]);
        assert_eq!(
            v["results"]["reports"][0]["verdict"], "symmetry-confirmed",
            "{id}"
        );
    }
    let v = json(&[
        "lemma",
        "shear-q",
        "--n",
        "3",
        "--axis",
        "2",
        "--samples",
        "200",
    ]);
    let r = v["results"]["reports"].as_array().unwrap();
    assert_eq!(r[0]["subject"], "shear-q:cross-axis");
    assert_eq!(r[0]["verdict"], "symmetry-confirmed");
    assert_eq!(r[1]["verdict"], "symmetry-refuted");
    assert_eq!(
        code(&lpsym(&[
            "lemma",
            "translation",
            "--n",
            "2",
            "--axis",
            "3",
            "--samples",
            "10"
        ])),
        0
    );
    assert_eq!(
        code(&lpsym(&["lemma", "shear-h", "--n", "2", "--axis", "3"])),
        1
    );
}

#[test]
fn json_round_trips_and_out_file() {
    let dir = std::env::temp_dir().join(format!("lpsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = lpsym(&[
        "verify",
        "--n",
        "2",
        "--p",
        "-3",
        "--action",
        "g8",
        "--samples",
        "50",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    assert!(v["timing_ms"].is_null());
    std::fs::remove_dir_all(&dir).unwrap();

    let v = json(&[
        "verify",
        "--n",
        "2",
        "--p",
        "1",
        "--action",
        "g5",
        "--samples",
        "50",
        "--timing",
    ]);
    assert!(v["timing_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&lpsym(&[])), 1);
    assert_eq!(code(&lpsym(&["frobnicate"])), 1);
    assert_eq!(
        code(&lpsym(&[
            "verify",
            "--n",
            "2",
            "--p",
            "1",
            "--action",
            "g2",
            "--samples",
            "0"
        ])),
        1
    );
    assert_eq!(code(&lpsym(&["--help"])), 0);
}
