//! The model corpus: documented verdicts, byte-identical regeneration, and
//! the command line interface.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use aerobust::attack::verify_ae_safe_controllability;
use aerobust::io::{model_to_json, parse_model, serialize_model};
use aerobust::recovery::synthesize_resilient_supervisor;
use common::*;
use serde_json::Value;

fn aerobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aerobust")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest() -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(corpus_dir().join("MANIFEST")).unwrap();
    text.lines()
        .map(|l| l.split('#').next().unwrap().split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|t| !t.is_empty())
        .collect()
}

#[test]
fn manifest_verdicts_hold() {
    let mut checked = 0;
    for line in manifest().iter().filter(|t| t[0] == "expect") {
        let b = load_corpus_bundle(&line[1]);
        match line[2].as_str() {
            "safe-controllability" => {
                let v = verify_ae_safe_controllability(&b.system);
                assert_eq!(v.holds, line[3] == "holds", "{}", line[1]);
            }
            "recoverable" => {
                let v = synthesize_resilient_supervisor(&b.system, &corpus_region(&b));
                assert_eq!(v.recoverable, line[3] == "recoverable", "{}", line[1]);
                assert!(v.method_agreement);
                for pair in &line[4..] {
                    let (det, path) = pair.split_once('=').unwrap();
                    let st = v.strategy(det).unwrap_or_else(|| panic!("{}: no strategy for {det}", line[1]));
                    assert_eq!(st.nominal_path.join("."), path, "{} {det}", line[1]);
                }
                if v.recoverable {
                    assert_eq!(v.strategies().count(), line.len() - 4, "{}", line[1]);
                }
            }
            other => panic!("unknown property {other}"),
        }
        checked += 1;
    }
    assert_eq!(checked, 8);
}

#[test]
fn bundles_regenerate_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    for line in manifest().iter().filter(|t| t[0] == "bundle") {
        let out = dir.path().join("bundle.aer");
        let plant = corpus_dir().join(&line[2]);
        let sup = corpus_dir().join(&line[3]);
        let mut args = vec![
            "attack-model".to_string(),
            "--plant".into(),
            path_str(&plant).into(),
            "--supervisor".into(),
            path_str(&sup).into(),
            "-o".into(),
            path_str(&out).into(),
        ];
        if line[4] != "-" {
            args.push("--vulnerable".into());
            args.push(line[4].clone());
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = aerobust(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stored = std::fs::read_to_string(corpus_dir().join(&line[1])).unwrap();
        assert_eq!(std::fs::read_to_string(&out).unwrap(), stored, "{}", line[1]);
    }
}

#[test]
fn every_corpus_file_round_trips() {
    for sub in ["running_example", "fischertechnik"] {
        for entry in std::fs::read_dir(corpus_dir().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let m = parse_model(&text).unwrap();
            let canonical = serialize_model(&m);
            assert_eq!(parse_model(&canonical).unwrap(), m, "{}", path.display());
            // generated bundles are already canonical
            if path.file_name().unwrap().to_str().unwrap().starts_with("bundle") {
                assert_eq!(canonical, text, "{}", path.display());
            }
            assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m, "{}", path.display());
        }
    }
}

#[test]
fn fischertechnik_alphabet() {
    let text = std::fs::read_to_string(corpus_dir().join("fischertechnik/plant.aer")).unwrap();
    let m = parse_model(&text).unwrap();
    let plant = m.plant().unwrap();
    let mut names: Vec<&str> = plant.alphabet().ids().map(|e| plant.alphabet().name(e)).collect();
    names.sort();
    assert_eq!(names, ["arr_blue", "arr_red", "in_1", "in_2", "in_I", "m", "p1", "p2", "s"]);
    let mut unc: Vec<&str> = plant.alphabet().uncontrollable().collect();
    unc.sort();
    assert_eq!(unc, ["arr_blue", "arr_red"]);
}

#[test]
fn running_example_closed_loop_shape() {
    let b = load_corpus_bundle("running_example/bundle.aer");
    let gr = b.system.gr();
    assert_eq!(gr.num_states(), 18);
    assert_eq!(gr.num_transitions(), 26);
    let dets: Vec<&str> = b.system.detection_states().iter().map(|&d| gr.name(d)).collect();
    assert_eq!(dets, ["(7,@ATT)", "(8,@ATT)"]);
}

#[test]
fn cli_exit_codes_and_verdicts() {
    let c = corpus_dir();
    let ok = aerobust(&["verify", "recoverable", path_str(&c.join("running_example/bundle.aer"))]);
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["verdict"], "recoverable");
    assert_eq!(v["methods"]["agree"], true);

    let bad = aerobust(&["verify", "recoverable", path_str(&c.join("fischertechnik/bundle_p1_p2.aer"))]);
    assert_eq!(bad.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["verdict"], "not recoverable");
    assert_eq!(v["counterexample"]["detection"], "(B1C,@ATT)");

    let sc = aerobust(&["verify", "safe-controllability", path_str(&c.join("fischertechnik/bundle_p1.aer"))]);
    assert_eq!(sc.status.code(), Some(0));

    let missing = aerobust(&["verify", "recoverable", "/nonexistent/model.aer"]);
    assert_eq!(missing.status.code(), Some(2));
    let usage = aerobust(&["verify"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn cli_rejects_malformed_input_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.aer");
    std::fs::write(&f, "aerobust 1\nautomaton plant\n  event a wobbly\nend\n").unwrap();
    let o = aerobust(&["verify", "safe-controllability", path_str(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 11"), "{err}");
}

#[test]
fn cli_compose_and_synthesize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus_dir();
    let out = dir.path().join("loop.json");
    let o = aerobust(&[
        "compose",
        path_str(&c.join("running_example/plant.aer")),
        path_str(&c.join("running_example/supervisor.aer")),
        "-o",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with('{'));
    let m = parse_model(&text).unwrap();
    let b = load_corpus_bundle("running_example/bundle.aer");
    let composed = &m.automata[0].1;
    assert_eq!(composed.bounded_language(8), b.system.nominal_closed_loop().bounded_language(8));

    let sr = dir.path().join("sr.aer");
    let o = aerobust(&["synthesize", "resilient", path_str(&c.join("fischertechnik/bundle_p2.aer")), "-o", path_str(&sr)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["recoverable"], true);
    assert_eq!(v["strategies"].as_array().unwrap().len(), 2);
    assert!(parse_model(&std::fs::read_to_string(&sr).unwrap()).is_ok());
}

#[test]
fn cli_simulation_writes_checked_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let bundle = corpus_dir().join("running_example/bundle.aer");
    let args = ["simulate", path_str(&bundle), "--attacker", "first", "--seed", "7", "--steps", "200", "-o", path_str(&trace)];
    let o = aerobust(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let first = std::fs::read_to_string(&trace).unwrap();
    assert!(first.lines().count() > 0);
    for l in first.lines() {
        let _: Value = serde_json::from_str(l).unwrap();
    }
    assert!(first.contains("#a"));
    aerobust(&args);
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), first);
}

#[test]
fn cli_dot_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sr.dot");
    let bundle = corpus_dir().join("fischertechnik/bundle_p1.aer");
    let o = aerobust(&["export", "dot", path_str(&bundle), "--resilient", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dot = std::fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("color=red"));
    assert!(dot.contains("color=blue"));
    let b = load_corpus_bundle("fischertechnik/bundle_p1.aer");
    let v = synthesize_resilient_supervisor(&b.system, &corpus_region(&b));
    assert_eq!(dot.matches(" -> ").count(), v.resilient_supervisor().num_transitions());

    let plain = dir.path().join("plant.dot");
    let o = aerobust(&["export", "dot", path_str(&bundle), "-o", path_str(&plain)]);
    assert!(o.status.success());
    let dot = std::fs::read_to_string(&plain).unwrap();
    assert_eq!(dot.matches(" -> ").count(), b.system.plant().num_transitions());
}
