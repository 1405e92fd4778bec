use std::path::Path;
use std::process::Command;

use repcomp::lookup::{self, LookupParams};
use repcomp::compositionality;
use serde_json::Value;

fn repcomp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_repcomp")).args(args).output().unwrap()
}

fn run(args: &[&str]) -> i32 {
    repcomp_cli::run(std::iter::once("repcomp").chain(args.iter().copied()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = repcomp(&["measure"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_generator_parameters_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--out", s(dir.path()), "gen", "lookup", "--m", "16", "--q", "3"]), 2);
    assert_eq!(run(&["gen", "lookup"]), 2);
}

#[test]
fn print_grammar_matches_the_reference_listing() {
    let out = repcomp(&["gen", "grammar", "--t", "5", "--width", "2", "--depth", "3", "--print-grammar"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_str!("../../core/tests/data/grammar_t5_w2_d3.txt");
    let got = String::from_utf8(out.stdout).unwrap();
    assert_eq!(got.split_whitespace().collect::<Vec<_>>(), golden.split_whitespace().collect::<Vec<_>>());
}

#[test]
fn gen_lookup_defaults_writes_records_and_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", s(dir.path()), "gen", "lookup", "--n", "1000", "--m", "16", "--k", "10", "--d", "64", "--q", "1", "--lambda", "0.01", "--r", "0.01", "--seed", "0"];
    assert_eq!(run(&args), 0);
    let data = dir.path().join("lookup.jsonl");
    let ds = repcomp::dataset::load_dataset(&data).unwrap();
    assert_eq!(ds.records.len(), 1000);
    let sidecar = json(&repcomp::dataset::sidecar_path(&data));
    let b = sidecar["breakdown"].as_object().unwrap();
    assert_eq!(b.len(), 4);
    for k in ["k_pw", "k_w_given_pw", "k_f", "k_z_given_wf"] {
        assert!(b[k].as_f64().unwrap() >= 0.0, "{k}");
    }
    assert_eq!(sidecar["config"]["m"], 16);
}

#[test]
fn exact_measure_reproduces_the_closed_form_ratio() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--out", s(dir.path()), "gen", "lookup", "--n", "300"]), 0);
    let data = dir.path().join("lookup.jsonl");
    assert_eq!(run(&["--out", s(dir.path()), "measure", "--dataset", s(&data), "--mode", "exact"]), 0);
    let record = json(&dir.path().join("measure.json"));

    let p = LookupParams { n: 300, ..Default::default() };
    let sample = lookup::generate(&p).unwrap();
    let expected = compositionality(&lookup::complexity(&sample.program, &sample.tokens, &sample.noise).unwrap()).unwrap();
    let got = record["C"].as_f64().unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    assert!(record["topsim"].as_f64().is_some());
    assert_eq!(record["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn exact_mode_without_sidecar_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--out", s(dir.path()), "gen", "lookup", "--n", "50"]), 0);
    let data = dir.path().join("lookup.jsonl");
    std::fs::remove_file(repcomp::dataset::sidecar_path(&data)).unwrap();
    let out = repcomp(&["--out", s(dir.path()), "measure", "--dataset", s(&data), "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exact mode requires generator sidecar"));
}

#[test]
fn malformed_dataset_exits_with_format_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"meta\":{\"vocab\":4,\"dim\":1,\"lambda_z\":0.1,\"seed\":null,\"generator\":\"x\"}}\n{\"w\":[9],\"z\":[0.1]}\n").unwrap();
    let out = repcomp(&["--out", s(dir.path()), "preq", "--dataset", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn topsim_of_a_one_hot_code_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("onehot.jsonl");
    let mut text = String::from("{\"meta\":{\"vocab\":3,\"dim\":9,\"lambda_z\":1.0,\"seed\":null,\"generator\":\"onehot\"}}\n");
    let mut i = 0u32;
    for a in 0..3u32 {
        for b in 0..3u32 {
            for c in 0..3u32 {
                let w = [a, b, c];
                let mut z = [0.0; 9];
                for (j, &t) in w.iter().enumerate() {
                    z[j * 3 + t as usize] = 1.0;
                }
                text.push_str(&serde_json::json!({ "w": w, "z": z }).to_string());
                text.push('\n');
                i += 1;
            }
        }
    }
    assert_eq!(i, 27);
    std::fs::write(&path, text).unwrap();
    let args = [
        "--out", s(dir.path()), "measure", "--dataset", s(&path), "--z-metric", "squared-euclidean", "--kz-bits", "100",
        "--chunk", "5", "--holdout", "7", "--max-epochs", "2", "--hidden", "8,8", "--embedding-dim", "4",
    ];
    assert_eq!(run(&args), 0);
    let record = json(&dir.path().join("measure.json"));
    assert!((record["topsim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(record["C_L"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[lookup]\nn = 40\nm = 8\nd = 16\n").unwrap();
    assert_eq!(run(&["--config", s(&cfg), "--out", s(dir.path()), "gen", "lookup", "--m", "4"]), 0);
    let sidecar = json(&dir.path().join("lookup.jsonl.meta.json"));
    assert_eq!(sidecar["config"]["n"], 40);
    assert_eq!(sidecar["config"]["m"], 4);
    std::fs::write(&cfg, "[lookup]\nwidth = 2\n").unwrap();
    assert_eq!(run(&["--config", s(&cfg), "--out", s(dir.path()), "gen", "lookup"]), 2);
}

#[test]
fn sweep_writes_rows_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--out", s(dir.path()), "sweep", "--generator", "lookup", "--axis", "m", "--grid", "1,2", "--n-seeds", "3", "--set", "n=60", "--set", "d=8",
    ];
    assert_eq!(run(&args), 0);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "kind,value,value2,seed_index,seed,c,topsim,k_pw,k_w_given_pw,k_f,k_z_given_wf,l_preq,error");
    let rest: Vec<&str> = lines.collect();
    assert_eq!(rest.iter().filter(|l| l.starts_with("row,")).count(), 6);
    assert_eq!(rest.iter().filter(|l| l.starts_with("mean,")).count(), 2);
    assert_eq!(rest.iter().filter(|l| l.starts_with("std,")).count(), 2);

    assert_eq!(run(&["--out", s(dir.path()), "sweep", "--generator", "lookup", "--axis", "width", "--grid", "1"]), 2);
}

#[test]
fn failed_sweep_rows_are_recorded_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", s(dir.path()), "sweep", "--generator", "lookup", "--axis", "q", "--grid", "1,3", "--n-seeds", "1", "--set", "n=20", "--set", "m=4", "--set", "d=8"];
    assert_eq!(run(&args), 4);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let failed = text.lines().find(|l| l.starts_with("row,3,")).unwrap();
    assert!(failed.contains("must divide"), "{failed}");
}

#[test]
fn reruns_produce_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = s(dir.path());
        assert_eq!(run(&["--out", out, "gen", "grammar", "--n", "60", "--m", "8"]), 0);
        assert_eq!(run(&["--out", out, "gen", "langsys", "--language", "holistic", "--repeats", "4"]), 0);
        let data = a.path().join("langsys.jsonl");
        let preq = ["--out", out, "preq", "--dataset", s(&data), "--chunk", "40", "--holdout", "56", "--max-epochs", "3", "--hidden", "16,16"];
        assert_eq!(run(&preq), 0);
    }
    for name in ["grammar.jsonl", "grammar.jsonl.meta.json", "langsys.jsonl", "langsys.jsonl.meta.json", "preq.csv", "preq.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let csv = std::fs::read_to_string(a.path().join("preq.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("40,40,"));
}
