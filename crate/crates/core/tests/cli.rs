use std::path::Path;

use spernerlab::cli::{parse_config, parse_rational, parse_seeds, run};
use spernerlab::lattice::SubsetFamily;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("spernerlab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_family(dir: &Path, name: &str, fam: &SubsetFamily) -> String {
    let path = dir.join(name);
    std::fs::write(&path, fam.to_text()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn error_field(stderr: &str) -> Option<String> {
    let line = stderr.lines().last()?;
    let v: serde_json::Value = serde_json::from_str(line).ok()?;
    v["field"].as_str().map(str::to_owned)
}

#[test]
fn density_table_dump() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_family(dir.path(), "fam.txt", &SubsetFamily::full(6).unwrap());
    let r = cli(&["density", "--n", "6", "--k", "3", "--family", &fam]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    // header plus one row per (set, l)
    assert_eq!(r.stdout.lines().count(), 1 + 64 * 3);
    assert!(r.stderr.starts_with("config: "));
}

#[test]
fn missing_n_is_named() {
    let r = cli(&["sample", "--p", "1/2", "--seeds", "1"]);
    assert_ne!(r.code, 0);
    assert_eq!(error_field(&r.stderr).as_deref(), Some("n"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"subcommand": "sample", "n": 5, "p": "1/4", "seeds": [3]}"#).unwrap();
    let r = cli(&["sample", "--config", cfg.to_str().unwrap(), "--p", "1/2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.contains(r#""p":"1/2""#), "{}", r.stderr);
    assert!(r.stdout.starts_with("n=5\n"));

    let parsed = parse_config(["spernerlab", "sample", "--config", cfg.to_str().unwrap()])
        .unwrap()
        .unwrap();
    assert_eq!(parsed.n, Some(5));
    assert_eq!(parsed.seeds, Some(vec![3]));
}

#[test]
fn unknown_config_keys_and_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n": 5, "colour": "red"}"#).unwrap();
    let r = cli(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("colour"));

    let r = cli(&["sample", "--n", "4", "--bogus", "1"]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("--bogus"));

    // a known field the subcommand does not use
    let r = cli(&["bounds", "--n", "80", "--k", "2", "--p", "1/2", "--epsilon", "1/4", "--K", "10", "--alpha", "1"]);
    assert_ne!(r.code, 0);
    assert_eq!(error_field(&r.stderr).as_deref(), Some("alpha"));
}

#[test]
fn solve_prints_optimum_json() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write_family(dir.path(), "fam.txt", &SubsetFamily::full(4).unwrap());
    let r = cli(&["solve", "--family", &fam, "--k", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(r.stdout.trim()).unwrap();
    assert_eq!(v["size"], 6);
    assert_eq!(v["witness_masks"].as_array().unwrap().len(), 6);
    assert_eq!(v["certificate"]["cost"], 6);
}

#[test]
fn experiment_writes_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let args = ["experiment", "--n", "14", "--k", "2", "--p", "1/2", "--seeds", "0..99", "--out", out.to_str().unwrap()];
    let r = cli(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 101);
    assert!(first.starts_with("schema_version,n,k,p_num,p_den,seed,"));
    assert_eq!(cli(&args).code, 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn sparse_experiment_reports_summary() {
    let r = cli(&["experiment", "--n", "12", "--k", "2", "--c", "2", "--seeds", "0,1", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(r.stderr.contains("mean_certified_ratio"));
}

#[test]
fn supersaturate_reports_largest_delta() {
    // α = 1/4 is used up by saturated singletons before any target at n = 8
    let r = cli(&["supersaturate", "--n", "8", "--k", "2", "--m", "n/3", "--alpha", "1/4"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: serde_json::Value = serde_json::from_str(r.stdout.lines().last().unwrap()).unwrap();
    assert!(report["largest_feasible_delta"].is_null());
    assert_eq!(report["target_met"], false);

    // the full surplus of the sets of size >= 3: 219/70 - 1
    let r = cli(&["supersaturate", "--n", "8", "--k", "2", "--m", "n/3", "--alpha", "149/70"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines: Vec<&str> = r.stdout.lines().collect();
    let report: serde_json::Value = serde_json::from_str(lines.pop().unwrap()).unwrap();
    assert_eq!(lines[0].split(' ').take(2).collect::<Vec<_>>(), ["8", "2"]);
    assert_eq!(lines.len() - 1, report["edges"].as_u64().unwrap() as usize);
    assert_eq!(report["m"], "8/3");
    assert!(report["target_met"].as_bool().unwrap());
    assert_eq!(report["largest_feasible_delta"], report["delta"]);
    assert!(!report["searched"].as_array().unwrap().is_empty());
}

#[test]
fn containers_and_contract_errors() {
    let dir = tempfile::tempdir().unwrap();
    let layer = SubsetFamily::full(8).unwrap().filter(|x| x.count_ones() == 4);
    let fam = write_family(dir.path(), "layer.txt", &layer);
    let r = cli(&["containers", "--family", &fam, "--k", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(r.stdout.trim()).unwrap();
    assert!(v["final_container_size"].as_u64().unwrap() >= 70);

    let chain = SubsetFamily::from_masks(8, [0b1, 0b11]).unwrap();
    let fam = write_family(dir.path(), "chain.txt", &chain);
    let r = cli(&["containers", "--family", &fam, "--k", "2"]);
    assert_eq!(r.code, 1);
    let v: serde_json::Value = serde_json::from_str(r.stderr.lines().last().unwrap()).unwrap();
    assert_eq!(v["error"], "contract");
}

#[test]
fn bounds_output_is_stable() {
    let args = ["bounds", "--n", "80", "--k", "2", "--p", "1/2", "--epsilon", "1/4", "--K", "10"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(a.stdout.trim()).unwrap();
    assert!(v["log_margin"].as_f64().unwrap() >= 0.0);

    let r = cli(&["bounds", "--n", "40", "--k", "2", "--p", "1/2", "--epsilon", "1/4", "--K", "10"]);
    assert_eq!(r.code, 1);
}

#[test]
fn rational_and_seed_grammar() {
    assert_eq!(parse_rational("m", "n/3", Some(9)).unwrap(), parse_rational("m", "3", None).unwrap());
    assert!(parse_rational("m", "n/3", None).is_err());
    assert!(parse_rational("p", "1/0", None).is_err());
    assert!(parse_rational("p", "0.5", None).is_err());
    assert_eq!(parse_seeds("3..5").unwrap(), vec![3, 4, 5]);
    assert_eq!(parse_seeds("9, 1").unwrap(), vec![9, 1]);
    assert!(parse_seeds("5..3").is_err());
}
