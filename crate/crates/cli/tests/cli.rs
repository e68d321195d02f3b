use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toral-dpm")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn all_passed(v: &Value) -> bool {
    v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true)
}

#[test]
fn periodic_points_count() {
    let out = run(&["periodic-points", "--matrix", "2,1;1,1", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "periodic-points");
    assert_eq!(v["results"]["count"], "5");
    assert_eq!(v["results"]["points"].as_array().unwrap().len(), 5);
    assert!(all_passed(&v));
}

#[test]
fn newton_slopes_vanish() {
    let out = run(&["newton", "--poly", "1,-3,1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for s in v["results"]["slope_multiplicities"].as_array().unwrap() {
        assert_eq!(s["slope"], "0");
    }
}

#[test]
fn product_formula_example() {
    let out = run(&["product-formula", "--poly", "-1/2,-3/2,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"]["ell"], "2");
    assert_eq!(v["results"]["finite_product"], "2");
}

#[test]
fn subshift_report() {
    let out = run(&["subshift", "--maxpow2", "10", "--maxpow3", "7", "--L", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let delta0 = v["results"]["delta0"].as_f64().unwrap();
    assert!(delta0 > 0.0);
    assert!(v["results"]["product_min_distance"].as_f64().unwrap() >= delta0);
}

#[test]
fn malformed_input_exits_two() {
    let out = run(&["periodic-points", "--matrix", "2,1;1", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "ParseError");
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "UsageError");
    let out = run(&["product-formula", "--poly", "1,0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "RootOfUnityError");
}

#[test]
fn failing_check_exits_one() {
    // Non-increasing slack of -1 cannot hold.
    let out = run(&[
        "unipotent-approx",
        "--descriptor",
        "a = 0, phi; H = 1;0; m = 1",
        "--n",
        "10,20",
        "--point",
        "sqrt(2)-1, phi",
        "--reference-len",
        "2000",
        "--slack",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!all_passed(&json(&out)));
}

#[test]
fn deterministic_up_to_wall_time() {
    let args = ["bounded-below", "--poly", "1,-1,-1,-1,1", "--horizon", "2000", "--seed", "3"];
    let mut a = json(&run(&args));
    let mut b = json(&run(&args));
    a["wall_time_ms"] = Value::Null;
    b["wall_time_ms"] = Value::Null;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn config_file_supplies_flags() {
    let dir = std::env::temp_dir().join(format!("toral-dpm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "# cat map\nmatrix = \"2,1;1,1\"\nn = 3\n").unwrap();
    let v = json(&run(&["periodic-points", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["results"]["count"], "16");
    let v = json(&run(&["periodic-points", "--config", cfg.to_str().unwrap(), "--n", "1"]));
    assert_eq!(v["results"]["count"], "1");

    let out_dir = dir.join("out");
    let out = run(&["subshift", "--maxpow2", "4", "--maxpow3", "3", "--L", "3", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.json").exists());
    let curve = std::fs::read_to_string(out_dir.join("factor_p2.csv")).unwrap();
    assert!(curve.starts_with("n,period,distance\n1,2,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_format_lists_checks() {
    let out = run(&["periodic-points", "--matrix", "2,1;1,1", "--n", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,passed,value,bound\nsmith_matches_det,true,"));
}
