use std::path::Path;
use std::process::{Command, Output};

fn nlcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn nlcalc_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcalc"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn check_kernel_exit_codes() {
    let o = nlcalc(&["check-kernel", "--kernel", "exponential"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["result"]["positivity"]["ok"], true);
    let o = nlcalc(&["check-kernel", "--kernel", "indicator", "--require", "positivity"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["result"]["positivity"]["ok"], false);
    let o = nlcalc(&["check-kernel", "--kernel", "power", "--k-alpha", "-2.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nlcalc(&["check-kernel", "--kernel", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn derive_linear_is_one() {
    let o = nlcalc(&["derive", "--function", "linear", "--kernel", "exponential", "--epsilon", "0.2", "--epsilon", "0.1", "--n", "21"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("t,eps=0.2,eps=0.1,classical\n"));
    for row in csv_rows(&text) {
        assert!((row[1] - 1.0).abs() < 1e-10 && (row[2] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn derive_from_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    let mut text = String::from("t,value\n");
    for i in 0..256 {
        let t = -4.0 + 8.0 * i as f64 / 256.0;
        text.push_str(&format!("{t},{}\n", (-t * t).exp()));
    }
    std::fs::write(&input, text).unwrap();
    let o = nlcalc(&["derive", "--input", input.to_str().unwrap(), "--kernel", "indicator", "--epsilon", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&stdout(&o)) {
        let exact = -2.0 * row[0] * (-row[0] * row[0]).exp();
        assert!((row[1] - exact).abs() < 1e-2);
    }
    // evaluation points whose window leaves the data are rejected
    let o = nlcalc(&["derive", "--input", input.to_str().unwrap(), "--epsilon", "0.1", "--domain=-4,4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sine_annihilation_flag() {
    let o = nlcalc(&["derive", "--kernel", "sine", "--epsilon", "0.25", "--annihilation", "2"]);
    assert!(o.status.success());
    assert!(json(&o)["result"]["residuals"][0]["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn antiderive_exponential_runge() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = nlcalc(&[
        "antiderive", "--kernel", "exponential", "--epsilon", "0.1", "--function", "runge", "--domain=-40,40", "--n",
        "16384", "--output", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    let d: Vec<f64> = rows
        .iter()
        .filter(|r| r[0].abs() <= 10.0)
        .map(|r| r[1] - (r[0].atan() + 0.02 * r[0] / (1.0 + r[0] * r[0]).powi(2)))
        .collect();
    let spread = d.iter().copied().fold(f64::MIN, f64::max) - d.iter().copied().fold(f64::MAX, f64::min);
    assert!(spread < 1e-6, "spread {spread}");
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["kernel"], "exponential");
    assert_eq!(side["config"]["n"], 16384);
    assert!(side["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn antiderive_zero_file_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.csv");
    let mut text = String::from("# nlcalc-grid a=-2 b=2 n=64\nt,value\n");
    for i in 0..64 {
        text.push_str(&format!("{},0\n", -2.0 + 4.0 * i as f64 / 64.0));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("u.csv");
    let o = nlcalc(&[
        "antiderive", "--input", input.to_str().unwrap(), "--epsilon", "0.1", "--constant-policy", "fixed-value:2.5",
        "--output", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&std::fs::read_to_string(&out).unwrap()) {
        assert_eq!(row[1], 2.5);
    }
}

#[test]
fn antiderive_sine_lists_null_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = nlcalc(&[
        "antiderive", "--kernel", "sine", "--epsilon", "0.25", "--function", "gaussian", "--domain=-16,16", "--n",
        "1024", "--output", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    let xs: Vec<f64> = side["null_modes"].as_array().unwrap().iter().map(|m| m["xi"].as_f64().unwrap()).collect();
    for xi in [0.0, 4.0, 6.0, 8.0, -4.0] {
        assert!(xs.iter().any(|x| (x - xi).abs() < 1e-9), "{xi} missing from {xs:?}");
    }
}

#[test]
fn strict_boundary_fails() {
    let o = nlcalc(&["antiderive", "--function", "linear", "--domain=-4,4", "--n", "64", "--epsilon", "0.1", "--strict"]);
    assert_eq!(o.status.code(), Some(3));
    let o = nlcalc(&["antiderive", "--function", "gaussian", "--domain=-4,4", "--n", "64", "--epsilon", "0.1", "--epsilon", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zeros_command() {
    let o = nlcalc(&["zeros", "--kernel", "sine", "--window", "3"]);
    let z = json(&o);
    let xs: Vec<f64> = z["result"]["zeros"].as_array().unwrap().iter().map(|z| z["xi"].as_f64().unwrap()).collect();
    assert_eq!(xs.len(), 6);
    let o = nlcalc(&["zeros", "--kernel", "exponential", "--window", "100"]);
    assert_eq!(json(&o)["result"]["zeros"].as_array().unwrap().len(), 1);
    let o = nlcalc(&["zeros", "--kernel", "sine", "--window", "9", "--epsilon", "0.25"]);
    let xs: Vec<f64> = json(&o)["result"][0]["zeros"].as_array().unwrap().iter().map(|z| z["xi"].as_f64().unwrap()).collect();
    assert!((xs[1] - 4.0).abs() < 1e-9 && (xs[2] - 6.0).abs() < 1e-9);
}

#[test]
fn sweeps() {
    let o = nlcalc(&["sweep", "--experiment", "derivative-gaussian"]);
    assert!(o.status.success());
    let r = json(&o);
    assert!(r["result"]["bound_checks"].as_array().unwrap().iter().all(|b| b == true));
    assert!((r["result"]["fitted_order"].as_f64().unwrap() - 2.0).abs() < 0.2);
    let o = nlcalc(&["sweep", "--experiment", "derivative-affine"]);
    assert_eq!(json(&o)["result"]["order_status"], "floor-limited");
    let o = nlcalc(&["sweep", "--experiment", "zero-scaling", "--kernel", "exponential"]);
    assert_eq!(json(&o)["result"]["errors"][0]["zeros_found"], 0.0);
    let o = nlcalc(&["sweep", "--experiment", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn figure_dataset() {
    let o = nlcalc(&["figure", "--n", "13"]);
    let text = stdout(&o);
    assert!(text.starts_with("t,eps=1,eps=0.5,eps=0.25,classical\n"));
    let mid = text.lines().nth(7).unwrap();
    assert!(mid.starts_with("0.0") && mid.ends_with(",nan"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "kernel = \"indicator\"\nrequire = [\"positivity\"]\n").unwrap();
    let o = nlcalc(&["check-kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = nlcalc(&["check-kernel", "--config", cfg.to_str().unwrap(), "--kernel", "exponential"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["config"]["kernel"], "exponential");
    std::fs::write(&cfg, "kernal = 1\n").unwrap();
    assert_eq!(nlcalc(&["zeros", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = nlcalc_env(
            &["antiderive", "--kernel", "power", "--k-alpha", "-1.5", "--epsilon", "0.25", "--function", "gaussian", "--domain=-8,8", "--n", "512", "--output", out.to_str().unwrap()],
            "NLCALC_THREADS",
            threads,
        );
        assert!(o.status.success());
        (std::fs::read(&out).unwrap(), std::fs::read(out.with_extension("json")).unwrap())
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    assert_eq!(a.0, b.0);
    let strip = |v: &[u8]| {
        let mut j: serde_json::Value = serde_json::from_slice(v).unwrap();
        j["version"] = serde_json::Value::Null;
        j["config"]["output"] = serde_json::Value::Null;
        j
    };
    assert_eq!(strip(&a.1), strip(&b.1));
    assert!(Path::new(&dir.path().join("a.json")).exists());
    assert_eq!(nlcalc_env(&["zeros"], "NLCALC_THREADS", "zero").status.code(), Some(2));
}
