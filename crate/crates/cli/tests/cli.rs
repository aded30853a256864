use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspidal")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn generate(dir: &Path, args: &[&str]) {
    let out = run(dir, &[&["generate"], args].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generated_delta_matches_known_coefficients() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "1000", "--out", "delta.json"]);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("delta.json")).unwrap()).unwrap();
    assert_eq!(file["schema"], "cuspidal/1");
    assert_eq!(file["weight"], 12);
    assert_eq!(file["level"], 1);
    let c = file["coefficients"].as_array().unwrap();
    assert_eq!(c.len(), 1000);
    let tau: Vec<f64> = c.iter().take(6).map(|v| complex(v).0).collect();
    assert_eq!(tau, [1.0, -24.0, 252.0, -1472.0, 4830.0, -6048.0]);
}

#[test]
fn petersson_norm_of_delta() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "1000", "--out", "delta.json"]);
    let out = run(dir.path(), &["petersson", "--f", "delta.json", "--g", "delta.json", "--digits", "9"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["kind"], "pair");
    let (re, im) = complex(&r["value"]);
    assert!((re - 9.8869793538e-7).abs() <= 1e-15 + 1e-17, "{re}");
    assert_eq!(im, 0.0);
}

#[test]
fn expansion_at_one_third_is_the_form_itself() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:2,2:2,3:2,6:2", "--n", "2000", "--out", "level6.json"]);
    let args = ["expand", "--form", "level6.json", "--cusp", "1/3", "--digits", "12", "--coeffs", "35", "--decay", "1.0", "--method", "direct", "--seed", "0"];
    let out = run(dir.path(), &args);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["h"], 2);
    let b = r["coefficients"].as_array().unwrap();
    for (n, target) in [1.0, -2.0, -3.0, 4.0, 6.0, 6.0].into_iter().enumerate() {
        let (re, im) = complex(&b[n + 1]);
        assert!((re - target).hypot(im) <= 1e-10, "b{} = {re} + {im}i", n + 1);
    }
    // fixed seed, identical bytes
    assert_eq!(run(dir.path(), &args).stdout, out.stdout);
}

#[test]
fn all_cusps_of_a_level_one_form() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "100", "--out", "delta.json"]);
    let r = json(&run(dir.path(), &["expand", "--form", "delta.json", "--cusp", "all", "--coeffs", "10"]));
    let reports = r["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["method"], "input");
    assert_eq!(complex(&reports[0]["coefficients"][2]), (-24.0, 0.0));
}

#[test]
fn eigen_expansion_of_the_level_27_fixture() {
    let dir = TempDir::new().unwrap();
    let f = fixture("level27_wt4.json");
    let out = run(dir.path(), &["expand", "--form", &f, "--cusp", "1,-1,3,-2", "--method", "eigen", "--digits", "12", "--coeffs", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let c = r["basis_coefficients"].as_array().unwrap();
    let big = c.iter().map(complex).filter(|(re, im)| re.hypot(*im) > 1e-6).count();
    assert_eq!(big, 4);
    for (re, im) in c.iter().map(complex).filter(|(re, im)| re.hypot(*im) > 1e-6) {
        assert!((re.abs() - 0.469846310392954).abs() < 1e-10 && (im.abs() - 0.171010071662834).abs() < 1e-10);
    }
}

#[test]
fn ratio_of_stabilization_free_dilation() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--newform", "--n", "2000", "--out", "delta.json"]);
    std::fs::write(dir.path().join("delta11.json"), r#"{"schema":"cuspidal/1","dilation":{"form":"delta.json","m":11}}"#).unwrap();
    let out = run(dir.path(), &["ratio", "--f", "delta11.json", "--g", "delta.json", "--h", "delta.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (re, _) = complex(&json(&out)["value"]);
    let target = 534612.0 / (11f64.powi(11) * 12.0);
    assert!((re / target - 1.0).abs() <= 1e-5);
}

#[test]
fn mismatched_characters_give_zero_with_a_note() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "400", "--out", "delta.json"]);
    generate(dir.path(), &["--level1", "18", "--n", "400", "--out", "h18.json"]);
    let f = fixture("level5_wt6_quadratic.json");
    let out = run(dir.path(), &["triple", "--f", &f, "--g", "delta.json", "--h", "h18.json"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(complex(&r["value"]), (0.0, 0.0));
    assert!(r["note"].as_str().unwrap().contains("vanishes"));
}

#[test]
fn level_one_weight_24_gives_both_conjugates() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--level1", "24", "--n", "50", "--out", "h24.json"]);
    let a2 = 540.0 - 12.0 * 144169f64.sqrt();
    let found: Vec<f64> = ["h24_0.json", "h24_1.json"]
        .iter()
        .map(|name| {
            let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
            complex(&v["coefficients"][1]).0
        })
        .collect();
    assert!(found.iter().any(|x| (x - a2).abs() < 1e-8), "{found:?}");
    assert!(found.iter().any(|x| (x - (1080.0 - a2)).abs() < 1e-8), "{found:?}");
}

#[test]
fn twist_generation_reproduces_the_level_9_norm() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:6,3:6", "--twist-minimal", "--n", "3000", "--out", "f2.json"]);
    generate(dir.path(), &["--twist", "f2.json", "--char", "3:1/2", "--n", "3000", "--out", "f9.json"]);
    let r = json(&run(dir.path(), &["petersson", "--f", "f9.json", "--g", "f9.json", "--digits", "11"]));
    assert_eq!(r["level"], 9);
    let (re, _) = complex(&r["value"]);
    assert!((re / 1.220147952e-5 - 1.0).abs() <= 1e-7, "{re}");
}

#[test]
fn check_passes_and_fails() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "1000", "--out", "delta.json"]);
    std::fs::write(dir.path().join("adj.json"), r#"{"kind":"adjoint","weight":12,"factors":[]}"#).unwrap();
    std::fs::write(
        dir.path().join("perturbed.json"),
        r#"{"kind":"adjoint","weight":12,"factors":[{"case":"special-minimal","p":3}]}"#,
    )
    .unwrap();
    let pass = run(dir.path(), &["check", "--f", "delta.json", "--lvalue", "0.6317929457", "--local-spec", "adj.json"]);
    assert_eq!(pass.status.code(), Some(0));
    assert_eq!(json(&pass)["check"]["pass"], true);
    let fail = run(dir.path(), &["check", "--f", "delta.json", "--lvalue", "0.6317929457", "--local-spec", "perturbed.json"]);
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(json(&fail)["check"]["pass"], false);
}

#[test]
fn ichino_check_for_level_one_triple() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "1000", "--out", "delta.json"]);
    generate(dir.path(), &["--level1", "24", "--n", "1000", "--out", "h24.json"]);
    std::fs::write(dir.path().join("ichino.json"), r#"{"kind":"ichino","k":12,"m":24,"tolerance":1e-4}"#).unwrap();
    let args = ["check", "--f", "delta.json", "--g", "delta.json", "--h", "h24_0.json", "--lvalue", "1.1302460925", "--local-spec", "ichino.json"];
    let out = run(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), &["--eta", "1:24", "--n", "1000", "--out", "delta.json"]);
    let too_precise = run(dir.path(), &["petersson", "--f", "delta.json", "--g", "delta.json", "--digits", "14"]);
    assert_eq!(too_precise.status.code(), Some(2));
    let missing = run(dir.path(), &["petersson", "--f", "nope.json", "--g", "delta.json"]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(dir.path().join("broken.json"), "{\"schema\": \"cuspidal/1\", \"weight\": ").unwrap();
    assert_eq!(run(dir.path(), &["petersson", "--f", "broken.json", "--g", "broken.json"]).status.code(), Some(2));

    generate(dir.path(), &["--eta", "1:2,2:2,3:2,6:2", "--n", "12", "--out", "short.json"]);
    let out = run(dir.path(), &["petersson", "--f", "short.json", "--g", "short.json"]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    assert_eq!(r["kind"], "error");
    assert!(r["error"].as_str().unwrap().contains("coefficients"));
}
