use std::path::Path;
use std::process::{Command, Output};

fn msmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

/// Lattice states of size `m` farther than `1/m` from all four centres. Sizes
/// divisible by 3 put states exactly at distance `1/m`, where rounding decides;
/// the tests avoid them.
fn states_off_centre(m: usize) -> usize {
    let c = [[4, 1, 1], [1, 4, 1], [1, 1, 4], [2, 2, 2]];
    let mut n = 0;
    for a in 0..=m {
        for b in 0..=m - a {
            let s = [a, b, m - a - b];
            // 6M·s − M·c in integers; distance² = Σ/(2·36M²) > 1/M².
            let near = c.iter().any(|c| {
                let sq: i64 = (0..3).map(|i| (6 * s[i] as i64 - (m * c[i]) as i64).pow(2)).sum();
                sq <= 72
            });
            n += !near as usize;
        }
    }
    n
}

#[test]
fn counterexample_succeeds() {
    let out = msmc(&["counterexample"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    let v: f64 = r[0][1].parse().unwrap();
    assert!((v - 0.1401).abs() < 5e-5, "{v}");
}

#[test]
fn drift_holds_at_fifty() {
    let out = msmc(&["drift-verify", "--M", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(r.len(), states_off_centre(50));
    assert!(r.iter().all(|row| row[6].parse::<f64>().unwrap() <= 0.0));
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = msmc(&["bounds", "--input", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "M = 50\nbogus = 3\n").unwrap();
    let out = msmc(&["drift-verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn config_values_are_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sizes\nM = 20\n").unwrap();
    let a = msmc(&["drift-verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(rows(&a).len(), states_off_centre(20));
    let b = msmc(&["drift-verify", "--config", cfg.to_str().unwrap(), "--M", "13"]);
    assert_eq!(rows(&b).len(), states_off_centre(13));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = msmc(&[
            "smc-run",
            "--M",
            "15",
            "--N",
            "300",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("smc-run.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn manifest_records_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = msmc(&["coupling-tail", "--M", "12", "--replicates", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("coupling-tail.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "coupling-tail");
    assert_eq!(m["parameters"]["M"], 12);
    assert_eq!(m["parameters"]["replicates"], 50);
    assert!(m["parameters"]["seed"].is_u64());
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["git_describe"].is_string());
}

#[test]
fn growth_constants_have_one_row_per_prefix() {
    let out = msmc(&["growth-constants", "--M", "1001"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    // j = 2..=1000.
    assert_eq!(r.len(), 999);
    assert_eq!(r[0][0], "2");
}

#[test]
fn bounds_on_a_sequence_file() {
    let out = msmc(&["bounds", "--input", &data("counterexample-no-mixing.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert!(r.iter().any(|row| row[0] == "no-mixing-between-modes"));
    assert!(r.iter().all(|row| row[4] == "true"));
}

#[test]
fn variance_terms_sum_to_the_counterexample_value() {
    let out = msmc(&["variance-exact", "--input", &data("counterexample-mixing.json")]);
    let total: f64 = rows(&out).iter().map(|row| row[1].parse::<f64>().unwrap()).sum();
    assert!((total - 0.1401).abs() < 5e-5, "{total}");
}

#[test]
fn json_format_is_valid() {
    let out = msmc(&["riemann-gauss", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn bad_values_are_usage_errors() {
    for args in [
        &["drift-verify", "--M", "ten"][..],
        &["smc-run", "--policy", "sometimes"],
        &["loglik-check", "--form", "circle"],
        &["contour", "--format", "xml"],
    ] {
        assert_eq!(msmc(args).status.code(), Some(2), "{args:?}");
    }
}
