mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use common::*;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_measure_shape_and_dispatch() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("sp");
    run(&["simulate-measure", "--kind", "sp", "--d", "0.5", "--centering", "pareto1", "--paths", "50", "--out-dir", s(&out)]);
    let header = csv_header(&out.join("trajectories.csv"));
    assert_eq!(header.iter().filter(|h| h.starts_with("path_")).count(), 50);
    assert_eq!(header.iter().filter(|h| h.starts_with("envelope_")).count(), 2);
    assert_eq!(csv_rows(&out.join("trajectories.csv")).len(), 200);
    schema_valid("envelopes.schema.json", &out.join("envelopes.json")).unwrap();

    let dp = t.path().join("dp");
    run(&["simulate-measure", "--kind", "dp", "--m", "1", "--paths", "4", "--points", "30", "--out-dir", s(&dp)]);
    let rows = csv_rows(&dp.join("trajectories.csv"));
    assert_eq!((rows.len(), rows[0].len()), (30, 2 + 4 + 2));
    // log survival is nonpositive and nonincreasing along every path
    for j in 2..6 {
        let col: Vec<f64> = rows.iter().map(|r| r[j].parse().unwrap()).collect();
        assert!(col.windows(2).all(|w| w[1] <= w[0] && w[0] <= 0.0));
    }
    assert!(identical_twice(t.path(), "rep", &["simulate-measure", "--paths", "5", "--seed", "9"]));
}

#[test]
fn envelopes_leave_undefined_points_empty() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("e");
    run(&["envelopes", "--kind", "sp", "--d", "0.5", "--y-min", "1.1", "--y-max", "100", "--points", "20", "--out-dir", s(&out)]);
    let rows = csv_rows(&out.join("envelopes.csv"));
    // the upper envelope needs 1 - G0(y) < e^-2, i.e. y > e^2 for unit Pareto
    for r in &rows {
        let y: f64 = r[0].parse().unwrap();
        assert_eq!(r[3].is_empty(), y <= 2f64.exp(), "{r:?}");
    }
    assert!(identical_twice(t.path(), "rep", &["envelopes", "--kind", "dp", "--m", "2"]));
}

#[test]
fn gen_data_every_scenario() {
    let t = tempfile::tempdir().unwrap();
    for id in ["uni_pareto", "biv1", "biv2", "biv3", "cond1", "cond2", "cond3"] {
        let out = t.path().join(id);
        run(&["gen-data", "--scenario", id, "--n", "37", "--out-dir", s(&out)]);
        let rows = csv_rows(&out.join("data.csv"));
        assert_eq!(rows.len(), 37);
        let cols = match id {
            "uni_pareto" => 1,
            c if c.starts_with("cond") => 3,
            _ => 2,
        };
        assert!(rows.iter().all(|r| r.len() == cols));
        schema_valid("gen-data.schema.json", &out.join("data.json")).unwrap();
    }
    assert!(identical_twice(t.path(), "rep", &["gen-data", "--scenario", "cond2", "--n", "20", "--seed", "5"]));
    assert_eq!(code(&["gen-data", "--scenario", "biv9"]), 2);
}

#[test]
fn micro_fit_diagnose_and_determinism() {
    let t = tempfile::tempdir().unwrap();
    let g = t.path().join("g");
    run(&["gen-data", "--scenario", "uni_pareto", "--n", "50", "--seed", "2", "--out-dir", s(&g)]);
    let data = g.join("data.csv");

    let f = t.path().join("f");
    let start = Instant::now();
    run(&["fit", "--data", s(&data), "--burn-in", "200", "--keep", "200", "--seed", "3", "--out-dir", s(&f)]);
    assert!(start.elapsed().as_secs_f64() < 10.0, "{:?}", start.elapsed());
    schema_valid("fit.schema.json", &f.join("summary.json")).unwrap();
    assert!(f.join("chain_1.bin").exists());

    let d = t.path().join("d");
    run(&["diagnose", "--data", s(&data), "--fit-dir", s(&f), "--out-dir", s(&d)]);
    assert_eq!(csv_rows(&d.join("residuals.csv")).len(), 50);
    schema_valid("diagnose.schema.json", &d.join("residuals.json")).unwrap();
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("residuals.json")).unwrap()).unwrap();
    assert!(r["clamped"].is_array());
    assert_eq!(r["draws"], 200);

    let fit = ["fit", "--data", s(&data), "--burn-in", "50", "--keep", "50", "--chains", "3", "--seed", "8"];
    assert!(identical_twice(t.path(), "fit", &fit));
    // thread count does not change the chains
    let (a, b) = (t.path().join("t1"), t.path().join("t3"));
    run(&[&fit[..], &["--threads", "1", "--out-dir", s(&a)]].concat());
    run(&[&fit[..], &["--threads", "3", "--out-dir", s(&b)]].concat());
    assert_eq!(snapshot(&a), snapshot(&b));
    assert!(identical_twice(t.path(), "diag", &["diagnose", "--data", s(&data), "--fit-dir", s(&f), "--seed", "1"]));

    let plain = t.path().join("nolog");
    run(&["fit", "--data", s(&data), "--burn-in", "5", "--keep", "5", "--chain-log", "false", "--out-dir", s(&plain)]);
    assert!(!plain.join("chain_1.bin").exists());
    assert_eq!(code(&["diagnose", "--data", s(&data), "--fit-dir", s(&plain)]), 2);
}

#[test]
fn bivariate_and_conditional_fits() {
    let t = tempfile::tempdir().unwrap();
    for id in ["biv1", "cond2"] {
        let g = t.path().join(id);
        run(&["gen-data", "--scenario", id, "--n", "40", "--out-dir", s(&g)]);
        let f = t.path().join(format!("{id}_fit"));
        run(&[
            "fit", "--data", s(&g.join("data.csv")), "--burn-in", "30", "--keep", "30", "--grid-points", "10",
            "--joint", "true", "--out-dir", s(&f),
        ]);
        schema_valid("fit.schema.json", &f.join("summary.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.join("summary.json")).unwrap()).unwrap();
        let panels = v["posterior"]["panels"].as_array().unwrap().len();
        assert_eq!(panels, if id == "cond2" { 3 } else { 1 });
        assert_eq!(csv_rows(&f.join("predictive.csv")).len(), panels * 2 * 10);
    }
}

#[test]
fn replicate_study_smoke() {
    let t = tempfile::tempdir().unwrap();
    let args = ["replicate-study", "--replicates", "3", "--n", "200", "--burn-in", "100", "--keep", "100", "--grid-points", "25"];
    let out = t.path().join("s");
    run(&[&args[..], &["--out-dir", s(&out)]].concat());
    // two default models, one margin, 25 points
    assert_eq!(csv_rows(&out.join("study.csv")).len(), 2 * 25);
    schema_valid("study.schema.json", &out.join("study.json")).unwrap();
    for r in 1..=3 {
        schema_valid("replicate.schema.json", &out.join(format!("replicate_{r:03}_uni_scale.json"))).unwrap();
    }
    assert!(identical_twice(t.path(), "rep", &[&args[..], &["--threads", "2", "--seed", "4"]].concat()));

    let c = t.path().join("c");
    run(&["replicate-study", "--scenario", "cond1", "--replicates", "2", "--n", "60", "--burn-in", "20", "--keep", "20",
        "--grid-points", "8", "--x-panels", "0.2,0.8", "--out-dir", s(&c)]);
    assert_eq!(csv_rows(&c.join("study.csv")).len(), 2 * 2 * 8);
}

#[test]
fn config_layering_env_and_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("c.toml");
    fs::write(&cfg, "paths = 3\npoints = 12\nseed = 4\nkind = \"dp\"\n").unwrap();
    let a = t.path().join("a");
    run(&["simulate-measure", "--config", s(&cfg), "--points", "9", "--out-dir", s(&a)]);
    let rows = csv_rows(&a.join("trajectories.csv"));
    assert_eq!((rows.len(), rows[0].len()), (9, 2 + 3 + 2));
    assert!(fs::read_to_string(a.join("trajectories.csv")).unwrap().starts_with("# pyptail 0.1.0 seed=4\n"));

    let env_dir = t.path().join("from_env");
    let out = bin()
        .args(["envelopes", "--points", "5"])
        .env("PYPTAIL_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("envelopes.csv").exists());

    fs::write(&cfg, "pathz = 3\n").unwrap();
    assert_eq!(code(&["simulate-measure", "--config", s(&cfg)]), 2);
    assert_eq!(code(&["simulate-measure", "--config", s(&t.path().join("missing.toml"))]), 2);
    assert_eq!(code(&["simulate-measure", "--d", "1.5", "--out-dir", s(&a)]), 2);
    assert_eq!(code(&["fit", "--nonsense"]), 2);
    assert_eq!(code(&["fit"]), 2);
    assert_eq!(code(&["envelopes", "--r", "0.5"]), 2);

    // data outside the model's support fails at run time
    let bad = t.path().join("bad.csv");
    fs::write(&bad, "y1\n1.5\n-2\n").unwrap();
    assert_eq!(code(&["fit", "--data", s(&bad), "--burn-in", "1", "--keep", "1", "--grid-min", "1", "--grid-max", "5", "--out-dir", s(&a)]), 1);
}
