use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_garland-kit");

const MAP_Q3: &str = r#"{"schema":"garland-kit/1","q":3,"map":{"max_degree":7,"terms":[
 {"m":1,"k":0,"re":-0.5,"im":0.8660254037844386},
 {"m":2,"k":1,"re":0.0,"im":0.3},
 {"m":0,"k":3,"re":0.2,"im":-0.1},
 {"m":3,"k":0,"re":0.05,"im":0.0},
 {"m":0,"k":5,"re":0.1,"im":0.2},
 {"m":3,"k":2,"re":0.0,"im":0.4}]}}"#;

const FLOW_Q3: &str = r#"{"schema":"garland-kit/1","flow":{"model":"Symmetric","q":3,"mu1":-0.01,"phi_coeffs":[1.0],"alpha":1.0}}"#;

const TWIST_Q3: &str =
    r#"{"schema":"garland-kit/1","q":3,"twist_kick":{"p":1,"q":3,"mu":-0.01,"twist":[1.0],"alpha":1.0}}"#;

fn write_input(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("GARLAND_KIT_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn normalize_writes_result_and_manifest() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "map.json", MAP_Q3);
    let out = dir.path().join("out");
    let o = run(&["normalize", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let nf = read_json(&out.join("normal_form.json"));
    for key in ["normalized_map", "transform", "omega_coeffs", "leading_nonidentical", "degeneracy_flags"] {
        assert!(nf.get(key).is_some(), "missing {key}");
    }
    // only resonant monomials remain: m - 1 - k divisible by 3
    for t in nf["normalized_map"]["terms"].as_array().unwrap() {
        let (m, k) = (t["m"].as_i64().unwrap(), t["k"].as_i64().unwrap());
        assert_eq!((m - 1 - k).rem_euclid(3), 0, "non-resonant z^{m} z*^{k}");
    }
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["tool"], "garland-kit");
    assert_eq!(manifest["exit_code"], 0);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    let art = &manifest["artifacts"][0];
    assert_eq!(art["file"], "normal_form.json");
    let bytes = std::fs::read(out.join("normal_form.json")).unwrap();
    assert_eq!(art["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
}

#[test]
fn even_q_exits_with_domain_code() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "map.json", MAP_Q3);
    let out = dir.path().join("out");
    let o = run(&["normalize", "--input", &input, "--q", "4", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("odd"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_a_schema_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = FLOW_Q3.replace("\"mu1\"", "\"mu_1\"");
    let input = write_input(dir.path(), "bad.json", &bad);
    let out = dir.path().join("out");
    let o = run(&["garland", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("flow") && err.contains("mu_1"), "{err}");
}

#[test]
fn schema_version_is_checked() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "v.json", &FLOW_Q3.replace("garland-kit/1", "garland-kit/0"));
    let out = dir.path().join("out");
    let o = run(&["garland", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("schema"));
}

#[test]
fn unused_flags_and_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "f.json", FLOW_Q3);
    let out = dir.path().join("out");
    let o = run(&["garland", "--input", &input, "--resolution", "8", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--resolution"));
    let input = write_input(dir.path(), "m.json", MAP_Q3);
    let o = run(&["garland", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not used by `garland`"), "{}", stderr(&o));
}

#[test]
fn tolerance_floor_is_enforced() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "f.json", FLOW_Q3);
    let out = dir.path().join("out");
    let o = run(&["garland", "--input", &input, "--tol-newton", "1e-15", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("floor"));
}

#[test]
fn atlas_default_grid_has_4096_rows_and_four_regions() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = run(&["atlas", "--format", "csv", "--resolution", "64", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("atlas.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mu1,mu2,region,n_saddle,n_center,n_focus"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4096);
    let regions: BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert_eq!(regions, BTreeSet::from(["I", "II", "III", "IV"]));
    let curves = std::fs::read_to_string(out.join("curves.csv")).unwrap();
    assert!(curves.starts_with("curve,branch,mu1,mu2,analytic\n"));
    assert!(curves.lines().count() > 10);
}

#[test]
fn outputs_are_deterministic_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let flow = write_input(dir.path(), "f.json", FLOW_Q3);
    let twist = write_input(dir.path(), "t.json", TWIST_Q3);
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["atlas", "--format", "csv", "--resolution", "16"], "atlas.csv"),
        (vec!["atlas", "--format", "json", "--resolution", "12"], "atlas.json"),
        (vec!["garland", "--input", &flow], "garland.json"),
        (vec!["orbit", "--input", &twist], "orbits.json"),
        (vec!["portrait", "--input", &flow, "--format", "csv", "--seed", "7"], "portrait.csv"),
        (vec!["portrait", "--input", &flow, "--format", "svg", "--seed", "7"], "portrait.svg"),
    ];
    for (i, (args, file)) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "4"] {
            let out = dir.path().join(format!("run{i}_{threads}_{}", outputs.len()));
            let mut a = args.clone();
            let o_str = out.to_str().unwrap().to_owned();
            a.extend(["--out", &o_str]);
            let o = run(&a, &[("GARLAND_KIT_THREADS", threads)]);
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
            outputs.push(std::fs::read(out.join(file)).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{file} differs between runs");
    }
}

#[test]
fn garland_csv_lists_alternating_census() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "f.json", FLOW_Q3);
    let out = dir.path().join("out");
    let o = run(&["garland", "--input", &input, "--format", "csv", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("equilibria.csv")).unwrap();
    let kinds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(kinds.len(), 12);
    assert_eq!(kinds.iter().filter(|k| **k == "saddle").count(), 6);
    assert_eq!(kinds.iter().filter(|k| **k == "center").count(), 6);
}

#[test]
fn orbit_search_reports_four_orbits_and_pairs() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "t.json", TWIST_Q3);
    let out = dir.path().join("out");
    let o = run(&["orbit", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&out.join("orbits.json"));
    let orbits = v["search"]["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), 4);
    assert_eq!(v["garland"]["label"], "G22_qq");
    for orb in orbits {
        assert!((orb["jacobian_det"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(orb["points"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn portrait_seed_controls_initial_points() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "f.json", FLOW_Q3);
    let mut texts = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(format!("s{seed}"));
        let o = run(
            &["portrait", "--input", &input, "--seed", seed, "--format", "csv", "--out", out.to_str().unwrap()],
            &[],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        texts.push(std::fs::read_to_string(out.join("portrait.csv")).unwrap());
    }
    assert!(texts[0].starts_with("traj,t,x,y,r,psi,H,div\n"));
    assert_ne!(texts[0], texts[1]);
    // conservative model: H is constant along each trajectory
    let mut first_h = std::collections::HashMap::new();
    for line in texts[0].lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let h: f64 = f[6].parse().unwrap();
        let h0 = *first_h.entry(f[0].to_owned()).or_insert(h);
        assert!((h - h0).abs() < 1e-8, "H drift {}", (h - h0).abs());
    }
}

#[test]
fn embed_reports_residual_order() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "map.json", MAP_Q3);
    let out = dir.path().join("out");
    let o = run(&["embed", "--input", &input, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&out.join("embedding.json"));
    assert!(v["embedding"]["field"]["terms"].is_array());
    let order = v["residual"]["order"].as_f64().unwrap();
    assert!(order >= 2.0 * 3.0 + 0.7, "order {order}");
}

#[test]
fn svg_renderings_are_well_formed() {
    let dir = TempDir::new().unwrap();
    let flow = write_input(dir.path(), "f.json", FLOW_Q3);
    let twist = write_input(dir.path(), "t.json", TWIST_Q3);
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["atlas", "--resolution", "8"], "atlas.svg"),
        (vec!["garland", "--input", &flow], "garland.svg"),
        (vec!["orbit", "--input", &twist], "orbits.svg"),
    ];
    for (i, (args, file)) in cases.into_iter().enumerate() {
        let out = dir.path().join(format!("svg{i}"));
        let o_str = out.to_str().unwrap().to_owned();
        let mut a = args.clone();
        a.extend(["--format", "svg", "--out", &o_str]);
        let o = run(&a, &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn normalize_has_no_svg_output() {
    let dir = TempDir::new().unwrap();
    let input = write_input(dir.path(), "map.json", MAP_Q3);
    let out = dir.path().join("out");
    let o = run(&["normalize", "--input", &input, "--format", "svg", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
}
