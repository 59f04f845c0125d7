use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DESIGN: &str = r#"
n_units = 24
n_times = 31
e_sd = 0.3
n_groups = 6
start_time = 1993
beta0 = [{ kind = "sine", amplitude = 1.0, frequency = 0.5 }, { kind = "constant", value = 0.0 }]
x_process = [{ sd = 1.0, phi = 0.3 }]
u_process = { sd = 0.5 }
"#;

fn tvmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvmg")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulates the standard design and returns the panel path.
fn simulated(dir: &TempDir) -> PathBuf {
    let spec = dir.path().join("design.toml");
    fs::write(&spec, DESIGN).unwrap();
    let out = dir.path().join("sim");
    let res = tvmg(&["simulate", "--spec", s(&spec), "--seed", "7", "--out-dir", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    out.join("panel.csv")
}

fn meta(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn alpha_half_on_31_periods_records_bandwidth() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let out = dir.path().join("est");
    let res = tvmg(&["tvmg", "--input", s(&panel), "--outcome", "y", "--alpha", "0.5", "--out-dir", s(&out)]);
    assert!(res.status.success());
    let m = meta(&out.join("tvmg.csv.meta.json"));
    assert!((m["bandwidth"].as_f64().unwrap() - 5.5678).abs() < 1e-4);
    assert_eq!(m["kernel"], "gaussian");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_then_tvmg_produces_parseable_reports() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let out = dir.path().join("est");
    let res = tvmg(&["tvmg", "--input", s(&panel), "--outcome", "y", "--min-duration", "2", "--out-dir", s(&out)]);
    assert!(res.status.success());

    let mut rdr = csv::Reader::from_path(out.join("significance.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["var", "start", "end", "length", "direction"]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec[3].parse::<usize>().unwrap() >= 2);
        assert!(["positive", "negative"].contains(&&rec[4]));
    }

    let mut rdr = csv::Reader::from_path(out.join("tvmg.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["time", "var", "beta", "se", "ci_lo", "ci_hi", "n_eff"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 31 * 3);
    let json = meta(&out.join("tvmg.json"));
    let jrows = json["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len());
    for (r, j) in rows.iter().zip(jrows) {
        assert_eq!(r[2].parse::<f64>().unwrap(), j["beta"].as_f64().unwrap());
        assert_eq!(r[3].parse::<f64>().unwrap(), j["se"].as_f64().unwrap());
    }
}

#[test]
fn cv_default_grid_lists_twelve_rows() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let out = dir.path().join("cv");
    assert!(tvmg(&["cv-bandwidth", "--input", s(&panel), "--outcome", "y", "--out-dir", s(&out)]).status.success());
    let mut rdr = csv::Reader::from_path(out.join("cv.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let grid: Vec<f64> = rows.iter().filter(|r| &r[0] == "grid").map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(grid.len(), 12);
    for (i, a) in grid.iter().enumerate() {
        assert!((a - (0.30 + 0.05 * i as f64)).abs() < 1e-12);
    }
    let best: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] == "best").collect();
    assert_eq!(best.len(), 1);
    assert!(grid.contains(&best[0][1].parse::<f64>().unwrap()));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let series = dir.path().join("series.csv");
    let mut text = String::from("time,y,x\n");
    for t in 0..40 {
        let x = ((t * 7) % 11) as f64 / 5.0 - 1.0;
        text.push_str(&format!("{},{},{}\n", 1980 + t, 1.0 + 0.5 * x + ((t * 13) % 5) as f64 * 0.1, x));
    }
    fs::write(&series, text).unwrap();
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        assert!(tvmg(&["tvmg", "--input", s(&panel), "--outcome", "y", "--out-dir", s(&out)]).status.success());
        let res = tvmg(&[
            "aggregate-tv", "--input", s(&series), "--outcome", "y", "--regressors", "x", "--replications", "150",
            "--seed", "11", "--out-dir", s(&out),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn exit_codes_and_no_partial_output() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let out = dir.path().join("never");

    let res = tvmg(&["tvmg", "--input", s(&panel), "--out-dir", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--outcome"));

    let res = tvmg(&["tvmg", "--input", s(&panel), "--outcome", "missing_col", "--out-dir", s(&out)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing_col"));

    let res = tvmg(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));

    let series = dir.path().join("series.csv");
    fs::write(&series, "time,y,x\n1,1,2\n2,2,2\n3,3,2\n4,4,2\n5,5,2\n").unwrap();
    let res = tvmg(&[
        "aggregate-tv", "--input", s(&series), "--outcome", "y", "--regressors", "x", "--bands", "normal",
        "--out-dir", s(&out),
    ]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));

    let res = tvmg(&["aggregate-tv", "--input", s(&series), "--outcome", "y", "--bands", "mbb", "--out-dir", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--seed"));

    assert_eq!(String::from_utf8_lossy(&res.stderr).trim_end().lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    let panel = simulated(&dir);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("[tvmg]\ninput = {:?}\noutcome = \"y\"\nalpha = 0.6\nkernel = \"epanechnikov\"\n", s(&panel))).unwrap();
    let out = dir.path().join("cfg");
    let res = tvmg(&["--config", s(&cfg), "tvmg", "--alpha", "0.45", "--out-dir", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let m = meta(&out.join("tvmg.csv.meta.json"));
    assert!((m["bandwidth"].as_f64().unwrap() - 4.69).abs() < 0.01);
    assert_eq!(m["kernel"], "epanechnikov");
}

#[test]
fn transform_and_pca_outputs() {
    let dir = TempDir::new().unwrap();
    let q = dir.path().join("q.csv");
    let mut text = String::from("date,lvl,grow\n");
    for y in 2000..2008 {
        for k in 1..=4 {
            let t = ((y - 2000) * 4 + k) as f64;
            text.push_str(&format!("{y}Q{k},{},{}\n", t * t, 100.0 * (0.01 * t + 0.001 * t * t).exp()));
        }
    }
    fs::write(&q, text).unwrap();
    let tc = dir.path().join("tc.csv");
    fs::write(&tc, "series,tcode\nlvl,2\ngrow,5\n").unwrap();
    let out = dir.path().join("pca");
    let res = tvmg(&["pca", "--input", s(&q), "--tcodes", s(&tc), "--k", "2", "--out-dir", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rdr = csv::Reader::from_path(out.join("pca_explained.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let cum: f64 = rows[1][3].parse().unwrap();
    assert!((cum - 1.0).abs() < 1e-12);
    let scores = fs::read_to_string(out.join("pca_scores.csv")).unwrap();
    assert!(scores.starts_with("time,pc1,pc2\n2001,"));
    assert!(out.join("transformed.csv.meta.json").exists());
}
