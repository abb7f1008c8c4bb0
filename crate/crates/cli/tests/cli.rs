use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use annular_euler::dispersion::{gamma_star_single, gamma_star_pair};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_annular-euler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn column(headers: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn single_phase_branch_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = run(&["branch", "--problem", "single", "--lambda", "0.5", "--k", "1", "--steps", "20", "--ds", "0.002", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out.join("branch.csv"));
    assert_eq!(rows.len(), 21);
    let s = column(&h, &rows, "s");
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert!(column(&h, &rows, "residual_sup").iter().all(|r| *r < 1e-9));
    let gamma = column(&h, &rows, "gamma");
    let closed = gamma_star_single(1, 0.5).unwrap();
    assert!((gamma[0] - closed).abs() < 1e-6, "{} vs {closed}", gamma[0]);
    let m = manifest(&out);
    assert_eq!(m["run"]["start"]["source"], "detected");
    assert_eq!(m["run"]["tolerances"]["residual_sup"], 1e-9);
    assert_eq!(m["run"]["solver"]["n_radial"], 48);
}

#[test]
fn diagrams_reproduce_the_mode_one_statements() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single");
    assert!(run(&["diagram", "--out", single.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&single.join("diagram.csv"));
    assert_eq!(h, ["k", "lambda", "gamma_root"]);
    assert_eq!(rows.len(), 63);
    let k = column(&h, &rows, "k");
    let g = column(&h, &rows, "gamma_root");
    assert!(k.iter().zip(&g).filter(|(k, _)| **k == 1.0).all(|(_, g)| *g < -4.0));

    let two = dir.path().join("two");
    assert!(run(&["diagram", "--problem", "two_phase", "--gamma1", "-2", "--k", "1,2", "--out", two.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&two.join("diagram.csv"));
    let k = column(&h, &rows, "k");
    let g = column(&h, &rows, "gamma_root");
    assert!(k.iter().zip(&g).filter(|(k, _)| **k == 1.0).all(|(_, g)| (*g - 1.0).abs() < 1e-12));

    let pair = dir.path().join("pair");
    assert!(run(&["diagram", "--problem", "pair", "--k", "3", "--lambda", "0.3", "--out", pair.to_str().unwrap()]).status.success());
    let (h, rows) = read_csv(&pair.join("diagram.csv"));
    assert_eq!(h, ["k", "lambda", "gamma_root", "gamma_root_2"]);
    let roots = gamma_star_pair(3, 0.3).unwrap().real_roots();
    assert_eq!(column(&h, &rows, "gamma_root"), vec![roots[0]]);
    assert_eq!(column(&h, &rows, "gamma_root_2"), vec![roots[1]]);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 2] = [
        &["diagram", "--problem", "pair", "--format", "csv,json,svg"],
        &["branch", "--lambda", "0.4", "--k", "2", "--steps", "3", "--ds", "0.001", "--format", "csv,json,svg"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let dirs: Vec<_> = (0..2).map(|j| dir.path().join(format!("{i}_{j}"))).collect();
        for d in &dirs {
            let mut a = args.to_vec();
            a.extend(["--out", d.to_str().unwrap()]);
            let o = run(&a);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        let mut names: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.len() >= 4, "{names:?}");
        for n in names {
            assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n:?} differs");
        }
    }
}

#[test]
fn stdout_tables_carry_headers() {
    let o = run(&["dispersion", "--k", "2", "--lambda", "0.5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("k,lambda,gamma,value,root_1,root_2\n2,0.5,0.0,"), "{text}");
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(run(&["diagram", "--lambda", "0.5,1.5"]).status.code(), Some(2));
    assert_eq!(run(&["diagram", "--k", "0"]).status.code(), Some(2));
    assert_eq!(run(&["branch", "--lambda", "0.5", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(run(&["branch", "--lambda", "0.5", "--ntheta", "7"]).status.code(), Some(2));
    assert_eq!(run(&["branch", "--lambda", "0.3,0.5"]).status.code(), Some(2));
    assert_eq!(run(&["diagram", "--format", "svg"]).status.code(), Some(2));
    let o = bin().args(["diagram", "--k", "1"]).env("ANNULAR_EULER_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["diagram", "--k", "1"]).env("ANNULAR_EULER_THREADS", "1").output().unwrap();
    assert!(o.status.success());
}

#[test]
fn degenerate_stability_solve_exits_3() {
    let g = gamma_star_single(2, 0.5).unwrap().to_string();
    let o = run(&["stability", "--lambda", "0.5", "--gamma", &g]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stability_matches_first_order_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["stability", "--lambda", "0.5", "--k", "2", "--amplitude", "1e-4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    let defect = m["run"]["first_order_defect"].as_f64().unwrap();
    let response = m["run"]["response_norm"].as_f64().unwrap();
    assert!(defect < 1e-3 * response, "{defect} vs {response}");
}

#[test]
fn verification_reports_and_detects_mutations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["verify", "--only", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().contains("criterion  2 PASS"));
    let (h, rows) = read_csv(&dir.path().join("verify.csv"));
    assert_eq!(h, ["criterion", "check", "passed", "known_unattainable", "detail"]);
    assert!(rows.iter().all(|r| r[2] == "true"));
    assert!(dir.path().join("discrepancies.csv").exists());
    assert_eq!(manifest(dir.path())["run"]["passed"], true);

    let bad = run(&["verify", "--only", "2", "--mutation", "zero_vorticity_sigma"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8(bad.stdout).unwrap().contains("criterion  2 FAIL"));
}
