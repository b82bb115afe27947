use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loadforge::formats;
use loadforge::manifest::{verify, Manifest};
use loadforge_core::seed;
use loadforge_core::simulate::voltage_waveform;
use loadforge_core::{CurrentMatrix, Matrix};
use rand::Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loadforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn loadforge")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_current(path: &Path, c: &CurrentMatrix) {
    formats::save(path, |w| formats::write_current(w, c)).unwrap();
}

/// `S A` with uniform nonnegative `A` (k x t) and signatures made of an
/// in-phase sine plus random distortion, so each draws positive power.
fn planted(n: usize, t: usize, k: usize, s0: u64) -> CurrentMatrix {
    let mut rng = seed::rng(s0);
    let v = voltage_waveform(1.0, n);
    let s = Matrix::from_fn(n, k, |i, _| v[i] + rng.random::<f64>() * 2.0 - 1.0);
    let a = Matrix::from_fn(k, t, |_, _| rng.random::<f64>());
    CurrentMatrix::new(s.matmul(&a)).unwrap()
}

const SMALL_CONFIG: &str = r#"
seed = 11
preset = "shed"
preset_buildings = [2, 7]

[settings]
span_days = 1
samples_per_period = 32

[[building]]
name = "lab"
ground_truth = "current"

[[building.category]]
id = "kettles"

[[building.category.device]]
class = "A"
count = 2
signature = "resistive"
switching = "mealtimes"
rated_watts = 2000

[[building.category]]
id = "it"

[[building.category.device]]
class = "D"
signature = ["rectifier", "fluorescent"]
profile = "office"
peak_watts = 3000
delta = "daily"
"#;

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["learn", "--out", "x.csv"])), 2);
    assert_eq!(code(&run(&["analyze", "--input", "a", "--report", "b", "--kind", "voltage"])), 2);
    let o = run(&["version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("loadforge "));
}

#[test]
fn bad_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "2,2\n1,2\n3,nan\n").unwrap();
    let out = dir.path().join("m.csv");
    let o = run(&["learn", "--input", s(&bad), "--k", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 1") && err.contains("column 1"), "{err}");

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&run(&["learn", "--input", s(&missing), "--out", s(&out)])), 3);

    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "timestamp,watts\n0,1\n30,2\n90,3\n120,4\n").unwrap();
    let o = run(&["analyze", "--input", s(&gap), "--report", s(&dir.path().join("r.csv"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("timestamp 60"));

    let cfg = dir.path().join("three_phase.toml");
    fs::write(&cfg, "preset = \"shed\"\n[settings]\nphases = 3\n").unwrap();
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("g"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn numerical_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // Zero data: every activation is pruned.
    let zero = dir.path().join("zero.csv");
    write_current(&zero, &CurrentMatrix::zeros(4, 6));
    let o = run(&["learn", "--input", s(&zero), "--k", "2", "--out", s(&dir.path().join("m.csv"))]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn learn_auto_recovers_planted_rank_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("i.csv");
    write_current(&input, &planted(24, 80, 2, 9));
    let out = dir.path().join("model.csv");
    let o = run(&["learn", "--input", s(&input), "--k", "auto", "--snr-target", "50", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = formats::read_model(&out).unwrap();
    assert_eq!(model.k(), 2);
    assert_eq!(model.signatures.rows(), 24);
    assert_eq!(model.activations.cols(), 80);
    assert!(model.activations.as_slice().iter().all(|v| *v >= 0.0));
    let sidecar = dir.path().join("model.csv.manifest.json");
    let m = Manifest::read(&sidecar).unwrap();
    assert_eq!(m.root_seed, Some(1));
    assert_eq!(m.parameters["k"], "2");
    assert!(verify(&sidecar).unwrap().is_empty());
}

fn generate(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "--config", s(config), "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_is_deterministic_and_analyzable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&generate(&cfg, &a, &[])), 0);
    assert_eq!(code(&generate(&cfg, &b, &[])), 0);
    assert_eq!(tree(&a), tree(&b));
    assert_eq!(code(&generate(&cfg, &c, &["--seed", "12"])), 0);
    assert_ne!(
        fs::read(a.join("building_2/total_current.csv")).unwrap(),
        fs::read(c.join("building_2/total_current.csv")).unwrap()
    );

    let top = Manifest::read(&a.join("manifest.json")).unwrap();
    assert_eq!(top.root_seed, Some(11));
    assert_eq!(top.buildings.len(), 3);
    assert_eq!(top.category_count(), 10 + 5 + 2);
    assert!(verify(&a.join("manifest.json")).unwrap().is_empty());
    for b in ["building_2", "building_7", "lab"] {
        assert!(verify(&a.join(b).join("manifest.json")).unwrap().is_empty());
    }
    assert!(a.join("building_2/cat_1_power.csv").exists());
    assert!(a.join("building_7/cat_5_current.csv").exists());
    assert!(a.join("lab/cat_kettles_current.csv").exists());

    let report = dir.path().join("report.csv");
    let thd = dir.path().join("thd.csv");
    let o = run(&[
        "analyze",
        "--input",
        s(&a.join("building_2/total_current.csv")),
        "--kind",
        "current",
        "--resample",
        "30s,5min,1h",
        "--report",
        s(&report),
        "--thd-out",
        s(&thd),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(header.len(), row.len());
    assert!(header.contains(&"kurtosis") && header.contains(&"acf_1day_3600s") && header.contains(&"thd_mean_pct"));
    // One day of data: the 1-day lag has no overlap, everything else is set.
    for (h, v) in header.iter().zip(&row) {
        if !h.starts_with("acf_1day") {
            assert!(!v.is_empty() && v.parse::<f64>().unwrap().is_finite(), "{h} = {v:?}");
        }
    }

    let power_report = dir.path().join("power_report.csv");
    let o = run(&["analyze", "--input", s(&a.join("building_2/cat_1_power.csv")), "--report", s(&power_report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn analyze_commercial_building_populates_every_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b1.toml");
    fs::write(&cfg, "preset = \"shed\"\npreset_buildings = [1]\n[settings]\nspan_days = 3\nsamples_per_period = 16\n").unwrap();
    let out = dir.path().join("d");
    assert_eq!(code(&generate(&cfg, &out, &["--seed", "4"])), 0);
    let report = dir.path().join("r.csv");
    let o = run(&[
        "analyze",
        "--input",
        s(&out.join("building_1/total_current.csv")),
        "--kind",
        "current",
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.split(',').all(|v| !v.is_empty() && v.parse::<f64>().unwrap().is_finite()), "{row}");
}

#[test]
fn infer_activations_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL_CONFIG).unwrap();
    let data = dir.path().join("d");
    assert_eq!(code(&generate(&cfg, &data, &[])), 0);
    let power = data.join("building_2/cat_1_power.csv");

    let table = dir.path().join("t.csv");
    let o = run(&["infer-activations", "--power", s(&power), "--partition", "hourly", "--out", s(&table)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(formats::read_transitions(&table).unwrap().subsets(), 24);

    let tpl = dir.path().join("tpl.csv");
    let o = run(&[
        "infer-activations",
        "--power",
        s(&power),
        "--partition",
        "halfminute",
        "--activation",
        "template",
        "--out",
        s(&tpl),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(formats::read_template(&tpl).unwrap().values().len(), 5760);

    // Learn one model per category from its own current, then disaggregate
    // the category sum.
    let lab = data.join("lab");
    let mut models = Vec::new();
    for id in ["kettles", "it"] {
        let m = dir.path().join(format!("{id}.csv"));
        let k = if id == "it" { "2" } else { "1" };
        let o = run(&[
            "learn",
            "--input",
            s(&lab.join(format!("cat_{id}_current.csv"))),
            "--k",
            k,
            "--seed",
            "3",
            "--out",
            s(&m),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        models.push(format!("{id}={}", m.display()));
    }
    let out = dir.path().join("power.csv");
    let o = run(&[
        "infer-activations",
        "--current",
        s(&lab.join("total_current.csv")),
        "--model",
        &models[0],
        "--model",
        &models[1],
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("timestamp,kettles_watts,it_watts\n"));
    assert_eq!(text.lines().count(), 1 + 2880);

    assert_eq!(code(&run(&["infer-activations", "--out", s(&out)])), 2);
}
