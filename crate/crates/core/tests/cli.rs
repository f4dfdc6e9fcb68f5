use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hilbert_spde::cli::{execute, replay, RunConfig};

const SMALL: &str = "\
# heat equation with weak additive noise
equation = linear_test
experiment = simulate
paths = 3
seed = 11
grid.modes = 32
noise.count = 4
scheme.dt = 1e-3
scheme.horizon = 0.05
output.snapshots = true
";

fn hspde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hspde")).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_manifest_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = hspde(&["run", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("PASS"));
    for f in ["manifest.json", "report.csv", "report.json", "initial.hsnap", "final.hsnap"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("experiment,parameter,estimate,stderr,pass,schema_version\n"));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 3);
    assert!(manifest["artifacts"].as_array().unwrap().iter().all(|a| a["sha256"].as_str().unwrap().len() == 64));

    let o = hspde(&["inspect", s(&out.join("initial.hsnap"))]);
    assert_eq!(o.status.code(), Some(0));
    let t = text(&o);
    assert!(t.contains("modes      32"), "{t}");
    // ‖sin‖_0 = √π
    assert!(t.contains(&format!("{:.12e}", std::f64::consts::PI.sqrt())), "{t}");
}

#[test]
fn invalid_configs_exit_one_and_name_the_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "equation = burgers_gl\nexperiment = simulate\ngrid.dim = 2\n");
    let o = hspde(&["run", s(&cfg), "--out", s(&tmp.path().join("a"))]);
    assert_eq!(o.status.code(), Some(1));
    let t = text(&o);
    assert!(t.contains("equation") && t.contains("grid.dim"), "{t}");

    let cfg = write_config(tmp.path(), "equation = linear_test\nexperiment = simulate\nscheme.dtt = 0.1\n");
    let o = hspde(&["run", s(&cfg), "--out", s(&tmp.path().join("b"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("line 3: unknown key `scheme.dtt`"), "{}", text(&o));

    let cfg = write_config(tmp.path(), "equation = linear_test\nexperiment = simulate\nexperiment = verify\n");
    assert_eq!(hspde(&["run", s(&cfg)]).status.code(), Some(1));

    let o = hspde(&["run", s(&tmp.path().join("missing.cfg"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = hspde(&["inspect", s(&tmp.path().join("missing.hsnap"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_empty_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("keep.txt"), "x").unwrap();
    let o = hspde(&["run", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("not empty"));
    assert_eq!(std::fs::read_to_string(out.join("keep.txt")).unwrap(), "x");
}

#[test]
fn relative_output_goes_under_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}output.dir = nested/run1\n"));
    let o = Command::new(env!("CARGO_BIN_EXE_hspde"))
        .args(["run", s(&cfg)])
        .env("HSPDE_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(tmp.path().join("root/nested/run1/manifest.json").is_file());
}

#[test]
fn replay_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    assert_eq!(hspde(&["--threads", "1", "run", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let manifest = out.join("manifest.json");
    for threads in ["1", "4"] {
        let o = hspde(&["--threads", threads, "replay", s(&manifest)]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        assert!(text(&o).contains("replay identical"));
    }
}

#[test]
fn tampered_manifest_seed_diverges() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    assert_eq!(hspde(&["run", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let manifest = out.join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    m["config"]["seed"] = 12.into();
    std::fs::write(&manifest, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    let o = hspde(&["replay", s(&manifest)]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("final.hsnap") && t.contains("report.csv"), "{t}");
    // the initial condition does not depend on the path seed
    assert!(!t.contains("initial.hsnap"), "{t}");
}

#[test]
fn failed_experiment_exits_two() {
    // a flatness band below 1 cannot hold
    let tmp = tempfile::tempdir().unwrap();
    let body = "equation = linear_test\nexperiment = moments\npaths = 8\ngrid.modes = 32\nnoise.count = 4\n\
                scheme.eps_ladder = 0.1, 0.0\nanalysis.flat_band = 0.5\nscheme.horizon = 0.02\n";
    let cfg = write_config(tmp.path(), body);
    let o = hspde(&["run", s(&cfg), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("FAIL"));
}

#[test]
fn config_text_round_trips() {
    let cfg = RunConfig::parse(SMALL).unwrap();
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    let stop = RunConfig::parse("equation = tamed_ns_2d\nexperiment = stopping_time\nanalysis.levels = 4, 16\nscheme.sup_guard = 9\n").unwrap();
    assert_eq!(RunConfig::parse(&stop.to_text()).unwrap(), stop);
    assert!(RunConfig::parse("equation = burgers_gl\n").is_err());
    assert!(RunConfig::parse("equation = linear_test\nexperiment = stopping_time\n").is_err());
    assert!(RunConfig::parse("equation = tamed_ns_2d\nexperiment = simulate\ninitial.kind = sine\n").is_err());
}

#[test]
fn library_replay_matches_execute() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "equation = tamed_ns_2d\nexperiment = simulate\npaths = 2\ngrid.modes = 16\nscheme.dt = 1e-3\nscheme.horizon = 0.01\nscheme.epsilon = 0.05\noutput.snapshots = true\n";
    let cfg = RunConfig::parse(body).unwrap();
    let out = execute(&cfg, &tmp.path().join("out"), Some(2)).unwrap();
    assert!(out.pass());
    let r = replay(&tmp.path().join("out/manifest.json"), Some(3)).unwrap();
    assert!(r.identical(), "{:?}", r.divergent);
}
