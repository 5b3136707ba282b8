use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tdgl() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tdgl"));
    cmd.env_remove("TDGL_OUT_DIR");
    cmd
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const TINY: &str = "[domain]\nmodes = 8\n[integrator]\nT = 1\nstride = 10\n[scenario]\nname = single-run\n";

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.cfg", TINY);
    let out = dir.path().join("out");
    let o = tdgl().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("tiny (single-run)"));
    assert!(text.contains("PASS identity-residuals"));
    let series = std::fs::read_to_string(out.join("tiny.series.csv")).unwrap();
    let mut lines = series.lines();
    assert!(lines.next().unwrap().starts_with("t,l2_v,grad_v,h2_v"));
    assert_eq!(lines.count(), 101);
    let s = summary(&out.join("tiny.summary.json"));
    assert_eq!(s["passed"], true);
    assert_eq!(s["exit_code"], 0);
    assert_eq!(s["scenario"], "single-run");
    assert!(s["certificates"].as_array().unwrap().len() >= 5);
}

#[test]
fn quiet_suppresses_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.cfg", TINY);
    let o = tdgl().args(["run", "--quiet", "--out"]).arg(dir.path()).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[params]\ngamma = -1\n");
    let o = tdgl().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error:"));
    let cfg = write(dir.path(), "typo.cfg", "[integrator]\nhorizon = 3\n");
    let o = tdgl().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon"));
    let o = tdgl().arg("run").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blow_up_writes_failure_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "boom.cfg",
        "[domain]\nmodes = 8\n[integrator]\nT = 1\nguard = 0.5\n[scenario]\nname = single-run\n",
    );
    let o = tdgl().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let s = summary(&dir.path().join("boom.summary.json"));
    assert_eq!(s["exit_code"], 2);
    assert_eq!(s["passed"], false);
    assert_eq!(s["failure_time"], 0.0);
    assert!(s["error"].as_str().unwrap().contains("guard"));
}

#[test]
fn failed_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "strict.cfg",
        "[domain]\nmodes = 8\n[integrator]\nT = 1\n[scenario]\nname = two-trajectory\ngaps = 1e-1, 1e-5\ngap_spread = 1e-14\n",
    );
    let o = tdgl().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL gap-linearity"));
    assert!(dir.path().join("strict.gaps.csv").exists());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let cfg_dir = dir.path().join("cfgdir");
    let flag_dir = dir.path().join("flag");
    let plain = write(dir.path(), "plain.cfg", TINY);
    let o = tdgl().arg("run").arg(&plain).env("TDGL_OUT_DIR", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("plain.summary.json").exists());

    let with_dir = write(
        dir.path(),
        "withdir.cfg",
        &format!("{TINY}[output]\ndir = {}\n", cfg_dir.display()),
    );
    let o = tdgl().arg("run").arg(&with_dir).env("TDGL_OUT_DIR", &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(cfg_dir.join("withdir.summary.json").exists());
    assert!(!env_dir.join("withdir.summary.json").exists());

    let o = tdgl().arg("run").arg(&with_dir).arg("--out").arg(&flag_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("withdir.summary.json").exists());
}

#[test]
fn reruns_are_bit_identical_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "det.cfg", TINY);
    let read = |sub: &str, seed: Option<&str>| {
        let out = dir.path().join(sub);
        let mut cmd = tdgl();
        cmd.arg("run").arg(&cfg).arg("--out").arg(&out);
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
        std::fs::read(out.join("det.series.csv")).unwrap()
    };
    let a = read("a", None);
    let b = read("b", None);
    assert_eq!(a, b);
    let c = read("c", Some("17"));
    assert_ne!(a, c);
    assert_eq!(c, read("d", Some("17")));
}

#[test]
fn suite_reports_worst_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    std::fs::create_dir(&cfgs).unwrap();
    write(&cfgs, "a.cfg", TINY);
    write(
        &cfgs,
        "b.cfg",
        "[domain]\nmodes = 8\n[integrator]\nT = 1\n[scenario]\nname = two-trajectory\ngaps = 1e-1, 1e-5\ngap_spread = 1e-14\n",
    );
    write(&cfgs, "notes.txt", "ignored");
    let out = dir.path().join("out");
    let o = tdgl().arg("suite").arg(&cfgs).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("1/2 configurations passed"));
    assert!(text.find("a (single-run)").unwrap() < text.find("b (two-trajectory)").unwrap());

    write(&cfgs, "c.cfg", "[scenario]\nname = nonsense\n");
    let o = tdgl().arg("suite").arg(&cfgs).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = tdgl().arg("suite").arg(&empty).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs"].iter().collect();
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cfg") {
            let cfg = tdgl_core::experiments::ExperimentConfig::from_file(&p)
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 6);
}
