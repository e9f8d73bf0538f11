use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMOKE: &str = "\
[grid]
n = 32
weight = sine
epsilon = 0.1
[frac]
alpha = 0.5
[solver]
nu = 0.05
dt = 1/256
T = 0.5
m = 8
[forcing]
recipe = kolmogorov
amplitude = 1
[initial]
recipe = taylor_green
";

fn gnse(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gnse"));
    cmd.args(args);
    match out {
        Some(dir) => cmd.env("GNSE_OUT", dir),
        None => cmd.env_remove("GNSE_OUT"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.ini");
    fs::write(&path, text).unwrap();
    path
}

/// Runs `cmd` on `text` with output into `<tmp>/out`.
fn run(cmd: &str, text: &str) -> (TempDir, PathBuf, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, text);
    let out = dir.path().join("out");
    let res = gnse(&[cmd, "--config", cfg.to_str().unwrap()], Some(&out));
    (dir, out, res)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_documents_defaults() {
    let o = gnse(&["--help"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["picard_tol  = 1e-10", "slack       = 1.10", "m           = 8", "GNSE_OUT", "alpha1      = alpha/2"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn verify_runs_and_filters() {
    let o = gnse(&["verify"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = gnse(&["verify", "--filter", "fracops"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.contains('/')).all(|l| l.starts_with("fracops/")));
    assert_eq!(code(&gnse(&["verify", "--filter", "nothing"], None)), 1);
}

#[test]
fn eig_constant_weight_spectrum() {
    let (_d, out, o) = run("eig", "[grid]\nn = 32\n[frac]\nalpha = 0.5\n[solver]\ndt = 0.1\nT = 1\nm = 8\n");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let first: Vec<&str> = spectrum.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    let lambda: f64 = first[1].parse().unwrap();
    assert!((lambda / (4.0 * PI * PI) - 1.0).abs() <= 0.02);
    assert!(out.join("mode_8.csv").exists());
    assert!(fs::read_to_string(out.join("hg_check.txt")).unwrap().contains("holds=true"));
}

#[test]
fn eig_steep_weight_fails_the_hypothesis() {
    let (_d, out, o) = run(
        "eig",
        "[grid]\nn = 64\nweight = sine\nepsilon = 0.45\n[frac]\nalpha = 0.5\n[solver]\ndt = 0.1\nT = 1\nm = 1\n",
    );
    assert_eq!(code(&o), 2);
    assert!(fs::read_to_string(out.join("hg_check.txt")).unwrap().contains("holds=false"));
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn eig_unwritable_output_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[frac]\nalpha = 0.5\n[solver]\ndt = 0.1\nT = 1\n");
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = gnse(&["eig", "--config", cfg.to_str().unwrap()], Some(&blocker.join("sub")));
    assert_eq!(code(&o), 1);
}

#[test]
fn solve_smoke_config_is_certified_and_reproducible() {
    let (dir, out, o) = run("solve", SMOKE);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["trajectory.csv", "diagnostics.csv", "certificate.csv", "certificate_weighted.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(!text.contains('\r'));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for key in ["version", "alpha1", "b", "nu_prime", "wall_seconds", "solver.nu", "frac.alpha"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert!(manifest.as_object().unwrap().values().all(|v| !v.is_object() && !v.is_array()));

    let again = dir.path().join("again");
    let cfg = dir.path().join("run.ini");
    assert_eq!(code(&gnse(&["solve", "--config", cfg.to_str().unwrap()], Some(&again))), 0);
    for f in ["trajectory.csv", "diagnostics.csv", "certificate.csv", "certificate_weighted.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

/// Forcing near the unit of the dual norm: the source integral is too small
/// to cover the response once the slack is removed.
#[test]
fn solve_adversarial_forcing_fails_the_certificate() {
    let text = "[grid]\nn = 8\n[frac]\nalpha = 0.5\n[solver]\nnu = 1\ndt = 1/512\nT = 1/8\nm = 2\nslack = 1.0\n\
                [forcing]\nrecipe = mode\namplitude = 6\n[initial]\nrecipe = zero\n";
    let (_d, out, o) = run("solve", text);
    assert_eq!(code(&o), 3);
    let cert = fs::read_to_string(out.join("certificate.csv")).unwrap();
    assert!(cert.lines().any(|l| l.ends_with(",false")));
}

#[test]
fn solve_zero_data_gives_zero_trajectory() {
    let text = "[grid]\nn = 8\n[frac]\nalpha = 0.5\n[solver]\ndt = 1/16\nT = 1/2\nm = 4\n[initial]\nrecipe = zero\n";
    let (_d, out, o) = run("solve", text);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 9 * 4);
    assert!(traj.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn bad_configs_exit_one_naming_the_key() {
    let (_d, _o, o) = run("solve", "[frac]\nalpha = 0.5\nalpha1 = 0.6\n[solver]\ndt = 0.1\nT = 1\n");
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("frac.alpha1"));
    let (_d, _o, o) = run("solve", "[frac]\nalpha = 0.5\n[solver]\ndt = 0.1\ndt = 0.2\nT = 1\n");
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 5"));
    let (_d, out, o) = run("solve", "[frac]\nalpha = 0.5\nbeta = 1\n[solver]\ndt = 0.1\nT = 1\n");
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

const CONTROL: &str = "\
[grid]
n = 16
weight = sine
epsilon = 0.1
[frac]
alpha = 0.5
[solver]
dt = 1/32
T = 0.5
m = 4
[control]
modes = 1
lo = -3
hi = 3
max_iters = 30
";

fn log_j(out: &Path) -> Vec<f64> {
    fs::read_to_string(out.join("control_log.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn control_recovers_a_driven_target() {
    let (_d, out, o) = run("control", &format!("{CONTROL}target = driven\ntarget_w = 1.5\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = log_j(&out);
    assert!(j.windows(2).all(|p| p[1] <= p[0]));
    assert!(j.last().unwrap() * 100.0 <= j[0]);
    assert!(out.join("w_opt.csv").exists() && out.join("trajectory.csv").exists());
}

#[test]
fn control_with_unforced_target_stops_at_once() {
    let (_d, out, o) = run("control", &format!("{CONTROL}target = free\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(log_j(&out).len(), 1);
}

#[test]
fn control_with_empty_box_is_an_error() {
    let (_d, _o, o) = run("control", &CONTROL.replace("lo = -3", "lo = 4"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("box"));
}
