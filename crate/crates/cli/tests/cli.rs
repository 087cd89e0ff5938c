use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fishgame(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fishgame"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .env("FISHGAME_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Column `name` of a CSV with a header row.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

fn summary_value(path: &Path, key: &str) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in {}", path.display()))
}

#[test]
fn steady_constant_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "steady.ini",
        "experiment = steady\n[grid]\nnodes = 65\n[problem]\nK = constant:1\nalpha = constant:0.5\n",
    );
    let out = dir.path().join("out");
    let res = fishgame(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let theta = column(&out.join("theta.csv"), "theta");
    assert_eq!(theta.len(), 65);
    assert!(theta.iter().all(|t| (t - 0.5).abs() < 1e-8));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["outputs"][0], "theta.csv");
    assert!(!out.join(".manifest.json.tmp").exists());
}

#[test]
fn four_player_tragedy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "nash.ini",
        "experiment = nash\n[grid]\nnodes = 65\n[problem]\nK = constant:1\n[game]\nplayers = 4\nstart = constant\n",
    );
    let out = dir.path().join("out");
    let res = fishgame(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let total: f64 = summary_value(&out.join("summary.csv"), "total_harvest").parse().unwrap();
    assert!((total - 4.0 / 25.0).abs() < 1e-4, "{total}");
}

#[test]
fn malformed_key_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.ini",
        "experiment = steady\n[grid]\nnodes = 65\n[problem]\nmuu = 1\n",
    );
    let res = fishgame(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("muu") && err.contains("line 5"), "{err}");
}

#[test]
fn bad_values_and_missing_files_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, needle) in [
        ("a.ini", "experiment = steady\n[problem]\nmu = -2\n", "problem.mu"),
        ("b.ini", "experiment = steady\n[problem]\nK = csv:nowhere.csv\n", "does not exist"),
        ("c.ini", "experiment = steady\n[problem]\nK = wavy:3\n", "unknown preset"),
        ("d.ini", "experiment = nash\n[constraints]\nv0 = 0.6\n", "constraints.v0"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let res = fishgame(&cfg, &dir.path().join(name).with_extension("out"), &[]);
        assert_eq!(res.status.code(), Some(1), "{name}");
        let err = String::from_utf8_lossy(&res.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
}

#[test]
fn resources_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..17).map(|i| format!("{},0.8\n", i as f64 / 16.0)).collect();
    fs::write(dir.path().join("k.csv"), format!("x,K\n{rows}")).unwrap();
    let cfg = write_config(
        dir.path(),
        "csv.ini",
        "experiment = steady\n[grid]\nnodes = 17\n[problem]\nK = csv:k.csv\n",
    );
    let out = dir.path().join("out");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    assert!(column(&out.join("theta.csv"), "theta").iter().all(|t| (t - 0.8).abs() < 1e-8));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "opt.ini",
        "experiment = nash\n[grid]\nnodes = 33\n[problem]\nK = random-fourier\nK0 = 0.6\nmu = 0.2\n\
         [constraints]\nv0 = 0.15\nmode = equality\n[game]\nplayers = 2\nstart = random\n",
    );
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_ne!(fishgame(&cfg, &a, &["--seed", "5"]).status.code(), Some(1));
    assert_ne!(fishgame(&cfg, &b, &["--seed", "5"]).status.code(), Some(1));
    assert_ne!(fishgame(&cfg, &c, &["--seed", "6"]).status.code(), Some(1));
    for name in ["equilibrium.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_ne!(
        fs::read(a.join("equilibrium.csv")).unwrap(),
        fs::read(c.join("equilibrium.csv")).unwrap()
    );
}

#[test]
fn forced_non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "nash.ini",
        "experiment = nash\n[grid]\nnodes = 33\n[problem]\nK = constant:1\n[constraints]\nkappa = 1\n\
         v0 = 0.3\n[game]\nplayers = 2\nstart = bang-bang\nmax_rounds = 1\n",
    );
    let out = dir.path().join("out");
    let res = fishgame(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 2);
    assert_eq!(manifest["stages"][0]["converged"], false);
    assert_eq!(summary_value(&out.join("summary.csv"), "converged"), "false");
}

#[test]
fn sweep_runs_write_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.ini",
        "experiment = sweep\n[grid]\nnodes = 33\n[problem]\nK = constant:1\n[constraints]\nmode = equality\n\
         [sweep]\nkind = regulation\nv0_list = 0.1,0.25\n",
    );
    let out = dir.path().join("out");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    let totals = column(&out.join("sweep.csv"), "total_harvest");
    for (v0, t) in [0.1, 0.25].iter().zip(&totals) {
        assert!((t - 2.0 * v0 * (1.0 - 2.0 * v0)).abs() < 1e-6);
    }
    assert!(out.join("run_000/equilibrium.csv").exists());
    assert!(out.join("run_001/summary.csv").exists());
}

#[test]
fn mfhg_and_wave_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mfhg.ini",
        "experiment = mfhg\n[grid]\nnodes = 21\n[mfhg]\nhorizon = 0.5\nsteps = 20\nnu = 0.2\nu0 = constant:0\n\
         m0 = gaussian:0.5,0.2\nstride = 5\n",
    );
    let out = dir.path().join("m");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    let slices = fs::read_to_string(out.join("slices.csv")).unwrap();
    assert!(slices.starts_with("t,x,V,m,u\n"));
    assert_eq!(slices.lines().count(), 1 + 5 * 21);
    assert_eq!(summary_value(&out.join("summary.csv"), "sweeps_used"), "1");

    let cfg = write_config(
        dir.path(),
        "wave.ini",
        "experiment = wave\n[grid]\nlower = 0\nupper = 60\nnodes = 301\n[mfhg]\nhorizon = 20\nsteps = 1000\n\
         u0 = indicator:0,10,1\n[wave]\nwindow = 5\n",
    );
    let out = dir.path().join("w");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    let speed = column(&out.join("front.csv"), "speed_estimate");
    let last = *speed.last().unwrap();
    assert!(last > 1.7 && last < 2.1, "{last}");
}

#[test]
fn potential_and_asymptotic_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.ini",
        "experiment = potential-check\n[grid]\nnodes = 65\n[problem]\nmu = 0.05\n",
    );
    let out = dir.path().join("p");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    let first: f64 = summary_value(&out.join("summary.csv"), "symmetric_value").parse().unwrap();
    assert!(first.abs() < 1e-10);

    let cfg = write_config(
        dir.path(),
        "a.ini",
        "experiment = asymptotic\n[grid]\nnodes = 65\n[problem]\nK = constant:0.8\n[constraints]\nv0 = 0.6\n",
    );
    let out = dir.path().join("a");
    assert_eq!(fishgame(&cfg, &out, &[]).status.code(), Some(0));
    let argmax: f64 = summary_value(&out.join("summary.csv"), "j0_argmax").parse().unwrap();
    assert!((argmax - 0.4).abs() < 1e-12);
    assert_eq!(column(&out.join("interval_sweep.csv"), "J1").len(), 100);
}
