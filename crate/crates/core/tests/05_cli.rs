use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
# reduced grids
dt = 0.05
alpha_count = 3
steady_t_end = 100
window_frac = 0.3
alpha_times = 1, 5
temp_min = 0.02
temp_max = 0.1
temp_count = 3
temp_times = 1, 2
";

fn qthermo(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_qthermo"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap();
    out
}

fn ok(dir: &Path, args: &[&str]) {
    let out = qthermo(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_config(dir: &Path, extra: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p.to_str().unwrap().to_string()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| match v {
                    "true" => 1.0,
                    "nan" => f64::NAN,
                    "false" => 0.0,
                    _ => v.parse().unwrap(),
                })
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn trajectory_file() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["trajectory", "--svg"]);
    let (header, rows) = table(&d.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "dx", "dy", "dz"]);
    assert_eq!(rows.len(), 5001);
    assert_eq!(rows[0], [0.0, 1.0, 0.0, 0.0]);
    assert_eq!(rows[5000][0], 50.0);
    // coherence stays trapped at the default mixing
    let tail = rows[4000..].iter().map(|r| r[1].abs()).fold(0.0, f64::max);
    assert!(tail > 0.01, "tail |dx| {tail}");
    assert!(fs::read_to_string(d.path().join("trajectory.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn uncoupled_trajectory_is_pure() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["trajectory", "--eta", "0"]);
    let (_, rows) = table(&d.path().join("trajectory.csv"));
    let last = rows.last().unwrap();
    let norm = (last[1] * last[1] + last[2] * last[2] + last[3] * last[3]).sqrt();
    assert!((norm - 1.0).abs() < 1e-8);
}

#[test]
fn kernel_dump() {
    let d = TempDir::new().unwrap();
    let cold = d.path().join("cold");
    let warm = d.path().join("warm");
    ok(&cold, &["dump-kernels", "--temp", "0", "--t-end", "20"]);
    ok(&warm, &["dump-kernels", "--temp", "0.3", "--t-end", "20"]);
    let (header, c) = table(&cold.join("kernels.csv"));
    let (_, w) = table(&warm.join("kernels.csv"));
    assert_eq!(header, ["t", "R", "K", "L", "X", "F", "G"]);
    assert_eq!(c.len(), 2001);
    assert_eq!(c[0], [0.0; 7]);
    for (a, b) in c.iter().zip(&w) {
        let t = a[0];
        assert!((a[1] - 0.05 * t / (1.0 + t * t)).abs() < 1e-8, "R at t={t}");
        // L, F, G carry no thermal factor
        assert_eq!((a[3], a[5], a[6]), (b[3], b[5], b[6]));
    }
}

#[test]
fn uncoupled_sweeps_are_zero() {
    let d = TempDir::new().unwrap();
    let cfg = small_config(d.path(), "eta = 0\n");
    ok(d.path(), &["sweep-alpha", "--config", &cfg]);
    ok(d.path(), &["sweep-temperature", "--config", &cfg]);
    let (header, rows) = table(&d.path().join("sweep_alpha.csv"));
    assert_eq!(
        header,
        [
            "alpha",
            "N_C",
            "steady_dx_abs",
            "converged",
            "qfi_t1",
            "qfi_t5"
        ]
    );
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!((r[1], r[4], r[5]), (0.0, 0.0, 0.0));
    }
    let (header, rows) = table(&d.path().join("sweep_temperature.csv"));
    assert_eq!(
        header,
        [
            "t",
            "T",
            "alpha",
            "qfi",
            "cfi_x",
            "cfi_z",
            "qcrb",
            "markov_fisher"
        ]
    );
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!((r[3], r[4], r[5]), (0.0, 0.0, 0.0));
        assert_eq!(r[6], f64::INFINITY);
    }
}

#[test]
fn sweep_alpha_endpoints() {
    let d = TempDir::new().unwrap();
    let cfg = small_config(d.path(), "");
    ok(d.path(), &["sweep-alpha", "--config", &cfg]);
    let (_, rows) = table(&d.path().join("sweep_alpha.csv"));
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [0.0, 0.5, 1.0]
    );
    assert_eq!(rows[0][1], 0.0);
    assert!(rows[2][1] < 1e-3);
    assert!(rows[1][1] > 0.1);
    let (_, fisher) = table(&d.path().join("sweep_alpha_fisher.csv"));
    assert_eq!(fisher.len(), 6);
    for r in &fisher {
        assert!(r[4] <= r[3] && r[5] <= r[3]);
    }
}

#[test]
fn temperature_sweep_slopes() {
    let d = TempDir::new().unwrap();
    let cfg = small_config(d.path(), "");
    ok(d.path(), &["sweep-temperature", "--config", &cfg, "--svg"]);
    let (header, rows) = table(&d.path().join("sweep_temperature_slopes.csv"));
    assert_eq!(header, ["t", "T_max", "slope"]);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r[2] > 1.0 && r[2] < 3.0, "slope {}", r[2]);
    }
    assert!(d.path().join("sweep_temperature_qfi.svg").exists());
    assert!(d.path().join("sweep_temperature_cfi.svg").exists());
}

#[test]
fn output_independent_of_workers() {
    let d = TempDir::new().unwrap();
    let cfg = small_config(d.path(), "");
    let one = d.path().join("one");
    let eight = d.path().join("eight");
    ok(&one, &["sweep-alpha", "--config", &cfg, "--workers", "1"]);
    ok(&eight, &["sweep-alpha", "--config", &cfg, "--workers", "8"]);
    for name in ["sweep_alpha.csv", "sweep_alpha_fisher.csv"] {
        assert_eq!(
            fs::read(one.join(name)).unwrap(),
            fs::read(eight.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn config_file_and_flags() {
    let d = TempDir::new().unwrap();
    let cfg = small_config(d.path(), "t_end = 3\n");
    ok(d.path(), &["dump-kernels", "--config", &cfg]);
    assert_eq!(table(&d.path().join("kernels.csv")).1.len(), 61);
    // flags override the file
    ok(d.path(), &["dump-kernels", "--config", &cfg, "--dt", "0.1"]);
    assert_eq!(table(&d.path().join("kernels.csv")).1.len(), 31);
}

#[test]
fn bad_input_fails_cleanly() {
    let d = TempDir::new().unwrap();
    let out = qthermo(d.path(), &["trajectory", "--no-such-flag"]);
    assert!(!out.status.success());

    let out = qthermo(d.path(), &["reproduce", "fig9"]);
    assert!(!out.status.success());

    let bad = d.path().join("bad.cfg");
    fs::write(&bad, "spin = 3\n").unwrap();
    let out = qthermo(d.path(), &["trajectory", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("spin"));

    let out = qthermo(d.path(), &["trajectory", "--alpha", "1.5"]);
    assert!(!out.status.success());
    assert!(!d.path().join("trajectory.csv").exists());
}
