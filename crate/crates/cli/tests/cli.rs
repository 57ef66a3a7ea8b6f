use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pseudomode::io;

const SMALL: &str = r#"
id = "small"

[solver]
kind = "both"
dt = 0.25
t_max = 80.0

[kernels.h2]
source = "table"
table = "sphere_h2"

[[scenario]]
name = "excited"
kernel = "h2"
omega_e = 2.97
initial = { kind = "excited_qubit" }
map = { grid = { min = 2.85, max = 3.09, n = 49 }, t_max = 60.0, dt = 0.5, b = 0.0522 }

[[scenario]]
name = "photon"
kernel = "h2"
omega_e = 2.97
initial = { kind = "gaussian_photon", omega_s = 2.97, sigma = 0.05 }
fit_grid = { min = 2.4, max = 3.4, n = 801 }
"#;

fn pseudomode(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudomode"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) {
    fs::write(dir.join("cfg.toml"), text).unwrap();
}

/// Every output file, with the manifest timestamp removed.
fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).unwrap();
            let text: String = text
                .lines()
                .filter(|l| !l.starts_with("created_unix"))
                .map(|l| format!("{l}\n"))
                .collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), text)
        })
        .collect()
}

#[test]
fn run_is_deterministic_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    let a = pseudomode(
        &[
            "--config",
            "cfg.toml",
            "--out-dir",
            "a",
            "--threads",
            "1",
            "run",
        ],
        tmp.path(),
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = pseudomode(
        &[
            "--config",
            "cfg.toml",
            "--out-dir",
            "b",
            "--threads",
            "4",
            "run",
        ],
        tmp.path(),
    );
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let (sa, sb) = (
        snapshot(&tmp.path().join("a")),
        snapshot(&tmp.path().join("b")),
    );
    assert!(
        sa.len() >= 10,
        "{:?}",
        sa.iter().map(|f| &f.0).collect::<Vec<_>>()
    );
    assert_eq!(sa, sb);
}

#[test]
fn outputs_carry_schema_headers_and_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    let out = pseudomode(
        &["--config", "cfg.toml", "--out-dir", "o", "run"],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let o = tmp.path().join("o");
    let manifest = fs::read_to_string(o.join("manifest.toml")).unwrap();
    for line in [
        "scenario_id = \"small\"",
        "config_hash = ",
        "csv_schema = 1",
        "solver = \"both\"",
    ] {
        assert!(manifest.contains(line), "{manifest}");
    }
    for name in [
        "kernel_h2.csv",
        "fit_h2.csv",
        "traces_excited.csv",
        "traces_excited_volterra.csv",
        "expsum_excited.csv",
        "spectrum_excited.csv",
        "map_excited.csv",
        "nodelines_excited.csv",
        "traces_photon.csv",
    ] {
        assert!(manifest.contains(name), "{name} missing from manifest");
        let table = io::read_table(fs::File::open(o.join(name)).unwrap()).unwrap();
        assert_eq!(table.version, io::SCHEMA_VERSION);
        assert!(!table.rows.is_empty(), "{name} is empty");
    }
    let (laplace, solver) =
        io::read_trace(fs::File::open(o.join("traces_excited.csv")).unwrap()).unwrap();
    assert_eq!(solver, "laplace");
    let (volterra, _) =
        io::read_trace(fs::File::open(o.join("traces_excited_volterra.csv")).unwrap()).unwrap();
    let diff = laplace
        .c_e0
        .iter()
        .zip(&volterra.c_e0)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    // second-order quadrature at dt = 0.25 fs
    assert!(diff < 5e-4, "solvers differ by {diff}");
    let fit = io::read_lorentzians(
        fs::File::open(o.join("fit_h2.csv")).unwrap(),
        &pseudomode::UnitConventions::default(),
    )
    .unwrap();
    // areas pass through THz² on disk
    let table = pseudomode::tables::sphere_h2().canonical();
    assert_eq!(fit.len(), table.len());
    for (a, b) in fit.terms().iter().zip(table.terms()) {
        assert!((a.area - b.area).abs() <= 1e-12 * b.area.abs());
        assert_eq!((a.half_width, a.center), (b.half_width, b.center));
    }
}

#[test]
fn config_hash_tracks_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SMALL);
    let hash = |dir: &str, extra: &[&str]| {
        let mut args = vec!["--config", "cfg.toml", "--out-dir", dir];
        args.extend_from_slice(extra);
        args.push("kernel");
        let out = pseudomode(&args, tmp.path());
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let m = fs::read_to_string(tmp.path().join(dir).join("manifest.toml")).unwrap();
        m.lines()
            .find(|l| l.starts_with("config_hash"))
            .unwrap()
            .to_string()
    };
    assert_eq!(hash("a", &[]), hash("b", &[]));
    assert_ne!(hash("a", &[]), hash("c", &["--dt", "0.2"]));
}

#[test]
fn bad_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("t_max = 80.0", "tmax = 80.0"),
        SMALL.replace("kernel = \"h2\"", "kernel = \"h3\""),
        SMALL.replace("table = \"sphere_h2\"", "table = \"cube\""),
        SMALL.replace("dt = 0.25", "dt = -1.0"),
        "not toml at all [".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        write_config(tmp.path(), text);
        let out = pseudomode(
            &["--config", "cfg.toml", "--out-dir", "o", "run"],
            tmp.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(2),
            "case {i}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = pseudomode(&["--config", "missing.toml", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pseudomode(&["--preset", "fig99", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unresolvable_sampling_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    // a 1 fs step cannot resolve a 2.97 eV coherence
    write_config(
        tmp.path(),
        &SMALL
            .replace("dt = 0.25", "dt = 1.0")
            .replace("t_max = 80.0", "t_max = 400.0"),
    );
    let out = pseudomode(
        &["--config", "cfg.toml", "--out-dir", "o", "evolve"],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn presets_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pseudomode(&["presets"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fig2",
        "fig3",
        "fig4",
        "fig5",
        "fig6",
        "fig7",
        "fig8",
        "appendixD",
    ] {
        assert!(text.contains(name), "{text}");
    }
}
