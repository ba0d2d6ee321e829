use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use wgmorley::{ErrorReport, MeshFamily, Solver};
use wgmorley_cli::{parse_config, read_config_file, Args, Case, CliError, Format, THREADS_ENV};

fn wgmorley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgmorley"))
        .args(args)
        .env_remove(THREADS_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn config(argv: &[&str]) -> Result<wgmorley_cli::RunConfig, CliError> {
    let mut full = vec!["wgmorley"];
    full.extend_from_slice(argv);
    parse_config(Args::try_parse_from(full).expect("flags parse"))
}

#[test]
fn defaults() {
    let cfg = config(&[]).unwrap();
    assert_eq!(cfg.mesh, MeshFamily::Square);
    assert_eq!(cfg.solver, Solver::Schur);
    assert_eq!(cfg.tol, 1e-12);
    assert_eq!(cfg.case, Case::Poly2d);
    assert_eq!(cfg.output, Format::Markdown);
    assert_eq!(config(&["--mesh", "cube"]).unwrap().case, Case::Poly3d);
}

#[test]
fn usage_errors_exit_2() {
    for (argv, message) in [
        (&["--k", "2"][..], "k must be ≥ 3"),
        (
            &["--mesh", "cube", "--case", "poly2d"][..],
            "needs case poly3d",
        ),
        (
            &["--mesh", "triangle", "--case", "poly3d"][..],
            "needs case poly2d",
        ),
        (&["--levels", "5:3"][..], "inverted level range"),
        (&["--levels", "0:2"][..], "levels start at 1"),
        (&["--tol=-1"][..], "tolerance must be positive"),
    ] {
        let o = wgmorley(argv);
        assert_eq!(o.status.code(), Some(2), "{argv:?}");
        assert!(stderr(&o).contains(message), "{argv:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(wgmorley(&["--mesh", "hexagon"]).status.code(), Some(2));
    assert_eq!(wgmorley(&["--bogus"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let o = wgmorley(&["--levels", "2", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("numerical failure"));
}

#[test]
fn square_run_prints_rates_and_timing() {
    let o = wgmorley(&["--mesh", "square", "--k", "3", "--levels", "5:7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| l.starts_with("|     ")).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains("0.1486E-02"));
    assert!(rows[1].contains("3.95"));
    assert!(rows[2].contains("0.5980E-01"));
    let err = stderr(&o);
    for level in 5..=7 {
        assert!(err.contains(&format!("level {level}: ")), "{err}");
    }
    assert!(err.contains("70145 dofs"));
}

#[test]
fn schur_and_full_print_the_same_table() {
    let a = wgmorley(&[
        "--mesh", "polygon", "--k", "4", "--levels", "2:4", "--solver", "schur",
    ]);
    let b = wgmorley(&[
        "--mesh", "polygon", "--k", "4", "--levels", "2:4", "--solver", "full",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn same_config_gives_identical_bytes() {
    let argv = [
        "--mesh",
        "triangle",
        "--k",
        "3",
        "--levels",
        "2:4",
        "--threads",
        "3",
        "--output",
        "csv",
    ];
    let a = wgmorley(&argv);
    let b = wgmorley(&argv);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn csv_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.csv");
    let o = wgmorley(&[
        "--levels",
        "2:4",
        "--output",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("level,h,dofs,l2,l2_rate,triple,triple_rate,ebe,ebf,en")
    );
    let rows = ErrorReport::rows_from_csv(&text).unwrap();
    assert_eq!(rows.iter().map(|r| r.level).collect::<Vec<_>>(), [2, 3, 4]);
    assert_eq!(rows[0].l2_rate, None);
    let report = ErrorReport {
        family: MeshFamily::Square,
        k: 3,
        rows,
    };
    assert_eq!(report.to_csv().unwrap(), text);
}

fn write(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(
        dir.path(),
        "# study\nmesh = triangle\nk = 5\nlevels = 3:4\nsolver = full\noutput = csv\n",
    );
    let cfg = config(&["--config", &conf, "--k", "4"]).unwrap();
    assert_eq!(
        (cfg.mesh, cfg.k, cfg.levels.clone(), cfg.solver, cfg.output),
        (MeshFamily::Triangle, 4, 3..=4, Solver::Full, Format::Csv)
    );
    let cfg = config(&["--config", &conf]).unwrap();
    assert_eq!(cfg.k, 5);
}

#[test]
fn config_file_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "mesh = square\nsmoother = jacobi\n",
        "k 3\n",
        "k = three\n",
        "k = 3\nk = 4\n",
        "k = 2\n",
    ] {
        let conf = write(dir.path(), text);
        let o = wgmorley(&["--config", &conf]);
        assert_eq!(o.status.code(), Some(2), "{text:?}");
    }
    assert!(
        matches!(read_config_file("threads = 2\nsmoother = x\n"), Err(CliError::Usage(m)) if m.contains("unknown key `smoother`"))
    );
    assert_eq!(
        wgmorley(&["--config", "/nonexistent/run.conf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn thread_count_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_wgmorley"))
        .args(["--levels", "2:3"])
        .env(THREADS_ENV, "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let env = Command::new(env!("CARGO_BIN_EXE_wgmorley"))
        .args(["--levels", "2:3"])
        .env(THREADS_ENV, "2")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(
        env.stdout,
        wgmorley(&["--levels", "2:3", "--threads", "1"]).stdout
    );
}
