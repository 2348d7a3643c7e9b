use std::path::Path;
use std::process::{Command, Output};

use gslab_cli::config::RunConfig;
use gslab_cli::record::{read_csv, write_csv, Payload, ResultRecord, SweepRow, CSV_HEADER};
use gslab_core::rescaling::Observable;
use proptest::prelude::*;
use tempfile::TempDir;

fn gslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gslab"))
        .args(args)
        .current_dir(dir)
        .env("GSLAB_CACHE_DIR", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn record(path: &Path) -> ResultRecord {
    ResultRecord::parse(&std::fs::read(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SOLVE: [&str; 11] = ["solve", "--family", "P_eps", "--N", "3", "--p", "6", "--q", "10", "--eps", "1e-3"];

#[test]
fn emden_prints_reference_values() {
    let dir = TempDir::new().unwrap();
    let o = gslab(dir.path(), &["emden", "--N", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "U_1(0) = 1"), "{}", stdout(&o));

    let o = gslab(dir.path(), &["emden", "--N", "5", "--out", "e.json"]);
    assert_eq!(o.status.code(), Some(0));
    let Payload::Emden(e) = record(&dir.path().join("e.json")).payload else {
        panic!("not an emden record")
    };
    assert!((e.w1_lp - 1.0).abs() < 1e-10);
    assert!((e.s_star_routes.0 - e.s_star_routes.1).abs() < 1e-8 * e.s_star);
    assert!(e.w1_l2_sq.is_some());
}

#[test]
fn pokhozhaev_check_passes() {
    let dir = TempDir::new().unwrap();
    let o = gslab(
        dir.path(),
        &["check", "--suite", "pokhozhaev", "--N", "3", "--p", "8", "--q", "12", "--out", "c.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let Payload::Check(c) = record(&dir.path().join("c.json")).payload else {
        panic!("not a check record")
    };
    assert!(c.passed && !c.cases.is_empty());
    for case in &c.cases {
        assert_eq!(case.residuals.len(), 1);
        assert!(case.residuals[0].residual.abs() < 1e-6);
    }
}

#[test]
fn check_breach_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = gslab(
        dir.path(),
        &["check", "--N", "3", "--p", "4", "--q", "6", "--identity-tol", "1e-14"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(gslab(d, &["bogus"]).status.code(), Some(2));
    assert_eq!(gslab(d, &["solve", "--N", "3", "--p", "6"]).status.code(), Some(2));
    assert_eq!(
        gslab(d, &["solve", "--N", "3", "--p", "6", "--q", "4", "--eps", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        gslab(d, &["sweep", "--regime", "critical", "--N", "5", "--q", "6", "--ratio", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        gslab(d, &["solve", "--N", "3", "--p", "6", "--q", "10", "--eps", "1e-3", "--rtol", "-1"]).status.code(),
        Some(2)
    );
    // Above ε* = 3/16 there is no ground state.
    assert_eq!(
        gslab(d, &["solve", "--N", "3", "--p", "4", "--q", "6", "--eps", "0.2"]).status.code(),
        Some(1)
    );
    assert_eq!(gslab(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn solve_emits_one_round_trippable_record() {
    let dir = TempDir::new().unwrap();
    let o = gslab(dir.path(), &SOLVE);
    assert_eq!(o.status.code(), Some(0));
    let rec = ResultRecord::parse(&o.stdout).unwrap();
    assert_eq!(rec.schema_version, "1");
    assert_eq!(rec.to_bytes(), o.stdout);
    let Payload::Solution(s) = &rec.payload else {
        panic!("not a solution record")
    };
    assert!(s.nehari_residual.abs() < 1e-6 && s.pokhozhaev_residual.abs() < 1e-6);
    assert!(rec.diagnostics.iterations.unwrap() > 0);
    assert!(rec.diagnostics.r_max.unwrap() > s.match_radius);
}

#[test]
fn cache_hit_skips_integration() {
    let dir = TempDir::new().unwrap();
    let first = ResultRecord::parse(&gslab(dir.path(), &SOLVE).stdout).unwrap();
    assert!(!first.diagnostics.cache_hit);
    assert!(first.diagnostics.rhs_evals > 0);
    let entries = std::fs::read_dir(dir.path().join("cache")).unwrap().count();
    assert_eq!(entries, 1);

    let second = ResultRecord::parse(&gslab(dir.path(), &SOLVE).stdout).unwrap();
    assert!(second.diagnostics.cache_hit);
    assert_eq!(second.diagnostics.rhs_evals, 0);
    assert_eq!(second.diagnostics.integrations, Some(0));
    assert_eq!(second.payload, first.payload);

    // A changed tolerance is a different key.
    let mut args = SOLVE.to_vec();
    args.extend(["--rtol", "1e-9"]);
    let third = ResultRecord::parse(&gslab(dir.path(), &args).stdout).unwrap();
    assert!(!third.diagnostics.cache_hit);

    let mut args = SOLVE.to_vec();
    args.push("--no-cache");
    let fresh = ResultRecord::parse(&gslab(dir.path(), &args).stdout).unwrap();
    assert!(!fresh.diagnostics.cache_hit);
    assert_eq!(fresh.payload, first.payload);
}

#[test]
fn identical_config_gives_identical_payload() {
    let dir = TempDir::new().unwrap();
    let mut args = SOLVE.to_vec();
    args.push("--no-cache");
    let a = ResultRecord::parse(&gslab(dir.path(), &args).stdout).unwrap();
    let b = ResultRecord::parse(&gslab(dir.path(), &args).stdout).unwrap();
    assert_eq!(
        serde_json::to_string(&a.payload).unwrap(),
        serde_json::to_string(&b.payload).unwrap()
    );
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[problem]\nfamily = \"P_eps\"\nN = 3\np = 4\nq = 6\neps = 1e-2\n\n[tolerances]\nrtol = 1e-9\n",
    )
    .unwrap();
    let o = gslab(dir.path(), &["solve", "--config", "run.toml", "--eps", "1e-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = ResultRecord::parse(&o.stdout).unwrap();
    let c: &RunConfig = &rec.config;
    assert_eq!((c.n, c.p, c.q, c.eps), (Some(3), Some(4.0), Some(6.0), Some(1e-3)));
    assert_eq!(c.tolerances.rtol, 1e-9);

    std::fs::write(&cfg, "[problem]\nN = 3\nwidth = 2\n").unwrap();
    let o = gslab(dir.path(), &["solve", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
}

#[test]
fn critical_sweep_csv_plot_and_refit() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = gslab(
        d,
        &[
            "sweep",
            "--regime",
            "critical",
            "--N",
            "5",
            "--p-critical",
            "--q",
            "6",
            "--out",
            "s.json",
            "--csv",
            "s.csv",
            "--emit-plot-data",
            "plot.csv",
            "--jobs",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = record(&d.join("s.json"));
    let Payload::Report(report) = &rec.payload else {
        panic!("not a sweep record")
    };
    let b = report.fit_for(Observable::Amplitude).unwrap().fit.exponent;
    assert!((b - 0.25).abs() < 0.05 * 0.25, "u(0) exponent {b}");

    let csv_bytes = std::fs::read(d.join("s.csv")).unwrap();
    let header = String::from_utf8_lossy(&csv_bytes).lines().next().unwrap().to_string();
    assert_eq!(header, CSV_HEADER.join(","));
    let rows = read_csv(csv_bytes.as_slice()).unwrap();
    assert_eq!(rows.len(), report.points.len());
    let mut again = Vec::new();
    write_csv(&rows, &mut again).unwrap();
    assert_eq!(again, csv_bytes);

    let plot = std::fs::read_to_string(d.join("plot.csv")).unwrap();
    assert!(plot.starts_with("observable,with_log,x,y,fit\n"));
    assert!(plot.lines().count() > 10);

    let o = gslab(d, &["fit", "--input", "s.json", "--out", "f.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(record(&d.join("f.json")).payload, rec.payload);
    // A solve record is not a sweep.
    std::fs::write(d.join("solve.json"), gslab(d, &SOLVE).stdout).unwrap();
    assert_eq!(gslab(d, &["fit", "--input", "solve.json"]).status.code(), Some(2));
}

#[test]
fn parse_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bytes = gslab(dir.path(), &SOLVE).stdout;
    let text = String::from_utf8(bytes).unwrap();

    let v2 = text.replacen("\"schema_version\": \"1\"", "\"schema_version\": \"2\"", 1);
    let e = ResultRecord::parse(v2.as_bytes()).unwrap_err();
    assert!(e.0.contains("schema_version"), "{e}");

    let at = text.find("\"amplitude\": ").unwrap() + "\"amplitude\": ".len();
    let end = at + text[at..].find(',').unwrap();
    let bad_type = format!("{}\"x\"{}", &text[..at], &text[end..]);
    let e = ResultRecord::parse(bad_type.as_bytes()).unwrap_err();
    assert!(e.0.contains("payload.data.amplitude"), "{e}");

    let missing = text.replacen("\"timestamp\"", "\"time\"", 1);
    let e = ResultRecord::parse(missing.as_bytes()).unwrap_err();
    assert!(e.0.contains("time"), "{e}");

    let mut rec = ResultRecord::parse(text.as_bytes()).unwrap();
    if let Payload::Solution(s) = &mut rec.payload {
        s.energy = f64::NAN;
    }
    assert!(rec.validate().unwrap_err().contains("payload.energy"));
}

#[test]
fn csv_header_mismatch_rejected() {
    let e = read_csv("eps,amp\n1,2\n".as_bytes()).unwrap_err();
    assert!(e.0.contains("header"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_rows_round_trip(
        rows in prop::collection::vec(
            (1e-12f64..1.0, prop::option::of(-1e3f64..1e3), prop::option::of(1e-20f64..1e20), any::<bool>()),
            0..12,
        )
    ) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(eps, a, s, c)| SweepRow {
                eps,
                amplitude: a,
                s,
                sigma: a.map(|v| v * 1e-7),
                lambda: s,
                dist_d1: None,
                nehari_res: a,
                pokh_res: s.map(|v| -v),
                converged_flag: c as u8,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &rows);
        let mut again = Vec::new();
        write_csv(&back, &mut again).unwrap();
        prop_assert_eq!(again, buf);
    }
}
