use std::path::Path;
use std::process::{Command, Output};

use divlab::exponents::s_of_alpha;
use divlab::ExactRational;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponents_csv_is_exact_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["--n", "15", "exponents"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let path = tmp.path().join("out/exponents_n15.csv");
    let mut r = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["alpha_num", "alpha_den", "s_num", "s_den", "branch", "winning_m"]);
    let mut rows = 0;
    let mut last_alpha: Option<ExactRational> = None;
    for rec in r.records() {
        let rec = rec.unwrap();
        let alpha: ExactRational = format!("{}/{}", &rec[0], &rec[1]).parse().unwrap();
        let s: ExactRational = format!("{}/{}", &rec[2], &rec[3]).parse().unwrap();
        assert_eq!(s, s_of_alpha(15, &alpha).unwrap().value, "alpha={alpha}");
        assert!(last_alpha.as_ref().is_none_or(|a| *a < alpha));
        last_alpha = Some(alpha);
        rows += 1;
    }
    assert!(rows >= 76, "{rows} rows");
    assert_eq!(last_alpha, Some(ExactRational::from_integer(15)));
    let svg = std::fs::read_to_string(tmp.path().join("out/exponents_n15.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.matches("<circle").count() >= 5 && svg.trim_end().ends_with("</svg>"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/exponents.report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["n"], 15);
}

#[test]
fn exit_codes_follow_contract() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["--n", "1", "exponents"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--set", "nonsense=3", "exponents"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--step", "0", "exponents"])), 2);
    assert_eq!(code(&run(tmp.path(), &["verify", "nosuchsuite"])), 2);
    assert_eq!(code(&run(tmp.path(), &["--R", "2^40..2^44", "verify", "slabs"])), 3);
    // An impossible tolerance turns a passing suite into an assertion failure.
    assert_eq!(code(&run(tmp.path(), &["--set", "tol_slope=0", "verify", "evolution"])), 1);
    assert_eq!(code(&run(tmp.path(), &["verify", "gauss"])), 0);
}

#[test]
fn config_file_is_read() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.cfg"),
        "# small curve\nn = 6\nstep = 1/4\nformat = csv\n",
    )
    .unwrap();
    let o = run(tmp.path(), &["--config", "run.cfg", "exponents"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(tmp.path().join("out/exponents_n6.csv").exists());
    assert!(!tmp.path().join("out/exponents_n6.svg").exists());
    std::fs::write(tmp.path().join("bad.cfg"), "n 6\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["--config", "bad.cfg", "exponents"])), 2);
}

#[test]
fn sweeps_are_deterministic_and_resumable() {
    let args = ["--n", "2", "--m", "1", "--set", "samples=20000", "sweep"];
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let tmp = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for comp in ["slope", "dim", "omega"] {
            let mut a = args.to_vec();
            a.push(comp);
            let o = run(tmp.path(), &a);
            assert_eq!(code(&o), 0, "{comp}: {}", stdout(&o));
            bytes.push(std::fs::read(tmp.path().join(format!("out/sweep_{comp}.csv"))).unwrap());
        }
        // A rerun in place reuses every row and rewrites the same bytes.
        let mut a = args.to_vec();
        a.push("slope");
        let o = run(tmp.path(), &a);
        assert!(stdout(&o).contains("computed=0"), "{}", stdout(&o));
        assert_eq!(std::fs::read(tmp.path().join("out/sweep_slope.csv")).unwrap(), bytes[0]);
        outputs.push(bytes);
    }
    assert_eq!(outputs[0], outputs[1]);
    let slope = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert_eq!(slope.lines().count(), 4, "header plus three u2 values");
}

#[test]
fn verify_report_json_matches_text() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["--format", "json", "verify", "counting"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/verify_counting.report.json")).unwrap()).unwrap();
    for check in json["checks"].as_array().unwrap() {
        let name = check["name"].as_str().unwrap();
        let line = text.lines().find(|l| l.contains(name)).expect("check in text");
        for (k, v) in check["values"].as_object().unwrap() {
            assert!(line.contains(&format!("{k}={v}")), "{line} lacks {k}={v}");
        }
    }
}
