use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_suplab"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(scenario: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = bin()
        .arg("run")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("s.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const SINGLETONS: &str = "[tail.data]\npoints = 4\nindicators = [[0], [1], [2], [3]]\n";

#[test]
fn tail_scenario_reports_one_quarter() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("tail_singletons.toml"), tmp.path(), &[]), 0);
    let csv = read(tmp.path(), "tail.csv");
    let exact = csv.lines().find(|l| l.contains("exact-dp")).unwrap();
    assert!(exact.starts_with("sup tail,2,2/1,false,exact-dp,1/4,"), "{exact}");
    let mc = csv.lines().find(|l| l.contains("monte-carlo")).unwrap();
    assert!(mc.contains(",7,"), "seed column: {mc}");
    let summary: serde_json::Value = serde_json::from_str(&read(tmp.path(), "summary.json")).unwrap();
    assert_eq!(summary["kind"], "tail");
    assert_eq!(summary["seed"], 7);
}

#[test]
fn malformed_key_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 2\nu = 2\nmisspelled = 1\n{SINGLETONS}"));
    let out = bin().arg("run").arg(&s).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5") && err.contains("misspelled"), "{err}");
    let missing = write_scenario(tmp.path(), "kind = \"bp\"\n");
    assert_eq!(run(&missing, &tmp.path().join("o"), &[]), 2);
}

#[test]
fn failed_assertion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 2\nu = 2\nexpect = \"1/3\"\n{SINGLETONS}"));
    assert_eq!(run(&s, &tmp.path().join("o"), &[]), 1);
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 2\nu = 2\nexpect = \"1/4\"\n{SINGLETONS}"));
    assert_eq!(run(&s, &tmp.path().join("o"), &[]), 0);
}

#[test]
fn report_checks_do_not_change_the_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("halving.toml"), tmp.path(), &[]), 0);
    let chain = read(tmp.path(), "halving_chain.csv");
    assert!(chain.lines().any(|l| l.ends_with(",false")), "the boundary chain has failing steps");
    let schedule = read(tmp.path(), "halving_schedule.csv");
    assert!(schedule.lines().nth(2).unwrap().starts_with("1,4096,4.636"), "{schedule}");
    let vc = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("vc.toml"), vc.path(), &[]), 0);
    assert!(read(vc.path(), "vc_traces.csv").contains(",false"));
}

#[test]
fn full_report_has_in_regime_theorem_1a_rows() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("full_report.toml"), tmp.path(), &[]), 0);
    let bp = read(tmp.path(), "bp.csv");
    assert_eq!(bp.lines().next().unwrap(), "statement,p,method,lhs_exact,d,l,rho,rhs_bound,in_regime,satisfied,margin_log10");
    let rows: Vec<&str> = bp.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!((cells[0], cells[8], cells[9]), ("theorem1A", "true", "true"), "{r}");
        assert!(cells[10].parse::<f64>().unwrap() > 0.0);
    }
    for table in ["intro", "tail", "halving_schedule", "dyadic_levels", "hat_check"] {
        assert!(tmp.path().join(format!("{table}.csv")).exists(), "{table}");
    }
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    for name in ["full_report.toml", "cover.toml", "dyadic.toml"] {
        let dirs: Vec<_> = ["1", "2", "8", "8"]
            .iter()
            .map(|w| {
                let tmp = tempfile::tempdir().unwrap();
                assert_eq!(run(&scenarios().join(name), tmp.path(), &["--workers", w]), 0);
                tmp
            })
            .collect();
        let mut files: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        for d in &dirs[1..] {
            for f in &files {
                assert_eq!(
                    std::fs::read(dirs[0].path().join(f)).unwrap(),
                    std::fs::read(d.path().join(f)).unwrap(),
                    "{name}: {f:?}"
                );
            }
        }
    }
}

#[test]
fn seed_flag_overrides_the_scenario_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&scenarios().join("tail_singletons.toml"), a.path(), &[]);
    run(&scenarios().join("tail_singletons.toml"), b.path(), &["--seed", "8"]);
    let mc = |d: &Path| read(d, "tail.csv").lines().find(|l| l.contains("monte-carlo")).unwrap().to_string();
    assert_ne!(mc(a.path()), mc(b.path()));
    assert!(mc(b.path()).contains(",8,"));
}

#[test]
fn empty_tables_are_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 2\nu = 2\n{SINGLETONS}"));
    assert_eq!(run(&s, &tmp.path().join("o"), &[]), 0);
    assert_eq!(read(&tmp.path().join("o"), "tail_regime.csv"), "statement,hypothesis,holds\n");
}

#[test]
fn cap_override_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 3\nu = 2\n{SINGLETONS}"));
    let out = bin().env("SUPLAB_DP_CAP", "2").arg("run").arg(&s).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    // with a sampler attached the run falls back to Monte Carlo only
    let s = write_scenario(tmp.path(), &format!("kind = \"tail\"\n[tail]\nn = 3\nu = 2\nmc = {{ samples = 1000 }}\n{SINGLETONS}"));
    let out = bin().env("SUPLAB_DP_CAP", "2").arg("run").arg(&s).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&tmp.path().join("o"), "tail.csv");
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains("monte-carlo"));
}

#[test]
fn data_files_resolve_relative_to_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("d")).unwrap();
    std::fs::write(tmp.path().join("d/x.txt"), "space 2\n1/2\n1/2\nclass 1 2\n1 0\n").unwrap();
    let s = write_scenario(tmp.path(), "kind = \"tail\"\n[tail]\nn = 2\nu = 2\nexpect = \"1/4\"\ndata = { file = \"d/x.txt\" }\n");
    let cwd = tempfile::tempdir().unwrap();
    let status = bin().current_dir(cwd.path()).arg("run").arg(&s).arg("--out").arg(tmp.path().join("o")).status().unwrap();
    assert_eq!(status.code(), Some(0));
}
