use std::path::Path;
use std::process::{Command, Output};

use aloha_sim::table_io::load_table;

fn aloha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloha"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = aloha(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

const SMALL_TABLE: [&str; 6] = ["--placements", "200", "--samples", "2000", "--k-max", "34"];

#[test]
fn tabulate_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.txt"), path(dir.path(), "b.txt"));
    let mut args = vec!["tabulate", "--out", &a];
    args.extend(SMALL_TABLE);
    let summary = ok(&args);
    assert!(summary.contains("invariants: ok"));
    args[2] = &b;
    ok(&args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (table, _) = load_table(Path::new(&a)).unwrap();
    assert_eq!(table.k_max(), 34);
}

#[test]
fn tabulate_k_max_one_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "t.txt");
    ok(&["tabulate", "--k-max", "1", "--s-max", "3", "--placements", "5", "--samples", "10", "--out", &out]);
    let (table, _) = load_table(Path::new(&out)).unwrap();
    assert_eq!(table.moments(), &[1.0, 1.0, 1.0]);
}

#[test]
fn sweep_smoke_and_reproducibility() {
    let args = ["sweep", "--runs", "1", "--grid", "0.2", "--no-analytic", "--seed", "7"];
    let first = ok(&args);
    assert_eq!(first.lines().count(), 3);
    assert_eq!(ok(&args), first);
    let third = ok(&["sweep", "--runs", "1", "--grid", "0.2", "--no-analytic", "--seed", "8"]);
    assert_ne!(third, first);
}

#[test]
fn sweep_with_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = path(dir.path(), "t.txt");
    let mut args = vec!["tabulate", "--out", &table];
    args.extend(SMALL_TABLE);
    ok(&args);
    let (a, b) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"));
    for out in [&a, &b] {
        let report = ok(&["sweep", "--runs", "20", "--grid", "0:0.4:0.2", "--moment-table", &table, "--out", out]);
        assert!(report.contains("peak T coop"));
    }
    let csv = std::fs::read_to_string(&a).unwrap();
    // the manifest names the output path, so compare everything after it
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&csv), body(&std::fs::read_to_string(&b).unwrap()));
    assert!(csv.lines().next().unwrap().contains("table_sha256="));
    assert!(!csv.contains(",absent"));
}

#[test]
fn usage_errors_exit_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "never.csv");
    for args in [
        vec!["sweep", "--runs", "1", "--out", &out],
        vec!["sweep", "--grid", "1:0:0.1", "--no-analytic", "--out", &out],
        vec!["sweep", "--bogus"],
        vec!["oracle", "--n", "21"],
        vec!["tabulate", "--placements", "0", "--out", &out],
    ] {
        assert_eq!(aloha(&args).status.code(), Some(1), "{args:?}");
    }
    assert!(!Path::new(&out).exists());
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.txt");
    std::fs::write(&bad, "format_version 1\nk_max 2\n").unwrap();
    let out = aloha(&["sweep", "--runs", "1", "--moment-table", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let missing = path(dir.path(), "missing.txt");
    assert_eq!(aloha(&["sweep", "--moment-table", &missing]).status.code(), Some(2));
}

#[test]
fn gbullet_coverage_zero_and_subset_rows() {
    let common = ["--runs", "5", "--grid", "0:0.1:0.05", "--m", "40"];
    let mut args = vec!["gbullet", "--lambdas", "1", "--eps", "0.05"];
    args.extend(common);
    let text = ok(&args);
    assert_eq!(text.lines().nth(2).unwrap(), "1,0.05,0,0");

    let mut full = vec!["gbullet", "--lambdas", "2,3", "--eps", "0.2,0.5"];
    full.extend(common);
    let mut part = vec!["gbullet", "--lambdas", "3", "--eps", "0.2,0.5"];
    part.extend(common);
    let full = ok(&full);
    let part = ok(&part);
    let rows = |s: &str| s.lines().skip(2).map(String::from).collect::<Vec<_>>();
    assert_eq!(rows(&part), rows(&full)[2..].to_vec());
}

#[test]
fn oracle_on_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    let one = path(dir.path(), "one.txt");
    std::fs::write(&one, "format_version 1\nn 1\nm 1\nr 0.1\np 0.3\nusers\n0 0 1\nstations\n0 0\n").unwrap();
    let text = ok(&["oracle", "--instance", &one, "--masks", "20000"]);
    let row = text.lines().find(|l| l.starts_with("0,")).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[1], "0.300000");
    assert_eq!(cells[6], "0.300000");

    let two = path(dir.path(), "two.txt");
    std::fs::write(
        &two,
        "format_version 1\nn 2\nm 1\nr 0.1\np 0.4\nusers\n0.01 0 1\n-0.01 0 1\nstations\n0 0\n",
    )
    .unwrap();
    let text = ok(&["oracle", "--instance", &two, "--masks", "20000"]);
    for user in ["0,", "1,"] {
        let row = text.lines().find(|l| l.starts_with(user)).unwrap();
        assert!(row.starts_with(&format!("{user}0.240000,")), "{row}");
    }
    assert_eq!(ok(&["oracle", "--instance", &two, "--masks", "20000"]), text);
}

#[test]
fn oracle_random_deployment_is_deterministic() {
    let args = ["oracle", "--n", "10", "--m", "3", "--masks", "20000", "--seed", "4"];
    let text = ok(&args);
    assert!(text.contains("cooperative dominates non-cooperative: yes"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 11);
    assert_eq!(ok(&args), text);
}
