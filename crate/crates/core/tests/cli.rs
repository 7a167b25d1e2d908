use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netgame::estimation::{simulate_networks, synthetic_covariates};
use netgame::io::{load_data, read_theta};
use netgame::rng::stream;

fn netgame(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgame"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = netgame(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const THETA: &str = "action:const = -0.5\naction:hh_smokes = 0.8\nlocal_ext = 0.6\nlink:const = -1.5\nlink:same_grade = 0.7\nreciprocity = 1.2\n";

#[test]
fn generated_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), THETA).unwrap();
    ok(dir.path(), &["gen-synthetic", "--theta-file", "t.txt", "--networks", "3", "--n", "7", "--seed", "4", "--burn", "2000", "--out", "d"]);
    let loaded = load_data(&dir.path().join("d/nodes.csv"), &dir.path().join("d/edges.csv")).unwrap();
    let p = read_theta(&dir.path().join("t.txt")).unwrap();
    let tables: Vec<_> = (0..3u32).map(|g| synthetic_covariates(7, g + 1, &mut stream(4, 1, g)).unwrap()).collect();
    assert_eq!(loaded.sample, simulate_networks(&p, &tables, Some(2000), None, 4).unwrap());
    assert_eq!(loaded.schools, vec![1, 2, 3]);

    let stats = ok(dir.path(), &["netstats", "--nodes", "d/nodes.csv", "--edges", "d/edges.csv"]);
    let v: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["result"]["schools"].as_array().unwrap().len(), 3);
}

#[test]
fn exact_report_across_meeting_sizes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), THETA).unwrap();
    let out = ok(dir.path(), &["exact", "--theta-file", "t.txt", "--n", "3", "--k", "2", "--k", "3"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["result"]["pairwise"][0]["tv"].as_f64().unwrap() <= 1e-10);
    assert!(v["result"]["max_tv"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["config"]["k"], serde_json::json!([2, 3]));
}

#[test]
fn spectrum_prints_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["spectrum", "--n", "4", "--k", "2"]);
    assert!(out.contains("(11/12)"), "{out}");
    assert!(out.contains("spectra match"), "{out}");
}

#[test]
fn enumerate_lists_nested_sets() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), THETA).unwrap();
    ok(dir.path(), &["enumerate", "--theta-file", "t.txt", "--n", "3", "--out", "e.json"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["nested"], true);
    assert_eq!(v["result"]["sets"].as_array().unwrap().len(), 2);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), THETA).unwrap();
    fs::write(dir.path().join("n.csv"), "id,school,sex,grade,race,hh_smokes,mom_edu,price,smokes\n1,1,F,9,white,0,0,100,0\n2,1,M,9,white,0,0,100,1\n").unwrap();
    fs::write(dir.path().join("e.csv"), "src,dst\n1,3\n").unwrap();
    let out = netgame(dir.path(), &["netstats", "--nodes", "n.csv", "--edges", "e.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown node id 3"));

    let out = netgame(dir.path(), &["exact", "--theta-file", "t.txt", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));

    for args in [&["frobnicate"][..], &["spectrum", "--n", "3", "--bogus"], &["simulate", "--theta-file", "t.txt", "--n", "3", "--steps", "9", "--out", "o"]] {
        let out = netgame(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
}
