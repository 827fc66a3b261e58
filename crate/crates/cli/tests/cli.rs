use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = "# ten-node example network\n10 16\n\
0 8 1\n3 1 1\n9 2 1\n7 3 1\n3 8 1\n8 5 1\n5 6 1\n6 9 1\n9 4 1\n4 8 2\n9 7 1\n9 8 3\n\
4 1 10\n5 1 10\n6 2 10\n7 2 10\n";

fn diskhop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diskhop")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes the fixture graph and builds its index; returns (graph, index).
fn fixture_index(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let g = dir.join("g.txt");
    fs::write(&g, FIXTURE).unwrap();
    let idx = dir.join("idx");
    let o = diskhop(&["build", "-i", p(&g), "-o", p(&idx), "--memory", "48", "--block", "48", "--min-shrink", "0.99"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (g, idx)
}

#[test]
fn build_reports_each_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, FIXTURE).unwrap();
    let idx = dir.path().join("idx");
    let o = diskhop(&["build", "-i", p(&g), "-o", p(&idx), "--memory", "48", "--block", "48", "--min-shrink", "0.99"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    for (i, line) in lines[..3].iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["iteration"], i as u64 + 1);
    }
    assert!(lines[3].contains("core 2 nodes"));
    assert!(idx.join("meta.json").exists());
}

#[test]
fn ssd_prints_one_line_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let o = diskhop(&["ssd", "-x", p(&idx), "-s", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0 0\n1 7\n2 5\n3 6\n4 5\n5 2\n6 3\n7 5\n8 1\n9 4\n");
    let o = diskhop(&["ssd", "-x", p(&idx), "-s", "1"]);
    assert!(stdout(&o).lines().any(|l| l == "0 INF"));
}

#[test]
fn sssp_prints_predecessors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let out = stdout(&diskhop(&["sssp", "-x", p(&idx), "-s", "0"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "0 0 -");
    assert_eq!(lines[6], "6 3 5");
    assert_eq!(lines[9], "9 4 6");
}

#[test]
fn ppd_single_and_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    assert_eq!(stdout(&diskhop(&["ppd", "-x", p(&idx), "-s", "0", "-t", "9"])), "0 9 4\n");
    let pairs = dir.path().join("pairs.txt");
    fs::write(&pairs, "0 9\n# comment\n\n1 0\n2 2\n").unwrap();
    let o = diskhop(&["ppd", "-x", p(&idx), "--batch", p(&pairs), "--threads", "2"]);
    assert_eq!(stdout(&o), "0 9 4\n1 0 INF\n2 2 0\n");
}

#[test]
fn ssd_batch_prefixes_each_source() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let sources = dir.path().join("s.txt");
    fs::write(&sources, "0\n8\n").unwrap();
    let out = stdout(&diskhop(&["ssd", "-x", p(&idx), "--batch", p(&sources)]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 22);
    assert_eq!(lines[0], "# source 0");
    assert_eq!(lines[11], "# source 8");
    assert_eq!(lines[20], "8 0");
}

#[test]
fn verify_passes_on_matching_graph() {
    let dir = tempfile::tempdir().unwrap();
    let (g, idx) = fixture_index(dir.path());
    let o = diskhop(&["verify", "-i", p(&g), "-x", p(&idx), "--sources", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn verify_fails_on_other_graph() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let other = dir.path().join("other.txt");
    fs::write(&other, FIXTURE.replace("\n0 8 1\n", "\n0 8 2\n")).unwrap();
    let o = diskhop(&["verify", "-i", p(&other), "-x", p(&idx)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL original_edges"));
}

#[test]
fn closeness_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let csv = dir.path().join("c.csv");
    let o = diskhop(&["closeness", "-x", p(&idx), "--epsilon", "0.5", "--seed", "3", "-o", p(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,estimate");
    assert_eq!(lines.len(), 11);
    assert!(String::from_utf8_lossy(&o.stderr).contains("10 sampled sources"));
    let again = dir.path().join("d.csv");
    diskhop(&["closeness", "-x", p(&idx), "--epsilon", "0.5", "--seed", "3", "-o", p(&again)]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn stats_summarises_index() {
    let dir = tempfile::tempdir().unwrap();
    let (_, idx) = fixture_index(dir.path());
    let out = stdout(&diskhop(&["stats", "-x", p(&idx)]));
    assert!(out.contains("archived nodes   8"));
    assert!(out.contains("shortcuts        3"));
    let json = stdout(&diskhop(&["stats", "-x", p(&idx), "--json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["n"], 10);
}

#[test]
fn sparse_labels_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "4 3\n100 200 5\n200 300 7\n300 100 1\n").unwrap();
    let idx = dir.path().join("idx");
    assert!(diskhop(&["build", "-i", p(&g), "-o", p(&idx), "--memory", "1KiB", "--block", "48"]).status.success());
    let out = stdout(&diskhop(&["ssd", "-x", p(&idx), "-s", "100"]));
    assert_eq!(out, "100 0\n200 5\n300 12\n301 INF\n");
    assert_eq!(stdout(&diskhop(&["ppd", "-x", p(&idx), "-s", "300", "-t", "200"])), "300 200 6\n");
    assert_eq!(diskhop(&["ssd", "-x", p(&idx), "-s", "0"]).status.code(), Some(2));
    assert_eq!(diskhop(&["verify", "-i", p(&g), "-x", p(&idx)]).status.code(), Some(0));
}

#[test]
fn undirected_unweighted_input() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "3 2\n0 1\n1 2\n").unwrap();
    let idx = dir.path().join("idx");
    let o = diskhop(&["build", "-i", p(&g), "-o", p(&idx), "--undirected", "--unweighted"]);
    assert!(o.status.success());
    assert_eq!(stdout(&diskhop(&["ssd", "-x", p(&idx), "-s", "2"])), "0 2\n1 1\n2 0\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (g, idx) = fixture_index(dir.path());
    assert_eq!(diskhop(&[]).status.code(), Some(1));
    assert_eq!(diskhop(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(diskhop(&["--help"]).status.code(), Some(0));
    assert_eq!(diskhop(&["--version"]).status.code(), Some(0));
    assert_eq!(diskhop(&["ssd", "-x", p(&idx)]).status.code(), Some(1));
    let bad = diskhop(&["build", "-i", p(&g), "-o", "x", "--memory", "12XB"]);
    assert_eq!(bad.status.code(), Some(1));
    let small = diskhop(&["build", "-i", p(&g), "-o", p(&dir.path().join("y")), "--memory", "1KiB", "--block", "4KiB"]);
    assert_eq!(small.status.code(), Some(1));
    assert_eq!(diskhop(&["ssd", "-x", p(&idx), "-s", "10"]).status.code(), Some(2));
    assert_eq!(diskhop(&["ssd", "-x", p(&dir.path().join("missing")), "-s", "0"]).status.code(), Some(2));
    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "3 2\n0 1 1\n").unwrap();
    let o = diskhop(&["build", "-i", p(&broken), "-o", p(&dir.path().join("z"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("header declares 2 edges"));
}

#[test]
fn repeated_builds_print_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, FIXTURE).unwrap();
    let run = |name: &str| {
        let idx = dir.path().join(name);
        let o = diskhop(&["build", "-i", p(&g), "-o", p(&idx), "--memory", "96", "--block", "48", "--seed", "7"]);
        let text = stdout(&o).replace(p(&idx), "IDX");
        (text, fs::read(idx.join("forward.bin")).unwrap(), fs::read(idx.join("meta.json")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}
