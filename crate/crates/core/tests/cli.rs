use std::path::Path;
use std::process::{Command, Output};

fn pbk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbk")).args(args).output().expect("spawn pbk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_input(dir: &Path, len: usize) -> std::path::PathBuf {
    let path = dir.join("input.bin");
    let bytes: Vec<u8> = (0..len).map(|i| ((i * 131 + 7) ^ (i >> 8)) as u8).collect();
    std::fs::write(&path, bytes).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_repair_decode_c1() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), 50_000);
    let shards = tmp.path().join("shards");
    let enc = pbk(&[
        "encode", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--L", "2",
        "--out-dir", s(&shards), "--stem", "blob", s(&input),
    ]);
    assert_eq!(enc.status.code(), Some(0), "{}", String::from_utf8_lossy(&enc.stderr));

    let victim = shards.join("blob.pbk1");
    let original = std::fs::read(&victim).unwrap();
    std::fs::remove_file(&victim).unwrap();
    let rep = pbk(&["repair", "--dir", s(&shards), "--stem", "blob", "--node", "1", "--format", "csv"]);
    assert_eq!(rep.status.code(), Some(0));
    let line = stdout(&rep).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("1,20,24,"), "{line}");
    assert_eq!(std::fs::read(&victim).unwrap(), original);

    for v in [2, 4, 9, 10, 11] {
        std::fs::remove_file(shards.join(format!("blob.pbk{v}"))).unwrap();
    }
    let out = tmp.path().join("restored.bin");
    let dec = pbk(&["decode", "--dir", s(&shards), "--stem", "blob", "--output", s(&out)]);
    assert_eq!(dec.status.code(), Some(0), "{}", String::from_utf8_lossy(&dec.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());

    std::fs::remove_file(shards.join("blob.pbk3")).unwrap();
    let short = pbk(&["decode", "--dir", s(&shards), "--stem", "blob", "--output", s(&out)]);
    assert_eq!(short.status.code(), Some(4));
}

#[test]
fn encode_repair_decode_c2_with_node_list() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), 12_345);
    let enc = pbk(&[
        "encode", "--variant", "2", "--n", "12", "--k", "8", "--s", "4", "--L", "2",
        "--out-dir", s(tmp.path()), s(&input),
    ]);
    assert_eq!(enc.status.code(), Some(0), "{}", String::from_utf8_lossy(&enc.stderr));
    for node in 1..=12 {
        let shard = tmp.path().join(format!("input.bin.pbk{node}"));
        let original = std::fs::read(&shard).unwrap();
        std::fs::remove_file(&shard).unwrap();
        let rep = pbk(&["repair", "--dir", s(tmp.path()), "--stem", "input.bin", "--node", &node.to_string()]);
        assert_eq!(rep.status.code(), Some(0));
        assert_eq!(std::fs::read(&shard).unwrap(), original, "node {node}");
    }
    let out = tmp.path().join("restored.bin");
    let dec = pbk(&[
        "decode", "--dir", s(tmp.path()), "--stem", "input.bin", "--output", s(&out),
        "--nodes", "12,11,10,9,5,3,2,1",
    ]);
    assert_eq!(dec.status.code(), Some(0));
    assert!(stdout(&dec).contains("from nodes 12,11,10,9,5,3,2,1 "), "{}", stdout(&dec));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());
}

#[test]
fn empty_file_roundtrips() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), 0);
    let enc = pbk(&["encode", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--out-dir", s(tmp.path()), s(&input)]);
    assert_eq!(enc.status.code(), Some(0));
    let out = tmp.path().join("restored.bin");
    let dec = pbk(&["decode", "--dir", s(tmp.path()), "--stem", "input.bin", "--output", s(&out)]);
    assert_eq!(dec.status.code(), Some(0));
    assert!(std::fs::read(&out).unwrap().is_empty());
}

#[test]
fn corrupted_shard_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), 1000);
    pbk(&["encode", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--out-dir", s(tmp.path()), s(&input)]);
    let shard = tmp.path().join("input.bin.pbk2");
    let mut bytes = std::fs::read(&shard).unwrap();
    bytes[0] = b'X';
    std::fs::write(&shard, bytes).unwrap();
    let out = tmp.path().join("restored.bin");
    let dec = pbk(&["decode", "--dir", s(tmp.path()), "--stem", "input.bin", "--output", s(&out), "--nodes", "1,2,3,4,5,6"]);
    assert_eq!(dec.status.code(), Some(4));

    // without an explicit list the bad shard is skipped
    let dec = pbk(&["decode", "--dir", s(tmp.path()), "--stem", "input.bin", "--output", s(&out)]);
    assert_eq!(dec.status.code(), Some(0));
    assert!(!stdout(&dec).contains("nodes 1,2,"));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());
}

#[test]
fn parameter_errors_exit_2() {
    for args in [
        &["plan", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--L", "4"][..],
        &["plan", "--variant", "1", "--n", "6", "--k", "6", "--m", "4"][..],
        &["verify-mds", "--variant", "3", "--n", "11", "--k", "6"][..],
        &["plan", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--node", "12"][..],
        &["bench", "--variant", "1", "--r", "x..y"][..],
    ] {
        assert_eq!(pbk(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_manifest_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let rep = pbk(&["repair", "--dir", s(tmp.path()), "--stem", "nothing", "--node", "1"]);
    assert_eq!(rep.status.code(), Some(3));
}

#[test]
fn verify_mds_reports_exhaustive_pass() {
    let o = pbk(&["verify-mds", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--L", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "C1(11,6,4,2): pass (462 subsets, exhaustive)");
}

#[test]
fn plan_reports_known_bandwidths() {
    let o = pbk(&["plan", "--variant", "1", "--n", "11", "--k", "6", "--m", "4", "--L", "2", "--format", "csv"]);
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(rows[..6], ["20", "20", "19", "19", "20", "20"]);

    let o = pbk(&["plan", "--variant", "2", "--n", "12", "--k", "8", "--s", "4", "--L", "2", "--node", "1", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ok"));
}

#[test]
fn bench_csv_is_deterministic() {
    let args = ["bench", "--variant", "2", "--r", "3..=6", "--k", "2..=12", "--s", "r"];
    let a = pbk(&args);
    let b = pbk(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,n,k,r,m,L,gamma_all,gamma_sys,gamma_parity,gamma_min,gamma_max,lemma7"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 12));
}
