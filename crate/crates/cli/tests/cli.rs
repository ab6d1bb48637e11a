use std::path::PathBuf;
use std::process::{Command, Output};

fn oblivq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oblivq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oblivq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_trace_passes_for_network_backend() {
    let out = oblivq(&[
        "verify-trace",
        "--target",
        "pq",
        "--capacity",
        "16",
        "--ops",
        "200",
        "--pairs",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("pair,digest_a,digest_b,equal\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 5);
}

#[test]
fn verify_trace_oram_and_plain_mode() {
    for args in [
        &[
            "verify-trace",
            "--target",
            "oram",
            "--capacity",
            "8",
            "--ops",
            "150",
            "--pairs",
            "3",
        ][..],
        &[
            "verify-trace",
            "--mode",
            "plain",
            "--capacity",
            "8",
            "--ops",
            "150",
            "--pairs",
            "3",
        ][..],
    ] {
        assert_eq!(oblivq(args).status.code(), Some(0), "{args:?}");
    }
}

#[test]
fn verify_trace_zero_ops() {
    let out = oblivq(&["verify-trace", "--ops", "0", "--pairs", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn naive_backend_is_caught() {
    let out = oblivq(&[
        "verify-trace",
        "--capacity",
        "16",
        "--ops",
        "300",
        "--pairs",
        "2",
        "--backend",
        "naive",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stderr).unwrap();
    assert!(report.contains("first divergence at event"), "{report}");
}

#[test]
fn fuzz_targets_pass() {
    for target in ["pq", "oram", "select"] {
        let out = oblivq(&[
            "fuzz",
            "--target",
            target,
            "--capacity",
            "16",
            "--ops",
            "2000",
            "--seed",
            "7",
        ]);
        assert_eq!(out.status.code(), Some(0), "{target}");
        assert!(stdout(&out).contains(",pass"));
    }
    let out = oblivq(&[
        "fuzz",
        "--target",
        "oram",
        "--capacity",
        "16",
        "--ops",
        "1",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn corrupted_annotation_fails() {
    let out = oblivq(&[
        "fuzz",
        "--target",
        "oram",
        "--capacity",
        "16",
        "--ops",
        "200",
        "--seed",
        "7",
        "--corrupt-annotation",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("annotation inconsistent"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(oblivq(&["nonsense"]).status.code(), Some(2));
    assert_eq!(oblivq(&["fuzz", "--target", "pq"]).status.code(), Some(2));
    assert_eq!(
        oblivq(&["fuzz", "--target", "pq", "--seed", "1", "--capacity", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        oblivq(&["iosim", "--experiment", "aware", "--policy", "fifo"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn same_seed_same_csv() {
    for args in [
        &[
            "bench",
            "--target",
            "oram",
            "--min-log",
            "2",
            "--max-log",
            "4",
            "--ops",
            "200",
            "--seed",
            "3",
        ][..],
        &[
            "iosim",
            "--experiment",
            "agnostic",
            "--min-log",
            "8",
            "--max-log",
            "10",
            "--memory",
            "256",
            "--block",
            "16",
            "--seed",
            "3",
        ][..],
        &[
            "verify-trace",
            "--target",
            "oram",
            "--capacity",
            "4",
            "--ops",
            "50",
            "--pairs",
            "2",
            "--seed",
            "3",
        ][..],
    ] {
        let a = oblivq(args);
        let b = oblivq(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn bench_writes_csv_file() {
    let path = scratch("bench.csv");
    let out = oblivq(&[
        "bench",
        "--min-log",
        "1",
        "--max-log",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "target,N,ops,total_probes,probes_per_op,peak_cells"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("pq,2,1,"));
}

#[test]
fn iosim_in_memory_is_one_pass_and_belady_wins() {
    let out = oblivq(&[
        "iosim",
        "--experiment",
        "aware",
        "--min-log",
        "10",
        "--max-log",
        "12",
        "--memory",
        "1024",
        "--block",
        "16",
        "--policy",
        "lru,belady",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let totals: Vec<Vec<String>> = stdout(&out)
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",total"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(totals.len(), 6);
    for pair in totals.chunks(2) {
        let lru: u64 = pair[0][5].parse().unwrap();
        let belady: u64 = pair[1][5].parse().unwrap();
        assert!(belady <= lru);
    }
    assert_eq!(totals[1][5], "64");
}

#[test]
fn oram_subcommand_answers_reads() {
    let input = scratch("ops.csv");
    std::fs::write(&input, "op,index,value\nW,3,42\nR,3,\nR,1,\nW,1,7\nR,1,\n").unwrap();
    let out = oblivq(&[
        "oram",
        "--input",
        input.to_str().unwrap(),
        "--capacity",
        "4",
        "--default",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "t,value\n2,42\n3,5\n5,7\n");
    let bad = scratch("bad.csv");
    std::fs::write(&bad, "R,9,\n").unwrap();
    let out = oblivq(&["oram", "--input", bad.to_str().unwrap(), "--capacity", "4"]);
    assert_eq!(out.status.code(), Some(2));
}
