use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn selex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bicoid() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/bicoid.tsv")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let rounds = dir.path().join("rounds.tsv");
    let out = selex(&[
        "simulate",
        "--matrix",
        p(&bicoid()),
        "--log-tf",
        "12,10",
        "--seed",
        "7",
        "--pool-size",
        "20000",
        "--k",
        "12",
        "--sample",
        "300",
        "--out",
        p(&rounds),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("rounds.tsv.manifest.json").exists());

    let fit = dir.path().join("fit.txt");
    let matrix = dir.path().join("fit.tsv");
    let out = selex(&[
        "fit",
        "--rounds",
        p(&rounds),
        "--site-len",
        "10",
        "--seed",
        "3",
        "--restarts",
        "2",
        "--mc-samples",
        "2000",
        "--max-iter",
        "300",
        "--out",
        p(&fit),
        "--matrix-out",
        p(&matrix),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = selex_core::io::read_energy_matrix(&matrix).unwrap();
    assert_eq!(m.len(), 10);
    assert!(m.is_normalized());
    let text = fs::read_to_string(&matrix).unwrap();
    assert!(text.starts_with("pos\tA\tC\tG\tT\n"));
    assert!(fs::read_to_string(&fit).unwrap().contains("[matrix]"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "fit");
    assert_eq!(manifest["seeds"][0], 3);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = selex(&[
            "simulate",
            "--matrix",
            p(&bicoid()),
            "--log-tf",
            "10",
            "--seed",
            "11",
            "--pool-size",
            "5000",
            "--k",
            "12",
            "--sample",
            "100",
            "--threads",
            threads,
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.tsv", "1"), run("b.tsv", "3"));
}

#[test]
fn missing_rounds_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-rounds.tsv");
    let out = selex(&[
        "fit",
        "--rounds",
        p(&missing),
        "--site-len",
        "10",
        "--seed",
        "1",
        "--out",
        p(&dir.path().join("fit.txt")),
    ]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error[io]:"), "{err}");
    assert!(err.contains("no-such-rounds.tsv"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn consensus_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = dir.path().join("seqs.txt");
    fs::write(&seqs, "GGATTAGGGG\nAGATTAGGGG\n").unwrap();
    let out_path = dir.path().join("scores.tsv");
    let out = selex(&[
        "score",
        "--matrix",
        p(&bicoid()),
        "--sequences",
        p(&seqs),
        "--out",
        p(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0][1], "0.000000");
    assert_eq!(rows[1][1], "-4.722516");
}

#[test]
fn seed_is_required() {
    let dir = tempfile::tempdir().unwrap();
    let out = selex(&[
        "simulate",
        "--matrix",
        p(&bicoid()),
        "--log-tf",
        "10",
        "--out",
        p(&dir.path().join("x.tsv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[usage]:"));
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = dir.path().join("seqs.txt");
    fs::write(&seqs, "GGATTAGGGG\n").unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# scoring run\nmatrix = {}\nsequences = {}\nout = {}\n",
            p(&bicoid()),
            p(&seqs),
            p(&dir.path().join("from-config.tsv"))
        ),
    )
    .unwrap();
    let explicit = dir.path().join("explicit.tsv");
    let out = selex(&["score", "--config", p(&cfg), "--out", p(&explicit)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(explicit.exists());
    assert!(!dir.path().join("from-config.tsv").exists());

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let out = selex(&["score", "--config", p(&cfg), "--out", p(&explicit)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus_key"));
}

#[test]
fn malformed_matrix_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "pos\tA\tC\tG\n1\t0\t-1\t-2\n").unwrap();
    let seqs = dir.path().join("seqs.txt");
    fs::write(&seqs, "ACG\n").unwrap();
    let out = selex(&[
        "score",
        "--matrix",
        p(&bad),
        "--sequences",
        p(&seqs),
        "--out",
        p(&dir.path().join("o.tsv")),
    ]);
    let err = stderr(&out);
    assert!(err.starts_with("error[input]:"), "{err}");
    assert!(err.contains("bad.tsv"), "{err}");
}

#[test]
fn oracle_reports_class_counts_and_denominators() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.tsv");
    fs::write(&m, "pos\tA\tC\tG\tT\n1\t0.000000\t-1.000000\t-2.000000\t-3.000000\n").unwrap();
    let out_path = dir.path().join("oracle.txt");
    let out = selex(&[
        "oracle",
        "--k",
        "4",
        "--matrix",
        p(&m),
        "--log-tf",
        "0,-1",
        "--out",
        p(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("strand_classes = 136\n"), "{text}");
    assert!(text.contains("strand_classes_enumerated = 136\n"));
    assert!(text.contains("denominator_2 = "));
}

#[test]
fn scan_marks_hits() {
    let dir = tempfile::tempdir().unwrap();
    let fa = dir.path().join("g.fa");
    fs::write(&fa, ">c1\nTTGGATTAGGGGTTNNA\n").unwrap();
    let out_path = dir.path().join("scan.tsv");
    let out = selex(&[
        "scan",
        "--matrix",
        p(&bicoid()),
        "--genome",
        p(&fa),
        "--threshold",
        "-0.5",
        "--out",
        p(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("c1\t2\t0.000000\t1\n"), "{text}");
    assert!(text.contains("\tNA\t0\n"));
}
