//! End-to-end tests of the `edit-lens` binary: exit codes, output files,
//! cross-format consistency, seed handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_edit-lens")
}

fn demo_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo/eval.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn score_hter_demo_values() {
    let m = demo_manifest();
    let out = run(&["score", m.to_str().unwrap(), "--metric", "hter"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.starts_with("system\tmetric\tvalue\tedits\tref_len\n"),
        "{text}"
    );
    // alpha: reorders + article errors; beta: one inflection error
    assert!(text.contains("alpha\tHter\t14.3\t6\t42"), "{text}");
    assert!(text.contains("beta\tHter\t2.4\t1\t42"), "{text}");
}

#[test]
fn mter_edits_never_exceed_hter_edits() {
    let m = demo_manifest();
    let dir = tempfile::tempdir().unwrap();
    for metric in ["hter", "mter"] {
        let out = run(&[
            "score",
            m.to_str().unwrap(),
            "--metric",
            metric,
            "--out",
            dir.path().join(metric).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let parse = |name: &str| -> serde_json::Value {
        let text = std::fs::read_to_string(dir.path().join(name).join("score.json")).unwrap();
        serde_json::from_str(&text).unwrap()
    };
    let h = parse("hter");
    let m = parse("mter");
    let rows = |v: &serde_json::Value| v["ratio"].as_array().unwrap().clone();
    for (hr, mr) in rows(&h).iter().zip(rows(&m).iter()) {
        assert_eq!(hr["system"], mr["system"]);
        assert!(
            mr["num"].as_f64().unwrap() <= hr["num"].as_f64().unwrap(),
            "mter edits exceed hter edits for {}",
            hr["system"]
        );
    }
}

#[test]
fn tsv_and_json_carry_identical_numbers() {
    let m = demo_manifest();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "errors",
        m.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("errors.json")).unwrap())
            .unwrap();
    let tsv = std::fs::read_to_string(dir.path().join("errors.tsv")).unwrap();
    let mut lines = tsv.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    for (row, profile) in lines.zip(json["profiles"].as_array().unwrap()) {
        let cells: Vec<&str> = row.split('\t').collect();
        let field = |name: &str| cells[header.iter().position(|h| *h == name).unwrap()];
        assert_eq!(field("system"), profile["system"].as_str().unwrap());
        for (col, key) in [
            ("word_noshift", "word_noshift"),
            ("lemma_noshift", "lemma_noshift"),
            ("morph_delta_pct", "morph_delta_pct"),
            ("shift_pct", "shift_pct"),
        ] {
            let tsv_val: f64 = field(col).parse().unwrap();
            let json_val = profile[key].as_f64().unwrap();
            assert_eq!(
                format!("{json_val:.1}"),
                format!("{tsv_val:.1}"),
                "{col} differs between TSV and JSON"
            );
        }
        let shifts: u64 = field("shifts").parse().unwrap();
        assert_eq!(shifts, profile["shift_count"].as_u64().unwrap());
    }
}

#[test]
fn missing_manifest_is_exit_2() {
    let out = run(&["score", "/nonexistent/eval.toml"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unknown_metric_is_exit_2() {
    let m = demo_manifest();
    let out = run(&["score", m.to_str().unwrap(), "--metric", "meteor"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown metric"), "{}", stderr(&out));
}

#[test]
fn unknown_focal_system_is_exit_2() {
    let m = demo_manifest();
    let out = run(&[
        "shifts",
        m.to_str().unwrap(),
        "--focal",
        "nope",
        "--baseline",
        "alpha",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown system"), "{}", stderr(&out));
}

#[test]
fn missing_alignment_file_is_exit_2_naming_path() {
    // clone the demo manifest but point one alignment at a missing file
    let dir = tempfile::tempdir().unwrap();
    let src = demo_manifest();
    let base = src.parent().unwrap();
    for entry in std::fs::read_dir(base).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    let manifest = dir.path().join("eval.toml");
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("alpha.src-mt.align", "gone.align")).unwrap();
    let out = run(&["score", manifest.to_str().unwrap(), "--metric", "krs"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("gone.align"), "{}", stderr(&out));
}

#[test]
fn lemma_annotations_required_for_errors_exit_3() {
    // plain-text outputs carry no lemmas
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| std::fs::write(dir.path().join(name), content).unwrap();
    write("source.txt", "the dog barks\n");
    write("a.out.txt", "der hund bellt\n");
    write("a.pe.txt", "der hund bellt\n");
    write(
        "eval.toml",
        "source = \"source.txt\"\n[[systems]]\nname = \"bare\"\noutput = \"a.out.txt\"\npostedit = \"a.pe.txt\"\n",
    );
    let out = run(&["errors", dir.path().join("eval.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("bare"), "{}", stderr(&out));
    assert!(stderr(&out).contains("lemma"), "{}", stderr(&out));
}

#[test]
fn krs_without_alignments_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| std::fs::write(dir.path().join(name), content).unwrap();
    write("source.txt", "the dog\n");
    write("a.out.txt", "der hund\n");
    write("a.pe.txt", "der hund\n");
    write(
        "eval.toml",
        "source = \"source.txt\"\n[[systems]]\nname = \"a\"\noutput = \"a.out.txt\"\npostedit = \"a.pe.txt\"\n",
    );
    let out = run(&[
        "score",
        dir.path().join("eval.toml").to_str().unwrap(),
        "--metric",
        "krs",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("align_src_mt"), "{}", stderr(&out));
}

#[test]
fn breakdown_warns_when_correlation_undefined() {
    // demo corpus has two docs: correlation needs three
    let m = demo_manifest();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "breakdown",
        m.to_str().unwrap(),
        "--focal",
        "beta",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stderr(&out).contains("correlation undefined"),
        "{}",
        stderr(&out)
    );
    let bins = std::fs::read_to_string(dir.path().join("breakdown_bins.csv")).unwrap();
    assert!(bins.starts_with("bin_lo,bin_hi,n,system,mter\n"), "{bins}");
    // demo sentences are all short: one populated bin per system
    assert_eq!(bins.lines().count(), 1 + 2, "{bins}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("breakdown.json")).unwrap())
            .unwrap();
    assert!(json["correlation"].is_null());
    assert_eq!(json["docs"]["docs"].as_array().unwrap().len(), 2);
}

#[test]
fn sigtest_seed_precedence() {
    let m = demo_manifest();
    let dir = tempfile::tempdir().unwrap();
    let sig = |extra_args: &[&str], env_seed: Option<&str>, out_name: &str| -> serde_json::Value {
        let out_dir = dir.path().join(out_name);
        let mut cmd = Command::new(bin());
        cmd.args([
            "sigtest",
            m.to_str().unwrap(),
            "--test",
            "bootstrap",
            "--a",
            "beta",
            "--b",
            "alpha",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        cmd.args(extra_args);
        match env_seed {
            Some(s) => cmd.env("EDIT_LENS_SEED", s),
            None => cmd.env_remove("EDIT_LENS_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sigtest.json")).unwrap())
            .unwrap()
    };
    let default = sig(&[], None, "d");
    assert_eq!(default["result"]["seed"].as_u64(), Some(42));
    let env = sig(&[], Some("777"), "e");
    assert_eq!(env["result"]["seed"].as_u64(), Some(777));
    let flag_wins = sig(&["--seed", "9"], Some("777"), "f");
    assert_eq!(flag_wins["result"]["seed"].as_u64(), Some(9));
    // beta dominates alpha on the demo corpus: smoothing floor exactly
    assert_eq!(default["result"]["p_value"].as_f64().unwrap(), 1.0 / 1001.0);
}

#[test]
fn sigtest_ztest_and_ar_run() {
    let m = demo_manifest();
    let out = run(&[
        "sigtest",
        m.to_str().unwrap(),
        "--test",
        "ztest",
        "--a",
        "beta",
        "--b",
        "alpha",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("Ztest"), "{}", stdout(&out));
    let out = run(&[
        "sigtest",
        m.to_str().unwrap(),
        "--test",
        "ar",
        "--a",
        "beta",
        "--b",
        "alpha",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("Ar"), "{}", stdout(&out));
}

#[test]
fn report_runs_on_demo() {
    let m = demo_manifest();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "report",
        m.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["meta"]["schema"].as_u64(), Some(1));
    assert_eq!(json["focal"].as_str(), Some("beta"));
    assert_eq!(json["overall"].as_array().unwrap().len(), 2);
    // every corpus number is recomputable from the embedded per-segment data
    for row in json["overall"].as_array().unwrap() {
        let system = row["system"].as_str().unwrap();
        let stats = json["per_segment"]["hter"][system].as_array().unwrap();
        let num: f64 = stats.iter().map(|s| s["num"].as_f64().unwrap()).sum();
        let den: f64 = stats.iter().map(|s| s["den"].as_f64().unwrap()).sum();
        let recomputed = 100.0 * num / den;
        assert!((recomputed - row["hter"].as_f64().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn lowercase_flag_changes_scores() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| std::fs::write(dir.path().join(name), content).unwrap();
    write("source.txt", "the dog\n");
    write("a.out.txt", "Der Hund\n");
    write("a.pe.txt", "der hund\n");
    write(
        "eval.toml",
        "source = \"source.txt\"\n[[systems]]\nname = \"a\"\noutput = \"a.out.txt\"\npostedit = \"a.pe.txt\"\n",
    );
    let m = dir.path().join("eval.toml");
    let cased = run(&["score", m.to_str().unwrap()]);
    assert!(
        stdout(&cased).contains("a\tHter\t100.0"),
        "{}",
        stdout(&cased)
    );
    let lowered = run(&["score", m.to_str().unwrap(), "--lowercase"]);
    assert!(
        stdout(&lowered).contains("a\tHter\t0.0"),
        "{}",
        stdout(&lowered)
    );
}

#[test]
fn config_file_overrides_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| std::fs::write(dir.path().join(name), content).unwrap();
    write("source.txt", "the dog\n");
    write("a.out.txt", "Der Hund\n");
    write("a.pe.txt", "der hund\n");
    write(
        "eval.toml",
        "source = \"source.txt\"\n[[systems]]\nname = \"a\"\noutput = \"a.out.txt\"\npostedit = \"a.pe.txt\"\n",
    );
    write("override.toml", "[ter]\nlowercase = true\n");
    let m = dir.path().join("eval.toml");
    let out = run(&[
        "score",
        m.to_str().unwrap(),
        "--config",
        dir.path().join("override.toml").to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("a\tHter\t0.0"), "{}", stdout(&out));
}
