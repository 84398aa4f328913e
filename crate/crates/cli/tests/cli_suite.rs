//! End-to-end tests of the `cayley` binary: every subcommand is exercised
//! through the real executable, and artifact layouts, resolved configs,
//! digest manifests, determinism, and error reporting are all checked from
//! the outside, exactly as a user would see them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Path of the compiled binary under test.
fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cayley")
}

/// Fresh scratch directory, removed on drop. One per test, keyed by name so
/// parallel tests never collide.
struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Scratch {
        let dir = std::env::temp_dir().join(format!("cayley-cli-{}-{name}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).expect("creating scratch dir");
        Scratch(dir)
    }

    fn path(&self) -> &Path {
        &self.0
    }

    fn join(&self, rel: &str) -> PathBuf {
        self.0.join(rel)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

/// Runs the binary with `dir` as the working directory.
fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning cayley")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Asserts success, printing both streams on failure.
fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed (status {:?})\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout(out),
        stderr(out)
    );
}

/// Asserts failure with the expected exit code.
fn assert_fails(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit code {code}\nstdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

/// Generates the tiny standard dataset used by most tests: Z_5, M = 3.
fn gen_tiny(dir: &Path, out: &str, seed: &str) {
    let result = run_in(
        dir,
        &[
            "gen",
            "--n",
            "5",
            "--m",
            "3",
            "--k-train",
            "4",
            "--k-test",
            "2",
            "--perms-per-family",
            "4",
            "--seed",
            seed,
            "--out",
            out,
        ],
    );
    assert_ok(&result);
}

/// Architecture/trainer flags small enough to train in milliseconds.
const TINY_TRAIN: &[&str] = &[
    "--layers",
    "1",
    "--heads",
    "2",
    "--d-model",
    "16",
    "--d-ff",
    "32",
    "--context-len",
    "8",
    "--max-steps",
    "3",
    "--eval-interval",
    "2",
    "--batch-size",
    "8",
    "--early-stop-evals",
    "0",
];

/// Reads every file under `dir` into a map keyed by `/`-joined relative path.
fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("read_dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("strip prefix")
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/");
                out.insert(rel, fs::read(&path).expect("read file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

// ------------------------------------------------------------------- gen

#[test]
fn gen_writes_expected_artifacts() {
    let tmp = Scratch::new("gen-artifacts");
    gen_tiny(tmp.path(), "data", "1");
    let dir = tmp.join("data");

    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut expected = vec!["config.toml", "digests.txt", "manifest.toml"];
    for split in ["train", "test"] {
        for tag in [
            "plus_comm",
            "plus_ide",
            "oplus_comm",
            "oplus_ide",
            "ominus",
            "left",
            "right",
        ] {
            expected.push(Box::leak(format!("{split}_{tag}.txt").into_boxed_str()));
        }
    }
    expected.sort_unstable();
    assert_eq!(names, expected);

    // The digest manifest lists every file except itself, one
    // `<sha256>  <relative path>` line each, sorted by path.
    let digests = fs::read_to_string(dir.join("digests.txt")).unwrap();
    let lines: Vec<&str> = digests.lines().collect();
    assert_eq!(lines.len(), 16, "14 txt files + manifest.toml + config.toml");
    let mut listed = Vec::new();
    for line in &lines {
        let (hash, name) = line.split_once("  ").expect("two-space separator");
        assert_eq!(hash.len(), 64);
        assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
        assert!(dir.join(name).is_file(), "{name} listed but missing");
        listed.push(name.to_string());
    }
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(listed, sorted, "digest lines are sorted by path");

    // The manifest reflects the requested shape.
    let manifest = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("n = 5"));
    assert!(manifest.contains("m = 3"));
    assert!(manifest.contains("k_train = 4"));
    assert!(manifest.contains("k_test = 2"));
}

#[test]
fn gen_is_deterministic_across_directories() {
    let a = Scratch::new("gen-det-a");
    let b = Scratch::new("gen-det-b");
    gen_tiny(a.path(), "data", "1");
    gen_tiny(b.path(), "data", "1");
    assert_eq!(
        tree(&a.join("data")),
        tree(&b.join("data")),
        "same invocation must produce byte-identical trees"
    );

    let c = Scratch::new("gen-det-c");
    gen_tiny(c.path(), "data", "2");
    assert_ne!(
        tree(&a.join("data")),
        tree(&c.join("data")),
        "a different seed must change the dataset"
    );
}

#[test]
fn config_file_resolution_and_flag_precedence() {
    let tmp = Scratch::new("gen-config");
    fs::write(
        tmp.join("run.toml"),
        "n = 5\nm = 3\nk_train = 3\nk_test = 2\nperms_per_family = 4\nseed = 7\n",
    )
    .unwrap();

    // Flag overrides file: k_train comes from the flag, the rest from file.
    let out = run_in(
        tmp.path(),
        &["gen", "--config", "run.toml", "--k-train", "4", "--out", "data"],
    );
    assert_ok(&out);
    let manifest = fs::read_to_string(tmp.join("data/manifest.toml")).unwrap();
    assert!(manifest.contains("n = 5"), "n resolved from the config file");
    assert!(manifest.contains("k_train = 4"), "flag beats config file");
    assert!(manifest.contains("seed = \"0000000000000007\""));

    // The resolved config records the effective settings.
    let resolved = fs::read_to_string(tmp.join("data/config.toml")).unwrap();
    assert!(resolved.contains("command = \"gen\""));
    assert!(resolved.contains("deterministic = true"));
    assert!(resolved.contains("k_train = 4"));
    assert!(resolved.contains("seed = \"0x7\""));

    // Re-running from the resolved config alone reproduces the run
    // byte-for-byte (including the resolved config itself).
    let rerun_dir = Scratch::new("gen-config-rerun");
    let rerun = run_in(
        rerun_dir.path(),
        &[
            "gen",
            "--config",
            tmp.join("data/config.toml").to_str().unwrap(),
        ],
    );
    assert_ok(&rerun);
    assert_eq!(tree(&tmp.join("data")), tree(&rerun_dir.join("data")));
}

#[test]
fn seed_accepts_hex_and_decimal_strings() {
    let tmp = Scratch::new("gen-seed-hex");
    fs::write(tmp.join("hex.toml"), "n = 5\nm = 3\nseed = \"0x2a\"\n").unwrap();
    fs::write(tmp.join("dec.toml"), "n = 5\nm = 3\nseed = \"42\"\n").unwrap();
    for (cfg, out) in [("hex.toml", "d1"), ("dec.toml", "d2")] {
        let result = run_in(
            tmp.path(),
            &[
                "gen", "--config", cfg, "--k-train", "4", "--k-test", "2",
                "--perms-per-family", "4", "--out", out,
            ],
        );
        assert_ok(&result);
        let manifest = fs::read_to_string(tmp.join(out).join("manifest.toml")).unwrap();
        assert!(
            manifest.contains("seed = \"000000000000002a\""),
            "seed 42 in {cfg} should land as hex 2a:\n{manifest}"
        );
    }
}

// ------------------------------------------------------------------ audit

#[test]
fn audit_accepts_a_clean_dataset() {
    let tmp = Scratch::new("audit-clean");
    gen_tiny(tmp.path(), "data", "1");
    let out = run_in(tmp.path(), &["audit", "--data", "data"]);
    assert_ok(&out);
    assert!(
        stdout(&out).contains("audit clean"),
        "unexpected stdout: {}",
        stdout(&out)
    );
}

#[test]
fn audit_rejects_injected_cross_split_leakage() {
    let tmp = Scratch::new("audit-leak");
    gen_tiny(tmp.path(), "data", "1");

    // Replace one test row with a training row of the same category: counts
    // and labels stay valid, but the inputs now leak across the split.
    let train = fs::read_to_string(tmp.join("data/train_plus_comm.txt")).unwrap();
    let leaked = train.lines().next().unwrap().to_string();
    let test_file = tmp.join("data/test_plus_comm.txt");
    let test = fs::read_to_string(&test_file).unwrap();
    let mut lines: Vec<&str> = test.lines().collect();
    lines[0] = &leaked;
    fs::write(&test_file, format!("{}\n", lines.join("\n"))).unwrap();

    let out = run_in(tmp.path(), &["audit", "--data", "data"]);
    assert_fails(&out, 1);
    assert!(
        stderr(&out).starts_with("error: audit found"),
        "unexpected stderr: {}",
        stderr(&out)
    );
    assert!(
        stdout(&out).contains("violation"),
        "violations should be listed on stdout: {}",
        stdout(&out)
    );
}

// ------------------------------------------------------- verify-theorems

#[test]
fn verify_theorems_passes_and_writes_report() {
    let tmp = Scratch::new("verify");
    let out = run_in(
        tmp.path(),
        &[
            "verify-theorems", "--n", "5", "--m", "3", "--trials", "10",
            "--seed", "3", "--out", "vout",
        ],
    );
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("overall: PASS"), "report:\n{text}");

    let report = fs::read_to_string(tmp.join("vout/verification.txt")).unwrap();
    assert_eq!(report, text, "the written report is the printed report");
    assert!(tmp.join("vout/config.toml").is_file());
    assert!(tmp.join("vout/digests.txt").is_file());
}

// ------------------------------------------------------------ train/eval

#[test]
fn train_writes_artifacts_and_eval_reads_them() {
    let tmp = Scratch::new("train-eval");
    gen_tiny(tmp.path(), "data", "1");

    let mut args = vec!["train", "--data", "data", "--seed", "2", "--out", "tr"];
    args.extend_from_slice(TINY_TRAIN);
    let out = run_in(tmp.path(), &args);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(
        text.contains("train: 3 steps (early stop: false)"),
        "stdout:\n{text}"
    );
    assert!(text.contains("final train all "));
    assert!(text.contains("final test all "));
    for tag in ["plus_comm", "plus_ide", "oplus_comm", "oplus_ide", "ominus", "left", "right"] {
        assert!(
            text.contains(&format!("final test {tag} ")),
            "missing per-category line for {tag}:\n{text}"
        );
    }
    for file in ["model.ckpt", "metrics.csv", "loss.csv", "config.toml", "digests.txt"] {
        assert!(tmp.join("tr").join(file).is_file(), "missing {file}");
    }
    let resolved = fs::read_to_string(tmp.join("tr/config.toml")).unwrap();
    assert!(resolved.contains("command = \"train\""));
    assert!(resolved.contains("layers = 1"));
    assert!(resolved.contains("max_steps = 3"));

    // Evaluate the checkpoint on the same dataset.
    let eval = run_in(
        tmp.path(),
        &[
            "eval", "--checkpoint", "tr/model.ckpt", "--data", "data",
            "--split", "test", "--batch-size", "8", "--out", "ev",
        ],
    );
    assert_ok(&eval);
    let eval_text = stdout(&eval);
    for tag in ["plus_comm", "right"] {
        assert!(eval_text.contains(&format!("test {tag} ")), "stdout:\n{eval_text}");
    }
    assert!(eval_text.contains("test all "));
    assert!(
        !eval_text.contains("train all "),
        "--split test must not evaluate the train split:\n{eval_text}"
    );

    let csv = fs::read_to_string(tmp.join("ev/eval.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "split,tag,accuracy,correct,total");
    assert_eq!(lines.len(), 1 + 7 + 1, "7 categories + the all row");
    assert!(lines[1..].iter().all(|l| l.starts_with("test,")));
}

#[test]
fn eval_rejects_mismatched_checkpoint_and_dataset() {
    let tmp = Scratch::new("eval-mismatch");
    gen_tiny(tmp.path(), "data", "1");
    let mut args = vec!["train", "--data", "data", "--seed", "2", "--out", "tr"];
    args.extend_from_slice(TINY_TRAIN);
    assert_ok(&run_in(tmp.path(), &args));

    // Same n, different M: the checkpoint's vocabulary cannot encode it.
    let other = run_in(
        tmp.path(),
        &[
            "gen", "--n", "5", "--m", "4", "--k-train", "4", "--k-test", "2",
            "--perms-per-family", "4", "--seed", "1", "--out", "data4",
        ],
    );
    assert_ok(&other);
    let eval = run_in(
        tmp.path(),
        &["eval", "--checkpoint", "tr/model.ckpt", "--data", "data4"],
    );
    assert_fails(&eval, 1);
    assert!(
        stderr(&eval).contains("checkpoint is for Z_5 M=3"),
        "stderr: {}",
        stderr(&eval)
    );
}

#[test]
fn train_is_deterministic_across_directories() {
    let a = Scratch::new("train-det-a");
    let b = Scratch::new("train-det-b");
    for scratch in [&a, &b] {
        gen_tiny(scratch.path(), "data", "1");
        let mut args = vec!["train", "--data", "data", "--seed", "2", "--out", "tr"];
        args.extend_from_slice(TINY_TRAIN);
        assert_ok(&run_in(scratch.path(), &args));
    }
    assert_eq!(
        tree(&a.join("tr")),
        tree(&b.join("tr")),
        "identical train invocations must produce byte-identical artifacts"
    );
}

// ------------------------------------------------------------------ sweep

#[test]
fn sweep_trains_each_scale_and_probe_reads_the_layout() {
    let tmp = Scratch::new("sweep-probe");
    let mut args = vec![
        "sweep", "--n", "5", "--m", "3", "--k-values", "1,3", "--k-test", "1",
        "--perms-per-family", "4", "--seed", "2", "--out", "sw",
    ];
    args.extend_from_slice(TINY_TRAIN);
    let out = run_in(tmp.path(), &args);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("sweep: wrote 2 scales"), "stdout:\n{text}");
    assert!(text.contains("k=1 test all "));
    assert!(text.contains("k=3 test all "));
    for rel in ["sw/k1/model.ckpt", "sw/k3/model.ckpt", "sw/sweep.csv", "sw/config.toml"] {
        assert!(tmp.join(rel).is_file(), "missing {rel}");
    }
    let csv = fs::read_to_string(tmp.join("sw/sweep.csv")).unwrap();
    assert!(csv.starts_with("k,tag,split,accuracy\n"));
    let resolved = fs::read_to_string(tmp.join("sw/config.toml")).unwrap();
    let squished: String = resolved.chars().filter(|c| !c.is_whitespace()).collect();
    assert!(squished.contains("k_values=[1,3,]"), "config:\n{resolved}");

    // The sweep directory is exactly what `probe` expects.
    let probe = run_in(
        tmp.path(),
        &[
            "probe", "--checkpoints", "sw", "--base-inputs", "2",
            "--max-permutations", "2", "--seed", "5", "--out", "pr",
        ],
    );
    assert_ok(&probe);
    let probe_text = stdout(&probe);
    assert!(
        probe_text.contains("probe: wrote 6 matrices for K = [1, 3]"),
        "stdout:\n{probe_text}"
    );
    for stem in ["s_com_om", "s_com_lt", "s_com_rt", "s_ide_om", "s_ide_lt", "s_ide_rt"] {
        assert!(tmp.join(&format!("pr/{stem}.csv")).is_file(), "missing {stem}.csv");
        assert!(tmp.join(&format!("pr/{stem}.svg")).is_file(), "missing {stem}.svg");
    }

    // 1-layer model: k column plus snapshots after the embedding and the
    // single block; one row per checkpoint.
    let matrix = fs::read_to_string(tmp.join("pr/s_com_om.csv")).unwrap();
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines[0], "k,1,2");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("3,"));

    let meta = fs::read_to_string(tmp.join("pr/probe_meta.toml")).unwrap();
    assert!(meta.contains("std_convention = \"population\""));
    assert!(meta.contains("readout = \"equals token\""));
}

// ------------------------------------------------------------------ probe

#[test]
fn probe_svg_false_skips_rendering() {
    let tmp = Scratch::new("probe-nosvg");
    gen_tiny(tmp.path(), "data", "1");
    let mut args = vec!["train", "--data", "data", "--seed", "2", "--out", "tr"];
    args.extend_from_slice(TINY_TRAIN);
    assert_ok(&run_in(tmp.path(), &args));
    fs::create_dir_all(tmp.join("ck/k1")).unwrap();
    fs::copy(tmp.join("tr/model.ckpt"), tmp.join("ck/k1/model.ckpt")).unwrap();

    let probe = run_in(
        tmp.path(),
        &[
            "probe", "--checkpoints", "ck", "--base-inputs", "2",
            "--max-permutations", "2", "--svg", "false", "--out", "pr",
        ],
    );
    assert_ok(&probe);
    assert!(tmp.join("pr/s_ide_rt.csv").is_file());
    let svgs = fs::read_dir(tmp.join("pr"))
        .unwrap()
        .filter(|e| {
            e.as_ref().unwrap().path().extension().and_then(|s| s.to_str()) == Some("svg")
        })
        .count();
    assert_eq!(svgs, 0, "--svg false must suppress SVG output");
}

#[test]
fn probe_requires_a_sweep_layout() {
    let tmp = Scratch::new("probe-empty");
    fs::create_dir_all(tmp.join("empty")).unwrap();
    let out = run_in(tmp.path(), &["probe", "--checkpoints", "empty"]);
    assert_fails(&out, 1);
    assert!(
        stderr(&out).contains("no k<K>/model.ckpt checkpoints"),
        "stderr: {}",
        stderr(&out)
    );
}

// ----------------------------------------------------------- error paths

#[test]
fn missing_required_flag_is_a_clean_error() {
    let tmp = Scratch::new("err-missing");
    let out = run_in(tmp.path(), &["train"]);
    assert_fails(&out, 1);
    assert_eq!(
        stderr(&out).trim(),
        "error: missing required --data (pass the flag or set it in --config)"
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = Scratch::new("err-usage");
    let out = run_in(tmp.path(), &["gen", "--bogus"]);
    assert_fails(&out, 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = Scratch::new("err-config");
    fs::write(tmp.join("bad.toml"), "n = 5\nzz = 1\n").unwrap();
    let out = run_in(tmp.path(), &["gen", "--config", "bad.toml"]);
    assert_fails(&out, 1);
    let err = stderr(&out);
    assert!(err.starts_with("error: "), "stderr: {err}");
    assert!(err.contains("zz"), "should name the offending key: {err}");
}

#[test]
fn invalid_group_size_is_reported() {
    let tmp = Scratch::new("err-n");
    let out = run_in(tmp.path(), &["gen", "--n", "2", "--out", "data"]);
    assert_fails(&out, 1);
    assert!(stderr(&out).starts_with("error: "), "stderr: {}", stderr(&out));
}

#[test]
fn missing_checkpoint_file_is_reported() {
    let tmp = Scratch::new("err-ckpt");
    gen_tiny(tmp.path(), "data", "1");
    let out = run_in(
        tmp.path(),
        &["eval", "--checkpoint", "nope.ckpt", "--data", "data"],
    );
    assert_fails(&out, 1);
    assert!(
        stderr(&out).contains("loading checkpoint"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn deterministic_flag_is_accepted_everywhere() {
    let tmp = Scratch::new("det-flag");
    gen_tiny(tmp.path(), "data", "1");
    let out = run_in(
        tmp.path(),
        &["--deterministic", "audit", "--data", "data"],
    );
    assert_ok(&out);
}
