mod common;

use common::*;
use serde_json::Value;
use tempfile::TempDir;

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    dir
}

fn ok(dir: &TempDir, args: &[&str]) -> String {
    let o = sgk(dir.path(), args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn code(dir: &TempDir, args: &[&str]) -> Option<i32> {
    sgk(dir.path(), args).status.code()
}

#[test]
fn ctc_loss_on_uniform_two_frame_example() {
    let d = setup();
    let half = (0.5f64).ln();
    write(d.path(), "v1.txt", "<blank>\na\n");
    write(d.path(), "u.txt", format!("2 2\n{half} {half}\n{half} {half}\n"));
    write(d.path(), "a.txt", "a");
    let args = ["ctc", "loss", "--posteriors", "u.txt", "--vocab", "v1.txt", "--labels", "a.txt"];
    assert_eq!(ok(&d, &args), "LOSS=0.287682\n");
}

#[test]
fn infeasible_loss_exits_three() {
    let d = setup();
    write(d.path(), "long.txt", "a a b a");
    let args = ["ctc", "loss", "--posteriors", "post.txt", "--vocab", "vocab.txt", "--labels", "long.txt"];
    assert_eq!(code(&d, &args), Some(3));
}

#[test]
fn greedy_decode_of_one_hot_posteriorgram() {
    let d = setup();
    // a a blank b b a -> "a b a"
    let rows: Vec<String> = [1, 1, 0, 2, 2, 1]
        .iter()
        .map(|&y| (0..3).map(|v| if v == y { "0" } else { "-inf" }).collect::<Vec<_>>().join(" "))
        .collect();
    write(d.path(), "oh.txt", format!("6 3\n{}\n", rows.join("\n")));
    let base = ["ctc", "decode", "--posteriors", "oh.txt", "--vocab", "vocab.txt"];
    assert_eq!(ok(&d, &[&base[..], &["--mode", "greedy"]].concat()), "HYP=a b a\n");
    assert_eq!(ok(&d, &[&base[..], &["--mode", "time-sync", "--beam", "3"]].concat()), "HYP=a b a\n");
    assert_eq!(ok(&d, &[&base[..], &["--mode", "label-sync", "--beam", "3"]].concat()), "HYP=a b a\n");
}

#[test]
fn decode_flag_misuse_is_a_usage_error() {
    let d = setup();
    let base = ["ctc", "decode", "--posteriors", "post.txt", "--vocab", "vocab.txt"];
    for extra in [
        &["--mode", "time-sync", "--beam", "0"][..],
        &["--mode", "greedy", "--beam", "4"],
        &["--mode", "label-sync", "--prior-from", "."],
        &["--mode", "time-sync", "--lm-scale", "0.5"],
        &["--mode", "time-sync", "--lm-scale", "-1"],
        &["--mode", "sideways"],
    ] {
        assert_eq!(code(&d, &[&base[..], extra].concat()), Some(1), "{extra:?}");
    }
}

#[test]
fn decode_with_lm_and_prior() {
    let d = setup();
    std::fs::create_dir(d.path().join("priors")).unwrap();
    std::fs::copy(d.path().join("post.txt"), d.path().join("priors/p1.txt")).unwrap();
    let args = [
        "ctc", "decode", "--posteriors", "post.txt", "--vocab", "vocab.txt", "--mode", "time-sync", "--lm", "lm.txt",
        "--lm-scale", "0.3", "--prior-from", "priors", "--prior-scale", "0.5", "--beam", "4",
    ];
    let first = ok(&d, &args);
    assert!(first.starts_with("HYP="));
    assert_eq!(first, ok(&d, &args));
}

#[test]
fn prefix_of_empty_sequence_is_certain() {
    let d = setup();
    write(d.path(), "none.txt", "");
    let args = ["ctc", "prefix", "--posteriors", "post.txt", "--vocab", "vocab.txt", "--labels", "none.txt"];
    assert_eq!(ok(&d, &args), "LOGP=0.000000\n");
}

#[test]
fn wer_on_identical_files() {
    let d = setup();
    assert_eq!(ok(&d, &["eval", "wer", "--ref", "ref.txt", "--hyp", "ref.txt"]), "WER=0.000000 S=0 D=0 I=0 N=3\n");
}

#[test]
fn wer_pools_counts() {
    let d = setup();
    write(d.path(), "r.txt", "a b\n1 2 3 4 5 6 7 8\n");
    write(d.path(), "h.txt", "a x\n1 2 3 4 5 6 7 8\n");
    assert_eq!(ok(&d, &["eval", "wer", "--ref", "r.txt", "--hyp", "h.txt"]), "WER=0.100000 S=1 D=0 I=0 N=10\n");
}

#[test]
fn perplexity_of_uniform_lm() {
    let d = setup();
    write(d.path(), "v3.txt", "<blank>\na\nb\nc\n");
    write(d.path(), "u.lm", "a\t5\nb\t5\nc\t5\n</s>\t5\n");
    write(d.path(), "t.txt", "a b c\nc\nb a\n");
    assert_eq!(ok(&d, &["eval", "ppl", "--lm", "u.lm", "--vocab", "v3.txt", "--text", "t.txt"]), "PPL=4.000000\n");
}

#[test]
fn featurize_one_second() {
    let d = setup();
    write(d.path(), "one.wav", wav_bytes(1, 16000, 16, false, 16000));
    assert_eq!(ok(&d, &["featurize", "--input", "one.wav", "--output", "f.txt"]), "FRAMES=98 DIM=13\n");
    let text = std::fs::read_to_string(d.path().join("f.txt")).unwrap();
    assert!(text.starts_with("98 13\n"));
    assert_eq!(text.lines().count(), 99);
}

#[test]
fn featurize_rejections() {
    let d = setup();
    write(d.path(), "st.wav", wav_bytes(2, 16000, 16, false, 1000));
    let o = sgk(d.path(), &["featurize", "--input", "st.wav", "--output", "f.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("channels"));
    let args = ["featurize", "--input", "tone.wav", "--output", "f.txt", "--cepstra", "40", "--filters", "26"];
    assert_eq!(code(&d, &args), Some(1));
    assert_eq!(code(&d, &["featurize", "--input", "tone.wav", "--output", "f.txt", "--tm", "3"]), Some(1));
}

#[test]
fn featurize_augmentation_is_seeded() {
    let d = setup();
    let run = |seed: &str, out: &str| {
        let args = ["--seed", seed, "featurize", "--input", "tone.wav", "--output", out, "--binary", "--augment", "--tm", "6", "--fm", "5"];
        ok(&d, &args);
        std::fs::read(d.path().join(out)).unwrap()
    };
    let a = run("7", "a.bin");
    assert_eq!(a, run("7", "b.bin"));
    assert_ne!(a, run("8", "c.bin"));
    assert!(a.starts_with(b"FTRX"));
}

#[test]
fn analyze_commands() {
    let d = setup();
    let cca = ok(&d, &["analyze", "cca", "--x", "feat.txt", "--y", "feat.txt"]);
    assert!(cca.starts_with("CCA=1.000000"), "{cca}");
    let mi = ok(&d, &["analyze", "mi", "--features", "feat.txt", "--labels", "ints.txt", "--k", "1"]);
    assert_eq!(mi, "MI=0.000000\n");
    write(
        d.path(),
        "ssl.json",
        r#"{"context":[1,0],"target":[2,0],"negatives":[[0,3]],"temperature":1,"usage":[[0.5,0.5]]}"#,
    );
    let out = ok(&d, &["analyze", "ssl-losses", "--input", "ssl.json", "--alpha", "0"]);
    assert_eq!(out, "CONTRASTIVE=0.313262 DIVERSITY=-0.346574 TOTAL=0.313262\n");
    assert_eq!(code(&d, &["analyze", "mi", "--features", "feat.txt", "--labels", "ints.txt", "--k", "9"]), Some(1));
}

#[test]
fn json_reports_carry_a_version() {
    let d = setup();
    let out = ok(&d, &["--json", "eval", "wer", "--ref", "ref.txt", "--hyp", "ref.txt"]);
    assert_eq!(out.lines().count(), 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["wer"], 0.0);
}

#[test]
fn grounding_pipeline_is_deterministic() {
    let d = setup();
    ok(&d, &["--seed", "1", "ground", "gen", "--output", "a.jsonl", "--num-scenes", "60"]);
    ok(&d, &["--seed", "1", "ground", "gen", "--output", "b.jsonl", "--num-scenes", "60"]);
    let a = std::fs::read(d.path().join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.jsonl")).unwrap());
    ok(&d, &["--seed", "2", "ground", "gen", "--output", "c.jsonl", "--num-scenes", "60"]);
    assert_ne!(a, std::fs::read(d.path().join("c.jsonl")).unwrap());

    let train = ["--quiet", "ground", "train", "--data", "a.jsonl", "--output", "m.bin", "--epochs", "2"];
    let loss = ok(&d, &train);
    assert!(loss.starts_with("LOSS="));
    let m1 = std::fs::read(d.path().join("m.bin")).unwrap();
    assert_eq!(loss, ok(&d, &train));
    assert_eq!(m1, std::fs::read(d.path().join("m.bin")).unwrap());

    let eval = ok(&d, &["ground", "eval", "--model", "m.bin", "--data", "c.jsonl"]);
    assert!(eval.starts_with("ACC=") && eval.ends_with("N=60\n"), "{eval}");
    let infer = ok(&d, &["ground", "infer", "--model", "m.bin", "--data", "c.jsonl"]);
    assert_eq!(infer.lines().count(), 60);
    assert!(infer.lines().all(|l| l.starts_with("SCENE=")));
}

#[test]
fn training_log_goes_to_stderr() {
    let d = setup();
    ok(&d, &["ground", "gen", "--output", "a.jsonl", "--num-scenes", "10"]);
    let o = sgk(d.path(), &["ground", "train", "--data", "a.jsonl", "--output", "m.bin", "--epochs", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let log = String::from_utf8_lossy(&o.stderr);
    assert_eq!(log.lines().filter(|l| l.starts_with("epoch ")).count(), 3);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn unknown_flags_and_missing_files() {
    let d = setup();
    assert_eq!(code(&d, &["eval", "wer", "--ref", "ref.txt", "--hyp", "ref.txt", "--frobnicate"]), Some(1));
    assert_eq!(code(&d, &["nonsense"]), Some(1));
    assert_eq!(code(&d, &[]), Some(1));
    assert_eq!(code(&d, &["eval", "wer", "--ref", "missing.txt", "--hyp", "ref.txt"]), Some(2));
    assert_eq!(code(&d, &["--help"]), Some(0));
}

#[test]
fn fuzz_corpus_always_classified() {
    let d = setup();
    let corpus = fuzz_corpus();
    assert_eq!(corpus.len(), 50);
    for c in corpus {
        write(d.path(), c.file, &c.bytes);
        let args: Vec<&str> = c.args.iter().map(|a| if *a == "@" { c.file } else { a }).collect();
        let o = sgk(d.path(), &args);
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert!(matches!(o.status.code(), Some(1..=3)), "{}: {:?} {stderr}", c.name, o.status);
        assert!(!stderr.contains("panicked"), "{}: {stderr}", c.name);
    }
}
