#![allow(dead_code)]

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hound::{SampleFormat, WavSpec, WavWriter};
use sgk_core::grounding::{generate_scenes, write_scenes, GeneratorConfig};

pub fn sgk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to start sgk")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

pub fn wav_bytes(channels: u16, rate: u32, bits: u16, float: bool, frames: usize) -> Vec<u8> {
    let spec = WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: bits,
        sample_format: if float { SampleFormat::Float } else { SampleFormat::Int },
    };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = WavWriter::new(&mut buf, spec).unwrap();
        for n in 0..frames * channels as usize {
            let x = (n as f64 * 0.0575).sin() * 0.4;
            match (float, bits) {
                (true, _) => w.write_sample(x as f32).unwrap(),
                (false, 8) => w.write_sample((x * 127.0) as i8).unwrap(),
                (false, 16) => w.write_sample((x * 32767.0) as i16).unwrap(),
                (false, _) => w.write_sample((x * 8_388_607.0) as i32).unwrap(),
            }
        }
        w.finalize().unwrap();
    }
    buf.into_inner()
}

/// Valid companion files that malformed inputs are paired with.
pub fn write_fixtures(dir: &Path) {
    write(dir, "vocab.txt", "<blank>\na\nb\n");
    let row = format!("{} {} {}", (0.2f64).ln(), (0.5f64).ln(), (0.3f64).ln());
    write(dir, "post.txt", format!("3 3\n{row}\n{row}\n{row}\n"));
    write(dir, "labels.txt", "a b\n");
    write(dir, "lm.txt", "a\t2\nb\t1\n</s>\t1\na b\t1\n");
    write(dir, "text.txt", "a b\n");
    write(dir, "ref.txt", "a b\nb\n");
    write(dir, "feat.txt", "4 1\n1\n2\n3\n5\n");
    write(dir, "ints.txt", "0\n1\n0\n1\n");
    write(dir, "scenes.jsonl", scene_line(|_| {}) + "\n");
    write(dir, "tone.wav", wav_bytes(1, 16000, 16, false, 4000));
}

/// One valid generated scene as a JSON line, optionally edited.
pub fn scene_line(edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let cfg = GeneratorConfig {
        num_scenes: 1,
        ..Default::default()
    };
    let mut out = Vec::new();
    write_scenes(&generate_scenes(&cfg).unwrap(), &mut out).unwrap();
    let mut v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    edit(&mut v);
    v.to_string()
}

pub struct FuzzCase {
    pub name: &'static str,
    pub file: &'static str,
    pub bytes: Vec<u8>,
    pub args: Vec<&'static str>,
}

fn case(name: &'static str, file: &'static str, bytes: impl Into<Vec<u8>>, args: &[&'static str]) -> FuzzCase {
    FuzzCase {
        name,
        file,
        bytes: bytes.into(),
        args: args.to_vec(),
    }
}

fn garbage(seed: u64, len: usize) -> Vec<u8> {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    (0..len)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 24) as u8
        })
        .collect()
}

/// Fifty malformed inputs, each with the command that consumes it. `@` in
/// the arguments stands for the malformed file.
pub fn fuzz_corpus() -> Vec<FuzzCase> {
    let post = ["ctc", "loss", "--posteriors", "@", "--vocab", "vocab.txt", "--labels", "labels.txt"];
    let decode = ["ctc", "decode", "--posteriors", "@", "--vocab", "vocab.txt", "--mode", "time-sync"];
    let vocab = ["ctc", "loss", "--posteriors", "post.txt", "--vocab", "@", "--labels", "labels.txt"];
    let labels = ["ctc", "prefix", "--posteriors", "post.txt", "--vocab", "vocab.txt", "--labels", "@"];
    let lm = [
        "ctc", "decode", "--posteriors", "post.txt", "--vocab", "vocab.txt", "--mode", "label-sync", "--lm", "@",
        "--lm-scale", "0.5",
    ];
    let wav = ["featurize", "--input", "@", "--output", "out.txt"];
    let feat = ["analyze", "cca", "--x", "@", "--y", "feat.txt"];
    let mi = ["analyze", "mi", "--features", "feat.txt", "--labels", "@", "--k", "2"];
    let ssl = ["analyze", "ssl-losses", "--input", "@"];
    let train = ["ground", "train", "--data", "@", "--output", "model.bin", "--epochs", "1"];
    let ckpt = ["ground", "eval", "--model", "@", "--data", "scenes.jsonl"];
    let wer = ["eval", "wer", "--ref", "ref.txt", "--hyp", "@"];
    let ppl = ["eval", "ppl", "--lm", "@", "--vocab", "vocab.txt", "--text", "text.txt"];

    let mut ckpt_trunc = b"A3VG".to_vec();
    ckpt_trunc.extend_from_slice(&1u32.to_le_bytes());
    ckpt_trunc.extend_from_slice(&6u32.to_le_bytes());
    let mut ckpt_version = b"A3VG".to_vec();
    ckpt_version.extend_from_slice(&99u32.to_le_bytes());
    let mut wav_trunc = wav_bytes(1, 16000, 16, false, 100);
    wav_trunc.truncate(30);
    let mut feat_bin = b"FTRX".to_vec();
    feat_bin.extend_from_slice(&4u32.to_le_bytes());
    feat_bin.extend_from_slice(&1u32.to_le_bytes());
    feat_bin.extend_from_slice(&[0u8; 12]);

    vec![
        case("posteriors empty", "p", "", &post),
        case("posteriors bad header", "p", "three 3\n", &post),
        case("posteriors extra header field", "p", "1 3 9\n0 0 0\n", &post),
        case("posteriors negative count", "p", "-1 3\n", &post),
        case("posteriors unnormalized row", "p", "1 3\n-0.1 -0.1 -0.1\n", &post),
        case("posteriors nan", "p", "1 3\nNaN -1 -1\n", &post),
        case("posteriors positive inf", "p", "1 3\ninf 0 0\n", &post),
        case("posteriors missing rows", "p", "5 3\n-1.0986122886681098 -1.0986122886681098 -1.0986122886681098\n", &post),
        case("posteriors short row", "p", "1 3\n-0.6931471805599453 -0.6931471805599453\n", &post),
        case("posteriors trailing content", "p", "1 3\n0 -inf -inf\nextra\n", &post),
        case("posteriors huge header", "p", "18446744073709551615 3\n", &post),
        case("posteriors width mismatch", "p", "1 2\n-0.6931471805599453 -0.6931471805599453\n", &decode),
        case("posteriors binary garbage", "p", garbage(1, 300), &decode),
        case("vocab missing blank", "v", "a\nb\n", &vocab),
        case("vocab empty", "v", "", &vocab),
        case("vocab duplicate", "v", "<blank>\na\na\n", &vocab),
        case("vocab not utf8", "v", vec![0xff, 0xfe, 0x00, 0x41], &vocab),
        case("labels unknown token", "l", "a z\n", &labels),
        case("labels blank token", "l", "<blank>\n", &labels),
        case("lm missing tab", "m", "a 3\n", &lm),
        case("lm bad count", "m", "a\tmany\n", &lm),
        case("lm negative count", "m", "a\t-2\n", &lm),
        case("lm trigram", "m", "a b a\t1\n", &lm),
        case("lm unknown token", "m", "q\t1\n", &lm),
        case("wav empty", "w.wav", "", &wav),
        case("wav truncated", "w.wav", wav_trunc, &wav),
        case("wav stereo", "w.wav", wav_bytes(2, 16000, 16, false, 1000), &wav),
        case("wav 8 bit", "w.wav", wav_bytes(1, 16000, 8, false, 1000), &wav),
        case("wav float", "w.wav", wav_bytes(1, 16000, 32, true, 1000), &wav),
        case("wav 8 kHz", "w.wav", wav_bytes(1, 8000, 16, false, 1000), &wav),
        case("wav random bytes", "w.wav", garbage(2, 512), &wav),
        case("wav no samples", "w.wav", wav_bytes(1, 16000, 16, false, 0), &wav),
        case("features ragged", "f", "2 2\n1 2\n3\n", &feat),
        case("features binary short", "f", feat_bin, &feat),
        case("features nan", "f", "4 1\n1\nnan\n2\n3\n", &feat),
        case("features row mismatch", "f", "2 1\n1\n2\n", &feat),
        case("mi labels not integers", "i", "0\nx\n1\n0\n", &mi),
        case("mi label count mismatch", "i", "0\n1\n", &mi),
        case("ssl malformed json", "s.json", "{\"context\": [1, 0", &ssl),
        case("ssl zero norm", "s.json", r#"{"context":[0,0],"target":[1,0],"temperature":1,"usage":[[0.5,0.5]]}"#, &ssl),
        case("ssl zero temperature", "s.json", r#"{"context":[1,0],"target":[1,0],"temperature":0,"usage":[[0.5,0.5]]}"#, &ssl),
        case("ssl usage not normalized", "s.json", r#"{"context":[1,0],"target":[1,0],"temperature":1,"usage":[[0.5,0.6]]}"#, &ssl),
        case("scenes malformed json", "d.jsonl", scene_line(|_| {}) + "\n{\"objects\": [\n", &train),
        case("scenes bad target index", "d.jsonl", scene_line(|v| v["utterance"]["target_index"] = 99.into()), &train),
        case("scenes unknown class", "d.jsonl", scene_line(|v| v["objects"][0]["class_id"] = 99.into()), &train),
        case("checkpoint truncated", "c.bin", ckpt_trunc, &ckpt),
        case("checkpoint version", "c.bin", ckpt_version, &ckpt),
        case("checkpoint garbage", "c.bin", garbage(3, 200), &ckpt),
        case("wer line mismatch", "h", "a b\n", &wer),
        case("ppl lm garbage", "m", garbage(4, 64), &ppl),
    ]
}
