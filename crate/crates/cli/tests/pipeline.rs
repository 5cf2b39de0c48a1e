//! End-to-end runs of the `legal-lm` binary on a generated toy corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const CLASSES: [(&str, &str); 3] = [
    ("CO", "le salarié a été licencié sans cause réelle et sérieuse"),
    ("C1_Section1", "le contrat de vente est nul pour vice du consentement"),
    ("C2_Section1", "la procédure de saisie immobilière est irrégulière"),
];

fn sentence(class: usize, i: usize) -> String {
    let fillers = ["en statuant ainsi", "qu'en se déterminant ainsi", "alors en outre", "de sorte que"];
    format!(
        "ALORS QUE {} ; {} la cour d'appel a violé l'article {} du code",
        CLASSES[class].1,
        fillers[i % fillers.len()],
        1000 + (i * 37) % 400
    )
}

/// 3 chamber classes of 30 documents each. Subjects: three frequent ones
/// plus two with a single document.
fn write_corpus(path: &Path) {
    let mut lines = Vec::new();
    for i in 0..90 {
        let class = i % 3;
        let matiere = match i {
            0 => "rare_a".to_string(),
            1 => "rare_b".to_string(),
            _ => format!("subject_{}", i % 3),
        };
        let text = format!("Faits et procédure.\n\n{}\n\nPAR CES MOTIFS, cassation.", sentence(class, i));
        lines.push(
            json!({"doc_id": format!("doc{i:03}"), "text": text, "chamber_label": CLASSES[class].0, "matiere_label": matiere})
                .to_string(),
        );
    }
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn toy_config(dir: &Path) -> PathBuf {
    let cfg = format!(
        r#"seed = 5
task = "chambers"

[paths]
corpus = "{corpus}"
output_dir = "{out}"

[tokenizer]
vocab_size = 400
min_frequency = 2
max_sequence_length = 64

[model]
profile = "custom"
num_layers = 1
hidden_size = 16
num_heads = 2
max_positions = 64

[pretrain]
total_steps = 12
batch_size = 4
learning_rate = 1e-3
warmup_steps = 2
sequence_length = 32
checkpoint_every = 4

[finetune]
learning_rate = 1e-3
batch_size = 8
max_epochs = 3
patience = 2
warmup_steps = 5
max_sequence_length = 64

[gridsearch]
rates = [2e-5, 3e-5, 4e-5, 5e-5]
"#,
        corpus = dir.join("corpus.jsonl").display(),
        out = dir.join("out").display()
    );
    let path = dir.join("config.toml");
    fs::write(&path, cfg).unwrap();
    write_corpus(&dir.join("corpus.jsonl"));
    path
}

fn cli(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legal-lm"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

#[track_caller]
fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn full_pipeline(config: &Path) {
    ok(cli(config, &["prepare"]));
    ok(cli(config, &["train-tokenizer"]));
    ok(cli(config, &["pretrain"]));
    ok(cli(config, &["finetune"]));
    ok(cli(config, &["gridsearch"]));
    ok(cli(config, &["evaluate"]));
}

#[test]
fn pipeline_runs_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, cb) = (toy_config(a.path()), toy_config(b.path()));
    full_pipeline(&ca);
    full_pipeline(&cb);

    let (ra, rb) = (a.path().join("out"), b.path().join("out"));
    let files = files_under(&ra);
    assert_eq!(files, files_under(&rb));
    for f in &files {
        assert_eq!(fs::read(ra.join(f)).unwrap(), fs::read(rb.join(f)).unwrap(), "{} differs", f.display());
    }
    for expected in [
        "prepared/train.jsonl",
        "prepared/dev.jsonl",
        "prepared/test.jsonl",
        "prepared/manifest.json",
        "tokenizer/vocab.json",
        "tokenizer/merges.txt",
        "pretrain/final.ckpt",
        "pretrain/history.csv",
        "finetune/best.ckpt",
        "gridsearch/results_table.csv",
        "evaluate/report.json",
        "evaluate/confusion.csv",
        "evaluate/figures/confusion.svg",
    ] {
        assert!(files.contains(&PathBuf::from(expected)), "missing {expected}");
    }

    let history = fs::read_to_string(ra.join("pretrain/history.csv")).unwrap();
    let steps: Vec<u64> = history.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(steps, (1..=12).collect::<Vec<_>>());

    let results: Value = serde_json::from_str(&fs::read_to_string(ra.join("gridsearch/results.json")).unwrap()).unwrap();
    assert_eq!(results["runs"].as_array().unwrap().len(), 4);
    let table = fs::read_to_string(ra.join("gridsearch/results_table.csv")).unwrap();
    assert!(table.starts_with("model,lrate,dev,test\nCustom,"));
    let confusion = fs::read_to_string(ra.join("evaluate/confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 1 + 9);
}

#[test]
fn prepare_missing_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    let out = cli(&cfg, &["--corpus", "/no/such/corpus.jsonl", "prepare"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/no/such/corpus.jsonl"));
}

#[test]
fn prepare_drops_rare_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    ok(cli(&cfg, &["--task", "matieres", "prepare"]));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/prepared/manifest.json")).unwrap()).unwrap();
    let classes: Vec<&str> = manifest["classes"]["names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(classes, vec!["subject_0", "subject_1", "subject_2"]);
    assert_eq!(manifest["dropped_classes"].as_array().unwrap().len(), 2);
}

#[test]
fn prepare_without_usable_documents_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    fs::write(
        dir.path().join("corpus.jsonl"),
        json!({"doc_id": "x", "text": "aucun moyen", "chamber_label": "CO"}).to_string() + "\n",
    )
    .unwrap();
    assert_eq!(cli(&cfg, &["prepare"]).status.code(), Some(3));
}

#[test]
fn tokenizer_is_capped_deterministic_and_logs_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    ok(cli(&cfg, &["prepare"]));
    let out = ok(cli(&cfg, &["train-tokenizer"]));
    let size: usize = stdout(&out)
        .split_whitespace()
        .nth(2)
        .unwrap()
        .trim_end_matches(',')
        .parse()
        .unwrap();
    assert!(size <= 400 && size > 261, "{}", stdout(&out));
    let tok = dir.path().join("out/tokenizer");
    let first = (fs::read(tok.join("vocab.json")).unwrap(), fs::read(tok.join("merges.txt")).unwrap());
    ok(cli(&cfg, &["train-tokenizer"]));
    assert_eq!(first, (fs::read(tok.join("vocab.json")).unwrap(), fs::read(tok.join("merges.txt")).unwrap()));

    // Built-in defaults, no config file.
    let out = Command::new(env!("CARGO_BIN_EXE_legal-lm"))
        .args(["--output-dir"])
        .arg(dir.path().join("out"))
        .arg("train-tokenizer")
        .env_remove("RUST_LOG")
        .output()
        .unwrap();
    let log = stderr(&ok(out));
    assert!(log.contains("vocab_size = 32000") && log.contains("min_frequency = 2"), "{log}");
}

#[test]
fn pretrain_resume_matches_uninterrupted_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let cfg = toy_config(d);
        ok(cli(&cfg, &["prepare"]));
        ok(cli(&cfg, &["train-tokenizer"]));
        ok(cli(&cfg, &["pretrain"]));
    }
    // Pretend b stopped right after the step-4 checkpoint.
    let pb = b.path().join("out/pretrain");
    for f in ["checkpoint-00000008.ckpt", "checkpoint-00000012.ckpt", "final.ckpt"] {
        fs::remove_file(pb.join(f)).unwrap();
    }
    let history = fs::read_to_string(pb.join("history.csv")).unwrap();
    let cut: Vec<&str> = history.lines().take(1 + 4).collect();
    fs::write(pb.join("history.csv"), cut.join("\n") + "\n").unwrap();

    let out = ok(cli(&toy_config(b.path()), &["pretrain", "--resume"]));
    assert!(stderr(&out).contains("resuming from"));
    let pa = a.path().join("out/pretrain");
    for f in ["history.csv", "final.ckpt", "checkpoint-00000012.ckpt"] {
        assert_eq!(fs::read(pa.join(f)).unwrap(), fs::read(pb.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_mismatches_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    ok(cli(&cfg, &["prepare"]));
    ok(cli(&cfg, &["train-tokenizer"]));
    ok(cli(&cfg, &["pretrain", "--total-steps", "4"]));
    let init = dir.path().join("out/pretrain/final.ckpt");

    // Same checkpoint, different shape.
    let other = dir.path().join("other.toml");
    let text = fs::read_to_string(&cfg).unwrap().replace("hidden_size = 16", "hidden_size = 8");
    fs::write(&other, text).unwrap();
    // A fresh output dir has no tokenizer yet.
    let out = cli(&other, &["--output-dir", dir.path().join("o2").to_str().unwrap(), "pretrain", "--init-checkpoint", init.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    // Copy the inputs over so only the checkpoint is at fault.
    let o2 = dir.path().join("o2");
    fs::create_dir_all(o2.join("tokenizer")).unwrap();
    for f in ["vocab.json", "merges.txt"] {
        fs::copy(dir.path().join("out/tokenizer").join(f), o2.join("tokenizer").join(f)).unwrap();
    }
    fs::create_dir_all(o2.join("prepared")).unwrap();
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"] {
        fs::copy(dir.path().join("out/prepared").join(f), o2.join("prepared").join(f)).unwrap();
    }
    let out = cli(&other, &["--output-dir", o2.to_str().unwrap(), "pretrain", "--init-checkpoint", init.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    // Declared vocabulary disagrees with the tokenizer.
    let text = fs::read_to_string(&cfg).unwrap().replace("max_positions = 64", "max_positions = 64\nvocab_size = 12345");
    fs::write(&other, text).unwrap();
    assert_eq!(cli(&other, &["pretrain"]).status.code(), Some(4));
}

#[test]
fn finetune_plateau_stops_early_and_evaluate_scores_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    ok(cli(&cfg, &["prepare"]));
    ok(cli(&cfg, &["train-tokenizer"]));
    ok(cli(&cfg, &["pretrain", "--total-steps", "4"]));
    // A zero learning rate leaves dev accuracy flat: best at epoch 1, stop
    // after epoch 3.
    let text = fs::read_to_string(&cfg).unwrap().replace("max_epochs = 3", "max_epochs = 10");
    fs::write(&cfg, text).unwrap();
    let out = ok(cli(&cfg, &["finetune", "--learning-rate", "0"]));
    assert!(stderr(&out).contains("early stop after epoch 3"), "{}", stderr(&out));
    assert!(stdout(&out).contains("at epoch 1"));

    // Predictions equal to the labels score 1.0.
    let test = fs::read_to_string(dir.path().join("out/prepared/test.jsonl")).unwrap();
    let mut dump = String::from("doc_id,true_label,predicted_label\n");
    for line in test.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        dump += &format!("{},{},{}\n", v["doc_id"].as_str().unwrap(), v["label"].as_str().unwrap(), v["label"].as_str().unwrap());
    }
    let path = dir.path().join("dump.csv");
    fs::write(&path, dump).unwrap();
    let out = ok(cli(&cfg, &["evaluate", "--predictions", path.to_str().unwrap()]));
    assert!(stdout(&out).starts_with("accuracy 1.0000"), "{}", stdout(&out));
}

#[test]
fn missing_inputs_exit_2_across_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path());
    for cmd in ["train-tokenizer", "pretrain", "finetune", "gridsearch", "evaluate"] {
        let out = cli(&cfg, &[cmd]);
        assert_eq!(out.status.code(), Some(2), "{cmd}: {}", stderr(&out));
    }
}
