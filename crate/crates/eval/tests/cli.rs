use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn si_eval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_si-eval")).args(args).output().unwrap()
}

/// Two labelled groups with distinct vocabularies plus matching 4-d vectors.
fn write_inputs(dir: &Path) -> (String, String) {
    let mut corpus = String::new();
    let mut glove = String::new();
    for (label, words) in [
        ("alpha", ["apple", "banana", "cherry", "grape"]),
        ("beta", ["engine", "piston", "gear", "brake"]),
    ] {
        for i in 0..12 {
            let text = format!(
                "{} {} shared words {}",
                words[i % 4],
                words[(i + 1) % 4],
                words[(i * 3) % 4]
            );
            writeln!(corpus, r#"{{"id":"{label}{i}","text":"{text}","label":"{label}"}}"#).unwrap();
        }
        for (j, w) in words.iter().enumerate() {
            let base = if label == "alpha" { 0.0 } else { 1.0 };
            writeln!(glove, "{w} {base} {} 0.5 {}", j as f64 * 0.1, 1.0 - base).unwrap();
        }
    }
    glove.push_str("shared 0.5 0.5 0.5 0.5\nwords 0.2 0.4 0.6 0.8\n");
    let (c, g) = (dir.join("corpus.jsonl"), dir.join("glove.txt"));
    std::fs::write(&c, corpus).unwrap();
    std::fs::write(&g, glove).unwrap();
    (c.display().to_string(), g.display().to_string())
}

fn common_args<'a>(corpus: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "--corpus",
        corpus,
        "--task",
        "alpha,beta",
        "--iters",
        "2",
        "--per-class",
        "2",
        "--runs",
        "2",
        "--folds",
        "3",
        "--dims",
        "4",
        "--out",
        out,
    ]
}

#[test]
fn writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, glove) = write_inputs(dir.path());
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    let mut args = common_args(&corpus, &out_s);
    args.extend(["--features", "both", "--glove", &glove, "--layouts"]);
    let result = si_eval(&args);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));

    let traces = std::fs::read_to_string(out.join("traces.csv")).unwrap();
    assert_eq!(traces.lines().count(), 1 + 2 * 2 * 2);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "task,mode,final_mean,final_std,overall_mean,overall_std");
    assert!(rows[1].starts_with("alpha_vs_beta,keyword,"));
    assert!(rows[2].starts_with("alpha_vs_beta,embedding,"));
    assert!(out.join("layouts_keyword.csv").exists());

    // Same seed, same bytes.
    let again = dir.path().join("again");
    let again_s = again.display().to_string();
    let mut args = common_args(&corpus, &again_s);
    args.extend(["--features", "both", "--glove", &glove]);
    assert!(si_eval(&args).status.success());
    assert_eq!(traces, std::fs::read_to_string(again.join("traces.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = write_inputs(dir.path());
    let out = dir.path().join("out").display().to_string();

    let cases: Vec<Vec<&str>> = vec![
        // Embedding features without vectors.
        vec!["--features", "embedding"],
        // Unknown preset.
        vec!["--features", "keyword", "--task", "nope"],
        // Label missing from the corpus.
        vec!["--features", "keyword", "--task", "alpha,gamma"],
        // More documents requested than a class holds.
        vec!["--features", "keyword", "--iters", "7"],
        // Unknown feature mode, rejected by argument parsing.
        vec!["--features", "bag"],
    ];
    for extra in cases {
        let mut args = common_args(&corpus, &out);
        args.extend(extra.iter().copied());
        let result = si_eval(&args);
        assert_eq!(
            result.status.code(),
            Some(2),
            "{extra:?}: {}",
            String::from_utf8_lossy(&result.stderr)
        );
    }
    let result = si_eval(&[
        "--corpus",
        "/nonexistent.jsonl",
        "--task",
        "rec",
        "--features",
        "keyword",
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("nonexistent"));
}
