use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic/config.toml")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_positionality")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_on_synthetic_fixture_then_rerun_is_cached() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let cfg = fixture_config();
    let cfg = cfg.to_str().unwrap();

    let first = cli(&["run", "--config", cfg, "--out", dir]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let svg = std::fs::read(out.path().join("portrait/portrait.svg")).unwrap();
    let metrics = std::fs::read(out.path().join("metrics/metrics.json")).unwrap();

    let second = cli(&["run", "--config", cfg, "--out", dir]);
    assert_eq!(second.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&second.stdout).contains("0 model requests"));

    let forced = cli(&["run", "--config", cfg, "--out", dir, "--force"]);
    assert_eq!(forced.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&forced.stdout).contains("0 model requests"));
    assert_eq!(std::fs::read(out.path().join("portrait/portrait.svg")).unwrap(), svg);
    assert_eq!(std::fs::read(out.path().join("metrics/metrics.json")).unwrap(), metrics);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["stages_completed"].as_array().unwrap().len(), 4);
}

#[test]
fn score_before_summarize_names_the_missing_artifact() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let cfg = fixture_config();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(cli(&["parse", "--config", cfg, "--out", dir]).status.code(), Some(0));
    let o = cli(&["score", "--config", cfg, "--out", dir]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("sample store not found"), "{}", stderr(&o));
}

#[test]
fn config_errors_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(
        &cfg,
        r#"
corpus = "missing.jsonl"
questions = "missing.txt"
target_section = "q1"

[demographics]
attributes = [{ name = "race", values = ["Black"] }]

[model]
provider = "mock"

[lexicons]

[embeddings]
static_vectors = "missing.vec"
"#,
    )
    .unwrap();
    let o = cli(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("missing.jsonl") && err.contains("missing.txt") && err.contains("missing.vec"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(cli(&["run", "--bogus"]).status.code(), Some(2));
}

#[test]
fn mock_provider_flag_needs_no_api_key() {
    let src = std::fs::read_to_string(fixture_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixture_config().parent().unwrap().canonicalize().unwrap();
    let text = src
        .replace("provider = \"mock\"", "provider = \"openai\"\nendpoint = \"http://127.0.0.1:9\"\napi_key_env = \"POSITIONALITY_TEST_UNSET_KEY\"")
        .replace("= \"corpus.jsonl\"", &format!("= {:?}", fixture.join("corpus.jsonl")))
        .replace("= \"questions.json\"", &format!("= {:?}", fixture.join("questions.json")))
        .replace("= \"lexicon.dic\"", &format!("= {:?}", fixture.join("lexicon.dic")))
        .replace("= \"vad.tsv\"", &format!("= {:?}", fixture.join("vad.tsv")))
        .replace("= \"vectors.txt\"", &format!("= {:?}", fixture.join("vectors.txt")));
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("run");
    let args = ["parse", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = cli(&args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let mut with_mock = args.to_vec();
    with_mock.push("--mock-provider");
    let o = cli(&with_mock);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
