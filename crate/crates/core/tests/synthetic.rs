//! The committed synthetic fixture and an end-to-end audit over it.
//!
//! Set `UPDATE_FIXTURES=1` to rewrite the fixture files.

use std::path::{Path, PathBuf};

use positionality::artifacts::RowKind;
use positionality::config::RunConfig;
use positionality::pipeline::{Pipeline, RunOptions};
use positionality::portrait::{ThemeDirection, TileState};
use positionality::synthetic::{self, DROP_GROUP, DROP_THEME, INFLATE_CATEGORY, INFLATE_GROUP};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

#[test]
fn committed_fixture_matches_generator() {
    let dir = fixture_dir();
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        synthetic::write_fixture(&dir).unwrap();
    }
    for (name, contents) in synthetic::fixture_files() {
        let on_disk = std::fs::read_to_string(dir.join(name)).unwrap_or_default();
        assert!(on_disk == contents, "{name} is stale; rerun with UPDATE_FIXTURES=1");
    }
}

#[test]
fn audit_flags_only_the_planted_cells() {
    let out = tempfile::tempdir().unwrap();
    let mut config = RunConfig::load(&fixture_dir().join("config.toml")).unwrap();
    config.output_dir = out.path().to_path_buf();
    let pipeline = Pipeline::new(config, RunOptions::default()).unwrap();
    pipeline.cmd_run().unwrap();
    let portrait = pipeline.cmd_portrait().unwrap();

    for (r, row) in portrait.rows.iter().enumerate() {
        for (c, group) in portrait.columns.iter().enumerate() {
            let tile = &portrait.tiles[r][c];
            let planted_psych = row.kind == RowKind::Psych && row.attribute == INFLATE_CATEGORY && group == INFLATE_GROUP;
            let planted_theme = row.kind == RowKind::Theme && row.attribute == DROP_THEME && group == DROP_GROUP;
            match tile {
                TileState::Wins { level, .. } => {
                    let expected = if planted_psych { 3 } else { 0 };
                    assert_eq!(*level, expected, "{:?} {} / {group}", row.kind, row.attribute);
                }
                TileState::Theme { direction, .. } => {
                    let expected = if planted_theme { ThemeDirection::Decrease } else { ThemeDirection::None };
                    assert_eq!(*direction, expected, "{} / {group}", row.attribute);
                }
                TileState::InsufficientData => {
                    assert!(!planted_psych && !planted_theme, "{} / {group} has no data", row.attribute);
                }
            }
        }
    }
}
