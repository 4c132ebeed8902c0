//! The CSV tables for the default device profile are committed under
//! `tests/golden` and pinned byte for byte; consumers parse them, so schema
//! or value drift must be a deliberate, visible change.
//!
//! After an intentional model change run
//! `cargo test -p lqcd-cli --test golden_csv -- --ignored regenerate`
//! and commit the rewritten files.

use std::path::PathBuf;

use lqcd_core::perf::{self, Profile};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn render_all() -> Vec<(&'static str, String)> {
    let profile = Profile::default_u250();
    vec![
        ("fig2.csv", perf::fig2_csv(&profile).unwrap()),
        ("fig3.csv", perf::fig3_csv(&profile).unwrap()),
        ("fig4.csv", perf::fig4_csv(&profile).unwrap()),
        ("fig5.csv", perf::fig5_csv(&profile).unwrap()),
        ("anchors.csv", perf::anchors_csv(&profile).unwrap()),
    ]
}

#[test]
#[ignore = "rewrites the committed golden files"]
fn regenerate() {
    let dir = golden_dir();
    std::fs::create_dir_all(&dir).unwrap();
    for (name, text) in render_all() {
        std::fs::write(dir.join(name), text).unwrap();
    }
}

#[test]
fn golden_csvs_are_reproduced() {
    for (name, text) in render_all() {
        let committed = std::fs::read_to_string(golden_dir().join(name))
            .unwrap_or_else(|e| panic!("missing golden {name}: {e}"));
        assert_eq!(text, committed, "{name} drifted from the committed table");
    }
}

#[test]
fn shipped_profile_equals_builtin_default() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("profiles/u250.toml");
    let shipped = Profile::load(&path).unwrap();
    assert_eq!(shipped, Profile::default_u250());
}
