//! Helpers for driving the compiled `lqcd` binary.

// Compiled once per test binary; not every binary uses every helper.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn lqcd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lqcd"))
}

pub fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn lqcd")
}

pub fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "expected exit {code}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Parses the last data row of a CSV file into its fields.
pub fn last_csv_row(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).expect("reading csv");
    let line = text.trim_end().lines().last().expect("empty csv");
    line.split(',').map(str::to_string).collect()
}
