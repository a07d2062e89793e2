#![allow(dead_code)]

pub mod gradcheck;

use std::path::PathBuf;

/// Fresh scratch directory that is removed when dropped.
pub fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_speechcmd"))
}
