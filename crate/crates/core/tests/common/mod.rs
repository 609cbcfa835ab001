#![allow(dead_code)]

use std::path::PathBuf;

use fmbench_core::Scenario;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(file: &str) -> Scenario {
    Scenario::load(&repo_root().join("scenarios").join(file)).unwrap()
}
