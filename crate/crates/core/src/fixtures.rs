use std::path::PathBuf;

use crate::factbase::{load_facts, ApiId, FactBase};

pub const ENC: ApiId = ApiId(1);
pub const FMT: ApiId = ApiId(2);
pub const EXTRACT: ApiId = ApiId(3);
pub const STD: ApiId = ApiId(4);
pub const ESCAPE: ApiId = ApiId(5);
pub const TRIM: ApiId = ApiId(6);
pub const BASE64: ApiId = ApiId(7);

pub fn dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn load(name: &str) -> FactBase {
    load_facts(dir(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn g1() -> FactBase {
    load("g1")
}

pub fn g2() -> FactBase {
    load("g2")
}

pub fn g3() -> FactBase {
    load("g3")
}

pub fn g4() -> FactBase {
    load("g4")
}

pub fn diamond() -> FactBase {
    load("diamond")
}

pub fn merge() -> FactBase {
    load("merge")
}
