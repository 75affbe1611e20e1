#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use factgraph::agents::{Fixtures, SymbolicBackend};
use factgraph::pipeline::{PipelineConfig, Verifier};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    let p = fixture_dir().join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn school_claim() -> String {
    read_fixture("school/claim.txt").trim().to_string()
}

pub fn school_evidence() -> String {
    read_fixture("school/evidence.txt")
}

pub fn school_fixtures() -> Fixtures {
    Fixtures::load(&fixture_dir().join("school/fixtures.json")).unwrap()
}

pub fn school_verifier(config: PipelineConfig) -> Verifier {
    Verifier::new(
        config,
        Arc::new(SymbolicBackend::new(school_fixtures())),
        None,
    )
    .unwrap()
}

/// Compare `actual` with a checked-in golden file. Set `FACTGRAPH_BLESS=1` to
/// rewrite goldens.
pub fn assert_golden(rel: &str, actual: &str) {
    let path = fixture_dir().join(rel);
    if std::env::var_os("FACTGRAPH_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!(
            "{}: {e} (run with FACTGRAPH_BLESS=1 to create)",
            path.display()
        )
    });
    if expected != actual {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map(|i| i + 1)
            .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()) + 1);
        panic!("{} differs from golden at line {line}", path.display());
    }
}

pub mod gen;
pub mod sim;
