//! Replays the checked-in fuzz seeds through the parsers on stable.

use std::fs;
use std::path::PathBuf;

use caplab::config::RunConfig;
use caplab::grid::{GridFunction, RegionMask};
use caplab::nonlinearity::NonlinearitySpec;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds_load_and_round_trip() {
    for (path, text) in seeds("config_json") {
        let eff = RunConfig::from_json(&text)
            .and_then(|c| c.effective())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let back = RunConfig::from_json(&serde_json::to_string(&eff).unwrap()).unwrap();
        assert_eq!(back, eff, "{}", path.display());
    }
}

#[test]
fn mask_seeds_parse() {
    for (path, text) in seeds("mask_text") {
        let m = RegionMask::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(RegionMask::parse(&m.to_text()).unwrap(), m);
    }
}

#[test]
fn field_seeds_parse() {
    for (path, text) in seeds("field_text") {
        let f = GridFunction::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(f.values.len(), f.grid.len());
    }
}

#[test]
fn nonlinearity_seeds_build() {
    for (path, text) in seeds("nonlinearity_spec") {
        let parsed: NonlinearitySpec = serde_json::from_str(&text).unwrap();
        let f = parsed.build().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(f.eval(1.0).is_finite());
    }
}
