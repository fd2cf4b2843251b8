use std::path::PathBuf;

use snum_core::fixtures::{diff, generate, FixtureFile, GROUPS};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(group: &str) -> FixtureFile {
    let path = fixture_dir().join(format!("{group}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    FixtureFile::from_json(&text).unwrap()
}

#[test]
fn every_group_is_committed_with_matching_hashes() {
    for g in GROUPS {
        let f = load(g);
        assert_eq!(f.group, g);
        assert!(!f.records.is_empty());
        assert!(f.hashes_match(), "{g}: transcript hash mismatch");
    }
}

#[test]
fn oracle_values_sit_on_the_brackets() {
    for g in GROUPS {
        for r in load(g).records {
            let tol = 1e-9 * r.upper.max(1.0);
            assert!(r.lower <= r.upper + tol, "{}", r.id);
            // each oracle value is attained by a witness, so it bounds the number from above
            assert!(r.lower <= r.value + tol, "{}: oracle {} below bracket [{}, {}]", r.id, r.value, r.lower, r.upper);
            assert!(r.value <= r.upper + 1e-6 * r.upper.max(1.0), "{}: oracle {} far above bracket", r.id, r.value);
        }
    }
}

#[test]
fn stored_operators_round_trip() {
    for g in GROUPS {
        for r in load(g).records {
            let t = r.operator.operator().unwrap();
            assert_eq!(t.matrix(), &r.operator.matrix);
        }
    }
}

#[test]
fn cheap_groups_regenerate_without_diff() {
    for g in ["oracle", "gamma"] {
        let fresh = generate(g, 0).unwrap();
        let d = diff(&load(g), &fresh);
        assert!(d.is_empty(), "{g}: {d:?}");
    }
}
