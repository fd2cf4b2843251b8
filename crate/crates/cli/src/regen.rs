//! Fixture regeneration.

use std::path::Path;

use globset::Glob;
use snum_core::fixtures::{self, FixtureDelta, FixtureFile};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct GroupOutcome {
    pub group: String,
    pub records: usize,
    /// `None` when no previous file existed or it could not be read.
    pub deltas: Option<Vec<FixtureDelta>>,
}

#[derive(Debug, Clone, Default)]
pub struct RegenReport {
    pub outcomes: Vec<GroupOutcome>,
    /// Groups whose recomputation failed, with the error.
    pub failures: Vec<(String, String)>,
}

impl RegenReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            3
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.outcomes.is_empty() && self.failures.is_empty() {
            out.push_str("no fixture groups match\n");
        }
        for o in &self.outcomes {
            match &o.deltas {
                None => out.push_str(&format!("{}: {} records written (new file)\n", o.group, o.records)),
                Some(d) if d.is_empty() => out.push_str(&format!("{}: {} records, no changes\n", o.group, o.records)),
                Some(d) => {
                    out.push_str(&format!("{}: {} records, {} changed fields\n", o.group, o.records, d.len()));
                    for x in d {
                        out.push_str(&format!("  {} {}: {} -> {}\n", x.id, x.field, x.old, x.new));
                    }
                }
            }
        }
        for (g, e) in &self.failures {
            out.push_str(&format!("{g}: failed: {e}\n"));
        }
        out
    }
}

/// Groups whose name matches `filter` (all groups without a filter).
pub fn matching_groups(filter: Option<&str>) -> Result<Vec<&'static str>, CliError> {
    let Some(f) = filter else {
        return Ok(fixtures::GROUPS.to_vec());
    };
    let m = Glob::new(f).map_err(|e| CliError::validation("filter", e.to_string()))?.compile_matcher();
    Ok(fixtures::GROUPS.iter().copied().filter(|g| m.is_match(g)).collect())
}

/// Recomputes the matching groups, rewrites their files in `dir` and
/// reports the differences to the previous contents.
pub fn regen(dir: &Path, filter: Option<&str>, seed: u64) -> Result<RegenReport, CliError> {
    let groups = matching_groups(filter)?;
    let mut report = RegenReport::default();
    if groups.is_empty() {
        return Ok(report);
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for g in groups {
        let fresh = match fixtures::generate(g, seed) {
            Ok(f) => f,
            Err(e) => {
                report.failures.push((g.to_string(), e.to_string()));
                continue;
            }
        };
        let path = dir.join(format!("{g}.json"));
        let deltas = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| FixtureFile::from_json(&t).ok())
            .map(|old| fixtures::diff(&old, &fresh));
        std::fs::write(&path, fresh.to_json()).map_err(|e| CliError::io(&path, e))?;
        report.outcomes.push(GroupOutcome { group: g.to_string(), records: fresh.records.len(), deltas });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_select_groups() {
        assert_eq!(matching_groups(Some("injection*")).unwrap(), vec!["injection"]);
        assert_eq!(matching_groups(Some("t?u")).unwrap(), vec!["tau"]);
        assert!(matching_groups(Some("nothing*")).unwrap().is_empty());
        assert_eq!(matching_groups(None).unwrap().len(), fixtures::GROUPS.len());
        assert!(matches!(matching_groups(Some("[")), Err(CliError::Validation { .. })));
    }

    #[test]
    fn empty_selection_touches_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let r = regen(dir.path(), Some("zzz*"), 0).unwrap();
        assert!(r.outcomes.is_empty());
        assert_eq!(r.exit_code(), 0);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        assert_eq!(r.render(), "no fixture groups match\n");
    }
}
