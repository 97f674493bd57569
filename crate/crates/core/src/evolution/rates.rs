use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::RefactoringAction;
use crate::calltree::TestId;
use crate::smells::{SmellId, TestFindings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmellRate {
    pub smell: SmellId,
    pub actions: usize,
    /// Symptomatic nodes summed over every version.
    pub symptoms: usize,
    /// `actions / symptoms`, zero when there were no symptoms.
    pub rate: f64,
    pub symptomatic_tests: usize,
    pub refactored_tests: usize,
    /// Share of ever-symptomatic tests with at least one action, in percent.
    pub percent_refactored: f64,
}

/// Per-smell refactoring rates over a history, `findings` in version order.
pub fn refactoring_rates(findings: &[TestFindings], actions: &[RefactoringAction]) -> Vec<SmellRate> {
    let mut symptoms = [0usize; 16];
    let mut symptomatic: BTreeMap<SmellId, BTreeSet<&TestId>> = BTreeMap::new();
    for version in findings {
        for (test, fs) in version {
            for f in fs {
                symptoms[f.smell.index()] += f.count;
                if f.count > 0 {
                    symptomatic.entry(f.smell).or_default().insert(test);
                }
            }
        }
    }
    let mut counts = [0usize; 16];
    let mut refactored: BTreeMap<SmellId, BTreeSet<&TestId>> = BTreeMap::new();
    for a in actions {
        counts[a.smell.index()] += 1;
        refactored.entry(a.smell).or_default().insert(&a.test);
    }
    SmellId::ALL
        .into_iter()
        .map(|s| {
            let ever = symptomatic.get(&s).map_or(0, BTreeSet::len);
            let fixed = refactored.get(&s).map_or(0, BTreeSet::len);
            let n = symptoms[s.index()];
            let a = counts[s.index()];
            SmellRate {
                smell: s,
                actions: a,
                symptoms: n,
                rate: if n == 0 { 0.0 } else { a as f64 / n as f64 },
                symptomatic_tests: ever,
                refactored_tests: fixed,
                percent_refactored: if ever == 0 { 0.0 } else { 100.0 * fixed as f64 / ever as f64 },
            }
        })
        .collect()
}
