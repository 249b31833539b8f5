//! Agreement between the refactoring a detector found in the code and the one
//! the commit message documents.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::corpus::{Dataset, RefactoringType};
use crate::error::{Error, Result};
use crate::pipeline::predict_message;

/// Examples kept per case in a report.
pub const MAX_EXAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InconsistencyCase {
    Consistent,
    /// Code was refactored but the message documents nothing.
    DocMissing,
    /// The message documents a refactoring the code does not contain.
    CodeMissing,
    /// Both sides name a refactoring, but different ones.
    TypeMismatch,
}

impl InconsistencyCase {
    pub const ALL: [InconsistencyCase; 4] = [
        InconsistencyCase::Consistent,
        InconsistencyCase::DocMissing,
        InconsistencyCase::CodeMissing,
        InconsistencyCase::TypeMismatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InconsistencyCase::Consistent => "Consistent",
            InconsistencyCase::DocMissing => "DocMissing",
            InconsistencyCase::CodeMissing => "CodeMissing",
            InconsistencyCase::TypeMismatch => "TypeMismatch",
        }
    }
}

impl fmt::Display for InconsistencyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_pair(detector: RefactoringType, predicted: RefactoringType) -> InconsistencyCase {
    use RefactoringType::None;
    match (detector, predicted) {
        (d, p) if d == p => InconsistencyCase::Consistent,
        (_, None) => InconsistencyCase::DocMissing,
        (None, _) => InconsistencyCase::CodeMissing,
        _ => InconsistencyCase::TypeMismatch,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub count: usize,
    pub percent: f64,
    /// Up to [`MAX_EXAMPLES`] record ids, in dataset order.
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub total: usize,
    pub cases: BTreeMap<InconsistencyCase, CaseSummary>,
}

impl InconsistencyReport {
    /// Builds counts and percentages from (record id, case) pairs.
    pub fn from_cases(cases: &[(String, InconsistencyCase)]) -> Self {
        let total = cases.len();
        let mut out: BTreeMap<InconsistencyCase, CaseSummary> = InconsistencyCase::ALL
            .into_iter()
            .map(|c| {
                (
                    c,
                    CaseSummary {
                        count: 0,
                        percent: 0.0,
                        examples: Vec::new(),
                    },
                )
            })
            .collect();
        for (id, case) in cases {
            let s = out.get_mut(case).expect("all cases present");
            s.count += 1;
            if s.examples.len() < MAX_EXAMPLES {
                s.examples.push(id.clone());
            }
        }
        for s in out.values_mut() {
            s.percent = if total == 0 {
                0.0
            } else {
                100.0 * s.count as f64 / total as f64
            };
        }
        InconsistencyReport { total, cases: out }
    }

    pub fn count(&self, case: InconsistencyCase) -> usize {
        self.cases.get(&case).map_or(0, |s| s.count)
    }

    pub fn percent(&self, case: InconsistencyCase) -> f64 {
        self.cases.get(&case).map_or(0.0, |s| s.percent)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>7} {:>8}", "Case", "Count", "Percent");
        for case in InconsistencyCase::ALL {
            let _ = writeln!(out, "{:<14} {:>7} {:>7.2}%", case.name(), self.count(case), self.percent(case));
        }
        let _ = writeln!(out, "{:<14} {:>7}", "Total", self.total);
        out
    }
}

/// Predicts every labeled record and compares the prediction with its detector label.
pub fn inconsistency_report(d: &Dataset, model: &TrainedModel) -> Result<InconsistencyReport> {
    if !model.class_order.contains(&RefactoringType::None) {
        return Err(Error::NoneClassRequired);
    }
    let labeled: Vec<_> = d.labeled().collect();
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let cases: Vec<(String, InconsistencyCase)> = labeled
        .par_iter()
        .map(|(r, detector)| {
            let predicted = predict_message(model, &r.message).label();
            (r.id.clone(), classify_pair(*detector, predicted))
        })
        .collect();
    Ok(InconsistencyReport::from_cases(&cases))
}
