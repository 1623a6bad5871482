//! Report schema. Bump [`SCHEMA_VERSION`] on any change to field names or
//! meanings.

use std::fmt::Write as _;

use ravel::classify::{Verdict, Witness};
use ravel::diagram::PdCode;
use ravel::insertion::ExceptionalReport;
use ravel::invariants::Triviality;
use ravel::oracle::OracleReport;
use ravel::rewrite::SearchOutcome;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

const CONDITION_NAMES: [&str; 4] = [
    "exactly one summand has infinity parity and it has no vertex",
    "every other summand has one vertex, in its second box, or its third when the second has one crossing",
    "at least two crossings right of that vertex",
    "a loop through that vertex",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub index: usize,
    pub name: String,
    pub holds: bool,
    /// First summand where the condition fails, when it fails at one.
    pub summand: Option<usize>,
}

pub fn condition_reports(ex: &ExceptionalReport) -> Vec<ConditionReport> {
    ex.conditions()
        .iter()
        .enumerate()
        .map(|(i, c)| ConditionReport {
            index: i + 1,
            name: CONDITION_NAMES[i].to_string(),
            holds: c.holds,
            summand: c.summand,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub schema: u32,
    pub input: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub witness: Witness,
    pub conditions: Vec<ConditionReport>,
}

impl ClassifyReport {
    pub fn summary(&self) -> String {
        let mut s = format!("{}\nverdict: {}\n", self.input, self.verdict);
        for l in &self.witness.loops {
            let _ = writeln!(s, "loop {}: edges {:?} circles {:?}", l.label, l.edges, l.circles);
        }
        if let Some(k) = self.witness.summand {
            let _ = writeln!(s, "summand: {k}");
        }
        for c in &self.conditions {
            let mark = if c.holds { "holds" } else { "fails" };
            let at = c.summand.map_or(String::new(), |k| format!(" (summand {k})"));
            let _ = writeln!(s, "condition {}: {mark}{at}: {}", c.index, c.name);
        }
        for n in &self.witness.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if let Some(t) = &self.witness.planarity {
            let _ = writeln!(s, "planarity trace: {} moves", t.moves.len());
        }
        if let Some(c) = &self.witness.nontrivial {
            let jones = c.jones.as_ref().map_or(String::new(), |j| format!(", jones {j}"));
            let _ = writeln!(s, "nontrivial constituent: {} crossings{jones}", c.pd.crossing_count());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentReport {
    pub cycles: Vec<usize>,
    pub circles: Vec<usize>,
    pub crossings: usize,
    pub triviality: Triviality,
    /// `exponent:coefficient` pairs in `A`, for non-trivial constituents.
    pub jones: Option<String>,
    pub pd: PdCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PlanarityReport {
    NotRun,
    Certified { moves: usize, trace: String },
    Unknown { explored: usize, best_crossings: usize },
}

impl From<Option<&SearchOutcome>> for PlanarityReport {
    fn from(o: Option<&SearchOutcome>) -> Self {
        match o {
            None => PlanarityReport::NotRun,
            Some(SearchOutcome::Certified(t)) => PlanarityReport::Certified { moves: t.moves.len(), trace: t.to_text() },
            Some(SearchOutcome::Unknown { explored, best_crossings }) => {
                PlanarityReport::Unknown { explored: *explored, best_crossings: *best_crossings }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Agreement {
    Agree,
    Inconclusive(String),
    Disagree(String),
}

impl Agreement {
    pub fn is_disagreement(&self) -> bool {
        matches!(self, Agreement::Disagree(_))
    }
}

/// What the oracle established about a closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evidence {
    pub knotted: bool,
    pub planar: bool,
    /// Constituents left inconclusive.
    pub undecided: usize,
}

impl From<&OracleReport> for Evidence {
    fn from(r: &OracleReport) -> Self {
        Evidence { knotted: r.first_nontrivial().is_some(), planar: r.planar(), undecided: r.inconclusive() }
    }
}

/// Whether the oracle's findings are consistent with a verdict.
pub fn agreement(verdict: &Verdict, e: Evidence) -> Agreement {
    let Evidence { knotted, planar, undecided: open } = e;
    match verdict {
        Verdict::Ravel if knotted => Agreement::Disagree("a constituent is non-trivial".into()),
        Verdict::Ravel if planar => Agreement::Disagree("the closure was shown planar".into()),
        Verdict::Ravel if open > 0 => Agreement::Inconclusive(format!("{open} constituents undecided")),
        Verdict::Ravel => Agreement::Agree,
        Verdict::ContainsNontrivialKnotOrLink if knotted => Agreement::Agree,
        Verdict::ContainsNontrivialKnotOrLink if planar || open == 0 => {
            Agreement::Disagree("no constituent is non-trivial".into())
        }
        Verdict::ContainsNontrivialKnotOrLink => Agreement::Inconclusive(format!("{open} constituents undecided")),
        Verdict::Planar if planar => Agreement::Agree,
        Verdict::Planar if knotted => Agreement::Disagree("a constituent is non-trivial".into()),
        Verdict::Planar => Agreement::Inconclusive("no planarity certificate within budget".into()),
        Verdict::NotRavel if knotted || planar => Agreement::Agree,
        Verdict::NotRavel => Agreement::Inconclusive("neither knotted nor shown planar".into()),
        Verdict::HypothesisViolation(_) => Agreement::Agree,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub input: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub constituents: Vec<ConstituentReport>,
    pub planarity: PlanarityReport,
    pub agreement: Agreement,
}

impl VerifyReport {
    pub fn new(input: String, verdict: Verdict, oracle: &OracleReport) -> Self {
        let constituents = oracle
            .constituents
            .iter()
            .map(|c| ConstituentReport {
                cycles: c.link.cycles.clone(),
                circles: c.link.circles.clone(),
                crossings: c.pd.crossing_count(),
                triviality: c.triviality,
                jones: c.jones.as_ref().map(|j| j.to_string()),
                pd: c.pd.clone(),
            })
            .collect();
        let agreement = agreement(&verdict, oracle.into());
        VerifyReport {
            schema: SCHEMA_VERSION,
            input,
            verdict,
            constituents,
            planarity: oracle.planarity.as_ref().into(),
            agreement,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}\nverdict: {}\n", self.input, self.verdict);
        for (i, c) in self.constituents.iter().enumerate() {
            let jones = c.jones.as_ref().map_or(String::new(), |j| format!(", jones {j}"));
            let _ = writeln!(
                s,
                "constituent {i}: cycles {:?} circles {:?}, {} crossings, {}{jones}",
                c.cycles, c.circles, c.crossings, c.triviality
            );
        }
        let _ = match &self.planarity {
            PlanarityReport::NotRun => writeln!(s, "planarity: not searched"),
            PlanarityReport::Certified { moves, .. } => writeln!(s, "planarity: certified in {moves} moves"),
            PlanarityReport::Unknown { explored, best_crossings } => {
                writeln!(s, "planarity: unknown after {explored} diagrams, best {best_crossings} crossings")
            }
        };
        let _ = match &self.agreement {
            Agreement::Agree => writeln!(s, "oracle: agrees"),
            Agreement::Inconclusive(r) => writeln!(s, "oracle: inconclusive, {r}"),
            Agreement::Disagree(r) => writeln!(s, "oracle: DISAGREES, {r}"),
        };
        s
    }
}
