//! Independent verification of a closure: every constituent knot or link is
//! tested with the invariants, and planarity with the rewrite search.

use serde::{Deserialize, Serialize};

use crate::diagram::{extract_pd, ConstituentLink, Diagram, DiagramError, PdCode, SpatialGraph, CONSTITUENT_CAP};
use crate::invariants::{triviality_with_jones, LaurentPoly, Triviality, CROSSING_BUDGET};
use crate::rewrite::{planarity_search, SearchOutcome, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Flip attempts per rewrite search.
    pub search_budget: usize,
    /// Largest constituent handed to the bracket.
    pub crossing_budget: usize,
    pub constituent_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            search_budget: DEFAULT_BUDGET,
            crossing_budget: CROSSING_BUDGET,
            constituent_cap: CONSTITUENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentStatus {
    pub link: ConstituentLink,
    pub pd: PdCode,
    pub triviality: Triviality,
    /// Present for non-trivial constituents.
    pub jones: Option<LaurentPoly>,
}

pub fn constituent_status(d: &Diagram, g: &SpatialGraph, link: &ConstituentLink, cfg: &OracleConfig) -> ConstituentStatus {
    let pd = extract_pd(d, g, link);
    let (triviality, jones) = if pd.crossing_count() > cfg.crossing_budget {
        (Triviality::Inconclusive, None)
    } else {
        triviality_with_jones(&pd, cfg.search_budget)
    };
    ConstituentStatus { link: link.clone(), pd, triviality, jones }
}

/// Status of every constituent link of a closed diagram.
pub fn constituent_statuses(d: &Diagram, cfg: &OracleConfig) -> Result<Vec<ConstituentStatus>, DiagramError> {
    let g = SpatialGraph::of(d)?;
    let links = g.constituent_links(cfg.constituent_cap)?;
    Ok(links.iter().map(|l| constituent_status(d, &g, l, cfg)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub constituents: Vec<ConstituentStatus>,
    pub planarity: Option<SearchOutcome>,
}

impl OracleReport {
    pub fn all_trivial(&self) -> bool {
        self.constituents.iter().all(|c| c.triviality == Triviality::Trivial)
    }

    pub fn first_nontrivial(&self) -> Option<&ConstituentStatus> {
        self.constituents.iter().find(|c| c.triviality == Triviality::Nontrivial)
    }

    pub fn inconclusive(&self) -> usize {
        self.constituents
            .iter()
            .filter(|c| c.triviality == Triviality::Inconclusive)
            .count()
    }

    pub fn planar(&self) -> bool {
        self.planarity.as_ref().is_some_and(SearchOutcome::is_certified)
    }
}

/// Constituent statuses, and a planarity search unless a non-trivial
/// constituent already rules planarity out.
pub fn examine(d: &Diagram, cfg: &OracleConfig) -> Result<OracleReport, DiagramError> {
    let constituents = constituent_statuses(d, cfg)?;
    let knotted = constituents.iter().any(|c| c.triviality == Triviality::Nontrivial);
    let planarity = (!knotted).then(|| planarity_search(d, cfg.search_budget));
    Ok(OracleReport { constituents, planarity })
}
