//! Verdicts for vertex closures of Montesinos tangles, of Montesinos tangles
//! with crossings replaced by vertices, and of algebraic tangles.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{
    algebraic_diagram, montesinos_diagram, vertex_closure, ConstituentLink, Diagram, DiagramError, NodeId,
    SpatialGraph,
};
use crate::insertion::{
    apply_insertion, is_exceptional, normalize, DecoratedPresentation, ExceptionalReport, InsertionError,
    VertexInsertion,
};
use crate::oracle::{examine, ConstituentStatus, OracleConfig};
use crate::rewrite::{planarity_search, RewriteTrace, SearchOutcome};
use crate::tangle_core::{is_horizontal, is_trivial_vertical, AlgebraicExpr, Corner, MontesinosPresentation, Parity};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "kebab-case")]
pub enum Verdict {
    Planar,
    Ravel,
    ContainsNontrivialKnotOrLink,
    /// Not a ravel; planar or knotted is left open.
    NotRavel,
    HypothesisViolation(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Planar => f.write_str("planar"),
            Verdict::Ravel => f.write_str("ravel"),
            Verdict::ContainsNontrivialKnotOrLink => f.write_str("contains-nontrivial-knot-or-link"),
            Verdict::NotRavel => f.write_str("not-ravel"),
            Verdict::HypothesisViolation(r) => write!(f, "hypothesis-violation: {r}"),
        }
    }
}

/// A named loop of the closure: graph edges of its cycles and its circles,
/// indexed as in [`SpatialGraph::of`] on the witness diagram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopWitness {
    pub label: String,
    pub link: ConstituentLink,
    pub edges: Vec<usize>,
    pub circles: Vec<usize>,
}

impl LoopWitness {
    fn new(label: impl Into<String>, g: &SpatialGraph, link: ConstituentLink) -> Self {
        let edges = link.cycles.iter().flat_map(|&c| g.cycles[c].edge_set()).collect();
        let circles = link.circles.clone();
        LoopWitness { label: label.into(), link, edges, circles }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witness {
    pub loops: Vec<LoopWitness>,
    /// Summand whose denominator closure sits inside the witness loops.
    pub summand: Option<usize>,
    pub notes: Vec<String>,
    pub exceptional: Option<ExceptionalReport>,
    pub planarity: Option<RewriteTrace>,
    pub nontrivial: Option<ConstituentStatus>,
    /// Every summand with a vertex has at most one crossing right of its
    /// rightmost vertex, so the closure is planar or knotted.
    pub few_crossings_right: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Witness,
}

impl Classification {
    fn bare(verdict: Verdict) -> Self {
        Classification { verdict, witness: Witness::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error(transparent)]
    Insertion(#[from] InsertionError),
    #[error("not in standard form: {0}")]
    NotStandardForm(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Settle `NotRavel` as planar or knotted when the oracle can.
    pub refine: bool,
    pub oracle: OracleConfig,
}

/// Closing-vertex ports, as laid out by `vertex_closure`.
fn closing_port(c: Corner) -> u8 {
    match c {
        Corner::NW => 0,
        Corner::NE => 1,
        Corner::SE => 2,
        Corner::SW => 3,
    }
}

fn loop_at(g: &SpatialGraph, v: NodeId, ports: Option<(u8, u8)>) -> Option<usize> {
    g.cycles.iter().position(|c| {
        let [(e, _)] = c.edges[..] else { return false };
        let [(a, p), (b, q)] = g.edges[e].ends;
        a == v
            && b == v
            && ports.is_none_or(|(x, y)| (p, q) == (x, y) || (p, q) == (y, x))
    })
}

fn is_loop_at(g: &SpatialGraph, c: usize, v: NodeId) -> bool {
    matches!(g.cycles[c].edges[..], [(e, _)] if g.edges[e].ends[0].0 == v && g.edges[e].ends[1].0 == v)
}

fn circle_through(d: &Diagram, g: &SpatialGraph, summand: usize) -> Option<usize> {
    g.circles.iter().position(|c| {
        c.passages
            .iter()
            .any(|&(n, _)| d.node(n).origin.is_some_and(|o| o.summand == summand))
    })
}

fn cycle_link(i: usize) -> ConstituentLink {
    ConstituentLink { cycles: vec![i], circles: Vec::new() }
}

/// The diagram witnesses of [`classify_closure`] refer to.
pub fn closure_diagram(m: &MontesinosPresentation) -> Diagram {
    vertex_closure(&montesinos_diagram(m)).expect("open diagram")
}

/// Vertex closure of a Montesinos tangle.
pub fn classify_closure(m: &MontesinosPresentation) -> Classification {
    let n = m.len();
    if n == 0 {
        return Classification::bare(Verdict::HypothesisViolation("no summands".into()));
    }
    let d = closure_diagram(m);
    let g = SpatialGraph::of(&d).expect("closed diagram");
    let w = d.closing_vertex().expect("closing vertex");
    let right = (closing_port(Corner::NE), closing_port(Corner::SE));
    let left = (closing_port(Corner::NW), closing_port(Corner::SW));
    if n == 1 {
        let mut c = Classification::bare(Verdict::Planar);
        c.witness.notes.push("a rational tangle has a planar vertex closure".into());
        return c;
    }
    let s = |i: usize| &m.summands[i - 1];
    if is_trivial_vertical(s(1)) && is_trivial_vertical(s(n)) {
        let mut c = Classification::bare(Verdict::HypothesisViolation(
            "the first and last summands are both trivial vertical tangles".into(),
        ));
        if let SearchOutcome::Certified(t) = planarity_search(&d, crate::rewrite::DEFAULT_BUDGET) {
            c.witness.notes.push("the closure is planar".into());
            c.witness.planarity = Some(t);
        }
        return c;
    }
    if let Some(i) = (1..=n).find(|&i| is_horizontal(s(i))) {
        return Classification::bare(Verdict::HypothesisViolation(format!(
            "summand {i} is horizontal, so the number of summands is not minimal"
        )));
    }
    let inf: Vec<usize> = (1..=n).filter(|&i| s(i).parity() == Parity::Infinity).collect();
    let mut witness = Witness::default();
    if inf.is_empty() {
        let at_w = (0..g.cycles.len()).filter(|&c| is_loop_at(&g, c, w));
        for (c, label) in at_w.zip(["L", "L'"]) {
            witness.loops.push(LoopWitness::new(label, &g, cycle_link(c)));
        }
        witness.notes.push("each loop runs once through every summand".into());
        return Classification { verdict: Verdict::Ravel, witness };
    }
    // Read from the end that is not a trivial vertical tangle.
    let from_right = !is_trivial_vertical(s(n));
    let (near, far, outer_ports, inner_ports) = if from_right {
        (*inf.last().unwrap(), 1, right, left)
    } else {
        (inf[0], n, left, right)
    };
    let end = if from_right { n } else { 1 };
    let loop_outer = loop_at(&g, w, Some(outer_ports));
    let loop_inner = loop_at(&g, w, Some(inner_ports));
    if near != end {
        if let Some(c) = loop_outer {
            witness.loops.push(LoopWitness::new("L1", &g, cycle_link(c)));
        }
        witness.summand = Some(end);
    } else if inf.len() == 1 {
        if let Some(c) = loop_inner {
            witness.loops.push(LoopWitness::new("L2", &g, cycle_link(c)));
        }
        witness.summand = Some(far);
    } else {
        let circle = circle_through(&d, &g, end);
        if let (Some(c), Some(k)) = (loop_outer, circle) {
            let link = ConstituentLink { cycles: vec![c], circles: vec![k] };
            witness.loops.push(LoopWitness::new("L1+L2", &g, link));
        }
        witness.summand = Some(end);
    }
    witness.notes.push(format!(
        "the witness loops contain the denominator closure of summand {}",
        witness.summand.unwrap_or(0)
    ));
    Classification { verdict: Verdict::ContainsNontrivialKnotOrLink, witness }
}

/// Vertex closure after replacing crossings by vertices. Witnesses refer to
/// the closure of the normalized insertion.
pub fn classify_insertion_closure(
    m: &MontesinosPresentation,
    v: &VertexInsertion,
    opts: &ClassifyOptions,
) -> Result<Classification, ClassifyError> {
    let report = m.validate_standard_form();
    if !report.is_valid() {
        let issues: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
        return Err(ClassifyError::NotStandardForm(issues.join("; ")));
    }
    let d = apply_insertion(m, v)?;
    let few_crossings_right = d
        .summands
        .iter()
        .all(|s| s.crossings_right_of_vertices().is_none_or(|c| c <= 1));
    let nd = normalize(&d);
    let ex = is_exceptional(&nd)?;
    let closure = nd.closure();
    let mut witness = Witness { few_crossings_right, exceptional: Some(ex.clone()), ..Witness::default() };
    if ex.is_exceptional() {
        let g = SpatialGraph::of(&closure)?;
        for k in 1..=nd.len() {
            if Some(k) == ex.infinity_summand {
                continue;
            }
            let vk = vertex_of(&closure, k);
            if let Some(c) = vk.and_then(|vk| loop_at(&g, vk, None)) {
                witness.loops.push(LoopWitness::new(format!("c{k}"), &g, cycle_link(c)));
            }
        }
        witness.summand = ex.infinity_summand;
        return Ok(Classification { verdict: Verdict::Ravel, witness });
    }
    if let Some(k) = ex.first_failure() {
        let at = ex.conditions()[k - 1].summand.map_or(String::new(), |s| format!(" at summand {s}"));
        witness.notes.push(format!("condition {k} fails{at}"));
    }
    let mut verdict = Verdict::NotRavel;
    if opts.refine {
        let r = refine(&nd, &closure, &opts.oracle)?;
        if let Some(bad) = r.0 {
            verdict = Verdict::ContainsNontrivialKnotOrLink;
            witness.nontrivial = Some(bad);
        } else if let Some(t) = r.1 {
            verdict = Verdict::Planar;
            witness.planarity = Some(t);
        }
    }
    Ok(Classification { verdict, witness })
}

type Refinement = (Option<ConstituentStatus>, Option<RewriteTrace>);

fn refine(_d: &DecoratedPresentation, closure: &Diagram, cfg: &OracleConfig) -> Result<Refinement, ClassifyError> {
    let report = examine(closure, cfg)?;
    if let Some(bad) = report.first_nontrivial() {
        return Ok((Some(bad.clone()), None));
    }
    match report.planarity {
        Some(SearchOutcome::Certified(t)) => Ok((None, Some(t))),
        _ => Ok((None, None)),
    }
}

fn vertex_of(d: &Diagram, summand: usize) -> Option<NodeId> {
    (0..d.node_count()).find(|&n| d.node(n).is_vertex() && d.node(n).origin.is_some_and(|o| o.summand == summand))
}

/// Which leaf arcs each strand of an algebraic tangle runs through. Arc 0 of
/// a leaf is the one starting at its NW point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafStrands {
    pub strands: [Vec<(usize, u8)>; 2],
    pub circles: Vec<Vec<(usize, u8)>>,
}

impl LeafStrands {
    /// Each strand meets every leaf in exactly one arc.
    pub fn passes_each_leaf_once(&self, leaves: usize) -> bool {
        self.circles.is_empty()
            && self.strands.iter().all(|s| {
                let mut seen = vec![0; leaves];
                s.iter().for_each(|&(l, _)| seen[l - 1] += 1);
                seen.iter().all(|&k| k == 1)
            })
    }
}

/// Strands traced through the leaves using only their parities.
pub fn leaf_strands(e: &AlgebraicExpr) -> LeafStrands {
    // Points are leaf corners, 4 per leaf; `glue` joins points of adjacent
    // leaves, `arc` joins points inside a leaf.
    let leaves = e.leaves();
    let k = leaves.len();
    let mut arc = vec![(0usize, 0u8); 4 * k];
    for (i, t) in leaves.iter().enumerate() {
        let pairs = match t.parity() {
            Parity::Zero => [(Corner::NW, Corner::NE), (Corner::SW, Corner::SE)],
            Parity::Infinity => [(Corner::NW, Corner::SW), (Corner::NE, Corner::SE)],
            Parity::One => [(Corner::NW, Corner::SE), (Corner::NE, Corner::SW)],
        };
        for (a, (x, y)) in pairs.iter().enumerate() {
            let (px, py) = (4 * i + x.index(), 4 * i + y.index());
            arc[px] = (py, a as u8);
            arc[py] = (px, a as u8);
        }
    }
    let mut glue = vec![usize::MAX; 4 * k];
    fn go(e: &AlgebraicExpr, next: &mut usize, glue: &mut [usize]) -> [usize; 4] {
        let (nw, sw, se, ne) = (Corner::NW.index(), Corner::SW.index(), Corner::SE.index(), Corner::NE.index());
        match e {
            AlgebraicExpr::Leaf(_) => {
                let i = *next;
                *next += 1;
                [4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3]
            }
            AlgebraicExpr::Sum(a, b) => {
                let x = go(a, next, glue);
                let y = go(b, next, glue);
                let mut join = |a: usize, b: usize| {
                    glue[a] = b;
                    glue[b] = a;
                };
                join(x[ne], y[nw]);
                join(x[se], y[sw]);
                let mut out = [0; 4];
                out[nw] = x[nw];
                out[sw] = x[sw];
                out[se] = y[se];
                out[ne] = y[ne];
                out
            }
            AlgebraicExpr::Product(a, b) => {
                let x = go(a, next, glue);
                let y = go(b, next, glue);
                let mut join = |a: usize, b: usize| {
                    glue[a] = b;
                    glue[b] = a;
                };
                join(x[sw], y[nw]);
                join(x[se], y[ne]);
                let mut out = [0; 4];
                out[nw] = x[nw];
                out[ne] = x[ne];
                out[sw] = y[sw];
                out[se] = y[se];
                out
            }
        }
    }
    let outer = go(e, &mut 0, &mut glue);
    let mut used = vec![false; 4 * k];
    let walk = |start: usize, used: &mut Vec<bool>| {
        let mut out = Vec::new();
        let mut p = start;
        loop {
            let (q, a) = arc[p];
            used[p] = true;
            used[q] = true;
            out.push((p / 4 + 1, a));
            if glue[q] == usize::MAX {
                break;
            }
            p = glue[q];
            if used[p] {
                break;
            }
        }
        out
    };
    let first = walk(outer[Corner::NW.index()], &mut used);
    let second_start = outer.iter().copied().find(|&p| !used[p]).expect("four boundary points");
    let second = walk(second_start, &mut used);
    let mut circles = Vec::new();
    while let Some(p) = (0..4 * k).find(|&p| !used[p]) {
        circles.push(walk(p, &mut used));
    }
    LeafStrands { strands: [first, second], circles }
}

/// The diagram witnesses of [`classify_algebraic_closure`] refer to.
pub fn algebraic_closure_diagram(e: &AlgebraicExpr) -> Diagram {
    vertex_closure(&algebraic_diagram(e)).expect("open diagram")
}

/// Vertex closure of an algebraic tangle. The strand criterion is only
/// sufficient, so failing it is reported as an unmet hypothesis.
pub fn classify_algebraic_closure(e: &AlgebraicExpr) -> Classification {
    let leaves = e.leaves();
    if e.rational_fraction().is_some() {
        let mut c = Classification::bare(Verdict::Planar);
        c.witness.notes.push("the expression is a rational tangle".into());
        return c;
    }
    if leaves.len() == 2 && leaves.iter().all(|t| is_trivial_vertical(t)) {
        return Classification::bare(Verdict::HypothesisViolation(
            "two summands, both trivial vertical tangles".into(),
        ));
    }
    if leaf_strands(e).passes_each_leaf_once(leaves.len()) {
        let mut c = Classification::bare(Verdict::Ravel);
        c.witness.notes.push("each strand passes once through every leaf".into());
        return c;
    }
    Classification::bare(Verdict::HypothesisViolation(
        "some strand misses a leaf or passes it twice; the criterion is only sufficient".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangle_core::{BoxVector, Summand};

    fn m(v: &[&[i64]]) -> MontesinosPresentation {
        MontesinosPresentation::from_box_vectors(v.iter().map(|b| BoxVector::new(b.to_vec()).unwrap()).collect())
    }

    #[test]
    fn single_summand_is_planar() {
        assert_eq!(classify_closure(&m(&[&[2, 3]])).verdict, Verdict::Planar);
    }

    #[test]
    fn two_vertical_ends_violate_the_hypothesis() {
        let p = MontesinosPresentation::new(vec![Summand::Infinity, Summand::Infinity]);
        let c = classify_closure(&p);
        assert!(matches!(c.verdict, Verdict::HypothesisViolation(_)));
        assert!(c.witness.planarity.is_some());
    }

    #[test]
    fn horizontal_summand_is_not_minimal() {
        assert!(matches!(classify_closure(&m(&[&[3], &[2, 3]])).verdict, Verdict::HypothesisViolation(_)));
    }

    #[test]
    fn leaf_strands_of_sums() {
        let l = |b: &[i64]| AlgebraicExpr::leaf(Summand::Rational(BoxVector::new(b.to_vec()).unwrap()));
        let inf = || AlgebraicExpr::leaf(Summand::Infinity);
        let two_inf = AlgebraicExpr::sum(inf(), inf());
        assert_eq!(leaf_strands(&two_inf).circles.len(), 1);
        let e = AlgebraicExpr::sum(l(&[2, 3]), l(&[2, 3]));
        let s = leaf_strands(&e);
        assert_eq!(s.strands[0].len() + s.strands[1].len(), 4);
    }
}
