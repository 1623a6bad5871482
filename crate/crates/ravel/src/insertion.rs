//! Replacing crossings of a Montesinos presentation by true vertices, the two
//! normalizations that strip crossings next to vertices, and the exceptional
//! insertion predicate.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{build_braid, compose_sum, vertex_closure, BraidBox, Diagram, End, NodeId, Slot};
use crate::tangle_core::{BoxVector, MontesinosPresentation, Parity, RowPair, Summand};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InsertionError {
    #[error("no crossings to replace")]
    Empty,
    #[error("crossing {0} listed twice")]
    Duplicate(CrossingAddress),
    #[error("no crossing at {0}")]
    InvalidAddress(CrossingAddress),
    #[error("summand {0} has no vertex")]
    NoVertex(usize),
    #[error("summand {0} is not normalized")]
    Unnormalized(usize),
}

/// A crossing named by summand, box and position in the box, all from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossingAddress {
    pub summand: usize,
    pub box_index: usize,
    pub position: usize,
}

impl CrossingAddress {
    pub fn new(summand: usize, box_index: usize, position: usize) -> Self {
        CrossingAddress { summand, box_index, position }
    }
}

impl fmt::Display for CrossingAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v({},{},{})", self.summand, self.box_index, self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexInsertion {
    addresses: BTreeSet<CrossingAddress>,
}

impl VertexInsertion {
    pub fn new(addresses: Vec<CrossingAddress>) -> Result<Self, InsertionError> {
        if addresses.is_empty() {
            return Err(InsertionError::Empty);
        }
        let mut set = BTreeSet::new();
        for a in addresses {
            if !set.insert(a) {
                return Err(InsertionError::Duplicate(a));
            }
        }
        Ok(VertexInsertion { addresses: set })
    }

    pub fn addresses(&self) -> impl Iterator<Item = &CrossingAddress> {
        self.addresses.iter()
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }
}

impl fmt::Display for VertexInsertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.addresses.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// One summand after insertion. Box indices keep their original values, so a
/// box removed by normalization leaves the layout of the others unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedSummand {
    pub source: Summand,
    pub boxes: Vec<BraidBox>,
    /// Pair of rows joined on the right. Removing a last box by untwisting
    /// reattaches the cap to the pair the removed box twisted.
    pub cap: RowPair,
}

impl DecoratedSummand {
    fn of(t: &Summand) -> Self {
        match t {
            Summand::Rational(b) => DecoratedSummand {
                source: t.clone(),
                boxes: crate::diagram::braid_boxes(b),
                cap: b.cap_pair(),
            },
            Summand::Infinity => DecoratedSummand { source: t.clone(), boxes: Vec::new(), cap: RowPair::Upper },
        }
    }

    /// Vertex positions `(box, slot)`, left to right.
    pub fn vertices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, b) in self.boxes.iter().enumerate() {
            for (s, slot) in b.slots.iter().enumerate() {
                if *slot == Slot::Vertex {
                    out.push((i + 1, s + 1));
                }
            }
        }
        out
    }

    pub fn rightmost_vertex(&self) -> Option<(usize, usize)> {
        self.vertices().last().copied()
    }

    pub fn leftmost_vertex(&self) -> Option<(usize, usize)> {
        self.vertices().first().copied()
    }

    pub fn crossings(&self) -> usize {
        self.boxes.iter().map(box_crossings).sum()
    }

    /// Crossings strictly right of the rightmost vertex.
    pub fn crossings_right_of_vertices(&self) -> Option<usize> {
        let (bi, s) = self.rightmost_vertex()?;
        let same = self.boxes[bi - 1].slots[s..].iter().filter(|x| **x == Slot::Crossing).count();
        Some(same + self.boxes[bi..].iter().map(box_crossings).sum::<usize>())
    }

    pub fn parity(&self) -> Parity {
        self.source.parity()
    }

    /// Diagram of `T_i'`, nodes tagged with summand `index`.
    pub fn diagram(&self, index: usize) -> Diagram {
        match self.source {
            Summand::Infinity => crate::diagram::build_summand_diagram(&self.source, index),
            Summand::Rational(_) => build_braid(&self.boxes, self.cap, index),
        }
    }

    fn is_normalized(&self) -> bool {
        let sa1 = self
            .boxes
            .iter()
            .all(|b| !(b.slots.contains(&Slot::Vertex) && b.slots.contains(&Slot::Crossing)));
        sa1 && self.crossings_right_of_vertices() != Some(1)
    }
}

fn box_crossings(b: &BraidBox) -> usize {
    b.slots.iter().filter(|s| **s == Slot::Crossing).count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedPresentation {
    pub presentation: MontesinosPresentation,
    pub insertion: VertexInsertion,
    pub summands: Vec<DecoratedSummand>,
}

pub fn apply_insertion(
    m: &MontesinosPresentation,
    v: &VertexInsertion,
) -> Result<DecoratedPresentation, InsertionError> {
    let mut summands: Vec<DecoratedSummand> = m.summands.iter().map(DecoratedSummand::of).collect();
    for &a in v.addresses() {
        let slot = a
            .summand
            .checked_sub(1)
            .and_then(|i| summands.get_mut(i))
            .and_then(|s| s.boxes.get_mut(a.box_index.checked_sub(1)?))
            .and_then(|b| b.slots.get_mut(a.position.checked_sub(1)?))
            .ok_or(InsertionError::InvalidAddress(a))?;
        *slot = Slot::Vertex;
    }
    Ok(DecoratedPresentation { presentation: m.clone(), insertion: v.clone(), summands })
}

impl DecoratedPresentation {
    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn summand(&self, i: usize) -> &DecoratedSummand {
        &self.summands[i - 1]
    }

    pub fn vertex_count(&self) -> usize {
        self.summands.iter().map(|s| s.vertices().len()).sum()
    }

    pub fn crossings(&self) -> usize {
        self.summands.iter().map(DecoratedSummand::crossings).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.summands.iter().all(DecoratedSummand::is_normalized)
    }

    /// `T' = T_1' + ... + T_n'`, open.
    pub fn tangle_diagram(&self) -> Diagram {
        let mut parts = self.summands.iter().enumerate().map(|(i, s)| s.diagram(i + 1));
        let first = parts.next().expect("at least one summand");
        parts.fold(first, |acc, d| compose_sum(&acc, &d))
    }

    pub fn closure(&self) -> Diagram {
        vertex_closure(&self.tangle_diagram()).expect("open diagram")
    }
}

/// Drops every crossing sharing a box with a vertex.
pub fn normalize_sa1(d: &DecoratedPresentation) -> DecoratedPresentation {
    let mut out = d.clone();
    for s in &mut out.summands {
        for b in &mut s.boxes {
            if b.slots.contains(&Slot::Vertex) {
                b.slots.retain(|x| *x == Slot::Vertex);
            }
        }
    }
    out
}

/// Removes a lone crossing right of the rightmost vertex, until none is left.
pub fn normalize_sa2(d: &DecoratedPresentation) -> DecoratedPresentation {
    let mut out = d.clone();
    for s in &mut out.summands {
        while s.crossings_right_of_vertices() == Some(1) {
            let (bi, slot) = s.rightmost_vertex().expect("has a vertex");
            let b = &mut s.boxes[bi - 1];
            if let Some(k) = b.slots[slot..].iter().position(|x| *x == Slot::Crossing) {
                b.slots.remove(slot + k);
                continue;
            }
            // The crossing is alone in the last box.
            let last = s.boxes.len();
            debug_assert_eq!(box_crossings(&s.boxes[last - 1]), 1);
            s.cap = RowPair::of_box(last);
            s.boxes.pop();
            while s.boxes.len() > bi {
                s.boxes.pop();
            }
        }
    }
    out
}

pub fn normalize(d: &DecoratedPresentation) -> DecoratedPresentation {
    normalize_sa2(&normalize_sa1(d))
}

/// Boxes of summand `i` strictly right of its rightmost vertex.
pub fn subtangle_right(d: &DecoratedPresentation, i: usize) -> Result<Vec<i64>, InsertionError> {
    let s = d.summands.get(i.wrapping_sub(1)).ok_or(InsertionError::NoVertex(i))?;
    let (bi, _) = s.rightmost_vertex().ok_or(InsertionError::NoVertex(i))?;
    Ok(s.boxes[bi..]
        .iter()
        .map(|b| b.sign * box_crossings(b) as i64)
        .collect())
}

/// The subtangle right of the rightmost vertex as a standalone box vector;
/// `None` when it has no crossings.
pub fn subtangle_right_vector(d: &DecoratedPresentation, i: usize) -> Result<Option<BoxVector>, InsertionError> {
    let r = subtangle_right(d, i)?;
    if r.iter().all(|&a| a == 0) {
        return Ok(None);
    }
    Ok(BoxVector::new(r).ok())
}

/// Whether the two right-hand edges at the rightmost vertex of `T_i'` close
/// up inside `T_i'`.
pub fn has_loop_at(d: &DecoratedPresentation, i: usize) -> Result<bool, InsertionError> {
    let s = d.summands.get(i.wrapping_sub(1)).ok_or(InsertionError::NoVertex(i))?;
    let (bi, slot) = s.rightmost_vertex().ok_or(InsertionError::NoVertex(i))?;
    let g = s.diagram(i);
    let v = (0..g.node_count())
        .find(|&n| g.node(n).origin.is_some_and(|o| o.box_index == bi && o.slot == slot))
        .expect("vertex node");
    Ok(walk_from(&g, v, 3) == Some((v, 2)))
}

// Follows an edge from a port, straight through crossings, to the vertex port
// where it ends.
fn walk_from(g: &Diagram, n: NodeId, p: u8) -> Option<(NodeId, u8)> {
    let mut e = g.partner(End::Port(n, p));
    loop {
        match e {
            End::Boundary(_) => return None,
            End::Port(m, q) if g.node(m).is_vertex() => return Some((m, q)),
            End::Port(m, q) => e = g.partner(End::Port(m, (q + 2) % 4)),
        }
    }
}

/// Outcome of one condition; `summand` names the first offender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub holds: bool,
    pub summand: Option<usize>,
}

impl ConditionResult {
    fn from_offender(summand: Option<usize>) -> Self {
        ConditionResult { holds: summand.is_none(), summand }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    /// The unique vertexless summand with infinity parity, if condition 1 holds.
    pub infinity_summand: Option<usize>,
    pub unique_infinity_summand: ConditionResult,
    pub single_vertex_in_second_box: ConditionResult,
    pub two_crossings_right: ConditionResult,
    pub loop_at_vertex: ConditionResult,
}

impl ExceptionalReport {
    pub fn is_exceptional(&self) -> bool {
        self.unique_infinity_summand.holds
            && self.single_vertex_in_second_box.holds
            && self.two_crossings_right.holds
            && self.loop_at_vertex.holds
    }

    pub fn conditions(&self) -> [ConditionResult; 4] {
        [
            self.unique_infinity_summand,
            self.single_vertex_in_second_box,
            self.two_crossings_right,
            self.loop_at_vertex,
        ]
    }

    /// Index from 1 of the first failing condition.
    pub fn first_failure(&self) -> Option<usize> {
        self.conditions().iter().position(|c| !c.holds).map(|i| i + 1)
    }
}

/// Evaluates the four conditions on a normalized insertion. When no single
/// summand has infinity parity, conditions 2 to 4 range over the summands
/// without infinity parity.
pub fn is_exceptional(d: &DecoratedPresentation) -> Result<ExceptionalReport, InsertionError> {
    if let Some(i) = d.summands.iter().position(|s| !s.is_normalized()) {
        return Err(InsertionError::Unnormalized(i + 1));
    }
    let inf: Vec<usize> = (1..=d.len()).filter(|&i| d.summand(i).parity() == Parity::Infinity).collect();
    let cond1 = match inf[..] {
        [j] if d.summand(j).vertices().is_empty() => None,
        [j] => Some(j),
        [] => Some(0),
        [_, k, ..] => Some(k),
    };
    let unique = ConditionResult::from_offender(cond1);
    let others: Vec<usize> = (1..=d.len()).filter(|i| !inf.contains(i)).collect();
    let cond2 = others.iter().copied().find(|&k| {
        let s = d.summand(k);
        let second_box_crossings = s
            .source
            .as_box_vector()
            .and_then(|b| b.boxes().get(1))
            .map_or(0, |a| a.unsigned_abs());
        match s.vertices()[..] {
            [(2, _)] => false,
            [(3, _)] => second_box_crossings != 1,
            _ => true,
        }
    });
    let cond3 = others.iter().copied().find(|&k| {
        let s = d.summand(k);
        s.crossings_right_of_vertices().is_none_or(|c| c < 2)
    });
    let cond4 = others
        .iter()
        .copied()
        .find(|&k| !has_loop_at(d, k).unwrap_or(false));
    Ok(ExceptionalReport {
        infinity_summand: if unique.holds { inf.first().copied() } else { None },
        unique_infinity_summand: unique,
        single_vertex_in_second_box: ConditionResult::from_offender(cond2),
        two_crossings_right: ConditionResult::from_offender(cond3),
        loop_at_vertex: ConditionResult::from_offender(cond4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pres(v: &[&[i64]]) -> MontesinosPresentation {
        MontesinosPresentation::from_box_vectors(v.iter().map(|b| BoxVector::new(b.to_vec()).unwrap()).collect())
    }

    fn ins(a: &[(usize, usize, usize)]) -> VertexInsertion {
        VertexInsertion::new(a.iter().map(|&(i, j, t)| CrossingAddress::new(i, j, t)).collect()).unwrap()
    }

    #[test]
    fn insertion_places_vertices() {
        let d = apply_insertion(&pres(&[&[2, 2], &[0, 1, 2]]), &ins(&[(2, 2, 1)])).unwrap();
        assert_eq!(d.summand(2).vertices(), vec![(2, 1)]);
        assert_eq!(d.closure().vertex_count(), 2);
        assert_eq!(VertexInsertion::new(vec![]), Err(InsertionError::Empty));
        let a = CrossingAddress::new(1, 1, 1);
        assert_eq!(VertexInsertion::new(vec![a, a]), Err(InsertionError::Duplicate(a)));
        assert!(apply_insertion(&pres(&[&[2, 2]]), &ins(&[(1, 3, 1)])).is_err());
        assert!(apply_insertion(&pres(&[&[0, 2]]), &ins(&[(1, 1, 1)])).is_err());
    }

    #[test]
    fn sa1_strips_vertex_boxes() {
        let d = apply_insertion(&pres(&[&[3, 2]]), &ins(&[(1, 1, 2)])).unwrap();
        let n = normalize_sa1(&d);
        assert_eq!(n.summand(1).boxes[0].slots, vec![Slot::Vertex]);
        assert_eq!(n.summand(1).crossings(), 2);
        let d = apply_insertion(&pres(&[&[4, 2]]), &ins(&[(1, 1, 1), (1, 1, 3)])).unwrap();
        assert_eq!(normalize_sa1(&d).summand(1).boxes[0].slots, vec![Slot::Vertex; 2]);
        assert_eq!(normalize_sa1(&n), n);
    }

    #[test]
    fn sa2_removes_lone_crossing() {
        let d = normalize(&apply_insertion(&pres(&[&[1, 1, 1]]), &ins(&[(1, 2, 1)])).unwrap());
        assert_eq!(d.summand(1).boxes.len(), 2);
        assert_eq!(d.summand(1).crossings_right_of_vertices(), Some(0));
        let d = normalize(&apply_insertion(&pres(&[&[1, 1, 2]]), &ins(&[(1, 2, 1)])).unwrap());
        assert_eq!(d.summand(1).crossings_right_of_vertices(), Some(2));
        assert!(d.is_normalized());
    }

    #[test]
    fn subtangle_examples() {
        let d = normalize(&apply_insertion(&pres(&[&[0, 1, 2]]), &ins(&[(1, 2, 1)])).unwrap());
        assert_eq!(subtangle_right(&d, 1).unwrap(), vec![2]);
        let d = normalize(&apply_insertion(&pres(&[&[0, 1, 2, 3]]), &ins(&[(1, 2, 1)])).unwrap());
        assert_eq!(subtangle_right(&d, 1).unwrap(), vec![2, 3]);
        let d = normalize(&apply_insertion(&pres(&[&[0, 1, 2]]), &ins(&[(1, 3, 2)])).unwrap());
        assert!(subtangle_right(&d, 1).unwrap().is_empty());
        assert!(!has_loop_at(&d, 1).unwrap());
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let d = apply_insertion(&pres(&[&[3, 2]]), &ins(&[(1, 1, 2)])).unwrap();
        assert_eq!(is_exceptional(&d), Err(InsertionError::Unnormalized(1)));
    }

    // Untwisting each vertex against crossings of its own summand, in its box
    // or further right, reproduces the normalized presentation.
    #[test]
    fn normalization_matches_untwisting() {
        use crate::rewrite::{apply_untwist, canonical_code};
        let mut cat: Vec<BoxVector> = BoxVector::catalog(5).into_iter().filter(|b| b.sign() > 0).collect();
        for extra in [&[1, 1, 1][..], &[2, 1, 1], &[0, 1, 1], &[1, 2, 1], &[1, 1, 1, 1], &[0, 2, 1]] {
            cat.push(BoxVector::new(extra.to_vec()).unwrap());
        }
        let mut checked = 0;
        for b in &cat {
            let m = MontesinosPresentation::from_box_vectors(vec![b.clone(), BoxVector::new(vec![2, 1]).unwrap()]);
            for (j, &a) in b.boxes().iter().enumerate() {
                for t in 1..=a.unsigned_abs() as usize {
                    let d = apply_insertion(&m, &ins(&[(1, j + 1, t)])).unwrap();
                    let mut g = d.closure();
                    let w = g.closing_vertex();
                    loop {
                        let step = g.faces().into_iter().find_map(|f| match f[..] {
                            [(x, _), (y, _)] => {
                                let (v, c) = if g.node(x).is_vertex() { (x, y) } else { (y, x) };
                                let (ov, oc) = (g.node(v).origin, g.node(c).origin);
                                let same = ov.zip(oc).is_some_and(|(a, b)| a.summand == b.summand && b.box_index >= a.box_index);
                                (Some(v) != w && g.node(v).is_vertex() && g.node(c).is_crossing() && same).then_some((v, c))
                            }
                            _ => None,
                        });
                        match step {
                            Some((v, c)) => apply_untwist(&mut g, v, c).unwrap(),
                            None => break,
                        }
                    }
                    let n = normalize(&d).closure();
                    assert_eq!(canonical_code(&g), canonical_code(&n), "{m} v(1,{},{t})", j + 1);
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }
}
