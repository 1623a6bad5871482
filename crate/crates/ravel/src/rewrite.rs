//! Isotopy moves on closed diagrams with flexible true vertices, and a bounded
//! search that removes every crossing.
//!
//! Local moves act on faces with one or two sides: a kink (Reidemeister I), a
//! bigon between two crossings (Reidemeister II) and a bigon between a vertex
//! and a crossing, which is undone by twisting the vertex. Flips rotate a
//! sub-tangle cut out by four edges half a turn, adding one crossing on each
//! side of it.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, End, NodeId, NodeKind, PdCode};

/// Default number of flip attempts before a search gives up.
pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("move does not apply: {0}")]
    NotApplicable(String),
    #[error("cannot parse move `{0}`")]
    Parse(String),
}

/// A sub-tangle to flip.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BallSpec {
    Nodes(Vec<NodeId>),
    /// Every node of summands `1..=k`.
    Prefix(usize),
    /// Nodes of a summand in boxes after `box_index`.
    RightOf { summand: usize, box_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewriteMove {
    UntwistAtClosingVertex { crossing: NodeId },
    UntwistAtVertex { vertex: NodeId, crossing: NodeId },
    /// `axis` 0 swaps the first two cut edges (counterclockwise), 1 the
    /// second and third. `forward` picks the sense of the half turn.
    FlipSubtangle { ball: BallSpec, axis: u8, forward: bool },
    ReidemeisterI { crossing: NodeId },
    ReidemeisterII { first: NodeId, second: NodeId },
    /// Flip of the boxes after the third box of a summand, then local
    /// reductions.
    RelocateVertexBox3to2 { summand: usize },
    /// Flip of all summands left of `summand`, then local reductions.
    ShiftFirstBoxCrossingsLeft { summand: usize },
}

impl fmt::Display for BallSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallSpec::Nodes(ns) => {
                write!(f, "nodes:")?;
                for (i, n) in ns.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
            BallSpec::Prefix(k) => write!(f, "prefix:{k}"),
            BallSpec::RightOf { summand, box_index } => write!(f, "right:{summand}:{box_index}"),
        }
    }
}

impl fmt::Display for RewriteMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteMove::UntwistAtClosingVertex { crossing } => write!(f, "untwist-w {crossing}"),
            RewriteMove::UntwistAtVertex { vertex, crossing } => write!(f, "untwist {vertex} {crossing}"),
            RewriteMove::FlipSubtangle { ball, axis, forward } => {
                write!(f, "flip {ball} {axis} {}", if *forward { "fwd" } else { "bwd" })
            }
            RewriteMove::ReidemeisterI { crossing } => write!(f, "r1 {crossing}"),
            RewriteMove::ReidemeisterII { first, second } => write!(f, "r2 {first} {second}"),
            RewriteMove::RelocateVertexBox3to2 { summand } => write!(f, "relocate {summand}"),
            RewriteMove::ShiftFirstBoxCrossingsLeft { summand } => write!(f, "shift-left {summand}"),
        }
    }
}

impl FromStr for BallSpec {
    type Err = RewriteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RewriteError::Parse(s.to_string());
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("nodes:") {
            if rest.is_empty() {
                return Ok(BallSpec::Nodes(Vec::new()));
            }
            return Ok(BallSpec::Nodes(rest.split(',').map(num).collect::<Result<_, _>>()?));
        }
        if let Some(rest) = s.strip_prefix("prefix:") {
            return Ok(BallSpec::Prefix(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("right:") {
            let (a, b) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(BallSpec::RightOf { summand: num(a)?, box_index: num(b)? });
        }
        Err(bad())
    }
}

impl FromStr for RewriteMove {
    type Err = RewriteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RewriteError::Parse(s.to_string());
        let t: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| t.get(i).and_then(|x| x.parse::<usize>().ok()).ok_or_else(bad);
        let mv = match t.first().copied() {
            Some("untwist-w") if t.len() == 2 => RewriteMove::UntwistAtClosingVertex { crossing: num(1)? },
            Some("untwist") if t.len() == 3 => RewriteMove::UntwistAtVertex { vertex: num(1)?, crossing: num(2)? },
            Some("flip") if t.len() == 4 => RewriteMove::FlipSubtangle {
                ball: t[1].parse()?,
                axis: match t[2] {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(bad()),
                },
                forward: match t[3] {
                    "fwd" => true,
                    "bwd" => false,
                    _ => return Err(bad()),
                },
            },
            Some("r1") if t.len() == 2 => RewriteMove::ReidemeisterI { crossing: num(1)? },
            Some("r2") if t.len() == 3 => RewriteMove::ReidemeisterII { first: num(1)?, second: num(2)? },
            Some("relocate") if t.len() == 2 => RewriteMove::RelocateVertexBox3to2 { summand: num(1)? },
            Some("shift-left") if t.len() == 2 => RewriteMove::ShiftFirstBoxCrossingsLeft { summand: num(1)? },
            _ => return Err(bad()),
        };
        Ok(mv)
    }
}

/// A replayable sequence of moves.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RewriteTrace {
    pub moves: Vec<RewriteMove>,
}

impl RewriteTrace {
    /// One move per line.
    pub fn to_text(&self) -> String {
        self.moves.iter().map(|m| format!("{m}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<RewriteTrace, RewriteError> {
        let moves = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        Ok(RewriteTrace { moves })
    }

    pub fn replay(&self, d: &Diagram) -> Result<Diagram, RewriteError> {
        let mut out = d.clone();
        for m in &self.moves {
            apply_move(&mut out, m)?;
        }
        Ok(out)
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn over_at(d: &Diagram, n: NodeId, p: u8) -> bool {
    match d.node(n).kind {
        NodeKind::Crossing { over02 } => (p % 2 == 0) == over02,
        NodeKind::Vertex => false,
    }
}

fn link(d: &Diagram, n: NodeId, p: u8) -> Option<(NodeId, u8)> {
    match d.partner(End::Port(n, p % 4)) {
        End::Port(m, q) => Some((m, q)),
        End::Boundary(_) => None,
    }
}

fn straight(n: NodeId, p: u8) -> (NodeId, u8) {
    (n, (p + 2) % 4)
}

/// Kink at `c`: two adjacent ports joined to each other.
fn kink_port(d: &Diagram, c: NodeId) -> Option<u8> {
    (0..4u8).find(|&p| link(d, c, p) == Some((c, (p + 3) % 4)))
}

/// Bigon face between `a` and `b`: returns `x` such that port `x` of `a`
/// meets port `y - 1` of `b` and port `y` of `b` meets port `x - 1` of `a`.
fn bigon(d: &Diagram, a: NodeId, b: NodeId) -> Option<(u8, u8)> {
    if a == b {
        return None;
    }
    for x in 0..4u8 {
        if let Some((m, q)) = link(d, a, x) {
            if m != b {
                continue;
            }
            let y = (q + 1) % 4;
            if link(d, b, y) == Some((a, (x + 3) % 4)) {
                return Some((x, y));
            }
        }
    }
    None
}

pub fn apply_reidemeister_one(d: &mut Diagram, c: NodeId) -> Result<(), RewriteError> {
    if c >= d.node_count() || !d.node(c).is_crossing() || kink_port(d, c).is_none() {
        return Err(RewriteError::NotApplicable(format!("no kink at {c}")));
    }
    d.dissolve(&BTreeSet::from([c]), &straight);
    Ok(())
}

pub fn apply_reidemeister_two(d: &mut Diagram, a: NodeId, b: NodeId) -> Result<(), RewriteError> {
    let na = || RewriteError::NotApplicable(format!("no removable bigon at {a} {b}"));
    if a.max(b) >= d.node_count() || !d.node(a).is_crossing() || !d.node(b).is_crossing() {
        return Err(na());
    }
    let (x, y) = bigon(d, a, b).ok_or_else(na)?;
    // The strand leaving `a` at x enters `b` at y-1.
    if over_at(d, a, x) != over_at(d, b, (y + 3) % 4) {
        return Err(na());
    }
    d.dissolve(&BTreeSet::from([a, b]), &straight);
    Ok(())
}

/// Removes a crossing forming a bigon with a true vertex by twisting the two
/// vertex edges around each other.
pub fn apply_untwist(d: &mut Diagram, v: NodeId, c: NodeId) -> Result<(), RewriteError> {
    let na = || RewriteError::NotApplicable(format!("no bigon between vertex {v} and crossing {c}"));
    if v.max(c) >= d.node_count() || !d.node(v).is_vertex() || !d.node(c).is_crossing() {
        return Err(na());
    }
    let (_, y) = bigon(d, v, c).ok_or_else(na)?;
    // The crossing's bigon ports are y-1 and y; the far ports keep their side.
    let p = (y + 3) % 4;
    let pass = move |n: NodeId, q: u8| {
        let r = (q + 4 - p) % 4;
        (n, (p + 3 - r) % 4)
    };
    d.dissolve(&BTreeSet::from([c]), &pass);
    Ok(())
}

fn resolve_ball(d: &Diagram, spec: &BallSpec) -> BTreeSet<NodeId> {
    match spec {
        BallSpec::Nodes(ns) => ns.iter().copied().filter(|&n| n < d.node_count()).collect(),
        BallSpec::Prefix(k) => (0..d.node_count())
            .filter(|&n| d.node(n).origin.is_some_and(|o| o.summand >= 1 && o.summand <= *k))
            .collect(),
        BallSpec::RightOf { summand, box_index } => (0..d.node_count())
            .filter(|&n| {
                d.node(n)
                    .origin
                    .is_some_and(|o| o.summand == *summand && o.box_index > *box_index)
            })
            .collect(),
    }
}

/// Cut edges of `ball` in counterclockwise order around it, as interior ports.
pub fn ball_boundary(d: &Diagram, ball: &BTreeSet<NodeId>) -> Option<[(NodeId, u8); 4]> {
    if ball.is_empty() {
        return None;
    }
    let mut cuts = Vec::new();
    for &n in ball {
        for p in 0..4u8 {
            match d.partner(End::Port(n, p)) {
                End::Port(m, _) if !ball.contains(&m) => cuts.push((n, p)),
                End::Port(..) => {}
                End::Boundary(_) => return None,
            }
        }
    }
    if cuts.len() != 4 || !connected(d, ball) {
        return None;
    }
    let comp = d.components().into_iter().find(|c| c.contains(ball.iter().next().unwrap()))?;
    let outside: BTreeSet<NodeId> = comp.into_iter().filter(|n| !ball.contains(n)).collect();
    if outside.is_empty() || !connected(d, &outside) {
        return None;
    }
    // The face right of an exiting dart comes back in along the clockwise
    // next cut edge.
    let mut cw = [usize::MAX; 4];
    for (i, &(n, p)) in cuts.iter().enumerate() {
        let (mut a, mut b) = (n, p);
        let mut steps = 0;
        loop {
            let (m, q) = link(d, a, b)?;
            if !ball.contains(&a) && ball.contains(&m) {
                cw[i] = cuts.iter().position(|&c| c == (m, q))?;
                break;
            }
            a = m;
            b = (q + 1) % 4;
            steps += 1;
            if steps > 8 * d.node_count() + 8 {
                return None;
            }
        }
    }
    let mut order = [0usize; 4];
    let mut ccw = [usize::MAX; 4];
    for i in 0..4 {
        ccw[cw[i]] = i;
    }
    let mut k = 0;
    for slot in order.iter_mut() {
        *slot = k;
        k = ccw[k];
        if k == usize::MAX {
            return None;
        }
    }
    if k != 0 || order.iter().collect::<BTreeSet<_>>().len() != 4 {
        return None;
    }
    Some(order.map(|i| cuts[i]))
}

fn connected(d: &Diagram, set: &BTreeSet<NodeId>) -> bool {
    let Some(&s) = set.iter().next() else { return false };
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(n) = stack.pop() {
        for p in 0..4u8 {
            if let Some((m, _)) = link(d, n, p) {
                if set.contains(&m) && seen.insert(m) {
                    stack.push(m);
                }
            }
        }
    }
    seen.len() == set.len()
}

/// Rotates `ball` half a turn. Returns the two crossings added beside it.
pub fn apply_flip(
    d: &mut Diagram,
    ball: &BTreeSet<NodeId>,
    axis: u8,
    forward: bool,
) -> Result<(NodeId, NodeId), RewriteError> {
    let ccw = ball_boundary(d, ball).ok_or_else(|| RewriteError::NotApplicable("not a four-ended ball".into()))?;
    let a = axis as usize % 2;
    let b: Vec<(NodeId, u8)> = (0..4).map(|k| ccw[(k + a) % 4]).collect();
    let ext: Vec<End> = b.iter().map(|&(n, p)| d.partner(End::Port(n, p))).collect();
    let mirror = |p: u8| (4 - p) % 4;
    // Reflect the interior and switch its crossings.
    let old: Vec<(NodeId, [End; 4])> = ball
        .iter()
        .map(|&n| (n, [0u8, 1, 2, 3].map(|p| d.partner(End::Port(n, p)))))
        .collect();
    for (n, links) in &old {
        for p in 0..4u8 {
            let to = match links[p as usize] {
                End::Port(m, q) if ball.contains(&m) => End::Port(m, mirror(q)),
                other => other,
            };
            d.set_partner(End::Port(*n, mirror(p)), to);
        }
        if let NodeKind::Crossing { over02 } = &mut d.node_mut(*n).kind {
            *over02 = !*over02;
        }
    }
    let inner: Vec<End> = b.iter().map(|&(n, p)| End::Port(n, mirror(p))).collect();
    let x = d.add_node(NodeKind::Crossing { over02: forward }, None);
    let y = d.add_node(NodeKind::Crossing { over02: !forward }, None);
    d.connect(End::Port(x, 0), ext[0]);
    d.connect(End::Port(x, 1), ext[1]);
    d.connect(End::Port(x, 2), inner[0]);
    d.connect(End::Port(x, 3), inner[1]);
    d.connect(End::Port(y, 0), inner[2]);
    d.connect(End::Port(y, 1), inner[3]);
    d.connect(End::Port(y, 2), ext[2]);
    d.connect(End::Port(y, 3), ext[3]);
    debug_assert!(d.is_consistent());
    Ok((x, y))
}

pub fn apply_move(d: &mut Diagram, m: &RewriteMove) -> Result<(), RewriteError> {
    match m {
        RewriteMove::UntwistAtClosingVertex { crossing } => {
            let w = d
                .closing_vertex()
                .ok_or_else(|| RewriteError::NotApplicable("no closing vertex".into()))?;
            apply_untwist(d, w, *crossing)
        }
        RewriteMove::UntwistAtVertex { vertex, crossing } => apply_untwist(d, *vertex, *crossing),
        RewriteMove::FlipSubtangle { ball, axis, forward } => {
            let set = resolve_ball(d, ball);
            apply_flip(d, &set, *axis, *forward).map(|_| ())
        }
        RewriteMove::ReidemeisterI { crossing } => apply_reidemeister_one(d, *crossing),
        RewriteMove::ReidemeisterII { first, second } => apply_reidemeister_two(d, *first, *second),
        RewriteMove::RelocateVertexBox3to2 { summand } => {
            best_flip_then_reduce(d, &BallSpec::RightOf { summand: *summand, box_index: 3 })
        }
        RewriteMove::ShiftFirstBoxCrossingsLeft { summand } => {
            if *summand < 2 {
                return Err(RewriteError::NotApplicable("no summands to the left".into()));
            }
            best_flip_then_reduce(d, &BallSpec::Prefix(summand - 1))
        }
    }
}

// Tries the four flips of a ball in a fixed order, reduces each, and keeps the
// first with the fewest crossings.
fn best_flip_then_reduce(d: &mut Diagram, spec: &BallSpec) -> Result<(), RewriteError> {
    let set = resolve_ball(d, spec);
    let mut best: Option<Diagram> = None;
    for axis in 0..2u8 {
        for forward in [true, false] {
            let mut t = d.clone();
            if apply_flip(&mut t, &set, axis, forward).is_err() {
                continue;
            }
            reduce(&mut t, &mut Vec::new());
            if best.as_ref().is_none_or(|b| t.crossing_count() < b.crossing_count()) {
                best = Some(t);
            }
        }
    }
    *d = best.ok_or_else(|| RewriteError::NotApplicable(format!("cannot flip {spec}")))?;
    Ok(())
}

/// The first applicable local reduction, scanning faces in order.
pub fn find_local_reduction(d: &Diagram) -> Option<RewriteMove> {
    for face in d.faces() {
        match face[..] {
            [(c, _)] if d.node(c).is_crossing() => return Some(RewriteMove::ReidemeisterI { crossing: c }),
            [(a, _), (b, _)] if a != b => {
                let (na, nb) = (d.node(a), d.node(b));
                if na.is_crossing() && nb.is_crossing() {
                    let mut t = d.clone();
                    if apply_reidemeister_two(&mut t, a, b).is_ok() {
                        return Some(RewriteMove::ReidemeisterII { first: a.min(b), second: a.max(b) });
                    }
                } else if na.is_vertex() != nb.is_vertex() {
                    let (v, c) = if na.is_vertex() { (a, b) } else { (b, a) };
                    return Some(if Some(v) == d.closing_vertex() {
                        RewriteMove::UntwistAtClosingVertex { crossing: c }
                    } else {
                        RewriteMove::UntwistAtVertex { vertex: v, crossing: c }
                    });
                }
            }
            _ => {}
        }
    }
    None
}

/// Applies local reductions until none is left.
pub fn reduce(d: &mut Diagram, trace: &mut Vec<RewriteMove>) {
    while let Some(m) = find_local_reduction(d) {
        apply_move(d, &m).expect("found move applies");
        trace.push(m);
    }
}

/// Every four-ended ball, from 4-cycles of the dual graph.
pub fn four_ended_balls(d: &Diagram) -> Vec<BTreeSet<NodeId>> {
    let faces = d.faces();
    let mut face_of: HashMap<(NodeId, u8), usize> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        for &dart in f {
            face_of.insert(dart, i);
        }
    }
    // Each edge as (dart, face on one side, face on the other).
    let mut edges = Vec::new();
    let mut adj: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for n in 0..d.node_count() {
        for p in 0..4u8 {
            let Some((m, q)) = link(d, n, p) else { continue };
            if (n, p) > (m, q) {
                continue;
            }
            let (f, g) = (face_of[&(n, p)], face_of[&(m, q)]);
            if f == g {
                continue;
            }
            let id = edges.len();
            edges.push((n, p));
            adj.entry(f).or_default().push((g, id));
            adj.entry(g).or_default().push((f, id));
        }
    }
    let mut cuts: BTreeSet<[usize; 4]> = BTreeSet::new();
    for f0 in 0..faces.len() {
        let empty = Vec::new();
        for &(f1, e1) in adj.get(&f0).unwrap_or(&empty) {
            if f1 <= f0 {
                continue;
            }
            for &(f2, e2) in adj.get(&f1).unwrap_or(&empty) {
                if f2 <= f0 || f2 == f1 || e2 == e1 {
                    continue;
                }
                for &(f3, e3) in adj.get(&f2).unwrap_or(&empty) {
                    if f3 <= f0 || f3 == f1 || f3 == f2 || e3 == e2 || e3 == e1 {
                        continue;
                    }
                    for &(f4, e4) in adj.get(&f3).unwrap_or(&empty) {
                        if f4 != f0 || e4 == e1 || e4 == e2 || e4 == e3 {
                            continue;
                        }
                        let mut k = [e1, e2, e3, e4];
                        k.sort_unstable();
                        cuts.insert(k);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut seen: HashSet<BTreeSet<NodeId>> = HashSet::new();
    for cut in cuts {
        let cut_darts: HashSet<(NodeId, u8)> = cut
            .iter()
            .flat_map(|&e| {
                let (n, p) = edges[e];
                let (m, q) = link(d, n, p).expect("closed");
                [(n, p), (m, q)]
            })
            .collect();
        let (s, _) = edges[cut[0]];
        let mut side = BTreeSet::from([s]);
        let mut stack = vec![s];
        while let Some(n) = stack.pop() {
            for p in 0..4u8 {
                if cut_darts.contains(&(n, p)) {
                    continue;
                }
                if let Some((m, _)) = link(d, n, p) {
                    if side.insert(m) {
                        stack.push(m);
                    }
                }
            }
        }
        let comp = d.components().into_iter().find(|c| c.contains(&s)).unwrap_or_default();
        let other: BTreeSet<NodeId> = comp.into_iter().filter(|n| !side.contains(n)).collect();
        let ball = if other.len() < side.len() && !other.is_empty() { other } else { side };
        if ball_boundary(d, &ball).is_some() && seen.insert(ball.clone()) {
            out.push(ball);
        }
    }
    out
}

/// Canonical string of a diagram up to relabelling nodes and rotating ports.
pub fn canonical_code(d: &Diagram) -> Vec<u32> {
    let mut scratch = Scratch { id: vec![UNSEEN; d.node_count()], off: vec![0; d.node_count()], order: Vec::new() };
    let mut comps: Vec<Vec<u32>> = d
        .components()
        .iter()
        .map(|comp| {
            let mut best: Option<Vec<u32>> = None;
            for &n in comp {
                for p in 0..4u8 {
                    if let Some(code) = code_from(d, n, p, &mut scratch, best.as_deref()) {
                        best = Some(code);
                    }
                }
            }
            best.unwrap_or_default()
        })
        .collect();
    comps.sort();
    let mut out = Vec::new();
    for c in comps {
        out.extend(c);
        out.push(u32::MAX);
    }
    out.push(d.free_loops() as u32);
    out
}

const UNSEEN: u32 = u32::MAX;

struct Scratch {
    id: Vec<u32>,
    off: Vec<u8>,
    order: Vec<NodeId>,
}

/// Code of the component of `n0` read from port `p0`, or `None` as soon as
/// it cannot beat `best`.
fn code_from(d: &Diagram, n0: NodeId, p0: u8, s: &mut Scratch, best: Option<&[u32]>) -> Option<Vec<u32>> {
    for &n in &s.order {
        s.id[n] = UNSEEN;
    }
    s.order.clear();
    s.order.push(n0);
    s.id[n0] = 0;
    s.off[n0] = p0;
    let mut code = Vec::with_capacity(9 * d.node_count());
    // Whether `code` already differs from `best` by being smaller.
    let mut smaller = best.is_none();
    let mut push = |code: &mut Vec<u32>, x: u32| -> bool {
        if !smaller {
            let b = best.expect("compared against best")[code.len()];
            if x > b {
                return false;
            }
            smaller = x < b;
        }
        code.push(x);
        true
    };
    let mut i = 0;
    while i < s.order.len() {
        let n = s.order[i];
        let off = s.off[n];
        let kind = match d.node(n).kind {
            NodeKind::Vertex => 2,
            NodeKind::Crossing { over02 } => (over02 ^ (off % 2 == 1)) as u32,
        };
        if !push(&mut code, kind) {
            return None;
        }
        for r in 0..4u8 {
            let (m, q) = link(d, n, (off + r) % 4).expect("closed diagram");
            if s.id[m] == UNSEEN {
                s.id[m] = s.order.len() as u32;
                s.off[m] = q;
                s.order.push(m);
            }
            let (mid, moff) = (s.id[m], s.off[m]);
            if !push(&mut code, mid) || !push(&mut code, ((q + 4 - moff) % 4) as u32) {
                return None;
            }
        }
        i += 1;
    }
    smaller.then_some(code)
}

fn flip_variants(d: &Diagram) -> Vec<RewriteMove> {
    let mut out = Vec::new();
    for ball in four_ended_balls(d) {
        let nodes: Vec<NodeId> = ball.into_iter().collect();
        for axis in 0..2u8 {
            for forward in [true, false] {
                out.push(RewriteMove::FlipSubtangle { ball: BallSpec::Nodes(nodes.clone()), axis, forward });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchOutcome {
    /// The goal was reached; the trace replays to a diagram meeting it.
    Certified(RewriteTrace),
    Unknown { explored: usize, best_crossings: usize },
}

impl SearchOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, SearchOutcome::Certified(_))
    }
}

/// Greedy local reductions, then breadth-first exploration of flips that do
/// not add crossings, restarting whenever the crossing count drops. Every
/// flip tried counts against `budget`.
pub fn search(d: &Diagram, budget: usize, goal: &dyn Fn(&Diagram) -> bool) -> SearchOutcome {
    let mut trace = Vec::new();
    let mut cur = d.clone();
    reduce(&mut cur, &mut trace);
    let mut explored = 0;
    loop {
        if goal(&cur) {
            return SearchOutcome::Certified(RewriteTrace { moves: trace });
        }
        let level = cur.crossing_count();
        let mut visited: HashSet<Vec<u32>> = HashSet::from([canonical_code(&cur)]);
        let mut queue: VecDeque<(Diagram, Vec<RewriteMove>)> = VecDeque::from([(cur.clone(), Vec::new())]);
        let mut next = None;
        'bfs: while let Some((s, path)) = queue.pop_front() {
            for mv in flip_variants(&s) {
                explored += 1;
                if explored > budget {
                    return SearchOutcome::Unknown { explored: budget, best_crossings: level };
                }
                let mut t = s.clone();
                if apply_move(&mut t, &mv).is_err() {
                    continue;
                }
                let mut moves = path.clone();
                moves.push(mv);
                reduce(&mut t, &mut moves);
                if t.crossing_count() < level || goal(&t) {
                    next = Some((t, moves));
                    break 'bfs;
                }
                if t.crossing_count() == level && visited.insert(canonical_code(&t)) {
                    queue.push_back((t, moves));
                }
            }
        }
        match next {
            Some((t, moves)) => {
                cur = t;
                trace.extend(moves);
            }
            None => return SearchOutcome::Unknown { explored, best_crossings: level },
        }
    }
}

/// Searches for a sequence of moves leaving no crossings.
pub fn planarity_search(d: &Diagram, budget: usize) -> SearchOutcome {
    search(d, budget, &|t: &Diagram| t.crossing_count() == 0)
}

/// Whether some choice of component order, base points and directions meets
/// every crossing first on its over-strand. Such a diagram is an unlink.
pub fn is_descending(d: &Diagram) -> bool {
    if d.vertex_count() > 0 {
        return false;
    }
    // Components as cyclic lists of passages (crossing, entry port).
    let mut used = vec![[false; 2]; d.node_count()];
    let mut comps: Vec<Vec<(NodeId, u8)>> = Vec::new();
    for n in 0..d.node_count() {
        for s in 0..2u8 {
            if used[n][s as usize] {
                continue;
            }
            let mut seq = Vec::new();
            let (mut a, mut p) = (n, s);
            while !used[a][(p % 2) as usize] {
                used[a][(p % 2) as usize] = true;
                seq.push((a, p));
                let Some((m, q)) = link(d, a, (p + 2) % 4) else { return false };
                a = m;
                p = q;
            }
            comps.push(seq);
        }
    }
    let mut comp_of = vec![[usize::MAX; 2]; d.node_count()];
    for (i, c) in comps.iter().enumerate() {
        for &(n, p) in c {
            comp_of[n][(p % 2) as usize] = i;
        }
    }
    // Between components, one must lie entirely above the other.
    let k = comps.len();
    let mut above = vec![vec![false; k]; k];
    for (n, pair) in comp_of.iter().enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let a_over = over_at(d, n, 0);
        let (hi, lo) = if a_over { (a, b) } else { (b, a) };
        above[hi][lo] = true;
    }
    for i in 0..k {
        for j in 0..k {
            if above[i][j] && above[j][i] {
                return false;
            }
        }
    }
    // Acyclic "above" relation.
    let mut indeg: Vec<usize> = (0..k).map(|j| (0..k).filter(|&i| above[i][j]).count()).collect();
    let mut ready: Vec<usize> = (0..k).filter(|&j| indeg[j] == 0).collect();
    let mut done = 0;
    while let Some(i) = ready.pop() {
        done += 1;
        for j in 0..k {
            if above[i][j] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    if done != k {
        return false;
    }
    comps.iter().enumerate().all(|(ci, seq)| {
        let len = seq.len();
        let selfs: Vec<bool> = seq.iter().map(|&(n, _)| comp_of[n][0] == ci && comp_of[n][1] == ci).collect();
        (0..len).any(|start| {
            [true, false].iter().any(|&fwd| {
                let mut met: HashSet<NodeId> = HashSet::new();
                (0..len).all(|i| {
                    let j = if fwd { (start + i) % len } else { (start + len - i) % len };
                    let (n, p) = seq[j];
                    if !selfs[j] || !met.insert(n) {
                        return true;
                    }
                    over_at(d, n, p)
                })
            })
        })
    })
}

/// Certificate that a PD code is an unlink: a descending diagram is reached
/// by local reductions and flips.
pub fn certify_unlink(pd: &PdCode, budget: usize) -> bool {
    let Ok(d) = pd.to_diagram() else { return false };
    search(&d, budget, &|t: &Diagram| t.crossing_count() == 0 || is_descending(t)).is_certified()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_tangle_diagram, numerator_closure, vertex_closure};
    use crate::invariants::jones;
    use crate::tangle_core::BoxVector;

    fn bv(v: &[i64]) -> BoxVector {
        BoxVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn move_text_round_trip() {
        let trace = RewriteTrace {
            moves: vec![
                RewriteMove::UntwistAtClosingVertex { crossing: 3 },
                RewriteMove::UntwistAtVertex { vertex: 1, crossing: 2 },
                RewriteMove::FlipSubtangle { ball: BallSpec::Nodes(vec![0, 4]), axis: 1, forward: false },
                RewriteMove::FlipSubtangle { ball: BallSpec::RightOf { summand: 2, box_index: 3 }, axis: 0, forward: true },
                RewriteMove::ReidemeisterI { crossing: 0 },
                RewriteMove::ReidemeisterII { first: 0, second: 5 },
                RewriteMove::RelocateVertexBox3to2 { summand: 2 },
                RewriteMove::ShiftFirstBoxCrossingsLeft { summand: 3 },
            ],
        };
        assert_eq!(RewriteTrace::parse(&trace.to_text()).unwrap(), trace);
        assert!(RewriteTrace::parse("twist 3").is_err());
    }

    #[test]
    fn rational_closures_are_planar() {
        for b in BoxVector::catalog(5) {
            let d = vertex_closure(&build_tangle_diagram(&b)).unwrap();
            match planarity_search(&d, 200) {
                SearchOutcome::Certified(trace) => {
                    let end = trace.replay(&d).unwrap();
                    assert_eq!(end.crossing_count(), 0, "{b}");
                    assert!(end.satisfies_euler());
                }
                other => panic!("{b}: {other:?}"),
            }
        }
    }

    #[test]
    fn flips_preserve_jones() {
        let d = numerator_closure(&crate::diagram::compose_sum(
            &build_tangle_diagram(&bv(&[2, 3])),
            &build_tangle_diagram(&bv(&[1, 2])),
        ));
        let pd = |d: &Diagram| {
            let g = crate::diagram::SpatialGraph::of(d).unwrap();
            let all = crate::diagram::ConstituentLink { cycles: vec![], circles: (0..g.circles.len()).collect() };
            crate::diagram::extract_pd(d, &g, &all)
        };
        let j0 = jones(&pd(&d)).unwrap();
        let balls = four_ended_balls(&d);
        assert!(!balls.is_empty());
        for ball in balls {
            for axis in 0..2 {
                for forward in [true, false] {
                    let mut t = d.clone();
                    apply_flip(&mut t, &ball, axis, forward).unwrap();
                    assert!(t.satisfies_euler());
                    assert_eq!(jones(&pd(&t)).unwrap(), j0, "{ball:?} {axis} {forward}");
                }
            }
        }
    }

    #[test]
    fn descending_detection() {
        let kink = PdCode { crossings: vec![[1, 1, 2, 2]], components: 1 };
        assert!(is_descending(&kink.to_diagram().unwrap()));
        let trefoil = PdCode { crossings: vec![[1, 4, 2, 5], [3, 6, 4, 1], [5, 2, 6, 3]], components: 1 };
        assert!(!is_descending(&trefoil.to_diagram().unwrap()));
        let hopf = PdCode { crossings: vec![[1, 3, 2, 4], [3, 1, 4, 2]], components: 2 };
        assert!(!is_descending(&hopf.to_diagram().unwrap()));
    }

    #[test]
    fn canonical_code_ignores_labels() {
        let a = vertex_closure(&build_tangle_diagram(&bv(&[2, 3]))).unwrap();
        let mut b = a.clone();
        b.rotated_over();
        b.rotated_over();
        assert_eq!(canonical_code(&a), canonical_code(&b));
    }
}
