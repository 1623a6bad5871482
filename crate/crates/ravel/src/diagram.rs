//! Combinatorial diagrams: crossings and 4-valent true vertices glued by an
//! explicit rotation system.
//!
//! Ports of every node are numbered 0..4 counterclockwise. For a crossing the
//! strands run 0-2 and 1-3. In a tangle box the ports face NW, SW, SE, NE.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tangle_core::{
    parity_of_pairing, AlgebraicExpr, BoxVector, Corner, MontesinosPresentation, Parity, RowPair, Summand,
};

pub type NodeId = usize;

/// Default cap on the number of constituent links enumerated.
pub const CONSTITUENT_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("vertex closure needs an open diagram with four endpoints")]
    NotFourEndpoints,
    #[error("operation needs a closed diagram")]
    NotClosed,
    #[error("more than {0} constituent links")]
    TooManyConstituents(usize),
    #[error("malformed PD code: {0}")]
    BadPd(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum End {
    Port(NodeId, u8),
    Boundary(Corner),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// `over02` is true when the strand through ports 0 and 2 is over.
    Crossing { over02: bool },
    Vertex,
}

/// Where a node came from in a Montesinos layout. All indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub summand: usize,
    pub box_index: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub origin: Option<Origin>,
}

impl Node {
    pub fn is_vertex(&self) -> bool {
        self.kind == NodeKind::Vertex
    }

    pub fn is_crossing(&self) -> bool {
        !self.is_vertex()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    nodes: Vec<Node>,
    links: Vec<[End; 4]>,
    boundary: Option<[End; 4]>,
    free_loops: usize,
    closing_vertex: Option<NodeId>,
}

pub(crate) fn port(n: NodeId, p: usize) -> End {
    End::Port(n, (p % 4) as u8)
}

impl Diagram {
    /// Open diagram with no nodes and the given boundary pairing.
    pub fn trivial_tangle(pairs: [(Corner, Corner); 2]) -> Diagram {
        let mut b = [End::Boundary(Corner::NW); 4];
        for (x, y) in pairs {
            b[x.index()] = End::Boundary(y);
            b[y.index()] = End::Boundary(x);
        }
        Diagram {
            nodes: Vec::new(),
            links: Vec::new(),
            boundary: Some(b),
            free_loops: 0,
            closing_vertex: None,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n]
    }

    pub fn node_mut(&mut self, n: NodeId) -> &mut Node {
        &mut self.nodes[n]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn crossing_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_crossing()).count()
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_vertex()).count()
    }

    pub fn free_loops(&self) -> usize {
        self.free_loops
    }

    pub fn closing_vertex(&self) -> Option<NodeId> {
        self.closing_vertex
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_none()
    }

    pub fn boundary(&self) -> Option<&[End; 4]> {
        self.boundary.as_ref()
    }

    pub fn partner(&self, e: End) -> End {
        match e {
            End::Port(n, p) => self.links[n][p as usize],
            End::Boundary(c) => self.boundary.expect("open diagram")[c.index()],
        }
    }

    pub(crate) fn set_partner(&mut self, e: End, to: End) {
        match e {
            End::Port(n, p) => self.links[n][p as usize] = to,
            End::Boundary(c) => self.boundary.as_mut().expect("open diagram")[c.index()] = to,
        }
    }

    pub(crate) fn connect(&mut self, a: End, b: End) {
        self.set_partner(a, b);
        self.set_partner(b, a);
    }

    pub(crate) fn add_node(&mut self, kind: NodeKind, origin: Option<Origin>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { kind, origin });
        self.links.push([End::Port(id, 0); 4]);
        id
    }

    /// Checks that the gluing is an involution on ends.
    pub fn is_consistent(&self) -> bool {
        for n in 0..self.nodes.len() {
            for p in 0..4 {
                let e = port(n, p);
                let f = self.partner(e);
                if let End::Boundary(_) = f {
                    if self.boundary.is_none() {
                        return false;
                    }
                }
                if f == e || self.partner(f) != e {
                    return false;
                }
            }
        }
        if let Some(b) = self.boundary {
            for c in Corner::ALL {
                let f = b[c.index()];
                if f == End::Boundary(c) || self.partner(f) != End::Boundary(c) {
                    return false;
                }
            }
        }
        true
    }

    /// Removes the nodes in `gone`, joining their outside neighbours. Each
    /// removed port hands the curve on to `pass(port)`, another removed port.
    /// Closed curves left entirely inside the removed set become free loops.
    pub(crate) fn dissolve(&mut self, gone: &BTreeSet<NodeId>, pass: &dyn Fn(NodeId, u8) -> (NodeId, u8)) {
        let removed = |e: End| matches!(e, End::Port(n, _) if gone.contains(&n));
        let mut visited: BTreeSet<(NodeId, u8)> = BTreeSet::new();
        let mut joins = Vec::new();
        for &n in gone {
            for p in 0..4u8 {
                if visited.contains(&(n, p)) {
                    continue;
                }
                let x = self.partner(End::Port(n, p));
                if removed(x) {
                    continue;
                }
                visited.insert((n, p));
                let mut cur = (n, p);
                loop {
                    let nxt = pass(cur.0, cur.1);
                    visited.insert(nxt);
                    let y = self.partner(End::Port(nxt.0, nxt.1));
                    match y {
                        End::Port(m, q) if gone.contains(&m) => {
                            visited.insert((m, q));
                            cur = (m, q);
                        }
                        _ => {
                            joins.push((x, y));
                            break;
                        }
                    }
                }
            }
        }
        let mut loops = 0;
        for &n in gone {
            for p in 0..4u8 {
                if visited.contains(&(n, p)) {
                    continue;
                }
                loops += 1;
                let mut cur = (n, p);
                while visited.insert(cur) {
                    let nxt = pass(cur.0, cur.1);
                    visited.insert(nxt);
                    match self.partner(End::Port(nxt.0, nxt.1)) {
                        End::Port(m, q) => cur = (m, q),
                        End::Boundary(_) => unreachable!("boundary inside removed set"),
                    }
                }
            }
        }
        for (x, y) in joins {
            self.connect(x, y);
        }
        self.free_loops += loops;
        self.remove_nodes(gone);
    }

    fn remove_nodes(&mut self, gone: &BTreeSet<NodeId>) {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (i, slot) in map.iter_mut().enumerate() {
            if !gone.contains(&i) {
                *slot = next;
                next += 1;
            }
        }
        let remap = |e: End| match e {
            End::Port(n, p) => End::Port(map[n], p),
            b => b,
        };
        let mut nodes = Vec::with_capacity(next);
        let mut links = Vec::with_capacity(next);
        for i in 0..self.nodes.len() {
            if map[i] != usize::MAX {
                nodes.push(self.nodes[i]);
                links.push(self.links[i].map(remap));
            }
        }
        self.nodes = nodes;
        self.links = links;
        if let Some(b) = self.boundary.as_mut() {
            *b = b.map(remap);
        }
        self.closing_vertex = self.closing_vertex.and_then(|w| (map[w] != usize::MAX).then_some(map[w]));
    }

    /// Face orbits of darts `(node, port)`; the dart after `(n, p)` leaves the
    /// node reached through `p` by the port following the arrival port
    /// counterclockwise. Only meaningful for closed diagrams.
    pub fn faces(&self) -> Vec<Vec<(NodeId, u8)>> {
        let mut seen = vec![[false; 4]; self.nodes.len()];
        let mut faces = Vec::new();
        for n in 0..self.nodes.len() {
            for p in 0..4u8 {
                if seen[n][p as usize] {
                    continue;
                }
                let mut face = Vec::new();
                let (mut a, mut b) = (n, p);
                while !seen[a][b as usize] {
                    seen[a][b as usize] = true;
                    face.push((a, b));
                    match self.links[a][b as usize] {
                        End::Port(m, q) => {
                            a = m;
                            b = (q + 1) % 4;
                        }
                        End::Boundary(_) => break,
                    }
                }
                faces.push(face);
            }
        }
        faces
    }

    /// Connected components of the node graph, as sorted node lists.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut comp = vec![usize::MAX; self.nodes.len()];
        let mut out = Vec::new();
        for s in 0..self.nodes.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![s];
            comp[s] = id;
            let mut members = Vec::new();
            while let Some(n) = stack.pop() {
                members.push(n);
                for e in self.links[n] {
                    if let End::Port(m, _) = e {
                        if comp[m] == usize::MAX {
                            comp[m] = id;
                            stack.push(m);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Euler relation `V - E + F = 1 + C` for closed diagrams, and for the
    /// vertex closure of open ones.
    pub fn satisfies_euler(&self) -> bool {
        if !self.is_closed() {
            return match vertex_closure(self) {
                Ok(d) => d.satisfies_euler(),
                Err(_) => false,
            };
        }
        let v = self.nodes.len() as i64;
        let e = 2 * v;
        let f = self.faces().len() as i64;
        let c = self.components().len() as i64;
        v - e + f == 1 + c
    }

    /// Reflects the diagram in the plane and switches every crossing, which is
    /// a rotation of space.
    pub fn rotated_over(&mut self) {
        let flip = |e: End| match e {
            End::Port(n, p) => End::Port(n, (4 - p) % 4),
            b => b,
        };
        let links: Vec<[End; 4]> = self
            .links
            .iter()
            .map(|l| {
                let mut out = [End::Port(0, 0); 4];
                for p in 0..4 {
                    out[(4 - p) % 4] = flip(l[p]);
                }
                out
            })
            .collect();
        self.links = links;
        for n in &mut self.nodes {
            if let NodeKind::Crossing { over02 } = &mut n.kind {
                *over02 = !*over02;
            }
        }
    }
}

/// One slot of a box: a crossing or a true vertex replacing one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Crossing,
    Vertex,
}

/// A box of a 3-braid layout: its twist sign and slot contents, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidBox {
    pub sign: i64,
    pub slots: Vec<Slot>,
}

/// Whether the strand from the upper left to the lower right passes over in
/// box `index` (from 1) with twist sign `sign`.
pub fn braid_over02(sign: i64, index: usize) -> bool {
    (sign < 0) ^ (index % 2 == 0)
}

/// Builds a 3-braid diagram. Over/under choices alternate between odd and even
/// boxes so equal-sign boxes give an alternating diagram.
pub fn build_braid(boxes: &[BraidBox], cap: RowPair, summand: usize) -> Diagram {
    let mut d = Diagram {
        nodes: Vec::new(),
        links: Vec::new(),
        boundary: Some([End::Boundary(Corner::NW); 4]),
        free_loops: 0,
        closing_vertex: None,
    };
    let mut cur = [
        End::Boundary(Corner::NW),
        End::Boundary(Corner::NW),
        End::Boundary(Corner::SW),
        End::Boundary(Corner::SE),
    ];
    for (i, bx) in boxes.iter().enumerate() {
        let index = i + 1;
        let pair = RowPair::of_box(index);
        let (top, bot) = pair.rows();
        for (s, slot) in bx.slots.iter().enumerate() {
            let kind = match slot {
                Slot::Crossing => NodeKind::Crossing {
                    over02: braid_over02(bx.sign, index),
                },
                Slot::Vertex => NodeKind::Vertex,
            };
            let origin = Origin {
                summand,
                box_index: index,
                slot: s + 1,
            };
            let n = d.add_node(kind, Some(origin));
            d.connect(cur[top], port(n, 0));
            d.connect(cur[bot], port(n, 1));
            cur[top] = port(n, 3);
            cur[bot] = port(n, 2);
        }
    }
    let (a, b) = cap.rows();
    d.connect(cur[a], cur[b]);
    d.connect(cur[cap.outside()], End::Boundary(Corner::NE));
    d
}

pub fn braid_boxes(b: &BoxVector) -> Vec<BraidBox> {
    b.boxes()
        .iter()
        .map(|&a| BraidBox {
            sign: if a < 0 { -1 } else { 1 },
            slots: vec![Slot::Crossing; a.unsigned_abs() as usize],
        })
        .collect()
}

pub fn build_tangle_diagram(b: &BoxVector) -> Diagram {
    build_braid(&braid_boxes(b), b.cap_pair(), 0)
}

pub fn build_summand_diagram(t: &Summand, summand: usize) -> Diagram {
    match t {
        Summand::Rational(b) => build_braid(&braid_boxes(b), b.cap_pair(), summand),
        Summand::Infinity => Diagram::trivial_tangle([(Corner::NW, Corner::SW), (Corner::NE, Corner::SE)]),
    }
}

type CornerRef = (usize, Corner);

/// Glues open pieces along pairs of corners. `outer[c]` names the piece corner
/// that becomes corner `c` of the result; an empty `outer` gives a closed
/// diagram.
fn splice(pieces: &[&Diagram], outer: &[CornerRef], glue: &[(CornerRef, CornerRef)]) -> Diagram {
    enum Role {
        Outer(Corner),
        Glued(CornerRef),
    }
    let mut offsets = Vec::with_capacity(pieces.len());
    let mut total = 0;
    for p in pieces {
        offsets.push(total);
        total += p.nodes.len();
    }
    let mut role: HashMap<CornerRef, Role> = HashMap::new();
    for (i, &r) in outer.iter().enumerate() {
        role.insert(r, Role::Outer(Corner::from_index(i)));
    }
    for &(a, b) in glue {
        role.insert(a, Role::Glued(b));
        role.insert(b, Role::Glued(a));
    }
    enum Tmp {
        Port(NodeId, u8),
        Corner(CornerRef),
    }
    let lift = |piece: usize, e: End| match e {
        End::Port(n, p) => Tmp::Port(n + offsets[piece], p),
        End::Boundary(c) => Tmp::Corner((piece, c)),
    };
    let mut visited: BTreeSet<CornerRef> = BTreeSet::new();
    let mut resolve = |mut t: Tmp| -> End {
        loop {
            match t {
                Tmp::Port(n, p) => return End::Port(n, p),
                Tmp::Corner(r) => match role.get(&r).expect("every corner is used") {
                    Role::Outer(c) => return End::Boundary(*c),
                    Role::Glued(o) => {
                        visited.insert(r);
                        visited.insert(*o);
                        let inner = pieces[o.0].boundary.expect("open piece")[o.1.index()];
                        t = lift(o.0, inner);
                    }
                },
            }
        }
    };
    let mut nodes = Vec::with_capacity(total);
    let mut links = Vec::with_capacity(total);
    let mut closing = None;
    let mut free_loops = 0;
    for (i, p) in pieces.iter().enumerate() {
        free_loops += p.free_loops;
        if let Some(w) = p.closing_vertex {
            closing = Some(w + offsets[i]);
        }
        for n in 0..p.nodes.len() {
            nodes.push(p.nodes[n]);
            links.push(p.links[n].map(|e| resolve(lift(i, e))));
        }
    }
    let boundary = if outer.is_empty() {
        None
    } else {
        let mut b = [End::Boundary(Corner::NW); 4];
        for (c, &(piece, corner)) in outer.iter().enumerate() {
            let inner = pieces[piece].boundary.expect("open piece")[corner.index()];
            b[c] = resolve(lift(piece, inner));
        }
        Some(b)
    };
    // Glued corners never reached from a port or an outer corner lie on
    // closed curves without nodes.
    for &(a, _) in glue {
        if visited.contains(&a) {
            continue;
        }
        free_loops += 1;
        let mut r = a;
        while visited.insert(r) {
            let Some(Role::Glued(o)) = role.get(&r) else { break };
            visited.insert(*o);
            let inner = pieces[o.0].boundary.expect("open piece")[o.1.index()];
            match inner {
                End::Boundary(c) => r = (o.0, c),
                End::Port(..) => break,
            }
        }
    }
    Diagram {
        nodes,
        links,
        boundary,
        free_loops,
        closing_vertex: closing,
    }
}

/// `a + b`: `a` on the left, `b` on the right.
pub fn compose_sum(a: &Diagram, b: &Diagram) -> Diagram {
    assert!(!a.is_closed() && !b.is_closed(), "sum of open diagrams");
    splice(
        &[a, b],
        &[(0, Corner::NW), (0, Corner::SW), (1, Corner::SE), (1, Corner::NE)],
        &[((0, Corner::NE), (1, Corner::NW)), ((0, Corner::SE), (1, Corner::SW))],
    )
}

/// `a * b`: `a` above `b`.
pub fn compose_product(a: &Diagram, b: &Diagram) -> Diagram {
    assert!(!a.is_closed() && !b.is_closed(), "product of open diagrams");
    splice(
        &[a, b],
        &[(0, Corner::NW), (1, Corner::SW), (1, Corner::SE), (0, Corner::NE)],
        &[((0, Corner::SW), (1, Corner::NW)), ((0, Corner::SE), (1, Corner::NE))],
    )
}

fn close_with(d: &Diagram, cap: &Diagram) -> Diagram {
    let glue: Vec<_> = Corner::ALL.iter().map(|&c| ((0, c), (1, c))).collect();
    splice(&[d, cap], &[], &glue)
}

/// Joins the four endpoints at a new true vertex `w`.
pub fn vertex_closure(d: &Diagram) -> Result<Diagram, DiagramError> {
    if d.is_closed() {
        return Err(DiagramError::NotFourEndpoints);
    }
    // Seen from outside the tangle the corners appear in reverse order.
    let order = [Corner::NW, Corner::NE, Corner::SE, Corner::SW];
    let mut links = [End::Boundary(Corner::NW); 4];
    let mut boundary = [End::Port(0, 0); 4];
    for (p, c) in order.iter().enumerate() {
        links[p] = End::Boundary(*c);
        boundary[c.index()] = port(0, p);
    }
    let w = Diagram {
        nodes: vec![Node { kind: NodeKind::Vertex, origin: None }],
        links: vec![links],
        boundary: Some(boundary),
        free_loops: 0,
        closing_vertex: Some(0),
    };
    let mut out = close_with(d, &w);
    if out.closing_vertex.is_none() {
        out.closing_vertex = Some(out.nodes.len() - 1);
    }
    Ok(out)
}

/// `N(T)`: NW joined to NE and SW to SE.
pub fn numerator_closure(d: &Diagram) -> Diagram {
    close_with(d, &Diagram::trivial_tangle([(Corner::NW, Corner::NE), (Corner::SW, Corner::SE)]))
}

/// `D(T)`: NW joined to SW and NE to SE.
pub fn denominator_closure(d: &Diagram) -> Diagram {
    close_with(d, &Diagram::trivial_tangle([(Corner::NW, Corner::SW), (Corner::NE, Corner::SE)]))
}

/// Diagram of the Montesinos sum `T_1 + ... + T_n`, nodes tagged by summand.
pub fn montesinos_diagram(m: &MontesinosPresentation) -> Diagram {
    let mut parts = m
        .summands
        .iter()
        .enumerate()
        .map(|(i, t)| build_summand_diagram(t, i + 1));
    let first = parts.next().expect("at least one summand");
    parts.fold(first, |acc, d| compose_sum(&acc, &d))
}

/// Diagram of an algebraic expression; leaves are tagged 1, 2, ... from the
/// left of the written expression.
pub fn algebraic_diagram(e: &AlgebraicExpr) -> Diagram {
    fn go(e: &AlgebraicExpr, next: &mut usize) -> Diagram {
        match e {
            AlgebraicExpr::Leaf(t) => {
                *next += 1;
                build_summand_diagram(t, *next)
            }
            AlgebraicExpr::Sum(a, b) => {
                let l = go(a, next);
                compose_sum(&l, &go(b, next))
            }
            AlgebraicExpr::Product(a, b) => {
                let l = go(a, next);
                compose_product(&l, &go(b, next))
            }
        }
    }
    go(e, &mut 0)
}

/// The strands of an open diagram. True vertices are passed straight through,
/// as the crossing they replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandPartition {
    pub pairs: [(Corner, Corner); 2],
    /// Node passages `(node, entry port)` of each strand, starting at `pairs[i].0`.
    pub paths: [Vec<(NodeId, u8)>; 2],
    pub closed_components: usize,
}

impl StrandPartition {
    pub fn partner(&self, c: Corner) -> Corner {
        for (a, b) in self.pairs {
            if a == c {
                return b;
            }
            if b == c {
                return a;
            }
        }
        unreachable!("every corner is on a strand")
    }

    pub fn parity(&self) -> Parity {
        parity_of_pairing(self.partner(Corner::NW))
    }
}

pub fn trace_strands(d: &Diagram) -> Result<StrandPartition, DiagramError> {
    let boundary = d.boundary.ok_or(DiagramError::NotFourEndpoints)?;
    let mut used = vec![[false; 2]; d.nodes.len()];
    let mut pairs = Vec::new();
    let mut paths = Vec::new();
    let mut done = [false; 4];
    for c in Corner::ALL {
        if done[c.index()] {
            continue;
        }
        let mut path = Vec::new();
        let mut e = boundary[c.index()];
        let end = loop {
            match e {
                End::Boundary(c2) => break c2,
                End::Port(n, p) => {
                    used[n][(p % 2) as usize] = true;
                    path.push((n, p));
                    e = d.links[n][((p + 2) % 4) as usize];
                }
            }
        };
        done[c.index()] = true;
        done[end.index()] = true;
        pairs.push((c, end));
        paths.push(path);
    }
    let mut closed = d.free_loops;
    for n in 0..d.nodes.len() {
        for s in 0..2u8 {
            if used[n][s as usize] {
                continue;
            }
            closed += 1;
            let (mut a, mut p) = (n, s);
            while !used[a][(p % 2) as usize] {
                used[a][(p % 2) as usize] = true;
                match d.links[a][((p + 2) % 4) as usize] {
                    End::Port(m, q) => {
                        a = m;
                        p = q;
                    }
                    End::Boundary(_) => unreachable!("closed strand"),
                }
            }
        }
    }
    let p1 = paths.pop().expect("two strands");
    let p0 = paths.pop().expect("two strands");
    Ok(StrandPartition {
        pairs: [pairs[0], pairs[1]],
        paths: [p0, p1],
        closed_components: closed,
    })
}

/// An edge of the true-vertex graph: a path between vertex ports through
/// crossings. `passages` lists `(crossing, entry port)` from `ends[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub ends: [(NodeId, u8); 2],
    pub passages: Vec<(NodeId, u8)>,
}

/// A closed component without true vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circle {
    pub passages: Vec<(NodeId, u8)>,
}

/// A simple cycle: edges with the direction of traversal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub edges: Vec<(usize, bool)>,
}

impl Cycle {
    pub fn edge_set(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.0).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGraph {
    pub vertices: Vec<NodeId>,
    pub edges: Vec<GraphEdge>,
    pub circles: Vec<Circle>,
    pub cycles: Vec<Cycle>,
}

/// A union of pairwise disjoint cycles and circles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstituentLink {
    pub cycles: Vec<usize>,
    pub circles: Vec<usize>,
}

impl SpatialGraph {
    pub fn of(d: &Diagram) -> Result<SpatialGraph, DiagramError> {
        if !d.is_closed() {
            return Err(DiagramError::NotClosed);
        }
        let vertices: Vec<NodeId> = (0..d.nodes.len()).filter(|&n| d.nodes[n].is_vertex()).collect();
        let mut port_done = vec![[false; 4]; d.nodes.len()];
        let mut used = vec![[false; 2]; d.nodes.len()];
        let mut edges = Vec::new();
        for &v in &vertices {
            for p in 0..4u8 {
                if port_done[v][p as usize] {
                    continue;
                }
                port_done[v][p as usize] = true;
                let mut passages = Vec::new();
                let mut e = d.links[v][p as usize];
                let end = loop {
                    let End::Port(n, q) = e else { unreachable!("closed diagram") };
                    if d.nodes[n].is_vertex() {
                        port_done[n][q as usize] = true;
                        break (n, q);
                    }
                    used[n][(q % 2) as usize] = true;
                    passages.push((n, q));
                    e = d.links[n][((q + 2) % 4) as usize];
                };
                edges.push(GraphEdge {
                    ends: [(v, p), end],
                    passages,
                });
            }
        }
        let mut circles: Vec<Circle> = Vec::new();
        for n in 0..d.nodes.len() {
            if d.nodes[n].is_vertex() {
                continue;
            }
            for s in 0..2u8 {
                if used[n][s as usize] {
                    continue;
                }
                let mut passages = Vec::new();
                let (mut a, mut p) = (n, s);
                while !used[a][(p % 2) as usize] {
                    used[a][(p % 2) as usize] = true;
                    passages.push((a, p));
                    let End::Port(m, q) = d.links[a][((p + 2) % 4) as usize] else {
                        unreachable!("closed diagram")
                    };
                    a = m;
                    p = q;
                }
                circles.push(Circle { passages });
            }
        }
        for _ in 0..d.free_loops {
            circles.push(Circle { passages: Vec::new() });
        }
        let cycles = simple_cycles(&vertices, &edges);
        Ok(SpatialGraph {
            vertices,
            edges,
            circles,
            cycles,
        })
    }

    pub fn cycle_vertices(&self, c: &Cycle) -> BTreeSet<NodeId> {
        c.edges
            .iter()
            .flat_map(|&(e, _)| self.edges[e].ends.iter().map(|x| x.0))
            .collect()
    }

    /// All non-empty unions of pairwise vertex-disjoint cycles and circles.
    pub fn constituent_links(&self, cap: usize) -> Result<Vec<ConstituentLink>, DiagramError> {
        let verts: Vec<BTreeSet<NodeId>> = self.cycles.iter().map(|c| self.cycle_vertices(c)).collect();
        let mut families: Vec<Vec<usize>> = Vec::new();
        fn grow(
            start: usize,
            chosen: &mut Vec<usize>,
            taken: &mut BTreeSet<NodeId>,
            verts: &[BTreeSet<NodeId>],
            out: &mut Vec<Vec<usize>>,
            cap: usize,
        ) -> bool {
            out.push(chosen.clone());
            if out.len() > cap {
                return false;
            }
            for i in start..verts.len() {
                if verts[i].is_disjoint(taken) {
                    chosen.push(i);
                    taken.extend(verts[i].iter().copied());
                    let ok = grow(i + 1, chosen, taken, verts, out, cap);
                    for v in &verts[i] {
                        taken.remove(v);
                    }
                    chosen.pop();
                    if !ok {
                        return false;
                    }
                }
            }
            true
        }
        if !grow(0, &mut Vec::new(), &mut BTreeSet::new(), &verts, &mut families, cap) {
            return Err(DiagramError::TooManyConstituents(cap));
        }
        let k = self.circles.len();
        if k >= 32 || families.len().saturating_mul(1usize << k) > cap + 1 {
            return Err(DiagramError::TooManyConstituents(cap));
        }
        let mut out = Vec::new();
        for fam in &families {
            for mask in 0..(1usize << k) {
                if fam.is_empty() && mask == 0 {
                    continue;
                }
                let circles = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                out.push(ConstituentLink {
                    cycles: fam.clone(),
                    circles,
                });
            }
        }
        Ok(out)
    }
}

fn simple_cycles(vertices: &[NodeId], edges: &[GraphEdge]) -> Vec<Cycle> {
    let mut incident: HashMap<NodeId, Vec<(usize, bool)>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        incident.entry(e.ends[0].0).or_default().push((i, true));
        incident.entry(e.ends[1].0).or_default().push((i, false));
    }
    let other = |e: usize, fwd: bool| if fwd { edges[e].ends[1].0 } else { edges[e].ends[0].0 };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    for &s in &sorted {
        let mut path: Vec<(usize, bool)> = Vec::new();
        let mut on_path: BTreeSet<NodeId> = BTreeSet::from([s]);
        #[allow(clippy::too_many_arguments)]
        fn dfs(
            s: NodeId,
            u: NodeId,
            path: &mut Vec<(usize, bool)>,
            on_path: &mut BTreeSet<NodeId>,
            incident: &HashMap<NodeId, Vec<(usize, bool)>>,
            other: &dyn Fn(usize, bool) -> NodeId,
            seen: &mut BTreeSet<Vec<usize>>,
            out: &mut Vec<Cycle>,
        ) {
            for &(e, fwd) in incident.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                if path.iter().any(|&(f, _)| f == e) {
                    continue;
                }
                let x = other(e, fwd);
                if x == s {
                    path.push((e, fwd));
                    let mut key: Vec<usize> = path.iter().map(|p| p.0).collect();
                    key.sort_unstable();
                    if seen.insert(key) {
                        out.push(Cycle { edges: path.clone() });
                    }
                    path.pop();
                } else if x > s && !on_path.contains(&x) {
                    path.push((e, fwd));
                    on_path.insert(x);
                    dfs(s, x, path, on_path, incident, other, seen, out);
                    on_path.remove(&x);
                    path.pop();
                }
            }
        }
        dfs(s, s, &mut path, &mut on_path, &incident, &other, &mut seen, &mut out);
    }
    out
}

/// Planar diagram code. Each crossing lists its four arc labels
/// counterclockwise, starting with the incoming under-strand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PdCode {
    pub crossings: Vec<[u32; 4]>,
    /// Total number of components, including those without crossings.
    pub components: usize,
}

impl PdCode {
    pub fn unlink(components: usize) -> PdCode {
        PdCode {
            crossings: Vec::new(),
            components,
        }
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    /// Components that pass through at least one crossing.
    pub fn traced_components(&self) -> usize {
        let mut labels: Vec<u32> = self.crossings.iter().flatten().copied().collect();
        labels.sort_unstable();
        labels.dedup();
        let idx: HashMap<u32, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let mut parent: Vec<usize> = (0..labels.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        for x in &self.crossings {
            for (a, b) in [(x[0], x[2]), (x[1], x[3])] {
                let (ra, rb) = (find(&mut parent, idx[&a]), find(&mut parent, idx[&b]));
                parent[ra] = rb;
            }
        }
        (0..labels.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Every label occurs exactly twice.
    pub fn validate(&self) -> Result<(), DiagramError> {
        let mut count: HashMap<u32, usize> = HashMap::new();
        for x in &self.crossings {
            for &l in x {
                *count.entry(l).or_default() += 1;
            }
        }
        if let Some((l, _)) = count.iter().find(|(_, &c)| c != 2) {
            return Err(DiagramError::BadPd(format!("label {l} does not occur exactly twice")));
        }
        if self.traced_components() > self.components {
            return Err(DiagramError::BadPd("component count too small".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("components {}\n", self.components);
        for x in &self.crossings {
            s.push_str(&format!("X {} {} {} {}\n", x[0], x[1], x[2], x[3]));
        }
        s
    }

    pub fn parse(text: &str) -> Result<PdCode, DiagramError> {
        let mut crossings = Vec::new();
        let mut components = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let bad = |m: &str| DiagramError::BadPd(format!("line {}: {m}", i + 1));
            match it.next() {
                Some("X") => {
                    let v: Vec<u32> = it
                        .map(|t| t.parse::<u32>().map_err(|_| bad("bad label")))
                        .collect::<Result<_, _>>()?;
                    if v.len() != 4 {
                        return Err(bad("expected four labels"));
                    }
                    crossings.push([v[0], v[1], v[2], v[3]]);
                }
                Some("components") => {
                    let c = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad count"))?;
                    components = Some(c);
                }
                _ => return Err(bad("expected `X a b c d` or `components n`")),
            }
        }
        let mut pd = PdCode {
            crossings,
            components: 0,
        };
        pd.components = components.unwrap_or_else(|| pd.traced_components());
        pd.validate()?;
        Ok(pd)
    }

    /// Rotation-system diagram of the code. Port 0 of each crossing carries
    /// the incoming under-strand.
    pub fn to_diagram(&self) -> Result<Diagram, DiagramError> {
        self.validate()?;
        let mut d = Diagram {
            nodes: Vec::new(),
            links: Vec::new(),
            boundary: None,
            free_loops: 0,
            closing_vertex: None,
        };
        let mut first: HashMap<u32, (NodeId, u8)> = HashMap::new();
        for x in &self.crossings {
            let n = d.add_node(NodeKind::Crossing { over02: false }, None);
            for (p, &l) in x.iter().enumerate() {
                if let Some((m, q)) = first.remove(&l) {
                    d.connect(End::Port(m, q), port(n, p));
                } else {
                    first.insert(l, (n, p as u8));
                }
            }
        }
        d.free_loops = self.components - self.traced_components();
        Ok(d)
    }
}

impl fmt::Display for PdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// PD code of a closed diagram without true vertices, free loops included.
pub fn link_pd(d: &Diagram) -> Result<PdCode, DiagramError> {
    if d.vertex_count() > 0 {
        return Err(DiagramError::BadPd("diagram has true vertices".into()));
    }
    let g = SpatialGraph::of(d)?;
    let all = ConstituentLink {
        cycles: Vec::new(),
        circles: (0..g.circles.len()).collect(),
    };
    Ok(extract_pd(d, &g, &all))
}

/// PD code of the closure of a braid on `strands` strands. Generator `k > 0`
/// crosses strands `k` and `k + 1` with the upper one passing under, `-k`
/// with it passing over.
pub fn braid_closure_pd(strands: usize, word: &[i32]) -> PdCode {
    let mut at: Vec<u32> = (1..=strands as u32).collect();
    let mut next = strands as u32 + 1;
    let mut crossings = Vec::with_capacity(word.len());
    for &g in word {
        let i = g.unsigned_abs() as usize - 1;
        assert!(g != 0 && i + 1 < strands, "generator {g} out of range");
        let (a, b) = (at[i], at[i + 1]);
        let (c, d) = (next, next + 1);
        next += 2;
        // a enters top left and leaves as d bottom right, b the other way.
        crossings.push(if g > 0 { [a, b, d, c] } else { [b, d, c, a] });
        at[i] = c;
        at[i + 1] = d;
    }
    // Closing the braid identifies the final label at each position with the
    // initial one.
    let rename: HashMap<u32, u32> = at.iter().enumerate().map(|(k, &l)| (l, k as u32 + 1)).collect();
    for x in &mut crossings {
        for l in x.iter_mut() {
            if let Some(&r) = rename.get(l) {
                *l = r;
            }
        }
    }
    let mut seen = vec![false; strands];
    let mut components = 0;
    let perm: Vec<usize> = {
        let mut p: Vec<usize> = (0..strands).collect();
        for &g in word {
            let i = g.unsigned_abs() as usize - 1;
            p.swap(i, i + 1);
        }
        p
    };
    for s in 0..strands {
        if !seen[s] {
            components += 1;
            let mut k = s;
            while !seen[k] {
                seen[k] = true;
                k = perm[k];
            }
        }
    }
    PdCode { crossings, components }
}

/// PD code of a constituent link. Crossings between two strands of the link
/// are kept, crossings met by one strand only are dropped, and true vertices
/// are smoothed.
pub fn extract_pd(d: &Diagram, g: &SpatialGraph, link: &ConstituentLink) -> PdCode {
    let mut components: Vec<Vec<(NodeId, u8)>> = Vec::new();
    for &ci in &link.cycles {
        let mut seq = Vec::new();
        for &(e, fwd) in &g.cycles[ci].edges {
            let ps = &g.edges[e].passages;
            if fwd {
                seq.extend(ps.iter().copied());
            } else {
                seq.extend(ps.iter().rev().map(|&(n, p)| (n, (p + 2) % 4)));
            }
        }
        components.push(seq);
    }
    for &ci in &link.circles {
        components.push(g.circles[ci].passages.clone());
    }
    let mut uses = vec![0u8; d.nodes.len()];
    for seq in &components {
        for &(n, _) in seq {
            uses[n] += 1;
        }
    }
    let mut labels: HashMap<(NodeId, u8), u32> = HashMap::new();
    let mut next = 1u32;
    for seq in &components {
        let cuts: Vec<(NodeId, u8)> = seq.iter().copied().filter(|&(n, _)| uses[n] == 2).collect();
        let k = cuts.len() as u32;
        for (i, &(n, p)) in cuts.iter().enumerate() {
            let i = i as u32;
            labels.insert((n, p), next + i);
            labels.insert((n, (p + 2) % 4), next + (i + 1) % k);
        }
        next += k;
    }
    let entries: BTreeSet<(NodeId, u8)> = components.iter().flatten().copied().collect();
    let mut crossings = Vec::new();
    for n in 0..d.nodes.len() {
        if uses[n] != 2 {
            continue;
        }
        let NodeKind::Crossing { over02 } = d.nodes[n].kind else { continue };
        let under = if over02 { 1u8 } else { 0u8 };
        let entry = if entries.contains(&(n, under)) { under } else { under + 2 };
        let mut x = [0u32; 4];
        for (k, slot) in x.iter_mut().enumerate() {
            *slot = labels[&(n, (entry + k as u8) % 4)];
        }
        crossings.push(x);
    }
    PdCode {
        crossings,
        components: components.len(),
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            let kind = match n.kind {
                NodeKind::Crossing { over02: true } => "x02",
                NodeKind::Crossing { over02: false } => "x13",
                NodeKind::Vertex => "v",
            };
            write!(f, "{i}:{kind} [")?;
            for (p, e) in self.links[i].iter().enumerate() {
                if p > 0 {
                    write!(f, " ")?;
                }
                match e {
                    End::Port(m, q) => write!(f, "{m}.{q}")?,
                    End::Boundary(c) => write!(f, "{c}")?,
                }
            }
            writeln!(f, "]")?;
        }
        if self.free_loops > 0 {
            writeln!(f, "free loops: {}", self.free_loops)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(v: &[i64]) -> BoxVector {
        BoxVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tangle_diagrams_are_consistent_and_planar() {
        for b in BoxVector::catalog(5) {
            let d = build_tangle_diagram(&b);
            assert!(d.is_consistent(), "{b}");
            assert!(d.satisfies_euler(), "{b}");
            assert_eq!(d.crossing_count(), b.crossings());
        }
    }

    #[test]
    fn traced_parity_matches_layout_trace() {
        for b in BoxVector::catalog(6) {
            let s = trace_strands(&build_tangle_diagram(&b)).unwrap();
            assert_eq!(s.parity(), b.parity(), "{b}");
            assert_eq!(s.closed_components, 0);
        }
    }

    #[test]
    fn sum_of_two_verticals_has_a_free_circle() {
        let inf = build_summand_diagram(&Summand::Infinity, 1);
        let s = compose_sum(&inf, &inf);
        assert_eq!(s.free_loops(), 1);
        assert_eq!(s.node_count(), 0);
        let v = vertex_closure(&s).unwrap();
        assert_eq!(v.free_loops(), 1);
        assert!(v.satisfies_euler());
    }

    #[test]
    fn sum_and_product_add_crossings() {
        let a = build_tangle_diagram(&bv(&[2, 3]));
        let b = build_tangle_diagram(&bv(&[1, 2, 2]));
        let s = compose_sum(&a, &b);
        assert_eq!(s.crossing_count(), 10);
        assert!(s.is_consistent());
        assert!(s.satisfies_euler());
        let p = compose_product(&a, &b);
        assert_eq!(p.crossing_count(), 10);
        assert!(p.is_consistent());
        assert!(p.satisfies_euler());
    }

    #[test]
    fn closure_rejects_closed_input() {
        let n = numerator_closure(&build_tangle_diagram(&bv(&[3])));
        assert_eq!(vertex_closure(&n), Err(DiagramError::NotFourEndpoints));
    }

    #[test]
    fn wedge_of_two_loops_has_two_constituents() {
        let mut d = Diagram {
            nodes: Vec::new(),
            links: Vec::new(),
            boundary: None,
            free_loops: 0,
            closing_vertex: None,
        };
        let v = d.add_node(NodeKind::Vertex, None);
        d.connect(port(v, 0), port(v, 1));
        d.connect(port(v, 2), port(v, 3));
        assert!(d.satisfies_euler());
        let g = SpatialGraph::of(&d).unwrap();
        assert_eq!(g.cycles.len(), 2);
        assert_eq!(g.constituent_links(CONSTITUENT_CAP).unwrap().len(), 2);
    }

    #[test]
    fn pd_text_round_trip() {
        let pd = PdCode {
            crossings: vec![[1, 4, 2, 5], [3, 6, 4, 1], [5, 2, 6, 3]],
            components: 1,
        };
        let back = PdCode::parse(&pd.to_text()).unwrap();
        assert_eq!(back, pd);
        assert!(PdCode::parse("X 1 2 3").is_err());
        assert!(PdCode::parse("X 1 1 2 3").is_err());
    }

    #[test]
    fn constituents_of_a_rational_closure() {
        let d = vertex_closure(&build_tangle_diagram(&bv(&[2, 3]))).unwrap();
        let g = SpatialGraph::of(&d).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.cycles.len(), 2);
        let links = g.constituent_links(CONSTITUENT_CAP).unwrap();
        assert_eq!(links.len(), 2);
        for l in &links {
            let pd = extract_pd(&d, &g, l);
            assert!(pd.validate().is_ok());
            assert_eq!(pd.components, 1);
        }
    }
}
