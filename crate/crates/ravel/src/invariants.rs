//! Kauffman bracket, Jones polynomial and determinant from PD codes, and the
//! triviality test used as the constituent-link oracle.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::PdCode;
use crate::rewrite;

/// Bracket computations refuse codes with more crossings than this.
pub const CROSSING_BUDGET: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("{found} crossings exceed the budget of {budget}")]
    OverBudget { found: usize, budget: usize },
    #[error("determinant is not an integer")]
    NotInteger,
}

/// Laurent polynomial in `A` with exact integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LaurentPoly {
    low: i32,
    coeffs: Vec<i64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn one() -> Self {
        LaurentPoly::monomial(0, 1)
    }

    pub fn monomial(exp: i32, coeff: i64) -> Self {
        LaurentPoly { low: exp, coeffs: vec![coeff] }.normalized()
    }

    /// `-A^2 - A^-2`, the value of an extra circle.
    pub fn delta() -> Self {
        LaurentPoly::monomial(2, -1) + LaurentPoly::monomial(-2, -1)
    }

    pub fn from_terms(terms: &[(i32, i64)]) -> Self {
        terms
            .iter()
            .fold(LaurentPoly::zero(), |acc, &(e, c)| acc + LaurentPoly::monomial(e, c))
    }

    fn normalized(mut self) -> Self {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|&&c| c == 0).count();
        if lead == self.coeffs.len() {
            return LaurentPoly::zero();
        }
        self.coeffs.drain(..lead);
        self.low += lead as i32;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.low)
    }

    pub fn max_exp(&self) -> Option<i32> {
        (!self.is_zero()).then(|| self.low + self.coeffs.len() as i32 - 1)
    }

    /// Difference between the highest and lowest exponent.
    pub fn span(&self) -> i32 {
        match (self.min_exp(), self.max_exp()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub fn coeff(&self, exp: i32) -> i64 {
        let i = exp - self.low;
        if i < 0 {
            return 0;
        }
        self.coeffs.get(i as usize).copied().unwrap_or(0)
    }

    /// `(exponent, coefficient)` pairs with non-zero coefficient, ascending.
    pub fn terms(&self) -> Vec<(i32, i64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (self.low + i as i32, c))
            .collect()
    }

    pub fn shift(&self, k: i32) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LaurentPoly { low: self.low + k, coeffs: self.coeffs.clone() }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(LaurentPoly::one(), |acc, _| &acc * self)
    }

    /// Exact quotient, if `d` divides `self`.
    pub fn div_exact(&self, d: &LaurentPoly) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(LaurentPoly::zero());
        }
        let dl = *d.coeffs.last().unwrap();
        let mut rem = self.clone();
        let mut q = LaurentPoly::zero();
        while !rem.is_zero() && rem.coeffs.len() >= d.coeffs.len() {
            let rl = *rem.coeffs.last().unwrap();
            if rl % dl != 0 {
                return None;
            }
            let e = rem.max_exp().unwrap() - d.max_exp().unwrap();
            let t = LaurentPoly::monomial(e, rl / dl);
            rem = &rem - &(&t * d);
            q = q + t;
        }
        rem.is_zero().then_some(q)
    }

    /// Value at a primitive eighth root of unity, `A = e^{i pi/4}`, for
    /// polynomials with even exponents only. Returns `(re, im)`.
    pub fn at_eighth_root(&self) -> Option<(i64, i64)> {
        let (mut re, mut im) = (0i64, 0i64);
        for (e, c) in self.terms() {
            if e.rem_euclid(2) != 0 {
                return None;
            }
            match (e / 2).rem_euclid(4) {
                0 => re += c,
                1 => im += c,
                2 => re -= c,
                _ => im -= c,
            }
        }
        Some((re, im))
    }
}

impl Add for LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: LaurentPoly) -> LaurentPoly {
        &self + &o
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let low = self.low.min(o.low);
        let high = self.max_exp().unwrap().max(o.max_exp().unwrap());
        let coeffs = (low..=high).map(|e| self.coeff(e) + o.coeff(e)).collect();
        LaurentPoly { low, coeffs }.normalized()
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: &LaurentPoly) -> LaurentPoly {
        self + &(-o)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly { low: self.low, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || o.is_zero() {
            return LaurentPoly::zero();
        }
        let mut coeffs = vec![0i64; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentPoly { low: self.low + o.low, coeffs }.normalized()
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: LaurentPoly) -> LaurentPoly {
        &self * &o
    }
}

/// Sorted `exponent:coefficient` pairs separated by spaces; `0` when zero.
impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}:{c}")?;
        }
        Ok(())
    }
}

fn check_budget(pd: &PdCode) -> Result<(), InvariantError> {
    if pd.crossing_count() > CROSSING_BUDGET {
        return Err(InvariantError::OverBudget { found: pd.crossing_count(), budget: CROSSING_BUDGET });
    }
    Ok(())
}

// The A-smoothing of X[a,b,c,d] joins a with b and c with d.
const A_PAIRS: [(usize, usize); 2] = [(0, 1), (2, 3)];
const B_PAIRS: [(usize, usize); 2] = [(0, 3), (1, 2)];

/// Kauffman bracket by summing over all `2^n` states. Normalised so that a
/// single crossingless circle has bracket 1.
pub fn bracket_state_sum(pd: &PdCode) -> Result<LaurentPoly, InvariantError> {
    check_budget(pd)?;
    let n = pd.crossings.len();
    let mut labels: Vec<u32> = pd.crossings.iter().flatten().copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let idx: HashMap<u32, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let free = pd.components - pd.traced_components();
    // loops[k] counts states with k circles, per power of A.
    let mut by_loops: BTreeMap<(usize, i32), i64> = BTreeMap::new();
    let mut parent = vec![0usize; labels.len()];
    for state in 0u64..(1u64 << n) {
        for (i, p) in parent.iter_mut().enumerate() {
            *p = i;
        }
        let mut a_count = 0i32;
        for (k, x) in pd.crossings.iter().enumerate() {
            let pairs = if state >> k & 1 == 0 {
                a_count += 1;
                A_PAIRS
            } else {
                B_PAIRS
            };
            for (i, j) in pairs {
                let (ri, rj) = (find(&mut parent, idx[&x[i]]), find(&mut parent, idx[&x[j]]));
                parent[ri] = rj;
            }
        }
        let circles = (0..labels.len()).filter(|&i| find(&mut parent, i) == i).count() + free;
        let exp = a_count - (n as i32 - a_count);
        *by_loops.entry((circles, exp)).or_default() += 1;
    }
    let delta = LaurentPoly::delta();
    let mut total = LaurentPoly::zero();
    for ((circles, exp), count) in by_loops {
        total = total + &LaurentPoly::monomial(exp, count) * &delta.pow(circles as u32 - 1);
    }
    Ok(total)
}

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

/// Kauffman bracket by the skein relation, splitting off disjoint pieces.
/// Crossings are smoothed one at a time along a frontier, and partial
/// smoothings that leave the frontier arcs joined the same way are merged,
/// which memoises the recursion on what remains.
pub fn bracket_skein(pd: &PdCode) -> Result<LaurentPoly, InvariantError> {
    check_budget(pd)?;
    let free = pd.components - pd.traced_components();
    let u = split_components(&pd.crossings)
        .iter()
        .fold(LaurentPoly::one(), |acc, piece| &acc * &unnormalized(piece));
    let u = &u * &LaurentPoly::delta().pow(free as u32);
    Ok(u.div_exact(&LaurentPoly::delta()).expect("delta divides the unnormalised bracket"))
}

// Greedy order keeping the set of half-processed arcs small.
fn frontier_order(xs: &[[u32; 4]]) -> Vec<[u32; 4]> {
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut left: Vec<usize> = (0..xs.len()).collect();
    let mut out = Vec::with_capacity(xs.len());
    while !left.is_empty() {
        let score = |i: usize| xs[i].iter().filter(|l| seen.get(l) == Some(&1)).count();
        let k = (0..left.len()).max_by_key(|&k| (score(left[k]), std::cmp::Reverse(k))).unwrap();
        let i = left.remove(k);
        for &l in &xs[i] {
            *seen.entry(l).or_default() += 1;
        }
        out.push(xs[i]);
    }
    out
}

// Bracket with every circle, the last one included, worth delta. A state is
// the set of frontier arcs joined in pairs by the smoothed part.
fn unnormalized(xs: &[[u32; 4]]) -> LaurentPoly {
    let order = frontier_order(xs);
    let mut index: HashMap<u32, usize> = HashMap::new();
    let order: Vec<[usize; 4]> = order
        .iter()
        .map(|c| {
            c.map(|l| {
                let n = index.len();
                *index.entry(l).or_insert(n)
            })
        })
        .collect();
    let mut seen = vec![0u8; index.len()];
    let delta = LaurentPoly::delta();
    let mut states: HashMap<Vec<(usize, usize)>, LaurentPoly> = HashMap::from([(Vec::new(), LaurentPoly::one())]);
    for x in order {
        for &l in &x {
            seen[l] += 1;
        }
        let open = |l: usize| seen[l] == 1;
        let mut next: HashMap<Vec<(usize, usize)>, LaurentPoly> = HashMap::new();
        for (pairs, poly) in &states {
            for (smoothing, exp) in [(A_PAIRS, 1), (B_PAIRS, -1)] {
                let (joined, loops) = join(pairs, x, smoothing, &open);
                let v = (poly * &delta.pow(loops as u32)).shift(exp);
                let slot = next.entry(joined).or_insert_with(LaurentPoly::zero);
                *slot = &*slot + &v;
            }
        }
        next.retain(|_, p| !p.is_zero());
        states = next;
    }
    states.remove(&Vec::new()).unwrap_or_else(LaurentPoly::zero)
}

/// Glues the arcs of a smoothed crossing onto a state. Returns the new
/// pairing of open arcs and the number of circles closed.
fn join(
    pairs: &[(usize, usize)],
    x: [usize; 4],
    smoothing: [(usize, usize); 2],
    open: &dyn Fn(usize) -> bool,
) -> (Vec<(usize, usize)>, usize) {
    let mut edges: Vec<(usize, usize)> = pairs.to_vec();
    edges.extend(smoothing.iter().map(|&(i, j)| (x[i], x[j])));
    let mut used = vec![false; edges.len()];
    // Follows edges from `start`, leaving by `first`, until an open arc.
    let walk = |start: usize, first: usize, used: &mut Vec<bool>| -> usize {
        let (mut at, mut e) = (start, first);
        loop {
            used[e] = true;
            let (a, b) = edges[e];
            at = if a == at { b } else { a };
            if open(at) {
                return at;
            }
            match (0..edges.len()).find(|&f| !used[f] && (edges[f].0 == at || edges[f].1 == at)) {
                Some(f) => e = f,
                None => return at,
            }
        }
    };
    let mut out = Vec::new();
    for e in 0..edges.len() {
        if used[e] {
            continue;
        }
        let (a, b) = edges[e];
        let start = if open(a) {
            a
        } else if open(b) {
            b
        } else {
            continue;
        };
        let end = walk(start, e, &mut used);
        out.push((start.min(end), start.max(end)));
    }
    let mut loops = 0;
    while let Some(e) = (0..edges.len()).find(|&e| !used[e]) {
        walk(edges[e].0, e, &mut used);
        loops += 1;
    }
    out.sort_unstable();
    (out, loops)
}

fn split_components(xs: &[[u32; 4]]) -> Vec<Vec<[u32; 4]>> {
    let mut by_label: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, c) in xs.iter().enumerate() {
        for &l in c {
            by_label.entry(l).or_default().push(i);
        }
    }
    let mut comp = vec![usize::MAX; xs.len()];
    let mut out = Vec::new();
    for s in 0..xs.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for l in xs[i] {
                for &j in &by_label[&l] {
                    if comp[j] == usize::MAX {
                        comp[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members.into_iter().map(|i| xs[i]).collect());
    }
    out
}

/// Signs of the crossings. Orientation comes from the under-strands, which
/// enter at position 0, and is propagated along components.
pub fn crossing_signs(pd: &PdCode) -> Vec<i32> {
    // For each label occurrence, whether the segment arrives there.
    let n = pd.crossings.len();
    let mut arrives: Vec<[Option<bool>; 4]> = vec![[None; 4]; n];
    let mut occ: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for (i, x) in pd.crossings.iter().enumerate() {
        for (k, &l) in x.iter().enumerate() {
            occ.entry(l).or_default().push((i, k));
        }
        arrives[i][0] = Some(true);
        arrives[i][2] = Some(false);
    }
    loop {
        let mut changed = false;
        for occs in occ.values() {
            if let [(i, k), (j, m)] = occs[..] {
                match (arrives[i][k], arrives[j][m]) {
                    (Some(a), None) => {
                        arrives[j][m] = Some(!a);
                        changed = true;
                    }
                    (None, Some(b)) => {
                        arrives[i][k] = Some(!b);
                        changed = true;
                    }
                    _ => {}
                }
            }
        }
        for a in arrives.iter_mut() {
            match (a[1], a[3]) {
                (Some(x), None) => {
                    a[3] = Some(!x);
                    changed = true;
                }
                (None, Some(y)) => {
                    a[1] = Some(!y);
                    changed = true;
                }
                _ => {}
            }
        }
        if changed {
            continue;
        }
        // A component that only ever passes over: orient it arbitrarily.
        match arrives.iter().position(|a| a[1].is_none()) {
            Some(i) => {
                arrives[i][3] = Some(true);
                arrives[i][1] = Some(false);
            }
            None => break,
        }
    }
    arrives
        .iter()
        .map(|a| if a[3] == Some(true) { 1 } else { -1 })
        .collect()
}

pub fn writhe(pd: &PdCode) -> i32 {
    crossing_signs(pd).iter().sum()
}

/// Jones polynomial in `A`, `(-A^3)^{-w} <D>`; substitute `t = A^{-4}`.
pub fn jones(pd: &PdCode) -> Result<LaurentPoly, InvariantError> {
    let b = bracket_skein(pd)?;
    Ok(normalize_writhe(&b, writhe(pd)))
}

fn normalize_writhe(b: &LaurentPoly, w: i32) -> LaurentPoly {
    let sign = if w.rem_euclid(2) == 0 { 1 } else { -1 };
    &LaurentPoly::monomial(-3 * w, sign) * b
}

/// Jones polynomial of the `c`-component unlink.
pub fn unlink_jones(c: usize) -> LaurentPoly {
    LaurentPoly::delta().pow(c.saturating_sub(1) as u32)
}

/// `|V(-1)|`, read off from the Jones polynomial at `A = e^{i pi/4}`.
pub fn determinant(pd: &PdCode) -> Result<u64, InvariantError> {
    let j = jones(pd)?;
    let (re, im) = j.at_eighth_root().ok_or(InvariantError::NotInteger)?;
    let sq = (re as i128 * re as i128 + im as i128 * im as i128) as u128;
    let r = isqrt(sq);
    if r * r != sq {
        return Err(InvariantError::NotInteger);
    }
    Ok(r as u64)
}

fn isqrt(n: u128) -> u128 {
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Triviality {
    Trivial,
    Nontrivial,
    Inconclusive,
}

impl fmt::Display for Triviality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Triviality::Trivial => "trivial",
            Triviality::Nontrivial => "nontrivial",
            Triviality::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

fn unlink_like(b: &LaurentPoly, components: usize) -> bool {
    let u = unlink_jones(components);
    let (Some(bl), Some(ul)) = (b.min_exp(), u.min_exp()) else {
        return false;
    };
    let shifted = b.shift(ul - bl);
    shifted == u || shifted == -&u
}

/// Whether the bracket equals that of an unlink up to a unit `+-A^k`, which
/// does not depend on how components are oriented.
pub fn bracket_is_unlink_like(pd: &PdCode) -> Result<bool, InvariantError> {
    Ok(unlink_like(&bracket_skein(pd)?, pd.components))
}

/// Decides whether `pd` is an unlink of `pd.components` components. A Jones
/// polynomial different from the unlink's proves non-triviality; triviality
/// needs a descending-diagram or Reidemeister-search certificate.
pub fn is_trivial(pd: &PdCode, budget: usize) -> Triviality {
    triviality_with_jones(pd, budget).0
}

/// [`is_trivial`], with the Jones polynomial that proves non-triviality.
pub fn triviality_with_jones(pd: &PdCode, budget: usize) -> (Triviality, Option<LaurentPoly>) {
    if pd.crossings.is_empty() {
        return (Triviality::Trivial, None);
    }
    let b = match bracket_skein(pd) {
        Ok(b) => b,
        Err(_) => return (Triviality::Inconclusive, None),
    };
    if !unlink_like(&b, pd.components) {
        return (Triviality::Nontrivial, Some(normalize_writhe(&b, writhe(pd))));
    }
    if rewrite::certify_unlink(pd, budget) {
        (Triviality::Trivial, None)
    } else {
        (Triviality::Inconclusive, None)
    }
}

/// Over/under alternates along every component.
pub fn is_alternating(pd: &PdCode) -> bool {
    let mut occ: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for (i, x) in pd.crossings.iter().enumerate() {
        for (k, &l) in x.iter().enumerate() {
            occ.entry(l).or_default().push((i, k));
        }
    }
    // Positions 0 and 2 are under, 1 and 3 over. Each arc joins its two ends.
    occ.values().all(|o| match o[..] {
        [(_, k), (_, m)] => (k % 2) != (m % 2),
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trefoil_left() -> PdCode {
        PdCode { crossings: vec![[1, 4, 2, 5], [3, 6, 4, 1], [5, 2, 6, 3]], components: 1 }
    }

    fn hopf() -> PdCode {
        PdCode { crossings: vec![[1, 3, 2, 4], [3, 1, 4, 2]], components: 2 }
    }

    #[test]
    fn poly_arithmetic() {
        let d = LaurentPoly::delta();
        assert_eq!(d.to_string(), "-2:-1 2:-1");
        let sq = &d * &d;
        assert_eq!(sq.to_string(), "-4:1 0:2 4:1");
        assert_eq!(sq.div_exact(&d), Some(d.clone()));
        assert_eq!(LaurentPoly::one().div_exact(&d), None);
        assert_eq!(sq.span(), 8);
        assert_eq!(LaurentPoly::zero().to_string(), "0");
    }

    #[test]
    fn trefoil_jones() {
        // -t^-4 + t^-3 + t^-1 with t = A^-4
        let expect = LaurentPoly::from_terms(&[(16, -1), (12, 1), (4, 1)]);
        assert_eq!(writhe(&trefoil_left()), -3);
        assert_eq!(jones(&trefoil_left()).unwrap(), expect);
        assert_eq!(determinant(&trefoil_left()).unwrap(), 3);
    }

    #[test]
    fn routes_agree_on_small_codes() {
        for pd in [trefoil_left(), hopf(), PdCode::unlink(3)] {
            assert_eq!(bracket_state_sum(&pd).unwrap(), bracket_skein(&pd).unwrap());
        }
    }

    #[test]
    fn hopf_link() {
        assert_eq!(determinant(&hopf()).unwrap(), 2);
        assert_eq!(is_trivial(&hopf(), 100), Triviality::Nontrivial);
        assert!(is_alternating(&hopf()));
        assert_eq!(bracket_skein(&hopf()).unwrap().span(), 8);
    }

    #[test]
    fn kinked_unknot() {
        let pd = PdCode { crossings: vec![[1, 1, 2, 2]], components: 1 };
        assert_eq!(jones(&pd).unwrap(), LaurentPoly::one());
        assert_eq!(is_trivial(&pd, 100), Triviality::Trivial);
    }

    #[test]
    fn unlink_is_trivial() {
        assert_eq!(is_trivial(&PdCode::unlink(2), 10), Triviality::Trivial);
        assert_eq!(jones(&PdCode::unlink(2)).unwrap(), LaurentPoly::delta());
    }

    #[test]
    fn budget_is_enforced() {
        let pd = PdCode {
            crossings: (0..25).map(|i| [2 * i + 1, 2 * i + 1, 2 * i + 2, 2 * i + 2]).collect(),
            components: 25,
        };
        assert!(matches!(bracket_state_sum(&pd), Err(InvariantError::OverBudget { .. })));
    }
}
