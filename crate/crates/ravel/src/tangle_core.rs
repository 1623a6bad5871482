//! Rational tangles in alternating 3-braid form, their fractions and parities,
//! and Montesinos presentations built from them.
//!
//! Layout used throughout the crate: three horizontal rows numbered 1 (top) to
//! 3. Odd boxes twist rows 1 and 2, even boxes twist rows 2 and 3. The left
//! ends of rows 1, 2 and 3 are the NW, SW and SE boundary points. On the right
//! a cap joins the two rows of the pair not twisted by the last box, and the
//! remaining row runs to NE.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TangleError {
    #[error("box vector has no boxes")]
    Empty,
    #[error("box {index} has no crossings; only the first box may be empty")]
    ZeroBox { index: usize },
    #[error("box entries mix signs")]
    MixedSigns,
}

/// Boundary points of a tangle, in counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    NW,
    SW,
    SE,
    NE,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::NW, Corner::SW, Corner::SE, Corner::NE];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Corner {
        Corner::ALL[i % 4]
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Corner::NW => "NW",
            Corner::SW => "SW",
            Corner::SE => "SE",
            Corner::NE => "NE",
        };
        f.write_str(s)
    }
}

/// Which pair of rows a box twists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowPair {
    Upper,
    Lower,
}

impl RowPair {
    /// Pair twisted by box `index` (1-based).
    pub fn of_box(index: usize) -> RowPair {
        if index % 2 == 1 {
            RowPair::Upper
        } else {
            RowPair::Lower
        }
    }

    /// Rows as (top, bottom), 1-based.
    pub fn rows(self) -> (usize, usize) {
        match self {
            RowPair::Upper => (1, 2),
            RowPair::Lower => (2, 3),
        }
    }

    pub fn other(self) -> RowPair {
        match self {
            RowPair::Upper => RowPair::Lower,
            RowPair::Lower => RowPair::Upper,
        }
    }

    pub fn contains(self, row: usize) -> bool {
        let (a, b) = self.rows();
        row == a || row == b
    }

    /// The row of the pair that is not `row`.
    pub fn partner(self, row: usize) -> usize {
        let (a, b) = self.rows();
        if row == a {
            b
        } else {
            a
        }
    }

    /// The single row outside the pair.
    pub fn outside(self) -> usize {
        match self {
            RowPair::Upper => 3,
            RowPair::Lower => 1,
        }
    }
}

/// Boundary point at the left end of a row.
pub fn left_corner(row: usize) -> Corner {
    match row {
        1 => Corner::NW,
        2 => Corner::SW,
        _ => Corner::SE,
    }
}

/// Crossing counts of the boxes of an alternating 3-braid diagram.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct BoxVector(Vec<i64>);

impl BoxVector {
    pub fn new(boxes: Vec<i64>) -> Result<Self, TangleError> {
        if boxes.is_empty() {
            return Err(TangleError::Empty);
        }
        if let Some(i) = boxes.iter().skip(1).position(|&a| a == 0) {
            return Err(TangleError::ZeroBox { index: i + 2 });
        }
        if boxes.iter().any(|&a| a > 0) && boxes.iter().any(|&a| a < 0) {
            return Err(TangleError::MixedSigns);
        }
        Ok(BoxVector(boxes))
    }

    pub fn boxes(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn crossings(&self) -> usize {
        self.0.iter().map(|a| a.unsigned_abs() as usize).sum()
    }

    /// Sign shared by the non-zero entries; +1 for `[0]`.
    pub fn sign(&self) -> i64 {
        if self.0.iter().any(|&a| a < 0) {
            -1
        } else {
            1
        }
    }

    /// Pair of rows joined by the cap at the right end.
    pub fn cap_pair(&self) -> RowPair {
        RowPair::of_box(self.len()).other()
    }

    pub fn fraction(&self) -> Fraction {
        continued_fraction(&self.0)
    }

    pub fn parity(&self) -> Parity {
        let rows: Vec<(RowPair, bool)> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, &a)| (RowPair::of_box(i + 1), a % 2 != 0))
            .collect();
        parity_of_pairing(trace_rows(&rows, self.cap_pair(), Corner::NW))
    }

    /// All valid box vectors with at most `max_crossings` crossings, one per
    /// fraction, ordered by crossing count, then length, then entries.
    pub fn catalog(max_crossings: usize) -> Vec<BoxVector> {
        let mut all = Vec::new();
        for c in 0..=max_crossings {
            let mut level = Vec::new();
            compositions(c, &mut Vec::new(), &mut level);
            level.sort_by(|a: &Vec<i64>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
            for v in level {
                all.push(v.clone());
                if c > 0 {
                    all.push(v.iter().map(|a| -a).collect());
                }
            }
        }
        let mut seen = HashSet::new();
        all.into_iter()
            .filter_map(|v| BoxVector::new(v).ok())
            .filter(|b| seen.insert(b.fraction()))
            .collect()
    }
}

// Non-negative vectors with first entry >= 0, later entries >= 1, summing to `total`.
fn compositions(total: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let used: i64 = prefix.iter().sum();
    let left = total as i64 - used;
    if !prefix.is_empty() && left == 0 {
        out.push(prefix.clone());
    }
    let lo = if prefix.is_empty() { 0 } else { 1 };
    for a in lo..=left {
        if prefix.is_empty() && a == 0 && left == 0 {
            out.push(vec![0]);
            continue;
        }
        prefix.push(a);
        compositions(total, prefix, out);
        prefix.pop();
    }
}

impl TryFrom<Vec<i64>> for BoxVector {
    type Error = TangleError;
    fn try_from(v: Vec<i64>) -> Result<Self, Self::Error> {
        BoxVector::new(v)
    }
}

impl From<BoxVector> for Vec<i64> {
    fn from(b: BoxVector) -> Self {
        b.0
    }
}

impl fmt::Display for BoxVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// Regular continued fraction `a1 + 1/(a2 + 1/(... + 1/am))`.
pub fn continued_fraction(boxes: &[i64]) -> Fraction {
    let mut p = boxes[boxes.len() - 1];
    let mut q = 1i64;
    for &a in boxes.iter().rev().skip(1) {
        let np = a * p + q;
        q = p;
        p = np;
    }
    Fraction::new(p, q)
}

/// Traces the strand leaving `start` through rows twisted by the given boxes.
/// Each box is its row pair and whether its crossing count is odd.
pub(crate) fn trace_rows(boxes: &[(RowPair, bool)], cap: RowPair, start: Corner) -> Corner {
    let mut row = match start {
        Corner::NW => 1,
        Corner::SW => 2,
        Corner::SE => 3,
        Corner::NE => cap.outside(),
    };
    let rightward = start != Corner::NE;
    if rightward {
        for &(pair, odd) in boxes {
            if odd && pair.contains(row) {
                row = pair.partner(row);
            }
        }
        if !cap.contains(row) {
            return Corner::NE;
        }
        row = cap.partner(row);
    }
    for &(pair, odd) in boxes.iter().rev() {
        if odd && pair.contains(row) {
            row = pair.partner(row);
        }
    }
    left_corner(row)
}

/// Parity from the partner of NW.
pub fn parity_of_pairing(partner_of_nw: Corner) -> Parity {
    match partner_of_nw {
        Corner::NE => Parity::Zero,
        Corner::SW => Parity::Infinity,
        _ => Parity::One,
    }
}

/// Reduced fraction `p/q` with `q >= 0`; `1/0` is infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction {
    pub p: i64,
    pub q: i64,
}

impl Fraction {
    pub const INFINITY: Fraction = Fraction { p: 1, q: 0 };

    pub fn new(p: i64, q: i64) -> Fraction {
        assert!(p != 0 || q != 0, "0/0 is not a fraction");
        let g = gcd(p.unsigned_abs(), q.unsigned_abs()) as i64;
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        Fraction { p, q }
    }

    pub fn is_infinite(self) -> bool {
        self.q == 0
    }

    pub fn parity(self) -> Parity {
        parity_from_fraction(self)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 0 {
            write!(f, "inf")
        } else if self.q == 1 {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}/{}", self.p, self.q)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Zero,
    Infinity,
    One,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Parity::Zero => "0",
            Parity::Infinity => "inf",
            Parity::One => "1",
        };
        f.write_str(s)
    }
}

pub fn parity_from_fraction(fr: Fraction) -> Parity {
    if fr.p % 2 == 0 {
        Parity::Zero
    } else if fr.q % 2 == 0 {
        Parity::Infinity
    } else {
        Parity::One
    }
}

/// A summand of a Montesinos sum. `Infinity` is the trivial vertical tangle,
/// which has no box-vector form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Summand {
    Rational(BoxVector),
    Infinity,
}

impl Summand {
    pub fn fraction(&self) -> Fraction {
        match self {
            Summand::Rational(b) => b.fraction(),
            Summand::Infinity => Fraction::INFINITY,
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            Summand::Rational(b) => b.parity(),
            Summand::Infinity => Parity::Infinity,
        }
    }

    pub fn crossings(&self) -> usize {
        match self {
            Summand::Rational(b) => b.crossings(),
            Summand::Infinity => 0,
        }
    }

    pub fn as_box_vector(&self) -> Option<&BoxVector> {
        match self {
            Summand::Rational(b) => Some(b),
            Summand::Infinity => None,
        }
    }
}

impl From<BoxVector> for Summand {
    fn from(b: BoxVector) -> Self {
        Summand::Rational(b)
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Summand::Rational(b) => write!(f, "{b}"),
            Summand::Infinity => write!(f, "inf"),
        }
    }
}

pub fn fraction(t: &Summand) -> Fraction {
    t.fraction()
}

/// Traced parity.
pub fn parity(t: &Summand) -> Parity {
    t.parity()
}

/// Integer tangles, including `[0]`.
pub fn is_horizontal(t: &Summand) -> bool {
    t.fraction().q == 1
}

pub fn is_trivial_vertical(t: &Summand) -> bool {
    t.fraction().is_infinite()
}

pub fn is_trivial(t: &Summand) -> bool {
    let f = t.fraction();
    f.q == 0 || f.p == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MontesinosPresentation {
    pub summands: Vec<Summand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormIssueKind {
    /// Summand is `[0]` or `inf`.
    Trivial,
    /// Integer summand in a sum of two or more.
    Horizontal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormIssue {
    /// 1-based summand index.
    pub summand: usize,
    pub kind: FormIssueKind,
}

impl fmt::Display for FormIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            FormIssueKind::Trivial => "is trivial",
            FormIssueKind::Horizontal => "is horizontal",
        };
        write!(f, "summand {} {what}", self.summand)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardFormReport {
    pub issues: Vec<FormIssue>,
}

impl StandardFormReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl MontesinosPresentation {
    pub fn new(summands: Vec<Summand>) -> Self {
        MontesinosPresentation { summands }
    }

    pub fn from_box_vectors(boxes: Vec<BoxVector>) -> Self {
        MontesinosPresentation {
            summands: boxes.into_iter().map(Summand::Rational).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn crossings(&self) -> usize {
        self.summands.iter().map(Summand::crossings).sum()
    }

    /// Horizontal summands make the number of summands non-minimal.
    pub fn minimality_issues(&self) -> Vec<FormIssue> {
        if self.summands.len() < 2 {
            return Vec::new();
        }
        self.summands
            .iter()
            .enumerate()
            .filter(|(_, t)| is_horizontal(t))
            .map(|(i, _)| FormIssue {
                summand: i + 1,
                kind: FormIssueKind::Horizontal,
            })
            .collect()
    }

    pub fn validate_standard_form(&self) -> StandardFormReport {
        let mut issues = Vec::new();
        let several = self.summands.len() > 1;
        for (i, t) in self.summands.iter().enumerate() {
            if is_trivial(t) {
                issues.push(FormIssue {
                    summand: i + 1,
                    kind: FormIssueKind::Trivial,
                });
            } else if several && is_horizontal(t) {
                issues.push(FormIssue {
                    summand: i + 1,
                    kind: FormIssueKind::Horizontal,
                });
            }
        }
        StandardFormReport { issues }
    }

    pub fn infinity_parity_summands(&self) -> Vec<usize> {
        self.summands
            .iter()
            .enumerate()
            .filter(|(_, t)| t.parity() == Parity::Infinity)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

impl fmt::Display for MontesinosPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M[")?;
        for (i, t) in self.summands.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "]")
    }
}

/// Tangle built from rational leaves by sums and products.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraicExpr {
    Leaf(Summand),
    Sum(Box<AlgebraicExpr>, Box<AlgebraicExpr>),
    Product(Box<AlgebraicExpr>, Box<AlgebraicExpr>),
}

impl AlgebraicExpr {
    pub fn leaf(t: impl Into<Summand>) -> Self {
        AlgebraicExpr::Leaf(t.into())
    }

    pub fn sum(a: AlgebraicExpr, b: AlgebraicExpr) -> Self {
        AlgebraicExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: AlgebraicExpr, b: AlgebraicExpr) -> Self {
        AlgebraicExpr::Product(Box::new(a), Box::new(b))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Summand> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Summand>) {
        match self {
            AlgebraicExpr::Leaf(t) => out.push(t),
            AlgebraicExpr::Sum(a, b) | AlgebraicExpr::Product(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Fraction when the tangle is rational by twisting rules: a sum with an
    /// integer tangle, or a product with a vertical tangle `1/k`, of a rational
    /// tangle is rational. Other combinations are treated as non-rational.
    pub fn rational_fraction(&self) -> Option<Fraction> {
        match self {
            AlgebraicExpr::Leaf(t) => Some(t.fraction()),
            AlgebraicExpr::Sum(a, b) => {
                let (x, y) = (a.rational_fraction()?, b.rational_fraction()?);
                let (int, other) = if x.q == 1 {
                    (x, y)
                } else if y.q == 1 {
                    (y, x)
                } else {
                    return None;
                };
                Some(Fraction::new(other.p + int.p * other.q, other.q))
            }
            AlgebraicExpr::Product(a, b) => {
                let (x, y) = (a.rational_fraction()?, b.rational_fraction()?);
                // 1/(1/x + 1/y) with one of them 1/k
                let (vert, other) = if x.p.abs() == 1 {
                    (x, y)
                } else if y.p.abs() == 1 {
                    (y, x)
                } else {
                    return None;
                };
                let k = vert.q * vert.p;
                Some(Fraction::new(other.p, other.q + k * other.p))
            }
        }
    }
}

impl fmt::Display for AlgebraicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraicExpr::Leaf(t) => write!(f, "{t}"),
            AlgebraicExpr::Sum(a, b) => write!(f, "({a} + {b})"),
            AlgebraicExpr::Product(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(v: &[i64]) -> BoxVector {
        BoxVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_malformed_vectors() {
        assert_eq!(BoxVector::new(vec![]), Err(TangleError::Empty));
        assert_eq!(BoxVector::new(vec![2, 0]), Err(TangleError::ZeroBox { index: 2 }));
        assert_eq!(BoxVector::new(vec![2, -1]), Err(TangleError::MixedSigns));
        assert!(BoxVector::new(vec![0, 1, 2]).is_ok());
        assert!(BoxVector::new(vec![-2, -3]).is_ok());
    }

    #[test]
    fn small_fractions() {
        assert_eq!(bv(&[0]).fraction(), Fraction::new(0, 1));
        assert_eq!(bv(&[3]).fraction(), Fraction::new(3, 1));
        assert_eq!(bv(&[2, 3]).fraction(), Fraction::new(7, 3));
        assert_eq!(bv(&[0, 3]).fraction(), Fraction::new(1, 3));
        assert_eq!(bv(&[-2, -3]).fraction(), Fraction::new(-7, 3));
        assert_eq!(bv(&[0, 1, 2]).fraction(), Fraction::new(2, 3));
    }

    #[test]
    fn parity_rule() {
        assert_eq!(parity_from_fraction(Fraction::new(0, 1)), Parity::Zero);
        assert_eq!(parity_from_fraction(Fraction::INFINITY), Parity::Infinity);
        assert_eq!(parity_from_fraction(Fraction::new(7, 3)), Parity::One);
        assert_eq!(parity_from_fraction(Fraction::new(5, 2)), Parity::Infinity);
        assert_eq!(parity_from_fraction(Fraction::new(-4, 3)), Parity::Zero);
    }

    #[test]
    fn traced_parity_of_small_tangles() {
        assert_eq!(bv(&[0]).parity(), Parity::Zero);
        assert_eq!(bv(&[1]).parity(), Parity::One);
        assert_eq!(bv(&[2]).parity(), Parity::Zero);
        assert_eq!(bv(&[0, 2]).parity(), Parity::Infinity);
        assert_eq!(bv(&[2, 2]).parity(), Parity::Infinity);
        assert_eq!(bv(&[2, 3]).parity(), Parity::One);
    }

    #[test]
    fn standard_form_checks() {
        let ok = MontesinosPresentation::from_box_vectors(vec![bv(&[2, 3]), bv(&[2, 3])]);
        assert!(ok.validate_standard_form().is_valid());
        let horiz = MontesinosPresentation::from_box_vectors(vec![bv(&[3]), bv(&[2, 3])]);
        assert_eq!(
            horiz.validate_standard_form().issues,
            vec![FormIssue { summand: 1, kind: FormIssueKind::Horizontal }]
        );
        let triv = MontesinosPresentation::from_box_vectors(vec![bv(&[0])]);
        assert_eq!(triv.validate_standard_form().issues[0].kind, FormIssueKind::Trivial);
        let single = MontesinosPresentation::from_box_vectors(vec![bv(&[3])]);
        assert!(single.validate_standard_form().is_valid());
    }

    #[test]
    fn catalog_is_deduplicated_and_ordered() {
        let cat = BoxVector::catalog(6);
        let fr: HashSet<_> = cat.iter().map(BoxVector::fraction).collect();
        assert_eq!(fr.len(), cat.len());
        assert_eq!(cat[0], bv(&[0]));
        assert!(cat.windows(2).all(|w| w[0].crossings() <= w[1].crossings()));
        assert!(cat.contains(&bv(&[3])));
        assert!(!cat.contains(&bv(&[2, 1])));
    }

    #[test]
    fn structural_rationality() {
        let e = AlgebraicExpr::sum(AlgebraicExpr::leaf(bv(&[2, 3])), AlgebraicExpr::leaf(bv(&[2])));
        assert_eq!(e.rational_fraction(), Some(Fraction::new(13, 3)));
        let m = AlgebraicExpr::sum(AlgebraicExpr::leaf(bv(&[2, 3])), AlgebraicExpr::leaf(bv(&[2, 2])));
        assert_eq!(m.rational_fraction(), None);
        let p = AlgebraicExpr::product(AlgebraicExpr::leaf(bv(&[0, 2])), AlgebraicExpr::leaf(bv(&[3])));
        // 1/(2 + 1/3) = 3/7
        assert_eq!(p.rational_fraction(), Some(Fraction::new(3, 7)));
    }
}
