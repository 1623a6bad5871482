//! Datasets of every presentation and insertion within bounds.
//!
//! Records come in a fixed order: by number of summands, then summand tuples
//! in catalog order, then insertions by size and lexicographically by
//! address. Each record has its position in that order as `index`, and a run
//! can resume from any index.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use ravel::classify::{classify_closure, classify_insertion_closure, closure_diagram, ClassifyOptions, Verdict};
use ravel::diagram::Diagram;
use ravel::insertion::{apply_insertion, normalize, CrossingAddress, VertexInsertion};
use ravel::invariants::Triviality;
use ravel::oracle::{examine, OracleConfig, OracleReport};
use ravel::rewrite::{canonical_code, SearchOutcome};
use ravel::tangle_core::{BoxVector, MontesinosPresentation};
use serde::{Deserialize, Serialize};

use crate::config::{Bounds, RunConfig};
use crate::report::{agreement, Agreement, Evidence};
use crate::CliError;

/// Presentations handed to the worker pool at once.
const BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanarityStatus {
    Certified,
    Unknown,
    NotRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFacts {
    pub constituents: usize,
    pub trivial: usize,
    pub nontrivial: usize,
    pub inconclusive: usize,
    pub planarity: PlanarityStatus,
}

impl OracleFacts {
    fn of(r: &OracleReport) -> Self {
        let nontrivial = r.constituents.iter().filter(|c| c.triviality == Triviality::Nontrivial).count();
        let inconclusive = r.inconclusive();
        OracleFacts {
            constituents: r.constituents.len(),
            trivial: r.constituents.len() - nontrivial - inconclusive,
            nontrivial,
            inconclusive,
            planarity: match r.planarity {
                None => PlanarityStatus::NotRun,
                Some(SearchOutcome::Certified(_)) => PlanarityStatus::Certified,
                Some(SearchOutcome::Unknown { .. }) => PlanarityStatus::Unknown,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub index: u64,
    pub input: String,
    pub vertices: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Whether the normalized insertion is exceptional; absent without vertices.
    pub exceptional: Option<bool>,
    pub oracle: OracleFacts,
    pub agreement: Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub records: u64,
    pub agree: u64,
    pub inconclusive: u64,
    pub disagree: u64,
    /// Index one past the last record written; resume from here.
    pub cursor: u64,
}

/// Summands allowed in enumerated presentations: finite, non-integer
/// fractions, one box vector per fraction.
pub fn summand_catalog(max_crossings: usize) -> Vec<BoxVector> {
    BoxVector::catalog(max_crossings)
        .into_iter()
        .filter(|b| b.fraction().q > 1)
        .collect()
}

fn presentations(bounds: &Bounds) -> Vec<MontesinosPresentation> {
    let cat = summand_catalog(bounds.max_crossings);
    let mut out = Vec::new();
    for n in 1..=bounds.max_summands {
        if cat.is_empty() {
            break;
        }
        let mut idx = vec![0usize; n];
        loop {
            out.push(MontesinosPresentation::from_box_vectors(idx.iter().map(|&i| cat[i].clone()).collect()));
            // Odometer, last summand fastest.
            let mut k = n;
            while k > 0 && idx[k - 1] + 1 == cat.len() {
                idx[k - 1] = 0;
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
        }
    }
    out
}

fn addresses(m: &MontesinosPresentation) -> Vec<CrossingAddress> {
    let mut out = Vec::new();
    for (i, s) in m.summands.iter().enumerate() {
        let Some(b) = s.as_box_vector() else { continue };
        for (j, &a) in b.boxes().iter().enumerate() {
            for t in 1..=a.unsigned_abs() as usize {
                out.push(CrossingAddress::new(i + 1, j + 1, t));
            }
        }
    }
    out
}

/// Subsets of `0..n` of size `k` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn record_count(m: &MontesinosPresentation, max_vertices: usize) -> u64 {
    let c = addresses(m).len();
    (0..=max_vertices).map(|k| binomial(c, k)).sum()
}

type Cache = Mutex<HashMap<Vec<u32>, OracleFacts>>;

fn facts(d: &Diagram, cfg: &OracleConfig, cache: &Cache) -> Result<OracleFacts, CliError> {
    let code = canonical_code(d);
    if let Some(f) = cache.lock().expect("cache lock").get(&code) {
        return Ok(*f);
    }
    let f = OracleFacts::of(&examine(d, cfg)?);
    cache.lock().expect("cache lock").insert(code, f);
    Ok(f)
}

impl From<&OracleFacts> for Evidence {
    fn from(f: &OracleFacts) -> Self {
        Evidence {
            knotted: f.nontrivial > 0,
            planar: f.planarity == PlanarityStatus::Certified,
            undecided: f.inconclusive,
        }
    }
}

fn records_for(
    m: &MontesinosPresentation,
    first_index: u64,
    skip: u64,
    cfg: &RunConfig,
    cache: &Cache,
) -> Result<Vec<Record>, CliError> {
    // Refinement reuses the cached oracle facts below.
    let opts = ClassifyOptions { refine: false, oracle: cfg.oracle() };
    let addrs = addresses(m);
    let mut out = Vec::new();
    let mut index = first_index;
    for k in 0..=cfg.bounds.max_vertices.min(addrs.len()) {
        for set in subsets(addrs.len(), k) {
            index += 1;
            if index - 1 < first_index + skip {
                continue;
            }
            let (verdict, exceptional, diagram, input) = if k == 0 {
                (classify_closure(m).verdict, None, closure_diagram(m), m.to_string())
            } else {
                let v = VertexInsertion::new(set.iter().map(|&i| addrs[i]).collect())?;
                let c = classify_insertion_closure(m, &v, &opts)?;
                let ex = c.witness.exceptional.as_ref().map(|e| e.is_exceptional());
                let d = normalize(&apply_insertion(m, &v)?).closure();
                (c.verdict, ex, d, format!("{m} {v}"))
            };
            let oracle = facts(&diagram, &cfg.oracle(), cache)?;
            let verdict = match verdict {
                Verdict::NotRavel if cfg.refine && oracle.nontrivial > 0 => Verdict::ContainsNontrivialKnotOrLink,
                Verdict::NotRavel if cfg.refine && oracle.planarity == PlanarityStatus::Certified => Verdict::Planar,
                v => v,
            };
            let agreement = agreement(&verdict, (&oracle).into());
            out.push(Record { index: index - 1, input, vertices: k, verdict, exceptional, oracle, agreement });
        }
    }
    Ok(out)
}

/// Writes records from index `start` on, at most `limit` of them, one JSON
/// object per line.
pub fn enumerate<W: Write>(cfg: &RunConfig, start: u64, limit: Option<u64>, out: &mut W) -> Result<Totals, CliError> {
    let ps = presentations(&cfg.bounds);
    // (presentation, index of its first record, records to skip)
    let mut work = Vec::new();
    let mut index = 0u64;
    for m in ps {
        let n = record_count(&m, cfg.bounds.max_vertices);
        if index + n > start {
            work.push((m, index, start.saturating_sub(index)));
        }
        index += n;
    }
    let cache: Cache = Mutex::new(HashMap::new());
    let mut totals = Totals { cursor: start, ..Totals::default() };
    let mut remaining = limit.unwrap_or(u64::MAX);
    for batch in work.chunks(BATCH) {
        if remaining == 0 {
            break;
        }
        let results: Vec<Result<Vec<Record>, CliError>> = batch
            .par_iter()
            .map(|(m, first, skip)| records_for(m, *first, *skip, cfg, &cache))
            .collect();
        for r in results {
            for rec in r? {
                if remaining == 0 {
                    break;
                }
                remaining -= 1;
                serde_json::to_writer(&mut *out, &rec).map_err(|e| CliError::Io(e.to_string()))?;
                out.write_all(b"\n").map_err(|e| CliError::Io(e.to_string()))?;
                totals.records += 1;
                totals.cursor = rec.index + 1;
                match rec.agreement {
                    Agreement::Agree => totals.agree += 1,
                    Agreement::Inconclusive(_) => totals.inconclusive += 1,
                    Agreement::Disagree(_) => totals.disagree += 1,
                }
            }
        }
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(max_summands: usize, max_crossings: usize, max_vertices: usize) -> RunConfig {
        RunConfig { bounds: Bounds { max_summands, max_crossings, max_vertices }, ..RunConfig::default() }
    }

    #[test]
    fn counts_match_the_listing() {
        let cfg = small(2, 3, 2);
        let mut buf = Vec::new();
        let t = enumerate(&cfg, 0, None, &mut buf).unwrap();
        let expected: u64 = presentations(&cfg.bounds).iter().map(|m| record_count(m, 2)).sum();
        assert_eq!(t.records, expected);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count() as u64, expected);
    }

    #[test]
    fn resuming_continues_the_same_stream() {
        let cfg = small(2, 3, 1);
        let mut all = Vec::new();
        enumerate(&cfg, 0, None, &mut all).unwrap();
        let mut head = Vec::new();
        let t = enumerate(&cfg, 0, Some(57), &mut head).unwrap();
        let mut tail = Vec::new();
        enumerate(&cfg, t.cursor, None, &mut tail).unwrap();
        head.extend(tail);
        assert_eq!(head, all);
    }

    #[test]
    fn zero_bounds_give_nothing() {
        for cfg in [small(0, 4, 2), small(2, 0, 2)] {
            let mut buf = Vec::new();
            assert_eq!(enumerate(&cfg, 0, None, &mut buf).unwrap().records, 0);
            assert!(buf.is_empty());
        }
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(subsets(4, 0), vec![Vec::<usize>::new()]);
    }
}
