use proptest::prelude::*;
use ravel::classify::closure_diagram;
use ravel::diagram::{braid_closure_pd, build_tangle_diagram, trace_strands, PdCode};
use ravel::invariants::{bracket_skein, bracket_state_sum, is_alternating, is_trivial, jones, LaurentPoly, Triviality};
use ravel::oracle::{constituent_statuses, OracleConfig};
use ravel::tangle_core::{parity_from_fraction, BoxVector, MontesinosPresentation};

fn braid() -> impl Strategy<Value = (usize, Vec<i32>)> {
    (2usize..=4).prop_flat_map(|s| {
        let g = (1..s as i32).prop_flat_map(|k| prop_oneof![Just(k), Just(-k)]);
        (Just(s), prop::collection::vec(g, 1..=12))
    })
}

fn box_vector() -> impl Strategy<Value = BoxVector> {
    (prop::collection::vec(1i64..=4, 1..=5), any::<bool>(), any::<bool>()).prop_map(|(mut v, lead0, neg)| {
        if lead0 {
            v.insert(0, 0);
        }
        if neg {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        BoxVector::new(v).unwrap()
    })
}

// Splits the arc `l` with a curl. `ccw` picks the curl whose B-smoothing
// closes the loop.
fn add_kink(pd: &PdCode, ccw: bool) -> PdCode {
    let mut out = pd.clone();
    let top = pd.crossings.iter().flatten().max().copied().unwrap_or(0);
    let (l, m, n) = (pd.crossings[0][0], top + 1, top + 2);
    let second = out
        .crossings
        .iter()
        .enumerate()
        .flat_map(|(i, x)| (0..4).map(move |p| (i, p, x[p])))
        .filter(|&(_, _, y)| y == l)
        .nth(1)
        .unwrap();
    out.crossings[second.0][second.1] = n;
    out.crossings.push(if ccw { [l, m, m, n] } else { [l, n, m, m] });
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bracket_routes_agree((s, w) in braid()) {
        let pd = braid_closure_pd(s, &w);
        pd.validate().unwrap();
        prop_assert_eq!(bracket_state_sum(&pd).unwrap(), bracket_skein(&pd).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parity_follows_fraction(b in box_vector()) {
        let traced = trace_strands(&build_tangle_diagram(&b)).unwrap().parity();
        prop_assert_eq!(traced, parity_from_fraction(b.fraction()));
    }

    #[test]
    fn curls_multiply_by_a_unit((s, w) in braid(), ccw in any::<bool>()) {
        let pd = braid_closure_pd(s, &w);
        let b = bracket_skein(&pd).unwrap();
        let k = bracket_skein(&add_kink(&pd, ccw)).unwrap();
        let unit = -&LaurentPoly::monomial(if ccw { -3 } else { 3 }, 1);
        prop_assert_eq!(k, &unit * &b);
    }

    #[test]
    fn pd_text_round_trips((s, w) in braid()) {
        let pd = braid_closure_pd(s, &w);
        prop_assert_eq!(PdCode::parse(&pd.to_text()).unwrap(), pd);
    }

    #[test]
    fn mirror_braids_mirror_jones((s, w) in braid()) {
        let pd = braid_closure_pd(s, &w);
        let neg: Vec<i32> = w.iter().map(|g| -g).collect();
        let j = jones(&pd).unwrap();
        let mut want: Vec<(i32, i64)> = j.terms().into_iter().map(|(e, c)| (-e, c)).collect();
        want.sort();
        prop_assert_eq!(jones(&braid_closure_pd(s, &neg)).unwrap().terms(), want);
    }
}

#[test]
fn braid_closures_of_known_links() {
    assert_eq!(is_trivial(&braid_closure_pd(2, &[1, 1, 1]), 1000), Triviality::Nontrivial);
    assert_eq!(is_trivial(&braid_closure_pd(3, &[1, -2]), 1000), Triviality::Trivial);
    assert_eq!(is_trivial(&braid_closure_pd(2, &[1, 1]), 1000), Triviality::Nontrivial);
    assert_eq!(braid_closure_pd(3, &[1]).components, 2);
}

/// Whether some face meets a crossing at two of its corners.
fn has_nugatory_crossing(pd: &PdCode) -> bool {
    let d = pd.to_diagram().unwrap();
    d.faces().iter().any(|f| {
        let mut nodes: Vec<usize> = f.iter().map(|&(n, _)| n).collect();
        let len = nodes.len();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.len() < len
    })
}

fn is_connected_projection(pd: &PdCode) -> bool {
    let d = pd.to_diagram().unwrap();
    d.free_loops() == 0 && d.components().len() == 1
}

// A connected reduced alternating diagram with n crossings has bracket span 4n.
#[test]
fn reduced_alternating_constituents_have_full_span() {
    let cat: Vec<BoxVector> = BoxVector::catalog(5).into_iter().filter(|b| b.fraction().q > 1).collect();
    let mut checked = 0;
    for a in &cat {
        for b in &cat {
            let m = MontesinosPresentation::from_box_vectors(vec![a.clone(), b.clone()]);
            let d = closure_diagram(&m);
            for c in constituent_statuses(&d, &OracleConfig::default()).unwrap() {
                let pd = &c.pd;
                if pd.crossing_count() == 0
                    || !is_alternating(pd)
                    || !is_connected_projection(pd)
                    || has_nugatory_crossing(pd)
                {
                    continue;
                }
                let span = bracket_skein(pd).unwrap().span();
                assert_eq!(span as usize, 4 * pd.crossing_count(), "{m}\n{pd}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "only {checked} diagrams");
}
