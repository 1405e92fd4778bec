use std::collections::HashSet;

use proptest::prelude::*;
use repcomp::codelen::{Lattice, QuantizedMatrix};
use repcomp::grammar::{self, build_grammar, earley_parse, GrammarParams, GrammarSpec, ParseTree, Parser, SemanticsProgram, Symbol};
use repcomp::metrics::compositionality;
use repcomp::Error;

fn normalized(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

#[test]
fn golden_listing() {
    let g = build_grammar(5, 2, 3, 10).unwrap();
    let golden = include_str!("data/grammar_t5_w2_d3.txt");
    assert_eq!(normalized(&g.pretty()), normalized(golden));
}

/// Alternatives per level counted without building the grammar: `2T` child
/// pairs at level 0, `width²` above, plus `width²` recursive rules on top.
fn enumerated_alternatives(t: u32, width: u32, depth: u32) -> usize {
    let mut total = 0;
    for level in 0..depth {
        total += if level == 0 { (2 * t) as usize } else { (width * width) as usize };
    }
    total + (width * width) as usize
}

#[test]
fn alternative_count_matches_enumeration() {
    for (t, w, d) in [(5, 3, 2), (5, 1, 1), (5, 2, 3), (3, 2, 4), (7, 4, 2)] {
        let g = build_grammar(t, w, d, 100).unwrap();
        assert_eq!(g.rule_count(), enumerated_alternatives(t, w, d), "T={t} width={w} depth={d}");
    }
    assert_eq!(enumerated_alternatives(5, 3, 2), 28);
}

#[test]
fn doubling_width_adds_alternatives() {
    for w in [1, 2, 4] {
        let a = build_grammar(5, w, 2, 100).unwrap().rule_count();
        let b = build_grammar(5, 2 * w, 2, 100).unwrap().rule_count();
        assert!(b > a);
    }
}

#[test]
fn every_production_is_binary_and_leveled() {
    let g = build_grammar(5, 3, 3, 100).unwrap();
    for p in &g.productions {
        let Symbol::Rule { level, .. } = p.parent else { panic!("parent {:?}", p.parent) };
        for child in [p.left, p.right] {
            match child {
                Symbol::Pos(_) => assert_eq!(level, 0),
                Symbol::Rule { level: l, .. } => assert!(l + 1 == level || (l == level && level == g.top_level())),
                Symbol::Start => panic!("start used as a child"),
            }
        }
    }
}

#[test]
fn pos_transitions() {
    let g = build_grammar(5, 2, 1, 5).unwrap();
    // one word per POS: word w has POS w+1
    assert!(earley_parse(&g, &[0, 1, 3, 4]).is_ok());
    assert!(matches!(earley_parse(&g, &[0, 3]), Err(Error::NoParse(_))));
}

#[test]
fn length_two_sentence_is_one_rule() {
    let g = build_grammar(5, 2, 1, 10).unwrap();
    let t = earley_parse(&g, &[0, 1]).unwrap();
    let ParseTree::Node { rule, left, right } = &t else { panic!("{t:?}") };
    assert!(matches!(**left, ParseTree::Leaf { word: 0 }));
    assert!(matches!(**right, ParseTree::Leaf { word: 1 }));
    let p = g.productions[*rule];
    assert_eq!(p.parent, Symbol::Rule { level: 0, index: 1 });
    assert_eq!((p.left, p.right), (Symbol::Pos(1), Symbol::Pos(2)));
    assert_eq!(*rule, 0);
}

#[test]
fn sampled_sentences_parse() {
    for (m, depth) in [(2, 1), (4, 2), (8, 2), (16, 2)] {
        let g = build_grammar(5, 3, depth, 100).unwrap();
        let w = grammar::sample_sentences(&g, 1000, m, m as u64).unwrap();
        let parser = Parser::new(&g);
        for i in 0..w.rows() {
            let tree = parser.parse(w.row(i)).unwrap_or_else(|e| panic!("M={m} row {i}: {e}"));
            assert!(g.is_valid_parse(&tree, w.row(i)));
        }
    }
}

/// CKY recognizer over the same productions.
fn cky_accepts(g: &GrammarSpec, sentence: &[u32]) -> bool {
    let n = sentence.len();
    let mut table: Vec<Vec<HashSet<Symbol>>> = vec![vec![HashSet::new(); n + 1]; n + 1];
    for (i, &w) in sentence.iter().enumerate() {
        table[i][i + 1].insert(Symbol::Pos(g.pos_of(w)));
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            for k in i + 1..j {
                for p in &g.productions {
                    if table[i][k].contains(&p.left) && table[k][j].contains(&p.right) {
                        table[i][j].insert(p.parent);
                    }
                }
            }
        }
    }
    g.start_symbols().iter().any(|s| table[0][n].contains(s))
}

fn all_sentences(vocab: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|s| (0..vocab).map(move |w| [s.clone(), vec![w]].concat())).collect();
    }
    out
}

#[test]
fn earley_agrees_with_cky() {
    for (t, w, d) in [(3, 1, 1), (3, 2, 2), (4, 2, 1)] {
        let g = build_grammar(t, w, d, t as usize).unwrap();
        assert!(g.rule_count() <= 40);
        let parser = Parser::new(&g);
        let mut accepted = 0;
        for len in 1..=8 {
            for s in all_sentences(t, len) {
                let cky = cky_accepts(&g, &s);
                let earley = parser.parse(&s);
                assert_eq!(cky, earley.is_ok(), "{s:?}");
                if let Ok(tree) = earley {
                    assert!(g.is_valid_parse(&tree, &s));
                    accepted += 1;
                }
            }
        }
        assert!(accepted > 0);
    }
}

fn matvec(x: &[f64], a: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|c| (0..x.len()).map(|r| x[r] * a[r * d + c]).sum()).collect()
}

#[test]
fn balanced_tree_matches_matrix_chain() {
    let g = build_grammar(5, 2, 2, 10).unwrap();
    let lat = Lattice::new(1.0).unwrap();
    let d = 3;
    let mut sem = SemanticsProgram::sample(&g, d, lat, 0).unwrap();
    let small = |seed: i64, len: usize| (0..len as i64).map(|i| ((i * 7 + seed * 3) % 5) - 2).collect::<Vec<_>>();
    sem.embeddings = QuantizedMatrix::from_indices(10, d, small(1, 10 * d), lat).unwrap();
    for (i, m) in sem.rule_maps.iter_mut().enumerate() {
        *m = QuantizedMatrix::from_indices(2 * d, d, small(i as i64 + 2, 2 * d * d), lat).unwrap();
    }
    let sentence = [0, 1, 2, 3];
    let tree = earley_parse(&g, &sentence).unwrap();
    let ParseTree::Node { rule: top, left, right } = &tree else { panic!() };
    let (ParseTree::Node { rule: a, .. }, ParseTree::Node { rule: b, .. }) = (&**left, &**right) else { panic!() };
    let emb = sem.embeddings.to_real();
    let e = |w: usize| emb[w * d..(w + 1) * d].to_vec();
    let map = |r: usize| sem.rule_maps[r].to_real();
    let l = matvec(&[e(0), e(1)].concat(), &map(*a), d);
    let r = matvec(&[e(2), e(3)].concat(), &map(*b), d);
    let expected = matvec(&[l, r].concat(), &map(*top), d);
    assert_eq!(grammar::decode(&g, &sem, &tree).unwrap(), expected);
}

#[test]
fn missing_rule_map_is_a_contract_error() {
    let g = build_grammar(5, 2, 1, 10).unwrap();
    let mut sem = SemanticsProgram::sample(&g, 2, Lattice::new(0.1).unwrap(), 0).unwrap();
    sem.rule_maps.clear();
    let t = earley_parse(&g, &[0, 1]).unwrap();
    assert!(matches!(grammar::decode(&g, &sem, &t), Err(Error::Contract(_))));
}

#[test]
fn table_bits_grow_with_depth() {
    let mut prev = 0.0;
    for depth in 1..=4 {
        let p = GrammarParams { n: 16, m: 16, depth, ..Default::default() };
        let s = grammar::generate(&p).unwrap();
        let b = grammar::complexity(&s.program, &s.tokens, &s.noise).unwrap();
        assert!(b.k_f > prev, "depth {depth}");
        prev = b.k_f;
        assert!(compositionality(&b).unwrap() >= 1.0);
    }
}

#[test]
fn noise_round_trip_is_exact() {
    let p = GrammarParams { n: 40, ..Default::default() };
    let noisy = grammar::generate(&p).unwrap();
    let clean = grammar::generate(&GrammarParams { r: 0.0, ..p }).unwrap();
    assert_eq!(noisy.tokens, clean.tokens);
    assert_eq!(noisy.z.sub(&clean.z).unwrap(), noisy.noise);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parses_are_sound_and_idempotent(seed in 0u64..10_000, width in 1u32..4, depth in 1u32..4, units in 1usize..4) {
        let g = build_grammar(5, width, depth, 25).unwrap();
        let m = units << depth;
        let w = grammar::sample_sentences(&g, 1, m, seed).unwrap();
        let a = earley_parse(&g, w.row(0)).unwrap();
        prop_assert!(g.is_valid_parse(&a, w.row(0)));
        prop_assert_eq!(a, earley_parse(&g, w.row(0)).unwrap());
    }
}
