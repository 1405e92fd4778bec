//! Earley recognizer with canonical tree extraction.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{GrammarSpec, Symbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseTree {
    Leaf { word: u32 },
    /// `rule` is the production id in [`GrammarSpec::productions`].
    Node { rule: usize, left: Box<ParseTree>, right: Box<ParseTree> },
}

impl ParseTree {
    pub fn leaves(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<u32>) {
        match self {
            ParseTree::Leaf { word } => out.push(*word),
            ParseTree::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Production ids in pre-order.
    pub fn rules(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if let ParseTree::Node { rule, left, right } = t {
                out.push(*rule);
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct CompiledRule {
    lhs: usize,
    rhs: Vec<usize>,
}

/// A grammar compiled for repeated parsing.
///
/// Symbol ids: 0 is `start`, `1..=T` are parts of speech, then the leveled
/// non-terminals in level-major order.
#[derive(Debug, Clone)]
pub struct Parser<'g> {
    spec: &'g GrammarSpec,
    n_symbols: usize,
    rules: Vec<CompiledRule>,
    by_lhs: Vec<Vec<usize>>,
    /// Start rules occupy ids `0..n_start`; the rest map to production
    /// `id - n_start`.
    n_start: usize,
}

impl<'g> Parser<'g> {
    pub fn new(spec: &'g GrammarSpec) -> Self {
        let t = spec.pos_count as usize;
        let w = spec.width as usize;
        let n_symbols = 1 + t + w * spec.depth as usize;
        let sym = |s: Symbol| -> usize {
            match s {
                Symbol::Start => 0,
                Symbol::Pos(p) => p as usize,
                Symbol::Rule { level, index } => 1 + t + level as usize * w + (index - 1) as usize,
            }
        };
        let mut rules: Vec<CompiledRule> =
            spec.start_symbols().into_iter().map(|s| CompiledRule { lhs: 0, rhs: vec![sym(s)] }).collect();
        let n_start = rules.len();
        rules.extend(
            spec.productions
                .iter()
                .map(|p| CompiledRule { lhs: sym(p.parent), rhs: vec![sym(p.left), sym(p.right)] }),
        );
        let mut by_lhs = vec![Vec::new(); n_symbols];
        for (i, r) in rules.iter().enumerate() {
            by_lhs[r.lhs].push(i);
        }
        Self { spec, n_symbols, rules, by_lhs, n_start }
    }

    fn is_pos(&self, s: usize) -> bool {
        s >= 1 && s <= self.spec.pos_count as usize
    }

    /// Parses `sentence` from `start`, returning the canonical tree.
    pub fn parse(&self, sentence: &[u32]) -> Result<ParseTree> {
        let n = sentence.len();
        for &w in sentence {
            if w as usize >= self.spec.vocab {
                return Err(Error::TokenOutOfRange { token: w, vocab: self.spec.vocab });
            }
        }
        if n == 0 {
            return Err(Error::NoParse("empty sentence".into()));
        }
        let pos: Vec<usize> = sentence.iter().map(|&w| self.spec.pos_of(w) as usize).collect();
        let spans = self.recognize(&pos);
        let idx = |s: usize, i: usize, j: usize| (s * (n + 1) + i) * (n + 1) + j;
        if !spans[idx(0, 0, n)] {
            return Err(Error::NoParse(format!("no derivation for sentence {sentence:?}")));
        }
        let has = |s: usize, i: usize, j: usize| spans[idx(s, i, j)];
        for r in 0..self.n_start {
            let top = self.rules[r].rhs[0];
            if has(top, 0, n) {
                return Ok(self.build(top, 0, n, sentence, &has));
            }
        }
        Err(Error::NoParse("start derivation without a top-level span".into()))
    }

    /// Earley chart; returns a dense table of completed spans per symbol.
    fn recognize(&self, pos: &[usize]) -> Vec<bool> {
        let n = pos.len();
        let idx = |s: usize, i: usize, j: usize| (s * (n + 1) + i) * (n + 1) + j;
        let mut spans = vec![false; self.n_symbols * (n + 1) * (n + 1)];
        for (i, &p) in pos.iter().enumerate() {
            spans[idx(p, i, i + 1)] = true;
        }
        // (rule, dot, origin)
        let mut chart: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<(usize, usize, usize)>> = vec![HashSet::new(); n + 1];
        fn add(
            chart: &mut [Vec<(usize, usize, usize)>],
            seen: &mut [HashSet<(usize, usize, usize)>],
            at: usize,
            item: (usize, usize, usize),
        ) {
            if seen[at].insert(item) {
                chart[at].push(item);
            }
        }
        for &r in &self.by_lhs[0] {
            add(&mut chart, &mut seen, 0, (r, 0, 0));
        }
        for i in 0..=n {
            let mut j = 0;
            while j < chart[i].len() {
                let (r, dot, origin) = chart[i][j];
                j += 1;
                let rule = &self.rules[r];
                if dot == rule.rhs.len() {
                    spans[idx(rule.lhs, origin, i)] = true;
                    let waiting: Vec<_> = chart[origin]
                        .iter()
                        .filter(|&&(r2, d2, _)| self.rules[r2].rhs.get(d2) == Some(&rule.lhs))
                        .copied()
                        .collect();
                    for (r2, d2, o2) in waiting {
                        add(&mut chart, &mut seen, i, (r2, d2 + 1, o2));
                    }
                    continue;
                }
                let next = rule.rhs[dot];
                if self.is_pos(next) {
                    if i < n && pos[i] == next {
                        add(&mut chart, &mut seen, i + 1, (r, dot + 1, origin));
                    }
                } else {
                    for &r2 in &self.by_lhs[next] {
                        add(&mut chart, &mut seen, i, (r2, 0, i));
                    }
                }
            }
        }
        spans
    }

    fn build(&self, s: usize, i: usize, j: usize, sentence: &[u32], has: &dyn Fn(usize, usize, usize) -> bool) -> ParseTree {
        if self.is_pos(s) {
            return ParseTree::Leaf { word: sentence[i] };
        }
        for &r in &self.by_lhs[s] {
            let (l, rt) = (self.rules[r].rhs[0], self.rules[r].rhs[1]);
            for k in i + 1..j {
                if has(l, i, k) && has(rt, k, j) {
                    return ParseTree::Node {
                        rule: r - self.n_start,
                        left: Box::new(self.build(l, i, k, sentence, has)),
                        right: Box::new(self.build(rt, k, j, sentence, has)),
                    };
                }
            }
        }
        unreachable!("completed span without a binary decomposition")
    }
}

/// One-shot convenience wrapper around [`Parser`].
pub fn earley_parse(spec: &GrammarSpec, sentence: &[u32]) -> Result<ParseTree> {
    Parser::new(spec).parse(sentence)
}
