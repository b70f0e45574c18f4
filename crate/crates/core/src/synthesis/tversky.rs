//! Direct search for cancellation cycles in a pairwise relation.
//!
//! A cycle is a multiset of relation rows whose left scores are a permutation
//! of the right scores and whose left diversity levels are a permutation of
//! the right ones. Rows may repeat.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::relation::{PairwiseRelation, RelPair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TverskyCycle {
    pub rows: Vec<RelPair>,
    /// `score_perm[i] = k`: the right score of row `i` is the left score of row `k`.
    pub score_perm: Vec<usize>,
    pub diversity_perm: Vec<usize>,
}

impl TverskyCycle {
    pub fn validate(&self, rel: &PairwiseRelation) -> bool {
        let m = self.rows.len();
        let bijection = |perm: &[usize]| {
            let mut seen = vec![false; m];
            perm.len() == m && perm.iter().all(|&k| k < m && !std::mem::replace(&mut seen[k], true))
        };
        m > 0
            && self.rows.iter().all(|r| rel.contains(&r.better, &r.worse))
            && bijection(&self.score_perm)
            && bijection(&self.diversity_perm)
            && (0..m).all(|i| self.rows[i].worse.score == self.rows[self.score_perm[i]].better.score)
            && (0..m).all(|i| self.rows[i].worse.diversity() == self.rows[self.diversity_perm[i]].better.diversity())
    }
}

struct Search<'a> {
    rel: &'a PairwiseRelation,
    /// per row: left score, right score, left diversity, right diversity
    coords: Vec<[usize; 4]>,
    counts: Vec<usize>,
    score_bal: Vec<i64>,
    div_bal: Vec<i64>,
    failed: HashMap<Vec<usize>, usize>,
}

impl Search<'_> {
    fn apply(&mut self, r: usize, sign: i64) {
        let [ls, rs, ld, rd] = self.coords[r];
        self.score_bal[ls] += sign;
        self.score_bal[rs] -= sign;
        self.div_bal[ld] += sign;
        self.div_bal[rd] -= sign;
        if sign > 0 {
            self.counts[r] += 1;
        } else {
            self.counts[r] -= 1;
        }
    }

    fn balanced(&self) -> bool {
        self.score_bal.iter().all(|&b| b == 0) && self.div_bal.iter().all(|&b| b == 0)
    }

    /// Rows extending the multiset that can fix the first unbalanced coordinate.
    fn candidates(&self, first: usize) -> Vec<usize> {
        let pick = |bal: &[i64], left: usize, right: usize| -> Option<Vec<usize>> {
            let (c, &b) = bal.iter().enumerate().find(|(_, &b)| b != 0)?;
            Some(
                (first..self.coords.len())
                    .filter(|&r| if b > 0 { self.coords[r][right] == c } else { self.coords[r][left] == c })
                    .collect(),
            )
        };
        pick(&self.div_bal, 2, 3).or_else(|| pick(&self.score_bal, 0, 1)).unwrap_or_default()
    }

    fn dfs(&mut self, first: usize, remaining: usize) -> bool {
        if self.balanced() {
            return true;
        }
        if remaining == 0 {
            return false;
        }
        let need = |bal: &[i64]| (bal.iter().map(|b| b.unsigned_abs()).sum::<u64>() as usize).div_ceil(2);
        if need(&self.score_bal) > remaining || need(&self.div_bal) > remaining {
            return false;
        }
        if self.failed.get(&self.counts).is_some_and(|&r| r >= remaining) {
            return false;
        }
        for r in self.candidates(first) {
            self.apply(r, 1);
            if self.dfs(first, remaining - 1) {
                return true;
            }
            self.apply(r, -1);
        }
        self.failed.insert(self.counts.clone(), remaining);
        false
    }
}

/// Shortest cycle of at most `max_len` rows, if any.
pub fn find_tversky_cycle(rel: &PairwiseRelation, max_len: usize) -> Option<TverskyCycle> {
    let scores = rel.scores();
    let divs = rel.diversities();
    let si = |s| scores.binary_search(s).unwrap();
    let di = |d: (crate::model::Identity, usize)| divs.binary_search(&d).unwrap();
    let coords: Vec<[usize; 4]> = rel
        .pairs
        .iter()
        .map(|p| [si(&p.better.score), si(&p.worse.score), di(p.better.diversity()), di(p.worse.diversity())])
        .collect();
    let mut search = Search {
        rel,
        counts: vec![0; coords.len()],
        score_bal: vec![0; scores.len()],
        div_bal: vec![0; divs.len()],
        coords,
        failed: HashMap::new(),
    };
    for len in 2..=max_len {
        for start in 0..rel.len() {
            search.failed.clear();
            search.apply(start, 1);
            let found = search.dfs(start, len - 1);
            if found {
                return Some(search.certificate());
            }
            search.apply(start, -1);
        }
    }
    None
}

impl Search<'_> {
    fn certificate(&self) -> TverskyCycle {
        let rows: Vec<RelPair> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(r, &c)| std::iter::repeat_n(self.rel.pairs[r].clone(), c))
            .collect();
        let match_by = |key: &dyn Fn(&RelPair, bool) -> String| -> Vec<usize> {
            let mut taken = HashSet::new();
            rows.iter()
                .map(|r| {
                    let k = (0..rows.len()).find(|&k| !taken.contains(&k) && key(&rows[k], true) == key(r, false)).unwrap();
                    taken.insert(k);
                    k
                })
                .collect()
        };
        let score_perm = match_by(&|r, left| if left { r.better.score.to_string() } else { r.worse.score.to_string() });
        let diversity_perm = match_by(&|r, left| {
            let d = if left { r.better.diversity() } else { r.worse.diversity() };
            format!("{:?}", d)
        });
        TverskyCycle { rows, score_perm, diversity_perm }
    }
}
