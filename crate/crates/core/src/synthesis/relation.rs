//! The revealed relation over (score, identity, count) triples.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::SynthesisError;
use crate::menus::{members, subsets_of_size, MenuError};
use crate::model::{profiles_up_to, DimensionSchema, Identity, Individual, Score, ScoreSet, Type, TypeProfile};
use crate::rules::RuleSpec;

/// `(s, θ, n)`: an individual of score `s` chosen as the `n`-th member of identity `θ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Triple {
    pub score: Score,
    pub identity: Identity,
    pub count: usize,
}

impl Triple {
    pub fn new(score: Score, identity: Identity, count: usize) -> Self {
        Triple { score, identity, count }
    }

    pub fn diversity(&self) -> (Identity, usize) {
        (self.identity.clone(), self.count)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id: Vec<String> = self.identity.0.iter().map(u8::to_string).collect();
        write!(f, "({}, {}, {})", self.score, id.join("/"), self.count)
    }
}

/// The menu `I ∪ {j, k}` with positions of `j` (chosen) and `k` (rejected).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub menu: Vec<Individual>,
    pub chosen: usize,
    pub rejected: usize,
}

impl Provenance {
    /// `menu - k` is chosen and `menu - j` is not.
    pub fn replays(&self, rule: &RuleSpec, schema: &DimensionSchema) -> bool {
        let refs: Vec<&Individual> = self.menu.iter().collect();
        let Ok(result) = rule.apply(schema, &refs) else { return false };
        let without = |skip: usize| TypeProfile::of(self.menu.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, p)| p));
        result.is_chosen(&without(self.rejected)) && !result.is_chosen(&without(self.chosen))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelPair {
    pub better: Triple,
    pub worse: Triple,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PairwiseRelation {
    pub pairs: Vec<RelPair>,
    #[serde(skip)]
    seen: HashSet<(Triple, Triple)>,
}

impl PairwiseRelation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Relation without provenance, for generated test instances.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Triple, Triple)>) -> Self {
        let mut r = Self::new();
        for (b, w) in pairs {
            r.insert(RelPair { better: b, worse: w, provenance: None });
        }
        r
    }

    /// Keeps the first provenance of a repeated pair.
    pub fn insert(&mut self, pair: RelPair) -> bool {
        if pair.better == pair.worse || !self.seen.insert((pair.better.clone(), pair.worse.clone())) {
            return false;
        }
        self.pairs.push(pair);
        true
    }

    pub fn extend(&mut self, other: PairwiseRelation) {
        for p in other.pairs {
            self.insert(p);
        }
    }

    pub fn contains(&self, better: &Triple, worse: &Triple) -> bool {
        self.seen.contains(&(better.clone(), worse.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn scores(&self) -> Vec<Score> {
        let mut s: Vec<Score> = self.pairs.iter().flat_map(|p| [p.better.score, p.worse.score]).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn diversities(&self) -> Vec<(Identity, usize)> {
        let mut d: Vec<(Identity, usize)> = self.pairs.iter().flat_map(|p| [p.better.diversity(), p.worse.diversity()]).collect();
        d.sort();
        d.dedup();
        d
    }
}

/// Pairs revealed by one menu of size `q + 1`.
pub fn pairs_of_menu(rule: &RuleSpec, schema: &DimensionSchema, menu: &[Individual]) -> Result<Vec<RelPair>, SynthesisError> {
    let refs: Vec<&Individual> = menu.iter().collect();
    let ids = || menu.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
    let result = rule
        .apply(schema, &refs)
        .map_err(|error| SynthesisError::Menu(MenuError::Rule { menu: ids(), error }))?;
    if result.chosen.len() != 1 {
        return Err(SynthesisError::NotTypeFunctional { menu: ids() });
    }
    let (chosen, witness) = (&result.chosen[0], &result.witnesses[0]);
    if chosen.len() + 1 != menu.len() {
        return Ok(Vec::new());
    }
    let k = (0..menu.len()).find(|i| !witness.contains(i)).unwrap();
    let mut out = Vec::new();
    for &j in witness {
        if menu[j].kind() == menu[k].kind() {
            continue;
        }
        let swapped = chosen.without(&menu[j].kind()).unwrap().with(menu[k].kind());
        out.push(RelPair {
            better: Triple::new(menu[j].score, menu[j].identity.clone(), chosen.count_identity(&menu[j].identity)),
            worse: Triple::new(menu[k].score, menu[k].identity.clone(), swapped.count_identity(&menu[k].identity)),
            provenance: Some(Provenance { menu: menu.to_vec(), chosen: j, rejected: k }),
        });
    }
    Ok(out)
}

fn collect(results: Vec<Result<Vec<RelPair>, SynthesisError>>) -> Result<PairwiseRelation, SynthesisError> {
    let mut rel = PairwiseRelation::new();
    for r in results {
        for p in r? {
            rel.insert(p);
        }
    }
    Ok(rel)
}

/// Relation revealed by every `(q + 1)`-subset of the universe.
pub fn extract_pairwise_relation(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    cap: usize,
) -> Result<PairwiseRelation, SynthesisError> {
    if universe.len() > cap.min(30) {
        return Err(SynthesisError::Menu(MenuError::UniverseTooLarge { size: universe.len(), cap: cap.min(30) }));
    }
    let menus = subsets_of_size(universe.len(), rule.capacity + 1);
    let results: Vec<_> = menus
        .par_iter()
        .map(|&m| {
            let menu: Vec<Individual> = members(m).map(|i| universe[i].clone()).collect();
            pairs_of_menu(rule, schema, &menu)
        })
        .collect();
    collect(results)
}

/// `n` individuals of type `t`, named `<identity>.<score index>.<k>`.
pub fn synthetic(schema: &DimensionSchema, scores: &ScoreSet, t: &Type, n: usize, start: usize) -> Vec<Individual> {
    let si = scores.index_of(t.score).unwrap_or(0);
    (start..start + n)
        .map(|k| Individual::new(format!("{}.{}.{}", schema.format_identity(&t.identity), si, k), t.identity.clone(), t.score))
        .collect()
}

pub fn synthetic_menu(schema: &DimensionSchema, scores: &ScoreSet, p: &TypeProfile) -> Vec<Individual> {
    p.grouped().iter().flat_map(|(t, n)| synthetic(schema, scores, t, *n, 1)).collect()
}

/// Relation revealed by every type multiset of size `q + 1`.
pub fn extract_type_relation(rule: &RuleSpec, schema: &DimensionSchema, scores: &ScoreSet) -> Result<PairwiseRelation, SynthesisError> {
    let types: Vec<Type> = crate::model::all_types(schema, scores);
    let size = rule.capacity + 1;
    let menus: Vec<TypeProfile> = profiles_up_to(&types, size).into_iter().filter(|p| p.len() == size).collect();
    let results: Vec<_> = menus.par_iter().map(|p| pairs_of_menu(rule, schema, &synthetic_menu(schema, scores, p))).collect();
    collect(results)
}

/// Pairs revealed inside a larger menu: the chosen set plus each rejected individual.
pub fn pairs_within(rule: &RuleSpec, schema: &DimensionSchema, menu: &[Individual]) -> Result<PairwiseRelation, SynthesisError> {
    let refs: Vec<&Individual> = menu.iter().collect();
    let result = rule
        .apply(schema, &refs)
        .map_err(|error| SynthesisError::Menu(MenuError::Rule { menu: menu.iter().map(|p| p.id.clone()).collect(), error }))?;
    let mut rel = PairwiseRelation::new();
    for w in &result.witnesses {
        for k in (0..menu.len()).filter(|i| !w.contains(i)) {
            let sub: Vec<Individual> = w.iter().chain(std::iter::once(&k)).map(|&i| menu[i].clone()).collect();
            for p in pairs_of_menu(rule, schema, &sub)? {
                rel.insert(p);
            }
        }
    }
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Slot, TieBreak};

    fn schema() -> DimensionSchema {
        DimensionSchema::from_names(&[("g", &["a", "b"])]).unwrap()
    }

    #[test]
    fn example3_pairs() {
        let s = schema();
        let a = Identity::new(&[0]);
        let b = Identity::new(&[1]);
        let rule = RuleSpec::reserve(vec![Slot::Open, Slot::Reserve(a.clone()), Slot::Reserve(b.clone())], TieBreak::Error);
        let p = |id: &str, g: &Identity, sc: i64| Individual::new(id, g.clone(), Score::int(sc));
        let first = [p("a3", &a, 3), p("b2", &b, 2), p("a1", &a, 1), p("b1", &b, 1)];
        let second = [p("a2", &a, 2), p("b3", &b, 3), p("a1", &a, 1), p("b1", &b, 1)];
        let mut rel = PairwiseRelation::new();
        rel.extend(pairs_within(&rule, &s, &first).unwrap());
        rel.extend(pairs_within(&rule, &s, &second).unwrap());
        let (a2, b2) = (Triple::new(Score::int(1), a.clone(), 2), Triple::new(Score::int(1), b.clone(), 2));
        assert!(rel.contains(&a2, &b2) && rel.contains(&b2, &a2));
        assert!(rel.pairs.iter().all(|p| p.provenance.as_ref().unwrap().replays(&rule, &s)));
    }

    #[test]
    fn top_q_orders_by_score() {
        let s = schema();
        let u: Vec<Individual> = (0..6).map(|i| Individual::new(format!("p{i}"), Identity::new(&[(i % 2) as u8]), Score::int(i as i64))).collect();
        let rule = RuleSpec::top_q(2, TieBreak::Error);
        let rel = extract_pairwise_relation(&rule, &s, &u, 14).unwrap();
        assert!(!rel.is_empty());
        assert!(rel.pairs.iter().all(|p| p.better.score > p.worse.score));
        assert!(extract_pairwise_relation(&rule, &s, &[], 14).unwrap().is_empty());
    }
}
