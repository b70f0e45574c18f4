//! Separable representations: the pairwise relation, its two acyclicity
//! tests, and construction of a verified utility.

mod lp;
mod relation;
mod tversky;
mod utility;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

pub use lp::{feasible_point, satisfies, Row};
pub use relation::{
    extract_pairwise_relation, extract_type_relation, pairs_of_menu, pairs_within, synthetic, synthetic_menu, PairwiseRelation,
    Provenance, RelPair, Triple,
};
pub use tversky::{find_tversky_cycle, TverskyCycle};
pub use utility::{linear_scores, quota_utility, reserve_utility, score_value, Exact, IdentityTerms, SeparableUtility, UtilityError};

use crate::audits::{check_substitutes, check_wg_responsiveness, ResponsivenessViolation, SubstitutesViolation};
use crate::menus::{ChoiceTable, Menu, MenuError, DEFAULT_UNIVERSE_CAP};
use crate::model::{DimensionSchema, Identity, Individual, Score, ScoreSet, Type, TypeProfile};
use crate::rules::{RuleError, RuleSpec, Slot, TieBreak};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Menu(#[from] MenuError),
    #[error("rule returns several type profiles on menu {{{}}}", menu.join(", "))]
    NotTypeFunctional { menu: Vec<String> },
    #[error("synthetic menu of {needed} individuals exceeds the cap of {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

/// A feasible point of the additive system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpPoint {
    pub u: Vec<(Score, Exact)>,
    pub h: Vec<((Identity, usize), Exact)>,
}

impl LpPoint {
    pub fn u(&self, s: Score) -> Option<&BigRational> {
        self.u.iter().find(|(t, _)| *t == s).map(|(_, v)| &v.0)
    }

    pub fn h(&self, d: &(Identity, usize)) -> Option<&BigRational> {
        self.h.iter().find(|(e, _)| e == d).map(|(_, v)| &v.0)
    }

    /// Every pair holds with a gap of at least one.
    pub fn satisfies(&self, rel: &PairwiseRelation) -> bool {
        let one = BigRational::from_integer(1.into());
        rel.pairs.iter().all(|p| {
            let val = |t: &Triple| -> Option<BigRational> { Some(self.u(t.score)? + self.h(&t.diversity())?) };
            match (val(&p.better), val(&p.worse)) {
                (Some(b), Some(w)) => b >= w + &one,
                _ => false,
            }
        })
    }
}

/// Feasibility of `u(s) + h(d) >= u(s') + h(d') + 1` over the relation's own
/// scores and diversity levels.
pub fn lp_feasibility(rel: &PairwiseRelation, monotone_u: bool) -> Option<LpPoint> {
    lp_feasibility_over(rel, &rel.scores(), &rel.diversities(), monotone_u)
}

/// As [`lp_feasibility`] with explicit variable sets, which must cover the relation.
pub fn lp_feasibility_over(rel: &PairwiseRelation, scores: &[Score], divs: &[(Identity, usize)], monotone_u: bool) -> Option<LpPoint> {
    let mut scores = scores.to_vec();
    scores.sort();
    scores.dedup();
    let mut divs = divs.to_vec();
    divs.sort();
    divs.dedup();
    let si = |s: &Score| scores.binary_search(s).expect("score variable");
    let di = |d: &(Identity, usize)| scores.len() + divs.binary_search(d).expect("diversity variable");
    let mut rows: Vec<Row> = Vec::new();
    for p in &rel.pairs {
        let mut coef: Vec<(usize, i64)> = Vec::new();
        let mut add = |v: usize, c: i64| match coef.iter_mut().find(|(w, _)| *w == v) {
            Some(e) => e.1 += c,
            None => coef.push((v, c)),
        };
        add(si(&p.better.score), 1);
        add(di(&p.better.diversity()), 1);
        add(si(&p.worse.score), -1);
        add(di(&p.worse.diversity()), -1);
        coef.retain(|(_, c)| *c != 0);
        rows.push((coef, 1));
    }
    if monotone_u {
        for i in 1..scores.len() {
            rows.push((vec![(i, 1), (i - 1, -1)], 1));
        }
    }
    let x = feasible_point(&rows, scores.len() + divs.len())?;
    debug_assert!(satisfies(&rows, &x));
    Some(LpPoint {
        u: scores.iter().enumerate().map(|(i, &s)| (s, Exact(x[i].clone()))).collect(),
        h: divs.iter().enumerate().map(|(i, d)| (d.clone(), Exact(x[scores.len() + i].clone()))).collect(),
    })
}

pub const DEFAULT_SYNTHETIC_CAP: usize = 256;

/// Members of each identity chosen when all competitors are strong: the rule
/// on `q` of every other identity at every score plus `q` of the identity at
/// the lowest score.
pub fn guaranteed_counts(rule: &RuleSpec, schema: &DimensionSchema, scores: &ScoreSet, cap: usize) -> Result<Vec<(Identity, usize)>, SynthesisError> {
    let q = rule.capacity;
    let identities = schema.identities();
    let needed = q * scores.len() * identities.len().saturating_sub(1) + q;
    if needed > cap {
        return Err(SynthesisError::CapExceeded { needed, cap });
    }
    let mut out = Vec::new();
    for theta in &identities {
        let mut menu = synthetic(schema, scores, &Type::new(theta.clone(), scores.lowest()), q, 1);
        for other in identities.iter().filter(|o| *o != theta) {
            for &s in scores.values() {
                menu.extend(synthetic(schema, scores, &Type::new(other.clone(), s), q, 1));
            }
        }
        let refs: Vec<&Individual> = menu.iter().collect();
        let result = match rule.apply(schema, &refs) {
            // any member of the correspondence will do
            Err(RuleError::Tie { .. }) => RuleSpec { tie_break: TieBreak::ById, ..rule.clone() }.apply(schema, &refs),
            r => r,
        }
        .map_err(|error| MenuError::Rule { menu: vec![format!("synthetic menu for {}", schema.format_identity(theta))], error })?;
        out.push((theta.clone(), result.chosen[0].count_identity(theta)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisOptions {
    pub universe_cap: usize,
    pub cycle_max_len: usize,
    pub synthetic_cap: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { universe_cap: DEFAULT_UNIVERSE_CAP, cycle_max_len: 6, synthetic_cap: DEFAULT_SYNTHETIC_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Inconsistency {
    NotConcave { identity: Identity },
    NotIncreasing,
    Mismatch { menu: Vec<String>, rule: Vec<TypeProfile>, utility: Vec<TypeProfile> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisOutcome {
    Rationalized(SeparableUtility),
    NotSubstitutable(SubstitutesViolation),
    NotResponsive(ResponsivenessViolation),
    /// The additive system is infeasible; the cycle is absent only when it
    /// is longer than the search bound.
    Cyclic { relation_size: usize, cycle: Option<TverskyCycle> },
    /// Acyclic, but no representation has `u` increasing.
    NotMonotone,
    Inconsistent(Inconsistency),
}

/// Audits the preconditions, solves for `(u, h)`, repairs `h` into concave
/// cumulative terms and checks the result against the rule on every menu.
pub fn synthesize_separable(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    scores: &ScoreSet,
    universe: &[Individual],
    opts: &SynthesisOptions,
) -> Result<SynthesisOutcome, SynthesisError> {
    if let Some(v) = check_substitutes(rule, schema, universe, opts.universe_cap)? {
        return Ok(SynthesisOutcome::NotSubstitutable(v));
    }
    if let Some(v) = check_wg_responsiveness(rule, schema, universe, opts.universe_cap)? {
        return Ok(SynthesisOutcome::NotResponsive(v));
    }
    let q = rule.capacity;
    let mut rel = extract_pairwise_relation(rule, schema, universe, opts.universe_cap)?;
    let cyclic = |rel: &PairwiseRelation| SynthesisOutcome::Cyclic {
        relation_size: rel.len(),
        cycle: find_tversky_cycle(rel, rel.len().min(opts.cycle_max_len)),
    };
    if lp_feasibility(&rel, false).is_none() {
        return Ok(cyclic(&rel));
    }
    rel.extend(extract_type_relation(rule, schema, scores)?);
    if lp_feasibility(&rel, false).is_none() {
        return Ok(cyclic(&rel));
    }
    let identities = schema.identities();
    let divs: Vec<(Identity, usize)> = identities.iter().flat_map(|id| (1..=q).map(move |n| (id.clone(), n))).collect();
    let Some(point) = lp_feasibility_over(&rel, scores.values(), &divs, true) else {
        return Ok(SynthesisOutcome::NotMonotone);
    };
    let guaranteed = guaranteed_counts(rule, schema, scores, opts.synthetic_cap)?;
    let top_u = point.u(scores.highest()).cloned().unwrap_or_else(BigRational::zero);
    let max_h = point.h.iter().map(|(_, v)| v.0.clone()).max().unwrap_or_else(BigRational::zero);
    let u_bar = max_h + top_u;
    let terms = guaranteed
        .iter()
        .map(|(id, n_theta)| {
            let inc = (1..=q)
                .map(|n| if n <= *n_theta { u_bar.clone() } else { point.h(&(id.clone(), n)).cloned().unwrap() })
                .collect();
            (id.clone(), *n_theta, inc)
        })
        .collect();
    let u: Vec<(Score, BigRational)> = point.u.iter().map(|(s, v)| (*s, v.0.clone())).collect();
    let utility = SeparableUtility::new(q, u, terms, u_bar);
    if let Some(t) = utility.identities.iter().find(|t| t.increments.windows(2).any(|w| w[1] > w[0])) {
        return Ok(SynthesisOutcome::Inconsistent(Inconsistency::NotConcave { identity: t.identity.clone() }));
    }
    if !utility.u_strictly_increasing() {
        return Ok(SynthesisOutcome::Inconsistent(Inconsistency::NotIncreasing));
    }
    if let Some(m) = verify_rationalizes(&utility, rule, schema, universe, opts.universe_cap)? {
        return Ok(SynthesisOutcome::Inconsistent(m));
    }
    Ok(SynthesisOutcome::Rationalized(utility))
}

/// First menu where the utility's argmax differs from the rule's choice.
pub fn verify_rationalizes(
    utility: &SeparableUtility,
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    cap: usize,
) -> Result<Option<Inconsistency>, SynthesisError> {
    let table = ChoiceTable::all_menus(rule, schema, universe, cap)?;
    for e in &table.entries {
        let mut chosen: Vec<TypeProfile> = e.chosen.iter().map(|(p, _)| p.clone()).collect();
        chosen.sort();
        let best = utility.argmax(&e.profile)?;
        if best != chosen {
            return Ok(Some(Inconsistency::Mismatch { menu: menu_ids(&table, e.menu), rule: chosen, utility: best }));
        }
    }
    Ok(None)
}

fn menu_ids(table: &ChoiceTable, m: Menu) -> Vec<String> {
    crate::menus::menu_ids(&table.universe, m)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticError {
    #[error("no open slot precedes a reserve slot")]
    NoOpenBeforeReserve,
    #[error("the construction needs a second identity")]
    OneIdentity,
    #[error("the construction needs at least two scores")]
    OneScore,
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("no cycle found on the constructed instances")]
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpenFirstWitness {
    pub favored: Identity,
    pub rival: Identity,
    pub population: Vec<Individual>,
    pub raised: Vec<Individual>,
    pub cycle: TverskyCycle,
}

/// Builds the two populations on which an open-before-reserve order reveals
/// opposite comparisons, and returns the resulting cycle.
///
/// `favored` has a reserve slot after an open slot; its `q` members start at
/// the lowest score and `rival`'s `q` members at the second-highest. Every
/// other reserved identity gets as many members as reserves at the second
/// lowest score. The raised population lifts `n + 1` favored members to the
/// top score, `n` being the favored reserves ahead of the first open slot.
pub fn open_first_diagnostic(schema: &DimensionSchema, scores: &ScoreSet, slots: &[Slot], tie: TieBreak) -> Result<OpenFirstWitness, DiagnosticError> {
    let first_open = slots.iter().position(|s| *s == Slot::Open).ok_or(DiagnosticError::NoOpenBeforeReserve)?;
    let mut favored: Vec<Identity> = Vec::new();
    for s in &slots[first_open..] {
        if let Slot::Reserve(id) = s {
            if !favored.contains(id) {
                favored.push(id.clone());
            }
        }
    }
    if favored.is_empty() {
        return Err(DiagnosticError::NoOpenBeforeReserve);
    }
    let identities = schema.identities();
    if identities.len() < 2 {
        return Err(DiagnosticError::OneIdentity);
    }
    if scores.len() < 2 {
        return Err(DiagnosticError::OneScore);
    }
    let v = scores.values();
    let (low, second_low, second_high, high) = (v[0], v[1], v[v.len() - 2], v[v.len() - 1]);
    let rule = RuleSpec::reserve(slots.to_vec(), tie);
    let q = rule.capacity;
    let reserves = |id: &Identity| slots.iter().filter(|s| **s == Slot::Reserve(id.clone())).count();
    for theta1 in &favored {
        let n = slots[..first_open].iter().filter(|s| **s == Slot::Reserve(theta1.clone())).count();
        for theta2 in identities.iter().filter(|t| *t != theta1) {
            let mut others = Vec::new();
            for t in identities.iter().filter(|t| *t != theta1 && *t != theta2) {
                others.extend(synthetic(schema, scores, &Type::new(t.clone(), second_low), reserves(t), 1));
            }
            let rivals = synthetic(schema, scores, &Type::new(theta2.clone(), second_high), q, 1);
            let mut population = synthetic(schema, scores, &Type::new(theta1.clone(), low), q, 1);
            population.extend(rivals.iter().cloned());
            population.extend(others.iter().cloned());
            let lifted = (n + 1).min(q);
            let mut raised = synthetic(schema, scores, &Type::new(theta1.clone(), high), lifted, 1);
            raised.extend(synthetic(schema, scores, &Type::new(theta1.clone(), low), q - lifted, lifted + 1));
            raised.extend(rivals);
            raised.extend(others);
            let mut rel = pairs_within(&rule, schema, &population)?;
            rel.extend(pairs_within(&rule, schema, &raised)?);
            if let Some(cycle) = find_tversky_cycle(&rel, rel.len().min(6)) {
                let replays = cycle.rows.iter().all(|r| r.provenance.as_ref().is_some_and(|p| p.replays(&rule, schema)));
                if cycle.validate(&rel) && replays {
                    return Ok(OpenFirstWitness { favored: theta1.clone(), rival: theta2.clone(), population, raised, cycle });
                }
            }
        }
    }
    Err(DiagnosticError::NotFound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> DimensionSchema {
        DimensionSchema::from_names(&[("g", &["a", "b"])]).unwrap()
    }

    fn a() -> Identity {
        Identity::new(&[0])
    }

    fn b() -> Identity {
        Identity::new(&[1])
    }

    #[test]
    fn example3_lp_and_cycle() {
        let (x, y) = (Triple::new(Score::int(1), a(), 2), Triple::new(Score::int(1), b(), 2));
        let rel = PairwiseRelation::from_pairs([(x.clone(), y.clone()), (y, x)]);
        assert!(lp_feasibility(&rel, false).is_none());
        assert!(lp_feasibility(&PairwiseRelation::new(), true).is_some());
    }

    #[test]
    fn reserve_guaranteed_counts() {
        let slots = vec![Slot::Reserve(a()), Slot::Reserve(a()), Slot::Reserve(b()), Slot::Open];
        let rule = RuleSpec::reserve(slots, TieBreak::Error);
        let g = guaranteed_counts(&rule, &schema(), &ScoreSet::integers(1..4), 256).unwrap();
        assert_eq!(g, vec![(a(), 2), (b(), 1)]);
        let top = RuleSpec::top_q(2, TieBreak::Error);
        assert_eq!(guaranteed_counts(&top, &schema(), &ScoreSet::integers(1..4), 256).unwrap(), vec![(a(), 0), (b(), 0)]);
        assert!(matches!(guaranteed_counts(&top, &schema(), &ScoreSet::integers(1..4), 4), Err(SynthesisError::CapExceeded { needed: 8, cap: 4 })));
    }

    #[test]
    fn reserve_rule_synthesizes() {
        let rule = RuleSpec::reserve(vec![Slot::Reserve(a()), Slot::Reserve(b()), Slot::Open], TieBreak::ById);
        let scores = ScoreSet::integers(1..4);
        let u: Vec<Individual> = [("a1", 0, 3), ("a2", 0, 2), ("a3", 0, 1), ("b1", 1, 3), ("b2", 1, 2), ("b3", 1, 1)]
            .iter()
            .map(|&(id, g, s)| Individual::new(id, Identity::new(&[g]), Score::int(s)))
            .collect();
        match synthesize_separable(&rule, &schema(), &scores, &u, &SynthesisOptions::default()).unwrap() {
            SynthesisOutcome::Rationalized(util) => {
                assert!(util.concave && util.u_strictly_increasing());
                assert!(util.identities.iter().all(|t| t.guaranteed == 1 && t.increments[0] == util.u_bar));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn example3_rule_is_cyclic() {
        let rule = RuleSpec::reserve(vec![Slot::Open, Slot::Reserve(a()), Slot::Reserve(b())], TieBreak::ById);
        let scores = ScoreSet::integers(1..4);
        let u: Vec<Individual> = [("a3", 0, 3), ("b2", 1, 2), ("a1", 0, 1), ("b1", 1, 1), ("a2", 0, 2), ("b3", 1, 3)]
            .iter()
            .map(|&(id, g, s)| Individual::new(id, Identity::new(&[g]), Score::int(s)))
            .collect();
        match synthesize_separable(&rule, &schema(), &scores, &u, &SynthesisOptions::default()).unwrap() {
            SynthesisOutcome::Cyclic { cycle: Some(c), .. } => assert_eq!(c.rows.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn open_first_proof_instance() {
        let slots = vec![Slot::Open, Slot::Reserve(a()), Slot::Reserve(b())];
        let w = open_first_diagnostic(&schema(), &ScoreSet::integers(0..3), &slots, TieBreak::Error).unwrap();
        assert_eq!(w.cycle.rows.len(), 2);
        let no_open = vec![Slot::Reserve(a()), Slot::Reserve(b()), Slot::Open];
        assert_eq!(open_first_diagnostic(&schema(), &ScoreSet::integers(0..3), &no_open, TieBreak::Error), Err(DiagnosticError::NoOpenBeforeReserve));
    }
}
