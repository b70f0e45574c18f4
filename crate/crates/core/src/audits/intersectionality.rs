//! Marginal-only diversity preferences and the substitutes failure they force.

use std::collections::HashMap;

use thiserror::Error;

use super::substitutes::{check_substitutes, SubstitutesViolation};
use crate::menus::{choose, full_menu, MenuError};
use crate::model::{
    DimensionSchema, Identity, Individual, MarginalDistribution, PreferenceTable, Score, Type, TypeProfile,
};
use crate::rules::RuleSpec;

/// `Some((a, b))`: equal marginals and score multisets, yet not indifferent.
pub fn intersectionality_witness(pref: &PreferenceTable, schema: &DimensionSchema) -> Option<(TypeProfile, TypeProfile)> {
    let mut seen: HashMap<(MarginalDistribution, Vec<Score>), (&TypeProfile, usize)> = HashMap::new();
    let mut domain: Vec<&TypeProfile> = pref.domain().collect();
    domain.sort();
    for p in domain {
        let key = (MarginalDistribution::of(schema, p), p.sorted_scores());
        let rank = pref.rank_of(p).unwrap();
        match seen.get(&key) {
            Some((q, r)) if *r != rank => return Some(((*q).clone(), p.clone())),
            Some(_) => {}
            None => {
                seen.insert(key, (p, rank));
            }
        }
    }
    None
}

pub fn pref_ignores_intersectionality(pref: &PreferenceTable, schema: &DimensionSchema) -> bool {
    intersectionality_witness(pref, schema).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuesDiversity {
    pub holds: bool,
    /// Capacity is below the number of groups of some dimension, so every
    /// size-`q` profile is at the boundary.
    pub vacuous: bool,
    /// A boundary profile in the top class of size-`q` profiles.
    pub witness: Option<TypeProfile>,
}

pub fn values_diversity(pref: &PreferenceTable, q: usize, schema: &DimensionSchema) -> ValuesDiversity {
    let vacuous = schema.dims().iter().any(|d| d.groups.len() > q);
    let sized: Vec<&TypeProfile> = pref.domain().filter(|p| p.len() == q).collect();
    let Some(top) = sized.iter().filter_map(|p| pref.rank_of(p)).min() else {
        return ValuesDiversity { holds: false, vacuous, witness: None };
    };
    let mut boundary: Vec<&TypeProfile> = sized
        .into_iter()
        .filter(|p| pref.rank_of(p) == Some(top) && MarginalDistribution::of(schema, p).is_boundary())
        .collect();
    boundary.sort();
    let witness = boundary.first().map(|p| (*p).clone());
    ValuesDiversity { holds: witness.is_none(), vacuous, witness }
}

pub fn pref_values_diversity(pref: &PreferenceTable, q: usize, schema: &DimensionSchema) -> bool {
    values_diversity(pref, q, schema).holds
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterexampleError {
    #[error("needs at least two identity dimensions")]
    OneDimension,
    #[error("preference considers intersectionality: {0} and {1}")]
    ConsidersIntersectionality(TypeProfile, TypeProfile),
    #[error("preference does not value diversity")]
    NoDiversity,
    #[error(transparent)]
    Rule(#[from] MenuError),
    #[error("no substitutes violation found although both preconditions hold")]
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionalityCounterexample {
    pub universe: Vec<Individual>,
    pub violation: SubstitutesViolation,
    pub constructive: bool,
    pub score: Score,
}

struct Builder {
    remaining: Vec<Vec<usize>>,
    people: Vec<Vec<u8>>,
}

impl Builder {
    fn new(d: &MarginalDistribution) -> Self {
        Builder { remaining: d.counts.clone(), people: Vec::new() }
    }

    /// Adds an identity with fixed groups on some dimensions and the first
    /// group with spare room elsewhere.
    fn add(&mut self, fixed: &[(usize, u8)]) -> Option<Vec<u8>> {
        let mut id = Vec::with_capacity(self.remaining.len());
        for (dim, room) in self.remaining.iter().enumerate() {
            let g = match fixed.iter().find(|(d, _)| *d == dim) {
                Some(&(_, g)) => g,
                None => room.iter().position(|&r| r > 0)? as u8,
            };
            if room[g as usize] == 0 {
                return None;
            }
            id.push(g);
        }
        for (dim, &g) in id.iter().enumerate() {
            self.remaining[dim][g as usize] -= 1;
        }
        self.people.push(id.clone());
        Some(id)
    }

    fn complete(&mut self, q: usize) -> Option<()> {
        while self.people.len() < q {
            self.add(&[])?;
        }
        Some(())
    }
}

/// Builds the complementarity instance directly from the optimal marginals.
fn construct(pref: &PreferenceTable, q: usize, schema: &DimensionSchema, score: Score) -> Option<(Vec<Individual>, SubstitutesViolation)> {
    let types: Vec<Type> = schema.identities().into_iter().map(|id| Type::new(id, score)).collect();
    let sized = crate::model::profiles_up_to(&types, q).into_iter().filter(|p| p.len() == q);
    let ranked: Vec<(usize, TypeProfile)> = sized.filter_map(|p| pref.rank_of(&p).map(|r| (r, p))).collect();
    let top = ranked.iter().map(|(r, _)| *r).min()?;
    let mut optimal: Vec<MarginalDistribution> = ranked
        .iter()
        .filter(|(r, _)| *r == top)
        .map(|(_, p)| MarginalDistribution::of(schema, p))
        .collect();
    optimal.sort();
    optimal.dedup();
    let m11 = optimal.iter().map(|d| d.counts[0][0]).max()?;
    let d = optimal.iter().filter(|d| d.counts[0][0] == m11).max_by(|a, b| a.counts[1][0].cmp(&b.counts[1][0]).then(b.cmp(a)))?.clone();
    let m21 = d.counts[1][0];
    let mut b = Builder::new(&d);
    // dimension `swap` is exchanged between j and k; the rest follows k
    let swap: usize;
    if m11 <= m21 {
        for _ in 0..m11 {
            b.add(&[(0, 0), (1, 0)])?;
        }
        swap = 0;
    } else {
        for _ in 0..m21 {
            b.add(&[(0, 0), (1, 0)])?;
        }
        for _ in 0..m11 - m21 {
            let g = (1..schema.dims()[1].groups.len()).find(|&g| b.remaining[1][g] > 0)? as u8;
            b.add(&[(0, 0), (1, g)])?;
        }
        swap = 1;
    }
    let kept_len = b.people.len();
    b.complete(q)?;
    let j = b.people.first()?.clone();
    let k = b.people[kept_len..].iter().find(|id| id[0] != 0 && id[1] != 0)?.clone();
    let k_pos = kept_len + b.people[kept_len..].iter().position(|id| *id == k)?;
    let mut jt = k.clone();
    jt[swap] = j[swap];
    let mut kt = j.clone();
    kt[swap] = k[swap];
    let mut universe: Vec<Individual> = b
        .people
        .iter()
        .enumerate()
        .map(|(n, id)| Individual::new(format!("x{}", n + 1), Identity(id.clone()), score))
        .collect();
    universe.push(Individual::new("jt", Identity(jt), score));
    universe.push(Individual::new("kt", Identity(kt), score));
    let all = full_menu(universe.len());
    let kept = full_menu(kept_len);
    let violation = SubstitutesViolation {
        big_menu: all,
        small_menu: all & !(1 << k_pos),
        kept,
        chosen_from_big: full_menu(q),
        small_menu_choices: Vec::new(),
    };
    Some((universe, violation))
}

/// A replayable substitutes violation for a maximizer of a preference that
/// values diversity but only through marginals.
pub fn intersectionality_counterexample(
    pref: &PreferenceTable,
    q: usize,
    schema: &DimensionSchema,
) -> Result<IntersectionalityCounterexample, CounterexampleError> {
    if schema.len() < 2 {
        return Err(CounterexampleError::OneDimension);
    }
    if let Some((a, b)) = intersectionality_witness(pref, schema) {
        return Err(CounterexampleError::ConsidersIntersectionality(a, b));
    }
    if !pref_values_diversity(pref, q, schema) {
        return Err(CounterexampleError::NoDiversity);
    }
    let rule = RuleSpec::maximizer(pref.clone(), q);
    for score in pref.domain_scores() {
        if let Some((universe, mut violation)) = construct(pref, q, schema, score) {
            if violation.replays(&rule, schema, &universe)? {
                violation.small_menu_choices = choose(&rule, schema, &universe, violation.small_menu)?.chosen;
                return Ok(IntersectionalityCounterexample { universe, violation, constructive: true, score });
            }
        }
    }
    for score in pref.domain_scores() {
        let universe: Vec<Individual> = schema
            .identities()
            .into_iter()
            .flat_map(|id| (0..q).map(move |c| (id.clone(), c)))
            .enumerate()
            .map(|(n, (id, _))| Individual::new(format!("x{}", n + 1), id, score))
            .collect();
        if let Some(violation) = check_substitutes(&rule, schema, &universe, universe.len().max(14))? {
            return Ok(IntersectionalityCounterexample { universe, violation, constructive: false, score });
        }
    }
    Err(CounterexampleError::NotFound)
}
