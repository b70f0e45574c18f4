//! Capacity-filling choice rules.

mod greedy;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use greedy::CourtLayout;

use crate::model::{DimensionSchema, Identity, Individual, PreferenceTable, TypeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Fail when a score tie between different types changes the outcome.
    #[default]
    Error,
    /// Lowest id (string order) wins ties.
    ById,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Open,
    Reserve(Identity),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleVariant {
    PreferenceMaximizer(PreferenceTable),
    /// Identities absent from the list are uncapped.
    Quota { caps: Vec<(Identity, usize)> },
    Reserve { slots: Vec<Slot>, refill_skipped: bool },
    SupremeCourt { o: usize, r: usize, ow: usize, rw: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpec {
    pub variant: RuleVariant,
    pub capacity: usize,
    pub tie_break: TieBreak,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("score tie between {} changes the outcome", ids.join(", "))]
    Tie { ids: Vec<String> },
    #[error("preference does not rank profile {0}")]
    IncompletePreference(TypeProfile),
    #[error("rule configuration: {0}")]
    Config(String),
    #[error("rule chose {chosen} individuals but capacity filling requires {required}")]
    CapacityViolation { chosen: usize, required: usize },
}

/// Chosen profiles with one concrete member set each (indices into the menu).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceResult {
    pub chosen: Vec<TypeProfile>,
    pub witnesses: Vec<Vec<usize>>,
}

impl ChoiceResult {
    pub fn witness_ids(&self, menu: &[&Individual]) -> Vec<Vec<String>> {
        self.witnesses
            .iter()
            .map(|w| w.iter().map(|&i| menu[i].id.clone()).collect())
            .collect()
    }

    pub fn is_chosen(&self, p: &TypeProfile) -> bool {
        self.chosen.contains(p)
    }
}

impl RuleSpec {
    pub fn new(variant: RuleVariant, capacity: usize, tie_break: TieBreak) -> Self {
        RuleSpec { variant, capacity, tie_break }
    }

    pub fn top_q(capacity: usize, tie_break: TieBreak) -> Self {
        RuleSpec::new(RuleVariant::Reserve { slots: vec![Slot::Open; capacity], refill_skipped: true }, capacity, tie_break)
    }

    pub fn supreme_court(o: usize, r: usize, ow: usize, rw: usize, tie_break: TieBreak) -> Self {
        RuleSpec::new(RuleVariant::SupremeCourt { o, r, ow, rw }, o + r, tie_break)
    }

    pub fn reserve(slots: Vec<Slot>, tie_break: TieBreak) -> Self {
        let q = slots.len();
        RuleSpec::new(RuleVariant::Reserve { slots, refill_skipped: true }, q, tie_break)
    }

    pub fn quota(caps: Vec<(Identity, usize)>, capacity: usize, tie_break: TieBreak) -> Self {
        RuleSpec::new(RuleVariant::Quota { caps }, capacity, tie_break)
    }

    pub fn maximizer(pref: PreferenceTable, capacity: usize) -> Self {
        RuleSpec::new(RuleVariant::PreferenceMaximizer(pref), capacity, TieBreak::Error)
    }

    /// Checks structural invariants against a schema.
    pub fn validate(&self, schema: &DimensionSchema) -> Result<(), RuleError> {
        let cfg = |m: String| Err(RuleError::Config(m));
        if self.capacity == 0 {
            return cfg("capacity must be positive".into());
        }
        match &self.variant {
            RuleVariant::PreferenceMaximizer(_) => Ok(()),
            RuleVariant::Quota { caps } => {
                for (id, _) in caps {
                    if !schema.validate(id) {
                        return cfg(format!("quota identity {:?} does not match the schema", id.0));
                    }
                }
                Ok(())
            }
            RuleVariant::Reserve { slots, .. } => {
                if slots.len() != self.capacity {
                    return cfg(format!("{} slots for capacity {}", slots.len(), self.capacity));
                }
                for s in slots {
                    if let Slot::Reserve(id) = s {
                        if !schema.validate(id) {
                            return cfg(format!("reserve identity {:?} does not match the schema", id.0));
                        }
                    }
                }
                Ok(())
            }
            RuleVariant::SupremeCourt { o, r, ow, rw } => {
                if ow > o {
                    return cfg(format!("o_w = {ow} exceeds o = {o}"));
                }
                if rw > r {
                    return cfg(format!("r_w = {rw} exceeds r = {r}"));
                }
                if o + r != self.capacity {
                    return cfg(format!("o + r = {} but capacity is {}", o + r, self.capacity));
                }
                court_layout(schema).map(|_| ())
            }
        }
    }

    pub fn apply(&self, schema: &DimensionSchema, menu: &[&Individual]) -> Result<ChoiceResult, RuleError> {
        apply_rule(self, schema, menu)
    }
}

/// Locates the caste `{g, r}` and gender `{m, w}` dimensions by group names.
pub fn court_layout(schema: &DimensionSchema) -> Result<CourtLayout, RuleError> {
    let find = |a: &str, b: &str| {
        schema.dims().iter().position(|d| {
            let mut g: Vec<&str> = d.groups.iter().map(String::as_str).collect();
            g.sort();
            g == [a, b]
        })
    };
    let (Some(caste), Some(gender)) = (find("g", "r"), find("m", "w")) else {
        return Err(RuleError::Config("supreme-court rule needs dimensions with groups {g, r} and {m, w}".into()));
    };
    if schema.len() != 2 {
        return Err(RuleError::Config("supreme-court rule needs exactly two dimensions".into()));
    }
    Ok(CourtLayout {
        caste_dim: caste,
        reserve_group: schema.group_index(caste, "r").unwrap(),
        gender_dim: gender,
        women_group: schema.group_index(gender, "w").unwrap(),
    })
}

pub fn apply_rule(rule: &RuleSpec, schema: &DimensionSchema, menu: &[&Individual]) -> Result<ChoiceResult, RuleError> {
    let q = rule.capacity;
    if menu.len() < q {
        // capacity filling forces the whole menu
        return Ok(ChoiceResult { chosen: vec![TypeProfile::of(menu.iter().copied())], witnesses: vec![(0..menu.len()).collect()] });
    }
    match &rule.variant {
        RuleVariant::PreferenceMaximizer(pref) => preference_maximizer(pref, q, menu),
        RuleVariant::Quota { caps } => quota_rule(caps, q, rule.tie_break, menu),
        RuleVariant::Reserve { slots, refill_skipped } => greedy::reserve(menu, slots, *refill_skipped, rule.tie_break),
        RuleVariant::SupremeCourt { o, r, ow, rw } => {
            let layout = court_layout(schema)?;
            greedy::supreme_court(menu, q, (*o, *r, *ow, *rw), layout, rule.tie_break)
        }
    }
}

/// Concrete members realizing `p` inside the menu: the lowest-index match per entry.
pub fn realize(menu: &[&Individual], p: &TypeProfile) -> Option<Vec<usize>> {
    let mut used = vec![false; menu.len()];
    let mut out = Vec::with_capacity(p.len());
    for t in p.entries() {
        let i = (0..menu.len()).find(|&i| !used[i] && menu[i].identity == t.identity && menu[i].score == t.score)?;
        used[i] = true;
        out.push(i);
    }
    out.sort_unstable();
    Some(out)
}

fn package(menu: &[&Individual], chosen: Vec<TypeProfile>) -> ChoiceResult {
    let witnesses = chosen.iter().map(|p| realize(menu, p).expect("chosen profile comes from the menu")).collect();
    ChoiceResult { chosen, witnesses }
}

/// All size-`q` sub-profiles of the menu that are maximal under `pref`.
pub fn preference_maximizer(pref: &PreferenceTable, q: usize, menu: &[&Individual]) -> Result<ChoiceResult, RuleError> {
    let whole = TypeProfile::of(menu.iter().copied());
    let k = q.min(whole.len());
    let mut best: Option<usize> = None;
    let mut chosen = Vec::new();
    for p in whole.sub_profiles_of_size(k) {
        let r = pref.rank_of(&p).ok_or_else(|| RuleError::IncompletePreference(p.clone()))?;
        match best {
            Some(b) if r > b => {}
            Some(b) if r == b => chosen.push(p),
            _ => {
                best = Some(r);
                chosen = vec![p];
            }
        }
    }
    Ok(package(menu, chosen))
}

/// Greedy by score under the caps. When the caps cannot fill capacity the
/// rule returns every profile that first minimizes the number of identities
/// over their cap and then maximizes the score total.
pub fn quota_rule(caps: &[(Identity, usize)], q: usize, tie: TieBreak, menu: &[&Individual]) -> Result<ChoiceResult, RuleError> {
    let cap_of: HashMap<&Identity, usize> = caps.iter().map(|(id, k)| (id, *k)).collect();
    let limit = |id: &Identity| cap_of.get(id).copied().unwrap_or(usize::MAX);
    let mut supply: HashMap<&Identity, usize> = HashMap::new();
    for i in menu {
        *supply.entry(&i.identity).or_default() += 1;
    }
    let fillable: usize = supply.iter().map(|(id, n)| (*n).min(limit(id))).sum();
    if fillable >= q {
        return greedy::run(menu, tie, |pass| {
            let mut counts: HashMap<Identity, usize> = HashMap::new();
            while pass.count() < q {
                let next = pass.top(|i| counts.get(&i.identity).copied().unwrap_or(0) < limit(&i.identity));
                let Some(i) = next else { break };
                *counts.entry(pass.menu[i].identity.clone()).or_default() += 1;
                pass.take(i);
            }
            Ok(())
        });
    }
    let whole = TypeProfile::of(menu.iter().copied());
    let key = |p: &TypeProfile| {
        let violations = p.identity_counts().iter().filter(|(id, n)| *n > limit(id)).count();
        let total: crate::model::Rational = p.entries().iter().map(|t| t.score.0).sum();
        (std::cmp::Reverse(violations), total)
    };
    let candidates = whole.sub_profiles_of_size(q);
    let best = candidates.iter().map(key).max().expect("menu has at least q members");
    let chosen: Vec<TypeProfile> = candidates.into_iter().filter(|p| key(p) == best).collect();
    Ok(package(menu, chosen))
}

pub fn reserve_rule(slots: &[Slot], tie: TieBreak, menu: &[&Individual]) -> Result<ChoiceResult, RuleError> {
    if menu.len() < slots.len() {
        return Ok(ChoiceResult { chosen: vec![TypeProfile::of(menu.iter().copied())], witnesses: vec![(0..menu.len()).collect()] });
    }
    greedy::reserve(menu, slots, true, tie)
}

pub fn supreme_court_rule(
    schema: &DimensionSchema,
    (o, r, ow, rw): (usize, usize, usize, usize),
    tie: TieBreak,
    menu: &[&Individual],
) -> Result<ChoiceResult, RuleError> {
    apply_rule(&RuleSpec::supreme_court(o, r, ow, rw, tie), schema, menu)
}
