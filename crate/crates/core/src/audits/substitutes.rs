//! Substitutes, gross substitutes and within-group responsiveness of rules.

use crate::menus::{choose, full_menu, members, ChoiceTable, Menu, MenuError};
use crate::model::{DimensionSchema, Individual, Score, ScoreSet, TypeProfile};
use crate::rules::RuleSpec;

/// `kept ⊆ small ⊂ big`, `kept ⊆ chosen_from_big ∈ C(big)` and no member of
/// `C(small)` contains `kept`. Menus are masks over the audited universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutesViolation {
    pub big_menu: Menu,
    pub small_menu: Menu,
    pub kept: Menu,
    pub chosen_from_big: Menu,
    pub small_menu_choices: Vec<(TypeProfile, Menu)>,
}

impl SubstitutesViolation {
    pub fn removed(&self) -> Menu {
        self.big_menu & !self.small_menu
    }

    /// Re-runs the rule on both menus and rechecks every clause.
    pub fn replays(&self, rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual]) -> Result<bool, MenuError> {
        let (b, s, k, j) = (self.big_menu, self.small_menu, self.kept, self.chosen_from_big);
        if k & !s != 0 || s & !b != 0 || s == b || k & !j != 0 {
            return Ok(false);
        }
        let big = choose(rule, schema, universe, b)?;
        let chosen = TypeProfile::of(members(j).map(|i| &universe[i]));
        if !big.is_chosen(&chosen) || j & !b != 0 {
            return Ok(false);
        }
        let small = choose(rule, schema, universe, s)?;
        let kept = TypeProfile::of(members(k).map(|i| &universe[i]));
        Ok(!small.chosen.iter().any(|(p, _)| p.contains(&kept)))
    }

    /// Also removes every other copy of a removed type, from the small menu
    /// and the kept set, when the result still violates the condition. Reads
    /// better in reports: whole types leave the menu.
    pub fn widen_over_types(&self, rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual]) -> Result<SubstitutesViolation, MenuError> {
        let kinds: Vec<_> = members(self.removed()).map(|i| universe[i].kind()).collect();
        let twins = members(self.small_menu).filter(|&i| kinds.contains(&universe[i].kind())).fold(0, |m, i| m | (1 << i));
        if twins == 0 {
            return Ok(self.clone());
        }
        let mut wide = SubstitutesViolation { small_menu: self.small_menu & !twins, kept: self.kept & !twins, ..self.clone() };
        if wide.small_menu == 0 || !wide.replays(rule, schema, universe)? {
            return Ok(self.clone());
        }
        wide.small_menu_choices = choose(rule, schema, universe, wide.small_menu)?.chosen;
        Ok(wide)
    }
}

/// First violation over every menu of the table, or none.
///
/// Searches single removals only: if some `I' ⊂ Î` breaks the condition for
/// `J̃ ⊆ J ∈ C(Î)`, then along any chain of one-element removals from `Î` to
/// `I'` there is a step `M -> M - x` where a chosen set of `M` contains `J̃`
/// and none of `C(M - x)` does, and that chosen set minus `x` is already a
/// violating kept set. Menus are scanned from largest to smallest.
pub fn check_substitutes_table(table: &ChoiceTable) -> Option<SubstitutesViolation> {
    let universe = &table.universe;
    let mut order: Vec<&crate::menus::MenuChoice> = table.entries.iter().collect();
    order.sort_by_key(|e| std::cmp::Reverse(e.menu.count_ones()));
    for entry in order {
        for (_, j) in &entry.chosen {
            for x in members(entry.menu) {
                let small = entry.menu & !(1 << x);
                if small == 0 {
                    continue;
                }
                let kept = j & !(1 << x);
                let kept_profile = TypeProfile::of(members(kept).map(|i| &universe[i]));
                let sub = table.get(small).expect("table covers every submenu");
                if !sub.chosen.iter().any(|(p, _)| p.contains(&kept_profile)) {
                    return Some(SubstitutesViolation {
                        big_menu: entry.menu,
                        small_menu: small,
                        kept,
                        chosen_from_big: *j,
                        small_menu_choices: sub.chosen.clone(),
                    });
                }
            }
        }
    }
    None
}

pub fn check_substitutes(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    cap: usize,
) -> Result<Option<SubstitutesViolation>, MenuError> {
    let table = ChoiceTable::all_menus(rule, schema, universe, cap)?;
    Ok(check_substitutes_table(&table))
}

/// A lowered-score perturbation under which the kept set is no longer choosable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrossSubstitutesViolation {
    pub menu: Menu,
    pub chosen: Menu,
    pub kept: Menu,
    /// `(universe position, new score)` for each lowered individual.
    pub lowered: Vec<(usize, Score)>,
    pub perturbed_choices: Vec<TypeProfile>,
}

impl GrossSubstitutesViolation {
    pub fn perturbed_menu(&self, universe: &[Individual]) -> Vec<Individual> {
        members(self.menu)
            .map(|i| {
                let mut p = universe[i].clone();
                if let Some((_, s)) = self.lowered.iter().find(|(k, _)| *k == i) {
                    p.score = *s;
                }
                p
            })
            .collect()
    }

    pub fn replays(&self, rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual]) -> Result<bool, MenuError> {
        let original = choose(rule, schema, universe, self.menu)?;
        let chosen = TypeProfile::of(members(self.chosen).map(|i| &universe[i]));
        if !original.is_chosen(&chosen) || self.kept & !self.chosen != 0 {
            return Ok(false);
        }
        if self.lowered.iter().any(|(i, s)| self.kept & (1 << i) != 0 || *s >= universe[*i].score) {
            return Ok(false);
        }
        let perturbed = self.perturbed_menu(universe);
        let refs: Vec<&Individual> = perturbed.iter().collect();
        let result = rule.apply(schema, &refs).map_err(|error| MenuError::Rule { menu: refs.iter().map(|i| i.id.clone()).collect(), error })?;
        let kept = TypeProfile::of(members(self.kept).map(|i| &universe[i]));
        Ok(!result.chosen.iter().any(|p| p.contains(&kept)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrossError {
    #[error(transparent)]
    Menu(#[from] MenuError),
    #[error("gross-substitutes search needs {needed} rule evaluations, above the cap of {cap}")]
    CapExceeded { needed: u64, cap: u64 },
}

pub const DEFAULT_GS_CAP: u64 = 2_000_000;

/// Lowers the scores of at most `max_lowered` individuals outside the kept set.
///
/// For a fixed lowered set `L` the strongest kept set is `J - L`, so only
/// that one is tested.
pub fn check_gross_substitutes(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    scores: &ScoreSet,
    max_lowered: usize,
    cap: u64,
) -> Result<Option<GrossSubstitutesViolation>, GrossError> {
    let table = ChoiceTable::all_menus(rule, schema, universe, crate::menus::DEFAULT_UNIVERSE_CAP)?;
    let lower_options = |i: usize| scores.values().iter().filter(|s| **s < universe[i].score).count() as u64;
    let mut needed = 0u64;
    for entry in &table.entries {
        let n = entry.menu.count_ones() as usize;
        for size in 1..=max_lowered.min(n) {
            for l in crate::menus::subsets_of_size(n, size) {
                let pos: Vec<usize> = members(entry.menu).collect();
                let prod: u64 = members(l).map(|k| lower_options(pos[k])).product();
                needed = needed.saturating_add(prod.saturating_mul(entry.chosen.len() as u64));
            }
        }
    }
    if needed > cap {
        return Err(GrossError::CapExceeded { needed, cap });
    }
    for entry in &table.entries {
        let pos: Vec<usize> = members(entry.menu).collect();
        for (_, j) in &entry.chosen {
            for size in 1..=max_lowered.min(pos.len()) {
                for l in crate::menus::subsets_of_size(pos.len(), size) {
                    let lowered: Vec<usize> = members(l).map(|k| pos[k]).collect();
                    let lmask = lowered.iter().fold(0u32, |m, &i| m | (1 << i));
                    let kept = j & !lmask;
                    let kept_profile = TypeProfile::of(members(kept).map(|i| &universe[i]));
                    let options: Vec<Vec<Score>> = lowered
                        .iter()
                        .map(|&i| scores.values().iter().copied().filter(|s| *s < universe[i].score).collect())
                        .collect();
                    if options.iter().any(Vec::is_empty) {
                        continue;
                    }
                    let mut pick = vec![0usize; lowered.len()];
                    loop {
                        let assignment: Vec<(usize, Score)> = lowered.iter().zip(&pick).enumerate().map(|(k, (&i, &p))| (i, options[k][p])).collect();
                        let mut perturbed: Vec<Individual> = pos.iter().map(|&i| universe[i].clone()).collect();
                        for (i, s) in &assignment {
                            let k = pos.iter().position(|p| p == i).unwrap();
                            perturbed[k].score = *s;
                        }
                        let refs: Vec<&Individual> = perturbed.iter().collect();
                        let result = rule
                            .apply(schema, &refs)
                            .map_err(|error| MenuError::Rule { menu: refs.iter().map(|i| i.id.clone()).collect(), error })?;
                        if !result.chosen.iter().any(|p| p.contains(&kept_profile)) {
                            return Ok(Some(GrossSubstitutesViolation {
                                menu: entry.menu,
                                chosen: *j,
                                kept,
                                lowered: assignment,
                                perturbed_choices: result.chosen,
                            }));
                        }
                        // odometer over the lowered scores
                        let mut k = 0;
                        loop {
                            if k == pick.len() {
                                break;
                            }
                            pick[k] += 1;
                            if pick[k] < options[k].len() {
                                break;
                            }
                            pick[k] = 0;
                            k += 1;
                        }
                        if k == pick.len() {
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// `base ∪ {lower}` chosen from `menu` while `base ∪ {higher}` is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponsivenessViolation {
    pub menu: Menu,
    pub chosen: Menu,
    /// Universe positions of the lower-scoring chosen and higher-scoring unchosen individual.
    pub lower: usize,
    pub higher: usize,
}

impl ResponsivenessViolation {
    pub fn replays(&self, rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual]) -> Result<bool, MenuError> {
        let (lo, hi) = (&universe[self.lower], &universe[self.higher]);
        if lo.identity != hi.identity || lo.score >= hi.score {
            return Ok(false);
        }
        if self.chosen & (1 << self.lower) == 0 || self.chosen & (1 << self.higher) != 0 || self.menu & (1 << self.higher) == 0 {
            return Ok(false);
        }
        let c = choose(rule, schema, universe, self.menu)?;
        let with_lo = TypeProfile::of(members(self.chosen).map(|i| &universe[i]));
        let swapped = (self.chosen & !(1 << self.lower)) | (1 << self.higher);
        let with_hi = TypeProfile::of(members(swapped).map(|i| &universe[i]));
        Ok(c.is_chosen(&with_lo) && !c.is_chosen(&with_hi))
    }
}

pub fn check_wg_responsiveness_table(table: &ChoiceTable) -> Option<ResponsivenessViolation> {
    let universe = &table.universe;
    for entry in &table.entries {
        for (profile, j) in &entry.chosen {
            for lower in members(*j) {
                for higher in members(entry.menu & !j) {
                    let (lo, hi) = (&universe[lower], &universe[higher]);
                    if lo.identity != hi.identity || hi.score <= lo.score {
                        continue;
                    }
                    let swapped = profile.without(&lo.kind()).expect("member of chosen set").with(hi.kind());
                    if !entry.is_chosen(&swapped) {
                        return Some(ResponsivenessViolation { menu: entry.menu, chosen: *j, lower, higher });
                    }
                }
            }
        }
    }
    None
}

pub fn check_wg_responsiveness(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    cap: usize,
) -> Result<Option<ResponsivenessViolation>, MenuError> {
    let table = ChoiceTable::all_menus(rule, schema, universe, cap)?;
    Ok(check_wg_responsiveness_table(&table))
}

/// Convenience: mask of the whole universe.
pub fn whole(universe: &[Individual]) -> Menu {
    full_menu(universe.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::menus::{enumerate_menus, MenuFamilyConfig};
    use crate::model::{all_types, profiles_up_to, Identity, MarginalDistribution, PreferenceTable, Type};
    use crate::rules::{Slot, TieBreak};

    fn example2() -> (DimensionSchema, Vec<Individual>) {
        let s = DimensionSchema::from_names(&[("d1", &["1", "2"]), ("d2", &["1", "2"])]).unwrap();
        let groups = [[0u8, 0], [0, 1], [1, 0], [1, 1]];
        let u = (1..=8).map(|k| Individual::new(format!("i{k}"), Identity::new(&groups[(k - 1) % 4]), Score::int(1))).collect();
        (s, u)
    }

    fn balanced_pref(s: &DimensionSchema, types: &[Type], q: usize) -> PreferenceTable {
        let target = MarginalDistribution { counts: vec![vec![q / 2, q / 2], vec![q / 2, q / 2]] };
        PreferenceTable::from_key(profiles_up_to(types, q), |p| MarginalDistribution::of(s, p) == target)
    }

    /// Direct transcription of the definition over id-level sets.
    fn oracle_violates(table: &ChoiceTable) -> bool {
        let u = &table.universe;
        let sets_with = |menu: Menu, choices: &[(TypeProfile, Menu)]| -> Vec<Menu> {
            let mut out = Vec::new();
            let mut sub = menu;
            loop {
                let p = TypeProfile::of(members(sub).map(|i| &u[i]));
                if choices.iter().any(|(c, _)| *c == p) {
                    out.push(sub);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & menu;
            }
            out
        };
        for e in &table.entries {
            for j in sets_with(e.menu, &e.chosen) {
                let mut kept = j;
                loop {
                    // every I' with kept ⊆ I' ⊊ menu
                    let free = e.menu & !kept;
                    let mut extra = free;
                    loop {
                        let small = kept | extra;
                        if small != e.menu && small != 0 {
                            let sub = table.get(small).unwrap();
                            if !sets_with(small, &sub.chosen).iter().any(|b| kept & !b == 0) {
                                return true;
                            }
                        }
                        if extra == 0 {
                            break;
                        }
                        extra = (extra - 1) & free;
                    }
                    if kept == 0 {
                        break;
                    }
                    kept = (kept - 1) & j;
                }
            }
        }
        false
    }

    #[test]
    fn example2_violation() {
        let (s, u) = example2();
        let types: Vec<Type> = u.iter().map(Individual::kind).collect();
        let rule = RuleSpec::maximizer(balanced_pref(&s, &types, 4), 4);
        let v = check_substitutes(&rule, &s, &u, 14).unwrap().expect("violation");
        assert_eq!(v.big_menu, whole(&u));
        assert!(v.replays(&rule, &s, &u).unwrap());
        // the two-removal witness also replays
        let wide = SubstitutesViolation {
            big_menu: whole(&u),
            small_menu: whole(&u) & !0b0001_0001,
            kept: 0b1000_1000,
            chosen_from_big: 0b1001_1001,
            small_menu_choices: vec![],
        };
        assert!(wide.replays(&rule, &s, &u).unwrap());
    }

    #[test]
    fn efficient_search_matches_oracle() {
        let s = DimensionSchema::from_names(&[("d", &["a", "b"])]).unwrap();
        let a = Identity::new(&[0]);
        let b = Identity::new(&[1]);
        let rules = [
            RuleSpec::reserve(vec![Slot::Open, Slot::Reserve(a.clone())], TieBreak::ById),
            RuleSpec::reserve(vec![Slot::Reserve(b.clone()), Slot::Open], TieBreak::ById),
            RuleSpec::quota(vec![(a.clone(), 1)], 2, TieBreak::ById),
        ];
        for seed in 0..8u64 {
            let u: Vec<Individual> = (0..5)
                .map(|i| {
                    let id = if (seed >> (i % 3)) & 1 == 0 { a.clone() } else { b.clone() };
                    Individual::new(format!("p{i}"), id, Score::int(((i as u64 * 5 + seed) % 3) as i64))
                })
                .collect();
            for rule in &rules {
                let t = ChoiceTable::all_menus(rule, &s, &u, 14).unwrap();
                assert_eq!(check_substitutes_table(&t).is_some(), oracle_violates(&t));
            }
            let types: Vec<Type> = all_types(&s, &ScoreSet::integers(0..3));
            let pref = PreferenceTable::from_key(profiles_up_to(&types, 2), |p| {
                let n = p.count_identity(&a);
                (p.len(), n == 1, p.sorted_scores())
            });
            let rule = RuleSpec::maximizer(pref, 2);
            let t = ChoiceTable::all_menus(&rule, &s, &u, 14).unwrap();
            assert_eq!(check_substitutes_table(&t).is_some(), oracle_violates(&t));
        }
    }

    #[test]
    fn single_slot_rules_are_substitutable() {
        let s = DimensionSchema::from_names(&[("d", &["a", "b"])]).unwrap();
        let u: Vec<Individual> = (0..5).map(|i| Individual::new(format!("p{i}"), Identity::new(&[(i % 2) as u8]), Score::int(i as i64))).collect();
        let rule = RuleSpec::reserve(vec![Slot::Reserve(Identity::new(&[1]))], TieBreak::Error);
        assert!(check_substitutes(&rule, &s, &u, 14).unwrap().is_none());
    }

    #[test]
    fn top_q_is_gross_substitutable() {
        let s = DimensionSchema::from_names(&[("d", &["a", "b"])]).unwrap();
        let scores = ScoreSet::integers(0..3);
        let u: Vec<Individual> = (0..6)
            .map(|i| Individual::new(format!("p{i}"), Identity::new(&[(i % 2) as u8]), Score::int((i / 2) as i64)))
            .collect();
        let rule = RuleSpec::top_q(2, TieBreak::ById);
        assert!(check_gross_substitutes(&rule, &s, &u, &scores, 2, DEFAULT_GS_CAP).unwrap().is_none());
        assert!(check_wg_responsiveness(&rule, &s, &u, 14).unwrap().is_none());
        assert!(matches!(check_gross_substitutes(&rule, &s, &u, &scores, 2, 10), Err(GrossError::CapExceeded { .. })));
    }

    #[test]
    fn quota_is_responsive() {
        let s = DimensionSchema::from_names(&[("d", &["a", "b"])]).unwrap();
        let u: Vec<Individual> = (0..6)
            .map(|i| Individual::new(format!("p{i}"), Identity::new(&[(i % 2) as u8]), Score::int(i as i64)))
            .collect();
        let rule = RuleSpec::quota(vec![(Identity::new(&[0]), 1)], 3, TieBreak::Error);
        assert!(check_wg_responsiveness(&rule, &s, &u, 14).unwrap().is_none());
        let cfg = MenuFamilyConfig::all_subsets(u.clone());
        assert_eq!(enumerate_menus(&cfg).unwrap().len(), 63);
    }
}
