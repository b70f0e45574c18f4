//! Invariants over random universes, rules, preferences and relations.

use std::collections::BTreeMap;

use num_rational::BigRational;
use proptest::prelude::*;

use divaudit::audits::{canonicalize_scores, check_substitutes};
use divaudit::menus::{members, ChoiceTable};
use divaudit::model::{
    all_types, canonical_profile, privilege_dominates, profiles_up_to, score_dominates, DimensionSchema, Identity, Individual, MarginalDistribution, PreferenceTable,
    PrivilegeDecl, Score, ScoreSet, Type, TypeProfile,
};
use divaudit::revealed::{find_cycle, has_cycle, preference_is_wg_responsive, replay_cycle, CycleKind, RevealedGraph, Relations};
use divaudit::rules::{apply_rule, RuleSpec, Slot, TieBreak};
use divaudit::synthesis::{
    extract_pairwise_relation, find_tversky_cycle, lp_feasibility, quota_utility, synthesize_separable, linear_scores, PairwiseRelation, SeparableUtility,
    SynthesisOptions, SynthesisOutcome, Triple,
};

fn two_by_two() -> DimensionSchema {
    DimensionSchema::from_names(&[("d1", &["a", "b"]), ("d2", &["x", "y"])]).unwrap()
}

fn one_dim() -> DimensionSchema {
    DimensionSchema::from_names(&[("g", &["a", "b"])]).unwrap()
}

fn ty(groups: &[u8], score: i64) -> Type {
    Type::new(Identity::new(groups), Score::int(score))
}

/// Profiles over the 2x2 schema with scores 1..=3.
fn profile(max: usize) -> impl Strategy<Value = TypeProfile> {
    prop::collection::vec((0u8..2, 0u8..2, 1i64..=3), 1..=max).prop_map(|v| TypeProfile::new(v.into_iter().map(|(a, b, s)| ty(&[a, b], s)).collect()))
}

/// Universe on one binary dimension; ids lead with the group name.
fn universe(max: usize, scores: i64) -> impl Strategy<Value = Vec<Individual>> {
    let s = one_dim();
    prop::collection::vec((0u8..2, 1..=scores), 1..=max).prop_map(move |v| {
        v.into_iter()
            .enumerate()
            .map(|(k, (g, sc))| {
                let name = s.dims()[0].groups[g as usize].clone();
                Individual::new(format!("{name}{k}"), Identity::new(&[g]), Score::int(sc))
            })
            .collect()
    })
}

fn slots(max: usize) -> impl Strategy<Value = Vec<Slot>> {
    prop::collection::vec(prop::option::of(0u8..2), 1..=max).prop_map(|v| v.into_iter().map(|g| g.map_or(Slot::Open, |g| Slot::Reserve(Identity::new(&[g])))).collect())
}

/// Identity-preserving bijection with weakly higher scores and one strict.
fn dominates_by_bijection(a: &TypeProfile, b: &TypeProfile) -> bool {
    fn go(a: &[Type], b: &mut Vec<Type>, strict: bool) -> bool {
        let Some((x, rest)) = a.split_first() else { return strict };
        (0..b.len()).any(|j| {
            let y = b[j].clone();
            if y.identity != x.identity || y.score > x.score {
                return false;
            }
            b.remove(j);
            let ok = go(rest, b, strict || x.score > y.score);
            b.insert(j, y);
            ok
        })
    }
    a.len() == b.len() && go(a.entries(), &mut b.entries().to_vec(), false)
}

fn refs(u: &[Individual], m: u32) -> Vec<&Individual> {
    members(m).map(|i| &u[i]).collect()
}

fn graph(rule: &RuleSpec, s: &DimensionSchema, u: &[Individual], menus: &[u32]) -> Option<RevealedGraph> {
    let table = ChoiceTable::build(rule, s, u, menus).ok()?;
    Some(RevealedGraph::from_table(&table, rule.capacity, Relations { score: true, privilege: None }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_profile_ignores_order(v in prop::collection::vec((0u8..2, 0u8..2, 1i64..=3), 1..=6), seed in any::<u64>()) {
        let s = two_by_two();
        let people: Vec<Individual> = v.iter().enumerate().map(|(k, (a, b, sc))| Individual::new(format!("p{k}"), Identity::new(&[*a, *b]), Score::int(*sc))).collect();
        let p = canonical_profile(&s, &people).unwrap();
        prop_assert_eq!(TypeProfile::new(p.entries().to_vec()), p.clone());
        let mut shuffled = people.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
        }
        prop_assert_eq!(canonical_profile(&s, &shuffled).unwrap(), p.clone());
        let m = MarginalDistribution::of(&s, &p);
        prop_assert!(m.counts.iter().all(|c| c.iter().sum::<usize>() == p.len()));
        prop_assert_eq!(m.total(), p.len());
    }

    #[test]
    fn score_dominance_matches_bijection(a in profile(4), b in profile(4)) {
        prop_assert_eq!(score_dominates(&a, &b), dominates_by_bijection(&a, &b));
        prop_assert!(!score_dominates(&a, &a));
        prop_assert!(!(score_dominates(&a, &b) && score_dominates(&b, &a)));
    }

    #[test]
    fn score_dominance_is_transitive(a in profile(3), lift in prop::collection::vec(0i64..2, 3), lift2 in prop::collection::vec(0i64..2, 3)) {
        let raise = |p: &TypeProfile, by: &[i64]| TypeProfile::new(p.entries().iter().zip(by).map(|(t, d)| Type::new(t.identity.clone(), Score::int((*t.score.0.numer() + d).min(3)))).collect());
        let b = raise(&a, &lift);
        let c = raise(&b, &lift2);
        if score_dominates(&c, &b) && score_dominates(&b, &a) {
            prop_assert!(score_dominates(&c, &a));
        }
    }

    #[test]
    fn privilege_dominance_keeps_scores(a in profile(3), b in profile(3), p0 in prop::option::of(0u8..2), p1 in prop::option::of(0u8..2)) {
        let decl = PrivilegeDecl::new(&two_by_two(), vec![p0, p1]).unwrap();
        prop_assert!(!privilege_dominates(&a, &a, &decl));
        if privilege_dominates(&a, &b, &decl) {
            prop_assert_eq!(a.sorted_scores(), b.sorted_scores());
            prop_assert!(!privilege_dominates(&b, &a, &decl));
        }
    }

    #[test]
    fn reserve_rules_fill_capacity(u in universe(7, 3), slots in slots(4), menu in 1u32..128) {
        let s = one_dim();
        let menu = menu & ((1 << u.len()) - 1);
        prop_assume!(menu != 0);
        let rule = RuleSpec::reserve(slots.clone(), TieBreak::ById);
        let c = apply_rule(&rule, &s, &refs(&u, menu)).unwrap();
        let want = slots.len().min(menu.count_ones() as usize);
        prop_assert!(c.chosen.iter().all(|p| p.len() == want));
        prop_assert_eq!(c.chosen.len(), 1);
    }

    #[test]
    fn rules_are_anonymous(u in universe(6, 3), slots in slots(3), tie in any::<bool>()) {
        let s = one_dim();
        let tie = if tie { TieBreak::ById } else { TieBreak::Error };
        let rule = RuleSpec::reserve(slots, tie);
        let menu = (1u32 << u.len()) - 1;
        let first = apply_rule(&rule, &s, &refs(&u, menu)).map(|c| c.chosen);
        // reversing ids within each group keeps id order consistent across groups
        let n = u.len();
        let renamed: Vec<Individual> = u.iter().enumerate().map(|(k, p)| Individual { id: format!("{}{}", &p.id[..1], n - k + 10), ..p.clone() }).collect();
        let second = apply_rule(&rule, &s, &refs(&renamed, menu)).map(|c| c.chosen);
        match (first, second) {
            (Ok(a), Ok(b)) => if tie == TieBreak::Error { prop_assert_eq!(a, b) },
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn open_reserve_equals_uncapped_quota(u in universe(7, 4), q in 1usize..=4, tie in any::<bool>()) {
        let s = one_dim();
        let tie = if tie { TieBreak::ById } else { TieBreak::Error };
        let menu = (1u32 << u.len()) - 1;
        let open = apply_rule(&RuleSpec::reserve(vec![Slot::Open; q], tie), &s, &refs(&u, menu)).map(|c| c.chosen);
        let top = apply_rule(&RuleSpec::top_q(q, tie), &s, &refs(&u, menu)).map(|c| c.chosen);
        let quota = apply_rule(&RuleSpec::quota(Vec::new(), q, tie), &s, &refs(&u, menu)).map(|c| c.chosen);
        let caps_ok = apply_rule(&RuleSpec::quota(vec![(Identity::new(&[0]), q), (Identity::new(&[1]), q)], q, tie), &s, &refs(&u, menu)).map(|c| c.chosen);
        prop_assert_eq!(&open.is_ok(), &top.is_ok());
        if let (Ok(a), Ok(b), Ok(c), Ok(d)) = (&open, &top, &quota, &caps_ok) {
            prop_assert_eq!(a, b);
            prop_assert_eq!(a, c);
            prop_assert_eq!(a, d);
        }
    }

    #[test]
    fn quota_choice_maximizes_quota_utility(u in universe(7, 4), q in 1usize..=4, ca in 0usize..=4, cb in prop::option::of(0usize..=4)) {
        let s = one_dim();
        let mut caps = vec![(Identity::new(&[0]), ca.min(q))];
        if let Some(cb) = cb {
            caps.push((Identity::new(&[1]), cb.min(q)));
        }
        let menu = (1u32 << u.len()) - 1;
        let Ok(c) = apply_rule(&RuleSpec::quota(caps.clone(), q, TieBreak::Error), &s, &refs(&u, menu)) else { return Ok(()) };
        let scores: Vec<Score> = (1..=4).map(Score::int).collect();
        let util = quota_utility(&s, &caps, &linear_scores(&scores), q);
        let best = util.argmax(&TypeProfile::of(&u)).unwrap();
        prop_assert!(c.chosen.iter().all(|p| best.contains(p)), "{:?} not in {:?}", c.chosen, best);
    }

    #[test]
    fn more_menus_keep_cycles(u in universe(5, 3), slots in slots(3), picks in prop::collection::vec(1u32..32, 1..6), extra in prop::collection::vec(1u32..32, 1..6)) {
        let s = one_dim();
        let rule = RuleSpec::reserve(slots, TieBreak::ById);
        let full = (1u32 << u.len()) - 1;
        let mut small: Vec<u32> = picks.iter().map(|m| m & full).filter(|m| *m != 0).collect();
        small.sort();
        small.dedup();
        let mut big: Vec<u32> = [small.clone(), extra.iter().map(|m| m & full).filter(|m| *m != 0).collect()].concat();
        big.sort();
        big.dedup();
        let (Some(g1), Some(g2)) = (graph(&rule, &s, &u, &small), graph(&rule, &s, &u, &big)) else { return Ok(()) };
        for kind in [CycleKind::Choice, CycleKind::ScoreChoice] {
            if has_cycle(&g1, kind) {
                prop_assert!(has_cycle(&g2, kind));
            }
            if let Some(w) = find_cycle(&g2, kind) {
                prop_assert!(replay_cycle(&w, &rule, &s, &u, None).is_ok());
            }
        }
    }

    #[test]
    fn maximizers_never_cycle(keys in prop::collection::vec(0i64..5, 64), u in universe(5, 2), q in 1usize..=2) {
        let s = one_dim();
        let types = all_types(&s, &ScoreSet::integers(1..3));
        let domain = profiles_up_to(&types, q);
        let key: BTreeMap<TypeProfile, i64> = domain.iter().cloned().zip(keys.iter().cycle().copied()).collect();
        let rule = RuleSpec::maximizer(PreferenceTable::from_key(domain, |p| key[p]), q);
        let table = ChoiceTable::all_menus(&rule, &s, &u, 12).unwrap();
        let g = RevealedGraph::from_table(&table, q, Relations { score: false, privilege: None });
        prop_assert!(!has_cycle(&g, CycleKind::Choice));
    }

    #[test]
    fn substitutes_witnesses_replay(keys in prop::collection::vec(0i64..4, 64), u in universe(5, 2)) {
        let s = one_dim();
        let types = all_types(&s, &ScoreSet::integers(1..3));
        let domain = profiles_up_to(&types, 2);
        let key: BTreeMap<TypeProfile, i64> = domain.iter().cloned().zip(keys.iter().cycle().copied()).collect();
        let rule = RuleSpec::maximizer(PreferenceTable::from_key(domain, |p| key[p]), 2);
        if let Some(v) = check_substitutes(&rule, &s, &u, 12).unwrap() {
            prop_assert!(v.replays(&rule, &s, &u).unwrap());
            let w = v.widen_over_types(&rule, &s, &u).unwrap();
            prop_assert!(w.replays(&rule, &s, &u).unwrap());
        }
    }

    #[test]
    fn lp_and_cycle_search_agree(pairs in prop::collection::vec(((0i64..3, 0u8..3, 1usize..=3), (0i64..3, 0u8..3, 1usize..=3)), 1..=6)) {
        let t = |(s, g, n): (i64, u8, usize)| Triple::new(Score::int(s), Identity::new(&[g]), n);
        let rel = PairwiseRelation::from_pairs(pairs.into_iter().map(|(a, b)| (t(a), t(b))));
        let lp = lp_feasibility(&rel, false);
        let cycle = find_tversky_cycle(&rel, 4 * rel.len());
        if let Some(p) = &lp {
            prop_assert!(p.satisfies(&rel));
        }
        if let Some(c) = &cycle {
            prop_assert!(c.validate(&rel));
        }
        prop_assert_eq!(lp.is_none(), cycle.is_some());
    }

    #[test]
    fn uniform_preferences_canonicalize_to_responsive(f in prop::collection::vec(0i64..6, 3), bonus in prop::collection::vec(-3i64..3, 2)) {
        // the score value is shared by both identities, so treatment is uniform
        let s = one_dim();
        let types = all_types(&s, &ScoreSet::integers(1..4));
        let value = |t: &Type| f[(*t.score.0.numer() - 1) as usize] * 10 + bonus[t.identity.0[0] as usize];
        let pref = PreferenceTable::from_key(profiles_up_to(&types, 2), |p| (p.len(), p.entries().iter().map(value).sum::<i64>()));
        let c = canonicalize_scores(&pref).unwrap();
        prop_assert!(preference_is_wg_responsive(&c.relabeled));
        let flat: Vec<Score> = c.classes.iter().flatten().copied().collect();
        prop_assert_eq!(flat.len(), 3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A concave tie-free separable utility is recovered up to its argmax.
    #[test]
    fn separable_round_trip(levels in prop::collection::vec(1i64..4, 3), steps in prop::collection::vec((-2i64..6, prop::collection::vec(1i64..4, 2)), 2), q in 2usize..=3, u in universe(6, 3)) {
        let s = one_dim();
        let scores = ScoreSet::integers(1..4);
        let mut k = 0u32;
        let mut offset = || {
            k += 1;
            BigRational::new(7u64.pow(k).into(), 7u64.pow(20).into())
        };
        let mut level = BigRational::from_integer(0.into());
        let mut u_vals = Vec::new();
        for (&sc, d) in scores.values().iter().zip(&levels) {
            level += BigRational::from_integer((*d).into());
            u_vals.push((sc, &level + offset()));
        }
        let mut terms = Vec::new();
        for (id, (start, drops)) in s.identities().into_iter().zip(&steps) {
            let mut step = *start;
            let mut inc = Vec::new();
            for j in 0..q {
                inc.push(BigRational::from_integer(step.into()) + offset());
                step -= drops[j % 2];
            }
            terms.push((id, 0, inc));
        }
        let util = SeparableUtility::new(q, u_vals, terms, BigRational::from_integer(0.into()));
        let rule = util.to_rule(&all_types(&s, &scores)).unwrap();
        let out = synthesize_separable(&rule, &s, &scores, &u, &SynthesisOptions::default()).unwrap();
        let SynthesisOutcome::Rationalized(found) = out else { return Err(TestCaseError::fail(format!("{out:?}"))) };
        prop_assert!(found.concave && found.u_strictly_increasing());
        let rel = extract_pairwise_relation(&rule, &s, &u, 12).unwrap();
        prop_assert!(rel.pairs.iter().all(|p| !rel.contains(&p.worse, &p.better)));
        for m in 1u32..(1 << u.len()) {
            let menu = TypeProfile::of(refs(&u, m));
            prop_assert_eq!(found.argmax(&menu).unwrap(), util.argmax(&menu).unwrap());
        }
    }
}
