//! Re-deriving the score order from a preference over singletons.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Identity, PreferenceTable, Score, Type, TypeProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("singleton profile of {0:?} is missing from the domain")]
    MissingSingleton(Type),
    /// `i ⪰ j` but not `i2 ⪰ j2`, with matching identities and scores.
    #[error("scores are not treated uniformly across identities")]
    NotUniform { i: Type, j: Type, i2: Type, j2: Type },
    /// Two profiles that coincide after merging indifferent scores are ranked apart.
    #[error("profiles {0} and {1} merge under the new scores but are not indifferent")]
    MergeConflict(TypeProfile, TypeProfile),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonicalization {
    /// Indifference classes of original scores, best first.
    pub classes: Vec<Vec<Score>>,
    /// Original score to new score; the best class gets the highest value.
    pub mapping: BTreeMap<Score, Score>,
    pub relabeled: PreferenceTable,
}

fn identities(pref: &PreferenceTable) -> Vec<Identity> {
    let mut ids: Vec<Identity> = pref.domain_types().into_iter().map(|t| t.identity).collect();
    ids.sort();
    ids.dedup();
    ids
}

fn weakly(pref: &PreferenceTable, a: &Type, b: &Type) -> Result<bool, CanonicalError> {
    let ra = pref.rank_of(&TypeProfile::new(vec![a.clone()])).ok_or_else(|| CanonicalError::MissingSingleton(a.clone()))?;
    let rb = pref.rank_of(&TypeProfile::new(vec![b.clone()])).ok_or_else(|| CanonicalError::MissingSingleton(b.clone()))?;
    Ok(ra <= rb)
}

/// First quadruple breaking uniform treatment of scores, if any.
pub fn uniformity_violation(pref: &PreferenceTable) -> Result<Option<(Type, Type, Type, Type)>, CanonicalError> {
    let ids = identities(pref);
    let scores = pref.domain_scores();
    for a in &ids {
        for b in &ids {
            for &s in &scores {
                for &t in &scores {
                    let (i, j) = (Type::new(a.clone(), s), Type::new(a.clone(), t));
                    let (i2, j2) = (Type::new(b.clone(), s), Type::new(b.clone(), t));
                    if weakly(pref, &i, &j)? && !weakly(pref, &i2, &j2)? {
                        return Ok(Some((i, j, i2, j2)));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Within-group responsiveness judged by the singleton ranking instead of scores.
pub fn preference_is_wg_responsive_star(pref: &PreferenceTable) -> bool {
    let types = pref.domain_types();
    let q = pref.max_size();
    for p in pref.domain().filter(|p| p.len() < q) {
        for hi in &types {
            for lo in &types {
                if hi.identity != lo.identity || !matches!(weakly(pref, lo, hi), Ok(false)) {
                    continue;
                }
                let (up, down) = (p.with(hi.clone()), p.with(lo.clone()));
                if let (Some(ru), Some(rd)) = (pref.rank_of(&up), pref.rank_of(&down)) {
                    if ru >= rd {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Peels off the best remaining scores of one identity at a time.
pub fn canonicalize_scores(pref: &PreferenceTable) -> Result<Canonicalization, CanonicalError> {
    if let Some((i, j, i2, j2)) = uniformity_violation(pref)? {
        return Err(CanonicalError::NotUniform { i, j, i2, j2 });
    }
    let Some(theta) = identities(pref).into_iter().next() else {
        return Ok(Canonicalization { classes: Vec::new(), mapping: BTreeMap::new(), relabeled: pref.clone() });
    };
    let mut left = pref.domain_scores();
    let mut classes: Vec<Vec<Score>> = Vec::new();
    while !left.is_empty() {
        let mut top = Vec::new();
        for &s in &left {
            let i = Type::new(theta.clone(), s);
            let mut best = true;
            for &t in &left {
                best &= weakly(pref, &i, &Type::new(theta.clone(), t))?;
            }
            if best {
                top.push(s);
            }
        }
        left.retain(|s| !top.contains(s));
        classes.push(top);
    }
    let k = classes.len() as i64;
    let mapping: BTreeMap<Score, Score> = classes
        .iter()
        .enumerate()
        .flat_map(|(n, c)| c.iter().map(move |&s| (s, Score::int(k - n as i64))))
        .collect();
    let relabel = |p: &TypeProfile| TypeProfile::new(p.entries().iter().map(|t| Type::new(t.identity.clone(), mapping[&t.score])).collect());
    let mut merged: BTreeMap<TypeProfile, (TypeProfile, usize)> = BTreeMap::new();
    let mut domain: Vec<&TypeProfile> = pref.domain().collect();
    domain.sort();
    for p in domain {
        let rank = pref.rank_of(p).unwrap();
        let r = relabel(p);
        match merged.get(&r) {
            Some((q, rq)) if *rq != rank => return Err(CanonicalError::MergeConflict(q.clone(), p.clone())),
            Some(_) => {}
            None => {
                merged.insert(r, (p.clone(), rank));
            }
        }
    }
    let ranks: BTreeMap<TypeProfile, usize> = merged.into_iter().map(|(r, (_, rank))| (r, rank)).collect();
    let relabeled = PreferenceTable::from_key(ranks.keys().cloned().collect(), |p| std::cmp::Reverse(ranks[p]));
    Ok(Canonicalization { classes, mapping, relabeled })
}
