//! Score monotonicity predicates on explicit preferences.

use crate::model::{score_dominates, PreferenceTable, Type, TypeProfile};

/// Both monotonicity notions with their first counterexamples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// `(a, b)` with `a` score-dominating `b` but not strictly preferred.
    pub increasing_violation: Option<(TypeProfile, TypeProfile)>,
    /// `(P + t, P + t')` with `t` a higher-scoring type of the same identity.
    pub responsive_violation: Option<(TypeProfile, TypeProfile)>,
}

impl MonotonicityReport {
    pub fn increasing(&self) -> bool {
        self.increasing_violation.is_none()
    }

    pub fn responsive(&self) -> bool {
        self.responsive_violation.is_none()
    }

    /// The two notions are equivalent; disagreement indicates a defect.
    pub fn agree(&self) -> bool {
        self.increasing() == self.responsive()
    }
}

pub fn monotonicity_report(pref: &PreferenceTable) -> MonotonicityReport {
    MonotonicityReport {
        increasing_violation: increasing_violation(pref),
        responsive_violation: responsive_violation(pref),
    }
}

pub fn preference_is_increasing(pref: &PreferenceTable) -> bool {
    increasing_violation(pref).is_none()
}

pub fn preference_is_wg_responsive(pref: &PreferenceTable) -> bool {
    responsive_violation(pref).is_none()
}

fn increasing_violation(pref: &PreferenceTable) -> Option<(TypeProfile, TypeProfile)> {
    let domain: Vec<&TypeProfile> = pref.domain().collect();
    let mut pairs: Vec<(TypeProfile, TypeProfile)> = Vec::new();
    for a in &domain {
        for b in &domain {
            if score_dominates(a, b) && pref.strictly_prefers(a, b) != Some(true) {
                pairs.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    pairs.into_iter().min()
}

fn responsive_violation(pref: &PreferenceTable) -> Option<(TypeProfile, TypeProfile)> {
    let types: Vec<Type> = pref.domain_types();
    let q = pref.max_size();
    let mut base: Vec<&TypeProfile> = pref.domain().filter(|p| p.len() < q).collect();
    base.sort();
    for p in base {
        for hi in &types {
            for lo in &types {
                if hi.identity != lo.identity || hi.score <= lo.score {
                    continue;
                }
                let (up, down) = (p.with(hi.clone()), p.with(lo.clone()));
                if let (Some(ru), Some(rd)) = (pref.rank_of(&up), pref.rank_of(&down)) {
                    if ru >= rd {
                        return Some((up, down));
                    }
                }
            }
        }
    }
    None
}
