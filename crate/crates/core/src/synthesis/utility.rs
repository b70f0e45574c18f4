//! Utilities separable in scores and per-identity counts.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{profiles_up_to, DimensionSchema, Identity, PreferenceTable, Score, Type, TypeProfile};
use crate::rules::RuleSpec;

/// Exact rational that serializes as `"p/q"` (or `"p"` when integral).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn int(v: i64) -> Self {
        Exact(BigRational::from_integer(BigInt::from(v)))
    }
}

impl From<BigRational> for Exact {
    fn from(v: BigRational) -> Self {
        Exact(v)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn score_value(s: Score) -> BigRational {
    BigRational::new(BigInt::from(*s.0.numer()), BigInt::from(*s.0.denom()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityTerms {
    pub identity: Identity,
    pub guaranteed: usize,
    /// Marginal value of the `n`-th member, `n = 1..=q`.
    pub increments: Vec<Exact>,
    /// Cumulative value after `n` members, `n = 0..=q`.
    pub cumulative: Vec<Exact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparableUtility {
    pub capacity: usize,
    pub score_utility: Vec<(Score, Exact)>,
    pub identities: Vec<IdentityTerms>,
    pub u_bar: Exact,
    /// False when some cumulative term has increasing increments somewhere.
    pub concave: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtilityError {
    #[error("no utility for score {0}")]
    UnknownScore(Score),
    #[error("no diversity term for identity {0:?}")]
    UnknownIdentity(Identity),
    #[error("{count} members of one identity exceed capacity {capacity}")]
    TooMany { count: usize, capacity: usize },
}

impl SeparableUtility {
    /// `terms`: identity, guaranteed count and the `q` marginal values.
    pub fn new(capacity: usize, score_utility: Vec<(Score, BigRational)>, terms: Vec<(Identity, usize, Vec<BigRational>)>, u_bar: BigRational) -> Self {
        let mut concave = true;
        let identities = terms
            .into_iter()
            .map(|(identity, guaranteed, inc)| {
                let mut cumulative = vec![Exact(BigRational::zero())];
                for v in &inc {
                    let next = &cumulative.last().unwrap().0 + v;
                    cumulative.push(Exact(next));
                }
                concave &= inc.windows(2).all(|w| w[1] <= w[0]);
                IdentityTerms { identity, guaranteed, increments: inc.into_iter().map(Exact).collect(), cumulative }
            })
            .collect();
        SeparableUtility {
            capacity,
            score_utility: score_utility.into_iter().map(|(s, v)| (s, Exact(v))).collect(),
            identities,
            u_bar: Exact(u_bar),
            concave,
        }
    }

    pub fn u(&self, s: Score) -> Option<&BigRational> {
        self.score_utility.iter().find(|(t, _)| *t == s).map(|(_, v)| &v.0)
    }

    pub fn terms(&self, id: &Identity) -> Option<&IdentityTerms> {
        self.identities.iter().find(|t| t.identity == *id)
    }

    pub fn u_strictly_increasing(&self) -> bool {
        let mut v: Vec<&(Score, Exact)> = self.score_utility.iter().collect();
        v.sort_by_key(|(s, _)| *s);
        v.windows(2).all(|w| w[1].1 > w[0].1)
    }

    pub fn evaluate(&self, profile: &TypeProfile) -> Result<BigRational, UtilityError> {
        let mut total = BigRational::zero();
        for t in profile.entries() {
            total += self.u(t.score).ok_or(UtilityError::UnknownScore(t.score))?;
        }
        for (id, n) in profile.identity_counts() {
            let terms = self.terms(&id).ok_or_else(|| UtilityError::UnknownIdentity(id.clone()))?;
            let v = terms.cumulative.get(n).ok_or(UtilityError::TooMany { count: n, capacity: self.capacity })?;
            total += &v.0;
        }
        Ok(total)
    }

    /// Utility-maximal sub-profiles of size `min(q, |menu|)`.
    pub fn argmax(&self, menu: &TypeProfile) -> Result<Vec<TypeProfile>, UtilityError> {
        let k = self.capacity.min(menu.len());
        let mut best: Option<BigRational> = None;
        let mut out = Vec::new();
        for p in menu.sub_profiles_of_size(k) {
            let v = self.evaluate(&p)?;
            match &best {
                Some(b) if v < *b => {}
                Some(b) if v == *b => out.push(p),
                _ => {
                    best = Some(v);
                    out = vec![p];
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// The maximizer rule over every profile of at most `q` of the given types.
    pub fn to_rule(&self, types: &[Type]) -> Result<RuleSpec, UtilityError> {
        let domain = profiles_up_to(types, self.capacity);
        let mut keyed = Vec::with_capacity(domain.len());
        for p in &domain {
            keyed.push(self.evaluate(p)?);
        }
        let values: std::collections::HashMap<TypeProfile, BigRational> = domain.iter().cloned().zip(keyed).collect();
        let pref = PreferenceTable::from_key(domain, |p| values[p].clone());
        Ok(RuleSpec::maximizer(pref, self.capacity))
    }
}

/// `max u - min u`.
fn spread(base_u: &[(Score, BigRational)]) -> BigRational {
    let max = base_u.iter().map(|(_, v)| v).max().cloned().unwrap_or_else(BigRational::zero);
    let min = base_u.iter().map(|(_, v)| v).min().cloned().unwrap_or_else(BigRational::zero);
    max - min
}

/// Caps enforced by a penalty of `q ū` on the first member above the cap.
pub fn quota_utility(schema: &DimensionSchema, caps: &[(Identity, usize)], base_u: &[(Score, BigRational)], q: usize) -> SeparableUtility {
    let u_bar = spread(base_u) + BigRational::from_integer(1.into());
    let penalty = -(&u_bar * BigRational::from_integer(BigInt::from(q)));
    let terms = schema
        .identities()
        .into_iter()
        .map(|id| {
            let cap = caps.iter().find(|(c, _)| *c == id).map(|(_, k)| *k);
            let inc = (1..=q).map(|n| if Some(n) == cap.map(|k| k + 1) { penalty.clone() } else { BigRational::zero() }).collect();
            (id, 0, inc)
        })
        .collect();
    SeparableUtility::new(q, base_u.to_vec(), terms, u_bar)
}

/// Reserved members worth `ū` each up to the reserve size.
pub fn reserve_utility(schema: &DimensionSchema, reserves: &[(Identity, usize)], base_u: &[(Score, BigRational)], q: usize) -> SeparableUtility {
    let u_bar = spread(base_u) + BigRational::from_integer(1.into());
    let terms = schema
        .identities()
        .into_iter()
        .map(|id| {
            let k = reserves.iter().filter(|(c, _)| *c == id).map(|(_, k)| *k).sum::<usize>();
            let inc = (1..=q).map(|n| if n <= k { u_bar.clone() } else { BigRational::zero() }).collect();
            (id, k, inc)
        })
        .collect();
    SeparableUtility::new(q, base_u.to_vec(), terms, u_bar)
}

/// `u(s) = s` over the given scores.
pub fn linear_scores(scores: &[Score]) -> Vec<(Score, BigRational)> {
    scores.iter().map(|&s| (s, score_value(s))).collect()
}
