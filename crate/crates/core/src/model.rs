//! Population model: identities, scores, type profiles and the dominance
//! relations between profiles.
//!
//! A [`TypeProfile`] is the anonymity quotient of a set of individuals: the
//! multiset of `(identity, score)` pairs, kept sorted lexicographically by
//! identity vector and then by score. Golden reports depend on that order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact score value.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("dimension `{0}` needs at least two groups")]
    TooFewGroups(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("schema has no dimensions")]
    EmptySchema,
    #[error("score set is empty")]
    EmptyScores,
    #[error("scores must be strictly increasing")]
    UnorderedScores,
    #[error("invalid score `{0}`")]
    BadScore(String),
    #[error("identity `{0}` does not match the schema")]
    BadIdentity(String),
    #[error("score {score} of `{id}` is not in the score set")]
    UnknownScore { id: String, score: Score },
    #[error("privilege declared on dimension `{0}`, which does not have exactly two groups")]
    PrivilegeNotBinary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(pub Rational);

impl Score {
    pub fn int(v: i64) -> Self {
        Score(Rational::from_integer(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Score(Rational::new(num, den))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Score {
    type Err = ModelError;

    /// Accepts integers, `p/q` fractions and finite decimals such as `3.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadScore(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Score(Rational::new(n, d)));
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = whole.starts_with('-');
            let w: i64 = if whole == "-" || whole.is_empty() {
                0
            } else {
                whole.parse().map_err(|_| bad())?
            };
            let den = 10i64.pow(frac.len() as u32);
            let f: i64 = frac.parse().map_err(|_| bad())?;
            let num = w.abs() * den + f;
            let num = if negative { -num } else { num };
            return Ok(Score(Rational::new(num, den)));
        }
        s.trim().parse::<i64>().map(Score::int).map_err(|_| bad())
    }
}

impl Serialize for Score {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub groups: Vec<String>,
}

/// Ordered list of identity dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSchema {
    dims: Vec<Dimension>,
}

impl DimensionSchema {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, ModelError> {
        if dims.is_empty() {
            return Err(ModelError::EmptySchema);
        }
        let mut seen = Vec::new();
        for d in &dims {
            if d.groups.len() < 2 {
                return Err(ModelError::TooFewGroups(d.name.clone()));
            }
            if seen.contains(&&d.name) {
                return Err(ModelError::DuplicateName(d.name.clone()));
            }
            seen.push(&d.name);
            for (i, g) in d.groups.iter().enumerate() {
                if d.groups[..i].contains(g) {
                    return Err(ModelError::DuplicateName(format!("{}.{}", d.name, g)));
                }
            }
        }
        if dims.iter().any(|d| d.groups.len() > u8::MAX as usize) {
            return Err(ModelError::BadIdentity("too many groups".into()));
        }
        Ok(DimensionSchema { dims })
    }

    /// Convenience constructor from `(name, [groups])` pairs.
    pub fn from_names(dims: &[(&str, &[&str])]) -> Result<Self, ModelError> {
        Self::new(
            dims.iter()
                .map(|(n, gs)| Dimension {
                    name: n.to_string(),
                    groups: gs.iter().map(|g| g.to_string()).collect(),
                })
                .collect(),
        )
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim_index(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn group_index(&self, dim: usize, group: &str) -> Option<u8> {
        self.dims[dim].groups.iter().position(|g| g == group).map(|i| i as u8)
    }

    pub fn validate(&self, identity: &Identity) -> bool {
        identity.0.len() == self.dims.len()
            && identity
                .0
                .iter()
                .zip(&self.dims)
                .all(|(&g, d)| (g as usize) < d.groups.len())
    }

    /// Parses `g/m` style identities (one group name per dimension).
    pub fn parse_identity(&self, text: &str) -> Result<Identity, ModelError> {
        let parts: Vec<&str> = text.split('/').collect();
        if parts.len() != self.dims.len() {
            return Err(ModelError::BadIdentity(text.to_string()));
        }
        parts
            .iter()
            .enumerate()
            .map(|(d, p)| self.group_index(d, p.trim()).ok_or_else(|| ModelError::BadIdentity(text.to_string())))
            .collect::<Result<Vec<u8>, _>>()
            .map(Identity)
    }

    pub fn format_identity(&self, identity: &Identity) -> String {
        identity
            .0
            .iter()
            .zip(&self.dims)
            .map(|(&g, d)| d.groups.get(g as usize).map(String::as_str).unwrap_or("?"))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// All full identities in lexicographic order.
    pub fn identities(&self) -> Vec<Identity> {
        let mut out = vec![Vec::new()];
        for d in &self.dims {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..d.groups.len() as u8).map(move |g| {
                        let mut p = prefix.clone();
                        p.push(g);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(Identity).collect()
    }
}

/// Strictly increasing finite score set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSet {
    values: Vec<Score>,
}

impl ScoreSet {
    pub fn new(values: Vec<Score>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyScores);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::UnorderedScores);
        }
        Ok(ScoreSet { values })
    }

    pub fn integers(range: std::ops::Range<i64>) -> Self {
        ScoreSet::new(range.map(Score::int).collect()).expect("nonempty increasing range")
    }

    pub fn values(&self) -> &[Score] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, s: Score) -> Option<usize> {
        self.values.binary_search(&s).ok()
    }

    pub fn contains(&self, s: Score) -> bool {
        self.index_of(s).is_some()
    }

    pub fn lowest(&self) -> Score {
        self.values[0]
    }

    pub fn highest(&self) -> Score {
        *self.values.last().unwrap()
    }
}

/// Dense vector of group indices, one per dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Identity(pub Vec<u8>);

impl Identity {
    pub fn new(groups: &[u8]) -> Self {
        Identity(groups.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Individual {
    pub id: String,
    pub identity: Identity,
    pub score: Score,
}

impl Individual {
    pub fn new(id: impl Into<String>, identity: Identity, score: Score) -> Self {
        Individual { id: id.into(), identity, score }
    }

    pub fn kind(&self) -> Type {
        Type { identity: self.identity.clone(), score: self.score }
    }
}

/// `(identity, score)` pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Type {
    pub identity: Identity,
    pub score: Score,
}

impl Type {
    pub fn new(identity: Identity, score: Score) -> Self {
        Type { identity, score }
    }
}

/// Every type over a schema and score set, in canonical order.
pub fn all_types(schema: &DimensionSchema, scores: &ScoreSet) -> Vec<Type> {
    schema
        .identities()
        .into_iter()
        .flat_map(|id| scores.values().iter().map(move |&s| Type::new(id.clone(), s)))
        .collect()
}

/// Canonically sorted multiset of types.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TypeProfile {
    entries: Vec<Type>,
}

impl TypeProfile {
    pub fn new(mut entries: Vec<Type>) -> Self {
        entries.sort();
        TypeProfile { entries }
    }

    pub fn empty() -> Self {
        TypeProfile::default()
    }

    pub fn of<'a>(individuals: impl IntoIterator<Item = &'a Individual>) -> Self {
        TypeProfile::new(individuals.into_iter().map(Individual::kind).collect())
    }

    pub fn entries(&self) -> &[Type] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_identity(&self, identity: &Identity) -> usize {
        self.entries.iter().filter(|t| &t.identity == identity).count()
    }

    pub fn count_type(&self, ty: &Type) -> usize {
        self.entries.iter().filter(|t| *t == ty).count()
    }

    /// `(type, multiplicity)` runs in canonical order.
    pub fn grouped(&self) -> Vec<(Type, usize)> {
        let mut out: Vec<(Type, usize)> = Vec::new();
        for t in &self.entries {
            match out.last_mut() {
                Some((last, n)) if last == t => *n += 1,
                _ => out.push((t.clone(), 1)),
            }
        }
        out
    }

    /// Multiset containment: every entry of `other` appears here at least as often.
    pub fn contains(&self, other: &TypeProfile) -> bool {
        let (mut i, mut j) = (0, 0);
        while j < other.entries.len() {
            if i == self.entries.len() {
                return false;
            }
            match self.entries[i].cmp(&other.entries[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Greater => return false,
            }
        }
        true
    }

    pub fn with(&self, t: Type) -> TypeProfile {
        let mut entries = self.entries.clone();
        let pos = entries.partition_point(|e| e <= &t);
        entries.insert(pos, t);
        TypeProfile { entries }
    }

    pub fn without(&self, t: &Type) -> Option<TypeProfile> {
        let pos = self.entries.iter().position(|e| e == t)?;
        let mut entries = self.entries.clone();
        entries.remove(pos);
        Some(TypeProfile { entries })
    }

    /// Multiset difference; `None` unless `other` is contained in `self`.
    pub fn minus(&self, other: &TypeProfile) -> Option<TypeProfile> {
        let mut out = self.clone();
        for t in &other.entries {
            out = out.without(t)?;
        }
        Some(out)
    }

    pub fn identity_counts(&self) -> Vec<(Identity, usize)> {
        let mut out: Vec<(Identity, usize)> = Vec::new();
        for t in &self.entries {
            match out.last_mut() {
                Some((id, n)) if *id == t.identity => *n += 1,
                _ => out.push((t.identity.clone(), 1)),
            }
        }
        out
    }

    pub fn sorted_scores(&self) -> Vec<Score> {
        let mut s: Vec<Score> = self.entries.iter().map(|t| t.score).collect();
        s.sort();
        s
    }

    /// Distinct sub-multisets with exactly `k` entries, in canonical order.
    pub fn sub_profiles_of_size(&self, k: usize) -> Vec<TypeProfile> {
        let groups = self.grouped();
        let mut out = Vec::new();
        let mut pick = Vec::new();
        fn rec(groups: &[(Type, usize)], k: usize, pick: &mut Vec<Type>, out: &mut Vec<TypeProfile>) {
            if k == 0 {
                out.push(TypeProfile { entries: pick.clone() });
                return;
            }
            let Some(((t, n), rest)) = groups.split_first() else {
                return;
            };
            let available: usize = groups.iter().map(|g| g.1).sum();
            if available < k {
                return;
            }
            for take in (0..=(*n).min(k)).rev() {
                for _ in 0..take {
                    pick.push(t.clone());
                }
                rec(rest, k - take, pick, out);
                for _ in 0..take {
                    pick.pop();
                }
            }
        }
        rec(&groups, k, &mut pick, &mut out);
        out.sort();
        out
    }

    /// Distinct sub-multisets of size at most `max`, including the empty profile.
    pub fn sub_profiles_up_to(&self, max: usize) -> Vec<TypeProfile> {
        (0..=max.min(self.len())).flat_map(|k| self.sub_profiles_of_size(k)).collect()
    }
}

impl Serialize for TypeProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for TypeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let id: Vec<String> = t.identity.0.iter().map(|g| g.to_string()).collect();
            write!(f, "{}@{}", id.join("/"), t.score)?;
        }
        f.write_str("}")
    }
}

/// The anonymity quotient of a set of individuals.
pub fn canonical_profile(schema: &DimensionSchema, individuals: &[Individual]) -> Result<TypeProfile, ModelError> {
    for i in individuals {
        if !schema.validate(&i.identity) {
            return Err(ModelError::BadIdentity(i.id.clone()));
        }
    }
    Ok(TypeProfile::of(individuals))
}

pub fn group_count(profile: &TypeProfile, identity: &Identity) -> usize {
    profile.count_identity(identity)
}

/// Per-dimension group counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarginalDistribution {
    pub counts: Vec<Vec<usize>>,
}

impl MarginalDistribution {
    pub fn of(schema: &DimensionSchema, profile: &TypeProfile) -> Self {
        let mut counts: Vec<Vec<usize>> = schema.dims().iter().map(|d| vec![0; d.groups.len()]).collect();
        for t in profile.entries() {
            for (d, &g) in t.identity.0.iter().enumerate() {
                counts[d][g as usize] += 1;
            }
        }
        MarginalDistribution { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.first().map(|c| c.iter().sum()).unwrap_or(0)
    }

    /// Some group in some dimension is absent.
    pub fn is_boundary(&self) -> bool {
        self.counts.iter().any(|c| c.contains(&0))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MarginalDistribution) -> bool {
        self.counts
            .iter()
            .zip(&other.counts)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x <= y))
    }
}

impl fmt::Display for MarginalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|c| format!("({})", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        f.write_str(&parts.join("/"))
    }
}

pub fn marginal_distribution(schema: &DimensionSchema, profile: &TypeProfile) -> MarginalDistribution {
    MarginalDistribution::of(schema, profile)
}

pub fn is_boundary(m: &MarginalDistribution) -> bool {
    m.is_boundary()
}

/// Score dominance: same identity multiset and, within each identity, the
/// sorted scores of `a` weakly exceed those of `b` with one strict.
///
/// Comparing sorted score lists per identity is equivalent to the existence
/// of an identity-preserving bijection with weakly higher scores.
pub fn score_dominates(a: &TypeProfile, b: &TypeProfile) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let per_identity = |p: &TypeProfile| {
        let mut m: Vec<(Identity, Vec<Score>)> = Vec::new();
        for t in p.entries() {
            match m.last_mut() {
                Some((id, s)) if *id == t.identity => s.push(t.score),
                _ => m.push((t.identity.clone(), vec![t.score])),
            }
        }
        m
    };
    let (pa, pb) = (per_identity(a), per_identity(b));
    if pa.len() != pb.len() {
        return false;
    }
    let mut strict = false;
    for ((ia, sa), (ib, sb)) in pa.iter().zip(&pb) {
        if ia != ib || sa.len() != sb.len() {
            return false;
        }
        // entries are sorted ascending within an identity
        for (x, y) in sa.iter().zip(sb) {
            if x < y {
                return false;
            }
            if x > y {
                strict = true;
            }
        }
    }
    strict
}

/// Which group carries the privilege in each dimension, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivilegeDecl {
    privileged: Vec<Option<u8>>,
}

impl PrivilegeDecl {
    pub fn new(schema: &DimensionSchema, privileged: Vec<Option<u8>>) -> Result<Self, ModelError> {
        if privileged.len() != schema.len() {
            return Err(ModelError::BadIdentity("privilege vector length".into()));
        }
        for (d, p) in privileged.iter().enumerate() {
            if let Some(g) = p {
                let dim = &schema.dims()[d];
                if dim.groups.len() != 2 {
                    return Err(ModelError::PrivilegeNotBinary(dim.name.clone()));
                }
                if *g as usize >= 2 {
                    return Err(ModelError::BadIdentity(dim.name.clone()));
                }
            }
        }
        Ok(PrivilegeDecl { privileged })
    }

    pub fn privileged(&self) -> &[Option<u8>] {
        &self.privileged
    }

    /// `upper` equals `lower` except for flips into privileged groups.
    pub fn covers(&self, upper: &Identity, lower: &Identity) -> bool {
        upper.0.iter().zip(&lower.0).zip(&self.privileged).all(|((&u, &l), p)| {
            u == l || matches!(p, Some(g) if *g == u)
        })
    }
}

/// Privilege dominance: different profiles connected by a score-preserving
/// bijection whose only identity changes are flips into privileged groups.
pub fn privilege_dominates(a: &TypeProfile, b: &TypeProfile, decl: &PrivilegeDecl) -> bool {
    if a.len() != b.len() || a == b || a.sorted_scores() != b.sorted_scores() {
        return false;
    }
    let n = a.len();
    let ok = |i: usize, j: usize| {
        let (x, y) = (&a.entries()[i], &b.entries()[j]);
        x.score == y.score && decl.covers(&x.identity, &y.identity)
    };
    // Kuhn's augmenting-path matching
    let mut match_b: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, n: usize, ok: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], match_b: &mut [Option<usize>]) -> bool {
        for j in 0..n {
            if !seen[j] && ok(i, j) {
                seen[j] = true;
                if match_b[j].is_none() || augment(match_b[j].unwrap(), n, ok, seen, match_b) {
                    match_b[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, n, &ok, &mut seen, &mut match_b)
    })
}

/// Complete preorder over type profiles, stored as ranked indifference classes
/// (rank 0 is best).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceTable {
    classes: Vec<Vec<TypeProfile>>,
    rank: HashMap<TypeProfile, usize>,
}

impl PreferenceTable {
    /// Fails on a profile listed in more than one class.
    pub fn from_classes(classes: Vec<Vec<TypeProfile>>) -> Result<Self, TypeProfile> {
        let mut rank = HashMap::new();
        let classes: Vec<Vec<TypeProfile>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
        for (r, class) in classes.iter().enumerate() {
            for p in class {
                if rank.insert(p.clone(), r).is_some() {
                    return Err(p.clone());
                }
            }
        }
        Ok(PreferenceTable { classes, rank })
    }

    /// Ranks `domain` by a key where larger is better; equal keys are indifferent.
    pub fn from_key<K: Ord, F: Fn(&TypeProfile) -> K>(domain: Vec<TypeProfile>, key: F) -> Self {
        let mut keyed: Vec<(K, TypeProfile)> = domain.into_iter().map(|p| (key(&p), p)).collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let mut classes: Vec<Vec<TypeProfile>> = Vec::new();
        let mut last: Option<K> = None;
        for (k, p) in keyed {
            if last.as_ref() == Some(&k) {
                classes.last_mut().unwrap().push(p);
            } else {
                classes.push(vec![p]);
                last = Some(k);
            }
        }
        Self::from_classes(classes).expect("domain profiles are distinct")
    }

    pub fn classes(&self) -> &[Vec<TypeProfile>] {
        &self.classes
    }

    pub fn rank_of(&self, p: &TypeProfile) -> Option<usize> {
        self.rank.get(p).copied()
    }

    pub fn domain(&self) -> impl Iterator<Item = &TypeProfile> {
        self.classes.iter().flatten()
    }

    pub fn contains(&self, p: &TypeProfile) -> bool {
        self.rank.contains_key(p)
    }

    /// `a ≻ b`; `None` when either profile is outside the domain.
    pub fn strictly_prefers(&self, a: &TypeProfile, b: &TypeProfile) -> Option<bool> {
        Some(self.rank_of(a)? < self.rank_of(b)?)
    }

    pub fn indifferent(&self, a: &TypeProfile, b: &TypeProfile) -> Option<bool> {
        Some(self.rank_of(a)? == self.rank_of(b)?)
    }

    /// Distinct scores and identities appearing in the domain.
    pub fn domain_scores(&self) -> Vec<Score> {
        let mut s: Vec<Score> = self.domain().flat_map(|p| p.entries().iter().map(|t| t.score)).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn domain_types(&self) -> Vec<Type> {
        let mut t: Vec<Type> = self.domain().flat_map(|p| p.entries().iter().cloned()).collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn max_size(&self) -> usize {
        self.domain().map(TypeProfile::len).max().unwrap_or(0)
    }
}

/// Every profile with at most `q` entries drawn (with repetition) from `types`.
pub fn profiles_up_to(types: &[Type], q: usize) -> Vec<TypeProfile> {
    let mut types = types.to_vec();
    types.sort();
    types.dedup();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(types: &[Type], start: usize, left: usize, pick: &mut Vec<Type>, out: &mut Vec<TypeProfile>) {
        out.push(TypeProfile { entries: pick.clone() });
        if left == 0 {
            return;
        }
        for i in start..types.len() {
            pick.push(types[i].clone());
            rec(types, i, left - 1, pick, out);
            pick.pop();
        }
    }
    rec(&types, 0, q, &mut pick, &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema22() -> DimensionSchema {
        DimensionSchema::from_names(&[("d1", &["1", "2"]), ("d2", &["1", "2"])]).unwrap()
    }

    fn ind(id: &str, g: &[u8], s: i64) -> Individual {
        Individual::new(id, Identity::new(g), Score::int(s))
    }

    #[test]
    fn score_parsing() {
        assert_eq!("3.5".parse::<Score>().unwrap(), Score::ratio(7, 2));
        assert_eq!("7/2".parse::<Score>().unwrap(), Score::ratio(7, 2));
        assert_eq!("-0.5".parse::<Score>().unwrap(), Score::ratio(-1, 2));
        assert_eq!("4".parse::<Score>().unwrap(), Score::int(4));
        assert!("x".parse::<Score>().is_err());
        assert!("1/0".parse::<Score>().is_err());
        assert_eq!(Score::ratio(7, 2).to_string(), "7/2");
    }

    #[test]
    fn schema_rejects_single_group() {
        assert!(matches!(
            DimensionSchema::from_names(&[("d", &["only"])]),
            Err(ModelError::TooFewGroups(_))
        ));
        assert!(DimensionSchema::from_names(&[("d", &["a", "a"])]).is_err());
    }

    #[test]
    fn canonical_profile_examples() {
        let s = schema22();
        assert!(canonical_profile(&s, &[]).unwrap().is_empty());
        // i1,i5 are (1,1); i4,i8 are (2,2)
        let set = [ind("i1", &[0, 0], 1), ind("i5", &[0, 0], 1), ind("i4", &[1, 1], 1), ind("i8", &[1, 1], 1)];
        let p = canonical_profile(&s, &set).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(group_count(&p, &Identity::new(&[0, 0])), 2);
        assert_eq!(group_count(&p, &Identity::new(&[1, 1])), 2);
        assert_eq!(group_count(&p, &Identity::new(&[0, 1])), 0);
        let relabeled = [ind("x", &[1, 1], 1), ind("y", &[0, 0], 1), ind("z", &[1, 1], 1), ind("w", &[0, 0], 1)];
        assert_eq!(canonical_profile(&s, &relabeled).unwrap(), p);
        assert!(canonical_profile(&s, &[ind("bad", &[0, 5], 1)]).is_err());
        assert!(canonical_profile(&s, &[ind("bad", &[0], 1)]).is_err());
    }

    #[test]
    fn saturated_group_count() {
        let p = TypeProfile::new(vec![Type::new(Identity::new(&[0, 1]), Score::int(1)); 3]);
        assert_eq!(group_count(&p, &Identity::new(&[0, 1])), 3);
        assert_eq!(group_count(&TypeProfile::empty(), &Identity::new(&[0, 1])), 0);
    }

    #[test]
    fn marginal_footnote_example() {
        let s = DimensionSchema::from_names(&[("gender", &["men", "women"]), ("income", &["rich", "middle", "poor"])]).unwrap();
        let p = TypeProfile::of(&[ind("i", &[0, 0], 1), ind("j", &[0, 2], 1)]);
        let m = marginal_distribution(&s, &p);
        assert_eq!(m.counts, vec![vec![2, 0], vec![1, 0, 1]]);
        assert!(is_boundary(&m));
        let empty = marginal_distribution(&s, &TypeProfile::empty());
        assert_eq!(empty.counts, vec![vec![0, 0], vec![0, 0, 0]]);
    }

    #[test]
    fn example2_equal_marginals() {
        let s = schema22();
        let hat = TypeProfile::of(&[ind("i1", &[0, 0], 1), ind("i5", &[0, 0], 1), ind("i4", &[1, 1], 1), ind("i8", &[1, 1], 1)]);
        let tilde = TypeProfile::of(&[ind("i2", &[0, 1], 1), ind("i6", &[0, 1], 1), ind("i3", &[1, 0], 1), ind("i7", &[1, 0], 1)]);
        let (mh, mt) = (marginal_distribution(&s, &hat), marginal_distribution(&s, &tilde));
        assert_eq!(mh, mt);
        assert_eq!(mh.counts, vec![vec![2, 2], vec![2, 2]]);
        assert!(!mh.is_boundary());
        let lopsided = MarginalDistribution { counts: vec![vec![4, 0], vec![2, 2]] };
        assert!(lopsided.is_boundary());
    }

    #[test]
    fn small_profiles_are_boundary() {
        let s = DimensionSchema::from_names(&[("a", &["x", "y", "z"]), ("b", &["u", "v"])]).unwrap();
        let types = all_types(&s, &ScoreSet::integers(0..1));
        for p in profiles_up_to(&types, 2) {
            assert!(marginal_distribution(&s, &p).is_boundary(), "{p}");
        }
    }

    #[test]
    fn example1_score_dominance() {
        // m1g, w1r, and the improved m1r
        let gm = [0u8, 0];
        let rw = [1u8, 1];
        let rm = [1u8, 0];
        let better = TypeProfile::of(&[ind("m1g", &gm, 4), ind("w1r", &rw, 3), ind("mt1r", &rm, 3)]);
        let worse = TypeProfile::of(&[ind("m1g", &gm, 4), ind("w1r", &rw, 3), ind("m1r", &rm, 2)]);
        assert!(score_dominates(&better, &worse));
        assert!(!score_dominates(&worse, &better));
        assert!(!score_dominates(&better, &better));
        let other_ids = TypeProfile::of(&[ind("a", &gm, 4), ind("b", &rw, 3), ind("c", &gm, 1)]);
        assert!(!score_dominates(&better, &other_ids));
    }

    #[test]
    fn privilege_examples() {
        let s = schema22();
        let decl = PrivilegeDecl::new(&s, vec![Some(1), None]).unwrap();
        let plain = TypeProfile::of(&[ind("a", &[0, 0], 2)]);
        let privileged = TypeProfile::of(&[ind("a", &[1, 0], 2)]);
        assert!(privilege_dominates(&privileged, &plain, &decl));
        assert!(!privilege_dominates(&plain, &privileged, &decl));
        assert!(!privilege_dominates(&plain, &plain, &decl));
        let other_dim = TypeProfile::of(&[ind("a", &[0, 1], 2)]);
        assert!(!privilege_dominates(&other_dim, &plain, &decl));
        let s3 = DimensionSchema::from_names(&[("d", &["a", "b", "c"])]).unwrap();
        assert!(matches!(PrivilegeDecl::new(&s3, vec![Some(0)]), Err(ModelError::PrivilegeNotBinary(_))));
    }

    #[test]
    fn sub_profiles_counts() {
        let t = |g: u8| Type::new(Identity::new(&[g]), Score::int(1));
        let p = TypeProfile::new(vec![t(0), t(0), t(1)]);
        assert_eq!(p.sub_profiles_of_size(2).len(), 2);
        assert_eq!(p.sub_profiles_up_to(3).len(), 6);
        assert!(p.contains(&TypeProfile::new(vec![t(0), t(1)])));
        assert!(!p.contains(&TypeProfile::new(vec![t(1), t(1)])));
    }

    #[test]
    fn preference_table_from_key() {
        let t = |g: u8| Type::new(Identity::new(&[g]), Score::int(1));
        let domain = profiles_up_to(&[t(0), t(1)], 2);
        assert_eq!(domain.len(), 6);
        let pref = PreferenceTable::from_key(domain, |p| p.len());
        assert_eq!(pref.classes().len(), 3);
        let both = TypeProfile::new(vec![t(0), t(1)]);
        let one = TypeProfile::new(vec![t(0)]);
        assert_eq!(pref.strictly_prefers(&both, &one), Some(true));
        assert_eq!(pref.indifferent(&both, &TypeProfile::new(vec![t(0), t(0)])), Some(true));
    }
}
