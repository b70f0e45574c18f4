//! Declarative scenarios: a population, a rule, a menu family and the audits to run.

mod parse;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use parse::{parse_scenario, serialize_scenario, ErrorKind, ParseError};

use crate::menus::{full_menu, MenuError, MenuFamilyConfig, Menu};
use crate::model::{all_types, profiles_up_to, DimensionSchema, Identity, Individual, MarginalDistribution, PreferenceTable, PrivilegeDecl, Score, ScoreSet};
use crate::rules::{RuleSpec, RuleVariant, Slot, TieBreak};
use crate::synthesis::SeparableUtility;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefer {
    /// Best iff every dimension's group counts differ by at most one; all else indifferent.
    Balanced,
    ScoreSum,
}

impl Prefer {
    pub fn name(self) -> &'static str {
        match self {
            Prefer::Balanced => "balanced",
            Prefer::ScoreSum => "score-sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleDecl {
    TopQ { q: usize },
    SupremeCourt { o: usize, r: usize, ow: usize, rw: usize },
    Reserve { slots: Vec<Slot>, refill: bool },
    Quota { q: usize, caps: Vec<(Identity, usize)> },
    Maximizer { q: usize, prefer: Prefer },
    /// Maximizer of the scenario's `[utility]` section.
    Separable { q: usize },
}

impl RuleDecl {
    pub fn capacity(&self) -> usize {
        match self {
            RuleDecl::TopQ { q } | RuleDecl::Quota { q, .. } | RuleDecl::Maximizer { q, .. } | RuleDecl::Separable { q } => *q,
            RuleDecl::SupremeCourt { o, r, .. } => o + r,
            RuleDecl::Reserve { slots, .. } => slots.len(),
        }
    }
}

/// Score utilities and per-identity increments for `n = 1..=q`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UtilityDecl {
    pub u: Vec<(Score, Score)>,
    pub h: Vec<(Identity, Vec<Score>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MenuDecl {
    /// Every nonempty subset of the universe.
    All,
    /// Just the universe itself.
    Full,
    Sizes { min: usize, max: usize },
    Explicit(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audit {
    Rationality,
    RationalityWithScores,
    RationalityWithPrivilege,
    Substitutes,
    /// At most `k` individuals lowered at once; `None` uses the run default.
    GrossSubstitutes(Option<usize>),
    WgResponsiveness,
    Acyclicity,
    Separability,
    OpenFirst,
    Intersectionality,
    Monotonicity,
    ValuesDiversity,
}

impl Audit {
    pub const NAMES: [&'static str; 12] = [
        "rationality",
        "rationality-with-scores",
        "rationality-with-privilege",
        "substitutes",
        "gross-substitutes",
        "wg-responsiveness",
        "acyclicity",
        "separability",
        "open-first",
        "intersectionality",
        "monotonicity",
        "values-diversity",
    ];

    pub fn all() -> Vec<Audit> {
        Self::NAMES.iter().map(|n| Audit::from_name(n).unwrap()).collect()
    }

    pub fn from_name(name: &str) -> Option<Audit> {
        Some(match name {
            "rationality" => Audit::Rationality,
            "rationality-with-scores" => Audit::RationalityWithScores,
            "rationality-with-privilege" => Audit::RationalityWithPrivilege,
            "substitutes" => Audit::Substitutes,
            "gross-substitutes" => Audit::GrossSubstitutes(None),
            "wg-responsiveness" => Audit::WgResponsiveness,
            "acyclicity" => Audit::Acyclicity,
            "separability" => Audit::Separability,
            "open-first" => Audit::OpenFirst,
            "intersectionality" => Audit::Intersectionality,
            "monotonicity" => Audit::Monotonicity,
            "values-diversity" => Audit::ValuesDiversity,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Audit::Rationality => "rationality",
            Audit::RationalityWithScores => "rationality-with-scores",
            Audit::RationalityWithPrivilege => "rationality-with-privilege",
            Audit::Substitutes => "substitutes",
            Audit::GrossSubstitutes(_) => "gross-substitutes",
            Audit::WgResponsiveness => "wg-responsiveness",
            Audit::Acyclicity => "acyclicity",
            Audit::Separability => "separability",
            Audit::OpenFirst => "open-first",
            Audit::Intersectionality => "intersectionality",
            Audit::Monotonicity => "monotonicity",
            Audit::ValuesDiversity => "values-diversity",
        }
    }

    /// Cycle audits whose pass is relative to a finite menu family.
    pub fn is_cycle_audit(self) -> bool {
        matches!(self, Audit::Rationality | Audit::RationalityWithScores | Audit::RationalityWithPrivilege | Audit::Acyclicity)
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Audit::GrossSubstitutes(Some(k)) => write!(f, "gross-substitutes k={k}"),
            a => f.write_str(a.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: Option<String>,
    pub schema: DimensionSchema,
    pub scores: ScoreSet,
    pub privilege: Option<PrivilegeDecl>,
    pub universe: Vec<Individual>,
    pub rule: RuleDecl,
    pub tie_break: TieBreak,
    pub utility: Option<UtilityDecl>,
    pub menus: MenuDecl,
    pub audits: Vec<Audit>,
}

fn big(s: Score) -> BigRational {
    BigRational::new(BigInt::from(*s.0.numer()), BigInt::from(*s.0.denom()))
}

fn balanced(m: &MarginalDistribution) -> bool {
    m.counts.iter().all(|c| c.iter().max().unwrap_or(&0) - c.iter().min().unwrap_or(&0) <= 1)
}

impl Scenario {
    /// The executable rule; `tie` overrides the declared tie-break.
    pub fn rule_spec(&self, tie: Option<TieBreak>) -> RuleSpec {
        let tie = tie.unwrap_or(self.tie_break);
        let types = all_types(&self.schema, &self.scores);
        match &self.rule {
            RuleDecl::TopQ { q } => RuleSpec::top_q(*q, tie),
            RuleDecl::SupremeCourt { o, r, ow, rw } => RuleSpec::supreme_court(*o, *r, *ow, *rw, tie),
            RuleDecl::Reserve { slots, refill } => {
                RuleSpec::new(RuleVariant::Reserve { slots: slots.clone(), refill_skipped: *refill }, slots.len(), tie)
            }
            RuleDecl::Quota { q, caps } => RuleSpec::quota(caps.clone(), *q, tie),
            RuleDecl::Maximizer { q, prefer } => {
                let domain = profiles_up_to(&types, *q);
                let pref = match prefer {
                    Prefer::Balanced => PreferenceTable::from_key(domain, |p| balanced(&MarginalDistribution::of(&self.schema, p))),
                    Prefer::ScoreSum => PreferenceTable::from_key(domain, |p| p.entries().iter().map(|t| t.score.0).sum::<crate::model::Rational>()),
                };
                RuleSpec::maximizer(pref, *q)
            }
            RuleDecl::Separable { .. } => self
                .separable_utility()
                .and_then(|u| u.to_rule(&types).ok())
                .expect("utility is checked when the scenario is parsed"),
        }
    }

    /// The declared separable utility, for `separable` rules.
    pub fn separable_utility(&self) -> Option<SeparableUtility> {
        let RuleDecl::Separable { q } = self.rule else { return None };
        let decl = self.utility.as_ref()?;
        let u = decl.u.iter().map(|&(s, v)| (s, big(v))).collect();
        let terms = self
            .schema
            .identities()
            .into_iter()
            .map(|id| {
                let inc = decl.h.iter().find(|(i, _)| *i == id).map(|(_, v)| v.iter().map(|&x| big(x)).collect()).unwrap_or_else(|| vec![big(Score::int(0)); q]);
                (id, 0, inc)
            })
            .collect();
        Some(SeparableUtility::new(q, u, terms, big(Score::int(0))))
    }

    /// The preference behind a maximizer rule.
    pub fn preference(&self) -> Option<PreferenceTable> {
        match self.rule_spec(None).variant {
            RuleVariant::PreferenceMaximizer(p) => Some(p),
            _ => None,
        }
    }

    pub fn menu_config(&self, universe_cap: usize, menu_cap: u64) -> MenuFamilyConfig {
        let mut cfg = MenuFamilyConfig::all_subsets(self.universe.clone());
        cfg.universe_cap = universe_cap;
        cfg.menu_cap = Some(menu_cap);
        match &self.menus {
            MenuDecl::All | MenuDecl::Explicit(_) => {}
            MenuDecl::Full => cfg.include_all_subsets = false,
            MenuDecl::Sizes { min, max } => {
                cfg.min_size = *min;
                cfg.max_size = *max;
            }
        }
        cfg
    }

    /// The menu family as universe masks.
    pub fn menu_family(&self, universe_cap: usize, menu_cap: u64) -> Result<Vec<Menu>, MenuError> {
        match &self.menus {
            MenuDecl::Explicit(lists) => {
                let n = self.universe.len();
                if n > universe_cap.min(30) {
                    return Err(MenuError::UniverseTooLarge { size: n, cap: universe_cap.min(30) });
                }
                if lists.len() as u64 > menu_cap {
                    return Err(MenuError::TooManyMenus { count: lists.len() as u64, cap: menu_cap });
                }
                Ok(lists
                    .iter()
                    .map(|ids| ids.iter().fold(0, |m, id| m | (1 << self.universe.iter().position(|p| p.id == *id).unwrap())))
                    .collect())
            }
            _ => crate::menus::enumerate_menus(&self.menu_config(universe_cap, menu_cap)),
        }
    }

    pub fn describe_menus(&self) -> String {
        let n = self.universe.len();
        match &self.menus {
            MenuDecl::All => format!("all nonempty subsets of the {n} individuals"),
            MenuDecl::Full => format!("the full menu of {n} individuals"),
            MenuDecl::Sizes { min, max } => format!("subsets of size {min} to {max} of the {n} individuals"),
            MenuDecl::Explicit(m) => format!("{} explicit menus", m.len()),
        }
    }

    pub fn full_menu(&self) -> Menu {
        full_menu(self.universe.len())
    }
}

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const BUILTINS: [Builtin; 5] = [
    Builtin {
        name: "example1",
        summary: "Supreme Court rule on two menus: score-choice cycle",
        text: include_str!("../../scenarios/example1.scn"),
    },
    Builtin {
        name: "example2",
        summary: "balanced-marginals maximizer on eight individuals: substitutes fail",
        text: include_str!("../../scenarios/example2.scn"),
    },
    Builtin {
        name: "example3",
        summary: "open-first reserve rule: Tversky cycle, no separable utility",
        text: include_str!("../../scenarios/example3.scn"),
    },
    Builtin {
        name: "court-no-womens-reserve",
        summary: "Supreme Court rule without women's reserve: plain choice cycle",
        text: include_str!("../../scenarios/court-no-womens-reserve.scn"),
    },
    Builtin {
        name: "open-first-witness",
        summary: "one open slot before two reserves: open-first diagnostic",
        text: include_str!("../../scenarios/open-first-witness.scn"),
    },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}
