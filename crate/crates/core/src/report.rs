//! Runs a scenario's audits and renders deterministic reports.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::audits::{
    check_gross_substitutes, check_substitutes, check_wg_responsiveness, intersectionality_counterexample, values_diversity,
    CounterexampleError, GrossError, DEFAULT_GS_CAP,
};
use crate::menus::{menu_ids, menu_individuals, ChoiceTable, Menu, MenuError};
use crate::model::{Individual, TypeProfile};
use crate::revealed::{find_choice_cycle, find_score_choice_cycle, find_scp_cycle, monotonicity_report, replay_cycle, CycleWitness, Relations, RevealedGraph};
use crate::rules::{realize, RuleSpec, TieBreak};
use crate::scenario::{serialize_scenario, Audit, RuleDecl, Scenario};
use crate::synthesis::{
    extract_pairwise_relation, find_tversky_cycle, lp_feasibility, open_first_diagnostic, synthesize_separable, DiagnosticError, PairwiseRelation, RelPair, SeparableUtility,
    SynthesisError, SynthesisOptions, SynthesisOutcome, Triple, TverskyCycle, DEFAULT_SYNTHETIC_CAP,
};

pub const SCHEMA_VERSION: &str = "1.0";

pub const MENU_FAMILY_CAVEAT: &str = "A passing cycle audit covers only the enumerated menu family of this scenario. \
Absence of a cycle at this scale is evidence, not proof, for the rule on larger universes.";

/// Longest Tversky cycle the acyclicity audit searches for directly.
pub const CYCLE_SEARCH_LEN: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub max_universe: usize,
    pub max_menu_enum: u64,
    /// Overrides the scenario's tie-break when set.
    pub tie_break: Option<TieBreak>,
    /// Default `k` for gross-substitutes audits without one.
    pub gs_perturb: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_universe: 12, max_menu_enum: 1 << 14, tie_break: None, gs_perturb: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    PreconditionUnmet,
    CapExceeded,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::PreconditionUnmet => "precondition-unmet",
            Verdict::CapExceeded => "cap-exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub audit: String,
    pub verdict: Verdict,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedIndividual {
    pub id: String,
    pub identity: String,
    pub score: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub name: Option<String>,
    pub rule: String,
    pub capacity: usize,
    pub tie_break: TieBreak,
    pub menu_family: String,
    pub individuals: Vec<NamedIndividual>,
    /// Canonical scenario text.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub scenario: ScenarioEcho,
    pub verdicts: Vec<AuditResult>,
    pub caveat: Option<&'static str>,
}

impl Report {
    pub fn verdict_of(&self, audit: &str) -> Option<Verdict> {
        self.verdicts.iter().find(|v| v.audit == audit).map(|v| v.verdict)
    }

    /// 1 when some audit fails, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.verdict == Verdict::Fail) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = self.scenario.name.as_deref().unwrap_or("(unnamed)");
        let _ = writeln!(out, "scenario {name}: {} on {} individuals", self.scenario.rule, self.scenario.individuals.len());
        let _ = writeln!(out, "menus: {}", self.scenario.menu_family);
        let width = self.verdicts.iter().map(|v| v.audit.len()).max().unwrap_or(0);
        for v in &self.verdicts {
            let _ = writeln!(out, "{:<width$}  {:<18}  {}", v.audit, v.verdict.name(), v.detail);
        }
        if let Some(c) = self.caveat {
            let _ = writeln!(out, "note: {c}");
        }
        out
    }
}

/// Formats profiles and menus with declared names.
struct Names<'a> {
    sc: &'a Scenario,
}

impl Names<'_> {
    fn profile(&self, p: &TypeProfile) -> String {
        let parts: Vec<String> = p.entries().iter().map(|t| format!("{}@{}", self.sc.schema.format_identity(&t.identity), t.score)).collect();
        format!("{{{}}}", parts.join(", "))
    }

    fn ids(&self, m: Menu) -> Vec<String> {
        menu_ids(&self.sc.universe, m)
    }

    fn triple(&self, t: &Triple) -> String {
        format!("({}, {}, {})", t.score, self.sc.schema.format_identity(&t.identity), t.count)
    }

    fn cycle(&self, w: &CycleWitness, replayed: bool) -> Value {
        let steps: Vec<Value> = w
            .steps
            .iter()
            .map(|s| {
                let mut step = json!({
                    "from": self.profile(&s.from),
                    "to": self.profile(&s.to),
                    "relation": s.label,
                });
                if let Some(m) = s.menu {
                    let people = menu_individuals(&self.sc.universe, m);
                    let named = |p: &TypeProfile| realize(&people, p).map(|ix| ix.iter().map(|&i| people[i].id.clone()).collect::<Vec<_>>());
                    step["menu"] = json!(self.ids(m));
                    step["from_ids"] = json!(named(&s.from));
                    step["to_ids"] = json!(named(&s.to));
                }
                step
            })
            .collect();
        json!({
            "kind": w.kind,
            "profiles": w.profiles.iter().map(|p| self.profile(p)).collect::<Vec<_>>(),
            "steps": steps,
            "replayed": replayed,
        })
    }

    fn row(&self, r: &RelPair, rule: &RuleSpec) -> Value {
        let mut row = json!({ "better": self.triple(&r.better), "worse": self.triple(&r.worse) });
        if let Some(p) = &r.provenance {
            row["menu"] = json!(p.menu.iter().map(|i| i.id.clone()).collect::<Vec<_>>());
            row["chosen"] = json!(p.menu[p.chosen].id);
            row["rejected"] = json!(p.menu[p.rejected].id);
            row["replayed"] = json!(p.replays(rule, &self.sc.schema));
        }
        row
    }

    fn tversky(&self, c: &TverskyCycle, rule: &RuleSpec) -> Value {
        let rows: Vec<Value> = c.rows.iter().map(|r| self.row(r, rule)).collect();
        json!({ "rows": rows, "score_perm": c.score_perm, "diversity_perm": c.diversity_perm })
    }

    /// The whole relation, for infeasible systems without a short cycle.
    fn relation(&self, rel: &PairwiseRelation, rule: &RuleSpec) -> Value {
        let rows: Vec<Value> = rel.pairs.iter().map(|r| self.row(r, rule)).collect();
        json!({ "relation_size": rel.len(), "relation": rows })
    }

    fn people(&self, ps: &[Individual]) -> Vec<Value> {
        ps.iter().map(|p| json!([p.id, self.sc.schema.format_identity(&p.identity), p.score.to_string()])).collect()
    }

    fn utility(&self, u: &SeparableUtility) -> Value {
        let h: Vec<Value> = u
            .identities
            .iter()
            .map(|t| {
                json!({
                    "identity": self.sc.schema.format_identity(&t.identity),
                    "guaranteed": t.guaranteed,
                    "increments": t.increments,
                    "cumulative": t.cumulative,
                })
            })
            .collect();
        let scores: Vec<Value> = u.score_utility.iter().map(|(s, v)| json!({ "score": s.to_string(), "u": v })).collect();
        json!({ "u": scores, "h": h, "u_bar": u.u_bar, "concave": u.concave })
    }
}

fn result(audit: Audit, verdict: Verdict, detail: impl Into<String>, witness: Option<Value>) -> AuditResult {
    AuditResult { audit: audit.to_string(), verdict, detail: detail.into(), witness }
}

fn menu_error(audit: Audit, e: &MenuError) -> AuditResult {
    match e {
        MenuError::UniverseTooLarge { .. } | MenuError::TooManyMenus { .. } => result(audit, Verdict::CapExceeded, e.to_string(), None),
        _ => result(audit, Verdict::PreconditionUnmet, e.to_string(), None),
    }
}

fn synthesis_error(audit: Audit, e: &SynthesisError) -> AuditResult {
    match e {
        SynthesisError::Menu(m) => menu_error(audit, m),
        SynthesisError::CapExceeded { .. } => result(audit, Verdict::CapExceeded, e.to_string(), None),
        _ => result(audit, Verdict::PreconditionUnmet, e.to_string(), None),
    }
}

struct Run<'a> {
    sc: &'a Scenario,
    opts: &'a RunOptions,
    rule: RuleSpec,
    names: Names<'a>,
    family: Option<Result<ChoiceTable, MenuError>>,
    done: Vec<AuditResult>,
}

impl Run<'_> {
    fn family_table(&mut self) -> Result<&ChoiceTable, MenuError> {
        if self.family.is_none() {
            let built = self
                .sc
                .menu_family(self.opts.max_universe, self.opts.max_menu_enum)
                .and_then(|menus| ChoiceTable::build(&self.rule, &self.sc.schema, &self.sc.universe, &menus));
            self.family = Some(built);
        }
        self.family.as_ref().unwrap().as_ref().map_err(Clone::clone)
    }

    fn earlier(&self, audit: Audit) -> Option<&AuditResult> {
        self.done.iter().find(|r| r.audit == audit.to_string())
    }

    fn run(&mut self, audit: Audit) -> AuditResult {
        match audit {
            Audit::Rationality | Audit::RationalityWithScores | Audit::RationalityWithPrivilege => self.rationality(audit),
            Audit::Substitutes => self.substitutes(audit),
            Audit::GrossSubstitutes(k) => self.gross(audit, k.unwrap_or(self.opts.gs_perturb)),
            Audit::WgResponsiveness => self.responsiveness(audit),
            Audit::Acyclicity => self.acyclicity(audit),
            Audit::Separability => self.separability(audit),
            Audit::OpenFirst => self.open_first(audit),
            Audit::Intersectionality => self.intersectionality(audit),
            Audit::Monotonicity | Audit::ValuesDiversity => self.preference_audit(audit),
        }
    }

    fn rationality(&mut self, audit: Audit) -> AuditResult {
        let privilege = self.sc.privilege.clone();
        if audit == Audit::RationalityWithPrivilege && privilege.is_none() {
            return result(audit, Verdict::PreconditionUnmet, "the scenario declares no [privilege] section", None);
        }
        let q = self.rule.capacity;
        let table = match self.family_table() {
            Ok(t) => t,
            Err(e) => return menu_error(audit, &e),
        };
        let relations = Relations { score: audit != Audit::Rationality, privilege: if audit == Audit::RationalityWithPrivilege { privilege.clone() } else { None } };
        let graph = RevealedGraph::from_table(table, q, relations);
        let found = match audit {
            Audit::Rationality => Ok(find_choice_cycle(&graph)),
            Audit::RationalityWithScores => find_score_choice_cycle(&graph),
            _ => find_scp_cycle(&graph),
        };
        let kind = match audit {
            Audit::Rationality => "choice",
            Audit::RationalityWithScores => "score-choice",
            _ => "score-choice-privilege",
        };
        match found {
            Err(e) => result(audit, Verdict::PreconditionUnmet, e.to_string(), None),
            Ok(None) => result(audit, Verdict::Pass, format!("no {kind} cycle over {} menus", table.entries.len()), None),
            Ok(Some(w)) => {
                let replayed = replay_cycle(&w, &self.rule, &self.sc.schema, &self.sc.universe, privilege.as_ref()).is_ok();
                let path: Vec<String> = w.profiles.iter().map(|p| self.names.profile(p)).collect();
                result(audit, Verdict::Fail, format!("{kind} cycle {}", path.join(" -> ")), Some(self.names.cycle(&w, replayed)))
            }
        }
    }

    fn substitutes(&mut self, audit: Audit) -> AuditResult {
        let (sc, rule) = (self.sc, &self.rule);
        let found = check_substitutes(rule, &sc.schema, &sc.universe, self.opts.max_universe)
            .and_then(|v| v.map(|v| v.widen_over_types(rule, &sc.schema, &sc.universe)).transpose());
        match found {
            Err(e) => menu_error(audit, &e),
            Ok(None) => result(audit, Verdict::Pass, format!("every chosen subset stays choosable in all {} submenus", (1u64 << sc.universe.len()) - 1), None),
            Ok(Some(v)) => {
                let replayed = v.replays(rule, &sc.schema, &sc.universe).unwrap_or(false);
                let n = &self.names;
                let witness = json!({
                    "big_menu": n.ids(v.big_menu),
                    "removed": n.ids(v.removed()),
                    "kept": n.ids(v.kept),
                    "chosen_from_big": n.ids(v.chosen_from_big),
                    "small_menu_choices": v.small_menu_choices.iter().map(|(_, m)| n.ids(*m)).collect::<Vec<_>>(),
                    "replayed": replayed,
                });
                let detail = format!("{{{}}} is not choosable once {{{}}} leave", n.ids(v.kept).join(", "), n.ids(v.removed()).join(", "));
                result(audit, Verdict::Fail, detail, Some(witness))
            }
        }
    }

    fn gross(&mut self, audit: Audit, k: usize) -> AuditResult {
        let (sc, rule) = (self.sc, &self.rule);
        if sc.universe.len() > self.opts.max_universe {
            return menu_error(audit, &MenuError::UniverseTooLarge { size: sc.universe.len(), cap: self.opts.max_universe });
        }
        match check_gross_substitutes(rule, &sc.schema, &sc.universe, &sc.scores, k, DEFAULT_GS_CAP) {
            Err(GrossError::Menu(e)) => menu_error(audit, &e),
            Err(e @ GrossError::CapExceeded { .. }) => result(audit, Verdict::CapExceeded, e.to_string(), None),
            Ok(None) => result(audit, Verdict::Pass, format!("no violation lowering up to {k} score{}", if k == 1 { "" } else { "s" }), None),
            Ok(Some(v)) => {
                let replayed = v.replays(rule, &sc.schema, &sc.universe).unwrap_or(false);
                let n = &self.names;
                let lowered: Vec<Value> = v.lowered.iter().map(|(i, s)| json!({ "id": sc.universe[*i].id, "from": sc.universe[*i].score.to_string(), "to": s.to_string() })).collect();
                let witness = json!({
                    "menu": n.ids(v.menu),
                    "chosen": n.ids(v.chosen),
                    "kept": n.ids(v.kept),
                    "lowered": lowered,
                    "perturbed_choices": v.perturbed_choices.iter().map(|p| n.profile(p)).collect::<Vec<_>>(),
                    "replayed": replayed,
                });
                result(audit, Verdict::Fail, format!("{{{}}} drops out after lowering others", n.ids(v.kept).join(", ")), Some(witness))
            }
        }
    }

    fn responsiveness(&mut self, audit: Audit) -> AuditResult {
        let (sc, rule) = (self.sc, &self.rule);
        match check_wg_responsiveness(rule, &sc.schema, &sc.universe, self.opts.max_universe) {
            Err(e) => menu_error(audit, &e),
            Ok(None) => result(audit, Verdict::Pass, "no lower-scoring member displaces a higher-scoring one of the same identity", None),
            Ok(Some(v)) => {
                let replayed = v.replays(rule, &sc.schema, &sc.universe).unwrap_or(false);
                let (lo, hi) = (&sc.universe[v.lower].id, &sc.universe[v.higher].id);
                let witness = json!({
                    "menu": self.names.ids(v.menu),
                    "chosen": self.names.ids(v.chosen),
                    "lower": lo,
                    "higher": hi,
                    "replayed": replayed,
                });
                result(audit, Verdict::Fail, format!("{lo} is chosen over higher-scoring {hi}"), Some(witness))
            }
        }
    }

    fn acyclicity(&mut self, audit: Audit) -> AuditResult {
        let (sc, rule) = (self.sc, &self.rule);
        let rel = match extract_pairwise_relation(rule, &sc.schema, &sc.universe, self.opts.max_universe) {
            Ok(r) => r,
            Err(e) => return synthesis_error(audit, &e),
        };
        if lp_feasibility(&rel, false).is_some() {
            return result(audit, Verdict::Pass, format!("the {} revealed comparisons admit additive weights", rel.len()), None);
        }
        match find_tversky_cycle(&rel, rel.len().min(CYCLE_SEARCH_LEN)) {
            Some(c) => {
                let rows: Vec<String> = c.rows.iter().map(|r| format!("{} > {}", self.names.triple(&r.better), self.names.triple(&r.worse))).collect();
                let mut w = self.names.tversky(&c, rule);
                w["validated"] = json!(c.validate(&rel));
                result(audit, Verdict::Fail, format!("cycle of {} comparisons: {}", c.rows.len(), rows.join(", ")), Some(w))
            }
            None => result(
                audit,
                Verdict::Fail,
                format!("the {} revealed comparisons admit no additive weights; every cycle is longer than {CYCLE_SEARCH_LEN}", rel.len()),
                Some(self.names.relation(&rel, rule)),
            ),
        }
    }

    fn separability(&mut self, audit: Audit) -> AuditResult {
        for prior in [Audit::Substitutes, Audit::WgResponsiveness, Audit::Acyclicity] {
            if let Some(r) = self.earlier(prior).filter(|r| r.verdict == Verdict::Fail) {
                return result(audit, Verdict::Fail, format!("no separable utility: {prior} fails"), r.witness.clone());
            }
        }
        let (sc, rule) = (self.sc, &self.rule);
        let opts = SynthesisOptions { universe_cap: self.opts.max_universe, cycle_max_len: CYCLE_SEARCH_LEN, synthetic_cap: DEFAULT_SYNTHETIC_CAP };
        let outcome = match synthesize_separable(rule, &sc.schema, &sc.scores, &sc.universe, &opts) {
            Ok(o) => o,
            Err(e) => return synthesis_error(audit, &e),
        };
        let fail = |detail: String, w: Option<Value>| result(audit, Verdict::Fail, detail, w);
        match outcome {
            SynthesisOutcome::Rationalized(u) => result(audit, Verdict::Pass, "separable utility found and checked on every menu", Some(self.names.utility(&u))),
            SynthesisOutcome::NotSubstitutable(v) => fail(
                "no separable utility: substitutes fails".into(),
                Some(json!({ "big_menu": self.names.ids(v.big_menu), "removed": self.names.ids(v.removed()), "kept": self.names.ids(v.kept) })),
            ),
            SynthesisOutcome::NotResponsive(v) => fail(
                "no separable utility: within-group responsiveness fails".into(),
                Some(json!({ "menu": self.names.ids(v.menu), "lower": sc.universe[v.lower].id, "higher": sc.universe[v.higher].id })),
            ),
            SynthesisOutcome::Cyclic { relation_size, cycle } => fail(
                format!("no separable utility: the {relation_size} revealed comparisons are cyclic"),
                Some(cycle.map_or_else(|| json!({ "relation_size": relation_size }), |c| self.names.tversky(&c, rule))),
            ),
            SynthesisOutcome::NotMonotone => fail("no separable utility with increasing score utility".into(), Some(json!({ "monotone_u": false }))),
            SynthesisOutcome::Inconsistent(i) => fail("the constructed utility does not reproduce the rule".into(), Some(serde_json::to_value(i).unwrap())),
        }
    }

    fn open_first(&mut self, audit: Audit) -> AuditResult {
        let sc = self.sc;
        let RuleDecl::Reserve { slots, .. } = &sc.rule else {
            return result(audit, Verdict::PreconditionUnmet, "applies to reserve rules only", None);
        };
        match open_first_diagnostic(&sc.schema, &sc.scores, slots, self.rule.tie_break) {
            Err(DiagnosticError::NoOpenBeforeReserve) => result(audit, Verdict::Pass, "no open slot precedes a reserve slot", None),
            Err(DiagnosticError::Synthesis(e)) => synthesis_error(audit, &e),
            Err(e) => result(audit, Verdict::PreconditionUnmet, e.to_string(), None),
            Ok(w) => {
                let reserve = RuleSpec::reserve(slots.clone(), self.rule.tie_break);
                let mut witness = self.names.tversky(&w.cycle, &reserve);
                witness["favored"] = json!(sc.schema.format_identity(&w.favored));
                witness["rival"] = json!(sc.schema.format_identity(&w.rival));
                witness["population"] = json!(self.names.people(&w.population));
                witness["raised"] = json!(self.names.people(&w.raised));
                let detail = format!(
                    "open slot before a reserve for {}: Tversky cycle of {} comparisons",
                    sc.schema.format_identity(&w.favored),
                    w.cycle.rows.len()
                );
                result(audit, Verdict::Fail, detail, Some(witness))
            }
        }
    }

    fn intersectionality(&mut self, audit: Audit) -> AuditResult {
        let Some(pref) = self.sc.preference() else {
            return result(audit, Verdict::PreconditionUnmet, "needs a rule given by an explicit preference", None);
        };
        let sc = self.sc;
        let q = self.rule.capacity;
        match intersectionality_counterexample(&pref, q, &sc.schema) {
            Ok(c) => {
                let ids = |m: Menu| menu_ids(&c.universe, m);
                let v = &c.violation;
                let witness = json!({
                    "universe": self.names.people(&c.universe),
                    "big_menu": ids(v.big_menu),
                    "removed": ids(v.removed()),
                    "kept": ids(v.kept),
                    "chosen_from_big": ids(v.chosen_from_big),
                    "constructive": c.constructive,
                    "replayed": v.replays(&self.rule, &sc.schema, &c.universe).unwrap_or(false),
                });
                let detail = format!("diversity judged by marginals alone breaks substitutes: {{{}}} needs {{{}}}", ids(v.kept).join(", "), ids(v.removed()).join(", "));
                result(audit, Verdict::Fail, detail, Some(witness))
            }
            Err(CounterexampleError::ConsidersIntersectionality(a, b)) => result(
                audit,
                Verdict::PreconditionUnmet,
                "the preference distinguishes profiles with equal marginals",
                Some(json!({ "profiles": [self.names.profile(&a), self.names.profile(&b)] })),
            ),
            Err(CounterexampleError::Rule(e)) => menu_error(audit, &e),
            Err(CounterexampleError::NotFound) => result(audit, Verdict::Pass, "no substitutes violation found", None),
            Err(e) => result(audit, Verdict::PreconditionUnmet, e.to_string(), None),
        }
    }

    fn preference_audit(&mut self, audit: Audit) -> AuditResult {
        let Some(pref) = self.sc.preference() else {
            return result(audit, Verdict::PreconditionUnmet, "needs a rule given by an explicit preference", None);
        };
        let q = self.rule.capacity;
        if audit == Audit::ValuesDiversity {
            let v = values_diversity(&pref, q, &self.sc.schema);
            return match (&v.witness, v.holds) {
                (_, true) => result(audit, Verdict::Pass, "every optimal profile includes each group", Some(json!({ "vacuous": v.vacuous }))),
                (Some(p), false) => {
                    result(audit, Verdict::Fail, format!("optimal profile {} misses a group", self.names.profile(p)), Some(json!({ "profile": self.names.profile(p), "vacuous": v.vacuous })))
                }
                (None, false) => result(audit, Verdict::PreconditionUnmet, format!("the preference ranks no profile of size {q}"), None),
            };
        }
        let m = monotonicity_report(&pref);
        let pair = |p: &Option<(TypeProfile, TypeProfile)>| p.as_ref().map(|(a, b)| json!([self.names.profile(a), self.names.profile(b)]));
        let witness = json!({
            "increasing_violation": pair(&m.increasing_violation),
            "responsive_violation": pair(&m.responsive_violation),
            "notions_agree": m.agree(),
        });
        match &m.increasing_violation {
            None => result(audit, Verdict::Pass, "the preference is increasing in scores", Some(witness)),
            Some((a, b)) => {
                let detail = format!("{} score-dominates {} without being preferred", self.names.profile(a), self.names.profile(b));
                result(audit, Verdict::Fail, detail, Some(witness))
            }
        }
    }
}

fn echo(sc: &Scenario, rule: &RuleSpec) -> ScenarioEcho {
    let source = serialize_scenario(sc);
    let rule_line = source.split("[rule]\n").nth(1).and_then(|r| r.lines().next()).unwrap_or_default().to_string();
    ScenarioEcho {
        name: sc.name.clone(),
        rule: rule_line,
        capacity: rule.capacity,
        tie_break: rule.tie_break,
        menu_family: sc.describe_menus(),
        individuals: sc
            .universe
            .iter()
            .map(|p| NamedIndividual { id: p.id.clone(), identity: sc.schema.format_identity(&p.identity), score: p.score.to_string() })
            .collect(),
        source,
    }
}

/// Runs `audits` in order; every outcome, including rule errors, becomes a verdict.
pub fn run_selected(sc: &Scenario, audits: &[Audit], opts: &RunOptions) -> Report {
    let rule = sc.rule_spec(opts.tie_break);
    let mut run = Run { sc, opts, rule: rule.clone(), names: Names { sc }, family: None, done: Vec::new() };
    for &a in audits {
        let r = run.run(a);
        run.done.push(r);
    }
    let caveat = audits.iter().zip(&run.done).any(|(a, r)| a.is_cycle_audit() && r.verdict == Verdict::Pass).then_some(MENU_FAMILY_CAVEAT);
    Report { schema_version: SCHEMA_VERSION, tool_version: env!("CARGO_PKG_VERSION"), scenario: echo(sc, &rule), verdicts: run.done, caveat }
}

pub fn run_audits(sc: &Scenario, opts: &RunOptions) -> Report {
    run_selected(sc, &sc.audits, opts)
}
