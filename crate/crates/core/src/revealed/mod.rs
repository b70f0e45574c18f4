//! Revealed-preference graphs over type profiles and congruence-cycle search.

mod prefs;

pub use prefs::{monotonicity_report, preference_is_increasing, preference_is_wg_responsive, MonotonicityReport};

use std::collections::{HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use thiserror::Error;

use crate::menus::{choose, enumerate_menus, ChoiceTable, Menu, MenuError, MenuFamilyConfig};
use crate::model::{privilege_dominates, score_dominates, DimensionSchema, Individual, PrivilegeDecl, TypeProfile};
use crate::rules::RuleSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLabel {
    WeakChoice,
    StrictChoice,
    ScoreDom,
    PrivilegeDom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
    /// Generating menu for choice edges.
    pub menu: Option<Menu>,
}

#[derive(Debug, Clone, Default)]
pub struct Relations {
    pub score: bool,
    pub privilege: Option<PrivilegeDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RevealedError {
    #[error("privilege relation was not declared")]
    PrivilegeUndeclared,
    #[error("score relation was not enabled when the graph was built")]
    ScoreDisabled,
}

#[derive(Debug, Clone)]
pub struct RevealedGraph {
    pub universe: Vec<Individual>,
    pub capacity: usize,
    pub nodes: Vec<TypeProfile>,
    pub edges: Vec<Edge>,
    pub score_enabled: bool,
    pub privilege: Option<PrivilegeDecl>,
    index: HashMap<TypeProfile, usize>,
}

impl RevealedGraph {
    pub fn node(&self, p: &TypeProfile) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn has_edge(&self, from: &TypeProfile, to: &TypeProfile, label: EdgeLabel) -> bool {
        match (self.node(from), self.node(to)) {
            (Some(a), Some(b)) => self.edges.iter().any(|e| e.from == a && e.to == b && e.label == label),
            _ => false,
        }
    }

    pub fn edges_labeled(&self, label: EdgeLabel) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.label == label)
    }

    /// Builds the graph from already computed choices.
    pub fn from_table(table: &ChoiceTable, capacity: usize, relations: Relations) -> Self {
        let mut nodes: Vec<TypeProfile> = Vec::new();
        let mut index: HashMap<TypeProfile, usize> = HashMap::new();
        let mut intern = |p: &TypeProfile, nodes: &mut Vec<TypeProfile>| -> usize {
            if let Some(&i) = index.get(p) {
                return i;
            }
            nodes.push(p.clone());
            index.insert(p.clone(), nodes.len() - 1);
            nodes.len() - 1
        };
        let mut choice: Vec<Edge> = Vec::new();
        let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
        for entry in &table.entries {
            let subs: Vec<TypeProfile> = entry
                .profile
                .sub_profiles_up_to(capacity)
                .into_iter()
                .filter(|p| !p.is_empty())
                .collect();
            for (chosen, _) in &entry.chosen {
                let from = intern(chosen, &mut nodes);
                for sub in &subs {
                    if sub == chosen {
                        continue;
                    }
                    let to = intern(sub, &mut nodes);
                    let label = if entry.is_chosen(sub) { EdgeLabel::WeakChoice } else { EdgeLabel::StrictChoice };
                    match slot.get(&(from, to)) {
                        None => {
                            slot.insert((from, to), choice.len());
                            choice.push(Edge { from, to, label, menu: Some(entry.menu) });
                        }
                        Some(&k) => {
                            if choice[k].label == EdgeLabel::WeakChoice && label == EdgeLabel::StrictChoice {
                                choice[k].label = label;
                                choice[k].menu = Some(entry.menu);
                            }
                        }
                    }
                }
            }
        }
        let mut edges = choice;
        if relations.score {
            for a in 0..nodes.len() {
                for b in 0..nodes.len() {
                    if score_dominates(&nodes[a], &nodes[b]) {
                        edges.push(Edge { from: a, to: b, label: EdgeLabel::ScoreDom, menu: None });
                    }
                }
            }
        }
        if let Some(decl) = &relations.privilege {
            for a in 0..nodes.len() {
                for b in 0..nodes.len() {
                    if privilege_dominates(&nodes[a], &nodes[b], decl) {
                        edges.push(Edge { from: a, to: b, label: EdgeLabel::PrivilegeDom, menu: None });
                    }
                }
            }
        }
        RevealedGraph {
            universe: table.universe.clone(),
            capacity,
            nodes,
            edges,
            score_enabled: relations.score,
            privilege: relations.privilege,
            index,
        }
    }
}

pub fn build_revealed_graph(
    rule: &RuleSpec,
    schema: &DimensionSchema,
    config: &MenuFamilyConfig,
    relations: Relations,
) -> Result<RevealedGraph, MenuError> {
    let menus = enumerate_menus(config)?;
    let table = ChoiceTable::build(rule, schema, &config.universe, &menus)?;
    Ok(RevealedGraph::from_table(&table, rule.capacity, relations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleKind {
    Choice,
    ScoreChoice,
    ScoreChoicePrivilege,
}

impl CycleKind {
    fn traversable(self, label: EdgeLabel) -> bool {
        match label {
            EdgeLabel::WeakChoice | EdgeLabel::StrictChoice => true,
            EdgeLabel::ScoreDom => self != CycleKind::Choice,
            EdgeLabel::PrivilegeDom => self == CycleKind::ScoreChoicePrivilege,
        }
    }

    fn closing(self, label: EdgeLabel) -> bool {
        label != EdgeLabel::WeakChoice && self.traversable(label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleStep {
    pub from: TypeProfile,
    pub to: TypeProfile,
    pub label: EdgeLabel,
    pub menu: Option<Menu>,
}

/// Profiles `I_1 .. I_n`; step `k` justifies `I_k -> I_{k+1}` and the last
/// step is the closing relation `I_n -> I_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleWitness {
    pub kind: CycleKind,
    pub profiles: Vec<TypeProfile>,
    pub steps: Vec<CycleStep>,
}

impl CycleWitness {
    pub fn closing_step(&self) -> &CycleStep {
        self.steps.last().expect("cycles have at least one step")
    }
}

pub fn find_choice_cycle(g: &RevealedGraph) -> Option<CycleWitness> {
    find_cycle(g, CycleKind::Choice)
}

pub fn find_score_choice_cycle(g: &RevealedGraph) -> Result<Option<CycleWitness>, RevealedError> {
    if !g.score_enabled {
        return Err(RevealedError::ScoreDisabled);
    }
    Ok(find_cycle(g, CycleKind::ScoreChoice))
}

pub fn find_scp_cycle(g: &RevealedGraph) -> Result<Option<CycleWitness>, RevealedError> {
    if g.privilege.is_none() {
        return Err(RevealedError::PrivilegeUndeclared);
    }
    Ok(find_cycle(g, CycleKind::ScoreChoicePrivilege))
}

/// True iff some strongly connected component contains a closing edge.
pub fn has_cycle(g: &RevealedGraph, kind: CycleKind) -> bool {
    let comp = components(g, kind);
    g.edges.iter().any(|e| kind.closing(e.label) && comp[e.from] == comp[e.to])
}

fn components(g: &RevealedGraph, kind: CycleKind) -> Vec<usize> {
    let mut dg: DiGraph<(), ()> = DiGraph::with_capacity(g.nodes.len(), g.edges.len());
    for _ in &g.nodes {
        dg.add_node(());
    }
    for e in g.edges.iter().filter(|e| kind.traversable(e.label)) {
        dg.add_edge(NodeIndex::new(e.from), NodeIndex::new(e.to), ());
    }
    let mut comp = vec![0; g.nodes.len()];
    for (c, scc) in tarjan_scc(&dg).into_iter().enumerate() {
        for n in scc {
            comp[n.index()] = c;
        }
    }
    comp
}

/// Shortest cycle through a closing edge inside its component.
///
/// Score-choice and SCP searches first look for cycles that use their own
/// dominance relation and fall back to plain choice cycles. Ties go to the
/// edge that comes first in graph order. The witness is rotated so that its
/// last step is a strict-choice step when it has one.
pub fn find_cycle(g: &RevealedGraph, kind: CycleKind) -> Option<CycleWitness> {
    let comp = components(g, kind);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for (k, e) in g.edges.iter().enumerate() {
        if kind.traversable(e.label) && comp[e.from] == comp[e.to] {
            adj[e.from].push(k);
        }
    }
    let signature = match kind {
        CycleKind::Choice => None,
        CycleKind::ScoreChoice => Some(EdgeLabel::ScoreDom),
        CycleKind::ScoreChoicePrivilege => Some(EdgeLabel::PrivilegeDom),
    };
    let mut paths: HashMap<usize, Vec<Option<usize>>> = HashMap::new();
    let mut search = |accept: &dyn Fn(EdgeLabel) -> bool| {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for (k, e) in g.edges.iter().enumerate() {
            if !accept(e.label) || comp[e.from] != comp[e.to] {
                continue;
            }
            let parents = paths.entry(e.to).or_insert_with(|| bfs(g, &adj, e.to));
            let Some(mut path) = trace(g, parents, e.to, e.from) else { continue };
            path.push(k);
            if best.as_ref().map_or(true, |(l, _)| path.len() < *l) {
                best = Some((path.len(), path));
            }
        }
        best.map(|b| b.1)
    };
    let found = match signature {
        Some(label) => search(&|l| l == label).or_else(|| search(&|l| kind.closing(l))),
        None => search(&|l| kind.closing(l)),
    };
    let mut cycle = found?;
    if let Some(last_strict) = cycle.iter().rposition(|&k| g.edges[k].label == EdgeLabel::StrictChoice) {
        cycle.rotate_left(last_strict + 1);
    }
    let steps: Vec<CycleStep> = cycle.iter().map(|&k| step(g, &g.edges[k])).collect();
    let profiles: Vec<TypeProfile> = steps.iter().map(|s| s.from.clone()).collect();
    Some(CycleWitness { kind, profiles, steps })
}

fn step(g: &RevealedGraph, e: &Edge) -> CycleStep {
    CycleStep { from: g.nodes[e.from].clone(), to: g.nodes[e.to].clone(), label: e.label, menu: e.menu }
}

fn bfs(g: &RevealedGraph, adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut parent: Vec<Option<usize>> = vec![None; g.nodes.len()];
    let mut seen = vec![false; g.nodes.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &k in &adj[n] {
            let t = g.edges[k].to;
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some(k);
                queue.push_back(t);
            }
        }
    }
    parent
}

fn trace(g: &RevealedGraph, parent: &[Option<usize>], start: usize, target: usize) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut n = target;
    while n != start {
        let k = parent[n]?;
        path.push(k);
        n = g.edges[k].from;
    }
    path.reverse();
    Some(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Menu(#[from] MenuError),
    #[error("step {step} does not hold: {reason}")]
    Broken { step: usize, reason: String },
}

/// Re-executes the rule on every recorded menu and rechecks every dominance step.
pub fn replay_cycle(
    w: &CycleWitness,
    rule: &RuleSpec,
    schema: &DimensionSchema,
    universe: &[Individual],
    privilege: Option<&PrivilegeDecl>,
) -> Result<(), ReplayError> {
    let broken = |step: usize, reason: &str| Err(ReplayError::Broken { step, reason: reason.to_string() });
    let n = w.steps.len();
    for (k, s) in w.steps.iter().enumerate() {
        if s.from != w.profiles[k] || s.to != w.profiles[(k + 1) % n] {
            return broken(k, "sequence does not chain");
        }
        match s.label {
            EdgeLabel::WeakChoice | EdgeLabel::StrictChoice => {
                let Some(menu) = s.menu else { return broken(k, "choice step without menu") };
                let c = choose(rule, schema, universe, menu)?;
                if !c.is_chosen(&s.from) {
                    return broken(k, "source profile is not chosen from the menu");
                }
                if !c.profile.contains(&s.to) {
                    return broken(k, "target profile is not available in the menu");
                }
                if s.label == EdgeLabel::StrictChoice && c.is_chosen(&s.to) {
                    return broken(k, "target profile is also chosen");
                }
            }
            EdgeLabel::ScoreDom => {
                if !score_dominates(&s.from, &s.to) {
                    return broken(k, "score dominance fails");
                }
            }
            EdgeLabel::PrivilegeDom => {
                let Some(decl) = privilege else { return broken(k, "privilege undeclared") };
                if !privilege_dominates(&s.from, &s.to, decl) {
                    return broken(k, "privilege dominance fails");
                }
            }
        }
    }
    if n == 0 || w.closing_step().label == EdgeLabel::WeakChoice {
        return broken(n.saturating_sub(1), "closing step must be strict");
    }
    Ok(())
}
