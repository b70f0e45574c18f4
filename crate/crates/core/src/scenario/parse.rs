//! The line-oriented scenario format.
//!
//! ```text
//! [dimensions]
//! caste: g r
//! [scores]
//! 1 2 3
//! [individuals]
//! a1 g 1
//! [rule]
//! reserve slots=open,r refill=yes
//! tie-break=id
//! [audits]
//! substitutes
//! ```
//!
//! `#` starts a comment. Sections may appear in any order, each at most once.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use super::{Audit, MenuDecl, Prefer, RuleDecl, Scenario, UtilityDecl};
use crate::model::{Dimension, DimensionSchema, Identity, Individual, PrivilegeDecl, Score, ScoreSet};
use crate::rules::{Slot, TieBreak};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ErrorKind,
    pub message: String,
    pub expected: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Semantic => "semantic",
        };
        write!(f, "{}:{}: {} error: {}", self.line, self.col, kind, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, " (expected {e})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

const SECTIONS: [&str; 9] = ["scenario", "dimensions", "scores", "privilege", "individuals", "rule", "utility", "menus", "audits"];

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

impl<'a> Tok<'a> {
    fn err(&self, kind: ErrorKind, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, kind, message: message.into(), expected: None }
    }

    fn expected(&self, message: impl Into<String>, expected: impl Into<String>) -> ParseError {
        ParseError { expected: Some(expected.into()), ..self.err(ErrorKind::Syntax, message) }
    }

    fn semantic(&self, message: impl Into<String>) -> ParseError {
        self.err(ErrorKind::Semantic, message)
    }

    /// Splits `key=value`; the value token keeps its own column.
    fn key_value(&self) -> Option<(&'a str, Tok<'a>)> {
        let eq = self.text.find('=')?;
        let value = Tok { line: self.line, col: self.col + self.text[..eq].chars().count() + 1, text: &self.text[eq + 1..] };
        Some((&self.text[..eq], value))
    }

    fn usize(&self) -> Result<usize, ParseError> {
        self.text.parse().map_err(|_| self.expected(format!("`{}` is not a count", self.text), "a nonnegative integer"))
    }

    fn score(&self) -> Result<Score, ParseError> {
        self.text.parse().map_err(|_| self.expected(format!("`{}` is not a score", self.text), "an integer, fraction or decimal"))
    }
}

struct Line<'a> {
    toks: Vec<Tok<'a>>,
}

fn tokenize(no: usize, raw: &str) -> Line<'_> {
    let text = raw.split('#').next().unwrap_or("");
    let mut toks = Vec::new();
    let mut start: Option<usize> = None;
    let mut col = 0;
    let mut start_col = 0;
    for (i, c) in text.char_indices() {
        col += 1;
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { line: no, col: start_col, text: &text[s..i] });
            }
        } else if start.is_none() {
            start = Some(i);
            start_col = col;
        }
    }
    if let Some(s) = start {
        toks.push(Tok { line: no, col: start_col, text: &text[s..] });
    }
    Line { toks }
}

struct Section<'a> {
    header: Tok<'a>,
    lines: Vec<Line<'a>>,
}

/// Lines with a leading `name:` token split off, as in `caste: g r`.
fn labeled<'a>(line: &Line<'a>, what: &str) -> Result<(Tok<'a>, Vec<Tok<'a>>), ParseError> {
    let first = line.toks[0];
    let mut rest = line.toks[1..].to_vec();
    let label = if let Some(name) = first.text.strip_suffix(':') {
        Tok { text: name, ..first }
    } else if let Some((name, after)) = first.text.split_once(':') {
        let col = first.col + name.chars().count() + 1;
        rest.insert(0, Tok { line: first.line, col, text: after });
        Tok { text: name, ..first }
    } else if rest.first().is_some_and(|t| t.text == ":") {
        rest.remove(0);
        first
    } else {
        return Err(first.expected(format!("missing `:` after `{}`", first.text), what.to_string()));
    };
    rest.retain(|t| !t.text.is_empty());
    if label.text.is_empty() {
        return Err(first.expected("empty name", what.to_string()));
    }
    Ok((label, rest))
}

fn valid_name(t: &Tok) -> Result<(), ParseError> {
    if t.text.contains(['/', ',', ':', '=', '[', ']']) {
        return Err(t.semantic(format!("name `{}` may not contain `/ , : = [ ]`", t.text)));
    }
    Ok(())
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut sections: BTreeMap<&str, Section> = BTreeMap::new();
    let mut current: Option<&str> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = tokenize(i + 1, raw);
        last_line = i + 1;
        let Some(&first) = line.toks.first() else { continue };
        if first.text.starts_with('[') {
            let header = line.toks.iter().map(|t| t.text).collect::<String>();
            let name = header.strip_prefix('[').and_then(|h| h.strip_suffix(']'));
            let Some(name) = name.filter(|n| SECTIONS.contains(n)) else {
                return Err(first.expected(format!("unknown section `{header}`"), format!("one of {}", SECTIONS.map(|s| format!("[{s}]")).join(", "))));
            };
            if sections.contains_key(name) {
                return Err(first.expected(format!("section [{name}] appears twice"), "each section at most once"));
            }
            let name = SECTIONS.iter().find(|s| **s == name).unwrap();
            sections.insert(name, Section { header: first, lines: Vec::new() });
            current = Some(name);
            continue;
        }
        let Some(name) = current else {
            return Err(first.expected(format!("`{}` outside any section", first.text), "a section header such as [dimensions]"));
        };
        sections.get_mut(name).unwrap().lines.push(line);
    }
    let end = Tok { line: last_line + 1, col: 1, text: "" };
    if sections.is_empty() {
        let at = Tok { line: 1, col: 1, text: "" };
        return Err(at.expected("empty scenario", "a section header such as [dimensions]"));
    }
    let require = |name: &str| -> Result<&Section, ParseError> {
        sections.get(name).ok_or_else(|| end.expected(format!("missing section [{name}]"), format!("[{name}]")))
    };

    let name = match sections.get("scenario") {
        None => None,
        Some(sec) => {
            let mut name = None;
            for line in &sec.lines {
                let (key, rest) = labeled(line, "`name: <name>`")?;
                if key.text != "name" {
                    return Err(key.expected(format!("unknown key `{}`", key.text), "`name`"));
                }
                let [v] = rest[..] else {
                    return Err(key.expected("the name must be one token", "`name: <name>`"));
                };
                name = Some(v.text.to_string());
            }
            name
        }
    };

    let dims_sec = require("dimensions")?;
    let mut dims = Vec::new();
    for line in &dims_sec.lines {
        let (label, groups) = labeled(line, "`dimension: group group ...`")?;
        valid_name(&label)?;
        for g in &groups {
            valid_name(g)?;
        }
        dims.push(Dimension { name: label.text.to_string(), groups: groups.iter().map(|g| g.text.to_string()).collect() });
    }
    let schema = DimensionSchema::new(dims).map_err(|e| dims_sec.lines.first().map(|l| l.toks[0]).unwrap_or(dims_sec.header).semantic(e.to_string()))?;

    let scores_sec = require("scores")?;
    let mut values = Vec::new();
    for t in scores_sec.lines.iter().flat_map(|l| &l.toks) {
        values.push((t.score()?, *t));
    }
    values.sort_by_key(|(s, _)| *s);
    if let Some(w) = values.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(w[1].1.semantic(format!("score {} is listed twice", w[1].0)));
    }
    let scores = ScoreSet::new(values.iter().map(|(s, _)| *s).collect()).map_err(|e| scores_sec.header.semantic(e.to_string()))?;

    let privilege = match sections.get("privilege") {
        None => None,
        Some(sec) => {
            let mut privileged = vec![None; schema.len()];
            for line in &sec.lines {
                let (dim, rest) = labeled(line, "`dimension: group`")?;
                let d = schema.dim_index(dim.text).ok_or_else(|| dim.semantic(format!("unknown dimension `{}`", dim.text)))?;
                let [g] = rest[..] else {
                    return Err(dim.expected("one privileged group per dimension", "`dimension: group`"));
                };
                privileged[d] = Some(schema.group_index(d, g.text).ok_or_else(|| g.semantic(format!("unknown group `{}` in dimension `{}`", g.text, dim.text)))?);
            }
            Some(PrivilegeDecl::new(&schema, privileged).map_err(|e| sec.header.semantic(e.to_string()))?)
        }
    };

    let ind_sec = require("individuals")?;
    let mut universe: Vec<Individual> = Vec::new();
    let mut ids = HashSet::new();
    for line in &ind_sec.lines {
        let [id, identity, score] = line.toks[..] else {
            return Err(line.toks[0].expected("malformed individual", "`id identity score`"));
        };
        valid_name(&id)?;
        if !ids.insert(id.text) {
            return Err(id.semantic(format!("duplicate individual `{}`", id.text)));
        }
        let ident = schema.parse_identity(identity.text).map_err(|_| identity.semantic(format!("identity `{}` of `{}` names an unknown group", identity.text, id.text)))?;
        let s = score.score()?;
        if !scores.contains(s) {
            return Err(score.semantic(format!("score {} of individual `{}` is not in the score set", s, id.text)));
        }
        universe.push(Individual::new(id.text, ident, s));
    }
    if universe.len() > 30 {
        return Err(ind_sec.lines[30].toks[0].semantic("at most 30 individuals are supported"));
    }

    let rule_sec = require("rule")?;
    let (rule, tie_break, kind_tok) = parse_rule(rule_sec, &schema)?;

    let utility = match sections.get("utility") {
        None => None,
        Some(sec) => Some(parse_utility(sec, &schema, &scores, rule.capacity())?),
    };
    match (&rule, &utility) {
        (RuleDecl::Separable { .. }, None) => return Err(kind_tok.semantic("rule `separable` needs a [utility] section")),
        (RuleDecl::Separable { .. }, Some(u)) => {
            if let Some(s) = scores.values().iter().find(|s| !u.u.iter().any(|(t, _)| t == *s)) {
                return Err(sections["utility"].header.semantic(format!("no utility for score {s}")));
            }
        }
        (_, Some(_)) => return Err(sections["utility"].header.semantic("a [utility] section requires rule `separable`")),
        _ => {}
    }

    let menus = match sections.get("menus") {
        None => MenuDecl::All,
        Some(sec) => parse_menus(sec, &universe)?,
    };

    let audits = match sections.get("audits") {
        None => Audit::all(),
        Some(sec) => {
            let mut out = Vec::new();
            for line in &sec.lines {
                let head = line.toks[0];
                let audit = Audit::from_name(head.text).ok_or_else(|| head.expected(format!("unknown audit `{}`", head.text), Audit::NAMES.join(", ")))?;
                let audit = match (audit, &line.toks[1..]) {
                    (a, []) => a,
                    (Audit::GrossSubstitutes(_), [p]) => match p.key_value() {
                        Some(("k", v)) => Audit::GrossSubstitutes(Some(v.usize()?)),
                        _ => return Err(p.expected(format!("unknown parameter `{}`", p.text), "`k=<count>`")),
                    },
                    (a, [p, ..]) => return Err(p.semantic(format!("audit `{}` takes no parameters", a.name()))),
                };
                out.push(audit);
            }
            out
        }
    };

    let scenario = Scenario { name, schema, scores, privilege, universe, rule, tie_break, utility, menus, audits };
    scenario.rule_spec(None).validate(&scenario.schema).map_err(|e| kind_tok.semantic(e.to_string()))?;
    Ok(scenario)
}

fn parse_rule<'a>(sec: &Section<'a>, schema: &DimensionSchema) -> Result<(RuleDecl, TieBreak, Tok<'a>), ParseError> {
    let toks: Vec<Tok> = sec.lines.iter().flat_map(|l| l.toks.iter().copied()).collect();
    let Some(&kind) = toks.first() else {
        return Err(Tok { line: sec.header.line + 1, col: 1, text: "" }.expected("empty rule", "a rule kind"));
    };
    let kinds = "top-q, supreme-court, reserve, quota, maximizer, separable";
    let allowed: &[&str] = match kind.text {
        "top-q" | "separable" => &["q"],
        "supreme-court" => &["o", "r", "ow", "rw"],
        "reserve" => &["slots", "refill"],
        "quota" => &["q", "caps"],
        "maximizer" => &["q", "prefer"],
        _ => return Err(kind.expected(format!("unknown rule `{}`", kind.text), kinds)),
    };
    let mut params: BTreeMap<&str, Tok> = BTreeMap::new();
    let mut tie = TieBreak::Error;
    for t in &toks[1..] {
        let Some((key, value)) = t.key_value() else {
            return Err(t.expected(format!("`{}` is not a parameter", t.text), "`key=value`"));
        };
        if key == "tie-break" {
            tie = match value.text {
                "error" => TieBreak::Error,
                "id" => TieBreak::ById,
                _ => return Err(value.expected(format!("unknown tie-break `{}`", value.text), "`error` or `id`")),
            };
            continue;
        }
        if !allowed.contains(&key) {
            return Err(t.semantic(format!("rule `{}` has no parameter `{key}`; it takes {}", kind.text, allowed.join(", "))));
        }
        if params.insert(key, value).is_some() {
            return Err(t.semantic(format!("parameter `{key}` given twice")));
        }
    }
    let get = |k: &str| params.get(k).copied().ok_or_else(|| kind.semantic(format!("rule `{}` needs `{k}=`", kind.text)));
    let count = |k: &str| get(k)?.usize();
    let identity = |t: Tok, text: &str| schema.parse_identity(text).map_err(|_| t.semantic(format!("unknown identity `{text}`")));
    let rule = match kind.text {
        "top-q" => RuleDecl::TopQ { q: count("q")? },
        "separable" => RuleDecl::Separable { q: count("q")? },
        "supreme-court" => RuleDecl::SupremeCourt { o: count("o")?, r: count("r")?, ow: count("ow")?, rw: count("rw")? },
        "reserve" => {
            let v = get("slots")?;
            let mut slots = Vec::new();
            for part in v.text.split(',') {
                slots.push(if part == "open" { Slot::Open } else { Slot::Reserve(identity(v, part)?) });
            }
            let refill = match params.get("refill").map(|t| (t, t.text)) {
                None | Some((_, "yes")) => true,
                Some((_, "no")) => false,
                Some((t, other)) => return Err(t.expected(format!("`{other}` is not yes or no"), "`yes` or `no`")),
            };
            RuleDecl::Reserve { slots, refill }
        }
        "quota" => {
            let mut caps = Vec::new();
            if let Some(v) = params.get("caps") {
                for part in v.text.split(',').filter(|p| !p.is_empty()) {
                    let Some((id, n)) = part.rsplit_once(':') else {
                        return Err(v.expected(format!("malformed cap `{part}`"), "`identity:count`"));
                    };
                    let n = Tok { text: n, ..*v }.usize()?;
                    let id = identity(*v, id)?;
                    if caps.iter().any(|(c, _)| *c == id) {
                        return Err(v.semantic(format!("identity `{}` capped twice", schema.format_identity(&id))));
                    }
                    caps.push((id, n));
                }
            }
            RuleDecl::Quota { q: count("q")?, caps }
        }
        "maximizer" => {
            let p = get("prefer")?;
            let prefer = match p.text {
                "balanced" => Prefer::Balanced,
                "score-sum" => Prefer::ScoreSum,
                other => return Err(p.expected(format!("unknown preference `{other}`"), "`balanced` or `score-sum`")),
            };
            RuleDecl::Maximizer { q: count("q")?, prefer }
        }
        _ => unreachable!(),
    };
    if rule.capacity() == 0 {
        return Err(kind.semantic("capacity must be positive"));
    }
    Ok((rule, tie, kind))
}

fn parse_utility(sec: &Section, schema: &DimensionSchema, scores: &ScoreSet, q: usize) -> Result<UtilityDecl, ParseError> {
    let mut decl = UtilityDecl::default();
    for line in &sec.lines {
        let head = line.toks[0];
        match head.text {
            "u" => {
                for t in &line.toks[1..] {
                    let Some((s, v)) = t.key_value() else {
                        return Err(t.expected(format!("`{}` is not a score utility", t.text), "`score=value`"));
                    };
                    let s = Tok { text: s, ..*t }.score()?;
                    if !scores.contains(s) {
                        return Err(t.semantic(format!("score {s} is not in the score set")));
                    }
                    if decl.u.iter().any(|(x, _)| *x == s) {
                        return Err(t.semantic(format!("utility of score {s} given twice")));
                    }
                    decl.u.push((s, v.score()?));
                }
            }
            "h" => {
                let Some(id_tok) = line.toks.get(1) else {
                    return Err(head.expected("missing identity", "`h identity v1 .. vq`"));
                };
                let id = schema.parse_identity(id_tok.text).map_err(|_| id_tok.semantic(format!("unknown identity `{}`", id_tok.text)))?;
                if decl.h.iter().any(|(x, _)| *x == id) {
                    return Err(id_tok.semantic(format!("terms of `{}` given twice", id_tok.text)));
                }
                let vals = line.toks[2..].iter().map(|t| t.score()).collect::<Result<Vec<_>, _>>()?;
                if vals.len() != q {
                    return Err(id_tok.semantic(format!("{} needs {q} increments, found {}", id_tok.text, vals.len())));
                }
                decl.h.push((id, vals));
            }
            other => return Err(head.expected(format!("unknown utility line `{other}`"), "`u ...` or `h ...`")),
        }
    }
    decl.u.sort();
    decl.h.sort();
    Ok(decl)
}

fn parse_menus(sec: &Section, universe: &[Individual]) -> Result<MenuDecl, ParseError> {
    let mut explicit = Vec::new();
    for (k, line) in sec.lines.iter().enumerate() {
        let head = line.toks[0];
        let single = |decl: MenuDecl| {
            if sec.lines.len() > 1 || k > 0 {
                return Err(head.expected(format!("`{}` must be the only menu line", head.text), "a single family line or `menu` lines"));
            }
            Ok(decl)
        };
        match head.text {
            "all" if line.toks.len() == 1 => return single(MenuDecl::All),
            "full" if line.toks.len() == 1 => return single(MenuDecl::Full),
            "sizes" => {
                let [_, range] = line.toks[..] else {
                    return Err(head.expected("malformed size range", "`sizes <min>..<max>`"));
                };
                let Some((lo, hi)) = range.text.split_once("..") else {
                    return Err(range.expected("malformed size range", "`<min>..<max>`"));
                };
                let (min, max) = (Tok { text: lo, ..range }.usize()?, Tok { text: hi, ..range }.usize()?);
                if min == 0 || min > max {
                    return Err(range.semantic("sizes need 1 <= min <= max"));
                }
                return single(MenuDecl::Sizes { min, max });
            }
            "menu" => {
                let mut ids = Vec::new();
                for t in &line.toks[1..] {
                    if !universe.iter().any(|p| p.id == t.text) {
                        return Err(t.semantic(format!("unknown individual `{}`", t.text)));
                    }
                    if ids.contains(&t.text.to_string()) {
                        return Err(t.semantic(format!("`{}` listed twice in one menu", t.text)));
                    }
                    ids.push(t.text.to_string());
                }
                if ids.is_empty() {
                    return Err(head.semantic("empty menu"));
                }
                explicit.push(ids);
            }
            other => return Err(head.expected(format!("unknown menu line `{other}`"), "`all`, `full`, `sizes a..b` or `menu id ...`")),
        }
    }
    if explicit.is_empty() {
        return Ok(MenuDecl::All);
    }
    Ok(MenuDecl::Explicit(explicit))
}

/// Canonical text; `parse_scenario` of the result gives back an equal scenario.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let schema = &s.schema;
    let id = |i: &Identity| schema.format_identity(i);
    if let Some(name) = &s.name {
        let _ = writeln!(out, "[scenario]\nname: {name}\n");
    }
    out.push_str("[dimensions]\n");
    for d in schema.dims() {
        let _ = writeln!(out, "{}: {}", d.name, d.groups.join(" "));
    }
    let scores: Vec<String> = s.scores.values().iter().map(Score::to_string).collect();
    let _ = writeln!(out, "\n[scores]\n{}\n", scores.join(" "));
    if let Some(p) = &s.privilege {
        out.push_str("[privilege]\n");
        for (d, g) in p.privileged().iter().enumerate() {
            if let Some(g) = g {
                let dim = &schema.dims()[d];
                let _ = writeln!(out, "{}: {}", dim.name, dim.groups[*g as usize]);
            }
        }
        out.push('\n');
    }
    out.push_str("[individuals]\n");
    for p in &s.universe {
        let _ = writeln!(out, "{} {} {}", p.id, id(&p.identity), p.score);
    }
    out.push_str("\n[rule]\n");
    let rule = match &s.rule {
        RuleDecl::TopQ { q } => format!("top-q q={q}"),
        RuleDecl::Separable { q } => format!("separable q={q}"),
        RuleDecl::SupremeCourt { o, r, ow, rw } => format!("supreme-court o={o} r={r} ow={ow} rw={rw}"),
        RuleDecl::Reserve { slots, refill } => {
            let slots: Vec<String> = slots
                .iter()
                .map(|sl| match sl {
                    Slot::Open => "open".to_string(),
                    Slot::Reserve(i) => id(i),
                })
                .collect();
            format!("reserve slots={} refill={}", slots.join(","), if *refill { "yes" } else { "no" })
        }
        RuleDecl::Quota { q, caps } => {
            let caps: Vec<String> = caps.iter().map(|(i, n)| format!("{}:{n}", id(i))).collect();
            if caps.is_empty() {
                format!("quota q={q}")
            } else {
                format!("quota q={q} caps={}", caps.join(","))
            }
        }
        RuleDecl::Maximizer { q, prefer } => format!("maximizer q={q} prefer={}", prefer.name()),
    };
    let tie = match s.tie_break {
        TieBreak::Error => "error",
        TieBreak::ById => "id",
    };
    let _ = writeln!(out, "{rule}\ntie-break={tie}\n");
    if let Some(u) = &s.utility {
        out.push_str("[utility]\n");
        let us: Vec<String> = u.u.iter().map(|(sc, v)| format!("{sc}={v}")).collect();
        let _ = writeln!(out, "u {}", us.join(" "));
        for (i, v) in &u.h {
            let vs: Vec<String> = v.iter().map(Score::to_string).collect();
            let _ = writeln!(out, "h {} {}", id(i), vs.join(" "));
        }
        out.push('\n');
    }
    out.push_str("[menus]\n");
    match &s.menus {
        MenuDecl::All => out.push_str("all\n"),
        MenuDecl::Full => out.push_str("full\n"),
        MenuDecl::Sizes { min, max } => {
            let _ = writeln!(out, "sizes {min}..{max}");
        }
        MenuDecl::Explicit(menus) => {
            for m in menus {
                let _ = writeln!(out, "menu {}", m.join(" "));
            }
        }
    }
    out.push_str("\n[audits]\n");
    for a in &s.audits {
        let _ = writeln!(out, "{a}");
    }
    out
}
