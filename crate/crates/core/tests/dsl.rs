//! Scenario text: round trips on built-ins and generated scenarios, error positions.

use proptest::prelude::*;

use divaudit::scenario::{parse_scenario, serialize_scenario, ErrorKind, RuleDecl, BUILTINS};

#[test]
fn builtins_round_trip() {
    for b in &BUILTINS {
        let s = parse_scenario(b.text).unwrap_or_else(|e| panic!("{}: {e}", b.name));
        let text = serialize_scenario(&s);
        let again = parse_scenario(&text).unwrap();
        assert_eq!(s, again, "{}", b.name);
        assert_eq!(serialize_scenario(&again), text);
    }
}

#[test]
fn example1_declares_the_court_rule() {
    let s = parse_scenario(BUILTINS[0].text).unwrap();
    assert_eq!(s.rule, RuleDecl::SupremeCourt { o: 2, r: 1, ow: 1, rw: 1 });
}

#[test]
fn error_positions() {
    let e = parse_scenario("").unwrap_err();
    assert_eq!((e.line, e.col, e.kind), (1, 1, ErrorKind::Syntax));
    let text = "[dimensions]\ng: a b\n[scores]\n1 2\n[individuals]\nx a 1\ny b 5\n[rule]\ntop-q q=1\n";
    let e = parse_scenario(text).unwrap_err();
    assert_eq!((e.line, e.col, e.kind), (7, 5, ErrorKind::Semantic));
    assert!(e.message.contains('y'));
    let text = "[dimensions]\ng: a b\n[scores]\n1 2\n[individuals]\nx a 1\nx b 2\n[rule]\ntop-q q=1\n";
    assert_eq!(parse_scenario(text).unwrap_err().line, 7);
    let text = "[dimensions]\ncaste: g r\ngender: m w\n[scores]\n1\n[individuals]\nx g/m 1\n[rule]\nsupreme-court o=1 r=1 ow=2 rw=0\n";
    assert_eq!(parse_scenario(text).unwrap_err().kind, ErrorKind::Semantic);
}

const GROUPS: [&str; 4] = ["a", "b", "c", "d"];
const SCORES: [&str; 6] = ["0", "1", "3/2", "2", "5/2", "4"];

#[derive(Debug, Clone)]
struct Draw {
    dims: Vec<usize>,
    scores: Vec<usize>,
    privilege: Vec<Option<usize>>,
    people: Vec<(Vec<usize>, usize)>,
    rule: usize,
    q: usize,
    slots: Vec<usize>,
    refill: bool,
    caps: Vec<Option<usize>>,
    tie: bool,
    menus: usize,
    explicit: Vec<Vec<bool>>,
    audits: Vec<usize>,
    k: Option<usize>,
    values: Vec<i64>,
    name: Option<String>,
}

fn draw() -> impl Strategy<Value = Draw> {
    (
        prop::collection::vec(2usize..=3, 1..=2),
        prop::sample::subsequence((0..SCORES.len()).collect::<Vec<_>>(), 1..=4),
        prop::collection::vec(prop::option::of(0usize..2), 2),
        prop::collection::vec((prop::collection::vec(0usize..3, 2), 0usize..4), 1..=6),
        (0usize..5, 1usize..=3, prop::collection::vec(0usize..4, 1..=3), any::<bool>()),
        (prop::collection::vec(prop::option::of(0usize..3), 9), any::<bool>()),
        (0usize..4, prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..=3)),
        (prop::sample::subsequence((0..12).collect::<Vec<_>>(), 0..=5).prop_shuffle(), prop::option::of(1usize..=3)),
        prop::collection::vec(-20i64..20, 16),
        prop::option::of("[a-z][a-z0-9-]{0,6}"),
    )
        .prop_map(|(dims, scores, privilege, people, (rule, q, slots, refill), (caps, tie), (menus, explicit), (audits, k), values, name)| Draw {
            dims,
            scores,
            privilege,
            people,
            rule,
            q,
            slots,
            refill,
            caps,
            tie,
            menus,
            explicit,
            audits,
            k,
            values,
            name,
        })
}

const AUDITS: [&str; 12] = [
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

/// Renders a valid scenario, with irregular spacing and comments.
fn render(d: &Draw) -> String {
    let mut t = String::from("# generated\n");
    if let Some(n) = &d.name {
        t += &format!("[scenario]\nname:   {n}\n\n");
    }
    t += "[dimensions]\n";
    for (k, g) in d.dims.iter().enumerate() {
        t += &format!("dim{k}: {}\n", GROUPS[..*g].join("  "));
    }
    let scores: Vec<&str> = d.scores.iter().map(|&i| SCORES[i]).collect();
    t += &format!("[scores]\n{}   # ascending\n", scores.join(" "));
    let binary: Vec<(usize, usize)> = d.dims.iter().enumerate().filter(|(_, g)| **g == 2).filter_map(|(k, _)| d.privilege.get(k).copied().flatten().map(|p| (k, p))).collect();
    if !binary.is_empty() {
        t += "[privilege]\n";
        for (k, p) in binary {
            t += &format!("dim{k}: {}\n", GROUPS[p]);
        }
    }
    let identity = |g: &[usize]| -> String { d.dims.iter().enumerate().map(|(k, n)| GROUPS[g[k] % n]).collect::<Vec<_>>().join("/") };
    t += "\n[individuals]\n";
    for (n, (g, s)) in d.people.iter().enumerate() {
        t += &format!("p{n}\t{} {}\n", identity(g), scores[s % scores.len()]);
    }
    let ids: Vec<String> = (0..d.people.len()).map(|n| format!("p{n}")).collect();
    let all_identities: Vec<String> = {
        let mut v = vec![String::new()];
        for n in &d.dims {
            v = v.into_iter().flat_map(|p| GROUPS[..*n].iter().map(move |g| if p.is_empty() { g.to_string() } else { format!("{p}/{g}") })).collect();
        }
        v
    };
    t += "[rule]\n";
    let q = d.q;
    let mut utility = String::new();
    match d.rule {
        0 => t += &format!("top-q q={q}"),
        1 => {
            let slots: Vec<String> = d.slots.iter().map(|&s| if s == 0 { "open".to_string() } else { all_identities[s % all_identities.len()].clone() }).collect();
            t += &format!("reserve slots={} refill={}", slots.join(","), if d.refill { "yes" } else { "no" });
        }
        2 => {
            let caps: Vec<String> = all_identities.iter().zip(&d.caps).filter_map(|(i, c)| c.map(|c| format!("{i}:{c}"))).collect();
            t += &format!("quota q={q}");
            if !caps.is_empty() {
                t += &format!(" caps={}", caps.join(","));
            }
        }
        3 => t += &format!("maximizer q={q} prefer={}", if d.refill { "balanced" } else { "score-sum" }),
        _ => {
            t += &format!("separable q={q}");
            let u: Vec<String> = scores.iter().enumerate().map(|(k, s)| format!("{s}={}", d.values[k])).collect();
            utility += &format!("[utility]\nu {}\n", u.join(" "));
            for (k, id) in all_identities.iter().enumerate().take(2) {
                let v: Vec<String> = (0..q).map(|j| d.values[(4 + k * 3 + j) % 16].to_string()).collect();
                utility += &format!("h {id} {}\n", v.join(" "));
            }
        }
    }
    t += &format!(" tie-break={}\n", if d.tie { "id" } else { "error" });
    t += &utility;
    t += "[menus]\n";
    let n = ids.len();
    match d.menus {
        0 => t += "all\n",
        1 => t += "full\n",
        2 => t += &format!("sizes 1..{n}\n"),
        _ => {
            for m in &d.explicit {
                let mut pick: Vec<&str> = ids.iter().zip(m).filter(|(_, b)| **b).map(|(i, _)| i.as_str()).collect();
                if pick.is_empty() {
                    pick.push(&ids[0]);
                }
                t += &format!("menu {}\n", pick.join(" "));
            }
        }
    }
    if !d.audits.is_empty() {
        t += "[audits]\n";
        for &a in &d.audits {
            t += AUDITS[a];
            if a == 4 {
                if let Some(k) = d.k {
                    t += &format!(" k={k}");
                }
            }
            t += "\n";
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn generated_scenarios_round_trip(d in draw()) {
        let text = render(&d);
        let s = parse_scenario(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let canonical = serialize_scenario(&s);
        let again = parse_scenario(&canonical).map_err(|e| TestCaseError::fail(format!("{e}\n{canonical}")))?;
        prop_assert_eq!(&s, &again);
        prop_assert_eq!(serialize_scenario(&again), canonical);
    }

    #[test]
    fn parser_never_panics(text in "[\\[\\]a-z0-9 :=/.,#\n-]{0,200}") {
        let _ = parse_scenario(&text);
    }
}
