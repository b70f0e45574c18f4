//! Greedy score-order rules (reserve slots and the Supreme Court rule) run
//! through a tie-aware chooser.
//!
//! A greedy pass repeatedly asks for the highest-scoring eligible individual.
//! When several individuals of different types share the top score the pass
//! consults a [`Chooser`]. Under [`TieBreak::ById`] the lowest id wins. Under
//! [`TieBreak::Error`] every resolution is replayed and the tie is reported
//! only if the resolutions disagree on the chosen profile.

use super::{ChoiceResult, RuleError, Slot, TieBreak};
use crate::model::{Identity, Individual, TypeProfile};

const MAX_TIE_REPLAYS: usize = 4096;

pub(crate) trait Chooser {
    /// `cands` indexes the menu; all share one score and have distinct types.
    fn pick(&mut self, menu: &[&Individual], cands: &[usize]) -> usize;
}

struct ByIdChooser;

impl Chooser for ByIdChooser {
    fn pick(&mut self, menu: &[&Individual], cands: &[usize]) -> usize {
        *cands.iter().min_by(|&&a, &&b| menu[a].id.cmp(&menu[b].id)).unwrap()
    }
}

struct ScriptChooser {
    script: Vec<usize>,
    pos: usize,
    widths: Vec<usize>,
    first_tie: Option<Vec<usize>>,
}

impl Chooser for ScriptChooser {
    fn pick(&mut self, _menu: &[&Individual], cands: &[usize]) -> usize {
        let k = if self.pos < self.script.len() { self.script[self.pos] } else { 0 };
        self.widths.push(cands.len());
        if self.first_tie.is_none() {
            self.first_tie = Some(cands.to_vec());
        }
        self.pos += 1;
        cands[k]
    }
}

/// Shared state of one greedy pass.
pub(crate) struct Pass<'a, 'm> {
    pub menu: &'m [&'m Individual],
    pub taken: Vec<bool>,
    pub order: Vec<usize>,
    chooser: &'a mut dyn Chooser,
}

impl<'a, 'm> Pass<'a, 'm> {
    fn new(menu: &'m [&'m Individual], chooser: &'a mut dyn Chooser) -> Self {
        Pass { menu, taken: vec![false; menu.len()], order: Vec::new(), chooser }
    }

    /// Highest-scoring untaken individual passing `eligible`, without taking it.
    pub fn top(&mut self, eligible: impl Fn(&Individual) -> bool) -> Option<usize> {
        let menu = self.menu;
        let best = (0..menu.len())
            .filter(|&i| !self.taken[i] && eligible(menu[i]))
            .map(|i| menu[i].score)
            .max()?;
        // one representative per type: lowest id
        let mut cands: Vec<usize> = Vec::new();
        for i in 0..menu.len() {
            if self.taken[i] || menu[i].score != best || !eligible(menu[i]) {
                continue;
            }
            match cands.iter_mut().find(|c| menu[**c].identity == menu[i].identity) {
                Some(c) => {
                    if menu[i].id < menu[*c].id {
                        *c = i;
                    }
                }
                None => cands.push(i),
            }
        }
        if cands.len() == 1 {
            return Some(cands[0]);
        }
        Some(self.chooser.pick(menu, &cands))
    }

    pub fn take(&mut self, i: usize) {
        self.taken[i] = true;
        self.order.push(i);
    }

    /// Takes the top eligible individual; returns whether one existed.
    pub fn take_top(&mut self, eligible: impl Fn(&Individual) -> bool) -> bool {
        match self.top(eligible) {
            Some(i) => {
                self.take(i);
                true
            }
            None => false,
        }
    }

    pub fn count(&self) -> usize {
        self.order.len()
    }
}

/// Runs a greedy procedure under the tie policy and packages the outcome.
pub(crate) fn run<F>(menu: &[&Individual], tie: TieBreak, procedure: F) -> Result<ChoiceResult, RuleError>
where
    F: Fn(&mut Pass) -> Result<(), RuleError>,
{
    let finish = |order: Vec<usize>| {
        let mut members = order;
        members.sort_unstable();
        let profile = TypeProfile::of(members.iter().map(|&i| menu[i]));
        (profile, members)
    };
    match tie {
        TieBreak::ById => {
            let mut chooser = ByIdChooser;
            let mut pass = Pass::new(menu, &mut chooser);
            procedure(&mut pass)?;
            let (p, m) = finish(pass.order);
            Ok(ChoiceResult { chosen: vec![p], witnesses: vec![m] })
        }
        TieBreak::Error => {
            let mut pending: Vec<Vec<usize>> = vec![Vec::new()];
            let mut outcome: Option<(TypeProfile, Vec<usize>)> = None;
            let mut first_tie: Option<Vec<usize>> = None;
            let mut replays = 0usize;
            while let Some(script) = pending.pop() {
                replays += 1;
                let mut chooser = ScriptChooser { script: script.clone(), pos: 0, widths: Vec::new(), first_tie: None };
                let order = {
                    let mut pass = Pass::new(menu, &mut chooser);
                    procedure(&mut pass)?;
                    pass.order
                };
                if first_tie.is_none() {
                    first_tie = chooser.first_tie.clone();
                }
                let result = finish(order);
                match &outcome {
                    None => outcome = Some(result),
                    Some((p, _)) if *p == result.0 => {}
                    Some(_) => return Err(tie_error(menu, first_tie.as_deref().unwrap_or(&[]))),
                }
                for p in script.len()..chooser.widths.len() {
                    for alt in 1..chooser.widths[p] {
                        let mut s = script.clone();
                        s.resize(p, 0);
                        s.push(alt);
                        pending.push(s);
                    }
                }
                if replays > MAX_TIE_REPLAYS {
                    return Err(tie_error(menu, first_tie.as_deref().unwrap_or(&[])));
                }
            }
            let (p, m) = outcome.expect("at least one replay");
            Ok(ChoiceResult { chosen: vec![p], witnesses: vec![m] })
        }
    }
}

fn tie_error(menu: &[&Individual], cands: &[usize]) -> RuleError {
    let mut ids: Vec<String> = cands.iter().map(|&i| menu[i].id.clone()).collect();
    ids.sort();
    RuleError::Tie { ids }
}

pub(crate) fn reserve(menu: &[&Individual], slots: &[Slot], refill_skipped: bool, tie: TieBreak) -> Result<ChoiceResult, RuleError> {
    let target = slots.len().min(menu.len());
    run(menu, tie, |pass| {
        let mut skipped = 0usize;
        for slot in slots {
            let filled = match slot {
                Slot::Open => pass.take_top(|_| true),
                Slot::Reserve(theta) => pass.take_top(|i| &i.identity == theta),
            };
            if !filled {
                skipped += 1;
            }
        }
        if refill_skipped {
            for _ in 0..skipped {
                pass.take_top(|_| true);
            }
        }
        if pass.count() < target {
            return Err(RuleError::CapacityViolation { chosen: pass.count(), required: target });
        }
        Ok(())
    })
}

/// Group indices of the two Supreme Court dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CourtLayout {
    pub caste_dim: usize,
    pub reserve_group: u8,
    pub gender_dim: usize,
    pub women_group: u8,
}

impl CourtLayout {
    fn reserve_eligible(&self, id: &Identity) -> bool {
        id.0[self.caste_dim] == self.reserve_group
    }

    fn woman(&self, id: &Identity) -> bool {
        id.0[self.gender_dim] == self.women_group
    }
}

pub(crate) fn supreme_court(
    menu: &[&Individual],
    q: usize,
    (o, r, ow, rw): (usize, usize, usize, usize),
    layout: CourtLayout,
    tie: TieBreak,
) -> Result<ChoiceResult, RuleError> {
    run(menu, tie, |pass| {
        // Step 1: meritorious reserve candidates are the reserve-eligible among the top o.
        let mut meritorious = vec![false; menu.len()];
        {
            let mut probe = Vec::new();
            for _ in 0..o {
                match pass.top(|_| true) {
                    Some(i) => {
                        pass.taken[i] = true;
                        probe.push(i);
                    }
                    None => break,
                }
            }
            for i in probe {
                pass.taken[i] = false;
                if layout.reserve_eligible(&menu[i].identity) {
                    meritorious[i] = true;
                }
            }
        }
        let index_of = |ind: &Individual| menu.iter().position(|m| std::ptr::eq(*m, ind)).unwrap();
        let open_pool = |ind: &Individual| !layout.reserve_eligible(&ind.identity) || meritorious[index_of(ind)];
        // Step 2, with fallback to men of the same pool.
        for _ in 0..ow {
            if !pass.take_top(|i| open_pool(i) && layout.woman(&i.identity)) {
                pass.take_top(|i| open_pool(i) && !layout.woman(&i.identity));
            }
        }
        // Step 3
        for _ in ow..o {
            pass.take_top(open_pool);
        }
        // Step 4, with fallback to reserve-eligible men.
        for _ in 0..rw {
            let eligible = |i: &Individual| layout.reserve_eligible(&i.identity);
            if !pass.take_top(|i| eligible(i) && layout.woman(&i.identity)) {
                pass.take_top(|i| eligible(i) && !layout.woman(&i.identity));
            }
        }
        // Step 5
        for _ in rw..r {
            pass.take_top(|i| layout.reserve_eligible(&i.identity));
        }
        // Positions left empty by the stages go to the best remaining applicants.
        while pass.count() < q && pass.take_top(|_| true) {}
        Ok(())
    })
}
