//! Menu families over a finite universe and precomputed choice tables.
//!
//! Menus are bitmasks over universe positions. Enumeration order is by size,
//! then lexicographic on the sorted position list.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{DimensionSchema, Individual, TypeProfile};
use crate::rules::{RuleError, RuleSpec};

pub const DEFAULT_UNIVERSE_CAP: usize = 14;
const HARD_UNIVERSE_LIMIT: usize = 30;

pub type Menu = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MenuError {
    #[error("universe of {size} individuals exceeds the enumeration cap of {cap}")]
    UniverseTooLarge { size: usize, cap: usize },
    #[error("menu family of {count} menus exceeds the cap of {cap}")]
    TooManyMenus { count: u64, cap: u64 },
    #[error("minimum menu size must be at least 1")]
    BadBounds,
    #[error("rule failed on menu {{{}}}: {error}", menu.join(", "))]
    Rule { menu: Vec<String>, error: RuleError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenuFamilyConfig {
    pub universe: Vec<Individual>,
    pub min_size: usize,
    pub max_size: usize,
    /// When false the family is just the whole universe.
    pub include_all_subsets: bool,
    pub universe_cap: usize,
    pub menu_cap: Option<u64>,
}

impl MenuFamilyConfig {
    pub fn all_subsets(universe: Vec<Individual>) -> Self {
        let n = universe.len();
        MenuFamilyConfig {
            universe,
            min_size: 1,
            max_size: n,
            include_all_subsets: true,
            universe_cap: DEFAULT_UNIVERSE_CAP,
            menu_cap: None,
        }
    }

    pub fn sized(universe: Vec<Individual>, min_size: usize, max_size: usize) -> Self {
        MenuFamilyConfig { min_size, max_size, ..Self::all_subsets(universe) }
    }
}

pub fn members(menu: Menu) -> impl Iterator<Item = usize> {
    (0..32).filter(move |b| menu & (1 << b) != 0)
}

pub fn menu_individuals(universe: &[Individual], menu: Menu) -> Vec<&Individual> {
    members(menu).map(|i| &universe[i]).collect()
}

pub fn menu_ids(universe: &[Individual], menu: Menu) -> Vec<String> {
    members(menu).map(|i| universe[i].id.clone()).collect()
}

pub fn full_menu(n: usize) -> Menu {
    if n == 0 {
        0
    } else {
        u32::MAX >> (32 - n)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// The menus of the family, in canonical order.
pub fn enumerate_menus(cfg: &MenuFamilyConfig) -> Result<Vec<Menu>, MenuError> {
    let n = cfg.universe.len();
    if n > cfg.universe_cap.min(HARD_UNIVERSE_LIMIT) {
        return Err(MenuError::UniverseTooLarge { size: n, cap: cfg.universe_cap.min(HARD_UNIVERSE_LIMIT) });
    }
    if cfg.min_size == 0 {
        return Err(MenuError::BadBounds);
    }
    if !cfg.include_all_subsets {
        return Ok(if n >= cfg.min_size && n > 0 { vec![full_menu(n)] } else { Vec::new() });
    }
    let hi = cfg.max_size.min(n);
    let count: u64 = (cfg.min_size..=hi).map(|k| binomial(n as u64, k as u64)).sum();
    if let Some(cap) = cfg.menu_cap {
        if count > cap {
            return Err(MenuError::TooManyMenus { count, cap });
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in cfg.min_size..=hi {
        out.extend(subsets_of_size(n, k));
    }
    Ok(out)
}

/// All `k`-subsets of `0..n` in lexicographic order of their position lists.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<Menu> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Choices on one menu, with witnesses as universe masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuChoice {
    pub menu: Menu,
    pub profile: TypeProfile,
    pub chosen: Vec<(TypeProfile, Menu)>,
}

impl MenuChoice {
    pub fn is_chosen(&self, p: &TypeProfile) -> bool {
        self.chosen.iter().any(|(c, _)| c == p)
    }
}

/// Rule outcomes on a list of menus.
#[derive(Debug, Clone)]
pub struct ChoiceTable {
    pub universe: Vec<Individual>,
    pub entries: Vec<MenuChoice>,
    index: HashMap<Menu, usize>,
}

impl ChoiceTable {
    pub fn build(rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual], menus: &[Menu]) -> Result<Self, MenuError> {
        let results: Vec<Result<MenuChoice, MenuError>> = menus
            .par_iter()
            .map(|&menu| choose(rule, schema, universe, menu))
            .collect();
        let entries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let index = entries.iter().enumerate().map(|(i, e)| (e.menu, i)).collect();
        Ok(ChoiceTable { universe: universe.to_vec(), entries, index })
    }

    /// Every nonempty subset of the universe.
    pub fn all_menus(rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual], cap: usize) -> Result<Self, MenuError> {
        let cfg = MenuFamilyConfig { universe_cap: cap, ..MenuFamilyConfig::all_subsets(universe.to_vec()) };
        let menus = enumerate_menus(&cfg)?;
        Self::build(rule, schema, universe, &menus)
    }

    pub fn get(&self, menu: Menu) -> Option<&MenuChoice> {
        self.index.get(&menu).map(|&i| &self.entries[i])
    }

    pub fn menus(&self) -> impl Iterator<Item = Menu> + '_ {
        self.entries.iter().map(|e| e.menu)
    }
}

/// Applies the rule to one menu and maps witnesses back to universe masks.
pub fn choose(rule: &RuleSpec, schema: &DimensionSchema, universe: &[Individual], menu: Menu) -> Result<MenuChoice, MenuError> {
    let positions: Vec<usize> = members(menu).collect();
    let people: Vec<&Individual> = positions.iter().map(|&i| &universe[i]).collect();
    let result = rule.apply(schema, &people).map_err(|error| MenuError::Rule { menu: menu_ids(universe, menu), error })?;
    let chosen = result
        .chosen
        .into_iter()
        .zip(result.witnesses)
        .map(|(p, w)| (p, w.iter().fold(0u32, |m, &i| m | (1 << positions[i]))))
        .collect();
    Ok(MenuChoice { menu, profile: TypeProfile::of(people.iter().copied()), chosen })
}
