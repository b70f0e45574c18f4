//! Auditing toolkit for affirmative-action choice rules.

pub mod model;
pub mod rules;
pub mod menus;
pub mod revealed;
pub mod audits;
pub mod synthesis;
pub mod scenario;
pub mod report;
