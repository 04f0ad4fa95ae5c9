//! Declarative functional-group rule table.

use std::sync::OnceLock;

use crate::pattern::{Pattern, PatternError};

/// Rules with a priority below this are defaults: applied last, one atom per
/// match, with adjacent atoms of the same default label merged.
pub const DEFAULT_PRIORITY_CEILING: i32 = 100;

const BUILTIN: &str = include_str!("../../data/fg_rules.tsv");

#[derive(Debug, Clone, PartialEq)]
pub struct FgRule {
    /// Display name as listed in the table, e.g. "Carboxylic anhydride".
    pub name: String,
    /// Normalized label used in tokens and the knowledge graph.
    pub label: String,
    pub priority: i32,
    pub patterns: Vec<Pattern>,
}

impl FgRule {
    pub fn is_default(&self) -> bool {
        self.priority < DEFAULT_PRIORITY_CEILING
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("line {line}: expected name<TAB>priority<TAB>pattern")]
    Shape { line: usize },
    #[error("line {line}: bad priority {text:?}")]
    Priority { line: usize, text: String },
    #[error("line {line}: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: PatternError,
    },
    #[error("line {line}: duplicate rule {name:?}")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: pattern has no member atoms")]
    NoMembers { line: usize },
}

/// Lowercase with spaces replaced by underscores: "4-ammonium ion" -> "4-ammonium_ion".
pub fn normalize_label(name: &str) -> String {
    name.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join("_")
}

/// An ordered rule set; `rules()` is sorted by descending priority, ties kept
/// in file order.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<FgRule>,
}

impl RuleSet {
    pub fn parse(text: &str) -> Result<RuleSet, RuleError> {
        let mut rules: Vec<FgRule> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 3 {
                return Err(RuleError::Shape { line });
            }
            let priority = cols[1]
                .trim()
                .parse()
                .map_err(|_| RuleError::Priority { line, text: cols[1].to_string() })?;
            let patterns = cols[2]
                .split(" | ")
                .map(|p| Pattern::parse(p.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| RuleError::Pattern { line, source })?;
            if patterns.iter().any(|p| p.map_class(0) == 0) {
                return Err(RuleError::NoMembers { line });
            }
            let name = cols[0].trim().to_string();
            if rules.iter().any(|r| r.name == name) {
                return Err(RuleError::Duplicate { line, name });
            }
            rules.push(FgRule { label: normalize_label(&name), name, priority, patterns });
        }
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        Ok(RuleSet { rules })
    }

    /// The bundled table.
    pub fn builtin() -> &'static RuleSet {
        static SET: OnceLock<RuleSet> = OnceLock::new();
        SET.get_or_init(|| RuleSet::parse(BUILTIN).expect("bundled rule table is valid"))
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn rules(&self) -> &[FgRule] {
        &self.rules
    }

    pub fn by_label(&self, label: &str) -> Option<&FgRule> {
        self.rules.iter().find(|r| r.label == label)
    }
}
