//! Rule-based functional-group detection.

mod detect;
mod rules;

pub use detect::{
    assignment_json, core_structure, detect, element_label, name_ring_system, DetectOptions,
    Detector, FgAssignment, FgInstance, InstanceKind,
};
pub use rules::{normalize_label, FgRule, RuleError, RuleSet, DEFAULT_PRIORITY_CEILING};
