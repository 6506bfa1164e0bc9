//! Engine for the Odeen explanatory-learning environment.
//!
//! Structures are rows of six cells; rules are sentences of a small
//! grammar; the interpreter decides whether a structure satisfies a rule.
//! On top of that sit the full semantic matrix, dataset generation,
//! conjecture-and-verify solvers, the official metrics and a game master.

pub mod bits;
pub mod dataset;
pub mod error;
pub mod grammar;
pub mod interpreter;
pub mod metrics;
pub(crate) mod par;
pub mod plugin;
pub mod rng;
pub mod semantics;
pub(crate) mod serde_labels;
pub mod service;
pub mod solvers;
pub mod universe;

pub use bits::BitRow;
pub use error::{
    DatasetError, EncodingError, FormatError, MetricsError, ServiceError, SolverError, SyntaxError,
};
pub use grammar::{
    enumerate_rules, index_rule, parse, render, rule_count, rule_index, sample_rule, tokenize,
    RuleAst, RuleCategory, RuleCounts, RuleIndex, Token, REPORTED_RULE_COUNT,
};
pub use interpreter::{evaluate, evaluate_row, Interpreter, Label, RightOf, Semantics};
pub use semantics::{
    build_matrix, equivalence_classes, load_matrix, rules_equivalent, save_matrix, AtomTable,
    EquivalenceClasses, SemanticMatrix, World,
};
pub use universe::{
    enumerate_universe, parse_structure, render_structure, Cell, Structure, StructureIndex,
    STRUCTURE_COUNT,
};
