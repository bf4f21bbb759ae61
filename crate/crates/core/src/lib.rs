//! A workbench for modal logics under Kripke and team semantics.
//!
//! The crate provides:
//!
//! - a shared negation-normal-form [`Formula`] AST with a parser and printer
//!   covering plain modal logic, the universal modalities, team disjunction,
//!   and dependence atoms;
//! - finite Kripke [`kripke::Frame`]s and [`kripke::Model`]s with pointed
//!   evaluation, and a [`team`] evaluator for the team-based logics;
//! - validity-preserving [`transform`]ations: box forms, closed clause sets,
//!   team-disjunction normal form, dependence-atom elimination, and the
//!   translation into dependence atoms over fresh propositions;
//! - the frame constructions in [`frameops`]: disjoint unions, generated
//!   subframes, bounded morphisms, and ultrafilter extensions;
//! - a brute-force [`definability`] engine that enumerates every labeled
//!   frame up to a size bound, computes frame classes, audits closure and
//!   reflection properties, and cross-checks formula equivalences;
//! - deterministic formula generators in [`corpus`] and the acceptance
//!   [`suite`] built on top of them.

pub mod corpus;
pub mod definability;
mod eval;
pub mod formula;
pub mod frameops;
pub mod kripke;
pub mod parser;
pub mod suite;
pub mod team;
#[cfg(test)]
pub(crate) mod testkit;
pub mod transform;

pub use eval::{EvalConfig, EvalError};
pub use formula::{negate, render, Formula, Fragment};
pub use kripke::{Frame, Model};
pub use parser::{parse, ParseError};
pub use team::Team;
