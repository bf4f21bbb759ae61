//! Team semantics for the team-based logics.
//!
//! A team is a set of points of a model; the empty team is legal and
//! satisfies every formula in scope. The evaluator follows the satisfaction
//! clauses with two sound search reductions (successor choice functions for
//! `<>`, disjoint splits for `|`) plus a flat fast path for plain ML
//! subformulas; [`EvalConfig::exhaustive`] turns all three off for
//! differential testing.

use crate::eval::{self, Compiled, EvalConfig, EvalError, TeamCtx, TeamScratch};
use crate::formula::{Formula, Fragment};
use crate::kripke::{Model, ModelError};

/// A subset of a model's points, kept as a bitset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Team(u64);

impl Team {
    pub const EMPTY: Team = Team(0);

    /// Builds a team from a point bitset, checking it fits the model.
    pub fn from_mask(m: &Model, mask: u64) -> Result<Team, ModelError> {
        if mask & !m.frame().full_mask() != 0 {
            let bad = (mask & !m.frame().full_mask()).trailing_zeros() as usize;
            return Err(ModelError::PointOutOfRange(bad));
        }
        Ok(Team(mask))
    }

    /// Builds a team from point names.
    pub fn from_names<S: AsRef<str>>(m: &Model, names: &[S]) -> Result<Team, ModelError> {
        Ok(Team(m.frame().mask_of_names(names)?))
    }

    /// The team of all points.
    pub fn full(m: &Model) -> Team {
        Team(m.frame().full_mask())
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, point: usize) -> bool {
        self.0 & (1 << point) != 0
    }

    pub fn is_subteam_of(self, other: Team) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn names(self, m: &Model) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..m.frame().len() {
            if self.contains(i) {
                out.push(m.frame().name(i).to_string());
            }
        }
        out
    }
}

/// `R[T]`, the one-step successor image of a team.
pub fn successor_image(m: &Model, t: Team) -> Team {
    Team(m.frame().succ_image(t.0))
}

/// `R^-1[T]`, the one-step predecessor image of a team.
pub fn preimage_image(m: &Model, t: Team) -> Team {
    Team(m.frame().pred_image(t.0))
}

/// The team transition relation: every member of `t` has a successor in `s`
/// and every member of `s` has a predecessor in `t`.
pub fn team_rel_holds(m: &Model, t: Team, s: Team) -> bool {
    s.is_subteam_of(successor_image(m, t)) && t.is_subteam_of(preimage_image(m, s))
}

fn check_team_fragment(f: &Formula) -> Result<(), EvalError> {
    if let Some(c) = eval::first_non_team(f) {
        return Err(EvalError::NotTeam(c));
    }
    if f.classify() == Fragment::Mixed {
        // Unreachable through the parser, but programmatic ASTs could mix
        // `\/` with dep atoms, which none of the supported logics allow.
        return Err(EvalError::NotTeam("mixed team connectives"));
    }
    Ok(())
}

/// Evaluator bound to one model and formula. Results are memoized per
/// `(subformula, team)`, so sweeping many teams of the same model is cheap.
pub struct TeamEvaluator<'m> {
    model: &'m Model,
    compiled: Compiled,
    val: Vec<u64>,
    cfg: EvalConfig,
    scratch: TeamScratch,
}

impl<'m> TeamEvaluator<'m> {
    pub fn new(m: &'m Model, f: &Formula, cfg: EvalConfig) -> Result<Self, EvalError> {
        check_team_fragment(f)?;
        let compiled = Compiled::new(f);
        let val: Vec<u64> = compiled.props.iter().map(|p| m.val_mask(p)).collect();
        let scratch = TeamScratch::new(&compiled, m.frame());
        Ok(TeamEvaluator { model: m, compiled, val, cfg, scratch })
    }

    pub fn eval(&mut self, t: Team) -> bool {
        debug_assert!(t.0 & !self.model.frame().full_mask() == 0);
        let ctx = TeamCtx {
            c: &self.compiled,
            frame: self.model.frame(),
            val: &self.val,
            cfg: self.cfg,
        };
        eval::team_eval(&ctx, &mut self.scratch, self.compiled.root, t.0)
    }
}

/// Team satisfaction under the default (reduced) search strategies.
pub fn eval_team(m: &Model, t: Team, f: &Formula) -> Result<bool, EvalError> {
    eval_team_with(m, t, f, EvalConfig::default())
}

/// Team satisfaction under an explicit strategy configuration.
pub fn eval_team_with(m: &Model, t: Team, f: &Formula, cfg: EvalConfig) -> Result<bool, EvalError> {
    Ok(TeamEvaluator::new(m, f, cfg)?.eval(t))
}

/// Model validity: satisfaction by every team. All supported logics are
/// downward closed, so checking the full team is enough; the equivalence
/// with the every-team definition is covered by tests.
pub fn model_valid_team(m: &Model, f: &Formula) -> Result<bool, EvalError> {
    eval_team(m, Team::full(m), f)
}

pub fn model_valid_team_with(m: &Model, f: &Formula, cfg: EvalConfig) -> Result<bool, EvalError> {
    eval_team_with(m, Team::full(m), f, cfg)
}

/// Test hook for flatness: does team satisfaction of an ML formula equal
/// pointwise satisfaction by every member?
pub fn check_flatness(m: &Model, t: Team, f: &Formula) -> Result<bool, EvalError> {
    let fragment = f.classify();
    if fragment != Fragment::Ml {
        return Err(EvalError::NotMl(fragment));
    }
    let team_side = eval_team(m, t, f)?;
    let mut pointwise = true;
    for w in 0..m.frame().len() {
        if t.contains(w) {
            pointwise &= crate::kripke::eval_pointed(m, w, f)?;
        }
    }
    Ok(team_side == pointwise)
}
