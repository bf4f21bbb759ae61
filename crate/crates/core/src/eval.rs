//! Shared evaluation engine.
//!
//! Formulas are compiled once into a flat node array with structural
//! sharing; Kripke evaluation then computes one satisfying bitset per node,
//! and team evaluation runs over the same nodes with a `(node, team)` memo.
//! The definability engine reuses the scratch buffers across millions of
//! valuations, so everything here is written to avoid per-call allocation.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{Formula, Fragment};
use crate::kripke::{Frame, Model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("`{0}` has no pointed Kripke semantics")]
    NotKripke(&'static str),
    #[error("`{0}` has no team semantics")]
    NotTeam(&'static str),
    #[error("expected a plain modal-logic formula, got a {0} formula")]
    NotMl(Fragment),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("point index {0} is out of range")]
    PointOutOfRange(usize),
}

/// First construct in `f` without pointed Kripke semantics, if any.
pub(crate) fn first_non_kripke(f: &Formula) -> Option<&'static str> {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => None,
        Formula::And(l, r) | Formula::Or(l, r) => {
            first_non_kripke(l).or_else(|| first_non_kripke(r))
        }
        Formula::Dia(b) | Formula::Box_(b) | Formula::UDia(b) | Formula::UBox(b) => {
            first_non_kripke(b)
        }
        Formula::Idis(_, _) => Some("\\/"),
        Formula::Dep { .. } => Some("dep"),
    }
}

/// First construct in `f` without team semantics, if any.
pub(crate) fn first_non_team(f: &Formula) -> Option<&'static str> {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => None,
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Idis(l, r) => {
            first_non_team(l).or_else(|| first_non_team(r))
        }
        Formula::Dia(b) | Formula::Box_(b) => first_non_team(b),
        Formula::UBox(_) => Some("[u]"),
        Formula::UDia(_) => Some("<u>"),
        Formula::Dep { .. } => None, // bodies are ML by the AST invariant
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Atom(u32),
    NegAtom(u32),
    And(u32, u32),
    Or(u32, u32),
    Dia(u32),
    BoxM(u32),
    UDia(u32),
    UBox(u32),
    Idis(u32, u32),
    Dep { args: Box<[u32]>, target: u32 },
}

/// A formula flattened into a node array. Children always precede parents,
/// and structurally equal subformulas share one node.
pub(crate) struct Compiled {
    pub nodes: Vec<Node>,
    pub props: Vec<String>,
    pub root: u32,
    /// Per node: the subtree uses only base modal-logic connectives.
    pub ml: Vec<bool>,
}

impl Compiled {
    pub fn new(f: &Formula) -> Compiled {
        let props: Vec<String> = f.propositions().into_iter().collect();
        let mut c = Compiler {
            prop_index: props
                .iter()
                .enumerate()
                .map(|(i, p)| (p.clone(), i as u32))
                .collect(),
            nodes: Vec::new(),
            ml: Vec::new(),
            dedup: HashMap::new(),
        };
        let root = c.compile(f);
        Compiled { nodes: c.nodes, props, root, ml: c.ml }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

struct Compiler {
    prop_index: HashMap<String, u32>,
    nodes: Vec<Node>,
    ml: Vec<bool>,
    dedup: HashMap<Node, u32>,
}

impl Compiler {
    fn push(&mut self, node: Node, ml: bool) -> u32 {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.dedup.insert(node.clone(), id);
        self.nodes.push(node);
        self.ml.push(ml);
        id
    }

    fn compile(&mut self, f: &Formula) -> u32 {
        match f {
            Formula::Atom(p) => {
                let p = self.prop_index[p];
                self.push(Node::Atom(p), true)
            }
            Formula::NegAtom(p) => {
                let p = self.prop_index[p];
                self.push(Node::NegAtom(p), true)
            }
            Formula::And(l, r) => {
                let (a, b) = (self.compile(l), self.compile(r));
                let ml = self.ml[a as usize] && self.ml[b as usize];
                self.push(Node::And(a, b), ml)
            }
            Formula::Or(l, r) => {
                let (a, b) = (self.compile(l), self.compile(r));
                let ml = self.ml[a as usize] && self.ml[b as usize];
                self.push(Node::Or(a, b), ml)
            }
            Formula::Dia(x) => {
                let a = self.compile(x);
                let ml = self.ml[a as usize];
                self.push(Node::Dia(a), ml)
            }
            Formula::Box_(x) => {
                let a = self.compile(x);
                let ml = self.ml[a as usize];
                self.push(Node::BoxM(a), ml)
            }
            Formula::UDia(x) => {
                let a = self.compile(x);
                self.push(Node::UDia(a), false)
            }
            Formula::UBox(x) => {
                let a = self.compile(x);
                self.push(Node::UBox(a), false)
            }
            Formula::Idis(l, r) => {
                let (a, b) = (self.compile(l), self.compile(r));
                self.push(Node::Idis(a, b), false)
            }
            Formula::Dep { args, target } => {
                let args: Box<[u32]> = args.iter().map(|a| self.compile(a)).collect();
                let target = self.compile(target);
                self.push(Node::Dep { args, target }, false)
            }
        }
    }
}

/// Computes the satisfying bitset of every node under Kripke semantics.
/// `out` is resized as needed; `out[root]` is the satisfying set of points.
pub(crate) fn kripke_sat_sets(c: &Compiled, frame: &Frame, val: &[u64], out: &mut Vec<u64>) {
    debug_assert_eq!(val.len(), c.props.len());
    let n = frame.len();
    let full = frame.full_mask();
    out.clear();
    out.resize(c.nodes.len(), 0);
    for (i, node) in c.nodes.iter().enumerate() {
        out[i] = match node {
            Node::Atom(p) => val[*p as usize],
            Node::NegAtom(p) => !val[*p as usize] & full,
            Node::And(a, b) => out[*a as usize] & out[*b as usize],
            Node::Or(a, b) => out[*a as usize] | out[*b as usize],
            Node::Dia(a) => {
                let sat = out[*a as usize];
                let mut s = 0;
                for w in 0..n {
                    if frame.succ(w) & sat != 0 {
                        s |= 1 << w;
                    }
                }
                s
            }
            Node::BoxM(a) => {
                let sat = out[*a as usize];
                let mut s = 0;
                for w in 0..n {
                    if frame.succ(w) & !sat == 0 {
                        s |= 1 << w;
                    }
                }
                s
            }
            Node::UDia(a) => {
                if out[*a as usize] != 0 {
                    full
                } else {
                    0
                }
            }
            Node::UBox(a) => {
                if out[*a as usize] == full {
                    full
                } else {
                    0
                }
            }
            Node::Idis(_, _) | Node::Dep { .. } => {
                unreachable!("team connectives rejected before Kripke evaluation")
            }
        };
    }
}

/// One-shot Kripke satisfying set for a formula on a model.
pub(crate) fn kripke_satisfying_set(m: &Model, f: &Formula) -> Result<u64, EvalError> {
    if let Some(c) = first_non_kripke(f) {
        return Err(EvalError::NotKripke(c));
    }
    let compiled = Compiled::new(f);
    let val: Vec<u64> = compiled.props.iter().map(|p| m.val_mask(p)).collect();
    let mut out = Vec::new();
    kripke_sat_sets(&compiled, m.frame(), &val, &mut out);
    Ok(out[compiled.root as usize])
}

/// Search-strategy switches for the team evaluator.
///
/// The reduced strategies are sound for every downward-closed logic handled
/// here; the exhaustive ones follow the satisfaction clauses literally and
/// exist so the two can be played against each other in tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Search `<>` witnesses over successor choice functions instead of all
    /// subsets of the successor image.
    pub dia_choice_functions: bool,
    /// Search `|` splits over disjoint pairs instead of all covers.
    pub disjoint_splits: bool,
    /// Evaluate flat (plain ML) subformulas through their Kripke satisfying
    /// sets instead of recursing through the team clauses.
    pub flat_ml: bool,
}

impl EvalConfig {
    pub fn reduced() -> EvalConfig {
        EvalConfig { dia_choice_functions: true, disjoint_splits: true, flat_ml: true }
    }

    /// Literal clause-by-clause evaluation; exponential, for cross-checks.
    pub fn exhaustive() -> EvalConfig {
        EvalConfig { dia_choice_functions: false, disjoint_splits: false, flat_ml: false }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig::reduced()
    }
}

enum Memo {
    /// Dense table indexed by `node * team_count + team`, invalidated by
    /// bumping the epoch instead of clearing.
    Table { data: Vec<u8>, stamp: Vec<u32>, epoch: u32, teams: usize },
    Map(HashMap<(u32, u64), bool>),
}

const TABLE_MAX_POINTS: usize = 12;

impl Memo {
    fn new(nodes: usize, points: usize) -> Memo {
        if points <= TABLE_MAX_POINTS {
            let teams = 1usize << points;
            Memo::Table { data: vec![0; nodes * teams], stamp: vec![0; nodes * teams], epoch: 1, teams }
        } else {
            Memo::Map(HashMap::new())
        }
    }

    fn reset(&mut self) {
        match self {
            Memo::Table { epoch, stamp, .. } => {
                *epoch += 1;
                if *epoch == u32::MAX {
                    stamp.fill(0);
                    *epoch = 1;
                }
            }
            Memo::Map(m) => m.clear(),
        }
    }

    #[inline]
    fn get(&self, node: u32, team: u64) -> Option<bool> {
        match self {
            Memo::Table { data, stamp, epoch, teams } => {
                let i = node as usize * *teams + team as usize;
                if stamp[i] == *epoch {
                    Some(data[i] != 0)
                } else {
                    None
                }
            }
            Memo::Map(m) => m.get(&(node, team)).copied(),
        }
    }

    #[inline]
    fn set(&mut self, node: u32, team: u64, v: bool) {
        match self {
            Memo::Table { data, stamp, epoch, teams } => {
                let i = node as usize * *teams + team as usize;
                data[i] = v as u8;
                stamp[i] = *epoch;
            }
            Memo::Map(m) => {
                m.insert((node, team), v);
            }
        }
    }
}

/// Mutable scratch for team evaluation, reusable across valuations.
pub(crate) struct TeamScratch {
    memo: Memo,
    ml_sat: Vec<u64>,
    ml_ready: bool,
}

impl TeamScratch {
    pub fn new(c: &Compiled, frame: &Frame) -> TeamScratch {
        TeamScratch {
            memo: Memo::new(c.nodes.len(), frame.len()),
            ml_sat: Vec::new(),
            ml_ready: false,
        }
    }

    /// Invalidate memoized results; call whenever the valuation changes.
    pub fn reset(&mut self) {
        self.memo.reset();
        self.ml_ready = false;
    }
}

pub(crate) struct TeamCtx<'a> {
    pub c: &'a Compiled,
    pub frame: &'a Frame,
    pub val: &'a [u64],
    pub cfg: EvalConfig,
}

/// Team satisfaction of node `node` by the team bitset `team`.
pub(crate) fn team_eval(ctx: &TeamCtx, st: &mut TeamScratch, node: u32, team: u64) -> bool {
    if ctx.cfg.flat_ml && ctx.c.ml[node as usize] {
        if !st.ml_ready {
            compute_ml_sats(ctx, st);
        }
        return team & !st.ml_sat[node as usize] == 0;
    }
    if let Some(v) = st.memo.get(node, team) {
        return v;
    }
    let v = match &ctx.c.nodes[node as usize] {
        Node::Atom(p) => team & !ctx.val[*p as usize] == 0,
        Node::NegAtom(p) => team & ctx.val[*p as usize] == 0,
        Node::And(a, b) => team_eval(ctx, st, *a, team) && team_eval(ctx, st, *b, team),
        Node::Or(a, b) => eval_split(ctx, st, *a, *b, team),
        Node::Idis(a, b) => team_eval(ctx, st, *a, team) || team_eval(ctx, st, *b, team),
        Node::Dia(a) => eval_dia(ctx, st, *a, team),
        Node::BoxM(a) => {
            let image = ctx.frame.succ_image(team);
            team_eval(ctx, st, *a, image)
        }
        Node::Dep { args, target } => eval_dep(ctx, st, args, *target, team),
        Node::UBox(_) | Node::UDia(_) => {
            unreachable!("universal modalities rejected before team evaluation")
        }
    };
    st.memo.set(node, team, v);
    v
}

fn compute_ml_sats(ctx: &TeamCtx, st: &mut TeamScratch) {
    st.ml_sat.clear();
    st.ml_sat.resize(ctx.c.nodes.len(), 0);
    let n = ctx.frame.len();
    let full = ctx.frame.full_mask();
    for (i, node) in ctx.c.nodes.iter().enumerate() {
        if !ctx.c.ml[i] {
            continue;
        }
        st.ml_sat[i] = match node {
            Node::Atom(p) => ctx.val[*p as usize],
            Node::NegAtom(p) => !ctx.val[*p as usize] & full,
            Node::And(a, b) => st.ml_sat[*a as usize] & st.ml_sat[*b as usize],
            Node::Or(a, b) => st.ml_sat[*a as usize] | st.ml_sat[*b as usize],
            Node::Dia(a) => {
                let sat = st.ml_sat[*a as usize];
                let mut s = 0;
                for w in 0..n {
                    if ctx.frame.succ(w) & sat != 0 {
                        s |= 1 << w;
                    }
                }
                s
            }
            Node::BoxM(a) => {
                let sat = st.ml_sat[*a as usize];
                let mut s = 0;
                for w in 0..n {
                    if ctx.frame.succ(w) & !sat == 0 {
                        s |= 1 << w;
                    }
                }
                s
            }
            _ => unreachable!("non-ML node flagged as ML"),
        };
    }
    st.ml_ready = true;
}

fn eval_split(ctx: &TeamCtx, st: &mut TeamScratch, a: u32, b: u32, team: u64) -> bool {
    if ctx.cfg.disjoint_splits {
        // T1 runs over all subsets, T2 is the complement within the team.
        let mut t1 = team;
        loop {
            if team_eval(ctx, st, a, t1) && team_eval(ctx, st, b, team & !t1) {
                return true;
            }
            if t1 == 0 {
                return false;
            }
            t1 = (t1 - 1) & team;
        }
    } else {
        // All covers: T1 any subset, T2 any superset of the leftover.
        let mut t1 = team;
        loop {
            if team_eval(ctx, st, a, t1) {
                let rest = team & !t1;
                let mut extra = t1;
                loop {
                    if team_eval(ctx, st, b, rest | extra) {
                        return true;
                    }
                    if extra == 0 {
                        break;
                    }
                    extra = (extra - 1) & t1;
                }
            }
            if t1 == 0 {
                return false;
            }
            t1 = (t1 - 1) & team;
        }
    }
}

fn eval_dia(ctx: &TeamCtx, st: &mut TeamScratch, a: u32, team: u64) -> bool {
    if ctx.cfg.dia_choice_functions {
        // Assign each member one successor; a point without successors has
        // no witness team at all. Downward closure makes these choice teams
        // complete as a search space.
        let mut members = Vec::with_capacity(team.count_ones() as usize);
        let mut t = team;
        while t != 0 {
            let w = t.trailing_zeros() as usize;
            t &= t - 1;
            let s = ctx.frame.succ(w);
            if s == 0 {
                return false;
            }
            members.push(s);
        }
        choice_rec(ctx, st, a, &members, 0, 0)
    } else {
        // Every witness satisfies T' ⊆ R[T] and T ⊆ R^-1[T'].
        let image = ctx.frame.succ_image(team);
        let mut t1 = image;
        loop {
            let mut covered = true;
            let mut t = team;
            while t != 0 {
                let w = t.trailing_zeros() as usize;
                t &= t - 1;
                if ctx.frame.succ(w) & t1 == 0 {
                    covered = false;
                    break;
                }
            }
            if covered && team_eval(ctx, st, a, t1) {
                return true;
            }
            if t1 == 0 {
                return false;
            }
            t1 = (t1 - 1) & image;
        }
    }
}

fn choice_rec(
    ctx: &TeamCtx,
    st: &mut TeamScratch,
    a: u32,
    succs: &[u64],
    i: usize,
    acc: u64,
) -> bool {
    if i == succs.len() {
        return team_eval(ctx, st, a, acc);
    }
    let mut s = succs[i];
    while s != 0 {
        let v = s.trailing_zeros() as usize;
        s &= s - 1;
        if choice_rec(ctx, st, a, succs, i + 1, acc | (1 << v)) {
            return true;
        }
    }
    false
}

fn eval_dep(ctx: &TeamCtx, st: &mut TeamScratch, args: &[u32], target: u32, team: u64) -> bool {
    // Two members agreeing on every argument must agree on the target;
    // argument formulas are evaluated on singleton teams.
    let mut members = Vec::with_capacity(team.count_ones() as usize);
    let mut t = team;
    while t != 0 {
        let w = t.trailing_zeros() as usize;
        t &= t - 1;
        members.push(1u64 << w);
    }
    for (i, &w) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            let agree = args
                .iter()
                .all(|&arg| team_eval(ctx, st, arg, w) == team_eval(ctx, st, arg, v));
            if agree && team_eval(ctx, st, target, w) != team_eval(ctx, st, target, v) {
                return false;
            }
        }
    }
    true
}
