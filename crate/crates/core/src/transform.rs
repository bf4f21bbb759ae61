//! Normal forms and validity-preserving translations between the logics.
//!
//! The conversions here rewrite along a small set of equivalences: the box
//! modalities commute with closed disjuncts/conjuncts, the universal box
//! distributes over conjunction, and team disjunction commutes upward
//! through every base connective. Each rewrite is covered by a brute-force
//! equivalence test on small models.

use thiserror::Error;

use crate::formula::{negate, Formula, FRESH_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{op} does not support `{construct}`")]
    Unsupported { op: &'static str, construct: &'static str },
    #[error("clauses must contain at least one formula")]
    EmptyClause,
    #[error("clause members must be plain modal-logic formulas")]
    NotMlClause,
    #[error("input already uses the reserved fresh-symbol prefix: `{0}`")]
    FreshCollision(String),
}

fn reject(
    op: &'static str,
    f: &Formula,
    allow_ubox: bool,
    allow_idis: bool,
    allow_dep: bool,
) -> Result<(), TransformError> {
    let bad = |construct| Err(TransformError::Unsupported { op, construct });
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => Ok(()),
        Formula::And(l, r) | Formula::Or(l, r) => {
            reject(op, l, allow_ubox, allow_idis, allow_dep)?;
            reject(op, r, allow_ubox, allow_idis, allow_dep)
        }
        Formula::Dia(b) | Formula::Box_(b) => reject(op, b, allow_ubox, allow_idis, allow_dep),
        Formula::UBox(b) => {
            if allow_ubox {
                reject(op, b, allow_ubox, allow_idis, allow_dep)
            } else {
                bad("[u]")
            }
        }
        Formula::UDia(_) => bad("<u>"),
        Formula::Idis(l, r) => {
            if allow_idis {
                reject(op, l, allow_ubox, allow_idis, allow_dep)?;
                reject(op, r, allow_ubox, allow_idis, allow_dep)
            } else {
                bad("\\/")
            }
        }
        Formula::Dep { .. } => {
            if allow_dep {
                Ok(()) // dep bodies are ML by the AST invariant
            } else {
                bad("dep")
            }
        }
    }
}

/// Which of the two box forms to produce: a conjunction of disjunctive
/// clauses, or a disjunction of conjunctive clauses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Conjunctive,
    Disjunctive,
}

/// One clause of a box form.
///
/// With disjunctive polarity this encodes `local | [u]g1 | ... | [u]gn`;
/// with conjunctive polarity `local & [u]g1` and at most one global. A
/// missing `local` makes the clause closed (its value does not depend on
/// the evaluation point); at least one part is always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxClause {
    pub local: Option<Formula>,
    pub globals: Vec<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxForm {
    pub polarity: Polarity,
    pub clauses: Vec<BoxClause>,
}

impl BoxClause {
    fn disjunctive_formula(&self) -> Formula {
        let mut parts = Vec::new();
        if let Some(l) = &self.local {
            parts.push(l.clone());
        }
        parts.extend(self.globals.iter().cloned().map(Formula::ubox));
        Formula::or_all(parts)
    }

    fn conjunctive_formula(&self) -> Formula {
        let mut parts = Vec::new();
        if let Some(l) = &self.local {
            parts.push(l.clone());
        }
        parts.extend(self.globals.iter().cloned().map(Formula::ubox));
        Formula::and_all(parts)
    }
}

impl BoxForm {
    pub fn to_formula(&self) -> Formula {
        match self.polarity {
            Polarity::Conjunctive => Formula::and_all(
                self.clauses.iter().map(BoxClause::disjunctive_formula).collect(),
            ),
            Polarity::Disjunctive => Formula::or_all(
                self.clauses.iter().map(BoxClause::conjunctive_formula).collect(),
            ),
        }
    }
}

// Internal clause forms. `DClause` is `local ∨ ⋁ [u]g`, `CClause` is
// `local ∧ [u]g`; `None` parts are absent.
#[derive(Clone, Debug, PartialEq, Eq)]
struct DClause {
    local: Option<Formula>,
    globals: Vec<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct CClause {
    local: Option<Formula>,
    global: Option<Formula>,
}

fn push_global(globals: &mut Vec<Formula>, g: Formula) {
    if !globals.contains(&g) {
        globals.push(g);
    }
}

fn or_opt(a: Option<Formula>, b: Option<Formula>) -> Option<Formula> {
    match (a, b) {
        (Some(x), Some(y)) => Some(Formula::or(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn and_opt(a: Option<Formula>, b: Option<Formula>) -> Option<Formula> {
    match (a, b) {
        (Some(x), Some(y)) => Some(Formula::and(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// A contradiction usable as a missing local part under `[]`: the rewrite
/// `[](local | closed) = []local | closed` needs a local disjunct, and a
/// boxed contradiction says exactly "no successors". Built from a
/// proposition of the clause so the vocabulary does not grow.
fn falsum_like(f: &Formula) -> Formula {
    let p = f.propositions().into_iter().next().expect("formulas contain at least one atom");
    Formula::and(Formula::atom(p.clone()), Formula::neg_atom(p))
}

/// Dually, `<>(local & closed) = <>local & closed` with a missing local
/// needs a diamonded tautology: "some successor exists".
fn verum_like(f: &Formula) -> Formula {
    let p = f.propositions().into_iter().next().expect("formulas contain at least one atom");
    Formula::or(Formula::atom(p.clone()), Formula::neg_atom(p))
}

fn cform(f: &Formula) -> Vec<DClause> {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => {
            vec![DClause { local: Some(f.clone()), globals: vec![] }]
        }
        Formula::And(l, r) => {
            let mut out = cform(l);
            for c in cform(r) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            out
        }
        Formula::Or(l, r) => {
            let left = cform(l);
            let right = cform(r);
            let mut out: Vec<DClause> = Vec::with_capacity(left.len() * right.len());
            for a in &left {
                for b in &right {
                    let mut globals = a.globals.clone();
                    for g in &b.globals {
                        push_global(&mut globals, g.clone());
                    }
                    let c = DClause { local: or_opt(a.local.clone(), b.local.clone()), globals };
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        Formula::Box_(x) => cform(x)
            .into_iter()
            .map(|c| {
                let local = match c.local {
                    Some(l) => Formula::box_(l),
                    None => Formula::box_(falsum_like(&c.globals[0])),
                };
                DClause { local: Some(local), globals: c.globals }
            })
            .collect(),
        Formula::UBox(x) => cform(x)
            .into_iter()
            .map(|c| match c.local {
                Some(l) => {
                    let mut globals = vec![l];
                    for g in c.globals {
                        push_global(&mut globals, g);
                    }
                    DClause { local: None, globals }
                }
                // A closed clause is point-independent, so [u] is a no-op.
                None => c,
            })
            .collect(),
        Formula::Dia(_) => dform_to_cform(dform(f)),
        Formula::UDia(_) | Formula::Idis(_, _) | Formula::Dep { .. } => {
            unreachable!("rejected before conversion")
        }
    }
}

fn dform(f: &Formula) -> Vec<CClause> {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => {
            vec![CClause { local: Some(f.clone()), global: None }]
        }
        Formula::Or(l, r) => {
            let mut out = dform(l);
            for c in dform(r) {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            out
        }
        Formula::And(l, r) => {
            let left = dform(l);
            let right = dform(r);
            let mut out: Vec<CClause> = Vec::with_capacity(left.len() * right.len());
            for a in &left {
                for b in &right {
                    let c = CClause {
                        local: and_opt(a.local.clone(), b.local.clone()),
                        global: and_opt(a.global.clone(), b.global.clone()),
                    };
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        Formula::Dia(x) => dform(x)
            .into_iter()
            .map(|c| {
                let local = match c.local {
                    Some(l) => Formula::dia(l),
                    None => Formula::dia(verum_like(
                        c.global.as_ref().expect("conjunctive clauses are nonempty"),
                    )),
                };
                CClause { local: Some(local), global: c.global }
            })
            .collect(),
        Formula::Box_(_) | Formula::UBox(_) => cform_to_dform(cform(f)),
        Formula::UDia(_) | Formula::Idis(_, _) | Formula::Dep { .. } => {
            unreachable!("rejected before conversion")
        }
    }
}

#[derive(Clone)]
enum ClausePart {
    Local(Formula),
    Global(Formula),
}

fn dclause_parts(c: &DClause) -> Vec<ClausePart> {
    let mut parts = Vec::new();
    if let Some(l) = &c.local {
        parts.push(ClausePart::Local(l.clone()));
    }
    parts.extend(c.globals.iter().cloned().map(ClausePart::Global));
    parts
}

fn cclause_parts(c: &CClause) -> Vec<ClausePart> {
    let mut parts = Vec::new();
    if let Some(l) = &c.local {
        parts.push(ClausePart::Local(l.clone()));
    }
    if let Some(g) = &c.global {
        parts.push(ClausePart::Global(g.clone()));
    }
    parts
}

/// Distributes a conjunction of disjunctive clauses into a disjunction of
/// conjunctive clauses: pick one part per clause, conjoin the picks. Global
/// picks merge into a single conjoined global.
fn cform_to_dform(cs: Vec<DClause>) -> Vec<CClause> {
    let mut acc = vec![CClause { local: None, global: None }];
    for clause in &cs {
        let parts = dclause_parts(clause);
        let mut next = Vec::with_capacity(acc.len() * parts.len());
        for base in &acc {
            for part in &parts {
                let merged = match part {
                    ClausePart::Local(l) => CClause {
                        local: and_opt(base.local.clone(), Some(l.clone())),
                        global: base.global.clone(),
                    },
                    ClausePart::Global(g) => CClause {
                        local: base.local.clone(),
                        global: and_opt(base.global.clone(), Some(g.clone())),
                    },
                };
                if !next.contains(&merged) {
                    next.push(merged);
                }
            }
        }
        acc = next;
    }
    acc
}

/// The dual distribution: a disjunction of conjunctive clauses into a
/// conjunction of disjunctive clauses. Local picks merge by disjunction,
/// global picks accumulate as separate universal disjuncts.
fn dform_to_cform(ds: Vec<CClause>) -> Vec<DClause> {
    let mut acc = vec![DClause { local: None, globals: vec![] }];
    for clause in &ds {
        let parts = cclause_parts(clause);
        let mut next = Vec::with_capacity(acc.len() * parts.len());
        for base in &acc {
            for part in &parts {
                let merged = match part {
                    ClausePart::Local(l) => DClause {
                        local: or_opt(base.local.clone(), Some(l.clone())),
                        globals: base.globals.clone(),
                    },
                    ClausePart::Global(g) => {
                        let mut globals = base.globals.clone();
                        push_global(&mut globals, g.clone());
                        DClause { local: base.local.clone(), globals }
                    }
                };
                if !next.contains(&merged) {
                    next.push(merged);
                }
            }
        }
        acc = next;
    }
    acc
}

/// Rewrites a formula without `<u>`, `\/`, or dep atoms into the requested
/// box form. The result is equivalent to the input in Kripke semantics.
pub fn to_box_form(f: &Formula, polarity: Polarity) -> Result<BoxForm, TransformError> {
    reject("box-form conversion", f, true, false, false)?;
    let clauses = match polarity {
        Polarity::Conjunctive => cform(f)
            .into_iter()
            .map(|c| BoxClause { local: c.local, globals: c.globals })
            .collect(),
        Polarity::Disjunctive => dform(f)
            .into_iter()
            .map(|c| BoxClause { local: c.local, globals: c.global.into_iter().collect() })
            .collect(),
    };
    Ok(BoxForm { polarity, clauses })
}

/// A set of closed clauses; each inner list `[g1, ..., gn]` stands for
/// `[u]g1 | ... | [u]gn`. The set is valid in a model exactly when every
/// clause is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedClauseSet {
    pub clauses: Vec<Vec<Formula>>,
}

impl ClosedClauseSet {
    /// `[u]g1 | ... | [u]gn` for one clause.
    pub fn clause_formula(clause: &[Formula]) -> Formula {
        Formula::or_all(clause.iter().cloned().map(Formula::ubox).collect())
    }

    pub fn formulas(&self) -> Vec<Formula> {
        self.clauses.iter().map(|c| Self::clause_formula(c)).collect()
    }

    /// The conjunction of all clause formulas.
    pub fn to_formula(&self) -> Formula {
        Formula::and_all(self.formulas())
    }
}

/// Converts a formula without `<u>`, `\/`, or dep atoms into closed
/// clauses with the same valid models: take the conjunctive box form and
/// push each clause's local part under the universal box.
pub fn to_closed_clauses(f: &Formula) -> Result<ClosedClauseSet, TransformError> {
    reject("box-form conversion", f, true, false, false)?;
    let mut clauses: Vec<Vec<Formula>> = Vec::new();
    for c in cform(f) {
        let mut clause = Vec::new();
        if let Some(l) = c.local {
            clause.push(l);
        }
        for g in c.globals {
            if !clause.contains(&g) {
                clause.push(g);
            }
        }
        if !clauses.contains(&clause) {
            clauses.push(clause);
        }
    }
    Ok(ClosedClauseSet { clauses })
}

/// Team-disjunction normal form: a list `[g1, ..., gn]` of plain ML
/// formulas whose team disjunction is team-equivalent to the input. Team
/// disjunction commutes upward through `&`, `|`, `<>`, and `[]`.
pub fn to_idis_normal_form(f: &Formula) -> Result<Vec<Formula>, TransformError> {
    reject("team-disjunction normal form", f, false, true, false)?;
    Ok(idis_nf(f))
}

fn push_unique(out: &mut Vec<Formula>, f: Formula) {
    if !out.contains(&f) {
        out.push(f);
    }
}

fn idis_nf(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => vec![f.clone()],
        Formula::Idis(l, r) => {
            let mut out = idis_nf(l);
            for g in idis_nf(r) {
                push_unique(&mut out, g);
            }
            out
        }
        Formula::And(l, r) => {
            let (ls, rs) = (idis_nf(l), idis_nf(r));
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for a in &ls {
                for b in &rs {
                    push_unique(&mut out, Formula::and(a.clone(), b.clone()));
                }
            }
            out
        }
        Formula::Or(l, r) => {
            let (ls, rs) = (idis_nf(l), idis_nf(r));
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for a in &ls {
                for b in &rs {
                    push_unique(&mut out, Formula::or(a.clone(), b.clone()));
                }
            }
            out
        }
        Formula::Dia(b) => idis_nf(b).into_iter().map(Formula::dia).collect(),
        Formula::Box_(b) => idis_nf(b).into_iter().map(Formula::box_).collect(),
        Formula::UBox(_) | Formula::UDia(_) | Formula::Dep { .. } => {
            unreachable!("rejected before conversion")
        }
    }
}

/// The closed clause with the same valid models as a team-disjunction
/// formula: team validity of `g1 \/ ... \/ gn` equals Kripke validity of
/// `[u]g1 | ... | [u]gn`.
pub fn idis_to_clause(f: &Formula) -> Result<Vec<Formula>, TransformError> {
    to_idis_normal_form(f)
}

/// The reverse bridge: Kripke validity of `[u]g1 | ... | [u]gn` equals team
/// validity of `g1 \/ ... \/ gn`.
pub fn clause_to_idis(clause: &[Formula]) -> Result<Formula, TransformError> {
    if clause.is_empty() {
        return Err(TransformError::EmptyClause);
    }
    if clause.iter().any(|g| !g.is_ml()) {
        return Err(TransformError::NotMlClause);
    }
    Ok(Formula::idis_all(clause.to_vec()))
}

/// Deterministic supply of reserved proposition symbols.
#[derive(Debug, Clone, Default)]
pub struct FreshSupply {
    next: u32,
}

impl FreshSupply {
    pub fn new() -> FreshSupply {
        FreshSupply::default()
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("{FRESH_PREFIX}{}", self.next)
    }
}

fn biconditional(name: &str, theta: &Formula) -> Formula {
    let neg_theta = negate(theta).expect("dep bodies are ML");
    Formula::and(
        Formula::or(Formula::neg_atom(name), theta.clone()),
        Formula::or(neg_theta, Formula::atom(name)),
    )
}

/// Flattens compound dependence atoms into atomic ones over fresh
/// propositions. The output contains only atomic dep atoms and has the same
/// valid frames as the input; model-level equivalence is not claimed.
///
/// Each compound `dep(t1, ..., tn; t)` becomes `guard -> dep(q1, ..., qn; q)`
/// with one fresh symbol per body formula (target last) and a guard pinning
/// `qj <-> tj` at every point reachable within the atom's modal depth.
pub fn emdl_to_mdl(f: &Formula, fresh: &mut FreshSupply) -> Result<Formula, TransformError> {
    reject("dependence-atom flattening", f, false, false, true)?;
    if let Some(p) = f.propositions().iter().find(|p| p.starts_with(FRESH_PREFIX)) {
        return Err(TransformError::FreshCollision(p.clone()));
    }
    Ok(flatten_deps(f, fresh))
}

fn flatten_deps(f: &Formula, fresh: &mut FreshSupply) -> Formula {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => f.clone(),
        Formula::And(l, r) => Formula::and(flatten_deps(l, fresh), flatten_deps(r, fresh)),
        Formula::Or(l, r) => Formula::or(flatten_deps(l, fresh), flatten_deps(r, fresh)),
        Formula::Dia(b) => Formula::dia(flatten_deps(b, fresh)),
        Formula::Box_(b) => Formula::box_(flatten_deps(b, fresh)),
        Formula::Dep { args, target } => {
            let atomic = args.iter().all(|a| matches!(a, Formula::Atom(_)))
                && matches!(**target, Formula::Atom(_));
            if atomic {
                return f.clone();
            }
            let depth = f.modal_depth();
            let mut bodies: Vec<&Formula> = args.iter().collect();
            bodies.push(target);
            let names: Vec<String> = bodies.iter().map(|_| fresh.fresh()).collect();
            let base = Formula::and_all(
                names.iter().zip(&bodies).map(|(n, t)| biconditional(n, t)).collect(),
            );
            let mut layers = Vec::with_capacity(depth + 1);
            let mut layer = base;
            for _ in 0..depth {
                layers.push(layer.clone());
                layer = Formula::box_(layer);
            }
            layers.push(layer);
            let guard = Formula::and_all(layers);
            let fresh_args = names[..names.len() - 1].iter().map(Formula::atom).collect();
            let fresh_target = Formula::atom(names[names.len() - 1].clone());
            let atom = Formula::dep(fresh_args, fresh_target);
            Formula::or(negate(&guard).expect("guards are ML"), atom)
        }
        Formula::UBox(_) | Formula::UDia(_) | Formula::Idis(_, _) => {
            unreachable!("rejected before translation")
        }
    }
}

/// Replaces every dependence atom by its team-disjunction definition: split
/// the team by the truth pattern of the arguments and require the target to
/// be constant on each part. Team-equivalent to the input on every model.
pub fn dep_to_idis(f: &Formula) -> Result<Formula, TransformError> {
    reject("dependence-atom elimination", f, false, false, true)?;
    Ok(eliminate_deps(f))
}

fn eliminate_deps(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => f.clone(),
        Formula::And(l, r) => Formula::and(eliminate_deps(l), eliminate_deps(r)),
        Formula::Or(l, r) => Formula::or(eliminate_deps(l), eliminate_deps(r)),
        Formula::Dia(b) => Formula::dia(eliminate_deps(b)),
        Formula::Box_(b) => Formula::box_(eliminate_deps(b)),
        Formula::Dep { args, target } => {
            let constancy =
                Formula::idis((**target).clone(), negate(target).expect("dep bodies are ML"));
            if args.is_empty() {
                return constancy;
            }
            let n = args.len();
            let mut disjuncts = Vec::with_capacity(1 << n);
            for pattern in (0..1u32 << n).rev() {
                let parts: Vec<Formula> = args
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        if pattern & (1 << (n - 1 - i)) != 0 {
                            a.clone()
                        } else {
                            negate(a).expect("dep bodies are ML")
                        }
                    })
                    .collect();
                disjuncts.push(Formula::and(Formula::and_all(parts), constancy.clone()));
            }
            Formula::or_all(disjuncts)
        }
        Formula::UBox(_) | Formula::UDia(_) | Formula::Idis(_, _) => {
            unreachable!("rejected before translation")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::render;
    use crate::parser::parse;
    use crate::testkit::{kripke_equivalent, kripke_validity_agree, team_equivalent, validity_bridge_holds};

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn box_form_examples() {
        let f = p("[](p | [u] q)");
        let bf = to_box_form(&f, Polarity::Conjunctive).unwrap();
        assert_eq!(bf.to_formula(), p("[] p | [u] q"));

        let f = p("<>(p & [u] q)");
        let bf = to_box_form(&f, Polarity::Disjunctive).unwrap();
        assert_eq!(bf.to_formula(), p("<> p & [u] q"));

        for pol in [Polarity::Conjunctive, Polarity::Disjunctive] {
            assert_eq!(to_box_form(&p("p"), pol).unwrap().to_formula(), p("p"));
        }
    }

    #[test]
    fn box_form_handles_closed_only_clauses() {
        // A boxed universal needs a synthesized local part.
        let f = p("[] [u] q");
        let bf = to_box_form(&f, Polarity::Conjunctive).unwrap();
        assert_eq!(bf.to_formula(), p("[](q & ~q) | [u] q"));
        assert!(kripke_equivalent(&f, &bf.to_formula(), 3));

        let f = p("<> [u] q");
        let bf = to_box_form(&f, Polarity::Disjunctive).unwrap();
        assert_eq!(bf.to_formula(), p("<>(q | ~q) & [u] q"));
        assert!(kripke_equivalent(&f, &bf.to_formula(), 3));
    }

    #[test]
    fn box_form_is_kripke_equivalent() {
        let samples = [
            "[]([u] p | q)",
            "<>([u] p & (q | [u] r))",
            "[u](p | [u] q)",
            "[u][u] p",
            "[](p & (q | [u] p)) | <> ~q",
            "[][](p | [u] q)",
            "(p | [u] q) & <>(~p & [u] q)",
        ];
        for s in samples {
            let f = p(s);
            for pol in [Polarity::Conjunctive, Polarity::Disjunctive] {
                let g = to_box_form(&f, pol).unwrap().to_formula();
                assert!(kripke_equivalent(&f, &g, 3), "{s} vs {g} ({pol:?})");
            }
        }
    }

    #[test]
    fn box_form_shape_invariants() {
        let samples = ["[]([u] p | q)", "<>([u] p & (q | [u] r))", "[u](p | [u] q) & <> p"];
        for s in samples {
            let f = p(s);
            let bf = to_box_form(&f, Polarity::Conjunctive).unwrap();
            for c in &bf.clauses {
                assert!(c.local.iter().all(Formula::is_ml));
                assert!(c.globals.iter().all(Formula::is_ml));
                assert!(c.local.is_some() || !c.globals.is_empty());
            }
            let bf = to_box_form(&f, Polarity::Disjunctive).unwrap();
            for c in &bf.clauses {
                assert!(c.globals.len() <= 1, "conjunctive clause with several globals");
                assert!(c.local.is_some() || !c.globals.is_empty());
            }
        }
    }

    #[test]
    fn closed_clause_examples() {
        let cc = to_closed_clauses(&p("~p | [u] p")).unwrap();
        assert_eq!(cc.clauses, vec![vec![p("~p"), p("p")]]);

        let cc = to_closed_clauses(&p("p")).unwrap();
        assert_eq!(cc.clauses, vec![vec![p("p")]]);

        let cc = to_closed_clauses(&p("p & q")).unwrap();
        assert_eq!(cc.clauses, vec![vec![p("p")], vec![p("q")]]);
    }

    #[test]
    fn closed_clauses_preserve_model_validity() {
        let samples = ["~p | [u] p", "p & q", "[](p | [u] q)", "<>(p & [u] q) | q"];
        for s in samples {
            let f = p(s);
            let cc = to_closed_clauses(&f).unwrap();
            assert!(kripke_validity_agree(&f, &cc.to_formula(), 3), "{s}");
        }
    }

    #[test]
    fn idis_normal_form_examples() {
        assert_eq!(
            to_idis_normal_form(&p("[](p \\/ q)")).unwrap(),
            vec![p("[] p"), p("[] q")]
        );
        assert_eq!(to_idis_normal_form(&p("p")).unwrap(), vec![p("p")]);
        assert_eq!(
            to_idis_normal_form(&p("(p \\/ q) & r")).unwrap(),
            vec![p("p & r"), p("q & r")]
        );
    }

    /// Each distribution rule separately, against the team evaluator.
    #[test]
    fn idis_rewrite_rules_are_sound() {
        let atoms = ["p", "~q", "p & q", "<> p"];
        for a in atoms {
            for b in atoms {
                for c in atoms {
                    let (a, b, c) = (p(a), p(b), p(c));
                    let ab = Formula::idis(a.clone(), b.clone());
                    let cases = [
                        // (a ⊘ b) & c  =  (a & c) ⊘ (b & c)
                        (
                            Formula::and(ab.clone(), c.clone()),
                            Formula::idis(
                                Formula::and(a.clone(), c.clone()),
                                Formula::and(b.clone(), c.clone()),
                            ),
                        ),
                        // (a ⊘ b) | c  =  (a | c) ⊘ (b | c)
                        (
                            Formula::or(ab.clone(), c.clone()),
                            Formula::idis(
                                Formula::or(a.clone(), c.clone()),
                                Formula::or(b.clone(), c.clone()),
                            ),
                        ),
                        // <>(a ⊘ b)  =  <>a ⊘ <>b
                        (
                            Formula::dia(ab.clone()),
                            Formula::idis(Formula::dia(a.clone()), Formula::dia(b.clone())),
                        ),
                        // [](a ⊘ b)  =  []a ⊘ []b
                        (
                            Formula::box_(ab.clone()),
                            Formula::idis(Formula::box_(a.clone()), Formula::box_(b.clone())),
                        ),
                    ];
                    for (lhs, rhs) in cases {
                        assert!(
                            team_equivalent(&lhs, &rhs, 2),
                            "{} vs {}",
                            render(&lhs),
                            render(&rhs)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn idis_normal_form_is_team_equivalent() {
        let samples = [
            "[](p \\/ q)",
            "<>(p \\/ ~q) & q",
            "((p \\/ q) | r) \\/ ~p",
            "[](p \\/ q) & <>(q \\/ r)",
        ];
        for s in samples {
            let f = p(s);
            let nf = to_idis_normal_form(&f).unwrap();
            assert!(nf.iter().all(Formula::is_ml));
            let g = Formula::idis_all(nf);
            assert!(team_equivalent(&f, &g, 2), "{s}");
        }
    }

    #[test]
    fn clause_bridge_examples() {
        assert_eq!(idis_to_clause(&p("p \\/ q")).unwrap(), vec![p("p"), p("q")]);
        assert_eq!(idis_to_clause(&p("p")).unwrap(), vec![p("p")]);
        assert_eq!(
            idis_to_clause(&p("[](p \\/ q)")).unwrap(),
            vec![p("[] p"), p("[] q")]
        );

        assert_eq!(clause_to_idis(&[p("p"), p("q")]).unwrap(), p("p \\/ q"));
        assert_eq!(clause_to_idis(&[p("p")]).unwrap(), p("p"));
        assert_eq!(
            clause_to_idis(&[p("[] p"), p("<> q")]).unwrap(),
            p("[] p \\/ <> q")
        );
        assert_eq!(clause_to_idis(&[]), Err(TransformError::EmptyClause));
        assert_eq!(
            clause_to_idis(&[p("[u] p")]),
            Err(TransformError::NotMlClause)
        );
    }

    /// Universal-box validity of a formula matches full-team satisfaction,
    /// and the clause bridges preserve model validity in both directions.
    #[test]
    fn validity_bridges() {
        let samples = ["p \\/ q", "[](p \\/ q)", "(p \\/ q) & (q | ~p)"];
        for s in samples {
            let f = p(s);
            let clause = idis_to_clause(&f).unwrap();
            let clause_formula = ClosedClauseSet::clause_formula(&clause);
            let back = clause_to_idis(&clause).unwrap();
            assert!(validity_bridge_holds(&f, &clause_formula, 3), "{s}");
            assert!(validity_bridge_holds(&back, &clause_formula, 3), "{s} reversed");
        }
        // Universal box against the full team.
        for s in ["p", "<> p", "[] p | q"] {
            let f = p(s);
            assert!(validity_bridge_holds(&f, &Formula::ubox(f.clone()), 3), "{s}");
        }
    }

    #[test]
    fn emdl_to_mdl_examples() {
        let mut fresh = FreshSupply::new();
        let f = p("dep(p; q)");
        assert_eq!(emdl_to_mdl(&f, &mut fresh).unwrap(), f);

        let mut fresh = FreshSupply::new();
        let f = p("dep(<> p; q)");
        let got = emdl_to_mdl(&f, &mut fresh).unwrap();

        let bic1 = biconditional("_f1", &p("<> p"));
        let bic2 = biconditional("_f2", &p("q"));
        let base = Formula::and(bic1, bic2);
        let guard = Formula::and(base.clone(), Formula::box_(base));
        let expected = Formula::or(
            negate(&guard).unwrap(),
            Formula::dep(vec![Formula::atom("_f1")], Formula::atom("_f2")),
        );
        assert_eq!(got, expected);
        assert_eq!(got.classify(), crate::Fragment::Mdl);
    }

    #[test]
    fn emdl_to_mdl_rejects_collisions_and_wrong_fragments() {
        let mut fresh = FreshSupply::new();
        let clash = Formula::and(Formula::atom("_f1"), p("dep(<> p; q)"));
        assert_eq!(
            emdl_to_mdl(&clash, &mut fresh),
            Err(TransformError::FreshCollision("_f1".into()))
        );
        assert!(emdl_to_mdl(&p("p \\/ q"), &mut fresh).is_err());
        assert!(emdl_to_mdl(&p("[u] p"), &mut fresh).is_err());
    }

    #[test]
    fn dep_to_idis_examples() {
        assert_eq!(dep_to_idis(&p("dep(; q)")).unwrap(), p("q \\/ ~q"));
        assert_eq!(
            dep_to_idis(&p("dep(p; q)")).unwrap(),
            p("(p & (q \\/ ~q)) | (~p & (q \\/ ~q))")
        );
        let f = p("[](p | q) & <> ~p");
        assert_eq!(dep_to_idis(&f).unwrap(), f);
    }

    #[test]
    fn dep_to_idis_is_team_equivalent() {
        let samples = [
            "dep(; q)",
            "dep(p; q)",
            "dep(p, q; p)",
            "dep(<> p; q)",
            "[] dep(p; q)",
            "dep(p; q) | ~p",
        ];
        for s in samples {
            let f = p(s);
            let g = dep_to_idis(&f).unwrap();
            assert!(team_equivalent(&f, &g, 2), "{s} vs {}", render(&g));
        }
    }
}
