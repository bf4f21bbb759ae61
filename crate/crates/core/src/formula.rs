//! Formula AST shared by every logic in the workbench.
//!
//! Formulas are kept in negation normal form: negation exists only as
//! [`Formula::NegAtom`]. General negation is available through [`negate`],
//! which pushes a conceptual outer negation down to the literals.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Reserved prefix for tool-generated proposition symbols.
///
/// User-facing syntax cannot produce symbols with this prefix, which is what
/// makes the fresh-symbol supply of `transform::emdl_to_mdl` collision-free.
pub const FRESH_PREFIX: &str = "_f";

/// Negation-normal-form formula over all supported connectives.
///
/// `Dia`/`Box` are the accessibility modalities, `UDia`/`UBox` quantify over
/// the whole domain, `Idis` is team-level disjunction, and `Dep` is the
/// dependence atom `dep(args; target)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Dia(Box<Formula>),
    Box_(Box<Formula>),
    UDia(Box<Formula>),
    UBox(Box<Formula>),
    Idis(Box<Formula>, Box<Formula>),
    Dep { args: Vec<Formula>, target: Box<Formula> },
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn neg_atom(name: impl Into<String>) -> Self {
        Formula::NegAtom(name.into())
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn dia(f: Formula) -> Self {
        Formula::Dia(Box::new(f))
    }

    pub fn box_(f: Formula) -> Self {
        Formula::Box_(Box::new(f))
    }

    pub fn udia(f: Formula) -> Self {
        Formula::UDia(Box::new(f))
    }

    pub fn ubox(f: Formula) -> Self {
        Formula::UBox(Box::new(f))
    }

    pub fn idis(l: Formula, r: Formula) -> Self {
        Formula::Idis(Box::new(l), Box::new(r))
    }

    pub fn dep(args: Vec<Formula>, target: Formula) -> Self {
        Formula::Dep { args, target: Box::new(target) }
    }

    /// Conjunction of a nonempty list, folded left-associatively.
    pub fn and_all(mut parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "and_all needs at least one conjunct");
        let first = parts.remove(0);
        parts.into_iter().fold(first, Formula::and)
    }

    /// Disjunction of a nonempty list, folded left-associatively.
    pub fn or_all(mut parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "or_all needs at least one disjunct");
        let first = parts.remove(0);
        parts.into_iter().fold(first, Formula::or)
    }

    /// Team disjunction of a nonempty list, folded left-associatively.
    pub fn idis_all(mut parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "idis_all needs at least one disjunct");
        let first = parts.remove(0);
        parts.into_iter().fold(first, Formula::idis)
    }

    /// True iff the formula uses only the base modal-logic connectives.
    pub fn is_ml(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => true,
            Formula::And(l, r) | Formula::Or(l, r) => l.is_ml() && r.is_ml(),
            Formula::Dia(b) | Formula::Box_(b) => b.is_ml(),
            Formula::UDia(_) | Formula::UBox(_) | Formula::Idis(_, _) | Formula::Dep { .. } => {
                false
            }
        }
    }

    /// Maximum nesting of `Dia`/`Box` along any path. The universal
    /// modalities and team connectives do not add to the count.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => 0,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Idis(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
            Formula::Dia(b) | Formula::Box_(b) => b.modal_depth() + 1,
            Formula::UDia(b) | Formula::UBox(b) => b.modal_depth(),
            Formula::Dep { args, target } => args
                .iter()
                .map(Formula::modal_depth)
                .max()
                .unwrap_or(0)
                .max(target.modal_depth()),
        }
    }

    /// The set of proposition symbols occurring in the formula.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_propositions(&mut out);
        out
    }

    fn collect_propositions(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) | Formula::NegAtom(p) => {
                out.insert(p.clone());
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Idis(l, r) => {
                l.collect_propositions(out);
                r.collect_propositions(out);
            }
            Formula::Dia(b) | Formula::Box_(b) | Formula::UDia(b) | Formula::UBox(b) => {
                b.collect_propositions(out);
            }
            Formula::Dep { args, target } => {
                for a in args {
                    a.collect_propositions(out);
                }
                target.collect_propositions(out);
            }
        }
    }

    /// Number of AST nodes; dependence atoms count their arguments.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => 1,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Idis(l, r) => {
                1 + l.size() + r.size()
            }
            Formula::Dia(b) | Formula::Box_(b) | Formula::UDia(b) | Formula::UBox(b) => {
                1 + b.size()
            }
            Formula::Dep { args, target } => {
                1 + args.iter().map(Formula::size).sum::<usize>() + target.size()
            }
        }
    }

    /// Classifies the formula into the least logic containing it.
    pub fn classify(&self) -> Fragment {
        let mut feats = Features::default();
        self.collect_features(&mut feats);
        feats.fragment()
    }

    fn collect_features(&self, feats: &mut Features) {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_features(feats);
                r.collect_features(feats);
            }
            Formula::Idis(l, r) => {
                feats.idis = true;
                l.collect_features(feats);
                r.collect_features(feats);
            }
            Formula::Dia(b) | Formula::Box_(b) => b.collect_features(feats),
            Formula::UBox(b) => {
                feats.ubox = true;
                b.collect_features(feats);
            }
            Formula::UDia(b) => {
                feats.udia = true;
                b.collect_features(feats);
            }
            Formula::Dep { args, target } => {
                let atomic = args.iter().all(|a| matches!(a, Formula::Atom(_)))
                    && matches!(**target, Formula::Atom(_));
                if atomic {
                    feats.dep_atomic = true;
                } else {
                    feats.dep_compound = true;
                }
                // Dep bodies are ML by construction, no features inside.
            }
        }
    }
}

#[derive(Default)]
struct Features {
    ubox: bool,
    udia: bool,
    idis: bool,
    dep_atomic: bool,
    dep_compound: bool,
}

impl Features {
    fn fragment(&self) -> Fragment {
        let ubox_family = self.ubox || self.udia;
        let dep_family = self.dep_atomic || self.dep_compound;
        let families = usize::from(ubox_family) + usize::from(self.idis) + usize::from(dep_family);
        match families {
            0 => Fragment::Ml,
            1 if ubox_family => {
                if self.udia {
                    Fragment::MlUBox
                } else {
                    Fragment::MlUBoxPos
                }
            }
            1 if self.idis => Fragment::MlIdis,
            1 => {
                if self.dep_compound {
                    Fragment::Emdl
                } else {
                    Fragment::Mdl
                }
            }
            _ => Fragment::Mixed,
        }
    }
}

/// The syntactic fragments the workbench distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fragment {
    Ml,
    MlUBoxPos,
    MlUBox,
    MlIdis,
    Mdl,
    Emdl,
    Mixed,
}

impl Fragment {
    /// Syntactic inclusion order. `Mixed` sits above everything.
    pub fn le(self, other: Fragment) -> bool {
        use Fragment::*;
        if self == other || other == Mixed {
            return true;
        }
        match (self, other) {
            (Ml, _) => true,
            (MlUBoxPos, MlUBox) => true,
            (Mdl, Emdl) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Fragment::Ml => "ML",
            Fragment::MlUBoxPos => "ML([u]+)",
            Fragment::MlUBox => "ML([u])",
            Fragment::MlIdis => "ML(\\/)",
            Fragment::Mdl => "MDL",
            Fragment::Emdl => "EMDL",
            Fragment::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Error raised when negation meets a connective it is not defined for.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("negation is not defined over `{connective}`")]
pub struct NegationError {
    pub connective: &'static str,
}

/// Pushes the negation of `f` down to the literals.
///
/// Duals are exchanged pairwise: `&`/`|`, `[]`/`<>`, `[u]`/`<u>`, atom and
/// negated atom. Team disjunction and dependence atoms have no negation.
pub fn negate(f: &Formula) -> Result<Formula, NegationError> {
    match f {
        Formula::Atom(p) => Ok(Formula::NegAtom(p.clone())),
        Formula::NegAtom(p) => Ok(Formula::Atom(p.clone())),
        Formula::And(l, r) => Ok(Formula::or(negate(l)?, negate(r)?)),
        Formula::Or(l, r) => Ok(Formula::and(negate(l)?, negate(r)?)),
        Formula::Dia(b) => Ok(Formula::box_(negate(b)?)),
        Formula::Box_(b) => Ok(Formula::dia(negate(b)?)),
        Formula::UDia(b) => Ok(Formula::ubox(negate(b)?)),
        Formula::UBox(b) => Ok(Formula::udia(negate(b)?)),
        Formula::Idis(_, _) => Err(NegationError { connective: "\\/" }),
        Formula::Dep { .. } => Err(NegationError { connective: "dep" }),
    }
}

// Rendering. Precedence levels, loose to tight: team disjunction, `|`, `&`,
// prefix operators and atoms. Binary operators print left-associatively, so
// parsing the output reproduces the tree exactly.

const LVL_IDIS: u8 = 1;
const LVL_OR: u8 = 2;
const LVL_AND: u8 = 3;
const LVL_PREFIX: u8 = 4;

impl Formula {
    fn level(&self) -> u8 {
        match self {
            Formula::Idis(_, _) => LVL_IDIS,
            Formula::Or(_, _) => LVL_OR,
            Formula::And(_, _) => LVL_AND,
            _ => LVL_PREFIX,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let lvl = self.level();
        if lvl < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::NegAtom(p) => write!(f, "~{p}"),
            Formula::And(l, r) => {
                l.fmt_at(f, LVL_AND)?;
                write!(f, " & ")?;
                r.fmt_at(f, LVL_AND + 1)
            }
            Formula::Or(l, r) => {
                l.fmt_at(f, LVL_OR)?;
                write!(f, " | ")?;
                r.fmt_at(f, LVL_OR + 1)
            }
            Formula::Idis(l, r) => {
                l.fmt_at(f, LVL_IDIS)?;
                write!(f, " \\/ ")?;
                r.fmt_at(f, LVL_IDIS + 1)
            }
            Formula::Dia(b) => {
                write!(f, "<> ")?;
                b.fmt_at(f, LVL_PREFIX)
            }
            Formula::Box_(b) => {
                write!(f, "[] ")?;
                b.fmt_at(f, LVL_PREFIX)
            }
            Formula::UDia(b) => {
                write!(f, "<u> ")?;
                b.fmt_at(f, LVL_PREFIX)
            }
            Formula::UBox(b) => {
                write!(f, "[u] ")?;
                b.fmt_at(f, LVL_PREFIX)
            }
            Formula::Dep { args, target } => {
                write!(f, "dep(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_at(f, 0)?;
                }
                write!(f, "; ")?;
                target.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Canonical concrete syntax for a formula; `parse` inverts it.
pub fn render(f: &Formula) -> String {
    f.to_string()
}
