//! Test-only helpers: small-scale frame enumeration and brute-force
//! equivalence checks, written against the internal engine so sweeps over
//! all (frame, valuation) pairs stay fast inside unit tests.

use crate::eval::{self, Compiled, EvalConfig, TeamCtx, TeamScratch};
use crate::formula::Formula;
use crate::kripke::Frame;

/// All labeled frames with 1..=max points, relation bits ascending.
pub(crate) fn frames_up_to(max: usize) -> Vec<Frame> {
    let mut out = Vec::new();
    for n in 1..=max {
        let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        for rel_bits in 0u64..1 << (n * n) {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rel_bits & (1 << (i * n + j)) != 0 {
                        edges.push((i, j));
                    }
                }
            }
            out.push(Frame::new(names.clone(), edges).unwrap());
        }
    }
    out
}

/// Compiled formula plus the mapping of its propositions into a shared
/// (sorted) union vocabulary.
struct Side {
    c: Compiled,
    prop_slot: Vec<usize>,
    val: Vec<u64>,
}

impl Side {
    fn new(f: &Formula, union: &[String]) -> Side {
        let c = Compiled::new(f);
        let prop_slot = c
            .props
            .iter()
            .map(|p| union.iter().position(|u| u == p).unwrap())
            .collect();
        let val = vec![0; c.props.len()];
        Side { c, prop_slot, val }
    }

    fn load_val(&mut self, vbits: u64, n: usize) {
        let mask = (1u64 << n) - 1;
        for (k, &slot) in self.prop_slot.iter().enumerate() {
            self.val[k] = (vbits >> (slot * n)) & mask;
        }
    }
}

fn union_props(f: &Formula, g: &Formula) -> Vec<String> {
    f.propositions().union(&g.propositions()).cloned().collect()
}

/// Pointwise Kripke equivalence over every model with up to `max` points
/// and every valuation of the shared propositions.
pub(crate) fn kripke_equivalent(f: &Formula, g: &Formula, max: usize) -> bool {
    assert!(eval::first_non_kripke(f).is_none() && eval::first_non_kripke(g).is_none());
    let union = union_props(f, g);
    let mut lhs = Side::new(f, &union);
    let mut rhs = Side::new(g, &union);
    let mut sat_l = Vec::new();
    let mut sat_r = Vec::new();
    for frame in frames_up_to(max) {
        let n = frame.len();
        for vbits in 0u64..1 << (union.len() * n) {
            lhs.load_val(vbits, n);
            rhs.load_val(vbits, n);
            eval::kripke_sat_sets(&lhs.c, &frame, &lhs.val, &mut sat_l);
            eval::kripke_sat_sets(&rhs.c, &frame, &rhs.val, &mut sat_r);
            if sat_l[lhs.c.root as usize] != sat_r[rhs.c.root as usize] {
                return false;
            }
        }
    }
    true
}

/// Team equivalence over every model with up to `max` points, every
/// valuation, and every team.
pub(crate) fn team_equivalent(f: &Formula, g: &Formula, max: usize) -> bool {
    assert!(eval::first_non_team(f).is_none() && eval::first_non_team(g).is_none());
    let union = union_props(f, g);
    let mut lhs = Side::new(f, &union);
    let mut rhs = Side::new(g, &union);
    let cfg = EvalConfig::default();
    for frame in frames_up_to(max) {
        let n = frame.len();
        let mut scratch_l = TeamScratch::new(&lhs.c, &frame);
        let mut scratch_r = TeamScratch::new(&rhs.c, &frame);
        for vbits in 0u64..1 << (union.len() * n) {
            lhs.load_val(vbits, n);
            rhs.load_val(vbits, n);
            scratch_l.reset();
            scratch_r.reset();
            let ctx_l = TeamCtx { c: &lhs.c, frame: &frame, val: &lhs.val, cfg };
            let ctx_r = TeamCtx { c: &rhs.c, frame: &frame, val: &rhs.val, cfg };
            for team in 0u64..1 << n {
                if eval::team_eval(&ctx_l, &mut scratch_l, lhs.c.root, team)
                    != eval::team_eval(&ctx_r, &mut scratch_r, rhs.c.root, team)
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Kripke model-validity agreement (not pointwise equivalence) over every
/// model with up to `max` points.
pub(crate) fn kripke_validity_agree(f: &Formula, g: &Formula, max: usize) -> bool {
    assert!(eval::first_non_kripke(f).is_none() && eval::first_non_kripke(g).is_none());
    let union = union_props(f, g);
    let mut lhs = Side::new(f, &union);
    let mut rhs = Side::new(g, &union);
    let mut sat_l = Vec::new();
    let mut sat_r = Vec::new();
    for frame in frames_up_to(max) {
        let n = frame.len();
        let full = frame.full_mask();
        for vbits in 0u64..1 << (union.len() * n) {
            lhs.load_val(vbits, n);
            rhs.load_val(vbits, n);
            eval::kripke_sat_sets(&lhs.c, &frame, &lhs.val, &mut sat_l);
            eval::kripke_sat_sets(&rhs.c, &frame, &rhs.val, &mut sat_r);
            if (sat_l[lhs.c.root as usize] == full) != (sat_r[rhs.c.root as usize] == full) {
                return false;
            }
        }
    }
    true
}

/// Model-validity agreement between a team-evaluated formula and a
/// Kripke-evaluated one, over every model with up to `max` points.
pub(crate) fn validity_bridge_holds(team_side: &Formula, kripke_side: &Formula, max: usize) -> bool {
    assert!(eval::first_non_team(team_side).is_none());
    assert!(eval::first_non_kripke(kripke_side).is_none());
    let union = union_props(team_side, kripke_side);
    let mut lhs = Side::new(team_side, &union);
    let mut rhs = Side::new(kripke_side, &union);
    let cfg = EvalConfig::default();
    let mut sat_r = Vec::new();
    for frame in frames_up_to(max) {
        let n = frame.len();
        let full = frame.full_mask();
        let mut scratch = TeamScratch::new(&lhs.c, &frame);
        for vbits in 0u64..1 << (union.len() * n) {
            lhs.load_val(vbits, n);
            rhs.load_val(vbits, n);
            scratch.reset();
            let ctx = TeamCtx { c: &lhs.c, frame: &frame, val: &lhs.val, cfg };
            let team_valid = eval::team_eval(&ctx, &mut scratch, lhs.c.root, full);
            eval::kripke_sat_sets(&rhs.c, &frame, &rhs.val, &mut sat_r);
            let kripke_valid = sat_r[rhs.c.root as usize] == full;
            if team_valid != kripke_valid {
                return false;
            }
        }
    }
    true
}
