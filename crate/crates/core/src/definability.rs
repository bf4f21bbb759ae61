//! Brute-force frame definability: exhaustive frame universes, frame
//! validity and frame classes, closure/reflection audits with replayable
//! counterexamples, and an equivalence oracle over all small models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{self, Compiled, EvalConfig, TeamCtx, TeamScratch};
use crate::formula::{Formula, Fragment};
use crate::frameops::{
    disjoint_union, finitely_generated_subframes, first_bounded_epimorphism, generated_subframe,
    is_isomorphic, ultrafilter_extension, FrameOpsError,
};
use crate::kripke::{Frame, ModelError};

pub const MAX_UNIVERSE_POINTS: usize = 4;

/// Valuation searches run over `2^(props * points)` assignments; beyond
/// this bit width the loop would never finish anyway.
const MAX_VALUATION_BITS: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefinabilityError {
    #[error("frame universes must span 1..={MAX_UNIVERSE_POINTS} points, got {0}")]
    BadUniverse(usize),
    #[error("mixed-fragment formulas have no frame semantics")]
    MixedFragment,
    #[error("{mode} comparison does not support `{construct}`")]
    ModeMismatch { mode: &'static str, construct: &'static str },
    #[error("exhaustive valuation search over {props} propositions and {points} points is too large")]
    ValuationSpaceTooLarge { props: usize, points: usize },
    #[error("replay witness does not match the report: {0}")]
    BadWitness(String),
    #[error(transparent)]
    FrameOps(#[from] FrameOpsError),
    #[error(transparent)]
    Frame(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] crate::parser::ParseError),
}

/// All labeled frames with `1..=max_points` points. Frames of size `k` are
/// enumerated by interpreting a `k*k`-bit integer, ascending, as the
/// relation in row-major order; there are `2^(k*k)` of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameUniverse {
    pub max_points: usize,
}

impl FrameUniverse {
    pub fn new(max_points: usize) -> Result<FrameUniverse, DefinabilityError> {
        if max_points == 0 || max_points > MAX_UNIVERSE_POINTS {
            return Err(DefinabilityError::BadUniverse(max_points));
        }
        Ok(FrameUniverse { max_points })
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (1..=self.max_points).flat_map(|k| {
            let names: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
            (0u64..1 << (k * k)).map(move |bits| frame_from_bits(&names, k, bits))
        })
    }

    pub fn frame_count(&self) -> u64 {
        (1..=self.max_points).map(|k| 1u64 << (k * k)).sum()
    }
}

fn frame_from_bits(names: &[String], k: usize, bits: u64) -> Frame {
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if bits & (1 << (i * k + j)) != 0 {
                edges.push((i, j));
            }
        }
    }
    Frame::new(names.to_vec(), edges).expect("universe frames are well-formed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Semantics {
    Kripke,
    Team,
}

fn semantics_for(f: &Formula) -> Result<Semantics, DefinabilityError> {
    match f.classify() {
        Fragment::Mixed => Err(DefinabilityError::MixedFragment),
        Fragment::Ml | Fragment::MlUBoxPos | Fragment::MlUBox => Ok(Semantics::Kripke),
        Fragment::MlIdis | Fragment::Mdl | Fragment::Emdl => Ok(Semantics::Team),
    }
}

/// A falsifying witness inside one frame: the valuation (bit-packed over
/// the checker's propositions) plus the failing point or team.
#[derive(Clone, Copy, Debug)]
struct Falsification {
    vbits: u64,
    point: Option<usize>,
    team: Option<u64>,
}

/// Reusable frame-validity engine for one formula: quantifies over every
/// valuation of the formula's propositions into the frame's points,
/// dispatching on the formula's semantics.
struct FrameChecker {
    compiled: Compiled,
    semantics: Semantics,
    cfg: EvalConfig,
    val: Vec<u64>,
    sat: Vec<u64>,
}

impl FrameChecker {
    fn new(f: &Formula, cfg: EvalConfig) -> Result<FrameChecker, DefinabilityError> {
        let semantics = semantics_for(f)?;
        let compiled = Compiled::new(f);
        let val = vec![0; compiled.props.len()];
        Ok(FrameChecker { compiled, semantics, cfg, val, sat: Vec::new() })
    }

    fn check_size(&self, frame: &Frame) -> Result<(), DefinabilityError> {
        let bits = self.compiled.props.len() * frame.len();
        if bits > MAX_VALUATION_BITS {
            return Err(DefinabilityError::ValuationSpaceTooLarge {
                props: self.compiled.props.len(),
                points: frame.len(),
            });
        }
        Ok(())
    }

    fn load_val(&mut self, vbits: u64, n: usize) {
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        for (k, slot) in self.val.iter_mut().enumerate() {
            *slot = (vbits >> (k * n)) & mask;
        }
    }

    /// Validity under one valuation; on failure reports the failing point
    /// (Kripke) or the full team (team semantics, by downward closure).
    fn valid_under(
        &mut self,
        frame: &Frame,
        scratch: &mut TeamScratch,
    ) -> (bool, Option<usize>, Option<u64>) {
        let full = frame.full_mask();
        match self.semantics {
            Semantics::Kripke => {
                eval::kripke_sat_sets(&self.compiled, frame, &self.val, &mut self.sat);
                let sat = self.sat[self.compiled.root as usize];
                if sat == full {
                    (true, None, None)
                } else {
                    let point = (!sat & full).trailing_zeros() as usize;
                    (false, Some(point), None)
                }
            }
            Semantics::Team => {
                scratch.reset();
                let ctx =
                    TeamCtx { c: &self.compiled, frame, val: &self.val, cfg: self.cfg };
                if eval::team_eval(&ctx, scratch, self.compiled.root, full) {
                    (true, None, None)
                } else {
                    (false, None, Some(full))
                }
            }
        }
    }

    fn find_falsification(
        &mut self,
        frame: &Frame,
    ) -> Result<Option<Falsification>, DefinabilityError> {
        self.check_size(frame)?;
        let n = frame.len();
        let bits = self.compiled.props.len() * n;
        let mut scratch = TeamScratch::new(&self.compiled, frame);
        for vbits in 0u64..1 << bits {
            self.load_val(vbits, n);
            let (ok, point, team) = self.valid_under(frame, &mut scratch);
            if !ok {
                return Ok(Some(Falsification { vbits, point, team }));
            }
        }
        Ok(None)
    }

    fn frame_valid(&mut self, frame: &Frame) -> Result<bool, DefinabilityError> {
        Ok(self.find_falsification(frame)?.is_none())
    }

    /// The witness valuation as point-name lists, for reports.
    fn valuation_names(&self, frame: &Frame, vbits: u64) -> BTreeMap<String, Vec<String>> {
        let n = frame.len();
        let mask = (1u64 << n) - 1;
        self.compiled
            .props
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let bitsk = (vbits >> (k * n)) & mask;
                let points =
                    (0..n).filter(|i| bitsk & (1 << i) != 0).map(|i| frame.name(i).to_string());
                (p.clone(), points.collect())
            })
            .collect()
    }
}

/// Frame validity: satisfaction under every valuation of the formula's
/// propositions, at every point (Kripke fragments) or by every team
/// (team fragments; the full team suffices by downward closure).
pub fn frame_valid(frame: &Frame, f: &Formula) -> Result<bool, DefinabilityError> {
    FrameChecker::new(f, EvalConfig::default())?.frame_valid(frame)
}

/// The frames of the universe validating `f`, in enumeration order.
pub fn frame_class(f: &Formula, u: FrameUniverse) -> Result<Vec<Frame>, DefinabilityError> {
    let mut checker = FrameChecker::new(f, EvalConfig::default())?;
    let mut out = Vec::new();
    for frame in u.frames() {
        if checker.frame_valid(&frame)? {
            out.push(frame);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditProperty {
    GenSubframeClosed,
    DisjointUnionClosed,
    BoundedMorphicImageClosed,
    ReflectsFinGenSubframes,
    ReflectsUltrafilterExt,
}

impl AuditProperty {
    pub const ALL: [AuditProperty; 5] = [
        AuditProperty::GenSubframeClosed,
        AuditProperty::DisjointUnionClosed,
        AuditProperty::BoundedMorphicImageClosed,
        AuditProperty::ReflectsFinGenSubframes,
        AuditProperty::ReflectsUltrafilterExt,
    ];
}

/// A replayable counterexample: the frames involved, the construction data,
/// and a falsifying model on the frame that breaks the property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditWitness {
    /// Frames that validate the formula (or, for reflection audits, the
    /// frame that fails it).
    pub base_frames: Vec<Frame>,
    /// The constructed frame the property is about.
    pub derived_frame: Frame,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub morphism: Option<BTreeMap<String, String>>,
    /// Falsifying valuation on the frame named by the property
    /// (the derived frame for closure audits, the base frame for
    /// reflection audits).
    pub valuation: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub team: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AuditVerdict {
    /// Property held everywhere; `bounded` marks a disjoint-union audit
    /// that had to skip pairs whose union exceeds the universe.
    Pass { bounded: bool },
    Counterexample { witness: AuditWitness },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub property: AuditProperty,
    pub formula: String,
    pub max_points: usize,
    pub verdict: AuditVerdict,
}

fn falsification_witness(
    checker: &FrameChecker,
    frame: &Frame,
    fals: Falsification,
) -> (BTreeMap<String, Vec<String>>, Option<String>, Option<Vec<String>>) {
    let valuation = checker.valuation_names(frame, fals.vbits);
    let point = fals.point.map(|w| frame.name(w).to_string());
    let team = fals.team.map(|mask| {
        (0..frame.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| frame.name(i).to_string())
            .collect()
    });
    (valuation, point, team)
}

/// Audits one closure/reflection property of the formula's frame class
/// over an exhaustive universe. Counterexamples carry a replayable witness.
pub fn audit(
    property: AuditProperty,
    f: &Formula,
    u: FrameUniverse,
) -> Result<AuditReport, DefinabilityError> {
    let mut checker = FrameChecker::new(f, EvalConfig::default())?;
    let frames: Vec<Frame> = u.frames().collect();
    let mut valid = Vec::with_capacity(frames.len());
    for frame in &frames {
        valid.push(checker.frame_valid(frame)?);
    }
    let report = |verdict| {
        Ok(AuditReport {
            property,
            formula: crate::formula::render(f),
            max_points: u.max_points,
            verdict,
        })
    };
    let counterexample = |witness| {
        AuditVerdict::Counterexample { witness }
    };

    match property {
        AuditProperty::GenSubframeClosed => {
            for (frame, &ok) in frames.iter().zip(&valid) {
                if !ok {
                    continue;
                }
                let n = frame.len();
                let mut seen = Vec::new();
                for seed in 1u64..1 << n {
                    let sub = generated_subframe(frame, seed)?;
                    if seen.contains(&sub) {
                        continue;
                    }
                    if let Some(fals) = checker.find_falsification(&sub)? {
                        let (valuation, point, team) =
                            falsification_witness(&checker, &sub, fals);
                        let seed_names = (0..n)
                            .filter(|i| seed & (1 << i) != 0)
                            .map(|i| frame.name(i).to_string())
                            .collect();
                        return report(counterexample(AuditWitness {
                            base_frames: vec![frame.clone()],
                            derived_frame: sub,
                            seed: Some(seed_names),
                            morphism: None,
                            valuation,
                            point,
                            team,
                        }));
                    }
                    seen.push(sub);
                }
            }
            report(AuditVerdict::Pass { bounded: false })
        }
        AuditProperty::DisjointUnionClosed => {
            let mut bounded = false;
            for i in 0..frames.len() {
                if !valid[i] {
                    continue;
                }
                for j in i..frames.len() {
                    if !valid[j] {
                        continue;
                    }
                    if frames[i].len() + frames[j].len() > u.max_points {
                        bounded = true;
                        continue;
                    }
                    let union = disjoint_union(&[frames[i].clone(), frames[j].clone()])?;
                    if let Some(fals) = checker.find_falsification(&union)? {
                        let (valuation, point, team) =
                            falsification_witness(&checker, &union, fals);
                        return report(counterexample(AuditWitness {
                            base_frames: vec![frames[i].clone(), frames[j].clone()],
                            derived_frame: union,
                            seed: None,
                            morphism: None,
                            valuation,
                            point,
                            team,
                        }));
                    }
                }
            }
            report(AuditVerdict::Pass { bounded })
        }
        AuditProperty::BoundedMorphicImageClosed => {
            for (frame, &ok) in frames.iter().zip(&valid) {
                if !ok {
                    continue;
                }
                for (target, &target_ok) in frames.iter().zip(&valid) {
                    if target_ok || target.len() > frame.len() {
                        continue;
                    }
                    if let Some(bm) = first_bounded_epimorphism(frame, target) {
                        let fals = checker
                            .find_falsification(target)?
                            .expect("target is frame-invalid");
                        let (valuation, point, team) =
                            falsification_witness(&checker, target, fals);
                        let morphism = bm
                            .map
                            .iter()
                            .enumerate()
                            .map(|(w, &v)| {
                                (frame.name(w).to_string(), target.name(v).to_string())
                            })
                            .collect();
                        return report(counterexample(AuditWitness {
                            base_frames: vec![frame.clone()],
                            derived_frame: target.clone(),
                            seed: None,
                            morphism: Some(morphism),
                            valuation,
                            point,
                            team,
                        }));
                    }
                }
            }
            report(AuditVerdict::Pass { bounded: false })
        }
        AuditProperty::ReflectsFinGenSubframes => {
            for (frame, &ok) in frames.iter().zip(&valid) {
                if ok {
                    continue;
                }
                let subs = finitely_generated_subframes(frame, frame.len());
                let mut all_valid = true;
                for sub in &subs {
                    if !checker.frame_valid(sub)? {
                        all_valid = false;
                        break;
                    }
                }
                if all_valid {
                    let fals =
                        checker.find_falsification(frame)?.expect("frame is invalid");
                    let (valuation, point, team) = falsification_witness(&checker, frame, fals);
                    return report(counterexample(AuditWitness {
                        base_frames: vec![frame.clone()],
                        derived_frame: frame.clone(),
                        seed: None,
                        morphism: None,
                        valuation,
                        point,
                        team,
                    }));
                }
            }
            report(AuditVerdict::Pass { bounded: false })
        }
        AuditProperty::ReflectsUltrafilterExt => {
            for (frame, &ok) in frames.iter().zip(&valid) {
                let ue = ultrafilter_extension(frame)?;
                let iso = ue.witnesses_isomorphism(frame) && is_isomorphic(&ue.frame, frame);
                let ue_valid = checker.frame_valid(&ue.frame)?;
                if iso && (!ue_valid || ok) {
                    continue;
                }
                // Reflection failed (or the finite-extension isomorphism
                // did, which would be an engine bug surfaced as evidence).
                let (valuation, point, team) = match checker.find_falsification(frame)? {
                    Some(fals) => falsification_witness(&checker, frame, fals),
                    None => (BTreeMap::new(), None, None),
                };
                return report(counterexample(AuditWitness {
                    base_frames: vec![frame.clone()],
                    derived_frame: ue.frame,
                    seed: None,
                    morphism: None,
                    valuation,
                    point,
                    team,
                }));
            }
            report(AuditVerdict::Pass { bounded: false })
        }
    }
}

/// Re-verifies a counterexample report: the construction data must rebuild
/// the derived frame, the base frames must validate the formula, and the
/// recorded model must falsify it. Returns false when the witness fails to
/// reproduce; pass verdicts replay trivially.
pub fn replay_audit(report: &AuditReport) -> Result<bool, DefinabilityError> {
    let witness = match &report.verdict {
        AuditVerdict::Pass { .. } => return Ok(true),
        AuditVerdict::Counterexample { witness } => witness,
    };
    let f = crate::parser::parse(&report.formula)?;
    let mut checker = FrameChecker::new(&f, EvalConfig::default())?;

    let falsified_frame = match report.property {
        AuditProperty::GenSubframeClosed
        | AuditProperty::DisjointUnionClosed
        | AuditProperty::BoundedMorphicImageClosed => &witness.derived_frame,
        AuditProperty::ReflectsFinGenSubframes | AuditProperty::ReflectsUltrafilterExt => {
            &witness.base_frames[0]
        }
    };

    // The recorded model must falsify the formula at the recorded spot.
    let model =
        crate::kripke::Model::new(falsified_frame.clone(), witness.valuation.clone())?;
    let falsified = match (&witness.point, &witness.team) {
        (Some(point), _) => !crate::kripke::eval_pointed_at(&model, point, &f)
            .map_err(|e| DefinabilityError::BadWitness(e.to_string()))?,
        (None, Some(team)) => {
            let team = crate::team::Team::from_names(&model, team)?;
            !crate::team::eval_team(&model, team, &f)
                .map_err(|e| DefinabilityError::BadWitness(e.to_string()))?
        }
        (None, None) => false,
    };
    if !falsified {
        return Ok(false);
    }

    match report.property {
        AuditProperty::GenSubframeClosed => {
            let base = &witness.base_frames[0];
            let seed = witness
                .seed
                .as_ref()
                .ok_or_else(|| DefinabilityError::BadWitness("missing seed".into()))?;
            let mut mask = 0u64;
            for name in seed {
                let i = base
                    .index_of(name)
                    .ok_or_else(|| DefinabilityError::BadWitness(format!("seed point {name}")))?;
                mask |= 1 << i;
            }
            Ok(checker.frame_valid(base)? && generated_subframe(base, mask)? == witness.derived_frame)
        }
        AuditProperty::DisjointUnionClosed => {
            if witness.base_frames.len() != 2 {
                return Err(DefinabilityError::BadWitness("expected two base frames".into()));
            }
            let rebuilt = disjoint_union(&witness.base_frames)?;
            Ok(checker.frame_valid(&witness.base_frames[0])?
                && checker.frame_valid(&witness.base_frames[1])?
                && rebuilt == witness.derived_frame)
        }
        AuditProperty::BoundedMorphicImageClosed => {
            let base = &witness.base_frames[0];
            let morphism = witness
                .morphism
                .as_ref()
                .ok_or_else(|| DefinabilityError::BadWitness("missing morphism".into()))?;
            let mut map = vec![0usize; base.len()];
            for (from, to) in morphism {
                let w = base
                    .index_of(from)
                    .ok_or_else(|| DefinabilityError::BadWitness(format!("source point {from}")))?;
                let v = witness
                    .derived_frame
                    .index_of(to)
                    .ok_or_else(|| DefinabilityError::BadWitness(format!("target point {to}")))?;
                map[w] = v;
            }
            let bm = crate::frameops::BoundedMorphism::new(
                base.clone(),
                witness.derived_frame.clone(),
                map,
            )?;
            Ok(checker.frame_valid(base)?
                && bm.is_surjective()
                && crate::frameops::check_bounded_morphism(&bm))
        }
        AuditProperty::ReflectsFinGenSubframes => {
            let base = &witness.base_frames[0];
            let subs = finitely_generated_subframes(base, base.len());
            for sub in &subs {
                if !checker.frame_valid(sub)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        AuditProperty::ReflectsUltrafilterExt => {
            let base = &witness.base_frames[0];
            let ue = ultrafilter_extension(base)?;
            Ok(ue.frame == witness.derived_frame && checker.frame_valid(&ue.frame)?)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivMode {
    /// Pointwise agreement under Kripke semantics.
    KripkePoint,
    /// Agreement on every team under team semantics.
    Team,
    /// Agreement of model validity, each side under its own semantics.
    ModelValidity,
    /// Agreement of frame validity, each side under its own semantics.
    FrameValidity,
}

impl EquivMode {
    fn name(self) -> &'static str {
        match self {
            EquivMode::KripkePoint => "kripke-point",
            EquivMode::Team => "team",
            EquivMode::ModelValidity => "model-validity",
            EquivMode::FrameValidity => "frame-validity",
        }
    }
}

/// First point of disagreement found by [`oracle_equiv`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivWitness {
    pub frame: Frame,
    pub valuation: BTreeMap<String, Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub team: Option<Vec<String>>,
    pub left: bool,
    pub right: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum EquivOutcome {
    Pass,
    Counterexample { witness: EquivWitness },
}

/// One formula compiled against a shared vocabulary.
struct EquivSide {
    compiled: Compiled,
    semantics: Semantics,
    slots: Vec<usize>,
    val: Vec<u64>,
    sat: Vec<u64>,
}

impl EquivSide {
    fn new(f: &Formula, union: &[String]) -> Result<EquivSide, DefinabilityError> {
        let semantics = semantics_for(f)?;
        let compiled = Compiled::new(f);
        let slots = compiled
            .props
            .iter()
            .map(|p| union.iter().position(|u| u == p).expect("side props are in the union"))
            .collect();
        let val = vec![0; compiled.props.len()];
        Ok(EquivSide { compiled, semantics, slots, val, sat: Vec::new() })
    }

    fn load_val(&mut self, vbits: u64, n: usize) {
        let mask = (1u64 << n) - 1;
        for (k, &slot) in self.slots.iter().enumerate() {
            self.val[k] = (vbits >> (slot * n)) & mask;
        }
    }
}

/// Exhaustively compares two formulas over every frame of the universe and
/// every valuation of their joint propositions, in the given mode. Returns
/// the first counterexample in enumeration order, if any.
pub fn oracle_equiv(
    f: &Formula,
    g: &Formula,
    u: FrameUniverse,
    mode: EquivMode,
) -> Result<EquivOutcome, DefinabilityError> {
    // Mode/fragment compatibility first.
    let check = |h: &Formula| -> Result<(), DefinabilityError> {
        let bad = |construct| Err(DefinabilityError::ModeMismatch { mode: mode.name(), construct });
        match mode {
            EquivMode::KripkePoint => match eval::first_non_kripke(h) {
                Some(c) => bad(c),
                None => Ok(()),
            },
            EquivMode::Team => {
                if let Some(c) = eval::first_non_team(h) {
                    return bad(c);
                }
                if h.classify() == Fragment::Mixed {
                    return bad("mixed team connectives");
                }
                Ok(())
            }
            EquivMode::ModelValidity | EquivMode::FrameValidity => {
                if h.classify() == Fragment::Mixed {
                    return bad("mixed team connectives");
                }
                Ok(())
            }
        }
    };
    check(f)?;
    check(g)?;

    if mode == EquivMode::FrameValidity {
        return frame_validity_equiv(f, g, u);
    }

    let union: Vec<String> = f.propositions().union(&g.propositions()).cloned().collect();
    let mut left = EquivSide::new(f, &union)?;
    let mut right = EquivSide::new(g, &union)?;
    let cfg = EvalConfig::default();

    for frame in u.frames() {
        let n = frame.len();
        let bits = union.len() * n;
        if bits > MAX_VALUATION_BITS {
            return Err(DefinabilityError::ValuationSpaceTooLarge {
                props: union.len(),
                points: n,
            });
        }
        let full = frame.full_mask();
        let mut scratch_l = TeamScratch::new(&left.compiled, &frame);
        let mut scratch_r = TeamScratch::new(&right.compiled, &frame);
        for vbits in 0u64..1 << bits {
            left.load_val(vbits, n);
            right.load_val(vbits, n);
            let mismatch: Option<(Option<usize>, Option<u64>, bool, bool)> = match mode {
                EquivMode::KripkePoint => {
                    eval::kripke_sat_sets(&left.compiled, &frame, &left.val, &mut left.sat);
                    eval::kripke_sat_sets(&right.compiled, &frame, &right.val, &mut right.sat);
                    let sl = left.sat[left.compiled.root as usize];
                    let sr = right.sat[right.compiled.root as usize];
                    if sl == sr {
                        None
                    } else {
                        let w = (sl ^ sr).trailing_zeros() as usize;
                        Some((Some(w), None, sl & (1 << w) != 0, sr & (1 << w) != 0))
                    }
                }
                EquivMode::Team => {
                    scratch_l.reset();
                    scratch_r.reset();
                    let ctx_l =
                        TeamCtx { c: &left.compiled, frame: &frame, val: &left.val, cfg };
                    let ctx_r =
                        TeamCtx { c: &right.compiled, frame: &frame, val: &right.val, cfg };
                    let mut found = None;
                    for team in 0u64..=full {
                        let l = eval::team_eval(&ctx_l, &mut scratch_l, left.compiled.root, team);
                        let r = eval::team_eval(&ctx_r, &mut scratch_r, right.compiled.root, team);
                        if l != r {
                            found = Some((None, Some(team), l, r));
                            break;
                        }
                    }
                    found
                }
                EquivMode::ModelValidity => {
                    let l = side_model_valid(&mut left, &frame, &mut scratch_l, cfg);
                    let r = side_model_valid(&mut right, &frame, &mut scratch_r, cfg);
                    if l == r {
                        None
                    } else {
                        Some((None, None, l, r))
                    }
                }
                EquivMode::FrameValidity => unreachable!("handled above"),
            };
            if let Some((point, team, l, r)) = mismatch {
                let valuation = valuation_names_from_union(&union, &frame, vbits);
                return Ok(EquivOutcome::Counterexample {
                    witness: EquivWitness {
                        point: point.map(|w| frame.name(w).to_string()),
                        team: team.map(|mask| {
                            (0..n)
                                .filter(|i| mask & (1 << i) != 0)
                                .map(|i| frame.name(i).to_string())
                                .collect()
                        }),
                        frame,
                        valuation,
                        left: l,
                        right: r,
                    },
                });
            }
        }
    }
    Ok(EquivOutcome::Pass)
}

fn side_model_valid(
    side: &mut EquivSide,
    frame: &Frame,
    scratch: &mut TeamScratch,
    cfg: EvalConfig,
) -> bool {
    let full = frame.full_mask();
    match side.semantics {
        Semantics::Kripke => {
            eval::kripke_sat_sets(&side.compiled, frame, &side.val, &mut side.sat);
            side.sat[side.compiled.root as usize] == full
        }
        Semantics::Team => {
            scratch.reset();
            let ctx = TeamCtx { c: &side.compiled, frame, val: &side.val, cfg };
            eval::team_eval(&ctx, scratch, side.compiled.root, full)
        }
    }
}

fn valuation_names_from_union(
    union: &[String],
    frame: &Frame,
    vbits: u64,
) -> BTreeMap<String, Vec<String>> {
    let n = frame.len();
    let mask = (1u64 << n) - 1;
    union
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let bitsk = (vbits >> (k * n)) & mask;
            let points =
                (0..n).filter(|i| bitsk & (1 << i) != 0).map(|i| frame.name(i).to_string());
            (p.clone(), points.collect())
        })
        .collect()
}

fn frame_validity_equiv(
    f: &Formula,
    g: &Formula,
    u: FrameUniverse,
) -> Result<EquivOutcome, DefinabilityError> {
    let mut left = FrameChecker::new(f, EvalConfig::default())?;
    let mut right = FrameChecker::new(g, EvalConfig::default())?;
    for frame in u.frames() {
        let fals_l = left.find_falsification(&frame)?;
        let fals_r = right.find_falsification(&frame)?;
        if fals_l.is_none() == fals_r.is_none() {
            continue;
        }
        // Record the falsifying model of the side that failed.
        let (checker, fals) = match (&fals_l, &fals_r) {
            (Some(w), None) => (&left, *w),
            (None, Some(w)) => (&right, *w),
            _ => unreachable!(),
        };
        let (valuation, point, team) = falsification_witness(checker, &frame, fals);
        return Ok(EquivOutcome::Counterexample {
            witness: EquivWitness {
                frame,
                valuation,
                point,
                team,
                left: fals_l.is_none(),
                right: fals_r.is_none(),
            },
        });
    }
    Ok(EquivOutcome::Pass)
}
