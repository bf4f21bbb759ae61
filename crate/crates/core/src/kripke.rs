//! Finite Kripke frames and models.
//!
//! Points are indexed densely and point sets are `u64` bitsets, which keeps
//! the definability engine's inner loops allocation-free. The on-disk format
//! is `{"points": ["a","b"], "rel": [["a","b"]], "val": {"p": ["a"]}}`; the
//! order of `points` fixes the internal indexing.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::eval::{self, EvalError};
use crate::formula::Formula;

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a frame needs at least one point")]
    EmptyFrame,
    #[error("frames are limited to {MAX_POINTS} points, got {0}")]
    TooManyPoints(usize),
    #[error("duplicate point name `{0}`")]
    DuplicatePoint(String),
    #[error("`{0}` is not a point of the frame")]
    UnknownPoint(String),
    #[error("point index {0} is out of range")]
    PointOutOfRange(usize),
}

/// A nonempty set of points with a binary accessibility relation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    names: Vec<String>,
    succ: Vec<u64>,
    pred: Vec<u64>,
}

impl Frame {
    /// Builds a frame from point names and index edges.
    pub fn new(
        names: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Frame, ModelError> {
        let n = names.len();
        if n == 0 {
            return Err(ModelError::EmptyFrame);
        }
        if n > MAX_POINTS {
            return Err(ModelError::TooManyPoints(n));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(ModelError::DuplicatePoint(name.clone()));
            }
        }
        let mut frame = Frame { names, succ: vec![0; n], pred: vec![0; n] };
        for (from, to) in edges {
            if from >= n {
                return Err(ModelError::PointOutOfRange(from));
            }
            if to >= n {
                return Err(ModelError::PointOutOfRange(to));
            }
            frame.succ[from] |= 1 << to;
            frame.pred[to] |= 1 << from;
        }
        Ok(frame)
    }

    /// Builds a frame from point names and name edges.
    pub fn from_named(
        names: Vec<String>,
        edges: &[(String, String)],
    ) -> Result<Frame, ModelError> {
        let index = |name: &String| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| ModelError::UnknownPoint(name.clone()))
        };
        let edges = edges
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Frame::new(names, edges)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // frames are nonempty by construction
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Bitset of successors of point `i`.
    pub fn succ(&self, i: usize) -> u64 {
        self.succ[i]
    }

    /// Bitset of predecessors of point `i`.
    pub fn pred(&self, i: usize) -> u64 {
        self.pred[i]
    }

    pub fn succ_sets(&self) -> &[u64] {
        &self.succ
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from] & (1 << to) != 0
    }

    /// Bitset with one bit per point.
    pub fn full_mask(&self) -> u64 {
        if self.len() == MAX_POINTS {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (from, s) in self.succ.iter().enumerate() {
            let mut s = *s;
            while s != 0 {
                let to = s.trailing_zeros() as usize;
                s &= s - 1;
                out.push((from, to));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.count_ones() as usize).sum()
    }

    pub fn rel_is_empty(&self) -> bool {
        self.succ.iter().all(|s| *s == 0)
    }

    /// `R[T]`: the points reachable in one step from `team`.
    pub fn succ_image(&self, team: u64) -> u64 {
        let mut out = 0;
        let mut t = team;
        while t != 0 {
            let w = t.trailing_zeros() as usize;
            t &= t - 1;
            out |= self.succ[w];
        }
        out
    }

    /// `R^-1[T]`: the points with a one-step successor in `team`.
    pub fn pred_image(&self, team: u64) -> u64 {
        let mut out = 0;
        let mut t = team;
        while t != 0 {
            let w = t.trailing_zeros() as usize;
            t &= t - 1;
            out |= self.pred[w];
        }
        out
    }

    pub(crate) fn names_of_mask(&self, mask: u64) -> Vec<String> {
        let mut out = Vec::new();
        let mut m = mask;
        while m != 0 {
            let w = m.trailing_zeros() as usize;
            m &= m - 1;
            out.push(self.names[w].clone());
        }
        out
    }

    pub(crate) fn mask_of_names<S: AsRef<str>>(&self, names: &[S]) -> Result<u64, ModelError> {
        let mut mask = 0;
        for name in names {
            let i = self
                .index_of(name.as_ref())
                .ok_or_else(|| ModelError::UnknownPoint(name.as_ref().to_string()))?;
            mask |= 1 << i;
        }
        Ok(mask)
    }
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .into_iter()
            .map(|(a, b)| format!("{}->{}", self.names[a], self.names[b]))
            .collect();
        write!(f, "Frame({:?}; {})", self.names, edges.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    points: Vec<String>,
    #[serde(default)]
    rel: Vec<(String, String)>,
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rel = self
            .edges()
            .into_iter()
            .map(|(a, b)| (self.names[a].clone(), self.names[b].clone()))
            .collect();
        FrameRepr { points: self.names.clone(), rel }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = FrameRepr::deserialize(deserializer)?;
        Frame::from_named(repr.points, &repr.rel).map_err(D::Error::custom)
    }
}

/// A frame with a valuation. Propositions absent from the valuation are
/// interpreted as the empty set.
#[derive(Clone, PartialEq, Eq)]
pub struct Model {
    frame: Frame,
    val: BTreeMap<String, u64>,
}

impl Model {
    pub fn new(frame: Frame, val: BTreeMap<String, Vec<String>>) -> Result<Model, ModelError> {
        let mut masks = BTreeMap::new();
        for (prop, points) in val {
            let mask = frame.mask_of_names(&points)?;
            masks.insert(prop, mask);
        }
        Ok(Model { frame, val: masks })
    }

    /// Builds a model from prewired bitset valuations.
    pub fn from_masks(frame: Frame, val: BTreeMap<String, u64>) -> Result<Model, ModelError> {
        let full = frame.full_mask();
        for mask in val.values() {
            if mask & !full != 0 {
                return Err(ModelError::PointOutOfRange(mask.trailing_zeros() as usize));
            }
        }
        Ok(Model { frame, val })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Bitset of points where `prop` holds.
    pub fn val_mask(&self, prop: &str) -> u64 {
        self.val.get(prop).copied().unwrap_or(0)
    }

    pub fn valuation(&self) -> &BTreeMap<String, u64> {
        &self.val
    }
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Model({:?}, val {:?})", self.frame, self.val)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    points: Vec<String>,
    #[serde(default)]
    rel: Vec<(String, String)>,
    #[serde(default)]
    val: BTreeMap<String, Vec<String>>,
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rel = self
            .frame
            .edges()
            .into_iter()
            .map(|(a, b)| (self.frame.names[a].clone(), self.frame.names[b].clone()))
            .collect();
        let val = self
            .val
            .iter()
            .map(|(p, mask)| (p.clone(), self.frame.names_of_mask(*mask)))
            .collect();
        ModelRepr { points: self.frame.names.clone(), rel, val }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ModelRepr::deserialize(deserializer)?;
        let frame = Frame::from_named(repr.points, &repr.rel).map_err(D::Error::custom)?;
        Model::new(frame, repr.val).map_err(D::Error::custom)
    }
}

/// Pointed satisfaction. Rejects team connectives, which have no pointed
/// semantics.
pub fn eval_pointed(m: &Model, point: usize, f: &Formula) -> Result<bool, EvalError> {
    let sat = eval::kripke_satisfying_set(m, f)?;
    if point >= m.frame.len() {
        return Err(EvalError::PointOutOfRange(point));
    }
    Ok(sat & (1 << point) != 0)
}

/// Pointed satisfaction with the point given by name.
pub fn eval_pointed_at(m: &Model, point: &str, f: &Formula) -> Result<bool, EvalError> {
    let i = m
        .frame
        .index_of(point)
        .ok_or_else(|| EvalError::UnknownPoint(point.to_string()))?;
    eval_pointed(m, i, f)
}

/// Validity in a model: satisfaction at every point.
pub fn model_valid_kripke(m: &Model, f: &Formula) -> Result<bool, EvalError> {
    let sat = eval::kripke_satisfying_set(m, f)?;
    Ok(sat == m.frame.full_mask())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::parser::parse;

    pub(crate) fn frame(names: &[&str], edges: &[(usize, usize)]) -> Frame {
        Frame::new(names.iter().map(|s| s.to_string()).collect(), edges.iter().copied()).unwrap()
    }

    pub(crate) fn model(names: &[&str], edges: &[(usize, usize)], val: &[(&str, &[usize])]) -> Model {
        let f = frame(names, edges);
        let mut masks = BTreeMap::new();
        for (p, points) in val {
            let mask = points.iter().fold(0u64, |m, i| m | (1 << i));
            masks.insert(p.to_string(), mask);
        }
        Model::from_masks(f, masks).unwrap()
    }

    #[test]
    fn frame_invariants() {
        assert_eq!(Frame::new(vec![], []), Err(ModelError::EmptyFrame));
        let dup = Frame::new(vec!["a".into(), "a".into()], []);
        assert_eq!(dup, Err(ModelError::DuplicatePoint("a".into())));
        assert!(matches!(
            Frame::new(vec!["a".into()], [(0, 1)]),
            Err(ModelError::PointOutOfRange(1))
        ));
    }

    #[test]
    fn eval_pointed_examples() {
        // Single point satisfying p validates [u] p there.
        let m = model(&["w"], &[], &[("p", &[0])]);
        assert!(eval_pointed(&m, 0, &parse("[u] p").unwrap()).unwrap());

        // Two isolated points, p only at a: the disjunction fails at a.
        let m = model(&["a", "b"], &[], &[("p", &[0])]);
        assert!(!eval_pointed(&m, 0, &parse("~p | [u] p").unwrap()).unwrap());

        // A single edge makes the relation nonempty.
        let m = model(&["a", "b"], &[(0, 1)], &[]);
        assert!(eval_pointed(&m, 0, &parse("<u><>(p|~p)").unwrap()).unwrap());
    }

    #[test]
    fn model_validity_examples() {
        let m = model(&["w"], &[(0, 0)], &[("p", &[0])]);
        assert!(model_valid_kripke(&m, &parse("[u] p").unwrap()).unwrap());

        let m = model(&["a", "b"], &[], &[("p", &[0])]);
        assert!(!model_valid_kripke(&m, &parse("~p | [u] p").unwrap()).unwrap());
        assert!(model_valid_kripke(&m, &parse("p | ~p").unwrap()).unwrap());
    }

    #[test]
    fn fragment_errors() {
        let m = model(&["w"], &[], &[]);
        assert!(eval_pointed(&m, 0, &parse("p \\/ q").unwrap()).is_err());
        assert!(model_valid_kripke(&m, &parse("dep(p; q)").unwrap()).is_err());
    }

    #[test]
    fn images() {
        let f = frame(&["1", "2", "3"], &[(0, 1), (0, 2)]);
        assert_eq!(f.succ_image(0b001), 0b110);
        assert_eq!(f.succ_image(0), 0);
        let g = frame(&["1", "2"], &[(0, 1), (1, 0)]);
        assert_eq!(g.succ_image(0b01), 0b10);
        assert_eq!(g.pred_image(0b10), 0b01);
    }

    #[test]
    fn json_round_trip() {
        let m = model(&["a", "b"], &[(0, 1), (1, 1)], &[("p", &[0]), ("q", &[0, 1])]);
        let text = serde_json::to_string(&m).unwrap();
        let back: Model = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);

        let parsed: Model = serde_json::from_str(
            r#"{"points": ["a","b"], "rel": [["a","b"]], "val": {"p": ["a"]}}"#,
        )
        .unwrap();
        assert_eq!(parsed.frame().len(), 2);
        assert!(parsed.frame().has_edge(0, 1));
        assert_eq!(parsed.val_mask("p"), 0b01);
        assert_eq!(parsed.val_mask("missing"), 0);
    }

    #[test]
    fn json_rejects_bad_input() {
        assert!(serde_json::from_str::<Model>(r#"{"points": [], "rel": []}"#).is_err());
        assert!(
            serde_json::from_str::<Model>(r#"{"points": ["a"], "rel": [["a","z"]]}"#).is_err()
        );
        assert!(serde_json::from_str::<Model>(
            r#"{"points": ["a"], "rel": [], "val": {"p": ["z"]}}"#
        )
        .is_err());
    }
}
