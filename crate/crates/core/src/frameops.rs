//! Frame constructions: disjoint unions, generated subframes, bounded
//! morphisms, ultrafilter extensions, and isomorphism checking.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kripke::{Frame, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameOpsError {
    #[error("disjoint union needs at least one frame")]
    EmptyUnion,
    #[error("a generated subframe needs a nonempty seed")]
    EmptySeed,
    #[error("seed point index {0} is out of range")]
    SeedOutOfRange(usize),
    #[error("the map must assign every source point: expected {expected} entries, got {got}")]
    PartialMap { expected: usize, got: usize },
    #[error("map value {0} is not a target point")]
    MapOutOfRange(usize),
    #[error("ultrafilter machinery is limited to {max} points, got {got}")]
    TooManyPoints { max: usize, got: usize },
    #[error(transparent)]
    Frame(#[from] ModelError),
}

/// Disjoint union of a nonempty list of frames. Points are tagged with the
/// index of their source frame, rendered as `"<index>.<name>"`, so inputs
/// never collide.
pub fn disjoint_union(frames: &[Frame]) -> Result<Frame, FrameOpsError> {
    if frames.is_empty() {
        return Err(FrameOpsError::EmptyUnion);
    }
    let mut names = Vec::new();
    let mut edges = Vec::new();
    let mut offset = 0;
    for (i, f) in frames.iter().enumerate() {
        for name in f.names() {
            names.push(format!("{i}.{name}"));
        }
        for (a, b) in f.edges() {
            edges.push((offset + a, offset + b));
        }
        offset += f.len();
    }
    Ok(Frame::new(names, edges)?)
}

/// The smallest subframe containing `seed` (a point bitset) that is closed
/// under the accessibility relation.
pub fn generated_subframe(frame: &Frame, seed: u64) -> Result<Frame, FrameOpsError> {
    if seed == 0 {
        return Err(FrameOpsError::EmptySeed);
    }
    if seed & !frame.full_mask() != 0 {
        let bad = (seed & !frame.full_mask()).trailing_zeros() as usize;
        return Err(FrameOpsError::SeedOutOfRange(bad));
    }
    Ok(restrict(frame, reachability_closure(frame, seed)))
}

fn reachability_closure(frame: &Frame, seed: u64) -> u64 {
    let mut domain = seed;
    loop {
        let next = domain | frame.succ_image(domain);
        if next == domain {
            return domain;
        }
        domain = next;
    }
}

/// Restriction of a frame to a nonempty subset of its points, keeping the
/// original names and point order.
fn restrict(frame: &Frame, domain: u64) -> Frame {
    let mut keep = Vec::new();
    for i in 0..frame.len() {
        if domain & (1 << i) != 0 {
            keep.push(i);
        }
    }
    let names: Vec<String> = keep.iter().map(|&i| frame.name(i).to_string()).collect();
    let mut edges = Vec::new();
    for (new_from, &old_from) in keep.iter().enumerate() {
        for (new_to, &old_to) in keep.iter().enumerate() {
            if frame.has_edge(old_from, old_to) {
                edges.push((new_from, new_to));
            }
        }
    }
    Frame::new(names, edges).expect("restriction of a valid frame to a nonempty set")
}

/// All subframes generated by nonempty seeds of at most `max_seed` points,
/// deduplicated by domain, in ascending seed order.
pub fn finitely_generated_subframes(frame: &Frame, max_seed: usize) -> Vec<Frame> {
    let n = frame.len();
    let mut domains: Vec<u64> = Vec::new();
    for seed in 1u64..1 << n {
        if (seed.count_ones() as usize) > max_seed {
            continue;
        }
        let domain = reachability_closure(frame, seed);
        if !domains.contains(&domain) {
            domains.push(domain);
        }
    }
    domains.into_iter().map(|d| restrict(frame, d)).collect()
}

/// A total map between two frames, candidate bounded morphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedMorphism {
    pub source: Frame,
    pub target: Frame,
    /// `map[w]` is the target index of source point `w`.
    pub map: Vec<usize>,
}

impl BoundedMorphism {
    pub fn new(source: Frame, target: Frame, map: Vec<usize>) -> Result<Self, FrameOpsError> {
        if map.len() != source.len() {
            return Err(FrameOpsError::PartialMap { expected: source.len(), got: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= target.len()) {
            return Err(FrameOpsError::MapOutOfRange(bad));
        }
        Ok(BoundedMorphism { source, target, map })
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = 0u64;
        for &v in &self.map {
            hit |= 1 << v;
        }
        hit == self.target.full_mask()
    }

}

/// The forth condition: edges map to edges.
fn forth(src: &Frame, dst: &Frame, map: &[usize]) -> bool {
    src.edges().into_iter().all(|(w, v)| dst.has_edge(map[w], map[v]))
}

/// The back condition: an edge out of an image point lifts to an edge out
/// of the preimage point.
fn back(src: &Frame, dst: &Frame, map: &[usize]) -> bool {
    for w in 0..src.len() {
        let mut out = dst.succ(map[w]);
        while out != 0 {
            let v_target = out.trailing_zeros() as usize;
            out &= out - 1;
            let mut lifted = false;
            let mut succ = src.succ(w);
            while succ != 0 {
                let v = succ.trailing_zeros() as usize;
                succ &= succ - 1;
                if map[v] == v_target {
                    lifted = true;
                    break;
                }
            }
            if !lifted {
                return false;
            }
        }
    }
    true
}

/// Checks the forth and back conditions for a total map.
pub fn check_bounded_morphism(bm: &BoundedMorphism) -> bool {
    forth(&bm.source, &bm.target, &bm.map) && back(&bm.source, &bm.target, &bm.map)
}

/// Enumerates all surjective bounded morphisms from `src` onto `dst`, in
/// lexicographic map order.
pub fn find_bounded_epimorphisms(src: &Frame, dst: &Frame) -> Vec<BoundedMorphism> {
    let mut out = Vec::new();
    visit_epimorphisms(src, dst, &mut |map| {
        out.push(BoundedMorphism {
            source: src.clone(),
            target: dst.clone(),
            map: map.to_vec(),
        });
        true
    });
    out
}

/// The lexicographically first surjective bounded morphism, if any.
pub fn first_bounded_epimorphism(src: &Frame, dst: &Frame) -> Option<BoundedMorphism> {
    let mut found = None;
    visit_epimorphisms(src, dst, &mut |map| {
        found = Some(BoundedMorphism {
            source: src.clone(),
            target: dst.clone(),
            map: map.to_vec(),
        });
        false
    });
    found
}

/// Odometer over all k^n total maps; `keep_going` decides whether to
/// continue after each hit.
fn visit_epimorphisms(src: &Frame, dst: &Frame, keep_going: &mut dyn FnMut(&[usize]) -> bool) {
    let n = src.len();
    let k = dst.len();
    if k > n {
        return; // no surjection exists
    }
    let mut map = vec![0usize; n];
    loop {
        let surjective = {
            let mut hit = 0u64;
            for &v in &map {
                hit |= 1 << v;
            }
            hit == dst.full_mask()
        };
        if surjective && forth(src, dst, &map) && back(src, dst, &map) && !keep_going(&map) {
            return;
        }
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            map[i] += 1;
            if map[i] < k {
                break;
            }
            map[i] = 0;
            i += 1;
        }
    }
}

pub const MAX_UE_POINTS: usize = 16;

/// The ultrafilter extension of a finite frame, with the witness bijection
/// sending each point to its principal ultrafilter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UltrafilterExtension {
    pub frame: Frame,
    /// `principal[w]` is the extension point carrying the principal
    /// ultrafilter of original point `w`.
    pub principal: Vec<usize>,
}

impl UltrafilterExtension {
    /// Does the principal-ultrafilter map preserve and reflect edges both
    /// ways? For finite frames this always holds; the engine asserts it
    /// rather than assuming it.
    pub fn witnesses_isomorphism(&self, original: &Frame) -> bool {
        if self.frame.len() != original.len() {
            return false;
        }
        for w in 0..original.len() {
            for v in 0..original.len() {
                if original.has_edge(w, v)
                    != self.frame.has_edge(self.principal[w], self.principal[v])
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Computes the ultrafilter extension. On a finite domain the ultrafilters
/// are exactly the principal ones (checked separately by
/// [`enumerate_ultrafilter_families`]); the relation between them is
/// evaluated by the raw definition, quantifying over all subsets.
pub fn ultrafilter_extension(frame: &Frame) -> Result<UltrafilterExtension, FrameOpsError> {
    let n = frame.len();
    if n > MAX_UE_POINTS {
        return Err(FrameOpsError::TooManyPoints { max: MAX_UE_POINTS, got: n });
    }
    // m_R(X) = points with a successor in X, for every subset X.
    let subsets = 1usize << n;
    let mut m_r = vec![0u64; subsets];
    for (x, slot) in m_r.iter_mut().enumerate() {
        *slot = frame.pred_image(x as u64);
    }
    let names: Vec<String> = frame.names().iter().map(|s| format!("u_{s}")).collect();
    let mut edges = Vec::new();
    for w in 0..n {
        'pair: for v in 0..n {
            // U_w -> U_v iff for every X: X ∈ U_v implies m_R(X) ∈ U_w,
            // where X ∈ U_v iff v ∈ X and m_R(X) ∈ U_w iff w ∈ m_R(X).
            for x in 0..subsets {
                if x & (1 << v) != 0 && m_r[x] & (1 << w) == 0 {
                    continue 'pair;
                }
            }
            edges.push((w, v));
        }
    }
    let ue = Frame::new(names, edges)?;
    Ok(UltrafilterExtension { frame: ue, principal: (0..n).collect() })
}

/// Enumerates every family of subsets of `{0..k-1}` that is an ultrafilter,
/// by checking the axioms on all `2^(2^k)` candidate families. The result
/// is a list of family bitmasks over subset indices. Doubly exponential;
/// capped at four points.
pub fn enumerate_ultrafilter_families(k: usize) -> Result<Vec<u64>, FrameOpsError> {
    if k == 0 || k > 4 {
        return Err(FrameOpsError::TooManyPoints { max: 4, got: k });
    }
    let subsets = 1usize << k;
    let whole = subsets - 1; // bitset of the full domain
    let mut out = Vec::new();
    'family: for family in 0u64..1 << subsets {
        let contains = |x: usize| family & (1 << x) != 0;
        if !contains(whole) || contains(0) {
            continue;
        }
        for x in 0..subsets {
            // Maximality: exactly one of X and its complement is in.
            if contains(x) == contains(whole & !x) {
                continue 'family;
            }
            if !contains(x) {
                continue;
            }
            for y in 0..subsets {
                if contains(y) && !contains(x & y) {
                    continue 'family; // not closed under intersection
                }
                if x & !y == 0 && !contains(y) {
                    continue 'family; // not upward closed: X ⊆ Y, Y missing
                }
            }
        }
        out.push(family);
    }
    Ok(out)
}

/// Exhaustive isomorphism check by backtracking over bijections.
pub fn is_isomorphic(f: &Frame, g: &Frame) -> bool {
    let n = f.len();
    if n != g.len() || f.edge_count() != g.edge_count() {
        return false;
    }
    // Degree profiles must match as multisets.
    let profile = |fr: &Frame| {
        let mut p: Vec<(u32, u32, bool)> = (0..fr.len())
            .map(|i| (fr.succ(i).count_ones(), fr.pred(i).count_ones(), fr.has_edge(i, i)))
            .collect();
        p.sort_unstable();
        p
    };
    if profile(f) != profile(g) {
        return false;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend_isomorphism(f, g, &mut map, &mut used, 0)
}

fn extend_isomorphism(f: &Frame, g: &Frame, map: &mut [usize], used: &mut [bool], w: usize) -> bool {
    if w == f.len() {
        return true;
    }
    'cand: for c in 0..g.len() {
        if used[c] || f.has_edge(w, w) != g.has_edge(c, c) {
            continue;
        }
        for prev in 0..w {
            if f.has_edge(w, prev) != g.has_edge(c, map[prev])
                || f.has_edge(prev, w) != g.has_edge(map[prev], c)
            {
                continue 'cand;
            }
        }
        map[w] = c;
        used[c] = true;
        if extend_isomorphism(f, g, map, used, w + 1) {
            return true;
        }
        used[c] = false;
        map[w] = usize::MAX;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::frames_up_to;

    fn frame(names: &[&str], edges: &[(usize, usize)]) -> Frame {
        Frame::new(names.iter().map(|s| s.to_string()).collect(), edges.iter().copied()).unwrap()
    }

    #[test]
    fn disjoint_union_examples() {
        let loop1 = frame(&["a"], &[(0, 0)]);
        let u = disjoint_union(&[loop1.clone(), loop1.clone()]).unwrap();
        assert_eq!(u.names(), &["0.a".to_string(), "1.a".to_string()]);
        assert_eq!(u.edges(), vec![(0, 0), (1, 1)]);

        let single = disjoint_union(&[loop1.clone()]).unwrap();
        assert!(is_isomorphic(&single, &loop1));

        assert_eq!(disjoint_union(&[]), Err(FrameOpsError::EmptyUnion));
    }

    #[test]
    fn union_defeats_the_singleton_class() {
        // Each singleton validates `~p | [u] p`; the two-point union does
        // not: set p true at exactly one point and evaluate there.
        use crate::kripke::{eval_pointed, Model};
        use std::collections::BTreeMap;
        let f = crate::parse("~p | [u] p").unwrap();
        let one = frame(&["a"], &[]);
        for mask in 0..2u64 {
            let m = Model::from_masks(one.clone(), BTreeMap::from([("p".into(), mask)])).unwrap();
            assert!(eval_pointed(&m, 0, &f).unwrap());
        }
        let two = disjoint_union(&[one.clone(), one]).unwrap();
        let m = Model::from_masks(two, BTreeMap::from([("p".into(), 0b01)])).unwrap();
        assert!(!eval_pointed(&m, 0, &f).unwrap());
    }

    #[test]
    fn generated_subframe_examples() {
        let f = frame(&["1", "2", "3"], &[(0, 1)]);
        let g = generated_subframe(&f, 0b001).unwrap();
        assert_eq!(g.names(), &["1".to_string(), "2".to_string()]);
        assert_eq!(g.edges(), vec![(0, 1)]);

        let whole = generated_subframe(&f, 0b111).unwrap();
        assert_eq!(whole, f);

        let f = frame(&["1", "2"], &[]);
        let g = generated_subframe(&f, 0b10).unwrap();
        assert_eq!(g.names(), &["2".to_string()]);
        assert!(g.rel_is_empty());

        assert_eq!(generated_subframe(&f, 0), Err(FrameOpsError::EmptySeed));
        assert_eq!(generated_subframe(&f, 0b100), Err(FrameOpsError::SeedOutOfRange(2)));
    }

    #[test]
    fn generated_subframe_is_idempotent_and_monotone() {
        for f in frames_up_to(3) {
            let n = f.len();
            for seed in 1u64..1 << n {
                let g = generated_subframe(&f, seed).unwrap();
                let again = generated_subframe(&g, g.full_mask()).unwrap();
                assert_eq!(g, again, "idempotence on {f:?} seed {seed:b}");
                for extra in 1u64..1 << n {
                    if extra & seed == seed {
                        let bigger = generated_subframe(&f, extra).unwrap();
                        assert!(
                            g.names().iter().all(|p| bigger.names().contains(p)),
                            "monotonicity on {f:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn finitely_generated_examples() {
        let single = frame(&["a"], &[]);
        assert_eq!(finitely_generated_subframes(&single, 1), vec![single.clone()]);

        let chain = frame(&["1", "2"], &[(0, 1)]);
        let subs = finitely_generated_subframes(&chain, 1);
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0], chain);
        assert_eq!(subs[1].names(), &["2".to_string()]);

        for f in frames_up_to(3) {
            let subs = finitely_generated_subframes(&f, f.len());
            assert!(subs.contains(&f), "whole-domain seed regenerates the frame");
        }
    }

    #[test]
    fn bounded_morphism_examples() {
        let cycle = frame(&["1", "2"], &[(0, 1), (1, 0)]);
        let point = frame(&["a"], &[(0, 0)]);
        let constant = BoundedMorphism::new(cycle.clone(), point.clone(), vec![0, 0]).unwrap();
        assert!(check_bounded_morphism(&constant));
        assert!(constant.is_surjective());

        let identity = BoundedMorphism::new(cycle.clone(), cycle.clone(), vec![0, 1]).unwrap();
        assert!(check_bounded_morphism(&identity));

        // No successors to lift the loop: back fails.
        let edgeless = frame(&["1", "2"], &[]);
        let bad = BoundedMorphism::new(edgeless, point.clone(), vec![0, 0]).unwrap();
        assert!(!check_bounded_morphism(&bad));

        assert!(BoundedMorphism::new(cycle.clone(), point.clone(), vec![0]).is_err());
        assert!(BoundedMorphism::new(cycle.clone(), point, vec![0, 1]).is_err());
    }

    #[test]
    fn epimorphism_search() {
        let cycle = frame(&["1", "2"], &[(0, 1), (1, 0)]);
        let point = frame(&["a"], &[(0, 0)]);
        let found = find_bounded_epimorphisms(&cycle, &point);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].map, vec![0, 0]);

        let edgeless = frame(&["1", "2"], &[]);
        assert!(find_bounded_epimorphisms(&edgeless, &point).is_empty());

        for f in frames_up_to(2) {
            for g in frames_up_to(2) {
                for bm in find_bounded_epimorphisms(&f, &g) {
                    assert!(bm.is_surjective() && check_bounded_morphism(&bm));
                }
            }
        }
    }

    #[test]
    fn composition_of_bounded_morphisms() {
        // Compose sampled pairs of found epimorphisms.
        let mut checked = 0;
        'outer: for a in frames_up_to(3) {
            if a.len() < 2 {
                continue;
            }
            for b in frames_up_to(2) {
                for f in find_bounded_epimorphisms(&a, &b) {
                    for c in frames_up_to(2) {
                        for g in find_bounded_epimorphisms(&b, &c) {
                            let composed: Vec<usize> = f.map.iter().map(|&w| g.map[w]).collect();
                            let gf =
                                BoundedMorphism::new(a.clone(), c.clone(), composed).unwrap();
                            assert!(check_bounded_morphism(&gf), "{f:?} then {g:?}");
                            checked += 1;
                            if checked > 2000 {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        assert!(checked > 100, "sampled {checked} compositions");
    }

    #[test]
    fn ultrafilter_extension_examples() {
        let point = frame(&["a"], &[(0, 0)]);
        let ue = ultrafilter_extension(&point).unwrap();
        assert_eq!(ue.frame.names(), &["u_a".to_string()]);
        assert!(ue.frame.has_edge(0, 0));

        let chain = frame(&["1", "2"], &[(0, 1)]);
        let ue = ultrafilter_extension(&chain).unwrap();
        assert_eq!(ue.frame.edges(), vec![(0, 1)]);
        assert!(ue.witnesses_isomorphism(&chain));
    }

    #[test]
    fn ultrafilter_extension_is_isomorphic_on_small_frames() {
        for f in frames_up_to(3) {
            let ue = ultrafilter_extension(&f).unwrap();
            assert!(ue.witnesses_isomorphism(&f), "{f:?}");
            assert!(is_isomorphic(&ue.frame, &f), "{f:?}");
        }
    }

    #[test]
    fn ultrafilters_on_finite_sets_are_principal() {
        for k in 1..=4usize {
            let families = enumerate_ultrafilter_families(k).unwrap();
            // One principal ultrafilter per point: all subsets containing it.
            let mut expected: Vec<u64> = (0..k)
                .map(|w| {
                    let mut fam = 0u64;
                    for x in 0..1usize << k {
                        if x & (1 << w) != 0 {
                            fam |= 1 << x;
                        }
                    }
                    fam
                })
                .collect();
            let mut got = families.clone();
            expected.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, expected, "k = {k}");
        }
        assert!(enumerate_ultrafilter_families(5).is_err());
    }

    #[test]
    fn isomorphism_examples() {
        let cycle = frame(&["1", "2"], &[(0, 1), (1, 0)]);
        let chain = frame(&["1", "2"], &[(0, 1)]);
        assert!(is_isomorphic(&cycle, &cycle));
        assert!(!is_isomorphic(&cycle, &chain));

        let relabeled = frame(&["x", "y"], &[(1, 0), (0, 1)]);
        assert!(is_isomorphic(&cycle, &relabeled));

        let a = frame(&["1", "2", "3"], &[(0, 1), (1, 2), (2, 0)]);
        let b = frame(&["1", "2", "3"], &[(0, 1), (1, 0), (2, 2)]);
        assert!(!is_isomorphic(&a, &b));
    }
}
