//! JSON documents written by `detect` and `match`.
//!
//! Angles are radians in `[0, 2π)`, scales are pixels, the y axis points down.

use asj_core::matching::{LJunction, MatchPair};
use asj_core::scale::{ASJunction, Branch};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchJson {
    pub theta: f64,
    pub scale: f64,
    pub nfa: f64,
}

impl From<&Branch> for BranchJson {
    fn from(b: &Branch) -> Self {
        Self { theta: b.orientation, scale: b.scale, nfa: b.nfa }
    }
}

impl From<&BranchJson> for Branch {
    fn from(b: &BranchJson) -> Self {
        Self { orientation: b.theta, scale: b.scale, nfa: b.nfa }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionJson {
    pub x: f64,
    pub y: f64,
    pub branches: Vec<BranchJson>,
}

impl From<&ASJunction> for JunctionJson {
    fn from(j: &ASJunction) -> Self {
        Self { x: j.center.0, y: j.center.1, branches: j.branches.iter().map(BranchJson::from).collect() }
    }
}

impl JunctionJson {
    pub fn to_junction(&self, source: usize) -> ASJunction {
        ASJunction { center: (self.x, self.y), branches: self.branches.iter().map(Branch::from).collect(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectDoc {
    pub image: ImageSize,
    pub params: RunConfig,
    pub junctions: Vec<JunctionJson>,
}

impl DetectDoc {
    pub fn new(size: ImageSize, params: RunConfig, junctions: &[ASJunction]) -> Self {
        Self { image: size, params, junctions: junctions.iter().map(JunctionJson::from).collect() }
    }
}

/// One L-junction: its center, the two branches in canonical order, and the
/// index of the detected junction it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LJunctionJson {
    pub x: f64,
    pub y: f64,
    pub parent: usize,
    pub branches: [BranchJson; 2],
}

impl From<&LJunction> for LJunctionJson {
    fn from(l: &LJunction) -> Self {
        Self {
            x: l.center.0,
            y: l.center.1,
            parent: l.parent,
            branches: [BranchJson::from(&l.branch1), BranchJson::from(&l.branch2)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    /// Index into `junctions_p`.
    pub p: usize,
    /// Index into `junctions_q`.
    pub q: usize,
    pub dissimilarity: f64,
    /// `h1 … h6` of the map from the first image to the second.
    pub affine: [f64; 6],
}

impl From<&MatchPair> for PairJson {
    fn from(m: &MatchPair) -> Self {
        Self { p: m.index_p, q: m.index_q, dissimilarity: m.dissimilarity, affine: m.forward_map.h }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchDoc {
    pub pairs: Vec<PairJson>,
    pub junctions_p: Vec<LJunctionJson>,
    pub junctions_q: Vec<LJunctionJson>,
}

impl MatchDoc {
    pub fn new(pairs: &[MatchPair], lp: &[LJunction], lq: &[LJunction]) -> Self {
        Self {
            pairs: pairs.iter().map(PairJson::from).collect(),
            junctions_p: lp.iter().map(LJunctionJson::from).collect(),
            junctions_q: lq.iter().map(LJunctionJson::from).collect(),
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents contain only finite numbers");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_round_trip_is_byte_identical() {
        let j = ASJunction {
            center: (12.5, 40.25),
            branches: vec![
                Branch { orientation: 0.1, scale: 17.0, nfa: 1e-7 },
                Branch { orientation: 2.0 / 3.0, scale: 33.0, nfa: 0.123456789 },
            ],
            source: 3,
        };
        let doc = DetectDoc::new(ImageSize { width: 64, height: 48 }, RunConfig::default(), &[j.clone()]);
        let text = to_json(&doc);
        let back: DetectDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(to_json(&back), text);
        assert_eq!(back.junctions[0].to_junction(3), j);
    }

    #[test]
    fn detect_keys_follow_schema() {
        let doc = DetectDoc::new(ImageSize { width: 16, height: 16 }, RunConfig::default(), &[]);
        let v: serde_json::Value = serde_json::from_str(&to_json(&doc)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["image", "junctions", "params"]);
        assert!(v["image"]["width"].is_u64() && v["image"]["height"].is_u64());
    }
}
