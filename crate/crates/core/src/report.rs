//! Deterministic JSON output.
//!
//! Rationals are written as `"p/q"` strings, maps are ordered, and wall-clock
//! times are never serialized, so identical runs give identical bytes.

use crate::params::ParamSet;
use serde::Serialize;
use std::collections::BTreeMap;

/// Every command's output: what ran, with which seed and constants.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub params: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub result: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, params: &ParamSet, result: &'a T) -> Self {
        Envelope { command, seed: params.seed, params: params.to_map(), warnings: vec![], result }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_sparsest_cut, generators::dumbbell};

    #[test]
    fn envelope_is_stable() {
        let g = dumbbell(4, 4);
        let a = exact_sparsest_cut(&g).unwrap();
        let p = ParamSet::default();
        let one = to_json(&Envelope::new("oracle", &p, &a));
        let two = to_json(&Envelope::new("oracle", &p, &exact_sparsest_cut(&g).unwrap()));
        assert_eq!(one, two);
        assert!(one.contains("\"value\": \"1/4\""));
        assert!(!one.contains("wall_ms"));
        assert!(one.ends_with("}\n"));
    }
}
