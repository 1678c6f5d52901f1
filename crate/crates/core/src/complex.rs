//! Weighted simplicial complexes described by their facets and weights.
//!
//! A facet of weight `w` contributes `w` multifacet labels `(facet, copy)`.
//! Labels are stored in lexicographic order, so label indices are stable and
//! every enumeration over assignments uses the same order.

use std::collections::BTreeSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("facet {0} is empty")]
    EmptyFacet(usize),
    #[error("facet {0} is contained in facet {1}")]
    NonMaximalFacet(usize, usize),
    #[error("vertex {0} lies in no facet")]
    UncoveredVertex(usize),
    #[error("weights violate divisibility between {0:?} and {1:?}")]
    DivisibilityViolation(Vec<usize>, Vec<usize>),
    #[error("vertex {0} out of range for {1} vertices")]
    VertexOutOfRange(usize, usize),
    #[error("facet {0} has weight 0")]
    ZeroWeight(usize),
    #[error("invalid size {0} for {1}")]
    InvalidSize(usize, &'static str),
    #[error("complex must have at least one vertex")]
    NoVertices,
    #[error("json: {0}")]
    Json(String),
}

/// A multifacet label: `(facet index, copy index)` with `copy < weight`.
pub type Label = (usize, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedComplex {
    vertex_count: usize,
    facets: Vec<Vec<usize>>,
    weights: Vec<u32>,
    labels: Vec<Label>,
    facet_offset: Vec<usize>,
    labels_at: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardKind {
    Simplex,
    Line,
    Circle,
    DoubleEdge,
    SingleEdge,
}

impl std::str::FromStr for StandardKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simplex" => Self::Simplex,
            "line" => Self::Line,
            "circle" => Self::Circle,
            "double_edge" | "double-edge" => Self::DoubleEdge,
            "single_edge" | "single-edge" => Self::SingleEdge,
            other => return Err(format!("unknown complex kind {other:?}")),
        })
    }
}

/// Cap on the facet size for the exhaustive divisibility check.
const DIVISIBILITY_SUBSET_CAP: usize = 16;

impl WeightedComplex {
    /// Build from `(vertex set, weight)` pairs on vertices `0..vertex_count`.
    pub fn build(vertex_count: usize, facet_list: &[(Vec<usize>, u32)]) -> Result<Self, ComplexError> {
        if vertex_count == 0 {
            return Err(ComplexError::NoVertices);
        }
        let mut facets = Vec::with_capacity(facet_list.len());
        let mut weights = Vec::with_capacity(facet_list.len());
        for (idx, (verts, w)) in facet_list.iter().enumerate() {
            if verts.is_empty() {
                return Err(ComplexError::EmptyFacet(idx));
            }
            if *w == 0 {
                return Err(ComplexError::ZeroWeight(idx));
            }
            let set: BTreeSet<usize> = verts.iter().copied().collect();
            if let Some(&v) = set.iter().find(|&&v| v >= vertex_count) {
                return Err(ComplexError::VertexOutOfRange(v, vertex_count));
            }
            facets.push(set.into_iter().collect::<Vec<_>>());
            weights.push(*w);
        }
        for a in 0..facets.len() {
            for b in 0..facets.len() {
                if a != b && is_subset(&facets[a], &facets[b]) && (facets[a] != facets[b] || a > b) {
                    return Err(ComplexError::NonMaximalFacet(a, b));
                }
            }
        }
        let mut labels_at = vec![Vec::new(); vertex_count];
        let mut labels = Vec::new();
        let mut facet_offset = Vec::with_capacity(facets.len());
        for (f, verts) in facets.iter().enumerate() {
            facet_offset.push(labels.len());
            for copy in 0..weights[f] {
                for &v in verts {
                    labels_at[v].push(labels.len());
                }
                labels.push((f, copy));
            }
        }
        if let Some(v) = labels_at.iter().position(|l| l.is_empty()) {
            return Err(ComplexError::UncoveredVertex(v));
        }
        let c = Self { vertex_count, facets, weights, labels, facet_offset, labels_at };
        c.check_divisibility()?;
        Ok(c)
    }

    /// Standard families. `simplex(n)` and `line(n)` live on `n+1` vertices,
    /// `circle(n)` on `n` vertices with `n` edges; the edges ignore `n`.
    pub fn standard(kind: StandardKind, n: usize) -> Result<Self, ComplexError> {
        match kind {
            StandardKind::Simplex => Self::build(n + 1, &[((0..=n).collect(), 1)]),
            StandardKind::Line => {
                if n < 1 {
                    return Err(ComplexError::InvalidSize(n, "line"));
                }
                let facets: Vec<_> = (0..n).map(|i| (vec![i, i + 1], 1)).collect();
                Self::build(n + 1, &facets)
            }
            StandardKind::Circle => {
                if n < 3 {
                    return Err(ComplexError::InvalidSize(n, "circle"));
                }
                let facets: Vec<_> = (0..n).map(|i| (vec![i, (i + 1) % n], 1)).collect();
                Self::build(n, &facets)
            }
            StandardKind::DoubleEdge => Self::build(2, &[(vec![0, 1], 2)]),
            StandardKind::SingleEdge => Self::build(2, &[(vec![0, 1], 1)]),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: Label) -> Option<usize> {
        let (f, copy) = label;
        (f < self.facets.len() && copy < self.weights[f]).then(|| self.facet_offset[f] + copy as usize)
    }

    /// The collapse map: facet of a label index.
    pub fn collapse(&self, label: usize) -> usize {
        self.labels[label].0
    }

    /// Indices of the labels whose facet contains vertex `i`, ascending.
    pub fn multifacets_at(&self, i: usize) -> Result<&[usize], ComplexError> {
        self.labels_at
            .get(i)
            .map(|v| v.as_slice())
            .ok_or(ComplexError::VertexOutOfRange(i, self.vertex_count))
    }

    pub fn labels_at(&self, i: usize) -> &[usize] {
        &self.labels_at[i]
    }

    pub fn facet_index(&self, verts: &[usize]) -> Option<usize> {
        self.facets.iter().position(|f| f == verts)
    }

    /// `Ω(S)`: gcd of the weights of facets containing `S`, 0 if none.
    pub fn omega(&self, s: &[usize]) -> u32 {
        self.facets
            .iter()
            .zip(&self.weights)
            .filter(|(f, _)| s.iter().all(|v| f.contains(v)))
            .fold(0u32, |g, (_, &w)| g.gcd(&w))
    }

    /// Checks `Ω(S₁) | Ω(S₂)` for `S₁ ⊆ S₂ ⊆ F` on every facet `F`. With the
    /// gcd-derived `Ω` this cannot fail; the check guards future extensions.
    fn check_divisibility(&self) -> Result<(), ComplexError> {
        for f in &self.facets {
            let subsets: Vec<Vec<usize>> = if f.len() <= DIVISIBILITY_SUBSET_CAP {
                (1u64..(1 << f.len()))
                    .map(|mask| f.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &v)| v).collect())
                    .collect()
            } else {
                f.iter().map(|&v| vec![v]).chain(std::iter::once(f.clone())).collect()
            };
            let omegas: Vec<u32> = subsets.iter().map(|s| self.omega(s)).collect();
            for (a, s1) in subsets.iter().enumerate() {
                for (b, s2) in subsets.iter().enumerate() {
                    if omegas[b] != 0 && is_subset(s1, s2) && omegas[b] % omegas[a].max(1) != 0 {
                        return Err(ComplexError::DivisibilityViolation(s1.clone(), s2.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the graph "share a facet" on the vertices is connected.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &l in &self.labels_at[v] {
                for &u in &self.facets[self.labels[l].0] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same facets with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: u32) -> Result<Self, ComplexError> {
        let list: Vec<_> = self.facets.iter().cloned().zip(self.weights.iter().map(|w| w * factor)).collect();
        Self::build(self.vertex_count, &list)
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            n: self.vertex_count - 1,
            facets: self
                .facets
                .iter()
                .zip(&self.weights)
                .map(|(v, &w)| FacetJson { vertices: v.clone(), weight: w })
                .collect(),
        }
    }

    pub fn from_json(json: &ComplexJson) -> Result<Self, ComplexError> {
        if json.n >= MAX_VERTICES || json.facets.len() > MAX_FACETS {
            return Err(ComplexError::InvalidSize(json.n, "complex"));
        }
        if json.facets.iter().any(|f| f.weight > MAX_WEIGHT || f.vertices.len() > MAX_VERTICES) {
            return Err(ComplexError::InvalidSize(json.n, "facet"));
        }
        let list: Vec<_> = json.facets.iter().map(|f| (f.vertices.clone(), f.weight)).collect();
        Self::build(json.n + 1, &list)
    }
}

const MAX_VERTICES: usize = 1 << 12;
const MAX_FACETS: usize = 1 << 12;
const MAX_WEIGHT: u32 = 1 << 12;

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|v| b.contains(v))
}

/// `{"n": max vertex index, "facets": [{"vertices": [...], "weight": w}]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub n: usize,
    pub facets: Vec<FacetJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FacetJson {
    pub vertices: Vec<usize>,
    pub weight: u32,
}

pub fn parse_complex(text: &str) -> Result<WeightedComplex, ComplexError> {
    let json: ComplexJson = serde_json::from_str(text).map_err(|e| ComplexError::Json(e.to_string()))?;
    WeightedComplex::from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edges() {
        let single = WeightedComplex::build(2, &[(vec![0, 1], 1)]).unwrap();
        assert_eq!(single.label_count(), 1);
        let double = WeightedComplex::build(2, &[(vec![0, 1], 2)]).unwrap();
        assert_eq!(double.labels(), &[(0, 0), (0, 1)]);
        assert_eq!(double.multifacets_at(0).unwrap(), &[0, 1]);
        assert_eq!(double.multifacets_at(1).unwrap(), &[0, 1]);
        let point = WeightedComplex::build(1, &[(vec![0], 1)]).unwrap();
        assert_eq!(point.label_count(), 1);
        assert_eq!(double.omega(&[0]), 2);
        assert_eq!(double.omega(&[]), 2);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(WeightedComplex::build(2, &[(vec![], 1)]), Err(ComplexError::EmptyFacet(0)));
        assert_eq!(
            WeightedComplex::build(3, &[(vec![0, 1, 2], 1), (vec![0, 1], 1)]),
            Err(ComplexError::NonMaximalFacet(1, 0))
        );
        assert_eq!(
            WeightedComplex::build(2, &[(vec![0, 1], 1), (vec![1, 0], 1)]),
            Err(ComplexError::NonMaximalFacet(1, 0))
        );
        assert_eq!(WeightedComplex::build(3, &[(vec![0, 1], 1)]), Err(ComplexError::UncoveredVertex(2)));
        assert_eq!(WeightedComplex::build(2, &[(vec![0, 5], 1)]), Err(ComplexError::VertexOutOfRange(5, 2)));
        assert!(WeightedComplex::standard(StandardKind::Circle, 2).is_err());
        assert!(WeightedComplex::standard(StandardKind::Line, 0).is_err());
    }

    #[test]
    fn standard_families() {
        let s = WeightedComplex::standard(StandardKind::Simplex, 4).unwrap();
        assert_eq!(s.facets(), &[vec![0, 1, 2, 3, 4]]);
        assert_eq!(s.label_count(), 1);
        assert_eq!(s.multifacets_at(3).unwrap().len(), 1);
        let l = WeightedComplex::standard(StandardKind::Line, 3).unwrap();
        assert_eq!(l.facets().len(), 3);
        let c = WeightedComplex::standard(StandardKind::Circle, 5).unwrap();
        assert_eq!(c.facets().len(), 5);
        for i in 0..5 {
            assert_eq!(c.multifacets_at(i).unwrap().len(), 2);
        }
        let at2: Vec<_> = c.multifacets_at(2).unwrap().iter().map(|&l| c.facets()[c.collapse(l)].clone()).collect();
        assert_eq!(at2, vec![vec![1, 2], vec![2, 3]]);
        assert!(matches!(c.multifacets_at(5), Err(ComplexError::VertexOutOfRange(5, 5))));
    }

    #[test]
    fn connectivity() {
        assert!(WeightedComplex::standard(StandardKind::Circle, 5).unwrap().is_connected());
        assert!(WeightedComplex::standard(StandardKind::SingleEdge, 1).unwrap().is_connected());
        let split = WeightedComplex::build(4, &[(vec![0, 1], 1), (vec![2, 3], 1)]).unwrap();
        assert!(!split.is_connected());
    }

    #[test]
    fn json_round_trip() {
        let c = WeightedComplex::build(3, &[(vec![0, 1], 2), (vec![1, 2], 4)]).unwrap();
        let text = serde_json::to_string(&c.to_json()).unwrap();
        assert_eq!(parse_complex(&text).unwrap(), c);
        assert!(parse_complex("{\"n\": 1}").is_err());
    }

    fn arb_complex() -> impl Strategy<Value = WeightedComplex> {
        (2usize..7, prop::collection::vec((prop::collection::vec(0usize..7, 1..4), 1u32..5), 1..6)).prop_filter_map(
            "valid complex",
            |(nv, facets)| {
                let facets: Vec<_> = facets.into_iter().map(|(v, w)| (v.into_iter().map(|x| x % nv).collect(), w)).collect();
                WeightedComplex::build(nv, &facets).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn weights_count_labels(c in arb_complex()) {
            prop_assert_eq!(c.weights().iter().sum::<u32>() as usize, c.label_count());
            for f in 0..c.facets().len() {
                let fiber = (0..c.label_count()).filter(|&l| c.collapse(l) == f).count();
                prop_assert_eq!(fiber, c.weights()[f] as usize);
            }
        }

        #[test]
        fn omega_divides_along_inclusion(c in arb_complex(), mask1 in 0u32..128, mask2 in 0u32..128) {
            let nv = c.vertex_count();
            let s2: Vec<usize> = (0..nv).filter(|v| mask2 >> v & 1 == 1).collect();
            let s1: Vec<usize> = s2.iter().copied().filter(|v| mask1 >> v & 1 == 1).collect();
            let (o1, o2) = (c.omega(&s1), c.omega(&s2));
            if o2 != 0 {
                prop_assert_eq!(o2 % o1, 0);
            }
        }

        #[test]
        fn simplex_is_connected(n in 0usize..12) {
            prop_assert!(WeightedComplex::standard(StandardKind::Simplex, n).unwrap().is_connected());
        }
    }
}
