//! Finite group actions on weighted simplicial complexes.
//!
//! A group is stored abstractly by its composition table; each element carries
//! a permutation of the vertices and a permutation of the multifacet labels.
//! Element 0 is always the identity and `mul[g][h]` is `gh`, meaning "first
//! `h`, then `g`".

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{ComplexError, WeightedComplex};

pub const DEFAULT_MAX_GROUP: usize = 10080;
pub const DEFAULT_BLENDING_GUARD: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("generator {0}: {1}")]
    BadPermutation(usize, String),
    #[error("element maps facet {0:?} to {1:?}, which is not a facet of the same weight")]
    WeightNotPreserved(Vec<usize>, Vec<usize>),
    #[error("multifacet permutation does not cover the vertex action at label {0}")]
    CollapseNotLinear(usize),
    #[error("group exceeds {0} elements")]
    GroupTooLarge(usize),
    #[error("composition table is not a group: {0}")]
    NotAGroup(String),
    #[error("the action is not free on the multifacets")]
    ActionNotFree,
    #[error("the action is not blending")]
    ActionNotBlending,
    #[error("the complex is not connected")]
    NotConnected,
    #[error("search space exceeds the guard of {0}")]
    SearchSpaceTooLarge(u64),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryAction {
    complex: WeightedComplex,
    mul: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    vertex_perm: Vec<Vec<usize>>,
    label_perm: Vec<Vec<usize>>,
}

fn check_perm(p: &[usize], len: usize) -> Result<(), String> {
    if p.len() != len {
        return Err(format!("expected {len} entries, got {}", p.len()));
    }
    let mut seen = vec![false; len];
    for &x in p {
        if x >= len || seen[x] {
            return Err(format!("{p:?} is not a permutation"));
        }
        seen[x] = true;
    }
    Ok(())
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

impl SymmetryAction {
    pub fn trivial(complex: &WeightedComplex) -> Self {
        Self {
            complex: complex.clone(),
            mul: vec![vec![0]],
            inverse: vec![0],
            vertex_perm: vec![(0..complex.vertex_count()).collect()],
            label_perm: vec![(0..complex.label_count()).collect()],
        }
    }

    /// Close `(vertex permutation, label permutation)` generators into the full
    /// group and validate it.
    pub fn build(
        complex: &WeightedComplex,
        generators: &[(Vec<usize>, Vec<usize>)],
        max_group: usize,
    ) -> Result<Self, SymmetryError> {
        let nv = complex.vertex_count();
        let nl = complex.label_count();
        for (idx, (vp, lp)) in generators.iter().enumerate() {
            check_perm(vp, nv).map_err(|e| SymmetryError::BadPermutation(idx, e))?;
            check_perm(lp, nl).map_err(|e| SymmetryError::BadPermutation(idx, e))?;
            validate_element(complex, vp, lp)?;
        }
        let identity: Vec<usize> = (0..nv + nl).collect();
        let gens: Vec<Vec<usize>> = generators
            .iter()
            .map(|(vp, lp)| vp.iter().copied().chain(lp.iter().map(|&l| l + nv)).collect())
            .collect();
        let mut elements = vec![identity.clone()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(identity, 0)]);
        let mut frontier = 0;
        while frontier < elements.len() {
            for g in &gens {
                let prod = compose(g, &elements[frontier]);
                if !index.contains_key(&prod) {
                    if elements.len() >= max_group {
                        return Err(SymmetryError::GroupTooLarge(max_group));
                    }
                    index.insert(prod.clone(), elements.len());
                    elements.push(prod);
                }
            }
            frontier += 1;
        }
        let k = elements.len();
        let mut mul = vec![vec![0; k]; k];
        for a in 0..k {
            for b in 0..k {
                mul[a][b] = index[&compose(&elements[a], &elements[b])];
            }
        }
        let inverse = (0..k).map(|a| (0..k).find(|&b| mul[a][b] == 0).expect("finite group")).collect();
        Ok(Self {
            complex: complex.clone(),
            mul,
            inverse,
            vertex_perm: elements.iter().map(|e| e[..nv].to_vec()).collect(),
            label_perm: elements.iter().map(|e| e[nv..].iter().map(|&l| l - nv).collect()).collect(),
        })
    }

    /// Generators given only on vertices; labels follow their facets and keep
    /// their copy index.
    pub fn induced(complex: &WeightedComplex, vertex_generators: &[Vec<usize>]) -> Result<Self, SymmetryError> {
        let mut gens = Vec::new();
        for (idx, vp) in vertex_generators.iter().enumerate() {
            check_perm(vp, complex.vertex_count()).map_err(|e| SymmetryError::BadPermutation(idx, e))?;
            gens.push((vp.clone(), induced_label_perm(complex, vp)?));
        }
        Self::build(complex, &gens, DEFAULT_MAX_GROUP)
    }

    /// Build from an explicit composition table and per-element permutations.
    pub fn from_parts(
        complex: &WeightedComplex,
        mul: Vec<Vec<usize>>,
        vertex_perm: Vec<Vec<usize>>,
        label_perm: Vec<Vec<usize>>,
    ) -> Result<Self, SymmetryError> {
        let k = mul.len();
        if k == 0 || vertex_perm.len() != k || label_perm.len() != k || mul.iter().any(|r| r.len() != k) {
            return Err(SymmetryError::NotAGroup("inconsistent sizes".into()));
        }
        if mul.iter().flatten().any(|&x| x >= k) {
            return Err(SymmetryError::NotAGroup("table entry out of range".into()));
        }
        for g in 0..k {
            if mul[0][g] != g || mul[g][0] != g {
                return Err(SymmetryError::NotAGroup("element 0 is not the identity".into()));
            }
        }
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(SymmetryError::NotAGroup("not associative".into()));
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(k);
        for a in 0..k {
            match (0..k).find(|&b| mul[a][b] == 0 && mul[b][a] == 0) {
                Some(b) => inverse.push(b),
                None => return Err(SymmetryError::NotAGroup(format!("element {a} has no inverse"))),
            }
        }
        for g in 0..k {
            check_perm(&vertex_perm[g], complex.vertex_count()).map_err(|e| SymmetryError::BadPermutation(g, e))?;
            check_perm(&label_perm[g], complex.label_count()).map_err(|e| SymmetryError::BadPermutation(g, e))?;
            validate_element(complex, &vertex_perm[g], &label_perm[g])?;
        }
        for a in 0..k {
            for b in 0..k {
                let ab = mul[a][b];
                if compose(&vertex_perm[a], &vertex_perm[b]) != vertex_perm[ab]
                    || compose(&label_perm[a], &label_perm[b]) != label_perm[ab]
                {
                    return Err(SymmetryError::NotAGroup("permutations are not a homomorphism".into()));
                }
            }
        }
        Ok(Self { complex: complex.clone(), mul, inverse, vertex_perm, label_perm })
    }

    pub fn complex(&self) -> &WeightedComplex {
        &self.complex
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.mul[g][h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.mul
    }

    pub fn vertex(&self, g: usize, i: usize) -> usize {
        self.vertex_perm[g][i]
    }

    pub fn label(&self, g: usize, l: usize) -> usize {
        self.label_perm[g][l]
    }

    pub fn vertex_perm(&self, g: usize) -> &[usize] {
        &self.vertex_perm[g]
    }

    pub fn label_perm(&self, g: usize) -> &[usize] {
        &self.label_perm[g]
    }

    pub fn vertex_stabilizer(&self, i: usize) -> Vec<usize> {
        (0..self.order()).filter(|&g| self.vertex_perm[g][i] == i).collect()
    }

    pub fn label_stabilizer(&self, l: usize) -> Vec<usize> {
        (0..self.order()).filter(|&g| self.label_perm[g][l] == l).collect()
    }

    pub fn vertex_orbit(&self, i: usize) -> BTreeSet<usize> {
        (0..self.order()).map(|g| self.vertex_perm[g][i]).collect()
    }

    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        orbits(self.complex.vertex_count(), |v| self.vertex_orbit(v))
    }

    pub fn label_orbits(&self) -> Vec<Vec<usize>> {
        orbits(self.complex.label_count(), |l| (0..self.order()).map(|g| self.label_perm[g][l]).collect())
    }

    /// Trivial stabilizers on every multifacet label.
    pub fn is_free(&self) -> bool {
        (0..self.complex.label_count()).all(|l| (1..self.order()).all(|g| self.label_perm[g][l] != l))
    }

    pub fn is_vertex_free(&self) -> bool {
        (0..self.complex.vertex_count()).all(|v| (1..self.order()).all(|g| self.vertex_perm[g][v] != v))
    }

    /// Every bijection `f` of the vertices with `f(i) ∈ G·i` for all `i` (that
    /// is, every tuple `(g₀,…,gₙ)` with `{g₀0,…,gₙn} = [n]`) must be the vertex
    /// permutation of a single group element. Enumerates such bijections by
    /// backtracking; `guard` caps the number of visited partial assignments.
    pub fn is_blending(&self, guard: u64) -> Result<bool, SymmetryError> {
        let nv = self.complex.vertex_count();
        let realized: HashSet<&[usize]> = self.vertex_perm.iter().map(|p| p.as_slice()).collect();
        let orbits: Vec<Vec<usize>> = (0..nv).map(|i| self.vertex_orbit(i).into_iter().collect()).collect();
        let mut f = vec![usize::MAX; nv];
        let mut used = vec![false; nv];
        let mut visited = 0u64;
        fn rec(
            i: usize,
            orbits: &[Vec<usize>],
            f: &mut Vec<usize>,
            used: &mut Vec<bool>,
            realized: &HashSet<&[usize]>,
            visited: &mut u64,
            guard: u64,
        ) -> Result<bool, SymmetryError> {
            *visited += 1;
            if *visited > guard {
                return Err(SymmetryError::SearchSpaceTooLarge(guard));
            }
            if i == f.len() {
                return Ok(realized.contains(f.as_slice()));
            }
            for &t in &orbits[i] {
                if !used[t] {
                    used[t] = true;
                    f[i] = t;
                    let ok = rec(i + 1, orbits, f, used, realized, visited, guard)?;
                    used[t] = false;
                    if !ok {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        rec(0, &orbits, &mut f, &mut used, &realized, &mut visited, guard)
    }

    /// Weights multiplied by `|G|`; the new label `(ℓ, h)` has copy index
    /// `copy(ℓ)·|G| + h` and `g·(ℓ, h) = (gℓ, gh)`, which is always free.
    pub fn free_refinement(&self) -> Result<Self, SymmetryError> {
        if !self.complex.is_connected() {
            return Err(SymmetryError::NotConnected);
        }
        let k = self.order();
        let refined = self.complex.scale_weights(k as u32)?;
        let nl = self.complex.label_count();
        let label_perm = (0..k)
            .map(|g| {
                let mut p = vec![0; nl * k];
                for l in 0..nl {
                    for h in 0..k {
                        p[l * k + h] = self.label_perm[g][l] * k + self.mul[g][h];
                    }
                }
                p
            })
            .collect();
        Self::from_parts(&refined, self.mul.clone(), self.vertex_perm.clone(), label_perm)
    }

    /// A G-linear map `z` from labels to group elements: the lexicographically
    /// smallest label of each orbit maps to the identity and `z(g·rep) = g`.
    pub fn linearizer(&self) -> Result<Vec<usize>, SymmetryError> {
        if !self.is_free() {
            return Err(SymmetryError::ActionNotFree);
        }
        let mut z = vec![usize::MAX; self.complex.label_count()];
        for l in 0..z.len() {
            if z[l] == usize::MAX {
                for g in 0..self.order() {
                    z[self.label_perm[g][l]] = g;
                }
            }
        }
        Ok(z)
    }

    /// Position map for the action on assignments: `(ᵍβ)(ℓ) = β(g⁻¹ℓ)` sends
    /// an assignment on the labels at `i` to one on the labels at `gi`. Entry
    /// `k` of the result is the position in `labels_at(i)` feeding position `k`
    /// of `labels_at(gi)`.
    pub fn assignment_map(&self, g: usize, i: usize) -> Vec<usize> {
        let gi = self.vertex_perm[g][i];
        let src = self.complex.labels_at(i);
        let ginv = self.inverse[g];
        self.complex
            .labels_at(gi)
            .iter()
            .map(|&l| {
                let pre = self.label_perm[ginv][l];
                src.iter().position(|&x| x == pre).expect("label action covers the vertex action")
            })
            .collect()
    }

    pub fn act_assignment(&self, g: usize, i: usize, beta: &[u32]) -> Vec<u32> {
        self.assignment_map(g, i).into_iter().map(|k| beta[k]).collect()
    }

    pub fn to_json(&self) -> ActionJson {
        ActionJson {
            generators: (1..self.order())
                .map(|g| GeneratorJson { vertex_perm: self.vertex_perm[g].clone(), multifacet_perm: self.label_perm[g].clone() })
                .collect(),
        }
    }

    pub fn from_json(complex: &WeightedComplex, json: &ActionJson, max_group: usize) -> Result<Self, SymmetryError> {
        let gens: Vec<_> = json.generators.iter().map(|g| (g.vertex_perm.clone(), g.multifacet_perm.clone())).collect();
        Self::build(complex, &gens, max_group)
    }
}

fn orbits(count: usize, orbit_of: impl Fn(usize) -> BTreeSet<usize>) -> Vec<Vec<usize>> {
    let mut seen = vec![false; count];
    let mut out = Vec::new();
    for x in 0..count {
        if !seen[x] {
            let orb = orbit_of(x);
            for &y in &orb {
                seen[y] = true;
            }
            out.push(orb.into_iter().collect());
        }
    }
    out
}

fn validate_element(complex: &WeightedComplex, vp: &[usize], lp: &[usize]) -> Result<(), SymmetryError> {
    for (f, verts) in complex.facets().iter().enumerate() {
        let mut image: Vec<usize> = verts.iter().map(|&v| vp[v]).collect();
        image.sort_unstable();
        match complex.facet_index(&image) {
            Some(t) if complex.weights()[t] == complex.weights()[f] => {}
            _ => return Err(SymmetryError::WeightNotPreserved(verts.clone(), image)),
        }
    }
    for l in 0..complex.label_count() {
        let mut image: Vec<usize> = complex.facets()[complex.collapse(l)].iter().map(|&v| vp[v]).collect();
        image.sort_unstable();
        if complex.facets()[complex.collapse(lp[l])] != image {
            return Err(SymmetryError::CollapseNotLinear(l));
        }
    }
    Ok(())
}

fn induced_label_perm(complex: &WeightedComplex, vp: &[usize]) -> Result<Vec<usize>, SymmetryError> {
    complex
        .labels()
        .iter()
        .map(|&(f, copy)| {
            let mut image: Vec<usize> = complex.facets()[f].iter().map(|&v| vp[v]).collect();
            image.sort_unstable();
            let t = complex
                .facet_index(&image)
                .filter(|&t| complex.weights()[t] == complex.weights()[f])
                .ok_or_else(|| SymmetryError::WeightNotPreserved(complex.facets()[f].clone(), image.clone()))?;
            Ok(complex.label_index((t, copy)).expect("same weight"))
        })
        .collect()
}

/// `{"generators": [{"vertex_perm": [...], "multifacet_perm": [...]}]}`; label
/// indices refer to the lexicographic order of `(facet, copy)` pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct ActionJson {
    pub generators: Vec<GeneratorJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorJson {
    pub vertex_perm: Vec<usize>,
    pub multifacet_perm: Vec<usize>,
}

pub fn parse_action(complex: &WeightedComplex, text: &str, max_group: usize) -> Result<SymmetryAction, SymmetryError> {
    let json: ActionJson = serde_json::from_str(text).map_err(|e| SymmetryError::Json(e.to_string()))?;
    SymmetryAction::from_json(complex, &json, max_group)
}

/// Ready-made actions on the standard complexes.
pub mod standard {
    use super::*;
    use crate::complex::StandardKind;

    /// `C₂` on the double edge swapping both vertices and multifacets (free).
    pub fn double_edge_free() -> SymmetryAction {
        let c = WeightedComplex::standard(StandardKind::DoubleEdge, 1).expect("valid");
        SymmetryAction::build(&c, &[(vec![1, 0], vec![1, 0])], DEFAULT_MAX_GROUP).expect("valid")
    }

    /// `C₂` on the double edge swapping vertices only (not free).
    pub fn double_edge_vertex_swap() -> SymmetryAction {
        let c = WeightedComplex::standard(StandardKind::DoubleEdge, 1).expect("valid");
        SymmetryAction::build(&c, &[(vec![1, 0], vec![0, 1])], DEFAULT_MAX_GROUP).expect("valid")
    }

    /// `C₂` on the double edge fixing vertices and swapping the multifacets.
    pub fn double_edge_fixed_vertices() -> SymmetryAction {
        let c = WeightedComplex::standard(StandardKind::DoubleEdge, 1).expect("valid");
        SymmetryAction::build(&c, &[(vec![0, 1], vec![1, 0])], DEFAULT_MAX_GROUP).expect("valid")
    }

    pub fn single_edge_swap() -> SymmetryAction {
        let c = WeightedComplex::standard(StandardKind::SingleEdge, 1).expect("valid");
        SymmetryAction::induced(&c, &[vec![1, 0]]).expect("valid")
    }

    /// Rotation `i ↦ i+1` on the circle with `n` vertices.
    pub fn circle_rotation(n: usize) -> Result<SymmetryAction, SymmetryError> {
        let c = WeightedComplex::standard(StandardKind::Circle, n)?;
        SymmetryAction::induced(&c, &[(0..n).map(|i| (i + 1) % n).collect()])
    }

    /// Reversal `i ↦ n-i` on the line with vertices `0..=n`.
    pub fn line_reversal(n: usize) -> Result<SymmetryAction, SymmetryError> {
        let c = WeightedComplex::standard(StandardKind::Line, n)?;
        SymmetryAction::induced(&c, &[(0..=n).map(|i| n - i).collect()])
    }

    /// The full symmetric group on the vertices of `simplex(n)`.
    pub fn simplex_symmetric(n: usize) -> Result<SymmetryAction, SymmetryError> {
        let c = WeightedComplex::standard(StandardKind::Simplex, n)?;
        if n == 0 {
            return Ok(SymmetryAction::trivial(&c));
        }
        let mut swap: Vec<usize> = (0..=n).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..=n).map(|i| (i + 1) % (n + 1)).collect();
        SymmetryAction::induced(&c, &[swap, cycle])
    }

    /// The cyclic group on the vertices of `simplex(n)`.
    pub fn simplex_cyclic(n: usize) -> Result<SymmetryAction, SymmetryError> {
        let c = WeightedComplex::standard(StandardKind::Simplex, n)?;
        SymmetryAction::induced(&c, &[(0..=n).map(|i| (i + 1) % (n + 1)).collect()])
    }
}

#[cfg(test)]
mod tests {
    use super::standard::*;
    use super::*;
    use crate::complex::StandardKind;
    use proptest::prelude::*;

    #[test]
    fn double_edge_actions() {
        let free = double_edge_free();
        assert_eq!(free.order(), 2);
        assert!(free.is_free());
        let swap = double_edge_vertex_swap();
        assert_eq!(swap.order(), 2);
        assert!(!swap.is_free());
        let c = WeightedComplex::standard(StandardKind::SingleEdge, 1).unwrap();
        assert_eq!(SymmetryAction::build(&c, &[(vec![0, 1], vec![0])], 10).unwrap().order(), 1);
    }

    #[test]
    fn construction_errors() {
        let c = WeightedComplex::build(3, &[(vec![0, 1], 1), (vec![1, 2], 2)]).unwrap();
        assert!(matches!(
            SymmetryAction::build(&c, &[(vec![2, 1, 0], vec![0, 1, 2])], 10),
            Err(SymmetryError::WeightNotPreserved(..))
        ));
        let d = WeightedComplex::build(3, &[(vec![0, 1], 1), (vec![1, 2], 1)]).unwrap();
        assert!(matches!(
            SymmetryAction::build(&d, &[(vec![2, 1, 0], vec![0, 1])], 10),
            Err(SymmetryError::CollapseNotLinear(0))
        ));
        assert!(matches!(simplex_symmetric_capped(5, 100), Err(SymmetryError::GroupTooLarge(100))));
    }

    fn simplex_symmetric_capped(n: usize, cap: usize) -> Result<SymmetryAction, SymmetryError> {
        let c = WeightedComplex::standard(StandardKind::Simplex, n)?;
        let mut swap: Vec<usize> = (0..=n).collect();
        swap.swap(0, 1);
        let cycle: Vec<usize> = (0..=n).map(|i| (i + 1) % (n + 1)).collect();
        SymmetryAction::build(&c, &[(swap, vec![0]), (cycle, vec![0])], cap)
    }

    #[test]
    fn freeness_examples() {
        assert!(!single_edge_swap().is_free());
        for n in 3..8 {
            assert!(circle_rotation(n).unwrap().is_free());
        }
        for n in 1..8 {
            assert_eq!(line_reversal(n).unwrap().is_free(), n % 2 == 0, "line({n})");
        }
    }

    #[test]
    fn blending_examples() {
        for n in 1..5 {
            assert!(simplex_symmetric(n).unwrap().is_blending(DEFAULT_BLENDING_GUARD).unwrap());
        }
        for n in 3..7 {
            assert!(!circle_rotation(n).unwrap().is_blending(DEFAULT_BLENDING_GUARD).unwrap());
        }
        for n in 1..6 {
            assert_eq!(line_reversal(n).unwrap().is_blending(DEFAULT_BLENDING_GUARD).unwrap(), n <= 2, "line({n})");
        }
        assert!(matches!(simplex_symmetric(5).unwrap().is_blending(100), Err(SymmetryError::SearchSpaceTooLarge(100))));
    }

    /// Brute force over all tuples `(g₀,…,gₙ)` as in the definition.
    fn blending_by_tuples(a: &SymmetryAction) -> bool {
        let nv = a.complex().vertex_count();
        let k = a.order();
        let total = k.pow(nv as u32);
        (0..total).all(|mut code| {
            let mut f = Vec::with_capacity(nv);
            for i in 0..nv {
                f.push(a.vertex(code % k, i));
                code /= k;
            }
            let set: BTreeSet<usize> = f.iter().copied().collect();
            set.len() < nv || (0..k).any(|g| a.vertex_perm(g) == f.as_slice())
        })
    }

    #[test]
    fn blending_agrees_with_tuple_enumeration() {
        let actions = vec![
            simplex_symmetric(2).unwrap(),
            simplex_symmetric(3).unwrap(),
            simplex_cyclic(3).unwrap(),
            circle_rotation(4).unwrap(),
            line_reversal(2).unwrap(),
            line_reversal(3).unwrap(),
            double_edge_free(),
            double_edge_fixed_vertices(),
        ];
        for a in actions {
            assert_eq!(a.is_blending(DEFAULT_BLENDING_GUARD).unwrap(), blending_by_tuples(&a));
        }
    }

    #[test]
    fn refinement_examples() {
        let r = single_edge_swap().free_refinement().unwrap();
        assert_eq!(r.complex(), double_edge_free().complex());
        assert!(r.is_free());
        assert_eq!(r.label_perm(1), &[1, 0]);
        let c = WeightedComplex::standard(StandardKind::Circle, 4).unwrap();
        let t = SymmetryAction::trivial(&c);
        assert_eq!(t.free_refinement().unwrap().complex(), &c);
        let s = simplex_symmetric(1).unwrap().free_refinement().unwrap();
        assert_eq!(s.complex().weights(), &[2]);
        assert!(s.is_free());
        let split = WeightedComplex::build(4, &[(vec![0, 1], 1), (vec![2, 3], 1)]).unwrap();
        assert_eq!(SymmetryAction::trivial(&split).free_refinement(), Err(SymmetryError::NotConnected));
    }

    #[test]
    fn linearizer_examples() {
        assert_eq!(double_edge_free().linearizer().unwrap(), vec![0, 1]);
        let c = WeightedComplex::standard(StandardKind::Line, 3).unwrap();
        assert_eq!(SymmetryAction::trivial(&c).linearizer().unwrap(), vec![0, 0, 0]);
        assert_eq!(single_edge_swap().linearizer(), Err(SymmetryError::ActionNotFree));
        let a = circle_rotation(5).unwrap();
        let z = a.linearizer().unwrap();
        assert_eq!(z[0], 0);
        for g in 0..a.order() {
            for l in 0..5 {
                assert_eq!(z[a.label(g, l)], a.mul(g, z[l]));
            }
        }
    }

    #[test]
    fn assignment_action_on_double_edge() {
        let a = double_edge_free();
        // (cβ)(𝔞) = β(𝔟)
        assert_eq!(a.act_assignment(1, 0, &[3, 7]), vec![7, 3]);
        assert_eq!(a.act_assignment(0, 1, &[3, 7]), vec![3, 7]);
    }

    #[test]
    fn json_round_trip() {
        let a = circle_rotation(4).unwrap();
        let text = serde_json::to_string(&a.to_json()).unwrap();
        let b = parse_action(a.complex(), &text, DEFAULT_MAX_GROUP).unwrap();
        assert_eq!(b.order(), 4);
        assert!(parse_action(a.complex(), "{\"generators\":[{\"vertex_perm\":[0],\"multifacet_perm\":[]}]}", 10).is_err());
    }

    fn arb_action() -> impl Strategy<Value = SymmetryAction> {
        prop_oneof![
            (3usize..7).prop_map(|n| circle_rotation(n).unwrap()),
            (1usize..6).prop_map(|n| line_reversal(n).unwrap()),
            (1usize..4).prop_map(|n| simplex_symmetric(n).unwrap()),
            (1usize..5).prop_map(|n| simplex_cyclic(n).unwrap()),
            Just(double_edge_vertex_swap()),
            Just(double_edge_fixed_vertices()),
        ]
    }

    proptest! {
        #[test]
        fn refinement_is_free_and_linearizer_is_linear(a in arb_action()) {
            let r = a.free_refinement().unwrap();
            prop_assert!(r.is_free());
            prop_assert_eq!(r.complex().label_count(), a.complex().label_count() * a.order());
            let z = r.linearizer().unwrap();
            for g in 0..r.order() {
                for l in 0..z.len() {
                    prop_assert_eq!(z[r.label(g, l)], r.mul(g, z[l]));
                }
            }
        }

        #[test]
        fn orbit_sizes_divide_group_order(a in arb_action()) {
            for orb in a.label_orbits() {
                prop_assert_eq!(a.order() % orb.len(), 0);
            }
            for orb in a.vertex_orbits() {
                prop_assert_eq!(a.order() % orb.len(), 0);
            }
        }

        #[test]
        fn assignment_action_is_a_homomorphism(a in arb_action(), seed in any::<u64>()) {
            let c = a.complex();
            for i in 0..c.vertex_count() {
                let len = c.labels_at(i).len();
                let beta: Vec<u32> = (0..len).map(|k| ((seed >> (3 * k)) & 7) as u32).collect();
                prop_assert_eq!(a.act_assignment(0, i, &beta), beta.clone());
                for g in 0..a.order() {
                    for h in 0..a.order() {
                        let step = a.act_assignment(g, a.vertex(h, i), &a.act_assignment(h, i, &beta));
                        prop_assert_eq!(step, a.act_assignment(a.mul(g, h), i, &beta));
                    }
                }
            }
        }
    }
}
