//! Cross-module round trips through the public API.

use num_rational::BigRational;
use omega_core::complex::{parse_complex, StandardKind, WeightedComplex};
use omega_core::decomposition::{
    bipartite_rank, elementary_sum, parse_decomposition, random_invariant_terms, symmetrize_free,
    DEFAULT_MAX_ASSIGNMENTS as G,
};
use omega_core::familycheck::{family_decomposition, family_polynomial, planted_violation, transfer_tensor};
use omega_core::polynomial::RationalPoly;
use omega_core::positivity::{invariant_sos_family, sos_to_plain, double_edge_sos_witness, illustrating_polynomial};
use omega_core::scalar::rat;
use omega_core::symmetry::standard::*;
use omega_core::symmetry::{parse_action, SymmetryAction};
use omega_core::tensorbridge::{distance_matrix, poly_from_tensor, tensor_from_poly, tensor_positivity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn complex_and_action_json_round_trip() {
    let a = circle_rotation(5).unwrap();
    let ctext = serde_json::to_string(&a.complex().to_json()).unwrap();
    let c = parse_complex(&ctext).unwrap();
    assert_eq!(&c, a.complex());
    let atext = serde_json::to_string(&a.to_json()).unwrap();
    let back = parse_action(&c, &atext, 100).unwrap();
    assert_eq!(back.order(), 5);
    assert!(back.is_free());
}

#[test]
fn symmetrized_decomposition_survives_json() {
    let a = circle_rotation(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let terms = random_invariant_terms(&a, &mut rng, 1, 2);
    let d = symmetrize_free(&[1; 4], &terms, &a).unwrap();
    let text = serde_json::to_string(&d.to_json()).unwrap();
    let back = parse_decomposition(&text).unwrap().to_surd(&a).unwrap();
    let c = back.contract(G).unwrap();
    assert!(c.is_exact());
    assert_eq!(c.poly, elementary_sum(&[1; 4], &terms).unwrap().to_surd());
}

#[test]
fn family_tensor_and_polynomial_agree() {
    let f = planted_violation();
    for n in 0..4 {
        let t = transfer_tensor(&f, n, G).unwrap();
        let p = family_polynomial(&f, n, G).unwrap();
        assert_eq!(poly_from_tensor(&t), p);
        assert_eq!(tensor_from_poly(&p).unwrap(), t);
        if n >= 2 {
            // the circle needs at least three sites
            let d = family_decomposition(&f, n).unwrap();
            assert!(d.check_symmetry());
            assert_eq!(d.contract(G).unwrap().into_poly().unwrap(), p);
        } else {
            assert_eq!(tensor_positivity(&t).nonnegative, n == 0);
        }
    }
}

#[test]
fn distance_polynomial_has_schmidt_rank_three() {
    for m in [3, 5, 7] {
        let p = poly_from_tensor(&distance_matrix(m).unwrap());
        assert_eq!(bipartite_rank(&p).unwrap(), 3);
    }
    // a product polynomial has rank one
    let x = RationalPoly::univariate(&[rat(1, 1), rat(2, 1)]);
    let prod = RationalPoly::tensor(&[&x, &x]);
    assert_eq!(bipartite_rank(&prod).unwrap(), 1);
}

#[test]
fn sos_witness_to_plain_contracts_to_the_illustrating_polynomial() {
    let w = double_edge_sos_witness();
    let plain = sos_to_plain(&w).unwrap();
    let c = plain.contract(G).unwrap().into_poly().unwrap();
    assert_eq!(c, illustrating_polynomial().to_surd());
}

#[test]
fn trivial_action_sos_family_is_plain_cholesky() {
    let c = WeightedComplex::standard(StandardKind::DoubleEdge, 1).unwrap();
    let a = SymmetryAction::trivial(&c);
    let m = omega_core::positivity::GramRepresentation::from_vectors(1, 1, 1, &[vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, -1.0, 0.0]])
        .unwrap();
    let fam = invariant_sos_family(&m, &a, 1e-9).unwrap();
    assert!(fam.sum_of_squares().max_coeff_diff(&m.gram_map()) < 1e-12);
    let zero: BigRational = rat(0, 1);
    assert_eq!(illustrating_polynomial().coeff(&[1, 0]), zero);
}
