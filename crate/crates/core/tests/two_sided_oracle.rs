mod common;

use common::{random_problem, rng};
use optcomplete::two_sided::{reduce_two_sided, DEFAULT_ELEMENT_CAP};
use optcomplete::FeatureMatrix;
use proptest::prelude::*;
use rand::Rng;

fn features(r: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> FeatureMatrix {
    FeatureMatrix::from_row_major(rows, cols, (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect())
        .unwrap()
}

#[test]
fn design_entries_match_outer_products() {
    let mut r = rng(31);
    let (a, _) = random_problem(&mut r, 3, 3, 1, 0.7);
    let u = features(&mut r, 3, 2);
    let b = features(&mut r, 3, 2);
    let inst = reduce_two_sided(&a, &u, &b, 2, 1.0, DEFAULT_ELEMENT_CAP).unwrap();
    assert_eq!(inst.n_samples(), a.nnz());
    for (row, (i, j, v)) in a.entries().enumerate() {
        assert_eq!(inst.entries[row], (i, j));
        assert_eq!(inst.targets[row], v);
        for q in 0..2 {
            for l in 0..2 {
                // (u^q (b^l)ᵀ)_ij
                let outer = u.get(i, q) * b.get(j, l);
                assert_eq!(inst.design_row(row)[inst.flat_index(q, l)], outer);
            }
        }
    }
}

proptest! {
    #[test]
    fn reconstruction_matches_triple_product(seed in any::<u64>(), n in 1usize..8, m in 1usize..8, p1 in 1usize..4, p2 in 1usize..4) {
        let mut r = rng(seed);
        let (a, _) = random_problem(&mut r, n, m, 1, 0.5);
        let u = features(&mut r, n, p1);
        let b = features(&mut r, m, p2);
        let inst = reduce_two_sided(&a, &u, &b, 1, 1.0, DEFAULT_ELEMENT_CAP).unwrap();
        prop_assert_eq!(inst.design.len(), a.nnz() * p1 * p2);
        let coef: Vec<f64> = (0..p1 * p2).map(|_| r.random_range(-1.0..1.0)).collect();
        let got = inst.apply(&coef).unwrap();
        for (row, &(i, j)) in inst.entries.iter().enumerate() {
            let mut want = 0.0;
            for q in 0..p1 {
                for l in 0..p2 {
                    want += u.get(i, q) * coef[q * p2 + l] * b.get(j, l);
                }
            }
            prop_assert!((got[row] - want).abs() <= 1e-12);
        }
    }
}
