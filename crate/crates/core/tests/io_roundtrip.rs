mod common;

use common::{random_problem, rng};
use optcomplete::io::{load_problem, read_masked, write_features, write_masked};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coo_and_features_round_trip(seed in any::<u64>(), n in 1usize..20, m in 1usize..20, p in 1usize..5) {
        let mut r = rng(seed);
        let (a, b) = random_problem(&mut r, n, m, p, 0.3);
        let dir = tempfile::tempdir().unwrap();
        let (mp, fp) = (dir.path().join("a.coo"), dir.path().join("b.csv"));
        write_masked(&a, &mp).unwrap();
        write_features(&b, &fp).unwrap();
        let (a2, b2) = load_problem(&mp, &fp, false).unwrap();
        prop_assert_eq!(&a, &a2);
        prop_assert_eq!(&b, &b2);
        prop_assert_eq!(read_masked(&mp, m).unwrap(), a);
    }
}
