mod common;

use common::{brute_force, random_problem, rng};
use optcomplete::drivers::{cutplanes, optcomplete};
use optcomplete::evaluator::cost;
use optcomplete::{ProblemConfig, WarmStartKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cutplanes_finds_the_enumerated_minimizer(seed in any::<u64>(), n in 2usize..10, m in 2usize..10, p in 2usize..7, gamma in 0.1f64..10.0) {
        let mut r = rng(seed);
        let (a, b) = random_problem(&mut r, n, m, p, 0.6);
        let k = 1 + (seed as usize) % (p - 1);
        let config = ProblemConfig { seed, tolerance: 0.0, ..ProblemConfig::new(k, gamma) };
        let result = cutplanes(&a, &b, &config).unwrap();
        prop_assert!(result.exact_certified);
        let (_, best) = brute_force(p, k, |s| cost(&a, &b, s, gamma).unwrap());
        let got = cost(&a, &b, &result.support, gamma).unwrap();
        prop_assert!(got <= best * (1.0 + 1e-9) + 1e-15, "got {} best {}", got, best);
        // the first point is the warm start, before any master solve
        let etas: Vec<f64> = result.objective_trace.iter().skip(1).map(|t| t.eta).collect();
        prop_assert!(etas.windows(2).all(|w| w[0] <= w[1] + 1e-15), "{:?}", etas);
        prop_assert!(result.final_eta() <= best + 1e-12);
    }

    #[test]
    fn full_sampling_reproduces_cutplanes(seed in any::<u64>(), n in 2usize..10, m in 2usize..10, p in 2usize..7) {
        let mut r = rng(seed);
        let (a, b) = random_problem(&mut r, n, m, p, 0.6);
        let k = 1 + (seed as usize) % (p - 1);
        let config = ProblemConfig {
            seed,
            g0: n,
            c_const: 1e9,
            warm_start: Some(WarmStartKind::Greedy),
            ..ProblemConfig::new(k, 1.0)
        };
        let exact = cutplanes(&a, &b, &config).unwrap();
        let stoch = optcomplete(&a, &b, &config).unwrap();
        prop_assert_eq!(stoch.diagnostics.f, Some(m));
        prop_assert_eq!(&exact.support, &stoch.support);
        prop_assert_eq!(&exact.objective_trace, &stoch.objective_trace);
        prop_assert_eq!(exact.exact_certified, stoch.exact_certified);
    }
}
