use optcomplete::bench::{generate, mape, select_gamma, SyntheticSpec, DEFAULT_GAMMA_GRID};
use optcomplete::drivers::Algorithm;
use optcomplete::ProblemConfig;
use proptest::prelude::*;

fn spec(n: usize, m: usize, p: usize, k: usize, mu: f64, noise_sd: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n,
        m,
        p,
        k,
        mu,
        noise_sd,
        seed,
    }
}

#[test]
fn masking_frequency_is_uniform() {
    let (mu, runs) = (0.3, 400);
    let mut hidden = [0u32; 25];
    for seed in 0..runs {
        let inst = generate(&spec(5, 5, 2, 1, mu, 0.0, seed)).unwrap();
        for i in 0..5 {
            for j in inst.hidden_in_row(i) {
                hidden[i * 5 + j] += 1;
            }
        }
    }
    let se = (mu * (1.0 - mu) / runs as f64).sqrt();
    for (e, &h) in hidden.iter().enumerate() {
        let freq = h as f64 / runs as f64;
        assert!((freq - mu).abs() <= 4.0 * se, "entry {e}: {freq}");
    }
}

#[test]
fn signal_mean_is_k_over_four() {
    // The grand mean is Σ_t ū_t v̄_t with ū_t, v̄_t means of 200 uniforms.
    // Var(ū v̄) = (1/4 + 1/2400)² - 1/16, so the standard error over k = 5
    // terms is sqrt(5 * 2.0851e-4) ≈ 0.0323.
    let inst = generate(&spec(200, 200, 5, 5, 0.0, 0.0, 42)).unwrap();
    let mean = inst.masked.entries().map(|e| e.2).sum::<f64>() / 40_000.0;
    let var_term = (0.25f64 + 1.0 / 2400.0).powi(2) - 1.0 / 16.0;
    let se = (5.0 * var_term).sqrt();
    assert!((mean - 1.25).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn noise_has_requested_spread() {
    let inst = generate(&spec(100, 100, 3, 2, 0.0, 0.1, 3)).unwrap();
    let resid: Vec<f64> = inst.masked.entries().map(|(i, j, v)| v - inst.signal(i, j)).collect();
    let sd = (resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64).sqrt();
    // 1e4 draws: relative standard error of the sample sd is about 0.7%
    assert!((sd - 0.1).abs() < 0.005, "sd {sd}");
}

#[test]
fn gamma_selection_attains_grid_minimum() {
    let inst = generate(&spec(60, 40, 6, 2, 0.4, 0.0, 8)).unwrap();
    let (train, val) = inst.masked.split_validation(0.2, 8).unwrap();
    let config = ProblemConfig::new(2, 1.0);
    let sel = select_gamma(&train, &val, &inst.features, &config, &DEFAULT_GAMMA_GRID, Algorithm::Exact).unwrap();
    let best = sel.scores.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let chosen = sel.scores[DEFAULT_GAMMA_GRID.iter().position(|&g| g == sel.gamma).unwrap()].unwrap();
    assert!(chosen <= 2.0 * best);
    assert_eq!(chosen, best);
    let again = select_gamma(&train, &val, &inst.features, &config, &DEFAULT_GAMMA_GRID, Algorithm::Exact).unwrap();
    assert_eq!(sel, again);
}

proptest! {
    #[test]
    fn mape_is_scale_invariant(pairs in prop::collection::vec((0.1f64..10.0, 0.1f64..10.0), 1..30), c in 0.01f64..100.0) {
        let base = mape(pairs.iter().cloned()).unwrap().percent;
        let scaled = mape(pairs.iter().map(|&(x, a)| (c * x, c * a))).unwrap().percent;
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>(), mu in 0.0f64..0.9) {
        let s = spec(15, 12, 5, 2, mu, 0.1, seed);
        let (a, b) = (generate(&s).unwrap(), generate(&s).unwrap());
        prop_assert_eq!(a.masked, b.masked);
        prop_assert_eq!(a.features, b.features);
        prop_assert_eq!(a.true_support, b.true_support);
    }
}
