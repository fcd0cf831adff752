use auction_risk::seller::{optimal_reserve, SellerProblem, UniformValues, UtilitySpec, ValueDistribution};
use auction_risk::sim::LinearQuantileModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn uniform_risk_neutral_reserve_is_one_plus_w_over_two() {
    let d = UniformValues::default();
    for w in [0.0, 0.2, 0.4] {
        let p = SellerProblem::new(&d, w, 2, UtilitySpec::crra(0.0)).unwrap();
        let r = optimal_reserve(&p).unwrap().reserve;
        assert!((r - (1.0 + w) / 2.0).abs() < 1e-6, "{w}: {r}");
    }
}

#[test]
fn reserve_is_nonincreasing_in_risk_aversion() {
    let truth = LinearQuantileModel::benchmark();
    for x in [[0.2, 0.7], [0.5, 0.5], [0.9, 0.1]] {
        let dist = truth.at(&x);
        let w = truth.quantile(0.3, &x);
        let mut last = f64::INFINITY;
        for k in 0..=8 {
            let theta = 0.25 * k as f64;
            let p = SellerProblem::new(&dist, w, 3, UtilitySpec::crra(theta)).unwrap();
            let r = optimal_reserve(&p).unwrap().reserve;
            assert!(r <= last + 1e-9, "theta {theta}: {r} > {last}");
            assert!(r >= w - 1e-12);
            last = r;
        }
    }
}

#[test]
fn expected_revenue_matches_monte_carlo() {
    let d = UniformValues::default();
    let p = SellerProblem::new(&d, 0.0, 2, UtilitySpec::crra(0.0)).unwrap();
    let alpha = 0.4;
    // utility is v - 1 at theta = 0
    let exact = p.expected_utility(alpha).unwrap() + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let rev = if hi < alpha {
            0.0
        } else if lo < alpha {
            alpha
        } else {
            lo
        };
        s += rev;
        s2 += rev * rev;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn foc_is_decreasing_with_interior_sign_change() {
    let d = UniformValues::default();
    for w in [0.0, 0.3] {
        let p = SellerProblem::new(&d, w, 2, UtilitySpec::crra(0.0)).unwrap();
        let hs: Vec<f64> = (1..100).map(|i| p.foc_h(i as f64 / 100.0).unwrap()).collect();
        assert!(hs.windows(2).all(|v| v[1] < v[0]));
        assert!(p.foc_h(1e-9).unwrap() > 0.0);
        assert!(p.foc_h(1.0 - 1e-9).unwrap() < 0.0);
        for (i, h) in hs.iter().enumerate() {
            let r = (i + 1) as f64 / 100.0;
            assert!((h - (1.0 + w - 2.0 * r)).abs() < 1e-12);
        }
    }
}

#[test]
fn reported_utility_is_a_grid_maximum() {
    let truth = LinearQuantileModel::benchmark();
    let x = [0.4, 0.6];
    let dist = truth.at(&x);
    let w = truth.quantile(0.2, &x);
    let p = SellerProblem::new(&dist, w, 3, UtilitySpec::crra(0.7)).unwrap();
    let sol = optimal_reserve(&p).unwrap();
    for i in 0..=200 {
        let a = i as f64 / 200.0;
        assert!(p.expected_utility(a).unwrap() <= sol.attained_utility + 1e-12);
    }
    assert!((dist.quantile(sol.alpha_r).unwrap() - sol.reserve).abs() < 1e-12);
    assert!(sol.foc.abs() < 1e-8, "{}", sol.foc);
}

#[test]
fn outside_value_above_support_pins_reserve_to_grid_top() {
    // utility keeps rising in the reserve, so the top screening level wins
    let d = UniformValues::default();
    let p = SellerProblem::new(&d, 1.5, 2, UtilitySpec::crra(0.0)).unwrap();
    let r = optimal_reserve(&p).unwrap().reserve;
    assert!((r - 0.99).abs() < 1e-12, "{r}");
}
