use auction_risk::aqr::uniform_grid;
use auction_risk::seller::ValueDistribution;
use auction_risk::sim::{simulate_auctions, DgpSpec, LinearQuantileModel};
use auction_risk::{ModelSet, ValuationConfig};

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let l: usize = a.get(1).map(|s| s.parse().unwrap()).unwrap_or(500);
    let quad: usize = a.get(2).map(|s| s.parse().unwrap()).unwrap_or(33);
    let seed: u64 = a.get(3).map(|s| s.parse().unwrap()).unwrap_or(1);
    let vcfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.02),
        quad_order: quad,
        ..ValuationConfig::default()
    };
    let data = simulate_auctions(&DgpSpec::benchmark(l, 0.5, seed)).unwrap();
    let m = ModelSet::estimate(&data, &vcfg).unwrap();
    let model = m.get(3).unwrap();
    let x = [0.5, 0.5];
    let c = model.curve(&x).unwrap();
    let truth = LinearQuantileModel::benchmark();
    println!("h = {}", model.fit().bandwidth());
    for &al in vcfg.value_grid.iter().step_by(2) {
        println!(
            "{al:.2} V {:.4} {:.4}  V' {:.4} {:.4}  B' {:.4}",
            c.quantile(al).unwrap(),
            truth.quantile(al, &x),
            c.quantile_deriv_n(1, al).unwrap(),
            truth.quantile_deriv(al, &x),
            c.bid_curve().deriv(1, auction_risk::math::phi(al, 3).unwrap()).unwrap()
        );
    }
}
