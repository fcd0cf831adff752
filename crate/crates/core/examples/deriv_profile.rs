use auction_risk::aqr::{uniform_grid, Bandwidth};
use auction_risk::seller::ValueDistribution;
use auction_risk::sim::{simulate_auctions, DgpSpec, LinearQuantileModel};
use auction_risk::{ModelSet, ValuationConfig};
use rayon::prelude::*;

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let l: usize = a[1].parse().unwrap();
    let reps: u64 = a[2].parse().unwrap();
    let quad: usize = a[3].parse().unwrap();
    let h: Option<f64> = a.get(4).map(|s| s.parse().unwrap());
    let mut vcfg = ValuationConfig {
        value_grid: uniform_grid(0.02, 0.98, 0.02),
        quad_order: quad,
        ..ValuationConfig::default()
    };
    if let Some(h) = h {
        vcfg.bandwidth = Bandwidth::Fixed(h);
    }
    let x = [0.5, 0.5];
    let truth = LinearQuantileModel::benchmark();
    let g = vcfg.value_grid.clone();
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate_auctions(&DgpSpec::benchmark(l, 0.5, 1000 + r)).unwrap();
            let m = ModelSet::estimate(&data, &vcfg).unwrap();
            let c = m.get(3).unwrap().curve(&x).unwrap();
            (
                g.iter().map(|&al| c.quantile(al).unwrap()).collect(),
                g.iter().map(|&al| c.quantile_deriv_n(1, al).unwrap()).collect(),
            )
        })
        .collect();
    let n = reps as f64;
    let mut se0 = vec![0.0; g.len()];
    let mut se1 = vec![0.0; g.len()];
    for (i, &al) in g.iter().enumerate() {
        let t0 = truth.quantile(al, &x);
        let t1 = truth.quantile_deriv(al, &x);
        let m1: f64 = runs.iter().map(|r| r.1[i]).sum::<f64>() / n;
        se0[i] = runs.iter().map(|r| (r.0[i] - t0).powi(2)).sum::<f64>() / n;
        se1[i] = runs.iter().map(|r| (r.1[i] - t1).powi(2)).sum::<f64>() / n;
        if i % 3 == 0 {
            println!("{al:.2} V'true {t1:.4} mean {m1:.4} mse {:.4}  Vmse {:.2e}", se1[i], se0[i]);
        }
    }
    let trap = |v: &[f64], lo: usize, hi: usize| -> f64 {
        (lo..hi).map(|i| 0.5 * (v[i] + v[i + 1]) * (g[i + 1] - g[i])).sum()
    };
    let k = g.len() - 1;
    for cut in [0, 1, 2, 3, 5] {
        println!(
            "cut {cut}: imse V {:.3e}  V' {:.4}",
            trap(&se0, cut, k - cut),
            trap(&se1, cut, k - cut)
        );
    }
}
