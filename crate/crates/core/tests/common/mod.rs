#![allow(dead_code)]

use conngraph::oracle::{GraphDistribution, GraphKey};
use conngraph::sampler::Chain;
use conngraph::{EdgeModel, Point};

pub const FIXTURE_4: [Point; 4] = [
    Point::new(0.12, 0.20),
    Point::new(0.81, 0.33),
    Point::new(0.47, 0.90),
    Point::new(0.55, 0.41),
];

pub const FIXTURE_5: [Point; 5] = [
    Point::new(0.08, 0.15),
    Point::new(0.92, 0.22),
    Point::new(0.63, 0.87),
    Point::new(0.21, 0.74),
    Point::new(0.50, 0.48),
];

/// Thinned MCMC snapshots from fixed positions, tallied by graph key.
pub fn mcmc_distribution(
    positions: &[Point],
    model: EdgeModel,
    seed: u64,
    burn_in: u64,
    thinning: u64,
    count: usize,
) -> GraphDistribution {
    let mut chain = Chain::from_positions(model, positions.to_vec(), seed).unwrap();
    let mut keys = Vec::with_capacity(count);
    chain
        .sample(burn_in, thinning, count, |g| {
            assert_eq!(g.connected_components().len(), 1);
            keys.push(GraphKey::from_graph(g).unwrap());
        })
        .unwrap();
    GraphDistribution::from_keys(positions.len(), keys)
}

/// Line-picking density of the unit square.
pub fn square_distance_density(d: f64) -> f64 {
    use std::f64::consts::PI;
    if d <= 1.0 {
        2.0 * d * (PI - 4.0 * d + d * d)
    } else {
        2.0 * d * (4.0 * (d * d - 1.0).sqrt() - (d * d + 2.0 - PI) - 4.0 * (1.0 / d).acos())
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// `E[exp(-s D)]` by quadrature over the density, split at the kink `d = 1`.
pub fn laplace_by_quadrature(s: f64) -> f64 {
    let g = |d: f64| (-s * d).exp() * square_distance_density(d);
    simpson(g, 0.0, 1.0, 20_000) + simpson(g, 1.0, 2f64.sqrt(), 20_000)
}
