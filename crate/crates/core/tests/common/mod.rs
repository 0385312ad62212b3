//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use oneshot_core::distributions::{ClassicalDistribution, DensityOperator};
use oneshot_core::hermitian::{CMatrix, HermitianMatrix, C64};
use rand::Rng;

/// Random density matrix of the given rank from a complex Ginibre matrix.
pub fn random_state(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityOperator {
    let g = CMatrix::from_fn(dim, rank, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let m = g.matmul(&g.adjoint()).unwrap();
    let tr = m.trace().re;
    let h = HermitianMatrix::new(m.scale(1.0 / tr).hermitian_part()).unwrap();
    DensityOperator::new(h).unwrap()
}

/// Full rank most of the time, occasionally rank one.
pub fn random_mixed_rank(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let rank = if rng.gen_bool(0.2) { 1 } else { dim };
    random_state(rng, dim, rank)
}

pub fn random_distribution(rng: &mut impl Rng, dim: usize) -> ClassicalDistribution {
    let v: Vec<f64> = (0..dim)
        .map(|_| {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    let s: f64 = v.iter().sum();
    if s == 0.0 {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        return ClassicalDistribution::from_vec(p).unwrap();
    }
    ClassicalDistribution::from_vec(v.iter().map(|x| x / s).collect()).unwrap()
}

/// Column-substochastic `rows[y][x]`: each column keeps a fraction of its
/// mass drawn from `[min_keep, 1]` (exactly 1 when `min_keep >= 1`).
pub fn random_channel_matrix(
    rng: &mut impl Rng,
    d_in: usize,
    d_out: usize,
    min_keep: f64,
) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; d_in]; d_out];
    for x in 0..d_in {
        let col: Vec<f64> = (0..d_out).map(|_| rng.gen::<f64>()).collect();
        let keep = if min_keep < 1.0 {
            rng.gen_range(min_keep..=1.0)
        } else {
            1.0
        };
        let s: f64 = col.iter().sum();
        for (y, c) in col.into_iter().enumerate() {
            rows[y][x] = keep * c / s;
        }
    }
    rows
}
