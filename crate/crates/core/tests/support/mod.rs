// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the algorithms it checks: the t tail comes from
//! adaptive Gauss–Kronrod quadrature of the density, moments from plain
//! two-pass loops, quantiles from a full sort.

#![allow(dead_code)]

use loadprof_core::kwh::Reading;
use loadprof_core::{CleanProfile, Kwh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 15-point Kronrod abscissae (non-negative half) and weights; the 7-point
// Gauss rule uses the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7–K15 quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod(f, a, b);
        // stop at the requested accuracy or at the round-off floor
        if err <= tol || err <= 1e-14 * v.abs() || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, tol * 0.5, depth - 1) + go(f, m, b, tol * 0.5, depth - 1)
    }
    go(&f, a, b, tol, 30)
}

/// Two-sided Student-t tail probability by quadrature.
///
/// With `x = √ν·tan θ` the density becomes proportional to `cos^(ν−1) θ`
/// on `(−π/2, π/2)`, so the tail is a ratio of two finite integrals and
/// needs no gamma function.
pub fn t_tail_quadrature(t: f64, dof: f64) -> f64 {
    let theta0 = (t.abs() / dof.sqrt()).atan();
    let f = |th: f64| th.cos().max(0.0).powf(dof - 1.0);
    let half = std::f64::consts::FRAC_PI_2;
    let tail = integrate(f, theta0, half, 1e-15);
    let whole = integrate(f, 0.0, half, 1e-15);
    (tail / whole).min(1.0)
}

/// Population mean and standard deviation, two passes.
pub fn two_pass(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Nearest-rank quantile at `pct` percent of an ascending sample.
pub fn nearest_rank_oracle<T: Copy>(sorted: &[T], pct: usize) -> T {
    let n = sorted.len();
    let mut rank = (pct * n).div_ceil(100);
    if rank == 0 {
        rank = 1;
    }
    sorted[rank - 1]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random profile with a heavy right tail and roughly `gap_share` gaps.
pub fn random_profile(rng: &mut ChaCha8Rng, id: usize, hours: usize, gap_share: f64) -> CleanProfile {
    let values = (0..hours)
        .map(|_| {
            if rng.random_bool(gap_share) {
                return None;
            }
            let u: f64 = rng.random();
            let millis = 1 + (u.powi(3) * 8000.0) as i64 + rng.random_range(0..400);
            Reading::new(Kwh(millis))
        })
        .collect();
    CleanProfile::from_values(format!("m{id:05}"), values)
}

/// Random gross series; `levels` small forces many ties.
pub fn random_series(rng: &mut ChaCha8Rng, hours: usize, levels: i64) -> Vec<Kwh> {
    (0..hours).map(|_| Kwh(rng.random_range(0..levels))).collect()
}

/// Compares `actual` with `tests/snapshots/<name>`. `UPDATE_SNAPSHOTS=1`
/// rewrites the file; a missing snapshot is a failure otherwise.
pub fn assert_snapshot(name: &str, actual: &str) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots").join(name);
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; rerun with UPDATE_SNAPSHOTS=1", path.display()));
    assert!(expected == actual, "{name} differs from its snapshot");
}
