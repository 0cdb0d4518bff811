// Copyright 2026 The loadprof Authors
// SPDX-License-Identifier: Apache-2.0

//! Welch's unequal-variance t-test and the repeated random-pick protocol.
//!
//! The two-sided p-value uses the identity
//! `P(|T| > t) = I_{ν/(ν+t²)}(ν/2, 1/2)` with the regularized incomplete
//! beta function evaluated by a modified-Lentz continued fraction.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{domain, substream};

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// `complement` must equal `1 − x`; passing it separately keeps precision
/// when `x` is close to 1.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64, complement: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if complement <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * complement.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, complement) / b
    }
}

/// Two-sided Student-t tail probability `P(|T| ≥ |t|)`.
pub fn student_t_p(t: f64, dof: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::domain(format!("t statistic {t} is not finite")));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::domain(format!("degrees of freedom {dof} must be positive")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let t2 = t * t;
    let x = dof / (dof + t2);
    let complement = t2 / (dof + t2);
    Ok(regularized_incomplete_beta(0.5 * dof, 0.5, x, complement).clamp(0.0, 1.0))
}

/// Size, mean and sample variance (divide by n − 1) of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: u64,
    pub mean: f64,
    pub s2: f64,
}

impl SampleSummary {
    pub fn new(n: u64, mean: f64, s2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("a sample needs at least two observations"));
        }
        if !(s2 >= 0.0) || !mean.is_finite() || !s2.is_finite() {
            return Err(Error::domain("sample mean and variance must be finite, variance ≥ 0"));
        }
        Ok(SampleSummary { n, mean, s2 })
    }

    /// Two-pass mean and sample variance.
    pub fn from_observations(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::domain("a sample needs at least two observations"));
        }
        // a constant sample must report exactly zero spread
        if values.iter().all(|&v| v == values[0]) {
            return SampleSummary::new(n as u64, values[0], 0.0);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let s2 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        SampleSummary::new(n as u64, mean, s2)
    }

    fn standard_error_sq(&self) -> f64 {
        self.s2 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchOutcome {
    pub t: f64,
    pub dof: f64,
    pub p_two_sided: f64,
    /// `p_two_sided < alpha`.
    pub reject: bool,
}

/// Welch–Satterthwaite degrees of freedom.
pub fn welch_dof(a: &SampleSummary, b: &SampleSummary) -> f64 {
    let (va, vb) = (a.standard_error_sq(), b.standard_error_sq());
    (va + vb) * (va + vb) / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64)
}

/// Welch's t-test for equal means.
pub fn welch_t(a: &SampleSummary, b: &SampleSummary, alpha: f64) -> Result<WelchOutcome> {
    let se2 = a.standard_error_sq() + b.standard_error_sq();
    if se2 <= 0.0 {
        return Err(Error::domain("both samples have zero variance"));
    }
    let t = (a.mean - b.mean) / se2.sqrt();
    let dof = welch_dof(a, b);
    let p = student_t_p(t, dof)?;
    Ok(WelchOutcome {
        t,
        dof,
        p_two_sided: p,
        reject: p < alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Replacement {
    With,
    Without,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResamplingConfig {
    pub repetitions: usize,
    pub alpha: f64,
    pub seed: u64,
    pub replacement: Replacement,
}

impl Default for ResamplingConfig {
    fn default() -> Self {
        ResamplingConfig {
            repetitions: 50,
            alpha: 0.05,
            seed: 0,
            replacement: Replacement::With,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResamplingReport {
    pub repetitions: usize,
    pub n_a: usize,
    pub n_b: usize,
    /// Average of the repetition means.
    pub avg_mean_a: f64,
    pub avg_mean_b: f64,
    /// Average of the repetition sample variances.
    pub avg_var_a: f64,
    pub avg_var_b: f64,
    /// Repetitions in which equal means were not rejected.
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub alpha: f64,
    pub seed: u64,
}

fn draw(
    rng: &mut impl Rng,
    population: &[f64],
    n: usize,
    replacement: Replacement,
) -> Vec<f64> {
    match replacement {
        Replacement::With => (0..n)
            .map(|_| population[rng.random_range(0..population.len())])
            .collect(),
        Replacement::Without => index::sample(rng, population.len(), n)
            .into_iter()
            .map(|i| population[i])
            .collect(),
    }
}

/// Outcome of one repetition; zero-variance draws resolve to "equal" when
/// the means match and "different" otherwise.
fn repetition_outcome(a: &SampleSummary, b: &SampleSummary, alpha: f64) -> Result<bool> {
    if a.standard_error_sq() + b.standard_error_sq() <= 0.0 {
        return Ok(a.mean != b.mean);
    }
    Ok(welch_t(a, b, alpha)?.reject)
}

/// Repeats Welch's test on random picks of `n_a` and `n_b` observations.
///
/// Repetition `r` draws from substream `r` of the seed, so the report is
/// identical for any thread count.
pub fn resampling_protocol(
    obs_a: &[f64],
    obs_b: &[f64],
    n_a: usize,
    n_b: usize,
    config: &ResamplingConfig,
) -> Result<ResamplingReport> {
    if config.repetitions < 1 {
        return Err(Error::domain("at least one repetition is required"));
    }
    if obs_a.is_empty() || obs_b.is_empty() {
        return Err(Error::domain("observation collections must be non-empty"));
    }
    if n_a < 2 || n_b < 2 {
        return Err(Error::domain("pick sizes must be at least 2"));
    }
    if config.replacement == Replacement::Without && (n_a > obs_a.len() || n_b > obs_b.len()) {
        return Err(Error::domain("pick size exceeds population without replacement"));
    }
    let per_rep: Vec<(SampleSummary, SampleSummary, bool)> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(config.seed, domain::WELCH_REPETITION, r as u64);
            let a = SampleSummary::from_observations(&draw(&mut rng, obs_a, n_a, config.replacement))?;
            let b = SampleSummary::from_observations(&draw(&mut rng, obs_b, n_b, config.replacement))?;
            let reject = repetition_outcome(&a, &b, config.alpha)?;
            Ok((a, b, reject))
        })
        .collect::<Result<_>>()?;

    let reps = config.repetitions as f64;
    let avg = |f: &dyn Fn(&(SampleSummary, SampleSummary, bool)) -> f64| {
        per_rep.iter().map(f).sum::<f64>() / reps
    };
    let accepted = per_rep.iter().filter(|r| !r.2).count();
    Ok(ResamplingReport {
        repetitions: config.repetitions,
        n_a,
        n_b,
        avg_mean_a: avg(&|r| r.0.mean),
        avg_mean_b: avg(&|r| r.1.mean),
        avg_var_a: avg(&|r| r.0.s2),
        avg_var_b: avg(&|r| r.1.s2),
        accepted,
        acceptance_rate: accepted as f64 / reps,
        alpha: config.alpha,
        seed: config.seed,
    })
}

pub const WELCH_HEADER: &str =
    "pair,level,avg_mean_a,avg_mean_b,avg_var_a,avg_var_b,acceptance_rate,repetitions,seed";

/// One CSV row per (pair, level).
pub fn welch_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, &'a ResamplingReport)>) -> String {
    let mut out = String::new();
    writeln!(out, "{WELCH_HEADER}").unwrap();
    for (pair, level, r) in rows {
        writeln!(
            out,
            "{pair},{level},{:.6},{:.6},{:.6},{:.6},{:.4},{},{}",
            r.avg_mean_a, r.avg_mean_b, r.avg_var_a, r.avg_var_b, r.acceptance_rate, r.repetitions, r.seed
        )
        .unwrap();
    }
    out
}
