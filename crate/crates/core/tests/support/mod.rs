//! Test-only oracles, kept independent of the library's sampling paths.
#![allow(dead_code)]

use std::f64::consts::LN_10;
use std::path::PathBuf;
use std::process::{Command, Output};

/// `log10` exponent ranges of the six log-uniform factors of the Table 1
/// scenario (R*, f_p, n_e, f_i, f_c, L).
pub const TABLE1_LOG_UNIFORM: [(f64, f64); 6] = [
    (0.0, 2.0),
    (-1.0, 0.0),
    (-1.0, 0.0),
    (-3.0, 0.0),
    (-2.0, 0.0),
    (2.0, 10.0),
];

/// CDF of a sum of independent uniforms, by inclusion-exclusion over the
/// 2^n vertex shifts.
pub fn uniform_sum_cdf(ranges: &[(f64, f64)], s: f64) -> f64 {
    let n = ranges.len();
    let base: f64 = ranges.iter().map(|r| r.0).sum();
    let widths: Vec<f64> = ranges.iter().map(|r| r.1 - r.0).collect();
    let norm: f64 = widths.iter().product::<f64>() * (1..=n).map(|k| k as f64).product::<f64>();
    let mut acc = 0.0;
    for mask in 0u32..(1 << n) {
        let mut shift = base;
        for (i, w) in widths.iter().enumerate() {
            if mask & (1 << i) != 0 {
                shift += w;
            }
        }
        let x = s - shift;
        if x > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += sign * x.powi(n as i32);
        }
    }
    (acc / norm).clamp(0.0, 1.0)
}

/// log10(1 - exp(-e^y)).
fn log10_life(y: f64) -> f64 {
    if y < -30.0 {
        // 1 - exp(-r) = r to double precision
        return y / LN_10;
    }
    (-(-y.exp()).exp_m1()).log10()
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// P(log10 n_civ < t) for the Table 1 scenario: Simpson quadrature over the
/// standard-normal deviate of ln(lambda V t) ~ N(1, 50^2), with the exact
/// uniform-sum CDF for the remaining six factors.
pub fn table1_cdf(t: f64) -> f64 {
    let (a, b, steps) = (-12.0, 12.0, 24_000usize);
    let h = (b - a) / steps as f64;
    let f = |z: f64| {
        std_normal_pdf(z) * uniform_sum_cdf(&TABLE1_LOG_UNIFORM, t - log10_life(1.0 + 50.0 * z))
    };
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Median of log10 n_civ for the Table 1 scenario by bisection on
/// [`table1_cdf`].
pub fn table1_median() -> f64 {
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if table1_cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Poisson masses `k = 0..=kmax` by the recurrence `p_k = p_{k-1} n / k`.
pub fn poisson_masses(n: f64, kmax: usize) -> Vec<f64> {
    let mut p = vec![(-n).exp()];
    for k in 1..=kmax {
        let prev = p[k - 1];
        p.push(prev * n / k as f64);
    }
    p
}

/// Sum of masses from `k_min` upward, accumulated smallest-first.
pub fn poisson_tail(n: f64, k_min: usize) -> f64 {
    poisson_masses(n, 200)[k_min..].iter().rev().sum()
}

pub fn drake_bin() -> &'static str {
    env!("CARGO_BIN_EXE_drake")
}

pub fn table1_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/table1.scenario")
}

pub fn drake(args: &[&str]) -> Output {
    Command::new(drake_bin())
        .args(args)
        .output()
        .expect("spawn drake")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Parses the number following `marker` on the first line that contains it.
pub fn number_after(text: &str, marker: &str) -> Option<f64> {
    let line = text.lines().find(|l| l.contains(marker))?;
    let rest = &line[line.find(marker)? + marker.len()..];
    rest.split_whitespace().next()?.parse().ok()
}
