//! Closed-form repair-ratio bounds, optimal choice of `L`, and a sweep
//! harness comparing measured bandwidth against the bounds.
//!
//! All ratios are normalised by the `k m` data symbols of a stripe and kept
//! as exact rationals; floats appear only when rendering.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::c1::C1Spec;
use crate::code::{CodeParams, Variant};
use crate::error::{param_err, Result};
use crate::repair::{bandwidth_table, BandwidthTable};

pub type Rational = Ratio<i128>;

pub const CSV_HEADER: &str =
    "variant,n,k,r,m,L,gamma_all,gamma_sys,gamma_parity,gamma_min,gamma_max,lemma7";

fn q(num: i128, den: i128) -> Rational {
    Rational::new(num, den)
}

fn int(v: usize) -> Rational {
    Rational::from_integer(v as i128)
}

pub fn to_f64(v: Rational) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Lower and upper bound of an average repair ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaBounds {
    pub gamma_min: Rational,
    pub gamma_max: Rational,
}

impl GammaBounds {
    pub fn min_f64(&self) -> f64 {
        to_f64(self.gamma_min)
    }

    pub fn max_f64(&self) -> f64 {
        to_f64(self.gamma_max)
    }

    pub fn gap(&self) -> Rational {
        self.gamma_max - self.gamma_min
    }
}

/// Shared quadratic term `m^2 - m(L+1) + (L+1)(2L+1)/6`.
fn spread_term(m: usize, l: usize) -> Rational {
    let (m, l) = (int(m), int(l));
    let one = int(1);
    m * m - m * (l + one) + (l + one) * (int(2) * l + one) / int(6)
}

/// Bounds on the all-node ratio of `C1(n, k, m, L)` evaluated without the
/// `L | n` requirement.
pub fn c1_gamma_formula(n: usize, k: usize, m: usize, l: usize) -> Result<GammaBounds> {
    if k == 0 || k >= n || n - k < 2 || m == 0 || l == 0 {
        return Err(param_err(format!("bad C1 formula arguments ({n},{k},{m},{l})")));
    }
    let r = n - k;
    let (kq, mq, lq, rq, nq) = (int(k), int(m), int(l), int(r), int(n));
    let one = int(1);
    let gamma_min = (lq + one) / (int(2) * mq)
        + nq * spread_term(m, l) / (lq * mq * kq * (rq - one))
        + (mq - lq) / (kq * mq);
    let gap = lq * (rq - one) * (rq - one) / (int(4) * nq * mq * kq);
    Ok(GammaBounds {
        gamma_min,
        gamma_max: gamma_min + gap,
    })
}

/// Bounds on the all-node ratio of `C1(n, k, m, L)`; needs `L | n`.
pub fn c1_gamma_bounds(n: usize, k: usize, m: usize, l: usize) -> Result<GammaBounds> {
    C1Spec::check_params(n, k, m, l)?;
    if n % l != 0 {
        return Err(param_err(format!("L = {l} does not divide n = {n}")));
    }
    c1_gamma_formula(n, k, m, l)
}

/// Real minimiser of the C1 lower bound for large `k`.
pub fn c1_l_star(m: usize, r: usize) -> f64 {
    let (m, r) = (m as f64, r as f64);
    ((6.0 * m * m - 6.0 * m + 1.0) / (3.0 * r - 1.0)).sqrt()
}

fn pick_l(
    star: f64,
    upper: usize,
    feasible: impl Fn(usize) -> bool,
    cost: impl Fn(usize) -> Result<Rational>,
) -> Result<usize> {
    let clamp = |v: f64| (v.max(1.0) as usize).clamp(1, upper.max(1));
    let mut candidates = vec![clamp(star.floor()), clamp(star.ceil())];
    candidates.sort_unstable();
    candidates.dedup();
    candidates.retain(|&l| feasible(l));
    let mut best: Option<(Rational, usize)> = None;
    for l in candidates {
        let c = cost(l)?;
        if best.map_or(true, |(b, _)| c < b) {
            best = Some((c, l));
        }
    }
    Ok(best.map_or(1, |(_, l)| l))
}

/// `(L*, L)`: the real optimum and the integer `L` to use for C1 with `n`
/// nodes, `r` parities and sub-packetization `m`.
pub fn c1_optimal_l(m: usize, r: usize, n: usize) -> Result<(f64, usize)> {
    if r < 4 || m < 2 || m > r || n <= r {
        return Err(param_err(format!(
            "C1 needs r >= 4, 2 <= m <= r and n > r, got m = {m}, r = {r}, n = {n}"
        )));
    }
    let star = c1_l_star(m, r);
    let l = pick_l(
        star,
        m - 1,
        |l| n / l >= r,
        |l| c1_gamma_formula(n, n - r, m, l).map(|b| b.gamma_min),
    )?;
    Ok((star, l))
}

/// Bounds on the data-node ratio of C2 evaluated without `L | k`.
pub fn c2_gamma_sys_formula(n: usize, k: usize, s: usize, l: usize) -> Result<GammaBounds> {
    if k == 0 || k >= n || n - k < 2 || s == 0 || l == 0 {
        return Err(param_err(format!("bad C2 formula arguments ({n},{k},s={s},{l})")));
    }
    let r = n - k;
    let (kq, sq, lq, rq) = (int(k), int(s), int(l), int(r));
    let one = int(1);
    let gamma_min = (lq + one) / (int(2) * sq)
        + spread_term(s, l) / (lq * sq * (rq - one))
        + (rq - one) * (lq - int(3)) / (int(2) * kq * sq * rq);
    let gap = lq * (rq - one) / (int(4) * sq * kq * kq);
    Ok(GammaBounds {
        gamma_min,
        gamma_max: gamma_min + gap,
    })
}

fn check_c2_divisible(n: usize, k: usize, s: usize, l: usize) -> Result<()> {
    crate::c2::C2Spec::check_params(n, k, s, l, crate::c2::DEFAULT_THETA)?;
    if k % l != 0 {
        return Err(param_err(format!("L = {l} does not divide k = {k}")));
    }
    Ok(())
}

/// Bounds on the data-node ratio of `C2(n, k, s r, L)`; needs `L | k`.
pub fn c2_gamma_sys_bounds(n: usize, k: usize, s: usize, l: usize) -> Result<GammaBounds> {
    check_c2_divisible(n, k, s, l)?;
    c2_gamma_sys_formula(n, k, s, l)
}

/// Average parity-node ratio of `C2(n, k, s r, L)`; needs `L | k`.
pub fn c2_gamma_parity(n: usize, k: usize, s: usize, l: usize) -> Result<Rational> {
    check_c2_divisible(n, k, s, l)?;
    let r = n - k;
    let (kq, sq, lq, rq) = (int(k), int(s), int(l), int(r));
    Ok(q(2, 1) / rq + q(1, 1) / kq - q(1, 1) / (kq * rq) - (lq + int(1)) / (int(2) * sq * rq))
}

pub fn c2_l_star(s: usize, r: usize) -> f64 {
    c1_l_star(s, r)
}

/// `(L*, L)` for C2 with `k` data nodes, `r` parities and `s = m / r`.
pub fn c2_optimal_l(s: usize, r: usize, k: usize) -> Result<(f64, usize)> {
    if r < 2 || s < 2 || s > r || k == 0 {
        return Err(param_err(format!(
            "C2 needs r >= 2, 2 <= s <= r and k > 0, got s = {s}, r = {r}, k = {k}"
        )));
    }
    let star = c2_l_star(s, r);
    let l = pick_l(
        star,
        s - 1,
        |l| l <= k,
        |l| c2_gamma_sys_formula(k + r, k, s, l).map(|b| b.gamma_min),
    )?;
    Ok((star, l))
}

/// Measured and predicted ratios for one parameter set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowValues {
    pub table: BandwidthTable,
    /// All-node bounds for C1 (`L | n`), data-node bounds for C2 (`L | k`).
    pub bounds: Option<GammaBounds>,
    pub parity_formula: Option<Rational>,
}

#[derive(Debug)]
pub struct SweepRow {
    pub params: CodeParams,
    pub outcome: Result<RowValues>,
}

pub fn evaluate(params: &CodeParams) -> Result<RowValues> {
    let code = params.build()?;
    let table = bandwidth_table(&code)?;
    let (n, k, l) = (params.n, params.k, params.l);
    let (bounds, parity_formula) = match params.variant {
        Variant::C1 => (c1_gamma_bounds(n, k, params.m, l).ok(), None),
        Variant::C2 => (
            c2_gamma_sys_bounds(n, k, params.s, l).ok(),
            c2_gamma_parity(n, k, params.s, l).ok(),
        ),
    };
    Ok(RowValues {
        table,
        bounds,
        parity_formula,
    })
}

/// One row per input, in input order. A row that fails keeps its error and
/// the sweep moves on.
pub fn sweep(params: &[CodeParams]) -> Vec<SweepRow> {
    params
        .iter()
        .map(|p| SweepRow {
            params: *p,
            outcome: evaluate(p),
        })
        .collect()
}

fn fmt_ratio(v: Option<Rational>) -> String {
    v.map(|x| format!("{:.6}", to_f64(x))).unwrap_or_default()
}

/// CSV line for a successful row, without the trailing newline.
pub fn csv_line(params: &CodeParams, v: &RowValues) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        params.variant as u8,
        params.n,
        params.k,
        params.n - params.k,
        params.m,
        params.l,
        fmt_ratio(Some(v.table.gamma_all())),
        fmt_ratio(Some(v.table.gamma_sys())),
        fmt_ratio(Some(v.table.gamma_parity())),
        fmt_ratio(v.bounds.map(|b| b.gamma_min)),
        fmt_ratio(v.bounds.map(|b| b.gamma_max)),
        fmt_ratio(v.parity_formula),
    )
}

/// Header plus every successful row. Failed rows are left out.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        if let Ok(v) = &row.outcome {
            let _ = writeln!(out, "{}", csv_line(&row.params, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    // Independent evaluation of the printed expressions in plain f64.
    fn c1_min_f64(n: f64, k: f64, m: f64, l: f64) -> f64 {
        let r = n - k;
        (l + 1.0) / (2.0 * m)
            + n * (m * m - m * (l + 1.0) + (l + 1.0) * (2.0 * l + 1.0) / 6.0) / (l * m * k * (r - 1.0))
            + (m - l) / (k * m)
    }

    fn c2_min_f64(n: f64, k: f64, s: f64, l: f64) -> f64 {
        let r = n - k;
        (l + 1.0) / (2.0 * s)
            + (s * s - s * (l + 1.0) + (l + 1.0) * (2.0 * l + 1.0) / 6.0) / (l * s * (r - 1.0))
            + (r - 1.0) * (l - 3.0) / (2.0 * k * s * r)
    }

    #[test]
    fn c1_bounds_golden() {
        let b = c1_gamma_bounds(12, 7, 4, 2).unwrap();
        assert!(close(b.min_f64(), 0.375 + 12.0 * 6.5 / 224.0 + 2.0 / 28.0));
        assert!((b.min_f64() - 0.794643).abs() < 5e-7);
        assert!((b.max_f64() - 0.818452).abs() < 5e-7);
        assert_eq!(b.gap(), q(2 * 16, 4 * 12 * 4 * 7));
        assert!(close(b.min_f64(), c1_min_f64(12.0, 7.0, 4.0, 2.0)));
    }

    #[test]
    fn c1_bounds_need_divisibility() {
        assert!(c1_gamma_bounds(11, 6, 4, 2).is_err());
        assert!(c1_gamma_formula(11, 6, 4, 2).is_ok());
        assert!(c1_gamma_bounds(12, 7, 4, 4).is_err());
    }

    #[test]
    fn c1_gap_shrinks_with_k() {
        let a = c1_gamma_bounds(12, 7, 4, 2).unwrap().gap();
        let b = c1_gamma_bounds(75, 70, 4, 3).unwrap().gap();
        let b2 = c1_gamma_formula(75, 70, 4, 2).unwrap().gap();
        assert!(b2 * int(10) < a);
        assert!(b < a);
    }

    #[test]
    fn c1_optimal_l_golden() {
        let (star, l) = c1_optimal_l(4, 5, 12).unwrap();
        assert!(close(star, (73.0f64 / 14.0).sqrt()));
        assert!((star - 2.2834).abs() < 1e-4);
        assert!((1..4).contains(&l));
        for r in 4..12 {
            let (star, l) = c1_optimal_l(2, r, r + 10).unwrap();
            assert!(star < 2.0);
            assert_eq!(l, 1);
        }
        assert!(c1_optimal_l(6, 5, 12).is_err());
    }

    #[test]
    fn c1_optimal_l_matches_brute_force_choice() {
        for r in 4..10 {
            for m in 2..=r {
                for k in [5usize, 20, 60] {
                    let n = k + r;
                    let (star, l) = c1_optimal_l(m, r, n).unwrap();
                    assert!(l >= 1 && l < m && n / l >= r);
                    let lo = (star.floor() as usize).clamp(1, m - 1);
                    let hi = (star.ceil() as usize).clamp(1, m - 1);
                    let mut best = None;
                    for cand in [lo, hi] {
                        if n / cand < r {
                            continue;
                        }
                        let v = c1_min_f64(n as f64, k as f64, m as f64, cand as f64);
                        match best {
                            Some((bv, _)) if v >= bv => {}
                            _ => best = Some((v, cand)),
                        }
                    }
                    assert_eq!(l, best.map_or(1, |b| b.1), "m={m} r={r} n={n}");
                }
            }
        }
    }

    #[test]
    fn c2_bounds_golden() {
        let b = c2_gamma_sys_bounds(12, 8, 4, 2).unwrap();
        assert!(close(b.min_f64(), 0.375 + 6.5 / 24.0 - 3.0 / 256.0));
        assert!((b.min_f64() - 0.634115).abs() < 5e-7);
        assert!((b.max_f64() - 0.639974).abs() < 5e-7);
        assert_eq!(b.gap(), q(2 * 3, 4 * 4 * 64));
        assert!(close(b.min_f64(), c2_min_f64(12.0, 8.0, 4.0, 2.0)));
        assert!(c2_gamma_sys_bounds(11, 7, 4, 2).is_err());
    }

    #[test]
    fn parity_formula_golden_and_monotone() {
        assert_eq!(c2_gamma_parity(12, 8, 4, 2).unwrap(), q(1, 2));
        let k = 12;
        let vals: Vec<Rational> = [1usize, 2, 3]
            .iter()
            .map(|&l| c2_gamma_parity(k + 6, k, 6, l).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(c2_gamma_parity(13, 9, 4, 2).is_err());
    }

    #[test]
    fn c2_optimal_l_mirrors_c1() {
        assert!(close(c2_l_star(4, 5), c1_l_star(4, 5)));
        let (_, l) = c2_optimal_l(4, 4, 8).unwrap();
        assert!((1..4).contains(&l));
        assert_eq!(c2_optimal_l(2, 6, 10).unwrap().1, 1);
    }

    #[test]
    fn sweep_and_csv() {
        assert_eq!(to_csv(&sweep(&[])), format!("{CSV_HEADER}\n"));
        let rows = sweep(&[
            CodeParams::c2_default(12, 8, 4, 2),
            CodeParams::c1(11, 6, 4, 3),
            CodeParams::c1(12, 7, 4, 2),
        ]);
        assert_eq!(rows.len(), 3);
        assert!(rows[1].outcome.is_err());
        let v = rows[0].outcome.as_ref().unwrap();
        assert_eq!(v.table.gamma_parity(), q(1, 2));
        assert_eq!(v.parity_formula, Some(q(1, 2)));
        let csv = to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("2,12,8,4,16,2,"));
        assert!(lines[1].ends_with(",0.634115,0.639974,0.500000"));
        assert!(lines[2].starts_with("1,12,7,5,4,2,"));
        assert!(lines[2].ends_with(",0.794643,0.818452,"));
        assert!(!csv.contains('\r'));
    }
}
