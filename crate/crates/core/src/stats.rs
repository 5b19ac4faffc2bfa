//! Small statistics toolbox shared by the analysis modules.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two values".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Binomial probability mass P(X = k) for X ~ Binomial(n, p).
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// One-sided upper tail P(X ≥ k) for X ~ Binomial(n, p0).
///
/// For p0 = 1/2 the tail is evaluated exactly in integer arithmetic
/// (Σ C(n, j) / 2ⁿ) and rounded once. Other p0 use a compensated sum of the
/// pmf terms, generated by the ratio recurrence from the first term.
pub fn binomial_tail(k: u64, n: u64, p0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("probability {p0} outside [0, 1]")));
    }
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if p0 == 0.0 {
        return Ok(0.0);
    }
    if p0 == 1.0 {
        return Ok(1.0);
    }
    if p0 == 0.5 {
        return Ok(half_tail_exact(k, n));
    }
    let ratio = p0 / (1.0 - p0);
    let mut term = binomial_pmf(k, n, p0);
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut j = k;
    loop {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if j == n {
            break;
        }
        term *= (n - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
    }
    Ok((sum + comp).min(1.0))
}

fn half_tail_exact(k: u64, n: u64) -> f64 {
    let mut c = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..=n {
        if j >= k {
            total += &c;
        }
        c = c * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    biguint_ratio_pow2(&total, n)
}

/// total / 2^exp, rounded from the top 64 significant bits.
fn biguint_ratio_pow2(total: &BigUint, exp: u64) -> f64 {
    let bits = total.bits();
    let shift = bits.saturating_sub(64);
    let mantissa = (total >> shift).to_f64().unwrap_or(f64::INFINITY);
    let e = shift as i64 - exp as i64;
    scale_pow2(mantissa, e)
}

fn scale_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        x *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        x *= 2f64.powi(-(step as i32));
        e += step;
    }
    x
}

/// Total-variation distance between two distributions given as (possibly
/// unnormalized) non-negative weights.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    let n = p.len().max(q.len());
    let get = |v: &[f64], i: usize, s: f64| v.get(i).copied().unwrap_or(0.0) / s;
    0.5 * (0..n).map(|i| (get(p, i, sp) - get(q, i, sq)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_hand_example() {
        // Σdx·dy = 3, Σdx² = 2, Σdy² = 14/3 → r = 3/√(28/3)
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 3.0 / (28.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((1.0 - r - 0.0180).abs() < 5e-5);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_monotone_is_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 8.0, 27.0, 64.0];
        assert!((spearman(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn pmf_sums_to_one() {
        for &(n, p) in &[(13u64, 0.6905), (2, 0.5), (40, 0.01), (1, 0.3)] {
            let s: f64 = (0..=n).map(|k| binomial_pmf(k, n, p)).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} p={p} sum={s}");
        }
    }

    #[test]
    fn pmf_values() {
        assert!((binomial_pmf(13, 13, 0.6905) - 0.6905f64.powi(13)).abs() < 1e-15);
        assert!((binomial_pmf(13, 13, 0.6905) - 0.00811).abs() < 5e-6);
        assert_eq!(binomial_pmf(13, 13, 1.0), 1.0);
        assert_eq!(binomial_pmf(12, 13, 1.0), 0.0);
        let m2: Vec<f64> = (0..=2).map(|k| binomial_pmf(k, 2, 0.5)).collect();
        assert!(m2.iter().zip([0.25, 0.5, 0.25]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn tail_edges() {
        assert_eq!(binomial_tail(0, 149, 0.5).unwrap(), 1.0);
        assert_eq!(binomial_tail(75, 149, 0.5).unwrap(), 0.5);
        assert_eq!(binomial_tail(3, 3, 0.5).unwrap(), 0.125);
        assert!(binomial_tail(4, 3, 0.5).is_err());
    }

    #[test]
    fn tail_107_of_149() {
        let p = binomial_tail(107, 149, 0.5).unwrap();
        assert!(p > 2.5e-8 && p < 1e-7, "p = {p}");
    }

    #[test]
    fn general_tail_matches_direct_sum() {
        for &(k, n, p) in &[(5u64, 20u64, 0.3), (1, 10, 0.9), (60, 100, 0.45)] {
            let direct: f64 = (k..=n).map(|j| binomial_pmf(j, n, p)).sum();
            let t = binomial_tail(k, n, p).unwrap();
            assert!((t - direct).abs() < 1e-13, "{k} {n} {p}: {t} vs {direct}");
        }
    }

    #[test]
    fn exact_half_tail_agrees_with_float_route() {
        for k in [1u64, 20, 74, 75, 100, 149] {
            let exact = binomial_tail(k, 149, 0.5).unwrap();
            let float: f64 = (k..=149).map(|j| binomial_pmf(j, 149, 0.5)).sum();
            assert!((exact - float).abs() <= 1e-12 * exact.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn large_n_half_tail_is_finite() {
        let p = binomial_tail(1500, 2000, 0.5).unwrap();
        assert!(p.is_finite() && p > 0.0 && p < 1e-50);
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 2.0]), 1.0);
        assert_eq!(total_variation(&[1.0, 1.0], &[5.0, 5.0]), 0.0);
    }
}
