//! Fully normalized associated Legendre functions.
//!
//! `P̃_k^m(x) = sqrt((2k+1)/(4π) (k-m)!/(k+m)!) P_k^m(x)`, without the
//! Condon–Shortley phase. The recurrence works on normalized values at every
//! step, so there is no intermediate factorial growth.

use std::f64::consts::PI;

/// Index of `(k, m)` in triangular storage, `0 <= m <= k`.
#[inline]
pub fn tri(k: usize, m: usize) -> usize {
    k * (k + 1) / 2 + m
}

pub fn tri_len(kmax: usize) -> usize {
    (kmax + 1) * (kmax + 2) / 2
}

/// Fill `out[tri(k, m)]` with `P̃_k^m(x)` for all `0 <= m <= k <= kmax`.
pub fn fill_table(kmax: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_len(kmax));
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=kmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m == kmax {
            break;
        }
        let mf = m as f64;
        let mut prev2 = pmm;
        let mut prev1 = x * (2.0 * mf + 3.0).sqrt() * pmm;
        out[tri(m + 1, m)] = prev1;
        for k in (m + 2)..=kmax {
            let kf = k as f64;
            let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
            let km1 = kf - 1.0;
            let b = ((km1 * km1 - mf * mf) / (4.0 * km1 * km1 - 1.0)).sqrt();
            let cur = a * (x * prev1 - b * prev2);
            out[tri(k, m)] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
    }
}

/// `P̃_k^m(x)` for a single pair.
pub fn normalized(k: usize, m: usize, x: f64) -> f64 {
    if m > k {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for j in 1..=m {
        let jf = j as f64;
        pmm *= ((2.0 * jf + 1.0) / (2.0 * jf)).sqrt() * s;
    }
    if k == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev2 = pmm;
    let mut prev1 = x * (2.0 * mf + 3.0).sqrt() * pmm;
    for kk in (m + 2)..=k {
        let kf = kk as f64;
        let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
        let km1 = kf - 1.0;
        let b = ((km1 * km1 - mf * mf) / (4.0 * km1 * km1 - 1.0)).sqrt();
        let cur = a * (x * prev1 - b * prev2);
        prev2 = prev1;
        prev1 = cur;
    }
    prev1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_low_degree_closed_forms() {
        let x: f64 = 0.3;
        let s = (1.0 - x * x).sqrt();
        let c = |v: f64| v / (4.0 * PI).sqrt();
        let cases = [
            (1, 0, c(3f64.sqrt() * x)),
            (1, 1, c((3.0f64 / 2.0).sqrt() * s)),
            (2, 0, c(5f64.sqrt() * 0.5 * (3.0 * x * x - 1.0))),
            (2, 1, c((15.0f64 / 2.0).sqrt() * x * s)),
            (2, 2, c((15.0f64 / 8.0).sqrt() * s * s)),
        ];
        let mut table = vec![0.0; tri_len(2)];
        fill_table(2, x, &mut table);
        for (k, m, want) in cases {
            assert!((normalized(k, m, x) - want).abs() < 1e-14, "({k},{m})");
            assert!((table[tri(k, m)] - want).abs() < 1e-14, "table ({k},{m})");
        }
    }

    #[test]
    fn table_and_single_agree_at_high_degree() {
        let x = -0.77;
        let kmax = 128;
        let mut table = vec![0.0; tri_len(kmax)];
        fill_table(kmax, x, &mut table);
        for (k, m) in [(128, 0), (128, 128), (97, 40), (64, 63)] {
            let a = table[tri(k, m)];
            let b = normalized(k, m, x);
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300), "({k},{m})");
            assert!(a.is_finite());
        }
    }
}
