//! Smooth dyadic partition of unity in the spectral variable λ².
//!
//! `ψ̃(s) + Σ_{k≥1} ψ(4^{-k} s) = 1` with `ψ̃ = η` and `ψ(s) = η(s) − η(4s)`,
//! where η is 1 on `[0, 1]`, 0 on `[4, ∞)` and smooth in between.

use num_complex::Complex64 as C64;

use crate::error::{config, Result};
use crate::fields::SpectralField;

fn sigma(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// The cutoff profile η.
pub fn eta(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 4.0 {
        return 0.0;
    }
    let u1 = (s - 1.0) / 3.0;
    let u2 = 1.0 - u1;
    let (a, b) = (sigma(u1), sigma(u2));
    b / (a + b)
}

/// ψ(s) = η(s) − η(4s), supported in `[1/4, 4]`.
pub fn psi(s: f64) -> f64 {
    eta(s) - eta(4.0 * s)
}

/// Multiplier of block `k` at spectral value `lambda2`: ψ̃ for `k = 0`,
/// `ψ(4^{-k} λ²)` otherwise.
pub fn block_multiplier(k: u32, lambda2: f64) -> f64 {
    if k == 0 {
        eta(lambda2)
    } else {
        psi(lambda2 * 0.25f64.powi(k as i32))
    }
}

/// Blocks `0..=max_block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LPBlockSet {
    pub max_block: u32,
}

impl LPBlockSet {
    pub fn new(max_block: u32) -> Self {
        Self { max_block }
    }

    /// `Σ_{k=0}^{K} block_multiplier(k, s)`; equals 1 on `[0, 4^K]`.
    pub fn partition_sum(&self, s: f64) -> f64 {
        (0..=self.max_block).map(|k| block_multiplier(k, s)).sum()
    }

    pub fn decompose(&self, f: &SpectralField) -> Vec<SpectralField> {
        (0..=self.max_block).map(|k| apply_block(f, k)).collect()
    }

    /// Smallest block set covering every eigenvalue of the table.
    pub fn covering(lambda2_max: f64) -> Self {
        let mut k = 0;
        while 4f64.powi(k as i32) < lambda2_max {
            k += 1;
        }
        Self { max_block: k }
    }
}

/// Coefficient-wise multiplication by the block multiplier.
pub fn apply_block(f: &SpectralField, k: u32) -> SpectralField {
    let coeffs: Vec<C64> = f
        .table()
        .modes()
        .iter()
        .zip(f.coeffs())
        .map(|(m, c)| c * block_multiplier(k, m.eigenvalue))
        .collect();
    f.with_coeffs(coeffs)
}

/// The block index k of a dyadic scale `h = 2^{-k}`, `k ≥ 1`.
pub fn dyadic_index(h: f64) -> Result<u32> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(config(format!("scale h={h} must be 2^-k with k >= 1")));
    }
    let k = (-h.log2()).round();
    if !(1.0..=60.0).contains(&k) || 2f64.powi(-(k as i32)) != h {
        return Err(config(format!("scale h={h} is not dyadic")));
    }
    Ok(k as u32)
}

/// `ψ(h²Δ) f` for dyadic h.
pub fn block_for_h(f: &SpectralField, h: f64) -> Result<SpectralField> {
    Ok(apply_block(f, dyadic_index(h)?))
}

/// Spectral cutoff Λ large enough to hold the whole support of block k.
pub fn block_cutoff(k: u32) -> f64 {
    2f64.powi(k as i32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_field;
    use crate::spectra::{enumerate_modes, ModelKind};
    use std::sync::Arc;

    #[test]
    fn eta_examples() {
        assert_eq!(eta(0.5), 1.0);
        assert_eq!(eta(5.0), 0.0);
        assert!((eta(2.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn block_examples() {
        let t = Arc::new(enumerate_modes(ModelKind::Circle, 2.0).unwrap());
        let one = SpectralField::single_mode(t.clone(), 1, C64::new(1.0, 0.0)).unwrap();
        assert!(apply_block(&one, 1).is_zero());
        let four = SpectralField::single_mode(t.clone(), 3, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(apply_block(&four, 1).coeffs(), four.coeffs());
        assert_eq!(block_for_h(&four, 0.5).unwrap().coeffs(), apply_block(&four, 1).coeffs());
    }

    #[test]
    fn partition_of_unity_on_dense_grid() {
        let set = LPBlockSet::new(8);
        let top = 4f64.powi(8);
        for i in 0..=10_000 {
            let s = top * i as f64 / 10_000.0;
            assert!((set.partition_sum(s) - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn block_support() {
        for k in 1..6u32 {
            for i in 0..4000 {
                let s = i as f64 * 0.01 * 4f64.powi(k as i32);
                let lo = 4f64.powi(k as i32 - 1);
                let hi = 4f64.powi(k as i32 + 1);
                if block_multiplier(k, s) != 0.0 {
                    assert!(s >= lo && s <= hi);
                }
                assert!(block_multiplier(k, s) >= 0.0);
            }
        }
    }

    #[test]
    fn reconstruction_and_energy() {
        let t = Arc::new(enumerate_modes(ModelKind::Torus2, 16.0).unwrap());
        let f = random_field(&t, 0.0, 4);
        let set = LPBlockSet::covering(256.0);
        let blocks = set.decompose(&f);
        let mut sum = vec![C64::new(0.0, 0.0); t.len()];
        let mut energy = 0.0;
        for b in &blocks {
            for (s, c) in sum.iter_mut().zip(b.coeffs()) {
                *s += c;
            }
            energy += b.l2_norm().powi(2);
            assert!(b.l2_norm() <= f.l2_norm());
        }
        for (s, c) in sum.iter().zip(f.coeffs()) {
            assert!((s - c).norm() < 1e-12);
        }
        let e = f.l2_norm().powi(2);
        assert!(energy >= 0.5 * e - 1e-12 && energy <= e + 1e-12);
    }

    #[test]
    fn non_dyadic_scales_are_rejected() {
        assert_eq!(dyadic_index(0.25).unwrap(), 2);
        assert!(dyadic_index(0.3).is_err());
        assert!(dyadic_index(1.0).is_err());
        assert!(dyadic_index(0.0).is_err());
        assert!(dyadic_index(f64::NAN).is_err());
    }
}
