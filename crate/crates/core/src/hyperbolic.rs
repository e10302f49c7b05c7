//! Radial spectral calculus on hyperbolic 3-space.
//!
//! A radial function has the Fourier–Helgason pair
//! `f̂(λ) = ∫ f(r) φ_λ(r) 4π sinh²r dr`, `f(r) = ∫ f̂(λ) φ_λ(r) λ²/(2π²) dλ`
//! with `φ_λ(r) = sin(λr)/(λ sinh r)`. The radial Laplacian `−Δ` acts as
//! `1 + λ²`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::fields::{pairwise, sum_sq};
use crate::quad::{composite_gauss, panels_for_bandwidth, safe_panel_frequency};

const ORDER: usize = 32;

/// Headroom added to every bandwidth estimate when sizing a grid.
const BANDWIDTH_MARGIN: f64 = 8.0;

/// `φ_λ(r)`, continuous at `r = 0` where it equals 1.
pub fn spherical_function(lambda: f64, r: f64) -> f64 {
    let x = lambda * r;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    let ratio = if r < 1e-4 {
        1.0 - r * r / 6.0
    } else if r < 20.0 {
        r / r.sinh()
    } else {
        2.0 * r * (-r).exp() / (1.0 - (-2.0 * r).exp())
    };
    sinc * ratio
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialMeasure {
    /// `4π sinh²r dr`.
    Volume,
    /// `λ²/(2π²) dλ`.
    Plancherel,
}

/// Composite Gauss–Legendre grid on `(0, end]` with measure weights.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    measure: RadialMeasure,
    end: f64,
    panel: f64,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(measure: RadialMeasure, end: f64, panels: usize, order: usize) -> Result<Self> {
        if !(end > 0.0 && end.is_finite()) {
            return Err(config(format!("grid end must be positive, got {end}")));
        }
        if panels == 0 || order == 0 {
            return Err(config("grid needs at least one panel and one node"));
        }
        let (nodes, dx) = composite_gauss(0.0, end, panels, order);
        let weights = nodes
            .iter()
            .zip(&dx)
            .map(|(x, w)| match measure {
                RadialMeasure::Volume => 4.0 * PI * x.sinh().powi(2) * w,
                RadialMeasure::Plancherel => x * x / (2.0 * PI * PI) * w,
            })
            .collect();
        Ok(Self { measure, end, panel: end / panels as f64, order, nodes, weights })
    }

    /// Radius grid on `(0, r_max]` fine enough for `φ_λ`, `λ ≤ lambda_max`.
    pub fn radii(r_max: f64, lambda_max: f64) -> Result<Self> {
        let panels = panels_for_bandwidth(r_max, lambda_max + BANDWIDTH_MARGIN, ORDER);
        Self::new(RadialMeasure::Volume, r_max, panels, ORDER)
    }

    /// Spectral grid on `(0, lambda_max]` able to synthesize radii up to
    /// `r_max`.
    pub fn spectral(lambda_max: f64, r_max: f64) -> Result<Self> {
        let panels = panels_for_bandwidth(lambda_max, r_max + BANDWIDTH_MARGIN, ORDER);
        Self::new(RadialMeasure::Plancherel, lambda_max, panels, ORDER)
    }

    /// Spectral grid on `(0, lambda_max]` fine enough for the local energy
    /// on a ball of the given radius.
    pub fn smoothing(lambda_max: f64, radius: f64) -> Result<Self> {
        let panels = panels_for_bandwidth(lambda_max, 2.0 * lambda_max + radius + BANDWIDTH_MARGIN, ORDER);
        Self::new(RadialMeasure::Plancherel, lambda_max, panels, ORDER)
    }

    pub fn measure(&self) -> RadialMeasure {
        self.measure
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether integrands oscillating at angular frequency `freq` are
    /// resolved by every panel.
    pub fn resolves(&self, freq: f64) -> bool {
        0.5 * freq * self.panel <= safe_panel_frequency(self.order)
    }
}

/// Samples of a radial function on a volume grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<C64>,
}

/// Samples of a transform on a Plancherel grid.
#[derive(Debug, Clone)]
pub struct RadialSpectrum {
    grid: RadialGrid,
    values: Vec<C64>,
}

macro_rules! radial_common {
    ($t:ty, $m:expr, $what:literal) => {
        impl $t {
            pub fn new(grid: RadialGrid, values: Vec<C64>) -> Result<Self> {
                if grid.measure() != $m {
                    return Err(config(concat!($what, " needs a grid with the matching measure")));
                }
                if values.len() != grid.len() {
                    return Err(config(format!("{} values for {} nodes", values.len(), grid.len())));
                }
                Ok(Self { grid, values })
            }

            pub fn from_fn<F: Fn(f64) -> C64>(grid: RadialGrid, f: F) -> Result<Self> {
                let values = grid.nodes().iter().map(|&x| f(x)).collect();
                Self::new(grid, values)
            }

            pub fn grid(&self) -> &RadialGrid {
                &self.grid
            }

            pub fn values(&self) -> &[C64] {
                &self.values
            }

            /// `L²` norm in the grid's measure.
            pub fn norm(&self) -> f64 {
                sum_sq(self.values.iter().zip(self.grid.weights()).map(|(v, w)| w * v.norm_sqr())).sqrt()
            }

            pub fn scaled(&self, c: C64) -> Self {
                Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
            }

            /// CSV with columns `coordinate,re,im,weight`.
            pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
                writeln!(w, "coordinate,re,im,weight")?;
                for ((x, v), wt) in self.grid.nodes().iter().zip(&self.values).zip(self.grid.weights()) {
                    writeln!(w, "{x:e},{:e},{:e},{wt:e}", v.re, v.im)?;
                }
                Ok(())
            }
        }
    };
}

radial_common!(RadialProfile, RadialMeasure::Volume, "profile");
radial_common!(RadialSpectrum, RadialMeasure::Plancherel, "spectrum");

fn transform(values: &[C64], src: &RadialGrid, dst: &RadialGrid) -> Vec<C64> {
    let terms: Vec<(f64, C64)> = src
        .nodes()
        .iter()
        .zip(values)
        .zip(src.weights())
        .filter(|(_, w)| **w > 0.0)
        .map(|((x, v), w)| (*x, v * w))
        .collect();
    dst.nodes()
        .par_iter()
        .map(|&y| {
            let (re, im): (Vec<f64>, Vec<f64>) = terms
                .iter()
                .map(|(x, v)| {
                    let (l, r) = match src.measure() {
                        RadialMeasure::Volume => (y, *x),
                        RadialMeasure::Plancherel => (*x, y),
                    };
                    let k = spherical_function(l, r);
                    (v.re * k, v.im * k)
                })
                .unzip();
            C64::new(pairwise(&re), pairwise(&im))
        })
        .collect()
}

/// `f̂` on `lgrid`.
pub fn helgason_forward(f: &RadialProfile, lgrid: &RadialGrid) -> Result<RadialSpectrum> {
    if lgrid.measure() != RadialMeasure::Plancherel {
        return Err(config("forward transform needs a Plancherel grid"));
    }
    if !f.grid.resolves(lgrid.end() + BANDWIDTH_MARGIN) {
        return Err(config(format!(
            "radius grid with panel {:.3e} cannot resolve frequencies up to {}",
            f.grid.panel,
            lgrid.end()
        )));
    }
    RadialSpectrum::new(lgrid.clone(), transform(&f.values, &f.grid, lgrid))
}

/// Synthesis of `f` on `rgrid` from its transform.
pub fn helgason_inverse(s: &RadialSpectrum, rgrid: &RadialGrid) -> Result<RadialProfile> {
    if rgrid.measure() != RadialMeasure::Volume {
        return Err(config("inverse transform needs a volume grid"));
    }
    if !s.grid.resolves(rgrid.end() + BANDWIDTH_MARGIN) {
        return Err(config(format!(
            "spectral grid with panel {:.3e} cannot resolve radii up to {}",
            s.grid.panel,
            rgrid.end()
        )));
    }
    RadialProfile::new(rgrid.clone(), transform(&s.values, &s.grid, rgrid))
}

/// Multiplication by `e^{it(1+λ²)}`.
pub fn propagate_radial(s: &RadialSpectrum, t: f64) -> RadialSpectrum {
    let values = s
        .grid
        .nodes()
        .iter()
        .zip(&s.values)
        .map(|(l, v)| v * C64::from_polar(1.0, t * (1.0 + l * l)))
        .collect();
    RadialSpectrum { grid: s.grid.clone(), values }
}

/// `(∫ (2+λ²)^s |f̂|² dP)^{1/2}`.
pub fn sobolev_norm_h3(s: &RadialSpectrum, index: f64) -> f64 {
    sum_sq(
        s.grid
            .nodes()
            .iter()
            .zip(&s.values)
            .zip(s.grid.weights())
            .map(|((l, v), w)| (2.0 + l * l).powf(index) * w * v.norm_sqr()),
    )
    .sqrt()
}

/// `∫_0^1 e^{itd} dt`.
fn time_kernel(d: f64) -> C64 {
    if d.abs() < 1e-6 {
        C64::new(1.0 - d * d / 6.0, 0.5 * d)
    } else {
        let (s, c) = d.sin_cos();
        C64::new(s / d, (1.0 - c) / d)
    }
}

/// `∫_0^R sin(ar) sin(br) dr` for `a, b > 0`.
fn sine_overlap(a: f64, b: f64, radius: f64) -> f64 {
    let half = |k: f64| {
        if (k * radius).abs() < 1e-6 {
            0.5 * radius
        } else {
            0.5 * (k * radius).sin() / k
        }
    };
    half(a - b) - half(a + b)
}

/// `‖u‖_{L²([0,1]×B_R)}` for `u = e^{it(1+λ²)} f`, or `‖Δu‖` when
/// `laplacian` is set.
///
/// The time and radius integrals are carried out in closed form: on the
/// ball, `φ_λ φ_μ 4π sinh²r = 4π sin(λr) sin(μr)/(λμ)`.
pub fn local_energy(s: &RadialSpectrum, radius: f64, laplacian: bool) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("ball radius must be positive, got {radius}")));
    }
    let lmax = s.grid.end();
    if !s.grid.resolves(2.0 * lmax + radius + BANDWIDTH_MARGIN) {
        return Err(config(format!("spectral grid too coarse for the time kernel up to λ = {lmax}")));
    }
    let terms: Vec<(f64, C64)> = s
        .grid
        .nodes()
        .iter()
        .zip(&s.values)
        .zip(s.grid.weights())
        .filter(|((_, v), _)| v.norm_sqr() > 0.0)
        .map(|((l, v), w)| {
            let m = if laplacian { 1.0 + l * l } else { 1.0 };
            (*l, v * (w * m))
        })
        .collect();
    let rows: Vec<f64> = (0..terms.len())
        .into_par_iter()
        .map(|i| {
            let (a, fa) = terms[i];
            let mut row: Vec<f64> = terms[i + 1..]
                .iter()
                .map(|&(b, fb)| {
                    let k = time_kernel(a * a - b * b) * (4.0 * PI * sine_overlap(a, b, radius) / (a * b));
                    2.0 * (fa * fb.conj() * k).re
                })
                .collect();
            row.push(fa.norm_sqr() * 4.0 * PI * sine_overlap(a, a, radius) / (a * a));
            pairwise(&row)
        })
        .collect();
    Ok(pairwise(&rows).max(0.0).sqrt())
}

/// Local smoothing ratio of a spectrum: `local_energy` (with `Δ` for
/// `index = 3/2`) over `sobolev_norm_h3(f, index)`.
pub fn smoothing_ratio_spectral(s: &RadialSpectrum, radius: f64, index: f64) -> Result<f64> {
    let laplacian = if index == -0.5 {
        false
    } else if index == 1.5 {
        true
    } else {
        return Err(domain(format!("smoothing index must be -1/2 or 3/2, got {index}")));
    };
    let den = sobolev_norm_h3(s, index);
    if den == 0.0 {
        return Err(domain("zero data has no smoothing ratio"));
    }
    Ok(local_energy(s, radius, laplacian)? / den)
}

/// `smoothing_ratio_spectral` of the transform of `f` on `lgrid`.
pub fn smoothing_ratio(f: &RadialProfile, lgrid: &RadialGrid, radius: f64, index: f64) -> Result<f64> {
    if radius > f.grid.end() {
        return Err(domain(format!("ball radius {radius} exceeds the profile extent {}", f.grid.end())));
    }
    smoothing_ratio_spectral(&helgason_forward(f, lgrid)?, radius, index)
}

/// Smooth compactly supported bump on `[λ₀ − λ₀/8, λ₀ + λ₀/8]` with unit
/// Plancherel norm.
pub fn bump_spectrum(lambda0: f64, radius: f64) -> Result<RadialSpectrum> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(domain(format!("bump centre must be positive, got {lambda0}")));
    }
    let sigma = lambda0 / 8.0;
    let lmax = lambda0 + sigma;
    let grid = RadialGrid::smoothing(lmax, radius)?;
    let s = RadialSpectrum::from_fn(grid, |l| {
        let x = (l - lambda0) / sigma;
        if x.abs() < 1.0 {
            C64::new((-1.0 / (1.0 - x * x)).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    let n = s.norm();
    Ok(s.scaled(C64::new(1.0 / n, 0.0)))
}
