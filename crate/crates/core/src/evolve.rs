//! Exact propagation `f̂_j ↦ e^{itλ_j²} f̂_j` and space-time norms.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::fields::{pairwise, pow_abs, SpectralField};
use crate::quad::{composite_gauss, panels_for_bandwidth, safe_panel_frequency};
use crate::spectra::{ModelKind, Point, QuadratureGrid};
use crate::synth::GridSynth;

/// Gauss–Legendre order used for time panels.
pub const TIME_PANEL_ORDER: usize = 64;

pub fn propagate(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !t.is_finite() {
        return Err(domain(format!("propagation time {t} is not finite")));
    }
    Ok(f.with_coeffs(propagated_coeffs(f, t)))
}

/// Coefficients of `e^{-itΔ} f`, one `cis` per distinct eigenvalue.
pub(crate) fn propagated_coeffs(f: &SpectralField, t: f64) -> Vec<C64> {
    let mut out = f.coeffs().to_vec();
    propagate_into(f, t, &mut out);
    out
}

/// `e^{i t e}` with the rounding error of the product `t e` folded back in.
pub(crate) fn unit_phase(t: f64, e: f64) -> C64 {
    let p = t * e;
    let err = t.mul_add(e, -p);
    C64::from_polar(1.0, p) * C64::new(1.0, err)
}

pub(crate) fn propagate_into(f: &SpectralField, t: f64, out: &mut [C64]) {
    let c = f.coeffs();
    for level in f.table().levels() {
        let z = unit_phase(t, level.eigenvalue);
        for j in level.start..level.end {
            out[j] = c[j] * z;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeRule {
    /// Composite trapezoid with uniform spacing.
    Trapezoid { spacing: f64 },
    /// Composite Gauss–Legendre panels.
    Gauss { panels: usize, order: usize },
}

/// Quadrature on `(a, b]`. The trapezoid rule also carries a weight at the
/// left endpoint, where the integrand is its limit from the right.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    endpoint_weight: f64,
    rule: TimeRule,
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a < b && b <= 1.0) {
        return Err(config(format!("time interval ({a}, {b}] must satisfy 0 <= a < b <= 1")));
    }
    Ok(())
}

impl TimeGrid {
    pub fn trapezoid(a: f64, b: f64, intervals: usize) -> Result<Self> {
        check_interval(a, b)?;
        if intervals == 0 {
            return Err(config("trapezoid rule needs at least one interval"));
        }
        let h = (b - a) / intervals as f64;
        let nodes: Vec<f64> = (1..=intervals).map(|i| if i == intervals { b } else { a + i as f64 * h }).collect();
        let mut weights = vec![h; intervals];
        weights[intervals - 1] = 0.5 * h;
        Ok(Self {
            a,
            b,
            nodes,
            weights,
            endpoint_weight: 0.5 * h,
            rule: TimeRule::Trapezoid { spacing: h },
        })
    }

    /// Trapezoid rule with spacing at most `1/(4 λ_max²)` for the field.
    pub fn trapezoid_for(f: &SpectralField, a: f64, b: f64) -> Result<Self> {
        let top = f.top_eigenvalue().max(1.0);
        let n = ((b - a) * 4.0 * top).ceil() as usize;
        Self::trapezoid(a, b, n.max(1))
    }

    pub fn gauss(a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        check_interval(a, b)?;
        if panels == 0 || order == 0 {
            return Err(config("Gauss time grid needs positive panel count and order"));
        }
        let (nodes, weights) = composite_gauss(a, b, panels, order);
        Ok(Self { a, b, nodes, weights, endpoint_weight: 0.0, rule: TimeRule::Gauss { panels, order } })
    }

    /// Gauss panels resolving `|u|^p` for the field's spectral spread.
    pub fn gauss_for(f: &SpectralField, p: f64, a: f64, b: f64) -> Result<Self> {
        let band = time_bandwidth(f, p);
        let panels = panels_for_bandwidth(b - a, band, TIME_PANEL_ORDER);
        Self::gauss(a, b, panels, TIME_PANEL_ORDER)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn endpoint_weight(&self) -> f64 {
        self.endpoint_weight
    }

    pub fn rule(&self) -> TimeRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All `(t, w)` pairs, the left endpoint first when it carries weight.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut s = Vec::with_capacity(self.nodes.len() + 1);
        if self.endpoint_weight > 0.0 {
            s.push((self.a, self.endpoint_weight));
        }
        s.extend(self.nodes.iter().copied().zip(self.weights.iter().copied()));
        s
    }

    pub fn check_admissible(&self, f: &SpectralField, p: f64) -> Result<()> {
        match self.rule {
            TimeRule::Trapezoid { spacing } => {
                let top = f.top_eigenvalue();
                if top > 0.0 && spacing > 1.0 / (4.0 * top) * (1.0 + 1e-12) {
                    return Err(config(format!(
                        "time spacing {spacing:e} exceeds 1/(4 λ²_max) = {:e}",
                        1.0 / (4.0 * top)
                    )));
                }
            }
            TimeRule::Gauss { panels, order } => {
                let h = (self.b - self.a) / panels as f64;
                let band = time_bandwidth(f, p);
                if band * h / 2.0 > safe_panel_frequency(order) * (1.0 + 1e-12) {
                    return Err(config(format!(
                        "{panels} Gauss panels of order {order} cannot resolve time bandwidth {band:e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Angular frequency bound for `t ↦ |u(t, x)|^p`.
fn time_bandwidth(f: &SpectralField, p: f64) -> f64 {
    let (lo, hi) = energy_span(f);
    (p / 2.0).ceil() * (hi - lo)
}

/// Smallest and largest eigenvalue carrying energy.
pub(crate) fn energy_span(f: &SpectralField) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for l in f.table().levels() {
        if f.coeffs()[l.start..l.end].iter().any(|c| c.norm_sqr() > 0.0) {
            lo = lo.min(l.eigenvalue);
            hi = hi.max(l.eigenvalue);
        }
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// `Σ_t w_t Σ_x w_x |u(t,x)|^p` for arbitrary per-point weights.
fn spacetime_sum(f: &SpectralField, p: f64, tgrid: &TimeGrid, synth: &GridSynth, xw: &[f64]) -> f64 {
    let samples = tgrid.samples();
    let chunk = 32;
    let partial: Vec<f64> = samples
        .par_chunks(chunk)
        .map(|block| {
            let mut coeffs = vec![C64::new(0.0, 0.0); f.coeffs().len()];
            let mut vals = vec![C64::new(0.0, 0.0); synth.npoints()];
            let mut scratch = Vec::new();
            let mut terms = Vec::with_capacity(block.len());
            let mut row = vec![0.0; synth.npoints()];
            for &(t, w) in block {
                propagate_into(f, t, &mut coeffs);
                synth.synthesize_into(&coeffs, &mut vals, &mut scratch);
                for ((r, v), wx) in row.iter_mut().zip(&vals).zip(xw) {
                    *r = wx * pow_abs(v.norm(), p);
                }
                terms.push(w * pairwise(&row));
            }
            pairwise(&terms)
        })
        .collect();
    pairwise(&partial)
}

/// `‖u‖_{L^p((a,b]×M)}` by time and space quadrature.
pub fn spacetime_norm(f: &SpectralField, p: f64, tgrid: &TimeGrid, sgrid: &QuadratureGrid) -> Result<f64> {
    if p < 1.0 || !p.is_finite() {
        return Err(domain(format!("space-time exponent must be in [1, ∞), got {p}")));
    }
    sgrid.check_admissible(f.table(), p)?;
    tgrid.check_admissible(f, p)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let synth = GridSynth::new(f.table().clone(), sgrid)?;
    if f.active_levels() == 1 {
        // |u(t, x)| = |f(x)| for a single eigenvalue
        let vals = synth.synthesize(f.coeffs());
        let s = crate::fields::weighted_lp(&vals, sgrid.weights(), p);
        let (a, b) = tgrid.interval();
        return Ok((b - a).powf(1.0 / p) * s);
    }
    Ok(spacetime_sum(f, p, tgrid, &synth, sgrid.weights()).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedNorm {
    pub value: f64,
    /// Set when no grid point fell inside the region.
    pub empty_region: bool,
}

/// Space-time L² norm restricted to the points where `region` holds.
pub fn localized_l2<F>(f: &SpectralField, tgrid: &TimeGrid, region: F, sgrid: &QuadratureGrid) -> Result<LocalizedNorm>
where
    F: Fn(&Point) -> bool,
{
    sgrid.check_admissible(f.table(), 2.0)?;
    tgrid.check_admissible(f, 2.0)?;
    let mask: Vec<f64> = sgrid
        .points()
        .iter()
        .zip(sgrid.weights())
        .map(|(x, w)| if region(x) { *w } else { 0.0 })
        .collect();
    if mask.iter().all(|w| *w == 0.0) {
        return Ok(LocalizedNorm { value: 0.0, empty_region: true });
    }
    let synth = GridSynth::new(f.table().clone(), sgrid)?;
    let value = spacetime_sum(f, 2.0, tgrid, &synth, &mask).sqrt();
    Ok(LocalizedNorm { value, empty_region: false })
}

/// Values of `u(t, x)` on a time list and a spatial grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeSamples {
    pub model: ModelKind,
    pub cutoff: f64,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Time-major: entry `i * points.len() + x`.
    pub values: Vec<C64>,
}

impl SpaceTimeSamples {
    pub fn sample(f: &SpectralField, times: &[f64], sgrid: &QuadratureGrid) -> Result<Self> {
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(domain(format!("sample time {t} is not finite")));
        }
        let synth = GridSynth::new(f.table().clone(), sgrid)?;
        let rows: Vec<Vec<C64>> = times
            .par_iter()
            .map(|&t| synth.synthesize(&propagated_coeffs(f, t)))
            .collect();
        Ok(Self {
            model: f.model(),
            cutoff: f.table().cutoff(),
            times: times.to_vec(),
            points: sgrid.points().to_vec(),
            values: rows.concat(),
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# model={}", self.model)?;
        writeln!(w, "# cutoff={:e}", self.cutoff)?;
        let names: &[&str] = match self.model {
            ModelKind::Circle => &["x"],
            ModelKind::Torus2 => &["x", "y"],
            ModelKind::Torus3 => &["x", "y", "z"],
            ModelKind::Sphere2 => &["theta", "phi"],
            ModelKind::SphereZonal3 => &["theta"],
            ModelKind::HyperbolicRadial3 => &["r"],
        };
        writeln!(w, "t,{},re,im", names.join(","))?;
        let np = self.points.len();
        for (i, t) in self.times.iter().enumerate() {
            for (x, p) in self.points.iter().enumerate() {
                let v = self.values[i * np + x];
                let c: Vec<String> = p.coords().iter().map(|c| format!("{c:e}")).collect();
                writeln!(w, "{t:e},{},{:e},{:e}", c.join(","), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_field;
    use crate::spectra::{enumerate_modes, Quantum};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn circle(cutoff: f64) -> Arc<crate::spectra::ModeTable> {
        Arc::new(enumerate_modes(ModelKind::Circle, cutoff).unwrap())
    }

    #[test]
    fn propagate_examples() {
        let t = circle(2.0);
        let f = random_field(&t, 0.0, 1);
        assert_eq!(propagate(&f, 0.0).unwrap().coeffs(), f.coeffs());
        let id = t.find(Quantum::Circle(2)).unwrap();
        let g = SpectralField::single_mode(t, id, C64::new(1.0, 0.0)).unwrap();
        let r = propagate(&g, PI / 4.0).unwrap();
        assert!((r.coeffs()[id] + 1.0).norm() < 1e-15);
        assert!(propagate(&g, f64::NAN).is_err());
        let u = propagate(&f, 0.37).unwrap();
        assert!((u.l2_norm() - f.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn time_grids() {
        let g = TimeGrid::trapezoid(0.0, 1.0, 10).unwrap();
        let total: f64 = g.samples().iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() == 1.0);
        let g = TimeGrid::gauss(0.25, 0.75, 3, 8).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 0.5).abs() < 1e-12);
        assert!(TimeGrid::trapezoid(0.5, 0.5, 3).is_err());
        assert!(TimeGrid::trapezoid(0.0, 1.5, 3).is_err());
    }

    #[test]
    fn single_mode_spacetime_norm() {
        let t = circle(1.0);
        let f = SpectralField::single_mode(t.clone(), 2, C64::new(1.0, 0.0)).unwrap();
        let sg = QuadratureGrid::for_lp(&t, 6.0).unwrap();
        let tg = TimeGrid::trapezoid_for(&f, 0.0, 1.0).unwrap();
        let v = spacetime_norm(&f, 6.0, &tg, &sg).unwrap();
        let want = (2.0 * PI).powf(-0.5) * (2.0 * PI).powf(1.0 / 6.0);
        assert!((v - want).abs() < 1e-13);
        let z = SpectralField::zeros(t);
        assert_eq!(spacetime_norm(&z, 6.0, &tg, &sg).unwrap(), 0.0);
    }

    #[test]
    fn two_mode_norm_is_grid_converged() {
        let t = circle(3.0);
        let mut c = vec![C64::new(0.0, 0.0); t.len()];
        c[t.find(Quantum::Circle(1)).unwrap()] = C64::new(1.0, 0.0);
        c[t.find(Quantum::Circle(-3)).unwrap()] = C64::new(0.5, 0.2);
        let f = SpectralField::new(t.clone(), c).unwrap();
        let sg = QuadratureGrid::for_lp(&t, 6.0).unwrap();
        let coarse = TimeGrid::trapezoid_for(&f, 0.0, 1.0).unwrap();
        let fine = TimeGrid::trapezoid(0.0, 1.0, coarse.len() * 10).unwrap();
        let a = spacetime_norm(&f, 6.0, &coarse, &sg).unwrap();
        let b = spacetime_norm(&f, 6.0, &fine, &sg).unwrap();
        assert!((a - b).abs() < 1e-4);
        let g = TimeGrid::gauss_for(&f, 6.0, 0.0, 1.0).unwrap();
        let c = spacetime_norm(&f, 6.0, &g, &sg).unwrap();
        assert!((c - b).abs() < 1e-6);
    }

    #[test]
    fn inadmissible_grids_are_rejected() {
        let t = circle(8.0);
        let f = random_field(&t, 0.0, 2);
        let sg = QuadratureGrid::for_lp(&t, 4.0).unwrap();
        let coarse = TimeGrid::trapezoid(0.0, 1.0, 10).unwrap();
        assert!(spacetime_norm(&f, 4.0, &coarse, &sg).is_err());
        let tg = TimeGrid::trapezoid_for(&f, 0.0, 1.0).unwrap();
        let small = QuadratureGrid::torus(ModelKind::Circle, 9).unwrap();
        assert!(spacetime_norm(&f, 4.0, &tg, &small).is_err());
        let g = TimeGrid::gauss(0.0, 1.0, 1, 4).unwrap();
        assert!(spacetime_norm(&f, 4.0, &g, &sg).is_err());
    }

    #[test]
    fn localized_norm_examples() {
        let t = circle(2.0);
        let f = SpectralField::single_mode(t.clone(), 3, C64::new(1.0, 0.0)).unwrap();
        let sg = QuadratureGrid::torus(ModelKind::Circle, 64).unwrap();
        let tg = TimeGrid::trapezoid_for(&f, 0.0, 1.0).unwrap();
        let whole = localized_l2(&f, &tg, |_| true, &sg).unwrap();
        let full = spacetime_norm(&f, 2.0, &tg, &sg).unwrap();
        assert!((whole.value - full).abs() < 1e-13 && !whole.empty_region);
        let none = localized_l2(&f, &tg, |_| false, &sg).unwrap();
        assert!(none.empty_region && none.value == 0.0);
        // half circle [0, π): 32 of 64 trapezoid points, measure π
        let half = localized_l2(&f, &tg, |p| p.coords()[0] < PI, &sg).unwrap();
        let want = (PI * 1.0).sqrt() * (2.0 * PI).powf(-0.5);
        assert!((half.value - want).abs() < 1e-13);
    }

    #[test]
    fn samples_csv_shape() {
        let t = circle(1.0);
        let f = random_field(&t, 0.0, 3);
        let sg = QuadratureGrid::torus(ModelKind::Circle, 4).unwrap();
        let s = SpaceTimeSamples::sample(&f, &[0.0, 0.5], &sg).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("t,x,re,im"));
        assert_eq!(text.lines().count(), 2 + 1 + 8);
        let direct = propagate(&f, 0.5).unwrap().synthesize(&sg.points()[1]).unwrap();
        assert!((s.values[4 + 1] - direct).norm() < 1e-13);
    }
}
