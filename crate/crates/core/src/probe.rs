//! Ensemble estimates of the frequency-localized operator norms and
//! log-log exponent fits across dyadic scales.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{domain, Error, Result};
use crate::evolve::{propagate, spacetime_norm, TimeGrid};
use crate::fields::{pairwise, DataFamily, FamilyKind, SpectralField};
use crate::hyperbolic::{bump_spectrum, local_energy, sobolev_norm_h3};
use crate::lp::{apply_block, block_cutoff, dyadic_index, eta};
use crate::maximal::{lee_min_rhs, maximal_lp_norm, maximal_profile};
use crate::spectra::{enumerate_modes, ModeTable, ModelKind, QuadratureGrid, Quantum};
use crate::synth::GridSynth;

/// Default slope tolerance on five or more dyadic scales.
pub const SLOPE_TOL: f64 = 0.05;

/// Relative enclosure tolerance for maximal estimates, against the block's
/// mean amplitude `‖block‖_{L²}/|M|^{1/2}`.
pub const MAXIMAL_REL_TOL: f64 = 1e-2;

/// Blocks below this fraction of their member's norm count as empty.
const EMPTY_BLOCK: f64 = 1e-12;

/// The table holding every frequency of the block at scale h.
pub fn scale_table(model: ModelKind, h: f64) -> Result<Arc<ModeTable>> {
    Ok(Arc::new(enumerate_modes(model, block_cutoff(dyadic_index(h)?))?))
}

/// `family` adapted to scale h: beams and packets move to frequency `1/h`,
/// and the cutoff widens to cover the block.
pub fn family_at_scale(family: &DataFamily, h: f64) -> Result<DataFamily> {
    let k = dyadic_index(h)?;
    let freq = 1usize << k;
    let kind = match family.kind {
        FamilyKind::HighestWeightBeam(_) => FamilyKind::HighestWeightBeam(freq),
        FamilyKind::LevelBeam(_) => FamilyKind::LevelBeam(freq),
        FamilyKind::WavePacket { width, .. } => FamilyKind::WavePacket { center: freq as f64, width: width * freq as f64 },
        other => other,
    };
    Ok(DataFamily::new(kind, family.cutoff.max(block_cutoff(k))))
}

fn level_of_eigenvalue(table: &ModeTable, ev: f64) -> Option<usize> {
    table.levels().iter().position(|l| l.eigenvalue == ev)
}

/// Member `i` of the family on `table`; torus level beams are located by
/// eigenvalue rather than level index.
fn member(family: &DataFamily, table: &Arc<ModeTable>, i: usize) -> Result<SpectralField> {
    if let FamilyKind::LevelBeam(freq) = family.kind {
        if table.model().torus_dim().is_some() {
            let ev = (freq * freq) as f64;
            let idx = level_of_eigenvalue(table, ev).ok_or_else(|| domain(format!("no level at eigenvalue {ev}")))?;
            return DataFamily::new(FamilyKind::LevelBeam(idx), family.cutoff).member(table, i);
        }
    }
    family.member(table, i)
}

/// Nonzero blocks of the first `trials` members.
fn blocks(family: &DataFamily, table: &Arc<ModeTable>, k: u32, trials: usize) -> Result<Vec<SpectralField>> {
    let n = trials.min(family.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = member(family, table, i)?;
        let b = apply_block(&f, k);
        if b.l2_norm() > EMPTY_BLOCK * f.l2_norm() {
            out.push(b);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyEnsemble(format!("every block vanishes at scale {}", 0.5f64.powi(k as i32))));
    }
    Ok(out)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(domain(format!("exponent must be at least 2, got {p}")));
    }
    Ok(())
}

/// Ensemble max of `‖e^{-itΔ} block‖_{L^p((0,1]×M)} / ‖block‖_{L²}`.
pub fn strichartz_ratio(model: ModelKind, h: f64, family: &DataFamily, p: f64, trials: usize) -> Result<f64> {
    check_exponent(p)?;
    let k = dyadic_index(h)?;
    let table = Arc::new(enumerate_modes(model, family.cutoff.max(block_cutoff(k)))?);
    let grid = QuadratureGrid::for_lp(&table, p)?;
    let mut best: f64 = 0.0;
    for b in blocks(family, &table, k, trials)? {
        let tg = TimeGrid::gauss_for(&b, p, 0.0, 1.0)?;
        best = best.max(spacetime_norm(&b, p, &tg, &grid)? / b.l2_norm());
    }
    Ok(best)
}

fn maximal_ratio_on(table: &Arc<ModeTable>, blocks: &[SpectralField], p: f64, norm: impl Fn(&SpectralField) -> f64) -> Result<f64> {
    let grid = QuadratureGrid::for_lp(table, p)?;
    let vol = grid.total_weight();
    let mut best: f64 = 0.0;
    for b in blocks {
        let tol = MAXIMAL_REL_TOL * b.l2_norm() / vol.sqrt();
        let prof = maximal_profile(b, &grid, tol)?;
        best = best.max(maximal_lp_norm(&prof, p)?.hi / norm(b));
    }
    Ok(best)
}

/// Ensemble max of `‖T* block‖_{L^p(M)} / ‖block‖_{L²}`, from upper
/// enclosures.
pub fn maximal_ratio(model: ModelKind, h: f64, family: &DataFamily, p: f64, trials: usize) -> Result<f64> {
    check_exponent(p)?;
    let k = dyadic_index(h)?;
    let table = Arc::new(enumerate_modes(model, family.cutoff.max(block_cutoff(k)))?);
    let bs = blocks(family, &table, k, trials)?;
    maximal_ratio_on(&table, &bs, p, |b| b.l2_norm())
}

/// Ensemble max of `‖T*(ψ̃(Δ)f)‖_{L^q} / ‖f‖_{L²}` on the table of cutoff
/// `c0`, with the pointwise Cauchy–Schwarz ceiling
/// `‖(Σ_j ψ̃(λ_j²)² |e_j|²)^{1/2}‖_{L^q}` plus the enclosure allowance.
/// Returns `(ratio, ceiling)`.
pub fn low_frequency_bound(model: ModelKind, q: f64, c0: f64, family: &DataFamily, trials: usize) -> Result<(f64, f64)> {
    check_exponent(q)?;
    let table = Arc::new(enumerate_modes(model, c0)?);
    let grid = QuadratureGrid::for_lp(&table, q)?;
    let vol = grid.total_weight();
    let n = trials.min(family.len());
    let mut best: f64 = 0.0;
    for i in 0..n {
        let f = member(family, &table, i)?;
        let b = apply_block(&f, 0);
        if b.is_zero() {
            continue;
        }
        let tol = MAXIMAL_REL_TOL * b.l2_norm() / vol.sqrt();
        let prof = maximal_profile(&b, &grid, tol)?;
        let v = maximal_lp_norm(&prof, q)?.hi / f.l2_norm();
        best = best.max(v);
    }
    let synth = GridSynth::new(table.clone(), &grid)?;
    let mut dens = vec![0.0; grid.len()];
    let mut unit = vec![C64::new(0.0, 0.0); table.len()];
    for (j, m) in table.modes().iter().enumerate() {
        let w = eta(m.eigenvalue);
        if w == 0.0 {
            continue;
        }
        unit[j] = C64::new(1.0, 0.0);
        for (d, v) in dens.iter_mut().zip(synth.synthesize(&unit)) {
            *d += w * w * v.norm_sqr();
        }
        unit[j] = C64::new(0.0, 0.0);
    }
    let terms: Vec<f64> = dens.iter().zip(grid.weights()).map(|(d, w)| w * d.powf(q / 2.0)).collect();
    let allowance = MAXIMAL_REL_TOL * vol.powf(1.0 / q - 0.5) * (1.0 + 1e-6);
    Ok((best, pairwise(&terms).powf(1.0 / q) + allowance))
}

/// One measured scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    pub h: f64,
    pub value: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    pub inequality_id: String,
    pub model: String,
    pub p_or_q: f64,
    pub family: String,
    points: Vec<ScalePoint>,
}

impl ScalingSeries {
    pub fn new(inequality_id: &str, model: &str, p_or_q: f64, family: &str) -> Self {
        Self {
            inequality_id: inequality_id.into(),
            model: model.into(),
            p_or_q,
            family: family.into(),
            points: Vec::new(),
        }
    }

    /// Appends a scale; h must decrease and values must be nonnegative.
    pub fn push(&mut self, h: f64, value: f64, trials: usize) -> Result<()> {
        if !(value >= 0.0) {
            return Err(domain(format!("series value must be nonnegative, got {value}")));
        }
        if let Some(last) = self.points.last() {
            if !(h < last.h) {
                return Err(domain(format!("scales must decrease: {h} after {}", last.h)));
            }
        }
        self.points.push(ScalePoint { h, value, trials });
        Ok(())
    }

    pub fn points(&self) -> &[ScalePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub r2: f64,
}

/// Least squares of `log value` on `log h`.
pub fn fit_exponent(series: &ScalingSeries) -> Result<Fit> {
    let pts = series.points();
    if pts.len() < 3 {
        return Err(domain(format!("a fit needs at least 3 scales, got {}", pts.len())));
    }
    if let Some(p) = pts.iter().find(|p| !(p.value > 0.0)) {
        return Err(domain(format!("cannot fit nonpositive value {} at h={}", p.value, p.h)));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.h.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.value.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(Fit { slope, r2 })
}

/// What a series is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    SlopeAtLeast { bound: f64, tol: f64 },
    SlopeNear { target: f64, tol: f64 },
    /// Every value at most `factor` times the series median.
    MedianBounded { factor: f64 },
    /// Every value at most `bound`.
    AtMost { bound: f64 },
    Diagnostic,
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::SlopeAtLeast { bound, tol } => write!(f, "slope>={bound:.6}-{tol}"),
            Threshold::SlopeNear { target, tol } => write!(f, "slope={target:.6}+-{tol}"),
            Threshold::MedianBounded { factor } => write!(f, "value<={factor}*median"),
            Threshold::AtMost { bound } => write!(f, "value<={bound:.6e}"),
            Threshold::Diagnostic => write!(f, "diagnostic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub series: ScalingSeries,
    pub fit: Option<Fit>,
    pub threshold: Threshold,
    pub pass: bool,
}

fn median_of(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Fits the series when it has enough scales and applies the threshold.
pub fn judge(series: ScalingSeries, threshold: Threshold) -> Result<ExperimentReport> {
    let fit = if series.len() >= 3 && series.points().iter().all(|p| p.value > 0.0) {
        Some(fit_exponent(&series)?)
    } else {
        None
    };
    let values: Vec<f64> = series.points().iter().map(|p| p.value).collect();
    let pass = match threshold {
        Threshold::SlopeAtLeast { bound, tol } => fit.is_some_and(|f| f.slope >= bound - tol),
        Threshold::SlopeNear { target, tol } => fit.is_some_and(|f| (f.slope - target).abs() <= tol),
        Threshold::MedianBounded { factor } => {
            let m = median_of(&values);
            !values.is_empty() && values.iter().all(|v| *v <= factor * m)
        }
        Threshold::AtMost { bound } => values.iter().all(|v| *v <= bound),
        Threshold::Diagnostic => true,
    };
    Ok(ExperimentReport { series, fit, threshold, pass })
}

/// `strichartz_ratio` over decreasing scales, `trials[i]` members at `hs[i]`.
pub fn strichartz_series(
    id: &str,
    model: ModelKind,
    family: &DataFamily,
    hs: &[f64],
    trials: &[usize],
    p: f64,
) -> Result<ScalingSeries> {
    let mut s = ScalingSeries::new(id, model.name(), p, &family_label(family));
    for (h, n) in hs.iter().zip(trials) {
        let fam = family_at_scale(family, *h)?;
        s.push(*h, strichartz_ratio(model, *h, &fam, p, *n)?, (*n).min(fam.len()))?;
    }
    Ok(s)
}

/// `maximal_ratio` over decreasing scales.
pub fn maximal_series(
    id: &str,
    model: ModelKind,
    family: &DataFamily,
    hs: &[f64],
    trials: &[usize],
    p: f64,
) -> Result<ScalingSeries> {
    let mut s = ScalingSeries::new(id, model.name(), p, &family_label(family));
    for (h, n) in hs.iter().zip(trials) {
        let fam = family_at_scale(family, *h)?;
        s.push(*h, maximal_ratio(model, *h, &fam, p, *n)?, (*n).min(fam.len()))?;
    }
    Ok(s)
}

/// Ensemble max of the maximal-block ratio against
/// `h^{-2/q-β}‖block‖_{L²} + ‖block‖_{L^q}`.
pub fn lemma_series(
    model: ModelKind,
    family: &DataFamily,
    hs: &[f64],
    trials: &[usize],
    q: f64,
    beta: f64,
) -> Result<ScalingSeries> {
    let mut s = ScalingSeries::new("lemma_5_7", model.name(), q, &family_label(family));
    for (h, n) in hs.iter().zip(trials) {
        let fam = family_at_scale(family, *h)?;
        let table = fam.table(model)?;
        let count = (*n).min(fam.len());
        let mut best: f64 = 0.0;
        for i in 0..count {
            let f = member(&fam, &table, i)?;
            let r = crate::maximal::lemma52_check(&f, *h, q, beta, MAXIMAL_REL_TOL)?;
            best = best.max(r.ratio);
        }
        s.push(*h, best, count)?;
    }
    Ok(s)
}

pub fn family_label(family: &DataFamily) -> String {
    match family.kind {
        FamilyKind::SobolevEnsemble { alpha, seed, .. } => format!("sobolev(alpha={alpha};seed={seed})"),
        FamilyKind::SingleMode(id) => format!("single_mode({id})"),
        FamilyKind::LevelBeam(_) => "level_beam".into(),
        FamilyKind::HighestWeightBeam(_) => "highest_weight".into(),
        FamilyKind::WavePacket { width, .. } => format!("wave_packet(width={width})"),
    }
}

/// Local smoothing ratios of the bump family at each `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingRow {
    pub lambda0: f64,
    /// Against `‖f‖_{H^{-1/2}}`.
    pub ratio_low: f64,
    /// `‖Δu‖` against `‖f‖_{H^{3/2}}`.
    pub ratio_high: f64,
    /// Against `‖f‖_{L²}`.
    pub ratio_l2: f64,
}

pub fn smoothing_family(lambdas: &[f64], radius: f64) -> Result<Vec<SmoothingRow>> {
    lambdas
        .iter()
        .map(|&l0| {
            let s = bump_spectrum(l0, radius)?;
            let e = local_energy(&s, radius, false)?;
            let d = local_energy(&s, radius, true)?;
            Ok(SmoothingRow {
                lambda0: l0,
                ratio_low: e / sobolev_norm_h3(&s, -0.5),
                ratio_high: d / sobolev_norm_h3(&s, 1.5),
                ratio_l2: e / s.norm(),
            })
        })
        .collect()
}

/// `sup |e_j|` over the manifold.
fn eigen_sup(mode: &crate::spectra::Mode) -> f64 {
    use std::f64::consts::PI;
    match mode.quantum {
        Quantum::Circle(_) => (2.0 * PI).powf(-0.5),
        Quantum::Torus2(_) => 1.0 / (2.0 * PI),
        Quantum::Torus3(_) => (2.0 * PI).powf(-1.5),
        Quantum::Sphere { k, .. } => ((2 * k + 1) as f64 / (4.0 * PI)).sqrt(),
        Quantum::Zonal(k) => (k + 1) as f64 / (PI * std::f64::consts::SQRT_2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub member: usize,
    pub t: f64,
    /// `max_x |u(t,x) − f(x)|` on the grid.
    pub sup_error: f64,
    pub sobolev_norm: f64,
    /// `t Σ_j λ_j² |f̂_j| sup|e_j|` plus rounding allowance.
    pub bound: f64,
}

/// Grid sup of `|u(t) − f|` for each `α`, member and time.
pub fn convergence_sweep(
    model: ModelKind,
    family: &DataFamily,
    alphas: &[f64],
    times: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(domain(format!("sweep times must lie in (0, 1], got {t}")));
    }
    let table = family.table(model)?;
    let grid = QuadratureGrid::for_table(&table)?;
    let synth = GridSynth::new(table.clone(), &grid)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        let fam = match family.kind {
            FamilyKind::SobolevEnsemble { seed, trials, .. } => {
                DataFamily::new(FamilyKind::SobolevEnsemble { alpha, seed, trials }, family.cutoff)
            }
            _ => *family,
        };
        for i in 0..fam.len() {
            let f = member(&fam, &table, i)?;
            let f0 = synth.synthesize(f.coeffs());
            let (rate, size) = table.modes().iter().zip(f.coeffs()).fold((0.0, 0.0), |(r, s), (m, c)| {
                let a = c.norm() * eigen_sup(m);
                (r + m.eigenvalue * a, s + a)
            });
            for &t in times {
                let u = synth.synthesize(propagate(&f, t)?.coeffs());
                let err = u.iter().zip(&f0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                rows.push(SweepRow {
                    alpha,
                    member: i,
                    t,
                    sup_error: err,
                    sobolev_norm: f.sobolev_norm(alpha),
                    bound: t * rate + 1e-12 * size,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeeRow {
    pub omega: f64,
    pub sup: f64,
    pub rhs: f64,
    pub mu: f64,
}

impl LeeRow {
    pub fn ratio(&self) -> f64 {
        self.sup / self.rhs
    }
}

/// `sup|g|` against the μ-minimized bracket for `g(t) = sin(ωt)` on `[0, 1]`,
/// sampled at `samples + 1` equispaced nodes.
pub fn lee_family(omegas: &[f64], q: f64, samples: usize) -> Result<Vec<LeeRow>> {
    if samples < 2 {
        return Err(domain("need at least two sample intervals"));
    }
    let times: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    omegas
        .iter()
        .map(|&w| {
            let g: Vec<f64> = times.iter().map(|t| (w * t).sin()).collect();
            let dg: Vec<f64> = times.iter().map(|t| w * (w * t).cos()).collect();
            let sup = if w >= std::f64::consts::FRAC_PI_2 { 1.0 } else { w.sin() };
            let (rhs, mu) = lee_min_rhs(&times, &g, &dg, q)?;
            Ok(LeeRow { omega: w, sup, rhs, mu })
        })
        .collect()
}
