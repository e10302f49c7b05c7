//! Certified enclosures of the maximal function `T*f(x) = sup_{0<t≤1} |u(t,x)|`.
//!
//! At a fixed point the evolution is a trigonometric sum
//! `u(t) = Σ_ℓ a_ℓ e^{iE_ℓ t}` over distinct eigenvalues. After demodulating
//! by the centre of the spectrum, with `K1 = Σ|E_ℓ−c||a_ℓ|` and
//! `K2 = Σ(E_ℓ−c)²|a_ℓ|`, every cell `[t_l, t_r]` of width w satisfies
//!
//! `sup |u| ≤ min(max(|u_l|, |u_r|) + K2 w²/8, (|u_l|+|u_r|)/2 + K1 w/2, Σ|a_ℓ|)`.
//!
//! Cells whose bound exceeds the best sample by more than the tolerance are
//! subdivided once, finely enough that the second-order term drops below
//! half the tolerance.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::fields::{pairwise, pow_abs, SpectralField};
use crate::lp::block_for_h;
use crate::spectra::{eval_eigenfunction, GridLayout, ModelKind, Point, QuadratureGrid};
use crate::synth::GridSynth;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Coarse sampling aims for `K2 δ²/8 ≈ COARSE_KAPPA · rms`.
const COARSE_KAPPA: f64 = 0.25;
/// Evaluation budget per point before giving up.
const MAX_EVALS_PER_POINT: usize = 50_000_000;
/// Points per GEMM block.
const GEMM_BLOCK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

impl Enclosure {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Derivative bounds for one point's trigonometric sum.
#[derive(Debug, Clone, Copy, Default)]
struct Bounds {
    k1: f64,
    k2: f64,
    m0: f64,
    rms: f64,
}

fn bounds(amps: &[C64], shifted: &[f64]) -> Bounds {
    let mut b = Bounds::default();
    let mut e2 = 0.0;
    for (a, e) in amps.iter().zip(shifted) {
        let r = a.norm();
        b.m0 += r;
        b.k1 += e.abs() * r;
        b.k2 += e * e * r;
        e2 += r * r;
    }
    b.rms = e2.sqrt();
    b
}

#[inline]
fn cell_bound(ul: f64, ur: f64, w: f64, b: &Bounds) -> f64 {
    let second = ul.max(ur) + b.k2 * w * w / 8.0;
    let first = 0.5 * (ul + ur) + 0.5 * b.k1 * w;
    second.min(first).min(b.m0)
}

/// Rounding allowance added to upper ends.
fn slack(b: &Bounds, terms: usize) -> f64 {
    4.0 * (terms as f64 + 8.0) * f64::EPSILON * b.m0
}

/// Values `|Σ a_ℓ e^{i e_ℓ (t0 + i w)}|` for `i = 0..n`, by rotation with
/// periodic re-anchoring.
fn walk(amps: &[C64], shifted: &[f64], t0: f64, w: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    let mut z: Vec<C64> = vec![ZERO; amps.len()];
    let rot: Vec<C64> = shifted.iter().map(|e| C64::from_polar(1.0, e * w)).collect();
    for i in 0..n {
        if i % 64 == 0 {
            let t = t0 + i as f64 * w;
            for ((zi, a), e) in z.iter_mut().zip(amps).zip(shifted) {
                *zi = a * C64::from_polar(1.0, e * t);
            }
        } else {
            for (zi, r) in z.iter_mut().zip(&rot) {
                *zi *= r;
            }
        }
        let s: C64 = z.iter().sum();
        out.push(s.norm());
    }
}

/// Depth of the halving tables.
const MAX_DEPTH: usize = 30;

/// Largest anchor phase table kept in memory, in entries.
const MAX_ANCHOR_TABLE: usize = 1 << 23;

/// `rots[d][ℓ] = e^{i e_ℓ w / 2^{d+1}}`: the step from the left end of a
/// depth-d subcell to its midpoint.
struct Halving {
    w: f64,
    rots: Vec<Vec<C64>>,
}

impl Halving {
    fn new(shifted: &[f64], w: f64) -> Self {
        let rots = (0..MAX_DEPTH)
            .map(|d| {
                let h = w / 2f64.powi(d as i32 + 1);
                shifted.iter().map(|e| C64::from_polar(1.0, e * h)).collect()
            })
            .collect();
        Self { w, rots }
    }
}

/// Where the phases `e^{i e_ℓ t_i}` at coarse nodes come from.
#[derive(Clone, Copy)]
enum Anchors<'a> {
    /// Row-major table, one row of levels per coarse node.
    Table(&'a [C64]),
    Direct,
}

fn anchored(amps: &[C64], shifted: &[f64], anchors: Anchors<'_>, i: usize, t: f64) -> Vec<C64> {
    let nl = amps.len();
    match anchors {
        Anchors::Table(tab) => amps.iter().zip(&tab[i * nl..(i + 1) * nl]).map(|(a, z)| a * z).collect(),
        Anchors::Direct => amps.iter().zip(shifted).map(|(a, e)| a * C64::from_polar(1.0, e * t)).collect(),
    }
}

/// Adaptive bisection of one coarse cell whose left-end terms are `z`.
/// Returns the certified bound of the cell and raises `lo` with new samples.
#[allow(clippy::too_many_arguments)]
fn refine_cell(
    z: Vec<C64>,
    ul: f64,
    ur: f64,
    halving: &Halving,
    b: &Bounds,
    lo: &mut f64,
    tol: f64,
    evals: &mut usize,
) -> f64 {
    let mut hi: f64 = 0.0;
    let mut stack = vec![(z, ul, ur, 0usize)];
    while let Some((z, ul, ur, d)) = stack.pop() {
        let w = halving.w / 2f64.powi(d as i32);
        let bound = cell_bound(ul, ur, w, b);
        if bound <= *lo + tol || d >= MAX_DEPTH || *evals >= MAX_EVALS_PER_POINT {
            hi = hi.max(bound);
            continue;
        }
        let zm: Vec<C64> = z.iter().zip(&halving.rots[d]).map(|(a, r)| a * r).collect();
        let um = zm.iter().sum::<C64>().norm();
        *evals += 1;
        *lo = lo.max(um);
        stack.push((zm, um, ur, d + 1));
        stack.push((z, ul, um, d + 1));
    }
    hi
}

/// Enclosure at one point from coarse samples `vals` on `times`
/// (uniform, spacing `halving.w`).
#[allow(clippy::too_many_arguments)]
fn finish_point(
    amps: &[C64],
    shifted: &[f64],
    b: &Bounds,
    times: &[f64],
    vals: &[f64],
    tol: f64,
    anchors: Anchors<'_>,
    halving: &Halving,
) -> Result<Enclosure> {
    let mut lo = vals.iter().copied().fold(0.0, f64::max);
    let w = halving.w;
    let mut order: Vec<(f64, usize)> = (0..vals.len() - 1)
        .map(|i| (cell_bound(vals[i], vals[i + 1], w, b), i))
        .filter(|c| c.0 > lo + tol)
        .collect();
    let settled = (0..vals.len() - 1)
        .map(|i| cell_bound(vals[i], vals[i + 1], w, b))
        .filter(|c| *c <= lo + tol)
        .fold(lo, f64::max);
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut hi = settled;
    let mut evals = 0usize;
    for (bound, i) in order {
        if bound <= lo + tol {
            hi = hi.max(bound);
            continue;
        }
        let z = anchored(amps, shifted, anchors, i, times[i]);
        let c = refine_cell(z, vals[i], vals[i + 1], halving, b, &mut lo, tol, &mut evals);
        hi = hi.max(c);
    }
    close(lo, hi, b, amps.len(), tol)
}

fn close(lo: f64, hi: f64, b: &Bounds, terms: usize, tol: f64) -> Result<Enclosure> {
    let sl = slack(b, terms);
    let enc = Enclosure { lo, hi: (hi.max(lo) + sl).min(b.m0 + sl) };
    if enc.width() > tol + sl {
        return Err(Error::SupUnresolved { best: enc, tol });
    }
    Ok(enc)
}

/// Uniform coarse nodes on `[0, 1]` for the given spacing.
fn coarse_times(delta: f64) -> Vec<f64> {
    let n = (1.0 / delta).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { 1.0 } else { i as f64 / n as f64 }).collect()
}

fn coarse_delta(width: f64, rms: f64, k2: f64) -> f64 {
    let mut d = if width > 0.0 { 1.0 / width } else { 1.0 };
    if k2 > 0.0 && rms > 0.0 {
        d = d.min((8.0 * COARSE_KAPPA * rms / k2).sqrt());
    }
    d.clamp(1e-7, 1.0)
}

/// Demodulated energies for the active levels.
fn shifted_energies(energies: &[f64]) -> Vec<f64> {
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = 0.5 * (lo + hi);
    energies.iter().map(|e| e - c).collect()
}

/// Certified `sup_{0≤t≤1} |Σ a_ℓ e^{iE_ℓ t}|` to absolute width `tol`.
pub fn sup_trig_sum(amps: &[C64], energies: &[f64], tol: f64) -> Result<Enclosure> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let (amps, energies): (Vec<C64>, Vec<f64>) = amps
        .iter()
        .zip(energies)
        .filter(|(a, _)| a.norm_sqr() > 0.0)
        .map(|(a, e)| (*a, *e))
        .unzip();
    match amps.len() {
        0 => return Ok(Enclosure::exact(0.0)),
        1 => return Ok(Enclosure::exact(amps[0].norm())),
        _ => {}
    }
    let shifted = shifted_energies(&energies);
    let b = bounds(&amps, &shifted);
    let width = 2.0 * shifted.iter().copied().fold(0.0, f64::max);
    let times = coarse_times(coarse_delta(width, b.rms, b.k2));
    let n = times.len() - 1;
    let mut vals = Vec::with_capacity(n + 1);
    walk(&amps, &shifted, 0.0, 1.0 / n as f64, n, &mut vals);
    vals.push(level_sum(&amps, &shifted, 1.0));
    let halving = Halving::new(&shifted, 1.0 / n as f64);
    finish_point(&amps, &shifted, &b, &times, &vals, tol, Anchors::Direct, &halving)
}

fn level_sum(amps: &[C64], shifted: &[f64], t: f64) -> f64 {
    amps.iter().zip(shifted).map(|(a, e)| a * C64::from_polar(1.0, e * t)).sum::<C64>().norm()
}

/// Active levels of a field: indices and eigenvalues.
fn active_levels(f: &SpectralField) -> (Vec<usize>, Vec<f64>) {
    f.table()
        .levels()
        .iter()
        .enumerate()
        .filter(|(_, l)| f.coeffs()[l.start..l.end].iter().any(|c| c.norm_sqr() > 0.0))
        .map(|(i, l)| (i, l.eigenvalue))
        .unzip()
}

/// Certified enclosure of `T*f(x)`.
pub fn certified_sup(f: &SpectralField, x: &Point, tol: f64) -> Result<Enclosure> {
    x.check(f.model())?;
    let (levels, energies) = active_levels(f);
    let lv = f.table().levels();
    let mut amps = Vec::with_capacity(levels.len());
    for &l in &levels {
        let mut a = ZERO;
        for j in lv[l].start..lv[l].end {
            a += f.coeffs()[j] * eval_eigenfunction(f.model(), &f.table().modes()[j], x)?;
        }
        amps.push(a);
    }
    sup_trig_sum(&amps, &energies, tol)
}

/// Enclosures of `T*f` at every point of a grid.
#[derive(Debug, Clone)]
pub struct MaximalProfile {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub tol: f64,
}

impl MaximalProfile {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn enclosure(&self, i: usize) -> Enclosure {
        Enclosure { lo: self.lo[i], hi: self.hi[i] }
    }

    /// CSV with columns `point,lo,hi`; the point column joins coordinates
    /// with semicolons.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point,lo,hi")?;
        for (i, p) in self.points.iter().enumerate() {
            let c: Vec<String> = p.coords().iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{:e},{:e}", c.join(";"), self.lo[i], self.hi[i])?;
        }
        Ok(())
    }
}

/// `certified_sup` at every grid point, using batched sampling.
pub fn maximal_profile(f: &SpectralField, grid: &QuadratureGrid, tol: f64) -> Result<MaximalProfile> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let synth = GridSynth::new(f.table().clone(), grid)?;
    let np = grid.len();
    let (levels, energies) = active_levels(f);
    let (lo, hi) = if levels.len() <= 1 {
        let vals: Vec<f64> = synth.synthesize(f.coeffs()).iter().map(|v| v.norm()).collect();
        (vals.clone(), vals)
    } else if matches!(grid.layout(), GridLayout::Torus { .. }) && levels.len() > 48 {
        fft_route(f, &synth, &levels, &energies, tol)?
    } else {
        let amps = synth.level_amplitudes_all(f.coeffs(), &levels);
        gemm_route(&amps, np, &energies, tol)?
    };
    Ok(MaximalProfile { points: grid.points().to_vec(), weights: grid.weights().to_vec(), lo, hi, tol })
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Shared coarse times for a batch of points from typical bounds.
fn batch_times(all: &[Bounds], shifted: &[f64]) -> Vec<f64> {
    let width = 2.0 * shifted.iter().copied().fold(0.0, |a: f64, e| a.max(e.abs()));
    let mut rms: Vec<f64> = all.iter().map(|b| b.rms).collect();
    let mut k2: Vec<f64> = all.iter().map(|b| b.k2).collect();
    coarse_times(coarse_delta(width, median(&mut rms), median(&mut k2)))
}

fn gemm_route(amps: &[C64], np: usize, energies: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let nl = energies.len();
    let shifted = shifted_energies(energies);
    let all: Vec<Bounds> = (0..np).map(|p| bounds(&amps[p * nl..(p + 1) * nl], &shifted)).collect();
    let times = batch_times(&all, &shifted);
    let nt = times.len();
    let phases: Vec<C64> = times
        .iter()
        .flat_map(|t| shifted.iter().map(move |e| C64::from_polar(1.0, e * t)))
        .collect();
    let halving = Halving::new(&shifted, 1.0 / (nt - 1) as f64);
    let blocks: Vec<usize> = (0..np).step_by(GEMM_BLOCK).collect();
    let results: Vec<Result<Vec<Enclosure>>> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + GEMM_BLOCK).min(np);
            let nb = end - start;
            let mut u = vec![ZERO; nt * nb];
            // U (nt × nb) = P (nt × nl) · A_blockᵀ (nl × nb)
            unsafe {
                matrixmultiply::zgemm(
                    matrixmultiply::CGemmOption::Standard,
                    matrixmultiply::CGemmOption::Standard,
                    nt,
                    nl,
                    nb,
                    [1.0, 0.0],
                    phases.as_ptr() as *const [f64; 2],
                    nl as isize,
                    1,
                    amps[start * nl..].as_ptr() as *const [f64; 2],
                    1,
                    nl as isize,
                    [0.0, 0.0],
                    u.as_mut_ptr() as *mut [f64; 2],
                    nb as isize,
                    1,
                );
            }
            let mut out = Vec::with_capacity(nb);
            let mut vals = vec![0.0; nt];
            for q in 0..nb {
                let p = start + q;
                for (i, v) in vals.iter_mut().enumerate() {
                    *v = u[i * nb + q].norm();
                }
                let a = &amps[p * nl..(p + 1) * nl];
                out.push(point_enclosure(a, &shifted, &all[p], &times, &vals, tol, Anchors::Table(&phases), &halving)?);
            }
            Ok(out)
        })
        .collect();
    let mut lo = Vec::with_capacity(np);
    let mut hi = Vec::with_capacity(np);
    for r in results {
        for e in r? {
            lo.push(e.lo);
            hi.push(e.hi);
        }
    }
    Ok((lo, hi))
}

#[allow(clippy::too_many_arguments)]
fn point_enclosure(
    a: &[C64],
    shifted: &[f64],
    b: &Bounds,
    times: &[f64],
    vals: &[f64],
    tol: f64,
    anchors: Anchors<'_>,
    halving: &Halving,
) -> Result<Enclosure> {
    let nonzero = a.iter().filter(|z| z.norm_sqr() > 0.0).count();
    if nonzero <= 1 {
        let v = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(Enclosure::exact(v));
    }
    finish_point(a, shifted, b, times, vals, tol, anchors, halving)
}

/// Torus route: sample every point at once through the inverse FFT, keep
/// only cells that may hold the supremum, then refine those from per-point
/// level amplitudes.
fn fft_route(
    f: &SpectralField,
    synth: &GridSynth,
    levels: &[usize],
    energies: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let np = synth.npoints();
    let nl = levels.len();
    let shifted = shifted_energies(energies);
    let coeffs = f.coeffs();
    let chunk = 256;
    let all: Vec<Bounds> = (0..np)
        .into_par_iter()
        .chunks(chunk)
        .flat_map_iter(|pts| {
            let mut a = vec![ZERO; nl];
            pts.into_iter()
                .map(|p| {
                    synth.level_amplitudes_at(coeffs, levels, p, &mut a);
                    bounds(&a, &shifted)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let times = batch_times(&all, &shifted);

    let mut lo = vec![0.0f64; np];
    let mut settled = vec![0.0f64; np];
    let mut prev = vec![0.0f64; np];
    let mut cand: Vec<(u32, u32, f64, f64)> = Vec::new();
    let mut work = coeffs.to_vec();
    let mut vals = vec![ZERO; np];
    let mut scratch = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        crate::evolve::propagate_into(f, t, &mut work);
        synth.synthesize_into(&work, &mut vals, &mut scratch);
        let w = if i > 0 { t - times[i - 1] } else { 0.0 };
        for p in 0..np {
            let cur = vals[p].norm();
            if i > 0 {
                let bound = cell_bound(prev[p], cur, w, &all[p]);
                if bound > lo[p].max(cur) + tol {
                    cand.push((p as u32, (i - 1) as u32, prev[p], cur));
                } else {
                    settled[p] = settled[p].max(bound);
                }
            }
            lo[p] = lo[p].max(cur);
            prev[p] = cur;
        }
        if cand.len() > 1 << 22 {
            prune(&mut cand, &all, &times, &lo, &mut settled, tol);
        }
    }
    prune(&mut cand, &all, &times, &lo, &mut settled, tol);
    cand.sort_by_key(|c| (c.0, c.1));
    let nt = times.len();
    let table: Vec<C64> = if nt * nl <= MAX_ANCHOR_TABLE {
        times
            .par_iter()
            .flat_map_iter(|t| shifted.iter().map(move |e| C64::from_polar(1.0, e * t)))
            .collect()
    } else {
        Vec::new()
    };
    let anchors = if table.is_empty() { Anchors::Direct } else { Anchors::Table(&table) };
    let halving = Halving::new(&shifted, 1.0 / (nt - 1) as f64);

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut s = 0;
    while s < cand.len() {
        let mut e = s;
        while e < cand.len() && cand[e].0 == cand[s].0 {
            e += 1;
        }
        groups.push((s, e));
        s = e;
    }
    let refined: Vec<Result<(usize, f64, f64)>> = groups
        .par_iter()
        .map(|&(s, e)| {
            let p = cand[s].0 as usize;
            let mut a = vec![ZERO; nl];
            synth.level_amplitudes_at(coeffs, levels, p, &mut a);
            let b = &all[p];
            let mut plo = lo[p];
            let mut phi = settled[p];
            let mut evals = 0;
            let mut these: Vec<&(u32, u32, f64, f64)> = cand[s..e].iter().collect();
            these.sort_by(|x, y| y.2.max(y.3).total_cmp(&x.2.max(x.3)).then(x.1.cmp(&y.1)));
            for c in these {
                let i = c.1 as usize;
                let z = anchored(&a, &shifted, anchors, i, times[i]);
                phi = phi.max(refine_cell(z, c.2, c.3, &halving, b, &mut plo, tol, &mut evals));
            }
            let sl = slack(b, nl);
            let enc = Enclosure { lo: plo, hi: (phi.max(plo) + sl).min(b.m0 + sl) };
            if enc.width() > tol + sl {
                return Err(Error::SupUnresolved { best: enc, tol });
            }
            Ok((p, enc.lo, enc.hi))
        })
        .collect();
    let mut hi: Vec<f64> = (0..np)
        .map(|p| (settled[p].max(lo[p]) + slack(&all[p], nl)).min(all[p].m0 + slack(&all[p], nl)))
        .collect();
    for r in refined {
        let (p, l, h) = r?;
        lo[p] = l;
        hi[p] = h;
    }
    Ok((lo, hi))
}

fn prune(
    cand: &mut Vec<(u32, u32, f64, f64)>,
    all: &[Bounds],
    times: &[f64],
    lo: &[f64],
    settled: &mut [f64],
    tol: f64,
) {
    cand.retain(|&(p, i, ul, ur)| {
        let p = p as usize;
        let i = i as usize;
        let bound = cell_bound(ul, ur, times[i + 1] - times[i], &all[p]);
        if bound > lo[p] + tol {
            true
        } else {
            settled[p] = settled[p].max(bound);
            false
        }
    });
}

/// `(Σ w lo^p)^{1/p}` and `(Σ w hi^p)^{1/p}`.
pub fn maximal_lp_norm(profile: &MaximalProfile, p: f64) -> Result<Enclosure> {
    if p < 1.0 || !p.is_finite() {
        return Err(domain(format!("exponent must be in [1, ∞), got {p}")));
    }
    let norm = |v: &[f64]| {
        let t: Vec<f64> = v.iter().zip(&profile.weights).map(|(x, w)| w * pow_abs(*x, p)).collect();
        pairwise(&t).powf(1.0 / p)
    };
    Ok(Enclosure { lo: norm(&profile.lo), hi: norm(&profile.hi) })
}

fn trapezoid_lq(times: &[f64], v: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        acc += 0.5 * h * (v[i - 1].abs().powf(q) + v[i].abs().powf(q));
    }
    acc.powf(1.0 / q)
}

/// `|g(a)| + μ^{1/q−1}‖g'‖_{L^q[a,b]} + μ^{1/q}‖g‖_{L^q[a,b]}` from samples
/// (moduli) on increasing nodes `times`, trapezoid rule.
pub fn lee_rhs(times: &[f64], g: &[f64], dg: &[f64], mu: f64, q: f64) -> Result<f64> {
    if times.len() < 2 || g.len() != times.len() || dg.len() != times.len() {
        return Err(domain("sample arrays must share a grid of at least two nodes"));
    }
    if !(mu > 0.0) || q < 1.0 {
        return Err(domain(format!("need μ > 0 and q ≥ 1, got μ={mu}, q={q}")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("sample nodes must increase"));
    }
    Ok(g[0].abs() + mu.powf(1.0 / q - 1.0) * trapezoid_lq(times, dg, q) + mu.powf(1.0 / q) * trapezoid_lq(times, g, q))
}

/// Minimum of `lee_rhs` over a logarithmic μ scan on `[1e-3, 1e6]`.
pub fn lee_min_rhs(times: &[f64], g: &[f64], dg: &[f64], q: f64) -> Result<(f64, f64)> {
    let a = trapezoid_lq(times, dg, q);
    let b = trapezoid_lq(times, g, q);
    let mut best = (f64::INFINITY, 1.0);
    let _ = lee_rhs(times, g, dg, 1.0, q)?;
    for i in 0..=900 {
        let mu = 10f64.powf(-3.0 + i as f64 * 0.01);
        let v = g[0].abs() + mu.powf(1.0 / q - 1.0) * a + mu.powf(1.0 / q) * b;
        if v < best.0 {
            best = (v, mu);
        }
    }
    Ok(best)
}

fn c_alpha_term(k: f64, alpha: f64) -> f64 {
    (1.0 + k * (k + 1.0)).powf(-alpha)
}

/// `C_α = (Σ_{k≥0} (1+k(k+1))^{-α})^{1/2}` with a certified tail bound.
/// Returns `(C_α, bound on the error of C_α²)`.
pub fn c_alpha(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.5) {
        return Err(Error::DivergentConstant(format!(
            "Σ (1+k(k+1))^(-α) diverges for α = {alpha} ≤ 1/2"
        )));
    }
    let kcut = 2000usize;
    let head: Vec<f64> = (0..kcut).map(|k| c_alpha_term(k as f64, alpha)).collect();
    let head = pairwise(&head);
    let y = kcut as f64 + 0.5;
    let s = y * y + 0.75;
    // ∫_Y^∞ (y²+3/4)^{-α} dy by the binomial series in 3/(4y²)
    let mut integral = 0.0;
    let mut binom = 1.0;
    for n in 0..60 {
        let nf = n as f64;
        let term = binom * 0.75f64.powi(n) * y.powf(1.0 - 2.0 * alpha - 2.0 * nf) / (2.0 * alpha + 2.0 * nf - 1.0);
        integral += term;
        if term.abs() < 1e-30 * integral.abs() {
            break;
        }
        binom *= (-alpha - nf) / (nf + 1.0);
    }
    let g = s.powf(-alpha);
    let g1 = -2.0 * alpha * y * s.powf(-alpha - 1.0);
    let a1 = alpha * (alpha + 1.0);
    let g3 = 12.0 * a1 * y * s.powf(-alpha - 2.0) - 8.0 * a1 * (alpha + 2.0) * y.powi(3) * s.powf(-alpha - 3.0);
    let tail = integral + 0.5 * g - g1 / 12.0 + g3 / 720.0;
    let remainder = g3.abs() / 720.0 + 1e-16 * (head + tail);
    Ok(((head + tail).sqrt(), remainder))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStep {
    pub step: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl CascadeStep {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone)]
pub struct CascadeReport {
    pub alpha: f64,
    pub c_alpha: f64,
    pub steps: Vec<CascadeStep>,
    /// `‖T*f‖_{L²}` enclosure.
    pub maximal_l2: Enclosure,
    pub sobolev_norm: f64,
    /// Largest `hi(x) − Σ_k |P_k f(x)|` over the grid.
    pub pointwise_excess: f64,
}

impl CascadeReport {
    /// Every step holds within `tol`, and `‖T*f‖ ≤ C_α ‖f‖_{H^α}`.
    pub fn holds(&self, tol: f64) -> bool {
        self.steps.iter().all(|s| s.margin() >= -tol)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,lhs,rhs,margin")?;
        for s in &self.steps {
            writeln!(w, "{},{:e},{:e},{:e}", s.step, s.lhs, s.rhs, s.margin())?;
        }
        Ok(())
    }
}

/// Pointwise level-sum domination and the Cauchy–Schwarz chain on S².
pub fn sphere_triangle_bound(f: &SpectralField, alpha: f64, tol: f64) -> Result<CascadeReport> {
    if f.model() != ModelKind::Sphere2 {
        return Err(domain(format!("sphere cascade needs a sphere2 field, got {}", f.model())));
    }
    let (c, _) = c_alpha(alpha)?;
    let grid = QuadratureGrid::for_table(f.table())?;
    let synth = GridSynth::new(f.table().clone(), &grid)?;
    let profile = maximal_profile(f, &grid, tol)?;
    let (levels, _) = active_levels(f);
    let nl = levels.len();
    let amps = synth.level_amplitudes_all(f.coeffs(), &levels);
    let sums: Vec<f64> = (0..grid.len()).map(|p| amps[p * nl..(p + 1) * nl].iter().map(|a| a.norm()).sum()).collect();
    let excess = profile.hi.iter().zip(&sums).map(|(h, s)| h - s).fold(f64::NEG_INFINITY, f64::max);
    let sum_l2 = {
        let t: Vec<f64> = sums.iter().zip(grid.weights()).map(|(s, w)| w * s * s).collect();
        pairwise(&t).sqrt()
    };
    let lv = f.table().levels();
    let level_norms: Vec<f64> = levels
        .iter()
        .map(|&l| f.coeffs()[lv[l].start..lv[l].end].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let level_sum = pairwise(&level_norms);
    let hs = f.sobolev_norm(alpha);
    let tstar = maximal_lp_norm(&profile, 2.0)?;
    let steps = vec![
        CascadeStep { step: "pointwise".into(), lhs: excess, rhs: 0.0 },
        CascadeStep { step: "minkowski".into(), lhs: sum_l2, rhs: level_sum },
        CascadeStep { step: "cauchy_schwarz".into(), lhs: level_sum, rhs: c * hs },
        CascadeStep { step: "maximal_l2".into(), lhs: tstar.hi, rhs: c * hs },
    ];
    Ok(CascadeReport { alpha, c_alpha: c, steps, maximal_l2: tstar, sobolev_norm: hs, pointwise_excess: excess })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma52Report {
    pub lhs: Enclosure,
    pub rhs: f64,
    pub ratio: f64,
}

/// Maximal `L^q` norm of the block at scale h against
/// `h^{-2/q-β}‖block‖_{L²} + ‖block‖_{L^q}`; ratio uses the upper enclosure.
pub fn lemma52_check(f: &SpectralField, h: f64, q: f64, beta: f64, tol: f64) -> Result<Lemma52Report> {
    if q < 2.0 {
        return Err(domain(format!("exponent q must be at least 2, got {q}")));
    }
    let block = block_for_h(f, h)?;
    let grid = QuadratureGrid::for_lp(f.table(), q)?;
    let l2 = block.l2_norm();
    if l2 == 0.0 {
        return Err(Error::EmptyEnsemble("block vanishes at this scale".into()));
    }
    let scale = tol * l2;
    let profile = maximal_profile(&block, &grid, scale)?;
    let lhs = maximal_lp_norm(&profile, q)?;
    let lq = crate::fields::lebesgue_norm(&block, q, &grid)?;
    let rhs = h.powf(-2.0 / q - beta) * l2 + lq;
    Ok(Lemma52Report { lhs, rhs, ratio: lhs.hi / rhs })
}
