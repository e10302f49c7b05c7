//! Fast evaluation of spectral fields on quadrature grids.
//!
//! Tori go through an inverse FFT, S² through per-row Legendre sums followed
//! by a longitude FFT, and zonal S³ through a dense matrix. All routes give
//! the same values as direct summation up to rounding.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{config, Result};
use crate::spectra::legendre::{fill_table, tri, tri_len};
use crate::spectra::{zonal_fn, GridLayout, ModeTable, ModelKind, QuadratureGrid, Quantum};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

enum Route {
    Torus {
        dim: usize,
        n: usize,
        bins: Vec<usize>,
        residues: Vec<[usize; 3]>,
        roots: Vec<C64>,
        scale: f64,
        fft: Arc<dyn Fft<f64>>,
    },
    Sphere {
        ntheta: usize,
        nphi: usize,
        kmax: usize,
        legendre: Vec<f64>,
        quanta: Vec<(usize, i32)>,
        fft: Arc<dyn Fft<f64>>,
    },
    Zonal {
        n: usize,
        matrix: Vec<f64>,
    },
}

/// Precomputed synthesis operator from a mode table to a grid.
pub struct GridSynth {
    table: Arc<ModeTable>,
    npoints: usize,
    route: Route,
}

impl GridSynth {
    pub fn new(table: Arc<ModeTable>, grid: &QuadratureGrid) -> Result<Self> {
        if table.model() != grid.model() {
            return Err(config(format!("grid for {} used with {} table", grid.model(), table.model())));
        }
        let npoints = grid.len();
        let route = match grid.layout() {
            GridLayout::Torus { dim, n } => {
                let (dim, n) = (*dim, *n);
                let residues: Vec<[usize; 3]> = table
                    .modes()
                    .iter()
                    .map(|m| {
                        let q: Vec<i64> = m.quantum.to_vec();
                        let mut r = [0usize; 3];
                        for (a, v) in q.iter().enumerate() {
                            r[a] = v.rem_euclid(n as i64) as usize;
                        }
                        r
                    })
                    .collect();
                let bins = residues
                    .iter()
                    .map(|r| r[..dim].iter().fold(0usize, |acc, &v| acc * n + v))
                    .collect();
                let roots = (0..n)
                    .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
                    .collect();
                let fft = FftPlanner::new().plan_fft_inverse(n);
                let scale = (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0);
                Route::Torus { dim, n, bins, residues, roots, scale, fft }
            }
            GridLayout::Sphere { cos_theta, nphi } => {
                let kmax = table.max_index();
                let len = tri_len(kmax);
                let mut legendre = vec![0.0; cos_theta.len() * len];
                for (row, &x) in cos_theta.iter().enumerate() {
                    fill_table(kmax, x, &mut legendre[row * len..(row + 1) * len]);
                }
                let quanta = table
                    .modes()
                    .iter()
                    .map(|m| match m.quantum {
                        Quantum::Sphere { k, l } => (k as usize, l),
                        _ => unreachable!(),
                    })
                    .collect();
                let fft = FftPlanner::new().plan_fft_inverse(*nphi);
                Route::Sphere { ntheta: cos_theta.len(), nphi: *nphi, kmax, legendre, quanta, fft }
            }
            GridLayout::Zonal { n } => {
                let modes = table.len();
                let mut matrix = vec![0.0; n * modes];
                for (i, p) in grid.points().iter().enumerate() {
                    for (j, m) in table.modes().iter().enumerate() {
                        let k = match m.quantum {
                            Quantum::Zonal(k) => k as usize,
                            _ => unreachable!(),
                        };
                        matrix[i * modes + j] = zonal_fn(k, p.coords()[0]);
                    }
                }
                Route::Zonal { n: *n, matrix }
            }
        };
        Ok(Self { table, npoints, route })
    }

    pub fn table(&self) -> &Arc<ModeTable> {
        &self.table
    }

    pub fn npoints(&self) -> usize {
        self.npoints
    }

    pub fn model(&self) -> ModelKind {
        self.table.model()
    }

    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.npoints];
        let mut scratch = Vec::new();
        self.synthesize_into(coeffs, &mut out, &mut scratch);
        out
    }

    /// Grid values of `Σ_j coeffs_j e_j` written into `out`.
    pub fn synthesize_into(&self, coeffs: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        debug_assert_eq!(coeffs.len(), self.table.len());
        debug_assert_eq!(out.len(), self.npoints);
        match &self.route {
            Route::Torus { dim, n, bins, scale, fft, .. } => {
                out.fill(ZERO);
                for (b, c) in bins.iter().zip(coeffs) {
                    out[*b] += c * *scale;
                }
                fft_nd(out, *n, *dim, fft.as_ref(), scratch);
            }
            Route::Sphere { ntheta, nphi, kmax, legendre, quanta, fft } => {
                let len = tri_len(*kmax);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let mut a = vec![ZERO; kmax + 1];
                let mut b = vec![ZERO; kmax + 1];
                ensure_scratch(scratch, fft.get_inplace_scratch_len());
                for row in 0..*ntheta {
                    let tab = &legendre[row * len..(row + 1) * len];
                    a.fill(ZERO);
                    b.fill(ZERO);
                    for (&(k, l), c) in quanta.iter().zip(coeffs) {
                        let m = l.unsigned_abs() as usize;
                        let p = tab[tri(k, m)];
                        if l >= 0 {
                            a[m] += c * p;
                        } else {
                            b[m] += c * p;
                        }
                    }
                    let g = &mut out[row * nphi..(row + 1) * nphi];
                    g.fill(ZERO);
                    g[0] += a[0];
                    for m in 1..=*kmax {
                        let plus = (a[m] - C64::new(0.0, 1.0) * b[m]) * s;
                        let minus = (a[m] + C64::new(0.0, 1.0) * b[m]) * s;
                        g[m % nphi] += plus;
                        g[(nphi - m % nphi) % nphi] += minus;
                    }
                    fft.process_with_scratch(g, scratch);
                }
            }
            Route::Zonal { n, matrix } => {
                let modes = coeffs.len();
                for i in 0..*n {
                    let row = &matrix[i * modes..(i + 1) * modes];
                    out[i] = row.iter().zip(coeffs).map(|(w, c)| c * *w).sum();
                }
            }
        }
    }

    /// Per-level amplitudes `a_ℓ(x) = Σ_{j ∈ ℓ} coeffs_j e_j(x)` at grid point
    /// `point` for the listed levels.
    pub fn level_amplitudes_at(&self, coeffs: &[C64], levels: &[usize], point: usize, out: &mut [C64]) {
        debug_assert_eq!(out.len(), levels.len());
        let lv = self.table.levels();
        match &self.route {
            Route::Torus { dim, n, residues, roots, scale, .. } => {
                let mut idx = [0usize; 3];
                let mut rest = point;
                for a in (0..*dim).rev() {
                    idx[a] = rest % n;
                    rest /= n;
                }
                for (o, &l) in out.iter_mut().zip(levels) {
                    let mut acc = ZERO;
                    for j in lv[l].start..lv[l].end {
                        let r = &residues[j];
                        let mut ph = 0usize;
                        for a in 0..*dim {
                            ph += r[a] * idx[a];
                        }
                        acc += coeffs[j] * roots[ph % n];
                    }
                    *o = acc * *scale;
                }
            }
            Route::Sphere { nphi, kmax, legendre, quanta, .. } => {
                let len = tri_len(*kmax);
                let row = point / nphi;
                let col = point % nphi;
                let phi = 2.0 * std::f64::consts::PI * col as f64 / *nphi as f64;
                let tab = &legendre[row * len..(row + 1) * len];
                let r2 = std::f64::consts::SQRT_2;
                for (o, &l) in out.iter_mut().zip(levels) {
                    let mut acc = ZERO;
                    for j in lv[l].start..lv[l].end {
                        let (k, ll) = quanta[j];
                        let m = ll.unsigned_abs() as usize;
                        let p = tab[tri(k, m)];
                        let y = match ll.cmp(&0) {
                            std::cmp::Ordering::Equal => p,
                            std::cmp::Ordering::Greater => r2 * p * (m as f64 * phi).cos(),
                            std::cmp::Ordering::Less => r2 * p * (m as f64 * phi).sin(),
                        };
                        acc += coeffs[j] * y;
                    }
                    *o = acc;
                }
            }
            Route::Zonal { matrix, .. } => {
                let modes = coeffs.len();
                for (o, &l) in out.iter_mut().zip(levels) {
                    let j = lv[l].start;
                    *o = coeffs[j] * matrix[point * modes + j];
                }
            }
        }
    }

    /// Level amplitudes at every grid point, point-major: entry
    /// `point * levels.len() + a` belongs to `levels[a]`.
    pub fn level_amplitudes_all(&self, coeffs: &[C64], levels: &[usize]) -> Vec<C64> {
        let na = levels.len();
        let mut out = vec![ZERO; self.npoints * na];
        match &self.route {
            Route::Sphere { ntheta, nphi, kmax, legendre, quanta, fft } => {
                let len = tri_len(*kmax);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let lv = self.table.levels();
                let mut g = vec![ZERO; *nphi];
                let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
                for row in 0..*ntheta {
                    let tab = &legendre[row * len..(row + 1) * len];
                    for (a, &l) in levels.iter().enumerate() {
                        g.fill(ZERO);
                        for j in lv[l].start..lv[l].end {
                            let (k, ll) = quanta[j];
                            let m = ll.unsigned_abs() as usize;
                            let p = coeffs[j] * tab[tri(k, m)];
                            match ll.cmp(&0) {
                                std::cmp::Ordering::Equal => g[0] += p,
                                std::cmp::Ordering::Greater => {
                                    g[m % nphi] += p * s;
                                    g[(nphi - m % nphi) % nphi] += p * s;
                                }
                                std::cmp::Ordering::Less => {
                                    let q = p * C64::new(0.0, s);
                                    g[m % nphi] -= q;
                                    g[(nphi - m % nphi) % nphi] += q;
                                }
                            }
                        }
                        fft.process_with_scratch(&mut g, &mut scratch);
                        for (col, v) in g.iter().enumerate() {
                            out[(row * nphi + col) * na + a] = *v;
                        }
                    }
                }
            }
            _ => {
                for p in 0..self.npoints {
                    self.level_amplitudes_at(coeffs, levels, p, &mut out[p * na..(p + 1) * na]);
                }
            }
        }
        out
    }
}

fn ensure_scratch(scratch: &mut Vec<C64>, len: usize) {
    if scratch.len() < len {
        scratch.resize(len, ZERO);
    }
}

/// In-place n-dimensional FFT on a row-major cube of side `n`.
fn fft_nd(buf: &mut [C64], n: usize, dim: usize, fft: &dyn Fft<f64>, scratch: &mut Vec<C64>) {
    let need = fft.get_inplace_scratch_len();
    ensure_scratch(scratch, need + n);
    let (work, line) = scratch.split_at_mut(need);
    let line = &mut line[..n];
    fft.process_with_scratch(buf, work);
    let total = buf.len();
    for axis in (0..dim - 1).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = buf[base + i * stride];
                }
                fft.process_with_scratch(line, work);
                for (i, v) in line.iter().enumerate() {
                    buf[base + i * stride] = *v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_field;
    use crate::spectra::{enumerate_modes, sphere2_degree_cutoff};

    fn check(model: ModelKind, cutoff: f64, grid: QuadratureGrid) {
        let t = Arc::new(enumerate_modes(model, cutoff).unwrap());
        let f = random_field(&t, 0.3, 9);
        let s = GridSynth::new(t.clone(), &grid).unwrap();
        let vals = s.synthesize(f.coeffs());
        let all: Vec<usize> = (0..t.levels().len()).collect();
        let amps = s.level_amplitudes_all(f.coeffs(), &all);
        let mut one = vec![ZERO; all.len()];
        for (i, p) in grid.points().iter().enumerate() {
            let direct = f.synthesize(p).unwrap();
            assert!((vals[i] - direct).norm() < 1e-12, "{model} point {i}");
            let sum: C64 = amps[i * all.len()..(i + 1) * all.len()].iter().sum();
            assert!((sum - direct).norm() < 1e-12, "{model} levels at {i}");
            s.level_amplitudes_at(f.coeffs(), &all, i, &mut one);
            for (a, b) in one.iter().zip(&amps[i * all.len()..]) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fast_routes_match_direct_sums() {
        check(ModelKind::Circle, 7.0, QuadratureGrid::torus(ModelKind::Circle, 10).unwrap());
        check(ModelKind::Torus2, 4.5, QuadratureGrid::torus(ModelKind::Torus2, 12).unwrap());
        check(ModelKind::Torus3, 2.5, QuadratureGrid::torus(ModelKind::Torus3, 6).unwrap());
        check(ModelKind::Sphere2, sphere2_degree_cutoff(9), QuadratureGrid::sphere(11, 15).unwrap());
        check(ModelKind::Sphere2, sphere2_degree_cutoff(6), QuadratureGrid::sphere(4, 5).unwrap());
        check(ModelKind::SphereZonal3, 9.0, QuadratureGrid::zonal(13).unwrap());
    }

    #[test]
    fn torus_grid_aliasing_is_still_exact_pointwise() {
        // fewer points than modes per axis: bins wrap, values stay exact
        check(ModelKind::Circle, 9.0, QuadratureGrid::torus(ModelKind::Circle, 4).unwrap());
    }
}
