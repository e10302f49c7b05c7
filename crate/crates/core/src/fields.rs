//! Functions stored as coefficient vectors over a mode table.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, domain, Error, Result};
use crate::spectra::{
    enumerate_modes, eval_eigenfunction, ModeTable, ModelKind, Point, QuadratureGrid, Quantum,
};
use crate::synth::GridSynth;

/// A finite expansion `Σ_j f̂_j e_j` over the modes of a table.
#[derive(Debug, Clone)]
pub struct SpectralField {
    table: Arc<ModeTable>,
    coeffs: Vec<C64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.table, &other.table)
            || (self.table.model() == other.table.model() && self.table.len() == other.table.len()))
            && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn new(table: Arc<ModeTable>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(domain(format!(
                "{} coefficients for a table of {} modes",
                coeffs.len(),
                table.len()
            )));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(domain(format!("coefficient {j} is not finite")));
        }
        Ok(Self { table, coeffs })
    }

    pub fn zeros(table: Arc<ModeTable>) -> Self {
        let n = table.len();
        Self { table, coeffs: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn single_mode(table: Arc<ModeTable>, id: usize, coeff: C64) -> Result<Self> {
        if id >= table.len() {
            return Err(domain(format!("mode id {id} outside table of {}", table.len())));
        }
        let mut f = Self::zeros(table);
        f.coeffs[id] = coeff;
        Ok(f)
    }

    /// Same table, coefficients replaced. Length and finiteness are the
    /// caller's responsibility.
    pub(crate) fn with_coeffs(&self, coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), self.coeffs.len());
        Self { table: self.table.clone(), coeffs }
    }

    pub fn table(&self) -> &Arc<ModeTable> {
        &self.table
    }

    pub fn model(&self) -> ModelKind {
        self.table.model()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        if self.coeffs.len() != other.coeffs.len() || self.model() != other.model() {
            return Err(domain("fields live on different tables"));
        }
        Ok(self.with_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        sum_sq(self.coeffs.iter().map(|c| c.norm_sqr())).sqrt()
    }

    /// `(Σ_j (1+λ_j²)^α |f̂_j|²)^{1/2}`.
    pub fn sobolev_norm(&self, alpha: f64) -> f64 {
        sobolev_norm(self, alpha)
    }

    /// Direct summation `Σ_j f̂_j e_j(x)`.
    pub fn synthesize(&self, point: &Point) -> Result<C64> {
        synthesize(self, point)
    }

    /// Largest eigenvalue carrying a nonzero coefficient.
    pub fn top_eigenvalue(&self) -> f64 {
        self.table
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(m, _)| m.eigenvalue)
            .fold(0.0, f64::max)
    }

    /// Number of distinct eigenvalues carrying a nonzero coefficient.
    pub fn active_levels(&self) -> usize {
        self.table
            .levels()
            .iter()
            .filter(|l| self.coeffs[l.start..l.end].iter().any(|c| c.norm_sqr() > 0.0))
            .count()
    }

    /// CSV with `mode_id,re,im` rows after `#`-prefixed metadata lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# model={}", self.model())?;
        writeln!(w, "# cutoff={:e}", self.table.cutoff())?;
        writeln!(w, "# modes={}", self.table.len())?;
        writeln!(w, "# l2_norm={:e}", self.l2_norm())?;
        writeln!(w, "mode_id,re,im")?;
        for (j, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{j},{:e},{:e}", c.re, c.im)?;
        }
        Ok(())
    }

    /// Inverse of `write_csv`; rebuilds the mode table from the metadata.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut model = None;
        let mut cutoff = None;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k.trim() {
                        "model" => model = Some(v.trim().parse::<ModelKind>()?),
                        "cutoff" => {
                            cutoff = Some(v.trim().parse::<f64>().map_err(|e| {
                                config(format!("line {}: bad cutoff: {e}", lineno + 1))
                            })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "mode_id,re,im" {
                    return Err(config(format!("line {}: expected header mode_id,re,im", lineno + 1)));
                }
                header_seen = true;
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let bad = || config(format!("line {}: malformed row `{line}`", lineno + 1));
            if parts.len() != 3 {
                return Err(bad());
            }
            let id: usize = parts[0].trim().parse().map_err(|_| bad())?;
            let re: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let im: f64 = parts[2].trim().parse().map_err(|_| bad())?;
            rows.push((id, C64::new(re, im)));
        }
        let model = model.ok_or_else(|| config("field CSV lacks `# model=` metadata"))?;
        let cutoff = cutoff.ok_or_else(|| config("field CSV lacks `# cutoff=` metadata"))?;
        let table = Arc::new(enumerate_modes(model, cutoff)?);
        let mut coeffs = vec![C64::new(0.0, 0.0); table.len()];
        for (id, c) in rows {
            if id >= coeffs.len() {
                return Err(config(format!("mode id {id} outside table of {}", coeffs.len())));
            }
            coeffs[id] = c;
        }
        SpectralField::new(table, coeffs)
    }
}

/// Pairwise summation keeps long norm sums reproducible and accurate.
pub(crate) fn sum_sq<I: Iterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.collect();
    pairwise(&v)
}

pub(crate) fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

pub fn sobolev_norm(f: &SpectralField, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return f.l2_norm();
    }
    sum_sq(
        f.table
            .modes()
            .iter()
            .zip(&f.coeffs)
            .map(|(m, c)| (1.0 + m.eigenvalue).powf(alpha) * c.norm_sqr()),
    )
    .sqrt()
}

pub fn synthesize(f: &SpectralField, point: &Point) -> Result<C64> {
    point.check(f.model())?;
    let mut acc = C64::new(0.0, 0.0);
    for (m, c) in f.table.modes().iter().zip(&f.coeffs) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        acc += c * eval_eigenfunction(f.model(), m, point)?;
    }
    Ok(acc)
}

/// Gaussian field with `f̂_j ∝ g_j (1+λ_j²)^{-α/2}`, unit in `H^α`.
pub fn random_field(table: &Arc<ModeTable>, alpha: f64, seed: u64) -> SpectralField {
    random_field_stream(table, alpha, seed, 0)
}

/// As `random_field`, drawing from the independent stream `stream` of `seed`.
/// Trial `i` of an ensemble uses stream `i`.
pub fn random_field_stream(table: &Arc<ModeTable>, alpha: f64, seed: u64, stream: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs: Vec<C64> = table
        .modes()
        .iter()
        .map(|m| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re * s, im * s) * (1.0 + m.eigenvalue).powf(-alpha / 2.0)
        })
        .collect();
    let f = SpectralField { table: table.clone(), coeffs };
    let n = f.sobolev_norm(alpha);
    f.scaled(C64::new(1.0 / n, 0.0))
}

/// `(Σ_x w |u(x)|^p)^{1/p}` over a grid admissible for the field.
pub fn lebesgue_norm(f: &SpectralField, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    if p < 1.0 || !p.is_finite() {
        return Err(domain(format!("Lebesgue exponent must be in [1, ∞), got {p}")));
    }
    grid.check_admissible(f.table(), p)?;
    let synth = GridSynth::new(f.table().clone(), grid)?;
    let vals = synth.synthesize(f.coeffs());
    Ok(weighted_lp(&vals, grid.weights(), p))
}

pub(crate) fn weighted_lp(vals: &[C64], weights: &[f64], p: f64) -> f64 {
    let terms: Vec<f64> = vals.iter().zip(weights).map(|(v, w)| w * pow_abs(v.norm(), p)).collect();
    pairwise(&terms).powf(1.0 / p)
}

#[inline]
pub(crate) fn pow_abs(a: f64, p: f64) -> f64 {
    if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p == 6.0 {
        let s = a * a;
        s * s * s
    } else {
        a.powf(p)
    }
}

/// Probing ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// Gaussian fields normalized in `H^α`.
    SobolevEnsemble { alpha: f64, seed: u64, trials: usize },
    /// One table mode with unit coefficient.
    SingleMode(usize),
    /// Equal energy on every mode at level `k`: sphere degree on S², the
    /// k-th distinct eigenvalue elsewhere.
    LevelBeam(usize),
    /// `(Y_{k,k} + i Y_{k,-k})/√2` on S²; the lattice mode `(k, 0, ..)` on tori;
    /// degree k on zonal S³.
    HighestWeightBeam(usize),
    /// Real Gaussian profile in λ around `center` with width `width`.
    WavePacket { center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataFamily {
    pub kind: FamilyKind,
    pub cutoff: f64,
}

impl DataFamily {
    pub fn new(kind: FamilyKind, cutoff: f64) -> Self {
        Self { kind, cutoff }
    }

    /// Number of members (1 for the structured beams).
    pub fn len(&self) -> usize {
        match self.kind {
            FamilyKind::SobolevEnsemble { trials, .. } => trials,
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn table(&self, model: ModelKind) -> Result<Arc<ModeTable>> {
        Ok(Arc::new(enumerate_modes(model, self.cutoff)?))
    }

    /// Member `i`, unit in the family's declared norm.
    pub fn member(&self, table: &Arc<ModeTable>, i: usize) -> Result<SpectralField> {
        let zero = C64::new(0.0, 0.0);
        let mut coeffs = vec![zero; table.len()];
        match self.kind {
            FamilyKind::SobolevEnsemble { alpha, seed, trials } => {
                if i >= trials {
                    return Err(domain(format!("member {i} of a {trials}-trial ensemble")));
                }
                return Ok(random_field_stream(table, alpha, seed, i as u64));
            }
            FamilyKind::SingleMode(id) => {
                return SpectralField::single_mode(table.clone(), id, C64::new(1.0, 0.0));
            }
            FamilyKind::LevelBeam(k) => {
                let level = match table.model() {
                    ModelKind::Sphere2 | ModelKind::SphereZonal3 => {
                        let target = crate::spectra::sphere_eigenvalue(
                            k as u64,
                            if table.model() == ModelKind::Sphere2 { 2 } else { 3 },
                        );
                        table.levels().iter().find(|l| l.eigenvalue == target)
                    }
                    _ => table.levels().get(k),
                }
                .ok_or_else(|| domain(format!("level {k} not in table")))?;
                let a = 1.0 / (level.len() as f64).sqrt();
                for c in &mut coeffs[level.start..level.end] {
                    *c = C64::new(a, 0.0);
                }
            }
            FamilyKind::HighestWeightBeam(k) => {
                let ki = k as i32;
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let picks: Vec<(Quantum, C64)> = match table.model() {
                    ModelKind::Sphere2 if k > 0 => vec![
                        (Quantum::Sphere { k: k as u32, l: ki }, C64::new(s, 0.0)),
                        (Quantum::Sphere { k: k as u32, l: -ki }, C64::new(0.0, s)),
                    ],
                    ModelKind::Sphere2 => vec![(Quantum::Sphere { k: 0, l: 0 }, C64::new(1.0, 0.0))],
                    ModelKind::Circle => vec![(Quantum::Circle(ki), C64::new(1.0, 0.0))],
                    ModelKind::Torus2 => vec![(Quantum::Torus2([ki, 0]), C64::new(1.0, 0.0))],
                    ModelKind::Torus3 => vec![(Quantum::Torus3([ki, 0, 0]), C64::new(1.0, 0.0))],
                    ModelKind::SphereZonal3 => vec![(Quantum::Zonal(k as u32), C64::new(1.0, 0.0))],
                    ModelKind::HyperbolicRadial3 => return Err(Error::NonCompact(table.model().name())),
                };
                for (q, c) in picks {
                    let id = table
                        .find(q)
                        .ok_or_else(|| domain(format!("mode {q:?} above cutoff {}", table.cutoff())))?;
                    coeffs[id] = c;
                }
            }
            FamilyKind::WavePacket { center, width } => {
                if width <= 0.0 {
                    return Err(domain("wave packet width must be positive"));
                }
                for (c, m) in coeffs.iter_mut().zip(table.modes()) {
                    let d = (m.eigenvalue.sqrt() - center) / width;
                    *c = C64::new((-0.5 * d * d).exp(), 0.0);
                }
            }
        }
        let f = SpectralField::new(table.clone(), coeffs)?;
        let n = f.l2_norm();
        if n == 0.0 {
            return Err(Error::EmptyEnsemble("family member vanishes on this table".into()));
        }
        Ok(f.scaled(C64::new(1.0 / n, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn table(model: ModelKind, cutoff: f64) -> Arc<ModeTable> {
        Arc::new(enumerate_modes(model, cutoff).unwrap())
    }

    #[test]
    fn sobolev_examples() {
        let t = table(ModelKind::Sphere2, 2f64.sqrt());
        let f = SpectralField::single_mode(t, 1, C64::new(1.0, 0.0)).unwrap();
        assert!((f.sobolev_norm(1.0) - 3f64.sqrt()).abs() < 1e-15);

        let t = table(ModelKind::Circle, 2.0);
        let mut c = vec![C64::new(0.0, 0.0); t.len()];
        c[0] = C64::new(1.0, 0.0);
        c[3] = C64::new(1.0, 0.0);
        let f = SpectralField::new(t, c).unwrap();
        assert!((f.sobolev_norm(0.5) - (1.0 + 5f64.sqrt()).sqrt()).abs() < 1e-15);
        assert_eq!(f.sobolev_norm(0.0), f.l2_norm());
    }

    #[test]
    fn synthesize_examples() {
        let t = table(ModelKind::Circle, 1.0);
        let z = SpectralField::zeros(t.clone());
        assert_eq!(z.synthesize(&Point::circle(0.7)).unwrap(), C64::new(0.0, 0.0));
        let id = t.find(Quantum::Circle(1)).unwrap();
        let f = SpectralField::single_mode(t, id, C64::new((2.0 * PI).sqrt(), 0.0)).unwrap();
        let v = f.synthesize(&Point::circle(PI / 2.0)).unwrap();
        assert!((v - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn random_fields_are_unit_and_deterministic() {
        let t = table(ModelKind::Torus2, 10.0);
        let a = random_field(&t, 0.7, 11);
        let b = random_field(&t, 0.7, 11);
        assert_eq!(a.coeffs(), b.coeffs());
        assert!((a.sobolev_norm(0.7) - 1.0).abs() < 1e-12);
        let c = random_field_stream(&t, 0.7, 11, 1);
        assert_ne!(a.coeffs(), c.coeffs());
    }

    #[test]
    fn flat_ensemble_has_flat_spectrum() {
        let t = table(ModelKind::Circle, 32.0);
        let mut mean = vec![0.0; t.len()];
        for i in 0..200 {
            let f = random_field_stream(&t, 0.0, 5, i);
            for (m, c) in mean.iter_mut().zip(f.coeffs()) {
                *m += c.norm() / 200.0;
            }
        }
        let avg = mean.iter().sum::<f64>() / mean.len() as f64;
        for m in &mean {
            assert!((m / avg - 1.0).abs() < 0.2, "{m} vs {avg}");
        }
    }

    #[test]
    fn lebesgue_examples() {
        let t = table(ModelKind::Circle, 3.0);
        let id = t.find(Quantum::Circle(3)).unwrap();
        let f = SpectralField::single_mode(t.clone(), id, C64::new(1.0, 0.0)).unwrap();
        let g = QuadratureGrid::for_lp(&t, 4.0).unwrap();
        let v = lebesgue_norm(&f, 4.0, &g).unwrap();
        assert!((v - (2.0 * PI).powf(-0.25)).abs() < 1e-14);

        let c = C64::new(0.3, -0.4);
        let k = SpectralField::single_mode(t.clone(), 0, c * (2.0 * PI).sqrt()).unwrap();
        let v = lebesgue_norm(&k, 3.0, &QuadratureGrid::for_lp(&t, 3.0).unwrap()).unwrap();
        assert!((v - 0.5 * (2.0 * PI).powf(1.0 / 3.0)).abs() < 1e-13);

        let coarse = QuadratureGrid::torus(ModelKind::Circle, 5).unwrap();
        assert!(matches!(lebesgue_norm(&f, 4.0, &coarse), Err(Error::Config(_))));
    }

    #[test]
    fn sphere_level_beam_l4_matches_dense_grid() {
        let t = table(ModelKind::Sphere2, crate::spectra::sphere2_degree_cutoff(8));
        let fam = DataFamily::new(FamilyKind::LevelBeam(8), t.cutoff());
        let f = fam.member(&t, 0).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-14);
        let v = lebesgue_norm(&f, 4.0, &QuadratureGrid::for_lp(&t, 4.0).unwrap()).unwrap();
        // midpoint-in-θ oracle on a much finer product grid
        let (nt, np) = (400, 400);
        let mut acc = 0.0;
        for i in 0..nt {
            let th = (i as f64 + 0.5) * PI / nt as f64;
            for j in 0..np {
                let ph = j as f64 * 2.0 * PI / np as f64;
                let u = f.synthesize(&Point::sphere(th, ph)).unwrap();
                acc += u.norm().powi(4) * th.sin() * (PI / nt as f64) * (2.0 * PI / np as f64);
            }
        }
        assert!((v - acc.powf(0.25)).abs() < 1e-6, "{v} vs {}", acc.powf(0.25));
    }

    #[test]
    fn csv_round_trip() {
        let t = table(ModelKind::Torus2, 3.0);
        let f = random_field(&t, 0.5, 3);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = SpectralField::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(f.coeffs(), g.coeffs());
        let bad = "# model=torus2\n# cutoff=3\nmode_id,re,im\n0,abc,0\n";
        assert!(matches!(SpectralField::read_csv(std::io::Cursor::new(bad)), Err(Error::Config(_))));
    }

    #[test]
    fn highest_weight_beam_is_unit() {
        let t = table(ModelKind::Sphere2, crate::spectra::sphere2_degree_cutoff(16));
        let f = DataFamily::new(FamilyKind::HighestWeightBeam(16), t.cutoff()).member(&t, 0).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-15);
        assert_eq!(f.active_levels(), 1);
        // modulus is φ-independent
        let a = f.synthesize(&Point::sphere(1.0, 0.2)).unwrap().norm();
        let b = f.synthesize(&Point::sphere(1.0, 2.9)).unwrap().norm();
        assert!((a - b).abs() < 1e-13);
    }
}
