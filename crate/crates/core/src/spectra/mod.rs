//! Model geometries, their spectra, and pointwise eigenfunctions.
//!
//! Every compact model here has integer eigenvalues: `m²` on the circle,
//! `|m|²` on the flat tori, `k(k+1)` on the round two-sphere and `k(k+2)` for
//! zonal functions on the three-sphere. Mode tables are sorted by eigenvalue
//! with ties broken lexicographically on the quantum numbers, so mode ids are
//! reproducible.

mod grid;
pub mod legendre;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{domain, Error, Result};

pub use grid::{smooth_size, GridLayout, QuadratureGrid};

/// Largest table `enumerate_modes` will build.
pub const MAX_TABLE_MODES: usize = 1 << 22;
/// Degree cap for the two-sphere.
pub const SPHERE2_MAX_DEGREE: usize = 128;
/// Degree cap for zonal three-sphere tables.
pub const ZONAL_MAX_DEGREE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// Circle of length 2π (the one-torus).
    Circle,
    /// Flat square torus `(ℝ/2πℤ)²`.
    Torus2,
    /// Flat cubic torus `(ℝ/2πℤ)³`.
    Torus3,
    /// Unit round two-sphere.
    Sphere2,
    /// Zonal functions of the geodesic angle on the unit three-sphere.
    SphereZonal3,
    /// Radial functions on hyperbolic three-space of curvature −1.
    HyperbolicRadial3,
}

impl ModelKind {
    pub const COMPACT: [ModelKind; 5] = [
        ModelKind::Circle,
        ModelKind::Torus2,
        ModelKind::Torus3,
        ModelKind::Sphere2,
        ModelKind::SphereZonal3,
    ];

    pub fn dim(self) -> usize {
        match self {
            ModelKind::Circle => 1,
            ModelKind::Torus2 | ModelKind::Sphere2 => 2,
            ModelKind::Torus3 | ModelKind::SphereZonal3 | ModelKind::HyperbolicRadial3 => 3,
        }
    }

    /// Dimension of the flat torus, if this is one.
    pub fn torus_dim(self) -> Option<usize> {
        match self {
            ModelKind::Circle => Some(1),
            ModelKind::Torus2 => Some(2),
            ModelKind::Torus3 => Some(3),
            _ => None,
        }
    }

    pub fn is_compact(self) -> bool {
        self != ModelKind::HyperbolicRadial3
    }

    /// Riemannian volume (for the zonal model, the volume of S³).
    pub fn measure(self) -> Option<f64> {
        match self {
            ModelKind::Circle => Some(2.0 * PI),
            ModelKind::Torus2 => Some((2.0 * PI).powi(2)),
            ModelKind::Torus3 => Some((2.0 * PI).powi(3)),
            ModelKind::Sphere2 => Some(4.0 * PI),
            ModelKind::SphereZonal3 => Some(2.0 * PI * PI),
            ModelKind::HyperbolicRadial3 => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Circle => "circle",
            ModelKind::Torus2 => "torus2",
            ModelKind::Torus3 => "torus3",
            ModelKind::Sphere2 => "sphere2",
            ModelKind::SphereZonal3 => "sphere3_zonal",
            ModelKind::HyperbolicRadial3 => "hyperbolic3_radial",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "circle" | "torus1" | "t1" => ModelKind::Circle,
            "torus2" | "t2" => ModelKind::Torus2,
            "torus3" | "t3" => ModelKind::Torus3,
            "sphere2" | "s2" => ModelKind::Sphere2,
            "sphere3_zonal" | "sphere_zonal3" | "s3" => ModelKind::SphereZonal3,
            "hyperbolic3_radial" | "hyperbolic" | "h3" => ModelKind::HyperbolicRadial3,
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        })
    }
}

impl<'de> serde::Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e: Error| serde::de::Error::custom(e.to_string()))
    }
}

/// Model-specific quantum numbers. The derived ordering is the tie-break
/// order among equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantum {
    Circle(i32),
    Torus2([i32; 2]),
    Torus3([i32; 3]),
    /// Degree `k` and real-basis order `l ∈ [-k, k]`.
    Sphere { k: u32, l: i32 },
    Zonal(u32),
}

impl Quantum {
    pub fn to_vec(self) -> Vec<i64> {
        match self {
            Quantum::Circle(m) => vec![m as i64],
            Quantum::Torus2(m) => m.iter().map(|&v| v as i64).collect(),
            Quantum::Torus3(m) => m.iter().map(|&v| v as i64).collect(),
            Quantum::Sphere { k, l } => vec![k as i64, l as i64],
            Quantum::Zonal(k) => vec![k as i64],
        }
    }

    /// Closed-form eigenvalue of the mode.
    pub fn eigenvalue(self) -> u64 {
        match self {
            Quantum::Circle(m) => (m as i64 * m as i64) as u64,
            Quantum::Torus2(m) => m.iter().map(|&v| (v as i64 * v as i64) as u64).sum(),
            Quantum::Torus3(m) => m.iter().map(|&v| (v as i64 * v as i64) as u64).sum(),
            Quantum::Sphere { k, .. } => sphere_eigenvalue_int(k as u64, 2),
            Quantum::Zonal(k) => sphere_eigenvalue_int(k as u64, 3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub id: usize,
    /// The eigenvalue λ_j² (nonnegative, integer-valued on compact models).
    pub eigenvalue: f64,
    pub quantum: Quantum,
    /// Index of the distinct eigenvalue this mode belongs to.
    pub level: usize,
    /// Dimension of the full eigenspace. Equals the number of table modes at
    /// this level except for the zonal model, which keeps one mode per level.
    pub multiplicity: u64,
}

/// A run of modes sharing one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub eigenvalue: f64,
    pub start: usize,
    pub end: usize,
    pub multiplicity: u64,
}

impl Level {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone)]
pub struct ModeTable {
    model: ModelKind,
    modes: Vec<Mode>,
    levels: Vec<Level>,
    cutoff: f64,
}

impl ModeTable {
    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Λ_max: the largest admitted λ.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest |quantum number| per axis for tori, largest degree on spheres.
    pub fn max_index(&self) -> usize {
        self.modes
            .iter()
            .map(|m| match m.quantum {
                Quantum::Circle(v) => v.unsigned_abs() as usize,
                Quantum::Torus2(v) => v.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0),
                Quantum::Torus3(v) => v.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0),
                Quantum::Sphere { k, .. } | Quantum::Zonal(k) => k as usize,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn find(&self, quantum: Quantum) -> Option<usize> {
        self.modes.iter().position(|m| m.quantum == quantum)
    }

    /// CSV dump: `id,eigenvalue,quantum,level,multiplicity`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,eigenvalue,quantum,level,multiplicity")?;
        for m in &self.modes {
            let q: Vec<String> = m.quantum.to_vec().iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{},{},{},{}", m.id, m.eigenvalue, q.join(";"), m.level, m.multiplicity)?;
        }
        Ok(())
    }
}

/// The cutoff Λ that admits exactly the sphere degrees `0..=k` (n = 2).
pub fn sphere2_degree_cutoff(k: usize) -> f64 {
    ((k * (k + 1)) as f64).sqrt()
}

fn admits(eigenvalue: u64, lam2: f64) -> bool {
    (eigenvalue as f64) <= lam2 * (1.0 + 1e-12) + 1e-12
}

/// Every mode with λ_j ≤ `cutoff`, sorted by eigenvalue then quantum numbers.
pub fn enumerate_modes(model: ModelKind, cutoff: f64) -> Result<ModeTable> {
    if !cutoff.is_finite() || cutoff < 0.0 {
        return Err(domain(format!("cutoff must be finite and nonnegative, got {cutoff}")));
    }
    let lam2 = cutoff * cutoff;
    let radius = cutoff.floor() as i64;
    let estimate = match model {
        ModelKind::Circle => 2.0 * cutoff + 1.0,
        ModelKind::Torus2 => PI * (cutoff + 1.5).powi(2),
        ModelKind::Torus3 => 4.0 / 3.0 * PI * (cutoff + 1.8).powi(3),
        ModelKind::Sphere2 => (cutoff + 1.0).powi(2),
        ModelKind::SphereZonal3 => cutoff + 1.0,
        ModelKind::HyperbolicRadial3 => return Err(Error::NonCompact(model.name())),
    };
    if estimate > MAX_TABLE_MODES as f64 {
        return Err(Error::ResourceLimit(format!(
            "{model} table at cutoff {cutoff} would hold ~{estimate:.0} modes (cap {MAX_TABLE_MODES})"
        )));
    }
    let mut quanta: Vec<Quantum> = Vec::new();
    match model {
        ModelKind::Circle => {
            for m in -radius..=radius {
                let q = Quantum::Circle(m as i32);
                if admits(q.eigenvalue(), lam2) {
                    quanta.push(q);
                }
            }
        }
        ModelKind::Torus2 => {
            for a in -radius..=radius {
                for b in -radius..=radius {
                    let q = Quantum::Torus2([a as i32, b as i32]);
                    if admits(q.eigenvalue(), lam2) {
                        quanta.push(q);
                    }
                }
            }
        }
        ModelKind::Torus3 => {
            for a in -radius..=radius {
                for b in -radius..=radius {
                    if !admits((a * a + b * b) as u64, lam2) {
                        continue;
                    }
                    for c in -radius..=radius {
                        let q = Quantum::Torus3([a as i32, b as i32, c as i32]);
                        if admits(q.eigenvalue(), lam2) {
                            quanta.push(q);
                        }
                    }
                }
            }
        }
        ModelKind::Sphere2 => {
            let mut k = 0u64;
            while admits(sphere_eigenvalue_int(k, 2), lam2) {
                if k as usize > SPHERE2_MAX_DEGREE {
                    return Err(Error::ResourceLimit(format!(
                        "sphere2 degree {k} exceeds cap {SPHERE2_MAX_DEGREE}"
                    )));
                }
                for l in -(k as i32)..=(k as i32) {
                    quanta.push(Quantum::Sphere { k: k as u32, l });
                }
                k += 1;
            }
        }
        ModelKind::SphereZonal3 => {
            let mut k = 0u64;
            while admits(sphere_eigenvalue_int(k, 3), lam2) {
                if k as usize > ZONAL_MAX_DEGREE {
                    return Err(Error::ResourceLimit(format!(
                        "zonal degree {k} exceeds cap {ZONAL_MAX_DEGREE}"
                    )));
                }
                quanta.push(Quantum::Zonal(k as u32));
                k += 1;
            }
        }
        ModelKind::HyperbolicRadial3 => unreachable!(),
    }
    quanta.sort_by(|a, b| a.eigenvalue().cmp(&b.eigenvalue()).then(a.cmp(b)));

    let mut modes = Vec::with_capacity(quanta.len());
    let mut levels: Vec<Level> = Vec::new();
    for (id, q) in quanta.into_iter().enumerate() {
        let ev = q.eigenvalue();
        if levels.last().is_none_or(|l| l.eigenvalue != ev as f64) {
            let multiplicity = match q {
                Quantum::Sphere { k, .. } => sphere_multiplicity(k as u64, 2),
                Quantum::Zonal(k) => sphere_multiplicity(k as u64, 3),
                _ => 0,
            };
            levels.push(Level { eigenvalue: ev as f64, start: id, end: id, multiplicity });
        }
        let level = levels.len() - 1;
        levels[level].end = id + 1;
        modes.push(Mode { id, eigenvalue: ev as f64, quantum: q, level, multiplicity: 0 });
    }
    for level in &mut levels {
        if level.multiplicity == 0 {
            level.multiplicity = level.len() as u64;
        }
    }
    for mode in &mut modes {
        mode.multiplicity = levels[mode.level].multiplicity;
    }
    Ok(ModeTable { model, modes, levels, cutoff })
}

fn sphere_eigenvalue_int(k: u64, n: u64) -> u64 {
    k * (k + n - 1)
}

/// μ_k = k(k + n − 1), the k-th distinct eigenvalue on Sⁿ.
pub fn sphere_eigenvalue(k: u64, n: u64) -> f64 {
    sphere_eigenvalue_int(k, n) as f64
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of degree-k spherical harmonics on Sⁿ:
/// `C(k+n, n) − C(k+n−2, n)`.
pub fn sphere_multiplicity(k: u64, n: u64) -> u64 {
    let total = binomial(k + n, n);
    let lower = if k >= 2 { binomial(k + n - 2, n) } else { 0 };
    (total - lower) as u64
}

/// A point in a model's coordinate chart: angles per torus axis, (θ, φ)
/// colatitude/longitude on S², geodesic angle on zonal S³, radius on H³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 3],
    dim: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!(!coords.is_empty() && coords.len() <= 3, "points carry 1 to 3 coordinates");
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, dim: coords.len() as u8 }
    }

    pub fn circle(x: f64) -> Self {
        Self::new(&[x])
    }

    pub fn torus2(x: f64, y: f64) -> Self {
        Self::new(&[x, y])
    }

    pub fn torus3(x: f64, y: f64, z: f64) -> Self {
        Self::new(&[x, y, z])
    }

    pub fn sphere(theta: f64, phi: f64) -> Self {
        Self::new(&[theta, phi])
    }

    pub fn zonal(theta: f64) -> Self {
        Self::new(&[theta])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub(crate) fn check(&self, model: ModelKind) -> Result<()> {
        let want = match model {
            ModelKind::Circle | ModelKind::SphereZonal3 | ModelKind::HyperbolicRadial3 => 1,
            ModelKind::Torus2 | ModelKind::Sphere2 => 2,
            ModelKind::Torus3 => 3,
        };
        if self.dim as usize != want {
            return Err(domain(format!("{model} points have {want} coordinates, got {}", self.dim)));
        }
        if self.coords().iter().any(|c| !c.is_finite()) {
            return Err(domain(format!("non-finite point {:?}", self.coords())));
        }
        Ok(())
    }
}

/// Real orthonormal spherical harmonic of degree k and order l.
pub(crate) fn real_sph_harmonic(k: usize, l: i32, theta: f64, phi: f64) -> f64 {
    let m = l.unsigned_abs() as usize;
    let p = legendre::normalized(k, m, theta.cos());
    match l.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * p * (m as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * p * (m as f64 * phi).sin(),
    }
}

/// Normalized zonal eigenfunction `sin((k+1)θ) / (π√2 sin θ)` on S³,
/// evaluated through the Chebyshev U recurrence.
pub(crate) fn zonal_fn(k: usize, theta: f64) -> f64 {
    let x = theta.cos();
    let (mut u0, mut u1) = (1.0, 2.0 * x);
    if k == 0 {
        return u0 / (PI * std::f64::consts::SQRT_2);
    }
    for _ in 1..k {
        let u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1 / (PI * std::f64::consts::SQRT_2)
}

/// Value of the eigenfunction of `mode` at `point`.
pub fn eval_eigenfunction(model: ModelKind, mode: &Mode, point: &Point) -> Result<C64> {
    point.check(model)?;
    let c = point.coords();
    Ok(match mode.quantum {
        Quantum::Circle(m) => C64::from_polar(1.0 / (2.0 * PI).sqrt(), m as f64 * c[0]),
        Quantum::Torus2(m) => {
            C64::from_polar(1.0 / (2.0 * PI), m[0] as f64 * c[0] + m[1] as f64 * c[1])
        }
        Quantum::Torus3(m) => {
            let phase: f64 = m.iter().zip(c).map(|(&mi, &x)| mi as f64 * x).sum();
            C64::from_polar((2.0 * PI).powf(-1.5), phase)
        }
        Quantum::Sphere { k, l } => C64::new(real_sph_harmonic(k as usize, l, c[0], c[1]), 0.0),
        Quantum::Zonal(k) => C64::new(zonal_fn(k as usize, c[0]), 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_cutoff_two() {
        let t = enumerate_modes(ModelKind::Circle, 2.0).unwrap();
        let evs: Vec<f64> = t.modes().iter().map(|m| m.eigenvalue).collect();
        assert_eq!(evs, vec![0.0, 1.0, 1.0, 4.0, 4.0]);
        let qs: Vec<Quantum> = t.modes().iter().map(|m| m.quantum).collect();
        assert_eq!(qs[1], Quantum::Circle(-1));
        assert_eq!(qs[2], Quantum::Circle(1));
    }

    #[test]
    fn torus2_cutoff_one() {
        let t = enumerate_modes(ModelKind::Torus2, 1.0).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.levels().len(), 2);
        assert_eq!(t.levels()[1].multiplicity, 4);
    }

    #[test]
    fn sphere2_root_six_has_three_levels() {
        let t = enumerate_modes(ModelKind::Sphere2, 6f64.sqrt()).unwrap();
        assert_eq!(t.len(), 9);
        let counts: Vec<usize> = t.levels().iter().map(|l| l.len()).collect();
        assert_eq!(counts, vec![1, 3, 5]);
        let evs: Vec<f64> = t.levels().iter().map(|l| l.eigenvalue).collect();
        assert_eq!(evs, vec![0.0, 2.0, 6.0]);
    }

    #[test]
    fn sphere_formulas() {
        assert_eq!(sphere_eigenvalue(0, 2), 0.0);
        assert_eq!(sphere_eigenvalue(1, 2), 2.0);
        assert_eq!(sphere_eigenvalue(3, 3), 15.0);
        assert_eq!(sphere_multiplicity(0, 2), 1);
        assert_eq!(sphere_multiplicity(0, 5), 1);
        assert_eq!(sphere_multiplicity(2, 2), 5);
        assert_eq!(sphere_multiplicity(4, 3), 25);
        for k in 0..50 {
            assert_eq!(sphere_multiplicity(k, 2), 2 * k + 1);
        }
    }

    #[test]
    fn resource_and_domain_errors() {
        assert!(matches!(enumerate_modes(ModelKind::Circle, -1.0), Err(Error::Domain(_))));
        assert!(matches!(enumerate_modes(ModelKind::Circle, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(enumerate_modes(ModelKind::Torus3, 500.0), Err(Error::ResourceLimit(_))));
        assert!(matches!(
            enumerate_modes(ModelKind::Sphere2, sphere2_degree_cutoff(129)),
            Err(Error::ResourceLimit(_))
        ));
        assert!(enumerate_modes(ModelKind::Sphere2, sphere2_degree_cutoff(128)).is_ok());
        assert!(matches!(
            enumerate_modes(ModelKind::HyperbolicRadial3, 4.0),
            Err(Error::NonCompact(_))
        ));
    }

    #[test]
    fn eigenfunction_examples() {
        let t = enumerate_modes(ModelKind::Circle, 1.0).unwrap();
        let m0 = t.modes()[t.find(Quantum::Circle(0)).unwrap()];
        let v = eval_eigenfunction(ModelKind::Circle, &m0, &Point::circle(1.3)).unwrap();
        assert!((v.re - 0.398_942_280_401_432_7).abs() < 1e-15 && v.im.abs() < 1e-16);

        let s = enumerate_modes(ModelKind::Sphere2, 2f64.sqrt()).unwrap();
        let q = s.modes()[s.find(Quantum::Sphere { k: 1, l: 0 }).unwrap()];
        let v = eval_eigenfunction(ModelKind::Sphere2, &q, &Point::sphere(0.0, 0.3)).unwrap();
        assert!((v.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);

        let tt = enumerate_modes(ModelKind::Torus2, 2f64.sqrt()).unwrap();
        let q = tt.modes()[tt.find(Quantum::Torus2([1, 1])).unwrap()];
        let v = eval_eigenfunction(ModelKind::Torus2, &q, &Point::torus2(PI, PI)).unwrap();
        assert!((v - C64::new(1.0 / (2.0 * PI), 0.0)).norm() < 1e-15);

        let bad = eval_eigenfunction(ModelKind::Circle, &m0, &Point::circle(f64::INFINITY));
        assert!(matches!(bad, Err(Error::Domain(_))));
        let wrong_dim = eval_eigenfunction(ModelKind::Circle, &m0, &Point::torus2(0.0, 0.0));
        assert!(matches!(wrong_dim, Err(Error::Domain(_))));
    }

    #[test]
    fn zonal_matches_closed_form() {
        for k in [0usize, 1, 5, 40] {
            for theta in [0.3, 1.1, 2.9] {
                let want = ((k as f64 + 1.0) * theta).sin() / (theta.sin() * PI * 2f64.sqrt());
                assert!((zonal_fn(k, theta) - want).abs() < 1e-12);
            }
        }
        assert!((zonal_fn(3, 0.0) - 4.0 / (PI * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let t = enumerate_modes(ModelKind::Torus2, 1.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "id,eigenvalue,quantum,level,multiplicity");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0,0,0;0,0,1");
    }
}
