//! Product quadrature grids on the compact models.

use std::f64::consts::PI;

use super::{ModeTable, ModelKind, Point};
use crate::error::{config, Result};
use crate::quad::gauss_rule;

/// How the point list of a grid is laid out. Points are stored row-major
/// in the order given here.
#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    /// `n^dim` trapezoid points, `x = 2πi/n` per axis, last axis fastest.
    Torus { dim: usize, n: usize },
    /// Gauss–Legendre nodes in cos θ (θ decreasing from the north pole is
    /// not assumed; rows follow ascending cos θ) times `nphi` longitudes.
    Sphere { cos_theta: Vec<f64>, nphi: usize },
    /// Interior Chebyshev nodes `θ_i = iπ/(n+1)`, `i = 1..=n`.
    Zonal { n: usize },
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    model: ModelKind,
    layout: GridLayout,
    points: Vec<Point>,
    weights: Vec<f64>,
}

/// Smallest `n ≥ min` with no prime factor above 5.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

fn oversample(p: f64) -> usize {
    ((p / 2.0).ceil() as usize).max(1)
}

impl QuadratureGrid {
    /// Trapezoid grid with `n` points per axis on a flat torus.
    pub fn torus(model: ModelKind, n: usize) -> Result<Self> {
        let dim = model
            .torus_dim()
            .ok_or_else(|| config(format!("{model} is not a torus")))?;
        if n == 0 {
            return Err(config("torus grids need at least one point per axis"));
        }
        let total = n.pow(dim as u32);
        let h = 2.0 * PI / n as f64;
        let w = h.powi(dim as i32);
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let c: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
            points.push(Point::new(&c));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Self { model, layout: GridLayout::Torus { dim, n }, points, weights: vec![w; total] })
    }

    /// Gauss–Legendre in cos θ with `ntheta` nodes times `nphi` equispaced
    /// longitudes on the two-sphere.
    pub fn sphere(ntheta: usize, nphi: usize) -> Result<Self> {
        if ntheta == 0 || nphi == 0 {
            return Err(config("sphere grids need at least one node per axis"));
        }
        let rule = gauss_rule(ntheta);
        let dphi = 2.0 * PI / nphi as f64;
        let mut points = Vec::with_capacity(ntheta * nphi);
        let mut weights = Vec::with_capacity(ntheta * nphi);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let theta = x.acos();
            for j in 0..nphi {
                points.push(Point::sphere(theta, j as f64 * dphi));
                weights.push(w * dphi);
            }
        }
        Ok(Self {
            model: ModelKind::Sphere2,
            layout: GridLayout::Sphere { cos_theta: rule.nodes.clone(), nphi },
            points,
            weights,
        })
    }

    /// Chebyshev second-kind rule in the geodesic angle on zonal S³.
    pub fn zonal(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(config("zonal grids need at least one node"));
        }
        let h = PI / (n + 1) as f64;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 1..=n {
            let theta = i as f64 * h;
            points.push(Point::zonal(theta));
            weights.push(4.0 * PI * h * theta.sin().powi(2));
        }
        Ok(Self { model: ModelKind::SphereZonal3, layout: GridLayout::Zonal { n }, points, weights })
    }

    /// Generic constructor: `resolution` is points per axis on tori, the
    /// number of colatitude nodes on S² (with `2·resolution` longitudes),
    /// and the node count on zonal S³.
    pub fn with_resolution(model: ModelKind, resolution: usize) -> Result<Self> {
        match model {
            ModelKind::Circle | ModelKind::Torus2 | ModelKind::Torus3 => Self::torus(model, resolution),
            ModelKind::Sphere2 => Self::sphere(resolution, 2 * resolution),
            ModelKind::SphereZonal3 => Self::zonal(resolution),
            ModelKind::HyperbolicRadial3 => {
                Err(config("hyperbolic grids live in the hyperbolic module"))
            }
        }
    }

    /// Smallest grid that integrates products of two admitted modes exactly.
    pub fn for_table(table: &ModeTable) -> Result<Self> {
        Self::for_lp(table, 2.0)
    }

    /// Grid oversampled by `ceil(p/2)` so that `|u|^p` is integrated exactly
    /// for even integer p.
    pub fn for_lp(table: &ModeTable, p: f64) -> Result<Self> {
        let (a, b) = minimal_resolution(table, p);
        match table.model() {
            ModelKind::Circle | ModelKind::Torus2 | ModelKind::Torus3 => {
                Self::torus(table.model(), smooth_size(a))
            }
            ModelKind::Sphere2 => Self::sphere(a, smooth_size(b)),
            ModelKind::SphereZonal3 => Self::zonal(a),
            ModelKind::HyperbolicRadial3 => Err(config("no compact grid for hyperbolic model")),
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Error unless the grid is fine enough for `|u|^p` with `u` built on `table`.
    pub fn check_admissible(&self, table: &ModeTable, p: f64) -> Result<()> {
        if table.model() != self.model {
            return Err(config(format!("grid is for {}, field is on {}", self.model, table.model())));
        }
        let (a, b) = minimal_resolution(table, p);
        let ok = match &self.layout {
            GridLayout::Torus { n, .. } => *n >= a,
            GridLayout::Sphere { cos_theta, nphi } => cos_theta.len() >= a && *nphi >= b,
            GridLayout::Zonal { n } => *n >= a,
        };
        if ok {
            Ok(())
        } else {
            Err(config(format!(
                "grid {:?} below minimum resolution ({a}, {b}) for cutoff {} at p={p}",
                self.layout_summary(),
                table.cutoff()
            )))
        }
    }

    fn layout_summary(&self) -> (usize, usize) {
        match &self.layout {
            GridLayout::Torus { n, .. } => (*n, *n),
            GridLayout::Sphere { cos_theta, nphi } => (cos_theta.len(), *nphi),
            GridLayout::Zonal { n } => (*n, 1),
        }
    }
}

/// Minimal (first-axis, second-axis) resolution for exact `|u|^p` integration.
fn minimal_resolution(table: &ModeTable, p: f64) -> (usize, usize) {
    let q = oversample(p);
    let k = table.max_index();
    match table.model() {
        ModelKind::Circle | ModelKind::Torus2 | ModelKind::Torus3 => (2 * q * k + 1, 2 * q * k + 1),
        ModelKind::Sphere2 => (q * k + 1, 2 * q * k + 1),
        ModelKind::SphereZonal3 => (q * (k + 1), 1),
        ModelKind::HyperbolicRadial3 => (1, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{enumerate_modes, eval_eigenfunction, sphere2_degree_cutoff};

    #[test]
    fn circle_eight_points() {
        let g = QuadratureGrid::torus(ModelKind::Circle, 8).unwrap();
        assert_eq!(g.len(), 8);
        for w in g.weights() {
            assert!((w - 2.0 * PI / 8.0).abs() < 1e-15);
        }
        assert!((g.points()[3].coords()[0] - 3.0 * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn total_measures() {
        for model in ModelKind::COMPACT {
            let g = QuadratureGrid::with_resolution(model, 17).unwrap();
            let want = model.measure().unwrap();
            assert!((g.total_weight() - want).abs() <= 1e-10 * want, "{model}");
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(129), 135);
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(257), 270);
    }

    #[test]
    fn gram_matrix_is_identity() {
        let cases = [
            (ModelKind::Circle, 9.0),
            (ModelKind::Torus2, 4.0),
            (ModelKind::Torus3, 2.0),
            (ModelKind::Sphere2, sphere2_degree_cutoff(16)),
            (ModelKind::SphereZonal3, 20.0),
        ];
        for (model, cutoff) in cases {
            let t = enumerate_modes(model, cutoff).unwrap();
            let g = QuadratureGrid::for_table(&t).unwrap();
            let vals: Vec<Vec<num_complex::Complex64>> = t
                .modes()
                .iter()
                .map(|m| g.points().iter().map(|x| eval_eigenfunction(model, m, x).unwrap()).collect())
                .collect();
            let mut worst: f64 = 0.0;
            for a in 0..t.len() {
                for b in a..t.len() {
                    let s: num_complex::Complex64 = (0..g.len())
                        .map(|i| vals[a][i] * vals[b][i].conj() * g.weights()[i])
                        .sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((s - want).norm());
                }
            }
            assert!(worst < 1e-8, "{model}: {worst}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let t = enumerate_modes(ModelKind::Circle, 8.0).unwrap();
        let g = QuadratureGrid::torus(ModelKind::Circle, 8).unwrap();
        assert!(g.check_admissible(&t, 2.0).is_err());
        let g = QuadratureGrid::for_lp(&t, 6.0).unwrap();
        assert!(g.check_admissible(&t, 6.0).is_ok());
        assert!(QuadratureGrid::for_table(&t).unwrap().check_admissible(&t, 6.0).is_err());
    }
}
