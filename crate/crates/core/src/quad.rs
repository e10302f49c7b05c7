//! Gauss–Legendre rules and composite panel quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared, cached rule of order `n`.
pub fn gauss_rule(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("gauss rule cache poisoned");
    map.entry(n).or_insert_with(|| Arc::new(GaussRule::new(n))).clone()
}

/// Largest local frequency ω such that an `order`-point rule integrates
/// `exp(iωs)` on `[-1, 1]` to roughly 1e-14.
///
/// Uses the Debye estimate `J_{2n}(2n sech a) ~ exp(-2n (a - tanh a))` for
/// the first neglected Chebyshev coefficient.
pub fn safe_panel_frequency(order: usize) -> f64 {
    let m = 2.0 * order as f64;
    let target = 32.0 / m;
    let (mut lo, mut hi) = (0.0_f64, 20.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.tanh() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    m / hi.cosh()
}

/// Composite Gauss–Legendre nodes and weights on `[a, b]`.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_rule(order);
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let left = a + p as f64 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(left + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Number of panels an `order`-point composite rule needs on an interval of
/// length `len` to resolve integrands of angular bandwidth `bandwidth`.
pub fn panels_for_bandwidth(len: f64, bandwidth: f64, order: usize) -> usize {
    let omega = safe_panel_frequency(order);
    ((bandwidth * len / (2.0 * omega)).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_closed_forms() {
        let r = GaussRule::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14);
        let r = GaussRule::new(3);
        assert!(r.nodes[1].abs() < 1e-16);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn rule_is_exact_to_degree_2n_minus_1() {
        for n in [1, 5, 16, 64, 129] {
            let r = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let approx: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn oscillatory_panels_hit_closed_form() {
        // ∫_0^1 cos(B t) dt = sin(B)/B
        for bw in [10.0, 500.0, 12_345.0] {
            let panels = panels_for_bandwidth(1.0, bw, 64);
            let (x, w) = composite_gauss(0.0, 1.0, panels, 64);
            let s: f64 = x.iter().zip(&w).map(|(t, w)| w * (bw * t).cos()).sum();
            assert!((s - bw.sin() / bw).abs() < 1e-12, "bw={bw}");
        }
    }

    #[test]
    fn safe_frequency_grows_with_order() {
        let a = safe_panel_frequency(16);
        let b = safe_panel_frequency(64);
        assert!(a > 5.0 && a < 16.0);
        assert!(b > 60.0 && b < 100.0);
    }
}
