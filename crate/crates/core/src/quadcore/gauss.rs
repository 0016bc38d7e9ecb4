//! Gauss rules from the Golub–Welsch eigenproblem and product rules on spheres.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::specfun::gamma;

/// Nodes and weights of the `k`-point Gauss rule for the weight `(1-x^2)^a`
/// on `[-1, 1]` (Gegenbauer family; `a = 0` is Legendre).
pub fn gauss_symmetric(k: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1 && a > -1.0);
    let mut jac = DMatrix::<f64>::zeros(k, k);
    for i in 1..k {
        let kf = i as f64;
        let b = kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0));
        let s = b.sqrt();
        jac[(i, i - 1)] = s;
        jac[(i - 1, i)] = s;
    }
    let mu0 = std::f64::consts::PI.sqrt() * gamma(a + 1.0) / gamma(a + 1.5);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Symmetrize to remove eigen-solver asymmetry.
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if k % 2 == 1 {
        pairs[k / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule mapped to `[lo, hi]`.
pub fn gauss_legendre(k: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let rule = legendre_cached(k);
    let (x, w) = (&rule.0, &rule.1);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    x.iter().zip(w.iter()).map(|(&x, &w)| (mid + half * x, half * w)).collect()
}

fn legendre_cached(k: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("legendre cache poisoned");
    guard.entry(k).or_insert_with(|| Arc::new(gauss_symmetric(k, 0.0))).clone()
}

/// Quadrature rule on the unit sphere `S^{d-1}` in `R^d`; weights sum to `σ_d`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    /// Directions stored row-major, `dim` entries each.
    pub dirs: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dir(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.dim..(i + 1) * self.dim]
    }

    /// Product rule: trapezoid with `2k` points on `S^1`, then for each higher
    /// sphere `ω = (x, √(1-x²) ω')` with a `k`-point Gauss rule for the
    /// weight `(1-x²)^{(d-3)/2}`.
    pub fn product(dim: usize, k: usize) -> Arc<SphereRule> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphereRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache.lock().expect("sphere cache poisoned").get(&(dim, k)) {
            return r.clone();
        }
        let rule = Arc::new(Self::build(dim, k));
        cache.lock().expect("sphere cache poisoned").insert((dim, k), rule.clone());
        rule
    }

    fn build(dim: usize, k: usize) -> SphereRule {
        assert!(dim >= 2 && k >= 1);
        let m = 2 * k;
        let mut dirs = Vec::with_capacity(2 * m);
        let mut weights = Vec::with_capacity(m);
        let step = 2.0 * std::f64::consts::PI / m as f64;
        for i in 0..m {
            // Half-step offset keeps the rule free of axis-aligned directions.
            let th = (i as f64 + 0.5) * step;
            dirs.push(th.cos());
            dirs.push(th.sin());
            weights.push(step);
        }
        let mut rule = SphereRule { dim: 2, dirs, weights };
        for d in 3..=dim {
            let (xs, ws) = gauss_symmetric(k, (d as f64 - 3.0) / 2.0);
            let mut dirs = Vec::with_capacity(rule.len() * k * d);
            let mut weights = Vec::with_capacity(rule.len() * k);
            for (&x, &w) in xs.iter().zip(ws.iter()) {
                let s = (1.0 - x * x).max(0.0).sqrt();
                for j in 0..rule.len() {
                    dirs.push(x);
                    dirs.extend(rule.dir(j).iter().map(|c| s * c));
                    weights.push(w * rule.weights[j]);
                }
            }
            rule = SphereRule { dim: d, dirs, weights };
        }
        rule
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadcore::DimensionConstants;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(8, 0.0, 2.0);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn gegenbauer_weight_total() {
        let (_, w) = gauss_symmetric(6, 0.5);
        let s: f64 = w.iter().sum();
        assert!((s - std::f64::consts::PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        for d in 2..=5 {
            let rule = SphereRule::product(d, 6);
            let s: f64 = rule.weights.iter().sum();
            let sigma = DimensionConstants::new(d).unwrap().sigma_n;
            assert!((s - sigma).abs() < 1e-12 * sigma, "d={d}");
            for i in 0..rule.len() {
                let n2: f64 = rule.dir(i).iter().map(|c| c * c).sum();
                assert!((n2 - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sphere_second_moment() {
        // ∫ x_1^2 dσ = σ_d / d
        for d in 2..=5 {
            let rule = SphereRule::product(d, 4);
            let s: f64 = (0..rule.len()).map(|i| rule.weights[i] * rule.dir(i)[0].powi(2)).sum();
            let sigma = DimensionConstants::new(d).unwrap().sigma_n;
            assert!((s - sigma / d as f64).abs() < 1e-12, "d={d}");
        }
    }
}
