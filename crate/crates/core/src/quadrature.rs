//! Gauss–Hermite rules for integrands of the form `exp(-x^2) f(x)`.
//!
//! Nodes come from Newton iteration on the orthonormal Hermite recurrence,
//! seeded with the usual asymptotic guesses. Rules are cached per order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest order the solver accepts. The recurrence stays well conditioned
/// far beyond this; the limit only bounds the cache.
pub const MAX_ORDER: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::domain(
                "order",
                order as f64,
                "Gauss-Hermite order must be in 1..=256",
            ));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        // Ascending order.
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    /// Shared rule of the given order.
    pub fn cached(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&order) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(order)?);
        cache
            .lock()
            .expect("rule cache poisoned")
            .insert(order, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `∫ exp(-x^2) f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(k: u32) -> f64 {
        // ∫ x^k exp(-x^2) = Γ((k+1)/2) for even k.
        if k % 2 == 1 {
            return 0.0;
        }
        let mut g = PI.sqrt();
        let mut a = 0.5;
        for _ in 0..k / 2 {
            g *= a;
            a += 1.0;
        }
        g
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 10, 20] {
            let rule = GaussHermite::new(n).unwrap();
            for k in 0..(2 * n as u32) {
                let got = rule.integrate(|x| x.powi(k as i32));
                let want = moment(k);
                let scale = moment(k - k % 2).max(1.0);
                assert!(
                    (got - want).abs() <= 1e-12 * scale,
                    "n={n} k={k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn known_nodes_order_3() {
        let rule = GaussHermite::new(3).unwrap();
        let r = (1.5f64).sqrt();
        assert!((rule.nodes()[0] + r).abs() < 1e-15);
        assert!(rule.nodes()[1].abs() < 1e-15);
        assert!((rule.nodes()[2] - r).abs() < 1e-15);
        assert!((rule.weights()[1] - 2.0 * PI.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn high_orders_are_normalized_and_symmetric() {
        for n in [40usize, 80, 160] {
            let rule = GaussHermite::new(n).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-13, "n={n}: {total}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            for i in 0..n {
                assert!((rule.nodes()[i] + rule.nodes()[n - 1 - i]).abs() < 1e-13);
            }
            // Gaussian characteristic function, e^{-k^2/4} sqrt(pi).
            let got = rule.integrate(|x| (3.0 * x).cos());
            assert!((got - PI.sqrt() * (-2.25f64).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn order_bounds() {
        assert!(GaussHermite::new(0).is_err());
        assert!(GaussHermite::new(MAX_ORDER + 1).is_err());
        assert!(Arc::ptr_eq(
            &GaussHermite::cached(7).unwrap(),
            &GaussHermite::cached(7).unwrap()
        ));
    }
}
