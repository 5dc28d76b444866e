//! The integral operator `G(f)(x) = integral of g_x(y) f(y) dy` on a grid.
//!
//! Nodes sit at `x = 1 / (1 + e^-u)` for equally spaced `u`, so power laws
//! at both ends become exponentials in `u` and the trapezoid rule in `u` is
//! spectrally accurate for them. The kernel integral over each panel is
//! computed by Gauss-Legendre against an 8-point Lagrange interpolant of `f`
//! in `u`.

use std::io::Write;

use super::constants::beta_star;
use crate::numerics::{gauss_legendre, integrate_pieces};

pub const DEFAULT_NODES: usize = 512;
/// Grid spans `u` in `[-LOGISTIC_HALF_WIDTH, LOGISTIC_HALF_WIDTH]`.
pub const LOGISTIC_HALF_WIDTH: f64 = 32.0;

const STENCIL: usize = 8;
const PANEL_POINTS: usize = 8;

/// `g_x(y)`; zero on the diagonal.
pub fn kernel_g(x: f64, y: f64) -> f64 {
    let b = beta_star();
    let c = 2.0 / (b + 1.0);
    if x < y {
        c * x.powf(b + 1.0) / y.powf(b + 2.0)
    } else if y < x {
        c * (1.0 - x).powf(b + 1.0) / (1.0 - y).powf(b + 2.0)
    } else {
        0.0
    }
}

/// `integral over x in [0, 1] of g_x(y)`.
pub fn kernel_mass(y: f64) -> f64 {
    integrate_pieces(|x| kernel_g(x, y), &[0.0, y, 1.0], 1e-13)
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Values on a logistic grid with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    /// `1 - nodes[i]`, kept separately because it is tiny near 1.
    pub complements: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    /// Zero function on an `n`-node grid (`n >= STENCIL`).
    pub fn zeros(n: usize) -> Self {
        assert!(n >= STENCIL, "grid needs at least {STENCIL} nodes");
        let l = LOGISTIC_HALF_WIDTH;
        let h = 2.0 * l / (n - 1) as f64;
        let us: Vec<f64> = (0..n).map(|i| -l + h * i as f64).collect();
        let nodes: Vec<f64> = us.iter().map(|&u| logistic(u)).collect();
        let complements: Vec<f64> = us.iter().map(|&u| logistic(-u)).collect();
        let mut weights: Vec<f64> = nodes
            .iter()
            .zip(&complements)
            .map(|(x, c)| h * x * c)
            .collect();
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        // the uncovered ends [0, x_0) and (x_{n-1}, 1]
        weights[0] += nodes[0];
        weights[n - 1] += complements[n - 1];
        GridFunction {
            nodes,
            complements,
            weights,
            values: vec![0.0; n],
        }
    }

    /// Samples `f(x, 1 - x)` on an `n`-node grid.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> Self {
        let mut g = Self::zeros(n);
        g.values = g
            .nodes
            .iter()
            .zip(&g.complements)
            .map(|(&x, &c)| f(x, c))
            .collect();
        g
    }

    /// `(x(1-x))^(beta/2)` on an `n`-node grid.
    pub fn p0(n: usize) -> Self {
        let b = beta_star();
        Self::from_fn(n, |x, c| (x * c).powf(b / 2.0))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.len());
        GridFunction {
            values,
            ..self.clone()
        }
    }

    pub fn integral(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Rescaled to unit integral.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.integral())
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum()
    }

    /// CSV with header `node,weight,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> crate::error::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "weight", "value"])?;
        for i in 0..self.len() {
            w.write_record([
                format!("{:.17e}", self.nodes[i]),
                format!("{:.17e}", self.weights[i]),
                format!("{:.17e}", self.values[i]),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Dense matrix of `G` on one grid.
#[derive(Debug, Clone)]
pub struct GOperator {
    n: usize,
    matrix: Vec<f64>,
    grid: GridFunction,
}

impl GOperator {
    pub fn new(grid: &GridFunction) -> Self {
        let n = grid.len();
        let b = beta_star();
        let c = 2.0 / (b + 1.0);
        let l = LOGISTIC_HALF_WIDTH;
        let h = 2.0 * l / (n - 1) as f64;
        let (gl_nodes, gl_weights) = gauss_legendre(PANEL_POINTS);

        // panel j covers [u_j, u_{j+1}]; its stencil starts at stencil_start(j)
        let stencil_start = |j: usize| j.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
        let mut upper = vec![[0.0; STENCIL]; n - 1];
        let mut lower = vec![[0.0; STENCIL]; n - 1];
        for j in 0..n - 1 {
            let s = stencil_start(j);
            for (xi, wi) in gl_nodes.iter().zip(&gl_weights) {
                // position in units of h relative to the stencil start
                let r = (j - s) as f64 + 0.5 * (1.0 + xi);
                let u = -l + h * (j as f64 + 0.5 * (1.0 + xi));
                let (y, yc) = (logistic(u), logistic(-u));
                let w = 0.5 * h * wi;
                // g-factors times the Jacobian y(1-y)
                let k_up = w * y.powf(-b - 1.0) * yc;
                let k_lo = w * yc.powf(-b - 1.0) * y;
                for m in 0..STENCIL {
                    let mut basis = 1.0;
                    for q in 0..STENCIL {
                        if q != m {
                            basis *= (r - q as f64) / (m as f64 - q as f64);
                        }
                    }
                    upper[j][m] += k_up * basis;
                    lower[j][m] += k_lo * basis;
                }
            }
        }

        let mut matrix = vec![0.0; n * n];
        let mut acc = vec![0.0; n];
        for i in (0..n).rev() {
            if i < n - 1 {
                let s = stencil_start(i);
                for m in 0..STENCIL {
                    acc[s + m] += upper[i][m];
                }
            }
            let f = c * grid.nodes[i].powf(b + 1.0);
            for (k, a) in acc.iter().enumerate() {
                matrix[i * n + k] += f * a;
            }
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..n {
            if i > 0 {
                let s = stencil_start(i - 1);
                for m in 0..STENCIL {
                    acc[s + m] += lower[i - 1][m];
                }
            }
            let f = c * grid.complements[i].powf(b + 1.0);
            for (k, a) in acc.iter().enumerate() {
                matrix[i * n + k] += f * a;
            }
        }
        GOperator {
            n,
            matrix,
            grid: grid.with_values(vec![0.0; n]),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        assert_eq!(f.len(), self.n, "grid size mismatch");
        let values = self
            .matrix
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(&f.values).map(|(k, v)| k * v).sum())
            .collect();
        self.grid.with_values(values)
    }
}

/// `G(f)` on the grid of `f`.
pub fn apply_g(f: &GridFunction) -> GridFunction {
    GOperator::new(f).apply(f)
}

#[derive(Debug, Clone)]
pub struct PowerIteration {
    /// Last iterate, normalized to unit integral.
    pub function: GridFunction,
    pub iterations: usize,
    /// Sup-norm change over the last iteration.
    pub last_change: f64,
}

/// Iterates `f -> G(f) / integral` until the sup-norm change drops below
/// `tol` or `max_iter` is reached.
pub fn power_iteration(
    op: &GOperator,
    start: &GridFunction,
    max_iter: usize,
    tol: f64,
) -> PowerIteration {
    let mut f = start.normalized();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter && change > tol {
        let next = op.apply(&f).normalized();
        change = next.sup_distance(&f);
        f = next;
        iterations += 1;
    }
    PowerIteration {
        function: f,
        iterations,
        last_change: change,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_conventions() {
        assert_eq!(kernel_g(0.3, 0.3), 0.0);
        for (x, y) in [(0.2, 0.7), (0.8, 0.1), (0.45, 0.55)] {
            assert!(kernel_g(x, y) > 0.0);
            assert!((kernel_g(x, y) - kernel_g(1.0 - x, 1.0 - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_columns_have_unit_mass() {
        for y in [0.2, 0.5, 0.9] {
            assert!((kernel_mass(y) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let g = GridFunction::zeros(DEFAULT_NODES);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes[0] > 0.0 && g.nodes[DEFAULT_NODES - 1] < 1.0);
    }

    #[test]
    fn p0_is_fixed() {
        let p0 = GridFunction::p0(DEFAULT_NODES);
        let gp = apply_g(&p0);
        let err = gp.sup_distance(&p0);
        assert!(err <= 1e-6, "sup error {err:e}");
    }

    #[test]
    fn constant_maps_to_closed_form() {
        let b = beta_star();
        let one = GridFunction::from_fn(DEFAULT_NODES, |_, _| 1.0);
        let g1 = apply_g(&one);
        let exact = GridFunction::from_fn(DEFAULT_NODES, |x, c| {
            2.0 / ((b + 1.0) * (b + 1.0)) * (2.0 - x.powf(b + 1.0) - c.powf(b + 1.0))
        });
        assert!(g1.sup_distance(&exact) < 1e-9);
    }
}
