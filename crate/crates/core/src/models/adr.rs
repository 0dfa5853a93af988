use super::Model;
use crate::error::{Error, Result};
use crate::jet::Carrier;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdrParams {
    pub n: usize,
    pub advection: f64,
    pub diffusion: f64,
    pub reaction: f64,
    pub length: f64,
    /// Value imposed at the inflow boundary.
    pub inflow: f64,
}

impl Default for AdrParams {
    fn default() -> Self {
        Self { n: 100, advection: 1.0, diffusion: 0.1, reaction: 100.0, length: 10.0, inflow: 1.0 }
    }
}

/// Upwind/central method-of-lines discretization of the 1-D
/// advection-diffusion-reaction equation with a cubic reaction term.
#[derive(Clone, Debug)]
pub struct AdrModel {
    p: AdrParams,
    dx: f64,
    incidence: Vec<Vec<usize>>,
}

impl AdrModel {
    pub fn new(p: AdrParams) -> Result<Self> {
        if p.n < 3 {
            return Err(Error::InvalidConfig("ADR grid needs at least 3 points".into()));
        }
        if !(p.length > 0.0) || p.diffusion < 0.0 {
            return Err(Error::InvalidConfig("ADR length must be positive and diffusion non-negative".into()));
        }
        let n = p.n;
        let incidence = (0..n)
            .map(|i| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect())
            .collect();
        Ok(Self { p, dx: p.length / n as f64, incidence })
    }

    pub fn params(&self) -> &AdrParams {
        &self.p
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }
}

impl Default for AdrModel {
    fn default() -> Self {
        Self::new(AdrParams::default()).expect("default parameters are valid")
    }
}

impl Model for AdrModel {
    fn name(&self) -> &'static str {
        "adr"
    }

    fn dimension(&self) -> usize {
        self.p.n
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.p.n]
    }

    fn incidence(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    fn rhs<C: Carrier, S: Fn(usize) -> C>(&self, i: usize, q: &S, _t: C) -> C {
        let AdrParams { n, advection: a, diffusion: d, reaction: r, inflow, .. } = self.p;
        let dx = self.dx;
        let xi = q(i);
        let (left, right) = if i == 0 {
            (C::constant(inflow), q(1))
        } else if i == n - 1 {
            // zero-flux: mirrored neighbour
            (q(i - 1), q(i - 1))
        } else {
            (q(i - 1), q(i + 1))
        };
        let adv = (xi - left).scale(-a / dx);
        let dif = (right - xi.scale(2.0) + left).scale(d / (dx * dx));
        let x2 = xi * xi;
        let rea = (x2 - x2 * xi).scale(r);
        adv + dif + rea
    }

    fn diag_jacobian<S: Fn(usize) -> f64>(&self, i: usize, q: &S, _t: f64) -> Option<f64> {
        let dx = self.dx;
        let x = q(i);
        Some(-self.p.advection / dx - 2.0 * self.p.diffusion / (dx * dx) + self.p.reaction * (2.0 * x - 3.0 * x * x))
    }
}
