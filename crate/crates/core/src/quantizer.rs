//! Quantized-state update rules.
//!
//! Every LIQSS-type rule is obtained from a prescribed difference polynomial
//! `p(t) = x(t) - q(t)` together with the scalar linearization
//! `ẋ = a q + u(t)`. The equilibrium branch is shared by all of them; outside
//! it each rule fixes `|p(0)| = ΔQ`, solves a polynomial equation for the step
//! scale `t_m` and reads off the derivatives of `q` at the segment start.
//!
//! Inputs `u` are given as derivatives `(u, u̇, ü)`; trajectories use Taylor
//! coefficients.

use crate::error::{Error, Result};
use crate::poly::{min_positive_root_exact, Trajectory};

/// Below `A_ZERO_REL * rate_scale` the diagonal Jacobian is treated as zero.
pub const A_ZERO_REL: f64 = 1e-12;

/// Quantization family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Explicit QSS.
    Qss,
    /// Linearly implicit QSS; a step fires when `q` reaches `x` or `|x - q|` reaches `ΔQ`.
    Liqss,
    /// LIQSS quantization with steps only when `|x - q|` reaches `ΔQ`.
    Eliqss,
    /// Chebyshev LIQSS.
    Cheqss,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Qss => "qss",
            Method::Liqss => "liqss",
            Method::Eliqss => "eliqss",
            Method::Cheqss => "cheqss",
        }
    }

    /// Whether reaching `x` (p = 0) also ends a segment.
    pub fn steps_on_zero_crossing(&self) -> bool {
        matches!(self, Method::Liqss)
    }

    pub fn is_linearly_implicit(&self) -> bool {
        !matches!(self, Method::Qss)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qss" => Ok(Method::Qss),
            "liqss" => Ok(Method::Liqss),
            "eliqss" => Ok(Method::Eliqss),
            "cheqss" | "cqss" => Ok(Method::Cheqss),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs of a single quantization decision, at relative time zero.
#[derive(Clone, Copy, Debug)]
pub struct QuantizerContext {
    pub order: usize,
    /// State Taylor coefficients (value, slope, half-curvature, ...).
    pub x: [f64; 4],
    /// Diagonal Jacobian entry.
    pub a: f64,
    /// `u(0)`, `u̇(0)`, `ü(0)`.
    pub u: [f64; 3],
    pub quantum: f64,
    pub method: Method,
    /// Characteristic rate used to decide when `a` is negligible.
    pub rate_scale: f64,
}

impl QuantizerContext {
    pub fn new(order: usize, x: &[f64], a: f64, u: &[f64], quantum: f64, method: Method) -> Self {
        let mut xs = [0.0; 4];
        xs[..x.len()].copy_from_slice(x);
        let mut us = [0.0; 3];
        us[..u.len()].copy_from_slice(u);
        Self { order, x: xs, a, u: us, quantum, method, rate_scale: 1.0 }
    }

    /// `a`, or zero when it is negligible against `rate_scale`.
    pub fn effective_a(&self) -> f64 {
        if self.a.abs() <= A_ZERO_REL * self.rate_scale {
            0.0
        } else {
            self.a
        }
    }
}

/// Result of a quantization: the new `q` segment (origin 0) and the chosen
/// difference polynomial's initial value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizedSegment {
    pub q: Trajectory,
    /// `p(0) = x(0) - q(0)`.
    pub p0: f64,
    /// Step scale solved from the method's equation; absent for QSS and in equilibrium.
    pub t_m: Option<f64>,
    pub equilibrium: bool,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Auxiliary coefficient `r_n` of the linearized dynamics.
pub fn compute_r(order: usize, a: f64, x0: f64, u: &[f64]) -> f64 {
    let u_at = |k: usize| u.get(k).copied().unwrap_or(0.0);
    match order {
        1 => a * x0 + u_at(0),
        2 => a * a * x0 + a * u_at(0) + u_at(1),
        3 => a * a * a * x0 + a * a * u_at(0) + a * u_at(1) + u_at(2),
        _ => panic!("unsupported order {order}"),
    }
}

/// `q` derivatives following the linear dynamics from `q0`: `q̇ = a q + u`,
/// `q̈ = a q̇ + u̇`, with the given corrections added to each derivative.
fn linear_q(order: usize, a: f64, q0: f64, u: &[f64; 3], d1: f64, d2: f64) -> Trajectory {
    let mut c = [q0, 0.0, 0.0, 0.0];
    if order >= 2 {
        let qd = a * q0 + u[0] + d1;
        c[1] = qd;
        if order >= 3 {
            let qdd = a * qd + u[1] + d2;
            c[2] = 0.5 * qdd;
        }
    }
    Trajectory { origin: 0.0, coeffs: c }
}

/// Equilibrium quantization, when a constant difference `p = c` with
/// `|c| ≤ ΔQ` exists.
pub fn equilibrium_branch(
    order: usize,
    a: f64,
    r_n: f64,
    quantum: f64,
    x: &Trajectory,
    u: &[f64; 3],
) -> Option<QuantizedSegment> {
    let x0 = x.coeffs[0];
    if a != 0.0 {
        let an = a.powi(order as i32);
        if r_n.abs() <= an.abs() * quantum {
            let c = r_n / an;
            return Some(QuantizedSegment {
                q: linear_q(order, a, x0 - c, u, 0.0, 0.0),
                p0: c,
                t_m: None,
                equilibrium: true,
            });
        }
        None
    } else if r_n == 0.0 {
        Some(QuantizedSegment {
            q: linear_q(order, 0.0, x0, u, 0.0, 0.0),
            p0: 0.0,
            t_m: None,
            equilibrium: true,
        })
    } else {
        None
    }
}

/// Smallest positive root of the step equation. When the leading term is at
/// the rounding level and carries the wrong sign, the root is at infinity.
fn step_scale(order: usize, coeffs: &[f64], r: f64, a: f64) -> Result<f64> {
    if let Some(t) = min_positive_root_exact(coeffs, f64::INFINITY) {
        return Ok(t);
    }
    let lead = coeffs[coeffs.len() - 1];
    let rest: f64 = coeffs[..coeffs.len() - 1].iter().map(|c| c.abs()).sum();
    if lead.abs() <= 1e-12 * rest.max(a.abs().powi(order as i32)) {
        return Ok(f64::INFINITY);
    }
    Err(Error::NoPositiveRoot { order, r, a })
}

fn check_order(ctx: &QuantizerContext) {
    assert!((1..=3).contains(&ctx.order), "order must be 1, 2 or 3");
    assert!(ctx.quantum > 0.0, "quantum must be positive");
}

/// LIQSS (and eLIQSS) rule outside equilibrium: `p(t) = b_n (t_m - t)^n`.
pub fn quantize_liqss(ctx: &QuantizerContext) -> Result<QuantizedSegment> {
    check_order(ctx);
    let a = ctx.effective_a();
    let dq = ctx.quantum;
    let x0 = ctx.x[0];
    let r = compute_r(ctx.order, a, x0, &ctx.u);
    let s = sign(r);
    match ctx.order {
        1 => {
            let p0 = -s * dq;
            let t_m = 1.0 / (a - r / p0);
            if !(t_m > 0.0) {
                return Err(Error::NoPositiveRoot { order: 1, r, a });
            }
            Ok(QuantizedSegment {
                q: Trajectory::constant(0.0, x0 - p0),
                p0,
                t_m: Some(t_m),
                equilibrium: false,
            })
        }
        2 => {
            let p0 = s * dq;
            let t_m = step_scale(2, &[-2.0, 2.0 * a, r / p0 - a * a], r, a)?;
            let q0 = x0 - p0;
            Ok(QuantizedSegment {
                q: linear_q(2, a, q0, &ctx.u, 2.0 * p0 / t_m, 0.0),
                p0,
                t_m: Some(t_m),
                equilibrium: false,
            })
        }
        _ => {
            let p0 = -s * dq;
            let coeffs = [6.0, -6.0 * a, 3.0 * a * a, r / p0 - a * a * a];
            let t_m = step_scale(3, &coeffs, r, a)?;
            let q0 = x0 - p0;
            Ok(QuantizedSegment {
                q: linear_q(3, a, q0, &ctx.u, 3.0 * p0 / t_m, -6.0 * p0 / (t_m * t_m)),
                p0,
                t_m: Some(t_m),
                equilibrium: false,
            })
        }
    }
}

/// Chebyshev LIQSS rule outside equilibrium:
/// `p(t) = ±ΔQ T_n((2t - t_m) / t_m)`.
pub fn quantize_cheqss(ctx: &QuantizerContext) -> Result<QuantizedSegment> {
    check_order(ctx);
    let a = ctx.effective_a();
    let dq = ctx.quantum;
    let x0 = ctx.x[0];
    let r = compute_r(ctx.order, a, x0, &ctx.u);
    let s = sign(r);
    match ctx.order {
        1 => {
            // same quantized value as LIQSS1; t_m is where p reaches the far side of the band
            let mut seg = quantize_liqss(ctx)?;
            seg.t_m = seg.t_m.map(|t| 2.0 * t);
            Ok(seg)
        }
        2 => {
            let p0 = s * dq;
            let t_m = step_scale(2, &[-16.0, 8.0 * a, r / p0 - a * a], r, a)?;
            let q0 = x0 - p0;
            Ok(QuantizedSegment {
                q: linear_q(2, a, q0, &ctx.u, 8.0 * p0 / t_m, 0.0),
                p0,
                t_m: Some(t_m),
                equilibrium: false,
            })
        }
        _ => {
            let p0 = -s * dq;
            let coeffs = [192.0, -96.0 * a, 18.0 * a * a, r / p0 - a * a * a];
            let t_m = step_scale(3, &coeffs, r, a)?;
            let q0 = x0 - p0;
            Ok(QuantizedSegment {
                q: linear_q(3, a, q0, &ctx.u, 18.0 * p0 / t_m, -96.0 * p0 / (t_m * t_m)),
                p0,
                t_m: Some(t_m),
                equilibrium: false,
            })
        }
    }
}

/// Explicit QSS: `q` is the state polynomial truncated to degree `order - 1`.
pub fn quantize_qss(ctx: &QuantizerContext) -> QuantizedSegment {
    check_order(ctx);
    let q = Trajectory::new(0.0, &ctx.x[..ctx.order]);
    QuantizedSegment { q, p0: 0.0, t_m: None, equilibrium: false }
}

/// Full quantization for the context's method, equilibrium branch included.
pub fn quantize(ctx: &QuantizerContext) -> Result<QuantizedSegment> {
    if ctx.method == Method::Qss {
        return Ok(quantize_qss(ctx));
    }
    let a = ctx.effective_a();
    let r = compute_r(ctx.order, a, ctx.x[0], &ctx.u);
    let x = Trajectory::new(0.0, &ctx.x);
    if let Some(seg) = equilibrium_branch(ctx.order, a, r, ctx.quantum, &x, &ctx.u) {
        return Ok(seg);
    }
    match ctx.method {
        Method::Cheqss => quantize_cheqss(ctx),
        _ => quantize_liqss(ctx),
    }
}

/// Chebyshev polynomial of the first kind, degrees 1 to 3.
pub fn chebyshev_t(n: usize, z: f64) -> f64 {
    match n {
        1 => z,
        2 => 2.0 * z * z - 1.0,
        3 => 4.0 * z * z * z - 3.0 * z,
        _ => panic!("Chebyshev degree {n} not supported"),
    }
}
