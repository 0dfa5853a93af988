//! Polynomial trajectories of degree at most three and the real-root
//! machinery used for event scheduling.
//!
//! All root searches work in time relative to the polynomial origin and only
//! report roots strictly after it.

use arrayvec::ArrayVec;

/// Maximum number of Taylor coefficients carried by a trajectory.
pub const MAX_COEFFS: usize = 4;

/// Leading coefficients whose contribution over the search scale falls below
/// this fraction of the largest term are dropped before root finding.
pub const DEGREE_DEMOTION_EPS: f64 = 1e-14;

/// A critical point counts as a (tangential) root when the polynomial value
/// there is below this fraction of the summed term magnitudes.
pub const TOUCH_REL_TOL: f64 = 1e-12;

/// Relative slack added to a band before searching for its crossing, so that
/// tangential contact (as in Chebyshev equi-oscillation) is not an exit.
pub const BAND_REL_SLACK: f64 = 1e-10;

/// Values within this fraction of the band count as `x` having reached `q`.
pub const ZERO_REACH_REL_TOL: f64 = 1e-9;

const MAX_ROOT_ITERS: usize = 200;

/// Piecewise-polynomial segment `c0 + c1 τ + c2 τ² + c3 τ³` with `τ = t - origin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    pub origin: f64,
    pub coeffs: [f64; MAX_COEFFS],
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::constant(0.0, 0.0)
    }
}

impl Trajectory {
    pub fn new(origin: f64, coeffs: &[f64]) -> Self {
        assert!(coeffs.len() <= MAX_COEFFS, "trajectory degree above 3");
        let mut c = [0.0; MAX_COEFFS];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Self { origin, coeffs: c }
    }

    pub fn constant(origin: f64, value: f64) -> Self {
        Self::new(origin, &[value])
    }

    /// Highest index with a non-zero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.coeffs, t - self.origin)
    }

    /// `k`-th time derivative at `t`.
    pub fn derivative_at(&self, t: f64, k: usize) -> f64 {
        let tau = t - self.origin;
        let mut acc = 0.0;
        for j in (k..MAX_COEFFS).rev() {
            acc = acc * tau + self.coeffs[j] * falling_factorial(j, k);
        }
        acc
    }

    /// The same polynomial re-expanded about `new_origin`.
    pub fn advance(&self, new_origin: f64) -> Self {
        Self {
            origin: new_origin,
            coeffs: taylor_shift(&self.coeffs, new_origin - self.origin),
        }
    }

    /// Keeps the coefficients up to and including `degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        let mut out = *self;
        for c in out.coeffs.iter_mut().skip(degree + 1) {
            *c = 0.0;
        }
        out
    }

    /// Coefficient-wise difference after aligning `other` to this origin.
    pub fn sub_aligned(&self, other: &Trajectory) -> Self {
        let o = if other.origin == self.origin {
            *other
        } else {
            other.advance(self.origin)
        };
        let mut c = self.coeffs;
        for (a, b) in c.iter_mut().zip(o.coeffs.iter()) {
            *a -= b;
        }
        Self { origin: self.origin, coeffs: c }
    }
}

pub(crate) fn horner(c: &[f64], tau: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * tau + ck)
}

fn falling_factorial(j: usize, k: usize) -> f64 {
    ((j - k + 1)..=j).fold(1.0, |acc, m| acc * m as f64)
}

/// Re-expands `Σ c_k τ^k` as a polynomial in `τ - delta`.
pub fn taylor_shift(c: &[f64; MAX_COEFFS], delta: f64) -> [f64; MAX_COEFFS] {
    if delta == 0.0 {
        return *c;
    }
    // repeated synthetic division by (τ - delta)
    let mut d = *c;
    for i in 0..MAX_COEFFS {
        for j in (i..MAX_COEFFS - 1).rev() {
            d[j] += delta * d[j + 1];
        }
    }
    d
}

/// Evaluates polynomial `t` at time `t`.
pub fn eval(traj: &Trajectory, t: f64) -> f64 {
    traj.eval(t)
}

/// Re-centres `traj` at `new_origin`.
pub fn advance(traj: &Trajectory, new_origin: f64) -> Trajectory {
    traj.advance(new_origin)
}

/// Direction filter for crossing searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

/// Polynomial in relative time with its effective degree.
#[derive(Clone, Copy, Debug)]
struct Reduced {
    c: [f64; MAX_COEFFS],
    deg: usize,
}

impl Reduced {
    /// Drops negligible leading terms. `scale` is the time scale over which
    /// term magnitudes are compared.
    fn new(coeffs: &[f64], scale: f64) -> Self {
        let mut c = [0.0; MAX_COEFFS];
        c[..coeffs.len()].copy_from_slice(coeffs);
        let s = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
        let mut mags = [0.0; MAX_COEFFS];
        let mut p = 1.0;
        for k in 0..MAX_COEFFS {
            mags[k] = c[k].abs() * p;
            p *= s;
        }
        let norm = mags.iter().cloned().fold(0.0, f64::max);
        let mut deg = c.iter().rposition(|&v| v != 0.0).unwrap_or(0);
        while deg > 0 && mags[deg] < DEGREE_DEMOTION_EPS * norm {
            c[deg] = 0.0;
            deg -= 1;
        }
        Self { c, deg }
    }

    /// Keeps every non-zero coefficient.
    fn exact(coeffs: &[f64]) -> Self {
        let mut c = [0.0; MAX_COEFFS];
        c[..coeffs.len()].copy_from_slice(coeffs);
        let deg = c.iter().rposition(|&v| v != 0.0).unwrap_or(0);
        Self { c, deg }
    }

    fn eval(&self, t: f64) -> f64 {
        horner(&self.c[..=self.deg], t)
    }

    fn deriv(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..=self.deg).rev() {
            acc = acc * t + k as f64 * self.c[k];
        }
        acc
    }

    fn second_deriv(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in (2..=self.deg).rev() {
            acc = acc * t + (k * (k - 1)) as f64 * self.c[k];
        }
        acc
    }

    fn term_mag(&self, t: f64) -> f64 {
        let t = t.abs();
        let mut p = 1.0;
        let mut s = 0.0;
        for k in 0..=self.deg {
            s += self.c[k].abs() * p;
            p *= t;
        }
        s
    }

    /// Fujiwara bound on the magnitude of every root.
    fn root_bound(&self) -> f64 {
        let n = self.deg;
        if n == 0 {
            return 0.0;
        }
        let lead = self.c[n].abs();
        let mut b: f64 = 0.0;
        for k in 1..=n {
            let mut r = self.c[n - k].abs() / lead;
            if k == n {
                r *= 0.5;
            }
            b = b.max(match k {
                1 => r,
                2 => r.sqrt(),
                _ => r.cbrt(),
            });
        }
        2.0 * b
    }

    /// Sign just after `τ = 0`, taken from the first non-zero coefficient.
    fn sign_after_zero(&self) -> f64 {
        self.c[..=self.deg]
            .iter()
            .find(|&&v| v != 0.0)
            .map(|v| v.signum())
            .unwrap_or(0.0)
    }
}

/// Real roots of `a t² + b t + c` (a ≠ 0), ascending, or `None` when the
/// discriminant is negative.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let qv = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (r1, r2) = if qv == 0.0 {
        (0.0, 0.0)
    } else {
        (qv / a, c / qv)
    };
    Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// Sign-changing roots in `(0, hi]` of a polynomial that is monotone on each
/// of the returned subintervals, plus its critical points in that range.
struct RootScan {
    roots: ArrayVec<f64, 3>,
    critical: ArrayVec<f64, 2>,
}

fn scan(p: &Reduced, hi: f64) -> RootScan {
    let mut roots = ArrayVec::new();
    let mut critical = ArrayVec::new();
    if !(hi > 0.0) {
        return RootScan { roots, critical };
    }
    let hi = hi.min(p.root_bound().max(f64::MIN_POSITIVE));
    match p.deg {
        0 => {}
        1 => {
            let r = -p.c[0] / p.c[1];
            if r > 0.0 && r <= hi {
                roots.push(r);
            }
        }
        2 => {
            let v = -p.c[1] / (2.0 * p.c[2]);
            if v > 0.0 && v <= hi {
                critical.push(v);
            }
            if let Some((r1, r2)) = quadratic_roots(p.c[2], p.c[1], p.c[0]) {
                // a double root is a touch, reported through `critical`
                if r1 != r2 {
                    for r in [r1, r2] {
                        if r > 0.0 && r <= hi {
                            roots.push(polish(p, r));
                        }
                    }
                }
            }
        }
        _ => {
            let mut cuts: ArrayVec<f64, 5> = ArrayVec::new();
            cuts.push(0.0);
            if let Some((c1, c2)) = quadratic_roots(3.0 * p.c[3], 2.0 * p.c[2], p.c[1]) {
                for c in [c1, c2] {
                    if c > 0.0 && c < hi && cuts.last().is_none_or(|&l| c > l) {
                        cuts.push(c);
                        critical.push(c);
                    }
                }
            }
            // splitting at the inflection point makes each piece convex or concave
            let infl = -p.c[2] / (3.0 * p.c[3]);
            if infl > 0.0 && infl < hi && !cuts.contains(&infl) {
                let pos = cuts.partition_point(|&c| c < infl);
                cuts.insert(pos, infl);
            }
            cuts.push(hi);
            let vals: ArrayVec<f64, 5> = cuts.iter().map(|&c| p.eval(c)).collect();
            for k in 1..cuts.len() {
                let (f_lo, f_b) = (vals[k - 1], vals[k]);
                if f_b == 0.0 {
                    // exact zero on a cut: a root only if the sign really changes
                    let after = vals.get(k + 1).copied().unwrap_or(-f_lo);
                    if f_lo != 0.0 && (f_lo < 0.0) != (after < 0.0) {
                        roots.push(cuts[k]);
                    }
                } else if f_lo != 0.0 && (f_lo < 0.0) != (f_b < 0.0) {
                    roots.push(bracketed_root(p, cuts[k - 1], cuts[k], f_lo, f_b));
                }
            }
        }
    }
    RootScan { roots, critical }
}

/// One Newton correction, kept only when it improves the residual.
fn polish(p: &Reduced, r: f64) -> f64 {
    let f = p.eval(r);
    let d = p.deriv(r);
    if d == 0.0 || f == 0.0 {
        return r;
    }
    let n = r - f / d;
    if n.is_finite() && p.eval(n).abs() < f.abs() {
        n
    } else {
        r
    }
}

/// Safeguarded Newton/bisection on a bracket with a sign change, started
/// from the false-position point.
fn bracketed_root(p: &Reduced, mut lo: f64, mut hi: f64, f_lo: f64, f_hi: f64) -> f64 {
    let neg_lo = f_lo < 0.0;
    // Newton from the endpoint where f·f'' > 0 approaches the root monotonically
    let mid = 0.5 * (lo + hi);
    let curv = p.second_deriv(mid);
    let mut x = if curv == 0.0 {
        lo + (hi - lo) * (f_lo / (f_lo - f_hi))
    } else if (f_lo > 0.0) == (curv > 0.0) {
        lo - f_lo / p.deriv(lo)
    } else {
        hi - f_hi / p.deriv(hi)
    };
    if !(x > lo && x < hi) {
        x = lo + (hi - lo) * (f_lo / (f_lo - f_hi));
        if !(x > lo && x < hi) {
            x = mid;
        }
    }
    for _ in 0..MAX_ROOT_ITERS {
        let fx = p.eval(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == neg_lo {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            break;
        }
        let d = p.deriv(x);
        let step = fx / d;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            return x;
        }
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Removes roots at exactly `τ = 0` by dividing out powers of `τ`.
fn strip_zero_roots(coeffs: &[f64]) -> ArrayVec<f64, MAX_COEFFS> {
    let start = coeffs.iter().position(|&v| v != 0.0).unwrap_or(coeffs.len());
    coeffs[start..].iter().copied().collect()
}

/// Smallest real root in `(0, horizon]` of `Σ coeffs[k] τ^k` (degree ≤ 3),
/// including tangential roots.
pub fn min_positive_root(coeffs: &[f64], horizon: f64) -> Option<f64> {
    smallest_root(coeffs, horizon, true)
}

/// [`min_positive_root`] without degree demotion, for equations whose small
/// leading coefficient is meaningful rather than rounding noise.
pub fn min_positive_root_exact(coeffs: &[f64], horizon: f64) -> Option<f64> {
    smallest_root(coeffs, horizon, false)
}

fn smallest_root(coeffs: &[f64], horizon: f64, demote: bool) -> Option<f64> {
    assert!(coeffs.len() <= MAX_COEFFS, "degree above 3");
    let stripped = strip_zero_roots(coeffs);
    if stripped.is_empty() {
        return None;
    }
    let p = if demote {
        Reduced::new(&stripped, horizon)
    } else {
        Reduced::exact(&stripped)
    };
    let s = scan(&p, horizon);
    let touch = s
        .critical
        .iter()
        .copied()
        .filter(|&c| p.eval(c).abs() <= TOUCH_REL_TOL * p.term_mag(c));
    s.roots.iter().copied().chain(touch).filter(|&r| r <= horizon).reduce(f64::min)
}

/// First time in `(0, horizon]` at which the polynomial crosses zero in the
/// requested direction. Tangential contact is not a crossing.
pub fn next_crossing(coeffs: &[f64], horizon: f64, dir: Crossing) -> Option<f64> {
    let stripped = strip_zero_roots(coeffs);
    if stripped.is_empty() {
        return None;
    }
    let p = Reduced::new(&stripped, horizon);
    let s = scan(&p, horizon);
    let mut sign = p.sign_after_zero();
    let mut roots = s.roots;
    roots.sort_by(|a, b| a.total_cmp(b));
    for r in roots {
        if r > horizon {
            break;
        }
        let rising = sign < 0.0;
        let hit = match dir {
            Crossing::Any => true,
            Crossing::Rising => rising,
            Crossing::Falling => !rising,
        };
        if hit {
            return Some(r);
        }
        sign = -sign;
    }
    None
}

/// First time in `(0, horizon]` at which `p` reaches zero, by a sign change or
/// by a tangential approach closer than `tol`.
fn first_zero_reach(p: &[f64; MAX_COEFFS], tol: f64, horizon: f64) -> Option<f64> {
    if p[0].abs() <= tol {
        return None;
    }
    let red = Reduced::new(p, horizon);
    let s = scan(&red, horizon);
    let touch = s.critical.iter().copied().filter(|&c| red.eval(c).abs() <= tol);
    s.roots.iter().copied().chain(touch).filter(|&r| r <= horizon).reduce(f64::min)
}

/// Smallest `t > x.origin` with `|x(t) - q(t)| = band`; with
/// `include_zero_crossing`, the time `x` meets `q` is also a candidate and
/// the earliest is returned.
pub fn band_crossing_time(
    x: &Trajectory,
    q: &Trajectory,
    band: f64,
    include_zero_crossing: bool,
) -> Option<f64> {
    band_crossing_within(x, q, band, include_zero_crossing, f64::INFINITY).map(|tau| x.origin + tau)
}

/// Like [`band_crossing_time`] but returns the offset from `x.origin` and
/// ignores crossings beyond `horizon`.
pub fn band_crossing_within(
    x: &Trajectory,
    q: &Trajectory,
    band: f64,
    include_zero_crossing: bool,
    horizon: f64,
) -> Option<f64> {
    debug_assert!(band > 0.0);
    let p = x.sub_aligned(q);
    let roundoff = 8.0 * f64::EPSILON * (x.coeffs[0].abs() + q.advance(x.origin).coeffs[0].abs());
    let limit = band * (1.0 + BAND_REL_SLACK) + roundoff;
    if p.coeffs[0].abs() >= limit {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for sign in [1.0, -1.0] {
        let mut c = p.coeffs;
        c[0] -= sign * limit;
        let dir = if sign > 0.0 { Crossing::Rising } else { Crossing::Falling };
        if let Some(t) = next_crossing(&c, horizon, dir) {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    if include_zero_crossing {
        let zero_tol = ZERO_REACH_REL_TOL * band + roundoff;
        if let Some(t) = first_zero_reach(&p.coeffs, zero_tol, horizon) {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    best
}
