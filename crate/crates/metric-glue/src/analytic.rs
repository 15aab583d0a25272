//! Deterministic exponent theory: the recursive moment-exponent maps, their
//! thresholds, the closed-form dimension value, and the lower-bound
//! exponent it maximizes.

use crate::error::{Error, Result};

/// Exponent triple: scalings decay like n^-alpha, weights like n^-beta,
/// blocks have ball-mass dimension d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionParams {
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
}

impl DimensionParams {
    pub fn new(alpha: f64, beta: f64, d: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param(format!("alpha must be positive, got {alpha}")));
        }
        if !beta.is_finite() {
            return Err(Error::param(format!("beta must be finite, got {beta}")));
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::param(format!("d must be nonnegative, got {d}")));
        }
        Ok(DimensionParams { alpha, beta, d })
    }

    /// Whether the nontrivial branch of the dimension formula applies.
    pub fn formula_regime(&self) -> bool {
        self.beta > 1.0 && self.alpha * self.d < 1.0
    }
}

/// One step of the exponent recursion:
/// F(s, x) = alpha(-d + beta d - beta s - d x) / (1 + x + alpha s - alpha d).
pub fn big_f(p: &DimensionParams, s: f64, x: f64) -> f64 {
    let den = 1.0 + x + p.alpha * s - p.alpha * p.d;
    assert!(den.abs() > 1e-12, "exponent recursion hit its pole at s={s}, x={x}");
    p.alpha * (-p.d + p.beta * p.d - p.beta * s - p.d * x) / den
}

/// f_i(s): i-1 applications of F on top of f_1(s) = -alpha s.
pub fn f_i(p: &DimensionParams, i: usize, s: f64) -> f64 {
    assert!(i >= 1, "the recursion starts at i = 1");
    let mut x = -p.alpha * s;
    for _ in 1..i {
        x = big_f(p, s, x);
    }
    x
}

/// Discriminant of the fixed-point equation x = F(s, x).
pub fn discriminant(p: &DimensionParams, s: f64) -> f64 {
    let (a, b, d) = (p.alpha, p.beta, p.d);
    let t = 1.0 + a * s;
    t * t - 4.0 * a * (d - b * d + b * s)
}

/// Upper fixed point of x = F(s, x). Defined where the discriminant is
/// nonnegative; tiny negative values from rounding are clamped.
pub fn f_infinity(p: &DimensionParams, s: f64) -> Result<f64> {
    let disc = discriminant(p, s);
    if disc < -1e-12 {
        return Err(Error::numerics(format!(
            "no real fixed point at s = {s} (discriminant {disc})"
        )));
    }
    Ok((-(1.0 + p.alpha * s) + disc.max(0.0).sqrt()) / 2.0)
}

fn bisect<H: Fn(f64) -> f64>(h: H, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (h(lo), h(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::numerics(format!(
            "no sign change on [{lo}, {hi}]: h = {flo}, {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = h(mid);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Successive thresholds s_i: s_1 = 1/alpha, and s_{i+1} is the unique root
/// of f_{i+1}(s) = -1 on [d, s_i]. The sequence decreases to the dimension
/// value at roughly quadratic-in-1/i speed.
#[derive(Clone, Debug)]
pub struct FiIteration {
    pub thresholds: Vec<f64>,
    pub converged: bool,
}

pub fn iterate_fi(p: &DimensionParams, max_iter: usize, tol: f64) -> Result<FiIteration> {
    if !p.formula_regime() {
        return Err(Error::unsupported(
            "threshold iteration needs beta > 1 and alpha d < 1",
        ));
    }
    if max_iter == 0 {
        return Err(Error::param("need at least one iteration"));
    }
    let mut thresholds = vec![1.0 / p.alpha];
    let mut converged = false;
    for i in 1..max_iter {
        let prev = *thresholds.last().unwrap();
        let root = bisect(|s| f_i(p, i + 1, s) + 1.0, p.d, prev, 1e-13)?;
        thresholds.push(root);
        if prev - root < tol {
            converged = true;
            break;
        }
    }
    Ok(FiIteration { thresholds, converged })
}

/// Closed-form dimension of the leaf set:
/// (2 beta - 1 - 2 sqrt((beta-1)(beta - alpha d))) / alpha when beta > 1 and
/// alpha d < 1, and 1/alpha otherwise.
pub fn dim_formula(p: &DimensionParams) -> f64 {
    if p.formula_regime() {
        let root = ((p.beta - 1.0) * (p.beta - p.alpha * p.d)).sqrt();
        (2.0 * p.beta - 1.0 - 2.0 * root) / p.alpha
    } else {
        1.0 / p.alpha
    }
}

/// Leading coefficient of the threshold-sequence gap: s_i - s_infinity
/// shrinks like this value over i^2, because the fixed-point map is
/// parabolic at the limit and the iterates crawl through the tangency.
pub fn threshold_gap_scale(p: &DimensionParams) -> Result<f64> {
    if !p.formula_regime() {
        return Err(Error::unsupported("gap scale needs beta > 1 and alpha d < 1"));
    }
    let x = ((p.beta - 1.0) * (p.beta - p.alpha * p.d)).sqrt() - p.beta;
    let m = 1.0 + x + p.alpha * (dim_formula(p) - p.d);
    Ok(std::f64::consts::PI.powi(2) * m * m / (p.alpha * (p.beta + x)))
}

/// Second-stage exponent ratio (beta - alpha d) / (1 - alpha d); the
/// recursion gamma_{i+1}(s) = (beta - alpha d)/(f_i(s) + 1 - alpha d +
/// alpha s) is constant in s at i = 1.
pub fn gamma2(p: &DimensionParams) -> f64 {
    (p.beta - p.alpha * p.d) / (1.0 - p.alpha * p.d)
}

pub fn gamma_next(p: &DimensionParams, i: usize, s: f64) -> f64 {
    (p.beta - p.alpha * p.d) / (f_i(p, i, s) + 1.0 - p.alpha * p.d + p.alpha * s)
}

/// Limit ratio (beta - alpha d + sqrt((beta-1)(beta - alpha d)))/(1 - alpha d).
pub fn gamma_bar(p: &DimensionParams) -> Result<f64> {
    if !p.formula_regime() {
        return Err(Error::unsupported("limit ratio needs beta > 1 and alpha d < 1"));
    }
    let root = ((p.beta - 1.0) * (p.beta - p.alpha * p.d)).sqrt();
    Ok((p.beta - p.alpha * p.d + root) / (1.0 - p.alpha * p.d))
}

/// Lower-bound exponent g(gamma) = d - (gamma alpha d - alpha d + beta -
/// gamma)/(alpha gamma (gamma - 1)), maximized at `gamma_bar` where it
/// reaches the dimension value.
pub fn lower_bound_exponent(p: &DimensionParams, gamma: f64) -> f64 {
    let num = gamma * p.alpha * p.d - p.alpha * p.d + p.beta - gamma;
    p.d - num / (p.alpha * gamma * (gamma - 1.0))
}

/// Numeric maximization of g; returns (argmax, max).
///
/// Golden section brackets the peak, then the argmax is pinned by bisecting
/// the sign of the derivative numerator. Near the degenerate edge alpha d = 1
/// the peak is so flat (curvature ~ 1e-9) that value comparisons cannot
/// separate points 1e-6 apart in f64, while the derivative numerator stays
/// well conditioned there.
pub fn maximize_g(p: &DimensionParams) -> Result<(f64, f64)> {
    if !p.formula_regime() {
        return Err(Error::unsupported("lower-bound sweep needs beta > 1 and alpha d < 1"));
    }
    let g = |x: f64| lower_bound_exponent(p, x);
    // Numerator of g'(x): g = d - N/(alpha x (x-1)) with N linear in x, so
    // sign(g') = sign(-(1 - alpha d) x^2 + (beta - alpha d)(2x - 1)).
    let v = p.beta - p.alpha * p.d;
    let dnum = |x: f64| -(1.0 - p.alpha * p.d) * x * x + v * (2.0 * x - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-9, 4.0 * gamma_bar(p)? + 10.0);
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv * (hi - lo);
    let mut x2 = lo + inv * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..60 {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv * (hi - lo);
            g1 = g(x1);
        }
        if hi - lo < 1e-3 {
            break;
        }
    }
    if dnum(lo) > 0.0 && dnum(hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dnum(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, g(x)))
}

/// Dimension over a parameter grid: alpha = i/20 for i in 1..=19, beta =
/// j/10 for j in 1..=30, at fixed block dimension d. Rows (alpha, beta, dim).
pub fn surface(d: f64) -> Vec<(f64, f64, f64)> {
    let mut rows = Vec::with_capacity(19 * 30);
    for i in 1..=19u32 {
        for j in 1..=30u32 {
            let alpha = i as f64 / 20.0;
            let beta = j as f64 / 10.0;
            let p = DimensionParams { alpha, beta, d };
            rows.push((alpha, beta, dim_formula(&p)));
        }
    }
    rows
}
