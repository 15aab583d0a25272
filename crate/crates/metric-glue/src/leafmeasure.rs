//! Recursive generations of regular blocks and the measure they support.
//!
//! Generation k occupies the index window from `n_k` to `n_k^(1+h(n_k))`
//! with `n_{k+1} = ceil(n_k^gamma)` and `h(n) = 1/ln ln(n + e^e)`. A block
//! joins the generation when its content passes the regularity profile,
//! its attach point lands in the far half of a generation-(k-1) member,
//! and its weight and scaling clear the window thresholds. The weighted
//! far-half mass carried by the members contracts by a computable rate per
//! generation, and ball masses around member points probe the dimension of
//! the limiting support.

use crate::blocks::{phi, Block, BlockLaw};
use crate::error::{Error, Result};
use crate::glue::{GluedStructure, PointRef};
use crate::params::{power_ratio_sum_wide, SequenceMode, SequenceSpec};
use crate::stats::KahanSum;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

/// Outcome of the per-block regularity test.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub passes: bool,
    pub failures: Vec<String>,
}

/// Tests one block against the regularity profile with constant `c`.
///
/// Every block must keep its height inside `[1/c, c]`. For `d > 0` the far
/// half must carry mass at least `1/c` and every probe point must satisfy
/// the two-sided ball sandwich `r^(d+phi) <= nu(B(x,r)) <= r^(d-phi)` for
/// radii up to `1/c`. For `d = 0` the block must instead be atomic with at
/// most `c` atoms, none lighter than `1/c`.
pub fn check_property(block: &Block, d: f64, c: f64) -> Result<PropertyReport> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::param(format!("constant c = {c} must be finite and > 1")));
    }
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::param(format!("dimension d = {d} must be finite and >= 0")));
    }
    let mut failures = Vec::new();
    let height = block.height();
    if height < 1.0 / c || height > c {
        failures.push(format!("height {height:.6} outside [{:.6}, {c:.6}]", 1.0 / c));
    }
    if d == 0.0 {
        match block.atom_count() {
            Some(k) => {
                if k as f64 > c {
                    failures.push(format!("{k} atoms exceed the cap {c}"));
                }
                let lightest = block.min_atom_mass().unwrap_or(0.0);
                if lightest < 1.0 / c {
                    failures
                        .push(format!("lightest atom {lightest:.6} below {:.6}", 1.0 / c));
                }
            }
            None => failures.push("atomic profile applied to a continuum block".into()),
        }
    } else {
        let far = block.upper_half_mass();
        if far < 1.0 / c {
            failures.push(format!("far-half mass {far:.6} below {:.6}", 1.0 / c));
        }
        let r_top = 1.0 / c;
        let r_bot = (r_top / 256.0).min(1e-3);
        let steps = 24usize;
        let centers = block.probe_grid(1.0 / 64.0);
        for j in 0..steps {
            let t = j as f64 / (steps - 1) as f64;
            let r = r_top * (r_bot / r_top).powf(t);
            let lo = r.powf(d + phi(d, r));
            let hi = r.powf(d - phi(d, r));
            for &x in &centers {
                let m = block.ball_mass(x, r);
                if m < lo * (1.0 - 1e-9) {
                    failures.push(format!("ball mass {m:.3e} below r^(d+phi) at r = {r:.3e}"));
                } else if m > hi * (1.0 + 1e-9) {
                    failures.push(format!("ball mass {m:.3e} above r^(d-phi) at r = {r:.3e}"));
                }
            }
        }
    }
    Ok(PropertyReport { passes: failures.is_empty(), failures })
}

/// Pass probability of the content law under the profile with constant
/// `c`, paired with the mean far-half mass of a passing block. Exact for
/// every built-in law.
pub fn pass_moment(law: &BlockLaw, c: f64) -> Result<(f64, f64)> {
    if law.is_deterministic() {
        let mut scratch = ChaCha8Rng::seed_from_u64(0);
        let block = law.sample(&mut scratch);
        let report = check_property(&block, law.dimension(), c)?;
        return Ok(if report.passes { (1.0, block.upper_half_mass()) } else { (0.0, 0.0) });
    }
    match *law {
        BlockLaw::FiniteRandom { k } => {
            if !(c > 1.0) || !c.is_finite() {
                return Err(Error::param(format!("constant c = {c} must be finite and > 1")));
            }
            if k as f64 > c {
                return Ok((0.0, 0.0));
            }
            // Height is u_root + max of the other k-1 arms with every arm
            // uniform on [1/2, 3/2], so it always clears 1/c and the pass
            // event is height <= c. The far half holds all non-root atoms.
            let (a, b) = (c - 1.5, c - 0.5);
            let mut p = (b - a.max(1.5)).max(0.0);
            let (lo, hi) = (a.max(0.5), b.min(1.5));
            if hi > lo {
                let e = k as i32;
                p += ((hi - 0.5).powi(e) - (lo - 0.5).powi(e)) / k as f64;
            }
            let p = p.clamp(0.0, 1.0);
            let far = (k as f64 - 1.0) / k as f64;
            Ok(if p > 0.0 { (p, far) } else { (0.0, 0.0) })
        }
        _ => Err(Error::unsupported(format!("no pass moment for {law}"))),
    }
}

/// Window stretch exponent `h(n) = 1/ln ln(n + e^e)`, strictly decreasing
/// and 1 at n = 0.
pub fn window_growth(n: f64) -> f64 {
    1.0 / (n + std::f64::consts::E.exp()).ln().ln()
}

fn snap_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Knobs for the nested-generation construction. `gamma` escalates the
/// window base from one generation to the next; `eta` and `epsilon` shape
/// the admissible exponent budget; `c` is the regularity constant. `depth`
/// is the index of the deepest generation built, with generation 0 based
/// at `n0`.
#[derive(Clone, Debug)]
pub struct GenerationParams {
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub c: f64,
    pub n0: usize,
    pub depth: usize,
}

impl GenerationParams {
    /// Checks the exponent ordering against the sequence exponents and the
    /// block dimension.
    pub fn validate(&self, alpha: f64, beta: f64, d: f64) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("c", self.c),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        if !(alpha > 0.0) || !(beta > 1.0) || alpha * d >= 1.0 {
            return Err(Error::param(format!(
                "generations need alpha > 0, beta > 1, alpha*d < 1; got ({alpha}, {beta}, {d})"
            )));
        }
        if !(self.c > 1.0) {
            return Err(Error::param(format!("c = {} must exceed 1", self.c)));
        }
        if self.n0 < 2 {
            return Err(Error::param("n0 must be at least 2"));
        }
        if d > 0.0 && !(self.eta > 0.0 && self.eta < 1.0 / d) {
            return Err(Error::param(format!(
                "eta = {} outside (0, {})",
                self.eta,
                1.0 / d
            )));
        }
        if d == 0.0 && !(self.eta > 0.0) {
            return Err(Error::param(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 - self.eta * d) {
            return Err(Error::param(format!(
                "epsilon = {} outside (0, {})",
                self.epsilon,
                1.0 - self.eta * d
            )));
        }
        let floor = (alpha / self.eta).max((beta - alpha * d) / (1.0 - self.eta * d - self.epsilon));
        if !(self.gamma > floor) {
            return Err(Error::param(format!(
                "gamma = {} must exceed {floor:.6}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Lighter check for the streamed window rates, which only consume the
    /// base escalation and the threshold filter: the eta budget constrains
    /// realized censuses, not the weight calculus.
    pub fn validate_windows(&self, alpha: f64, beta: f64) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("epsilon", self.epsilon), ("c", self.c)] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        if !(alpha > 0.0) || !(beta > 1.0) {
            return Err(Error::param(format!(
                "window rates need alpha > 0 and beta > 1; got ({alpha}, {beta})"
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::param(format!("gamma = {} must exceed 1", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        if !(self.c > 1.0) {
            return Err(Error::param(format!("c = {} must exceed 1", self.c)));
        }
        if self.n0 < 2 {
            return Err(Error::param("n0 must be at least 2"));
        }
        Ok(())
    }
}

/// Window bases `n_0, ceil(n_0^gamma), ...` through generation `depth`,
/// kept in f64 so deep schedules can leave addressable range.
pub fn schedule(params: &GenerationParams) -> Vec<f64> {
    let mut bases = vec![params.n0 as f64];
    for _ in 0..params.depth {
        let prev = *bases.last().unwrap();
        bases.push(snap_ceil(prev.powf(params.gamma)));
    }
    bases
}

/// Largest integer index in `[base, cap]` clearing the base-anchored
/// thresholds, for power sequences. `None` when the base itself misses.
fn good_top(spec: &SequenceSpec, eps: f64, base: f64, cap: f64) -> Option<f64> {
    let w_thresh = base.powf(-(spec.beta + eps));
    let l_thresh = base.powf(-(spec.alpha + eps));
    let pass = |i: f64| {
        spec.weight_scale * i.powf(-spec.beta) >= w_thresh
            && spec.lambda_scale * i.powf(-spec.alpha) >= l_thresh
    };
    if !pass(base) {
        return None;
    }
    let i_w = (spec.weight_scale * base.powf(spec.beta + eps)).powf(1.0 / spec.beta);
    let i_l = (spec.lambda_scale * base.powf(spec.alpha + eps)).powf(1.0 / spec.alpha);
    let mut top = cap.min(i_w).min(i_l).floor().max(base);
    // The closed form carries fp slack; settle the boundary literally.
    let mut guard = 0;
    while top > base && !pass(top) && guard < 64 {
        top -= 1.0;
        guard += 1;
    }
    while top + 1.0 <= cap && top + 1.0 > top && pass(top + 1.0) && guard < 64 {
        top += 1.0;
        guard += 1;
    }
    Some(top)
}

/// Last index the generation-k scan touches: the thresholded window top in
/// power mode, the raw window cap in table mode (tables can be jagged, so
/// every index must be inspected). A value below `base` encodes an empty
/// window.
fn effective_top(spec: &SequenceSpec, eps: f64, base: f64) -> Result<f64> {
    let cap = base.powf(1.0 + window_growth(base));
    if !cap.is_finite() {
        return Err(Error::numerics(format!("window cap overflows at base {base:e}")));
    }
    match spec.mode {
        SequenceMode::ExactPower => Ok(good_top(spec, eps, base, cap).unwrap_or(base - 1.0)),
        SequenceMode::UserTable { .. } => Ok(cap.floor()),
    }
}

/// Realized blocks `build_generations` will inspect for these knobs.
pub fn required_blocks(spec: &SequenceSpec, params: &GenerationParams) -> Result<usize> {
    let mut need = params.n0 as f64;
    for &base in &schedule(params) {
        need = need.max(effective_top(spec, params.epsilon, base)?);
    }
    if need > 9e15 {
        return Err(Error::param(format!(
            "schedule needs {need:e} realized blocks; build fewer generations"
        )));
    }
    Ok(need as usize)
}

/// One realized generation.
#[derive(Clone, Debug)]
pub struct Generation {
    pub k: usize,
    pub base: usize,
    /// Scanned candidate range (inclusive); empty when hi < lo.
    pub window: (usize, usize),
    pub members: Vec<usize>,
    /// Weighted far-half mass carried by the members.
    pub mass: f64,
    /// Expected mass transfer rate onto any fixed earlier region.
    pub attach_rate: f64,
    /// Smallest member separation scale `lambda_i * height_i / 2`.
    pub min_gap: f64,
    /// `min_gap` capped by the members' smallest scaling over `ln base`.
    pub resolution: f64,
}

/// Runs the generation recursion over a realized structure.
pub fn build_generations(
    g: &GluedStructure,
    params: &GenerationParams,
) -> Result<Vec<Generation>> {
    let spec = &g.seq.spec;
    let d = g.law.dimension();
    params.validate(spec.alpha, spec.beta, d)?;
    let (p, m) = pass_moment(&g.law, params.c)?;
    let deterministic = if g.law.is_deterministic() {
        let b = g.block(1);
        let report = check_property(b, d, params.c)?;
        Some((report.passes, b.upper_half_mass(), b.height()))
    } else {
        None
    };
    let mut out: Vec<Generation> = Vec::new();
    for (k, &base_f) in schedule(params).iter().enumerate() {
        let top_f = effective_top(spec, params.epsilon, base_f)?;
        if base_f > 9e15 || top_f > g.n_blocks() as f64 {
            return Err(Error::param(format!(
                "generation {k} scans up to {top_f:e}, structure holds {}",
                g.n_blocks()
            )));
        }
        let base = base_f as usize;
        let hi = if top_f < base_f { base - 1 } else { top_f as usize };
        let w_thresh = base_f.powf(-(spec.beta + params.epsilon));
        let l_thresh = base_f.powf(-(spec.alpha + params.epsilon));
        let mut members = Vec::new();
        let mut mass = KahanSum::new();
        let mut rate = KahanSum::new();
        let mut gap = f64::INFINITY;
        let mut min_lambda = f64::INFINITY;
        for i in base..=hi {
            if g.seq.weight(i) < w_thresh || g.seq.lambda(i) < l_thresh {
                continue;
            }
            rate.add(g.seq.weight(i) / g.seq.prefix(i - 1));
            let (passes, far_mass, height) = match deterministic {
                Some(t) => t,
                None => {
                    let b = g.block(i);
                    let report = check_property(b, d, params.c)?;
                    (report.passes, b.upper_half_mass(), b.height())
                }
            };
            if !passes {
                continue;
            }
            if k > 0 {
                let parent = g.parent(i);
                if out[k - 1].members.binary_search(&parent).is_err() {
                    continue;
                }
                let pb = g.block(parent);
                let at = g.attach_point(i);
                if !(pb.distance(pb.root(), at.coord) > pb.height() / 2.0) {
                    continue;
                }
            }
            members.push(i);
            mass.add(g.seq.weight(i) * far_mass);
            gap = gap.min(g.seq.lambda(i) * height / 2.0);
            min_lambda = min_lambda.min(g.seq.lambda(i));
        }
        let (min_gap, resolution) = if members.is_empty() {
            (0.0, 0.0)
        } else {
            (gap, gap.min(min_lambda / base_f.ln()))
        };
        out.push(Generation {
            k,
            base,
            window: (base, hi),
            members,
            mass: mass.value(),
            attach_rate: p * m * rate.value(),
            min_gap,
            resolution,
        });
    }
    Ok(out)
}

/// A fixed region of the glued structure realized before a window opens.
#[derive(Clone, Copy, Debug)]
pub enum Region {
    /// The far half of one earlier block.
    FarHalf { block: usize },
    /// One earlier block in full.
    WholeBlock { block: usize },
}

impl Region {
    fn block(&self) -> usize {
        match *self {
            Region::FarHalf { block } | Region::WholeBlock { block } => block,
        }
    }
}

/// Transfer functional of one window against a fixed region, with its
/// exact conditional expectation.
#[derive(Clone, Debug)]
pub struct ChiCheck {
    /// Weighted far-half mass of passing window blocks attached in the region.
    pub observed: f64,
    /// `attach_rate * region_mass`, exact given the region.
    pub expected: f64,
    pub attach_rate: f64,
    pub region_mass: f64,
}

/// Evaluates the window-k transfer functional of `region`. The region
/// must be carried by a block realized before the window opens; then the
/// mean of `observed` over replicas is exactly `expected`.
pub fn chi_mass(
    g: &GluedStructure,
    params: &GenerationParams,
    k: usize,
    region: Region,
) -> Result<ChiCheck> {
    let spec = &g.seq.spec;
    let d = g.law.dimension();
    params.validate(spec.alpha, spec.beta, d)?;
    if k > params.depth {
        return Err(Error::param(format!("window {k} beyond depth {}", params.depth)));
    }
    let base_f = schedule(params)[k];
    let top_f = effective_top(spec, params.epsilon, base_f)?;
    if base_f > 9e15 || top_f > g.n_blocks() as f64 {
        return Err(Error::param(format!(
            "window {k} scans up to {top_f:e}, structure holds {}",
            g.n_blocks()
        )));
    }
    let base = base_f as usize;
    let hi = if top_f < base_f { base - 1 } else { top_f as usize };
    let b = region.block();
    if b < 1 || b >= base {
        return Err(Error::param(format!(
            "region block {b} must be realized before the window at {base}"
        )));
    }
    let rb = g.block(b);
    let region_mass = g.seq.weight(b)
        * match region {
            Region::FarHalf { .. } => rb.upper_half_mass(),
            Region::WholeBlock { .. } => rb.total_mass(),
        };
    let (p, m) = pass_moment(&g.law, params.c)?;
    let deterministic = if g.law.is_deterministic() {
        let blk = g.block(1);
        let report = check_property(blk, d, params.c)?;
        Some((report.passes, blk.upper_half_mass()))
    } else {
        None
    };
    let w_thresh = base_f.powf(-(spec.beta + params.epsilon));
    let l_thresh = base_f.powf(-(spec.alpha + params.epsilon));
    let mut rate = KahanSum::new();
    let mut observed = KahanSum::new();
    for i in base..=hi {
        if g.seq.weight(i) < w_thresh || g.seq.lambda(i) < l_thresh {
            continue;
        }
        rate.add(g.seq.weight(i) / g.seq.prefix(i - 1));
        let (passes, far_mass) = match deterministic {
            Some(t) => t,
            None => {
                let blk = g.block(i);
                let report = check_property(blk, d, params.c)?;
                (report.passes, blk.upper_half_mass())
            }
        };
        if !passes || g.parent(i) != b {
            continue;
        }
        let inside = match region {
            Region::WholeBlock { .. } => true,
            Region::FarHalf { .. } => {
                let at = g.attach_point(i);
                rb.distance(rb.root(), at.coord) > rb.height() / 2.0
            }
        };
        if inside {
            observed.add(g.seq.weight(i) * far_mass);
        }
    }
    let attach_rate = p * m * rate.value();
    Ok(ChiCheck {
        observed: observed.value(),
        expected: attach_rate * region_mass,
        attach_rate,
        region_mass,
    })
}

/// One streamed window rate.
#[derive(Clone, Debug)]
pub struct AttachRateRow {
    pub k: usize,
    pub base: f64,
    /// Thresholded window (inclusive, integer-valued); empty when hi < lo.
    pub window: (f64, f64),
    pub rate: f64,
}

/// Window rates straight from the power-law exponents, with no realized
/// structure. Deep schedules run far past addressable range.
pub fn attach_rate_schedule(
    spec: &SequenceSpec,
    law: &BlockLaw,
    params: &GenerationParams,
) -> Result<Vec<AttachRateRow>> {
    if let SequenceMode::UserTable { .. } = spec.mode {
        return Err(Error::unsupported(
            "streamed window rates require exact-power sequences",
        ));
    }
    params.validate_windows(spec.alpha, spec.beta)?;
    let (p, m) = pass_moment(law, params.c)?;
    let mut rows = Vec::new();
    for (k, &base) in schedule(params).iter().enumerate() {
        let cap = base.powf(1.0 + window_growth(base));
        if !cap.is_finite() {
            return Err(Error::numerics(format!("window cap overflows at base {base:e}")));
        }
        let row = match good_top(spec, params.epsilon, base, cap) {
            Some(top) => {
                let s = power_ratio_sum_wide(spec, -spec.beta, base, top)?;
                AttachRateRow {
                    k,
                    base,
                    window: (base, top),
                    rate: p * m * spec.weight_scale * s,
                }
            }
            None => AttachRateRow { k, base, window: (base, base - 1.0), rate: 0.0 },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Measured decay exponent of the window-rate product past generation 0,
/// `ln(prod a_k) / ln(n_deepest)`.
pub fn rate_product_exponent(rows: &[AttachRateRow]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::param("need at least two generations"));
    }
    let mut s = KahanSum::new();
    for row in &rows[1..] {
        if !(row.rate > 0.0) {
            return Err(Error::numerics(format!("generation {} window is empty", row.k)));
        }
        s.add(row.rate.ln());
    }
    Ok(s.value() / rows.last().unwrap().base.ln())
}

/// Limit of the rate-product exponent: `gamma (1 - beta) / (gamma - 1)`.
pub fn rate_exponent_prediction(beta: f64, gamma: f64) -> f64 {
    gamma * (1.0 - beta) / (gamma - 1.0)
}

/// Ball masses around generation members at one resolution radius.
#[derive(Clone, Debug)]
pub struct BallProfileRow {
    pub k: usize,
    pub radius: f64,
    pub mean_mass: f64,
    /// `ln(mean_mass) / ln(radius)`.
    pub exponent: f64,
    pub samples: usize,
}

/// Smallest scaling any block in the next window can carry, combined with
/// the height floor `1/c`, bounding that window's resolution from below
/// without realizing it.
fn resolution_floor(spec: &SequenceSpec, params: &GenerationParams, base: f64) -> Result<f64> {
    let cap = base.powf(1.0 + window_growth(base));
    if !cap.is_finite() {
        return Err(Error::numerics(format!("window cap overflows at base {base:e}")));
    }
    let top = good_top(spec, params.epsilon, base, cap).unwrap_or(cap);
    let lam = spec.lambda_scale * top.powf(-spec.alpha);
    Ok(lam * (1.0 / (2.0 * params.c)).min(1.0 / base.ln()))
}

/// Probes the measure around each generation: points are drawn from the
/// members' far halves weighted by the mass they carry, and the exact ball
/// mass at the next generation's resolution radius is averaged. The
/// deepest row prices the unbuilt next window by its deterministic
/// resolution floor.
pub fn ball_profile(
    g: &GluedStructure,
    params: &GenerationParams,
    gens: &[Generation],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BallProfileRow>> {
    if samples == 0 {
        return Err(Error::param("need at least one sample per generation"));
    }
    if gens.is_empty() {
        return Err(Error::param("no generations supplied"));
    }
    let spec = &g.seq.spec;
    if let SequenceMode::UserTable { .. } = spec.mode {
        return Err(Error::unsupported("ball profiles require exact-power sequences"));
    }
    let bases = schedule(params);
    let n = g.n_blocks();
    let mut rows = Vec::new();
    for gen in gens {
        if gen.members.is_empty() {
            return Err(Error::numerics(format!(
                "generation {} is empty; rebuild from another replica",
                gen.k
            )));
        }
        let radius = match gens.get(gen.k + 1) {
            Some(next) if next.resolution > 0.0 => next.resolution,
            _ => {
                let next_base = match bases.get(gen.k + 1) {
                    Some(&b) => b,
                    None => snap_ceil(bases[gen.k].powf(params.gamma)),
                };
                resolution_floor(spec, params, next_base)?
            }
        };
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::numerics(format!(
                "resolution radius {radius:e} at generation {} is unusable",
                gen.k
            )));
        }
        // Member choice weighted by the far-half mass each one carries.
        let mut cum = Vec::with_capacity(gen.members.len());
        let mut acc = KahanSum::new();
        for &i in &gen.members {
            acc.add(g.seq.weight(i) * g.block(i).upper_half_mass());
            cum.push(acc.value());
        }
        let total = acc.value();
        let mut mean = KahanSum::new();
        for _ in 0..samples {
            let u = rng.random::<f64>() * total;
            let pos = cum.partition_point(|&c| c <= u).min(gen.members.len() - 1);
            let i = gen.members[pos];
            let x = g.block(i).sample_upper_half(rng)?;
            let gw = g.gateways(PointRef { block: i, coord: x }, n);
            mean.add(g.measure_ball(&gw, n, radius));
        }
        let mean_mass = mean.value() / samples as f64;
        if !(mean_mass > 0.0) {
            return Err(Error::numerics(format!(
                "ball masses vanished at generation {}",
                gen.k
            )));
        }
        rows.push(BallProfileRow {
            k: gen.k,
            radius,
            mean_mass,
            exponent: mean_mass.ln() / radius.ln(),
            samples,
        });
    }
    Ok(rows)
}
