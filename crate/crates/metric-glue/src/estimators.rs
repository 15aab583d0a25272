//! Dimension estimators on grown structures: box counting, local mass
//! scaling, the staged covering-volume functional, and the truncation gap.

use rand::Rng;

use crate::analytic::{gamma2, DimensionParams};
use crate::blocks::build_net;
use crate::error::{Error, Result};
use crate::glue::{grow, GluedStructure, GrowthConfig, PointRef};
use crate::params::{power_ratio_sum, SequenceMode};
use crate::rng::{Channel, ReplicaStreams};
use crate::stats::{fit_line, quantile};

/// Log-log fit over the middle two-thirds of a scaling window, with
/// quality flags ("saturated", "poor-fit", "short-window").
#[derive(Clone, Debug)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Radii actually used (largest, smallest).
    pub window: (f64, f64),
    pub flags: Vec<String>,
}

fn scaling_fit(rows: &[(f64, f64)]) -> ScalingFit {
    // rows: (radius, value), radii descending. Keep the middle two-thirds.
    let mut flags = Vec::new();
    let n = rows.len();
    let cut = n / 6;
    let kept = &rows[cut..n - cut];
    if kept.len() < 3 {
        flags.push("short-window".into());
    }
    for w in kept.windows(2) {
        if w[0].1 == w[1].1 {
            flags.push("saturated".into());
            break;
        }
    }
    let xs: Vec<f64> = kept.iter().map(|&(r, _)| (1.0 / r).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, v)| v.ln()).collect();
    let fit = fit_line(&xs, &ys);
    if !fit.slope.is_finite() || fit.r2 < 0.9 {
        flags.push("poor-fit".into());
    }
    ScalingFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        window: (kept.first().map_or(0.0, |r| r.0), kept.last().map_or(0.0, |r| r.0)),
        flags,
    }
}

#[derive(Clone, Debug)]
pub struct BoxCountRow {
    pub radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct BoxCount {
    pub rows: Vec<BoxCountRow>,
    /// Largest probe-to-sample distance: the net covers the structure at
    /// radius + this gap, so counts sandwich the covering numbers between
    /// N(radius + gap) and N(radius / 2).
    pub sample_gap: f64,
    pub fit: ScalingFit,
}

/// Greedy packing counts over a shared sample cloud, one per radius.
pub fn box_count<R: Rng + ?Sized>(
    g: &GluedStructure,
    n: usize,
    radii: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<BoxCount> {
    if n == 0 || n > g.n_blocks() {
        return Err(Error::param(format!("n = {n} outside 1..={}", g.n_blocks())));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::param("radii must be positive"));
    }
    if samples < 16 {
        return Err(Error::param("need at least 16 samples"));
    }
    let cloud: Vec<PointRef> = (0..samples).map(|_| g.sample_point(n, rng)).collect();
    let mut order: Vec<f64> = radii.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(order.len());
    for &r in &order {
        let mut kept: Vec<PointRef> = Vec::new();
        for &z in &cloud {
            if kept.iter().all(|&q| g.distance(z, q) >= r) {
                kept.push(z);
            }
        }
        rows.push(BoxCountRow { radius: r, count: kept.len() });
    }
    let mut gap = 0.0f64;
    for _ in 0..512 {
        let p = g.sample_point(n, rng);
        let d = cloud.iter().map(|&z| g.distance(p, z)).fold(f64::INFINITY, f64::min);
        gap = gap.max(d);
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.count as f64)).collect();
    let fit = scaling_fit(&pairs);
    Ok(BoxCount { rows, sample_gap: gap, fit })
}

#[derive(Clone, Debug)]
pub struct LocalDimension {
    /// Per-probe mass-scaling slopes.
    pub slopes: Vec<f64>,
    /// Probes dropped for hitting an empty ball.
    pub skipped: usize,
    /// Lower-envelope summary: the 10% quantile of the slopes.
    pub quantile10: f64,
}

/// Mass scaling of balls around measure-typical probes, with exact ball
/// masses through the gateway decomposition.
pub fn local_dimension<R: Rng + ?Sized>(
    g: &GluedStructure,
    n: usize,
    probes: usize,
    radii: &[f64],
    rng: &mut R,
) -> Result<LocalDimension> {
    if n == 0 || n > g.n_blocks() {
        return Err(Error::param(format!("n = {n} outside 1..={}", g.n_blocks())));
    }
    if radii.len() < 2 {
        return Err(Error::param("need at least two radii"));
    }
    if probes == 0 {
        return Err(Error::param("need at least one probe"));
    }
    let xs: Vec<f64> = radii.iter().map(|&r| r.ln()).collect();
    let mut slopes = Vec::with_capacity(probes);
    let mut skipped = 0usize;
    for _ in 0..probes {
        let x = g.sample_point(n, rng);
        let gw = g.gateways(x, n);
        let masses: Vec<f64> = radii.iter().map(|&r| g.measure_ball(&gw, n, r)).collect();
        if masses.iter().any(|&m| m <= 0.0) {
            skipped += 1;
            continue;
        }
        let ys: Vec<f64> = masses.iter().map(|&m| m.ln()).collect();
        slopes.push(fit_line(&xs, &ys).slope);
    }
    if slopes.is_empty() {
        return Err(Error::numerics("every probe hit an empty ball"));
    }
    let quantile10 = quantile(&slopes, 0.10);
    Ok(LocalDimension { slopes, skipped, quantile10 })
}

#[derive(Clone, Debug)]
pub struct CoveringVolume {
    pub n: usize,
    pub s: f64,
    pub stage: u8,
    pub eps: f64,
    /// Balls placed on block n itself (stage 2; one root ball in stage 1).
    pub net_balls: usize,
    /// ln E[volume]: exact, with the descendant term integrated out.
    pub log_expected_volume: f64,
    /// Fraction of sampled subtree points covered in a realized structure.
    pub coverage: f64,
    pub coverage_samples: usize,
}

/// Staged covering of the subtree glued on block n, in s-dimensional
/// volume. Stage 1 is one ball of radius n^(-alpha+eps) at the block root.
/// Stage 2 nets block n at glued radius n^(-alpha gamma_2 + eps) and covers
/// each descendant k <= n^gamma_2 entering the subtree by its own stage-1
/// ball; the expected descendant term sums (w_n / W_{k-1}) (2 k^(-alpha+
/// eps))^s exactly instead of simulating the subtree membership.
pub fn covering_volume(
    cfg: &GrowthConfig,
    n: usize,
    s: f64,
    stage: u8,
    eps: f64,
    grow_factor: usize,
    samples: usize,
    streams: &ReplicaStreams,
) -> Result<CoveringVolume> {
    if !matches!(cfg.spec.mode, SequenceMode::ExactPower) {
        return Err(Error::unsupported("covering volumes need exact-power sequences"));
    }
    if !(s > 0.0) || !(eps >= 0.0) || n < 2 {
        return Err(Error::param("need s > 0, eps >= 0, n >= 2"));
    }
    if grow_factor < 2 {
        return Err(Error::param("growth factor must be at least 2"));
    }
    let alpha = cfg.spec.alpha;
    let p = DimensionParams::new(alpha, cfg.spec.beta, cfg.law.dimension())?;
    let nf = n as f64;

    let n_max = grow_factor * n;
    let grown = grow(&GrowthConfig { n_max, coupled: false, ..cfg.clone() }, streams)?;
    let g = &grown.structure;
    let subtree = g.subtree_blocks(n);
    let mut rng = streams.stream(1, Channel::Probe);

    // Sample from the weighted block measure restricted to the subtree.
    let weights: Vec<f64> = subtree.iter().map(|&m| g.seq.weight(m)).collect();
    let total_w: f64 = weights.iter().sum();
    let sample_subtree = |rng: &mut rand_chacha::ChaCha8Rng| -> PointRef {
        let mut u = rng.random::<f64>() * total_w;
        let mut idx = subtree.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                idx = i;
                break;
            }
            u -= w;
        }
        let b = subtree[idx];
        PointRef { block: b, coord: g.block(b).sample(rng) }
    };

    match stage {
        1 => {
            let radius = nf.powf(-alpha + eps);
            let log_expected_volume = s * (2.0 * radius).ln();
            let mut covered = 0usize;
            let anchor = PointRef { block: n, coord: g.block(n).root() };
            for _ in 0..samples {
                let z = sample_subtree(&mut rng);
                if g.distance(z, anchor) <= radius {
                    covered += 1;
                }
            }
            Ok(CoveringVolume {
                n,
                s,
                stage,
                eps,
                net_balls: 1,
                log_expected_volume,
                coverage: covered as f64 / samples as f64,
                coverage_samples: samples,
            })
        }
        2 => {
            if !p.formula_regime() {
                return Err(Error::unsupported(
                    "stage 2 needs beta > 1 and alpha d < 1",
                ));
            }
            let g2 = gamma2(&p);
            let lam_n = cfg.spec.power_lambda(n);
            let net_radius_glued = nf.powf(-alpha * g2 + eps);
            let internal = nf.powf(-alpha * g2) / lam_n;
            let balls = g.block(n).covering_number(internal)?;
            let term_net = balls as f64 * (2.0 * net_radius_glued).powf(s);
            let k_top = nf.powf(g2).ceil() as usize;
            let term_children = 2f64.powf(s)
                * cfg.spec.power_weight(n)
                * power_ratio_sum(&cfg.spec, (-alpha + eps) * s, n + 1, k_top)?;
            let log_expected_volume = (term_net + term_children).ln();

            // Coverage on the realized structure: each sampled subtree
            // point must fall in a chain ball around a descendant root
            // (index <= k_top) or within the net on block n.
            let net = build_net(g.block(n), internal, &mut rng)?;
            let mut covered = 0usize;
            for _ in 0..samples {
                let z = sample_subtree(&mut rng);
                let (mut b, mut c) = (z.block, z.coord);
                let mut acc = 0.0;
                let mut ok = false;
                while b > n {
                    let blk = g.block(b);
                    let to_root = acc + g.seq.lambda(b) * blk.distance(c, blk.root());
                    if b <= k_top && to_root <= (b as f64).powf(-alpha + eps) {
                        ok = true;
                        break;
                    }
                    acc = to_root;
                    c = g.attach_point(b).coord;
                    b = g.parent(b);
                }
                if !ok && b == n {
                    let blk = g.block(n);
                    let best = net
                        .iter()
                        .map(|&q| acc + g.seq.lambda(n) * blk.distance(c, q))
                        .fold(f64::INFINITY, f64::min);
                    ok = best <= net_radius_glued;
                }
                if ok {
                    covered += 1;
                }
            }
            Ok(CoveringVolume {
                n,
                s,
                stage,
                eps,
                net_balls: balls,
                log_expected_volume,
                coverage: covered as f64 / samples as f64,
                coverage_samples: samples,
            })
        }
        _ => Err(Error::param(format!("stage must be 1 or 2, got {stage}"))),
    }
}

#[derive(Clone, Debug)]
pub struct GapRow {
    pub n: usize,
    pub gap: f64,
}

/// One-sided Hausdorff gap between the first n blocks and the full grown
/// structure: the farthest any later point sits from its projection. The
/// nearest truncated point to anything inside block k is the gateway where
/// k's chain enters the first n blocks, so the exact sup is the projection
/// distance of root_k plus the block's own scaled height, over all k > n.
pub fn hausdorff_gap_profile(g: &GluedStructure, ns: &[usize]) -> Result<Vec<GapRow>> {
    let top = g.n_blocks();
    if ns.is_empty() || ns.iter().any(|&n| n == 0 || n >= top) {
        return Err(Error::param(format!("cut points must lie in 1..{top}")));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut gap = 0.0f64;
        for k in (n + 1)..=top {
            let root = PointRef { block: k, coord: g.block(k).root() };
            let reach =
                g.project_with_distance(root, n).1 + g.seq.lambda(k) * g.block(k).height();
            gap = gap.max(reach);
        }
        rows.push(GapRow { n, gap });
    }
    Ok(rows)
}

/// Mean of ln E[volume] across an n-grid, fitted against ln n: the measured
/// covering-volume exponent at test dimension s.
pub fn covering_volume_exponent(
    cfg: &GrowthConfig,
    ns: &[usize],
    s: f64,
    stage: u8,
    eps: f64,
    grow_factor: usize,
    samples: usize,
    master_seed: u64,
) -> Result<(Vec<CoveringVolume>, f64)> {
    if ns.len() < 2 {
        return Err(Error::param("need at least two grid points"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let streams = ReplicaStreams::new(master_seed, i as u64);
        rows.push(covering_volume(cfg, n, s, stage, eps, grow_factor, samples, &streams)?);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_expected_volume).collect();
    Ok((rows, fit_line(&xs, &ys).slope))
}
