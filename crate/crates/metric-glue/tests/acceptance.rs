//! Acceptance gate: one test per numbered criterion, each printing a single
//! pass/fail line (visible under `cargo test -- --nocapture`). Tolerances are
//! pinned here; the named experiments expose the same checks on the command
//! line.

use std::time::Instant;

use metric_glue::analytic::{
    dim_formula, f_i, f_infinity, gamma_bar, iterate_fi, maximize_g, DimensionParams,
};
use metric_glue::blocks::{build_net, fragments_from_net, phi, BlockLaw};
use metric_glue::estimators::{
    box_count, covering_volume_exponent, hausdorff_gap_profile, local_dimension,
};
use metric_glue::exec::map_replicas;
use metric_glue::glue::{
    grow, height_mgf_log, monotone_pair, urn_trajectory, GrowthConfig, PointRef,
};
use metric_glue::leafmeasure::{
    attach_rate_schedule, build_generations, chi_mass, rate_exponent_prediction,
    rate_product_exponent, required_blocks, GenerationParams, Region,
};
use metric_glue::params::{make_sequences, SequenceSpec};
use metric_glue::rng::{Channel, ReplicaStreams};
use metric_glue::stats::{fit_line, mean, sample_std};
use metric_glue::Result;

fn report(num: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "pass" } else { "FAIL" };
    println!("criterion {num:02} {name}: {verdict} ({detail})");
    assert!(pass, "criterion {num:02} {name}: {detail}");
}

/// Deep-recursion panel: every point has beta > 1 and alpha d < 1, close
/// enough to the degenerate edge that 200 iterations land within 1e-6.
const GRID: [(f64, f64); 10] = [
    (0.92, 2.0),
    (0.93, 1.8),
    (0.94, 1.6),
    (0.94, 2.2),
    (0.95, 2.0),
    (0.95, 3.0),
    (0.96, 1.7),
    (0.96, 2.5),
    (0.97, 2.0),
    (0.97, 3.5),
];

fn collect<T>(v: Vec<Result<T>>) -> Result<Vec<T>> {
    v.into_iter().collect()
}

fn log_radii(r_max: f64, r_min: f64, k: usize) -> Vec<f64> {
    let ratio = r_min / r_max;
    (0..k).map(|i| r_max * ratio.powf(i as f64 / (k - 1) as f64)).collect()
}

#[test]
fn criterion_01_dimension_formula_named_value() {
    let t = Instant::now();
    let p = DimensionParams::new(0.6, 1.5, 1.0).unwrap();
    let gap = (dim_formula(&p) - (10.0 / 3.0 - 5.0f64.sqrt())).abs();
    report(
        1,
        "dimension formula at (3/5, 3/2, 1)",
        gap <= 1e-12,
        &format!("|dim - (10/3 - sqrt 5)| = {gap:.2e}; {:?}", t.elapsed()),
    );
}

#[test]
fn criterion_02_recursion_limit_and_pointwise() {
    let t = Instant::now();
    let mut worst_limit = 0.0f64;
    let mut worst_point = 0.0f64;
    for &(alpha, beta) in &GRID {
        let p = DimensionParams::new(alpha, beta, 1.0).unwrap();
        let dim = dim_formula(&p);
        let it = iterate_fi(&p, 200, 0.0).unwrap();
        worst_limit = worst_limit.max((it.thresholds.last().unwrap() - dim).abs());
        let mid = 0.5 * (1.0 + dim);
        let i = it.thresholds.len();
        worst_point = worst_point.max((f_i(&p, i, mid) - f_infinity(&p, mid).unwrap()).abs());
    }
    report(
        2,
        "200-step recursion vs closed form on 10-point grid",
        worst_limit < 1e-6 && worst_point < 1e-8,
        &format!(
            "max |s_200 - s_inf| = {worst_limit:.2e} (< 1e-6), max pointwise gap = {worst_point:.2e} (< 1e-8); {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn criterion_03_hand_algebra_point() {
    let t = Instant::now();
    let p = DimensionParams::new(0.5, 2.0, 1.0).unwrap();
    let worst_f2 = [0.5, 1.0, 4.0 / 3.0, 1.5]
        .iter()
        .map(|&s| (f_i(&p, 2, s) - (1.0 - 1.5 * s)).abs())
        .fold(0.0f64, f64::max);
    let s2 = iterate_fi(&p, 2, 0.0).unwrap().thresholds[1];
    let gap_s2 = (s2 - 4.0 / 3.0).abs();
    let gap_lim = (dim_formula(&p) - (6.0 - 4.0 * 1.5f64.sqrt())).abs();
    report(
        3,
        "hand-derived point (1/2, 2, 1)",
        worst_f2 <= 1e-10 && gap_s2 <= 1e-10 && gap_lim <= 1e-10,
        &format!(
            "|f_2 - (1 - 1.5 s)| = {worst_f2:.2e}, |s_2 - 4/3| = {gap_s2:.2e}, |s_inf - (6 - 4 sqrt 1.5)| = {gap_lim:.2e}; {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn criterion_04_optimizer_matches_closed_form() {
    let t = Instant::now();
    let mut worst_arg = 0.0f64;
    let mut worst_val = 0.0f64;
    for &(alpha, beta) in &GRID {
        let p = DimensionParams::new(alpha, beta, 1.0).unwrap();
        let (arg, val) = maximize_g(&p).unwrap();
        worst_arg = worst_arg.max((arg - gamma_bar(&p).unwrap()).abs());
        worst_val = worst_val.max((val - dim_formula(&p)).abs());
    }
    report(
        4,
        "numeric exponent optimum vs gamma-bar",
        worst_arg <= 1e-6 && worst_val <= 1e-9,
        &format!(
            "max |argmax - gamma_bar| = {worst_arg:.2e} (<= 1e-6), max |optimum - dim| = {worst_val:.2e} (<= 1e-9); {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn criterion_05_surface_properties() {
    let t = Instant::now();
    let mut min_margin = f64::INFINITY;
    let mut worst_mono = f64::NEG_INFINITY;
    let mut worst_limit = f64::NEG_INFINITY;
    for d in [0.5, 1.0, 2.0] {
        let alphas: Vec<f64> = (1..=30).map(|i| i as f64 / (50.0 * d)).collect();
        let betas: Vec<f64> = (1..=30).map(|j| 1.0 + 0.1 * j as f64).collect();
        let mut table = vec![vec![0.0f64; betas.len()]; alphas.len()];
        for (i, &a) in alphas.iter().enumerate() {
            for (j, &b) in betas.iter().enumerate() {
                let v = dim_formula(&DimensionParams::new(a, b, d).unwrap());
                table[i][j] = v;
                min_margin = min_margin.min(v - d).min(1.0 / a - v);
            }
        }
        for j in 0..betas.len() {
            for i in 1..alphas.len() {
                worst_mono = worst_mono.max(table[i][j] - table[i - 1][j]);
            }
        }
        for i in 0..alphas.len() {
            for j in 1..betas.len() {
                worst_mono = worst_mono.max(table[i][j] - table[i][j - 1]);
            }
        }
        // As beta drops to 1 the value climbs to the ceiling 1/alpha:
        // the exact gap is 2 (sqrt(delta (1 - alpha d + delta)) - delta) / alpha
        // <= 2 sqrt(2 delta) / alpha for delta <= 1.
        let delta = 1e-10;
        for &a in &alphas {
            let v = dim_formula(&DimensionParams::new(a, 1.0 + delta, d).unwrap());
            let gap = 1.0 / a - v;
            worst_limit = worst_limit.max(gap - 2.0 * (2.0 * delta).sqrt() / a);
        }
    }
    report(
        5,
        "30x30 surface bounds, monotonicity, beta -> 1 ceiling",
        min_margin > 0.0 && worst_mono <= 1e-12 && worst_limit <= 1e-12,
        &format!(
            "min margin to (d, 1/alpha) = {min_margin:.2e} (> 0), worst monotone rise = {worst_mono:.2e} (<= 1e-12), worst ceiling-gap excess = {worst_limit:.2e}; {:?}",
            t.elapsed()
        ),
    );
}

#[test]
fn criterion_06_marked_height_identity() {
    let t = Instant::now();
    let n_max = 1000usize;
    let gcfg = GrowthConfig {
        law: BlockLaw::parse("segment").unwrap(),
        spec: SequenceSpec::power(0.6, 1.5),
        n_max,
        coupled: true,
    };
    let checkpoints = [n_max / 4, n_max / 2, n_max];
    let gaps = collect(map_replicas(100, |r| {
        let streams = ReplicaStreams::new(1, r);
        let grown = grow(&gcfg, &streams)?;
        let g = &grown.structure;
        let tr = grown.marked.expect("coupled growth carries a mark");
        let b1 = g.block(1);
        let base = g.seq.lambda(1) * b1.distance(b1.root(), tr.point[1]);
        let mut worst = 0.0f64;
        for &k in &checkpoints {
            let mark = PointRef { block: tr.block[k], coord: tr.point[k] };
            let direct = g.distance(g.root_point(), mark);
            worst = worst.max((direct - (base + tr.marked_distance(1, k))).abs());
        }
        Ok(worst)
    }))
    .unwrap();
    let worst = gaps.into_iter().fold(0.0f64, f64::max);
    report(
        6,
        "marked-point height identity, 1000 steps x 100 replicas",
        worst <= 1e-12,
        &format!("max |direct - telescoped| = {worst:.2e} (<= 1e-12); {:?}", t.elapsed()),
    );
}

#[test]
fn criterion_07_urn_martingale_and_mgf_bound() {
    let t = Instant::now();
    let horizon = 10_000usize;
    let n = 10usize;
    let seq = make_sequences(&SequenceSpec::power(0.5, 2.0), horizon).unwrap();
    let finals = collect(map_replicas(10_000, |r| {
        let streams = ReplicaStreams::new(1, r);
        let mut rng = streams.free_stream(0);
        Ok(*urn_trajectory(&seq, n, horizon, &mut rng)?.last().unwrap())
    }))
    .unwrap();
    let m = mean(&finals);
    let se = sample_std(&finals) / (finals.len() as f64).sqrt();
    let gap = (m - seq.ratio(n)).abs();

    let mut worst_mgf = f64::NEG_INFINITY;
    for k in [10usize, 100, 1000, horizon] {
        for theta in [0.25, 0.5, 1.0, 2.0] {
            let (exact, bound) = height_mgf_log(&seq, k, theta).unwrap();
            worst_mgf = worst_mgf.max(exact - bound);
        }
    }
    report(
        7,
        "urn martingale mean and exponential-moment bound",
        gap <= 3.0 * se && worst_mgf <= 0.0,
        &format!(
            "|mean - w_10/W_10| = {gap:.2e} vs 3 SE = {:.2e}, max log-MGF excess = {worst_mgf:.2e} (<= 0); {:?}",
            3.0 * se,
            t.elapsed()
        ),
    );
}

#[test]
fn criterion_08_monotone_coupling() {
    let t = Instant::now();
    let n = 2000usize;
    let spec = SequenceSpec::power(0.6, 1.5);
    let lambda: Vec<f64> = (1..=n).map(|k| spec.power_lambda(k)).collect();
    let weight: Vec<f64> = (1..=n).map(|k| spec.power_weight(k)).collect();
    let halved = SequenceSpec::table(
        0.6,
        1.5,
        lambda.iter().map(|l| 0.5 * l).collect(),
        weight.clone(),
    );
    let drifted = SequenceSpec::table(
        0.6,
        1.5,
        lambda.iter().enumerate().map(|(i, l)| l * ((i + 1) as f64).powf(-0.1)).collect(),
        weight,
    );
    let gcfg = GrowthConfig {
        law: BlockLaw::parse("segment").unwrap(),
        spec,
        n_max: n,
        coupled: false,
    };
    let pairs_each = 200usize;
    let reps = collect(map_replicas(50, |r| {
        let streams = ReplicaStreams::new(1, r);
        let (a, ah) = monotone_pair(&gcfg, &halved, &streams)?;
        let (_, ad) = monotone_pair(&gcfg, &drifted, &streams)?;
        let (a, ah, ad) = (a.structure, ah.structure, ad.structure);
        let mut rng = streams.free_stream(11);
        let mut half_dev = 0.0f64;
        let mut violations = 0usize;
        for _ in 0..pairs_each {
            let x = a.sample_point(a.n_blocks(), &mut rng);
            let y = a.sample_point(a.n_blocks(), &mut rng);
            let da = a.distance(x, y);
            if da == 0.0 {
                continue;
            }
            half_dev = half_dev.max((ah.distance(x, y) - 0.5 * da).abs());
            if ad.distance(x, y) > da {
                violations += 1;
            }
        }
        Ok((half_dev, violations))
    }))
    .unwrap();
    let dev = reps.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let viol: usize = reps.iter().map(|r| r.1).sum();
    report(
        8,
        "monotone coupling on 10^4 pairs",
        dev == 0.0 && viol == 0,
        &format!("max halving deviation = {dev:.2e} (exact), domination violations = {viol}; {:?}", t.elapsed()),
    );
}

#[test]
fn criterion_09_net_and_fragment_suite() {
    let t = Instant::now();
    let r = 0.05f64;
    let mut details = Vec::new();
    let mut all_pass = true;
    for name in ["segment", "circle"] {
        let law = BlockLaw::parse(name).unwrap();
        let d = law.dimension();
        let streams = ReplicaStreams::new(1, 0);
        let block = law.sample(&mut streams.stream(1, Channel::Content));
        let mut rng = streams.free_stream(19);
        let net = build_net(&block, r, &mut rng).unwrap();

        let mut min_sep = f64::INFINITY;
        for i in 0..net.len() {
            for j in (i + 1)..net.len() {
                min_sep = min_sep.min(block.distance(net[i], net[j]));
            }
        }
        let probes = block.probe_grid(1e-4);
        let mut max_cover = 0.0f64;
        for &x in &probes {
            let nearest = net.iter().map(|&c| block.distance(x, c)).fold(f64::INFINITY, f64::min);
            max_cover = max_cover.max(nearest);
        }

        let frags = fragments_from_net(&block, net.clone(), r).unwrap();
        let cap = block.covering_number(r / 4.0).unwrap();
        let lo = (r / 4.0).powf(d + phi(d, r / 4.0)) * (1.0 - 1e-9);
        let hi = r.powf(d - phi(d, r)) * (1.0 + 1e-9);
        let min_mass = frags.masses.iter().copied().fold(f64::INFINITY, f64::min);
        let max_mass = frags.masses.iter().copied().fold(0.0f64, f64::max);

        let mut max_overlap = 0usize;
        for &x in &block.probe_grid(1e-3) {
            max_overlap = max_overlap.max(frags.intersecting(&block, x, r / 4.0).len());
        }

        let ok = min_sep >= r / 2.0
            && max_cover <= r + 1e-12
            && frags.len() <= cap
            && min_mass >= lo
            && max_mass <= hi
            && max_overlap <= 6;
        all_pass &= ok;
        details.push(format!(
            "{name}: sep {min_sep:.4} >= {:.4}, cover {max_cover:.4} <= {r}, {} frags <= {cap}, mass in [{lo:.2e}, {hi:.2e}], overlap {max_overlap} <= 6",
            r / 2.0,
            frags.len()
        ));
    }
    report(9, "net and fragment suite at r = 0.05", all_pass, &format!("{}; {:?}", details.join(" | "), t.elapsed()));
}

fn decay_slopes(alpha: f64, beta: f64, n_max: usize, replicas: u64, seed: u64) -> (f64, f64) {
    let ns: Vec<usize> = (1..=7).map(|k| n_max >> (8 - k)).filter(|&n| n >= 2).collect();
    let gcfg = GrowthConfig {
        law: BlockLaw::parse("segment").unwrap(),
        spec: SequenceSpec::power(alpha, beta),
        n_max,
        coupled: false,
    };
    let reps = collect(map_replicas(replicas, |r| {
        let streams = ReplicaStreams::new(seed, r);
        let grown = grow(&gcfg, &streams)?;
        let g = &grown.structure;
        let gaps: Vec<f64> = hausdorff_gap_profile(g, &ns)?.into_iter().map(|row| row.gap).collect();
        let mut heights = Vec::with_capacity(ns.len());
        for &n in &ns {
            let root_n = PointRef { block: n, coord: g.block(n).root() };
            let mut h = 0.0f64;
            for k in g.subtree_blocks(n) {
                let root_k = PointRef { block: k, coord: g.block(k).root() };
                h = h.max(g.distance(root_n, root_k) + g.seq.lambda(k) * g.block(k).height());
            }
            heights.push(h);
        }
        Ok((gaps, heights))
    }))
    .unwrap();
    let m = ns.len();
    let mut gap_mean = vec![0.0f64; m];
    let mut height_mean = vec![0.0f64; m];
    for (gaps, heights) in &reps {
        for j in 0..m {
            gap_mean[j] += gaps[j];
            height_mean[j] += heights[j];
        }
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let gap_fit = fit_line(&xs, &gap_mean.iter().map(|v| (v / reps.len() as f64).ln()).collect::<Vec<_>>());
    let height_fit = fit_line(&xs, &height_mean.iter().map(|v| (v / reps.len() as f64).ln()).collect::<Vec<_>>());
    (gap_fit.slope, height_fit.slope)
}

#[test]
fn criterion_10_scaling_regressions() {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut all_pass = true;
    for (alpha, beta) in [(1.0, 0.5), (0.5, 2.0)] {
        let (gap_slope, height_slope) = decay_slopes(alpha, beta, 10_000, 20, 1);
        let ok = (gap_slope + alpha).abs() <= 0.15 && (height_slope + alpha).abs() <= 0.15;
        all_pass &= ok;
        details.push(format!(
            "({alpha}, {beta}): gap slope {gap_slope:.3}, height slope {height_slope:.3} vs -{alpha} +- 0.15"
        ));
    }

    let gcfg = GrowthConfig {
        law: BlockLaw::parse("segment").unwrap(),
        spec: SequenceSpec::power(0.5, 2.0),
        n_max: 2000,
        coupled: false,
    };
    let ns = [250usize, 500, 1000, 2000];
    let (_, slope) = covering_volume_exponent(&gcfg, &ns, 1.5, 2, 0.02, 4, 512, 1).unwrap();
    let p = DimensionParams::new(0.5, 2.0, 1.0).unwrap();
    let target = f_i(&p, 2, 1.5);
    let cov_ok = (slope - target).abs() <= 0.3;
    all_pass &= cov_ok;
    details.push(format!("covering exponent {slope:.3} vs f_2(1.5) = {target} +- 0.3"));

    report(10, "gap, height, and covering-volume slopes", all_pass, &format!("{}; {:?}", details.join(" | "), t.elapsed()));
}

#[test]
fn criterion_11_leaf_measure_suite() {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut all_pass = true;

    // Grafted-mass identity at window base 200, 3 standard errors.
    {
        let law = BlockLaw::parse("segment").unwrap();
        let params = GenerationParams {
            gamma: 2.957,
            eta: 0.25,
            epsilon: 0.15,
            c: 4.0,
            n0: 6,
            depth: 1,
        };
        let spec = SequenceSpec::power(0.5, 2.0);
        params.validate(0.5, 2.0, law.dimension()).unwrap();
        let need = required_blocks(&spec, &params).unwrap();
        let gcfg = GrowthConfig { law, spec, n_max: need, coupled: false };
        let region = Region::FarHalf { block: 2 };
        let checks = collect(map_replicas(10_000, |r| {
            let streams = ReplicaStreams::new(1, r);
            let grown = grow(&gcfg, &streams)?;
            let c = chi_mass(&grown.structure, &params, 1, region)?;
            Ok((c.observed, c.expected))
        }))
        .unwrap();
        let base = {
            let streams = ReplicaStreams::new(1, 0);
            let grown = grow(&gcfg, &streams).unwrap();
            build_generations(&grown.structure, &params).unwrap()[1].base
        };
        let obs: Vec<f64> = checks.iter().map(|c| c.0).collect();
        let m = mean(&obs);
        let se = sample_std(&obs) / (obs.len() as f64).sqrt();
        let gap = (m - checks[0].1).abs();
        let ok = base == 200 && gap <= 3.0 * se;
        all_pass &= ok;
        details.push(format!(
            "chi at n_k = {base}: |mean - rate x mass| = {gap:.2e} vs 3 SE = {:.2e}",
            3.0 * se
        ));
    }

    // Window transfer-rate product across generations.
    for (beta, gamma, eps, depth) in [(2.0, 2.0, 0.3, 8usize), (1.5, 3.0, 0.35, 5)] {
        let law = BlockLaw::parse("segment").unwrap();
        let params = GenerationParams { gamma, eta: 0.25, epsilon: eps, c: 4.0, n0: 3, depth };
        let spec = SequenceSpec::power(0.6, beta);
        let schedule = attach_rate_schedule(&spec, &law, &params).unwrap();
        let exponent = rate_product_exponent(&schedule).unwrap();
        let prediction = rate_exponent_prediction(beta, gamma);
        let ok = (exponent - prediction).abs() <= 0.1;
        all_pass &= ok;
        details.push(format!(
            "rates ({beta}, {gamma}): exponent {exponent:.3} vs {prediction} +- 0.1"
        ));
    }

    // Realized generation-mass decay on nonempty replicas.
    {
        let law = BlockLaw::parse("segment").unwrap();
        let params =
            GenerationParams { gamma: 3.0, eta: 0.25, epsilon: 0.35, c: 4.0, n0: 3, depth: 2 };
        let spec = SequenceSpec::power(0.6, 1.5);
        params.validate(0.6, 1.5, law.dimension()).unwrap();
        let need = required_blocks(&spec, &params).unwrap();
        let gcfg = GrowthConfig { law, spec, n_max: need, coupled: false };
        let reps = collect(map_replicas(256, |r| {
            let streams = ReplicaStreams::new(1, r);
            let grown = grow(&gcfg, &streams)?;
            let gens = build_generations(&grown.structure, &params)?;
            Ok(gens.into_iter().map(|g| (g.base, g.mass)).collect::<Vec<_>>())
        }))
        .unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 1..=2usize {
            let vals: Vec<f64> =
                reps.iter().filter(|g| g[k].1 > 0.0).map(|g| g[k].1).collect();
            assert!(!vals.is_empty(), "no replica reached generation {k}");
            xs.push((reps[0][k].0 as f64).ln());
            ys.push(mean(&vals).ln());
        }
        let slope = fit_line(&xs, &ys).slope;
        let prediction = rate_exponent_prediction(1.5, 3.0);
        let ok = (slope - prediction).abs() <= 0.3;
        all_pass &= ok;
        details.push(format!("census (1.5, 3): mass slope {slope:.3} vs {prediction} +- 0.3"));
    }

    report(11, "leaf-measure suite", all_pass, &format!("{}; {:?}", details.join(" | "), t.elapsed()));
}

#[test]
fn criterion_12_estimator_calibration() {
    let t = Instant::now();
    let radii = log_radii(0.1, 0.005, 12);
    let mut details = Vec::new();
    let mut all_pass = true;
    for (name, target) in [("segment", 1.0), ("circle", 1.0), ("star:4", 0.0)] {
        let law = BlockLaw::parse(name).unwrap();
        let gcfg = GrowthConfig {
            law,
            spec: SequenceSpec::power(0.6, 1.5),
            n_max: 1,
            coupled: false,
        };
        let streams = ReplicaStreams::new(1, 0);
        let grown = grow(&gcfg, &streams).unwrap();
        let g = &grown.structure;
        let mut rng = streams.free_stream(13);
        let bc = box_count(g, g.n_blocks(), &radii, 4000, &mut rng).unwrap();
        let ok = (bc.fit.slope - target).abs() <= 0.05;
        all_pass &= ok;
        details.push(format!("box {name}: slope {:.3} vs {target} +- 0.05", bc.fit.slope));
    }
    {
        let gcfg = GrowthConfig {
            law: BlockLaw::parse("segment").unwrap(),
            spec: SequenceSpec::power(0.6, 1.5),
            n_max: 1,
            coupled: false,
        };
        let streams = ReplicaStreams::new(1, 0);
        let grown = grow(&gcfg, &streams).unwrap();
        let g = &grown.structure;
        let mut rng = streams.free_stream(29);
        let ld = local_dimension(g, g.n_blocks(), 400, &log_radii(0.05, 0.002, 12), &mut rng).unwrap();
        let m = mean(&ld.slopes);
        let ok = (m - 1.0).abs() <= 0.05;
        all_pass &= ok;
        details.push(format!("local segment: mean slope {m:.3} vs 1 +- 0.05"));
    }
    report(12, "box-count and local-dimension calibration", all_pass, &format!("{}; {:?}", details.join(" | "), t.elapsed()));
}

#[test]
fn criterion_13_thread_count_determinism() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_metric-glue");
    let base = std::env::temp_dir().join(format!("mg-acc13-{}", std::process::id()));
    let mut digests = Vec::new();
    for threads in ["1", "4"] {
        let out = base.join(format!("t{threads}"));
        std::fs::create_dir_all(&out).unwrap();
        let status = std::process::Command::new(bin)
            .args(["urn", "--replicas", "48", "--horizon", "4000", "--seed", "7"])
            .arg("--out")
            .arg(&out)
            .env("RAYON_NUM_THREADS", threads)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "urn run failed under {threads} threads");
        let bytes: Vec<Vec<u8>> = ["results.csv", "urn.csv", "urn_trace.csv"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        digests.push(bytes);
    }
    let identical = digests[0] == digests[1];
    report(
        13,
        "byte-identical artifacts across thread counts",
        identical,
        &format!("results.csv, urn.csv, urn_trace.csv equal under 1 vs 4 rayon threads; {:?}", t.elapsed()),
    );
}
