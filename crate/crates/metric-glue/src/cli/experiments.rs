//! Named experiments behind the command-line surface. Each one runs a
//! scenario against the library, writes its artifacts (CSV tables, SVG)
//! into the output directory, and returns check rows whose pass flags
//! decide the process exit code.

use std::fmt::Write as _;
use std::fs;

use crate::analytic::{
    dim_formula, f_i, f_infinity, gamma_bar, iterate_fi, maximize_g, threshold_gap_scale,
    DimensionParams,
};
use crate::blocks::{build_net, fragments_from_net, phi, BlockLaw, Coord};
use crate::error::{Error, Result};
use crate::estimators::{
    box_count, covering_volume_exponent, hausdorff_gap_profile, local_dimension,
};
use crate::exec::map_replicas;
use crate::glue::{
    grow, height_mgf_log, marked_block_law, monotone_pair, urn_trajectory, GrowthConfig, PointRef,
};
use crate::leafmeasure::{
    attach_rate_schedule, ball_profile, build_generations, chi_mass, rate_exponent_prediction,
    rate_product_exponent, GenerationParams, Region,
};
use crate::params::{check_hypothesis, make_sequences, Hypothesis, SequenceSpec};
use crate::rng::{Channel, ReplicaStreams};
use crate::stats::{chi_square, chi_square_critical, fit_line, mean, sample_std};

use super::config::ExperimentConfig;
use super::{svg, ResultRow};

pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("grow", "grow one structure and dump its sequences and genealogy"),
    ("fi-iterate", "threshold recursion: limit, closed forms, optimizer cross-checks"),
    ("dimension-surface", "dimension formula over a parameter grid with limit identities"),
    ("urn", "subtree-weight martingale and the height generating-function bound"),
    ("coupling", "marked trajectory against direct distances, and the marked-block law"),
    ("monotone", "distance monotonicity under pointwise scale shrinking"),
    ("box-count", "greedy packing counts over sampled point clouds"),
    ("local-dim", "ball-mass scaling at measure-typical points"),
    ("covering-volume", "staged covering volumes against the recursion exponent"),
    ("hausdorff-gap", "truncation gap and subtree height decay in the block index"),
    ("net-fragments", "nets, fragment masses, and overlap counts on a single block"),
    ("leaf-measure", "generation census, grafted-mass identity, window rates, ball profile"),
    ("hypothesis-check", "sequence-shape window densities"),
    ("layout", "decorative SVG drawing of the genealogy"),
];

pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match cfg.experiment.as_str() {
        "grow" => grow_structure(cfg),
        "fi-iterate" => fi_iterate(cfg),
        "dimension-surface" => dimension_surface(cfg),
        "urn" => urn(cfg),
        "coupling" => coupling(cfg),
        "monotone" => monotone(cfg),
        "box-count" => box_count_exp(cfg),
        "local-dim" => local_dim(cfg),
        "covering-volume" => covering_volume_exp(cfg),
        "hausdorff-gap" => hausdorff_gap(cfg),
        "net-fragments" => net_fragments(cfg),
        "leaf-measure" => leaf_measure(cfg),
        "hypothesis-check" => hypothesis(cfg),
        "layout" => layout(cfg),
        other => Err(Error::param(format!("unknown experiment `{other}`; try `list`"))),
    }
}

fn emit(cfg: &ExperimentConfig, name: &str, text: &str) -> Result<()> {
    fs::write(cfg.out.join(name), text)?;
    Ok(())
}

fn law_of(cfg: &ExperimentConfig) -> Result<BlockLaw> {
    BlockLaw::parse(&cfg.block)
}

fn growth(cfg: &ExperimentConfig, law: BlockLaw, coupled: bool) -> GrowthConfig {
    GrowthConfig { law, spec: SequenceSpec::power(cfg.alpha, cfg.beta), n_max: cfg.n_max, coupled }
}

/// Log-spaced radii, descending from r_max to r_min.
fn radii_of(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    if !(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min) {
        return Err(Error::param("need 0 < r_min < r_max"));
    }
    let k = cfg.levels.max(2);
    let ratio = cfg.r_min / cfg.r_max;
    Ok((0..k).map(|i| cfg.r_max * ratio.powf(i as f64 / (k - 1) as f64)).collect())
}

fn fmtf(x: f64) -> String {
    format!("{x}")
}

fn coord_str(c: Coord) -> String {
    match c {
        Coord::Param(u) => fmtf(u),
        Coord::Atom(k) => format!("atom{k}"),
    }
}

fn collect<T>(v: Vec<Result<T>>) -> Result<Vec<T>> {
    v.into_iter().collect()
}

fn grow_structure(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let law = law_of(cfg)?;
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&growth(cfg, law, false), &streams)?;
    let g = &grown.structure;
    emit(cfg, "sequences.csv", &g.seq.to_csv())?;

    let mut out = String::from("n,parent,attach_coord,lambda,w,depth\n");
    for n in 1..=g.n_blocks() {
        let (parent, coord) = if n == 1 {
            (0, coord_str(g.root_point().coord))
        } else {
            let at = g.attach_point(n);
            (at.block, coord_str(at.coord))
        };
        let _ = writeln!(
            out,
            "{n},{parent},{coord},{},{},{}",
            fmtf(g.seq.lambda(n)),
            fmtf(g.seq.weight(n)),
            g.depth(n)
        );
    }
    emit(cfg, "structure.csv", &out)?;

    let e = &cfg.experiment;
    Ok(vec![
        ResultRow::info(e, "blocks", g.n_blocks() as f64),
        ResultRow::info(e, "max_depth", g.max_depth() as f64),
        ResultRow::info(e, "total_weight", g.seq.prefix(g.n_blocks())),
    ])
}

/// Pinned panel for the deep-recursion limit checks: points close to the
/// degenerate edge alpha d = 1, where the tangency constant is small and
/// 200 iterations land within 1e-6 of the limit.
const FI_GRID: [(f64, f64); 10] = [
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

fn fi_iterate(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let p = DimensionParams::new(cfg.alpha, cfg.beta, cfg.d)?;
    let dim = dim_formula(&p);
    let iters = cfg.iters.max(2);
    let it = iterate_fi(&p, iters, 0.0)?;
    let i_eff = it.thresholds.len();
    let s_last = *it.thresholds.last().unwrap();
    let mid = 0.5 * (p.d + dim);

    let mut trace = String::from("i,s_i,f_i_at_d,f_i_at_mid\n");
    for (j, s) in it.thresholds.iter().enumerate() {
        let i = j + 1;
        let _ = writeln!(trace, "{i},{},{},{}", fmtf(*s), fmtf(f_i(&p, i, p.d)), fmtf(f_i(&p, i, mid)));
    }
    emit(cfg, "fi_trace.csv", &trace)?;

    let mut rows = Vec::new();
    if p.formula_regime() {
        let scale = threshold_gap_scale(&p)?;
        let tol = cfg.tol_or(4.0 * scale / (i_eff as f64 * i_eff as f64) + 1e-12);
        rows.push(ResultRow::check(e, "threshold_limit", s_last, dim, tol));
        rows.push(
            ResultRow::check(e, "pointwise_mid", f_i(&p, i_eff, mid), f_infinity(&p, mid)?, 1e-8)
                .with_meta(&format!("s={}", fmtf(mid))),
        );
    } else {
        rows.push(ResultRow::check(e, "threshold_limit", s_last, dim, cfg.tol_or(1e-4)).with_meta("outside formula regime"));
    }

    // f_i pins the lower endpoint for every depth.
    let worst = (1..=8)
        .map(|i| (f_i(&p, i, p.d) + p.alpha * p.d).abs())
        .fold(0.0f64, f64::max);
    rows.push(ResultRow::check(e, "f_at_d", worst, 0.0, 1e-10));

    let decreasing = it.thresholds.windows(2).all(|w| w[1] < w[0]);
    rows.push(ResultRow::check(e, "thresholds_decreasing", decreasing as u8 as f64, 1.0, 0.0));

    if p.formula_regime() {
        let (arg, val) = maximize_g(&p)?;
        rows.push(ResultRow::check(e, "optimizer_argmax", arg, gamma_bar(&p)?, 1e-6));
        rows.push(ResultRow::check(e, "optimizer_value", val, dim, 1e-9));
    }

    if (cfg.alpha, cfg.beta, cfg.d) == (0.5, 2.0, 1.0) {
        // Second recursion level collapses to 1 - 1.5 s here.
        let worst2 = [0.5, 1.0, 1.5]
            .iter()
            .map(|&s| (f_i(&p, 2, s) - (1.0 - 1.5 * s)).abs())
            .fold(0.0f64, f64::max);
        rows.push(ResultRow::check(e, "f2_closed_form", worst2, 0.0, 1e-12));
        rows.push(ResultRow::check(e, "s2_hand", it.thresholds[1], 4.0 / 3.0, 1e-10));
        rows.push(ResultRow::check(e, "limit_hand", dim, 6.0 - 4.0 * 1.5f64.sqrt(), 1e-10));
    }

    for (i, &(alpha, beta)) in FI_GRID.iter().enumerate() {
        let gp = DimensionParams::new(alpha, beta, 1.0)?;
        let gdim = dim_formula(&gp);
        let git = iterate_fi(&gp, 200, 0.0)?;
        let gi = git.thresholds.len();
        let meta = format!("alpha={alpha}; beta={beta}; d=1");
        rows.push(
            ResultRow::check(e, &format!("grid{i}_limit"), *git.thresholds.last().unwrap(), gdim, 1e-6)
                .with_meta(&meta),
        );
        let gmid = 0.5 * (1.0 + gdim);
        rows.push(
            ResultRow::check(e, &format!("grid{i}_pointwise"), f_i(&gp, gi, gmid), f_infinity(&gp, gmid)?, 1e-8)
                .with_meta(&meta),
        );
    }
    Ok(rows)
}

fn dimension_surface(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let d = cfg.d;
    if !(d > 0.0) {
        return Err(Error::param("need d > 0"));
    }
    // Alpha runs in steps of 1/(50 d) so named cells like 3/5 land exactly
    // on grid values; beta in steps of 1/10. Everything stays inside the
    // formula branch (alpha d < 1, beta > 1).
    let g = cfg.grid.clamp(2, 49);
    let alphas: Vec<f64> = (1..=g).map(|i| i as f64 / (50.0 * d)).collect();
    let betas: Vec<f64> = (1..=g).map(|j| 1.0 + 0.1 * j as f64).collect();

    let mut table = vec![vec![0.0f64; betas.len()]; alphas.len()];
    let mut out = String::from("alpha,beta,d,regime,dimension\n");
    for (i, &a) in alphas.iter().enumerate() {
        for (j, &b) in betas.iter().enumerate() {
            let p = DimensionParams::new(a, b, d)?;
            let v = dim_formula(&p);
            table[i][j] = v;
            let regime = if p.formula_regime() { "formula" } else { "ceiling" };
            let _ = writeln!(out, "{},{},{},{regime},{}", fmtf(a), fmtf(b), fmtf(d), fmtf(v));
        }
    }
    emit(cfg, "surface.csv", &out)?;

    let mut rows = Vec::new();
    if d == 1.0 {
        let paper = dim_formula(&DimensionParams::new(0.6, 1.5, 1.0)?);
        rows.push(ResultRow::check(e, "cell_3_5_3_2", paper, 10.0 / 3.0 - 5.0f64.sqrt(), 1e-12));
        let hand = dim_formula(&DimensionParams::new(0.5, 2.0, 1.0)?);
        rows.push(ResultRow::check(e, "cell_1_2_2", hand, 6.0 - 4.0 * 1.5f64.sqrt(), 1e-10));
        let ceil = dim_formula(&DimensionParams::new(2.0, 0.5, 1.0)?);
        rows.push(ResultRow::check(e, "ceiling_cell", ceil, 0.5, 0.0));
    }

    // Strict sandwich d < dim < 1/alpha away from the regime boundary.
    let mut margin = f64::INFINITY;
    for (i, &a) in alphas.iter().enumerate() {
        for v in &table[i] {
            margin = margin.min(v - d).min(1.0 / a - v);
        }
    }
    rows.push(ResultRow::check_ge(e, "bounds_margin", margin, 0.0).with_meta("min over grid of min(dim-d, 1/alpha-dim)"));

    let mut worst_a = f64::NEG_INFINITY;
    for j in 0..betas.len() {
        for i in 1..alphas.len() {
            worst_a = worst_a.max(table[i][j] - table[i - 1][j]);
        }
    }
    rows.push(ResultRow::check_le(e, "monotone_alpha", worst_a, 1e-12));

    let mut worst_b = f64::NEG_INFINITY;
    for i in 0..alphas.len() {
        for j in 1..betas.len() {
            worst_b = worst_b.max(table[i][j] - table[i][j - 1]);
        }
    }
    rows.push(ResultRow::check_le(e, "monotone_beta", worst_b, 1e-12));

    // Near beta = 1 the formula sits below the ceiling by exactly
    // 2 (sqrt(delta (1 - alpha d + delta)) - delta) / alpha, delta = beta - 1.
    let mut worst_id = 0.0f64;
    for (i, &a) in alphas.iter().enumerate() {
        for (j, &b) in betas.iter().enumerate() {
            let delta = b - 1.0;
            let exact = 2.0 * ((delta * (1.0 - a * d + delta)).sqrt() - delta) / a;
            worst_id = worst_id.max(((1.0 / a - table[i][j]) - exact).abs());
        }
    }
    rows.push(ResultRow::check(e, "ceiling_gap_identity", worst_id, 0.0, 1e-12));
    let mut min_drop = f64::INFINITY;
    for i in 0..alphas.len() {
        min_drop = min_drop.min(table[i][0] - table[i][1]);
    }
    rows.push(
        ResultRow::check_ge(e, "ceiling_gap_grows", min_drop, 0.0)
            .with_meta("gap widens away from beta = 1"),
    );
    Ok(rows)
}

fn urn(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    let horizon = cfg.horizon.max(cfg.urn_block + 1);
    let n = cfg.urn_block.max(1);
    let seq = make_sequences(&spec, horizon)?;

    let finals = {
        let seq = &seq;
        let results: Vec<Result<f64>> = map_replicas(cfg.replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let mut rng = streams.free_stream(0);
            Ok(*urn_trajectory(seq, n, horizon, &mut rng)?.last().unwrap())
        });
        collect(results)?
    };
    let m = mean(&finals);
    let se = sample_std(&finals) / (finals.len() as f64).sqrt();
    let mut rows = vec![ResultRow::check(e, "martingale_mean", m, seq.ratio(n), 3.0 * se)
        .with_meta(&format!("{} replicas; 3 standard errors", finals.len()))];

    // ln E exp(theta H) never crosses its linearized bound.
    let mut ns: Vec<usize> = [10, 100, 1000, horizon].into_iter().filter(|&k| k <= horizon && k >= 2).collect();
    ns.dedup();
    let mut worst = f64::NEG_INFINITY;
    for &k in &ns {
        for theta in [0.25, 0.5, 1.0, 2.0] {
            let (exact, bound) = height_mgf_log(&seq, k, theta)?;
            worst = worst.max(exact - bound);
        }
    }
    rows.push(ResultRow::check_le(e, "mgf_gap", worst, 0.0).with_meta("exact log-MGF minus linear bound"));

    let mut out = String::from("replica,final\n");
    for (r, v) in finals.iter().enumerate() {
        let _ = writeln!(out, "{r},{}", fmtf(*v));
    }
    emit(cfg, "urn.csv", &out)?;

    let streams = ReplicaStreams::new(cfg.seed, 0);
    let mut rng = streams.free_stream(0);
    let traj = urn_trajectory(&seq, n, horizon, &mut rng)?;
    let mut out = String::from("step,m\n");
    for (i, v) in traj.iter().enumerate() {
        let _ = writeln!(out, "{},{}", n + i, fmtf(*v));
    }
    emit(cfg, "urn_trace.csv", &out)?;
    Ok(rows)
}

fn coupling(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let horizon = cfg.n_max.max(4);
    let gcfg = GrowthConfig { n_max: horizon, ..growth(cfg, law, true) };
    let checkpoints: Vec<usize> = {
        let mut v = vec![horizon / 4, horizon / 2, horizon];
        v.retain(|&k| k >= 1);
        v.dedup();
        v
    };

    struct Rep {
        max_gap: f64,
        final_block: usize,
        fired: u32,
    }
    let reps = {
        let gcfg = &gcfg;
        let checkpoints = &checkpoints;
        let results: Vec<Result<Rep>> = map_replicas(cfg.replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let grown = grow(gcfg, &streams)?;
            let g = &grown.structure;
            let t = grown.marked.ok_or_else(|| Error::numerics("coupled growth lost its mark"))?;
            let b1 = g.block(1);
            let base = g.seq.lambda(1) * b1.distance(b1.root(), t.point[1]);
            let mut max_gap = 0.0f64;
            for &k in checkpoints {
                let mark = PointRef { block: t.block[k], coord: t.point[k] };
                let direct = g.distance(g.root_point(), mark);
                max_gap = max_gap.max((direct - (base + t.marked_distance(1, k))).abs());
            }
            Ok(Rep { max_gap, final_block: t.block[horizon], fired: t.fired_count(horizon) })
        });
        collect(results)?
    };

    let worst = reps.iter().map(|r| r.max_gap).fold(0.0f64, f64::max);
    let mut rows = vec![ResultRow::check(e, "height_identity", worst, 0.0, 1e-12)
        .with_meta("telescoped jumps vs direct glued distance")];

    let law_vec = marked_block_law(&make_sequences(&gcfg.spec, horizon)?, horizon)?;
    let mut obs = vec![0.0f64; horizon + 1];
    for r in &reps {
        obs[r.final_block] += 1.0;
    }
    let expected: Vec<f64> = law_vec[1..].iter().map(|p| p * reps.len() as f64).collect();
    let (stat, df) = chi_square(&obs[1..], &expected);
    let crit = chi_square_critical(df, 3.0902);
    rows.push(
        ResultRow::check_le(e, "marked_block_chi2", stat, crit)
            .with_meta(&format!("df={df}; p=0.001 critical value")),
    );

    let fired_mean = mean(&reps.iter().map(|r| r.fired as f64).collect::<Vec<_>>());
    let seq = make_sequences(&gcfg.spec, horizon)?;
    let mut exp_fired = 0.0;
    let mut var_fired = 0.0;
    for k in 2..=horizon {
        let r = seq.ratio(k);
        exp_fired += r;
        var_fired += r * (1.0 - r);
    }
    let tol = 3.0 * (var_fired / reps.len() as f64).sqrt();
    rows.push(ResultRow::check(e, "jump_count_mean", fired_mean, exp_fired, tol)
        .with_meta("3 sigma of the exact Bernoulli sum"));

    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&gcfg, &streams)?;
    let g = &grown.structure;
    let t = grown.marked.expect("coupled growth carries a mark");
    let b1 = g.block(1);
    let base = g.seq.lambda(1) * b1.distance(b1.root(), t.point[1]);
    let mut out = String::from("step,J,height,discrete_height\n");
    for k in 1..=horizon {
        let _ = writeln!(
            out,
            "{k},{},{},{}",
            t.block[k],
            fmtf(base + t.marked_distance(1, k)),
            t.fired_count(k)
        );
    }
    emit(cfg, "trajectory.csv", &out)?;
    Ok(rows)
}

fn monotone(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let n = cfg.n_max;
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    let lambda: Vec<f64> = (1..=n).map(|k| spec.power_lambda(k)).collect();
    let weight: Vec<f64> = (1..=n).map(|k| spec.power_weight(k)).collect();
    let halved = SequenceSpec::table(
        cfg.alpha,
        cfg.beta,
        lambda.iter().map(|l| 0.5 * l).collect(),
        weight.clone(),
    );
    let drifted = SequenceSpec::table(
        cfg.alpha,
        cfg.beta,
        lambda.iter().enumerate().map(|(i, l)| l * ((i + 1) as f64).powf(-0.1)).collect(),
        weight,
    );
    let gcfg = growth(cfg, law, false);

    let replicas = cfg.replicas.max(1);
    let pairs_each = (cfg.probes as u64).div_ceil(replicas).max(1) as usize;
    struct Rep {
        half_dev: f64,
        violations: usize,
        pairs: usize,
    }
    let reps = {
        let gcfg = &gcfg;
        let halved = &halved;
        let drifted = &drifted;
        let results: Vec<Result<Rep>> = map_replicas(replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let (a, ah) = monotone_pair(gcfg, halved, &streams)?;
            let (_, ad) = monotone_pair(gcfg, drifted, &streams)?;
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
            Ok(Rep { half_dev, violations, pairs: pairs_each })
        });
        collect(results)?
    };

    let dev = reps.iter().map(|r| r.half_dev).fold(0.0f64, f64::max);
    let viol: usize = reps.iter().map(|r| r.violations).sum();
    let pairs: usize = reps.iter().map(|r| r.pairs).sum();
    Ok(vec![
        ResultRow::check(e, "half_scaling", dev, 0.0, 0.0)
            .with_meta("halving every scale halves every distance exactly"),
        ResultRow::check(e, "shrink_violations", viol as f64, 0.0, 0.0)
            .with_meta("pointwise smaller scales never increase a distance"),
        ResultRow::info(e, "pairs", pairs as f64),
    ])
}

fn box_count_exp(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let radii = radii_of(cfg)?;
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&growth(cfg, law, false), &streams)?;
    let g = &grown.structure;
    let mut rng = streams.free_stream(13);
    let bc = box_count(g, g.n_blocks(), &radii, cfg.samples, &mut rng)?;

    let mut out = String::from("r,count_or_mass,log_r,log_val\n");
    for row in &bc.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmtf(row.radius),
            row.count,
            fmtf(row.radius.ln()),
            fmtf((row.count as f64).ln())
        );
    }
    emit(cfg, "boxcount.csv", &out)?;
    emit(
        cfg,
        "boxcount_fit.csv",
        &format!(
            "slope,intercept,r2,window_hi,window_lo\n{},{},{},{},{}\n",
            fmtf(bc.fit.slope),
            fmtf(bc.fit.intercept),
            fmtf(bc.fit.r2),
            fmtf(bc.fit.window.0),
            fmtf(bc.fit.window.1)
        ),
    )?;

    let mut rows = vec![
        ResultRow::info(e, "slope", bc.fit.slope),
        ResultRow::info(e, "r2", bc.fit.r2),
        ResultRow::info(e, "sample_gap", bc.sample_gap),
    ];
    if cfg.n_max == 1 {
        // A single block has a known dimension to calibrate against.
        rows.push(
            ResultRow::check(e, "block_dimension", bc.fit.slope, law.dimension(), cfg.tol_or(0.05))
                .with_meta(&format!("flags: {}", bc.fit.flags.join("|"))),
        );
    }
    Ok(rows)
}

fn local_dim(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let radii = radii_of(cfg)?;
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&growth(cfg, law, false), &streams)?;
    let g = &grown.structure;
    let mut rng = streams.free_stream(29);
    let ld = local_dimension(g, g.n_blocks(), cfg.probes, &radii, &mut rng)?;

    let mut out = String::from("probe,slope\n");
    for (i, s) in ld.slopes.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmtf(*s));
    }
    emit(cfg, "localdim.csv", &out)?;

    let m = mean(&ld.slopes);
    let mut rows = vec![
        ResultRow::info(e, "mean_slope", m),
        ResultRow::info(e, "quantile10", ld.quantile10),
        ResultRow::info(e, "skipped", ld.skipped as f64),
    ];
    if cfg.n_max == 1 {
        rows.push(ResultRow::check(e, "block_dimension", m, law.dimension(), cfg.tol_or(0.05)));
    }
    Ok(rows)
}

fn covering_volume_exp(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let gcfg = growth(cfg, law, false);
    let mut ns: Vec<usize> = [cfg.n_max / 8, cfg.n_max / 4, cfg.n_max / 2, cfg.n_max]
        .into_iter()
        .filter(|&n| n >= 2)
        .collect();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::param("n_max too small for an exponent grid"));
    }
    let (vols, slope) = covering_volume_exponent(
        &gcfg, &ns, cfg.s, cfg.stage, cfg.eps, cfg.grow_factor, cfg.samples, cfg.seed,
    )?;

    let mut out = String::from("n,net_balls,log_expected_volume,coverage\n");
    for v in &vols {
        let _ = writeln!(out, "{},{},{},{}", v.n, v.net_balls, fmtf(v.log_expected_volume), fmtf(v.coverage));
    }
    emit(cfg, "covervol.csv", &out)?;

    let p = DimensionParams::new(cfg.alpha, cfg.beta, law.dimension())?;
    let target = f_i(&p, cfg.stage as usize, cfg.s);
    let min_cov = vols.iter().map(|v| v.coverage).fold(f64::INFINITY, f64::min);
    Ok(vec![
        ResultRow::check(e, "volume_exponent", slope, target, cfg.tol_or(0.3))
            .with_meta(&format!("stage {} at s={}", cfg.stage, fmtf(cfg.s))),
        ResultRow::check_ge(e, "coverage_min", min_cov, 0.9)
            .with_meta("realized covering catches the sampled subtree"),
    ])
}

fn hausdorff_gap(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let gcfg = growth(cfg, law, false);
    let mut ns: Vec<usize> = (1..=7)
        .map(|k| cfg.n_max >> (8 - k))
        .filter(|&n| n >= 2)
        .collect();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::param("n_max too small for a decay fit"));
    }

    let reps = {
        let gcfg = &gcfg;
        let ns = &ns;
        let results: Vec<Result<(Vec<f64>, Vec<f64>)>> = map_replicas(cfg.replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let grown = grow(gcfg, &streams)?;
            let g = &grown.structure;
            let gaps: Vec<f64> =
                hausdorff_gap_profile(g, ns)?.into_iter().map(|row| row.gap).collect();
            let mut heights = Vec::with_capacity(ns.len());
            for &n in ns.iter() {
                let root_n = PointRef { block: n, coord: g.block(n).root() };
                let mut h = 0.0f64;
                for k in g.subtree_blocks(n) {
                    let root_k = PointRef { block: k, coord: g.block(k).root() };
                    h = h.max(g.distance(root_n, root_k) + g.seq.lambda(k) * g.block(k).height());
                }
                heights.push(h);
            }
            Ok((gaps, heights))
        });
        collect(results)?
    };

    let m = ns.len();
    let mut gap_mean = vec![0.0f64; m];
    let mut height_mean = vec![0.0f64; m];
    for (gaps, heights) in &reps {
        for j in 0..m {
            gap_mean[j] += gaps[j];
            height_mean[j] += heights[j];
        }
    }
    for j in 0..m {
        gap_mean[j] /= reps.len() as f64;
        height_mean[j] /= reps.len() as f64;
    }

    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let gap_fit = fit_line(&xs, &gap_mean.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let height_fit = fit_line(&xs, &height_mean.iter().map(|v| v.ln()).collect::<Vec<_>>());

    let mut out = String::from("n,mean_gap,mean_subtree_height,log_n,log_gap,log_height\n");
    for j in 0..m {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            ns[j],
            fmtf(gap_mean[j]),
            fmtf(height_mean[j]),
            fmtf(xs[j]),
            fmtf(gap_mean[j].ln()),
            fmtf(height_mean[j].ln())
        );
    }
    emit(cfg, "gap.csv", &out)?;

    let tol = cfg.tol_or(0.15);
    Ok(vec![
        ResultRow::check(e, "gap_decay", gap_fit.slope, -cfg.alpha, tol)
            .with_meta(&format!("r2={}", fmtf(gap_fit.r2))),
        ResultRow::check(e, "height_decay", height_fit.slope, -cfg.alpha, tol)
            .with_meta(&format!("r2={}", fmtf(height_fit.r2))),
    ])
}

fn net_fragments(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let d = law.dimension();
    if d == 0.0 {
        return Err(Error::unsupported("fragment bounds need a curve block"));
    }
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let block = law.sample(&mut streams.stream(1, Channel::Content));
    let r = cfg.r_max;
    if !(r > 0.0 && r <= 0.25) {
        return Err(Error::param("need 0 < r_max <= 1/4 for the mass sandwich"));
    }

    let mut rng = streams.free_stream(19);
    let net = build_net(&block, r, &mut rng)?;

    let mut min_sep = f64::INFINITY;
    for i in 0..net.len() {
        for j in (i + 1)..net.len() {
            min_sep = min_sep.min(block.distance(net[i], net[j]));
        }
    }
    let probes = block.probe_grid(1.0 / cfg.probes.max(10) as f64);
    let mut max_cover = 0.0f64;
    for &x in &probes {
        let nearest = net.iter().map(|&c| block.distance(x, c)).fold(f64::INFINITY, f64::min);
        max_cover = max_cover.max(nearest);
    }

    let frags = fragments_from_net(&block, net.clone(), r)?;
    let cover_cap = block.covering_number(r / 4.0)?;

    let lo = (r / 4.0).powf(d + phi(d, r / 4.0)) * (1.0 - 1e-9);
    let hi = r.powf(d - phi(d, r)) * (1.0 + 1e-9);
    let min_mass = frags.masses.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mass = frags.masses.iter().copied().fold(0.0f64, f64::max);

    let overlap_probes = block.probe_grid(1e-3);
    let rp = r / 4.0;
    let mut max_overlap = 0usize;
    for &x in &overlap_probes {
        max_overlap = max_overlap.max(frags.intersecting(&block, x, rp).len());
    }

    let mut out = String::from("center_index,center_coord,mass,diameter_bound\n");
    for (i, &c) in frags.centers.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", coord_str(c), fmtf(frags.masses[i]), fmtf(2.0 * r));
    }
    emit(cfg, "fragments.csv", &out)?;

    Ok(vec![
        ResultRow::check_ge(e, "separation", min_sep, r / 2.0).with_meta("net points r/2 apart"),
        ResultRow::check_le(e, "covering_radius", max_cover, r + 1e-12)
            .with_meta(&format!("{} probe points", probes.len())),
        ResultRow::check_le(e, "fragment_count", frags.len() as f64, cover_cap as f64)
            .with_meta("at most the r/4 covering number"),
        ResultRow::check_ge(e, "mass_floor", min_mass, lo).with_meta("each cell holds its r/4 ball"),
        ResultRow::check_le(e, "mass_ceiling", max_mass, hi).with_meta("each cell fits in its r ball"),
        ResultRow::check_le(e, "ball_overlap", max_overlap as f64, 6.0)
            .with_meta("cells met by an r/4 ball"),
        ResultRow::info(e, "net_size", net.len() as f64),
    ])
}

fn generation_params(cfg: &ExperimentConfig) -> GenerationParams {
    GenerationParams {
        gamma: cfg.gamma,
        eta: cfg.eta,
        epsilon: cfg.window_eps,
        c: cfg.c,
        n0: cfg.n0,
        depth: cfg.depth,
    }
}

fn leaf_measure(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match cfg.mode.as_str() {
        "census" => leaf_census(cfg),
        "chi" => leaf_chi(cfg),
        "rates" => leaf_rates(cfg),
        "profile" => leaf_profile(cfg),
        other => Err(Error::param(format!(
            "unknown leaf-measure mode `{other}` (census | chi | rates | profile)"
        ))),
    }
}

fn leaf_census(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let params = generation_params(cfg);
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    params.validate(cfg.alpha, cfg.beta, law.dimension())?;
    let need = crate::leafmeasure::required_blocks(&spec, &params)?;
    let gcfg = GrowthConfig { law, spec, n_max: need, coupled: false };

    struct GenRow {
        base: usize,
        count: usize,
        mass: f64,
        min_gap: f64,
    }
    let reps = {
        let gcfg = &gcfg;
        let params = &params;
        let results: Vec<Result<Vec<GenRow>>> = map_replicas(cfg.replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let grown = grow(gcfg, &streams)?;
            let gens = build_generations(&grown.structure, params)?;
            Ok(gens
                .into_iter()
                .map(|g| GenRow { base: g.base, count: g.members.len(), mass: g.mass, min_gap: g.min_gap })
                .collect())
        });
        collect(results)?
    };

    let mut out = String::from("replica,k,n_k,member_count,mass,delta_k\n");
    for (r, gens) in reps.iter().enumerate() {
        for (k, g) in gens.iter().enumerate() {
            let _ = writeln!(out, "{r},{k},{},{},{},{}", g.base, g.count, fmtf(g.mass), fmtf(g.min_gap));
        }
    }
    emit(cfg, "census.csv", &out)?;

    let depth = params.depth;
    let replicas = reps.len() as f64;
    let mut rows = Vec::new();

    // First-generation mass identity against the exact transfer rate.
    let masses1: Vec<f64> = reps.iter().map(|g| g[1].mass).collect();
    let m1 = mean(&masses1);
    let se1 = sample_std(&masses1) / replicas.sqrt();
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&gcfg, &streams)?;
    let gens0 = build_generations(&grown.structure, &params)?;
    let target1 = gens0[1].attach_rate * gens0[0].mass;
    if gcfg.law.is_deterministic() {
        rows.push(
            ResultRow::check(e, "first_gen_mass", m1, target1, 3.0 * se1)
                .with_meta("rate times seed mass; 3 standard errors"),
        );
    } else {
        rows.push(ResultRow::info(e, "first_gen_mass", m1).with_meta("random blocks: seed mass varies"));
    }

    for k in 0..=depth {
        let nonempty = reps.iter().filter(|g| g[k].mass > 0.0).count();
        rows.push(ResultRow::info(e, &format!("nonempty_frac_k{k}"), nonempty as f64 / replicas));
    }

    // Conditional mass decay across generations; k = 0 is seeded rather
    // than grafted, so the fit starts at k = 1.
    if depth >= 2 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 1..=depth {
            let vals: Vec<f64> =
                reps.iter().filter(|g| g[k].mass > 0.0).map(|g| g[k].mass).collect();
            if vals.is_empty() {
                return Err(Error::numerics(format!("no replica reached generation {k}")));
            }
            xs.push((reps[0][k].base as f64).ln());
            ys.push(mean(&vals).ln());
        }
        let fit = fit_line(&xs, &ys);
        rows.push(
            ResultRow::check(
                e,
                "census_mass_slope",
                fit.slope,
                rate_exponent_prediction(cfg.beta, cfg.gamma),
                cfg.tol_or(0.3),
            )
            .with_meta("conditional mean mass vs window base"),
        );
    }
    Ok(rows)
}

fn leaf_chi(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let params = generation_params(cfg);
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    params.validate(cfg.alpha, cfg.beta, law.dimension())?;
    let need = crate::leafmeasure::required_blocks(&spec, &params)?;
    let gcfg = GrowthConfig { law, spec, n_max: need, coupled: false };
    let k = params.depth.max(1);
    let region = Region::FarHalf { block: cfg.region_block };

    let checks = {
        let gcfg = &gcfg;
        let params = &params;
        let results: Vec<Result<(f64, f64, f64)>> = map_replicas(cfg.replicas, |r| {
            let streams = ReplicaStreams::new(cfg.seed, r);
            let grown = grow(gcfg, &streams)?;
            let c = chi_mass(&grown.structure, params, k, region)?;
            Ok((c.observed, c.expected, c.region_mass))
        });
        collect(results)?
    };

    let obs: Vec<f64> = checks.iter().map(|c| c.0).collect();
    let expected = checks[0].1;
    let m = mean(&obs);
    let se = sample_std(&obs) / (obs.len() as f64).sqrt();

    let mut out = String::from("replica,observed\n");
    for (r, v) in obs.iter().enumerate() {
        let _ = writeln!(out, "{r},{}", fmtf(*v));
    }
    emit(cfg, "chi.csv", &out)?;

    // Tail table: empirical exceedance against the Chebyshev envelope of
    // the sample variance. Diagnostic, not a pinned bound.
    let sd = sample_std(&obs);
    let var = sd * sd;
    let n_k = {
        let streams = ReplicaStreams::new(cfg.seed, 0);
        let grown = grow(&gcfg, &streams)?;
        build_generations(&grown.structure, &params)?[k].base
    };
    let mut out = String::from("n_k,x,empirical_tail,bound\n");
    for mult in [0.5, 1.0, 2.0, 4.0] {
        let x = mult * sd;
        if x == 0.0 {
            continue;
        }
        let tail = obs.iter().filter(|&&v| (v - m).abs() > x).count() as f64 / obs.len() as f64;
        let bound = (var / (x * x)).min(1.0);
        let _ = writeln!(out, "{n_k},{},{},{}", fmtf(x), fmtf(tail), fmtf(bound));
    }
    emit(cfg, "concentration.csv", &out)?;

    Ok(vec![
        ResultRow::check(e, "grafted_mass_mean", m, expected, 3.0 * se)
            .with_meta(&format!("{} replicas; rate times region mass", obs.len())),
        ResultRow::info(e, "region_mass", checks[0].2),
    ])
}

fn leaf_rates(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let params = generation_params(cfg);
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    let schedule = attach_rate_schedule(&spec, &law, &params)?;

    let mut out = String::from("k,base,window_lo,window_hi,rate\n");
    for row in &schedule {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.k,
            fmtf(row.base),
            fmtf(row.window.0),
            fmtf(row.window.1),
            fmtf(row.rate)
        );
    }
    emit(cfg, "rates.csv", &out)?;

    let exponent = rate_product_exponent(&schedule)?;
    let prediction = rate_exponent_prediction(cfg.beta, cfg.gamma);
    Ok(vec![
        ResultRow::check(e, "rate_product_exponent", exponent, prediction, cfg.tol_or(0.1))
            .with_meta(&format!("depth {}; gamma (1-beta)/(gamma-1)", params.depth)),
        ResultRow::info(e, "generations", schedule.len() as f64),
    ])
}

fn leaf_profile(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let params = generation_params(cfg);
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    params.validate(cfg.alpha, cfg.beta, law.dimension())?;
    let need = crate::leafmeasure::required_blocks(&spec, &params)?;
    let gcfg = GrowthConfig { law, spec, n_max: need, coupled: false };

    for r in 0..cfg.replicas {
        let streams = ReplicaStreams::new(cfg.seed, r);
        let grown = grow(&gcfg, &streams)?;
        let gens = build_generations(&grown.structure, &params)?;
        if gens.iter().any(|g| g.members.is_empty()) {
            continue;
        }
        let mut rng = streams.free_stream(23);
        let profile = ball_profile(&grown.structure, &params, &gens, cfg.samples.min(64), &mut rng)?;
        let mut out = String::from("k,radius,mean_mass,exponent,samples\n");
        let mut rows = vec![ResultRow::info(e, "replica_used", r as f64)];
        for row in &profile {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.k,
                fmtf(row.radius),
                fmtf(row.mean_mass),
                fmtf(row.exponent),
                row.samples
            );
            rows.push(ResultRow::info(e, &format!("exponent_k{}", row.k), row.exponent));
        }
        emit(cfg, "profile.csv", &out)?;
        return Ok(rows);
    }
    Err(Error::numerics(format!(
        "no replica in 0..{} filled every generation; raise replicas or shrink depth",
        cfg.replicas
    )))
}

fn hypothesis(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let spec = SequenceSpec::power(cfg.alpha, cfg.beta);
    let which = if cfg.beta < 1.0 {
        Hypothesis::Circle
    } else if cfg.beta == 1.0 {
        Hypothesis::Square
    } else {
        Hypothesis::Diamond
    };
    let report = check_hypothesis(&spec, which, cfg.horizon, cfg.eps)?;

    let mut out = String::from("checkpoint,value\n");
    for (n, v) in &report.checkpoints {
        let _ = writeln!(out, "{n},{}", fmtf(*v));
    }
    emit(cfg, "hypothesis.csv", &out)?;

    let mut rows = vec![ResultRow::check(e, "shape", report.shape_ok as u8 as f64, 1.0, 0.0)
        .with_meta(&format!("{:?}: {}", which, if report.message.is_empty() { "ok" } else { &report.message }))];
    let last = report.checkpoints.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    if which == Hypothesis::Diamond && cfg.horizon >= (1 << 20) {
        rows.push(
            ResultRow::check(e, "window_density", last, 1.0, cfg.tol_or(0.05))
                .with_meta("good windows fill in the limit"),
        );
    } else {
        rows.push(ResultRow::info(e, "window_density", last)
            .with_meta("asymptotic check needs horizon >= 2^20"));
    }
    Ok(rows)
}

fn layout(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let e = &cfg.experiment;
    let law = law_of(cfg)?;
    let streams = ReplicaStreams::new(cfg.seed, 0);
    let grown = grow(&growth(cfg, law, false), &streams)?;
    let drawing = svg::render_layout(&grown.structure, &streams)?;
    emit(cfg, "layout.svg", &drawing)?;
    Ok(vec![
        ResultRow::info(e, "blocks", grown.structure.n_blocks() as f64),
        ResultRow::info(e, "svg_bytes", drawing.len() as f64),
    ])
}
