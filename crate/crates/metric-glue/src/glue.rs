//! The glued structure: blocks chained by random attachment, with exact
//! distance evaluation, projections, and the marked-point coupling.
//!
//! Block n (n >= 2) arrives scaled by lambda_n and is glued at a point
//! drawn from the weighted block measures of the structure so far: first a
//! block index with probability w_k / W_{n-1}, then a point from that
//! block's measure. Everything is indexed 1-based; slot 0 of the per-block
//! arrays is a sentinel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::blocks::{Block, BlockLaw, Coord};
use crate::error::{Error, Result};
use crate::params::{make_sequences, SequenceSpec, Sequences};
use crate::rng::{Channel, ReplicaStreams};
use crate::stats::KahanSum;

/// A point of the glued structure: a block index and a coordinate in it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointRef {
    pub block: usize,
    pub coord: Coord,
}

enum BlockStore {
    /// Deterministic laws realize every block identically.
    Shared(Block),
    /// One realized block per index, slot 0 unused.
    PerBlock(Vec<Block>),
}

pub struct GluedStructure {
    pub law: BlockLaw,
    pub seq: Sequences,
    store: BlockStore,
    parent: Vec<usize>,
    attach: Vec<Coord>,
    depth: Vec<u32>,
}

/// How to grow a structure.
#[derive(Clone, Debug)]
pub struct GrowthConfig {
    pub law: BlockLaw,
    pub spec: SequenceSpec,
    pub n_max: usize,
    /// Use the marked-point construction, tracking the distinguished ray.
    pub coupled: bool,
}

/// The distinguished ray of the marked-point construction. Entry n holds
/// the state after block n is glued; slot 0 is a sentinel.
pub struct MarkedTrajectory {
    /// J_n: block holding the mark.
    pub block: Vec<usize>,
    /// Y_n: coordinate of the mark within block J_n.
    pub point: Vec<Coord>,
    /// Whether step n resampled the mark (U_n <= w_n / W_n), n >= 2.
    pub fired: Vec<bool>,
    /// Scaled jump length at step n: lambda_n dist(root, Z_n) when fired.
    pub increments: Vec<f64>,
}

impl MarkedTrajectory {
    /// Exact telescoped distance between mark positions m and n (m <= n):
    /// the glued metric realizes it as the sum of the fired jump lengths.
    pub fn marked_distance(&self, m: usize, n: usize) -> f64 {
        let mut s = KahanSum::new();
        for k in (m + 1)..=n {
            s.add(self.increments[k]);
        }
        s.value()
    }

    /// Genealogical depth of the marked block: fired steps so far.
    pub fn fired_count(&self, n: usize) -> u32 {
        (2..=n).filter(|&k| self.fired[k]).count() as u32
    }
}

pub struct Grown {
    pub structure: GluedStructure,
    pub marked: Option<MarkedTrajectory>,
}

fn categorical<R: Rng + ?Sized>(cum: &[f64], n: usize, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cum[n - 1];
    let pos = cum[..n].partition_point(|&c| c <= u);
    pos.min(n - 1) + 1
}

pub fn grow(cfg: &GrowthConfig, streams: &ReplicaStreams) -> Result<Grown> {
    cfg.law.validate()?;
    let seq = make_sequences(&cfg.spec, cfg.n_max)?;
    let n_max = cfg.n_max;
    let store = if cfg.law.is_deterministic() {
        BlockStore::Shared(cfg.law.sample(&mut streams.stream(0, Channel::Content)))
    } else {
        let mut v = Vec::with_capacity(n_max + 1);
        v.push(cfg.law.sample(&mut streams.stream(0, Channel::Content)));
        for n in 1..=n_max {
            v.push(cfg.law.sample(&mut streams.stream(n, Channel::Content)));
        }
        BlockStore::PerBlock(v)
    };
    let block_at = |n: usize| -> &Block {
        match &store {
            BlockStore::Shared(b) => b,
            BlockStore::PerBlock(v) => &v[n],
        }
    };

    let mut parent = vec![0usize; n_max + 1];
    let mut attach = vec![Coord::Param(0.0); n_max + 1];
    let mut depth = vec![0u32; n_max + 1];
    attach[1] = block_at(1).root();

    let mut marked = None;
    if !cfg.coupled {
        let mut attach_rng = streams.stream(0, Channel::Attach);
        for n in 2..=n_max {
            let k = categorical(seq.prefix_slice(), n - 1, &mut attach_rng);
            let x = block_at(k).sample(&mut attach_rng);
            parent[n] = k;
            attach[n] = x;
            depth[n] = depth[k] + 1;
        }
    } else {
        let mut ind_rng = streams.stream(0, Channel::Indicator);
        let mut reserve_rng = streams.stream(0, Channel::Reserve);
        let mut j = 1usize;
        let mut y = block_at(1).sample(&mut streams.stream(1, Channel::Marked));
        let mut tr = MarkedTrajectory {
            block: vec![0; n_max + 1],
            point: vec![Coord::Param(0.0); n_max + 1],
            fired: vec![false; n_max + 1],
            increments: vec![0.0; n_max + 1],
        };
        tr.block[1] = 1;
        tr.point[1] = y;
        for n in 2..=n_max {
            let u = ind_rng.random::<f64>();
            if u <= seq.ratio(n) {
                // The new block lands on the mark, and the mark jumps into it.
                parent[n] = j;
                attach[n] = y;
                let b = block_at(n);
                j = n;
                y = b.sample(&mut streams.stream(n, Channel::Marked));
                tr.fired[n] = true;
                tr.increments[n] = seq.lambda(n) * b.distance(b.root(), y);
            } else {
                let k = categorical(seq.prefix_slice(), n - 1, &mut reserve_rng);
                let x = block_at(k).sample(&mut reserve_rng);
                parent[n] = k;
                attach[n] = x;
            }
            depth[n] = depth[parent[n]] + 1;
            tr.block[n] = j;
            tr.point[n] = y;
        }
        marked = Some(tr);
    }
    Ok(Grown {
        structure: GluedStructure { law: cfg.law, seq, store, parent, attach, depth },
        marked,
    })
}

impl GluedStructure {
    /// Hand-assemble a structure from explicit parts (parents must precede
    /// children; coordinates must live in the right block kind).
    pub fn assemble(
        law: BlockLaw,
        seq: Sequences,
        blocks: Vec<Block>,
        parent: Vec<usize>,
        attach: Vec<Coord>,
    ) -> Result<GluedStructure> {
        let n = seq.len();
        if blocks.len() != n + 1 || parent.len() != n + 1 || attach.len() != n + 1 {
            return Err(Error::param("per-block arrays must have length n_max + 1"));
        }
        if parent[1] != 0 {
            return Err(Error::param("block 1 must be the ancestor (parent 0)"));
        }
        let mut depth = vec![0u32; n + 1];
        for k in 2..=n {
            if parent[k] == 0 || parent[k] >= k {
                return Err(Error::param(format!("parent of {k} must precede it")));
            }
            let host = &blocks[parent[k]];
            let valid = match (host, attach[k]) {
                (Block::Segment | Block::Circle, Coord::Param(x)) => (0.0..=1.0).contains(&x),
                (Block::Finite { n, .. }, Coord::Atom(a)) => a < *n,
                _ => false,
            };
            if !valid {
                return Err(Error::param(format!("attachment of {k} invalid in its host")));
            }
            depth[k] = depth[parent[k]] + 1;
        }
        Ok(GluedStructure { law, seq, store: BlockStore::PerBlock(blocks), parent, attach, depth })
    }

    pub fn n_blocks(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn block(&self, n: usize) -> &Block {
        match &self.store {
            BlockStore::Shared(b) => b,
            BlockStore::PerBlock(v) => &v[n],
        }
    }

    pub fn parent(&self, n: usize) -> usize {
        self.parent[n]
    }

    /// Where block n is glued, as a point of the parent block.
    pub fn attach_point(&self, n: usize) -> PointRef {
        PointRef { block: self.parent[n], coord: self.attach[n] }
    }

    pub fn depth(&self, n: usize) -> u32 {
        self.depth[n]
    }

    pub fn root_point(&self) -> PointRef {
        PointRef { block: 1, coord: self.block(1).root() }
    }

    fn scaled_root_dist(&self, b: usize, c: Coord) -> f64 {
        let blk = self.block(b);
        self.seq.lambda(b) * blk.distance(blk.root(), c)
    }

    /// Glued metric: ascend both chains to the common block, accumulating
    /// scaled in-block legs, then close within it.
    pub fn distance(&self, x: PointRef, y: PointRef) -> f64 {
        let (mut bx, mut cx) = (x.block, x.coord);
        let (mut by, mut cy) = (y.block, y.coord);
        let mut acc_x = 0.0;
        let mut acc_y = 0.0;
        while bx != by {
            if self.depth[bx] >= self.depth[by] {
                acc_x += self.scaled_root_dist(bx, cx);
                cx = self.attach[bx];
                bx = self.parent[bx];
            } else {
                acc_y += self.scaled_root_dist(by, cy);
                cy = self.attach[by];
                by = self.parent[by];
            }
        }
        acc_x + acc_y + self.seq.lambda(bx) * self.block(bx).distance(cx, cy)
    }

    /// Nearest-point projection onto the union of blocks 1..=n, with the
    /// distance to it.
    pub fn project_with_distance(&self, x: PointRef, n: usize) -> (PointRef, f64) {
        let (mut b, mut c) = (x.block, x.coord);
        let mut acc = 0.0;
        while b > n {
            acc += self.scaled_root_dist(b, c);
            c = self.attach[b];
            b = self.parent[b];
        }
        (PointRef { block: b, coord: c }, acc)
    }

    pub fn project(&self, x: PointRef, n: usize) -> PointRef {
        self.project_with_distance(x, n).0
    }

    /// Draw from the weighted block measure over blocks 1..=n.
    pub fn sample_point<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PointRef {
        let k = categorical(self.seq.prefix_slice(), n, rng);
        PointRef { block: k, coord: self.block(k).sample(rng) }
    }

    /// Blocks of the genealogical subtree rooted at n (ascending order).
    pub fn subtree_blocks(&self, n: usize) -> Vec<usize> {
        let top = self.n_blocks();
        let mut inside = vec![false; top + 1];
        inside[n] = true;
        let mut out = vec![n];
        for m in (n + 1)..=top {
            if inside[self.parent[m]] {
                inside[m] = true;
                out.push(m);
            }
        }
        out
    }

    /// Total weight of the subtree rooted at n.
    pub fn subtree_weight(&self, n: usize) -> f64 {
        let mut s = KahanSum::new();
        for m in self.subtree_blocks(n) {
            s.add(self.seq.weight(m));
        }
        s.value()
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Entry point and base distance of every block 1..=n as seen from x:
    /// any z in block m satisfies
    /// dist(x, z) = base_m + lambda_m dist_m(entry_m, z).
    /// Blocks on x's ancestor chain are entered at the chain coordinate;
    /// every other block is entered through its root.
    pub fn gateways(&self, x: PointRef, n: usize) -> Vec<(Coord, f64)> {
        let mut gw: Vec<(Coord, f64)> = Vec::with_capacity(n + 1);
        let dummy = (Coord::Param(0.0), f64::INFINITY);
        gw.resize(n + 1, dummy);
        // Walk x's chain down to block 1, stamping chain entries.
        let (mut b, mut c) = (x.block, x.coord);
        let mut acc = 0.0;
        loop {
            if b <= n {
                gw[b] = (c, acc);
            }
            if b == 1 {
                break;
            }
            acc += self.scaled_root_dist(b, c);
            c = self.attach[b];
            b = self.parent[b];
        }
        // Everything else is reached through its parent's gateway.
        for m in 2..=n {
            if gw[m].1.is_finite() {
                continue;
            }
            let p = self.parent[m];
            let (pc, pbase) = gw[p];
            debug_assert!(pbase.is_finite(), "parents precede children");
            let host = self.block(p);
            let base = pbase + self.seq.lambda(p) * host.distance(pc, self.attach[m]);
            gw[m] = (self.block(m).root(), base);
        }
        gw
    }

    /// Mass of the open ball B(x, r) under the weighted block measure over
    /// blocks 1..=n (normalized by W_n), evaluated exactly via gateways.
    pub fn measure_ball(&self, gw: &[(Coord, f64)], n: usize, r: f64) -> f64 {
        let mut s = KahanSum::new();
        for m in 1..=n {
            let (entry, base) = gw[m];
            if base >= r {
                continue;
            }
            let lam = self.seq.lambda(m);
            let blk = self.block(m);
            let mass = if lam == 0.0 {
                blk.total_mass()
            } else {
                blk.ball_mass(entry, (r - base) / lam)
            };
            s.add(self.seq.weight(m) * mass);
        }
        s.value() / self.seq.prefix(n)
    }
}

/// log E[exp(theta * depth_n)] for the genealogical depth of the marked
/// block, both the exact product over steps and its exponential-moment
/// upper bound exp((e^theta - 1) sum_k w_k / W_k).
pub fn height_mgf_log(seq: &Sequences, n: usize, theta: f64) -> Result<(f64, f64)> {
    if n == 0 || n > seq.len() {
        return Err(Error::param(format!("n = {n} outside 1..={}", seq.len())));
    }
    let t = theta.exp() - 1.0;
    let mut exact = KahanSum::new();
    let mut bound = KahanSum::new();
    for k in 2..=n {
        let r = seq.ratio(k);
        exact.add((1.0 + t * r).ln());
        bound.add(t * r);
    }
    Ok((exact.value(), bound.value()))
}

/// Exact law of the marked block J_n: the mark sits in block k when step k
/// fired (or k = 1) and no later step did.
pub fn marked_block_law(seq: &Sequences, n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > seq.len() {
        return Err(Error::param(format!("n = {n} outside 1..={}", seq.len())));
    }
    let mut law = vec![0.0; n + 1];
    let mut survive = 1.0;
    for k in (1..=n).rev() {
        law[k] = if k == 1 { survive } else { survive * seq.ratio(k) };
        if k > 1 {
            survive *= 1.0 - seq.ratio(k);
        }
    }
    Ok(law)
}

/// Relative subtree weight of the block arriving at time n, followed from
/// its birth value w_n / W_n through `horizon`. Each later arrival joins
/// the subtree with conditional probability equal to the current relative
/// weight, which makes the trajectory a martingale.
pub fn urn_trajectory(
    seq: &Sequences,
    n: usize,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if n == 0 || n > horizon || horizon > seq.len() {
        return Err(Error::param(format!(
            "need 1 <= n <= horizon <= {}, got n = {n}, horizon = {horizon}",
            seq.len()
        )));
    }
    let mut m = seq.ratio(n);
    let mut out = Vec::with_capacity(horizon - n + 1);
    out.push(m);
    for i in n..horizon {
        let w_new = seq.weight(i + 1);
        let w_cur = seq.prefix(i);
        let w_next = seq.prefix(i + 1);
        let hit = rng.random::<f64>() <= m;
        m = (w_cur * m + if hit { w_new } else { 0.0 }) / w_next;
        out.push(m);
    }
    Ok(out)
}

/// Grow the same randomness under two scaling specs, the second dominated
/// by the first (identical weights, lambda'_n <= lambda_n). Every glued
/// distance in the second structure is then dominated by the first; when
/// lambda' = lambda / 2^k the distances halve exactly.
pub fn monotone_pair(
    cfg: &GrowthConfig,
    shrunk: &SequenceSpec,
    streams: &ReplicaStreams,
) -> Result<(Grown, Grown)> {
    let a = make_sequences(&cfg.spec, cfg.n_max)?;
    let b = make_sequences(shrunk, cfg.n_max)?;
    for k in 1..=cfg.n_max {
        if b.weight(k) != a.weight(k) {
            return Err(Error::param(format!("weights must match at {k}")));
        }
        if b.lambda(k) > a.lambda(k) {
            return Err(Error::param(format!(
                "shrunk scaling exceeds the original at {k}"
            )));
        }
    }
    let first = grow(cfg, streams)?;
    let mut cfg2 = cfg.clone();
    cfg2.spec = shrunk.clone();
    let second = grow(&cfg2, streams)?;
    Ok((first, second))
}
