//! Pointed measured blocks: the pieces that get scaled and glued.
//!
//! A block carries a compact metric on its support, a distinguished root,
//! and a probability measure. Built-in laws: the unit segment with Lebesgue
//! measure rooted at 0, the circle of circumference 1 with uniform measure,
//! the k-point star with unit pairwise distances, and a randomized finite
//! tree whose arm lengths are uniform on [1/2, 3/2].

use rand::Rng;

use crate::error::{Error, Result};

/// A point of a block: a parameter in [0, 1] for the continuous laws, an
/// atom index for the finite ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coord {
    Param(f64),
    Atom(usize),
}

/// One realized block.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Segment,
    Circle,
    Finite { dist: Vec<f64>, mass: Vec<f64>, n: usize },
}

fn circle_dist(u: f64, v: f64) -> f64 {
    let t = (u - v).abs();
    t.min(1.0 - t)
}

impl Block {
    /// Finite block from a full distance matrix and atom masses. The root is
    /// atom 0.
    pub fn finite(dist: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Block> {
        let n = mass.len();
        if n == 0 {
            return Err(Error::param("finite block needs at least one atom"));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::param("distance matrix shape mismatch"));
        }
        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::param(format!("distance ({i},{j}) = {d} invalid")));
                }
                if (d - dist[j][i]).abs() > 1e-12 {
                    return Err(Error::param("distance matrix must be symmetric"));
                }
                if i == j && d != 0.0 {
                    return Err(Error::param("diagonal must vanish"));
                }
                flat[i * n + j] = d;
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if flat[i * n + j] > flat[i * n + k] + flat[k * n + j] + 1e-12 {
                        return Err(Error::param("triangle inequality violated"));
                    }
                }
            }
        }
        if mass.iter().any(|&m| !m.is_finite() || m < 0.0) {
            return Err(Error::param("atom masses must be nonnegative"));
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("total mass must be positive"));
        }
        Ok(Block::Finite { dist: flat, mass, n })
    }

    pub fn root(&self) -> Coord {
        match self {
            Block::Segment | Block::Circle => Coord::Param(0.0),
            Block::Finite { .. } => Coord::Atom(0),
        }
    }

    pub fn distance(&self, a: Coord, b: Coord) -> f64 {
        match (self, a, b) {
            (Block::Segment, Coord::Param(x), Coord::Param(y)) => (x - y).abs(),
            (Block::Circle, Coord::Param(x), Coord::Param(y)) => circle_dist(x, y),
            (Block::Finite { dist, n, .. }, Coord::Atom(i), Coord::Atom(j)) => dist[i * n + j],
            _ => panic!("coordinate kind does not match block"),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Block::Segment | Block::Circle => 1.0,
            Block::Finite { mass, .. } => mass.iter().sum(),
        }
    }

    /// haut: the largest distance from the root.
    pub fn height(&self) -> f64 {
        match self {
            Block::Segment => 1.0,
            Block::Circle => 0.5,
            Block::Finite { dist, n, .. } => {
                (0..*n).map(|j| dist[j]).fold(0.0, f64::max)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Block::Segment => 1.0,
            Block::Circle => 0.5,
            Block::Finite { dist, .. } => dist.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn atom_count(&self) -> Option<usize> {
        match self {
            Block::Finite { n, .. } => Some(*n),
            _ => None,
        }
    }

    pub fn min_atom_mass(&self) -> Option<f64> {
        match self {
            Block::Finite { mass, .. } => mass.iter().copied().reduce(f64::min),
            _ => None,
        }
    }

    /// Draw a point from the block's measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Coord {
        match self {
            Block::Segment | Block::Circle => Coord::Param(rng.random::<f64>()),
            Block::Finite { mass, .. } => {
                let total: f64 = mass.iter().sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (i, &m) in mass.iter().enumerate() {
                    acc += m;
                    if u < acc {
                        return Coord::Atom(i);
                    }
                }
                Coord::Atom(mass.len() - 1)
            }
        }
    }

    /// Measure of the open ball around `center`.
    pub fn ball_mass(&self, center: Coord, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match (self, center) {
            (Block::Segment, Coord::Param(x)) => (x + r).min(1.0) - (x - r).max(0.0),
            (Block::Circle, Coord::Param(_)) => (2.0 * r).min(1.0),
            (Block::Finite { dist, mass, n }, Coord::Atom(i)) => (0..*n)
                .filter(|&j| dist[i * n + j] < r)
                .map(|j| mass[j])
                .sum(),
            _ => panic!("coordinate kind does not match block"),
        }
    }

    /// Mass of the far half `{x : dist(root, x) > haut/2}`.
    pub fn upper_half_mass(&self) -> f64 {
        match self {
            Block::Segment | Block::Circle => 0.5,
            Block::Finite { dist, mass, n } => {
                let cut = self.height() / 2.0;
                (0..*n).filter(|&j| dist[j] > cut).map(|j| mass[j]).sum()
            }
        }
    }

    /// Draw from the measure conditioned on the far half. Rejection is cheap
    /// here: every supported law keeps at least mass 1/k beyond haut/2.
    pub fn sample_upper_half<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Coord> {
        if self.upper_half_mass() <= 0.0 {
            return Err(Error::numerics("far half carries no mass"));
        }
        let cut = self.height() / 2.0;
        for _ in 0..10_000 {
            let x = self.sample(rng);
            if self.distance(self.root(), x) > cut {
                return Ok(x);
            }
        }
        Err(Error::numerics("far-half rejection sampling stalled"))
    }

    /// Minimal number of closed balls of radius `r`, centers in the block,
    /// covering the support. Closed form for the continuous laws, exact
    /// bitmask set cover for finite blocks (at most 20 atoms).
    pub fn covering_number(&self, r: f64) -> Result<usize> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::param(format!("covering radius must be positive, got {r}")));
        }
        let snap_ceil = |q: f64| -> usize {
            // Guard ties computed in floating point against spurious bumps.
            let r = q.round();
            if (q - r).abs() < 1e-9 { r as usize } else { q.ceil() as usize }
        };
        match self {
            Block::Segment => {
                if r >= 0.5 {
                    Ok(1)
                } else {
                    Ok(snap_ceil((1.0 - 2.0 * r) / (2.0 * r)) + 1)
                }
            }
            Block::Circle => {
                if r >= 0.5 {
                    Ok(1)
                } else {
                    Ok(snap_ceil(1.0 / (2.0 * r)).max(2))
                }
            }
            Block::Finite { dist, n, .. } => {
                let n = *n;
                if n > 20 {
                    return Err(Error::unsupported(format!(
                        "exact set cover capped at 20 atoms, block has {n}"
                    )));
                }
                let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
                let balls: Vec<u32> = (0..n)
                    .map(|i| {
                        (0..n)
                            .filter(|&j| dist[i * n + j] <= r)
                            .fold(0u32, |m, j| m | (1 << j))
                    })
                    .collect();
                let mut dp = vec![u8::MAX; (full as usize) + 1];
                dp[0] = 0;
                for mask in 0..=full {
                    let cur = dp[mask as usize];
                    if cur == u8::MAX {
                        continue;
                    }
                    for &b in &balls {
                        let next = (mask | b) as usize;
                        if dp[next] > cur + 1 {
                            dp[next] = cur + 1;
                        }
                    }
                }
                Ok(dp[full as usize] as usize)
            }
        }
    }

    /// Deterministic probe points at the given mesh: every point of the
    /// support lies within `mesh/2` of a probe.
    pub fn probe_grid(&self, mesh: f64) -> Vec<Coord> {
        match self {
            Block::Segment => {
                let n = (1.0 / mesh).ceil() as usize;
                (0..=n).map(|i| Coord::Param(i as f64 / n as f64)).collect()
            }
            Block::Circle => {
                let n = ((1.0 / mesh).ceil() as usize).max(2);
                (0..n).map(|i| Coord::Param(i as f64 / n as f64)).collect()
            }
            Block::Finite { n, .. } => (0..*n).map(Coord::Atom).collect(),
        }
    }
}

/// Mass-scale exponent correction for the two-sided ball-mass bound: balls
/// of radius `r <= 1/4` on the built-in laws satisfy
/// `r^(d+phi) <= mass <= r^(d-phi)` with this `phi`.
pub fn phi(d: f64, r: f64) -> f64 {
    debug_assert!(r > 0.0 && r < 1.0);
    (d / 2.0).min(std::f64::consts::LN_2 / (1.0 / r).ln())
}

/// Distribution the i.i.d. blocks are drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockLaw {
    Segment,
    Circle,
    /// k atoms, all pairwise distances 1, uniform masses.
    FiniteStar { k: usize },
    /// k atoms on a star tree with independent arm lengths uniform on
    /// [1/2, 3/2]; dist(i, j) = u_i + u_j for i != j. Uniform masses.
    FiniteRandom { k: usize },
}

impl BlockLaw {
    pub fn parse(s: &str) -> Result<BlockLaw> {
        let law = match s {
            "segment" => BlockLaw::Segment,
            "circle" => BlockLaw::Circle,
            _ => {
                let (name, arg) = s
                    .split_once(':')
                    .ok_or_else(|| Error::param(format!("unknown block law '{s}'")))?;
                let k: usize = arg
                    .parse()
                    .map_err(|_| Error::param(format!("bad atom count in law '{s}'")))?;
                match name {
                    "star" => BlockLaw::FiniteStar { k },
                    "random" => BlockLaw::FiniteRandom { k },
                    _ => return Err(Error::param(format!("unknown block law '{s}'"))),
                }
            }
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BlockLaw::FiniteStar { k } | BlockLaw::FiniteRandom { k } if k < 2 => {
                Err(Error::param(format!("finite laws need at least 2 atoms, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// Dimension d of the blocks this law produces.
    pub fn dimension(&self) -> f64 {
        match self {
            BlockLaw::Segment | BlockLaw::Circle => 1.0,
            _ => 0.0,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, BlockLaw::FiniteRandom { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Block {
        match *self {
            BlockLaw::Segment => Block::Segment,
            BlockLaw::Circle => Block::Circle,
            BlockLaw::FiniteStar { k } => {
                let mut dist = vec![1.0; k * k];
                for i in 0..k {
                    dist[i * k + i] = 0.0;
                }
                Block::Finite { dist, mass: vec![1.0 / k as f64; k], n: k }
            }
            BlockLaw::FiniteRandom { k } => {
                let arms: Vec<f64> = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
                let mut dist = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            dist[i * k + j] = arms[i] + arms[j];
                        }
                    }
                }
                Block::Finite { dist, mass: vec![1.0 / k as f64; k], n: k }
            }
        }
    }

    /// E[dist(root, Z)] for Z drawn from the block measure (averaged over
    /// the law for the randomized one).
    pub fn mean_root_distance(&self) -> f64 {
        match *self {
            BlockLaw::Segment => 0.5,
            BlockLaw::Circle => 0.25,
            BlockLaw::FiniteStar { k } => (k - 1) as f64 / k as f64,
            // arms average 1, both endpoints contribute
            BlockLaw::FiniteRandom { k } => 2.0 * (k - 1) as f64 / k as f64,
        }
    }

    /// E[dist(root, Z)^2], same averaging.
    pub fn mean_sq_root_distance(&self) -> f64 {
        match *self {
            BlockLaw::Segment => 1.0 / 3.0,
            BlockLaw::Circle => 1.0 / 12.0,
            BlockLaw::FiniteStar { k } => (k - 1) as f64 / k as f64,
            // Var(u_0 + u_j) + E^2 = 2/12 + 4
            BlockLaw::FiniteRandom { k } => (k - 1) as f64 / k as f64 * (4.0 + 1.0 / 6.0),
        }
    }
}

impl std::fmt::Display for BlockLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockLaw::Segment => write!(f, "segment"),
            BlockLaw::Circle => write!(f, "circle"),
            BlockLaw::FiniteStar { k } => write!(f, "star:{k}"),
            BlockLaw::FiniteRandom { k } => write!(f, "random:{k}"),
        }
    }
}

const NET_DRAW_BUDGET: usize = 262_144;

/// Greedy net at radius `r`: measure samples are kept when they clear `r/2`
/// from every prior point, until a deterministic probe grid certifies an
/// r-covering. Kept points are pairwise `>= r/2` apart, so the net size is
/// bounded by the covering number at r/4.
pub fn build_net<R: Rng + ?Sized>(block: &Block, r: f64, rng: &mut R) -> Result<Vec<Coord>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param(format!("net radius must be positive, got {r}")));
    }
    let probes = block.probe_grid(r / 8.0);
    // Probes sit within r/16 of any support point, so probe coverage at
    // 7r/8 certifies true coverage at 7r/8 + r/16 < r.
    let threshold = 0.875 * r;
    let covered = |net: &[Coord]| {
        probes.iter().all(|&p| {
            net.iter().any(|&x| block.distance(p, x) <= threshold)
        })
    };
    let mut net: Vec<Coord> = Vec::new();
    let mut since_change = 0usize;
    for _ in 0..NET_DRAW_BUDGET {
        if !net.is_empty() && since_change >= 32 {
            if covered(&net) {
                return Ok(net);
            }
            since_change = 0;
        }
        let x = block.sample(rng);
        if net.iter().all(|&y| block.distance(x, y) >= r / 2.0) {
            net.push(x);
            since_change = 0;
        } else {
            since_change += 1;
        }
    }
    if covered(&net) {
        Ok(net)
    } else {
        Err(Error::numerics("net construction exhausted its draw budget"))
    }
}

enum FragmentDetail {
    /// Sorted cut positions over [0, 1]; cell j = [cuts[j], cuts[j+1]],
    /// owned by net point owner[j].
    Segment { cuts: Vec<f64>, owner: Vec<usize> },
    /// Cyclic arcs: arc j runs from cuts[j] to cuts[(j+1) % m] (wrapping),
    /// owned by owner[j].
    Circle { cuts: Vec<f64>, owner: Vec<usize> },
    /// owner[atom] = fragment index.
    Finite { owner: Vec<usize> },
}

/// Partition of a block into cells of its net: cell i collects the points
/// whose nearest net point is x_i (lowest index on ties). Every cell
/// contains the r/4-ball around its center and sits inside the r-ball.
pub struct Fragments {
    pub radius: f64,
    pub centers: Vec<Coord>,
    pub masses: Vec<f64>,
    detail: FragmentDetail,
}

impl Fragments {
    /// Nearest-center index with lowest-index tie-breaking.
    pub fn assign(&self, block: &Block, x: Coord) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, &c) in self.centers.iter().enumerate() {
            let d = block.distance(x, c);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Indices of fragments meeting the open ball around `center`, exact for
    /// the 1d laws via the cell boundaries.
    pub fn intersecting(&self, block: &Block, center: Coord, rp: f64) -> Vec<usize> {
        let mut out: Vec<usize> = match (&self.detail, center) {
            (FragmentDetail::Segment { cuts, owner }, Coord::Param(x)) => {
                let lo = (x - rp).max(0.0);
                let hi = (x + rp).min(1.0);
                (0..owner.len())
                    .filter(|&j| cuts[j] < hi && cuts[j + 1] > lo)
                    .map(|j| owner[j])
                    .collect()
            }
            (FragmentDetail::Circle { cuts, owner }, Coord::Param(x)) => {
                let m = owner.len();
                if m == 1 {
                    vec![owner[0]]
                } else {
                    let overlaps = |j: usize| {
                        let a = cuts[j];
                        let span = (cuts[(j + 1) % m] - a).rem_euclid(1.0);
                        let span = if span == 0.0 { 1.0 } else { span };
                        // Arc [a, a+span) meets the ball iff some point of it
                        // is within rp of x (cyclically).
                        let off = (x - a).rem_euclid(1.0);
                        off < span + rp || off > 1.0 - rp
                    };
                    (0..m).filter(|&j| overlaps(j)).map(|j| owner[j]).collect()
                }
            }
            (FragmentDetail::Finite { owner }, Coord::Atom(_)) => match block {
                Block::Finite { dist: _, n, .. } => (0..*n)
                    .filter(|&j| block.distance(center, Coord::Atom(j)) < rp)
                    .map(|j| owner[j])
                    .collect(),
                _ => unreachable!(),
            },
            _ => panic!("coordinate kind does not match fragments"),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Carve the block along the Voronoi cells of a net built at radius `r`.
pub fn build_fragments<R: Rng + ?Sized>(block: &Block, r: f64, rng: &mut R) -> Result<Fragments> {
    let net = build_net(block, r, rng)?;
    fragments_from_net(block, net, r)
}

pub fn fragments_from_net(block: &Block, net: Vec<Coord>, r: f64) -> Result<Fragments> {
    if net.is_empty() {
        return Err(Error::param("net must be nonempty"));
    }
    let detail;
    let masses;
    match block {
        Block::Segment => {
            let mut order: Vec<(f64, usize)> = net
                .iter()
                .enumerate()
                .map(|(i, &c)| match c {
                    Coord::Param(x) => (x, i),
                    _ => panic!("coordinate kind does not match block"),
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let m = order.len();
            let mut cuts = Vec::with_capacity(m + 1);
            cuts.push(0.0);
            for w in order.windows(2) {
                cuts.push((w[0].0 + w[1].0) / 2.0);
            }
            cuts.push(1.0);
            let owner: Vec<usize> = order.iter().map(|&(_, i)| i).collect();
            let mut ms = vec![0.0; m];
            for j in 0..m {
                ms[owner[j]] += cuts[j + 1] - cuts[j];
            }
            masses = ms;
            detail = FragmentDetail::Segment { cuts, owner };
        }
        Block::Circle => {
            let mut order: Vec<(f64, usize)> = net
                .iter()
                .enumerate()
                .map(|(i, &c)| match c {
                    Coord::Param(x) => (x.rem_euclid(1.0), i),
                    _ => panic!("coordinate kind does not match block"),
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let m = order.len();
            let mut cuts = Vec::with_capacity(m);
            let mut ms = vec![0.0; m];
            if m == 1 {
                cuts.push(order[0].0);
                ms[order[0].1] = 1.0;
            } else {
                // cuts[j] = cyclic midpoint between point j-1 and point j.
                for j in 0..m {
                    let prev = order[(j + m - 1) % m].0;
                    let cur = order[j].0;
                    let gap = (cur - prev).rem_euclid(1.0);
                    cuts.push((prev + gap / 2.0).rem_euclid(1.0));
                }
                for j in 0..m {
                    let arc = (cuts[(j + 1) % m] - cuts[j]).rem_euclid(1.0);
                    ms[order[j].1] += arc;
                }
            }
            let owner: Vec<usize> = order.iter().map(|&(_, i)| i).collect();
            masses = ms;
            detail = FragmentDetail::Circle { cuts, owner };
        }
        Block::Finite { mass, n, .. } => {
            let mut owner = vec![0usize; *n];
            let mut ms = vec![0.0; net.len()];
            for a in 0..*n {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (i, &c) in net.iter().enumerate() {
                    let d = block.distance(Coord::Atom(a), c);
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                owner[a] = best;
                ms[best] += mass[a];
            }
            masses = ms;
            detail = FragmentDetail::Finite { owner };
        }
    }
    Ok(Fragments { radius: r, centers: net, masses, detail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn segment_and_circle_geometry() {
        let s = Block::Segment;
        assert_eq!(s.distance(Coord::Param(0.1), Coord::Param(0.9)), 0.8);
        assert_eq!(s.height(), 1.0);
        assert_eq!(s.diameter(), 1.0);
        let c = Block::Circle;
        assert!((c.distance(Coord::Param(0.1), Coord::Param(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(c.height(), 0.5);
        assert_eq!(c.diameter(), 0.5);
    }

    #[test]
    fn ball_masses_are_exact_lengths() {
        let s = Block::Segment;
        assert!((s.ball_mass(Coord::Param(0.5), 0.2) - 0.4).abs() < 1e-15);
        assert!((s.ball_mass(Coord::Param(0.05), 0.2) - 0.25).abs() < 1e-15);
        let c = Block::Circle;
        assert!((c.ball_mass(Coord::Param(0.3), 0.2) - 0.4).abs() < 1e-15);
        assert_eq!(c.ball_mass(Coord::Param(0.3), 0.6), 1.0);
    }

    #[test]
    fn far_half_masses() {
        assert_eq!(Block::Segment.upper_half_mass(), 0.5);
        assert_eq!(Block::Circle.upper_half_mass(), 0.5);
        let star = BlockLaw::FiniteStar { k: 4 }.sample(&mut rng(1));
        assert!((star.upper_half_mass() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn far_half_sampling_respects_the_cut() {
        let blocks = [
            Block::Segment,
            Block::Circle,
            BlockLaw::FiniteRandom { k: 3 }.sample(&mut rng(7)),
        ];
        let mut r = rng(2);
        for b in &blocks {
            let cut = b.height() / 2.0;
            for _ in 0..200 {
                let x = b.sample_upper_half(&mut r).unwrap();
                assert!(b.distance(b.root(), x) > cut);
            }
        }
    }

    #[test]
    fn covering_numbers_match_closed_forms() {
        let s = Block::Segment;
        assert_eq!(s.covering_number(0.001).unwrap(), 500);
        assert_eq!(s.covering_number(0.05).unwrap(), 10);
        assert_eq!(s.covering_number(0.25).unwrap(), 2);
        assert_eq!(s.covering_number(0.5).unwrap(), 1);
        let c = Block::Circle;
        assert_eq!(c.covering_number(0.3).unwrap(), 2);
        assert_eq!(c.covering_number(0.05).unwrap(), 10);
        assert_eq!(c.covering_number(0.6).unwrap(), 1);
    }

    #[test]
    fn finite_covering_is_exact() {
        let star = BlockLaw::FiniteStar { k: 5 }.sample(&mut rng(1));
        // At r = 1/2 each ball holds one atom; at r = 1 one ball suffices.
        assert_eq!(star.covering_number(0.5).unwrap(), 5);
        assert_eq!(star.covering_number(1.0).unwrap(), 1);
        // Two-cluster metric: one ball per cluster once r reaches the
        // in-cluster spread.
        let d = vec![
            vec![0.0, 0.1, 1.0, 1.0],
            vec![0.1, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.1],
            vec![1.0, 1.0, 0.1, 0.0],
        ];
        let b = Block::finite(d, vec![0.25; 4]).unwrap();
        assert_eq!(b.covering_number(0.1).unwrap(), 2);
        assert_eq!(b.covering_number(0.05).unwrap(), 4);
    }

    #[test]
    fn random_law_shape() {
        let b = BlockLaw::FiniteRandom { k: 2 }.sample(&mut rng(3));
        if let Block::Finite { dist, mass, n } = &b {
            assert_eq!(*n, 2);
            assert_eq!(mass, &vec![0.5, 0.5]);
            let d = dist[1];
            assert!((1.0..=3.0).contains(&d), "arm sum out of range: {d}");
        } else {
            panic!("random law must make a finite block");
        }
        assert!(BlockLaw::parse("random:1").is_err());
        assert!(BlockLaw::parse("star:0").is_err());
        assert_eq!(BlockLaw::parse("star:4").unwrap(), BlockLaw::FiniteStar { k: 4 });
        assert!(BlockLaw::parse("blob").is_err());
    }

    #[test]
    fn law_sampling_is_stream_deterministic() {
        let law = BlockLaw::FiniteRandom { k: 3 };
        let a = law.sample(&mut rng(11));
        let b = law.sample(&mut rng(11));
        assert_eq!(a, b);
    }

    #[test]
    fn finite_constructor_rejects_bad_metrics() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(Block::finite(asym, vec![0.5, 0.5]).is_err());
        let diag = vec![vec![0.5, 1.0], vec![1.0, 0.0]];
        assert!(Block::finite(diag, vec![0.5, 0.5]).is_err());
        let tri = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(Block::finite(tri, vec![1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn phi_caps_and_decays() {
        assert_eq!(phi(1.0, 0.25), 0.5);
        assert!((phi(1.0, 0.1) - std::f64::consts::LN_2 / 10f64.ln()).abs() < 1e-15);
        assert!(phi(1.0, 0.001) < 0.11);
    }

    #[test]
    fn nets_pack_and_cover() {
        for block in [Block::Segment, Block::Circle] {
            let r = 0.1;
            let net = build_net(&block, r, &mut rng(5)).unwrap();
            for (i, &x) in net.iter().enumerate() {
                for &y in &net[..i] {
                    assert!(block.distance(x, y) >= r / 2.0, "packing violated");
                }
            }
            assert!(net.len() <= block.covering_number(r / 4.0).unwrap());
            for &p in &block.probe_grid(0.01) {
                let d = net.iter().map(|&x| block.distance(p, x)).fold(f64::INFINITY, f64::min);
                assert!(d <= r, "probe {p:?} uncovered at {d}");
            }
        }
    }

    #[test]
    fn star_net_collects_every_atom() {
        let star = BlockLaw::FiniteStar { k: 3 }.sample(&mut rng(1));
        let net = build_net(&star, 0.5, &mut rng(6)).unwrap();
        assert_eq!(net.len(), 3);
    }

    #[test]
    fn fragment_masses_sandwich() {
        let r = 0.1;
        for block in [Block::Segment, Block::Circle] {
            let frags = build_fragments(&block, r, &mut rng(8)).unwrap();
            let total: f64 = frags.masses.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let lo = (r / 4.0).powf(1.0 + phi(1.0, r / 4.0));
            let hi = r.powf(1.0 - phi(1.0, r));
            for &m in &frags.masses {
                assert!(m >= lo - 1e-12 && m <= hi + 1e-12, "mass {m} outside [{lo},{hi}]");
            }
        }
    }

    #[test]
    fn fragments_contain_their_quarter_balls() {
        let r = 0.1;
        let block = Block::Circle;
        let frags = build_fragments(&block, r, &mut rng(9)).unwrap();
        let mut rr = rng(10);
        for _ in 0..1_000 {
            let y = block.sample(&mut rr);
            let i = frags.assign(&block, y);
            // The assigned center is within r (covering), and any point
            // within r/4 of a center belongs to that center's cell.
            assert!(block.distance(y, frags.centers[i]) <= r + 1e-12);
            for (j, &c) in frags.centers.iter().enumerate() {
                if block.distance(y, c) < r / 4.0 {
                    assert_eq!(i, j, "quarter ball leaked out of its cell");
                }
            }
        }
    }

    #[test]
    fn fragment_ball_intersections_stay_bounded() {
        let (r, rp) = (0.1, 0.05);
        let block = Block::Circle;
        let frags = build_fragments(&block, r, &mut rng(12)).unwrap();
        // Disjoint cells holding their quarter balls inside B(x, rp + 2r)
        // cannot outnumber the mass ratio.
        let bound = (rp + 2.0 * r).powf(1.0 - phi(1.0, rp + 2.0 * r))
            / (r / 4.0).powf(1.0 + phi(1.0, r / 4.0));
        let mut worst = 0usize;
        for &p in &block.probe_grid(0.005) {
            let hits = frags.intersecting(&block, p, rp);
            for &i in &hits {
                assert!(
                    block.distance(p, frags.centers[i]) <= rp + r + 1e-12,
                    "reported intersection too far"
                );
            }
            worst = worst.max(hits.len());
        }
        assert!(worst as f64 <= bound);
        assert!(worst <= 6, "ball of radius {rp} met {worst} fragments");
    }

    #[test]
    fn finite_fragments_partition_atoms() {
        let star = BlockLaw::FiniteStar { k: 4 }.sample(&mut rng(1));
        let frags = build_fragments(&star, 0.5, &mut rng(13)).unwrap();
        assert_eq!(frags.len(), 4);
        for &m in &frags.masses {
            assert!((m - 0.25).abs() < 1e-15);
        }
        for a in 0..4 {
            let i = frags.assign(&star, Coord::Atom(a));
            assert_eq!(frags.centers[i], Coord::Atom(a));
        }
    }

    #[test]
    fn law_moments_match_montecarlo() {
        let mut r = rng(14);
        for law in [
            BlockLaw::Segment,
            BlockLaw::Circle,
            BlockLaw::FiniteStar { k: 3 },
            BlockLaw::FiniteRandom { k: 2 },
        ] {
            let (mut s1, mut s2) = (0.0, 0.0);
            let n = 200_000;
            for _ in 0..n {
                let b = law.sample(&mut r);
                let z = b.sample(&mut r);
                let d = b.distance(b.root(), z);
                s1 += d;
                s2 += d * d;
            }
            let m1 = s1 / n as f64;
            let m2 = s2 / n as f64;
            assert!(
                (m1 - law.mean_root_distance()).abs() < 0.01,
                "{law}: first moment {m1} vs {}",
                law.mean_root_distance()
            );
            assert!(
                (m2 - law.mean_sq_root_distance()).abs() < 0.02,
                "{law}: second moment {m2} vs {}",
                law.mean_sq_root_distance()
            );
        }
    }
}
