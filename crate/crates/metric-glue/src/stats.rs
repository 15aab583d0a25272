//! Small statistics helpers shared by tests, estimators, and experiments.

/// Neumaier compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = KahanSum::new();
    for &x in xs {
        s.add(x);
    }
    s.value() / xs.len() as f64
}

/// Sample standard deviation (n - 1 in the denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut s = KahanSum::new();
    for &x in xs {
        s.add((x - m) * (x - m));
    }
    (s.value() / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    sample_std(xs) / (xs.len() as f64).sqrt()
}

/// Empirical quantile by linear interpolation, q in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&q));
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    }
}

/// Ordinary least squares fit y = slope * x + intercept.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return LineFit { slope: f64::NAN, intercept: my, r2: f64::NAN };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    let _ = n;
    LineFit { slope, intercept, r2 }
}

/// Pearson chi-square statistic against expected counts, merging trailing
/// cells until every expected count is at least 5. Returns (statistic,
/// degrees of freedom).
pub fn chi_square(observed: &[f64], expected: &[f64]) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut obs_m = Vec::new();
    let mut exp_m = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 5.0 {
            obs_m.push(o_acc);
            exp_m.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        if let (Some(o), Some(e)) = (obs_m.last_mut(), exp_m.last_mut()) {
            *o += o_acc;
            *e += e_acc;
        } else {
            obs_m.push(o_acc);
            exp_m.push(e_acc);
        }
    }
    let stat = obs_m
        .iter()
        .zip(&exp_m)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    (stat, obs_m.len().saturating_sub(1))
}

/// Upper critical value of the chi-square distribution by the
/// Wilson-Hilferty cube approximation; `z` is the standard-normal quantile
/// of the target tail (3.0902 for p = 0.001).
pub fn chi_square_critical(df: usize, z: f64) -> f64 {
    let v = df as f64;
    let a = 2.0 / (9.0 * v);
    v * (1.0 - a + z * a.sqrt()).powi(3)
}
