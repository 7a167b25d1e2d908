use rand::Rng;

use crate::error::{Error, Result};

/// Distribution `p_k` of the meeting size `k` (chooser included).
#[derive(Clone, Debug, PartialEq)]
pub struct KDistribution {
    support: Vec<usize>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl KDistribution {
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::config("empty k distribution"));
        }
        let mut pairs = pairs;
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::config(format!("k = {} listed twice", w[0].0)));
            }
        }
        if pairs.iter().any(|&(k, q)| k < 2 || !(q >= 0.0) || !q.is_finite()) {
            return Err(Error::config("k must be >= 2 with nonnegative probability"));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("k probabilities sum to {total}, not 1")));
        }
        let pairs: Vec<_> = pairs.into_iter().filter(|p| p.1 > 0.0).collect();
        let mut acc = 0.0;
        let cumulative = pairs
            .iter()
            .map(|p| {
                acc += p.1;
                acc
            })
            .collect();
        Ok(Self {
            support: pairs.iter().map(|p| p.0).collect(),
            probs: pairs.iter().map(|p| p.1).collect(),
            cumulative,
        })
    }

    pub fn fixed(k: usize) -> Result<Self> {
        Self::new(vec![(k, 1.0)])
    }

    /// Uniform on `lo..=hi`.
    pub fn uniform(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::config(format!("empty k range {lo}..={hi}")));
        }
        let m = (hi - lo + 1) as f64;
        Self::new((lo..=hi).map(|k| (k, 1.0 / m)).collect())
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_k(&self) -> usize {
        *self.support.last().expect("nonempty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.support.len() == 1 {
            return self.support[0];
        }
        let u: f64 = rng.random();
        let t = self.cumulative.partition_point(|&c| c <= u);
        self.support[t.min(self.support.len() - 1)]
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.max_k() > n {
            return Err(Error::config(format!("meeting size {} exceeds n = {n}", self.max_k())));
        }
        Ok(())
    }
}

/// Who meets whom.
#[derive(Clone, Debug, PartialEq)]
pub enum MeetingLaw {
    /// Chooser uniform over nodes; partners a uniform `(k-1)`-subset of the rest.
    Uniform,
    /// Chooser uniform; partners drawn sequentially without replacement with
    /// probability proportional to `weights[i * n + j]`. The closed-form
    /// stationary law does not apply.
    Biased { n: usize, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeetingConfig {
    pub k_dist: KDistribution,
    pub law: MeetingLaw,
}

impl MeetingConfig {
    pub fn uniform(k_dist: KDistribution) -> Self {
        Self {
            k_dist,
            law: MeetingLaw::Uniform,
        }
    }

    pub fn fixed_k(k: usize) -> Result<Self> {
        Ok(Self::uniform(KDistribution::fixed(k)?))
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.k_dist.validate_for(n)?;
        if let MeetingLaw::Biased { n: m, weights } = &self.law {
            if *m != n || weights.len() != n * n {
                return Err(Error::config("biased meeting weights must be n x n"));
            }
            if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return Err(Error::config("biased meeting weights must be positive"));
            }
        }
        Ok(())
    }

    /// Whether the exp(Phi / beta) stationary law is guaranteed.
    pub fn closed_form_valid(&self) -> bool {
        matches!(self.law, MeetingLaw::Uniform)
    }

    pub fn require_closed_form(&self) -> Result<()> {
        if self.closed_form_valid() {
            Ok(())
        } else {
            Err(Error::config(
                "closed form invalid: biased meeting laws have no exp(Phi/beta) stationary law",
            ))
        }
    }
}

/// A drawn meeting: the chooser and her partners (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Meeting {
    pub chooser: usize,
    pub partners: Vec<usize>,
}

impl Meeting {
    pub fn k(&self) -> usize {
        self.partners.len() + 1
    }

    pub fn new(chooser: usize, mut partners: Vec<usize>, n: usize) -> Result<Self> {
        partners.sort_unstable();
        if chooser >= n || partners.iter().any(|&j| j >= n || j == chooser) || partners.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("meeting partners must be distinct nodes other than the chooser"));
        }
        if partners.is_empty() {
            return Err(Error::invalid("a meeting needs at least one partner"));
        }
        Ok(Self { chooser, partners })
    }
}

/// Allocation-free meeting draws for hot loops.
#[derive(Clone, Debug)]
pub struct MeetingSampler {
    n: usize,
    perm: Vec<usize>,
    partners: Vec<usize>,
}

impl MeetingSampler {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            perm: (0..n - 1).collect(),
            partners: Vec::with_capacity(n),
        }
    }

    /// Draws `(chooser, k)` and fills the partner buffer (unsorted).
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, cfg: &MeetingConfig) -> usize {
        let n = self.n;
        let k = cfg.k_dist.sample(rng);
        let chooser = rng.random_range(0..n);
        self.partners.clear();
        match &cfg.law {
            MeetingLaw::Uniform => {
                // partial Fisher-Yates over a persistent permutation of 0..n-1,
                // shifted past the chooser
                for t in 0..k - 1 {
                    let r = rng.random_range(t..n - 1);
                    self.perm.swap(t, r);
                    let v = self.perm[t];
                    self.partners.push(if v >= chooser { v + 1 } else { v });
                }
            }
            MeetingLaw::Biased { weights, .. } => {
                for _ in 0..k - 1 {
                    let row = &weights[chooser * n..(chooser + 1) * n];
                    let total: f64 = (0..n)
                        .filter(|&j| j != chooser && !self.partners.contains(&j))
                        .map(|j| row[j])
                        .sum();
                    let mut u = rng.random::<f64>() * total;
                    let mut pick = None;
                    for j in 0..n {
                        if j == chooser || self.partners.contains(&j) {
                            continue;
                        }
                        pick = Some(j);
                        u -= row[j];
                        if u < 0.0 {
                            break;
                        }
                    }
                    self.partners.push(pick.expect("at least one candidate"));
                }
            }
        }
        chooser
    }

    pub fn partners(&self) -> &[usize] {
        &self.partners
    }
}

/// Draws one meeting; partners are returned in ascending order.
pub fn draw_meeting<R: Rng + ?Sized>(rng: &mut R, n: usize, cfg: &MeetingConfig) -> Result<Meeting> {
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    cfg.validate_for(n)?;
    let mut sampler = MeetingSampler::new(n);
    let chooser = sampler.draw(rng, cfg);
    let mut partners = sampler.partners().to_vec();
    partners.sort_unstable();
    Ok(Meeting { chooser, partners })
}

/// `C(n, k)` as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Probability of one particular `(chooser, partner set)` under the uniform
/// law, given `k`.
pub fn uniform_meeting_probability(n: usize, k: usize) -> f64 {
    1.0 / (n as f64 * binomial(n - 1, k - 1))
}
