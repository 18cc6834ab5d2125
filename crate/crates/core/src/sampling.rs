//! IID, quantile-stratified (QS), and layered quantile-stratified (LQS)
//! sampling by inverse transform.
//!
//! Every draw goes through a uniform `U` in `(0, 1)` and is mapped through
//! the quantile function, so `values[i] == Q(uniforms[i])` for every batch.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Streams with the same seed and different indices are independent, so
/// replicate `r` of an experiment always sees stream `r` no matter which
/// worker runs it.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Positive layer sizes `(m_1, ..., m_K)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LayerSpec(Vec<usize>);

impl LayerSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidLayers(
                "at least one layer is required".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidLayers("every layer must be non-empty".into()));
        }
        Ok(Self(sizes))
    }

    /// `K` layers of size 1.
    pub fn singletons(m: usize) -> Result<Self> {
        Self::new(vec![1; m])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Fails unless the layer sizes add up to `m`.
    pub fn check_total(&self, m: usize) -> Result<()> {
        if self.total() == m {
            Ok(())
        } else {
            Err(Error::InvalidLayers(format!(
                "layer sizes {self} sum to {}, expected {m}",
                self.total()
            )))
        }
    }
}

impl TryFrom<Vec<usize>> for LayerSpec {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<LayerSpec> for Vec<usize> {
    fn from(spec: LayerSpec) -> Self {
        spec.0
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidLayers(format!("bad layer size `{part}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Iid,
    Qs,
    Lqs(LayerSpec),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Iid => "iid",
            Method::Qs => "qs",
            Method::Lqs(_) => "lqs",
        }
    }

    /// Short label including layer sizes, e.g. `lqs(18,9,3)`.
    pub fn label(&self) -> String {
        match self {
            Method::Lqs(layers) => format!("lqs({layers})"),
            other => other.name().to_string(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A generated sample together with the uniforms it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleBatch {
    pub method: Method,
    /// The underlying `U_i` in `(0, 1)`.
    pub uniforms: Vec<f64>,
    /// `X_i = Q(U_i)`.
    pub values: Vec<f64>,
    /// Stratum of each draw, 1-based. For IID this is `ceil(m U_i)`; for QS
    /// the block drawn without replacement; for LQS the block inside the
    /// draw's own layer.
    pub blocks: Vec<usize>,
    /// Layer of each draw, 1-based (all 1 unless LQS).
    pub layers: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of uniforms falling in each of the `m` equiprobable blocks.
    pub fn block_counts(&self, m: usize) -> Vec<usize> {
        let mut counts = vec![0; m];
        for &u in &self.uniforms {
            counts[block_of(u, m) - 1] += 1;
        }
        counts
    }

    /// Uniforms sorted ascending, i.e. the uniform order statistics.
    pub fn sorted_uniforms(&self) -> Vec<f64> {
        let mut u = self.uniforms.clone();
        u.sort_by(f64::total_cmp);
        u
    }

    /// Values sorted ascending.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut x = self.values.clone();
        x.sort_by(f64::total_cmp);
        x
    }
}

/// `ceil(m u)` clamped to `1..=m`.
pub fn block_of(u: f64, m: usize) -> usize {
    ((m as f64 * u).ceil() as usize).clamp(1, m)
}

/// A uniformly random permutation of `1..=m` (SRSWOR of all `m` labels).
pub fn srswor_perm<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (1..=m).collect();
    perm.shuffle(rng);
    perm
}

/// A draw from `U((s-1)/m, s/m)`, kept strictly inside `(0, 1)` and above
/// the lower block edge.
fn uniform_in_block<R: Rng + ?Sized>(s: usize, m: usize, rng: &mut R) -> f64 {
    let v: f64 = rng.sample(Open01);
    let lo = (s - 1) as f64 / m as f64;
    let mut u = ((s - 1) as f64 + v) / m as f64;
    if u <= lo {
        u = lo.next_up();
    }
    if u >= 1.0 {
        u = 1.0_f64.next_down();
    }
    u
}

fn qs_uniforms<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (Vec<f64>, Vec<usize>) {
    let blocks = srswor_perm(m, rng);
    let uniforms = blocks
        .iter()
        .map(|&s| uniform_in_block(s, m, rng))
        .collect();
    (uniforms, blocks)
}

fn finish(
    dist: &Distribution,
    method: Method,
    uniforms: Vec<f64>,
    blocks: Vec<usize>,
    layers: Vec<usize>,
    rng: &RngStream,
) -> Result<SampleBatch> {
    let values = uniforms
        .iter()
        .map(|&u| dist.quantile(u))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        method,
        uniforms,
        values,
        blocks,
        layers,
        seed: rng.seed(),
        stream: rng.stream(),
    })
}

fn check_size(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::Domain("sample size must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `m` independent draws: `U_i ~ U(0, 1)`, `X_i = Q(U_i)`.
pub fn sample_iid(dist: &Distribution, m: usize, rng: &mut RngStream) -> Result<SampleBatch> {
    check_size(m)?;
    let uniforms: Vec<f64> = (0..m).map(|_| rng.sample(Open01)).collect();
    let blocks = uniforms.iter().map(|&u| block_of(u, m)).collect();
    finish(dist, Method::Iid, uniforms, blocks, vec![1; m], rng)
}

/// One draw from each of the `m` quantile blocks, in random block order.
pub fn sample_qs(dist: &Distribution, m: usize, rng: &mut RngStream) -> Result<SampleBatch> {
    check_size(m)?;
    let (uniforms, blocks) = qs_uniforms(m, rng);
    finish(dist, Method::Qs, uniforms, blocks, vec![1; m], rng)
}

/// Independent QS subsamples of sizes `m_1, ..., m_K`, pooled and shuffled.
pub fn sample_lqs(
    dist: &Distribution,
    layers: &LayerSpec,
    rng: &mut RngStream,
) -> Result<SampleBatch> {
    let m = layers.total();
    let mut uniforms = Vec::with_capacity(m);
    let mut blocks = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for (k, &size) in layers.sizes().iter().enumerate() {
        let (u, b) = qs_uniforms(size, rng);
        uniforms.extend(u);
        blocks.extend(b);
        labels.extend(std::iter::repeat_n(k + 1, size));
    }
    let order = srswor_perm(m, rng);
    let uniforms = order.iter().map(|&i| uniforms[i - 1]).collect();
    let blocks = order.iter().map(|&i| blocks[i - 1]).collect();
    let labels = order.iter().map(|&i| labels[i - 1]).collect();
    finish(
        dist,
        Method::Lqs(layers.clone()),
        uniforms,
        blocks,
        labels,
        rng,
    )
}

/// Dispatches on `method`; for LQS the layer sizes must add up to `m`.
pub fn sample(
    dist: &Distribution,
    method: &Method,
    m: usize,
    rng: &mut RngStream,
) -> Result<SampleBatch> {
    match method {
        Method::Iid => sample_iid(dist, m, rng),
        Method::Qs => sample_qs(dist, m, rng),
        Method::Lqs(layers) => {
            layers.check_total(m)?;
            sample_lqs(dist, layers, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn srswor_small_cases() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(srswor_perm(1, &mut rng), vec![1]);
        let mut p = srswor_perm(5, &mut rng);
        p.sort();
        assert_eq!(p, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn srswor_is_uniform_over_permutations() {
        let mut rng = RngStream::new(42, 0);
        let n = 60_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..n {
            *counts.entry(srswor_perm(3, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, c) in &counts {
            let freq = *c as f64 / n as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.01, "{perm:?}: {freq}");
        }
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let e = n as f64 / 6.0;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // chi-square(5) upper 1% point
        assert!(chi2 < 15.086, "chi2 = {chi2}");
    }

    #[test]
    fn values_are_quantiles_of_uniforms() {
        let d = Distribution::gamma(2.0, 5.0).unwrap();
        let mut rng = RngStream::new(3, 9);
        for method in [
            Method::Iid,
            Method::Qs,
            Method::Lqs("4,3,3".parse().unwrap()),
        ] {
            let b = sample(&d, &method, 10, &mut rng).unwrap();
            assert_eq!(b.len(), 10);
            for (u, x) in b.uniforms.iter().zip(&b.values) {
                assert!(*u > 0.0 && *u < 1.0);
                assert_eq!(*x, d.quantile(*u).unwrap());
            }
            assert_eq!((b.seed, b.stream), (3, 9));
        }
    }

    #[test]
    fn qs_covers_every_block_once() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        for seed in 0..200 {
            let mut rng = RngStream::new(seed, 0);
            let b = sample_qs(&d, 30, &mut rng).unwrap();
            for (k, u) in b.sorted_uniforms().iter().enumerate() {
                assert!(*u > k as f64 / 30.0 && *u <= (k + 1) as f64 / 30.0);
            }
            let mut blocks = b.blocks.clone();
            blocks.sort();
            assert_eq!(blocks, (1..=30).collect::<Vec<_>>());
            assert_eq!(b.block_counts(30), vec![1; 30]);
        }
    }

    #[test]
    fn qs_pair_correlation_at_two() {
        // Corr(U_1*, U_2*) = -(m+1)/m^2 = -3/4 at m = 2
        let n = 1_000_000;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut rng = RngStream::new(11, 0);
        for _ in 0..n {
            let b = sample_qs(&Distribution::Uniform01, 2, &mut rng).unwrap();
            let (x, y) = (b.uniforms[0], b.uniforms[1]);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx * sy / (nf * nf);
        let vx = sxx / nf - (sx / nf).powi(2);
        let vy = syy / nf - (sy / nf).powi(2);
        let corr = cov / (vx * vy).sqrt();
        assert!((corr + 0.75).abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn lqs_layer_bookkeeping() {
        let layers: LayerSpec = "18,9,3".parse().unwrap();
        let mut rng = RngStream::new(5, 1);
        let b = sample_lqs(&Distribution::Uniform01, &layers, &mut rng).unwrap();
        assert_eq!(b.len(), 30);
        for (k, &size) in layers.sizes().iter().enumerate() {
            let mut blocks: Vec<usize> = b
                .layers
                .iter()
                .zip(&b.blocks)
                .filter(|(l, _)| **l == k + 1)
                .map(|(_, s)| *s)
                .collect();
            blocks.sort();
            assert_eq!(blocks, (1..=size).collect::<Vec<_>>());
            for ((l, s), u) in b.layers.iter().zip(&b.blocks).zip(&b.uniforms) {
                if *l == k + 1 {
                    assert_eq!(block_of(*u, size), *s);
                }
            }
        }
    }

    #[test]
    fn layer_spec_validation() {
        assert!(LayerSpec::new(vec![]).is_err());
        assert!(LayerSpec::new(vec![3, 0]).is_err());
        assert!("18,9,x".parse::<LayerSpec>().is_err());
        let l: LayerSpec = "18, 9, 3".parse().unwrap();
        assert_eq!(l.total(), 30);
        assert_eq!(l.to_string(), "18,9,3");
        assert!(l.check_total(30).is_ok());
        let mut rng = RngStream::new(0, 0);
        let err = sample(
            &Distribution::Uniform01,
            &Method::Lqs("18,9,4".parse().unwrap()),
            30,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::InvalidLayers(_))));
        assert!(sample_iid(&Distribution::Uniform01, 0, &mut rng).is_err());
    }

    #[test]
    fn same_stream_is_bit_identical() {
        let d = Distribution::beta(3.0, 2.0).unwrap();
        let layers = Method::Lqs("2,3".parse().unwrap());
        for method in [Method::Iid, Method::Qs, layers] {
            let a = sample(&d, &method, 5, &mut RngStream::new(7, 3)).unwrap();
            let b = sample(&d, &method, 5, &mut RngStream::new(7, 3)).unwrap();
            assert_eq!(a, b);
            let c = sample(&d, &method, 5, &mut RngStream::new(7, 4)).unwrap();
            assert_ne!(a.uniforms, c.uniforms);
        }
    }

    #[test]
    fn iid_uniform_mean() {
        let b = sample_iid(&Distribution::Uniform01, 100_000, &mut RngStream::new(8, 0)).unwrap();
        let mean = b.values.iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 4.0 / (12.0e5f64).sqrt());
    }
}
