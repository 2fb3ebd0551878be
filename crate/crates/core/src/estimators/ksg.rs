//! Kraskov–Stögbauer–Grassberger mutual information between two scalar
//! neurons.
//!
//! For every sample `i` the joint radius `eps_i` is the Chebyshev distance to
//! its k-th nearest neighbour in the (x, y) plane. The marginal counts
//! `e_x(i)` and `e_y(i)` are the numbers of other samples strictly closer
//! than `eps_i` along each axis, and
//!
//! ```text
//! I = psi(k) + psi(S) - (1/S) * sum_i [ psi(e_x(i) + c) + psi(e_y(i) + c) ]
//! ```
//!
//! with `c = 0` (counts clamped to >= 1) in [`MiMode::PaperLiteral`] and
//! `c = 1` in [`MiMode::KsgCanonical`].
//!
//! The fast path buckets the joint sample on a grid in rank space and finds
//! each k-th neighbour by growing a rectangle of cells until every point
//! outside it is provably no closer. Marginals are counted by binary search
//! in per-column sorted arrays. Every comparison it makes is the same floating-point
//! expression the brute-force reference evaluates, so the two agree bit for
//! bit. The digamma terms are accumulated through a histogram over the count
//! values, which makes the sum independent of sample order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::digamma::digamma_unchecked;
use super::{DigammaMode, EstimatorConfig, MiMode};
use crate::error::{Error, Result};

/// One neuron after normalisation and jitter, with the sort structures the
/// fast path reuses across every pair the neuron takes part in.
#[derive(Debug, Clone)]
pub struct PreparedColumn {
    values: Vec<f64>,
    sorted: Vec<f64>,
    order: Vec<u32>,
    /// Inverse of `order`.
    rank: Vec<u32>,
}

impl PreparedColumn {
    /// Normalises and jitters `raw`. The jitter stream is keyed by the
    /// column's content, so the same column gets the same noise whichever
    /// operand position it occupies.
    pub fn new(raw: &[f64], cfg: &EstimatorConfig) -> Self {
        Self::from_values(preprocess(raw, cfg))
    }

    /// Wraps values that are already preprocessed.
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| {
            values[a as usize]
                .total_cmp(&values[b as usize])
                .then(a.cmp(&b))
        });
        let sorted = order.iter().map(|&i| values[i as usize]).collect();
        let mut rank = vec![0u32; values.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank[i as usize] = pos as u32;
        }
        Self {
            values,
            sorted,
            order,
            rank,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn is_constant(&self) -> bool {
        self.sorted.first() == self.sorted.last()
    }
}

/// z-scoring and seeded jitter, as configured.
pub fn preprocess(raw: &[f64], cfg: &EstimatorConfig) -> Vec<f64> {
    let mut v = raw.to_vec();
    if cfg.normalize {
        zscore(&mut v);
    }
    if cfg.jitter {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let magnitude = cfg.jitter_scale * (hi - lo);
        if magnitude > 0.0 {
            let mut rng = jitter_rng(cfg.seed, content_key(raw));
            for x in &mut v {
                *x += magnitude * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
    }
    v
}

/// Population z-score; a constant column becomes all zeros. Moments are
/// summed in sorted order so they do not depend on sample order.
fn zscore(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = sorted_sum(v.to_vec()) / n;
    let var = sorted_sum(v.iter().map(|x| (x - mean) * (x - mean)).collect()) / n;
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// FNV-1a over the column's bit patterns.
fn content_key(raw: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in raw {
        for b in x.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn jitter_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&key.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// KSG estimate for two raw columns.
pub fn ksg_mi(x: &[f64], y: &[f64], cfg: &EstimatorConfig) -> Result<f64> {
    check_pair(x, y, cfg)?;
    let px = PreparedColumn::new(x, cfg);
    let py = PreparedColumn::new(y, cfg);
    Ok(mi_prepared(
        &px,
        &py,
        cfg.k,
        cfg.mi_mode,
        cfg.digamma,
        cfg.clamp_negative,
    ))
}

pub(crate) fn check_pair(x: &[f64], y: &[f64], cfg: &EstimatorConfig) -> Result<()> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    cfg.check_samples(x.len())?;
    if let Some(pos) = x.iter().chain(y).position(|v| !v.is_finite()) {
        let s = x.len();
        return Err(Error::NonFiniteData {
            row: pos % s,
            col: pos / s,
        });
    }
    Ok(())
}

/// Fast-path estimate over two prepared columns of equal length `S > k`.
pub fn mi_prepared(
    x: &PreparedColumn,
    y: &PreparedColumn,
    k: usize,
    mode: MiMode,
    digamma: DigammaMode,
    clamp_negative: bool,
) -> f64 {
    let eps = kth_neighbor_radii(x, y, k);
    let hist = count_histogram(x, y, &eps, mode);
    let mi = combine(&hist, k, x.len(), digamma);
    if clamp_negative {
        mi.max(0.0)
    } else {
        mi
    }
}

/// The joint sample bucketed on a `g × g` grid of rank cells, each spanning
/// `w` consecutive ranks per axis, so cells hold similar shares of the data
/// whatever the marginal distributions look like.
struct RankGrid {
    w: usize,
    g: usize,
    /// cell `c` holds `pts[start[c]..start[c + 1]]`; cells are x-major
    start: Vec<u32>,
    pts: Vec<(f64, f64, u32)>,
}

impl RankGrid {
    fn new(x: &PreparedColumn, y: &PreparedColumn) -> Self {
        let s = x.len();
        let w = ((2 * s) as f64).sqrt().ceil().max(1.0) as usize;
        let g = s.div_ceil(w);
        let cell = |j: usize| (x.rank[j] as usize / w) * g + y.rank[j] as usize / w;
        let mut start = vec![0u32; g * g + 1];
        for j in 0..s {
            start[cell(j) + 1] += 1;
        }
        for c in 0..g * g {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut pts = vec![(0.0, 0.0, 0u32); s];
        for j in 0..s {
            let c = cell(j);
            pts[fill[c] as usize] = (x.values[j], y.values[j], j as u32);
            fill[c] += 1;
        }
        Self { w, g, start, pts }
    }

    fn cell(&self, cx: usize, cy: usize) -> &[(f64, f64, u32)] {
        let c = cx * self.g + cy;
        &self.pts[self.start[c] as usize..self.start[c + 1] as usize]
    }
}

/// Smallest `|v - center|` over sorted entries outside `[lo_rank, hi_rank)`.
fn outside_gaps(sorted: &[f64], center: f64, lo_rank: usize, hi_rank: usize) -> (f64, f64) {
    let below = if lo_rank > 0 {
        center - sorted[lo_rank - 1]
    } else {
        f64::INFINITY
    };
    let above = if hi_rank < sorted.len() {
        sorted[hi_rank] - center
    } else {
        f64::INFINITY
    };
    (below, above)
}

/// Chebyshev distance from every sample to its k-th nearest neighbour,
/// indexed by sample.
pub fn kth_neighbor_radii(x: &PreparedColumn, y: &PreparedColumn, k: usize) -> Vec<f64> {
    let s = x.len();
    assert_eq!(s, y.len());
    assert!(k >= 1 && k < s, "need 1 <= k < S");
    if x.is_constant() {
        return radii_along(y, x, k);
    }
    if y.is_constant() {
        return radii_along(x, y, k);
    }
    let grid = RankGrid::new(x, y);
    let w = grid.w;
    let mut eps = vec![0.0; s];
    // k smallest distances seen so far, ascending
    let mut best: Vec<f64> = Vec::with_capacity(k);
    for i in 0..s {
        let (xi, yi) = (x.values[i], y.values[i]);
        best.clear();
        let visit = |cell: &[(f64, f64, u32)], best: &mut Vec<f64>| {
            for &(px, py, j) in cell {
                if j as usize == i {
                    continue;
                }
                let d = (px - xi).abs().max((py - yi).abs());
                if best.len() == k {
                    if d >= best[k - 1] {
                        continue;
                    }
                    best.pop();
                }
                let at = best.partition_point(|&b| b <= d);
                best.insert(at, d);
            }
        };
        let (cx, cy) = (x.rank[i] as usize / w, y.rank[i] as usize / w);
        // inclusive cell rectangle searched so far
        let (mut x0, mut x1, mut y0, mut y1) = (cx, cx, cy, cy);
        visit(grid.cell(cx, cy), &mut best);
        loop {
            let bound = if best.len() == k {
                best[k - 1]
            } else {
                f64::INFINITY
            };
            // every point outside the rectangle is at least this far along
            // the axis it escapes on
            let (left, right) = outside_gaps(&x.sorted, xi, x0 * w, ((x1 + 1) * w).min(s));
            let (down, up) = outside_gaps(&y.sorted, yi, y0 * w, ((y1 + 1) * w).min(s));
            let nearest = left.min(right).min(down).min(up);
            if nearest >= bound || nearest == f64::INFINITY {
                break;
            }
            if nearest == left {
                x0 -= 1;
                (y0..=y1).for_each(|c| visit(grid.cell(x0, c), &mut best));
            } else if nearest == right {
                x1 += 1;
                (y0..=y1).for_each(|c| visit(grid.cell(x1, c), &mut best));
            } else if nearest == down {
                y0 -= 1;
                (x0..=x1).for_each(|c| visit(grid.cell(c, y0), &mut best));
            } else {
                y1 += 1;
                (x0..=x1).for_each(|c| visit(grid.cell(c, y1), &mut best));
            }
        }
        eps[i] = best[k - 1];
    }
    eps
}

/// Neighbour radii when `flat` is constant: distances reduce to the other
/// axis, so the k nearest lie within k sorted positions on either side.
fn radii_along(col: &PreparedColumn, flat: &PreparedColumn, k: usize) -> Vec<f64> {
    let s = col.len();
    let (vs, fs) = (&col.values, &flat.values);
    let mut eps = vec![0.0; s];
    let mut cand = Vec::with_capacity(2 * k);
    for (pos, &i) in col.order.iter().enumerate() {
        let i = i as usize;
        cand.clear();
        for &j in &col.order[pos.saturating_sub(k)..(pos + k + 1).min(s)] {
            let j = j as usize;
            if j != i {
                cand.push((vs[j] - vs[i]).abs().max((fs[j] - fs[i]).abs()));
            }
        }
        cand.sort_by(f64::total_cmp);
        eps[i] = cand[k - 1];
    }
    eps
}

/// Number of entries of `sorted` with `|v - center| < eps`, including the
/// centre itself.
#[inline]
fn count_open_interval(sorted: &[f64], center: f64, eps: f64) -> usize {
    if !(eps > 0.0) {
        return 0;
    }
    // |v - c| is computed exactly as in the reference: fl(c - v) for v <= c
    // and fl(v - c) otherwise. Rounding is monotone so each side is a prefix.
    let lo = sorted.partition_point(|&v| center - v >= eps);
    let hi = sorted.partition_point(|&v| v - center < eps);
    hi - lo
}

/// Histogram over the digamma arguments of both marginals.
fn count_histogram(x: &PreparedColumn, y: &PreparedColumn, eps: &[f64], mode: MiMode) -> Vec<u32> {
    let s = x.len();
    let mut hist = vec![0u32; s + 1];
    for i in 0..s {
        let e = eps[i];
        let ex = count_open_interval(&x.sorted, x.values[i], e).saturating_sub(1);
        let ey = count_open_interval(&y.sorted, y.values[i], e).saturating_sub(1);
        hist[digamma_arg(ex, mode)] += 1;
        hist[digamma_arg(ey, mode)] += 1;
    }
    hist
}

#[inline]
pub(crate) fn digamma_arg(count: usize, mode: MiMode) -> usize {
    match mode {
        MiMode::PaperLiteral => count.max(1),
        MiMode::KsgCanonical => count + 1,
    }
}

/// `psi(k) + psi(S) - (1/S) * sum_c hist[c] * psi(c)`, summed in increasing `c`.
pub(crate) fn combine(hist: &[u32], k: usize, s: usize, digamma: DigammaMode) -> f64 {
    let mut total = 0.0;
    for (c, &n) in hist.iter().enumerate() {
        if n > 0 {
            total += f64::from(n) * digamma_unchecked(c as f64, digamma);
        }
    }
    digamma_unchecked(k as f64, digamma) + digamma_unchecked(s as f64, digamma) - total / s as f64
}

/// O(S²) reference over already-preprocessed columns.
pub fn mi_brute_force(x: &[f64], y: &[f64], k: usize, mode: MiMode, digamma: DigammaMode) -> f64 {
    let s = x.len();
    assert_eq!(s, y.len());
    assert!(k >= 1 && k < s);
    let mut hist = vec![0u32; s + 1];
    let mut dists = Vec::with_capacity(s - 1);
    for i in 0..s {
        dists.clear();
        for j in 0..s {
            if j != i {
                dists.push((x[j] - x[i]).abs().max((y[j] - y[i]).abs()));
            }
        }
        dists.sort_by(f64::total_cmp);
        let eps = dists[k - 1];
        let ex = (0..s)
            .filter(|&j| j != i && (x[j] - x[i]).abs() < eps)
            .count();
        let ey = (0..s)
            .filter(|&j| j != i && (y[j] - y[i]).abs() < eps)
            .count();
        hist[digamma_arg(ex, mode)] += 1;
        hist[digamma_arg(ey, mode)] += 1;
    }
    combine(&hist, k, s, digamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_pair(s: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(s);
        let mut y = Vec::with_capacity(s);
        for _ in 0..s {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(a);
            y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        (x, y)
    }

    fn canonical() -> EstimatorConfig {
        EstimatorConfig {
            mi_mode: MiMode::KsgCanonical,
            ..Default::default()
        }
    }

    #[test]
    fn independent_uniform_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let mi = ksg_mi(&x, &y, &canonical()).unwrap();
        assert!(mi.abs() <= 0.05, "{mi}");
    }

    #[test]
    fn gaussian_rho_09() {
        let target = -0.5 * (1.0 - 0.81f64).ln();
        let mean: f64 = (0..10)
            .map(|seed| {
                let (x, y) = gaussian_pair(2000, 0.9, seed);
                ksg_mi(&x, &y, &canonical()).unwrap()
            })
            .sum::<f64>()
            / 10.0;
        assert!((mean - target).abs() < 0.05, "{mean} vs {target}");
    }

    #[test]
    fn deterministic_dependence_beats_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let noise: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        for mode in [MiMode::PaperLiteral, MiMode::KsgCanonical] {
            let cfg = EstimatorConfig {
                mi_mode: mode,
                ..Default::default()
            };
            assert!(ksg_mi(&x, &lin, &cfg).unwrap() > ksg_mi(&x, &noise, &cfg).unwrap());
        }
    }

    #[test]
    fn errors() {
        let cfg = EstimatorConfig::default();
        assert!(matches!(
            ksg_mi(&[1.0, 2.0, 3.0], &[1.0, 2.0], &cfg),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ksg_mi(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], &cfg),
            Err(Error::TooFewSamples { samples: 3, k: 3 })
        ));
        assert!(matches!(
            ksg_mi(&[1.0, 2.0, 3.0, f64::NAN], &[1.0, 2.0, 4.0, 5.0], &cfg),
            Err(Error::NonFiniteData { row: 3, col: 0 })
        ));
    }

    #[test]
    fn constant_columns_stay_finite() {
        let cfg = EstimatorConfig::default();
        let c = vec![1.0; 20];
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(ksg_mi(&c, &v, &cfg).unwrap().is_finite());
        assert!(ksg_mi(&c, &c, &cfg).unwrap().is_finite());
    }

    #[test]
    fn clamp_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen_negative = false;
        for _ in 0..20 {
            let x: Vec<f64> = (0..50).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..50).map(|_| rng.random()).collect();
            let raw = ksg_mi(&x, &y, &canonical()).unwrap();
            let clamped = ksg_mi(
                &x,
                &y,
                &EstimatorConfig {
                    clamp_negative: true,
                    ..canonical()
                },
            )
            .unwrap();
            seen_negative |= raw < 0.0;
            assert_eq!(clamped, raw.max(0.0));
        }
        assert!(
            seen_negative,
            "independent small samples should dip below zero"
        );
    }

    #[test]
    fn heavy_ties_match_reference() {
        // rectifier-like output: many exact zeros, jitter disabled
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..200)
            .map(|_| (rng.random::<f64>() - 0.6).max(0.0))
            .collect();
        let y: Vec<f64> = (0..200)
            .map(|_| (rng.random::<f64>() * 4.0).floor())
            .collect();
        for k in [1, 3, 7] {
            for mode in [MiMode::PaperLiteral, MiMode::KsgCanonical] {
                let px = PreparedColumn::from_values(x.clone());
                let py = PreparedColumn::from_values(y.clone());
                let fast = mi_prepared(&px, &py, k, mode, DigammaMode::Exact, false);
                let slow = mi_brute_force(&x, &y, k, mode, DigammaMode::Exact);
                assert_eq!(fast.to_bits(), slow.to_bits(), "k={k} {mode:?}");
            }
        }
    }

    fn column(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![-5f64..5.0, (-3i32..3).prop_map(f64::from)], len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fast_path_equals_brute_force(
            (x, y) in (5usize..=256).prop_flat_map(|s| (column(s), column(s))),
            k in 1usize..5,
            literal in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let cfg = EstimatorConfig {
                k,
                seed,
                mi_mode: if literal { MiMode::PaperLiteral } else { MiMode::KsgCanonical },
                ..Default::default()
            };
            let px = PreparedColumn::new(&x, &cfg);
            let py = PreparedColumn::new(&y, &cfg);
            let fast = mi_prepared(&px, &py, k, cfg.mi_mode, cfg.digamma, false);
            let slow = mi_brute_force(px.values(), py.values(), k, cfg.mi_mode, cfg.digamma);
            prop_assert_eq!(fast.to_bits(), slow.to_bits());
            prop_assert_eq!(fast.to_bits(), ksg_mi(&x, &y, &cfg).unwrap().to_bits());
        }

        #[test]
        fn tied_and_constant_columns_match_brute_force(
            s in 5usize..=200,
            levels in (1i32..4, 1i32..6),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..s).map(|_| f64::from(rng.random_range(0..levels.0))).collect();
            let y: Vec<f64> = (0..s).map(|_| f64::from(rng.random_range(0..levels.1)) * 0.5).collect();
            let px = PreparedColumn::from_values(x.clone());
            let py = PreparedColumn::from_values(y.clone());
            let radii = kth_neighbor_radii(&px, &py, k);
            for i in 0..s {
                let mut d: Vec<f64> = (0..s)
                    .filter(|&j| j != i)
                    .map(|j| (x[j] - x[i]).abs().max((y[j] - y[i]).abs()))
                    .collect();
                d.sort_by(f64::total_cmp);
                prop_assert_eq!(radii[i].to_bits(), d[k - 1].to_bits());
            }
            for mode in [MiMode::PaperLiteral, MiMode::KsgCanonical] {
                let fast = mi_prepared(&px, &py, k, mode, DigammaMode::Exact, false);
                let slow = mi_brute_force(&x, &y, k, mode, DigammaMode::Exact);
                prop_assert_eq!(fast.to_bits(), slow.to_bits());
            }
        }

        #[test]
        fn symmetric(
            (x, y) in (5usize..=128).prop_flat_map(|s| (column(s), column(s))),
            seed in any::<u64>(),
        ) {
            let cfg = EstimatorConfig { seed, ..Default::default() };
            prop_assert_eq!(
                ksg_mi(&x, &y, &cfg).unwrap().to_bits(),
                ksg_mi(&y, &x, &cfg).unwrap().to_bits()
            );
        }

        #[test]
        fn joint_permutation_invariant_without_jitter(
            (x, y) in (5usize..=128).prop_flat_map(|s| (column(s), column(s))),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let cfg = EstimatorConfig { jitter: false, ..Default::default() };
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let xp: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
            let yp: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            prop_assert_eq!(
                ksg_mi(&x, &y, &cfg).unwrap().to_bits(),
                ksg_mi(&xp, &yp, &cfg).unwrap().to_bits()
            );
        }
    }
}
