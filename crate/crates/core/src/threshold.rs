//! Otsu's two-class histogram threshold and the ED threshold rule derived
//! from it.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::gradient::GradientField;
use crate::image::GrayImage;

pub const BINS: usize = 256;

/// Gradient threshold as a fraction of the Otsu threshold.
pub const GRAD_RATIO: f64 = 0.5;
/// Anchor threshold as a fraction of the Otsu threshold.
pub const ANCHOR_RATIO: f64 = 0.067;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    bins: [u64; BINS],
    total: u64,
}

impl Histogram256 {
    /// Fails if every bin is zero.
    pub fn from_bins(bins: [u64; BINS]) -> Result<Self> {
        let total = bins.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self { bins, total })
    }

    pub fn bins(&self) -> &[u64; BINS] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.bins[i] as f64 / self.total as f64
    }

    pub fn populated_bins(&self) -> usize {
        self.bins.iter().filter(|&&b| b > 0).count()
    }
}

pub fn histogram(img: &GrayImage) -> Histogram256 {
    let mut bins = [0u64; BINS];
    for &v in img.pixels() {
        bins[v as usize] += 1;
    }
    Histogram256 {
        bins,
        total: img.pixels().len() as u64,
    }
}

/// Histogram of gradient magnitudes, rounded and clamped into `0..=255`.
pub fn magnitude_histogram(field: &GradientField) -> Histogram256 {
    let mut bins = [0u64; BINS];
    for &m in field.magnitudes() {
        bins[m.round().clamp(0.0, 255.0) as usize] += 1;
    }
    Histogram256 {
        bins,
        total: field.magnitudes().len() as u64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtsuResult {
    pub threshold: u8,
    pub between_class_variance: f64,
    /// `(ω₀, ω₁)`
    pub class_weights: (f64, f64),
    /// `(μ₀, μ₁)`
    pub class_means: (f64, f64),
    pub total_mean: f64,
}

/// Smallest `t ∈ 1..=255` maximizing `ω₀ω₁(μ₀−μ₁)²`, where class 0 holds the
/// intensities `< t`. Thresholds that leave a class empty are skipped.
///
/// With `n₀` pixels of total intensity `s₀` below `t`, the criterion equals
/// `(N·s₀ − n₀·S)² / (N²·n₀·n₁)`; candidates are compared on that fraction
/// exactly, so ties are real ties.
pub fn otsu_threshold(h: &Histogram256) -> Result<OtsuResult> {
    if h.populated_bins() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let n = h.total as u128;
    let s: u128 = h
        .bins
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();

    let mut best: Option<(usize, BigUint, BigUint)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for t in 1..BINS {
        n0 += h.bins[t - 1] as u128;
        s0 += (t as u128 - 1) * h.bins[t - 1] as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (n * s0).abs_diff(n0 * s);
        let num = BigUint::from(d) * BigUint::from(d);
        let den = BigUint::from(n0) * BigUint::from(n1);
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => &num * bd > bn * &den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    let (t, _, _) = best.expect("two populated bins leave a non-empty split");
    Ok(otsu_stats(h, t))
}

fn otsu_stats(h: &Histogram256, t: usize) -> OtsuResult {
    let total = h.total as f64;
    let (mut w0, mut m0, mut mt) = (0.0, 0.0, 0.0);
    for (i, &c) in h.bins.iter().enumerate() {
        let p = c as f64 / total;
        mt += i as f64 * p;
        if i < t {
            w0 += p;
            m0 += i as f64 * p;
        }
    }
    let w1 = 1.0 - w0;
    let mu0 = m0 / w0;
    let mu1 = (mt - m0) / w1;
    OtsuResult {
        threshold: t as u8,
        between_class_variance: w0 * w1 * (mu0 - mu1).powi(2),
        class_weights: (w0, w1),
        class_means: (mu0, mu1),
        total_mean: mt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutoThresholds {
    pub t_otsu: u8,
    pub grad_thr: f64,
    pub anchor_thr: f64,
}

/// Ratios applied to the Otsu threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRatios {
    pub grad: f64,
    pub anchor: f64,
}

impl Default for ThresholdRatios {
    fn default() -> Self {
        Self {
            grad: GRAD_RATIO,
            anchor: ANCHOR_RATIO,
        }
    }
}

/// `grad_thr = 0.5·t`, `anchor_thr = 0.067·t`.
pub fn derive_ed_thresholds(t_otsu: i64) -> Result<AutoThresholds> {
    derive_ed_thresholds_with(t_otsu, ThresholdRatios::default())
}

pub fn derive_ed_thresholds_with(t_otsu: i64, ratios: ThresholdRatios) -> Result<AutoThresholds> {
    let t = u8::try_from(t_otsu).map_err(|_| Error::OutOfRange {
        value: t_otsu,
        range: "0..=255",
    })?;
    Ok(AutoThresholds {
        t_otsu: t,
        grad_thr: ratios.grad * t as f64,
        anchor_thr: ratios.anchor * t as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist_of(pairs: &[(usize, u64)]) -> Histogram256 {
        let mut bins = [0; BINS];
        for &(i, c) in pairs {
            bins[i] = c;
        }
        Histogram256::from_bins(bins).unwrap()
    }

    /// Within-class variance `ω₀σ₀² + ω₁σ₁²`, straight from the definition.
    fn within_class_variance(h: &Histogram256, t: usize) -> f64 {
        let p: Vec<f64> = (0..BINS).map(|i| h.probability(i)).collect();
        let class = |range: std::ops::Range<usize>| {
            let w: f64 = p[range.clone()].iter().sum();
            let mu: f64 = range.clone().map(|i| i as f64 * p[i]).sum::<f64>() / w;
            let var: f64 = range.map(|i| (i as f64 - mu).powi(2) * p[i]).sum::<f64>() / w;
            (w, var)
        };
        let (w0, v0) = class(0..t);
        let (w1, v1) = class(t..BINS);
        w0 * v0 + w1 * v1
    }

    fn total_variance(h: &Histogram256) -> f64 {
        let mu: f64 = (0..BINS).map(|i| i as f64 * h.probability(i)).sum();
        (0..BINS).map(|i| (i as f64 - mu).powi(2) * h.probability(i)).sum()
    }

    #[test]
    fn histogram_counts() {
        let img = GrayImage::new(2, 2, vec![0, 0, 255, 255]).unwrap();
        let h = histogram(&img);
        assert_eq!(h.bins()[0], 2);
        assert_eq!(h.bins()[255], 2);
        assert_eq!(h.bins().iter().sum::<u64>(), 4);
        let h = histogram(&GrayImage::filled(10, 10, 7).unwrap());
        assert_eq!(h.bins()[7], 100);
        assert_eq!(h.total(), 100);
    }

    #[test]
    fn two_spikes_pick_smallest_tie() {
        let r = otsu_threshold(&hist_of(&[(10, 50), (200, 50)])).unwrap();
        assert_eq!(r.threshold, 11);
        assert_eq!(r.class_means, (10.0, 200.0));
        assert!((r.between_class_variance - 0.25 * 190.0 * 190.0).abs() < 1e-9);
    }

    #[test]
    fn single_bin_is_degenerate() {
        assert!(matches!(
            otsu_threshold(&hist_of(&[(42, 1000)])),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn derive_examples() {
        let a = derive_ed_thresholds(100).unwrap();
        assert_eq!((a.grad_thr, a.anchor_thr), (50.0, 0.067 * 100.0));
        assert!((a.anchor_thr - 6.7).abs() < 1e-12);
        let z = derive_ed_thresholds(0).unwrap();
        assert_eq!((z.grad_thr, z.anchor_thr), (0.0, 0.0));
        let b = derive_ed_thresholds(150).unwrap();
        assert_eq!(b.grad_thr, 75.0);
        assert!((b.anchor_thr - 10.05).abs() < 1e-12);
        assert!(matches!(derive_ed_thresholds(256), Err(Error::OutOfRange { .. })));
        assert!(matches!(derive_ed_thresholds(-1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn anchor_to_grad_ratio() {
        for t in 1..=255 {
            let a = derive_ed_thresholds(t).unwrap();
            assert!((a.anchor_thr / a.grad_thr - 0.134).abs() < 1e-15, "t = {t}");
        }
    }

    fn random_histogram() -> impl Strategy<Value = Histogram256> {
        proptest::collection::vec(0u64..500, BINS)
            .prop_filter("needs two populated bins", |v| v.iter().filter(|&&c| c > 0).count() >= 2)
            .prop_map(|v| Histogram256::from_bins(v.try_into().unwrap()).unwrap())
    }

    fn sparse_histogram() -> impl Strategy<Value = Histogram256> {
        proptest::collection::vec((0usize..BINS, 1u64..1000), 2..6)
            .prop_filter("needs two populated bins", |v| {
                v.iter().map(|p| p.0).collect::<std::collections::BTreeSet<_>>().len() >= 2
            })
            .prop_map(|pairs| hist_of(&pairs))
    }

    proptest! {
        #[test]
        fn scale_invariance(h in sparse_histogram(), k in 2u64..50) {
            let scaled = Histogram256::from_bins(h.bins().map(|b| b * k)).unwrap();
            prop_assert_eq!(otsu_threshold(&h).unwrap().threshold, otsu_threshold(&scaled).unwrap().threshold);
        }

        #[test]
        fn class_statistics_are_consistent(h in random_histogram()) {
            let r = otsu_threshold(&h).unwrap();
            let (w0, w1) = r.class_weights;
            let (m0, m1) = r.class_means;
            prop_assert!((w0 + w1 - 1.0).abs() < 1e-9);
            prop_assert!((w0 * m0 + w1 * m1 - r.total_mean).abs() < 1e-6);
        }

        #[test]
        fn minimizes_within_class_variance(h in sparse_histogram()) {
            // σ_T² = σ_W²(t) + σ_B²(t), so the between-class maximizer is the
            // within-class minimizer.
            let r = otsu_threshold(&h).unwrap();
            let t = r.threshold as usize;
            let within = within_class_variance(&h, t);
            prop_assert!((within + r.between_class_variance - total_variance(&h)).abs() < 1e-6);
            let (mut n0, n) = (0, h.total());
            for candidate in 1..BINS {
                n0 += h.bins()[candidate - 1];
                if n0 == 0 || n0 == n {
                    continue;
                }
                prop_assert!(within <= within_class_variance(&h, candidate) + 1e-6);
            }
        }

        #[test]
        fn derive_is_linear(t in 0i64..=127) {
            let a = derive_ed_thresholds(t).unwrap();
            let b = derive_ed_thresholds(2 * t).unwrap();
            prop_assert_eq!(b.grad_thr, 2.0 * a.grad_thr);
            prop_assert!((b.anchor_thr - 2.0 * a.anchor_thr).abs() < 1e-12);
        }
    }
}
