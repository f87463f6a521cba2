//! Gaussian smoothing, 3×3 convolution and the first-order operator
//! registry.
//!
//! Every operator is stored in its x-derivative form; the y kernel is the
//! transpose. Magnitudes are rescaled by `Σ|sobel| / Σ|op|` so that one set
//! of thresholds applies to every operator (a unit step yields the same
//! magnitude under Sobel, Prewitt, Scharr, Kroon and Orhei).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Sobel,
    Prewitt,
    Kirsch,
    Kitchen,
    Kayyali,
    Scharr,
    Kroon,
    Orhei,
}

impl Operator {
    pub const ALL: [Operator; 8] = [
        Operator::Sobel,
        Operator::Prewitt,
        Operator::Kirsch,
        Operator::Kitchen,
        Operator::Kayyali,
        Operator::Scharr,
        Operator::Kroon,
        Operator::Orhei,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Sobel => "sobel",
            Operator::Prewitt => "prewitt",
            Operator::Kirsch => "kirsch",
            Operator::Kitchen => "kitchen",
            Operator::Kayyali => "kayyali",
            Operator::Scharr => "scharr",
            Operator::Kroon => "kroon",
            Operator::Orhei => "orhei",
        }
    }

    pub fn kernel(self) -> Kernel3x3 {
        let coefficients = match self {
            Operator::Sobel => [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]],
            Operator::Prewitt => [[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]],
            Operator::Kirsch => [[-3, -3, 5], [-3, 0, 5], [-3, -3, 5]],
            Operator::Kitchen => [[-2, 0, 2], [-3, 0, 3], [-2, 0, 2]],
            Operator::Kayyali => [[-6, 0, 6], [0, 0, 0], [6, 0, -6]],
            Operator::Scharr => [[-3, 0, 3], [-10, 0, 10], [-3, 0, 3]],
            Operator::Kroon => [[-17, 0, 17], [-61, 0, 61], [-17, 0, 17]],
            Operator::Orhei => [[-1, 0, 1], [-4, 0, 4], [-1, 0, 1]],
        };
        Kernel3x3 {
            operator: self,
            coefficients,
        }
    }

    /// Factor that brings this operator's magnitudes onto the Sobel scale.
    pub fn magnitude_scale(self) -> f64 {
        Operator::Sobel.kernel().weight_norm() as f64 / self.kernel().weight_norm() as f64
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Operator::ALL
            .into_iter()
            .find(|op| op.name() == lower)
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

/// Looks up an operator kernel by name.
pub fn kernel_for(name: &str) -> Result<Kernel3x3> {
    name.parse::<Operator>().map(Operator::kernel)
}

/// A 3×3 integer kernel, indexed `[row][col]`, applied as a correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Kernel3x3 {
    pub operator: Operator,
    pub coefficients: [[i32; 3]; 3],
}

impl Kernel3x3 {
    pub fn name(&self) -> &'static str {
        self.operator.name()
    }

    pub fn weight_norm(&self) -> i32 {
        self.coefficients.iter().flatten().map(|c| c.abs()).sum()
    }

    pub fn transposed(&self) -> Kernel3x3 {
        let c = &self.coefficients;
        let mut t = [[0; 3]; 3];
        for (r, row) in t.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = c[k][r];
            }
        }
        Kernel3x3 {
            operator: self.operator,
            coefficients: t,
        }
    }
}

/// Signed, unclamped convolution output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub width: usize,
    pub height: usize,
    pub values: Vec<i32>,
}

impl Response {
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.values[y * self.width + x]
    }
}

/// Correlates `img` with `coefficients`, replicating edge pixels at the
/// border.
pub fn convolve3x3(img: &GrayImage, kernel: &Kernel3x3) -> Result<Response> {
    img.ensure_at_least(3)?;
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let k = &kernel.coefficients;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)].map(|r| &px[r * w..(r + 1) * w]);
        for x in 0..w {
            let cols = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
            let mut acc = 0i32;
            for (krow, row) in k.iter().zip(rows) {
                for (&c, &cx) in krow.iter().zip(&cols) {
                    acc += c * row[cx] as i32;
                }
            }
            values.push(acc);
        }
    }
    Ok(Response {
        width: w,
        height: h,
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    size: usize,
    sigma: f64,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Row-major `size × size` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

/// Sigma used for a given kernel size: `0.3·((size−1)/2 − 1) + 0.8`.
pub fn sigma_for_size(size: usize) -> f64 {
    0.3 * ((size as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

pub fn gaussian_kernel(size: usize) -> Result<GaussianKernel> {
    if size.is_multiple_of(2) || !(3..=15).contains(&size) {
        return Err(Error::InvalidKernelSize(size));
    }
    let sigma = sigma_for_size(size);
    let half = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mut weights: Vec<f64> = taps
        .iter()
        .flat_map(|&ty| taps.iter().map(move |&tx| tx * ty))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(GaussianKernel {
        size,
        sigma,
        weights,
    })
}

/// Direct 2-D convolution with replicated borders, rounded and clamped.
pub fn smooth(img: &GrayImage, kernel: &GaussianKernel) -> Result<GrayImage> {
    img.ensure_at_least(kernel.size)?;
    let (w, h) = (img.width(), img.height());
    let r = (kernel.size / 2) as isize;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (ky, dy) in (-r..=r).enumerate() {
                let row = &kernel.weights[ky * kernel.size..(ky + 1) * kernel.size];
                for (&wt, dx) in row.iter().zip(-r..=r) {
                    acc += wt * img.get_clamped(x + dx, y + dy) as f64;
                }
            }
            out.push(acc.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(w, h, out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum MagnitudeMode {
    /// `|Gx| + |Gy|`
    #[default]
    Approx,
    /// `sqrt(Gx² + Gy²)`
    Exact,
}

impl MagnitudeMode {
    pub fn name(self) -> &'static str {
        match self {
            MagnitudeMode::Approx => "approx",
            MagnitudeMode::Exact => "exact",
        }
    }

    #[inline]
    pub fn combine(self, gx: f64, gy: f64) -> f64 {
        match self {
            MagnitudeMode::Approx => gx.abs() + gy.abs(),
            MagnitudeMode::Exact => gx.hypot(gy),
        }
    }
}

impl FromStr for MagnitudeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "approx" => Ok(MagnitudeMode::Approx),
            "exact" => Ok(MagnitudeMode::Exact),
            _ => Err(Error::InvalidParams(format!(
                "magnitude mode must be `approx` or `exact`, got `{s}`"
            ))),
        }
    }
}

/// Edge orientation. A `Vertical` edge runs up-down, so its gradient is
/// mostly horizontal (`|Gx| ≥ |Gy|`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<i32>,
    gy: Vec<i32>,
    magnitude: Vec<f64>,
    orientation: Vec<Orientation>,
}

impl GradientField {
    /// Builds a field directly from magnitudes and orientations. Component
    /// responses are left at zero.
    pub fn from_parts(
        width: usize,
        height: usize,
        magnitude: Vec<f64>,
        orientation: Vec<Orientation>,
    ) -> Result<Self> {
        let n = width * height;
        if magnitude.len() != n || orientation.len() != n {
            return Err(Error::InvalidImage(format!(
                "field buffers do not match {width}x{height}"
            )));
        }
        if magnitude.iter().any(|m| m.is_nan() || *m < 0.0) {
            return Err(Error::InvalidImage("negative or NaN magnitude".into()));
        }
        Ok(Self {
            width,
            height,
            gx: vec![0; n],
            gy: vec![0; n],
            magnitude,
            orientation,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw x responses, before operator scaling.
    pub fn gx(&self) -> &[i32] {
        &self.gx
    }

    pub fn gy(&self) -> &[i32] {
        &self.gy
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientation
    }

    #[inline]
    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    #[inline]
    pub fn orientation(&self, x: usize, y: usize) -> Orientation {
        self.orientation[y * self.width + x]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn magnitudes_mut(&mut self) -> &mut [f64] {
        &mut self.magnitude
    }

    /// Magnitudes linearly rescaled to `[0, 255]`, for inspection.
    pub fn magnitude_image(&self) -> GrayImage {
        let max = self.max_magnitude();
        let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
        let px = self
            .magnitude
            .iter()
            .map(|m| (m * scale).round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::new(self.width, self.height, px).expect("field dimensions are valid")
    }
}

pub fn gradient_field(img: &GrayImage, op: Operator, mode: MagnitudeMode) -> Result<GradientField> {
    let kx = op.kernel();
    let gx = convolve3x3(img, &kx)?.values;
    let gy = convolve3x3(img, &kx.transposed())?.values;
    let scale = op.magnitude_scale();
    let (magnitude, orientation) = gx
        .iter()
        .zip(&gy)
        .map(|(&x, &y)| {
            let m = scale * mode.combine(x as f64, y as f64);
            let o = if x.abs() >= y.abs() {
                Orientation::Vertical
            } else {
                Orientation::Horizontal
            };
            (m, o)
        })
        .unzip();
    Ok(GradientField {
        width: img.width(),
        height: img.height(),
        gx,
        gy,
        magnitude,
        orientation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Quadruple loop with explicit clamping; independent of the row-slice
    /// fast path above.
    fn naive_convolve(img: &GrayImage, k: &[[i32; 3]; 3]) -> Vec<i32> {
        let mut out = vec![];
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                let mut acc = 0;
                for ky in 0..3isize {
                    for kx in 0..3isize {
                        acc += k[ky as usize][kx as usize]
                            * img.get_clamped(x + kx - 1, y + ky - 1) as i32;
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn step_image() -> GrayImage {
        GrayImage::from_fn(6, 5, |x, _| if x < 2 { 0 } else { 255 }).unwrap()
    }

    #[test]
    fn registry_matches_published_kernels() {
        let sobel = kernel_for("sobel").unwrap();
        assert_eq!(sobel.coefficients, [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]);
        assert_eq!(sobel.weight_norm(), 8);
        let scharr = kernel_for("Scharr").unwrap();
        assert_eq!(scharr.coefficients, [[-3, 0, 3], [-10, 0, 10], [-3, 0, 3]]);
        assert_eq!(scharr.weight_norm(), 32);
        assert_eq!(kernel_for("kroon").unwrap().coefficients[1], [-61, 0, 61]);
        assert!(matches!(kernel_for("gibberish"), Err(Error::UnknownOperator(_))));
        for op in Operator::ALL {
            assert!(op.kernel().weight_norm() > 0);
            assert_eq!(op.name().parse::<Operator>().unwrap(), op);
        }
    }

    #[test]
    fn transpose_is_involution() {
        for op in Operator::ALL {
            let k = op.kernel();
            assert_eq!(k.transposed().transposed(), k);
        }
        let t = Operator::Sobel.kernel().transposed().coefficients;
        assert_eq!(t, [[-1, -2, -1], [0, 0, 0], [1, 2, 1]]);
    }

    #[test]
    fn constant_image_has_zero_response() {
        let img = GrayImage::filled(7, 5, 93).unwrap();
        for op in Operator::ALL {
            let r = convolve3x3(&img, &op.kernel()).unwrap();
            assert!(r.values.iter().all(|&v| v == 0), "{op}");
            let g = gradient_field(&img, op, MagnitudeMode::Approx).unwrap();
            assert_eq!(g.max_magnitude(), 0.0);
        }
    }

    #[test]
    fn center_kernel_is_identity() {
        let img = GrayImage::from_fn(5, 4, |x, y| (x * 40 + y * 7) as u8).unwrap();
        let k = Kernel3x3 {
            operator: Operator::Sobel,
            coefficients: [[0, 0, 0], [0, 1, 0], [0, 0, 0]],
        };
        let r = convolve3x3(&img, &k).unwrap();
        let expected: Vec<i32> = img.pixels().iter().map(|&v| v as i32).collect();
        assert_eq!(r.values, expected);
    }

    #[test]
    fn step_response_next_to_the_step() {
        let img = step_image();
        let r = convolve3x3(&img, &Operator::Sobel.kernel()).unwrap();
        let naive = naive_convolve(&img, &Operator::Sobel.kernel().coefficients);
        assert_eq!(r.values, naive);
        for y in 0..5 {
            assert_eq!(r.get(0, y), 0);
            assert_eq!(r.get(1, y), 1020);
            assert_eq!(r.get(2, y), 1020);
            assert_eq!(r.get(3, y), 0);
        }
    }

    #[test]
    fn step_orientation_is_vertical() {
        let g = gradient_field(&step_image(), Operator::Sobel, MagnitudeMode::Approx).unwrap();
        for y in 0..5 {
            for x in 1..=2 {
                assert_eq!(g.orientation(x, y), Orientation::Vertical);
                assert_eq!(g.magnitude(x, y), 1020.0);
            }
        }
    }

    #[test]
    fn normalized_operators_agree_on_a_step() {
        let img = step_image();
        for op in [
            Operator::Sobel,
            Operator::Prewitt,
            Operator::Scharr,
            Operator::Kroon,
            Operator::Orhei,
            Operator::Kitchen,
        ] {
            let g = gradient_field(&img, op, MagnitudeMode::Approx).unwrap();
            assert!((g.magnitude(1, 2) - 1020.0).abs() < 1e-9, "{op}");
        }
    }

    #[test]
    fn magnitude_modes() {
        assert_eq!(MagnitudeMode::Approx.combine(3.0, 4.0), 7.0);
        assert_eq!(MagnitudeMode::Exact.combine(3.0, -4.0), 5.0);
    }

    #[test]
    fn too_small_is_rejected() {
        let img = GrayImage::filled(2, 5, 0).unwrap();
        assert!(matches!(
            convolve3x3(&img, &Operator::Sobel.kernel()),
            Err(Error::ImageTooSmall { .. })
        ));
        let img = GrayImage::filled(8, 8, 0).unwrap();
        assert!(smooth(&img, &gaussian_kernel(9).unwrap()).is_err());
    }

    #[test]
    fn gaussian_sizes() {
        let k3 = gaussian_kernel(3).unwrap();
        assert!((k3.sigma() - 0.8).abs() < 1e-12);
        let k9 = gaussian_kernel(9).unwrap();
        assert!((k9.sigma() - 1.7).abs() < 1e-12);
        for bad in [0, 1, 2, 4, 17] {
            assert!(matches!(gaussian_kernel(bad), Err(Error::InvalidKernelSize(_))));
        }
        for size in (3..=15).step_by(2) {
            let k = gaussian_kernel(size).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for r in 0..size {
                for c in 0..size {
                    let w = k.weight(c, r);
                    assert!(w >= 0.0);
                    assert!((w - k.weight(size - 1 - c, r)).abs() < 1e-15);
                    assert!((w - k.weight(c, size - 1 - r)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn gaussian_3x3_values() {
        // Unnormalized 1-D taps exp(-1/(2·0.64)) and 1, outer product, sum 1.
        let e = (-1.0f64 / 1.28).exp();
        let total = (1.0 + 2.0 * e).powi(2);
        let k = gaussian_kernel(3).unwrap();
        assert!((k.weight(1, 1) - 1.0 / total).abs() < 1e-12);
        assert!((k.weight(0, 1) - e / total).abs() < 1e-12);
        assert!((k.weight(0, 0) - e * e / total).abs() < 1e-12);
    }

    #[test]
    fn smoothing_uniform_and_impulse() {
        let k = gaussian_kernel(5).unwrap();
        let img = GrayImage::filled(9, 9, 77).unwrap();
        assert_eq!(smooth(&img, &k).unwrap(), img);

        let img = GrayImage::from_fn(11, 11, |x, y| if (x, y) == (5, 5) { 255 } else { 0 }).unwrap();
        let out = smooth(&img, &k).unwrap();
        for y in 0..11 {
            for x in 0..11 {
                let (dx, dy) = (x as isize - 5, y as isize - 5);
                let expected = if dx.abs() <= 2 && dy.abs() <= 2 {
                    (255.0 * k.weight((dx + 2) as usize, (dy + 2) as usize)).round() as u8
                } else {
                    0
                };
                assert_eq!(out.get(x, y), expected, "({x},{y})");
            }
        }
    }

    /// Composes the 3×3 kernel with itself into a 5×5 kernel.
    fn composed_3x3(k: &GaussianKernel) -> Vec<f64> {
        let mut out = vec![0.0; 25];
        for r1 in 0..3 {
            for c1 in 0..3 {
                for r2 in 0..3 {
                    for c2 in 0..3 {
                        out[(r1 + r2) * 5 + c1 + c2] += k.weight(c1, r1) * k.weight(c2, r2);
                    }
                }
            }
        }
        out
    }

    fn gray_image(min: usize, max: usize) -> impl Strategy<Value = GrayImage> {
        (min..max, min..max).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn convolution_matches_naive(img in gray_image(3, 12)) {
            for op in Operator::ALL {
                let k = op.kernel();
                prop_assert_eq!(&convolve3x3(&img, &k).unwrap().values, &naive_convolve(&img, &k.coefficients));
                let kt = k.transposed();
                prop_assert_eq!(&convolve3x3(&img, &kt).unwrap().values, &naive_convolve(&img, &kt.coefficients));
            }
        }

        #[test]
        fn approx_dominates_exact(img in gray_image(3, 10)) {
            for op in Operator::ALL {
                let a = gradient_field(&img, op, MagnitudeMode::Approx).unwrap();
                let e = gradient_field(&img, op, MagnitudeMode::Exact).unwrap();
                for (ma, me) in a.magnitudes().iter().zip(e.magnitudes()) {
                    prop_assert!(*me >= 0.0);
                    prop_assert!(ma + 1e-9 >= *me);
                }
            }
        }

        #[test]
        fn orientation_follows_components(img in gray_image(3, 10)) {
            for op in Operator::ALL {
                let g = gradient_field(&img, op, MagnitudeMode::Approx).unwrap();
                for i in 0..g.magnitudes().len() {
                    let vertical = g.gx()[i].abs() >= g.gy()[i].abs();
                    prop_assert_eq!(g.orientations()[i] == Orientation::Vertical, vertical);
                }
            }
        }

        #[test]
        fn transposing_input_swaps_components(img in gray_image(3, 10)) {
            let t = img.transposed();
            for op in [Operator::Sobel, Operator::Prewitt, Operator::Scharr, Operator::Kroon, Operator::Orhei, Operator::Kitchen] {
                let g = gradient_field(&img, op, MagnitudeMode::Approx).unwrap();
                let gt = gradient_field(&t, op, MagnitudeMode::Approx).unwrap();
                for y in 0..img.height() {
                    for x in 0..img.width() {
                        let i = y * img.width() + x;
                        let j = x * t.width() + y;
                        prop_assert_eq!(g.gx()[i].abs(), gt.gy()[j].abs());
                        prop_assert_eq!(g.gy()[i].abs(), gt.gx()[j].abs());
                        if g.gx()[i].abs() != g.gy()[i].abs() {
                            prop_assert_ne!(g.orientations()[i], gt.orientations()[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn double_smoothing_matches_composed_kernel(img in gray_image(5, 12)) {
            let k3 = gaussian_kernel(3).unwrap();
            let twice = smooth(&smooth(&img, &k3).unwrap(), &k3).unwrap();
            let composed = composed_3x3(&k3);
            for y in 0..img.height() as isize {
                for x in 0..img.width() as isize {
                    // Away from the border the composition is exact; replicated
                    // borders only compose approximately.
                    if x < 2 || y < 2 || x >= img.width() as isize - 2 || y >= img.height() as isize - 2 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for dy in -2..=2isize {
                        for dx in -2..=2isize {
                            acc += composed[((dy + 2) * 5 + dx + 2) as usize] * img.get_clamped(x + dx, y + dy) as f64;
                        }
                    }
                    let expected = acc.round() as i32;
                    let got = twice.get(x as usize, y as usize) as i32;
                    prop_assert!((got - expected).abs() <= 1, "got {} expected {}", got, expected);
                }
            }
        }
    }
}
