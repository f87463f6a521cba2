//! Regenerates the bundled mini-dataset under `tests/fixtures/mini`.
//!
//! Each scene is a shaded background with overlapping ellipses and
//! polygons, rendered with 4×4 supersampling, a ripple texture patch that
//! carries no ground truth, and Gaussian noise. Ground truth marks the
//! pixel on the top/left side of every label change.
//!
//!     cargo run -p autoed --example make_mini_dataset [-- <out-dir>]

use std::f64::consts::PI;
use std::path::PathBuf;

use autoed_core::image::save_raster;
use autoed_core::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SIZE: usize = 96;
const IMAGES: u64 = 8;
const SUPERSAMPLE: usize = 4;

enum Outline {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64, angle: f64 },
    Polygon(Vec<(f64, f64)>),
}

impl Outline {
    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Outline::Ellipse { cx, cy, rx, ry, angle } => {
                let (s, c) = angle.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = (c * dx + s * dy) / rx;
                let v = (-s * dx + c * dy) / ry;
                u * u + v * v <= 1.0
            }
            Outline::Polygon(pts) => {
                // Even-odd rule.
                let mut inside = false;
                let n = pts.len();
                for i in 0..n {
                    let (x1, y1) = pts[i];
                    let (x2, y2) = pts[(i + 1) % n];
                    if (y1 > y) != (y2 > y) && x < x1 + (y - y1) * (x2 - x1) / (y2 - y1) {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }
}

struct Region {
    outline: Outline,
    level: f64,
    slope: (f64, f64),
}

impl Region {
    fn intensity(&self, x: f64, y: f64) -> f64 {
        self.level + self.slope.0 * (x - SIZE as f64 / 2.0) + self.slope.1 * (y - SIZE as f64 / 2.0)
    }
}

fn random_outline(rng: &mut impl Rng) -> Outline {
    let cx = rng.random_range(15.0..81.0);
    let cy = rng.random_range(15.0..81.0);
    let r = rng.random_range(10.0..30.0);
    let angle = rng.random_range(0.0..PI);
    match rng.random_range(0..3) {
        0 => Outline::Ellipse {
            cx,
            cy,
            rx: r,
            ry: r * rng.random_range(0.5..1.0),
            angle,
        },
        kind => {
            let sides = if kind == 1 { 3 } else { 4 };
            let pts = (0..sides)
                .map(|k| {
                    let a = angle + 2.0 * PI * k as f64 / sides as f64 + rng.random_range(-0.3..0.3);
                    let rr = r * rng.random_range(0.7..1.1);
                    (cx + rr * a.cos(), cy + rr * a.sin())
                })
                .collect();
            Outline::Polygon(pts)
        }
    }
}

fn scene(seed: u64) -> (GrayImage, GrayImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xED00 + seed);
    let background = Region {
        outline: Outline::Polygon(vec![]),
        level: rng.random_range(60.0..190.0),
        slope: (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
    };
    let mut regions: Vec<Region> = Vec::new();
    for _ in 0..rng.random_range(3..=5) {
        let contrast = rng.random_range(35.0..110.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut level = background.level + contrast;
        if !(15.0..=240.0).contains(&level) {
            level = background.level - contrast;
        }
        regions.push(Region {
            outline: random_outline(&mut rng),
            level,
            slope: (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)),
        });
    }
    // Topmost region wins; 0 is the background.
    let label_at = |x: f64, y: f64| {
        regions
            .iter()
            .rposition(|r| r.outline.contains(x, y))
            .map_or(0, |i| i + 1)
    };
    let value_at = |label: usize, x: f64, y: f64| {
        if label == 0 {
            background.intensity(x, y)
        } else {
            regions[label - 1].intensity(x, y)
        }
    };

    let ripple_amp = rng.random_range(10.0..25.0);
    let ripple_period = rng.random_range(4.0..8.0);
    let ripple_angle: f64 = rng.random_range(0.0..PI);
    let (tx, ty) = (rng.random_range(20.0..76.0), rng.random_range(20.0..76.0));
    let noise = Normal::new(0.0, rng.random_range(3.0..8.0)).unwrap();

    let mut labels = vec![0usize; SIZE * SIZE];
    let mut pixels = vec![0u8; SIZE * SIZE];
    for y in 0..SIZE {
        for x in 0..SIZE {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            labels[y * SIZE + x] = label_at(cx, cy);
            let mut acc = 0.0;
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let px = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
                    let py = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
                    acc += value_at(label_at(px, py), px, py);
                }
            }
            let mut v = acc / (SUPERSAMPLE * SUPERSAMPLE) as f64;
            // Ripple texture under a Gaussian window, so the patch has no edge.
            let d2 = (cx - tx).powi(2) + (cy - ty).powi(2);
            let window = (-d2 / (2.0 * 14.0f64.powi(2))).exp();
            let phase = 2.0 * PI * (cx * ripple_angle.cos() + cy * ripple_angle.sin()) / ripple_period;
            v += ripple_amp * window * phase.sin();
            v += noise.sample(&mut rng);
            pixels[y * SIZE + x] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    let gt = GrayImage::from_fn(SIZE, SIZE, |x, y| {
        let l = labels[y * SIZE + x];
        let right = x + 1 < SIZE && labels[y * SIZE + x + 1] != l;
        let down = y + 1 < SIZE && labels[(y + 1) * SIZE + x] != l;
        if right || down {
            255
        } else {
            0
        }
    })
    .unwrap();
    (GrayImage::new(SIZE, SIZE, pixels).unwrap(), gt)
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini"));
    std::fs::create_dir_all(out.join("images")).unwrap();
    std::fs::create_dir_all(out.join("gt")).unwrap();
    for i in 0..IMAGES {
        let (img, gt) = scene(i);
        let name = format!("{:04}.pgm", i + 1);
        save_raster(&img, out.join("images").join(&name)).unwrap();
        save_raster(&gt, out.join("gt").join(&name)).unwrap();
    }
    println!("wrote {IMAGES} scenes to {}", out.display());
}
