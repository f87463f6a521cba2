//! 8-bit raster types and bit-exact PGM/PNG file I/O.
//!
//! PGM (P2 and P5, maxval ≤ 255) is read and written. PNG is read for 8-bit
//! gray and RGB sources and written for gray images; 16-bit, paletted and
//! alpha-carrying PNGs are rejected.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Single-channel 8-bit image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel at `(x, y)` with coordinates clamped into the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn transposed(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut pixels = vec![0; w * h];
        for y in 0..h {
            for x in 0..w {
                pixels[x * h + y] = self.pixels[y * w + x];
            }
        }
        GrayImage {
            width: h,
            height: w,
            pixels,
        }
    }

    pub(crate) fn ensure_at_least(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min,
            });
        }
        Ok(())
    }
}

/// Three-channel 8-bit image, row-major `(r, g, b)` triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// A decoded raster file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Raster {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Raster {
    /// Gray images pass through; RGB goes through [`rgb_to_gray`].
    pub fn into_gray(self) -> GrayImage {
        match self {
            Raster::Gray(g) => g,
            Raster::Rgb(rgb) => rgb_to_gray(&rgb),
        }
    }
}

/// BT.601 luma, rounded half-up.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    // Integer weights are exact, so the +500 gives true round-half-up.
    let scaled = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((scaled + 500) / 1000).min(255) as u8
}

pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    let pixels = img.pixels.iter().map(|&[r, g, b]| luma(r, g, b)).collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Loads a PGM (P2/P5) or PNG file. The format is sniffed from the magic
/// bytes, not the extension.
pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    decode_raster(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

/// Loads any supported raster and converts it to gray.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    load_raster(path).map(Raster::into_gray)
}

/// Saves a gray image. `.png` writes an 8-bit gray PNG; anything else writes
/// binary PGM (P5).
pub fn save_raster(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })?
    } else {
        encode_pgm(img, PgmEncoding::Binary)
    };
    write_file(path, &bytes)
}

/// Saves a gray image as plain-text PGM (P2).
pub fn save_pgm_ascii(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(img, PgmEncoding::Ascii))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(bytes).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmEncoding {
    /// P2
    Ascii,
    /// P5
    Binary,
}

pub fn encode_pgm(img: &GrayImage, encoding: PgmEncoding) -> Vec<u8> {
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    match encoding {
        PgmEncoding::Binary => out.extend_from_slice(&img.pixels),
        PgmEncoding::Ascii => {
            for row in img.pixels.chunks(img.width) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

pub fn decode_raster(bytes: &[u8]) -> std::result::Result<Raster, String> {
    match bytes {
        [b'P', b'2', ..] | [b'P', b'5', ..] => decode_pgm(bytes).map(Raster::Gray),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes),
        _ => Err("not a PGM (P2/P5) or PNG file".into()),
    }
}

/// Header tokenizer shared by both PGM variants. `#` comments run to end of
/// line.
struct PnmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmTokens<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("expected {what}"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| format!("{what} out of range"))
    }
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let binary = bytes[1] == b'5';
    let mut tok = PnmTokens { bytes, pos: 2 };
    let width = tok.next_uint("width")?;
    let height = tok.next_uint("height")?;
    let maxval = tok.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("degenerate dimensions {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval} (8-bit only)"));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| "dimensions overflow".to_string())?;

    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the payload.
        let start = tok.pos + 1;
        if tok.pos >= bytes.len() || !bytes[tok.pos].is_ascii_whitespace() {
            return Err("missing payload".into());
        }
        let payload = &bytes[start.min(bytes.len())..];
        if payload.len() < count {
            return Err(format!(
                "truncated payload: {} of {count} bytes",
                payload.len()
            ));
        }
        payload[..count].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for i in 0..count {
            let v = tok
                .next_uint("sample")
                .map_err(|_| format!("truncated payload: {i} of {count} samples"))?;
            if v > maxval {
                return Err(format!("sample {v} exceeds maxval {maxval}"));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    if binary && pixels.iter().any(|&v| v as usize > maxval) {
        return Err(format!("sample exceeds maxval {maxval}"));
    }
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<Raster, String> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != png::BitDepth::Eight {
        return Err(format!("unsupported PNG bit depth {depth:?} (8-bit only)"));
    }
    if !matches!(color, png::ColorType::Grayscale | png::ColorType::Rgb) {
        return Err(format!("unsupported PNG color type {color:?}"));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "PNG too large".to_string())?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let channels = if color == png::ColorType::Rgb { 3 } else { 1 };
    let mut data = Vec::with_capacity(w * h * channels);
    for row in buf.chunks(frame.line_size).take(h) {
        data.extend_from_slice(&row[..w * channels]);
    }
    match color {
        png::ColorType::Grayscale => GrayImage::new(w, h, data)
            .map(Raster::Gray)
            .map_err(|e| e.to_string()),
        _ => {
            let px = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            RgbImage::new(w, h, px)
                .map(Raster::Rgb)
                .map_err(|e| e.to_string())
        }
    }
}

fn encode_png(img: &GrayImage) -> std::result::Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| e.to_string())?;
        writer
            .write_image_data(&img.pixels)
            .map_err(|e| e.to_string())?;
    }
    Ok(out)
}

/// Lists the file stems of supported rasters (`.pgm`, `.png`) in `dir`,
/// sorted, paired with their paths.
pub fn list_rasters(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let dir = dir.as_ref();
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("pgm" | "png")) || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            found.push((stem.to_string(), path.clone()));
        }
    }
    found.sort();
    Ok(found)
}
