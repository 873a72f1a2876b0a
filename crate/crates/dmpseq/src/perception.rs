//! Pixel-intensity object detection: blur the grayscale observation,
//! estimate the background as the histogram mode, threshold the absolute
//! difference, label connected components (8-connectivity) and return the
//! bounding box of the largest one together with the corresponding crop of
//! the original image.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("image is degenerate: {0}")]
    BadImage(&'static str),
    #[error("detector parameter out of range: {0}")]
    BadParams(&'static str),
    #[error("no object found above the intensity threshold")]
    NoObjectFound,
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, PerceptionError> {
        if width == 0 || height == 0 {
            return Err(PerceptionError::BadImage("zero dimension"));
        }
        if pixels.len() != width * height {
            return Err(PerceptionError::BadImage("pixel count does not match dimensions"));
        }
        Ok(Self { width, height, pixels })
    }

    /// Builds an image by evaluating `f(x, y)` over the grid.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
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

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Photometric negative, `255 − p`.
    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| 255 - p).collect(),
        }
    }

    /// Copies the boxed region; the box must lie inside the image.
    pub fn crop(&self, bbox: &BoundingBox) -> Self {
        assert!(
            bbox.w >= 1
                && bbox.h >= 1
                && bbox.x + bbox.w <= self.width
                && bbox.y + bbox.h <= self.height,
            "bounding box {bbox:?} outside {}x{} image",
            self.width,
            self.height
        );
        let mut pixels = Vec::with_capacity(bbox.w * bbox.h);
        for y in bbox.y..bbox.y + bbox.h {
            let row = &self.pixels[y * self.width + bbox.x..y * self.width + bbox.x + bbox.w];
            pixels.extend_from_slice(row);
        }
        Self { width: bbox.w, height: bbox.h, pixels }
    }
}

/// Pixel-space bounding box: top-left corner plus extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Detector configuration. Defaults: threshold 30 intensity units, blur
/// sigma 1.5 px (kernel truncated at 3 sigma), minimum component area 25 px.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub threshold_delta: f64,
    pub blur_sigma: f64,
    pub min_area: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { threshold_delta: 30.0, blur_sigma: 1.5, min_area: 25 }
    }
}

/// Rec. 601 luma: the conventional RGB→grayscale weights.
pub fn luma601(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Separable Gaussian blur with replicated borders, kernel truncated at
/// 3 sigma. Returns f64 intensities to keep downstream thresholding free of
/// rounding artifacts.
fn gaussian_blur(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    if sigma < 1e-2 {
        return img.pixels.iter().map(|&p| p as f64).collect();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-0.5 * (i as f64 / sigma).powi(2)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = clamp(x as isize + ki as isize - radius, w);
                acc += k * img.pixels[y * w + sx] as f64;
            }
            horizontal[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = clamp(y as isize + ki as isize - radius, h);
                acc += k * horizontal[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Histogram mode of the blurred intensities, ties broken toward the lower
/// intensity.
fn background_mode(blurred: &[f64]) -> f64 {
    let mut counts = [0usize; 256];
    for &v in blurred {
        let bin = v.round().clamp(0.0, 255.0) as usize;
        counts[bin] += 1;
    }
    let mut best = 0usize;
    for (bin, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = bin;
        }
    }
    best as f64
}

struct Component {
    area: usize,
    min_x: usize,
    min_y: usize,
    max_x: usize,
    max_y: usize,
}

/// Connected components of the mask with 8-connectivity; flood fill with an
/// explicit stack, tracking area and bounding box per component.
fn largest_component(mask: &[bool], w: usize, h: usize) -> Option<Component> {
    let mut visited = vec![false; w * h];
    let mut best: Option<Component> = None;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || visited[start] {
            continue;
        }
        let mut comp =
            Component { area: 0, min_x: usize::MAX, min_y: usize::MAX, max_x: 0, max_y: 0 };
        visited[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            comp.area += 1;
            comp.min_x = comp.min_x.min(x);
            comp.min_y = comp.min_y.min(y);
            comp.max_x = comp.max_x.max(x);
            comp.max_y = comp.max_y.max(y);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if mask[nidx] && !visited[nidx] {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
        // Strictly-greater keeps the first (scan-order) component on ties.
        if best.as_ref().is_none_or(|b| comp.area > b.area) {
            best = Some(comp);
        }
    }
    best
}

/// Locates the object in the image and returns its bounding box together
/// with the crop of the original (unblurred) image.
pub fn detect_object(
    img: &GrayImage,
    cfg: &DetectorConfig,
) -> Result<(BoundingBox, GrayImage), PerceptionError> {
    if !(cfg.threshold_delta > 0.0 && cfg.threshold_delta < 255.0) {
        return Err(PerceptionError::BadParams("threshold_delta must be in (0, 255)"));
    }
    if !(cfg.blur_sigma >= 0.0 && cfg.blur_sigma.is_finite()) {
        return Err(PerceptionError::BadParams("blur_sigma must be non-negative"));
    }
    let blurred = gaussian_blur(img, cfg.blur_sigma);
    let background = background_mode(&blurred);
    let mask: Vec<bool> =
        blurred.iter().map(|&v| (v - background).abs() > cfg.threshold_delta).collect();
    if !mask.iter().any(|&m| m) {
        return Err(PerceptionError::NoObjectFound);
    }
    let comp = largest_component(&mask, img.width, img.height)
        .filter(|c| c.area >= cfg.min_area)
        .ok_or(PerceptionError::NoObjectFound)?;
    let bbox = BoundingBox {
        x: comp.min_x,
        y: comp.min_y,
        w: comp.max_x - comp.min_x + 1,
        h: comp.max_y - comp.min_y + 1,
    };
    Ok((bbox, img.crop(&bbox)))
}
