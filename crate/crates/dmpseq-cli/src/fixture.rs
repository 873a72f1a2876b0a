//! Procedural fixture images for the evaluation scenarios: a dark object on
//! a uniform bright board, drawn at a fixed isotropic pixel scale so image
//! angles equal world angles. Keeps the whole evaluation hermetic; no photo
//! assets needed.

use dmpseq::metrics::{GtPattern, Scenario};
use dmpseq::perception::GrayImage;
use nalgebra::Vector2;
use std::path::Path;

/// Pixel scale of fixture images; 2000 px/m makes the default board 600x360.
pub const FIXTURE_PX_PER_M: f64 = 2000.0;
pub const BOARD_INTENSITY: u8 = 200;
pub const OBJECT_INTENSITY: u8 = 60;

/// Renders the scenario's object centered on the board. Pie-cut scenarios
/// draw a disc (round objects); everything else draws a filled rectangle of
/// the object's length x width.
pub fn scenario_image(scn: &Scenario, env: Vector2<f64>) -> GrayImage {
    let w = (env.x * FIXTURE_PX_PER_M).round() as usize;
    let h = (env.y * FIXTURE_PX_PER_M).round() as usize;
    let cx = w as f64 / 2.0;
    let cy = h as f64 / 2.0;
    let (length, width, _) = scn.object_size;
    let round = matches!(scn.generator, GtPattern::PieCuts { .. });
    let half_l = length * FIXTURE_PX_PER_M / 2.0;
    let half_w = width * FIXTURE_PX_PER_M / 2.0;
    let radius = length.min(width) * FIXTURE_PX_PER_M / 2.0;
    GrayImage::from_fn(w, h, |x, y| {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        let inside = if round {
            let (dx, dy) = (px - cx, py - cy);
            dx * dx + dy * dy <= radius * radius
        } else {
            (px - cx).abs() <= half_l && (py - cy).abs() <= half_w
        };
        if inside {
            OBJECT_INTENSITY
        } else {
            BOARD_INTENSITY
        }
    })
}

pub fn save_png(img: &GrayImage, path: &Path) -> Result<(), String> {
    let buf =
        image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
            .ok_or("image buffer size mismatch")?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Loads a PNG/PPM observation image and converts it to grayscale with
/// Rec. 601 luma weights.
pub fn load_gray(path: &Path) -> Result<GrayImage, String> {
    let img = image::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut pixels = Vec::with_capacity(w * h);
    for p in rgb.pixels() {
        pixels.push(dmpseq::perception::luma601(p.0[0], p.0[1], p.0[2]));
    }
    GrayImage::new(w, h, pixels).map_err(|e| e.to_string())
}
