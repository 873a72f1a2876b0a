//! Run artifacts: trajectory CSV (exact float round-trip), the keypoint
//! overlay SVG, orthographic path projections SVG, and the run report JSON.
//! All output is byte-deterministic for identical inputs; wall-clock
//! timings are opt-in.

use base64::Engine;
use dmpseq::dmp::Trajectory;
use dmpseq::geometry::KeypointPair;
use dmpseq::perception::{BoundingBox, GrayImage};
use dmpseq::sequencer::{MotionPlan, ScalingParams, SegmentKind};
use dmpseq::Vec3;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// Writes `t,x,y,z` rows. Floats use the shortest representation that
/// parses back to the identical bits.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 32 + 16);
    out.push_str("t,x,y,z\n");
    for (i, p) in traj.points().iter().enumerate() {
        let t = i as f64 * traj.dt();
        let _ = writeln!(out, "{},{},{},{}", t, p.x, p.y, p.z);
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<(), String> {
    std::fs::write(path, trajectory_to_csv(traj)).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses a `t,x,y,z` CSV produced by [`trajectory_to_csv`] (or a recorded
/// demonstration in the same format). Errors carry 1-based line numbers.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, String> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or("empty file")?;
    if header.trim() != "t,x,y,z" {
        return Err(format!("line 1: expected header 't,x,y,z', got '{}'", header.trim()));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!("line {line_no}: expected 4 fields, got {}", fields.len()));
        }
        let mut values = [0.0f64; 4];
        for (i, f) in fields.iter().enumerate() {
            values[i] = f
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("line {line_no}: field {}: {e}", i + 1))?;
            if !values[i].is_finite() {
                return Err(format!("line {line_no}: field {} is not finite", i + 1));
            }
        }
        times.push(values[0]);
        points.push(Vec3::new(values[1], values[2], values[3]));
    }
    if points.len() < 2 {
        return Err("need at least 2 samples".to_owned());
    }
    let dt = times[1] - times[0];
    if dt.is_nan() || dt <= 0.0 {
        return Err("time stamps must strictly increase".to_owned());
    }
    for (i, t) in times.iter().enumerate() {
        if (t - i as f64 * dt).abs() > 1e-9 {
            return Err(format!("line {}: non-uniform timestep (t = {t})", i + 2));
        }
    }
    Trajectory::new(dt, points).map_err(|e| e.to_string())
}

/// Keypoint pairs drawn over the crop with execution-order indices,
/// mirroring how generated pairs are visually verified before motion
/// generation.
pub fn keypoint_overlay_svg(crop: &GrayImage, pairs: &[KeypointPair]) -> String {
    let (w, h) = (crop.width(), crop.height());
    let png = {
        let buf = image::GrayImage::from_raw(w as u32, h as u32, crop.pixels().to_vec())
            .expect("crop dimensions match pixel buffer");
        let mut bytes = Vec::new();
        buf.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .expect("png encoding of a valid buffer");
        base64::engine::general_purpose::STANDARD.encode(bytes)
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        svg,
        "  <image href=\"data:image/png;base64,{png}\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\"/>"
    );
    for (i, pair) in pairs.iter().enumerate() {
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"red\" stroke-width=\"2\"/>",
            pair.start.x, pair.start.y, pair.goal.x, pair.goal.y
        );
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"red\"/>",
            pair.start.x, pair.start.y
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" fill=\"#00cc00\" font-size=\"16\" font-family=\"monospace\">{}</text>",
            pair.start.x + 6.0,
            pair.start.y - 6.0,
            i + 1
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Time-parameterized stroke color: red at the start, green midway, blue at
/// the end.
fn time_color(u: f64) -> String {
    let (r, g, b) = if u < 0.5 {
        let t = u * 2.0;
        (1.0 - t, t, 0.0)
    } else {
        let t = (u - 0.5) * 2.0;
        (0.0, 1.0 - t, t)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8
    )
}

/// Three orthographic projections (top x-y, front x-z, side y-z) of the
/// trajectory, colored by time progression, with the board footprint on
/// the top view.
pub fn path_projections_svg(traj: &Trajectory, env: (f64, f64)) -> String {
    const PANEL: f64 = 300.0;
    const PAD: f64 = 40.0;
    const CHUNKS: usize = 120;

    struct Panel {
        title: &'static str,
        axes: (usize, usize),
        flip_vertical: bool,
    }
    // Image y grows downward in the top view to match pixel coordinates;
    // height views put z up.
    let panels = [
        Panel { title: "top (x-y)", axes: (0, 1), flip_vertical: false },
        Panel { title: "front (x-z)", axes: (0, 2), flip_vertical: true },
        Panel { title: "side (y-z)", axes: (1, 2), flip_vertical: true },
    ];

    let pts = traj.points();
    let coord = |p: &Vec3, axis: usize| match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    };

    let width = PAD + (PANEL + PAD) * panels.len() as f64;
    let height = PANEL + 2.0 * PAD;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");

    for (pi, panel) in panels.iter().enumerate() {
        let ox = PAD + (PANEL + PAD) * pi as f64;
        let oy = PAD;
        let (ax, ay) = panel.axes;
        let mut min = (f64::MAX, f64::MAX);
        let mut max = (f64::MIN, f64::MIN);
        for p in pts {
            min.0 = min.0.min(coord(p, ax));
            min.1 = min.1.min(coord(p, ay));
            max.0 = max.0.max(coord(p, ax));
            max.1 = max.1.max(coord(p, ay));
        }
        // Top view always shows the whole board.
        if pi == 0 {
            min = (min.0.min(0.0), min.1.min(0.0));
            max = (max.0.max(env.0), max.1.max(env.1));
        }
        let span = ((max.0 - min.0).max(1e-6), (max.1 - min.1).max(1e-6));
        let scale = (PANEL / span.0).min(PANEL / span.1);
        let to_px = |p: &Vec3| {
            let u = (coord(p, ax) - min.0) * scale;
            let v = (coord(p, ay) - min.1) * scale;
            let v = if panel.flip_vertical { PANEL - v } else { v };
            (ox + u, oy + v)
        };

        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" font-family=\"monospace\">{}</text>",
            ox,
            oy - 10.0,
            panel.title
        );
        if pi == 0 {
            let (bx, by) = (ox, oy);
            let _ = writeln!(
                svg,
                "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#bbbbbb\"/>",
                bx,
                by,
                env.0 * scale,
                env.1 * scale
            );
        }

        let chunk = (pts.len() / CHUNKS).max(1);
        let mut i = 0;
        while i + 1 < pts.len() {
            let end = (i + chunk).min(pts.len() - 1);
            let u = (i + end) as f64 / 2.0 / pts.len() as f64;
            let mut path = String::new();
            let (x0, y0) = to_px(&pts[i]);
            let _ = write!(path, "M {x0:.2} {y0:.2}");
            for p in &pts[i + 1..=end] {
                let (x, y) = to_px(p);
                let _ = write!(path, " L {x:.2} {y:.2}");
            }
            let _ = writeln!(
                svg,
                "  <path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                time_color(u)
            );
            i = end;
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Serialize)]
pub struct RunJson {
    pub instruction: String,
    pub backend: String,
    pub backend_calls: u32,
    pub keyword: String,
    pub detection: DetectionJson,
    pub keypoint_pairs_px: Vec<[[f64; 2]; 2]>,
    pub scaling_params_m: Vec<ScalingJson>,
    pub motion: Option<MotionJson>,
    pub raw_response: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_timings_ms: Option<Vec<(String, f64)>>,
}

#[derive(Serialize)]
pub struct DetectionJson {
    pub bbox: [usize; 4],
    pub image_size: [usize; 2],
}

#[derive(Serialize)]
pub struct ScalingJson {
    pub y0: [f64; 3],
    pub y_goal: [f64; 3],
}

#[derive(Serialize)]
pub struct MotionJson {
    pub dt: f64,
    pub points: usize,
    pub duration_s: f64,
    pub segments: Vec<SegmentJson>,
}

#[derive(Serialize)]
pub struct SegmentJson {
    pub kind: &'static str,
    pub keyword: String,
    pub tau_s: f64,
    pub from: [f64; 3],
    pub to: [f64; 3],
}

pub fn scaling_json(s: &ScalingParams) -> ScalingJson {
    ScalingJson { y0: [s.y0.x, s.y0.y, s.y0.z], y_goal: [s.y_goal.x, s.y_goal.y, s.y_goal.z] }
}

pub fn detection_json(bbox: &BoundingBox, img: &GrayImage) -> DetectionJson {
    DetectionJson {
        bbox: [bbox.x, bbox.y, bbox.w, bbox.h],
        image_size: [img.width(), img.height()],
    }
}

/// Deterministic per-segment timing breakdown of a plan.
pub fn motion_json(plan: &MotionPlan, primitive_tau: f64, traj: &Trajectory) -> MotionJson {
    let segments = plan
        .segments
        .iter()
        .map(|seg| {
            let tau = match seg.kind {
                SegmentKind::Translation => {
                    dmpseq::sequencer::translation_tau((seg.scaling.y_goal - seg.scaling.y0).norm())
                }
                SegmentKind::Primitive => primitive_tau,
            };
            SegmentJson {
                kind: match seg.kind {
                    SegmentKind::Translation => "translation",
                    SegmentKind::Primitive => "primitive",
                },
                keyword: seg.keyword.clone(),
                tau_s: tau,
                from: [seg.scaling.y0.x, seg.scaling.y0.y, seg.scaling.y0.z],
                to: [seg.scaling.y_goal.x, seg.scaling.y_goal.y, seg.scaling.y_goal.z],
            }
        })
        .collect();
    MotionJson { dt: traj.dt(), points: traj.len(), duration_s: traj.duration(), segments }
}

pub fn write_run_json(run: &RunJson, path: &Path) -> Result<(), String> {
    let mut text =
        serde_json::to_string_pretty(run).map_err(|e| format!("run.json serialize: {e}"))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmpseq::Vec2;

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = vec![
            Vec3::new(0.1, 0.2, 0.3),
            Vec3::new(0.1234567890123, -0.2, 1.0 / 3.0),
            Vec3::new(1e-17, 2e8, -0.0),
        ];
        let traj = Trajectory::new(0.002, pts).unwrap();
        let text = trajectory_to_csv(&traj);
        let back = parse_trajectory_csv(&text).unwrap();
        assert_eq!(back, traj);
        assert_eq!(trajectory_to_csv(&back), text);
    }

    #[test]
    fn csv_parse_reports_line_numbers() {
        let err = parse_trajectory_csv("t,x,y,z\n0,0,0,0\n0.1,bad,0,0\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_trajectory_csv("wrong,header\n").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn csv_rejects_non_uniform_dt() {
        let err = parse_trajectory_csv("t,x,y,z\n0,0,0,0\n0.1,0,0,0\n0.3,0,0,0\n").unwrap_err();
        assert!(err.contains("non-uniform"), "{err}");
    }

    #[test]
    fn overlay_svg_contains_pairs_and_indices() {
        let crop = GrayImage::from_fn(40, 30, |_, _| 100);
        let pairs = vec![
            KeypointPair::new(Vec2::new(5.0, 5.0), Vec2::new(5.0, 25.0)),
            KeypointPair::new(Vec2::new(20.0, 5.0), Vec2::new(20.0, 25.0)),
        ];
        let svg = keypoint_overlay_svg(&crop, &pairs);
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(svg.contains(">1</text>"));
        assert!(svg.contains(">2</text>"));
        assert!(svg.contains("data:image/png;base64,"));
    }

    #[test]
    fn projection_svg_has_three_panels() {
        let pts: Vec<Vec3> =
            (0..100).map(|i| Vec3::new(i as f64 * 0.001, 0.05, 0.07 - i as f64 * 0.0005)).collect();
        let traj = Trajectory::new(0.01, pts).unwrap();
        let svg = path_projections_svg(&traj, (0.30, 0.18));
        assert!(svg.contains("top (x-y)"));
        assert!(svg.contains("front (x-z)"));
        assert!(svg.contains("side (y-z)"));
        assert!(svg.matches("<path").count() >= 3);
    }

    #[test]
    fn svg_output_is_deterministic() {
        let crop = GrayImage::from_fn(16, 16, |x, y| (x * y) as u8);
        let pairs = vec![KeypointPair::new(Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0))];
        assert_eq!(keypoint_overlay_svg(&crop, &pairs), keypoint_overlay_svg(&crop, &pairs));
    }
}
