//! SVG scatter and feedback plots, binary PGM image grids.

use std::fmt::Write as _;

use otmap::datasets::ImageBatch;
use otmap::mappers::FeedbackTrace;
use otmap::{Error, PointSet, Result};

pub const REAL: &str = "green";
pub const GENERATED: &str = "blue";
pub const PREDICTED: &str = "purple";
pub const LINK: &str = "red";

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const RADIUS_PX: f64 = 2.0;

/// A named layer of dots.
pub struct Layer<'a> {
    pub points: &'a PointSet,
    pub color: &'a str,
    pub label: &'a str,
}

/// Maps data coordinates into the plot square with one uniform scale, so
/// circles stay round and line endpoints keep their data coordinates inside
/// the transformed group.
struct Frame {
    scale: f64,
    tx: f64,
    ty: f64,
}

impl Frame {
    fn fit<'a>(sets: impl Iterator<Item = &'a PointSet>) -> Result<Self> {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for s in sets {
            if s.dim() != 2 {
                return Err(Error::InvalidPoints(format!(
                    "plots need 2-D points, got dimension {}",
                    s.dim()
                )));
            }
            for p in s.points() {
                for c in 0..2 {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
        }
        if !lo[0].is_finite() {
            return Err(Error::InvalidPoints("nothing to plot".into()));
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        // Centre the data in the square; y grows upwards.
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        Ok(Self {
            scale,
            tx: SIZE / 2.0 - scale * cx,
            ty: SIZE / 2.0 + scale * cy,
        })
    }

    fn open_group(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r#"<g transform="translate({} {}) scale({} {})">"#,
            self.tx, self.ty, self.scale, -self.scale
        );
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn dots(out: &mut String, layer: &Layer, r: f64) {
    let _ = writeln!(
        out,
        r#"<g class="{}" fill="{}" fill-opacity="0.7">"#,
        layer.label, layer.color
    );
    for p in layer.points.points() {
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="{r}"/>"#, p[0], p[1]);
    }
    out.push_str("</g>\n");
}

fn legend(out: &mut String, layers: &[(&str, &str)]) {
    for (i, (label, color)) in layers.iter().enumerate() {
        let y = 20.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<circle cx="16" cy="{}" r="5" fill="{color}"/><text x="26" y="{}" font-size="13" font-family="sans-serif">{label}</text>"#,
            y,
            y + 4.0
        );
    }
}

/// Scatter plot of any number of point layers.
pub fn scatter_svg(layers: &[Layer]) -> Result<String> {
    let frame = Frame::fit(layers.iter().map(|l| l.points))?;
    let mut out = String::new();
    header(&mut out);
    frame.open_group(&mut out);
    for l in layers {
        dots(&mut out, l, RADIUS_PX / frame.scale);
    }
    out.push_str("</g>\n");
    let keys: Vec<(&str, &str)> = layers.iter().map(|l| (l.label, l.color)).collect();
    legend(&mut out, &keys);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Noise (blue), predictions (purple), real targets (green) and one red
/// segment from each prediction to the target it was regressed onto.
pub fn feedback_svg(trace: &FeedbackTrace) -> Result<String> {
    check_trace(trace)?;
    let sets = [&trace.noise, &trace.predictions, &trace.targets];
    let frame = Frame::fit(sets.into_iter())?;
    let mut out = String::new();
    header(&mut out);
    frame.open_group(&mut out);
    let _ = writeln!(
        out,
        r#"<g class="links" stroke="{LINK}" stroke-width="1" vector-effect="non-scaling-stroke">"#
    );
    for (i, &j) in trace.sigma.perm.iter().enumerate() {
        let (p, z) = (trace.predictions.point(i), trace.targets.point(j));
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" vector-effect="non-scaling-stroke"/>"#,
            p[0], p[1], z[0], z[1]
        );
    }
    out.push_str("</g>\n");
    let r = RADIUS_PX / frame.scale;
    for layer in [
        Layer {
            points: &trace.noise,
            color: GENERATED,
            label: "noise",
        },
        Layer {
            points: &trace.targets,
            color: REAL,
            label: "real",
        },
        Layer {
            points: &trace.predictions,
            color: PREDICTED,
            label: "predictions",
        },
    ] {
        dots(&mut out, &layer, r);
    }
    out.push_str("</g>\n");
    legend(
        &mut out,
        &[
            ("noise", GENERATED),
            ("real", REAL),
            ("predictions", PREDICTED),
        ],
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="13" font-family="sans-serif" text-anchor="end">step {} loss {:.5}</text>"#,
        SIZE - 10.0,
        trace.step,
        trace.loss
    );
    out.push_str("</svg>\n");
    Ok(out)
}

fn check_trace(t: &FeedbackTrace) -> Result<()> {
    let k = t.noise.len();
    if t.predictions.len() != k || t.targets.len() != k || t.sigma.len() != k {
        return Err(Error::Parse(format!(
            "trace sets disagree in size: noise {k}, predictions {}, targets {}, sigma {}",
            t.predictions.len(),
            t.targets.len(),
            t.sigma.len()
        )));
    }
    if !t.sigma.is_bijection() {
        return Err(Error::Parse("trace sigma is not a permutation".into()));
    }
    Ok(())
}

/// Binary greyscale PGM (P5) of images tiled `cols` across, row-major.
/// Missing tiles stay black.
pub fn pgm_grid(images: &ImageBatch, cols: usize, rows: usize) -> Result<Vec<u8>> {
    if images.c != 1 {
        return Err(Error::InvalidConfig(format!(
            "PGM output needs single-channel images, got {} channels",
            images.c
        )));
    }
    if cols == 0 || rows == 0 {
        return Err(Error::InvalidCount(
            "image grid needs at least one tile".into(),
        ));
    }
    let (h, w) = (images.h, images.w);
    let (width, height) = (cols * w, rows * h);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let start = out.len();
    out.resize(start + width * height, 0);
    let bytes = images.to_bytes();
    for t in 0..images.len().min(cols * rows) {
        let (ty, tx) = (t / cols, t % cols);
        let tile = &bytes[t * h * w..(t + 1) * h * w];
        for y in 0..h {
            let dst = start + (ty * h + y) * width + tx * w;
            out[dst..dst + w].copy_from_slice(&tile[y * w..(y + 1) * w]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use otmap::ot::Assignment;

    fn trace() -> FeedbackTrace {
        let predictions = PointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        FeedbackTrace {
            step: 3,
            noise: PointSet::from_rows(&[[0.5, -0.5], [-0.5, 0.5]]).unwrap(),
            predictions,
            targets: PointSet::from_rows(&[[2.0, 0.25], [-1.0, 3.0]]).unwrap(),
            sigma: Assignment {
                perm: vec![1, 0],
                total_cost: 0.0,
            },
            loss: 1.5,
        }
    }

    #[test]
    fn two_point_trace_has_two_matching_segments() {
        let svg = feedback_svg(&trace()).unwrap();
        let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<line")).collect();
        assert_eq!(lines.len(), 2);
        assert!(
            lines[0].contains(r#"x1="0" y1="0" x2="-1" y2="3""#),
            "{}",
            lines[0]
        );
        assert!(
            lines[1].contains(r#"x1="1" y1="1" x2="2" y2="0.25""#),
            "{}",
            lines[1]
        );
        assert!(svg.contains(r#"stroke="red""#));
    }

    #[test]
    fn inconsistent_trace_is_rejected() {
        let mut t = trace();
        t.sigma.perm = vec![0, 0];
        assert!(feedback_svg(&t).is_err());
    }

    #[test]
    fn large_scatter_stays_small() {
        let n = 10_000;
        let data = (0..2 * n)
            .map(|i| ((i * 7919) % 10_007) as f64 / 3_333.7 - 1.3)
            .collect();
        let pts = PointSet::new(n, 2, data).unwrap();
        let svg = scatter_svg(&[
            Layer {
                points: &pts,
                color: REAL,
                label: "real",
            },
            Layer {
                points: &pts,
                color: GENERATED,
                label: "generated",
            },
        ])
        .unwrap();
        assert!(svg.len() < 5 * 1024 * 1024, "{} bytes", svg.len());
    }

    #[test]
    fn pgm_layout() {
        // Two 1x2 images side by side: [0, 255] and [51, 102].
        let imgs = ImageBatch::new(2, 1, 2, 1, vec![0.0, 1.0, 0.2, 0.4]).unwrap();
        let pgm = pgm_grid(&imgs, 2, 2).unwrap();
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[0, 255, 51, 102, 0, 0, 0, 0]);
    }
}
