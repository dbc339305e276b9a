//! Scanpath rendering: the T fixations of an episode drawn over the image
//! as numbered multi-scale boxes in a standalone SVG.

use crate::imgproc::{loc_to_pixel, GrayImage, NormalizedLocation};
use crate::Result;

const STEP_COLORS: [&str; 8] =
    ["#ff3b30", "#ff9500", "#ffcc00", "#34c759", "#00c7be", "#30b0ff", "#5856d6", "#af52de"];

/// Pixel centers of a fixation sequence on an image of the given size, in
/// step order. The renderer uses exactly these values, so tests can
/// cross-check the SVG against the trace.
pub fn fixation_centers(
    locations: &[NormalizedLocation],
    height: usize,
    width: usize,
) -> Vec<(f64, f64)> {
    locations.iter().map(|&l| loc_to_pixel(l, height, width)).collect()
}

fn base64(data: &[u8]) -> String {
    const TABLE: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::with_capacity(data.len().div_ceil(3) * 4);
    for chunk in data.chunks(3) {
        let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
        let n = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
        out.push(TABLE[(n >> 18) as usize & 63] as char);
        out.push(TABLE[(n >> 12) as usize & 63] as char);
        out.push(if chunk.len() > 1 { TABLE[(n >> 6) as usize & 63] as char } else { '=' });
        out.push(if chunk.len() > 2 { TABLE[n as usize & 63] as char } else { '=' });
    }
    out
}

fn png_bytes(img: &GrayImage) -> Result<Vec<u8>> {
    let (h, w) = (img.height(), img.width());
    let pixels: Vec<u8> =
        img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(w as u32, h as u32, pixels).expect("sized buffer");
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| crate::Error::Image("(in-memory)".into(), e.to_string()))?;
    Ok(out.into_inner())
}

/// Renders the scanpath: the raster as an embedded PNG, then per fixation
/// the three scale rectangles (clamped into the frame), a center dot, and
/// the 1-based step number.
pub fn render_scanpath(
    img: &GrayImage,
    locations: &[NormalizedLocation],
    scales: &[usize; 3],
    out: &mut String,
) -> Result<()> {
    let (h, w) = (img.height() as f64, img.width() as f64);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n"
    ));
    out.push_str(&format!(
        "  <image href=\"data:image/png;base64,{}\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\"/>\n",
        base64(&png_bytes(img)?)
    ));
    let centers = fixation_centers(locations, img.height(), img.width());
    for (t, (row, col)) in centers.iter().enumerate() {
        let color = STEP_COLORS[t % STEP_COLORS.len()];
        out.push_str(&format!("  <g stroke=\"{color}\" fill=\"none\" stroke-width=\"1\">\n"));
        for &s in scales {
            let s = s as f64;
            // clamp the box into the frame so every drawn box is in-bounds
            let x0 = (col - s / 2.0).clamp(0.0, w);
            let y0 = (row - s / 2.0).clamp(0.0, h);
            let x1 = (col + s / 2.0).clamp(0.0, w);
            let y1 = (row + s / 2.0).clamp(0.0, h);
            out.push_str(&format!(
                "    <rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\"/>\n",
                x1 - x0,
                y1 - y0
            ));
        }
        out.push_str(&format!("    <circle cx=\"{col}\" cy=\"{row}\" r=\"1.5\" fill=\"{color}\"/>\n"));
        out.push_str("  </g>\n");
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"{color}\" \
             font-family=\"monospace\">{}</text>\n",
            col + 3.0,
            row - 3.0,
            t + 1
        ));
    }
    out.push_str("</svg>\n");
    Ok(())
}
