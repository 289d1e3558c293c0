use std::fmt::Write;

use super::frame::FrameBuffer;

/// Renders a row-major matrix as an 8-bit grayscale image. Values are mapped
/// linearly from `[0, max]` to black..white; `max <= 0` uses the matrix max.
pub fn heatmap_pgm(values: &[f64], rows: usize, cols: usize, max: f64) -> FrameBuffer {
    assert_eq!(values.len(), rows * cols, "matrix shape");
    let top = if max > 0.0 {
        max
    } else {
        values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    };
    let data = values
        .iter()
        .map(|&v| {
            if top <= 0.0 || !v.is_finite() {
                0
            } else {
                ((v / top).clamp(0.0, 1.0) * 255.0).round() as u8
            }
        })
        .collect();
    FrameBuffer::new(cols.max(1) as u32, rows.max(1) as u32, 1, data)
        .expect("heatmap dimensions are consistent")
}

/// SVG heatmap with one `rect` per cell, low distances dark.
pub fn heatmap_svg(values: &[f64], rows: usize, cols: usize, cell: u32) -> String {
    let img = heatmap_pgm(values, rows, cols, 0.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
        cols as u32 * cell,
        rows as u32 * cell
    );
    for r in 0..rows {
        for c in 0..cols {
            let g = img.data()[r * cols + c];
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({g},{g},{g})\"/>",
                c as u32 * cell,
                r as u32 * cell
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_to_max() {
        let img = heatmap_pgm(&[0.0, 0.5, 1.0, 2.0], 2, 2, 1.0);
        assert_eq!(img.data(), &[0, 128, 255, 255]);
        assert_eq!((img.width(), img.height()), (2, 2));
        assert!(heatmap_svg(&[0.0, 1.0], 1, 2, 4).contains("rgb(255,255,255)"));
    }
}
