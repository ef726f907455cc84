use crate::numerics::Tensor;

/// Cosine and sine of `degrees`, snapped to exact values at multiples of 90°.
fn cos_sin(degrees: f64) -> (f64, f64) {
    let quarter = degrees / 90.0;
    if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = degrees.to_radians();
        (r.cos(), r.sin())
    }
}

/// Mean of the outermost ring of pixels.
fn border_mean(data: &[f32], h: usize, w: usize) -> f32 {
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            if y == 0 || x == 0 || y + 1 == h || x + 1 == w {
                sum += data[y * w + x] as f64;
                n += 1;
            }
        }
    }
    (sum / n as f64) as f32
}

/// Rotates an `h×w` image clockwise (as displayed, rows pointing down) about
/// its center with bilinear interpolation. Samples falling outside the source
/// take the mean of the source border.
pub fn rotate_image(img: &Tensor, degrees: f64) -> Tensor {
    assert_eq!(img.rank(), 2, "rotate_image expects an h×w image");
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let src = img.data();
    let fill = border_mean(src, h, w);
    let (c, s) = cos_sin(degrees);
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let at = |y: isize, x: isize| -> Option<f32> {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            None
        } else {
            Some(src[y as usize * w + x as usize])
        }
    };
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            // inverse map: a clockwise turn on screen is counterclockwise in
            // (x right, y down) coordinates, so undo it with the transpose.
            let sx = c * dx + s * dy + cx;
            let sy = -s * dx + c * dy + cy;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = ((sx - x0) as f32, (sy - y0) as f32);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let corners = [
                (at(y0, x0), (1.0 - fy) * (1.0 - fx)),
                (at(y0, x0 + 1), (1.0 - fy) * fx),
                (at(y0 + 1, x0), fy * (1.0 - fx)),
                (at(y0 + 1, x0 + 1), fy * fx),
            ];
            let inside = corners.iter().all(|(v, wt)| v.is_some() || *wt == 0.0);
            let v = if inside {
                corners
                    .iter()
                    .map(|(v, wt)| if *wt == 0.0 { 0.0 } else { v.unwrap() * wt })
                    .sum()
            } else {
                fill
            };
            out.push(v);
        }
    }
    Tensor::new(&[h, w], out).expect("same shape as input")
}
