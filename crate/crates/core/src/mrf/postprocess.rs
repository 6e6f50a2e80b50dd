use crate::mask::LabelMask;

/// Minimum region area: 25 pixels below 2·320·240 pixels per frame, else 50.
pub fn area_threshold(width: usize, height: usize) -> usize {
    if width * height < 2 * 320 * 240 {
        25
    } else {
        50
    }
}

/// Connected components of pixels equal to `value`. Returns the component
/// pixel lists and whether each one touches the image border.
fn components(mask: &LabelMask, value: bool, eight: bool) -> Vec<(Vec<usize>, bool)> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || mask.is_foreground(start) != value {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        let mut border = false;
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            border |= x == 0 || y == 0 || x == w as i64 - 1 || y == h as i64 - 1;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && mask.is_foreground(j) == value {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push((pixels, border));
    }
    out
}

/// Clears 8-connected foreground regions smaller than `min_area`.
pub fn remove_small_regions(mask: &LabelMask, min_area: usize) -> LabelMask {
    let mut out = mask.clone();
    for (pixels, _) in components(mask, true, true) {
        if pixels.len() < min_area {
            for i in pixels {
                out.set_index(i, false);
            }
        }
    }
    out
}

/// Fills 4-connected background regions that do not touch the border and
/// are smaller than `min_area`.
pub fn fill_holes(mask: &LabelMask, min_area: usize) -> LabelMask {
    let mut out = mask.clone();
    for (pixels, border) in components(mask, false, false) {
        if !border && pixels.len() < min_area {
            for i in pixels {
                out.set_index(i, true);
            }
        }
    }
    out
}

/// Area filtering followed by hole filling.
pub fn post_process_with(mask: &LabelMask, min_area: usize) -> LabelMask {
    fill_holes(&remove_small_regions(mask, min_area), min_area)
}

/// [`post_process_with`] at the resolution-dependent area threshold.
pub fn post_process(mask: &LabelMask) -> LabelMask {
    post_process_with(mask, area_threshold(mask.width(), mask.height()))
}
