//! Synthetic videos with exact ground truth.
#![allow(dead_code)]

use changedet::evaluation::{report, Confusion};
use changedet::video_io::{GroundTruthMask, GtCode};
use changedet::{Frame, LabelMask};

pub const SQUARE: usize = 20;

/// Top-left corner of the square at frame `t` (1-based), bouncing off the borders.
pub fn square_position(t: u32, w: usize, h: usize) -> (usize, usize) {
    let bounce = |p: i64, span: i64| {
        let period = 2 * span;
        let q = p.rem_euclid(period);
        (if q <= span { q } else { period - q }) as usize
    };
    let t = i64::from(t);
    (
        bounce(7 + 3 * t, (w - SQUARE) as i64),
        bounce(5 + 2 * t, (h - SQUARE) as i64),
    )
}

pub fn square_mask(t: u32, w: usize, h: usize) -> LabelMask {
    let (x0, y0) = square_position(t, w, h);
    LabelMask::from_fn(w, h, |x, y| {
        (x0..x0 + SQUARE).contains(&x) && (y0..y0 + SQUARE).contains(&y)
    })
}

/// White 20x20 square moving over `background`.
pub fn square_frame(t: u32, w: usize, h: usize, background: impl Fn(usize, usize) -> [u8; 3]) -> (Frame, LabelMask) {
    let gt = square_mask(t, w, h);
    let rgb = (0..w * h)
        .map(|i| {
            if gt.is_foreground(i) {
                [255, 255, 255]
            } else {
                background(i % w, i / w)
            }
        })
        .collect();
    (Frame::from_rgb(w, h, rgb, t).unwrap(), gt)
}

/// The moving-square video on black, frames `1..=n`.
pub fn moving_square(n: u32, w: usize, h: usize) -> Vec<(Frame, LabelMask)> {
    (1..=n).map(|t| square_frame(t, w, h, |_, _| [0, 0, 0])).collect()
}

pub fn scene_a(x: usize, y: usize) -> [u8; 3] {
    let v = (40 + (x * 3 + y) % 40) as u8;
    [v, v / 2 + 20, 30]
}

pub fn scene_b(x: usize, y: usize) -> [u8; 3] {
    let v = (150 + (x + 2 * y) % 60) as u8;
    [60, v, v - 40]
}

/// Moving square over one background that is swapped for another at `cut`.
pub fn scene_cut(n: u32, cut: u32, w: usize, h: usize) -> Vec<(Frame, LabelMask)> {
    (1..=n)
        .map(|t| {
            if t < cut {
                square_frame(t, w, h, scene_a)
            } else {
                square_frame(t, w, h, scene_b)
            }
        })
        .collect()
}

pub fn ground_truth(mask: &LabelMask) -> GroundTruthMask {
    let codes = mask
        .as_slice()
        .iter()
        .map(|&l| if l != 0 { GtCode::Motion } else { GtCode::Static })
        .collect();
    GroundTruthMask::new(mask.width(), mask.height(), codes).unwrap()
}

pub fn frame_confusion(mask: &LabelMask, gt: &LabelMask) -> Confusion {
    let mut c = Confusion::default();
    c.accumulate(mask, &ground_truth(gt)).unwrap();
    c
}

pub fn fmeasure(mask: &LabelMask, gt: &LabelMask) -> f64 {
    report(&frame_confusion(mask, gt)).fmeasure
}

pub fn specificity(mask: &LabelMask, gt: &LabelMask) -> f64 {
    report(&frame_confusion(mask, gt)).specificity
}
