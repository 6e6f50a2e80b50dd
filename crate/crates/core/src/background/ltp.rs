//! Local ternary patterns over a 12-pixel neighborhood.
//!
//! Each neighbor is compared against the center with a tolerance that is
//! multiplicative in bright regions and additive in dark ones, giving a 2-bit
//! code (`00` similar, `01` brighter, `10` darker). The twelve codes are
//! concatenated into a 24-bit word, first neighbor in the most significant
//! bits.

/// `(dx, dy)` of the twelve neighbors in row-major order: every pixel at
/// L1 distance 1 or 2 from the center, i.e. the 8-connected ring plus the
/// four axis-aligned pixels two steps away.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 12] = [
    (0, -2),
    (-1, -1),
    (0, -1),
    (1, -1),
    (-2, 0),
    (-1, 0),
    (1, 0),
    (2, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (0, 2),
];

pub const SIMILAR: u8 = 0b00;
pub const BRIGHTER: u8 = 0b01;
pub const DARKER: u8 = 0b10;

/// Number of bits in a full code.
pub const CODE_BITS: u32 = 24;

/// Bit offset of neighbor slot `k`.
#[inline]
pub const fn slot_shift(k: usize) -> u32 {
    2 * (11 - k as u32)
}

/// Three-way comparison of a neighbor intensity against the center.
///
/// `tau_milli` is the relative tolerance in thousandths (100 for 0.1) and
/// `nu` the additive tolerance. Integer arithmetic keeps the comparison
/// exact: no rounding of `(1 + tau) * center`.
#[inline]
pub fn ltp_compare(center: u8, neighbor: u8, tau_milli: u32, nu: u32) -> u8 {
    let (c, k) = (u64::from(center), u64::from(neighbor));
    let t = u64::from(tau_milli);
    let nu = u64::from(nu);
    if 1000 * k > (1000 + t) * c && k > c + nu {
        BRIGHTER
    } else if 1000 * k < (1000u64.saturating_sub(t)) * c && k + nu < c {
        DARKER
    } else {
        SIMILAR
    }
}

/// Precomputed comparison table for one `(tau, nu)` setting.
#[derive(Clone)]
pub struct LtpOperator {
    table: Box<[u8]>,
    tau_milli: u32,
    nu: u32,
}

impl std::fmt::Debug for LtpOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LtpOperator")
            .field("tau_milli", &self.tau_milli)
            .field("nu", &self.nu)
            .finish()
    }
}

impl LtpOperator {
    /// `tau` is resolved to thousandths.
    pub fn new(tau: f64, nu: u32) -> Self {
        let tau_milli = (tau * 1000.0).round().max(0.0) as u32;
        let mut table = vec![0u8; 256 * 256].into_boxed_slice();
        for c in 0..=255u8 {
            for k in 0..=255u8 {
                table[(c as usize) << 8 | k as usize] = ltp_compare(c, k, tau_milli, nu);
            }
        }
        LtpOperator {
            table,
            tau_milli,
            nu,
        }
    }

    #[inline]
    pub fn compare(&self, center: u8, neighbor: u8) -> u8 {
        self.table[(center as usize) << 8 | neighbor as usize]
    }

    /// Code at `(x, y)`; neighbors outside the image are clamped to the border.
    pub fn response(&self, gray: &[u8], width: usize, height: usize, x: usize, y: usize) -> u32 {
        let center = gray[y * width + x];
        let mut code = 0u32;
        for (k, &(dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let nx = (x as i64 + dx as i64).clamp(0, width as i64 - 1) as usize;
            let ny = (y as i64 + dy as i64).clamp(0, height as i64 - 1) as usize;
            let s = self.compare(center, gray[ny * width + nx]);
            code |= u32::from(s) << slot_shift(k);
        }
        code
    }

    /// Codes for every pixel of a luma plane, row-major.
    pub fn code_image(&self, gray: &[u8], width: usize, height: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                out.push(self.response(gray, width, height, x, y));
            }
        }
        out
    }
}

#[inline]
pub fn hamming(a: u32, b: u32) -> u32 {
    (a ^ b).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_examples() {
        assert_eq!(ltp_compare(100, 100, 100, 5), SIMILAR);
        assert_eq!(ltp_compare(100, 115, 100, 5), BRIGHTER);
        assert_eq!(ltp_compare(20, 14, 100, 5), DARKER);
        assert_eq!(ltp_compare(100, 108, 100, 5), SIMILAR);
    }

    #[test]
    fn boundaries_are_strict() {
        // 110 == 1.1 * 100 exactly: not brighter. 90 == 0.9 * 100: not darker.
        assert_eq!(ltp_compare(100, 110, 100, 5), SIMILAR);
        assert_eq!(ltp_compare(100, 111, 100, 5), BRIGHTER);
        assert_eq!(ltp_compare(100, 90, 100, 5), SIMILAR);
        assert_eq!(ltp_compare(100, 89, 100, 5), DARKER);
        // Dark region: the additive term binds.
        assert_eq!(ltp_compare(20, 25, 100, 5), SIMILAR);
        assert_eq!(ltp_compare(20, 26, 100, 5), BRIGHTER);
        assert_eq!(ltp_compare(20, 15, 100, 5), SIMILAR);
    }

    #[test]
    fn uniform_image_gives_zero_code() {
        let op = LtpOperator::new(0.1, 5);
        let gray = vec![77u8; 9 * 7];
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(op.response(&gray, 9, 7, x, y), 0);
            }
        }
    }

    #[test]
    fn single_bright_neighbor_sets_one_slot() {
        let op = LtpOperator::new(0.1, 5);
        let (w, h) = (7usize, 7usize);
        for (k, &(dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let mut gray = vec![100u8; w * h];
            gray[(3 + dy) as usize * w + (3 + dx) as usize] = 255;
            let code = op.response(&gray, w, h, 3, 3);
            assert_eq!(code, u32::from(BRIGHTER) << slot_shift(k), "slot {k}");
        }
    }

    #[test]
    fn border_neighbors_clamp() {
        let op = LtpOperator::new(0.1, 5);
        // 2x1 image: for pixel 0 every right-hand neighbor clamps to pixel 1.
        let gray = [100u8, 200];
        let code = op.response(&gray, 2, 1, 0, 0);
        let expected = [(1, 0), (2, 0), (1, -1), (1, 1)]
            .iter()
            .map(|off| NEIGHBOR_OFFSETS.iter().position(|o| o == off).unwrap())
            .fold(0u32, |acc, k| acc | u32::from(BRIGHTER) << slot_shift(k));
        assert_eq!(code, expected);
    }

    #[test]
    fn table_matches_direct_comparison() {
        let op = LtpOperator::new(0.1, 5);
        for c in 0..=255u8 {
            for k in 0..=255u8 {
                assert_eq!(op.compare(c, k), ltp_compare(c, k, 100, 5));
            }
        }
    }
}
