//! Counter-based coin source.
//!
//! Every coin is a pure function of `(seed, row, col, time)`: a SplitMix64
//! stream indexed by column, started at a point derived from the seed, the
//! row and the time step. Draw order and thread count therefore cannot
//! change a realization.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline(always)]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoinRng {
    key: u64,
}

impl CoinRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5851_F42D_4C95_7F2D),
        }
    }

    /// Stream for one `(row, time)` pair; the per-column draw is one mix.
    #[inline]
    pub fn row_stream(&self, row: usize, time: u64) -> RowStream {
        let ctr = mix64((time << 24) ^ row as u64 ^ GOLDEN);
        RowStream {
            base: mix64(self.key ^ ctr),
        }
    }

    #[inline]
    pub fn uniform(&self, row: usize, col: usize, time: u64) -> f64 {
        self.row_stream(row, time).uniform(col)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RowStream {
    base: u64,
}

impl RowStream {
    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline(always)]
    pub fn uniform(&self, col: usize) -> f64 {
        to_unit(mix64(
            self.base.wrapping_add((col as u64 + 1).wrapping_mul(GOLDEN)),
        ))
    }
}
