//! Small numeric helpers used across modules.

/// Neumaier compensated accumulator. Pair sums in the metrics must not depend
/// on reduction order beyond rounding of the compensation itself.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Derives a child seed from a master seed, a purpose tag, and an index.
/// Keeps every random sub-stream (splits, inits, trials) independent while
/// reproducible from one master seed.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut state = master ^ 0x9E37_79B9_7F4A_7C15;
    for &byte in tag.as_bytes() {
        state = splitmix64(state ^ u64::from(byte));
    }
    splitmix64(state ^ index)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Linear-interpolation quantile of a sorted slice, `q` in [0, 1].
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}
