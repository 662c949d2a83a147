//! Counter-based Philox4x32-10 generator.
//!
//! Every draw is a pure function of `(seed, stream, index)`, so particle
//! updates can be evaluated in any order, on any number of threads, and still
//! reproduce the same trajectory bit for bit.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// One Philox4x32 block with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = (PHILOX_M0 as u64) * (ctr[0] as u64);
        let p1 = (PHILOX_M1 as u64) * (ctr[2] as u64);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

/// Keyed counter stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    /// Raw 128-bit block for `(stream, index)`.
    pub fn block(&self, stream: u64, index: u64) -> [u32; 4] {
        philox4x32(
            [
                index as u32,
                (index >> 32) as u32,
                stream as u32,
                (stream >> 32) as u32,
            ],
            self.key,
        )
    }

    /// Two independent uniforms in the open interval (0, 1), 52-bit resolution.
    pub fn uniform_pair(&self, stream: u64, index: u64) -> (f64, f64) {
        let b = self.block(stream, index);
        (to_open_unit(b[0], b[1]), to_open_unit(b[2], b[3]))
    }

    /// Standard normal via Box–Muller on the `(stream, index)` block.
    pub fn normal(&self, stream: u64, index: u64) -> f64 {
        let (u1, u2) = self.uniform_pair(stream, index);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Both Box–Muller outputs.
    pub fn normal_pair(&self, stream: u64, index: u64) -> (f64, f64) {
        let (u1, u2) = self.uniform_pair(stream, index);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

fn to_open_unit(lo: u32, hi: u32) -> f64 {
    // 52 bits keep the half-offset representable, so the result is never 0 or 1.
    let bits = (((hi as u64) << 32) | lo as u64) >> 12;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
