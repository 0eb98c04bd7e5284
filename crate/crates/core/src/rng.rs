//! Portable random streams.
//!
//! Layout, so other implementations can reproduce every draw:
//!
//! * `mix(x)`: one splitmix64 step from state `x` (add the golden gamma, then
//!   the splitmix64 finalizer).
//! * Stream `(seed, index)`: `k = mix(seed + mix(index))` (wrapping add). The
//!   xoshiro256++ state is the next four splitmix64 outputs starting from
//!   state `k`, in order `s0..s3`.
//! * Uniform: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * Normal: Box-Muller on two consecutive uniforms `u1, u2`:
//!   `r = sqrt(-2 ln(1 - u1))`, `z0 = r cos(2 pi u2)`, `z1 = r sin(2 pi u2)`.
//!   `z0` is returned first, `z1` on the next call.
//! * Integer below `n`: `floor(uniform * n)`.

use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

pub fn mix(x: u64) -> u64 {
    SplitMix64::new(x).next_u64()
}

#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    pub fn from_splitmix(state: u64) -> Self {
        let mut sm = SplitMix64::new(state);
        let s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        Xoshiro256PlusPlus { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }
}

/// A seeded stream of uniforms and standard normals.
#[derive(Debug, Clone)]
pub struct RandomStream {
    gen: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let key = mix(seed.wrapping_add(mix(index)));
        RandomStream {
            gen: Xoshiro256PlusPlus::from_splitmix(key),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.gen.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }

    /// Fisher-Yates, walking from the last element down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        // First outputs of the reference splitmix64 seeded with 0.
        let mut sm = SplitMix64::new(0);
        assert_eq!(sm.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(sm.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn stream_matches_python_oracle() {
        // tests/oracle/pipeline_oracle.py, Stream(42, 0).
        let mut s = RandomStream::new(42, 0);
        assert_eq!(s.next_u64(), 14796963995016210420);
        assert_eq!(s.next_u64(), 68998832457400556);
        assert_eq!(s.next_u64(), 10741147030499344699);
    }

    #[test]
    fn uniform_range_and_below() {
        let mut s = RandomStream::new(1, 2);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(s.below(7) < 7);
        }
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut s = RandomStream::new(3, 0);
        let mut v: Vec<usize> = (0..50).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
