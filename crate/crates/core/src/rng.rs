//! Counter-based random value derivation.
//!
//! Adversary noise is keyed by `(seed, stream, index pair)` instead of being
//! drawn from a sequential generator, so any value can be recomputed in any
//! order and the realized loss sequence is a pure function of the seed. The
//! Gaussian transform goes through a fixed inverse-CDF so fixtures are
//! bit-stable across platforms.

/// Domain-separation tags for the derivation streams.
pub mod stream {
    /// Shared-noise walk increments, keyed by round.
    pub const WALK_SHARED: u64 = 0x01;
    /// Per-arm walk increments, keyed by (round, arm).
    pub const WALK_PER_ARM: u64 = 0x02;
    /// Stochastically-constrained Bernoulli draws, keyed by (round, arm).
    pub const SC_BERNOULLI: u64 = 0x03;
    /// Hidden-best-arm selection, keyed by draw index.
    pub const CHI_DRAW: u64 = 0x04;
    /// Per-(seed, policy) sampling streams in the harness.
    pub const POLICY: u64 = 0x05;
}

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit value from a seed, a stream tag, and two indices.
#[inline]
pub fn derive(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ tag.wrapping_mul(0xff51_afd7_ed55_8ccd));
    h = mix64(h ^ a.wrapping_mul(0xc4ce_b9fe_1a85_ec53));
    mix64(h ^ b.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Maps a 64-bit value to the open interval (0, 1).
#[inline]
pub fn unit_open(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Standard normal draw for the given counter key.
#[inline]
pub fn standard_normal(seed: u64, tag: u64, a: u64, b: u64) -> f64 {
    inverse_normal_cdf(unit_open(derive(seed, tag, a, b)))
}

/// Uniform (0, 1) draw for the given counter key.
#[inline]
pub fn uniform(seed: u64, tag: u64, a: u64, b: u64) -> f64 {
    unit_open(derive(seed, tag, a, b))
}

/// Maps a 64-bit value into `[0, n)` without modulo bias worth noticing.
#[inline]
pub fn bounded(x: u64, n: u64) -> u64 {
    ((x as u128 * n as u128) >> 64) as u64
}

/// Inverse of the standard normal CDF (Wichura's AS241, double precision).
///
/// Accurate to about 1e-15 over (0, 1); `p` outside (0, 1) saturates to
/// +/- infinity.
#[allow(clippy::excessive_precision)] // published tabulated constants
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608e0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 7] = [
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_9e0,
        5.769_497_221_460_691_405_5e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 7] = [
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_4e0,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2e0,
        5.463_784_911_164_114_369_9e0,
        1.784_826_539_917_291_335_8e0,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 7] = [
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    #[inline]
    fn rational(r: f64, num: &[f64; 8], den: &[f64; 7]) -> f64 {
        let n = num.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let d = den.iter().rev().fold(0.0, |acc, &c| acc * r + c) * r + 1.0;
        n / d
    }

    if !(p > 0.0) {
        return f64::NEG_INFINITY;
    }
    if !(p < 1.0) {
        return f64::INFINITY;
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * rational(r, &A, &B);
    }

    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        rational(r - 1.6, &C, &D)
    } else {
        rational(r - 5.0, &E, &F)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
