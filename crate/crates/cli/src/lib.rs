//! Implementation behind the `umcev` binary: argument resolution with
//! defaults < config file < command-line flags, the four subcommands, and
//! the run report format.

pub mod commands;
pub mod report;

/// The published trade-off ladder swept in the sensitivity protocol:
/// nine decades from 2e-5 to 2e3.
pub const LAMBDA_LADDER: [f64; 9] = [2e-5, 2e-4, 2e-3, 2e-2, 2e-1, 2.0, 2e1, 2e2, 2e3];

/// Derives the per-repeat seed from the base seed (splitmix64 round).
pub fn derive_seed(seed: u64, repeat: u64) -> u64 {
    let mut z = seed ^ repeat.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
