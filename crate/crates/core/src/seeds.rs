//! Deterministic seed derivation.
//!
//! Every random artifact in a run (graphs, couplings, solver probes) gets its
//! own generator, seeded from one base seed through a splitmix-style mixing
//! function. The stream tag separates artifact kinds so that, for example,
//! coupling realization 7 never shares a stream with graph realization 7.

/// Artifact kind being seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamTag {
    Graph,
    Coupling,
    Solver,
}

impl StreamTag {
    fn tag_constant(self) -> u64 {
        // Arbitrary fixed odd constants; frozen because recorded seeds in
        // experiment outputs must stay replayable.
        match self {
            StreamTag::Graph => 0x9f0e_3b1c_5a77_d219,
            StreamTag::Coupling => 0x6d4f_11e3_88ab_42c7,
            StreamTag::Solver => 0x21c8_f6de_0357_9b4d,
        }
    }
}

/// splitmix64 finalizer: bijective on u64, good avalanche behavior.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for stream `tag`, item `index`, from `base`.
pub fn derive_seed(base: u64, tag: StreamTag, index: u64) -> u64 {
    mix64(mix64(base ^ tag.tag_constant()) ^ index)
}
