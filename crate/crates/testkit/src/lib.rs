//! Slow, obviously-correct reference implementations. Nothing here shares
//! code with `qoe-core`; tests compare the two.

pub mod playback;
pub mod stats;
