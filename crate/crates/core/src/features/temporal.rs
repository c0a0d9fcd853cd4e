//! Centered temporal gradient of a frame sequence with boundary replication.

use crate::corpus::{Grid, RoiFrame};

/// `(frame[t+1] - frame[t-1]) / 2`, replicating the first and last frames at
/// the boundaries. Values lie in [-0.5, 0.5].
pub fn temporal_frame(frames: &[RoiFrame], t: usize) -> Grid {
    assert!(!frames.is_empty(), "temporal gradient of empty sequence");
    assert!(t < frames.len(), "frame index {t} out of range");
    let prev = &frames[t.saturating_sub(1)];
    let next = &frames[(t + 1).min(frames.len() - 1)];
    let h = prev.grid().height();
    let w = prev.grid().width();
    let data = next
        .values()
        .iter()
        .zip(prev.values())
        .map(|(&n, &p)| (n - p) / 2.0)
        .collect();
    Grid::new(h, w, data).expect("frames share dimensions")
}
