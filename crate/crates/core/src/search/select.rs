//! Top-B1 candidate selection.

use crate::trajectory::Trajectory;

/// Returns the `beam_width` highest-scoring candidates, highest first, with
/// ties broken by lower candidate index. When fewer candidates than slots
/// exist, all of them are returned.
///
/// Scores are expected to be finite; candidates and scores must be paired
/// index-for-index.
pub fn verify_select(
    candidates: &[Trajectory],
    scores: &[f64],
    beam_width: usize,
) -> Vec<Trajectory> {
    assert_eq!(
        candidates.len(),
        scores.len(),
        "one score per candidate ({} candidates, {} scores)",
        candidates.len(),
        scores.len()
    );
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(beam_width);
    order.into_iter().map(|i| candidates[i].clone()).collect()
}
