//! Greedy transfer of depth planes from reliable to unreliable superpixels.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::superpixel::{SuperpixelRecord, SuperpixelSegmentation};

/// `E(s, t) = |C_s - C_t|^2 + alpha |x_s - x_t|^2` over mean CIELAB color
/// and centroid.
pub fn matching_cost(s: &SuperpixelRecord, t: &SuperpixelRecord, alpha: f64) -> f64 {
    let dx = s.centroid[0] - t.centroid[0];
    let dy = s.centroid[1] - t.centroid[1];
    s.mean_lab.squared_distance(&t.mean_lab) + alpha * (dx * dx + dy * dy)
}

/// Cosine color cost `1 - cos(C_s, C_t)`, kept for comparison only: it is
/// blind to brightness, so dark and light grays cost nothing.
pub fn matching_cost_cosine(s: [f64; 3], t: [f64; 3]) -> Result<f64> {
    let norm = |c: [f64; 3]| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let (ns, nt) = (norm(s), norm(t));
    if ns == 0.0 || nt == 0.0 {
        return Err(Error::invalid("cosine cost is undefined for a zero color vector"));
    }
    let dot = s[0] * t[0] + s[1] * t[1] + s[2] * t[2];
    Ok(1.0 - dot / (ns * nt))
}

/// Spatial weight `m^2 / S^2` with `S = sqrt(N / K)`.
pub fn matching_alpha(m: f64, seg: &SuperpixelSegmentation) -> f64 {
    let s = seg.grid_interval();
    m * m / (s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub unreliable: usize,
    pub source: usize,
    pub cost: f64,
}

/// Greedy matches in the order they were made.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchAssignment {
    pub pairs: Vec<MatchPair>,
}

/// Repeatedly picks the globally cheapest (unreliable, source) pair, hands
/// the source's plane to the unreliable superpixel and promotes it into the
/// source pool. Ties go to the lowest unreliable id, then the lowest source
/// id.
///
/// Sources are superpixels flagged reliable that carry a plane; every other
/// superpixel gets matched.
pub fn match_superpixels(seg: &SuperpixelSegmentation, alpha: f64) -> Result<MatchAssignment> {
    let records = &seg.records;
    let is_source = |r: &SuperpixelRecord| r.reliable && r.plane.is_some();
    let sources: Vec<usize> = (0..records.len()).filter(|&i| is_source(&records[i])).collect();
    if sources.is_empty() {
        return Err(Error::NoDepthAnchors);
    }
    let mut pending: Vec<usize> = (0..records.len()).filter(|&i| !is_source(&records[i])).collect();

    // Cheapest known source per pending superpixel, as (cost, source).
    let mut best: Vec<(f64, usize)> = pending
        .iter()
        .map(|&u| {
            sources
                .iter()
                .map(|&s| (matching_cost(&records[u], &records[s], alpha), s))
                .fold((f64::INFINITY, usize::MAX), |acc, c| if c.0 < acc.0 { c } else { acc })
        })
        .collect();

    let mut pairs = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        // `pending` stays sorted by id, so the first strict minimum wins ties.
        let mut pick = 0;
        for k in 1..pending.len() {
            if best[k].0 < best[pick].0 {
                pick = k;
            }
        }
        let u = pending.remove(pick);
        let (cost, source) = best.remove(pick);
        pairs.push(MatchPair {
            unreliable: u,
            source,
            cost,
        });
        for (k, &other) in pending.iter().enumerate() {
            let c = matching_cost(&records[other], &records[u], alpha);
            if c < best[k].0 || (c == best[k].0 && u < best[k].1) {
                best[k] = (c, u);
            }
        }
    }
    Ok(MatchAssignment { pairs })
}

/// Copies planes along the assignment, in match order.
pub fn apply_assignment(seg: &mut SuperpixelSegmentation, assignment: &MatchAssignment) -> Result<()> {
    for pair in &assignment.pairs {
        let plane = seg.records[pair.source]
            .plane
            .ok_or(Error::MissingPlane(pair.source))?;
        seg.records[pair.unreliable].plane = Some(plane);
    }
    Ok(())
}
