//! Proposal bookkeeping shared by the local and global kernels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::AllowedSet;
use crate::priors::{BaselineHazards, ChangePointState};

/// Probability of proposing a split when there are `k` change points and
/// `n_allowed` admissible times.
#[inline]
pub fn split_probability(k: usize, n_allowed: usize) -> f64 {
    if k == 0 {
        1.0
    } else if k >= n_allowed {
        0.0
    } else {
        0.5
    }
}

#[inline]
pub fn merge_probability(k: usize, n_allowed: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        1.0 - split_probability(k, n_allowed)
    }
}

/// `ln q(reverse merge) - ln q(split)` for a split from `k` change points,
/// excluding the configuration draw `ψ(z')`.
pub fn split_log_proposal_ratio(k: usize, n_allowed: usize) -> f64 {
    let forward = split_probability(k, n_allowed).ln() - ((n_allowed - k) as f64).ln();
    let reverse = merge_probability(k + 1, n_allowed).ln() - ((k + 1) as f64).ln();
    reverse - forward
}

/// `ln q(reverse split) - ln q(merge)` for a merge from `k` change points,
/// excluding the configuration term `ψ(z)`.
pub fn merge_log_proposal_ratio(k: usize, n_allowed: usize) -> f64 {
    -split_log_proposal_ratio(k - 1, n_allowed)
}

/// Accepted and proposed counts of one move type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCount {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCount {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounters {
    pub local_split: MoveCount,
    pub local_merge: MoveCount,
    pub local_shuffle: MoveCount,
    pub local_z: MoveCount,
    pub global_split: MoveCount,
    pub global_merge: MoveCount,
    pub global_shuffle: MoveCount,
    pub global_z: MoveCount,
    pub inclusion: MoveCount,
    /// Metropolis ratios that evaluated to NaN (rejected). Must stay zero.
    pub nan_ratios: u64,
}

impl MoveCounters {
    pub fn merge(&mut self, other: &MoveCounters) {
        let pairs = [
            (&mut self.local_split, &other.local_split),
            (&mut self.local_merge, &other.local_merge),
            (&mut self.local_shuffle, &other.local_shuffle),
            (&mut self.local_z, &other.local_z),
            (&mut self.global_split, &other.global_split),
            (&mut self.global_merge, &other.global_merge),
            (&mut self.global_shuffle, &other.global_shuffle),
            (&mut self.global_z, &other.global_z),
            (&mut self.inclusion, &other.inclusion),
        ];
        for (a, b) in pairs {
            a.proposed += b.proposed;
            a.accepted += b.accepted;
        }
        self.nan_ratios += other.nan_ratios;
    }

    /// `(name, count)` pairs in a fixed order, for reporting.
    pub fn entries(&self) -> [(&'static str, MoveCount); 9] {
        [
            ("local_split", self.local_split),
            ("local_merge", self.local_merge),
            ("local_shuffle", self.local_shuffle),
            ("local_z", self.local_z),
            ("global_split", self.global_split),
            ("global_merge", self.global_merge),
            ("global_shuffle", self.global_shuffle),
            ("global_z", self.global_z),
            ("inclusion", self.inclusion),
        ]
    }
}

/// Metropolis decision in log space. NaN ratios are counted and rejected.
pub fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R, nan_ratios: &mut u64) -> bool {
    if log_ratio.is_nan() {
        *nan_ratios += 1;
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Which structural move is attempted this sweep.
pub enum Jump {
    Split { t: usize, code: u32 },
    Merge { t: usize },
}

/// Draw the split-or-merge proposal location. Returns `None` when neither
/// move is possible (no admissible times).
pub fn propose_jump<R: Rng + ?Sized>(
    cp: &ChangePointState,
    allowed: &AllowedSet,
    rng: &mut R,
    draw_code: impl FnOnce(&mut R) -> u32,
) -> Option<Jump> {
    let n_allowed = allowed.len();
    if n_allowed == 0 {
        return None;
    }
    let k = cp.k();
    let s = split_probability(k, n_allowed);
    let split = s >= 1.0 || (s > 0.0 && rng.random::<f64>() < s);
    if split {
        let free: Vec<usize> = allowed.times().iter().copied().filter(|&t| !cp.gamma(t)).collect();
        let t = free[rng.random_range(0..free.len())];
        let code = draw_code(rng);
        Some(Jump::Split { t, code })
    } else {
        let points = cp.change_points();
        let t = points[rng.random_range(0..points.len())];
        Some(Jump::Merge { t })
    }
}

/// Pick a change point uniformly and a destination uniformly among the
/// admissible times strictly between its neighbours. Returns `(from, to)`.
pub fn propose_shuffle<R: Rng + ?Sized>(
    cp: &ChangePointState,
    allowed: &AllowedSet,
    rng: &mut R,
) -> Option<(usize, usize)> {
    let points = cp.change_points();
    if points.is_empty() {
        return None;
    }
    let j = rng.random_range(0..points.len());
    let prev = if j == 0 { 1 } else { points[j - 1] };
    let next = points.get(j + 1).copied().unwrap_or(cp.t_max() + 1);
    let range: Vec<usize> = allowed
        .times()
        .iter()
        .copied()
        .filter(|&t| t > prev && t < next)
        .collect();
    let to = range[rng.random_range(0..range.len())];
    Some((points[j], to))
}

/// Move the change point at `from` to `to`, keeping its configuration.
pub fn shuffled(cp: &ChangePointState, from: usize, to: usize) -> ChangePointState {
    let mut out = cp.clone();
    let code = cp.code(from);
    out.set(from, 0);
    out.set(to, code);
    out
}

/// Re-shape the levels to a new change-point configuration, giving every new
/// cause-specific interval the old level at its first period.
pub fn project_levels(
    bh: &BaselineHazards,
    old: &ChangePointState,
    new: &ChangePointState,
) -> BaselineHazards {
    let alpha_star = (0..bh.alpha_star.len())
        .map(|r| {
            new.risk_intervals(r)
                .into_iter()
                .map(|(start, _)| bh.level_at(old, r, start))
                .collect()
        })
        .collect();
    BaselineHazards { alpha_star }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_ratio_from_empty_model() {
        // |𝒯| = 3, K = 0: (m(1)/1) / (s(0)/3) = 3/2
        assert!((split_log_proposal_ratio(0, 3).exp() - 1.5).abs() < 1e-15);
        assert!((merge_log_proposal_ratio(1, 3).exp() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn split_probabilities_respect_bounds() {
        assert_eq!(split_probability(0, 4), 1.0);
        assert_eq!(split_probability(4, 4), 0.0);
        assert_eq!(merge_probability(4, 4), 1.0);
        assert_eq!(merge_probability(2, 4), 0.5);
        assert_eq!(merge_probability(0, 4), 0.0);
    }

    #[test]
    fn nan_is_counted_and_rejected() {
        let mut rng = rand::rng();
        let mut nan = 0;
        assert!(!accept(f64::NAN, &mut rng, &mut nan));
        assert_eq!(nan, 1);
        assert!(accept(0.0, &mut rng, &mut nan));
        assert!(!accept(f64::NEG_INFINITY, &mut rng, &mut nan));
    }

    #[test]
    fn projection_keeps_left_levels() {
        let mut old = ChangePointState::empty(6);
        old.set(3, 0b11);
        let bh = BaselineHazards {
            alpha_star: vec![vec![1.0, 2.0], vec![5.0, 6.0]],
        };
        let mut new = old.clone();
        new.set(5, 0b01);
        let p = project_levels(&bh, &old, &new);
        assert_eq!(p.alpha_star, vec![vec![1.0, 2.0, 2.0], vec![5.0, 6.0]]);
        let mut merged = new.clone();
        merged.set(3, 0);
        let q = project_levels(&p, &new, &merged);
        assert_eq!(q.alpha_star, vec![vec![1.0, 2.0], vec![5.0]]);
    }

    #[test]
    fn shuffle_stays_between_neighbours() {
        let allowed = AllowedSet::from_times(10, &[2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        let mut cp = ChangePointState::empty(10);
        cp.set(4, 1);
        cp.set(7, 2);
        let mut rng = rand::rng();
        for _ in 0..200 {
            let (from, to) = propose_shuffle(&cp, &allowed, &mut rng).unwrap();
            if from == 4 {
                assert!((2..7).contains(&to));
            } else {
                assert!((5..=9).contains(&to));
            }
        }
    }
}
