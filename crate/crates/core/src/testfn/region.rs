//! Declared position-space supports.
//!
//! Wedges are the coordinate wedges W_R + (c, 0, …) = {x₁ − c > |x₀|} and
//! W_L + (c, 0, …) = {x₁ − c < −|x₀|}. Every region can report the largest c
//! with region ⊂ closure(W_R + c) and the smallest c with
//! region ⊂ closure(W_L + c); wedge separation is decided from those.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    RightWedge { apex: f64 },
    LeftWedge { apex: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    /// Time-zero layer with lo < x₁ < hi (or the spatial set lo < x₁ < hi).
    Slab { lo: f64, hi: f64 },
    /// Time-zero layer with x₁ ≥ edge.
    RightRay { edge: f64 },
    /// Time-zero layer with x₁ ≤ edge.
    LeftRay { edge: f64 },
    /// Inside closure(W_R + right) ∩ closure(W_L + left), either bound optional.
    Between { right: Option<f64>, left: Option<f64> },
    Union { parts: Vec<Region> },
    All,
}

impl Region {
    /// Largest c with self ⊂ closure(W_R + c).
    pub fn right_apex(&self) -> Option<f64> {
        match self {
            Region::RightWedge { apex } => Some(*apex),
            Region::LeftWedge { .. } | Region::All | Region::LeftRay { .. } => None,
            Region::Ball { center, radius } => {
                let (t, x) = time_space(center);
                Some(x - t.abs() - SQRT_2 * radius)
            }
            Region::Slab { lo, .. } => Some(*lo),
            Region::RightRay { edge } => Some(*edge),
            Region::Between { right, .. } => *right,
            Region::Union { parts } => parts
                .iter()
                .map(|p| p.right_apex())
                .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v))),
        }
    }

    /// Smallest c with self ⊂ closure(W_L + c).
    pub fn left_apex(&self) -> Option<f64> {
        match self {
            Region::LeftWedge { apex } => Some(*apex),
            Region::RightWedge { .. } | Region::All | Region::RightRay { .. } => None,
            Region::Ball { center, radius } => {
                let (t, x) = time_space(center);
                Some(x + t.abs() + SQRT_2 * radius)
            }
            Region::Slab { hi, .. } => Some(*hi),
            Region::LeftRay { edge } => Some(*edge),
            Region::Between { left, .. } => *left,
            Region::Union { parts } => parts
                .iter()
                .map(|p| p.left_apex())
                .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v))),
        }
    }

    /// self ⊂ closure(W_R + c).
    pub fn in_right_wedge(&self, c: f64) -> bool {
        self.right_apex().is_some_and(|a| a >= c)
    }

    /// self ⊂ closure(W_L + c).
    pub fn in_left_wedge(&self, c: f64) -> bool {
        self.left_apex().is_some_and(|a| a <= c)
    }

    /// Separated by a pair of opposite wedges with a common edge.
    pub fn wedge_separated(&self, other: &Region) -> bool {
        let sep = |a: &Region, b: &Region| match (a.right_apex(), b.left_apex()) {
            (Some(r), Some(l)) => r >= l,
            _ => false,
        };
        sep(self, other) || sep(other, self)
    }

    /// Image under a spacetime translation by `a`.
    pub fn translated(&self, a: &[f64]) -> Region {
        let (a0, a1) = time_space(a);
        let shift_wedges = |r: &Region| Region::Between {
            right: r.right_apex().map(|c| c + a1 - a0.abs()),
            left: r.left_apex().map(|c| c + a1 + a0.abs()),
        };
        match self {
            Region::All => Region::All,
            Region::Ball { center, radius } => Region::Ball {
                center: center.iter().zip(a).map(|(c, s)| c + s).collect(),
                radius: *radius,
            },
            Region::RightWedge { apex } if a0 == 0.0 => Region::RightWedge { apex: apex + a1 },
            Region::LeftWedge { apex } if a0 == 0.0 => Region::LeftWedge { apex: apex + a1 },
            Region::Slab { lo, hi } if a0 == 0.0 => Region::Slab { lo: lo + a1, hi: hi + a1 },
            Region::RightRay { edge } if a0 == 0.0 => Region::RightRay { edge: edge + a1 },
            Region::LeftRay { edge } if a0 == 0.0 => Region::LeftRay { edge: edge + a1 },
            Region::Union { parts } => Region::Union { parts: parts.iter().map(|p| p.translated(a)).collect() },
            other => shift_wedges(other),
        }
    }

    /// Image under x ↦ −x.
    pub fn reflected(&self) -> Region {
        match self {
            Region::All => Region::All,
            Region::RightWedge { apex } => Region::LeftWedge { apex: -apex },
            Region::LeftWedge { apex } => Region::RightWedge { apex: -apex },
            Region::Ball { center, radius } => Region::Ball {
                center: center.iter().map(|c| -c).collect(),
                radius: *radius,
            },
            Region::Slab { lo, hi } => Region::Slab { lo: -hi, hi: -lo },
            Region::RightRay { edge } => Region::LeftRay { edge: -edge },
            Region::LeftRay { edge } => Region::RightRay { edge: -edge },
            Region::Between { right, left } => Region::Between {
                right: left.map(|l| -l),
                left: right.map(|r| -r),
            },
            Region::Union { parts } => Region::Union { parts: parts.iter().map(|p| p.reflected()).collect() },
        }
    }

    /// Conservative image under all boosts with |rapidity| ≤ t (d = 2).
    pub fn boosted(&self, t: f64) -> Region {
        let t = t.abs();
        let scale = |c: f64, shrink: bool| {
            if (c >= 0.0) == shrink {
                c * (-t).exp()
            } else {
                c * t.exp()
            }
        };
        if t == 0.0 {
            return self.clone();
        }
        Region::Between {
            right: self.right_apex().map(|c| scale(c, true)),
            left: self.left_apex().map(|c| scale(c, false)),
        }
    }

    /// Whether the spacetime (or spatial) point lies in the region's closure.
    /// `spatial` marks points without a time component.
    pub fn contains(&self, x: &[f64], spatial: bool) -> bool {
        let (t, s) = if spatial { (0.0, x[0]) } else { time_space(x) };
        match self {
            Region::All => true,
            Region::RightWedge { apex } => s - apex >= t.abs(),
            Region::LeftWedge { apex } => s - apex <= -t.abs(),
            Region::Ball { center, radius } => {
                center.iter().zip(x).map(|(c, y)| (c - y).powi(2)).sum::<f64>().sqrt() <= *radius
            }
            Region::Slab { lo, hi } => t == 0.0 && s >= *lo && s <= *hi,
            Region::RightRay { edge } => t == 0.0 && s >= *edge,
            Region::LeftRay { edge } => t == 0.0 && s <= *edge,
            Region::Between { right, left } => {
                right.map_or(true, |c| s - c >= t.abs()) && left.map_or(true, |c| s - c <= -t.abs())
            }
            Region::Union { parts } => parts.iter().any(|p| p.contains(x, spatial)),
        }
    }
}

fn time_space(x: &[f64]) -> (f64, f64) {
    match x.len() {
        0 => (0.0, 0.0),
        1 => (0.0, x[0]),
        _ => (x[0], x[1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_wedge_apexes() {
        let b = Region::Ball { center: vec![0.0, 3.0], radius: 0.5 };
        assert!(b.in_right_wedge(2.0));
        assert!(!b.in_right_wedge(2.5));
        let l = Region::Ball { center: vec![0.0, -3.0], radius: 0.5 };
        assert!(b.wedge_separated(&l));
        assert!(l.wedge_separated(&b));
        assert!(!b.wedge_separated(&b));
    }

    #[test]
    fn reflection_is_involutive() {
        let r = Region::Between { right: Some(1.0), left: None };
        assert_eq!(r.reflected().reflected(), r);
        let b = Region::Ball { center: vec![0.2, 1.0], radius: 0.3 };
        assert_eq!(b.reflected().reflected(), b);
    }

    #[test]
    fn boosts_keep_wedge_at_origin() {
        let b = Region::Ball { center: vec![0.0, 2.0], radius: 0.5 };
        let c = b.boosted(8.0);
        assert!(c.in_right_wedge(0.0));
    }
}
