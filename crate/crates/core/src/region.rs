//! Borel sets given as unions of disjoint open intervals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, y: f64) -> bool {
        y > self.lo && y < self.hi
    }
}

/// Whether the listed intervals form the set `E` itself or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Region,
    Complement,
}

/// Rule generating further intervals beyond the materialized list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `(n * period - half_width, n * period + half_width)` for `n >= start`.
    Periodic {
        period: f64,
        half_width: f64,
        #[serde(default)]
        start: i64,
        /// Refuse to materialize beyond this many intervals.
        #[serde(default)]
        max_depth: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    intervals: Vec<Interval>,
    role: Role,
    #[serde(default)]
    rule: Option<Generator>,
    /// Human-readable provenance, e.g. "trap intervals, depth 20".
    #[serde(default)]
    pub label: String,
}

impl RegionSpec {
    /// Finite list of open intervals; sorted and checked for disjointness.
    pub fn explicit(mut intervals: Vec<Interval>, role: Role) -> Result<Self> {
        for iv in &intervals {
            if !(iv.lo < iv.hi) {
                return Err(invalid_arg(format!("empty interval ({}, {})", iv.lo, iv.hi)));
            }
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if intervals.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(invalid_arg("region intervals are not pairwise disjoint"));
        }
        Ok(Self { intervals, role, rule: None, label: String::new() })
    }

    /// `E = ℝ`.
    pub fn whole_line() -> Self {
        Self::explicit(vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)], Role::Region)
            .unwrap()
            .labelled("R")
    }

    /// `E = (lo, ∞)`.
    pub fn above(lo: f64) -> Self {
        Self::explicit(vec![Interval::new(lo, f64::INFINITY)], Role::Region)
            .unwrap()
            .labelled(format!("({lo},inf)"))
    }

    /// `ℝ \ E = (-∞, hi)`.
    pub fn complement_below(hi: f64) -> Self {
        Self::explicit(vec![Interval::new(f64::NEG_INFINITY, hi)], Role::Complement)
            .unwrap()
            .labelled(format!("complement (-inf,{hi})"))
    }

    /// Intervals generated by `n ↦ (n·period − w, n·period + w)`, `n >= start`.
    pub fn periodic(period: f64, half_width: f64, start: i64, role: Role) -> Result<Self> {
        if !(period > 0.0 && half_width > 0.0 && 2.0 * half_width < period) {
            return Err(invalid_arg("periodic region needs 0 < 2*half_width < period"));
        }
        Ok(Self {
            intervals: Vec::new(),
            role,
            rule: Some(Generator::Periodic { period, half_width, start, max_depth: None }),
            label: format!("U(n*{period} +- {half_width})"),
        })
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        if let Some(Generator::Periodic { max_depth, .. }) = &mut self.rule {
            *max_depth = Some(depth);
        }
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn depth(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_generated(&self) -> bool {
        self.rule.is_some()
    }

    /// Sup of the materialized intervals (`-inf` when none).
    pub fn materialized_upper(&self) -> f64 {
        self.intervals.last().map_or(f64::NEG_INFINITY, |iv| iv.hi)
    }

    /// Supremum of `ℝ \ E`; `+inf` when the complement is unbounded above,
    /// which includes every generated region.
    pub fn complement_sup(&self) -> f64 {
        if self.rule.is_some() {
            return f64::INFINITY;
        }
        match self.role {
            Role::Complement => self.materialized_upper(),
            Role::Region => match self.intervals.last() {
                Some(iv) if iv.hi == f64::INFINITY => iv.lo,
                _ => f64::INFINITY,
            },
        }
    }

    /// Extend a generated region until every interval starting below
    /// `upper` is listed.
    pub fn materialize_to(&mut self, upper: f64) -> Result<()> {
        let Some(Generator::Periodic { period, half_width, start, max_depth }) = self.rule.clone() else {
            return Ok(());
        };
        loop {
            let n = start + self.intervals.len() as i64;
            let c = n as f64 * period;
            if c - half_width > upper {
                return Ok(());
            }
            if let Some(d) = max_depth {
                if self.intervals.len() >= d {
                    return Err(Error::Coverage(format!(
                        "region '{}' cannot be materialized beyond depth {d} (needed up to {upper})",
                        self.label
                    )));
                }
            }
            self.intervals.push(Interval::new(c - half_width, c + half_width));
        }
    }

    /// Whether the region covers `upper`: the first interval that is not
    /// materialized starts above it.
    pub fn covers(&self, upper: f64) -> bool {
        match &self.rule {
            None => true,
            Some(Generator::Periodic { period, half_width, start, .. }) => {
                let n = start + self.intervals.len() as i64;
                n as f64 * period - half_width > upper
            }
        }
    }

    #[inline]
    fn in_union(&self, y: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.hi <= y);
        i < self.intervals.len() && self.intervals[i].contains(y)
    }

    /// `y ∈ E`.
    #[inline]
    pub fn in_e(&self, y: f64) -> bool {
        match self.role {
            Role::Region => self.in_union(y),
            Role::Complement => !self.in_union(y),
        }
    }

    /// Closed sub-intervals of `[a, b]` whose interiors lie in the listed union.
    fn union_pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let start = self.intervals.partition_point(|iv| iv.hi <= a);
        self.intervals[start..]
            .iter()
            .take_while(|iv| iv.lo < b)
            .filter_map(|iv| {
                let lo = iv.lo.max(a);
                let hi = iv.hi.min(b);
                (lo < hi).then_some((lo, hi))
            })
            .collect()
    }

    /// Sub-intervals of `[a, b]` in `E` (up to endpoints, a null set for `U`
    /// only when `U` has no atoms there).
    pub fn e_pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        match self.role {
            Role::Region => self.union_pieces(a, b),
            Role::Complement => complement_within(&self.union_pieces(a, b), a, b),
        }
    }

    /// Sub-intervals of `[a, b]` in `ℝ \ E`.
    pub fn not_e_pieces(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        match self.role {
            Role::Region => complement_within(&self.union_pieces(a, b), a, b),
            Role::Complement => self.union_pieces(a, b),
        }
    }
}

fn complement_within(pieces: &[(f64, f64)], a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pieces.len() + 1);
    let mut cursor = a;
    for &(lo, hi) in pieces {
        if lo > cursor {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < b {
        out.push((cursor, b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlapping_intervals() {
        let r = RegionSpec::explicit(vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)], Role::Region);
        assert!(r.is_err());
    }

    #[test]
    fn membership_respects_role_and_open_endpoints() {
        let c = RegionSpec::complement_below(0.0);
        assert!(c.in_e(0.0));
        assert!(c.in_e(5.0));
        assert!(!c.in_e(-0.1));
        let r = RegionSpec::explicit(vec![Interval::new(1.0, 2.0)], Role::Region).unwrap();
        assert!(!r.in_e(1.0));
        assert!(r.in_e(1.5));
    }

    #[test]
    fn pieces_partition_the_window() {
        let r = RegionSpec::explicit(vec![Interval::new(1.0, 2.0), Interval::new(3.0, 5.0)], Role::Complement)
            .unwrap();
        let e = r.e_pieces(0.0, 4.0);
        assert_eq!(e, vec![(0.0, 1.0), (2.0, 3.0)]);
        let ne = r.not_e_pieces(0.0, 4.0);
        assert_eq!(ne, vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn periodic_materialization() {
        let mut r = RegionSpec::periodic(1.0, 0.25, 0, Role::Complement).unwrap();
        r.materialize_to(10.0).unwrap();
        assert_eq!(r.depth(), 11);
        assert!(r.covers(10.0));
        assert!(!r.covers(11.0));
        assert!(!r.in_e(3.1));
        assert!(r.in_e(3.5));
        let mut capped = RegionSpec::periodic(1.0, 0.25, 0, Role::Complement).unwrap().with_max_depth(5);
        assert!(matches!(capped.materialize_to(10.0), Err(Error::Coverage(_))));
    }
}
