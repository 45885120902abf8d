use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use super::{Regex, TagId, TagTable, RIGHTMOST};

/// A distance in symbols, or unknown. Unknown absorbs all arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Known(u64),
    Unknown,
}

impl Distance {
    pub const ZERO: Distance = Distance::Known(0);

    pub fn known(self) -> Option<u64> {
        match self {
            Distance::Known(d) => Some(d),
            Distance::Unknown => None,
        }
    }
}

impl Add for Distance {
    type Output = Distance;

    fn add(self, rhs: Distance) -> Distance {
        match (self, rhs) {
            (Distance::Known(a), Distance::Known(b)) => {
                a.checked_add(b).map_or(Distance::Unknown, Distance::Known)
            }
            _ => Distance::Unknown,
        }
    }
}

impl Mul<Distance> for u32 {
    type Output = Distance;

    fn mul(self, rhs: Distance) -> Distance {
        match rhs {
            Distance::Known(d) => {
                u64::from(self).checked_mul(d).map_or(Distance::Unknown, Distance::Known)
            }
            Distance::Unknown => Distance::Unknown,
        }
    }
}

/// A tag whose value is `base - distance`. `base == 0` is the rightmost
/// position of the match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fixation {
    pub base: TagId,
    pub distance: u64,
}

/// Result of the fixed-tags analysis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixedTags {
    pub fixations: BTreeMap<TagId, Fixation>,
    /// Level on which each visited tag was found.
    pub levels: BTreeMap<TagId, u32>,
    /// Number of recursive calls made.
    pub visits: usize,
}

/// Finds tags that lie at a constant distance from another tag on the same
/// level, or from the end of the match at the top level.
///
/// Tags for which `exclude` returns true are neither fixed nor used as a
/// base; multi-valued tags must be excluded since a distance only relates
/// the last offsets of two tags.
pub fn find_fixed_tags(e: &Regex, exclude: impl Fn(TagId) -> bool) -> FixedTags {
    let mut st = State { exclude: &exclude, out: FixedTags::default(), levels: 0 };
    st.walk(e, Some(RIGHTMOST), Distance::ZERO, Distance::ZERO, 0);
    st.out
}

struct State<'a> {
    exclude: &'a dyn Fn(TagId) -> bool,
    out: FixedTags,
    levels: u32,
}

impl State<'_> {
    fn new_level(&mut self) -> u32 {
        self.levels += 1;
        self.levels
    }

    fn walk(
        &mut self,
        e: &Regex,
        t: Option<TagId>,
        d: Distance,
        k: Distance,
        level: u32,
    ) -> (Option<TagId>, Distance, Distance) {
        self.out.visits += 1;
        let one = Distance::Known(1);
        match e {
            Regex::Empty => (t, d, k),
            Regex::Symbol(_) => (t, d + one, k + one),
            Regex::Alt(l, r) => {
                let lv = self.new_level();
                let (_, _, k1) = self.walk(l, None, Distance::Unknown, Distance::ZERO, lv);
                let lv = self.new_level();
                let (_, _, k2) = self.walk(r, None, Distance::Unknown, Distance::ZERO, lv);
                match (k1, k2) {
                    (Distance::Known(a), Distance::Known(b)) if a == b => (t, d + k1, k + k1),
                    _ => (t, Distance::Unknown, Distance::Unknown),
                }
            }
            Regex::Cat(l, r) => {
                let (t2, d2, k2) = self.walk(r, t, d, k, level);
                self.walk(l, t2, d2, k2, level)
            }
            Regex::Rep(body, lo, hi) => {
                let lv = self.new_level();
                let (_, _, k1) = self.walk(body, None, Distance::Unknown, Distance::ZERO, lv);
                if Some(*lo) == *hi {
                    (t, d + *lo * k1, k + *lo * k1)
                } else {
                    (t, Distance::Unknown, Distance::Unknown)
                }
            }
            Regex::Tag(t1) => {
                self.out.levels.insert(*t1, level);
                if (self.exclude)(*t1) {
                    return (t, d, k);
                }
                match (t, d) {
                    (Some(base), Distance::Known(dist)) => {
                        self.out.fixations.insert(*t1, Fixation { base, distance: dist });
                        (t, d, k)
                    }
                    _ => (Some(*t1), Distance::ZERO, k),
                }
            }
        }
    }
}

/// Fills in fixed tags from their bases. `values` is indexed by `tag - 1`;
/// `end` is the offset where the match ended.
pub fn apply_fixed_tags(values: &mut [Option<usize>], table: &TagTable, end: usize) {
    for info in &table.tags {
        let Some(fix) = info.fixed else { continue };
        let base = if fix.base == RIGHTMOST {
            Some(end)
        } else {
            values[fix.base as usize - 1]
        };
        values[info.id as usize - 1] = base.map(|b| b - fix.distance as usize);
    }
}
