//! Bi-infinite points with eventually periodic tails.
//!
//! A point is a function `Z -> A` that is periodic far enough to the left and
//! far enough to the right. That class is closed under shifts, coordinatewise
//! maps, and sliding block codes, and makes equality and first-difference
//! questions decidable with exact integer arithmetic, which is what the rest
//! of the crate leans on.
//!
//! Internally every point is held in a canonical presentation, so structural
//! equality coincides with equality of symbol functions:
//!
//! * `Periodic { period }`: globally periodic, `x_n = period[n mod p]` with
//!   `period` primitive and anchored at coordinate 0.
//! * `Mixed { origin, left, core, right }`: `left` is the primitive period of
//!   the maximal purely periodic left zone `(-inf, origin)`, read away from
//!   the core (`x_{origin-1-i} = left[i mod |left|]`); `core` covers
//!   `[origin, origin+|core|)`; `right` is the primitive right period from
//!   `origin+|core|` on. `origin` is pinned to the first coordinate where
//!   left periodicity breaks, and the core ends at the first coordinate from
//!   which the point is purely right periodic, so the split is unique.
//!
//! The textual literal reads both tails *away from the core*:
//!
//! ```text
//! left_pre | left_per ^omega < core @ origin > right_pre | right_per ^omega
//! ```
//!
//! so `|0^omega <1@0> |0^omega` is the point with a single `1` at
//! coordinate 0, and `|1,0^omega <@0> |0,1^omega` is the two-periodic point
//! with `x_0 = 0`.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;

use crate::alphabet::{Alphabet, SymbolId, Word};
use crate::error::{Error, Result};

/// Cap on the scratch windows used by canonicalization and comparison.
/// Tail periods on the desk scale are tiny; hitting this means runaway input.
const SCAN_CAP: i64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Repr {
    Periodic {
        period: Vec<SymbolId>,
    },
    Mixed {
        origin: i64,
        left: Vec<SymbolId>,
        core: Vec<SymbolId>,
        right: Vec<SymbolId>,
    },
}

/// A canonical eventually periodic bi-infinite point.
///
/// `Ord` compares the canonical presentations structurally (globally periodic
/// points sort before mixed ones). The order is arbitrary but total and
/// stable, which is all the deterministic tie-breaks downstream need.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    alphabet: Arc<Alphabet>,
    repr: Repr,
}

/// A non-canonical presentation, as accepted from parsers and builders.
/// Both tails read away from the core; `per_left`/`per_right` are non-empty.
#[derive(Debug, Clone)]
pub struct RawPoint {
    pub origin: i64,
    pub pre_left: Word,
    pub per_left: Word,
    pub core: Word,
    pub pre_right: Word,
    pub per_right: Word,
}

/// Outcome of comparing two points coordinatewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstDifference {
    /// Same symbol function.
    Equal,
    /// Coordinates agree strictly below the given index and differ at it.
    At(i64),
    /// The difference set is unbounded below.
    NotAsymptotic,
}

impl RawPoint {
    fn symbol_at(&self, n: i64) -> SymbolId {
        let core_len = self.core.len() as i64;
        if n >= self.origin && n < self.origin + core_len {
            return self.core.0[(n - self.origin) as usize];
        }
        if n >= self.origin + core_len {
            let i = n - self.origin - core_len;
            return tail_symbol(&self.pre_right, &self.per_right, i);
        }
        let i = self.origin - 1 - n;
        tail_symbol(&self.pre_left, &self.per_left, i)
    }
}

fn tail_symbol(pre: &Word, per: &Word, i: i64) -> SymbolId {
    let pre_len = pre.len() as i64;
    if i < pre_len {
        pre.0[i as usize]
    } else {
        per.0[((i - pre_len) % per.len() as i64) as usize]
    }
}

/// Minimal period of the one-sided stream `w w w ...`: the border-based
/// period of `w` when it divides `|w|`, otherwise `|w|` itself.
fn stream_period(w: &Word) -> usize {
    let n = w.len();
    debug_assert!(n > 0);
    let mut fail = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && w.0[i] != w.0[k] {
            k = fail[k - 1];
        }
        if w.0[i] == w.0[k] {
            k += 1;
        }
        fail[i] = k;
    }
    let p = n - fail[n - 1];
    if n.is_multiple_of(p) {
        p
    } else {
        n
    }
}

impl Point {
    /// Globally periodic point `x_n = cycle[n mod |cycle|]`.
    pub fn periodic(alphabet: Arc<Alphabet>, cycle: Word) -> Result<Point> {
        if cycle.is_empty() {
            return Err(Error::input("periodic point needs a non-empty cycle"));
        }
        alphabet.check_word(&cycle)?;
        // Minimal period of a bi-infinite periodic sequence divides the
        // presented cycle length; take the smallest working divisor.
        let n = cycle.len();
        let mut root = cycle.clone();
        for p in 1..=n {
            if !n.is_multiple_of(p) {
                continue;
            }
            if (p..n).all(|i| cycle.0[i] == cycle.0[i % p]) {
                root = cycle.slice(0, p);
                break;
            }
        }
        Ok(Point { alphabet, repr: Repr::Periodic { period: root.0 } })
    }

    /// Canonicalizes an arbitrary presentation.
    pub fn from_raw(alphabet: Arc<Alphabet>, raw: RawPoint) -> Result<Point> {
        for w in [&raw.pre_left, &raw.per_left, &raw.core, &raw.pre_right, &raw.per_right] {
            alphabet.check_word(w)?;
        }
        if raw.per_left.is_empty() || raw.per_right.is_empty() {
            return Err(Error::input("tail periods must be non-empty"));
        }
        canonicalize(alphabet, raw)
    }

    /// The point with `w` written at `[start, start + |w|)` over a constant
    /// background symbol everywhere else.
    pub fn word_over_background(
        alphabet: Arc<Alphabet>,
        w: &Word,
        start: i64,
        background: SymbolId,
    ) -> Result<Point> {
        Point::from_raw(
            alphabet,
            RawPoint {
                origin: start,
                pre_left: Word::default(),
                per_left: Word(vec![background]),
                core: w.clone(),
                pre_right: Word::default(),
                per_right: Word(vec![background]),
            },
        )
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn symbol_at(&self, n: i64) -> SymbolId {
        match &self.repr {
            Repr::Periodic { period } => period[n.rem_euclid(period.len() as i64) as usize],
            Repr::Mixed { origin, left, core, right } => {
                let core_len = core.len() as i64;
                if n < *origin {
                    left[((origin - 1 - n) % left.len() as i64) as usize]
                } else if n < origin + core_len {
                    core[(n - origin) as usize]
                } else {
                    right[((n - origin - core_len) % right.len() as i64) as usize]
                }
            }
        }
    }

    /// The word `x_lo .. x_hi` inclusive.
    pub fn window(&self, lo: i64, hi: i64) -> Result<Word> {
        if lo > hi {
            return Err(Error::input(format!("window bounds out of order: {lo} > {hi}")));
        }
        if hi - lo >= SCAN_CAP {
            return Err(Error::ResourceCap(format!("window of length {}", hi - lo + 1)));
        }
        Ok((lo..=hi).map(|n| self.symbol_at(n)).collect())
    }

    /// The shifted point `q` with `q_n = x_{n-k}`.
    pub fn shift(&self, k: i64) -> Point {
        match &self.repr {
            Repr::Periodic { period } => {
                let p = period.len() as i64;
                let rotated: Vec<SymbolId> =
                    (0..p).map(|i| period[(i - k).rem_euclid(p) as usize]).collect();
                Point { alphabet: Arc::clone(&self.alphabet), repr: Repr::Periodic { period: rotated } }
            }
            Repr::Mixed { origin, left, core, right } => Point {
                alphabet: Arc::clone(&self.alphabet),
                repr: Repr::Mixed {
                    origin: origin + k,
                    left: left.clone(),
                    core: core.clone(),
                    right: right.clone(),
                },
            },
        }
    }

    /// Maps every coordinate through a symbol function into a new alphabet.
    pub fn map_symbols(
        &self,
        alphabet: Arc<Alphabet>,
        f: impl Fn(SymbolId) -> SymbolId,
    ) -> Result<Point> {
        match &self.repr {
            Repr::Periodic { period } => {
                Point::periodic(alphabet, period.iter().map(|s| f(*s)).collect())
            }
            Repr::Mixed { origin, left, core, right } => Point::from_raw(
                alphabet,
                RawPoint {
                    origin: *origin,
                    pre_left: Word::default(),
                    per_left: left.iter().map(|s| f(*s)).collect(),
                    core: core.iter().map(|s| f(*s)).collect(),
                    pre_right: Word::default(),
                    per_right: right.iter().map(|s| f(*s)).collect(),
                },
            ),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.repr, Repr::Periodic { .. })
    }

    /// Primitive cycle of a globally periodic point, anchored at 0.
    pub fn periodic_cycle(&self) -> Option<Word> {
        match &self.repr {
            Repr::Periodic { period } => Some(Word(period.clone())),
            Repr::Mixed { .. } => None,
        }
    }

    /// Start of the canonical core, for mixed points.
    pub fn core_origin(&self) -> Option<i64> {
        match &self.repr {
            Repr::Periodic { .. } => None,
            Repr::Mixed { origin, .. } => Some(*origin),
        }
    }

    pub(crate) fn left_period_len(&self) -> i64 {
        match &self.repr {
            Repr::Periodic { period } => period.len() as i64,
            Repr::Mixed { left, .. } => left.len() as i64,
        }
    }

    pub(crate) fn right_period_len(&self) -> i64 {
        match &self.repr {
            Repr::Periodic { period } => period.len() as i64,
            Repr::Mixed { right, .. } => right.len() as i64,
        }
    }

    /// Everything at or below this coordinate lies in the pure left-periodic
    /// zone. `None` for globally periodic points (pure everywhere).
    pub(crate) fn left_pure_end(&self) -> Option<i64> {
        match &self.repr {
            Repr::Periodic { .. } => None,
            Repr::Mixed { origin, .. } => Some(origin - 1),
        }
    }

    /// Everything at or above this coordinate lies in the pure right-periodic
    /// zone. `None` for globally periodic points.
    pub(crate) fn right_pure_start(&self) -> Option<i64> {
        match &self.repr {
            Repr::Periodic { .. } => None,
            Repr::Mixed { origin, core, .. } => Some(origin + core.len() as i64),
        }
    }
}

fn canonicalize(alphabet: Arc<Alphabet>, raw: RawPoint) -> Result<Point> {
    let p_left = stream_period(&raw.per_left) as i64;
    let p_right = stream_period(&raw.per_right) as i64;

    let left_pure_start = raw.origin - raw.pre_left.len() as i64; // pure for n < this
    let right_pure_start = raw.origin + raw.core.len() as i64 + raw.pre_right.len() as i64;

    if right_pure_start - left_pure_start + p_left + p_right > SCAN_CAP {
        return Err(Error::ResourceCap("presentation too large to canonicalize".into()));
    }

    // First coordinate where left periodicity fails. If it survives past the
    // right pure zone by a full left+right period, the point is globally
    // periodic (periodicity of both tails then meshes across the middle).
    let global_bound = right_pure_start + p_left + p_right;
    let mut break_at: Option<i64> = None;
    let mut n = left_pure_start;
    while n <= global_bound {
        if raw.symbol_at(n) != raw.symbol_at(n - p_left) {
            break_at = Some(n);
            break;
        }
        n += 1;
    }

    let Some(origin) = break_at else {
        let cycle: Word = (0..p_left).map(|i| raw.symbol_at(i)).collect();
        let point = Point::periodic(alphabet, cycle)?;
        debug_assert!(matches!(&point.repr, Repr::Periodic { period } if period.len() as i64 == p_left));
        return Ok(point);
    };

    // Last coordinate where right periodicity fails; the pure right zone
    // starts just above it. The scan must terminate: otherwise the point
    // would have been globally periodic above.
    let mut r_star = None;
    let mut n = right_pure_start - 1;
    let lower_bound = left_pure_start - p_left - p_right;
    while n >= lower_bound {
        if raw.symbol_at(n) != raw.symbol_at(n + p_right) {
            r_star = Some(n + 1);
            break;
        }
        n -= 1;
    }
    let r_star = r_star.ok_or_else(|| {
        Error::invariant("left-aperiodic point with no right-periodicity break".to_string())
    })?;

    let core_end = r_star.max(origin);
    let left: Vec<SymbolId> = (0..p_left).map(|i| raw.symbol_at(origin - 1 - i)).collect();
    let core: Vec<SymbolId> = (origin..core_end).map(|n| raw.symbol_at(n)).collect();
    let right: Vec<SymbolId> = (0..p_right).map(|i| raw.symbol_at(core_end + i)).collect();

    debug_assert_eq!(stream_period(&Word(left.clone())) as i64, p_left);
    debug_assert_eq!(stream_period(&Word(right.clone())) as i64, p_right);

    Ok(Point { alphabet, repr: Repr::Mixed { origin, left, core, right } })
}

/// Exact three-way comparison of two points over the same alphabet.
///
/// Either the points are equal, or the set of differing coordinates has a
/// minimum (returned), or it is unbounded below. Everything is decided on
/// finite windows: once both points are purely periodic, agreement over one
/// least-common-multiple window pins agreement over the whole zone.
pub fn first_difference(x: &Point, y: &Point) -> Result<FirstDifference> {
    if x.alphabet != y.alphabet {
        return Err(Error::input("points live over different alphabets"));
    }
    if x == y {
        return Ok(FirstDifference::Equal);
    }
    let left_lcm = x.left_period_len().lcm(&y.left_period_len());
    match (x.left_pure_end(), y.left_pure_end()) {
        (None, None) => {
            // Two distinct globally periodic points differ on a coordinate
            // class that recurs arbitrarily far left.
            Ok(FirstDifference::NotAsymptotic)
        }
        (ex, ey) => {
            let m0 = match (ex, ey) {
                (Some(a), Some(b)) => a.min(b) + 1,
                (Some(a), None) | (None, Some(a)) => a + 1,
                (None, None) => unreachable!(),
            };
            if left_lcm > SCAN_CAP {
                return Err(Error::ResourceCap("tail period lcm too large".into()));
            }
            for n in (m0 - left_lcm)..m0 {
                if x.symbol_at(n) != y.symbol_at(n) {
                    return Ok(FirstDifference::NotAsymptotic);
                }
            }
            let right_lcm = x.right_period_len().lcm(&y.right_period_len());
            let start = x
                .right_pure_start()
                .unwrap_or(m0)
                .max(y.right_pure_start().unwrap_or(m0));
            let hi = start + right_lcm;
            if hi - m0 > SCAN_CAP {
                return Err(Error::ResourceCap("comparison window too large".into()));
            }
            for n in m0..hi {
                if x.symbol_at(n) != y.symbol_at(n) {
                    return Ok(FirstDifference::At(n));
                }
            }
            // Agreement below m0, across the middle, and over a full lcm
            // window of both pure right zones forces equality, which the
            // canonical representations would already have caught.
            Err(Error::invariant("distinct canonical points with equal symbol functions"))
        }
    }
}

impl fmt::Display for Point {
    /// Canonical literal; see the module docs for the grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.alphabet;
        let (origin, left, core, right) = match &self.repr {
            Repr::Periodic { period } => {
                let p = period.len() as i64;
                let left: Vec<SymbolId> =
                    (0..p).map(|i| period[(-1 - i).rem_euclid(p) as usize]).collect();
                (0, left, Vec::new(), period.clone())
            }
            Repr::Mixed { origin, left, core, right } => {
                (*origin, left.clone(), core.clone(), right.clone())
            }
        };
        write!(
            f,
            "|{}^omega <{}@{}> |{}^omega",
            a.render_word(&Word(left)),
            a.render_word(&Word(core)),
            origin,
            a.render_word(&Word(right)),
        )
    }
}

/// Parses the textual point literal described in the module docs.
pub fn parse_point(alphabet: &Arc<Alphabet>, text: &str) -> Result<Point> {
    let text = text.trim();
    let err = |msg: &str| Error::Parse(format!("point literal {text:?}: {msg}"));

    let lt = text.find('<').ok_or_else(|| err("missing '<'"))?;
    let gt = text.find('>').ok_or_else(|| err("missing '>'"))?;
    if gt < lt {
        return Err(err("'>' before '<'"));
    }
    let (left_txt, rest) = text.split_at(lt);
    let core_txt = &rest[1..gt - lt];
    let right_txt = rest[gt - lt + 1..].trim();

    let parse_tail = |part: &str| -> Result<(Word, Word)> {
        let part = part.trim();
        let bar = part.find('|').ok_or_else(|| err("tail missing '|'"))?;
        let pre = alphabet.parse_word(&part[..bar])?;
        let per_txt = part[bar + 1..].trim();
        let per_txt = per_txt
            .strip_suffix("^omega")
            .ok_or_else(|| err("tail period missing '^omega'"))?;
        let per = alphabet.parse_word(per_txt)?;
        if per.is_empty() {
            return Err(err("empty tail period"));
        }
        Ok((pre, per))
    };

    let (pre_left, per_left) = parse_tail(left_txt)?;
    let (pre_right, per_right) = parse_tail(right_txt)?;

    let at = core_txt.rfind('@').ok_or_else(|| err("core missing '@'"))?;
    let core = alphabet.parse_word(&core_txt[..at])?;
    let origin: i64 = core_txt[at + 1..]
        .trim()
        .parse()
        .map_err(|_| err("bad origin integer"))?;

    Point::from_raw(
        Arc::clone(alphabet),
        RawPoint { origin, pre_left, per_left, core, pre_right, per_right },
    )
}
