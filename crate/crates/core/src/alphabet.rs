//! Alphabets and finite words.
//!
//! Symbols are indices into an `Alphabet`. The declaration order of the
//! alphabet is the total order used by every lexicographic tie-break in the
//! crate, so constructors never sort or dedup silently.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a symbol within its alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u16);

/// Characters that the textual point/word grammar claims for itself.
/// Symbol names must avoid them; `.` is reserved as the product separator.
const RESERVED: &[char] = &[',', '|', '^', '<', '>', '@', '~', ';', '{', '}', '(', ')', '=', '#', '.'];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Kind {
    Atomic,
    Product(Arc<Alphabet>, Arc<Alphabet>),
}

/// A finite ordered symbol set, possibly the product of two smaller ones.
/// Product symbols are rendered `left.right`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alphabet {
    names: Vec<String>,
    index: BTreeMap<String, SymbolId>,
    kind: Kind,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Alphabet> {
        if names.is_empty() {
            return Err(Error::input("alphabet must have at least one symbol"));
        }
        if names.len() > u16::MAX as usize {
            return Err(Error::input("alphabet too large"));
        }
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c)) {
                return Err(Error::Input(format!("bad symbol name {name:?}")));
            }
            if index.insert(name.clone(), SymbolId(i as u16)).is_some() {
                return Err(Error::Input(format!("duplicate symbol name {name:?}")));
            }
        }
        Ok(Alphabet { names, index, kind: Kind::Atomic })
    }

    /// Binary alphabet `0,1`; the workhorse of the gallery.
    pub fn binary() -> Arc<Alphabet> {
        Arc::new(Alphabet::new(vec!["0".into(), "1".into()]).expect("binary alphabet"))
    }

    /// Product alphabet. Symbol `(l, r)` gets id `l * |right| + r` and the
    /// name `l.r`, so enumeration order is row-major in the left component.
    pub fn product(left: &Arc<Alphabet>, right: &Arc<Alphabet>) -> Arc<Alphabet> {
        let mut names = Vec::with_capacity(left.len() * right.len());
        for l in &left.names {
            for r in &right.names {
                names.push(format!("{l}.{r}"));
            }
        }
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), SymbolId(i as u16)))
            .collect();
        Arc::new(Alphabet {
            names,
            index,
            kind: Kind::Product(Arc::clone(left), Arc::clone(right)),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.names.len() as u16).map(SymbolId)
    }

    pub fn contains(&self, s: SymbolId) -> bool {
        (s.0 as usize) < self.names.len()
    }

    pub fn name(&self, s: SymbolId) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn symbol(&self, name: &str) -> Result<SymbolId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Input(format!("symbol {name:?} is not in the alphabet")))
    }

    pub fn components(&self) -> Option<(&Arc<Alphabet>, &Arc<Alphabet>)> {
        match &self.kind {
            Kind::Atomic => None,
            Kind::Product(l, r) => Some((l, r)),
        }
    }

    pub fn pair(&self, l: SymbolId, r: SymbolId) -> SymbolId {
        let (_, right) = self.components().expect("pair() on a non-product alphabet");
        SymbolId(l.0 * right.len() as u16 + r.0)
    }

    pub fn unpair(&self, s: SymbolId) -> (SymbolId, SymbolId) {
        let (_, right) = self.components().expect("unpair() on a non-product alphabet");
        let w = right.len() as u16;
        (SymbolId(s.0 / w), SymbolId(s.0 % w))
    }

    /// Renders a word as comma-joined symbol names; empty word renders as "".
    pub fn render_word(&self, w: &Word) -> String {
        let mut out = String::new();
        for (i, s) in w.0.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", self.name(*s));
        }
        out
    }

    /// Parses a comma-joined word. The empty string is the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Word::default());
        }
        let mut ids = Vec::new();
        for part in text.split(',') {
            ids.push(self.symbol(part.trim())?);
        }
        Ok(Word(ids))
    }

    /// Checks that every symbol of `w` is valid here.
    pub fn check_word(&self, w: &Word) -> Result<()> {
        for s in &w.0 {
            if !self.contains(*s) {
                return Err(Error::Input(format!(
                    "symbol id {} outside alphabet of size {}",
                    s.0,
                    self.len()
                )));
            }
        }
        Ok(())
    }
}

/// A finite word: a plain sequence of symbol ids. Validity against a given
/// alphabet is checked at the operation boundary, not carried in the type.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<SymbolId>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn slice(&self, lo: usize, hi: usize) -> Word {
        Word(self.0[lo..hi].to_vec())
    }

    /// Central subword of odd-length words: keeps `radius` symbols either
    /// side of the middle position.
    pub fn central(&self, radius: usize) -> Word {
        debug_assert!(self.len() % 2 == 1);
        let mid = self.len() / 2;
        self.slice(mid - radius, mid + radius + 1)
    }
}

impl FromIterator<SymbolId> for Word {
    fn from_iter<T: IntoIterator<Item = SymbolId>>(iter: T) -> Self {
        Word(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_pairing_round_trips() {
        let a = Alphabet::binary();
        let b = Alphabet::new(vec!["x".into(), "y".into(), "z".into()]).unwrap();
        let p = Alphabet::product(&a, &Arc::new(b));
        assert_eq!(p.len(), 6);
        for l in a.ids() {
            for r in 0..3u16 {
                let s = p.pair(l, SymbolId(r));
                assert_eq!(p.unpair(s), (l, SymbolId(r)));
            }
        }
        assert_eq!(p.name(p.pair(SymbolId(1), SymbolId(2))), "1.z");
    }

    #[test]
    fn word_render_parse_round_trip() {
        let a = Alphabet::binary();
        let w = a.parse_word("0,1,1,0").unwrap();
        assert_eq!(a.render_word(&w), "0,1,1,0");
        assert_eq!(a.parse_word("").unwrap(), Word::default());
        assert!(a.parse_word("0,2").is_err());
    }

    #[test]
    fn reserved_characters_rejected() {
        assert!(Alphabet::new(vec!["a.b".into()]).is_err());
        assert!(Alphabet::new(vec!["a|b".into()]).is_err());
        assert!(Alphabet::new(vec!["".into()]).is_err());
    }
}
