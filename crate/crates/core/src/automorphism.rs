//! Automorphisms presented by local block rules.
//!
//! A block map with memory `k` reads the window `x[n-k ..= n+k]` to produce
//! output symbol `n`. Composition keeps the factors symbolic instead of
//! materializing a combined lookup table, so memories add and evaluation
//! stays exact.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::alphabet::{Alphabet, SymbolId, Word};
use crate::error::{Error, Result};
use crate::point::{Point, RawPoint};
use crate::space::{Presentation, ShiftSpace};

/// A local jump rule for marker dynamics: a window over the base alphabet
/// maps to an integer displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCocycle {
    name: String,
    radius: usize,
    table: BTreeMap<Word, i64>,
    default: Option<i64>,
    max_abs: i64,
}

impl OrbitCocycle {
    pub fn new(
        name: impl Into<String>,
        radius: usize,
        table: BTreeMap<Word, i64>,
        default: Option<i64>,
    ) -> Result<Self> {
        for w in table.keys() {
            if w.len() != 2 * radius + 1 {
                return Err(Error::input(format!(
                    "jump rule key length {} does not match radius {radius}",
                    w.len()
                )));
            }
        }
        let mut max_abs = default.map_or(0, i64::abs);
        for v in table.values() {
            max_abs = max_abs.max(v.abs());
        }
        if table.is_empty() && default.is_none() {
            return Err(Error::input("jump rule has no entries and no default"));
        }
        Ok(OrbitCocycle { name: name.into(), radius, table, default, max_abs })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Largest displacement the rule can produce.
    pub fn max_abs(&self) -> i64 {
        self.max_abs
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, i64)> {
        self.table.iter().map(|(w, v)| (w, *v))
    }

    pub fn default_value(&self) -> Option<i64> {
        self.default
    }

    pub fn evaluate(&self, w: &Word) -> Result<i64> {
        if w.len() != 2 * self.radius + 1 {
            return Err(Error::input(format!(
                "jump rule window length {} does not match radius {}",
                w.len(),
                self.radius
            )));
        }
        match self.table.get(w) {
            Some(v) => Ok(*v),
            None => self.default.ok_or_else(|| {
                Error::invariant("jump rule has no entry for a reachable window")
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    /// Output = input at `center + offset`.
    Project { offset: i64 },
    /// Symbol-wise relabeling by a bijection.
    Permute(Vec<SymbolId>),
    /// Window lookup with an optional default.
    Table { table: BTreeMap<Word, SymbolId>, default: Option<SymbolId> },
    /// Marker transport on a product `base x marker-lane`: the marker at
    /// offset `m` survives to the center when its jump cancels `m`.
    MarkerMove(OrbitCocycle),
    Compose(Arc<BlockMap>, Arc<BlockMap>),
}

/// Read-only view of a block map's rule, for reporting and serialization.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleView<'a> {
    /// Output = input at `center + offset`; `offset = -k` for the shift
    /// power `sigma^k`.
    Project { offset: i64 },
    /// Symbol-wise relabeling; entry `i` is the image of symbol `i`.
    Permute(&'a [SymbolId]),
    /// Window lookup with an optional default.
    Table { table: &'a BTreeMap<Word, SymbolId>, default: Option<SymbolId> },
    /// Marker transport driven by a jump rule on the base component.
    MarkerMove(&'a OrbitCocycle),
    Compose(&'a Arc<BlockMap>, &'a Arc<BlockMap>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMap {
    alphabet: Arc<Alphabet>,
    memory: usize,
    rule: Rule,
}

impl BlockMap {
    /// The shift power `x -> sigma^k x`, with `[sigma x]_n = x_{n-1}`.
    pub fn shift_power(alphabet: Arc<Alphabet>, k: i64) -> BlockMap {
        BlockMap {
            alphabet,
            memory: k.unsigned_abs() as usize,
            rule: Rule::Project { offset: -k },
        }
    }

    pub fn identity(alphabet: Arc<Alphabet>) -> BlockMap {
        BlockMap::shift_power(alphabet, 0)
    }

    pub fn permute(alphabet: Arc<Alphabet>, perm: Vec<SymbolId>) -> Result<BlockMap> {
        if perm.len() != alphabet.len() {
            return Err(Error::input("permutation size does not match alphabet"));
        }
        let mut seen = vec![false; perm.len()];
        for s in &perm {
            let i = s.0 as usize;
            if i >= perm.len() || seen[i] {
                return Err(Error::input("symbol map is not a permutation"));
            }
            seen[i] = true;
        }
        Ok(BlockMap { alphabet, memory: 0, rule: Rule::Permute(perm) })
    }

    /// Swaps the two coordinates of a product alphabet with equal components.
    pub fn swap(alphabet: Arc<Alphabet>) -> Result<BlockMap> {
        let (l, r) = alphabet
            .components()
            .ok_or_else(|| Error::input("swap needs a product alphabet"))?;
        if l != r {
            return Err(Error::input("swap needs equal product components"));
        }
        let perm = alphabet
            .ids()
            .map(|s| {
                let (a, b) = alphabet.unpair(s);
                alphabet.pair(b, a)
            })
            .collect();
        BlockMap::permute(alphabet, perm)
    }

    pub fn table(
        alphabet: Arc<Alphabet>,
        radius: usize,
        table: BTreeMap<Word, SymbolId>,
        default: Option<SymbolId>,
    ) -> Result<BlockMap> {
        for (w, s) in &table {
            if w.len() != 2 * radius + 1 {
                return Err(Error::input("table key length does not match radius"));
            }
            alphabet.check_word(w)?;
            if !alphabet.contains(*s) {
                return Err(Error::input("table value outside alphabet"));
            }
        }
        if let Some(d) = default {
            if !alphabet.contains(d) {
                return Err(Error::input("table default outside alphabet"));
            }
        }
        Ok(BlockMap { alphabet, memory: radius, rule: Rule::Table { table, default } })
    }

    /// Marker transport over `base x {0,1}` driven by a jump rule on base
    /// windows. Memory is `radius + max_jump`.
    pub fn marker_move(alphabet: Arc<Alphabet>, cocycle: OrbitCocycle) -> Result<BlockMap> {
        let (_, lane) = alphabet
            .components()
            .ok_or_else(|| Error::input("marker transport needs a product alphabet"))?;
        if **lane != *Alphabet::binary() {
            return Err(Error::input("marker lane must be the binary alphabet"));
        }
        let memory = cocycle.radius() + cocycle.max_abs() as usize;
        Ok(BlockMap { alphabet, memory, rule: Rule::MarkerMove(cocycle) })
    }

    pub fn compose(outer: &Arc<BlockMap>, inner: &Arc<BlockMap>) -> Result<BlockMap> {
        if outer.alphabet != inner.alphabet {
            return Err(Error::input("composed block maps use different alphabets"));
        }
        Ok(BlockMap {
            alphabet: Arc::clone(&outer.alphabet),
            memory: outer.memory + inner.memory,
            rule: Rule::Compose(Arc::clone(outer), Arc::clone(inner)),
        })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn rule_view(&self) -> RuleView<'_> {
        match &self.rule {
            Rule::Project { offset } => RuleView::Project { offset: *offset },
            Rule::Permute(p) => RuleView::Permute(p),
            Rule::Table { table, default } => RuleView::Table { table, default: *default },
            Rule::MarkerMove(c) => RuleView::MarkerMove(c),
            Rule::Compose(outer, inner) => RuleView::Compose(outer, inner),
        }
    }

    /// One output symbol from a full window of length `2*memory + 1`.
    pub fn eval(&self, window: &[SymbolId]) -> Result<SymbolId> {
        if window.len() != 2 * self.memory + 1 {
            return Err(Error::input(format!(
                "window length {} does not match memory {}",
                window.len(),
                self.memory
            )));
        }
        let center = self.memory;
        match &self.rule {
            Rule::Project { offset } => Ok(window[(center as i64 + offset) as usize]),
            Rule::Permute(perm) => Ok(perm[window[center].0 as usize]),
            Rule::Table { table, default } => {
                let w = Word(window.to_vec());
                match table.get(&w) {
                    Some(s) => Ok(*s),
                    None => default.ok_or_else(|| {
                        Error::invariant("table rule has no entry for a reachable window")
                    }),
                }
            }
            Rule::MarkerMove(c) => {
                let base: Vec<SymbolId> =
                    window.iter().map(|s| self.alphabet.unpair(*s).0).collect();
                let lane: Vec<SymbolId> =
                    window.iter().map(|s| self.alphabet.unpair(*s).1).collect();
                let r = c.radius() as i64;
                let mut out = SymbolId(0);
                for m in -c.max_abs()..=c.max_abs() {
                    let at = (center as i64 + m) as usize;
                    if lane[at] == SymbolId(1) {
                        let lo = (at as i64 - r) as usize;
                        let sub = Word(base[lo..=(at as i64 + r) as usize].to_vec());
                        if m + c.evaluate(&sub)? == 0 {
                            out = SymbolId(1);
                            break;
                        }
                    }
                }
                Ok(self.alphabet.pair(base[center], out))
            }
            Rule::Compose(outer, inner) => {
                let mid: Vec<SymbolId> = (0..2 * outer.memory + 1)
                    .map(|j| inner.eval(&window[j..j + 2 * inner.memory + 1]))
                    .collect::<Result<_>>()?;
                outer.eval(&mid)
            }
        }
    }

    /// Slides the window over `w`; the output is `2*memory` shorter.
    pub fn apply_word(&self, w: &Word) -> Result<Word> {
        if w.len() < 2 * self.memory + 1 {
            return Err(Error::input(format!(
                "word of length {} is shorter than the window {}",
                w.len(),
                2 * self.memory + 1
            )));
        }
        (0..w.len() - 2 * self.memory)
            .map(|j| self.eval(&w.0[j..j + 2 * self.memory + 1]))
            .collect()
    }

    /// Exact image of an eventually periodic point. Tail periods are
    /// preserved because far enough into a tail every window is periodic.
    pub fn apply_to_point(&self, p: &Point) -> Result<Point> {
        if p.alphabet() != &self.alphabet {
            return Err(Error::input("point alphabet does not match block map"));
        }
        let k = self.memory as i64;
        let window_at = |n: i64| -> Result<SymbolId> {
            let w = p.window(n - k, n + k)?;
            self.eval(&w.0)
        };
        if let Some(cycle) = p.periodic_cycle() {
            let q = cycle.len() as i64;
            let out: Word = (0..q).map(window_at).collect::<Result<_>>()?;
            return Point::periodic(Arc::clone(&self.alphabet), out);
        }
        let origin = p.core_origin().unwrap();
        let rps = p.right_pure_start().unwrap();
        let pl = p.left_period_len();
        let pr = p.right_period_len();
        let out_origin = origin - k;
        Point::from_raw(
            Arc::clone(&self.alphabet),
            RawPoint {
                origin: out_origin,
                pre_left: Word::default(),
                per_left: (0..pl).map(|i| window_at(out_origin - 1 - i)).collect::<Result<_>>()?,
                core: (out_origin..rps + k).map(window_at).collect::<Result<_>>()?,
                pre_right: Word::default(),
                per_right: (0..pr).map(|i| window_at(rps + k + i)).collect::<Result<_>>()?,
            },
        )
    }
}

/// A shift-commuting homeomorphism given by a forward and an inverse block
/// rule. The inverse is supplied, not solved for; `verify_automorphism`
/// checks the pair against a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Automorphism {
    label: String,
    forward: Arc<BlockMap>,
    inverse: Arc<BlockMap>,
}

impl Automorphism {
    pub fn new(label: impl Into<String>, forward: BlockMap, inverse: BlockMap) -> Result<Self> {
        if forward.alphabet != inverse.alphabet {
            return Err(Error::input("forward and inverse use different alphabets"));
        }
        Ok(Automorphism {
            label: label.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        })
    }

    pub fn shift_power(alphabet: Arc<Alphabet>, k: i64) -> Automorphism {
        let label = match k {
            0 => "identity".to_string(),
            1 => "sigma".to_string(),
            _ => format!("sigma^{k}"),
        };
        Automorphism {
            label,
            forward: Arc::new(BlockMap::shift_power(Arc::clone(&alphabet), k)),
            inverse: Arc::new(BlockMap::shift_power(alphabet, -k)),
        }
    }

    pub fn identity(alphabet: Arc<Alphabet>) -> Automorphism {
        Automorphism::shift_power(alphabet, 0)
    }

    pub fn swap(alphabet: Arc<Alphabet>) -> Result<Automorphism> {
        let fwd = BlockMap::swap(Arc::clone(&alphabet))?;
        let inv = fwd.clone();
        Automorphism::new("swap", fwd, inv)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn forward(&self) -> &Arc<BlockMap> {
        &self.forward
    }

    pub fn inverse(&self) -> &Arc<BlockMap> {
        &self.inverse
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.forward.alphabet()
    }

    pub fn forward_memory(&self) -> usize {
        self.forward.memory()
    }

    pub fn inverse_memory(&self) -> usize {
        self.inverse.memory()
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.forward.apply_to_point(p)
    }

    pub fn unapply(&self, p: &Point) -> Result<Point> {
        self.inverse.apply_to_point(p)
    }

    /// `self` after `other`: `(self * other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        Ok(Automorphism {
            label: format!("{}*{}", self.label, other.label),
            forward: Arc::new(BlockMap::compose(&self.forward, &other.forward)?),
            inverse: Arc::new(BlockMap::compose(&other.inverse, &self.inverse)?),
        })
    }

    pub fn inverse_automorphism(&self) -> Automorphism {
        Automorphism {
            label: format!("{}^-1", self.label),
            forward: Arc::clone(&self.inverse),
            inverse: Arc::clone(&self.forward),
        }
    }
}

/// Checks that `auto` restricts to an automorphism of `space`: both rules
/// preserve the language up to output length `len_check`, and they are
/// mutually inverse on a deterministic pool of member points.
pub fn verify_automorphism(space: &ShiftSpace, auto: &Automorphism, len_check: usize) -> Result<()> {
    if auto.alphabet() != space.alphabet() {
        return Err(Error::input("automorphism alphabet does not match space"));
    }
    for (dir, map) in [("forward", &auto.forward), ("inverse", &auto.inverse)] {
        let k = map.memory();
        for n in 1..=len_check {
            for w in space.words(n + 2 * k)? {
                let out = map.apply_word(&w)?;
                if !space.contains_word(&out)? {
                    return Err(Error::invariant(format!(
                        "{dir} rule of {} maps language word {} outside the language",
                        auto.label(),
                        space.alphabet().render_word(&w)
                    )));
                }
            }
        }
    }
    let h = (auto.forward_memory() + auto.inverse_memory()) as i64 + 2;
    let pool: Vec<Point> = match space.presentation() {
        Presentation::Sofic(_) => {
            let n = 2 * (auto.forward_memory() + auto.inverse_memory()) as i64 + 1;
            space
                .words(n as usize)?
                .iter()
                .map(|w| space.realize_centered(w))
                .collect::<Result<_>>()?
        }
        _ => space.sample_points(h)?,
    };
    for p in &pool {
        let q = auto.apply(p)?;
        if !space.is_point_in(&q)? {
            return Err(Error::invariant(format!(
                "{} maps a member point outside the space",
                auto.label()
            )));
        }
        if auto.unapply(&q)? != *p {
            return Err(Error::invariant(format!(
                "inverse rule of {} fails the round trip",
                auto.label()
            )));
        }
        let q = auto.unapply(p)?;
        if auto.apply(&q)? != *p {
            return Err(Error::invariant(format!(
                "forward rule of {} fails the reverse round trip",
                auto.label()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::parse_point;
    use crate::space::SoficAutomaton;

    fn binary() -> Arc<Alphabet> {
        Alphabet::binary()
    }

    fn full_shift() -> Arc<ShiftSpace> {
        let a = binary();
        let edges = vec![(0, SymbolId(0), 0), (0, SymbolId(1), 0)];
        let aut = SoficAutomaton::new(vec!["q".into()], edges).unwrap();
        ShiftSpace::sofic("full", a, aut).unwrap()
    }

    fn sunny() -> Arc<ShiftSpace> {
        let a = binary();
        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        ShiftSpace::orbit_closure("S", a, vec![x]).unwrap()
    }

    fn sample_points() -> Vec<Point> {
        let a = binary();
        vec![
            parse_point(&a, "|0^omega <1@0> |0^omega").unwrap(),
            parse_point(&a, "|0^omega <0@0> |0^omega").unwrap(),
            parse_point(&a, "|1,0^omega <1,1@0> |0,1,1^omega").unwrap(),
        ]
    }

    #[test]
    fn shift_block_map_matches_point_shift() {
        let a = binary();
        for k in -3i64..=3 {
            let bm = BlockMap::shift_power(a.clone(), k);
            assert_eq!(bm.memory(), k.unsigned_abs() as usize);
            for p in sample_points() {
                assert_eq!(bm.apply_to_point(&p).unwrap(), p.shift(k), "k = {k}");
            }
        }
    }

    #[test]
    fn word_application_drops_margins() {
        let a = binary();
        let bm = BlockMap::shift_power(a.clone(), 1);
        let w = a.parse_word("0,1,1,0,1").unwrap();
        // Output position j corresponds to input index j (offset -1 from
        // window center j+1).
        assert_eq!(bm.apply_word(&w).unwrap(), a.parse_word("0,1,1").unwrap());
        assert!(bm.apply_word(&a.parse_word("0,1").unwrap()).is_err());
    }

    #[test]
    fn permutation_flips_symbols() {
        let a = binary();
        let flip = BlockMap::permute(a.clone(), vec![SymbolId(1), SymbolId(0)]).unwrap();
        let p = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        let q = flip.apply_to_point(&p).unwrap();
        assert_eq!(q, parse_point(&a, "|1^omega <0@0> |1^omega").unwrap());
        assert!(BlockMap::permute(a, vec![SymbolId(0), SymbolId(0)]).is_err());
    }

    #[test]
    fn composition_adds_memory_and_agrees_pointwise() {
        let a = binary();
        let s1 = Arc::new(BlockMap::shift_power(a.clone(), 1));
        let s2 = Arc::new(BlockMap::shift_power(a.clone(), 2));
        let both = BlockMap::compose(&s1, &s2).unwrap();
        assert_eq!(both.memory(), 3);
        for p in sample_points() {
            assert_eq!(both.apply_to_point(&p).unwrap(), p.shift(3));
        }
        let inv = Arc::new(BlockMap::shift_power(a, -1));
        let id = BlockMap::compose(&s1, &inv).unwrap();
        for p in sample_points() {
            assert_eq!(id.apply_to_point(&p).unwrap(), p);
        }
    }

    #[test]
    fn swap_exchanges_product_coordinates() {
        let a = binary();
        let s = sunny();
        let prod = ShiftSpace::product("SxS", s.clone(), s);
        let swap = BlockMap::swap(prod.alphabet().clone()).unwrap();
        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        let z = parse_point(&a, "|0^omega <0@0> |0^omega").unwrap();
        let p = prod.zip_points(&x, &z.shift(3)).unwrap();
        let q = swap.apply_to_point(&p).unwrap();
        assert_eq!(q, prod.zip_points(&z.shift(3), &x).unwrap());
    }

    #[test]
    fn table_rule_uses_default() {
        let a = binary();
        let mut table = BTreeMap::new();
        table.insert(a.parse_word("0,1,0").unwrap(), SymbolId(1));
        let bm = BlockMap::table(a.clone(), 1, table, Some(SymbolId(0))).unwrap();
        let w = a.parse_word("0,0,1,0,0").unwrap();
        assert_eq!(bm.apply_word(&w).unwrap(), a.parse_word("0,1,0").unwrap());
    }

    #[test]
    fn verify_accepts_shift_and_rejects_mismatches() {
        let s = sunny();
        let a = binary();
        let sigma = Automorphism::shift_power(a.clone(), 1);
        verify_automorphism(&s, &sigma, 4).unwrap();

        let flip = Automorphism::new(
            "flip",
            BlockMap::permute(a.clone(), vec![SymbolId(1), SymbolId(0)]).unwrap(),
            BlockMap::permute(a.clone(), vec![SymbolId(1), SymbolId(0)]).unwrap(),
        )
        .unwrap();
        // Symbol flip preserves the full shift but not the single-marker
        // language.
        verify_automorphism(&full_shift(), &flip, 4).unwrap();
        assert!(verify_automorphism(&s, &flip, 4).is_err());

        let bogus = Automorphism::new(
            "bogus",
            BlockMap::shift_power(a.clone(), 1),
            BlockMap::shift_power(a, 2),
        )
        .unwrap();
        assert!(verify_automorphism(&s, &bogus, 3).is_err());
    }

    #[test]
    fn marker_transport_moves_single_marker() {
        let a = binary();
        let s = sunny();
        let prod = ShiftSpace::product("SxS", s.clone(), s);
        // Jump right by one when the base window is 1 at the marker, else
        // stay.
        let mut table = BTreeMap::new();
        table.insert(a.parse_word("1").unwrap(), 1i64);
        table.insert(a.parse_word("0").unwrap(), 0i64);
        let rule = OrbitCocycle::new("step-on-one", 0, table, None).unwrap();
        let bm = BlockMap::marker_move(prod.alphabet().clone(), rule).unwrap();
        assert_eq!(bm.memory(), 1);

        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        let z = parse_point(&a, "|0^omega <0@0> |0^omega").unwrap();
        // Marker sits where the base is 1: it hops one step right.
        let p = prod.zip_points(&x, &x).unwrap();
        let q = bm.apply_to_point(&p).unwrap();
        assert_eq!(q, prod.zip_points(&x, &x.shift(1)).unwrap());
        // Marker over a zero base stays put.
        let p = prod.zip_points(&x.shift(5), &x).unwrap();
        let q = bm.apply_to_point(&p).unwrap();
        assert_eq!(q, p);
        // No marker: fixed.
        let p = prod.zip_points(&x, &z).unwrap();
        assert_eq!(bm.apply_to_point(&p).unwrap(), p);
    }

    #[test]
    fn inverse_automorphism_swaps_rules() {
        let a = binary();
        let sigma = Automorphism::shift_power(a, 1);
        let inv = sigma.inverse_automorphism();
        for p in sample_points() {
            assert_eq!(inv.apply(&p).unwrap(), p.shift(-1));
        }
    }
}
