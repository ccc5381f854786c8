//! Declared families of calibrated pairs and the stage-wise empirical
//! measures built on them.
//!
//! A family describes calibrated pairs by schema: either a concrete pair or
//! a template with one shared free coordinate ranging over a component
//! space. All statistics run at the word level: the radius-`n` word pairs
//! are the centered windows of instantiated pairs, each represented by a
//! deterministic realizing pair, and measures put uniform rational weight on
//! those representatives.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::Ratio;

use crate::alphabet::Word;
use crate::asymptotic::{act, locality_radius, make_pair, CalibratedPair};
use crate::automorphism::Automorphism;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::space::ShiftSpace;

/// Which coordinate of a product the free point occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Left,
    Right,
}

/// One way of producing calibrated pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSchema {
    /// A single concrete calibrated pair.
    Fixed(CalibratedPair),
    /// Pairs `(zip(y, t_x), zip(y, t_y))` (or mirrored, per `free_slot`)
    /// where `y` ranges over the free component space. The templates live in
    /// the other component and differ exactly at 0, so every instantiation
    /// is calibrated.
    SharedFree { free_slot: Slot, template_x: Point, template_y: Point },
}

/// Centered windows of a calibrated pair: equal length, agree strictly left
/// of the center, differ at the center.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WordPair {
    x: Word,
    y: Word,
}

impl WordPair {
    pub fn new(x: Word, y: Word) -> Result<WordPair> {
        if x.len() != y.len() || x.len().is_multiple_of(2) {
            return Err(Error::input("word pair needs equal odd lengths"));
        }
        let c = x.len() / 2;
        if x.0[..c] != y.0[..c] {
            return Err(Error::input("word pair must agree strictly left of center"));
        }
        if x.0[c] == y.0[c] {
            return Err(Error::input("word pair must differ at the center"));
        }
        Ok(WordPair { x, y })
    }

    pub fn x(&self) -> &Word {
        &self.x
    }

    pub fn y(&self) -> &Word {
        &self.y
    }

    pub fn radius(&self) -> usize {
        self.x.len() / 2
    }

    /// The central sub-pair of a smaller radius.
    pub fn central(&self, radius: usize) -> WordPair {
        debug_assert!(radius <= self.radius());
        WordPair { x: self.x.central(radius), y: self.y.central(radius) }
    }

    /// Windows of a calibrated pair at the given radius.
    pub fn of_pair(p: &CalibratedPair, radius: usize) -> Result<WordPair> {
        let n = radius as i64;
        WordPair::new(p.x().window(-n, n)?, p.y().window(-n, n)?)
    }
}

/// A named, declared family of calibrated pairs on a space. The family is a
/// generator description: computations are relative to what it declares, and
/// completeness against the ambient space is a separate diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct CAFamily {
    name: String,
    space: Arc<ShiftSpace>,
    schemas: Vec<PairSchema>,
}

impl CAFamily {
    pub fn new(name: impl Into<String>, space: Arc<ShiftSpace>, schemas: Vec<PairSchema>) -> Result<CAFamily> {
        if schemas.is_empty() {
            return Err(Error::input("family needs at least one schema"));
        }
        for schema in &schemas {
            match schema {
                PairSchema::Fixed(p) => {
                    if p.x().alphabet() != space.alphabet() {
                        return Err(Error::input("fixed pair alphabet does not match space"));
                    }
                    if !space.is_point_in(p.x())? || !space.is_point_in(p.y())? {
                        return Err(Error::input("fixed pair point is not a member of the space"));
                    }
                }
                PairSchema::SharedFree { free_slot, template_x, template_y } => {
                    let (l, r) = space
                        .components()
                        .ok_or_else(|| Error::input("shared-free schema needs a product space"))?;
                    let (_, tmpl_space) = match free_slot {
                        Slot::Left => (l, r),
                        Slot::Right => (r, l),
                    };
                    if template_x.alphabet() != tmpl_space.alphabet() {
                        return Err(Error::input("template alphabet does not match its component"));
                    }
                    if !tmpl_space.is_point_in(template_x)?
                        || !tmpl_space.is_point_in(template_y)?
                    {
                        return Err(Error::input("template point is not a member of its component"));
                    }
                    let mark = make_pair(template_x.clone(), template_y.clone())?.mark();
                    if mark != 0 {
                        return Err(Error::input(format!(
                            "template pair has mark {mark}, expected 0"
                        )));
                    }
                }
            }
        }
        Ok(CAFamily { name: name.into(), space, schemas })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<ShiftSpace> {
        &self.space
    }

    pub fn schemas(&self) -> &[PairSchema] {
        &self.schemas
    }

    /// Number of pairs the family declares, when that number is finite
    /// (i.e. every schema is a fixed pair).
    pub fn declared_size(&self) -> Option<usize> {
        if self.schemas.iter().all(|s| matches!(s, PairSchema::Fixed(_))) {
            Some(self.schemas.len())
        } else {
            None
        }
    }

    fn free_space(&self, slot: Slot) -> &Arc<ShiftSpace> {
        let (l, r) = self.space.components().expect("validated as product");
        match slot {
            Slot::Left => l,
            Slot::Right => r,
        }
    }

    /// Word pairs of one schema at the given radius.
    fn schema_word_pairs(&self, schema: &PairSchema, n: usize) -> Result<BTreeSet<WordPair>> {
        let mut out = BTreeSet::new();
        let h = n as i64;
        match schema {
            PairSchema::Fixed(p) => {
                out.insert(WordPair::of_pair(p, n)?);
            }
            PairSchema::SharedFree { free_slot, template_x, template_y } => {
                let tx = template_x.window(-h, h)?;
                let ty = template_y.window(-h, h)?;
                for w in self.free_space(*free_slot).words(2 * n + 1)? {
                    let (x, y) = match free_slot {
                        Slot::Left => (self.space.zip_word(&w, &tx), self.space.zip_word(&w, &ty)),
                        Slot::Right => (self.space.zip_word(&tx, &w), self.space.zip_word(&ty, &w)),
                    };
                    out.insert(WordPair::new(x, y)?);
                }
            }
        }
        Ok(out)
    }

    /// All word pairs of the family at radius `n`, sorted and deduplicated.
    pub fn word_pairs(&self, n: usize) -> Result<BTreeSet<WordPair>> {
        let mut out = BTreeSet::new();
        for schema in &self.schemas {
            out.extend(self.schema_word_pairs(schema, n)?);
        }
        Ok(out)
    }

    /// One deterministic calibrated pair realizing each word pair. When two
    /// schemas realize the same word pair the structurally least pair wins,
    /// so the projection onto word pairs is a bijection from the values.
    pub fn representatives(&self, n: usize) -> Result<BTreeMap<WordPair, CalibratedPair>> {
        let mut out: BTreeMap<WordPair, CalibratedPair> = BTreeMap::new();
        for schema in &self.schemas {
            match schema {
                PairSchema::Fixed(p) => {
                    insert_min(&mut out, WordPair::of_pair(p, n)?, p.clone());
                }
                PairSchema::SharedFree { free_slot, template_x, template_y } => {
                    for w in self.free_space(*free_slot).words(2 * n + 1)? {
                        let free = self.free_space(*free_slot).realize_centered(&w)?;
                        let (x, y) = match free_slot {
                            Slot::Left => (
                                self.space.zip_points(&free, template_x)?,
                                self.space.zip_points(&free, template_y)?,
                            ),
                            Slot::Right => (
                                self.space.zip_points(template_x, &free)?,
                                self.space.zip_points(template_y, &free)?,
                            ),
                        };
                        let pair = CalibratedPair::new(x, y)?;
                        insert_min(&mut out, WordPair::of_pair(&pair, n)?, pair);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Fraction of radius-`n` word pairs with exactly one radius-`n+m`
    /// extension in the family.
    pub fn unique_extension_fraction(&self, n: usize, m: usize) -> Result<Ratio<i64>> {
        if m == 0 {
            return Err(Error::input("extension step m must be positive"));
        }
        let small = self.word_pairs(n)?;
        let big = self.word_pairs(n + m)?;
        let mut counts: BTreeMap<WordPair, u64> = BTreeMap::new();
        for wp in &big {
            let c = wp.central(n);
            debug_assert!(small.contains(&c));
            *counts.entry(c).or_insert(0) += 1;
        }
        let unique = small
            .iter()
            .filter(|wp| counts.get(*wp).copied().unwrap_or(0) == 1)
            .count();
        Ok(Ratio::new(unique as i64, small.len() as i64))
    }

    /// `|W_{n+m}| / |W_n|`, the growth ratio the window selection minimizes.
    pub fn extension_ratio(&self, n: usize, m: usize) -> Result<Ratio<i64>> {
        let small = self.word_pairs(n)?.len() as i64;
        let big = self.word_pairs(n + m)?.len() as i64;
        Ok(Ratio::new(big, small))
    }

    /// Uniform rational measure on the radius-`n` representatives.
    pub fn empirical_measure(&self, n: usize) -> Result<EmpiricalMeasure> {
        let reps = self.representatives(n)?;
        let total = reps.len() as i64;
        let w = Ratio::new(1, total);
        Ok(EmpiricalMeasure {
            radius: n,
            weights: reps.into_values().map(|p| (p, w)).collect(),
        })
    }
}

fn insert_min(map: &mut BTreeMap<WordPair, CalibratedPair>, key: WordPair, pair: CalibratedPair) {
    match map.get_mut(&key) {
        Some(existing) => {
            if pair < *existing {
                *existing = pair;
            }
        }
        None => {
            map.insert(key, pair);
        }
    }
}

/// Picks `count` window radii from `[n_min, n_max]` with the smallest
/// extension ratios, ties to the smaller radius; returned in increasing
/// order.
pub fn select_window_sequence(
    family: &CAFamily,
    n_min: usize,
    n_max: usize,
    m: usize,
    count: usize,
) -> Result<Vec<usize>> {
    if n_min > n_max {
        return Err(Error::input("empty window range"));
    }
    if count == 0 || count > n_max - n_min + 1 {
        return Err(Error::input(format!(
            "cannot pick {count} windows from [{n_min}, {n_max}]"
        )));
    }
    let mut ranked: Vec<(Ratio<i64>, usize)> = (n_min..=n_max)
        .map(|n| Ok((family.extension_ratio(n, m)?, n)))
        .collect::<Result<_>>()?;
    ranked.sort();
    let mut chosen: Vec<usize> = ranked[..count].iter().map(|(_, n)| *n).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// A finitely supported rational measure on calibrated pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    radius: usize,
    weights: BTreeMap<CalibratedPair, Ratio<i64>>,
}

impl EmpiricalMeasure {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &CalibratedPair> {
        self.weights.keys()
    }

    pub fn weight(&self, p: &CalibratedPair) -> Ratio<i64> {
        self.weights.get(p).copied().unwrap_or_else(|| Ratio::new(0, 1))
    }

    pub fn total_mass(&self) -> Ratio<i64> {
        self.weights.values().sum()
    }

    /// Integrates an integer-valued observable.
    pub fn average<F>(&self, mut f: F) -> Result<Ratio<i64>>
    where
        F: FnMut(&CalibratedPair) -> Result<i64>,
    {
        let mut acc = Ratio::new(0, 1);
        for (p, w) in &self.weights {
            acc += w * Ratio::from_integer(f(p)?);
        }
        Ok(acc)
    }

    pub fn measure_of(&self, cyl: &Cylinder) -> Result<Ratio<i64>> {
        let mut acc = Ratio::new(0, 1);
        for (p, w) in &self.weights {
            if cyl.contains(p)? {
                acc += w;
            }
        }
        Ok(acc)
    }
}

/// An event determined by centered windows: a pair belongs to the cylinder
/// when its radius-`radius` word pair is in the set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    label: String,
    radius: usize,
    pairs: BTreeSet<WordPair>,
}

impl Cylinder {
    pub fn new(label: impl Into<String>, radius: usize, pairs: BTreeSet<WordPair>) -> Result<Cylinder> {
        for wp in &pairs {
            if wp.radius() != radius {
                return Err(Error::input("cylinder word pair radius mismatch"));
            }
        }
        Ok(Cylinder { label: label.into(), radius, pairs })
    }

    /// The cylinder of all radius-`radius` word pairs of one schema.
    pub fn schema_window(family: &CAFamily, schema_index: usize, radius: usize) -> Result<Cylinder> {
        let schema = family
            .schemas()
            .get(schema_index)
            .ok_or_else(|| Error::input(format!("family has no schema {schema_index}")))?;
        let pairs = family.schema_word_pairs(schema, radius)?;
        Cylinder::new(
            format!("{}[{schema_index}]@{radius}", family.name()),
            radius,
            pairs,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn word_pairs(&self) -> &BTreeSet<WordPair> {
        &self.pairs
    }

    pub fn contains(&self, p: &CalibratedPair) -> Result<bool> {
        Ok(self.pairs.contains(&WordPair::of_pair(p, self.radius)?))
    }
}

/// `|nu(auto^-1 C) - nu(C)|` on the empirical measure: how far `nu` is from
/// invariance, witnessed on one cylinder. The cylinder must be coarse enough
/// that images of support pairs are classified by their windows, hence the
/// radius precondition.
pub fn invariance_defect(
    auto: &Automorphism,
    nu: &EmpiricalMeasure,
    cyl: &Cylinder,
) -> Result<Ratio<i64>> {
    let b = locality_radius(auto) as usize;
    if cyl.radius() + b > nu.radius() {
        return Err(Error::input(format!(
            "cylinder radius {} plus locality {b} exceeds measure radius {}",
            cyl.radius(),
            nu.radius()
        )));
    }
    let mut pushed = Ratio::new(0, 1);
    for p in nu.support() {
        if cyl.contains(&act(auto, p)?)? {
            pushed += nu.weight(p);
        }
    }
    let direct = nu.measure_of(cyl)?;
    let d = pushed - direct;
    Ok(if d < Ratio::new(0, 1) { -d } else { d })
}

/// Word pairs the ambient language admits at radius `n`: both windows are
/// language words agreeing strictly left of center and differing there.
/// This is an over-approximation of what extends to genuine calibrated
/// pairs of points.
pub fn shadow_word_pairs(space: &ShiftSpace, n: usize) -> Result<BTreeSet<WordPair>> {
    let words = space.words(2 * n + 1)?;
    let mut by_prefix: BTreeMap<Word, Vec<&Word>> = BTreeMap::new();
    for w in &words {
        by_prefix.entry(w.slice(0, n)).or_default().push(w);
    }
    let mut out = BTreeSet::new();
    for group in by_prefix.values() {
        for x in group {
            for y in group {
                if x.0[n] != y.0[n] {
                    out.insert(WordPair::new((*x).clone(), (*y).clone())?);
                }
            }
        }
    }
    Ok(out)
}

/// Soundness: every representative is a genuine calibrated pair of member
/// points realizing its word pair. Violations are hard errors.
pub fn check_family_soundness(family: &CAFamily, n: usize) -> Result<()> {
    for (wp, rep) in family.representatives(n)? {
        if !family.space().is_point_in(rep.x())? || !family.space().is_point_in(rep.y())? {
            return Err(Error::invariant(format!(
                "family {} representative leaves the space",
                family.name()
            )));
        }
        if make_pair(rep.x().clone(), rep.y().clone())?.mark() != 0 {
            return Err(Error::invariant(format!(
                "family {} representative is not calibrated",
                family.name()
            )));
        }
        if WordPair::of_pair(&rep, n)? != wp {
            return Err(Error::invariant(format!(
                "family {} representative does not realize its word pair",
                family.name()
            )));
        }
    }
    Ok(())
}

/// Completeness diagnostic: shadow word pairs the family does not produce.
/// A nonempty gap means the declared family may not generate every
/// asymptotic pair of the space; callers report it as a warning, not an
/// error, since shadow pairs need not extend to genuine point pairs.
pub fn completeness_gap(family: &CAFamily, n: usize) -> Result<BTreeSet<WordPair>> {
    let shadow = shadow_word_pairs(family.space(), n)?;
    let own = family.word_pairs(n)?;
    for wp in &own {
        if !shadow.contains(wp) {
            return Err(Error::invariant(format!(
                "family {} word pair is not even a shadow pair",
                family.name()
            )));
        }
    }
    Ok(shadow.difference(&own).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::point::parse_point;

    fn binary() -> Arc<Alphabet> {
        Alphabet::binary()
    }

    fn marker() -> Point {
        parse_point(&binary(), "|0^omega <1@0> |0^omega").unwrap()
    }

    fn zeros() -> Point {
        parse_point(&binary(), "|0^omega <0@0> |0^omega").unwrap()
    }

    fn sunny_space() -> Arc<ShiftSpace> {
        ShiftSpace::orbit_closure("S", binary(), vec![marker()]).unwrap()
    }

    fn sunny_family() -> CAFamily {
        let s = sunny_space();
        CAFamily::new(
            "CA(S)",
            s,
            vec![
                PairSchema::Fixed(CalibratedPair::new(marker(), zeros()).unwrap()),
                PairSchema::Fixed(CalibratedPair::new(zeros(), marker()).unwrap()),
            ],
        )
        .unwrap()
    }

    fn product_family() -> CAFamily {
        let s = sunny_space();
        let prod = ShiftSpace::product("SxS", s.clone(), s);
        CAFamily::new(
            "CA(SxS)",
            prod,
            vec![
                PairSchema::SharedFree {
                    free_slot: Slot::Left,
                    template_x: marker(),
                    template_y: zeros(),
                },
                PairSchema::SharedFree {
                    free_slot: Slot::Left,
                    template_x: zeros(),
                    template_y: marker(),
                },
                PairSchema::SharedFree {
                    free_slot: Slot::Right,
                    template_x: marker(),
                    template_y: zeros(),
                },
                PairSchema::SharedFree {
                    free_slot: Slot::Right,
                    template_x: zeros(),
                    template_y: marker(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn fixed_family_counts() {
        let fam = sunny_family();
        assert_eq!(fam.declared_size(), Some(2));
        for n in 1..=6 {
            assert_eq!(fam.word_pairs(n).unwrap().len(), 2);
            assert_eq!(fam.unique_extension_fraction(n, 2).unwrap(), Ratio::new(1, 1));
            assert_eq!(fam.extension_ratio(n, 2).unwrap(), Ratio::new(1, 1));
        }
        check_family_soundness(&fam, 4).unwrap();
    }

    #[test]
    fn product_family_word_pair_counts() {
        let fam = product_family();
        assert_eq!(fam.declared_size(), None);
        for n in 1..=5 {
            assert_eq!(fam.word_pairs(n).unwrap().len(), 8 * n + 8, "radius {n}");
        }
        check_family_soundness(&fam, 3).unwrap();
    }

    #[test]
    fn product_family_extension_statistics() {
        let fam = product_family();
        // Free words with a visible marker extend uniquely; the all-zero
        // free word extends 1 + 2m ways per schema.
        assert_eq!(fam.unique_extension_fraction(3, 2).unwrap(), Ratio::new(7, 8));
        assert_eq!(fam.extension_ratio(3, 2).unwrap(), Ratio::new(3, 2));
    }

    #[test]
    fn window_selection_prefers_small_ratio_then_small_radius() {
        let fam = product_family();
        // Ratio (n+m+1)/(n+1) strictly decreases in n, so the largest radii
        // win.
        assert_eq!(select_window_sequence(&fam, 1, 5, 1, 2).unwrap(), vec![4, 5]);
        let sunny = sunny_family();
        // Constant ratio 1: ties resolve to the smallest radii.
        assert_eq!(select_window_sequence(&sunny, 2, 6, 1, 3).unwrap(), vec![2, 3, 4]);
        assert!(select_window_sequence(&sunny, 2, 3, 1, 5).is_err());
    }

    #[test]
    fn empirical_measure_is_uniform_probability() {
        let fam = product_family();
        let nu = fam.empirical_measure(3).unwrap();
        assert_eq!(nu.len(), 32);
        assert_eq!(nu.total_mass(), Ratio::new(1, 1));
        let w = Ratio::new(1, 32);
        for p in nu.support() {
            assert_eq!(nu.weight(p), w);
        }
    }

    #[test]
    fn schema_cylinder_mass() {
        let fam = product_family();
        let nu = fam.empirical_measure(3).unwrap();
        // Radius-2 free words over the marker space: 2*2+1+1 = 6 of them.
        let cyl = Cylinder::schema_window(&fam, 0, 2).unwrap();
        assert_eq!(cyl.word_pairs().len(), 6);
        assert_eq!(nu.measure_of(&cyl).unwrap(), Ratio::new(1, 4));
    }

    #[test]
    fn shift_and_swap_leave_empirical_measure_invariant() {
        let fam = product_family();
        let prod = fam.space().clone();
        let nu = fam.empirical_measure(4).unwrap();
        let cyl = Cylinder::schema_window(&fam, 0, 2).unwrap();
        let sigma = Automorphism::shift_power(prod.alphabet().clone(), 1);
        assert_eq!(invariance_defect(&sigma, &nu, &cyl).unwrap(), Ratio::new(0, 1));
        let swap = Automorphism::swap(prod.alphabet().clone()).unwrap();
        assert_eq!(invariance_defect(&swap, &nu, &cyl).unwrap(), Ratio::new(0, 1));
    }

    #[test]
    fn invariance_defect_rejects_fine_cylinders() {
        let fam = product_family();
        let nu = fam.empirical_measure(3).unwrap();
        let cyl = Cylinder::schema_window(&fam, 0, 3).unwrap();
        let sigma = Automorphism::shift_power(fam.space().alphabet().clone(), 1);
        // locality radius of sigma is 2, so radius 3 needs measure radius 5.
        assert!(invariance_defect(&sigma, &nu, &cyl).is_err());
    }

    #[test]
    fn shadow_gap_flags_undeclared_pairs() {
        // For the single-marker space the declared two-element family misses
        // the shadow pairs built from two shifted markers.
        let fam = sunny_family();
        let gap = completeness_gap(&fam, 2).unwrap();
        assert!(!gap.is_empty());
        let a = binary();
        let both = WordPair::new(
            a.parse_word("0,0,1,0,0").unwrap(),
            a.parse_word("0,0,0,1,0").unwrap(),
        )
        .unwrap();
        assert!(gap.contains(&both));
    }

    #[test]
    fn word_pair_validation() {
        let a = binary();
        assert!(WordPair::new(
            a.parse_word("0,1,0").unwrap(),
            a.parse_word("0,0,0").unwrap()
        )
        .is_ok());
        // Same center.
        assert!(WordPair::new(
            a.parse_word("0,1,0").unwrap(),
            a.parse_word("0,1,1").unwrap()
        )
        .is_err());
        // Prefix disagreement.
        assert!(WordPair::new(
            a.parse_word("1,1,0").unwrap(),
            a.parse_word("0,0,0").unwrap()
        )
        .is_err());
    }
}
