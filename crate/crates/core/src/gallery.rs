//! Built-in worked examples: spaces, declared pair families, marker-rule
//! automorphisms, and the exact expectation identity they satisfy.
//!
//! The centerpiece is the single-marker space: the orbit closure of one
//! point carrying a lone 1 over a zero background. Products `base x marker`
//! host an embedding of marker dynamics: a jump rule on base windows moves
//! the marker, and a window-level certificate proves the move is invertible
//! before the automorphism is assembled.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::Ratio;

use crate::alphabet::{Alphabet, SymbolId, Word};
use crate::asymptotic::CalibratedPair;
use crate::automorphism::{Automorphism, BlockMap, OrbitCocycle};
use crate::drift::PipelineConfig;
use crate::error::{Error, Result};
use crate::measure::{CAFamily, Cylinder, PairSchema, Slot};
use crate::point::{parse_point, Point};
use crate::space::{ShiftSpace, SoficAutomaton};

/// The point with a single 1 at the origin over zeros.
pub fn single_marker_point() -> Point {
    parse_point(&Alphabet::binary(), "|0^omega <1@0> |0^omega").unwrap()
}

/// The all-zero point.
pub fn all_zero_point() -> Point {
    parse_point(&Alphabet::binary(), "|0^omega <0@0> |0^omega").unwrap()
}

/// The alternating point `... 0 1 0 1 ...` with a 0 at the origin.
pub fn alternating_point() -> Point {
    parse_point(&Alphabet::binary(), "|1,0^omega <@0> |0,1^omega").unwrap()
}

/// The single-marker space and its declared two-element family of
/// calibrated pairs: marker against background, in both orders.
pub fn sunny_side_up() -> (Arc<ShiftSpace>, CAFamily) {
    let space =
        ShiftSpace::orbit_closure("sunny-side-up", Alphabet::binary(), vec![single_marker_point()])
            .expect("marker space is well formed");
    let family = CAFamily::new(
        "CA(sunny-side-up)",
        Arc::clone(&space),
        vec![
            PairSchema::Fixed(
                CalibratedPair::new(single_marker_point(), all_zero_point()).unwrap(),
            ),
            PairSchema::Fixed(
                CalibratedPair::new(all_zero_point(), single_marker_point()).unwrap(),
            ),
        ],
    )
    .expect("marker family is well formed");
    (space, family)
}

/// Orbit closure of the alternating point: two phases, no asymptotic pairs.
pub fn alternating_space() -> Arc<ShiftSpace> {
    ShiftSpace::orbit_closure("alternating", Alphabet::binary(), vec![alternating_point()])
        .expect("alternating space is well formed")
}

/// The binary full shift, presented by a one-state automaton.
pub fn full_shift_space() -> Arc<ShiftSpace> {
    let aut = SoficAutomaton::new(
        vec!["q".into()],
        vec![(0, SymbolId(0), 0), (0, SymbolId(1), 0)],
    )
    .unwrap();
    ShiftSpace::sofic("full-shift", Alphabet::binary(), aut).expect("full shift is well formed")
}

/// `base x marker-lane` with its declared pair family: marker-lane
/// differences over a shared free base point, plus, when a base family is
/// supplied, base differences over a shared free marker lane. The base
/// family must consist of fixed pairs.
pub fn product_with_marker_lane(
    name: impl Into<String>,
    base: &Arc<ShiftSpace>,
    base_family: Option<&CAFamily>,
) -> Result<(Arc<ShiftSpace>, CAFamily)> {
    let (lane, lane_family) = sunny_side_up();
    let space = ShiftSpace::product(name, Arc::clone(base), lane);
    let mut schemas = Vec::new();
    for schema in lane_family.schemas() {
        let PairSchema::Fixed(p) = schema else { unreachable!("lane family is fixed") };
        schemas.push(PairSchema::SharedFree {
            free_slot: Slot::Left,
            template_x: p.x().clone(),
            template_y: p.y().clone(),
        });
    }
    if let Some(bf) = base_family {
        for schema in bf.schemas() {
            let PairSchema::Fixed(p) = schema else {
                return Err(Error::input(
                    "base family must consist of fixed pairs to lift into the product",
                ));
            };
            schemas.push(PairSchema::SharedFree {
                free_slot: Slot::Right,
                template_x: p.x().clone(),
                template_y: p.y().clone(),
            });
        }
    }
    let family = CAFamily::new(
        format!("CA({})", space.name()),
        Arc::clone(&space),
        schemas,
    )?;
    Ok((space, family))
}

/// Certifies that the jump rule moves markers bijectively over every base
/// window, and tabulates the inverse jumps. For each base word of length
/// `2*(radius + max_jump) + 1` exactly one offset `m` must satisfy
/// `m + N(window at m) = 0`; that `m` is the inverse jump at the center.
fn certify_marker_bijection(
    base: &ShiftSpace,
    rule: &OrbitCocycle,
) -> Result<BTreeMap<Word, i64>> {
    let r = rule.radius() as i64;
    let reach = rule.max_abs();
    let half = (r + reach) as usize;
    let mut inverse = BTreeMap::new();
    for w in base.words(2 * half + 1)? {
        let center = half as i64;
        let mut hits = Vec::new();
        for m in -reach..=reach {
            let lo = (center + m - r) as usize;
            let hi = (center + m + r) as usize;
            let sub = w.slice(lo, hi + 1);
            if m + rule.evaluate(&sub)? == 0 {
                hits.push(m);
            }
        }
        match hits.len() {
            1 => {
                inverse.insert(w, hits[0]);
            }
            0 => {
                return Err(Error::InvalidCocycle(format!(
                    "jump rule {} strands base window {}: no marker lands at its center",
                    rule.name(),
                    base.alphabet().render_word(&w)
                )));
            }
            _ => {
                return Err(Error::InvalidCocycle(format!(
                    "jump rule {} collides on base window {}: {} markers land at its center",
                    rule.name(),
                    base.alphabet().render_word(&w),
                    hits.len()
                )));
            }
        }
    }
    Ok(inverse)
}

/// Builds the automorphism of `base x marker-lane` that transports the
/// marker by the jump rule evaluated on the base window under it. The rule
/// is certified bijective window-by-window; the certificate also yields the
/// inverse rule.
pub fn embed_marker_rule(product: &Arc<ShiftSpace>, rule: OrbitCocycle) -> Result<Automorphism> {
    let (base, lane) = product
        .components()
        .ok_or_else(|| Error::input("marker embedding needs a product space"))?;
    if *lane.alphabet() != Alphabet::binary() {
        return Err(Error::input("marker lane must use the binary alphabet"));
    }
    let expected: BTreeSet<Word> = marker_lane_words(5);
    if lane.words(5)? != expected {
        return Err(Error::input(
            "marker lane must be the single-marker space (radius-2 language mismatch)",
        ));
    }
    let inverse_table = certify_marker_bijection(base, &rule)?;
    let inverse_rule = OrbitCocycle::new(
        format!("{}^-1", rule.name()),
        rule.radius() + rule.max_abs() as usize,
        inverse_table,
        None,
    )?;
    let label = format!("embed[{}]", rule.name());
    Automorphism::new(
        label,
        BlockMap::marker_move(product.alphabet().clone(), rule)?,
        BlockMap::marker_move(product.alphabet().clone(), inverse_rule)?,
    )
}

/// Binary words of length `n` with at most one 1.
fn marker_lane_words(n: usize) -> BTreeSet<Word> {
    let mut out = BTreeSet::new();
    out.insert(Word(vec![SymbolId(0); n]));
    for i in 0..n {
        let mut w = vec![SymbolId(0); n];
        w[i] = SymbolId(1);
        out.insert(Word(w));
    }
    out
}

/// A finitely supported shift-invariant probability measure on base points.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMeasure {
    weights: BTreeMap<Point, Ratio<i64>>,
}

impl BaseMeasure {
    pub fn new(weights: BTreeMap<Point, Ratio<i64>>) -> Result<BaseMeasure> {
        if weights.is_empty() {
            return Err(Error::input("base measure needs at least one atom"));
        }
        let total: Ratio<i64> = weights.values().sum();
        if total != Ratio::from_integer(1) {
            return Err(Error::input(format!("base measure has total mass {total}, expected 1")));
        }
        for (p, w) in &weights {
            if weights.get(&p.shift(1)) != Some(w) {
                return Err(Error::input(
                    "base measure is not shift-invariant on its atoms",
                ));
            }
        }
        Ok(BaseMeasure { weights })
    }

    /// Uniform measure on the (finite) shift orbit of a periodic point.
    pub fn uniform_on_orbit(p: &Point) -> Result<BaseMeasure> {
        let cycle = p
            .periodic_cycle()
            .ok_or_else(|| Error::input("uniform orbit measure needs a periodic point"))?;
        let phases: BTreeSet<Point> = (0..cycle.len() as i64).map(|k| p.shift(k)).collect();
        let w = Ratio::new(1, phases.len() as i64);
        BaseMeasure::new(phases.into_iter().map(|q| (q, w)).collect())
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, Ratio<i64>)> {
        self.weights.iter().map(|(p, w)| (p, *w))
    }
}

/// The exact expectation of a jump rule under a base measure: the drift a
/// marker embedding contributes per marker, averaged over the base.
pub fn orbit_cocycle_expectation(mu: &BaseMeasure, rule: &OrbitCocycle) -> Result<Ratio<i64>> {
    let r = rule.radius() as i64;
    let mut acc = Ratio::from_integer(0);
    for (p, w) in mu.atoms() {
        acc += w * Ratio::from_integer(rule.evaluate(&p.window(-r, r)?)?);
    }
    Ok(acc)
}

/// Jump rule on the single-marker base: a marker just left of the base
/// marker steps onto it, one sitting on it hops over by two, one just right
/// stands still; far from the base marker everything drifts right by one.
pub fn hop_rule() -> OrbitCocycle {
    let a = Alphabet::binary();
    let mut table = BTreeMap::new();
    table.insert(a.parse_word("0,0,1").unwrap(), 1);
    table.insert(a.parse_word("0,1,0").unwrap(), 2);
    table.insert(a.parse_word("1,0,0").unwrap(), 0);
    OrbitCocycle::new("hop", 1, table, Some(1)).unwrap()
}

/// Jump rule on the single-marker base complementary to `hop_rule`: step
/// two onto the base marker's right flank, freeze on the marker, resume
/// past it.
pub fn slide_rule() -> OrbitCocycle {
    let a = Alphabet::binary();
    let mut table = BTreeMap::new();
    table.insert(a.parse_word("0,0,1").unwrap(), 2);
    table.insert(a.parse_word("0,1,0").unwrap(), 0);
    table.insert(a.parse_word("1,0,0").unwrap(), 1);
    OrbitCocycle::new("slide", 1, table, Some(1)).unwrap()
}

/// Constant jump by one; bijective over any base.
pub fn always_step_rule() -> OrbitCocycle {
    OrbitCocycle::new("always-step", 0, BTreeMap::new(), Some(1)).unwrap()
}

/// On the alternating base: step right off a 1, step left off a 0. Markers
/// swap in adjacent pairs, so the mean jump vanishes.
pub fn exchange_rule() -> OrbitCocycle {
    let a = Alphabet::binary();
    let mut table = BTreeMap::new();
    table.insert(a.parse_word("0,1,0").unwrap(), 1);
    table.insert(a.parse_word("1,0,1").unwrap(), -1);
    OrbitCocycle::new("exchange", 1, table, None).unwrap()
}

/// Mirror image of `exchange_rule`.
pub fn counter_exchange_rule() -> OrbitCocycle {
    let a = Alphabet::binary();
    let mut table = BTreeMap::new();
    table.insert(a.parse_word("0,1,0").unwrap(), -1);
    table.insert(a.parse_word("1,0,1").unwrap(), 1);
    OrbitCocycle::new("counter-exchange", 1, table, None).unwrap()
}

/// A packaged worked example: a family with automorphisms, cylinders, a
/// pipeline configuration, and exact expected drifts where the expectation
/// identity applies.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub name: String,
    pub description: String,
    pub family: CAFamily,
    pub autos: Vec<Automorphism>,
    pub cylinders: Vec<Cylinder>,
    pub config: PipelineConfig,
    /// `(automorphism label, exact expected drift)` from the base-measure
    /// expectation of the embedded jump rule.
    pub expectations: Vec<(String, Ratio<i64>)>,
}

impl GalleryEntry {
    pub fn space(&self) -> &Arc<ShiftSpace> {
        self.family.space()
    }
}

pub fn builtin_names() -> Vec<&'static str> {
    vec!["sunny-side-up", "sunny-product", "alternating-product", "full-shift"]
}

/// Builds a named worked example from scratch. Deterministic: repeated
/// calls yield identical entries.
pub fn builtin(name: &str) -> Result<GalleryEntry> {
    match name {
        "sunny-side-up" => {
            let (space, family) = sunny_side_up();
            let a = space.alphabet().clone();
            let autos = vec![
                Automorphism::shift_power(a.clone(), 1),
                Automorphism::shift_power(a.clone(), -1),
                Automorphism::shift_power(a, 2),
            ];
            let cylinders = vec![Cylinder::schema_window(&family, 0, 1)?];
            Ok(GalleryEntry {
                name: name.into(),
                description: "single marker over a zero background; two declared pairs".into(),
                family,
                autos,
                cylinders,
                config: PipelineConfig { n_max: 12, ..PipelineConfig::default() },
                expectations: vec![],
            })
        }
        "sunny-product" => {
            let (base, base_family) = sunny_side_up();
            let (space, family) =
                product_with_marker_lane("sunny-product", &base, Some(&base_family))?;
            let a = space.alphabet().clone();
            let autos = vec![
                Automorphism::shift_power(a.clone(), 1),
                Automorphism::shift_power(a.clone(), -1),
                Automorphism::shift_power(a.clone(), 2),
                Automorphism::shift_power(a.clone(), -2),
                Automorphism::identity(a.clone()),
                Automorphism::swap(a)?,
                embed_marker_rule(&space, hop_rule())?,
                embed_marker_rule(&space, slide_rule())?,
            ];
            let cylinders = vec![Cylinder::schema_window(&family, 0, 2)?];
            Ok(GalleryEntry {
                name: name.into(),
                description:
                    "marker lane over a free single-marker base; lane and base difference schemas"
                        .into(),
                family,
                autos,
                cylinders,
                config: PipelineConfig {
                    n_max: 24,
                    completeness_radius: Some(2),
                    ..PipelineConfig::default()
                },
                expectations: vec![],
            })
        }
        "alternating-product" => {
            let base = alternating_space();
            let (space, family) =
                product_with_marker_lane("alternating-product", &base, None)?;
            let a = space.alphabet().clone();
            let mu = BaseMeasure::uniform_on_orbit(&alternating_point())?;
            let rules = [always_step_rule(), exchange_rule(), counter_exchange_rule()];
            let mut autos = vec![Automorphism::shift_power(a, 1)];
            let mut expectations = Vec::new();
            for rule in rules {
                let expected = orbit_cocycle_expectation(&mu, &rule)?;
                let auto = embed_marker_rule(&space, rule)?;
                expectations.push((auto.label().to_string(), expected));
                autos.push(auto);
            }
            let cylinders = vec![Cylinder::schema_window(&family, 0, 1)?];
            Ok(GalleryEntry {
                name: name.into(),
                description:
                    "marker lane over the two-phase alternating base; drift matches the base \
                     expectation of each jump rule"
                        .into(),
                family,
                autos,
                cylinders,
                config: PipelineConfig { n_max: 16, ..PipelineConfig::default() },
                expectations,
            })
        }
        "full-shift" => {
            let space = full_shift_space();
            let family = CAFamily::new(
                "CA(full-shift)",
                Arc::clone(&space),
                vec![PairSchema::Fixed(
                    CalibratedPair::new(single_marker_point(), all_zero_point()).unwrap(),
                )],
            )?;
            let a = space.alphabet().clone();
            Ok(GalleryEntry {
                name: name.into(),
                description:
                    "positive-entropy control case; the drift pipeline must refuse it".into(),
                family,
                autos: vec![Automorphism::shift_power(a, 1)],
                cylinders: vec![],
                config: PipelineConfig::default(),
                expectations: vec![],
            })
        }
        _ => Err(Error::input(format!(
            "unknown gallery entry {name:?}; available: {}",
            builtin_names().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::{drift_cocycle, CalibratedPair};
    use crate::automorphism::verify_automorphism;
    use crate::drift::{drift_estimate, drift_pipeline};

    #[test]
    fn builtins_construct() {
        for name in builtin_names() {
            let entry = builtin(name).unwrap();
            assert_eq!(entry.name, name);
            assert!(!entry.autos.is_empty());
        }
        assert!(builtin("no-such-entry").is_err());
    }

    #[test]
    fn marker_family_declares_two_pairs() {
        let (_, family) = sunny_side_up();
        assert_eq!(family.declared_size(), Some(2));
    }

    #[test]
    fn hop_embedding_transports_markers() {
        let (base, base_family) = sunny_side_up();
        let (space, _) = product_with_marker_lane("SxS", &base, Some(&base_family)).unwrap();
        let hop = embed_marker_rule(&space, hop_rule()).unwrap();
        assert_eq!(hop.forward_memory(), 3);
        assert_eq!(hop.inverse_memory(), 5);

        let x = single_marker_point();
        let z = all_zero_point();
        // Marker on the base marker hops over it by two.
        let p = space.zip_points(&x, &x).unwrap();
        assert_eq!(hop.apply(&p).unwrap(), space.zip_points(&x, &x.shift(2)).unwrap());
        // Marker just left of the base marker steps onto it.
        let p = space.zip_points(&x, &x.shift(-1)).unwrap();
        assert_eq!(hop.apply(&p).unwrap(), space.zip_points(&x, &x).unwrap());
        // Marker just right of the base marker freezes.
        let p = space.zip_points(&x, &x.shift(1)).unwrap();
        assert_eq!(hop.apply(&p).unwrap(), p);
        // Far away it drifts by one.
        let p = space.zip_points(&x, &x.shift(9)).unwrap();
        assert_eq!(hop.apply(&p).unwrap(), space.zip_points(&x, &x.shift(10)).unwrap());
        // Empty lane is fixed.
        let p = space.zip_points(&x, &z).unwrap();
        assert_eq!(hop.apply(&p).unwrap(), p);

        verify_automorphism(&space, &hop, 3).unwrap();
    }

    #[test]
    fn non_bijective_rules_are_rejected() {
        let (base, base_family) = sunny_side_up();
        let (space, _) = product_with_marker_lane("SxS", &base, Some(&base_family)).unwrap();
        // Step right exactly on the base marker: collides with the stander
        // to its right.
        let a = Alphabet::binary();
        let mut table = BTreeMap::new();
        table.insert(a.parse_word("1").unwrap(), 1);
        table.insert(a.parse_word("0").unwrap(), 0);
        let bad = OrbitCocycle::new("step-on-one", 0, table, None).unwrap();
        let err = embed_marker_rule(&space, bad).unwrap_err();
        assert!(matches!(err, Error::InvalidCocycle(_)), "got {err}");
    }

    #[test]
    fn expectation_identity_on_the_alternating_base() {
        let entry = builtin("alternating-product").unwrap();
        let expected: Vec<Ratio<i64>> =
            entry.expectations.iter().map(|(_, e)| *e).collect();
        assert_eq!(
            expected,
            vec![Ratio::from_integer(1), Ratio::from_integer(0), Ratio::from_integer(0)]
        );
        // The pipeline's final drifts reproduce the expectations exactly.
        let report =
            drift_pipeline(&entry.family, &entry.autos, &entry.cylinders, &entry.config)
                .unwrap();
        for (label, e) in &entry.expectations {
            assert_eq!(report.final_drift(label), Some(*e), "{label}");
        }
    }

    #[test]
    fn exchange_embedding_drift_is_exactly_zero() {
        let entry = builtin("alternating-product").unwrap();
        let nu = entry.family.empirical_measure(8).unwrap();
        let exchange = &entry.autos[2];
        assert_eq!(exchange.label(), "embed[exchange]");
        let est = drift_estimate(exchange, &nu).unwrap();
        assert_eq!(est.value, Ratio::from_integer(0));
        // Individual pairs drift by +1 or -1 depending on the base phase.
        let mut seen = BTreeSet::new();
        for p in nu.support() {
            seen.insert(drift_cocycle(exchange, p).unwrap());
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![-1, 1]);
    }

    #[test]
    fn base_measure_requires_shift_invariance() {
        let p = alternating_point();
        let mu = BaseMeasure::uniform_on_orbit(&p).unwrap();
        assert_eq!(mu.atoms().count(), 2);
        // A single phase alone is not invariant.
        let mut weights = BTreeMap::new();
        weights.insert(p.clone(), Ratio::from_integer(1));
        assert!(BaseMeasure::new(weights).is_err());
        // Periodic requirement.
        assert!(BaseMeasure::uniform_on_orbit(&single_marker_point()).is_err());
    }

    #[test]
    fn swap_pairs_with_marker_embeds_in_one_group() {
        // The sunny-product entry's automorphisms all verify on the space.
        let entry = builtin("sunny-product").unwrap();
        let space = entry.space().clone();
        for auto in &entry.autos {
            verify_automorphism(&space, auto, 2).unwrap();
        }
        let p = CalibratedPair::new(
            space
                .zip_points(&single_marker_point(), &single_marker_point())
                .unwrap(),
            space.zip_points(&single_marker_point(), &all_zero_point()).unwrap(),
        )
        .unwrap();
        // Marker on the base marker hops two: the difference moves to 2.
        let hop = &entry.autos[6];
        assert_eq!(hop.label(), "embed[hop]");
        assert_eq!(drift_cocycle(hop, &p).unwrap(), 2);
    }
}
