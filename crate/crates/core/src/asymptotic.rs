//! Ordered asymptotic pairs, calibration, and the drift cocycle.
//!
//! Two points are (left) asymptotic when they agree on all coordinates below
//! some mark; the mark of a pair is the least coordinate where they differ.
//! Shifting both points moves the mark with them, so every pair calibrates
//! to a representative with mark 0. Automorphisms act on calibrated pairs by
//! mapping both points and recalibrating; the shift the recalibration
//! undoes is the drift cocycle.

use std::fmt;

use crate::automorphism::Automorphism;
use crate::error::{Error, Result};
use crate::point::{first_difference, FirstDifference, Point};

/// An ordered pair of distinct left-asymptotic points together with its
/// mark, the least coordinate where the points differ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AsymptoticPair {
    x: Point,
    y: Point,
    mark: i64,
}

/// Classifies an ordered pair of points, computing the mark exactly.
pub fn make_pair(x: Point, y: Point) -> Result<AsymptoticPair> {
    match first_difference(&x, &y)? {
        FirstDifference::Equal => Err(Error::EqualPoints),
        FirstDifference::NotAsymptotic => Err(Error::NotAsymptotic),
        FirstDifference::At(mark) => Ok(AsymptoticPair { x, y, mark }),
    }
}

impl AsymptoticPair {
    pub fn x(&self) -> &Point {
        &self.x
    }

    pub fn y(&self) -> &Point {
        &self.y
    }

    pub fn mark(&self) -> i64 {
        self.mark
    }
}

/// An asymptotic pair with mark 0: the points agree strictly left of the
/// origin and differ there.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalibratedPair {
    x: Point,
    y: Point,
}

/// Shifts both points of a pair so the mark lands on 0. Idempotent: a pair
/// with mark 0 is returned unchanged.
pub fn calibrate(p: &AsymptoticPair) -> CalibratedPair {
    CalibratedPair { x: p.x.shift(-p.mark), y: p.y.shift(-p.mark) }
}

impl CalibratedPair {
    pub fn new(x: Point, y: Point) -> Result<CalibratedPair> {
        let p = make_pair(x, y)?;
        if p.mark != 0 {
            return Err(Error::input(format!(
                "pair has mark {}, expected 0; calibrate it first",
                p.mark
            )));
        }
        Ok(CalibratedPair { x: p.x, y: p.y })
    }

    pub fn x(&self) -> &Point {
        &self.x
    }

    pub fn y(&self) -> &Point {
        &self.y
    }

    /// The opposite ordering. Calibration is symmetric in the two points, so
    /// this stays calibrated.
    pub fn reversed(&self) -> CalibratedPair {
        CalibratedPair { x: self.y.clone(), y: self.x.clone() }
    }

    pub fn as_pair(&self) -> AsymptoticPair {
        AsymptoticPair { x: self.x.clone(), y: self.y.clone(), mark: 0 }
    }
}

impl fmt::Display for CalibratedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ {}", self.x, self.y)
    }
}

/// `max(k, k')` over the two rules: the window within which the image mark
/// of a calibrated pair must land.
pub fn cocycle_bound(auto: &Automorphism) -> i64 {
    auto.forward_memory().max(auto.inverse_memory()) as i64
}

/// Radius controlling locality of the induced action: images of pairs that
/// agree out to `m + locality_radius` agree out to `m`.
pub fn locality_radius(auto: &Automorphism) -> i64 {
    auto.forward_memory() as i64 + cocycle_bound(auto)
}

/// Applies `auto` to both points and recalibrates, returning the image pair
/// and the drift (the mark of the raw image pair). The mark is located
/// exactly; a mark outside `[-cocycle_bound, cocycle_bound]`, a collapsed
/// pair, or a non-asymptotic image is an invariant violation, never retried
/// with a wider window.
pub fn act_with_drift(auto: &Automorphism, p: &CalibratedPair) -> Result<(CalibratedPair, i64)> {
    let fx = auto.apply(&p.x)?;
    let fy = auto.apply(&p.y)?;
    let mark = match first_difference(&fx, &fy)? {
        FirstDifference::At(m) => m,
        FirstDifference::Equal => {
            return Err(Error::invariant(format!(
                "{} collapsed a calibrated pair to a single point",
                auto.label()
            )));
        }
        FirstDifference::NotAsymptotic => {
            return Err(Error::invariant(format!(
                "{} mapped a calibrated pair to a non-asymptotic pair",
                auto.label()
            )));
        }
    };
    let bound = cocycle_bound(auto);
    if mark.abs() > bound {
        return Err(Error::invariant(format!(
            "drift {mark} of {} exceeds its window bound {bound}",
            auto.label()
        )));
    }
    Ok((CalibratedPair { x: fx.shift(-mark), y: fy.shift(-mark) }, mark))
}

/// The induced action on calibrated pairs.
pub fn act(auto: &Automorphism, p: &CalibratedPair) -> Result<CalibratedPair> {
    Ok(act_with_drift(auto, p)?.0)
}

/// The drift cocycle `c(auto, p)`: how far `auto` pushes the mark of `p`.
pub fn drift_cocycle(auto: &Automorphism, p: &CalibratedPair) -> Result<i64> {
    Ok(act_with_drift(auto, p)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::point::parse_point;
    use crate::space::ShiftSpace;
    use std::sync::Arc;

    fn binary() -> Arc<Alphabet> {
        Alphabet::binary()
    }

    fn marker() -> Point {
        parse_point(&binary(), "|0^omega <1@0> |0^omega").unwrap()
    }

    fn zeros() -> Point {
        parse_point(&binary(), "|0^omega <0@0> |0^omega").unwrap()
    }

    #[test]
    fn make_pair_classifies() {
        let x = marker();
        let z = zeros();
        assert_eq!(make_pair(x.clone(), z.clone()).unwrap().mark(), 0);
        assert_eq!(make_pair(x.shift(7), z.clone()).unwrap().mark(), 7);
        assert!(matches!(make_pair(x.clone(), x.clone()), Err(Error::EqualPoints)));
        let p01 = parse_point(&binary(), "|1,0^omega <@0> |0,1^omega").unwrap();
        assert!(matches!(make_pair(p01, z), Err(Error::NotAsymptotic)));
    }

    #[test]
    fn calibrate_lands_mark_on_zero_and_is_idempotent() {
        let x = marker();
        let z = zeros();
        for k in [-9i64, -1, 0, 3, 20] {
            let p = make_pair(x.shift(k), z.clone()).unwrap();
            assert_eq!(p.mark(), k);
            let c = calibrate(&p);
            assert_eq!(make_pair(c.x().clone(), c.y().clone()).unwrap().mark(), 0);
            let again = calibrate(&c.as_pair());
            assert_eq!(again, c);
        }
    }

    #[test]
    fn mark_is_shift_equivariant() {
        let x = marker();
        let z = zeros();
        let base = make_pair(x.clone(), z.clone()).unwrap().mark();
        for k in -50i64..=50 {
            let p = make_pair(x.shift(k), z.shift(k)).unwrap();
            assert_eq!(p.mark(), base + k);
        }
    }

    #[test]
    fn shift_powers_drift_by_their_exponent() {
        let a = binary();
        let p = CalibratedPair::new(marker(), zeros()).unwrap();
        for k in -5i64..=5 {
            let sigma_k = Automorphism::shift_power(a.clone(), k);
            let (q, drift) = act_with_drift(&sigma_k, &p).unwrap();
            assert_eq!(drift, k);
            // Recalibration undoes the shift: the induced action of a shift
            // power fixes every calibrated pair.
            assert_eq!(q, p);
            assert!(drift.abs() <= cocycle_bound(&sigma_k));
        }
    }

    #[test]
    fn swap_has_zero_drift_and_swaps_components() {
        let a = binary();
        let s = ShiftSpace::orbit_closure("S", a, vec![marker()]).unwrap();
        let prod = ShiftSpace::product("SxS", s.clone(), s);
        let swap = Automorphism::swap(prod.alphabet().clone()).unwrap();
        let p = CalibratedPair::new(
            prod.zip_points(&marker(), &marker()).unwrap(),
            prod.zip_points(&marker(), &zeros()).unwrap(),
        )
        .unwrap();
        let (q, drift) = act_with_drift(&swap, &p).unwrap();
        assert_eq!(drift, 0);
        assert_eq!(
            q.x(),
            &prod.zip_points(&marker(), &marker()).unwrap()
        );
        assert_eq!(q.y(), &prod.zip_points(&zeros(), &marker()).unwrap());
    }

    #[test]
    fn cocycle_relation_for_shift_words() {
        let a = binary();
        let p = CalibratedPair::new(marker(), zeros()).unwrap();
        for (i, j) in [(1i64, 2i64), (2, -1), (-3, 3), (0, 4)] {
            let f = Automorphism::shift_power(a.clone(), i);
            let g = Automorphism::shift_power(a.clone(), j);
            let fg = f.compose(&g).unwrap();
            let lhs = drift_cocycle(&fg, &p).unwrap();
            let rhs = drift_cocycle(&f, &act(&g, &p).unwrap()).unwrap()
                + drift_cocycle(&g, &p).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn reversed_pairs_stay_calibrated() {
        let p = CalibratedPair::new(marker(), zeros()).unwrap();
        let r = p.reversed();
        assert_eq!(r.x(), p.y());
        assert_eq!(r.reversed(), p);
    }
}
