//! Drift estimation and the staged pipeline.
//!
//! The drift of an automorphism under an empirical measure is the average of
//! the drift cocycle over the support. Stages run at increasing window
//! radii chosen to keep the family's extension ratio small; each stage
//! carries a certificate recording the quantities that bound how far the
//! finite-stage average can sit from an invariant one.

use num_rational::Ratio;

use crate::asymptotic::{act, drift_cocycle, locality_radius};
use crate::automorphism::{verify_automorphism, Automorphism};
use crate::error::{Error, Result};
use crate::measure::{
    check_family_soundness, completeness_gap, invariance_defect, select_window_sequence, CAFamily,
    Cylinder, EmpiricalMeasure,
};
use crate::space::ZeroEntropyCertificate;

/// The average drift of one automorphism at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub auto_label: String,
    pub radius: usize,
    pub value: Ratio<i64>,
}

/// Stage-level quantities controlling the invariance error: extension ratio
/// `r`, unique-extension fraction `u`, locality radius `b`, and the bound
/// `2(1-u) + 2(r-1) + 4b/(2n+1)` they assemble into.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate {
    pub radius: usize,
    pub extension_ratio: Ratio<i64>,
    pub unique_fraction: Ratio<i64>,
    pub locality: i64,
    pub bound: Ratio<i64>,
}

impl DriftCertificate {
    fn assemble(radius: usize, r: Ratio<i64>, u: Ratio<i64>, locality: i64) -> DriftCertificate {
        let one = Ratio::from_integer(1);
        let two = Ratio::from_integer(2);
        let bound = two * (one - u) + two * (r - one)
            + Ratio::new(4 * locality, 2 * radius as i64 + 1);
        DriftCertificate { radius, extension_ratio: r, unique_fraction: u, locality, bound }
    }
}

/// Averages the drift cocycle of `auto` over `nu`. The measure must be wide
/// enough to see the automorphism act locally.
pub fn drift_estimate(auto: &Automorphism, nu: &EmpiricalMeasure) -> Result<DriftEstimate> {
    let b = locality_radius(auto) as usize;
    if nu.radius() < b {
        return Err(Error::input(format!(
            "measure radius {} is below the locality radius {b} of {}",
            nu.radius(),
            auto.label()
        )));
    }
    let value = nu.average(|p| drift_cocycle(auto, p))?;
    Ok(DriftEstimate { auto_label: auto.label().to_string(), radius: nu.radius(), value })
}

/// `|Phi(ab) - Phi(a) - Phi(b)|` at one measure: the failure of additivity
/// at a finite stage. Exact zero whenever the measure is invariant enough.
pub fn additivity_defect(
    a: &Automorphism,
    b: &Automorphism,
    nu: &EmpiricalMeasure,
) -> Result<Ratio<i64>> {
    let ab = a.compose(b)?;
    let d = drift_estimate(&ab, nu)?.value
        - drift_estimate(a, nu)?.value
        - drift_estimate(b, nu)?.value;
    Ok(if d < Ratio::from_integer(0) { -d } else { d })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Number of window stages.
    pub stages: usize,
    /// Largest window radius the selection may use.
    pub n_max: usize,
    /// Extension step `m` for ratios and unique-extension fractions.
    pub extension_step: usize,
    /// Empirical entropy threshold for presentations without a structural
    /// zero-entropy certificate.
    pub entropy_threshold: f64,
    /// Block length for the empirical entropy estimate.
    pub entropy_check_len: usize,
    /// Lengths scanned for a complexity plateau (finite-shift refusal).
    pub infinite_check_len: usize,
    /// Output length for automorphism language-preservation checks.
    pub verify_len: usize,
    /// Radius for the family completeness diagnostic; `None` skips it.
    pub completeness_radius: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: 3,
            n_max: 16,
            extension_step: 2,
            entropy_threshold: 0.05,
            entropy_check_len: 10,
            infinite_check_len: 8,
            verify_len: 3,
            completeness_radius: Some(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub radius: usize,
    pub support_size: usize,
    pub certificate: DriftCertificate,
    /// Drift of the generating shift; the pipeline asserts it is exactly 1.
    pub sigma_drift: Ratio<i64>,
    pub drifts: Vec<DriftEstimate>,
    /// `(auto label, cylinder label, defect)`.
    pub invariance_defects: Vec<(String, String, Ratio<i64>)>,
    /// `(left label, right label, defect)` over ordered pairs of autos.
    pub additivity_defects: Vec<(String, String, Ratio<i64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub space_name: String,
    pub family_name: String,
    pub zero_entropy: ZeroEntropyCertificate,
    pub stage_radii: Vec<usize>,
    pub stages: Vec<StageReport>,
    pub warnings: Vec<String>,
}

impl PipelineReport {
    pub fn final_stage(&self) -> &StageReport {
        self.stages.last().expect("pipeline produces at least one stage")
    }

    pub fn final_drift(&self, auto_label: &str) -> Option<Ratio<i64>> {
        self.final_stage()
            .drifts
            .iter()
            .find(|d| d.auto_label == auto_label)
            .map(|d| d.value)
    }
}

/// Runs the staged estimation end to end:
/// guards (infinite language, zero entropy), automorphism verification,
/// family soundness, window selection, and per-stage drift, invariance, and
/// additivity statistics. Every stage asserts the generating shift has
/// drift exactly 1.
pub fn drift_pipeline(
    family: &CAFamily,
    autos: &[Automorphism],
    cylinders: &[Cylinder],
    config: &PipelineConfig,
) -> Result<PipelineReport> {
    let space = family.space();
    space.check_infinite(config.infinite_check_len)?;
    let zero_entropy =
        space.certify_zero_entropy(config.entropy_threshold, config.entropy_check_len)?;

    let sigma = Automorphism::shift_power(space.alphabet().clone(), 1);
    for auto in autos {
        verify_automorphism(space, auto, config.verify_len)?;
    }

    // Radius floor: every stage must accommodate the locality of each
    // automorphism, of each ordered composition (for additivity), and of
    // each cylinder test.
    let mut floor = locality_radius(&sigma) as usize;
    for a in autos {
        floor = floor.max(locality_radius(a) as usize);
        for b in autos {
            floor = floor.max(locality_radius(&a.compose(b)?) as usize);
        }
        for cyl in cylinders {
            floor = floor.max(cyl.radius() + locality_radius(a) as usize);
        }
    }
    if floor > config.n_max {
        return Err(Error::input(format!(
            "n-max {} is below the required radius floor {floor}",
            config.n_max
        )));
    }

    let radii = select_window_sequence(
        family,
        floor,
        config.n_max,
        config.extension_step,
        config.stages,
    )?;
    check_family_soundness(family, radii[0])?;

    let mut warnings = Vec::new();
    if let Some(r) = config.completeness_radius {
        let gap = completeness_gap(family, r)?;
        if !gap.is_empty() {
            warnings.push(format!(
                "family {} leaves {} radius-{r} shadow word pairs uncovered; \
                 drift values are relative to the declared family",
                family.name(),
                gap.len()
            ));
        }
    }

    let locality = autos
        .iter()
        .chain(std::iter::once(&sigma))
        .map(locality_radius)
        .max()
        .unwrap();

    let mut stages = Vec::with_capacity(radii.len());
    for &n in &radii {
        let nu = family.empirical_measure(n)?;
        let certificate = DriftCertificate::assemble(
            n,
            family.extension_ratio(n, config.extension_step)?,
            family.unique_extension_fraction(n, config.extension_step)?,
            locality,
        );
        let sigma_drift = drift_estimate(&sigma, &nu)?.value;
        if sigma_drift != Ratio::from_integer(1) {
            return Err(Error::invariant(format!(
                "stage radius {n}: generating shift has drift {sigma_drift}, expected 1"
            )));
        }
        let drifts = autos
            .iter()
            .map(|a| drift_estimate(a, &nu))
            .collect::<Result<Vec<_>>>()?;
        let mut invariance_defects = Vec::new();
        for a in autos {
            for cyl in cylinders {
                invariance_defects.push((
                    a.label().to_string(),
                    cyl.label().to_string(),
                    invariance_defect(a, &nu, cyl)?,
                ));
            }
        }
        let mut additivity_defects = Vec::new();
        for a in autos {
            for b in autos {
                additivity_defects.push((
                    a.label().to_string(),
                    b.label().to_string(),
                    additivity_defect(a, b, &nu)?,
                ));
            }
        }
        stages.push(StageReport {
            radius: n,
            support_size: nu.len(),
            certificate,
            sigma_drift,
            drifts,
            invariance_defects,
            additivity_defects,
        });
    }

    Ok(PipelineReport {
        space_name: space.name().to_string(),
        family_name: family.name().to_string(),
        zero_entropy,
        stage_radii: radii,
        stages,
        warnings,
    })
}

/// Induced-action check: composing automorphisms then acting equals acting
/// twice, over every support pair of the measure. Returns the number of
/// pairs checked.
pub fn check_action_homomorphism(
    a: &Automorphism,
    b: &Automorphism,
    nu: &EmpiricalMeasure,
) -> Result<usize> {
    let ab = a.compose(b)?;
    let mut checked = 0;
    for p in nu.support() {
        let direct = act(&ab, p)?;
        let stepped = act(a, &act(b, p)?)?;
        if direct != stepped {
            return Err(Error::invariant(format!(
                "induced action of {} differs from acting by {} then {}",
                ab.label(),
                b.label(),
                a.label()
            )));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Cocycle relation `c(ab, p) = c(a, b.p) + c(b, p)` over every support
/// pair. Returns the number of pairs checked.
pub fn check_cocycle_relation(
    a: &Automorphism,
    b: &Automorphism,
    nu: &EmpiricalMeasure,
) -> Result<usize> {
    let ab = a.compose(b)?;
    let mut checked = 0;
    for p in nu.support() {
        let lhs = drift_cocycle(&ab, p)?;
        let rhs = drift_cocycle(a, &act(b, p)?)? + drift_cocycle(b, p)?;
        if lhs != rhs {
            return Err(Error::invariant(format!(
                "cocycle relation fails for {} after {}: {lhs} != {rhs}",
                a.label(),
                b.label()
            )));
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::asymptotic::CalibratedPair;
    use crate::measure::PairSchema;
    use crate::point::{parse_point, Point};
    use crate::space::{ShiftSpace, SoficAutomaton};
    use crate::SymbolId;
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

    fn sunny_family() -> CAFamily {
        let s = ShiftSpace::orbit_closure("S", binary(), vec![marker()]).unwrap();
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

    #[test]
    fn shift_powers_estimate_to_their_exponent() {
        let fam = sunny_family();
        let nu = fam.empirical_measure(12).unwrap();
        for k in -5i64..=5 {
            let a = Automorphism::shift_power(binary(), k);
            let est = drift_estimate(&a, &nu).unwrap();
            assert_eq!(est.value, Ratio::from_integer(k));
        }
        // Radius below locality is refused.
        let a = Automorphism::shift_power(binary(), 5);
        let thin = fam.empirical_measure(4).unwrap();
        assert!(drift_estimate(&a, &thin).is_err());
    }

    #[test]
    fn additivity_is_exact_for_shift_words() {
        let fam = sunny_family();
        let nu = fam.empirical_measure(10).unwrap();
        for (i, j) in [(1i64, 1i64), (2, -1), (-2, -2)] {
            let a = Automorphism::shift_power(binary(), i);
            let b = Automorphism::shift_power(binary(), j);
            assert_eq!(additivity_defect(&a, &b, &nu).unwrap(), Ratio::from_integer(0));
            assert!(check_action_homomorphism(&a, &b, &nu).unwrap() > 0);
            assert!(check_cocycle_relation(&a, &b, &nu).unwrap() > 0);
        }
    }

    #[test]
    fn pipeline_runs_on_the_marker_space() {
        let fam = sunny_family();
        let autos = vec![
            Automorphism::shift_power(binary(), 2),
            Automorphism::shift_power(binary(), -1),
        ];
        let cyl = Cylinder::schema_window(&fam, 0, 1).unwrap();
        let config = PipelineConfig { n_max: 12, ..PipelineConfig::default() };
        let report = drift_pipeline(&fam, &autos, &[cyl], &config).unwrap();
        assert_eq!(report.stages.len(), 3);
        // Constant ratio ties resolve to the smallest admissible radii.
        assert_eq!(report.stage_radii, vec![8, 9, 10]);
        for stage in &report.stages {
            assert_eq!(stage.sigma_drift, Ratio::from_integer(1));
            assert_eq!(stage.support_size, 2);
            assert_eq!(stage.certificate.unique_fraction, Ratio::from_integer(1));
            assert_eq!(stage.certificate.extension_ratio, Ratio::from_integer(1));
            // With u = r = 1 the bound is pure locality decay.
            assert_eq!(
                stage.certificate.bound,
                Ratio::new(4 * stage.certificate.locality, 2 * stage.radius as i64 + 1)
            );
            for (_, _, d) in &stage.invariance_defects {
                assert_eq!(*d, Ratio::from_integer(0));
            }
            for (_, _, d) in &stage.additivity_defects {
                assert_eq!(*d, Ratio::from_integer(0));
            }
        }
        assert_eq!(report.final_drift("sigma^2"), Some(Ratio::from_integer(2)));
        assert_eq!(report.final_drift("sigma^-1"), Some(Ratio::from_integer(-1)));
        // The declared family misses marker-marker shadow pairs: reported as
        // a warning, not a failure.
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn pipeline_refuses_positive_entropy_spaces() {
        let a = binary();
        let edges = vec![(0, SymbolId(0), 0), (0, SymbolId(1), 0)];
        let aut = SoficAutomaton::new(vec!["q".into()], edges).unwrap();
        let full = ShiftSpace::sofic("full", a, aut).unwrap();
        let fam = CAFamily::new(
            "CA(full)",
            full,
            vec![PairSchema::Fixed(CalibratedPair::new(marker(), zeros()).unwrap())],
        )
        .unwrap();
        let err = drift_pipeline(&fam, &[], &[], &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Refused(_)), "got {err}");
    }

    #[test]
    fn pipeline_rejects_too_small_n_max() {
        let fam = sunny_family();
        let autos = vec![Automorphism::shift_power(binary(), 4)];
        // sigma^4 composed with itself needs radius 16.
        let config = PipelineConfig { n_max: 10, ..PipelineConfig::default() };
        assert!(drift_pipeline(&fam, &autos, &[], &config).is_err());
    }
}
