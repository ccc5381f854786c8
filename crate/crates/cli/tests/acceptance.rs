//! Acceptance gate for the whole workspace: twelve exact end-to-end checks
//! over the worked gallery, run as a plain binary so each criterion prints
//! its own pass/fail line. Tolerances and time budgets are pinned here; a
//! failing criterion fails the target.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftdrift_core::{
    act, always_step_rule, alternating_point, builtin, builtin_names, cocycle_bound,
    counter_exchange_rule, drift_cocycle, drift_estimate, exchange_rule, first_difference,
    locality_radius, orbit_cocycle_expectation, drift_pipeline, Automorphism, BaseMeasure,
    CalibratedPair, EmpiricalMeasure, Error, FirstDifference, WordPair,
};

struct Criterion {
    num: u32,
    name: &'static str,
    budget: Option<Duration>,
    body: fn(),
}

fn main() {
    let criteria = [
        Criterion {
            num: 1,
            name: "cocycle normalization",
            budget: Some(Duration::from_secs(1)),
            body: cocycle_normalization,
        },
        Criterion {
            num: 2,
            name: "mark equivariance",
            budget: None,
            body: mark_equivariance,
        },
        Criterion {
            num: 3,
            name: "action homomorphism",
            budget: Some(Duration::from_secs(10)),
            body: action_homomorphism,
        },
        Criterion {
            num: 4,
            name: "cocycle relation",
            budget: None,
            body: cocycle_relation,
        },
        Criterion {
            num: 5,
            name: "cocycle boundedness",
            budget: None,
            body: cocycle_boundedness,
        },
        Criterion {
            num: 6,
            name: "induced action locality",
            budget: None,
            body: induced_action_locality,
        },
        Criterion {
            num: 7,
            name: "sunny-side-up end-to-end",
            budget: Some(Duration::from_secs(1)),
            body: sunny_side_up_end_to_end,
        },
        Criterion {
            num: 8,
            name: "zero-entropy guard",
            budget: None,
            body: zero_entropy_guard,
        },
        Criterion {
            num: 9,
            name: "product window machinery",
            budget: Some(Duration::from_secs(60)),
            body: product_window_machinery,
        },
        Criterion {
            num: 10,
            name: "full-group drift identity",
            budget: Some(Duration::from_secs(5)),
            body: full_group_drift_identity,
        },
        Criterion {
            num: 11,
            name: "word complexity oracle",
            budget: None,
            body: word_complexity_oracle,
        },
        Criterion {
            num: 12,
            name: "deterministic report",
            budget: None,
            body: deterministic_report,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.body));
        let elapsed = started.elapsed();
        let within_budget = c.budget.is_none_or(|b| elapsed <= b);
        if outcome.is_ok() && within_budget {
            println!("ACCEPTANCE {:02} {}: PASS", c.num, c.name);
        } else if outcome.is_ok() {
            failed += 1;
            println!(
                "ACCEPTANCE {:02} {}: FAIL (took {:.3}s, budget {:.0?})",
                c.num,
                c.name,
                elapsed.as_secs_f64(),
                c.budget.unwrap()
            );
        } else {
            failed += 1;
            println!("ACCEPTANCE {:02} {}: FAIL", c.num, c.name);
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

/// Support of a family's empirical measure at the given radius, as owned
/// calibrated pairs.
fn support_at(entry_name: &str, radius: usize) -> Vec<CalibratedPair> {
    let entry = builtin(entry_name).expect("builtin entry");
    let nu = entry.family.empirical_measure(radius).expect("measure");
    nu.support().cloned().collect()
}

/// The drift of the generating shift is exactly 1 on every calibrated pair
/// of every gallery family.
fn cocycle_normalization() {
    for name in builtin_names() {
        let entry = builtin(name).unwrap();
        let sigma = Automorphism::shift_power(entry.space().alphabet().clone(), 1);
        let nu = entry.family.empirical_measure(6).unwrap();
        assert!(!nu.is_empty(), "{name}: empty support");
        for p in nu.support() {
            assert_eq!(
                drift_cocycle(&sigma, p).unwrap(),
                1,
                "{name}: shift drift must be 1"
            );
        }
    }
}

/// Shifting both points of an asymptotic pair by k moves the first
/// difference by exactly k; 200 seeded random (pair, offset, k) cases.
fn mark_equivariance() {
    let mut pool: Vec<CalibratedPair> = Vec::new();
    for name in builtin_names() {
        pool.extend(support_at(name, 5));
    }
    assert!(pool.len() > 20);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    for _ in 0..200 {
        let p = &pool[rng.gen_range(0..pool.len())];
        let j: i64 = rng.gen_range(-20..=20);
        let k: i64 = rng.gen_range(-50..=50);
        let x = p.x().shift(j);
        let y = p.y().shift(j);
        assert_eq!(first_difference(&x, &y).unwrap(), FirstDifference::At(j));
        assert_eq!(
            first_difference(&x.shift(k), &y.shift(k)).unwrap(),
            FirstDifference::At(j + k)
        );
    }
}

/// The eight product-gallery automorphisms and the radius-16 support used
/// for the homomorphism, relation, and bound matrices.
fn product_matrix() -> (Vec<Automorphism>, EmpiricalMeasure) {
    let entry = builtin("sunny-product").unwrap();
    assert_eq!(entry.autos.len(), 8);
    let nu = entry.family.empirical_measure(16).unwrap();
    (entry.autos, nu)
}

/// act(a, act(b, p)) = act(ab, p) over the full ordered automorphism matrix.
fn action_homomorphism() {
    let (autos, nu) = product_matrix();
    for a in &autos {
        for b in &autos {
            let checked =
                shiftdrift_core::check_action_homomorphism(a, b, &nu).unwrap_or_else(|e| {
                    panic!("{} after {}: {e}", a.label(), b.label());
                });
            assert_eq!(checked, nu.len());
        }
    }
}

/// c(ab, p) = c(a, b.p) + c(b, p) over the same matrix, exact integers.
fn cocycle_relation() {
    let (autos, nu) = product_matrix();
    for a in &autos {
        for b in &autos {
            let checked =
                shiftdrift_core::check_cocycle_relation(a, b, &nu).unwrap_or_else(|e| {
                    panic!("{} after {}: {e}", a.label(), b.label());
                });
            assert_eq!(checked, nu.len());
        }
    }
}

/// |c(a, p)| never exceeds the larger of the forward and inverse memories,
/// for the eight automorphisms and all 64 ordered compositions.
fn cocycle_boundedness() {
    let (autos, nu) = product_matrix();
    let mut tested = autos.clone();
    for a in &autos {
        for b in &autos {
            tested.push(a.compose(b).unwrap());
        }
    }
    for auto in &tested {
        let bound = cocycle_bound(auto);
        for p in nu.support() {
            let c = drift_cocycle(auto, p).unwrap();
            assert!(
                c.abs() <= bound,
                "{}: |{c}| > {bound}",
                auto.label()
            );
        }
    }
}

/// Pairs agreeing on a radius m+b window have images agreeing on radius m,
/// where b is the automorphism's locality radius; m up to 5.
fn induced_action_locality() {
    const M_MAX: usize = 5;
    let mut comparisons = 0usize;
    for name in builtin_names() {
        let entry = builtin(name).unwrap();
        let bmax = entry
            .autos
            .iter()
            .map(|a| locality_radius(a) as usize)
            .max()
            .unwrap_or(1);
        let support = support_at(name, bmax + M_MAX);
        for auto in &entry.autos {
            let b = locality_radius(auto) as usize;
            let sources: Vec<Vec<WordPair>> = support
                .iter()
                .map(|p| {
                    (0..=M_MAX)
                        .map(|m| WordPair::of_pair(p, m + b).unwrap())
                        .collect()
                })
                .collect();
            let images: Vec<Vec<WordPair>> = support
                .iter()
                .map(|p| {
                    let q = act(auto, p).unwrap();
                    (0..=M_MAX)
                        .map(|m| WordPair::of_pair(&q, m).unwrap())
                        .collect()
                })
                .collect();
            for i in 0..support.len() {
                for j in (i + 1)..support.len() {
                    for m in 0..=M_MAX {
                        if sources[i][m] == sources[j][m] {
                            comparisons += 1;
                            assert_eq!(
                                images[i][m], images[j][m],
                                "{name}/{}: images differ at radius {m}",
                                auto.label()
                            );
                        }
                    }
                }
            }
        }
    }
    assert!(comparisons > 0, "locality check was vacuous");
}

/// The two-pair family end to end: uniform measure, shift powers drift
/// exactly by their exponent, and every additivity defect vanishes.
fn sunny_side_up_end_to_end() {
    let entry = builtin("sunny-side-up").unwrap();
    assert_eq!(entry.family.declared_size(), Some(2));
    // Radius 10 covers the locality of shift^{+-5} below.
    let nu = entry.family.empirical_measure(10).unwrap();
    assert_eq!(nu.len(), 2);
    for p in nu.support() {
        assert_eq!(nu.weight(p), Ratio::new(1, 2));
    }
    let alphabet = entry.space().alphabet().clone();
    for k in -5..=5 {
        let a = Automorphism::shift_power(alphabet.clone(), k);
        let est = drift_estimate(&a, &nu).unwrap();
        assert_eq!(est.value, Ratio::from_integer(k), "drift of shift^{k}");
    }
    let report =
        drift_pipeline(&entry.family, &entry.autos, &entry.cylinders, &entry.config).unwrap();
    for stage in &report.stages {
        for (left, right, defect) in &stage.additivity_defects {
            assert_eq!(
                *defect,
                Ratio::from_integer(0),
                "additivity defect {left} + {right}"
            );
        }
    }
}

/// The full shift is refused with entropy estimate log 2; the two-pair
/// family passes with estimate log(31)/30 at block length 30.
fn zero_entropy_guard() {
    let full = builtin("full-shift").unwrap();
    let h10 = full.space().entropy_estimate(10).unwrap();
    assert!((h10 - 2.0f64.ln()).abs() < 1e-9);
    match drift_pipeline(&full.family, &full.autos, &full.cylinders, &full.config) {
        Err(Error::Refused(_)) => {}
        Err(other) => panic!("expected a refusal, got {other}"),
        Ok(_) => panic!("full shift must be refused"),
    }

    let sunny = builtin("sunny-side-up").unwrap();
    let h30 = sunny.space().entropy_estimate(30).unwrap();
    assert!((h30 - 31.0f64.ln() / 30.0).abs() < 1e-9);
    assert!(h30 <= 0.12);
    assert!(sunny.space().certify_zero_entropy(0.05, 10).is_ok());
}

/// Window statistics on the product family at large radius: abundant unique
/// extensions, small growth ratio, and a swap-invariance defect that stays
/// small and non-increasing across stages.
fn product_window_machinery() {
    let entry = builtin("sunny-product").unwrap();
    let family = &entry.family;

    let u = family.unique_extension_fraction(40, 2).unwrap();
    assert!(u >= Ratio::new(9, 10));
    assert_eq!(u, Ratio::new(81, 82));

    let r = family.extension_ratio(40, 2).unwrap();
    assert!(r <= Ratio::new(23, 20));
    assert_eq!(r, Ratio::new(43, 41));

    let mut config = entry.config.clone();
    config.stages = 3;
    config.n_max = 42;
    let report = drift_pipeline(family, &entry.autos, &entry.cylinders, &config).unwrap();
    assert_eq!(report.stage_radii, vec![40, 41, 42]);

    let cyl = &entry.cylinders[0];
    assert_eq!(cyl.radius(), 2);
    let defects: Vec<Ratio<i64>> = report
        .stages
        .iter()
        .map(|stage| {
            stage
                .invariance_defects
                .iter()
                .find(|(a, c, _)| a == "swap" && c == cyl.label())
                .map(|(_, _, d)| *d)
                .expect("swap defect recorded at every stage")
        })
        .collect();
    assert_eq!(defects.len(), 3);
    assert!(defects[2] <= Ratio::new(1, 10));
    assert!(defects[1] <= defects[0]);
    assert!(defects[2] <= defects[1]);
}

/// Embedded jump rules over the period-2 base: the pipeline drift equals
/// the base expectation of the jump exactly (1, 0, 0).
fn full_group_drift_identity() {
    let entry = builtin("alternating-product").unwrap();
    let base = BaseMeasure::uniform_on_orbit(&alternating_point()).unwrap();
    let expected = [
        (
            "embed[always-step]",
            orbit_cocycle_expectation(&base, &always_step_rule()).unwrap(),
        ),
        (
            "embed[exchange]",
            orbit_cocycle_expectation(&base, &exchange_rule()).unwrap(),
        ),
        (
            "embed[counter-exchange]",
            orbit_cocycle_expectation(&base, &counter_exchange_rule()).unwrap(),
        ),
    ];
    assert_eq!(expected[0].1, Ratio::from_integer(1));
    assert_eq!(expected[1].1, Ratio::from_integer(0));
    assert_eq!(expected[2].1, Ratio::from_integer(0));

    let report =
        drift_pipeline(&entry.family, &entry.autos, &entry.cylinders, &entry.config).unwrap();
    for (label, want) in &expected {
        let declared = entry
            .expectations
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| *v);
        assert_eq!(declared, Some(*want), "declared expectation for {label}");
        assert_eq!(
            report.final_drift(label),
            Some(*want),
            "pipeline drift for {label}"
        );
    }
}

/// The two-pair family's language has exactly n+1 words of each length,
/// matching a bit-level brute force over all binary words.
fn word_complexity_oracle() {
    let entry = builtin("sunny-side-up").unwrap();
    let space = entry.space();
    for n in 1..=20usize {
        let mut brute = 0u64;
        for bits in 0u64..(1u64 << n) {
            if bits.count_ones() <= 1 {
                brute += 1;
            }
        }
        assert_eq!(brute, n as u64 + 1);
        assert_eq!(space.count_words(n).unwrap(), brute, "P({n})");
    }
}

/// Two runs of the drift report over the shipped gallery spec produce
/// byte-identical output.
fn deterministic_report() {
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/../../specs/gallery.spec");
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_shiftdrift"))
            .args(["drift", "--spec", spec])
            .output()
            .expect("drift run");
        assert!(
            out.status.success(),
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}
