//! Property and golden checks shared by the `invariants` test target and the
//! `acceptance` report. Each check returns `Err(description)` on failure.
#![allow(dead_code)]

use std::path::PathBuf;

use ddd_core::consistency::{kappa_planes, rdm, FeatureTable, KappaMatrix};
use ddd_core::ddd::{
    classify_difficulty, correct_counts, correctness_flip_rate, label_swap_rate,
    overlay_histogram, CorrectCounts, Difficulty,
};
use ddd_core::decision_log::{
    assemble_cube, parse_records, read_cache, write_cache, write_records_csv, DecisionRecord,
    LogFormat,
};
use ddd_core::render::{render_decision_raster, render_heatmap, RasterMode, RenderSpec, RenderTarget};
use ddd_core::{error_consistency, BitPlane, DecisionCube, Error};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub type Check = fn() -> Result<(), String>;

/// Every invariant suite, by name.
pub const PROPERTIES: &[(&str, Check)] = &[
    ("kappa symmetry", kappa_symmetry),
    ("kappa bounds", kappa_bounds),
    ("kappa joint complement", kappa_joint_complement),
    ("kappa item permutation", kappa_item_permutation),
    ("bit-plane kappa equals bool kappa", kappa_planes_match_bools),
    ("kappa matrix symmetry", kappa_matrix_symmetry),
    ("cache round-trip", cache_round_trip),
    ("csv log round-trip", csv_round_trip),
    ("assembly ignores record order", assembly_order_free),
    ("partition disjoint and exhaustive", partition_exhaustive),
    ("partition monotone in tolerance", partition_monotone),
    ("overlay within full histogram", overlay_bounded),
    ("|delta acc| <= flip <= swap", flip_swap_bounds),
    ("correct counts sum to plane totals", counts_sum),
    ("rdm symmetry and affine invariance", rdm_affine),
];

pub const GOLDENS: &[(&str, Check)] = &[
    ("raster ppm golden", raster_ppm_golden),
    ("heatmap svg golden", heatmap_svg_golden),
];

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn bools(len: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), len)
}

fn pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (1usize..200).prop_flat_map(|n| (bools(n), bools(n)))
}

/// Predicted labels for a full (models × epochs × images) grid, true labels in 0..3.
fn grid() -> impl Strategy<Value = (usize, usize, Vec<u32>, Vec<u32>)> {
    (1usize..5, 1usize..4, 1usize..70).prop_flat_map(|(m, e, i)| {
        (
            Just(m),
            Just(e),
            prop::collection::vec(0u32..3, i),
            prop::collection::vec(0u32..3, m * e * i),
        )
    })
}

pub fn records(m: usize, e: usize, truth: &[u32], pred: &[u32]) -> Vec<DecisionRecord> {
    let n = truth.len();
    let mut out = Vec::with_capacity(pred.len());
    for mi in 0..m {
        for ei in 0..e {
            for (ii, &t) in truth.iter().enumerate() {
                out.push(DecisionRecord {
                    model_id: format!("m{mi}"),
                    condition: if mi % 2 == 0 { "a" } else { "b" }.into(),
                    epoch: (ei * 5) as u32,
                    image_id: format!("img{ii}"),
                    true_label: t,
                    predicted_label: pred[(mi * e + ei) * n + ii],
                });
            }
        }
    }
    out
}

fn cube_from(m: usize, e: usize, truth: &[u32], pred: &[u32]) -> DecisionCube {
    assemble_cube(&records(m, e, truth, pred)).unwrap()
}

fn same_kappa(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() < 1e-12,
        (None, None) => true,
        _ => false,
    }
}

/// κ, or `None` when undefined.
fn k(a: &[bool], b: &[bool]) -> Option<f64> {
    match error_consistency(a, b) {
        Ok(r) => Some(r.kappa),
        Err(Error::UndefinedKappa { .. }) => None,
        Err(e) => panic!("unexpected error {e}"),
    }
}

fn counts_of(models: usize, counts: Vec<u32>) -> CorrectCounts {
    CorrectCounts {
        models,
        image_ids: (0..counts.len()).map(|i| format!("i{i:04}")).collect(),
        counts,
    }
}

pub fn kappa_symmetry() -> Result<(), String> {
    run(pair(), |(a, b)| {
        prop_assert!(same_kappa(k(&a, &b), k(&b, &a)));
        Ok(())
    })
}

pub fn kappa_bounds() -> Result<(), String> {
    run(pair(), |(a, b)| {
        if let Ok(r) = error_consistency(&a, &b) {
            prop_assert!(r.kappa <= 1.0 + 1e-12 && r.kappa >= -1.0 - 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.c_obs));
            prop_assert!(r.c_exp >= 0.0 && r.c_exp < 1.0);
        }
        Ok(())
    })
}

pub fn kappa_joint_complement() -> Result<(), String> {
    run(pair(), |(a, b)| {
        let na: Vec<bool> = a.iter().map(|x| !x).collect();
        let nb: Vec<bool> = b.iter().map(|x| !x).collect();
        prop_assert!(same_kappa(k(&a, &b), k(&na, &nb)));
        Ok(())
    })
}

pub fn kappa_item_permutation() -> Result<(), String> {
    let strategy = pair().prop_flat_map(|(a, b)| {
        let n = a.len();
        (Just(a), Just(b), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    });
    run(strategy, |(a, b, perm)| {
        let pa: Vec<bool> = perm.iter().map(|&i| a[i]).collect();
        let pb: Vec<bool> = perm.iter().map(|&i| b[i]).collect();
        prop_assert!(same_kappa(k(&a, &b), k(&pa, &pb)));
        Ok(())
    })
}

pub fn kappa_planes_match_bools() -> Result<(), String> {
    run(pair(), |(a, b)| {
        let planes = kappa_planes(&BitPlane::from_bools(&a), &BitPlane::from_bools(&b))
            .ok()
            .map(|r| r.kappa);
        prop_assert!(same_kappa(planes, k(&a, &b)));
        Ok(())
    })
}

pub fn kappa_matrix_symmetry() -> Result<(), String> {
    let strategy =
        (1usize..6, 1usize..100).prop_flat_map(|(m, n)| prop::collection::vec(bools(n), m));
    run(strategy, |rows| {
        let planes: Vec<BitPlane> = rows.iter().map(|r| BitPlane::from_bools(r)).collect();
        let refs: Vec<&BitPlane> = planes.iter().collect();
        let labels = (0..rows.len()).map(|i| format!("m{i}")).collect();
        let mat = KappaMatrix::from_planes(labels, &refs);
        for i in 0..rows.len() {
            prop_assert_eq!(mat.get(i, i), Some(1.0));
            for j in 0..rows.len() {
                prop_assert_eq!(mat.get(i, j), mat.get(j, i));
            }
        }
        Ok(())
    })
}

pub fn cache_round_trip() -> Result<(), String> {
    run(grid(), |(m, e, truth, pred)| {
        let cube = cube_from(m, e, &truth, &pred);
        let back = read_cache(&write_cache(&cube)).unwrap();
        prop_assert_eq!(&back, &cube);
        prop_assert_eq!(back.to_records().unwrap(), cube.to_records().unwrap());
        Ok(())
    })
}

pub fn csv_round_trip() -> Result<(), String> {
    run(grid(), |(m, e, truth, pred)| {
        let recs = records(m, e, &truth, &pred);
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let parsed = parse_records(buf.as_slice(), LogFormat::Csv).unwrap();
        prop_assert_eq!(assemble_cube(&parsed).unwrap(), assemble_cube(&recs).unwrap());
        Ok(())
    })
}

pub fn assembly_order_free() -> Result<(), String> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    run((grid(), any::<u64>()), |((m, e, truth, pred), seed)| {
        let recs = records(m, e, &truth, &pred);
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        // Index order may differ; the set of decisions may not.
        let key = |r: &DecisionRecord| (r.model_id.clone(), r.epoch, r.image_id.clone());
        let mut ra = assemble_cube(&recs).unwrap().to_records().unwrap();
        let mut rb = assemble_cube(&shuffled).unwrap().to_records().unwrap();
        ra.sort_by_key(key);
        rb.sort_by_key(key);
        prop_assert_eq!(ra, rb);
        Ok(())
    })
}

pub fn partition_exhaustive() -> Result<(), String> {
    let strategy = (2u32..20).prop_flat_map(|m| {
        (Just(m), prop::collection::vec(0..=m, 1..120), 0..=(m - 1) / 2)
    });
    run(strategy, |(models, counts, t)| {
        let n = counts.len();
        let p = classify_difficulty(&counts_of(models as usize, counts), t).unwrap();
        let (tr, im, inc) = (p.trivial(), p.impossible(), p.inconclusive());
        prop_assert_eq!(tr.len() + im.len() + inc.len(), n);
        let mut all: Vec<&str> = tr.iter().chain(&im).chain(&inc).copied().collect();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        prop_assert!((p.ddd_index() - (tr.len() + im.len()) as f64 / n as f64).abs() < 1e-12);
        Ok(())
    })
}

pub fn partition_monotone() -> Result<(), String> {
    let strategy =
        (3u32..20).prop_flat_map(|m| (Just(m), prop::collection::vec(0..=m, 1..120)));
    run(strategy, |(models, counts)| {
        let cc = counts_of(models as usize, counts);
        let mut prev: Option<(usize, usize, usize)> = None;
        for t in 0..=(models - 1) / 2 {
            let p = classify_difficulty(&cc, t).unwrap();
            let now = (
                p.count_of(Difficulty::Trivial),
                p.count_of(Difficulty::Impossible),
                p.count_of(Difficulty::Inconclusive),
            );
            if let Some(before) = prev {
                prop_assert!(now.0 >= before.0 && now.1 >= before.1 && now.2 <= before.2);
            }
            prev = Some(now);
        }
        let rejected = matches!(
            classify_difficulty(&cc, models.div_ceil(2)),
            Err(Error::InvalidTolerance { .. })
        );
        prop_assert!(rejected);
        Ok(())
    })
}

pub fn overlay_bounded() -> Result<(), String> {
    let strategy = (1usize..120)
        .prop_flat_map(|n| (prop::collection::vec(0u32..=7, n), bools(n)));
    run(strategy, |(counts, mask)| {
        let cc = counts_of(7, counts);
        let subset: Vec<&str> = cc
            .image_ids
            .iter()
            .zip(&mask)
            .filter(|(_, &keep)| keep)
            .map(|(id, _)| id.as_str())
            .collect();
        let full = cc.histogram();
        let over = overlay_histogram(&cc, &subset).unwrap();
        prop_assert_eq!(over.total(), subset.len() as u64);
        for (o, f) in over.counts.iter().zip(&full.counts) {
            prop_assert!(o <= f);
        }
        Ok(())
    })
}

pub fn flip_swap_bounds() -> Result<(), String> {
    let strategy = (1usize..80).prop_flat_map(|n| {
        (prop::collection::vec(0u32..3, n), prop::collection::vec(0u32..3, 2 * n))
    });
    run(strategy, |(truth, pred)| {
        let cube = cube_from(1, 2, &truth, &pred);
        let flip = correctness_flip_rate(&cube, "m0", 0).unwrap();
        let swap = label_swap_rate(&cube, "m0", 0).unwrap();
        let n = truth.len() as f64;
        let acc0 = cube.plane(0, 0).count_ones() as f64 / n;
        let acc1 = cube.plane(0, 1).count_ones() as f64 / n;
        prop_assert!((acc1 - acc0).abs() <= flip + 1e-12);
        prop_assert!(flip <= swap + 1e-12);
        Ok(())
    })
}

pub fn counts_sum() -> Result<(), String> {
    run(grid(), |(m, e, truth, pred)| {
        let cube = cube_from(m, e, &truth, &pred);
        let last = cube.last_epoch();
        let cc = correct_counts(&cube, last, None).unwrap();
        let li = cube.epoch_index(last).unwrap();
        let from_planes: usize = (0..m).map(|mi| cube.plane(mi, li).count_ones()).sum();
        prop_assert_eq!(cc.counts.iter().map(|&c| c as usize).sum::<usize>(), from_planes);
        prop_assert_eq!(cc.histogram().total(), truth.len() as u64);
        Ok(())
    })
}

fn spread(r: &[f64]) -> f64 {
    let max = r.iter().cloned().fold(f64::MIN, f64::max);
    let min = r.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

pub fn rdm_affine() -> Result<(), String> {
    let strategy = (2usize..6, 3usize..10)
        .prop_flat_map(|(n, d)| {
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), n)
        })
        .prop_filter("rows need spread", |rows| rows.iter().all(|r| spread(r) > 1e-3))
        .prop_flat_map(|rows| (Just(rows), 0.1f64..10.0, -100.0f64..100.0));
    run(strategy, |(rows, scale, shift)| {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("x{i}")).collect();
        let base = rdm(&FeatureTable { ids: ids.clone(), rows: rows.clone() }).unwrap();
        let moved: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| v * scale + shift).collect())
            .collect();
        let other = rdm(&FeatureTable { ids, rows: moved }).unwrap();
        for i in 0..rows.len() {
            prop_assert_eq!(base.get(i, i), 0.0);
            for j in 0..rows.len() {
                prop_assert_eq!(base.get(i, j), base.get(j, i));
                prop_assert!((0.0..=2.0).contains(&base.get(i, j)));
                prop_assert!((base.get(i, j) - other.get(i, j)).abs() < 1e-9);
            }
        }
        Ok(())
    })
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// One model, epochs 0 and 1, images a, b, c:
/// a right twice, b wrong then right, c right then wrong.
pub fn golden_cube() -> DecisionCube {
    let outcome = [[true, true], [false, true], [true, false]];
    let mut recs = Vec::new();
    for (i, id) in ["a", "b", "c"].iter().enumerate() {
        for e in 0..2 {
            recs.push(DecisionRecord {
                model_id: "net".into(),
                condition: "base".into(),
                epoch: e as u32,
                image_id: id.to_string(),
                true_label: 1,
                predicted_label: if outcome[i][e] { 1 } else { 2 },
            });
        }
    }
    assemble_cube(&recs).unwrap()
}

pub fn raster_ppm_golden() -> Result<(), String> {
    let spec = RenderSpec {
        cell_width: 1,
        cell_height: 1,
        ..RenderSpec::new(RenderTarget::Ppm)
    };
    let doc = render_decision_raster(
        &golden_cube(),
        &[0, 1, 2],
        &RasterMode::SingleModel("net".into()),
        &spec,
    )
    .map_err(|e| e.to_string())?
    .into_bytes();
    let expected = std::fs::read(golden_path("raster_3x2.ppm")).map_err(|e| e.to_string())?;
    // The golden file itself must be the hand-derived byte sequence.
    let (w, b) = ([255u8, 255, 255], [31u8, 78, 156]);
    let mut hand = b"P6\n2 3\n255\n".to_vec();
    for px in [w, w, b, w, w, b] {
        hand.extend_from_slice(&px);
    }
    if expected != hand {
        return Err("golden raster_3x2.ppm differs from hand-derived bytes".into());
    }
    if doc != expected {
        return Err(format!("raster PPM changed: {doc:?}"));
    }
    Ok(())
}

pub fn golden_matrix() -> KappaMatrix {
    KappaMatrix {
        labels: vec!["alpha".into(), "beta".into()],
        values: vec![vec![Some(1.0), Some(0.0)], vec![Some(0.0), Some(1.0)]],
    }
}

pub fn heatmap_svg_golden() -> Result<(), String> {
    let spec = RenderSpec {
        cell_width: 10,
        cell_height: 10,
        ..RenderSpec::new(RenderTarget::Svg)
    };
    let doc = render_heatmap(&golden_matrix(), &spec).map_err(|e| e.to_string())?;
    let got = String::from_utf8(doc.into_bytes()).map_err(|e| e.to_string())?;
    let expected = std::fs::read_to_string(golden_path("heatmap_2x2.svg"))
        .map_err(|e| format!("{e}; rendered:\n{got}"))?;
    if got != expected {
        return Err(format!("heatmap SVG changed:\n{got}"));
    }
    Ok(())
}
