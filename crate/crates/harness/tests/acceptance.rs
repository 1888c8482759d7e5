//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the run
//! exits non-zero if any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use lincomb_core::geometry::pf_transform;
use lincomb_core::resample::{self, complement, derive_seed, stratified_folds};
use lincomb_core::{
    cohen_kappa, grid_search, ovo_train, BagSpec, BinaryLabel, ClassGeometry, Combiner,
    CombinerKind, Ensemble, GeometryPair, GridSpec, LabeledDataset, LinearModel, MetricSet,
    OvoModel, PotentialParams, TrainerConfig, TrainerKind, ZetaParam,
};
use lincomb_harness::generate;
use lincomb_harness::stats::{friedman_test, wilcoxon_signed_rank};
use lincomb_harness::{cross_validate, ExperimentConfig};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn zetas() -> Vec<ZetaParam> {
    (-2..=2)
        .map(|e| ZetaParam::new(2f64.powi(e)).unwrap())
        .collect()
}

fn random_model(rng: &mut impl Rng, d: usize) -> LinearModel {
    let w: Vec<f64> = (0..d).map(|_| gauss(rng)).collect();
    LinearModel::new(w, gauss(rng)).unwrap()
}

/// `A Aᵀ + shift·I` with standard normal `A`.
fn random_spd(rng: &mut impl Rng, d: usize, shift: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| gauss(rng));
    &a * a.transpose() + DMatrix::identity(d, d) * shift
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let steps = 2_000_000;
    let h = 20.0 / steps as f64;
    let mut worst_peak: f64 = 0.0;
    let mut worst_position: f64 = 0.0;
    let mut worst_symmetry: f64 = 0.0;
    for zeta in zetas() {
        let (mut max, mut arg_max) = (f64::NEG_INFINITY, 0.0);
        let (mut min, mut arg_min) = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let z = -10.0 + i as f64 * h;
            let g = pf_transform(z, zeta);
            if g > max {
                (max, arg_max) = (g, z);
            }
            if g < min {
                (min, arg_min) = (g, z);
            }
            worst_symmetry = worst_symmetry.max((pf_transform(-z, zeta) + g).abs());
        }
        // Second, finer pass around each coarse extremum.
        let refine = |centre: f64, sign: f64| {
            let fine = 1e-9;
            let mut best = (f64::NEG_INFINITY, centre);
            for i in -20_000..=20_000 {
                let z = centre + i as f64 * fine;
                let g = sign * pf_transform(z, zeta);
                if g > best.0 {
                    best = (g, z);
                }
            }
            best
        };
        let (fine_max, fine_arg_max) = refine(arg_max, 1.0);
        let (fine_min, fine_arg_min) = refine(arg_min, -1.0);
        let peak = 1.0 / (2.0 * zeta.value()).sqrt();
        worst_peak = worst_peak.max((max - 1.0).abs()).max((min + 1.0).abs());
        worst_peak = worst_peak
            .max((fine_max - 1.0).abs())
            .max((fine_min - 1.0).abs());
        worst_position = worst_position
            .max((fine_arg_max - peak).abs())
            .max((fine_arg_min + peak).abs());
    }
    ensure(worst_peak <= 1e-9, || {
        format!("extreme value off by {worst_peak:e}")
    })?;
    ensure(worst_position <= 1e-6, || {
        format!("extremum position off by {worst_position:e}")
    })?;
    ensure(worst_symmetry <= 1e-12, || {
        format!("odd symmetry off by {worst_symmetry:e}")
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "peak err {worst_peak:.1e}, position err {worst_position:.1e}, symmetry err {worst_symmetry:.1e}, {:.2?}",
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = resample::rng(2);
    for _ in 0..10_000 {
        let magnitude = 10f64.powf(rng.random_range(-4.0..4.0));
        let z = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
        let zeta = ZetaParam::new(2f64.powf(rng.random_range(-4.0..4.0))).unwrap();
        let g = pf_transform(z, zeta);
        ensure(
            BinaryLabel::from_score(g) == BinaryLabel::from_score(z),
            || format!("sign flipped at z={z}, zeta={}", zeta.value()),
        )?;
    }
    for z in [0.0, -0.0] {
        let g = pf_transform(z, ZetaParam::new(1.0).unwrap());
        ensure(
            BinaryLabel::from_score(g) == BinaryLabel::from_score(z),
            || format!("sign of {z}"),
        )?;
    }
    let mut checked = 0;
    while checked < 10_000 {
        let d = rng.random_range(1..=6);
        let model = random_model(&mut rng, d);
        let zeta = ZetaParam::new(2f64.powi(rng.random_range(-2..=2))).unwrap();
        let single = Ensemble::new(
            vec![model.clone()],
            None,
            Combiner::SymmetricPotential(zeta),
        )
        .unwrap();
        for _ in 0..100 {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let x: Vec<f64> = (0..d).map(|_| scale * gauss(&mut rng)).collect();
            let raw = model.classify(&x).unwrap();
            let pf = single.predict(&x).unwrap();
            ensure(raw == pf, || format!("single PF member disagrees at {x:?}"))?;
            checked += 1;
        }
    }
    Ok("10000 signs and 10000 single-member decisions agree".into())
}

fn random_geometry(rng: &mut impl Rng, d: usize, label: BinaryLabel) -> ClassGeometry {
    let centroid: Vec<f64> = (0..d).map(|_| 2.0 * gauss(rng)).collect();
    let covariance = random_spd(rng, d, 1.0);
    let variance = rng.random_range(1.0..5.0);
    ClassGeometry::new(label, centroid, covariance, variance).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = resample::rng(3);
    let betas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut evaluations = 0;
    let (mut low, mut high): (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_centre: f64 = 0.0;
    let mut pc_range: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);
    while evaluations < 100_000 {
        let d = rng.random_range(1..=5);
        let model = random_model(&mut rng, d);
        let pair = GeometryPair::new(
            random_geometry(&mut rng, d, BinaryLabel::Positive),
            random_geometry(&mut rng, d, BinaryLabel::Negative),
        )
        .unwrap();
        for _ in 0..100 {
            let beta = if rng.random_bool(0.5) {
                betas[rng.random_range(0..betas.len())]
            } else {
                rng.random_range(0.0..=1.0)
            };
            let gamma = 2f64.powf(rng.random_range(-2.0..=2.0));
            let params = PotentialParams::new(beta, gamma).unwrap();
            let class = if rng.random_bool(0.5) {
                pair.positive()
            } else {
                pair.negative()
            };
            let x: Vec<f64> = class
                .centroid()
                .iter()
                .map(|c| c + 2.0 * gauss(&mut rng))
                .collect();
            let v = class.class_potential(&x, &model, params).unwrap();
            low = low.min(v);
            high = high.max(v);
            let at_centre = class
                .class_potential(class.centroid(), &model, params)
                .unwrap();
            worst_centre = worst_centre.max((at_centre - 1.0).abs());
            let pc = pair.pc_discriminant(&x, &model, params).unwrap();
            pc_range = (pc_range.0.min(pc), pc_range.1.max(pc));
            evaluations += 1;
        }
    }
    ensure(low > 0.0 && high <= 1.0, || {
        format!("potential range [{low:e}, {high}]")
    })?;
    ensure(worst_centre <= 1e-12, || {
        format!("centroid potential off by {worst_centre:e}")
    })?;
    ensure(pc_range.0 >= -1.0 && pc_range.1 <= 1.0, || {
        format!("PC range {pc_range:?}")
    })?;
    Ok(format!(
        "potentials in [{low:.2e}, {high}], PC in [{:.3}, {:.3}]",
        pc_range.0, pc_range.1
    ))
}

/// `(x − c)ᵀ S⁻¹ (x − c)` through an LU solve.
fn quadratic_form(s: &DMatrix<f64>, x: &[f64], c: &[f64]) -> f64 {
    let diff = DVector::from_iterator(x.len(), x.iter().zip(c).map(|(a, b)| a - b));
    let solved = s.clone().lu().solve(&diff).expect("nonsingular");
    diff.dot(&solved)
}

fn criterion_4() -> Outcome {
    let mut rng = resample::rng(4);
    let params = PotentialParams::new(1.0, 0.5).unwrap();
    let (mut compared, mut ties) = (0, 0);
    for problem in 0..20 {
        let d = if problem % 2 == 0 { 2 } else { 5 };
        let shared = random_spd(&mut rng, d, 0.5);
        let c_pos: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let c_neg: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let pair = GeometryPair::new(
            ClassGeometry::new(BinaryLabel::Positive, c_pos.clone(), shared.clone(), 1.0).unwrap(),
            ClassGeometry::new(BinaryLabel::Negative, c_neg.clone(), shared.clone(), 2.0).unwrap(),
        )
        .unwrap();
        let model = random_model(&mut rng, d);
        let ensemble = Ensemble::new(
            vec![model],
            Some(vec![pair]),
            Combiner::ClassPotential(params),
        )
        .unwrap();
        for _ in 0..500 {
            let x: Vec<f64> = (0..d).map(|_| 2.0 * gauss(&mut rng)).collect();
            let dc_pos = quadratic_form(&shared, &x, &c_pos).sqrt();
            let dc_neg = quadratic_form(&shared, &x, &c_neg).sqrt();
            if (dc_pos - dc_neg).abs() <= 1e-9 {
                ties += 1;
                continue;
            }
            let nearest = if dc_pos < dc_neg {
                BinaryLabel::Positive
            } else {
                BinaryLabel::Negative
            };
            let decided = ensemble.predict(&x).unwrap();
            ensure(decided == nearest, || {
                format!("problem {problem}: PC says {decided:?} at {x:?}")
            })?;
            compared += 1;
        }
    }
    Ok(format!("{compared} decisions match, {ties} ties skipped"))
}

fn criterion_5() -> Outcome {
    let mut rng = resample::rng(5);
    let mut worst_dc: f64 = 0.0;
    let mut worst_dn: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let s = random_spd(&mut rng, d, 0.1);
        let centroid: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let g = ClassGeometry::new(
            BinaryLabel::Positive,
            centroid.clone(),
            s.clone(),
            rng.random_range(0.1..3.0),
        )
        .unwrap();
        let x: Vec<f64> = (0..d).map(|_| 3.0 * gauss(&mut rng)).collect();
        let oracle = quadratic_form(&s, &x, &centroid).sqrt();
        worst_dc = worst_dc.max((g.mahalanobis_dc(&x).unwrap() - oracle).abs());

        let model = random_model(&mut rng, d);
        let n = model.normal();
        let r: Vec<f64> = (0..d).map(|_| 5.0 * gauss(&mut rng)).collect();
        let along: f64 = r.iter().zip(n).map(|(a, b)| a * b).sum();
        let shifted: Vec<f64> = x
            .iter()
            .zip(&r)
            .zip(n)
            .map(|((xi, ri), ni)| xi + ri - along * ni)
            .collect();
        let before = g.normal_distance_dn(&x, &model).unwrap();
        let after = g.normal_distance_dn(&shifted, &model).unwrap();
        worst_dn = worst_dn.max((before - after).abs());
    }
    ensure(worst_dc <= 1e-8, || format!("dc off by {worst_dc:e}"))?;
    ensure(worst_dn <= 1e-9, || format!("dn changed by {worst_dn:e}"))?;
    Ok(format!("dc err {worst_dc:.1e}, dn err {worst_dn:.1e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = resample::rng(6);
    for set in 0..1000 {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(1..=200);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let hit_rate = rng.random_range(0.0..=1.0);
        let pred: Vec<usize> = truth
            .iter()
            .map(|&t| {
                if rng.random_bool(hit_rate) {
                    t
                } else {
                    rng.random_range(0..k)
                }
            })
            .collect();
        let m = MetricSet::compute(&truth, &pred, k).unwrap();
        let correct = truth.iter().zip(&pred).filter(|(t, p)| t == p).count();
        let error_rate = (n - correct) as f64 / n as f64;
        ensure(
            m.micro_fdr == error_rate && m.micro_fnr == error_rate && m.micro_f1_loss == error_rate,
            || {
                format!(
                    "set {set}: micro {:?} vs 1 - accuracy {error_rate}",
                    (m.micro_fdr, m.micro_fnr, m.micro_f1_loss)
                )
            },
        )?;
        ensure(m.losses().iter().all(|l| (0.0..=1.0).contains(l)), || {
            format!("set {set}: losses {:?}", m.losses())
        })?;
        let perfect = MetricSet::compute(&truth, &truth, k).unwrap();
        ensure(perfect.losses() == [0.0; 6] && perfect.kappa == 1.0, || {
            format!("set {set}: perfect {perfect:?}")
        })?;
    }
    Ok("1000 prediction sets".into())
}

fn random_small_dataset(rng: &mut impl Rng) -> LabeledDataset {
    let classes = rng.random_range(2..=3);
    let d = rng.random_range(2..=4);
    let per_class = rng.random_range(15..=25);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        let centre: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let spread: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        for _ in 0..per_class {
            rows.push(
                centre
                    .iter()
                    .zip(&spread)
                    .map(|(m, s)| m + s * gauss(rng))
                    .collect(),
            );
            labels.push(c);
        }
    }
    LabeledDataset::new(rows, labels, (0..classes).map(|c| c.to_string()).collect()).unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = resample::rng(7);
    let grid = GridSpec::default();
    let kinds = [
        TrainerKind::NearestCentroid,
        TrainerKind::Flda,
        TrainerKind::Logistic,
    ];
    for set in 0..10 {
        let data = random_small_dataset(&mut rng);
        let trainer = TrainerConfig {
            seed: set,
            ..TrainerConfig::new(kinds[set as usize % kinds.len()])
        };
        let bag = BagSpec {
            n_members: 5,
            seed: 100 + set,
            ..BagSpec::default()
        };
        let tuned = grid_search(&data, &trainer, &bag, &grid).map_err(|e| e.to_string())?;

        let folds = stratified_folds(data.labels(), grid.inner_folds, bag.seed).unwrap();
        let models: Vec<OvoModel> = folds
            .iter()
            .enumerate()
            .map(|(k, test)| {
                let train = data.subset(&complement(data.len(), test));
                let spec = BagSpec {
                    seed: derive_seed(bag.seed, &[k as u64]),
                    ..bag.clone()
                };
                ovo_train(&train, &trainer, &spec, Combiner::Voting).unwrap()
            })
            .collect();
        let mut cells = 0;
        let mut best: Option<(f64, f64, f64)> = None;
        for &gamma in grid.gammas.iter().rev() {
            for &beta in grid.betas.iter().rev() {
                let combiner = Combiner::ClassPotential(PotentialParams::new(beta, gamma).unwrap());
                let mut truth = Vec::new();
                let mut pred = Vec::new();
                for (test, model) in folds.iter().zip(&models) {
                    let model = model.with_combiner(combiner).unwrap();
                    for &i in test {
                        truth.push(data.labels()[i]);
                        pred.push(model.predict(&data.rows()[i]).unwrap());
                    }
                }
                let kappa = cohen_kappa(&truth, &pred, data.n_classes()).unwrap();
                let preferred = match best {
                    None => true,
                    Some((bk, bb, bg)) => {
                        kappa > bk || (kappa == bk && (beta < bb || (beta == bb && gamma < bg)))
                    }
                };
                if preferred {
                    best = Some((kappa, beta, gamma));
                }
                cells += 1;
            }
        }
        ensure(cells == 55, || format!("{cells} cells"))?;
        let (_, beta, gamma) = best.unwrap();
        ensure(
            (tuned.best.beta(), tuned.best.gamma()) == (beta, gamma),
            || {
                format!(
                    "set {set}: tuned ({}, {}) but oracle ({beta}, {gamma})",
                    tuned.best.beta(),
                    tuned.best.gamma()
                )
            },
        )?;
    }
    Ok("10 datasets, 55 cells each".into())
}

fn ranks_of(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = (r + 1) as f64;
    }
    ranks
}

/// Friedman statistic from untied ranks: `12/(nk(k+1)) Σ Rⱼ² − 3n(k+1)`.
fn friedman_from_ranks(ranks: &[Vec<f64>]) -> f64 {
    let n = ranks.len() as f64;
    let k = ranks[0].len();
    let sums: Vec<f64> = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum()).collect();
    let k = k as f64;
    12.0 / (n * k * (k + 1.0)) * sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * n * (k + 1.0)
}

/// Two-sided p-value by listing all `2ⁿ` sign patterns of doubled ranks.
fn wilcoxon_enumerated(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    let mut magnitudes: Vec<(f64, usize)> = diffs.iter().map(|d| d.abs()).zip(0..).collect();
    magnitudes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut doubled = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && magnitudes[j + 1].0 == magnitudes[i].0 {
            j += 1;
        }
        for m in &magnitudes[i..=j] {
            doubled[m.1] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    let observed: u64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| doubled[i]).sum();
    let (mut below, mut above) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let s: u64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| doubled[i])
            .sum();
        below += u64::from(s <= observed);
        above += u64::from(s >= observed);
    }
    let all = (1u64 << n) as f64;
    (2.0 * (below.min(above) as f64) / all).min(1.0)
}

fn criterion_8() -> Outcome {
    let mut rng = resample::rng(8);
    let mut worst_friedman: f64 = 0.0;
    for _ in 0..3 {
        let table: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let analytic = friedman_test(&table).map_err(|e| e.to_string())?;
        let mut ranks: Vec<Vec<f64>> = table.iter().map(|r| ranks_of(r)).collect();
        let observed = friedman_from_ranks(&ranks);
        let draws = 100_000;
        let mut hits = 0;
        for _ in 0..draws {
            for r in &mut ranks {
                r.shuffle(&mut rng);
            }
            if friedman_from_ranks(&ranks) >= observed - 1e-9 {
                hits += 1;
            }
        }
        worst_friedman = worst_friedman.max((hits as f64 / draws as f64 - analytic.p_value).abs());
    }
    ensure(worst_friedman <= 0.02, || {
        format!("Friedman p off the permutation oracle by {worst_friedman}")
    })?;

    let mut worst_wilcoxon: f64 = 0.0;
    for trial in 0..300 {
        let n = 1 + trial % 12;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
        let w = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string())?;
        let diffs: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x - y)
            .filter(|d| *d != 0.0)
            .collect();
        let oracle = if diffs.is_empty() {
            1.0
        } else {
            wilcoxon_enumerated(&diffs)
        };
        ensure(w.exact, || format!("n={n} not exact"))?;
        worst_wilcoxon = worst_wilcoxon.max((w.p_value - oracle).abs());
    }
    ensure(worst_wilcoxon <= 1e-12, || {
        format!("Wilcoxon exact p off enumeration by {worst_wilcoxon:e}")
    })?;

    let worked = vec![vec![0.1, 0.2, 0.3]; 4];
    let f = friedman_test(&worked).map_err(|e| e.to_string())?;
    ensure((f.p_value - 0.0183).abs() <= 1e-3, || {
        format!("worked example p = {}", f.p_value)
    })?;
    Ok(format!(
        "Friedman err {worst_friedman:.4}, Wilcoxon err {worst_wilcoxon:.1e}, worked example p = {:.4}",
        f.p_value
    ))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let (mut pc_total, mut mv_total) = (0.0, 0.0);
    let mut per_seed = Vec::new();
    for seed in 1..=5u64 {
        let data = generate::banana(2000, 0.3, seed).map_err(|e| e.to_string())?;
        let mut cfg = ExperimentConfig::new(vec!["banana2D.csv".into()]);
        cfg.learners = vec![TrainerKind::NearestCentroid];
        cfg.combiners = vec![CombinerKind::Voting, CombinerKind::ClassPotential];
        cfg.outer_folds = 10;
        cfg.seed = seed;
        let outcome =
            cross_validate(&cfg, &[("banana2D".into(), data)], 0).map_err(|e| e.to_string())?;
        let mean = |name: &str| {
            let v: Vec<f64> = outcome
                .records
                .iter()
                .filter(|r| r.combiner == name)
                .map(|r| r.micro_f1_loss)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (mv, pc) = (mean("MV"), mean("PC"));
        wins += usize::from(pc < mv);
        pc_total += pc;
        mv_total += mv;
        per_seed.push(format!("{pc:.4}/{mv:.4}"));
    }
    let (pc, mv) = (pc_total / 5.0, mv_total / 5.0);
    let detail = format!(
        "PC/MV per seed {}, means {pc:.4}/{mv:.4}, PC better on {wins}/5",
        per_seed.join(" ")
    );
    ensure(pc <= mv + 0.02, || {
        format!("PC worse than MV by more than 0.02: {detail}")
    })?;
    ensure(wins >= 3, || {
        format!("PC strictly better on too few seeds: {detail}")
    })?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{detail}, {:.2?}", start.elapsed()))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timings.csv")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sets = [
        ("blobs", generate::gaussians(150, 4, 3, 2.0, 11)),
        ("spirals", generate::spirals(200, 0.5, 12)),
        ("banana", generate::banana(300, 0.3, 13)),
    ];
    for (name, data) in sets {
        let data = data.map_err(|e| e.to_string())?;
        lincomb_harness::dataset::write_csv(&data, dir.path().join(format!("{name}.csv")))
            .map_err(|e| e.to_string())?;
    }
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "datasets = [\"blobs.csv\", \"spirals.csv\", \"banana.csv\"]\n\
         learners = [\"NC\", \"LR\"]\n\
         combiners = [\"SM\", \"MA\", \"MV\", \"PF\", \"PC\"]\n\
         outer_folds = 10\n\
         seed = 2024\n",
    )
    .map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for (run, jobs) in [(0, "1"), (1, "0")] {
        let out = dir.path().join(format!("out{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_lincomb"))
            .args(["run", "--config"])
            .arg(&config)
            .args(["--jobs", jobs, "--output"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        reports.push(read_dir_sorted(&out));
    }
    ensure(reports[0].len() >= 9, || {
        format!("only {} report files", reports[0].len())
    })?;
    ensure(reports[0] == reports[1], || {
        "reports differ between runs".into()
    })?;
    let lines = reports[0]
        .iter()
        .find(|(n, _)| n == "results.jsonl")
        .map(|(_, b)| b.iter().filter(|&&c| c == b'\n').count());
    ensure(lines == Some(3 * 2 * 5 * 10), || {
        format!("results lines {lines:?}")
    })?;
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!(
        "{} identical report files, {:.2?}",
        reports[0].len(),
        start.elapsed()
    ))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("potential function shape", criterion_1),
        ("sign preservation", criterion_2),
        ("class potential bounds", criterion_3),
        ("nearest centroid equivalence", criterion_4),
        ("distance oracles", criterion_5),
        ("metric identities", criterion_6),
        ("grid search oracle", criterion_7),
        ("statistics oracles", criterion_8),
        ("banana NC: PC vs MV", criterion_9),
        ("end-to-end determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
