//! Acceptance suite. Prints one `PASS`, `FAIL` or `SKIP` line per criterion
//! and exits non-zero when any criterion fails.
//!
//! Criteria 8 to 11 need the pricing-game tables; point `CLAIMCLASS_DATA_DIR`
//! at a directory holding `pg17trainpol.csv` and `pg17trainclaim.csv`.

mod common;

use claimclass::eval::{confusion_matrix, evaluate};
use claimclass::explore::{
    aggregate_by_department, binomial_ci, claim_proportion_by_level, default_binning, department_summary,
    pearson_correlation_matrix, render_choropleth, wald_ci, CiMethod, ProportionOptions, ValueField,
};
use claimclass::explore::svg::{render_bar_with_ci, render_heatmap, render_line, LineOptions, Series};
use claimclass::ingest::{claim_frequency_histogram, impute_vh_age, load_dataset, ImputeStrategy, Label};
use claimclass::knn::{chebyshev_distance, minkowski_distance, DistanceMetric, KnnModel, Neighbor, Weighting};
use claimclass::logreg::{fit, fit_matrix, gradient, objective, FitConfig, Penalty};
use claimclass::preprocess::{
    one_hot_encode, prepare, subsample, train_test_split, ColumnKind, EncodeOptions, EncodedMatrix, FeatureSchema,
    PrepareOptions, SchemaColumn,
};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn numeric_schema(p: usize) -> FeatureSchema {
    FeatureSchema {
        columns: (0..p)
            .map(|j| SchemaColumn { name: format!("x{j}"), source_feature: format!("x{j}"), kind: ColumnKind::Numeric })
            .collect(),
    }
}

fn matrix(values: Array2<f64>, labels: Vec<Label>) -> EncodedMatrix {
    let p = values.ncols();
    EncodedMatrix::new(values, numeric_schema(p), labels).unwrap()
}

fn random_label(rng: &mut ChaCha8Rng, p_claim: f64) -> Label {
    if rng.gen_bool(p_claim) {
        Label::Claim
    } else {
        Label::NoClaim
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn within_time(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {:.1?}, limit {:.0?}", elapsed, limit))
}

// 1. Metric axioms and order monotonicity.
fn metric_axioms() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let orders = [1.0, 1.5, 2.0, 3.0];
    let eps = 1e-9;
    for trial in 0..1000 {
        let dim = rng.gen_range(1..=12);
        let scale = 10f64.powi(rng.gen_range(-2..=3));
        let mut v = || -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0) * scale).collect() };
        let (x, y, z) = (v(), v(), v());
        let mut per_order = Vec::new();
        for metric in orders.iter().map(|&o| DistanceMetric::Minkowski { order: o }).chain([DistanceMetric::Chebyshev]) {
            let d = |a: &[f64], b: &[f64]| metric.distance(a, b).unwrap();
            let (dxy, dyx, dxz, dyz, dxx) = (d(&x, &y), d(&y, &x), d(&x, &z), d(&y, &z), d(&x, &x));
            let tol = eps * (1.0 + dxy.max(dxz).max(dyz));
            ensure(dxy >= 0.0 && dxz >= 0.0, || format!("{metric}: negative distance (trial {trial})"))?;
            ensure(dxx == 0.0, || format!("{metric}: d(x, x) = {dxx}"))?;
            ensure(dxy == dyx, || format!("{metric}: asymmetric {dxy} vs {dyx}"))?;
            ensure(dxz <= dxy + dyz + tol, || format!("{metric}: triangle violated {dxz} > {dxy} + {dyz}"))?;
            if x != y {
                ensure(dxy > 0.0, || format!("{metric}: zero distance between distinct vectors"))?;
            }
            per_order.push(dxy);
        }
        // d_p is non-increasing in p, ending at the Chebyshev limit.
        for w in per_order.windows(2) {
            ensure(w[1] <= w[0] * (1.0 + eps), || format!("order monotonicity violated: {:?}", per_order))?;
        }
        let m2 = minkowski_distance(&x, &y, 2.0).unwrap();
        let ch = chebyshev_distance(&x, &y).unwrap();
        ensure(m2 == per_order[2] && ch == per_order[4], || "free functions disagree with the enum".into())?;
    }
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(5), "metric suite")?;
    Ok(format!("5 metrics x 1000 triples in {elapsed:.2?}"))
}

fn oracle_neighbors(train: &Array2<f64>, query: &[f64], k: usize, order: f64) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = train
        .outer_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = if order == 2.0 {
                row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            } else {
                row.iter().zip(query).map(|(a, b)| (a - b).abs()).sum::<f64>()
            };
            (i, d)
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn oracle_vote(neighbors: &[(usize, f64)], labels: &[Label], weighting: Weighting) -> Label {
    let (mut claim, mut none) = (0.0, 0.0);
    let exact = neighbors.iter().any(|n| n.1 == 0.0);
    for &(i, d) in neighbors {
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::InverseDistance if exact => {
                if d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Weighting::InverseDistance => 1.0 / d,
        };
        match labels[i] {
            Label::Claim => claim += w,
            Label::NoClaim => none += w,
        }
    }
    if claim > none {
        Label::Claim
    } else {
        Label::NoClaim
    }
}

// 2. KNN against an exhaustive sort.
fn knn_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut queries_checked = 0usize;
    for dataset in 0..50 {
        let n = rng.gen_range(20..=500);
        let dim = rng.gen_range(1..=10);
        // Every other dataset sits on a coarse grid, forcing distance ties and duplicates.
        let coarse = dataset % 2 == 0;
        let cell = |rng: &mut ChaCha8Rng| if coarse { rng.gen_range(0..3) as f64 } else { gaussian(rng) };
        let train = Array2::from_shape_fn((n, dim), |_| cell(&mut rng));
        let labels: Vec<Label> = (0..n).map(|_| random_label(&mut rng, 0.4)).collect();
        let nq = 40;
        let queries = Array2::from_shape_fn((nq, dim), |_| cell(&mut rng));
        let order = if dataset % 3 == 0 { 1.0 } else { 2.0 };
        let metric = DistanceMetric::Minkowski { order };
        let m = matrix(train.clone(), labels.clone());
        for k in [1usize, 3, 20] {
            for weighting in [Weighting::Uniform, Weighting::InverseDistance] {
                let model = KnnModel::fit(&m, k, metric, weighting).map_err(|e| e.to_string())?;
                let predicted = model.predict_threads(&queries, 2).map_err(|e| e.to_string())?;
                for (q, query) in queries.outer_iter().enumerate() {
                    let query = query.to_vec();
                    let expected = oracle_neighbors(&train, &query, k, order);
                    let found: Vec<(usize, f64)> = model
                        .find_k_nearest(&query)
                        .map_err(|e| e.to_string())?
                        .iter()
                        .map(|n: &Neighbor| (n.index, n.distance))
                        .collect();
                    ensure(found == expected, || {
                        format!("dataset {dataset}, k={k}, query {q}: neighbours {found:?} != {expected:?}")
                    })?;
                    let want = oracle_vote(&expected, &labels, weighting);
                    ensure(predicted[q] == want, || {
                        format!("dataset {dataset}, k={k}, {weighting:?}, query {q}: predicted {:?}", predicted[q])
                    })?;
                    queries_checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    within_time(elapsed, Duration::from_secs(30), "oracle comparison")?;
    Ok(format!("{queries_checked} queries over 50 datasets match in {elapsed:.2?}"))
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Array2<f64>, Vec<Label>) {
    let x = Array2::from_shape_fn((n, p), |_| gaussian(rng));
    let truth: Vec<f64> = (0..p).map(|_| gaussian(rng)).collect();
    let labels = x
        .outer_iter()
        .map(|row| {
            let z: f64 = row.iter().zip(&truth).map(|(a, b)| a * b).sum();
            let prob = 1.0 / (1.0 + (-z).exp());
            random_label(rng, prob)
        })
        .collect();
    (x, labels)
}

// 3. Gradient against central differences, and monotone traces.
fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    let penalties = [Penalty::None, Penalty::Ridge, Penalty::ElasticNet { mix: 0.5 }, Penalty::Lasso];
    let mut worst: f64 = 0.0;
    for penalty in penalties {
        for point in 0..100 {
            let n = rng.gen_range(10..80);
            let p = rng.gen_range(1..8);
            let (x, labels) = random_problem(&mut rng, n, p);
            let lambda = rng.gen_range(0.01..5.0);
            // Keep coordinates well away from the L1 kink.
            let w = Array1::from_shape_fn(p, |_| {
                let v = rng.gen_range(0.1..2.0);
                if rng.gen_bool(0.5) {
                    v
                } else {
                    -v
                }
            });
            let b = rng.gen_range(-1.0..1.0);
            let f = |w: &Array1<f64>, b: f64| objective(w.view(), b, x.view(), &labels, penalty, lambda).unwrap();
            let (g, gb) = gradient(w.view(), b, x.view(), &labels, penalty, lambda).map_err(|e| e.to_string())?;
            let mut diff_sq = 0.0;
            let mut norm_sq = gb * gb;
            for j in 0..p {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[j] += h;
                down[j] -= h;
                let fd = (f(&up, b) - f(&down, b)) / (2.0 * h);
                diff_sq += (fd - g[j]).powi(2);
                norm_sq += g[j] * g[j];
            }
            let fd_b = (f(&w, b + h) - f(&w, b - h)) / (2.0 * h);
            diff_sq += (fd_b - gb).powi(2);
            let rel = diff_sq.sqrt() / norm_sq.sqrt().max(1e-8);
            worst = worst.max(rel);
            ensure(rel < 1e-5, || format!("{penalty} point {point}: relative error {rel:.2e}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for problem in 0..20 {
        let n = rng.gen_range(50..300);
        let p = rng.gen_range(2..10);
        let (x, labels) = random_problem(&mut rng, n, p);
        let penalty = penalties[problem % penalties.len()];
        let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
        let model = fit(&x, &labels, &numeric_schema(p), penalty, lambda, &FitConfig::default())
            .map_err(|e| e.to_string())?;
        for w in model.trace.windows(2) {
            ensure(w[1].objective <= w[0].objective, || {
                format!("problem {problem} ({penalty}): objective rose at iteration {}", w[1].iteration)
            })?;
        }
    }
    Ok(format!("worst relative error {worst:.1e} over 400 points; 20 traces non-increasing"))
}

// 4. Separable two-blob fixture.
fn separable_fit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 400;
    let mut x = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let claim = i % 2 == 1;
        x[[i, 0]] = if claim { rng.gen_range(0.5..3.0) } else { rng.gen_range(-3.0..-0.5) };
        x[[i, 1]] = rng.gen_range(-2.0..2.0);
        labels.push(if claim { Label::Claim } else { Label::NoClaim });
    }
    let config = FitConfig::default();
    let model = fit(&x, &labels, &numeric_schema(2), Penalty::Ridge, 1e-4, &config).map_err(|e| e.to_string())?;
    let predicted = model.predict(&x).map_err(|e| e.to_string())?;
    let acc = predicted.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / n as f64;
    let iterations = model.trace.last().map_or(0, |t| t.iteration);
    ensure(iterations <= 5000, || format!("{iterations} iterations"))?;
    ensure(acc >= 0.99, || format!("training accuracy {acc}"))?;
    Ok(format!("training accuracy {acc:.4} after {iterations} iterations ({:?})", model.stop_reason))
}

// 5. Majority-only predictions on uninformative, imbalanced data.
fn imbalance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, p) = (4000, 30);
    let mut labels: Vec<Label> = (0..n).map(|i| if i < n * 13 / 100 { Label::Claim } else { Label::NoClaim }).collect();
    labels.shuffle(&mut rng);
    let x = Array2::from_shape_fn((n, p), |_| gaussian(&mut rng));
    let all = matrix(x, labels);
    let split = train_test_split(n, 0.25, 5).map_err(|e| e.to_string())?;
    let (train, test) = (all.select_rows(&split.train), all.select_rows(&split.test));

    let logreg = fit_matrix(&train, Penalty::Ridge, 1e3, &FitConfig::default()).map_err(|e| e.to_string())?;
    let knn = KnnModel::fit(&train, 20, DistanceMetric::EUCLIDEAN, Weighting::InverseDistance).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for (name, predicted) in [
        ("logreg", logreg.predict(&test.values).map_err(|e| e.to_string())?),
        ("knn", knn.predict(&test.values).map_err(|e| e.to_string())?),
    ] {
        let cm = confusion_matrix(&test.labels, &predicted, Label::NoClaim).map_err(|e| e.to_string())?;
        ensure(cm.fn_ == 0 && cm.tn == 0, || {
            format!("{name}: minority-prediction column not empty (FN={}, TN={})", cm.fn_, cm.tn)
        })?;
        details.push(format!("{name} TP={} FP={}", cm.tp, cm.fp));
    }
    Ok(format!("FN = TN = 0 for both; {}", details.join(", ")))
}

// 6. One-hot, z-score and split properties.
fn preprocessing() -> Check {
    let dataset = common::synthetic_dataset(400, 0.2, 6);
    let encoded = one_hot_encode(&dataset, &EncodeOptions::default()).map_err(|e| e.to_string())?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, col) in encoded.schema.columns.iter().enumerate() {
        if let ColumnKind::Dummy { .. } = col.kind {
            groups.entry(&col.source_feature).or_default().push(j);
        }
    }
    ensure(!groups.is_empty(), || "no categorical features encoded".into())?;
    for row in encoded.values.outer_iter() {
        for (feature, cols) in &groups {
            let sum: f64 = cols.iter().map(|&j| row[j]).sum();
            ensure(sum == 1.0, || format!("{feature}: indicator sum {sum}"))?;
        }
    }

    let prepared = prepare(&dataset, &PrepareOptions::default()).map_err(|e| e.to_string())?;
    let mut worst_mean: f64 = 0.0;
    for (j, col) in prepared.matrix.values.columns().into_iter().enumerate() {
        if prepared.scaling.columns[j].constant {
            continue;
        }
        worst_mean = worst_mean.max(col.mean().unwrap().abs());
    }
    ensure(worst_mean < 1e-9, || format!("largest post-scaling column mean {worst_mean:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..200 {
        let n = rng.gen_range(2..3000);
        let fraction = rng.gen_range(0.01..0.99);
        let seed = rng.gen();
        let expected_test = (n as f64 * fraction).round() as usize;
        match train_test_split(n, fraction, seed) {
            Err(_) => ensure(expected_test == 0 || expected_test == n, || {
                format!("split({n}, {fraction}) rejected without cause")
            })?,
            Ok(split) => {
                ensure(split.test.len() == expected_test, || format!("test size {} for n={n}", split.test.len()))?;
                let mut union: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
                union.sort_unstable();
                ensure(union == (0..n).collect::<Vec<_>>(), || format!("split of {n} is not a partition"))?;
                ensure(split.train.windows(2).all(|w| w[0] < w[1]), || "train indices unsorted".into())?;
                ensure(split.test.windows(2).all(|w| w[0] < w[1]), || "test indices unsorted".into())?;
                let again = train_test_split(n, fraction, seed).unwrap();
                ensure(again == split, || "split not reproducible".into())?;
                let cap = rng.gen_range(1..=n);
                let kept = subsample(&split.train, cap, seed);
                ensure(kept.len() == cap.min(split.train.len()), || "subsample size".into())?;
                ensure(kept.iter().all(|i| split.train.binary_search(i).is_ok()), || "subsample escaped".into())?;
            }
        }
    }
    Ok(format!(
        "{} indicator groups sum to 1; max |mean| {worst_mean:.1e}; 200 splits partition",
        groups.len()
    ))
}

fn parse_svg(name: &str, svg: &str) -> Result<(), String> {
    roxmltree::Document::parse(svg).map(|_| ()).map_err(|e| format!("{name} SVG is not well-formed: {e}"))
}

// 7. Intervals, correlation matrices and SVG output.
fn exploration() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(1..5000u64);
        let s = rng.gen_range(0..=n);
        let level = rng.gen_range(0.5..0.999);
        let ci = wald_ci(s, n, level).map_err(|e| e.to_string())?;
        let p = s as f64 / n as f64;
        ensure(ci.contains(p), || format!("Wald CI {ci:?} misses {p} ({s}/{n})"))?;
        ensure(ci.low >= 0.0 && ci.high <= 1.0, || format!("Wald CI {ci:?} leaves [0, 1]"))?;
    }
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(100..2000u64);
        let s = rng.gen_range(n / 5..=4 * n / 5);
        let small = wald_ci(s, n, 0.95).unwrap();
        let large = wald_ci(4 * s, 4 * n, 0.95).unwrap();
        let ratio = small.width() / large.width();
        worst_ratio = worst_ratio.max((ratio - 2.0).abs());
        ensure((ratio - 2.0).abs() < 1e-9, || format!("width ratio {ratio} at {s}/{n}"))?;
    }

    for trial in 0..20 {
        let (rows, cols) = (rng.gen_range(3..200), rng.gen_range(1..8));
        let data = Array2::from_shape_fn((rows, cols), |(_, j)| gaussian(&mut rng) * (j + 1) as f64);
        let names: Vec<String> = (0..cols).map(|j| format!("c{j}")).collect();
        let corr = pearson_correlation_matrix(&data, &names).map_err(|e| e.to_string())?;
        for i in 0..cols {
            let d = corr.get(i, i).ok_or("undefined diagonal")?;
            ensure((d - 1.0).abs() < 1e-12, || format!("trial {trial}: diagonal {d}"))?;
            for j in 0..cols {
                let (a, b) = (corr.get(i, j), corr.get(j, i));
                ensure(a == b, || format!("trial {trial}: asymmetric at ({i}, {j})"))?;
                let a = a.ok_or("undefined entry")?;
                ensure((-1.0..=1.0).contains(&a), || format!("trial {trial}: {a} out of range"))?;
            }
        }
    }

    // Every renderer, fed through the same path the CLI uses.
    let dataset = common::synthetic_dataset(300, 0.2, 77);
    let options = ProportionOptions::default();
    let mut count = 0;
    for feature in ["drv_age1", "pol_coverage", "vh_speed", "pol_payd"] {
        let rows = claim_proportion_by_level(&dataset, feature, &default_binning(feature), &options)
            .map_err(|e| e.to_string())?;
        parse_svg(feature, &render_bar_with_ci(&rows, feature).map_err(|e| e.to_string())?)?;
        count += 1;
    }
    let series = vec![
        Series { name: "train <&>".into(), points: vec![(1.0, 0.9), (10.0, 0.88), (100.0, 0.87)] },
        Series { name: "test".into(), points: vec![(1.0, 0.8), (10.0, 0.86), (100.0, 0.87)] },
    ];
    for log_x in [false, true] {
        let opts = LineOptions { title: "accuracy".into(), x_label: "k".into(), y_label: "acc".into(), log_x };
        parse_svg("line", &render_line(&series, &opts).map_err(|e| e.to_string())?)?;
        count += 1;
    }
    let data = Array2::from_shape_fn((50, 4), |(i, j)| ((i * (j + 3)) % 7) as f64 + j as f64 * 0.1 * i as f64);
    let corr = pearson_correlation_matrix(&data, &["a".into(), "b".into(), "c".into(), "d".into()])
        .map_err(|e| e.to_string())?;
    parse_svg("heatmap", &render_heatmap(&corr, "correlation").map_err(|e| e.to_string())?)?;
    count += 1;
    let aggregates = aggregate_by_department(&dataset).map_err(|e| e.to_string())?;
    let features: Vec<String> = aggregates
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let x = i as f64;
            format!(
                r#"{{"type":"Feature","properties":{{"code":"{}"}},"geometry":{{"type":"Polygon","coordinates":[[[{x},45],[{},45],[{},46],[{x},46],[{x},45]]]}}}}"#,
                a.code,
                x + 1.0,
                x + 1.0
            )
        })
        .collect();
    let geojson = format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(","));
    for field in ValueField::ALL {
        let map = render_choropleth(&geojson, "code", &aggregates, field.name()).map_err(|e| e.to_string())?;
        parse_svg("choropleth", &map.svg)?;
        count += 1;
    }
    let _ = binomial_ci(3, 10, 0.95, CiMethod::Wilson).map_err(|e| e.to_string())?;
    Ok(format!("Wald containment and scaling (max |ratio - 2| {worst_ratio:.1e}); 20 matrices; {count} SVGs parse"))
}

struct CasData {
    dataset: claimclass::ingest::LabeledDataset,
}

fn load_cas(dir: &std::path::Path) -> Result<CasData, String> {
    let dataset = load_dataset(dir.join("pg17trainpol.csv"), dir.join("pg17trainclaim.csv"), "-")
        .map_err(|e| e.to_string())?;
    Ok(CasData { dataset })
}

// 8. Ingest totals.
fn cas_ingest(data: &CasData) -> Check {
    let d = &data.dataset;
    ensure(d.len() == 100_000, || format!("{} policies", d.len()))?;
    ensure(d.total_claims() == 14_243, || format!("{} claims", d.total_claims()))?;
    let mut amounts: Vec<f64> = d.rows.iter().map(|r| r.claim_amount).collect();
    amounts.sort_by(f64::total_cmp);
    let amount: f64 = amounts.iter().sum();
    ensure((amount - 11_724_608.37).abs() <= 0.01 + 1e-6, || format!("claim amount {amount:.2}"))?;
    let expected: BTreeMap<u32, usize> =
        [(0, 87_346), (1, 11_238), (2, 1_264), (3, 134), (4, 16), (5, 1), (6, 1)].into_iter().collect();
    let histogram = claim_frequency_histogram(d);
    ensure(histogram == expected, || format!("histogram {histogram:?}"))?;
    Ok(format!("100000 policies, 14243 claims, {amount:.2} total, histogram exact"))
}

fn cas_prepared(data: &CasData) -> Result<claimclass::preprocess::Prepared, String> {
    let imputed = impute_vh_age(data.dataset.clone(), &ImputeStrategy::Median).map_err(|e| e.to_string())?;
    prepare(&imputed, &PrepareOptions::default()).map_err(|e| e.to_string())
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// 9. KNN accuracy and run time.
fn cas_knn(prepared: &claimclass::preprocess::Prepared) -> Check {
    let (train, test) = (prepared.train(), prepared.test());
    let start = Instant::now();
    let sub = train.select_rows(&subsample(&(0..train.nrows()).collect::<Vec<_>>(), 10_000, prepared.split.seed));
    let model = KnnModel::fit(&sub, 20, DistanceMetric::EUCLIDEAN, Weighting::InverseDistance).map_err(|e| e.to_string())?;
    evaluate(&model, &test, Label::NoClaim, 1).map_err(|e| e.to_string())?;
    let desk = start.elapsed();

    let start = Instant::now();
    let model = KnnModel::fit(&train, 20, DistanceMetric::EUCLIDEAN, Weighting::InverseDistance).map_err(|e| e.to_string())?;
    let report = evaluate(&model, &test, Label::NoClaim, 1).map_err(|e| e.to_string())?;
    let full = start.elapsed();
    let test_acc = report.accuracy.value().unwrap_or(f64::NAN);
    let train_report = evaluate(&model, &train, Label::NoClaim, threads()).map_err(|e| e.to_string())?;
    let train_acc = train_report.accuracy.value().unwrap_or(f64::NAN);

    let mut problems = Vec::new();
    if (test_acc - 0.87).abs() > 0.01 {
        problems.push(format!("test accuracy {test_acc:.4}"));
    }
    if train_acc != 1.0 {
        problems.push(format!("train accuracy {train_acc:.6}"));
    }
    if desk >= Duration::from_secs(120) {
        problems.push(format!("subsampled run {desk:.1?}"));
    }
    if full >= Duration::from_secs(900) {
        problems.push(format!("full run {full:.1?}"));
    }
    let summary = format!(
        "test accuracy {test_acc:.4}, train accuracy {train_acc:.4}, subsampled {desk:.1?}, full {full:.1?}"
    );
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", problems.join(", ")))
    }
}

// 10. Precision/recall with no-claim positive and the logistic degeneracy.
fn cas_metrics(prepared: &claimclass::preprocess::Prepared) -> Check {
    let (train, test) = (prepared.train(), prepared.test());
    let model = fit_matrix(&train, Penalty::Ridge, 1.0, &FitConfig::default()).map_err(|e| e.to_string())?;
    let report = evaluate(&model, &test, Label::NoClaim, 1).map_err(|e| e.to_string())?;
    let cm = report.matrix;
    let precision = report.precision.value().unwrap_or(f64::NAN);
    let recall = report.recall.value().unwrap_or(f64::NAN);
    let summary = format!(
        "precision {precision:.4}, recall {recall:.4}, TP={} FN={} FP={} TN={}",
        cm.tp, cm.fn_, cm.fp, cm.tn
    );
    let mut problems = Vec::new();
    if (precision - 0.872).abs() > 0.01 {
        problems.push("precision");
    }
    if !(recall >= 0.99) {
        problems.push("recall");
    }
    if cm.tn != 0 || cm.fn_ != 0 {
        problems.push("minority predictions");
    }
    if cm.tp.abs_diff(21_837) > 20 || cm.fp.abs_diff(3_163) > 20 {
        problems.push("class split");
    }
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{} off; {summary}", problems.join(", ")))
    }
}

// 11. Department statistics.
fn cas_departments(data: &CasData) -> Check {
    let aggregates = aggregate_by_department(&data.dataset).map_err(|e| e.to_string())?;
    let summary = department_summary(&aggregates).map_err(|e| e.to_string())?;
    let expected: [(ValueField, [f64; 7]); 3] = [
        (ValueField::ClaimCount, [148.36, 115.10, 3.00, 62.75, 111.00, 216.00, 611.00]),
        (ValueField::ClaimAmount, [122_131.34, 103_003.19, 113.56, 49_427.15, 76_696.35, 180_539.11, 461_168.09]),
        (ValueField::PolicyCount, [1_041.67, 737.47, 21.00, 512.50, 818.00, 1_511.75, 4_473.00]),
    ];
    let mut mismatches = Vec::new();
    for (field, want) in expected {
        let stats = &summary.iter().find(|(f, _)| *f == field).ok_or("missing field")?.1;
        let got = [
            stats.mean,
            stats.stddev.unwrap_or(f64::NAN),
            stats.min,
            stats.q1,
            stats.median,
            stats.q3,
            stats.max,
        ];
        for (name, (g, w)) in ["mean", "std", "min", "q1", "median", "q3", "max"].iter().zip(got.iter().zip(want)) {
            if format!("{g:.2}") != format!("{w:.2}") {
                mismatches.push(format!("{} {name} {g:.2} vs {w:.2}", field.name()));
            }
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok(format!("{} departments; 21 statistics match to 2 decimals", aggregates.len()))
}

fn report(number: usize, description: &str, outcome: Outcome, elapsed: Duration) -> bool {
    let (tag, detail, ok) = match outcome {
        Outcome::Pass(d) => ("PASS", d, true),
        Outcome::Fail(d) => ("FAIL", d, false),
        Outcome::Skip(d) => ("SKIP", d, true),
    };
    println!("criterion {number:>2}: {tag}: {description} [{detail}] ({elapsed:.2?})");
    ok
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this harness.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let always: [(&str, fn() -> Check); 7] = [
        ("metric axioms and order monotonicity", metric_axioms),
        ("KNN matches exhaustive-sort oracle", knn_oracle),
        ("logistic gradient vs finite differences; monotone traces", gradient_check),
        ("separable two-blob fixture fits", separable_fit),
        ("imbalanced uninformative data predicts majority only", imbalance),
        ("one-hot, z-score and split properties", preprocessing),
        ("interval, correlation and SVG properties", exploration),
    ];
    let mut all_ok = true;
    for (i, (description, check)) in always.iter().enumerate() {
        let start = Instant::now();
        let outcome = match check() {
            Ok(d) => Outcome::Pass(d),
            Err(d) => Outcome::Fail(d),
        };
        all_ok &= report(i + 1, description, outcome, start.elapsed());
    }

    let conditional = [
        "ingest totals and claim histogram",
        "KNN k=20 accuracy, train accuracy and run time",
        "no-claim precision/recall and logistic degeneracy",
        "department statistics",
    ];
    match common::cas_data_dir() {
        None => {
            for (i, description) in conditional.iter().enumerate() {
                let why = "CLAIMCLASS_DATA_DIR not set or files missing".to_string();
                report(i + 8, description, Outcome::Skip(why), Duration::ZERO);
            }
        }
        Some(dir) => {
            let start = Instant::now();
            let loaded = load_cas(&dir);
            let outcome = |r: Check| match r {
                Ok(d) => Outcome::Pass(d),
                Err(d) => Outcome::Fail(d),
            };
            match loaded {
                Err(e) => {
                    for (i, description) in conditional.iter().enumerate() {
                        all_ok &= report(i + 8, description, Outcome::Fail(format!("ingest failed: {e}")), start.elapsed());
                    }
                }
                Ok(data) => {
                    all_ok &= report(8, conditional[0], outcome(cas_ingest(&data)), start.elapsed());
                    let start = Instant::now();
                    match cas_prepared(&data) {
                        Ok(prepared) => {
                            all_ok &= report(9, conditional[1], outcome(cas_knn(&prepared)), start.elapsed());
                            let start = Instant::now();
                            all_ok &= report(10, conditional[2], outcome(cas_metrics(&prepared)), start.elapsed());
                        }
                        Err(e) => {
                            for (i, description) in conditional.iter().enumerate().skip(1).take(2) {
                                all_ok &= report(i + 8, description, Outcome::Fail(e.clone()), start.elapsed());
                            }
                        }
                    }
                    let start = Instant::now();
                    all_ok &= report(11, conditional[3], outcome(cas_departments(&data)), start.elapsed());
                }
            }
        }
    }
    if !all_ok {
        std::process::exit(1);
    }
}
