use crate::artifacts::{
    sha256_bytes, sha256_file, write_text, IngestSummary, Manifest, ModelFile, SavedModel, INGEST_FILE, MERGED_FILE,
    MODEL_FORMAT_VERSION,
};
use crate::config::RunConfig;
use crate::{Cli, Command, Failure, ModelKind, PlotKind, SweepParam};
use anyhow::{anyhow, bail, Context};
use claimclass::eval::{evaluate, write_c_sweep_csv, write_k_sweep_csv, write_path_csv, CSweepRow, MetricsReport};
use claimclass::explore::svg::{render_bar_with_ci, render_heatmap, render_line, LineOptions, Series};
use claimclass::explore::{
    aggregate_by_department, claim_proportion_by_level, default_binning, department_summary,
    pearson_correlation_matrix, render_choropleth, write_department_csv, write_proportions_csv, write_summary_csv,
    ProportionOptions, ProportionRow, ValueField,
};
use claimclass::ingest::{
    aggregate_claims, claim_frequency_histogram, impute_vh_age, merge, parse_claim_csv, parse_labeled_csv,
    read_policies_with, write_labeled_csv, Label, LabeledDataset,
};
use claimclass::knn::{accuracy_vs_k_sweep, KnnModel};
use claimclass::logreg::{fit_matrix, regularization_path, LogregModel};
use claimclass::preprocess::{prepare, prepare_with_schema, subsample, EncodedMatrix, Prepared};
use ndarray::Array2;
use std::path::{Path, PathBuf};

type Outcome = Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

pub fn run(cli: Cli) -> Outcome {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.paths.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.preprocess.seed = seed;
    }
    if let Some(cap) = cli.subsample {
        config.preprocess.subsample = Some(cap);
    }
    if let Some(class) = cli.positive_class {
        config.evaluation.positive_class = class;
    }
    if cli.fit_on_train {
        config.preprocess.fit_on_train = true;
    }
    config.validate().map_err(usage)?;
    if cli.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let ctx = Runner { config, threads: cli.threads };
    match cli.command {
        Command::Ingest { policies, claims } => ctx.ingest(policies, claims),
        Command::Explore { geojson } => ctx.explore(geojson),
        Command::Train { model, output } => ctx.train(model, output),
        Command::Evaluate { model_file } => ctx.evaluate(&model_file),
        Command::Sweep { param, values } => ctx.sweep(param, values),
        Command::Plot { input, kind, output, title } => ctx.plot(&input, kind, output, title),
    }
}

struct Runner {
    config: RunConfig,
    threads: usize,
}

fn existing_file(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str, flag_name: &str) -> Result<PathBuf, Failure> {
    let path = flag
        .or_else(|| configured.clone())
        .ok_or_else(|| usage(format!("no {what}: pass {flag_name} or set it in the config")))?;
    if !path.is_file() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

fn write_csv_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut buffer = Vec::new();
    write(&mut buffer)?;
    write_text(path, std::str::from_utf8(&buffer)?)
}

impl Runner {
    fn out(&self) -> &Path {
        &self.config.paths.out
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, &self.config, self.threads)
    }

    fn ingest(mut self, policies: Option<PathBuf>, claims: Option<PathBuf>) -> Outcome {
        let policies = existing_file(policies, &self.config.paths.policies, "policy file", "--policies")?;
        let claims = existing_file(claims, &self.config.paths.claims, "claim file", "--claims")?;
        self.config.paths.policies = Some(policies.clone());
        self.config.paths.claims = Some(claims.clone());
        let separator = self.config.ingest.id_separator.clone();

        let file = std::fs::File::open(&policies).with_context(|| format!("cannot open {}", policies.display()))?;
        let records = read_policies_with(file, &separator).map_err(anyhow::Error::from)?;
        let claim_rows = parse_claim_csv(&claims).map_err(anyhow::Error::from)?;
        let totals = aggregate_claims(&claim_rows, &separator).map_err(anyhow::Error::from)?;
        let merged = merge(records, &totals).map_err(anyhow::Error::from)?;
        let histogram = claim_frequency_histogram(&merged);
        let total_claims = merged.total_claims();
        let total_claim_amount = sorted_sum(merged.rows.iter().map(|r| r.claim_amount));
        let missing = merged.rows.iter().filter(|r| r.policy.vh_age.is_none()).count();
        let before = merged.len();
        let dataset = impute_vh_age(merged, &self.config.ingest.strategy()).map_err(anyhow::Error::from)?;

        let mut csv = Vec::new();
        write_labeled_csv(&dataset, &mut csv).map_err(anyhow::Error::from)?;
        let merged_path = self.out().join(MERGED_FILE);
        write_text(&merged_path, std::str::from_utf8(&csv).context("merged table is not UTF-8")?)?;

        let with_claims = dataset.rows.iter().filter(|r| r.label == Label::Claim).count();
        let n = dataset.len();
        let summary = IngestSummary {
            policies: n,
            total_claims,
            total_claim_amount,
            without_claims: n - with_claims,
            with_claims,
            without_claims_share: (n - with_claims) as f64 / n.max(1) as f64,
            with_claims_share: with_claims as f64 / n.max(1) as f64,
            imputed_vh_age: if before == n { missing } else { 0 },
            dropped_rows: before - n,
            claim_histogram: histogram,
            merged_sha256: sha256_bytes(&csv),
        };
        let summary_path = self.out().join(INGEST_FILE);
        write_text(&summary_path, &(serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n"))?;

        println!("policies:        {}", summary.policies);
        println!("claims:          {} totalling {:.2}", summary.total_claims, summary.total_claim_amount);
        println!(
            "without claims:  {} ({:.1}%)",
            summary.without_claims,
            100.0 * summary.without_claims_share
        );
        println!("with claims:     {} ({:.1}%)", summary.with_claims, 100.0 * summary.with_claims_share);
        println!("vh_age imputed:  {}, rows dropped: {}", summary.imputed_vh_age, summary.dropped_rows);
        println!("claims per policy:");
        for (claims, count) in &summary.claim_histogram {
            println!("  {claims:>2}  {count}");
        }

        let mut manifest = self.manifest("ingest");
        manifest.input(&policies)?;
        manifest.input(&claims)?;
        manifest.output(&merged_path)?;
        manifest.output(&summary_path)?;
        manifest.write(self.out())?;
        Ok(())
    }

    /// The merged table from a previous `ingest`, checked against its hash.
    fn load_merged(&self) -> Result<(LabeledDataset, String), Failure> {
        let merged = self.out().join(MERGED_FILE);
        let summary = self.out().join(INGEST_FILE);
        if !merged.is_file() || !summary.is_file() {
            return Err(usage(format!(
                "no ingest artifact in {}; run `claimclass ingest` first",
                self.out().display()
            )));
        }
        let summary: IngestSummary = serde_json::from_str(
            &std::fs::read_to_string(&summary).with_context(|| format!("cannot read {}", summary.display()))?,
        )
        .with_context(|| format!("{} is not an ingest summary", summary.display()))?;
        let hash = sha256_file(&merged)?;
        if hash != summary.merged_sha256 {
            return Err(anyhow!("{} does not match the hash recorded by ingest", merged.display()).into());
        }
        let dataset = parse_labeled_csv(&merged).map_err(anyhow::Error::from)?;
        Ok((dataset, hash))
    }

    fn prepare(&self, dataset: &LabeledDataset) -> anyhow::Result<(Prepared, Vec<usize>)> {
        let prepared = prepare(dataset, &self.config.preprocess.prepare_options())?;
        let train_rows = self.training_rows(&prepared, self.config.preprocess.subsample);
        Ok((prepared, train_rows))
    }

    fn training_rows(&self, prepared: &Prepared, cap: Option<usize>) -> Vec<usize> {
        match cap {
            Some(cap) => subsample(&prepared.split.train, cap, prepared.split.seed),
            None => prepared.split.train.clone(),
        }
    }

    fn positive(&self) -> Label {
        self.config.evaluation.positive_class.label()
    }

    fn report(&self, report: &MetricsReport, path: &Path) -> anyhow::Result<()> {
        print!("{}", report.to_text());
        write_text(path, &(report.to_json() + "\n"))
    }

    fn train(self, kind: ModelKind, output: Option<PathBuf>) -> Outcome {
        let (dataset, hash) = self.load_merged()?;
        let (prepared, train_rows) = self.prepare(&dataset)?;
        let train = prepared.matrix.select_rows(&train_rows);
        let positive = self.positive();
        let (saved, report, extra) = match kind {
            ModelKind::Knn => {
                let knn = &self.config.knn;
                let model = KnnModel::fit(&train, knn.k, knn.metric, knn.weighting).map_err(anyhow::Error::from)?;
                let report = evaluate(&model, &train, positive, self.threads).map_err(anyhow::Error::from)?;
                let saved = SavedModel::Knn { k: knn.k, metric: knn.metric, weighting: knn.weighting };
                (saved, report, None)
            }
            ModelKind::Logreg => {
                let section = &self.config.logreg;
                let lambda = section.lambda().map_err(usage)?;
                let model = fit_matrix(&train, section.penalty, lambda, &section.fit).map_err(anyhow::Error::from)?;
                let report = score_logreg(&model, section.threshold, &train, positive)?;
                let mut trace = String::from("iteration,objective\n");
                for point in &model.trace {
                    trace.push_str(&format!("{},{}\n", point.iteration, point.objective));
                }
                eprintln!(
                    "optimizer stopped after {} iterations ({:?})",
                    model.trace.last().map_or(0, |p| p.iteration),
                    model.stop_reason
                );
                (SavedModel::Logreg { model, threshold: section.threshold }, report, Some(trace))
            }
        };
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            dataset_sha256: hash,
            prepare: self.config.preprocess.prepare_options(),
            subsample: self.config.preprocess.subsample,
            schema: prepared.matrix.schema.clone(),
            scaling: prepared.scaling.clone(),
            model: saved,
        };
        let model_path = output.unwrap_or_else(|| self.out().join(format!("model_{}.json", kind.name())));
        file.write(&model_path)?;
        println!("model written to {}", model_path.display());
        println!("training split:");
        let metrics_path = self.out().join(format!("train_metrics_{}.json", kind.name()));
        self.report(&report, &metrics_path)?;

        let mut manifest = self.manifest(&format!("train_{}", kind.name()));
        manifest.input(&self.out().join(MERGED_FILE))?;
        manifest.output(&model_path)?;
        manifest.output(&metrics_path)?;
        if let Some(trace) = extra {
            let trace_path = self.out().join("logreg_trace.csv");
            write_text(&trace_path, &trace)?;
            manifest.output(&trace_path)?;
        }
        manifest.write(self.out())?;
        Ok(())
    }

    fn evaluate(self, model_path: &Path) -> Outcome {
        if !model_path.is_file() {
            return Err(usage(format!("model file {} does not exist", model_path.display())));
        }
        let file = ModelFile::read(model_path)?;
        let (dataset, hash) = self.load_merged()?;
        if hash != file.dataset_sha256 {
            return Err(anyhow!("model was trained on a different ingest artifact (dataset hash mismatch)").into());
        }
        let prepared = prepare_with_schema(&dataset, file.schema.clone(), &file.prepare).map_err(anyhow::Error::from)?;
        if prepared.scaling != file.scaling {
            return Err(anyhow!("rebuilt scaling parameters differ from the model file").into());
        }
        let test = prepared.test();
        let positive = self.positive();
        let (kind, report) = match &file.model {
            SavedModel::Knn { k, metric, weighting } => {
                let train = prepared.matrix.select_rows(&self.training_rows(&prepared, file.subsample));
                let model = KnnModel::fit(&train, *k, *metric, *weighting).map_err(anyhow::Error::from)?;
                ("knn", evaluate(&model, &test, positive, self.threads).map_err(anyhow::Error::from)?)
            }
            SavedModel::Logreg { model, threshold } => {
                if model.schema != file.schema {
                    return Err(anyhow!("model schema differs from the stored feature schema").into());
                }
                ("logreg", score_logreg(model, *threshold, &test, positive)?)
            }
        };
        let metrics_path = self.out().join(format!("metrics_{kind}.json"));
        self.report(&report, &metrics_path)?;
        let mut manifest = self.manifest(&format!("evaluate_{kind}"));
        manifest.input(model_path)?;
        manifest.input(&self.out().join(MERGED_FILE))?;
        manifest.output(&metrics_path)?;
        manifest.write(self.out())?;
        Ok(())
    }

    fn sweep(self, param: SweepParam, values: Option<Vec<f64>>) -> Outcome {
        let (dataset, _) = self.load_merged()?;
        let (prepared, train_rows) = self.prepare(&dataset)?;
        let train = prepared.matrix.select_rows(&train_rows);
        let test = prepared.test();
        let mut manifest = self.manifest(&format!("sweep_{}", if param == SweepParam::K { "k" } else { "c" }));
        manifest.input(&self.out().join(MERGED_FILE))?;
        match param {
            SweepParam::K => {
                let ks: Vec<usize> = match values {
                    Some(values) => values
                        .iter()
                        .map(|&v| {
                            if v >= 1.0 && v.fract() == 0.0 {
                                Ok(v as usize)
                            } else {
                                Err(usage(format!("k values must be positive integers, got {v}")))
                            }
                        })
                        .collect::<Result<_, _>>()?,
                    None => self.config.sweep.k_values.clone(),
                };
                if ks.is_empty() {
                    return Err(usage("no k values to sweep"));
                }
                let knn = &self.config.knn;
                let rows = accuracy_vs_k_sweep(&train, &test, &ks, knn.metric, knn.weighting, self.threads)
                    .map_err(anyhow::Error::from)?;
                let csv_path = self.out().join("k_sweep.csv");
                write_csv_file(&csv_path, |buf| Ok(write_k_sweep_csv(&rows, buf)?))?;
                let series = vec![
                    Series { name: "train".into(), points: rows.iter().map(|r| (r.k as f64, r.train_accuracy)).collect() },
                    Series { name: "test".into(), points: rows.iter().map(|r| (r.k as f64, r.test_accuracy)).collect() },
                ];
                let options = LineOptions {
                    title: "Training and test accuracy by number of neighbours".into(),
                    x_label: "k".into(),
                    y_label: "accuracy".into(),
                    log_x: false,
                };
                let svg_path = self.out().join("k_sweep.svg");
                write_text(&svg_path, &render_line(&series, &options).map_err(anyhow::Error::from)?)?;
                for row in &rows {
                    println!("k={:<4} train={:.4} test={:.4}", row.k, row.train_accuracy, row.test_accuracy);
                }
                manifest.output(&csv_path)?;
                manifest.output(&svg_path)?;
            }
            SweepParam::C => {
                let cs = values.unwrap_or_else(|| self.config.sweep.c_values.clone());
                if cs.is_empty() {
                    return Err(usage("no C values to sweep"));
                }
                if cs.iter().any(|c| !(*c > 0.0 && c.is_finite())) || cs.windows(2).any(|w| w[0] > w[1]) {
                    return Err(usage("C values must be positive and ascending"));
                }
                let section = &self.config.logreg;
                let path = regularization_path(&train, section.penalty, &cs, &section.fit).map_err(anyhow::Error::from)?;
                let mut rows = Vec::with_capacity(path.len());
                for point in &path {
                    let model = LogregModel {
                        weights: point.weights.clone().into(),
                        intercept: point.intercept,
                        penalty: section.penalty,
                        lambda: point.lambda,
                        schema: train.schema.clone(),
                        trace: Vec::new(),
                        stop_reason: claimclass::logreg::StopReason::ObjectiveTolerance,
                        gradient_norm: 0.0,
                    };
                    let train_acc = accuracy_of(&model, section.threshold, &train)?;
                    let test_acc = accuracy_of(&model, section.threshold, &test)?;
                    println!("C={:<10} train={train_acc:.4} test={test_acc:.4}", point.c);
                    rows.push(CSweepRow { c: point.c, train_accuracy: train_acc, test_accuracy: test_acc });
                }
                let sweep_csv = self.out().join("c_sweep.csv");
                write_csv_file(&sweep_csv, |buf| Ok(write_c_sweep_csv(&rows, buf)?))?;
                let path_csv = self.out().join("path.csv");
                write_csv_file(&path_csv, |buf| Ok(write_path_csv(&path, &train.schema, buf)?))?;
                let accuracy = vec![
                    Series { name: "train".into(), points: rows.iter().map(|r| (r.c, r.train_accuracy)).collect() },
                    Series { name: "test".into(), points: rows.iter().map(|r| (r.c, r.test_accuracy)).collect() },
                ];
                let sweep_svg = self.out().join("c_sweep.svg");
                let options = LineOptions {
                    title: "Training and test accuracy by C".into(),
                    x_label: "C".into(),
                    y_label: "accuracy".into(),
                    log_x: true,
                };
                write_text(&sweep_svg, &render_line(&accuracy, &options).map_err(anyhow::Error::from)?)?;
                let coefficients: Vec<Series> = train
                    .schema
                    .names()
                    .iter()
                    .enumerate()
                    .map(|(j, name)| Series {
                        name: name.to_string(),
                        points: path.iter().map(|p| (p.c, p.weights[j])).collect(),
                    })
                    .collect();
                let path_svg = self.out().join("path.svg");
                let options = LineOptions {
                    title: "Coefficients by C".into(),
                    x_label: "C".into(),
                    y_label: "coefficient".into(),
                    log_x: true,
                };
                write_text(&path_svg, &render_line(&coefficients, &options).map_err(anyhow::Error::from)?)?;
                for p in [&sweep_csv, &path_csv, &sweep_svg, &path_svg] {
                    manifest.output(p)?;
                }
            }
        }
        manifest.write(self.out())?;
        Ok(())
    }

    fn explore(mut self, geojson: Option<PathBuf>) -> Outcome {
        let geojson = geojson.or_else(|| self.config.paths.geojson.clone());
        if let Some(path) = &geojson {
            if !path.is_file() {
                return Err(usage(format!("GeoJSON file {} does not exist", path.display())));
            }
        }
        self.config.paths.geojson = geojson.clone();
        let (dataset, _) = self.load_merged()?;
        let section = &self.config.explore;
        let out = self.out().join("explore");
        let mut manifest = self.manifest("explore");
        manifest.input(&self.out().join(MERGED_FILE))?;
        let mut outputs = Vec::new();

        let options = ProportionOptions { counting: section.counting, method: section.ci_method, level: section.ci_level };
        for feature in &section.features {
            let binning = section.bins.get(feature).cloned().unwrap_or_else(|| default_binning(feature));
            let rows = claim_proportion_by_level(&dataset, feature, &binning, &options)
                .map_err(|e| usage(format!("explore.features: {e}")))?;
            let csv_path = out.join(format!("proportion_{feature}.csv"));
            write_csv_file(&csv_path, |buf| Ok(write_proportions_csv(&rows, buf)?))?;
            let svg_path = out.join(format!("proportion_{feature}.svg"));
            write_text(&svg_path, &render_bar_with_ci(&rows, feature).map_err(anyhow::Error::from)?)?;
            outputs.extend([csv_path, svg_path]);
        }

        let (matrix, names) = numeric_columns(&dataset, &section.heatmap_columns).map_err(usage)?;
        let correlation = pearson_correlation_matrix(&matrix, &names).map_err(anyhow::Error::from)?;
        let corr_csv = out.join("correlation.csv");
        write_csv_file(&corr_csv, |buf| Ok(correlation.write_csv(buf)?))?;
        let corr_svg = out.join("correlation.svg");
        write_text(
            &corr_svg,
            &render_heatmap(&correlation, "Correlation between continuous variables").map_err(anyhow::Error::from)?,
        )?;
        outputs.extend([corr_csv, corr_svg]);

        let departments = aggregate_by_department(&dataset).map_err(anyhow::Error::from)?;
        let dep_csv = out.join("departments.csv");
        write_csv_file(&dep_csv, |buf| Ok(write_department_csv(&departments, buf)?))?;
        let summary = department_summary(&departments).map_err(anyhow::Error::from)?;
        let summary_csv = out.join("department_summary.csv");
        write_csv_file(&summary_csv, |buf| Ok(write_summary_csv(&summary, buf)?))?;
        outputs.extend([dep_csv, summary_csv.clone()]);
        print!("{}", std::fs::read_to_string(&summary_csv).map_err(anyhow::Error::from)?);

        match &geojson {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
                manifest.input(path)?;
                for field in ValueField::ALL {
                    let map = render_choropleth(&text, &section.geojson_code_property, &departments, field.name())
                        .map_err(anyhow::Error::from)?;
                    if !map.unmapped.is_empty() {
                        eprintln!(
                            "warning: departments without an outline in the map: {}",
                            map.unmapped.join(", ")
                        );
                    }
                    let svg_path = out.join(format!("choropleth_{}.svg", field.name()));
                    write_text(&svg_path, &map.svg)?;
                    outputs.push(svg_path);
                }
            }
            None => eprintln!("warning: no GeoJSON configured; skipping choropleth maps"),
        }

        for path in &outputs {
            manifest.output(path)?;
        }
        manifest.write(self.out())?;
        println!("{} files written to {}", outputs.len(), out.display());
        Ok(())
    }

    fn plot(self, input: &Path, kind: PlotKind, output: Option<PathBuf>, title: Option<String>) -> Outcome {
        if !input.is_file() {
            return Err(usage(format!("input {} does not exist", input.display())));
        }
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
        let mut rdr = csv::Reader::from_path(input).map_err(anyhow::Error::from)?;
        let headers: Vec<String> = rdr.headers().map_err(anyhow::Error::from)?.iter().map(String::from).collect();
        let svg = match kind {
            PlotKind::Proportions => {
                let rows: Vec<ProportionRow> =
                    rdr.deserialize().collect::<Result<_, _>>().map_err(anyhow::Error::from)?;
                let feature = title.unwrap_or_else(|| stem.trim_start_matches("proportion_").to_string());
                render_bar_with_ci(&rows, &feature).map_err(anyhow::Error::from)?
            }
            PlotKind::KSweep | PlotKind::CSweep | PlotKind::Path => {
                let table = numeric_table(&mut rdr)?;
                let (first, log_x, x_label, y_label, default_title) = match kind {
                    PlotKind::KSweep => (1, false, "k", "accuracy", "Training and test accuracy by number of neighbours"),
                    PlotKind::CSweep => (1, true, "C", "accuracy", "Training and test accuracy by C"),
                    _ => (2, true, "C", "coefficient", "Coefficients by C"),
                };
                if headers.len() <= first {
                    return Err(anyhow!("{} has no value columns", input.display()).into());
                }
                let series = headers[first..]
                    .iter()
                    .enumerate()
                    .map(|(j, name)| Series {
                        name: name.trim_end_matches("_accuracy").to_string(),
                        points: table.iter().map(|row| (row[0], row[first + j])).collect(),
                    })
                    .collect::<Vec<_>>();
                let options = LineOptions {
                    title: title.unwrap_or_else(|| default_title.to_string()),
                    x_label: x_label.into(),
                    y_label: y_label.into(),
                    log_x,
                };
                render_line(&series, &options).map_err(anyhow::Error::from)?
            }
        };
        let output = output.unwrap_or_else(|| input.with_extension("svg"));
        write_text(&output, &svg)?;
        println!("wrote {}", output.display());
        Ok(())
    }
}

fn numeric_table(rdr: &mut csv::Reader<std::fs::File>) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut table = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|cell| cell.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| anyhow!("line {}: {e}", i + 2))?;
        table.push(row);
    }
    if table.is_empty() {
        bail!("no data rows");
    }
    Ok(table)
}

/// Exact sum that does not depend on row order.
fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn score_logreg(model: &LogregModel, threshold: f64, data: &EncodedMatrix, positive: Label) -> anyhow::Result<MetricsReport> {
    if model.schema != data.schema {
        bail!("matrix layout does not match the model");
    }
    let predicted = model.predict_with_threshold(&data.values, threshold)?;
    let description = format!("logreg(penalty={}, lambda={}, C={}, threshold={threshold})", model.penalty, model.lambda, model.c());
    Ok(MetricsReport::from_predictions(description, &data.labels, &predicted, positive)?)
}

fn accuracy_of(model: &LogregModel, threshold: f64, data: &EncodedMatrix) -> anyhow::Result<f64> {
    let predicted = model.predict_with_threshold(&data.values, threshold)?;
    let hits = predicted.iter().zip(&data.labels).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / data.labels.len() as f64)
}

/// Numeric columns for the heatmap, dropping rows with any missing value.
fn numeric_columns(dataset: &LabeledDataset, names: &[String]) -> Result<(Array2<f64>, Vec<String>), String> {
    let mut values = Vec::with_capacity(dataset.len() * names.len());
    let mut rows = 0;
    'rows: for row in &dataset.rows {
        let start = values.len();
        for name in names {
            match row.policy.feature(name) {
                Some(v) => match v.as_number() {
                    Some(x) => values.push(x),
                    None if matches!(v, claimclass::ingest::FeatureValue::Missing) => {
                        values.truncate(start);
                        continue 'rows;
                    }
                    None => return Err(format!("heatmap column `{name}` is not numeric")),
                },
                None => return Err(format!("unknown heatmap column `{name}`")),
            }
        }
        rows += 1;
    }
    let matrix = Array2::from_shape_vec((rows, names.len()), values).map_err(|e| e.to_string())?;
    Ok((matrix, names.to_vec()))
}
