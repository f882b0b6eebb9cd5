use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rbc_core::ensemble::EnsembleSpec;
use rbc_core::experiments::fixtures::{check_all, FixtureCheck, F1_TOLERANCE_PP, SDS_TOLERANCE_PP};
use rbc_core::experiments::ExperimentPlan;
use rbc_core::features::{extract_batch, extract_dataset, registry, ExtractionConfig};
use rbc_core::importance::{mdi_importance, permutation_importance};
use rbc_core::io::{load_directory, load_manifest, write_cells};
use rbc_core::learners::{LearnerConfig, LearnerKind};
use rbc_core::metrics::{format_percent, suite, MetricId};
use rbc_core::model::{ModelSpec, TrainedModel, FORMAT_VERSION};
use rbc_core::parallel::with_threads;
use rbc_core::synth::{generate, SynthConfig};
use rbc_core::{ClassLabel, ConfusionMatrix, FeatureGroup, FeatureSchema, FeatureTable, Matrix};
use serde::{Deserialize, Serialize};

use crate::cli::{Cli, Command, ExperimentCommand, Method};

const DEFAULT_SEED: u64 = 42;

/// Defaults read from `--config`; command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    threads: Option<usize>,
    output_dir: Option<PathBuf>,
    extraction: Option<ExtractionConfig>,
}

struct Settings {
    seed: u64,
    /// True when the seed came from the command line or the config file.
    seed_given: bool,
    threads: usize,
    output_dir: Option<PathBuf>,
    extraction: ExtractionConfig,
}

impl Settings {
    fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        let seed = cli.seed.or(file.seed);
        Ok(Self {
            seed: seed.unwrap_or(DEFAULT_SEED),
            seed_given: seed.is_some(),
            threads: cli.threads.or(file.threads).unwrap_or(0),
            output_dir: cli.output_dir.clone().or(file.output_dir),
            extraction: file.extraction.unwrap_or_default(),
        })
    }

    /// `p` under the output directory when it is relative and one is set.
    fn out(&self, p: &Path) -> Result<PathBuf> {
        let path = match &self.output_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        };
        if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let settings = Settings::resolve(&cli)?;
    if !cli.quiet {
        eprintln!(
            "rbc {} | seed {} | threads {} | registry {} | model format {FORMAT_VERSION}",
            env!("CARGO_PKG_VERSION"),
            settings.seed,
            if settings.threads == 0 { "auto".to_string() } else { settings.threads.to_string() },
            &registry().digest()[..16],
        );
    }
    with_threads(settings.threads, || dispatch(cli.command, &settings))?
}

fn dispatch(command: Command, s: &Settings) -> Result<()> {
    match command {
        Command::Extract(a) => {
            let cells = match (&a.manifest, &a.dir) {
                (Some(m), _) => load_manifest(m)?,
                (None, Some(d)) => load_directory(d)?,
                (None, None) => unreachable!("clap requires a source"),
            };
            let groups = if a.groups.is_empty() { FeatureGroup::ALL.to_vec() } else { canonical_groups(&a.groups) };
            let mut cfg = s.extraction;
            if let Some(side) = a.target_side {
                cfg.target_side = Some(side);
            }
            if let Some(levels) = a.glcm_levels {
                cfg.glcm_levels = levels;
            }
            let vectors = extract_batch(&cells, &groups, &cfg)?;
            let schema = FeatureSchema::for_groups(&groups);
            let mut data = Vec::with_capacity(vectors.len() * schema.len());
            vectors.iter().for_each(|v| data.extend_from_slice(v.values()));
            let table = FeatureTable {
                features: Matrix::from_vec(vectors.len(), schema.len(), data)?,
                schema,
                ids: cells.iter().map(|c| c.id.clone()).collect(),
                labels: cells.iter().map(|c| c.label).collect(),
            };
            log::info!("extracted {} cells x {} features", cells.len(), table.schema.len());
            match a.out {
                Some(p) => table.write_csv(s.out(&p)?)?,
                None => table.write_to(std::io::stdout().lock())?,
            }
        }
        Command::Train(a) => {
            let spec = match (&a.ensemble, a.learner) {
                (Some(p), _) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let spec: EnsembleSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
                    ModelSpec::Ensemble(spec)
                }
                (None, Some(kind)) => ModelSpec::Single(learner_config(kind, a.params.as_deref())?),
                (None, None) => unreachable!("clap requires a model"),
            };
            let data = FeatureTable::read_csv(&a.data)?.into_labeled()?;
            let (model, diag) = TrainedModel::train(&spec, &data, s.seed)?;
            if let Some(d) = diag {
                log::info!("stacking: {} meta-features per sample, out-of-fold check {}", d.meta_features.cols(), if d.leakage_free() { "passed" } else { "FAILED" });
            }
            let out = s.out(&a.out)?;
            model.save(&out)?;
            eprintln!("trained {} on {} samples -> {}", model.learner_kind, data.len(), out.display());
        }
        Command::Predict(a) => {
            let model = TrainedModel::load(&a.model)?;
            let table = FeatureTable::read_csv(&a.data)?;
            let (labels, proba) = model.predict_matrix(&table.schema, &table.features)?;
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&a.data)?;
            let mut header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
            header.push("predicted".into());
            if a.proba {
                header.extend(ClassLabel::ALL.iter().map(|l| format!("p_{}", l.name())));
            }
            let sink: Box<dyn Write> = match &a.out {
                Some(p) => Box::new(fs::File::create(s.out(p)?)?),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&header)?;
            for ((rec, label), p) in rdr.records().zip(&labels).zip(&proba) {
                let mut row: Vec<String> = rec?.iter().map(str::to_string).collect();
                row.push(label.name().to_string());
                if a.proba {
                    row.extend(p.iter().map(f64::to_string));
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Command::Evaluate(a) => {
            let model = TrainedModel::load(&a.model)?;
            let data = FeatureTable::read_csv(&a.data)?.into_labeled()?;
            let (cm, m) = model.evaluate(&data)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "confusion": cm, "metrics": m }))?);
            } else {
                println!("{cm}");
                print_suite(&m);
            }
        }
        Command::Importance(a) => {
            let model = TrainedModel::load(&a.model)?;
            let report = match a.method {
                Method::Mdi => mdi_importance(&model)?,
                Method::Permutation => {
                    let path = a.data.as_ref().expect("clap requires --data");
                    let data = FeatureTable::read_csv(path)?.into_labeled()?;
                    permutation_importance(&model, &data, a.metric, a.repeats, s.seed)?
                }
            };
            let csv = report.to_csv()?;
            match a.out {
                Some(p) => fs::write(s.out(&p)?, csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Experiment(e) => experiment(e, s)?,
        Command::InspectModel(a) => inspect_model(&a.model, a.json)?,
        Command::InspectRegistry => {
            let reg = registry();
            println!("index,name,group");
            for (i, e) in reg.entries().iter().enumerate() {
                println!("{i},{},{}", e.name, e.group);
            }
            eprintln!("{} features, digest {}", reg.len(), reg.digest());
        }
        Command::Metrics(a) => {
            let text = fs::read_to_string(&a.from_matrix).with_context(|| format!("reading {}", a.from_matrix.display()))?;
            let cm = parse_matrix(&text).with_context(|| format!("parsing {}", a.from_matrix.display()))?;
            let single = if a.sds {
                Some(MetricId::Sds)
            } else if a.f1 {
                Some(MetricId::F1Weighted)
            } else {
                a.metric
            };
            match single {
                Some(MetricId::Mcc) => println!("{:.4}", MetricId::Mcc.compute(&cm)?),
                Some(id) => println!("{}", format_percent(id.compute(&cm)?)),
                None if a.json => println!("{}", serde_json::to_string_pretty(&suite(&cm)?)?),
                None => print_suite(&suite(&cm)?),
            }
        }
    }
    Ok(())
}

fn experiment(e: ExperimentCommand, s: &Settings) -> Result<()> {
    match e {
        ExperimentCommand::Run { plan: path } => {
            let mut plan = ExperimentPlan::load(&path)?;
            if s.seed_given {
                plan.seed = s.seed;
            }
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let report = plan.run(&base)?;
            let dir = s.output_dir.clone().or_else(|| plan.output_dir(&base));
            if let Some(dir) = dir {
                report.write_all(&dir, &report.id)?;
                eprintln!("reports written to {}", dir.display());
            }
            print!("{}", report.to_markdown());
        }
        ExperimentCommand::ReplayFixtures { json } => {
            let checks = check_all()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&checks)?);
            } else {
                print_fixtures(&checks);
            }
            let bad = checks.iter().filter(|c| !c.sds_ok()).count();
            if bad > 0 {
                bail!("{bad} reference matrices miss their SDS value by more than {SDS_TOLERANCE_PP} pp");
            }
        }
        ExperimentCommand::Synth { out, n_cells, noise, features } => {
            let mut cfg = SynthConfig {
                seed: s.seed,
                ..Default::default()
            };
            if let Some(n) = n_cells {
                cfg.n_cells = n;
            }
            if let Some(n) = noise {
                cfg.noise = n;
            }
            let cells = generate(&cfg)?;
            let manifest = write_cells(s.out(&out)?, &cells)?;
            eprintln!("{} cells -> {}", cells.len(), manifest.display());
            if let Some(p) = features {
                let ds = extract_dataset(&cells, &FeatureGroup::ALL, &s.extraction)?;
                FeatureTable::from(&ds).write_csv(s.out(&p)?)?;
            }
        }
    }
    Ok(())
}

fn canonical_groups(requested: &[FeatureGroup]) -> Vec<FeatureGroup> {
    FeatureGroup::ALL.into_iter().filter(|g| requested.contains(g)).collect()
}

fn learner_config(kind: LearnerKind, params: Option<&str>) -> Result<LearnerConfig> {
    let Some(json) = params else {
        return Ok(LearnerConfig::default_for(kind));
    };
    let mut v: serde_json::Value = serde_json::from_str(json).context("parsing --params")?;
    let obj = v.as_object_mut().context("--params must be a JSON object")?;
    obj.insert("kind".into(), serde_json::to_value(kind)?);
    Ok(serde_json::from_value(v).context("--params")?)
}

/// Counts from a CSV matrix; header lines and a leading row-name column are skipped.
fn parse_matrix(text: &str) -> Result<ConfusionMatrix> {
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let fields: Vec<&str> = line.split([',', ';', '\t']).map(str::trim).collect();
        let nums: Vec<u64> = fields.iter().filter_map(|f| f.parse().ok()).collect();
        if nums.is_empty() {
            continue;
        }
        if nums.len() + 1 < fields.len() || (nums.len() < fields.len() && fields[0].parse::<u64>().is_ok()) {
            bail!("`{line}` is not a row of counts");
        }
        rows.push(nums);
    }
    Ok(ConfusionMatrix::new(rows)?)
}

fn print_suite(m: &rbc_core::metrics::MetricSuite) {
    for (name, v) in [
        ("accuracy", m.accuracy),
        ("sds", m.sds_score),
        ("f1_weighted", m.f1_weighted),
        ("f1_macro", m.f1_macro),
        ("f1_micro", m.f1_micro),
        ("cba", m.cba),
    ] {
        println!("{name:<12} {}%", format_percent(v));
    }
    println!("{:<12} {:.4}", "mcc", m.mcc);
    for (i, c) in m.per_class.iter().enumerate() {
        let name = ClassLabel::from_index(i).map_or_else(|| format!("class {i}"), |l| l.name().to_string());
        println!("{name:<12} precision {}% recall {}% f1 {}%", format_percent(c.precision), format_percent(c.recall), format_percent(c.f1));
    }
    for d in &m.degenerate {
        println!("note: {d}");
    }
}

fn print_fixtures(checks: &[FixtureCheck]) {
    println!("| Matrix | SDS | Reference | F1 | Reference | F1 delta |");
    println!("|---|---|---|---|---|---|");
    for c in checks {
        let flag = match (c.sds_ok(), c.f1_ok()) {
            (true, true) => "",
            (false, _) => " (SDS mismatch)",
            (true, false) => " (F1 outside tolerance)",
        };
        println!(
            "| {}{flag} | {:.2} | {:.2} | {:.2} | {:.2} | {:+.2} |",
            c.key,
            c.sds_pct,
            c.sds_reference,
            c.f1_pct,
            c.f1_reference,
            c.f1_delta()
        );
    }
    let f1_misses = checks.iter().filter(|c| !c.f1_ok()).count();
    eprintln!(
        "{} matrices; SDS within {SDS_TOLERANCE_PP} pp: {}; weighted F1 within {F1_TOLERANCE_PP} pp: {}",
        checks.len(),
        checks.iter().filter(|c| c.sds_ok()).count(),
        checks.len() - f1_misses
    );
}

#[derive(Serialize)]
struct MemberSummary {
    kind: LearnerKind,
    selector: String,
    columns: usize,
}

fn inspect_model(path: &Path, json: bool) -> Result<()> {
    let m = TrainedModel::load(path)?;
    let members: Vec<MemberSummary> = m
        .state
        .members()
        .iter()
        .map(|f| MemberSummary {
            kind: f.kind,
            selector: f.selector.label(),
            columns: f.columns.len(),
        })
        .collect();
    if json {
        let v = serde_json::json!({
            "format_version": m.format_version,
            "created": m.created,
            "learner_kind": m.learner_kind,
            "seed": m.seed,
            "schema_hash": m.schema_hash,
            "n_features": m.feature_names.len(),
            "standardizer_hash": m.standardizer.hash(),
            "members": members,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(());
    }
    println!("format version  {}", m.format_version);
    println!("created         {}", m.created);
    println!("learner         {}", m.learner_kind);
    println!("seed            {}", m.seed);
    println!("schema          {} ({} features)", m.schema_hash, m.feature_names.len());
    println!("standardizer    {}", m.standardizer.hash());
    for (i, s) in members.iter().enumerate() {
        println!("member {i}        {} on {} ({} columns)", s.kind, s.selector, s.columns);
    }
    Ok(())
}
