use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ddd_core::consistency::{
    kappa_planes, pairwise_kappa_matrix, rdm, rsa_correlation, within_condition_consistency, FeatureTable,
    RsaMethod,
};
use ddd_core::ddd::{
    binomial_baseline, class_accuracy, classify_difficulty, correct_counts, epoch_dynamics,
    histogram_csv, order_images_by_mean_accuracy, overlay_histogram, restricted_kappa,
    subsample_export, BaselineMode, Keep, OrderScope,
};
use ddd_core::decision_log::{
    assemble_cube, load_cache, parse_records, read_cache, save_cache, write_records_csv, LogFormat,
};
use ddd_core::experiment::{build_manifest, Experiment, ExperimentManifest, LogEvent};
use ddd_core::render::{
    render_decision_raster, render_heatmap, RasterMode, RenderSpec, RenderTarget,
};
use ddd_core::sim::{expected_ddd_index, expected_kappa, simulate_cube};
use ddd_core::synth::{
    evaluate_oracle_dir, generate_dataset, kl_adjacent, GaussianSpec, ImageShape,
};
use ddd_core::{DecisionCube, DifficultyRegime};

use crate::args::{
    BaselineArg, Cli, Command, CubeArgs, EpochArg, ImageFormat, InputFormat, MethodArg, OrderArg,
    RegimeArg, SubsetArgs, SynthAction,
};

/// Flag combinations clap cannot express; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage errors, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<UsageError>() {
        2
    } else {
        1
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load(args: &CubeArgs) -> Result<(DecisionCube, u32)> {
    let cube = load_cache(&args.cube).with_context(|| format!("loading {}", args.cube.display()))?;
    let epoch = match args.epoch {
        EpochArg::Last => cube.last_epoch(),
        EpochArg::At(e) => {
            cube.epoch_index(e)?;
            e
        }
    };
    Ok((cube, epoch))
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut ids = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

fn image_format(explicit: Option<ImageFormat>, path: &Path) -> Result<RenderTarget> {
    let format = match explicit {
        Some(f) => f,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("svg") => ImageFormat::Svg,
            Some("ppm") => ImageFormat::Ppm,
            Some("csv") => ImageFormat::Csv,
            _ => return Err(usage(format!("cannot tell image format of {}; pass --format", path.display()))),
        },
    };
    Ok(match format {
        ImageFormat::Svg => RenderTarget::Svg,
        ImageFormat::Ppm => RenderTarget::Ppm,
        ImageFormat::Csv => RenderTarget::Csv,
    })
}

fn pct(n: usize, total: usize) -> f64 {
    100.0 * n as f64 / total.max(1) as f64
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Ingest { input, format, out, records_out } => {
            ingest(&input, format, out.as_deref(), records_out.as_deref())
        }
        Command::Kappa { cube, a, b, subset } => {
            let (cube, epoch) = load(&cube)?;
            let (k, images) = match &subset {
                Some(path) => {
                    let ids = read_ids(path)?;
                    (restricted_kappa(&cube, epoch, &a, &b, &ids)?, ids.len())
                }
                None => {
                    let e = cube.epoch_index(epoch)?;
                    let pa = cube.plane(cube.model_index(&a)?, e);
                    let pb = cube.plane(cube.model_index(&b)?, e);
                    (kappa_planes(pa, pb)?, cube.n_images())
                }
            };
            let doc = serde_json::json!({
                "model_a": a,
                "model_b": b,
                "epoch": epoch,
                "images": images,
                "c_obs": k.c_obs,
                "c_exp": k.c_exp,
                "kappa": k.kappa,
                "accuracy_a": k.p_i,
                "accuracy_b": k.p_j,
            });
            emit(None, format!("{}\n", serde_json::to_string_pretty(&doc)?).as_bytes())
        }
        Command::Matrix { cube, out, condition, heatmap, format, cell } => {
            let (cube, epoch) = load(&cube)?;
            if let Some(condition) = condition {
                let mean = within_condition_consistency(&cube, epoch, &condition)?;
                return emit(out.as_deref(), format!("condition,epoch,mean_kappa\n{condition},{epoch},{mean:.6}\n").as_bytes());
            }
            let matrix = pairwise_kappa_matrix(&cube, epoch)?;
            if let Some(path) = &heatmap {
                let spec = RenderSpec {
                    cell_width: cell,
                    cell_height: cell,
                    ..RenderSpec::new(image_format(format, path)?)
                };
                emit(Some(path), &render_heatmap(&matrix, &spec)?.into_bytes())?;
            }
            if heatmap.is_none() || out.is_some() {
                emit(out.as_deref(), matrix.to_csv().as_bytes())?;
            }
            Ok(())
        }
        Command::Histogram { cube, subset, baseline, p, samples, overlay, out } => {
            let (cube, epoch) = load(&cube)?;
            let counts = correct_counts(&cube, epoch, subset.models.as_deref())?;
            let hist = counts.histogram();
            let total = hist.total();
            let p = match p {
                Some(p) => p,
                None => {
                    let hits: u64 = counts.counts.iter().map(|&c| u64::from(c)).sum();
                    hits as f64 / (total as f64 * counts.models as f64)
                }
            };
            let mode = match baseline {
                BaselineArg::Exact => BaselineMode::Exact { total },
                BaselineArg::Sampled => BaselineMode::Sampled {
                    images: samples.unwrap_or(total as usize) as u64,
                    seed,
                },
            };
            let mut base = binomial_baseline(counts.models, p, mode)?;
            // Sampled baselines are rescaled to the cube's image count.
            base.counts = base.normalized().iter().map(|f| f * total as f64).collect();
            let over = match &overlay {
                Some(path) => Some(overlay_histogram(&counts, &read_ids(path)?)?),
                None => None,
            };
            emit(out.as_deref(), histogram_csv(&hist, &base, over.as_ref()).as_bytes())
        }
        Command::Classify { cube, subset, tolerance, out, manifest_out, trials, exclude } => {
            let (cube, epoch) = load(&cube)?;
            classify(&cube, epoch, &subset, tolerance, out.as_deref(), manifest_out.as_deref(), trials, exclude.as_deref(), seed)
        }
        Command::Subsample { cube, subset, tolerance, band, out } => {
            let (cube, epoch) = load(&cube)?;
            let counts = correct_counts(&cube, epoch, subset.models.as_deref())?;
            let partition = classify_difficulty(&counts, tolerance)?;
            let keep = match band {
                None => Keep::Inconclusive,
                Some(b) => parse_band(&b)?,
            };
            let sub = subsample_export(&partition, keep);
            if let Some(w) = &sub.warning {
                eprintln!("warning: {w}");
            }
            emit(out.as_deref(), sub.to_text().as_bytes())
        }
        Command::Epochs {
            cube,
            model,
            order,
            order_out,
            raster,
            format,
            ensemble,
            binning,
            cell_width,
            cell_height,
        } => {
            let (cube, epoch) = load(&cube)?;
            if model.is_none() && order_out.is_none() && raster.is_none() {
                return Err(usage("epochs needs --model, --order-out or --raster"));
            }
            let order = order.unwrap_or(if model.is_some() { OrderArg::Model } else { OrderArg::All });
            let ordering = match order {
                OrderArg::Model => {
                    let m = model.clone().ok_or_else(|| usage("--order model needs --model"))?;
                    order_images_by_mean_accuracy(&cube, &OrderScope::ModelOverEpochs(m))?
                }
                OrderArg::All => order_images_by_mean_accuracy(&cube, &OrderScope::AllModelsAt(epoch))?,
                OrderArg::None => (0..cube.n_images()).collect(),
            };
            if let Some(path) = &order_out {
                let text: String = ordering.iter().map(|&i| format!("{}\n", cube.images()[i].id)).collect();
                emit(Some(path), text.as_bytes())?;
            }
            if let Some(path) = &raster {
                let mode = match (&model, ensemble) {
                    (Some(m), false) => RasterMode::SingleModel(m.clone()),
                    (None, false) => return Err(usage("a single-model raster needs --model; use --ensemble for all models")),
                    (_, true) => RasterMode::Ensemble,
                };
                let spec = RenderSpec {
                    cell_width,
                    cell_height,
                    binning,
                    ..RenderSpec::new(image_format(format, path)?)
                };
                emit(Some(path), &render_decision_raster(&cube, &ordering, &mode, &spec)?.into_bytes())?;
            }
            if let Some(m) = &model {
                let mut text = String::from("from,to,label_swap_rate,correctness_flip_rate,accuracy_delta\n");
                for step in epoch_dynamics(&cube, m)? {
                    let swap = step.label_swap_rate.map_or("NA".to_string(), |r| format!("{r:.6}"));
                    writeln!(
                        text,
                        "{},{},{swap},{:.6},{:.6}",
                        step.from, step.to, step.correctness_flip_rate, step.accuracy_delta
                    )?;
                }
                emit(None, text.as_bytes())?;
            }
            Ok(())
        }
        Command::Classes { cube, subset, k } => {
            let (cube, epoch) = load(&cube)?;
            let acc = class_accuracy(&cube, epoch, subset.models.as_deref(), k)?;
            if let Some(w) = &acc.warning {
                eprintln!("warning: {w}");
            }
            emit(None, format!("{}\n", serde_json::to_string_pretty(&acc)?).as_bytes())
        }
        Command::Synth { action } => synth(action, seed),
        Command::Sim { regime, p, trivial, impossible, p_mid, q_file, models, images, out, cube_out } => {
            let regime = match regime {
                RegimeArg::Uniform => DifficultyRegime::Uniform {
                    p: p.ok_or_else(|| usage("uniform regime needs --p"))?,
                },
                RegimeArg::Dichotomous => DifficultyRegime::Dichotomous {
                    trivial: trivial.ok_or_else(|| usage("dichotomous regime needs --trivial"))?,
                    impossible: impossible.ok_or_else(|| usage("dichotomous regime needs --impossible"))?,
                    p_mid: p_mid.ok_or_else(|| usage("dichotomous regime needs --p-mid"))?,
                },
                RegimeArg::Custom => {
                    let path = q_file.ok_or_else(|| usage("custom regime needs --q-file"))?;
                    let q = read_ids(&path)?
                        .iter()
                        .map(|v| v.parse::<f64>().with_context(|| format!("bad probability {v:?}")))
                        .collect::<Result<Vec<_>>>()?;
                    DifficultyRegime::Custom { q }
                }
            };
            let images = images.unwrap_or(match &regime {
                DifficultyRegime::Custom { q } => q.len(),
                _ => 50_000,
            });
            let cube = simulate_cube(&regime, models, images, seed)?;
            if let Ok(k) = expected_kappa(&regime) {
                eprintln!("expected kappa: {k:.6}");
            }
            if let Ok(d) = expected_ddd_index(&regime, models as u32) {
                eprintln!("expected ddd index (t=0): {d:.6}");
            }
            if let Some(path) = &cube_out {
                save_cache(&cube, path)?;
            }
            if out.is_some() || cube_out.is_none() {
                let mut buf = Vec::new();
                write_records_csv(&cube.to_records()?, &mut buf)?;
                emit(out.as_deref(), &buf)?;
            }
            Ok(())
        }
        Command::Rsa { a, b, method, rdm_a_out, rdm_b_out } => {
            let rdm_a = rdm(&read_features(&a)?)?;
            if let Some(path) = &rdm_a_out {
                emit(Some(path), rdm_a.to_csv().as_bytes())?;
            }
            let Some(b) = b else {
                if rdm_a_out.is_none() {
                    emit(None, rdm_a.to_csv().as_bytes())?;
                }
                return Ok(());
            };
            let rdm_b = rdm(&read_features(&b)?)?;
            if let Some(path) = &rdm_b_out {
                emit(Some(path), rdm_b.to_csv().as_bytes())?;
            }
            let method = match method {
                MethodArg::Pearson => RsaMethod::Pearson,
                MethodArg::Spearman => RsaMethod::Spearman,
            };
            let r = rsa_correlation(&rdm_a, &rdm_b, method)?;
            emit(None, format!("{r:.6}\n").as_bytes())
        }
        Command::Serve { manifest, images, responses, port, host, ui, reshuffle } => {
            let manifest = ExperimentManifest::load(&manifest)?;
            let experiment = Experiment::open(manifest, &responses, reshuffle)?;
            let state = crate::server::AppState::new(experiment, images, ui);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::server::serve(&host, port, state))
        }
        Command::Report { manifest, responses, reshuffle, out, kappa_out } => {
            let manifest = ExperimentManifest::load(&manifest)?;
            let events = read_events(&responses)?;
            let exp = Experiment::replay(manifest, reshuffle, events)?;
            let results = exp.results();
            for w in &results.statistics.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(path) = &kappa_out {
                match &results.inter_subject_kappa {
                    Some(m) => emit(Some(path), m.to_csv().as_bytes())?,
                    None => eprintln!("warning: inter-subject kappa needs two complete sessions on a shared trial order"),
                }
            }
            emit(out.as_deref(), format!("{}\n", serde_json::to_string_pretty(&results)?).as_bytes())
        }
    }
}

fn ingest(input: &Path, format: InputFormat, out: Option<&Path>, records_out: Option<&Path>) -> Result<()> {
    let cube = match format {
        InputFormat::Cache => {
            read_cache(&fs::read(input).with_context(|| format!("reading {}", input.display()))?)?
        }
        InputFormat::Csv | InputFormat::Jsonl => {
            if out.is_none() && records_out.is_none() {
                return Err(usage("ingest needs --out (or --records-out)"));
            }
            let log = if format == InputFormat::Csv { LogFormat::Csv } else { LogFormat::Jsonl };
            let file = fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
            let records = parse_records(BufReader::new(file), log)
                .with_context(|| format!("parsing {}", input.display()))?;
            assemble_cube(&records)?
        }
    };
    if let Some(path) = out {
        save_cache(&cube, path)?;
    }
    if let Some(path) = records_out {
        let file = io::BufWriter::new(fs::File::create(path)?);
        write_records_csv(&cube.to_records()?, file)?;
    }
    let last = cube.last_epoch();
    let mut text = format!(
        "models: {}\nepochs: {} ({}..{})\nimages: {}\npredictions: {}\n\nmodel_id,condition,epoch,accuracy\n",
        cube.n_models(),
        cube.n_epochs(),
        cube.epochs()[0],
        last,
        cube.n_images(),
        if cube.has_predictions() { "stored" } else { "absent" },
    );
    for m in cube.models() {
        let acc = cube.accuracy_of(&m.id, last)?;
        writeln!(text, "{},{},{},{:.6}", m.id, m.condition, acc.epoch, acc.accuracy)?;
    }
    emit(None, text.as_bytes())
}

#[allow(clippy::too_many_arguments)]
fn classify(
    cube: &DecisionCube,
    epoch: u32,
    subset: &SubsetArgs,
    tolerance: u32,
    out: Option<&Path>,
    manifest_out: Option<&Path>,
    trials: usize,
    exclude: Option<&Path>,
    seed: u64,
) -> Result<()> {
    let counts = correct_counts(cube, epoch, subset.models.as_deref())?;
    let partition = classify_difficulty(&counts, tolerance)?;
    let n = partition.total();
    let (tr, im, inc) = (
        partition.trivial().len(),
        partition.impossible().len(),
        partition.inconclusive().len(),
    );
    let mut text = format!("epoch: {epoch}\nmodels: {}\ntolerance: {tolerance}\nimages: {n}\n", partition.models);
    writeln!(text, "trivial: {tr} ({:.2}%)", pct(tr, n))?;
    writeln!(text, "impossible: {im} ({:.2}%)", pct(im, n))?;
    writeln!(text, "inconclusive: {inc} ({:.2}%)", pct(inc, n))?;
    writeln!(text, "ddd_index: {:.6}", partition.ddd_index())?;
    if let Some(path) = out {
        emit(Some(path), serde_json::to_string_pretty(&partition)?.as_bytes())?;
    }
    if let Some(path) = manifest_out {
        let exclusions = match exclude {
            Some(p) => read_ids(p)?,
            None => Vec::new(),
        };
        let manifest = build_manifest(&partition, trials, seed, &exclusions)?;
        manifest.save(path)?;
        writeln!(text, "manifest: {} ({} trials, seed {seed})", manifest.manifest_id, manifest.n_trials)?;
    }
    emit(None, text.as_bytes())
}

fn parse_band(s: &str) -> Result<Keep> {
    let parsed = s
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    match parsed {
        Some((min, max)) if min <= max => Ok(Keep::Band { min, max }),
        _ => Err(usage(format!("--band expects MIN:MAX with MIN <= MAX, got {s:?}"))),
    }
}

fn parse_shape(s: &str) -> Result<ImageShape> {
    let dims: Vec<u32> = s
        .split('x')
        .map(|d| d.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--shape expects CxHxW, got {s:?}")))?;
    match dims[..] {
        [channels, height, width] => Ok(ImageShape { channels, height, width }),
        _ => Err(usage(format!("--shape expects CxHxW, got {s:?}"))),
    }
}

fn synth(action: SynthAction, seed: u64) -> Result<()> {
    match action {
        SynthAction::Generate { out, classes, train, test, shape, paper_scale } => {
            let spec = if paper_scale {
                GaussianSpec { classes, ..GaussianSpec::paper_scale(seed) }
            } else {
                GaussianSpec {
                    classes,
                    train_per_class: train,
                    test_per_class: test,
                    shape: parse_shape(&shape)?,
                    seed,
                }
            };
            let manifest = generate_dataset(&spec, &out)?;
            let s = manifest.spec;
            emit(
                None,
                format!(
                    "wrote {} class files to {} ({} train + {} test images per class, {}x{}x{})\n",
                    manifest.files.len(),
                    out.display(),
                    s.train_per_class,
                    s.test_per_class,
                    s.shape.channels,
                    s.shape.height,
                    s.shape.width
                )
                .as_bytes(),
            )
        }
        SynthAction::Kl { classes } => {
            if classes < 2 {
                return Err(usage("--classes must be at least 2"));
            }
            let mut text = String::from("class,sigma,kl_adjacent\n");
            for c in 1..classes {
                writeln!(text, "{c},{c},{:.9}", kl_adjacent(c))?;
            }
            emit(None, text.as_bytes())
        }
        SynthAction::Evaluate { data, log_out, out } => {
            let eval = evaluate_oracle_dir(&data)?;
            if let Some(path) = &log_out {
                let file = io::BufWriter::new(fs::File::create(path)?);
                write_records_csv(&eval.records, file)?;
            }
            let last = eval.class_accuracy.last().map_or(0, |&(c, _)| c);
            let mut text = String::from("class,sigma,kl_adjacent,accuracy\n");
            for &(c, acc) in &eval.class_accuracy {
                let kl = if c < last { format!("{:.9}", kl_adjacent(c)) } else { "NA".into() };
                writeln!(text, "{c},{c},{kl},{acc:.6}")?;
            }
            emit(out.as_deref(), text.as_bytes())
        }
    }
}

fn read_features(path: &PathBuf) -> Result<FeatureTable> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    FeatureTable::from_csv(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn read_events(path: &Path) -> Result<Vec<LogEvent>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: malformed event", path.display(), i + 1))?;
        events.push(event);
    }
    if events.is_empty() {
        bail!("{} holds no events", path.display());
    }
    Ok(events)
}
