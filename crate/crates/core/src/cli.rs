//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::classify::{
    cascade_match, evaluate, nlac_distance, template_distance, CascadeThresholds, EvalSample,
    MatchResult,
};
use crate::config::{RunConfig, KEYS};
use crate::dataio::{load_image, save_image, scan_dataset, write_synth_tree, CASIA_V1_LAYOUT};
use crate::error::{IrisError, Result};
use crate::features::{ga_feature_source, Extractor, Method, ProjectionKind};
use crate::gaselect::{run_ga, LabeledSet};
use crate::pipeline::{image_to_strip, load_eval_samples, prepare, synth_eval_samples};
use crate::segment::overlay;
use crate::store::{
    append_records, basis_from_records, basis_to_records, read_store, TemplateRecord,
};

const AFTER_HELP: &str = "\
Output files:
  report.csv      method,vector_length,effective_length,classifier,accuracy_pct,extract_ms,failures
                  vector_length is the configured length, effective_length what was produced
                  (PCA/ICA after rank clipping, GA600 after selection). BINARY adds a second
                  row with verification accuracy at the accept threshold.
  hist_intra.csv  bin_lo,bin_hi,count of same-subject BINARY Hamming distances
  hist_inter.csv  bin_lo,bin_hi,count of different-subject BINARY Hamming distances
  ga_history.csv  generation,best_scalar,best_error,best_count

Template store: one tab-separated record per line,
  subject sample METHOD length payload-hex mask-hex|- aux|-

Corpus: `synth` renders the built-in synthetic set in memory; anything else is a
directory scanned with --layout.";

#[derive(Debug, Parser)]
#[command(name = "irisct", version, about = "Iris recognition with contourlet features", after_help = AFTER_HELP)]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (or file, for fit-basis).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub collarette_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub id_sigma: Option<f64>,
    #[arg(long, global = true)]
    pub hough_vote_floor: Option<f64>,
    #[arg(long, global = true)]
    pub gabor_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub variance_threshold: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate boundaries, eyelids and lashes; print circles as JSON and write an overlay.
    Segment { image: PathBuf },
    /// Write the normalised 20x240 image and the 8x240 strip as TSV (masked = NaN).
    Normalize { image: PathBuf },
    /// Print one template record.
    Extract {
        #[arg(long)]
        method: Method,
        image: PathBuf,
        /// Basis file for PCA/ICA.
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, default_value = "1")]
        sample: String,
    },
    /// Extract every image of a dataset and append the records to the store.
    Enroll {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        method: Method,
        dataset: PathBuf,
        #[arg(long, default_value = CASIA_V1_LAYOUT)]
        layout: String,
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Report the closest enrolled subject.
    Identify {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        method: Method,
        image: PathBuf,
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Train/test every method and write report.csv plus the BINARY histograms.
    Evaluate {
        /// Comma-separated methods (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, default_value = "synth")]
        corpus: String,
        #[arg(long, default_value = CASIA_V1_LAYOUT)]
        layout: String,
    },
    /// Genetic selection over the 600 level-2 sign bits.
    GaSelect {
        #[arg(long, default_value = "synth")]
        corpus: String,
        #[arg(long, default_value = CASIA_V1_LAYOUT)]
        layout: String,
    },
    /// Write the synthetic corpus as PNG files.
    Synth,
    /// Fit a PCA or ICA basis on the training images of a corpus.
    FitBasis {
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "synth")]
        corpus: String,
        #[arg(long, default_value = CASIA_V1_LAYOUT)]
        layout: String,
    },
    /// List configuration keys.
    Keys,
}

/// Process exit status for an error class.
pub fn exit_code(e: &IrisError) -> i32 {
    match e {
        IrisError::FileNotFound(_) | IrisError::Io(_) => 3,
        IrisError::UnsupportedFormat(_) | IrisError::CorruptImage(_) => 4,
        IrisError::NoBoundaryFound(_)
        | IrisError::DegenerateGeometry(_)
        | IrisError::TooSmall(_) => 5,
        IrisError::Parse(_) | IrisError::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| IrisError::Parse(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    let seg = &mut cfg.pipeline.segment;
    for (v, slot) in [
        (cli.collarette_fraction, &mut seg.collarette_fraction),
        (cli.id_sigma, &mut seg.id_sigma),
        (cli.hough_vote_floor, &mut seg.hough_vote_floor),
        (cli.gabor_threshold, &mut seg.gabor_threshold),
        (cli.variance_threshold, &mut seg.variance_threshold),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    Ok(cfg)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let d = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&d)?;
    Ok(d)
}

fn extractor(cfg: &RunConfig, method: Method, basis: Option<&Path>) -> Result<Extractor> {
    let mut ex = Extractor::new(cfg.eval.features.clone());
    if matches!(method, Method::Pca | Method::Ica) {
        let path = basis
            .ok_or_else(|| IrisError::InvalidArgument(format!("{method} needs --basis <file>")))?;
        let b = basis_from_records(&read_store(path)?)?;
        match b.kind {
            ProjectionKind::Pca if method == Method::Pca => ex.pca = Some(b),
            ProjectionKind::Ica if method == Method::Ica => ex.ica = Some(b),
            _ => {
                return Err(IrisError::InvalidArgument(format!(
                    "basis file does not hold a {method} basis"
                )))
            }
        }
    }
    Ok(ex)
}

fn load_corpus(cfg: &RunConfig, corpus: &str, layout: &str) -> Result<Vec<EvalSample>> {
    if corpus == "synth" {
        synth_eval_samples(
            cfg.synth_subjects,
            cfg.synth_samples,
            cfg.seed,
            cfg.train_samples,
        )
    } else {
        load_eval_samples(&scan_dataset(Path::new(corpus), layout)?, cfg.train_samples)
    }
}

fn matrix_tsv(data: &ndarray::Array2<f64>, mask: &ndarray::Array2<bool>) -> String {
    let mut s = String::new();
    for (row, mrow) in data.rows().into_iter().zip(mask.rows()) {
        let cells: Vec<String> = row
            .iter()
            .zip(mrow.iter())
            .map(|(v, &m)| if m { format!("{v:.6}") } else { "NaN".into() })
            .collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    s
}

fn describe(m: &MatchResult) -> &'static str {
    if m.accepted() {
        "accept"
    } else {
        "reject"
    }
}

/// Parse `args` and run the command, writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => {
            return Err(IrisError::Parse(
                e.to_string().lines().next().unwrap_or("").to_string(),
            ))
        }
    };
    let cfg = build_config(&cli)?;
    for w in cfg.length_warnings() {
        eprintln!("warning: {w}");
    }
    let pipe = &cfg.pipeline;

    match &cli.command {
        Command::Segment { image } => {
            let img = load_image(image)?;
            let p = prepare(&img, pipe)?;
            let seg = &p.segmentation;
            let dir = out_dir(&cli)?;
            let ov = dir.join(format!("{}_overlay.png", stem(image)));
            save_image(&overlay(&img, seg), &ov)?;
            let v = json!({
                "pupil": seg.pupil,
                "iris": seg.iris,
                "collarette": seg.collarette,
                "eyelids": seg.eyelid_lines,
                "valid_pixels": seg.noise_mask.count(),
                "overlay": ov.display().to_string(),
            });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&v).expect("plain values serialise")
            )?;
        }
        Command::Normalize { image } => {
            let p = prepare(&load_image(image)?, pipe)?;
            let dir = out_dir(&cli)?;
            let s = stem(image);
            let norm = dir.join(format!("{s}_normalized.tsv"));
            let strip = dir.join(format!("{s}_strip.tsv"));
            std::fs::write(&norm, matrix_tsv(&p.normalized.data, &p.normalized.mask))?;
            std::fs::write(&strip, matrix_tsv(&p.strip.data, &p.strip.mask))?;
            writeln!(out, "{}\n{}", norm.display(), strip.display())?;
        }
        Command::Extract {
            method,
            image,
            basis,
            subject,
            sample,
        } => {
            let ex = extractor(&cfg, *method, basis.as_deref())?;
            let fv = ex.extract(&image_to_strip(&load_image(image)?, pipe)?, *method)?;
            let subject = subject.clone().unwrap_or_else(|| stem(image));
            writeln!(
                out,
                "{}",
                TemplateRecord::new(subject, sample.clone(), fv).to_line()?
            )?;
        }
        Command::Enroll {
            db,
            method,
            dataset,
            layout,
            basis,
        } => {
            let ex = extractor(&cfg, *method, basis.as_deref())?;
            let index = scan_dataset(dataset, layout)?;
            let results: Vec<Result<TemplateRecord>> = index
                .entries
                .par_iter()
                .map(|e| {
                    let fv = ex.extract(&image_to_strip(&load_image(&e.path)?, pipe)?, *method)?;
                    Ok(TemplateRecord::new(
                        e.subject_id.clone(),
                        e.sample_id.clone(),
                        fv,
                    ))
                })
                .collect();
            let mut records = Vec::new();
            for (e, r) in index.entries.iter().zip(results) {
                match r {
                    Ok(r) => records.push(r),
                    Err(err) => eprintln!("skipped {}: {err}", e.path.display()),
                }
            }
            append_records(db, &records)?;
            writeln!(
                out,
                "enrolled {} of {} images into {}",
                records.len(),
                index.len(),
                db.display()
            )?;
        }
        Command::Identify {
            db,
            method,
            image,
            basis,
        } => {
            let ex = extractor(&cfg, *method, basis.as_deref())?;
            let strip = image_to_strip(&load_image(image)?, pipe)?;
            let probe = ex.extract(&strip, *method)?;
            let probe_binary = if *method == Method::Nlac {
                Some(ex.extract(&strip, Method::Binary)?)
            } else {
                None
            };
            let gallery: Vec<TemplateRecord> = read_store(db)?
                .into_iter()
                .filter(|r| r.template.method == *method)
                .collect();
            if gallery.is_empty() {
                return Err(IrisError::EmptyDataset(db.clone()));
            }
            // NLAC ties are common (lowpass signs agree across eyes); the
            // larger overlap with the probe's own index set wins them
            let overlap = |g: &TemplateRecord| -> usize {
                match (&probe.indices, &g.template.indices) {
                    (Some(p), Some(q)) => q.iter().filter(|i| p.contains(i)).count(),
                    _ => 0,
                }
            };
            let mut best: Option<(f64, usize, &TemplateRecord)> = None;
            for g in &gallery {
                let d = match &probe_binary {
                    Some(pb) => nlac_distance(&g.template, pb),
                    None => template_distance(&probe, &g.template),
                };
                if let Ok(d) = d {
                    let o = overlap(g);
                    if best.is_none_or(|(b, bo, _)| d < b || (d == b && o > bo)) {
                        best = Some((d, o, g));
                    }
                }
            }
            let (d, _, g) = best.ok_or(IrisError::EmptyMask)?;
            let verdict = match method {
                Method::Binary | Method::Nlac | Method::Ga600 => {
                    describe(&MatchResult::thresholded(d, cfg.eval.binary_threshold)).to_string()
                }
                Method::Combined => {
                    let t = CascadeThresholds {
                        local_lo: cfg.eval.cascade_lo,
                        local_hi: cfg.eval.cascade_hi,
                        ..Default::default()
                    };
                    describe(&cascade_match(&probe, &g.template, &t)?).to_string()
                }
                _ => "-".to_string(),
            };
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{}",
                g.subject_id, g.sample_id, d, verdict
            )?;
        }
        Command::Evaluate {
            methods,
            corpus,
            layout,
        } => {
            let methods = if methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                methods.clone()
            };
            let samples = load_corpus(&cfg, corpus, layout)?;
            let report = evaluate(&samples, &methods, pipe, &cfg.eval)?;
            let dir = out_dir(&cli)?;
            std::fs::write(dir.join("report.csv"), report.to_csv(true))?;
            if let (Some(hi), Some(he)) = (&report.hist_intra, &report.hist_inter) {
                std::fs::write(dir.join("hist_intra.csv"), hi.to_csv())?;
                std::fs::write(dir.join("hist_inter.csv"), he.to_csv())?;
            }
            for r in &report.rows {
                if matches!(r.method, Method::Pca | Method::Ica)
                    && r.effective_length < r.vector_length
                {
                    eprintln!(
                        "warning: {} kept {} of {} requested components (training data rank)",
                        r.method, r.effective_length, r.vector_length
                    );
                }
            }
            write!(out, "{}", report.to_csv(true))?;
            if let Some(pd) = &report.binary_pairs {
                writeln!(
                    out,
                    "comparisons: {} intra, {} inter; mean HD intra {:.4}, inter {:.4}",
                    pd.intra.len(),
                    pd.inter.len(),
                    pd.mean_intra(),
                    pd.mean_inter()
                )?;
            }
            writeln!(
                out,
                "images: {}, segmentation failures: {}",
                report.n_images, report.segmentation_failures
            )?;
        }
        Command::GaSelect { corpus, layout } => {
            let samples = load_corpus(&cfg, corpus, layout)?;
            let feats = cfg.eval.features.clone();
            let rows: Vec<Option<(Vec<f64>, String)>> = samples
                .par_iter()
                .map(|s| {
                    let strip = image_to_strip(&s.image, pipe).ok()?;
                    let bits = ga_feature_source(&strip, &feats).ok()?;
                    Some((
                        bits.iter().map(|&b| b as u8 as f64).collect(),
                        s.subject.clone(),
                    ))
                })
                .collect();
            let rows: Vec<(Vec<f64>, String)> = rows.into_iter().flatten().collect();
            let mut names: Vec<&String> = rows.iter().map(|(_, s)| s).collect();
            names.sort();
            names.dedup();
            let y = rows
                .iter()
                .map(|(_, s)| names.binary_search(&s).expect("listed"))
                .collect();
            let data = LabeledSet::new(rows.iter().map(|(x, _)| x.clone()).collect(), y)?;
            let res = run_ga(&data, &cfg.eval.ga)?;
            let dir = out_dir(&cli)?;
            std::fs::write(dir.join("ga_history.csv"), res.history_csv())?;
            std::fs::write(dir.join("ga_mask.hex"), format!("{}\n", res.best.to_hex()))?;
            writeln!(out, "{}", res.best.to_hex())?;
            writeln!(
                out,
                "selected {} of {}, validation error {:.4}, scalar {:.6}",
                res.best.n_selected,
                res.best.genes.len(),
                res.best.error_rate,
                res.best.scalar
            )?;
        }
        Command::Synth => {
            let dir = cli
                .out
                .clone()
                .ok_or_else(|| IrisError::InvalidArgument("synth needs --out <dir>".into()))?;
            let n = write_synth_tree(&dir, cfg.synth_subjects, cfg.synth_samples, cfg.seed)?;
            writeln!(out, "wrote {n} images under {}", dir.display())?;
        }
        Command::FitBasis {
            method,
            corpus,
            layout,
        } => {
            let kind = match method {
                Method::Pca => ProjectionKind::Pca,
                Method::Ica => ProjectionKind::Ica,
                m => {
                    return Err(IrisError::InvalidArgument(format!(
                        "{m} has no basis; use pca or ica"
                    )))
                }
            };
            let samples = load_corpus(&cfg, corpus, layout)?;
            let strips: Vec<_> = samples
                .par_iter()
                .filter(|s| s.train)
                .filter_map(|s| image_to_strip(&s.image, pipe).ok())
                .collect();
            let mut ex = Extractor::new(cfg.eval.features.clone());
            let b = ex.fit(&strips, kind)?;
            if b.k() < b.requested_k {
                eprintln!(
                    "warning: {method} kept {} of {} requested components (training data rank)",
                    b.k(),
                    b.requested_k
                );
            }
            let path = cli.out.clone().unwrap_or_else(|| {
                PathBuf::from(format!("{}_basis.tsv", method.tag().to_lowercase()))
            });
            if path.exists() {
                std::fs::remove_file(&path)?;
            }
            append_records(&path, &basis_to_records(b))?;
            writeln!(
                out,
                "{} basis with {} components over {} dims -> {}",
                method,
                b.k(),
                b.dim(),
                path.display()
            )?;
        }
        Command::Keys => {
            for (k, d) in KEYS {
                writeln!(out, "{k:24}{d}")?;
            }
        }
    }
    Ok(())
}
