use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use outfitter_core::concept::profile_from_images;
use outfitter_core::recommend::{evaluate, recommend_with_model};
use outfitter_core::{
    load_catalog, load_schema, validate_catalog, Catalog, DeltaMode, FeatureSpace,
    FixtureExtractor, Gender, KModesConfig, ModelDocument, PreferenceMode, PreferenceProfile,
    RecommendationDocument, RecommendationRequest, Sampling, Schema, SliceModel, WeightConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "outfitter",
    version,
    about = "Cold-start outfit recommendation"
)]
struct Cli {
    /// Taxonomy document; the built-in schema is used when omitted.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a catalog (and optionally a preference document).
    Validate {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        preferences: Option<PathBuf>,
    },
    /// Record counts per gender and occasion.
    Stats {
        #[arg(long)]
        catalog: PathBuf,
    },
    /// Cluster one slice and persist the model.
    Cluster {
        #[arg(long)]
        catalog: PathBuf,
        #[command(flatten)]
        slice: SliceArgs,
        #[command(flatten)]
        clustering: ClusterArgs,
        /// Where the model document is written.
        #[arg(long)]
        model: PathBuf,
    },
    /// Recommend outfits for one slice.
    Recommend {
        #[arg(long)]
        catalog: PathBuf,
        #[command(flatten)]
        slice: SliceArgs,
        #[command(flatten)]
        clustering: ClusterArgs,
        /// Preference images (image list or side-car annotations).
        #[arg(long)]
        preferences: Option<PathBuf>,
        /// Model file to reuse, or to create when missing.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Recluster even when a model file exists.
        #[arg(long)]
        rebuild: bool,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Defaults to with_preference when --preferences is given.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value_t = SamplingArg::DeterministicRank)]
        sampling: SamplingArg,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
    /// Recompute diversity and relevance for a recommendation document.
    Evaluate {
        recommendation: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        preferences: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct SliceArgs {
    #[arg(long)]
    gender: Gender,
    #[arg(long)]
    occasion: String,
}

#[derive(clap::Args)]
struct ClusterArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    kmin: usize,
    /// Defaults to min(10, n - 1).
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DeltaArg::FrequencyWeighted)]
    delta_mode: DeltaArg,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    WithPreference,
    WithoutPreference,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SamplingArg {
    DeterministicRank,
    SeededRandom,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DeltaArg {
    Plain,
    FrequencyWeighted,
}

impl ClusterArgs {
    fn config(&self) -> anyhow::Result<KModesConfig> {
        let config = KModesConfig {
            weights: WeightConfig::new(self.alpha, self.beta)?,
            delta_mode: match self.delta_mode {
                DeltaArg::Plain => DeltaMode::Plain,
                DeltaArg::FrequencyWeighted => DeltaMode::FrequencyWeighted,
            },
            restarts: self.restarts,
            seed: self.seed,
            k_min: self.kmin,
            k_max: self.kmax,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OUTFITTER_LOG", "warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, doc: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(path) => write_file(path, &text),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_schema_arg(path: Option<&Path>) -> anyhow::Result<Schema> {
    match path {
        Some(p) => load_schema(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(Schema::default_schema()),
    }
}

fn load_catalog_arg(path: &Path, schema: &Schema) -> anyhow::Result<Catalog> {
    load_catalog(&read(path)?, schema).with_context(|| format!("in {}", path.display()))
}

fn load_profile(path: &Path, space: &FeatureSpace) -> anyhow::Result<PreferenceProfile> {
    let in_file = || format!("in {}", path.display());
    let extractor =
        FixtureExtractor::from_document(&read(path)?, space.schema()).with_context(in_file)?;
    if extractor.is_empty() {
        bail!("{}: no preference images", path.display());
    }
    let ids: Vec<String> = extractor.image_ids().map(String::from).collect();
    let (profile, warnings) =
        profile_from_images(&extractor, ids.iter().map(String::as_str), space)
            .with_context(in_file)?;
    if !warnings.is_empty() {
        log::warn!(
            "{} region conflicts while pooling preference images",
            warnings.len()
        );
    }
    Ok(profile)
}

fn usage_error(message: &str) -> ! {
    Cli::command()
        .error(clap::error::ErrorKind::MissingRequiredArgument, message)
        .exit()
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let schema = load_schema_arg(cli.schema.as_deref())?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Validate {
            catalog,
            preferences,
        } => {
            let findings = validate_catalog(&read(&catalog)?, &schema);
            let mut report = json!({
                "catalog": catalog.display().to_string(),
                "findings": findings,
            });
            let mut clean = findings.is_empty();
            if let Some(p) = preferences {
                let problem = FixtureExtractor::from_document(&read(&p)?, &schema)
                    .err()
                    .map(|e| e.to_string());
                clean &= problem.is_none();
                report["preferences"] = json!({
                    "path": p.display().to_string(),
                    "error": problem,
                });
            }
            report["valid"] = json!(clean);
            emit(out, &report)?;
            if !clean {
                for f in &findings {
                    eprintln!("{}: {f}", catalog.display());
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Stats { catalog } => {
            let catalog = load_catalog_arg(&catalog, &schema)?;
            let counts: Vec<_> = catalog
                .counts()
                .into_iter()
                .map(|(g, o, n)| json!({ "gender": g, "occasion": o, "count": n }))
                .collect();
            emit(out, &json!({ "records": catalog.len(), "counts": counts }))?;
        }
        Command::Cluster {
            catalog,
            slice,
            clustering,
            model,
        } => {
            let catalog = load_catalog_arg(&catalog, &schema)?;
            let space = FeatureSpace::new(&schema);
            let config = clustering.config()?;
            let built =
                SliceModel::build(&catalog, &space, slice.gender, &slice.occasion, &config)?;
            let doc = built.to_document(&space);
            write_file(&model, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            emit(
                out,
                &json!({
                    "gender": doc.gender,
                    "occasion": doc.occasion,
                    "records": built.record_ids.len(),
                    "k": doc.k,
                    "silhouette": doc.silhouette,
                    "cost": doc.cost,
                    "cluster_sizes": built.model.cluster_sizes(),
                    "model": model.display().to_string(),
                }),
            )?;
        }
        Command::Recommend {
            catalog,
            slice,
            clustering,
            preferences,
            model,
            rebuild,
            n,
            mode,
            sampling,
            epsilon,
        } => {
            let catalog = load_catalog_arg(&catalog, &schema)?;
            let space = FeatureSpace::new(&schema);
            let mode = mode.unwrap_or(if preferences.is_some() {
                ModeArg::WithPreference
            } else {
                ModeArg::WithoutPreference
            });
            let profile = match (mode, &preferences) {
                (ModeArg::WithPreference, Some(p)) => Some(load_profile(p, &space)?),
                (ModeArg::WithPreference, None) => {
                    usage_error("--mode with_preference requires --preferences")
                }
                (ModeArg::WithoutPreference, _) => None,
            };
            let config = clustering.config()?;
            let slice_model = match &model {
                Some(path) if path.exists() && !rebuild => {
                    let doc: ModelDocument = serde_json::from_str(&read(path)?)
                        .with_context(|| format!("in {}", path.display()))?;
                    if doc.gender != slice.gender || doc.occasion != slice.occasion {
                        bail!(
                            "{}: model is for {}/{}, not {}/{}; pass --rebuild to replace it",
                            path.display(),
                            doc.gender,
                            doc.occasion,
                            slice.gender,
                            slice.occasion
                        );
                    }
                    log::info!("reusing model {}", path.display());
                    SliceModel::from_document(&doc, &catalog, &space)
                        .with_context(|| format!("in {}", path.display()))?
                }
                _ => {
                    let built = SliceModel::build(
                        &catalog,
                        &space,
                        slice.gender,
                        &slice.occasion,
                        &config,
                    )?;
                    if let Some(path) = &model {
                        let doc = built.to_document(&space);
                        write_file(path, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
                    }
                    built
                }
            };
            let request = RecommendationRequest {
                gender: slice.gender,
                occasion: slice.occasion,
                n,
                mode: match mode {
                    ModeArg::WithPreference => PreferenceMode::WithPreference,
                    ModeArg::WithoutPreference => PreferenceMode::WithoutPreference,
                },
                profile,
                sampling: match sampling {
                    SamplingArg::DeterministicRank => Sampling::DeterministicRank,
                    SamplingArg::SeededRandom => Sampling::SeededRandom,
                },
                seed: clustering.seed,
                epsilon,
            };
            let rec = recommend_with_model(&request, &catalog, &space, &slice_model)?;
            if rec.items.len() < n {
                log::warn!(
                    "slice has only {} records; returning {} items",
                    rec.items.len(),
                    rec.items.len()
                );
            }
            emit(
                out,
                &RecommendationDocument::new(&request, slice_model.weights, &rec),
            )?;
        }
        Command::Evaluate {
            recommendation,
            catalog,
            preferences,
        } => {
            let catalog = load_catalog_arg(&catalog, &schema)?;
            let space = FeatureSpace::new(&schema);
            let doc: RecommendationDocument = serde_json::from_str(&read(&recommendation)?)
                .with_context(|| format!("in {}", recommendation.display()))?;
            let profile = preferences.map(|p| load_profile(&p, &space)).transpose()?;
            let report = evaluate(&doc, &catalog, profile.as_ref())
                .with_context(|| format!("in {}", recommendation.display()))?;
            emit(out, &report)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
