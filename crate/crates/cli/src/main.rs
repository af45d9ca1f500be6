use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kgscale::corpus::CorpusMode;
use kgscale::entropy::{EntropyMode, LogBase};
use kgscale::pipeline::{self, EmitSettings, ExperimentConfig, HeldoutFrom};
use kgscale::Error;

#[derive(Parser)]
#[command(name = "kgscale", version, about = "Synthetic knowledge graphs, graph search entropy and scaling-law fits")]
struct Cli {
    /// Experiment config (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (generate, emit, import, fit) or file (entropy,
    /// stats, predict; stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus mode for `emit` (triple-id, template-sentence) or walk mode
    /// for `entropy` (symmetrized, directed).
    #[arg(long, global = true)]
    mode: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate rules, graph and train/held-out split from a config.
    Generate,
    /// Write corpus, eval set and vocabulary for a split directory.
    Emit {
        /// Directory written by `generate` or `import`.
        #[arg(long)]
        split: PathBuf,
        /// `relation<TAB>template` table for template-sentence mode.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Graph search entropy of a triple file.
    Entropy {
        graph: PathBuf,
        /// Keep reversed edges under their original relation label.
        #[arg(long)]
        no_inverse: bool,
        #[arg(long, value_enum, default_value_t = Unit::Bits)]
        unit: Unit,
        /// Defaults to the name of the directory holding the file.
        #[arg(long)]
        graph_id: Option<String>,
    },
    /// Locate optimal sizes in run results and fit the entropy law.
    Fit {
        #[arg(long, required = true, num_args = 1..)]
        results: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        entropy: Vec<PathBuf>,
        /// Checkpoint to use; the largest per graph when absent.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Predict the optimal size for entropy records from a fit.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        entropy: PathBuf,
    },
    /// Degree, relation and component statistics of a triple file.
    Stats { graph: PathBuf },
    /// Merge train/valid/test triple files into a split directory.
    Import {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum, default_value_t = Heldout::Test)]
        heldout_from: Heldout,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Bits,
    Nats,
}

#[derive(Clone, Copy, ValueEnum)]
enum Heldout {
    Test,
    ValidAndTest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // stage-tagged, with the underlying cause inline
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| e.in_stage("config"))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, Error> {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .ok_or_else(|| Error::Config("--out (or output_dir in the config) is required".into()))
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    match out {
        Some(path) => pipeline::write_json_file(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("record serializes"));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Generate => {
            let cfg = load_config(&cli)?;
            let out = out_dir(&cli, Some(&cfg))?;
            let m = pipeline::cmd_generate(&cfg, &out)?;
            eprintln!(
                "{}: {} entities, {} relations, {} rules, {} triples ({} atomic, {} deducible)",
                out.display(),
                m.n_entities,
                m.n_relations,
                m.n_rules,
                m.n_triples,
                m.n_atomic,
                m.n_deducible
            );
            eprintln!(
                "train {} ({} atomic, {} deducible, gamma {:.4} vs {}), held out {}",
                m.n_train, m.n_train_atomic, m.n_train_deducible, m.achieved_gamma, m.requested_gamma, m.n_heldout
            );
        }
        Command::Emit { split, templates } => {
            let mut settings = match &cli.config {
                Some(_) => load_config(&cli)?.emit_settings(),
                None => {
                    let seed = cli
                        .seed
                        .ok_or_else(|| Error::Config("emit needs --config or --seed".into()))?;
                    EmitSettings::new(seed)
                }
            };
            if let Some(mode) = &cli.mode {
                settings.corpus_mode = match mode.as_str() {
                    "triple-id" => CorpusMode::TripleId,
                    "template-sentence" => CorpusMode::TemplateSentence,
                    other => return Err(Error::Config(format!("unknown corpus mode `{other}`"))),
                };
            }
            if templates.is_some() {
                settings.template_file = templates.clone();
            }
            let out = cli.out.clone().unwrap_or_else(|| split.clone());
            let r = pipeline::cmd_emit(&settings, split, &out)?;
            eprintln!(
                "{}: {} corpus lines, {} questions ({} skipped), vocab {}",
                out.display(),
                r.corpus_lines,
                r.questions,
                r.skipped.len(),
                r.vocab_size
            );
        }
        Command::Entropy {
            graph,
            no_inverse,
            unit,
            graph_id,
        } => {
            let symmetrized = match cli.mode.as_deref() {
                None | Some("symmetrized") => true,
                Some("directed") => false,
                Some(other) => return Err(Error::Config(format!("unknown entropy mode `{other}`"))),
            };
            let mode = EntropyMode {
                symmetrized,
                inverse_relations: symmetrized && !no_inverse,
                log_base: match unit {
                    Unit::Bits => LogBase::Bits,
                    Unit::Nats => LogBase::Nats,
                },
            };
            let r = pipeline::cmd_entropy(graph, mode, graph_id.as_deref())?;
            eprintln!(
                "{}: H = {:.3} bits over {} of {} entities (log2 lambda {:.6}, relation rate {:.6})",
                r.graph_id,
                r.report.entropy_bits,
                r.report.n_entities_used,
                r.report.n_entities_total,
                r.report.log2_lambda,
                r.report.relation_entropy_rate_bits
            );
            emit_json(cli.out.as_deref(), &r)?;
        }
        Command::Fit { results, entropy, steps } => {
            let out = out_dir(&cli, None)?;
            let f = pipeline::cmd_fit(results, entropy, *steps, &out)?;
            println!("{:<24} {:>14} {:>14} {:>14}", "graph", "entropy_bits", "optimal", "flag");
            for p in &f.points {
                println!(
                    "{:<24} {:>14.1} {:>14} {:>14}",
                    p.graph_id,
                    p.entropy_bits,
                    p.optimal_params,
                    format!("{:?}", p.boundary_flag)
                );
            }
            let fit = &f.fit;
            println!(
                "slope {:.3} params/bit [{:.3}, {:.3}], intercept {:.1}, R^2 {:.4}, n = {}",
                fit.slope_params_per_bit,
                fit.slope_ci95_low,
                fit.slope_ci95_high,
                fit.intercept_params,
                fit.r2,
                fit.n_points
            );
            if let Some(b) = fit.bits_per_param {
                println!("{b:.5} bits per parameter");
            }
        }
        Command::Predict { fit, entropy } => {
            let preds = pipeline::cmd_predict(fit, entropy)?;
            for (g, p) in &preds {
                eprintln!(
                    "{g}: {:.1} bits -> {} params{}",
                    p.entropy_bits,
                    p.predicted_params,
                    if p.floored { " (floored)" } else { "" }
                );
            }
            let records: Vec<_> = preds
                .into_iter()
                .map(|(graph_id, p)| serde_json::json!({ "graph_id": graph_id, "prediction": p }))
                .collect();
            emit_json(cli.out.as_deref(), &records)?;
        }
        Command::Stats { graph } => {
            let s = pipeline::cmd_stats(graph)?;
            eprintln!(
                "{} entities, {} relations, {} triples, largest component {}",
                s.n_entities,
                s.n_relations,
                s.n_triples,
                s.component_sizes.first().copied().unwrap_or(0)
            );
            emit_json(cli.out.as_deref(), &s)?;
        }
        Command::Import {
            train,
            valid,
            test,
            heldout_from,
        } => {
            let out = out_dir(&cli, None)?;
            let from = match heldout_from {
                Heldout::Test => HeldoutFrom::Test,
                Heldout::ValidAndTest => HeldoutFrom::ValidAndTest,
            };
            let m = pipeline::cmd_import(train, valid, test, from, &out)?;
            eprintln!(
                "{}: N_e = {}, N_r = {}, N = {} (train {}, held out {}, {} duplicate lines)",
                out.display(),
                m.n_entities,
                m.n_relations,
                m.n_triples,
                m.n_train,
                m.n_heldout,
                m.duplicate_lines
            );
        }
    }
    Ok(())
}
