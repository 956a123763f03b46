use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use dimminer_core::dimension::DimensionProfile;
use dimminer_core::eval::{evaluate, supervised_cv, MetricReport};
use dimminer_core::selection::{PolarityMap, SelectionSource};
use serde::Serialize;

use crate::config::{data_dir, ConfigArgs, PipelineConfig};
use crate::error::{AppError, AppResult};
use crate::http::{self, AppState};
use crate::pipeline::{self, Baseline};
use crate::report::{baseline_table, metric_table, Table};
use crate::session::{unambiguous_positions, FeedbackSession, SessionOverrides, SessionStore, Workspace};
use crate::store::{read_jsonl, read_lexicon, Store};

#[derive(Debug, Parser)]
#[command(name = "dimminer", version, about = "Cluster a document collection along the dimension you pick")]
pub struct Cli {
    /// Cache and session root [default: $DIMMINER_DATA_DIR or ./.dimminer]
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ListSide {
    C1,
    C2,
}

impl ListSide {
    fn positive(self) -> PolarityMap {
        match self {
            ListSide::C1 => PolarityMap::c1_positive(),
            ListSide::C2 => PolarityMap::c2_positive(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the corpus from a JSONL file of {"id","text","label"?,"domain"?}.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Lexicon (MPQA clues or term<TAB>polarity); required for --mode bosw.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Compute and cache the top-m eigenpairs.
    Decompose,
    /// Write one profile per eigenvector e2..em.
    Profiles {
        /// Also print the profiles as a JSON array.
        #[arg(long)]
        print: bool,
    },
    /// Cluster without feedback and score against the gold labels.
    Baselines {
        #[arg(long, value_enum, conflicts_with = "irm_sweep")]
        which: Option<Baseline>,
        /// Run only the IRM baseline, once per comma-separated k.
        #[arg(long, value_delimiter = ',')]
        irm_sweep: Vec<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Cluster along eigenvectors chosen by a person.
    Select {
        /// Comma-separated indices, e.g. 3 or 3,4.
        #[arg(long, value_delimiter = ',', required = true)]
        eig: Vec<usize>,
        /// Which list of the first selected eigenvector is positive.
        #[arg(long, value_enum)]
        positive_list: Option<ListSide>,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Pick the eigenvector whose lists best match a lexicon.
    LexiconSelect {
        #[arg(long)]
        lexicon: PathBuf,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Pick the eigenvector best matching a profile from another collection.
    Adapt {
        /// Profile JSON, as written by `profiles`.
        #[arg(long)]
        source: PathBuf,
        /// Which list of the source profile is positive.
        #[arg(long, value_enum)]
        source_positive_list: Option<ListSide>,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Print the metrics of a session's result, or cross-validate.
    Eval {
        #[arg(long, conflicts_with = "cv")]
        session: Option<String>,
        /// Score only the unambiguous documents of the first selected eigenvector.
        #[arg(long, requires = "session")]
        unambiguous: bool,
        /// Supervised k-fold cross-validation on the gold labels instead.
        #[arg(long)]
        cv: Option<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Lexicon for lexicon selection requests that name no words.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct SessionArgs {
    /// Session to update; created if it does not exist. A fresh id is
    /// generated when omitted.
    #[arg(long)]
    pub session: Option<String>,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> AppResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(AppError::io("writing output", e)),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::Internal(e.to_string()))?;
    text.push('\n');
    emit(&text)
}

struct Context {
    store: Store,
    config_args: ConfigArgs,
}

impl Context {
    /// The config stored at ingest time, with the file and flags on top.
    fn config(&self) -> AppResult<PipelineConfig> {
        let stored = self.store.load_corpus()?;
        self.config_args.resolve(stored.config)
    }

    fn workspace(&self) -> AppResult<Workspace> {
        Workspace::open(&self.store, self.config()?)
    }

    /// Loads or creates the session, applies `f`, and saves it.
    fn with_session(
        &self,
        ws: &Workspace,
        id: Option<String>,
        f: impl FnOnce(&mut FeedbackSession) -> AppResult<()>,
    ) -> AppResult<FeedbackSession> {
        let sessions = SessionStore::new(&self.store);
        let id = id.unwrap_or_else(http::new_session_id);
        let session = if sessions.exists(&id) {
            sessions.update(&id, None, f)?.0
        } else {
            // a failed first selection leaves nothing behind
            let mut session = FeedbackSession::new(ws, id, &SessionOverrides::default())?;
            f(&mut session)?;
            sessions.create(&session)?;
            session
        };
        log::info!("session {} at revision {}", session.session_id, session.revision);
        Ok(session)
    }
}

pub fn run(cli: Cli) -> AppResult<()> {
    let ctx = Context {
        store: Store::new(data_dir(cli.data_dir.as_deref())),
        config_args: cli.config,
    };
    match cli.command {
        Command::Ingest { input, lexicon } => {
            let config = ctx.config_args.resolve(PipelineConfig::default())?;
            let docs = read_jsonl(&input)?;
            let lexicon = lexicon.as_deref().map(read_lexicon).transpose()?;
            let stored = pipeline::ingest(&docs, lexicon.as_ref(), &config)?;
            ctx.store.save_corpus(&stored)?;
            print_json(&serde_json::json!({
                "corpus_ref": stored.corpus_ref,
                "documents": stored.corpus.len(),
                "terms": stored.corpus.vocabulary().len(),
                "pruned_terms": stored.corpus.pruned_terms().len(),
                "mode": stored.corpus.mode(),
            }))
        }
        Command::Decompose => {
            let config = ctx.config()?;
            let stored = ctx.store.load_corpus()?;
            let (basis, hit) = pipeline::cached_decompose(&ctx.store, &stored, &config)?;
            print_json(&serde_json::json!({
                "cached": hit,
                "kind": basis.kind,
                "eigenvalues": basis.eigenvalues,
                "active": basis.n_active(),
                "isolated": basis.isolated.len(),
            }))
        }
        Command::Profiles { print } => {
            let ws = ctx.workspace()?;
            let paths = ctx.store.save_profiles(&ws.profiles)?;
            for p in &paths {
                eprintln!("{}", p.display());
            }
            if print {
                print_json(&ws.profiles)?;
            }
            Ok(())
        }
        Command::Baselines {
            which,
            irm_sweep,
            format,
        } => {
            let ws = ctx.workspace()?;
            let results = if irm_sweep.is_empty() {
                which
                    .map_or(Baseline::ALL.to_vec(), |b| vec![b])
                    .into_iter()
                    .map(|b| pipeline::baseline(b, &ws.stored.corpus, &ws.basis, &ws.config))
                    .collect::<AppResult<Vec<_>>>()?
            } else {
                pipeline::irm_sweep(&ws.stored.corpus, &ws.basis, &irm_sweep, &ws.config)?
            };
            match format {
                Format::Json => print_json(&results),
                Format::Table => emit(&baseline_table(&results).to_string()),
            }
        }
        Command::Select {
            eig,
            positive_list,
            session,
        } => {
            let ws = ctx.workspace()?;
            let map = positive_list.map(ListSide::positive);
            let s = ctx.with_session(&ws, session.session, |s| {
                s.record_selection(&ws, &eig, map, SelectionSource::Human, None).map(|_| ())
            })?;
            print_json(&s)
        }
        Command::LexiconSelect { lexicon, session } => {
            let ws = ctx.workspace()?;
            let lexicon = read_lexicon(&lexicon)?;
            let s = ctx.with_session(&ws, session.session, |s| s.lexicon_selection(&ws, &lexicon).map(|_| ()))?;
            print_json(&s)
        }
        Command::Adapt {
            source,
            source_positive_list,
            session,
        } => {
            let ws = ctx.workspace()?;
            let profile: DimensionProfile = ctx.store.read_json(&source)?;
            let map = source_positive_list.map(ListSide::positive);
            let s = ctx.with_session(&ws, session.session, |s| s.adapt(&ws, &profile, map).map(|_| ()))?;
            print_json(&s)
        }
        Command::Eval {
            session,
            unambiguous,
            cv,
            format,
        } => {
            if let Some(folds) = cv {
                let stored = ctx.store.load_corpus()?;
                let config = ctx.config()?;
                let acc = supervised_cv(&stored.corpus, folds, config.c_param, config.base_seed)?;
                return match format {
                    Format::Json => print_json(&serde_json::json!({ "folds": folds, "accuracy_percent": acc })),
                    Format::Table => {
                        let mut t = Table::new(["name", "folds", "accuracy"]);
                        t.row(["supervised cv".to_string(), folds.to_string(), format!("{acc:.2}")]);
                        emit(&t.to_string())
                    }
                };
            }
            let id = session.ok_or_else(|| AppError::Invalid("eval needs --session or --cv".to_string()))?;
            let (name, report) = eval_session(&ctx, &id, unambiguous)?;
            match format {
                Format::Json => print_json(&report),
                Format::Table => emit(&metric_table(&[(name, &report)]).to_string()),
            }
        }
        Command::Serve { host, port, lexicon } => {
            let ws = ctx.workspace()?;
            let lexicon = lexicon.as_deref().map(read_lexicon).transpose()?;
            let state = AppState {
                workspace: ws,
                sessions: SessionStore::new(&ctx.store),
                lexicon,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::io("starting runtime", e))?;
            runtime.block_on(http::serve(state, SocketAddr::new(host, port)))
        }
    }
}

fn eval_session(ctx: &Context, id: &str, unambiguous: bool) -> AppResult<(String, MetricReport)> {
    let sessions = SessionStore::new(&ctx.store);
    let session = sessions.load(id)?;
    let (Some(selection), Some(result)) = (&session.selection, &session.result) else {
        return Err(AppError::NotFound(format!("session `{id}` has no result yet")));
    };
    let stored = ctx.store.load_corpus()?;
    let gold: Vec<Option<i64>> = stored.corpus.documents().iter().map(|d| d.gold_label).collect();
    let eigs: Vec<String> = selection.eig_indices.iter().map(|i| format!("e{i}")).collect();
    let name = eigs.join(",");
    if unambiguous {
        let first = selection.eig_indices[0];
        let profile = session
            .profiles
            .iter()
            .find(|p| p.eig_index == first)
            .ok_or_else(|| AppError::Invalid(format!("no profile for e{first}")))?;
        let subset = unambiguous_positions(&stored.corpus, profile)?;
        return Ok((format!("{name} unambiguous"), evaluate(&result.partition, &gold, Some(&subset))?));
    }
    let report = result
        .metrics
        .clone()
        .ok_or_else(|| AppError::Core(dimminer_core::Error::MissingLabels("corpus has no gold labels".to_string())))?;
    Ok((name, report))
}

/// Writes the JSON error line the CLI emits on failure.
pub fn error_line(e: &AppError) -> String {
    serde_json::to_string(&e.body()).unwrap_or_else(|_| format!("{{\"code\":\"{}\"}}", e.code()))
}
