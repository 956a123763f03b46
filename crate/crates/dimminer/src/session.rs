//! Feedback sessions: a judge (or a lexicon, or a profile from another
//! collection) picks a dimension, and the session records the resulting
//! clustering. Sessions persist as one JSON file each and can be replayed.

use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use dimminer_core::cluster::embed;
use dimminer_core::corpus::{Corpus, SubjectivityLexicon};
use dimminer_core::dimension::{DimensionProfile, ProfileParams};
use dimminer_core::eval::MetricReport;
use dimminer_core::selection::{
    adapt_select, adapted_polarity, cluster_selection, lexicon_select, validate_indices, PolarityMap,
    SelectionResult, SelectionScore, SelectionSource,
};
use dimminer_core::spectral::EigenBasis;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};
use crate::pipeline;
use crate::store::{write_json, Store, StoredCorpus};

pub const SESSION_VERSION: u32 = 1;
pub const SNIPPET_CHARS: usize = 300;
pub const SNIPPETS_PER_CLUSTER: usize = 10;

/// A loaded corpus with its decomposition and profiles; shared by every
/// session of a service instance.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub stored: StoredCorpus,
    pub basis: EigenBasis,
    pub profiles: Vec<DimensionProfile>,
    pub config: PipelineConfig,
}

impl Workspace {
    pub fn build(stored: StoredCorpus, basis: EigenBasis, config: PipelineConfig) -> AppResult<Self> {
        let profiles = pipeline::profiles(&stored.corpus, &basis, &config)?;
        Ok(Workspace {
            stored,
            basis,
            profiles,
            config,
        })
    }

    /// Loads the ingested corpus and its (cached) eigenbasis from `store`.
    pub fn open(store: &Store, config: PipelineConfig) -> AppResult<Self> {
        let stored = store.load_corpus()?;
        let (basis, hit) = pipeline::cached_decompose(store, &stored, &config)?;
        if !hit {
            log::info!("eigenbasis computed at startup");
        }
        Workspace::build(stored, basis, config)
    }

    pub fn default_settings(&self) -> SessionSettings {
        SessionSettings {
            kmeans_runs: self.config.kmeans_runs,
            base_seed: self.config.base_seed,
            f_count: self.config.f_count,
            c_param: self.config.c_param,
            unambiguous_fraction: self.config.unambiguous_fraction,
        }
    }

    fn profiles_for(&self, s: &SessionSettings) -> AppResult<Vec<DimensionProfile>> {
        let defaults = self.default_settings();
        if s.profile_params() == defaults.profile_params() {
            return Ok(self.profiles.clone());
        }
        let config = PipelineConfig {
            f_count: s.f_count,
            c_param: s.c_param,
            unambiguous_fraction: s.unambiguous_fraction,
            ..self.config.clone()
        };
        pipeline::profiles(&self.stored.corpus, &self.basis, &config)
    }

    /// What-if clustering along `eig_indices`; touches no session.
    pub fn preview(&self, eig_indices: &[usize], settings: &SessionSettings) -> AppResult<Preview> {
        let result = cluster_selection(
            &self.stored.corpus,
            &self.basis,
            &[],
            eig_indices,
            None,
            settings.kmeans_runs,
            settings.base_seed,
        )?;
        let snippets = self.snippets(eig_indices, &result)?;
        Ok(Preview {
            eig_indices: eig_indices.to_vec(),
            sizes: result.sizes,
            snippets,
            metrics: result.metrics,
        })
    }

    /// The members nearest their own cluster's centroid, i.e. the most
    /// typical documents of each cluster.
    fn snippets(&self, eig_indices: &[usize], result: &SelectionResult) -> AppResult<[Vec<Snippet>; 2]> {
        let emb = embed(&self.basis, eig_indices)?;
        let q = emb.dim();
        let assign = &result.partition.assign;
        let mut centroids = [vec![0.0; q], vec![0.0; q]];
        let mut counts = [0usize; 2];
        for r in 0..emb.n_points() {
            let c = assign[emb.active()[r]] as usize;
            counts[c] += 1;
            for (acc, x) in centroids[c].iter_mut().zip(emb.point(r)) {
                *acc += x;
            }
        }
        for c in 0..2 {
            if counts[c] > 0 {
                centroids[c].iter_mut().for_each(|x| *x /= counts[c] as f64);
            }
        }
        let mut ranked: [Vec<(f64, usize)>; 2] = [Vec::new(), Vec::new()];
        for r in 0..emb.n_points() {
            let pos = emb.active()[r];
            let c = assign[pos] as usize;
            let d: f64 = emb.point(r).iter().zip(&centroids[c]).map(|(a, b)| (a - b) * (a - b)).sum();
            ranked[c].push((d, pos));
        }
        let docs = self.stored.corpus.documents();
        Ok(ranked.map(|mut members| {
            members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            members
                .into_iter()
                .take(SNIPPETS_PER_CLUSTER)
                .map(|(_, pos)| Snippet {
                    id: docs[pos].id.clone(),
                    text: self.stored.texts[pos].chars().take(SNIPPET_CHARS).collect(),
                })
                .collect()
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snippet {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub eig_indices: Vec<usize>,
    pub sizes: [usize; 2],
    /// Up to ten documents per cluster, first 300 characters each.
    pub snippets: [Vec<Snippet>; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

/// Per-session knobs; everything else comes from the workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub kmeans_runs: usize,
    pub base_seed: u64,
    pub f_count: usize,
    pub c_param: f64,
    pub unambiguous_fraction: f64,
}

impl SessionSettings {
    fn profile_params(&self) -> ProfileParams {
        ProfileParams {
            f_count: self.f_count,
            c_param: self.c_param,
            unambiguous_fraction: self.unambiguous_fraction,
        }
    }
}

/// Optional overrides accepted when creating a session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionOverrides {
    pub kmeans_runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub f_count: Option<usize>,
    pub c_param: Option<f64>,
    pub unambiguous_fraction: Option<f64>,
}

impl SessionOverrides {
    fn apply(&self, mut s: SessionSettings) -> AppResult<SessionSettings> {
        if let Some(v) = self.kmeans_runs {
            s.kmeans_runs = v;
        }
        if let Some(v) = self.base_seed {
            s.base_seed = v;
        }
        if let Some(v) = self.f_count {
            s.f_count = v;
        }
        if let Some(v) = self.c_param {
            s.c_param = v;
        }
        if let Some(v) = self.unambiguous_fraction {
            s.unambiguous_fraction = v;
        }
        let check = PipelineConfig {
            kmeans_runs: s.kmeans_runs,
            f_count: s.f_count,
            c_param: s.c_param,
            unambiguous_fraction: s.unambiguous_fraction,
            ..PipelineConfig::default()
        };
        check.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub eig_indices: Vec<usize>,
    pub source: SelectionSource,
    /// Overlap score behind an automatic selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<SelectionScore>,
}

/// One selection attempt with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub revision: u64,
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity_map: Option<PolarityMap>,
    pub result: SelectionResult,
    pub recorded_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSession {
    pub v: u32,
    pub session_id: String,
    pub corpus_ref: String,
    /// Bumped by every mutation; writers may pass the revision they read
    /// to detect concurrent changes.
    pub revision: u64,
    pub settings: SessionSettings,
    pub profiles: Vec<DimensionProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity_map: Option<PolarityMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SelectionResult>,
    /// Every selection made in this session, oldest first; the last one is
    /// the current result.
    #[serde(default)]
    pub history: Vec<SelectionRecord>,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
}

/// Corpus positions of a profile's unambiguous documents, top side first.
pub fn unambiguous_positions(corpus: &Corpus, profile: &DimensionProfile) -> AppResult<Vec<usize>> {
    profile
        .top_ids
        .iter()
        .chain(&profile.bottom_ids)
        .map(|id| {
            corpus
                .position(id)
                .ok_or_else(|| AppError::Invalid(format!("profile names unknown document `{id}`")))
        })
        .collect()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Ids double as file names, so keep them to a safe alphabet.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl FeedbackSession {
    pub fn new(ws: &Workspace, session_id: impl Into<String>, overrides: &SessionOverrides) -> AppResult<Self> {
        let session_id = session_id.into();
        if !valid_session_id(&session_id) {
            return Err(AppError::Invalid(format!("invalid session id `{session_id}`")));
        }
        let settings = overrides.apply(ws.default_settings())?;
        let profiles = ws.profiles_for(&settings)?;
        let now = now_ms();
        Ok(FeedbackSession {
            v: SESSION_VERSION,
            session_id,
            corpus_ref: ws.stored.corpus_ref.clone(),
            revision: 0,
            settings,
            profiles,
            selection: None,
            polarity_map: None,
            result: None,
            history: Vec::new(),
            created_at_ms: now,
            updated_at_ms: now,
        })
    }

    fn check_corpus(&self, ws: &Workspace) -> AppResult<()> {
        if self.corpus_ref != ws.stored.corpus_ref {
            return Err(AppError::Invalid(format!(
                "session {} belongs to a different corpus",
                self.session_id
            )));
        }
        Ok(())
    }

    /// Clusters every document along `eig_indices` and makes that the
    /// session's current result. Earlier selections stay in `history`.
    pub fn record_selection(
        &mut self,
        ws: &Workspace,
        eig_indices: &[usize],
        polarity_map: Option<PolarityMap>,
        source: SelectionSource,
        score: Option<SelectionScore>,
    ) -> AppResult<&SelectionResult> {
        self.check_corpus(ws)?;
        validate_indices(eig_indices, ws.basis.m())?;
        if let Some(map) = polarity_map {
            if !map.is_valid() {
                return Err(AppError::Invalid("the two lists need distinct polarities".to_string()));
            }
        }
        let result = cluster_selection(
            &ws.stored.corpus,
            &ws.basis,
            &self.profiles,
            eig_indices,
            polarity_map,
            self.settings.kmeans_runs,
            self.settings.base_seed,
        )?;
        let selection = Selection {
            eig_indices: eig_indices.to_vec(),
            source,
            score,
        };
        self.revision += 1;
        self.updated_at_ms = now_ms();
        self.history.push(SelectionRecord {
            revision: self.revision,
            selection: selection.clone(),
            polarity_map,
            result: result.clone(),
            recorded_at_ms: self.updated_at_ms,
        });
        self.selection = Some(selection);
        self.polarity_map = polarity_map;
        self.result = Some(result);
        Ok(self.result.as_ref().unwrap())
    }

    /// Picks the dimension whose lists best match the lexicon and records it.
    pub fn lexicon_selection(&mut self, ws: &Workspace, lexicon: &SubjectivityLexicon) -> AppResult<SelectionScore> {
        let chosen = lexicon_select(&self.profiles, lexicon)?;
        self.record_selection(
            ws,
            &[chosen.score.eig_index],
            Some(chosen.polarity_map),
            SelectionSource::Lexicon,
            Some(chosen.score),
        )?;
        Ok(chosen.score)
    }

    /// Picks the dimension best matching a profile selected elsewhere. A
    /// polarity map given for the source's lists carries over to the match.
    pub fn adapt(
        &mut self,
        ws: &Workspace,
        source: &DimensionProfile,
        source_polarity: Option<PolarityMap>,
    ) -> AppResult<SelectionScore> {
        let score = adapt_select(source, &self.profiles)?;
        let map = source_polarity.map(|m| adapted_polarity(&m, score.pairing));
        self.record_selection(ws, &[score.eig_index], map, SelectionSource::Adapted, Some(score))?;
        Ok(score)
    }

    /// Recomputes the current result from the recorded selection.
    pub fn replay(&self, ws: &Workspace) -> AppResult<Option<SelectionResult>> {
        self.check_corpus(ws)?;
        let Some(selection) = &self.selection else {
            return Ok(None);
        };
        let result = cluster_selection(
            &ws.stored.corpus,
            &ws.basis,
            &self.profiles,
            &selection.eig_indices,
            self.polarity_map,
            self.settings.kmeans_runs,
            self.settings.base_seed,
        )?;
        Ok(Some(result))
    }
}

/// Session files on disk plus the set of sessions being mutated.
#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    busy: Mutex<HashSet<String>>,
}

/// Marks a session busy until dropped.
pub struct SessionGuard<'a> {
    store: &'a SessionStore,
    id: String,
}

impl Drop for SessionGuard<'_> {
    fn drop(&mut self) {
        self.store.busy_set().remove(&self.id);
    }
}

impl SessionStore {
    pub fn new(store: &Store) -> Self {
        SessionStore {
            dir: store.sessions_dir(),
            busy: Mutex::new(HashSet::new()),
        }
    }

    fn busy_set(&self) -> MutexGuard<'_, HashSet<String>> {
        self.busy.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn path(&self, id: &str) -> AppResult<PathBuf> {
        if !valid_session_id(id) {
            return Err(AppError::NotFound(format!("no session `{id}`")));
        }
        // the file name is the session id itself
        Ok(self.dir.join(id))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.is_file()).unwrap_or(false)
    }

    pub fn load(&self, id: &str) -> AppResult<FeedbackSession> {
        let path = self.path(id)?;
        let bytes = fs::read(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                AppError::NotFound(format!("no session `{id}`"))
            } else {
                AppError::io(format!("reading {}", path.display()), e)
            }
        })?;
        let session: FeedbackSession =
            serde_json::from_slice(&bytes).map_err(|e| AppError::parse(path.display().to_string(), e))?;
        if session.v != SESSION_VERSION {
            return Err(AppError::parse(
                path.display().to_string(),
                format!("unsupported version {}", session.v),
            ));
        }
        Ok(session)
    }

    pub fn save(&self, session: &FeedbackSession) -> AppResult<()> {
        write_json(&self.path(&session.session_id)?, session)
    }

    /// All session ids, sorted.
    pub fn list(&self) -> AppResult<Vec<String>> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(AppError::io(format!("listing {}", self.dir.display()), e)),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|name| valid_session_id(name))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Marks session `id` busy without waiting; an already busy session is
    /// a conflict.
    pub fn lock(&self, id: &str) -> AppResult<SessionGuard<'_>> {
        if !self.busy_set().insert(id.to_string()) {
            return Err(AppError::Conflict(format!("session `{id}` is being modified")));
        }
        Ok(SessionGuard {
            store: self,
            id: id.to_string(),
        })
    }

    /// Load, mutate, save under the session's lock. With `expected_revision`,
    /// a session changed since that revision is a conflict.
    pub fn update<T>(
        &self,
        id: &str,
        expected_revision: Option<u64>,
        f: impl FnOnce(&mut FeedbackSession) -> AppResult<T>,
    ) -> AppResult<(FeedbackSession, T)> {
        let _guard = self.lock(id)?;
        let mut session = self.load(id)?;
        if let Some(rev) = expected_revision {
            if rev != session.revision {
                return Err(AppError::Conflict(format!(
                    "session `{id}` is at revision {}, not {rev}",
                    session.revision
                )));
            }
        }
        let out = f(&mut session)?;
        self.save(&session)?;
        Ok((session, out))
    }

    /// Saves a new session; an existing id is a conflict.
    pub fn create(&self, session: &FeedbackSession) -> AppResult<()> {
        let _guard = self.lock(&session.session_id)?;
        if self.exists(&session.session_id) {
            return Err(AppError::Conflict(format!(
                "session `{}` already exists",
                session.session_id
            )));
        }
        self.save(session)
    }
}
