//! End-to-end analysis of a project: load, detect, diff, mine, report.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::analytics::{knee_point, rank_similarity, ranking, summarize, DistributionSummary, KneePoint, RankStatistic};
use crate::calltree::Snapshot;
use crate::catalog::KeywordCatalog;
use crate::evolution::{diff_snapshots, match_refactorings, refactoring_rates, RefactoringAction};
use crate::history::{load_current, walk_roots};
use crate::parser::DEFAULT_EXTENSIONS;
use crate::report::{
    ActionRow, FindingRow, Fixed4, KneeInfo, RankingInfo, RateRow, Report, ReportMeta, SimilarityInfo, SummaryRow,
    TimeseriesRow,
};
use crate::smells::{detect_snapshot, step_action_counts, DetectorConfig, SmellId, TestFindings};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Snapshot,
    History,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snapshot" => Ok(Mode::Snapshot),
            "history" => Ok(Mode::History),
            other => Err(format!("unknown mode `{other}` (expected snapshot or history)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Snapshot => "snapshot",
            Mode::History => "history",
        })
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub mode: Mode,
    pub roots: Vec<PathBuf>,
    /// Defaults to the first root's directory name.
    pub project: Option<String>,
    pub extensions: Vec<String>,
    pub catalog: Arc<KeywordCatalog>,
    pub detector: DetectorConfig,
    /// Replace the long-step threshold by the knee of the corpus' step sizes.
    pub derive_long_step_threshold: bool,
    /// Smells kept in the report; all when `None`.
    pub smells: Option<BTreeSet<SmellId>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mode: Mode::Snapshot,
            roots: Vec::new(),
            project: None,
            extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
            catalog: Arc::new(KeywordCatalog::builtin()),
            detector: DetectorConfig::default(),
            derive_long_step_threshold: false,
            smells: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VersionAnalysis {
    pub id: String,
    pub timestamp: i64,
    pub findings: TestFindings,
    pub diagnostics: usize,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub project: String,
    pub mode: Mode,
    /// Oldest first; a single entry in snapshot mode.
    pub versions: Vec<VersionAnalysis>,
    pub actions: Vec<RefactoringAction>,
    pub long_step_threshold: usize,
    /// Knee and number of steps it was computed from, when derived.
    pub knee: Option<(KneePoint, usize)>,
    pub smells: Vec<SmellId>,
}

/// Knee of the step sizes of a snapshot, or `None` when there is no usable knee.
pub fn derive_long_step_threshold(snapshot: &Snapshot) -> Option<(KneePoint, usize)> {
    let values: Vec<f64> = snapshot
        .tests
        .iter()
        .flat_map(step_action_counts)
        .map(|n| n as f64)
        .collect();
    match knee_point(&values) {
        Ok(k) => Some((k, values.len())),
        Err(e) => {
            log::warn!("cannot derive the long-step threshold: {e}");
            None
        }
    }
}

fn apply_knee(options: &AnalysisOptions, snapshot: &Snapshot, config: &mut DetectorConfig) -> Option<(KneePoint, usize)> {
    if !options.derive_long_step_threshold {
        return None;
    }
    let (knee, steps) = derive_long_step_threshold(snapshot)?;
    let l = (knee.threshold.round() as usize).max(1);
    log::info!(
        "long-step threshold derived from {steps} steps: {l} (quantile {:.3}, score {:.3})",
        knee.quantile,
        knee.score
    );
    config.long_step_threshold = l;
    Some((knee, steps))
}

fn project_name(options: &AnalysisOptions) -> String {
    options.project.clone().unwrap_or_else(|| {
        options
            .roots
            .first()
            .and_then(|r| r.canonicalize().ok().or_else(|| Some(r.clone())))
            .and_then(|r| r.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "project".into())
    })
}

pub fn analyze(options: &AnalysisOptions) -> Result<Analysis, Error> {
    if options.roots.is_empty() {
        return Err(Error::Config("no project root given".into()));
    }
    if options.detector.long_step_threshold == 0 {
        return Err(Error::Config("the long-step threshold must be at least 1".into()));
    }
    let smells: Vec<SmellId> = match &options.smells {
        Some(s) => s.iter().copied().collect(),
        None => SmellId::ALL.to_vec(),
    };
    match options.mode {
        Mode::Snapshot => analyze_snapshot(options, smells),
        Mode::History => analyze_history(options, smells),
    }
}

fn analyze_snapshot(options: &AnalysisOptions, smells: Vec<SmellId>) -> Result<Analysis, Error> {
    let snapshot = load_current(&options.roots, &options.extensions, Arc::clone(&options.catalog))?;
    log_diagnostics(&snapshot);
    let mut config = options.detector.clone();
    let knee = apply_knee(options, &snapshot, &mut config);
    let findings = detect_snapshot(&snapshot, &config);
    Ok(Analysis {
        project: project_name(options),
        mode: Mode::Snapshot,
        versions: vec![VersionAnalysis {
            id: snapshot.version.clone(),
            timestamp: 0,
            findings,
            diagnostics: snapshot.diagnostics.len(),
        }],
        actions: Vec::new(),
        long_step_threshold: config.long_step_threshold,
        knee,
        smells,
    })
}

fn log_diagnostics(snapshot: &Snapshot) {
    for d in &snapshot.diagnostics {
        log::debug!("{}: {}:{}: {}", snapshot.version, d.path, d.line, d.message);
    }
}

fn analyze_history(options: &AnalysisOptions, smells: Vec<SmellId>) -> Result<Analysis, Error> {
    let project = project_name(options);
    let history = walk_roots(&project, &options.roots, &options.extensions)?.with_catalog(Arc::clone(&options.catalog));
    log::info!("{project}: {} test-modifying versions", history.len());
    let mut config = options.detector.clone();
    let knee = match history.records.last() {
        Some(last) if options.derive_long_step_threshold => {
            let s = history.materialize(last)?;
            apply_knee(options, &s, &mut config)
        }
        _ => None,
    };
    if history.len() == 1 {
        log::warn!("{project} has a single version; there is nothing to compare");
    }

    let window = (2 * rayon::current_num_threads()).max(2);
    let mut versions: Vec<VersionAnalysis> = Vec::with_capacity(history.len());
    let mut actions = Vec::new();
    let mut previous: Option<(Arc<Snapshot>, TestFindings)> = None;
    for chunk in history.records.chunks(window) {
        let loaded: Vec<(Arc<Snapshot>, TestFindings)> = chunk
            .par_iter()
            .map(|r| {
                let s = history.materialize(r)?;
                log_diagnostics(&s);
                let f = detect_snapshot(&s, &config);
                Ok((s, f))
            })
            .collect::<Result<_, Error>>()?;
        let mut pairs: Vec<(&(Arc<Snapshot>, TestFindings), &(Arc<Snapshot>, TestFindings))> = Vec::new();
        if let Some(p) = &previous {
            pairs.push((p, &loaded[0]));
        }
        pairs.extend(loaded.windows(2).map(|w| (&w[0], &w[1])));
        let mined: Vec<Vec<RefactoringAction>> = pairs
            .par_iter()
            .map(|((s1, f1), (s2, f2))| match_refactorings(s1, s2, f1, f2, &diff_snapshots(s1, s2)))
            .collect();
        actions.extend(mined.into_iter().flatten());
        for (record, (snapshot, findings)) in chunk.iter().zip(&loaded) {
            versions.push(VersionAnalysis {
                id: record.id.clone(),
                timestamp: record.timestamp,
                findings: findings.clone(),
                diagnostics: snapshot.diagnostics.len(),
            });
        }
        previous = loaded.into_iter().last();
    }
    log::info!("{project}: {} refactoring actions", actions.len());
    Ok(Analysis {
        project,
        mode: Mode::History,
        versions,
        actions,
        long_step_threshold: config.long_step_threshold,
        knee,
        smells,
    })
}

fn opt(x: Option<f64>) -> Option<Fixed4> {
    x.map(Fixed4::from_f64)
}

fn summary_row(version: &str, s: &DistributionSummary) -> SummaryRow {
    SummaryRow {
        version: version.to_string(),
        smell: s.smell.code().to_string(),
        tests: s.tests as u64,
        symptomatic_tests: s.symptomatic_tests as u64,
        percent_symptomatic: s.percent_symptomatic.into(),
        mean_count: s.mean_count.into(),
        count_n: s.counts.map_or(0, |c| c.n as u64),
        count_min: opt(s.counts.map(|c| c.min)),
        count_q1: opt(s.counts.map(|c| c.q1)),
        count_median: opt(s.counts.map(|c| c.median)),
        count_q3: opt(s.counts.map(|c| c.q3)),
        count_max: opt(s.counts.map(|c| c.max)),
        count_mean: opt(s.counts.map(|c| c.mean)),
        density_n: s.densities.map_or(0, |c| c.n as u64),
        density_min: opt(s.densities.map(|c| c.min)),
        density_q1: opt(s.densities.map(|c| c.q1)),
        density_median: opt(s.densities.map(|c| c.median)),
        density_q3: opt(s.densities.map(|c| c.q3)),
        density_max: opt(s.densities.map(|c| c.max)),
        density_mean: opt(s.densities.map(|c| c.mean)),
    }
}

fn ranked(summaries: &[DistributionSummary], stat: RankStatistic, keep: &[SmellId]) -> Vec<SmellId> {
    ranking(summaries, stat).into_iter().filter(|s| keep.contains(s)).collect()
}

fn codes(ids: &[SmellId]) -> Vec<String> {
    ids.iter().map(|s| s.code().to_string()).collect()
}

pub fn build_report(analysis: &Analysis) -> Report {
    let keep = &analysis.smells;
    let kept = |s: SmellId| keep.contains(&s);
    let last = analysis.versions.last();

    let findings = last
        .map(|v| {
            v.findings
                .iter()
                .flat_map(|(test, fs)| {
                    fs.iter().filter(|f| kept(f.smell)).map(move |f| FindingRow {
                        version: v.id.clone(),
                        file: test.path.clone(),
                        test: test.name.clone(),
                        smell: f.smell.code().to_string(),
                        count: f.count as u64,
                        denominator: f.denominator as u64,
                        density: opt(f.density()),
                    })
                })
                .collect()
        })
        .unwrap_or_default();

    let actions: Vec<&RefactoringAction> = analysis.actions.iter().filter(|a| kept(a.smell)).collect();
    let action_rows = actions
        .iter()
        .map(|a| ActionRow {
            from_version: a.from_version.clone(),
            to_version: a.to_version.clone(),
            file: a.test.path.clone(),
            test: a.test.name.clone(),
            smell: a.smell.code().to_string(),
            location: a.location.clone(),
            changes: a
                .changes
                .iter()
                .map(|c| {
                    format!(
                        "{}: {} -> {}",
                        c.kind.as_str(),
                        c.before.as_ref().map_or("", |n| n.content.as_str()),
                        c.after.as_ref().map_or("", |n| n.content.as_str())
                    )
                })
                .collect::<Vec<_>>()
                .join("; "),
        })
        .collect();

    let history = analysis.mode == Mode::History;
    let all_findings: Vec<TestFindings> = analysis.versions.iter().map(|v| v.findings.clone()).collect();
    let rates = if history {
        refactoring_rates(&all_findings, &analysis.actions)
            .into_iter()
            .filter(|r| kept(r.smell))
            .map(|r| RateRow {
                smell: r.smell.code().to_string(),
                actions: r.actions as u64,
                symptoms: r.symptoms as u64,
                rate: r.rate.into(),
                symptomatic_tests: r.symptomatic_tests as u64,
                refactored_tests: r.refactored_tests as u64,
                percent_refactored: r.percent_refactored.into(),
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut timeseries = Vec::new();
    if history {
        for (i, v) in analysis.versions.iter().enumerate() {
            for &s in keep {
                let per_test = v.findings.values().map(|fs| fs[s.index()].count);
                timeseries.push(TimeseriesRow {
                    index: i as u64,
                    version: v.id.clone(),
                    timestamp: v.timestamp,
                    tests: v.findings.len() as u64,
                    smell: s.code().to_string(),
                    symptoms: per_test.clone().sum::<usize>() as u64,
                    symptomatic_tests: per_test.filter(|c| *c > 0).count() as u64,
                });
            }
        }
    }

    let (summaries, rankings) = match last {
        Some(v) => {
            let all = summarize(&v.findings);
            let rows = all.iter().filter(|s| kept(s.smell)).map(|s| summary_row(&v.id, s)).collect();
            let rankings = RankStatistic::ALL
                .iter()
                .map(|stat| RankingInfo {
                    statistic: stat.as_str().to_string(),
                    ranking: codes(&ranked(&all, *stat, keep)),
                })
                .collect();
            (rows, rankings)
        }
        None => (Vec::new(), Vec::new()),
    };

    let mut similarities = Vec::new();
    if let (true, Some(first), Some(last)) = (analysis.versions.len() > 1, analysis.versions.first(), last) {
        let (a, b) = (summarize(&first.findings), summarize(&last.findings));
        for stat in RankStatistic::ALL {
            let sim = rank_similarity(&ranked(&a, stat, keep), &ranked(&b, stat, keep))
                .expect("both rankings cover the kept smells");
            similarities.push(SimilarityInfo {
                statistic: stat.as_str().to_string(),
                from_version: first.id.clone(),
                to_version: last.id.clone(),
                similarity: sim.into(),
            });
        }
    }

    Report {
        meta: ReportMeta {
            tool: "suitsmell".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            project: analysis.project.clone(),
            mode: analysis.mode.to_string(),
            versions: analysis.versions.len() as u64,
            long_step_threshold: analysis.long_step_threshold as u64,
            threshold_derivation: analysis.knee.map(|(k, steps)| KneeInfo {
                quantile: k.quantile.into(),
                threshold: k.threshold.into(),
                score: k.score.into(),
                steps: steps as u64,
            }),
            smells: codes(keep),
            diagnostics: analysis.versions.iter().map(|v| v.diagnostics as u64).sum(),
            rankings,
            similarities,
        },
        findings,
        actions: action_rows,
        rates,
        timeseries,
        summaries,
    }
}
