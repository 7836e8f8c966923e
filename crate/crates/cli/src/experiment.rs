use std::path::{Path, PathBuf};

use fairdiv::adversary::{lower_bound_instance, AdaptiveStateMachine, AdversaryConfig};
use fairdiv::instance::{IntegralAllocation, TypeDistribution};
use fairdiv::metrics::{is_pareto_efficient_integral, EnvyReport, ParetoMode, BRUTE_FORCE_CAP};
use fairdiv::online::{run_adaptive, run_online, run_sequence, OnlineRun, Precomputed};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, PoCheck};
use crate::error::CliError;
use crate::precompute::{precompute, SolutionFile};

/// Command-line overrides for `run`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub rational: bool,
    /// Keep every arrival and assignment in `trace.jsonl`.
    pub trace: bool,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

/// Measurements of one trial at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub t: usize,
    pub max_envy: f64,
    pub peak_envy: f64,
    pub ef: bool,
    pub ef1: bool,
    pub utilities: Vec<f64>,
    pub po_verdict: String,
    /// `envy[i][j] = v_i(A_j) - v_i(A_i)`.
    pub envy: Vec<Vec<f64>>,
    pub pair_ef: Vec<Vec<bool>>,
    pub pair_ef1: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub peak_envy: f64,
    pub rows: Vec<CheckpointRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignments: Option<Vec<usize>>,
}

pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Seed actually used, after overrides.
    pub seed: u64,
    /// Present when the allocator rounds an offline allocation.
    pub solution: Option<SolutionFile>,
    /// Present when the solution was computed here rather than loaded.
    pub cisef_trace: Option<Vec<fairdiv::cisef::TraceEvent>>,
    pub trials: Vec<TrialResult>,
}

/// Runs every trial of `config`. Trial `k` uses random stream `k` of the
/// seed, so its output does not depend on the other trials.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<ExperimentResult, CliError> {
    config.validate()?;
    let seed = opts.seed.unwrap_or(config.seed);
    let (solution, cisef_trace) = if config.allocator.needs_precompute() {
        match &config.precomputed {
            Some(path) => (Some(SolutionFile::load(path)?), None),
            None => {
                let out = precompute(config, opts.rational)?;
                (Some(out.file), Some(out.trace))
            }
        }
    } else {
        (None, None)
    };
    let pre = solution
        .as_ref()
        .map(SolutionFile::precomputed)
        .transpose()?;
    let dist = if config.adversary.is_distributional() {
        Some(config.adversary.distribution()?)
    } else {
        None
    };
    if let (Some(p), Some(d)) = (&pre, &dist) {
        if p.n() != d.n() || p.m() != d.m() {
            return Err(CliError::Config(format!(
                "precomputed solution is {}x{}, the adversary has {} agents and {} types",
                p.n(),
                p.m(),
                d.n(),
                d.m()
            )));
        }
    }
    let checkpoints = config.checkpoints();
    let job = Job {
        config,
        seed,
        pre: pre.as_ref(),
        dist: dist.as_ref(),
        checkpoints: &checkpoints,
        keep: opts.trace,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let trials = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|k| job.trial(k))
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    Ok(ExperimentResult {
        config: config.clone(),
        seed,
        solution,
        cisef_trace,
        trials,
    })
}

struct Job<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    pre: Option<&'a Precomputed>,
    dist: Option<&'a TypeDistribution>,
    checkpoints: &'a [usize],
    keep: bool,
}

impl Job<'_> {
    fn trial(&self, k: u64) -> Result<TrialResult, CliError> {
        let c = self.config;
        let (alloc, run) = match &c.adversary {
            AdversaryConfig::NonadaptiveLb { n, eps } => {
                let lb = lower_bound_instance(*n, c.horizon, *eps)?;
                run_sequence(&lb.values, *n, c.allocator, self.seed, k, self.checkpoints)?
            }
            AdversaryConfig::AdaptiveSm { r, n } => {
                let mut machine = AdaptiveStateMachine::new(*n, *r, c.horizon)?;
                run_adaptive(
                    &mut machine,
                    *n,
                    c.allocator,
                    c.horizon,
                    self.seed,
                    k,
                    self.checkpoints,
                )?
            }
            _ => {
                let dist = self.dist.expect("distributional adversary");
                let pre = if c.allocator.needs_precompute() {
                    self.pre
                } else {
                    None
                };
                run_online(
                    dist,
                    c.allocator,
                    pre,
                    c.horizon,
                    self.seed,
                    k,
                    self.checkpoints,
                )?
            }
        };
        let rows = run
            .envy_trace
            .iter()
            .map(|snap| {
                let report = EnvyReport::from_snapshot(snap);
                Ok(CheckpointRow {
                    t: snap.t,
                    max_envy: report.max_envy,
                    peak_envy: snap.peak_envy,
                    ef: report.ef,
                    ef1: report.ef1,
                    utilities: (0..snap.values.len()).map(|i| snap.values[i][i]).collect(),
                    po_verdict: self.po_verdict(&alloc, &run, snap.t)?,
                    envy: report.matrix,
                    pair_ef: report.pair_ef,
                    pair_ef1: report.pair_ef1,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let OnlineRun {
            arrivals,
            assignments,
            peak_envy,
            ..
        } = run;
        Ok(TrialResult {
            trial: k,
            peak_envy,
            rows,
            arrivals: self.keep.then_some(arrivals),
            assignments: self.keep.then_some(assignments),
        })
    }

    fn po_verdict(
        &self,
        alloc: &IntegralAllocation,
        run: &OnlineRun,
        t: usize,
    ) -> Result<String, CliError> {
        let mode = self.config.po_check;
        if mode == PoCheck::Off {
            return Ok("n/a".into());
        }
        let n = alloc.n();
        let prefix = IntegralAllocation::from_assignments(
            n,
            &run.assignments[..t],
            alloc.item_values[..t].to_vec(),
        )?;
        let certificate = match (mode, self.pre) {
            (PoCheck::Auto | PoCheck::Certificate, Some(pre))
                if self.config.allocator.needs_precompute() =>
            {
                let m = ParetoMode::Certificate {
                    precomputed: pre,
                    arrivals: &run.arrivals[..t],
                };
                Some(is_pareto_efficient_integral(&prefix, m)?)
            }
            _ => None,
        };
        if mode == PoCheck::Certificate {
            return Ok(certificate.map_or("n/a", |v| v.label()).into());
        }
        if certificate
            .as_ref()
            .is_some_and(|v| v.label() == "efficient")
        {
            return Ok("efficient".into());
        }
        if (n as f64).powi(t as i32) > BRUTE_FORCE_CAP {
            return Ok(certificate.map_or("n/a", |v| v.label()).into());
        }
        let v = is_pareto_efficient_integral(
            &prefix,
            ParetoMode::Brute {
                cap: BRUTE_FORCE_CAP,
            },
        )?;
        Ok(v.label().into())
    }
}

fn same_clique(cliques: Option<&[Vec<usize>]>, i: usize, j: usize) -> &'static str {
    match cliques {
        None => "",
        Some(cs) => {
            if cs.iter().any(|c| c.contains(&i) && c.contains(&j)) {
                "true"
            } else {
                "false"
            }
        }
    }
}

fn csv_text(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

impl ExperimentResult {
    pub fn n(&self) -> usize {
        self.config.n()
    }

    /// `summary.csv`: one row per trial and checkpoint.
    pub fn summary_csv(&self) -> String {
        let n = self.n();
        let mut header: Vec<String> = [
            "trial",
            "checkpoint_t",
            "max_envy",
            "peak_envy",
            "ef",
            "ef1",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..n).map(|i| format!("utility_{i}")));
        header.push("po_verdict".into());
        let rows = self.trials.iter().flat_map(|tr| {
            tr.rows.iter().map(move |r| {
                let mut rec = vec![
                    tr.trial.to_string(),
                    r.t.to_string(),
                    r.max_envy.to_string(),
                    r.peak_envy.to_string(),
                ];
                rec.push(r.ef.to_string());
                rec.push(r.ef1.to_string());
                rec.extend(r.utilities.iter().map(f64::to_string));
                rec.push(r.po_verdict.clone());
                rec
            })
        });
        csv_text(header, rows)
    }

    /// `pairs.csv`: one row per trial, checkpoint and ordered pair of agents.
    pub fn pairs_csv(&self) -> String {
        let n = self.n();
        let cliques = self.solution.as_ref().map(|s| s.cliques.as_slice());
        let header = [
            "trial",
            "checkpoint_t",
            "i",
            "j",
            "envy",
            "ef",
            "ef1",
            "same_clique",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows = self.trials.iter().flat_map(move |tr| {
            tr.rows.iter().flat_map(move |r| {
                (0..n).flat_map(move |i| {
                    (0..n).filter(move |&j| j != i).map(move |j| {
                        vec![
                            tr.trial.to_string(),
                            r.t.to_string(),
                            i.to_string(),
                            j.to_string(),
                            r.envy[i][j].to_string(),
                            r.pair_ef[i][j].to_string(),
                            r.pair_ef1[i][j].to_string(),
                            same_clique(cliques, i, j).to_string(),
                        ]
                    })
                })
            })
        });
        csv_text(header, rows)
    }

    /// `trace.jsonl`: one JSON object per trial.
    pub fn trace_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            trial: u64,
            seed: u64,
            policy: &'a str,
            horizon: usize,
            peak_envy: f64,
            checkpoints: Vec<Point<'a>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            arrivals: Option<&'a [usize]>,
            #[serde(skip_serializing_if = "Option::is_none")]
            assignments: Option<&'a [usize]>,
        }
        #[derive(Serialize)]
        struct Point<'a> {
            t: usize,
            max_envy: f64,
            peak_envy: f64,
            ef: bool,
            ef1: bool,
            utilities: &'a [f64],
            po_verdict: &'a str,
        }
        let mut out = String::new();
        for tr in &self.trials {
            let line = Line {
                trial: tr.trial,
                seed: self.seed,
                policy: self.config.allocator.name(),
                horizon: self.config.horizon,
                peak_envy: tr.peak_envy,
                checkpoints: tr
                    .rows
                    .iter()
                    .map(|r| Point {
                        t: r.t,
                        max_envy: r.max_envy,
                        peak_envy: r.peak_envy,
                        ef: r.ef,
                        ef1: r.ef1,
                        utilities: &r.utilities,
                        po_verdict: &r.po_verdict,
                    })
                    .collect(),
                arrivals: tr.arrivals.as_deref(),
                assignments: tr.assignments.as_deref(),
            };
            out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
            out.push('\n');
        }
        out
    }

    /// Writes every output into `dir` and returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let o = &self.config.outputs;
        let mut files = vec![
            (dir.join(&o.summary), self.summary_csv()),
            (dir.join(&o.pairs), self.pairs_csv()),
            (dir.join(&o.trace), self.trace_jsonl()),
        ];
        if let Some(sol) = &self.solution {
            if self.config.precomputed.is_none() {
                let text = serde_json::to_string_pretty(sol).expect("plain data serializes");
                files.push((dir.join(&o.solution), text + "\n"));
            }
        }
        if let Some(trace) = &self.cisef_trace {
            files.push((dir.join(&o.cisef_trace), trace_lines(trace)));
        }
        write_all(dir, files)
    }
}

pub(crate) fn trace_lines(trace: &[fairdiv::cisef::TraceEvent]) -> String {
    trace
        .iter()
        .map(|e| serde_json::to_string(e).expect("plain data serializes") + "\n")
        .collect()
}

pub(crate) fn write_all(
    dir: &Path,
    files: Vec<(PathBuf, String)>,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    files
        .into_iter()
        .map(|(path, text)| {
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
