//! Batch search driver: builds instances from starting points, runs seeded
//! searches with optional propagation layers, verifies and renders results.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde_json::json;

use crate::bridge::{BridgeConfig, SearchBridge};
use crate::cond::{Cond, CondWord};
use crate::encoder::Encoder;
use crate::error::{ParseError, SolveError};
use crate::path::CondGrid;
use crate::sha256::{compress, verify_sfs_collision, ChainingValue, MessageBlock};
use crate::solver::{Budget, SolveStatus, Solver, SolverConfig, Stats};

/// One search batch: a step count, a starting point, seeds and budgets.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub steps: usize,
    pub start_point: CondGrid,
    pub seeds: Vec<u64>,
    pub timeout: Option<Duration>,
    pub max_conflicts: Option<u64>,
    pub bridge: BridgeConfig,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Solved,
    Unsat,
    TimeoutExpired,
    ConflictBudgetExpired,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SearchStatus::Solved => "solved",
            SearchStatus::Unsat => "unsat",
            SearchStatus::TimeoutExpired => "timeout",
            SearchStatus::ConflictBudgetExpired => "conflicts-exhausted",
        };
        f.write_str(s)
    }
}

/// A verified semi-free-start collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionRecord {
    pub steps: usize,
    pub cv: ChainingValue,
    pub m: MessageBlock,
    pub m2: MessageBlock,
    pub hash: ChainingValue,
}

impl CollisionRecord {
    /// Text layout: one labelled line per row, hex words.
    pub fn render(&self) -> String {
        format!(
            "steps: {}\nh0: {}\nm:  {}\nm2: {}\nh1: {}\n",
            self.steps,
            self.cv.to_hex(),
            self.m.to_hex(),
            self.m2.to_hex(),
            self.hash.to_hex()
        )
    }

    pub fn parse(text: &str) -> Result<CollisionRecord, ParseError> {
        let mut steps = None;
        let mut cv = None;
        let mut m = None;
        let mut m2 = None;
        let mut hash = None;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| ParseError::Other(format!("bad record line {line:?}")))?;
            match key.trim() {
                "steps" => {
                    steps = Some(value.trim().parse::<usize>().map_err(|_| {
                        ParseError::Other(format!("bad step count {value:?}"))
                    })?)
                }
                "h0" => cv = Some(ChainingValue::from_hex(value)?),
                "m" => m = Some(MessageBlock::from_hex(value)?),
                "m2" => m2 = Some(MessageBlock::from_hex(value)?),
                "h1" => hash = Some(ChainingValue::from_hex(value)?),
                other => return Err(ParseError::Other(format!("unknown record key {other:?}"))),
            }
        }
        let missing = |what: &str| ParseError::Other(format!("record is missing {what}"));
        Ok(CollisionRecord {
            steps: steps.ok_or_else(|| missing("steps"))?,
            cv: cv.ok_or_else(|| missing("h0"))?,
            m: m.ok_or_else(|| missing("m"))?,
            m2: m2.ok_or_else(|| missing("m2"))?,
            hash: hash.ok_or_else(|| missing("h1"))?,
        })
    }

    /// Re-verifies the record from scratch.
    pub fn verify(&self) -> bool {
        verify_sfs_collision(&self.cv, &self.m, &self.m2, self.steps)
            && compress(&self.cv, &self.m, self.steps) == self.hash
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub steps: usize,
    pub config_tag: String,
    pub seed: u64,
    pub status: SearchStatus,
    pub elapsed: Duration,
    pub collision: Option<CollisionRecord>,
    pub characteristic: Option<CondGrid>,
    pub solver_stats: Stats,
    pub bridge_summary: serde_json::Value,
}

impl SearchResult {
    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }
}

/// Refines the final four state rows to '-' (equal outputs under a shared
/// chaining value is exactly the collision condition). Fails if the starting
/// point forces a difference there.
pub fn collision_constrained(sp: &CondGrid) -> Result<CondGrid, SolveError> {
    let mut out = sp.clone();
    let n = sp.n() as isize;
    for i in (n - 4).max(0)..n {
        let row = out.row_mut(i);
        for word in [&mut row.a, &mut row.e] {
            let mut refined = [Cond::Same; 32];
            for (bit, c) in word.iter().enumerate() {
                refined[bit] = c.intersect(Cond::Same).ok_or_else(|| {
                    SolveError::Decode(format!(
                        "starting point forces a difference in state row {i}, which cannot collide"
                    ))
                })?;
            }
            *word = CondWord(refined);
        }
    }
    Ok(out)
}

/// Loads a starting-point file and drops rows to reach `steps`.
pub fn load_start_point(text: &str, steps: usize) -> Result<CondGrid, SolveError> {
    let sp = CondGrid::parse(text)?;
    if steps > sp.n() {
        return Err(SolveError::StepMismatch { sp: sp.n(), requested: steps });
    }
    Ok(sp.drop_rows(sp.n() - steps)?)
}

/// Runs one seed against a built instance.
fn run_one(
    encoded: &crate::encoder::Encoded,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<SearchResult, SolveError> {
    let start = Instant::now();
    let mut bridge = SearchBridge::new(encoded, cfg.bridge);
    let solver_cfg = SolverConfig {
        seed,
        max_conflicts: cfg.max_conflicts,
        timeout: cfg.timeout,
        ..Default::default()
    };
    let mut solver = Solver::new(&encoded.cnf, solver_cfg)?;
    let (status, stats) = solver.solve(&mut bridge)?;
    let elapsed = start.elapsed();
    let (status, collision, characteristic) = match status {
        SolveStatus::Sat(model) => {
            let (cv, m, m2) = encoded.decode(&model);
            if !verify_sfs_collision(&cv, &m, &m2, cfg.steps) {
                // an unverifiable model indicates an encoder bug; dump the
                // evidence before failing
                let dump = json!({
                    "steps": cfg.steps,
                    "seed": seed,
                    "cv": cv.to_hex(),
                    "m": m.to_hex(),
                    "m2": m2.to_hex(),
                    "model_true_vars": model.iter().filter(|&&b| b).count(),
                });
                if let Some(dir) = &cfg.out_dir {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(
                        dir.join(format!("forensic-{}-{}.json", cfg.steps, seed)),
                        serde_json::to_string_pretty(&dump).unwrap(),
                    )?;
                }
                return Err(SolveError::Verification(format!(
                    "model for steps={} seed={seed} does not verify: {dump}"
                    , cfg.steps
                )));
            }
            let record = CollisionRecord {
                steps: cfg.steps,
                cv,
                m,
                m2,
                hash: compress(&cv, &m, cfg.steps),
            };
            let (_, t1) = crate::sha256::compress_trace(&cv, &m, cfg.steps);
            let (_, t2) = crate::sha256::compress_trace(&cv, &m2, cfg.steps);
            let ch = CondGrid::from_traces(&t1, &t2);
            (SearchStatus::Solved, Some(record), Some(ch))
        }
        SolveStatus::Unsat => (SearchStatus::Unsat, None, None),
        SolveStatus::Unknown(Budget::WallClock) => (SearchStatus::TimeoutExpired, None, None),
        SolveStatus::Unknown(Budget::Conflicts) => {
            (SearchStatus::ConflictBudgetExpired, None, None)
        }
    };
    Ok(SearchResult {
        steps: cfg.steps,
        config_tag: cfg.bridge.tag(),
        seed,
        status,
        elapsed,
        collision,
        characteristic,
        solver_stats: stats,
        bridge_summary: bridge.summary(),
    })
}

/// Runs every seed (concurrently) and writes result artifacts when an output
/// directory is configured. Results come back in seed order.
pub fn run_search(cfg: &SearchConfig) -> Result<Vec<SearchResult>, SolveError> {
    if cfg.start_point.n() != cfg.steps {
        return Err(SolveError::StepMismatch { sp: cfg.start_point.n(), requested: cfg.steps });
    }
    if !cfg.start_point.forces_message_difference() {
        return Err(SolveError::Decode(
            "starting point never forces a message difference; every solution would be trivial"
                .into(),
        ));
    }
    let constrained = collision_constrained(&cfg.start_point)?;
    let mut encoder = Encoder::new();
    let encoded = encoder.build(cfg.steps, &constrained)?;

    let results: Vec<Result<SearchResult, SolveError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let encoded = &encoded;
                scope.spawn(move || run_one(encoded, cfg, seed))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("search thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), results_csv(&out))?;
        for r in &out {
            if let (Some(record), Some(ch)) = (&r.collision, &r.characteristic) {
                let base = format!("collision-{}-{}-{}", r.steps, r.config_tag, r.seed);
                std::fs::write(dir.join(format!("{base}.txt")), record.render())?;
                std::fs::write(dir.join(format!("{base}.path")), ch.render())?;
            }
            let stats = json!({
                "steps": r.steps,
                "config": r.config_tag,
                "seed": r.seed,
                "status": r.status.to_string(),
                "elapsed_s": r.elapsed.as_secs_f64(),
                "solver": r.solver_stats,
                "layers": r.bridge_summary,
            });
            let name = format!("stats-{}-{}-{}.json", r.steps, r.config_tag, r.seed);
            std::fs::write(dir.join(name), serde_json::to_string_pretty(&stats).unwrap())?;
        }
    }
    Ok(out)
}

/// Per-run rows. Solved rows carry the collision words so a reader can
/// re-verify them with nothing but this file.
pub fn results_csv(results: &[SearchResult]) -> String {
    let mut out = String::from(
        "steps,config,seed,status,elapsed_s,conflicts,decisions,propagations,external_propagations,external_clauses,external_decisions,cv,m,m2\n",
    );
    for r in results {
        let (cv, m, m2) = match &r.collision {
            Some(c) => (c.cv.to_hex(), c.m.to_hex(), c.m2.to_hex()),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{:.3},{},{},{},{},{},{},{},{},{}\n",
            r.steps,
            r.config_tag,
            r.seed,
            r.status,
            r.elapsed.as_secs_f64(),
            r.solver_stats.conflicts,
            r.solver_stats.decisions,
            r.solver_stats.propagations,
            r.solver_stats.external_propagations,
            r.solver_stats.external_clauses,
            r.solver_stats.external_decisions,
            cv,
            m,
            m2
        ));
    }
    out
}

/// Solved counts and timing medians grouped by (steps, config), plus the
/// minimum solve time per group for plotting.
pub fn summary_table(results: &[SearchResult]) -> String {
    let mut groups: Vec<(usize, String)> = results
        .iter()
        .map(|r| (r.steps, r.config_tag.clone()))
        .collect();
    groups.sort();
    groups.dedup();
    let mut out = String::from("steps config solved/total median_s min_s\n");
    for (steps, config) in groups {
        let rows: Vec<&SearchResult> = results
            .iter()
            .filter(|r| r.steps == steps && r.config_tag == config)
            .collect();
        let solved = rows.iter().filter(|r| r.solved()).count();
        let mut times: Vec<f64> = rows
            .iter()
            .map(|r| r.elapsed.as_secs_f64())
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = median_of(&times);
        let min_solved = rows
            .iter()
            .filter(|r| r.solved())
            .map(|r| r.elapsed.as_secs_f64())
            .fold(f64::INFINITY, f64::min);
        let min_str =
            if min_solved.is_finite() { format!("{min_solved:.3}") } else { "-".into() };
        out.push_str(&format!(
            "{steps} {config} {solved}/{} {median:.3} {min_str}\n",
            rows.len()
        ));
    }
    out
}

/// Median with censored (unsolved) runs counted at their full elapsed time.
pub fn median_of(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Writes the sidecar variable-map file next to a DIMACS export.
pub fn write_dimacs_with_map(
    encoded: &crate::encoder::Encoded,
    base: &std::path::Path,
) -> Result<(), SolveError> {
    let mut cnf_file = std::io::BufWriter::new(std::fs::File::create(
        base.with_extension("cnf"),
    )?);
    encoded.cnf.write_dimacs(&mut cnf_file)?;
    cnf_file.flush()?;
    let mut map_file =
        std::io::BufWriter::new(std::fs::File::create(base.with_extension("map"))?);
    encoded.map.write_map(&mut map_file)?;
    map_file.flush()?;
    Ok(())
}
