//! Batch runs over generator families, terminal counts and seeds.
//!
//! Configuration `c` is the `c`-th entry of `k_values`; run `r` of it uses
//! seed `derive_seed(base_seed, c, r)` for both the generator and the engine
//! (they draw from different streams). Rows come out ordered by
//! `(config, run)` whatever the completion order.

use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::covering::check_covering;
use crate::engine::{preprocess_subdivide, run_and_contract};
use crate::error::{Error, Result};
use crate::generate::GraphSpec;
use crate::params::{SprParams, DEFAULT_DELTA};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub graph: GraphSpec,
    /// Terminal counts to sweep; empty keeps the family's own.
    #[serde(default)]
    pub k_values: Vec<usize>,
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub subdivide: bool,
    /// One graph per configuration instead of one per run.
    #[serde(default)]
    pub fixed_graph: bool,
    #[serde(default)]
    pub max_rounds: Option<u64>,
    /// Attach covering-event flags to every row.
    #[serde(default)]
    pub analyze: bool,
    /// Record wall time; off keeps output byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub allow_small_k: bool,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
    #[serde(default)]
    pub json_out: Option<PathBuf>,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn configs(&self) -> Result<Vec<GraphSpec>> {
        if self.k_values.is_empty() {
            return Ok(vec![self.graph.clone()]);
        }
        self.k_values.iter().map(|&k| self.graph.with_k(k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::arg("an experiment needs at least one seed"));
        }
        if !self.allow_small_k {
            if let Some(k) = self.k_values.iter().find(|&&k| k < 2) {
                return Err(Error::arg(format!("k = {k} needs allow_small_k")));
            }
        }
        SprParams::new(2, 0).with_delta(self.delta)?;
        self.configs()?;
        let mut seen = HashSet::new();
        for c in 0..self.configs()?.len() as u64 {
            for r in 0..self.seeds {
                if !seen.insert(derive_seed(self.base_seed, c, r)) {
                    return Err(Error::arg("derived seeds collide"));
                }
            }
        }
        Ok(())
    }
}

/// One run. Fields after `seed` are empty when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub config: usize,
    pub run: u64,
    pub family: String,
    /// Vertices before subdivision.
    pub n: usize,
    /// Vertices the engine ran on.
    pub n_run: usize,
    pub k: usize,
    pub seed: u64,
    pub max_distortion: Option<f64>,
    pub mean_distortion: Option<f64>,
    pub rounds: Option<u64>,
    pub wall_ms: Option<f64>,
    pub late_cover: Option<bool>,
    pub early_cover: Option<bool>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rows = rd.deserialize().collect::<std::result::Result<Vec<ExperimentRow>, _>>()?;
        Ok(ExperimentOutput { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    /// Largest distortion per config, in config order.
    pub fn max_by_config(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for r in &self.rows {
            let Some(m) = r.max_distortion else { continue };
            match out.last_mut() {
                Some(last) if last.0 == r.config => last.1 = last.1.max(m),
                _ => out.push((r.config, m)),
            }
        }
        out
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let configs = spec.configs()?;
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| (0..spec.seeds).map(move |r| (c, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(c, r)| run_one(spec, &configs[c], c, r))
        .collect();
    let out = ExperimentOutput { rows };
    if let Some(p) = &spec.csv_out {
        out.write_csv(std::fs::File::create(p)?)?;
    }
    if let Some(p) = &spec.json_out {
        std::fs::write(p, out.to_json()?)?;
    }
    Ok(out)
}

fn run_one(spec: &ExperimentSpec, graph_spec: &GraphSpec, config: usize, run: u64) -> ExperimentRow {
    let seed = derive_seed(spec.base_seed, config as u64, run);
    let graph_seed = if spec.fixed_graph {
        derive_seed(spec.base_seed, config as u64, u64::MAX)
    } else {
        seed
    };
    let mut row = ExperimentRow {
        config,
        run,
        family: graph_spec.family().to_string(),
        n: 0,
        n_run: 0,
        k: 0,
        seed,
        max_distortion: None,
        mean_distortion: None,
        rounds: None,
        wall_ms: None,
        late_cover: None,
        early_cover: None,
        error: String::new(),
    };
    if let Err(e) = fill_row(spec, graph_spec, graph_seed, &mut row) {
        row.error = e.to_string();
    }
    row
}

fn fill_row(spec: &ExperimentSpec, graph_spec: &GraphSpec, graph_seed: u64, row: &mut ExperimentRow) -> Result<()> {
    let start = Instant::now();
    let g = graph_spec.generate(graph_seed)?;
    row.n = g.vertex_count();
    row.k = g.terminal_count();
    let mut params = SprParams::new(row.k, row.seed).with_delta(spec.delta)?;
    params.max_rounds_guard = spec.max_rounds;
    let sub;
    let run_graph = if spec.subdivide {
        sub = preprocess_subdivide(&g, &params)?;
        &sub.graph
    } else {
        &g
    };
    row.n_run = run_graph.vertex_count();
    let out = run_and_contract(run_graph, &params)?;
    row.max_distortion = Some(out.report.max_ratio());
    row.mean_distortion = Some(out.report.mean_ratio());
    row.rounds = Some(out.trace.rounds);
    if spec.analyze && row.k >= 2 {
        let c = check_covering(&out.trace, run_graph, &params)?;
        row.late_cover = Some(c.any_late());
        row.early_cover = Some(c.any_early());
    }
    if spec.timing {
        row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ExperimentSpec {
        ExperimentSpec::from_json(r#"{"graph": {"family": "cycle", "n": 30, "k": 3}, "seeds": 1}"#).unwrap()
    }

    #[test]
    fn single_run() {
        let out = run_experiment(&spec()).unwrap();
        assert_eq!(out.rows.len(), 1);
        let r = &out.rows[0];
        assert!(r.error.is_empty());
        assert!(r.max_distortion.unwrap() >= r.mean_distortion.unwrap());
        assert!(r.mean_distortion.unwrap() >= 1.0 - 1e-9);
        assert_eq!(r.wall_ms, None);
    }

    #[test]
    fn csv_roundtrip_and_order() {
        let mut s = spec();
        s.k_values = vec![2, 4];
        s.seeds = 3;
        s.analyze = true;
        let out = run_experiment(&s).unwrap();
        let keys: Vec<(usize, u64)> = out.rows.iter().map(|r| (r.config, r.run)).collect();
        assert_eq!(keys, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        let csv = out.to_csv_string().unwrap();
        assert!(csv.starts_with(
            "config,run,family,n,n_run,k,seed,max_distortion,mean_distortion,rounds,wall_ms,late_cover,early_cover,error\n"
        ));
        assert_eq!(ExperimentOutput::read_csv(&csv).unwrap(), out);
        assert_eq!(run_experiment(&s).unwrap().to_csv_string().unwrap(), csv);
    }

    #[test]
    fn failures_stay_in_their_row() {
        let mut s = spec();
        s.k_values = vec![2, 40];
        let out = run_experiment(&s).unwrap();
        assert!(out.rows[0].error.is_empty());
        assert!(!out.rows[1].error.is_empty());
        assert_eq!(out.max_by_config().len(), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = spec();
        s.seeds = 0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.k_values = vec![1];
        assert!(s.validate().is_err());
        s.allow_small_k = true;
        assert!(s.validate().is_ok());
        assert!(ExperimentSpec::from_json(r#"{"graph": {"family": "cycle", "n": 3, "k": 1}, "seeds": 1, "typo": 1}"#).is_err());
    }
}
