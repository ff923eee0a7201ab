//! Scenario files, batch execution and on-disk artifacts.
//!
//! A scenario is one JSON object with a `kind` tag: `simulate`, `edge_sweep`,
//! `floor_sweep`, `box_model` or `crossval`. Running it yields a set of named
//! files plus a manifest that records the config hash and crate version.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{extract_mode_shape, fit_growth_rate, growth_csv, GrowthModel, GrowthRow};
use crate::edge::{edge_csv, edge_rate, solve_edge_instability, sweep_edge_rates, EdgeProblem, SweepOptions};
use crate::integrators::{run_simulation, RunConfig, Termination, Trajectory};
use crate::models::{BoxModel, GnSoliton, Model};
use crate::monodromy::{box_csv, box_model_monodromy, floor_csv, floor_rate_thirring, integrate_monodromy, sweep_floor_rates};
use crate::par::{self, Execution};
use crate::{Error, Result, VERSION};

pub const SCHEMA_VERSION: u32 = 1;

/// Domain lengths `base_pi·π + offset` from an explicit list and/or a range,
/// plus plain multiples of π.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lengths {
    #[serde(default)]
    pub base_pi: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multiples_pi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<f64>,
    /// `[start, stop, step]` offsets, stop inclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 3]>,
}

impl Lengths {
    pub fn single(base_pi: f64, offset: f64) -> Lengths {
        Lengths { base_pi, multiples_pi: Vec::new(), offsets: vec![offset], range: None }
    }

    pub fn resolve(&self) -> Result<Vec<f64>> {
        let base = self.base_pi * PI;
        let mut out: Vec<f64> = self.multiples_pi.iter().map(|m| m * PI).collect();
        out.extend(self.offsets.iter().map(|o| base + o));
        if let Some([a, b, s]) = self.range {
            out.extend(crate::monodromy::length_range(a, b, s)?.into_iter().map(|o| base + o));
        }
        if let Some(bad) = out.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::param("lengths", format!("non-positive length {bad}")));
        }
        Ok(out)
    }
}

/// Growth tag a band is expected to carry after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub band: String,
    pub model: GrowthModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSweepSpec {
    pub model: Model,
    /// Ω for GN, Q for Thirring.
    pub parameter: f64,
    pub lengths: Lengths,
    #[serde(default)]
    pub options: SweepOptions,
    /// Also dump the most unstable eigenvector at the first length.
    #[serde(default)]
    pub eigenvector: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorSweepSpec {
    pub model: Model,
    pub parameter: f64,
    pub lengths: Lengths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub omega: f64,
    pub lengths: Lengths,
    /// Explicit box; fitted to the soliton when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BoxModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// Rate predicted by one of the analyses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Edge {
        model: Model,
        parameter: f64,
        length: f64,
        #[serde(default)]
        options: SweepOptions,
    },
    Floor {
        model: Model,
        parameter: f64,
        length: f64,
        #[serde(default)]
        steps: Option<usize>,
    },
}

impl Prediction {
    pub fn rate(&self) -> Result<f64> {
        match self {
            Prediction::Edge { model, parameter, length, options } => {
                Ok(edge_rate(*model, *parameter, *length, options)?.max_re)
            }
            Prediction::Floor { model, parameter, length, steps } => Ok(match model {
                Model::Gn => integrate_monodromy(*parameter, *length, *steps)?.growth_rate,
                Model::Thirring => floor_rate_thirring(*parameter, *length, *steps)?.growth_rate,
            }),
        }
    }
}

/// A predicted rate paired with the simulation that measures it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalPair {
    pub label: String,
    pub prediction: Prediction,
    pub run: RunConfig,
    /// Band whose fitted rate is compared.
    pub band: String,
    /// Allowed relative error.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Simulate {
        run: RunConfig,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        expect: Vec<Expectation>,
        /// High-pass cutoff for a `mode_shape.csv` of the final field.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode_shape_k: Option<f64>,
    },
    EdgeSweep(EdgeSweepSpec),
    FloorSweep(FloorSweepSpec),
    BoxModel(BoxSpec),
    Crossval {
        #[serde(default)]
        pairs: Vec<CrossvalPair>,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Simulate { .. } => "simulate",
            Task::EdgeSweep(_) => "edge_sweep",
            Task::FloorSweep(_) => "floor_sweep",
            Task::BoxModel(_) => "box_model",
            Task::Crossval { .. } => "crossval",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Full-scale runs left out of the default suite.
    #[serde(default)]
    pub extended: bool,
    #[serde(flatten)]
    pub task: Task,
}

impl Scenario {
    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| Error::Config(format!("scenario `{}`: {e}", self.name));
        match &self.task {
            Task::Simulate { run, expect, .. } => {
                let r = run.resolve().map_err(ctx)?;
                for e in expect {
                    if !r.bands.iter().any(|b| b.label == e.band) {
                        return Err(ctx(Error::Config(format!("expectation names unknown band `{}`", e.band))));
                    }
                }
            }
            Task::EdgeSweep(s) => {
                s.lengths.resolve().map_err(ctx)?;
            }
            Task::FloorSweep(s) => {
                s.lengths.resolve().map_err(ctx)?;
            }
            Task::BoxModel(s) => {
                s.lengths.resolve().map_err(ctx)?;
            }
            Task::Crossval { pairs } => {
                for p in pairs {
                    let r = p.run.resolve().map_err(ctx)?;
                    if !r.bands.iter().any(|b| b.label == p.band) {
                        return Err(ctx(Error::Config(format!("pair `{}` names unknown band `{}`", p.label, p.band))));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a seed override to every simulation in the scenario.
    pub fn with_seed(mut self, seed: u64) -> Scenario {
        match &mut self.task {
            Task::Simulate { run, .. } => run.seed = seed,
            Task::Crossval { pairs } => pairs.iter_mut().for_each(|p| p.run.seed = seed),
            _ => {}
        }
        self
    }

    /// SHA-256 of the canonical JSON of this scenario.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A file holding one scenario or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::param("schema_version", "missing"))?;
        if version != SCHEMA_VERSION as u64 {
            return Err(Error::param("schema_version", format!("unsupported version {version}")));
        }
        let file: ScenarioFile = if value.get("scenarios").is_some() {
            serde_json::from_value(value)?
        } else {
            let scenario: Scenario = serde_json::from_value(value)?;
            ScenarioFile { schema_version: SCHEMA_VERSION, scenarios: vec![scenario] }
        };
        let mut seen = BTreeSet::new();
        for s in &file.scenarios {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate scenario name `{}`", s.name)));
            }
            s.validate()?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<ScenarioFile> {
        ScenarioFile::parse(&std::fs::read_to_string(path)?)
    }
}

const LIBRARY: &[(&str, &str)] = &[
    ("resonance", include_str!("../scenarios/resonance.json")),
    ("edge", include_str!("../scenarios/edge.json")),
    ("floor", include_str!("../scenarios/floor.json")),
    ("generalizations", include_str!("../scenarios/generalizations.json")),
    ("crossval", include_str!("../scenarios/crossval.json")),
];

/// Every scenario shipped with the crate, in library order.
pub fn builtin_scenarios() -> Result<Vec<Scenario>> {
    let mut all = Vec::new();
    let mut seen = BTreeSet::new();
    for (file, text) in LIBRARY {
        let parsed = ScenarioFile::parse(text).map_err(|e| Error::Config(format!("library file `{file}`: {e}")))?;
        for s in parsed.scenarios {
            if !seen.insert(s.name.clone()) {
                return Err(Error::Config(format!("duplicate scenario name `{}`", s.name)));
            }
            all.push(s);
        }
    }
    Ok(all)
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios()?
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("no scenario named `{name}`")))
}

/// How a scenario run ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowUp { t: f64 },
    ExpectationsFailed { failures: Vec<String> },
    CrossvalFailed { failed: usize },
}

/// Named output files and the outcome of one scenario.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub outcome: Outcome,
}

impl Artifacts {
    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// Version, config hash and file list written next to every output set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    pub scenario: String,
    pub config_hash: String,
    pub outcome: Outcome,
    pub files: Vec<String>,
    pub config: Scenario,
}

impl Manifest {
    pub fn new(command: &str, scenario: &Scenario, artifacts: &Artifacts) -> Manifest {
        Manifest {
            tool: "dirac-ssm".into(),
            version: VERSION.into(),
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            scenario: scenario.name.clone(),
            config_hash: scenario.config_hash(),
            outcome: artifacts.outcome.clone(),
            files: artifacts.files.iter().map(|(n, _)| n.clone()).collect(),
            config: scenario.clone(),
        }
    }
}

/// Writes every artifact plus `manifest.json` into `dir`; returns the paths written.
pub fn write_artifacts(dir: &Path, command: &str, scenario: &Scenario, artifacts: &Artifacts) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, body) in &artifacts.files {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        paths.push(p);
    }
    let manifest = Manifest::new(command, scenario, artifacts);
    let p = dir.join("manifest.json");
    std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")?;
    paths.push(p);
    Ok(paths)
}

pub const SERIES_CSV_PREFIX: &str = "t,step,charge";

fn series_csv(t: &Trajectory) -> String {
    let mut s = String::from(SERIES_CSV_PREFIX);
    for b in &t.bands {
        s.push(',');
        s.push_str(&b.label);
    }
    s.push('\n');
    for snap in &t.snapshots {
        s.push_str(&format!("{},{},{:.15e}", snap.t, snap.step, snap.charge));
        for a in &snap.band_amplitudes {
            s.push_str(&format!(",{a:e}"));
        }
        s.push('\n');
    }
    s
}

fn growth_rows(t: &Trajectory) -> Vec<GrowthRow> {
    let c = &t.config;
    let param = match c.model {
        Model::Gn => c.initial.solitons.first().map_or(0.0, |s| s.omega),
        Model::Thirring => c.initial.thirring_q.unwrap_or(0.0),
    };
    t.tracks()
        .into_iter()
        .filter_map(|track| {
            let fit = fit_growth_rate(&track).ok()?;
            Some(GrowthRow {
                model: c.model.as_str().into(),
                scheme: c.scheme.as_str().into(),
                parameter: param,
                length: t.grid.length(),
                points: t.grid.len(),
                dt: t.dt,
                band: track.label.clone(),
                band_center: track.k_center,
                fit,
            })
        })
        .collect()
}

/// Runs a simulation scenario and checks its expectations.
pub fn simulate(run: &RunConfig, expect: &[Expectation], mode_shape_k: Option<f64>) -> Result<Artifacts> {
    let traj = run_simulation(run)?;
    let rows = growth_rows(&traj);
    let mut a = Artifacts { files: Vec::new(), outcome: Outcome::Completed };
    a.text("growth.csv", growth_csv(&rows));
    a.text("series.csv", series_csv(&traj));
    let field = match run.model {
        Model::Gn => traj.final_field.clone(),
        Model::Thirring => crate::models::uv_to_psi(&traj.final_field),
    };
    a.text("final_profile.csv", field.to_csv());
    if let Some(k) = mode_shape_k {
        a.text("mode_shape.csv", extract_mode_shape(&field, k)?.to_csv());
    }
    if traj.snapshots.iter().any(|s| s.spectrum.is_some()) {
        let mut buf = Vec::new();
        traj.write_spectra(&mut buf)?;
        a.files.push(("spectra.bin".into(), buf));
    }
    if let Termination::BlowUp { t, .. } = traj.termination {
        a.outcome = Outcome::BlowUp { t };
        return Ok(a);
    }
    let failures: Vec<String> = expect
        .iter()
        .filter_map(|e| {
            let got = rows.iter().find(|r| r.band == e.band).map(|r| r.fit.model);
            (got != Some(e.model)).then(|| {
                format!(
                    "band `{}`: expected {}, got {}",
                    e.band,
                    e.model.as_str(),
                    got.map_or("no fit", |m| m.as_str())
                )
            })
        })
        .collect();
    if !failures.is_empty() {
        a.outcome = Outcome::ExpectationsFailed { failures };
    }
    Ok(a)
}

pub fn edge_sweep(spec: &EdgeSweepSpec, exec: Execution) -> Result<Artifacts> {
    let lengths = spec.lengths.resolve()?;
    let rows = sweep_edge_rates(spec.model, spec.parameter, &lengths, &spec.options, exec)?;
    let mut a = Artifacts { files: Vec::new(), outcome: Outcome::Completed };
    a.text("edge_rates.csv", edge_csv(&rows));
    if spec.eigenvector {
        if let Some(r) = rows.first() {
            let p = match spec.model {
                Model::Gn => EdgeProblem::gn(spec.parameter, r.length, r.n, r.m)?,
                Model::Thirring => EdgeProblem::thirring(spec.parameter, r.length, r.n, r.m)?,
            };
            let rep = solve_edge_instability(&p, true)?;
            if let Some(mode) = rep.mode {
                a.text("edge_mode.csv", mode.to_csv());
            }
        }
    }
    Ok(a)
}

pub fn floor_sweep(spec: &FloorSweepSpec, exec: Execution) -> Result<Artifacts> {
    let lengths = spec.lengths.resolve()?;
    let rows = sweep_floor_rates(spec.model, spec.parameter, &lengths, spec.steps, exec)?;
    let mut a = Artifacts { files: Vec::new(), outcome: Outcome::Completed };
    a.text("floor_rates.csv", floor_csv(&rows));
    Ok(a)
}

pub fn box_model(spec: &BoxSpec, exec: Execution) -> Result<Artifacts> {
    let params = match spec.params {
        Some(p) => BoxModel::new(p.a, p.b, p.l_sol)?,
        None => BoxModel::fit(&GnSoliton::standing(spec.omega)?)?,
    };
    let lengths = spec.lengths.resolve()?;
    let rows = par::map(exec, &lengths, |&l| box_model_monodromy(&params, spec.omega, l, spec.steps))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut a = Artifacts { files: Vec::new(), outcome: Outcome::Completed };
    a.text("box_model.csv", box_csv(&rows));
    Ok(a)
}

/// One line of a cross-validation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalRow {
    pub label: String,
    pub predicted: f64,
    pub measured: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

pub fn crossval_pair(p: &CrossvalPair) -> CrossvalRow {
    let fail = |note: String| CrossvalRow {
        label: p.label.clone(),
        predicted: f64::NAN,
        measured: f64::NAN,
        relative_error: f64::NAN,
        tolerance: p.tolerance,
        pass: false,
        note,
    };
    let predicted = match p.prediction.rate() {
        Ok(r) => r,
        Err(e) => return fail(format!("prediction failed: {e}")),
    };
    let traj = match run_simulation(&p.run) {
        Ok(t) => t,
        Err(e) => return fail(format!("simulation failed: {e}")),
    };
    let fit = match traj.track(&p.band).map(|t| fit_growth_rate(&t)) {
        Some(Ok(f)) => f,
        Some(Err(e)) => return fail(format!("fit failed: {e}")),
        None => return fail(format!("unknown band `{}`", p.band)),
    };
    let measured = fit.rate;
    let relative_error = (measured - predicted).abs() / predicted.abs();
    let pass = relative_error <= p.tolerance;
    let mut note = format!("fit {} over [{}, {}]", fit.model.as_str(), fit.t_start, fit.t_end);
    if let Termination::BlowUp { t, .. } = traj.termination {
        note.push_str(&format!("; blow-up at t = {t}"));
    }
    CrossvalRow { label: p.label.clone(), predicted, measured, relative_error, tolerance: p.tolerance, pass, note }
}

pub const CROSSVAL_CSV_HEADER: &str = "scenario,predicted_rate,measured_rate,relative_error,tolerance,pass,note";

pub fn crossval_csv(rows: &[CrossvalRow]) -> String {
    let mut s = format!("{CROSSVAL_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{},{},\"{}\"\n",
            r.label, r.predicted, r.measured, r.relative_error, r.tolerance, r.pass, r.note
        ));
    }
    s
}

pub fn crossval(pairs: &[CrossvalPair], exec: Execution) -> (Vec<CrossvalRow>, Artifacts) {
    let rows = par::map(exec, pairs, crossval_pair);
    let failed = rows.iter().filter(|r| !r.pass).count();
    let outcome = if failed == 0 { Outcome::Completed } else { Outcome::CrossvalFailed { failed } };
    let mut a = Artifacts { files: Vec::new(), outcome };
    a.text("crossval.csv", crossval_csv(&rows));
    (rows, a)
}

/// Dispatches on the scenario kind.
pub fn run_scenario(s: &Scenario, exec: Execution) -> Result<Artifacts> {
    match &s.task {
        Task::Simulate { run, expect, mode_shape_k } => simulate(run, expect, *mode_shape_k),
        Task::EdgeSweep(spec) => edge_sweep(spec, exec),
        Task::FloorSweep(spec) => floor_sweep(spec, exec),
        Task::BoxModel(spec) => box_model(spec, exec),
        Task::Crossval { pairs } => Ok(crossval(pairs, exec).1),
    }
}

/// One line per built-in scenario: name, kind, extended flag, description.
pub fn scenario_listing() -> Result<String> {
    let mut s = String::from("name,kind,extended,description\n");
    for sc in builtin_scenarios()? {
        s.push_str(&format!("{},{},{},\"{}\"\n", sc.name, sc.task.kind(), sc.extended, sc.description));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::BandSpec;
    use crate::integrators::{gn_run, GridSpec};

    #[test]
    fn library_parses_and_names_are_unique() {
        let all = builtin_scenarios().unwrap();
        assert!(all.len() >= 20);
        for fig in ["fig2a", "fig4c", "fig5", "fig6", "fig8", "fig9", "fig10", "fig11", "fig12", "thirring"] {
            assert!(all.iter().any(|s| s.name.starts_with(fig)), "missing {fig}");
        }
        assert!(all.iter().any(|s| s.extended));
    }

    #[test]
    fn lengths_resolve() {
        let l = Lengths { base_pi: 40.0, multiples_pi: vec![640.0], offsets: vec![0.0, 1.1], range: Some([0.0, 0.2, 0.1]) };
        let v = l.resolve().unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[0] - 640.0 * PI).abs() < 1e-9);
        assert!((v[2] - (40.0 * PI + 1.1)).abs() < 1e-12);
        let r = Lengths { base_pi: 40.0, range: Some([0.0, PI, 0.1]), ..Lengths::default() };
        assert_eq!(r.resolve().unwrap().len(), 32);
        let empty = Lengths { base_pi: 40.0, range: Some([1.0, 0.0, 0.1]), ..Lengths::default() };
        assert!(empty.resolve().unwrap().is_empty());
    }

    #[test]
    fn missing_dt_is_named() {
        let text = r#"{"schema_version": 1, "name": "x", "kind": "simulate",
            "run": {"model": "gn", "scheme": "ssm2", "grid": {"length_pi": 4, "points": 64},
                    "t_max": 1.0, "initial": {"solitons": [{"omega": 0.5}]}}}"#;
        let e = ScenarioFile::parse(text).unwrap_err().to_string();
        assert!(e.contains("`dt`"), "{e}");
    }

    #[test]
    fn duplicate_names_rejected() {
        let one = r#"{"name": "a", "kind": "crossval", "pairs": []}"#;
        let text = format!(r#"{{"schema_version": 1, "scenarios": [{one}, {one}]}}"#);
        assert!(ScenarioFile::parse(&text).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn bands_outside_window_rejected() {
        let mut run = gn_run(0.5, GridSpec::pi(4.0, 64), 0.01, 1.0);
        run.bands = vec![BandSpec::absolute("far", 1e4, 1.0)];
        let s = Scenario { name: "b".into(), description: String::new(), extended: false, task: Task::Simulate { run, expect: vec![], mode_shape_k: None } };
        assert!(s.validate().is_err());
    }

    #[test]
    fn hash_tracks_config() {
        let s = find_scenario("fig4c").unwrap();
        assert_eq!(s.config_hash(), s.clone().config_hash());
        assert_ne!(s.config_hash(), s.clone().with_seed(99).config_hash());
        assert_eq!(s.config_hash().len(), 64);
    }

    #[test]
    fn empty_crossval_passes() {
        let (rows, a) = crossval(&[], Execution::Parallel);
        assert!(rows.is_empty());
        assert_eq!(a.outcome, Outcome::Completed);
        assert_eq!(std::str::from_utf8(a.get("crossval.csv").unwrap()).unwrap().trim(), CROSSVAL_CSV_HEADER);
    }

    #[test]
    fn short_simulation_writes_artifacts() {
        let mut run = gn_run(0.5, GridSpec::pi(4.0, 128), 0.01, 0.5);
        run.store_spectra = true;
        run.cadence = Some(10);
        run.bands = vec![BandSpec::kmax_fraction("edge", 0.95, 0.05)];
        let a = simulate(&run, &[], None).unwrap();
        for f in ["growth.csv", "series.csv", "final_profile.csv", "spectra.bin"] {
            assert!(a.get(f).is_some(), "{f}");
        }
        let series = std::str::from_utf8(a.get("series.csv").unwrap()).unwrap();
        assert!(series.starts_with("t,step,charge,edge\n"));
        assert_eq!(series.lines().count(), 1 + 6);
    }
}
