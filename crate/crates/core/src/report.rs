//! Experiment orchestration and the CSV/JSON output formats.
//!
//! CSV schemas (header row first, RFC 4180 quoting):
//!
//! | file                      | columns                                                     |
//! |---------------------------|-------------------------------------------------------------|
//! | `counts.csv`              | `run,i,j,class,n_plus_H,n_plus_V,n_minus_H,n_minus_V`       |
//! | `success.csv`             | `i,j,class,p_s` (mean over runs)                            |
//! | `success_runs.csv`        | `run,i,j,class,p_s`                                         |
//! | `tomo_fidelity.csv`       | `index,direction,fidelity` (direction `U_fw`, `U_bw`, ...) |
//! | `tomo_reciprocity.csv`    | `index,gadget,reciprocity`                                  |
//! | `tomo_histogram.csv`      | `series,bin_lower,bin_upper,count`                          |
//!
//! Counts are integers, or expected values with six decimals under infinite statistics.
//! Probabilities and fidelities carry nine decimals.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::discrimination::{
    enumerate_pairs, task_report, GateOrder, GateSet, IdealSource, PairClass, PairScore,
    TaskReport, BOUND_MEAN, BOUND_MIN,
};
use crate::error::{Error, Result};
use crate::su2::Ket2;
use crate::switch::{efficiency_correction, CountsRecord, EfficiencyFit, NoiseModel, SwitchSimulator};
use crate::tomography::{
    characterize, Characterization, Histogram, Series, Summary, TomographyNoise,
    HISTOGRAM_BIN_WIDTH,
};
use crate::witness::{
    build_fixed_order_process_matrix, build_switch_process_matrix, build_witness,
    ControlOutcome, ProcessMatrix,
};

/// JSON schema of `summary.json` for the `discriminate` and `witness` commands.
pub const DISCRIMINATION_SUMMARY_SCHEMA: &str =
    include_str!("../schema/discrimination-summary.schema.json");
/// JSON schema of `summary.json` for the `tomo` command.
pub const TOMOGRAPHY_SUMMARY_SCHEMA: &str =
    include_str!("../schema/tomography-summary.schema.json");

pub const DEFAULT_RUNS: u32 = 6;

fn fmt_prob(x: f64) -> String {
    format!("{x:.9}")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunScore {
    pub run: u32,
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    pub p_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationResult {
    pub records: Vec<CountsRecord>,
    pub fit: Option<EfficiencyFit>,
    pub runs: u32,
    pub per_run: Vec<RunScore>,
    /// Per-pair success averaged over runs.
    pub report: TaskReport,
    /// Uncorrected counterpart of `report`, for simulated data.
    pub raw_mean: Option<f64>,
}

/// Ideal SWITCH probabilities repeated for each run.
pub fn run_ideal_discrimination(runs: u32) -> Result<DiscriminationResult> {
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be at least 1".into()));
    }
    let report = task_report(&IdealSource::default())?;
    let per_run = (0..runs)
        .flat_map(|run| {
            report.scores.iter().map(move |s| RunScore {
                run,
                i: s.i,
                j: s.j,
                class: s.class,
                p_s: s.p_s,
            })
        })
        .collect();
    Ok(DiscriminationResult {
        records: Vec::new(),
        fit: None,
        runs,
        per_run,
        report,
        raw_mean: None,
    })
}

/// Simulates `runs` passes over the 52 pairs and applies the efficiency correction
/// fitted on all records.
pub fn run_noisy_discrimination(noise: &NoiseModel, runs: u32) -> Result<DiscriminationResult> {
    let sim = SwitchSimulator::new()?;
    let records = sim.run_protocol(noise, runs, Ket2::plus())?;
    let correction = efficiency_correction(&records)?;

    let mut per_run = Vec::with_capacity(correction.corrected.len());
    let mut raw_total = 0.0;
    for c in &correction.corrected {
        let (Some(p_s), Some(raw)) = (c.success(), c.raw_success()) else {
            return Err(Error::Consistency(format!(
                "pair ({}, {}) is not part of the task",
                c.i, c.j
            )));
        };
        raw_total += raw;
        per_run.push(RunScore {
            run: c.run,
            i: c.i,
            j: c.j,
            class: c.class,
            p_s,
        });
    }

    let scores = enumerate_pairs()
        .all()
        .into_iter()
        .map(|p| {
            let runs_for_pair: Vec<f64> = per_run
                .iter()
                .filter(|r| r.i == p.i && r.j == p.j)
                .map(|r| r.p_s)
                .collect();
            PairScore {
                i: p.i,
                j: p.j,
                class: p.class,
                p_s: runs_for_pair.iter().sum::<f64>() / runs_for_pair.len() as f64,
            }
        })
        .collect();
    let raw_mean = raw_total / per_run.len() as f64;
    Ok(DiscriminationResult {
        records,
        fit: Some(correction.fit),
        runs,
        per_run,
        report: TaskReport::from_scores(scores),
        raw_mean: Some(raw_mean),
    })
}

/// `summary.json` of the `discriminate` and `witness` commands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminationSummary {
    pub min: f64,
    pub mean: f64,
    pub bound_min: f64,
    pub bound_mean: f64,
    /// `tr[S W]`; for measured data this is the mean success probability.
    pub witness_value: f64,
    pub beats_bound_min: bool,
    pub beats_bound_mean: bool,
    pub source: String,
    pub runs: u32,
    /// Sample standard deviation of the per-run mean success probability.
    pub run_mean_std_dev: Option<f64>,
    pub raw_mean: Option<f64>,
    pub relative_efficiency: Option<f64>,
}

impl DiscriminationResult {
    pub fn run_means(&self) -> Vec<f64> {
        (0..self.runs)
            .map(|run| {
                let v: Vec<f64> = self
                    .per_run
                    .iter()
                    .filter(|r| r.run == run)
                    .map(|r| r.p_s)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    }

    pub fn summary(&self, source: &str) -> DiscriminationSummary {
        let std = (self.runs > 1).then(|| Summary::of(&self.run_means()).std_dev);
        DiscriminationSummary {
            min: self.report.min,
            mean: self.report.mean,
            bound_min: BOUND_MIN,
            bound_mean: BOUND_MEAN,
            witness_value: self.report.mean,
            beats_bound_min: self.report.beats_min_bound(),
            beats_bound_mean: self.report.beats_mean_bound(),
            source: source.to_string(),
            runs: self.runs,
            run_mean_std_dev: std,
            raw_mean: self.raw_mean,
            relative_efficiency: self.fit.map(|f| f.relative_efficiency),
        }
    }
}

/// Evaluation of the witness on the SWITCH and on the fixed-order baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub switch_value: f64,
    pub fixed_order_value: f64,
    /// Largest deviation between the SWITCH process matrix and the circuit over all
    /// 100 gate-set pairs.
    pub oracle_residual: f64,
    pub min_eigenvalue: f64,
    /// Per-pair success read off the SWITCH process matrix.
    pub report: TaskReport,
    /// Per-pair success read off the fixed-order process matrix.
    pub fixed_order_report: TaskReport,
}

fn process_report(w: &ProcessMatrix) -> Result<TaskReport> {
    let set = GateSet::new();
    let scores = enumerate_pairs()
        .all()
        .into_iter()
        .map(|p| {
            let outcome = ControlOutcome::for_class(p.class).ok_or_else(|| {
                Error::Consistency(format!("pair ({}, {}) is not part of the task", p.i, p.j))
            })?;
            Ok(PairScore {
                i: p.i,
                j: p.j,
                class: p.class,
                p_s: w.probability(&set.gates()[p.i], &set.gates()[p.j], outcome),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskReport::from_scores(scores))
}

pub fn run_witness() -> Result<WitnessReport> {
    let s = build_witness();
    let target = Ket2::plus();
    let w = build_switch_process_matrix(&target)?;
    let fixed = build_fixed_order_process_matrix(GateOrder::AThenB, &target)?;
    let set = GateSet::new();
    let pairs: Vec<_> = (0..10)
        .flat_map(|i| (0..10).map(move |j| (i, j)))
        .map(|(i, j)| (set.gates()[i], set.gates()[j]))
        .collect();
    let report = WitnessReport {
        switch_value: s.evaluate(&w),
        fixed_order_value: s.evaluate(&fixed),
        oracle_residual: w.oracle_residual(&pairs)?,
        min_eigenvalue: w.min_eigenvalue(),
        report: process_report(&w)?,
        fixed_order_report: process_report(&fixed)?,
    };
    if (report.switch_value - report.report.mean).abs() > 1e-9 {
        return Err(Error::Consistency(format!(
            "witness value {} differs from the mean success {}",
            report.switch_value, report.report.mean
        )));
    }
    Ok(report)
}

impl WitnessReport {
    pub fn summary(&self) -> DiscriminationSummary {
        DiscriminationSummary {
            min: self.report.min,
            mean: self.report.mean,
            bound_min: BOUND_MIN,
            bound_mean: BOUND_MEAN,
            witness_value: self.switch_value,
            beats_bound_min: self.report.beats_min_bound(),
            beats_bound_mean: self.switch_value > BOUND_MEAN,
            source: "switch-process-matrix".into(),
            runs: 1,
            run_mean_std_dev: None,
            raw_mean: None,
            relative_efficiency: None,
        }
    }
}

/// `summary.json` of the `tomo` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographySummary {
    pub unitaries: usize,
    pub waveplate_angle_jitter_deg: f64,
    pub shots: Option<u64>,
    pub gate_fidelity: Summary,
    pub reciprocity: Summary,
    pub u_fw: Summary,
    pub u_bw: Summary,
    pub v_fw: Summary,
    pub v_bw: Summary,
}

pub fn run_tomography(count: usize, noise: &TomographyNoise, seed: u64) -> Result<Characterization> {
    if count == 0 {
        return Err(Error::InvalidInput("need at least one unitary".into()));
    }
    characterize(count, noise, seed)
}

pub fn tomography_summary(c: &Characterization, noise: &TomographyNoise) -> TomographySummary {
    let s = |series| Summary::of(&c.series(series));
    TomographySummary {
        unitaries: c.fidelities.len() / 4,
        waveplate_angle_jitter_deg: noise.waveplate_angle_jitter_sigma.to_degrees(),
        shots: (noise.shots > 0).then_some(noise.shots),
        gate_fidelity: Summary::of(&c.all_fidelities()),
        reciprocity: Summary::of(&c.all_reciprocities()),
        u_fw: s(Series::UFw),
        u_bw: s(Series::UBw),
        v_fw: s(Series::VFw),
        v_bw: s(Series::VBw),
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn write_counts_csv<W: Write>(out: W, records: &[CountsRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "run", "i", "j", "class", "n_plus_H", "n_plus_V", "n_minus_H", "n_minus_V",
    ])?;
    for r in records {
        let cells: Vec<String> = if r.exact {
            r.expected.iter().flatten().map(|x| format!("{x:.6}")).collect()
        } else {
            r.counts.iter().flatten().map(|n| n.to_string()).collect()
        };
        let mut row = vec![
            r.run.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            r.class.label().to_string(),
        ];
        row.extend(cells);
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn write_success_csv<W: Write>(out: W, report: &TaskReport) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["i", "j", "class", "p_s"])?;
    for s in &report.scores {
        w.write_record([
            s.i.to_string(),
            s.j.to_string(),
            s.class.label().to_string(),
            fmt_prob(s.p_s),
        ])?;
    }
    finish(w)
}

pub fn write_success_runs_csv<W: Write>(out: W, rows: &[RunScore]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["run", "i", "j", "class", "p_s"])?;
    for s in rows {
        w.write_record([
            s.run.to_string(),
            s.i.to_string(),
            s.j.to_string(),
            s.class.label().to_string(),
            fmt_prob(s.p_s),
        ])?;
    }
    finish(w)
}

pub fn write_fidelity_csv<W: Write>(out: W, c: &Characterization) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "direction", "fidelity"])?;
    for r in &c.fidelities {
        w.write_record([r.index.to_string(), r.series.label().to_string(), fmt_prob(r.fidelity)])?;
    }
    finish(w)
}

pub fn write_reciprocity_csv<W: Write>(out: W, c: &Characterization) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "gadget", "reciprocity"])?;
    for r in &c.reciprocities {
        w.write_record([r.index.to_string(), r.gadget.to_string(), fmt_prob(r.reciprocity)])?;
    }
    finish(w)
}

pub fn write_histogram_csv<W: Write>(out: W, c: &Characterization) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["series", "bin_lower", "bin_upper", "count"])?;
    let mut series: Vec<(&str, Vec<f64>)> = Series::ALL
        .iter()
        .map(|s| (s.label(), c.series(*s)))
        .collect();
    series.push(("reciprocity", c.all_reciprocities()));
    for (label, values) in series {
        let h = Histogram::of(&values, HISTOGRAM_BIN_WIDTH);
        for (lower, count) in h.bins {
            w.write_record([
                label.to_string(),
                format!("{lower:.3}"),
                format!("{:.3}", lower + h.bin_width),
                count.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the CSV files of a discrimination result into `dir`.
pub fn write_discrimination(dir: &Path, result: &DiscriminationResult) -> Result<()> {
    if !result.records.is_empty() {
        write_counts_csv(std::fs::File::create(dir.join("counts.csv"))?, &result.records)?;
    }
    write_success_csv(std::fs::File::create(dir.join("success.csv"))?, &result.report)?;
    write_success_runs_csv(
        std::fs::File::create(dir.join("success_runs.csv"))?,
        &result.per_run,
    )?;
    Ok(())
}

pub fn write_tomography(dir: &Path, c: &Characterization) -> Result<()> {
    write_fidelity_csv(std::fs::File::create(dir.join("tomo_fidelity.csv"))?, c)?;
    write_reciprocity_csv(std::fs::File::create(dir.join("tomo_reciprocity.csv"))?, c)?;
    write_histogram_csv(std::fs::File::create(dir.join("tomo_histogram.csv"))?, c)?;
    Ok(())
}

/// Checks a JSON value against the subset of JSON Schema used by the shipped schemas:
/// `type`, `const`, `required`, `properties`, `additionalProperties: false` and local
/// `$ref`s into `$defs`.
pub fn check_against_schema(value: &serde_json::Value, schema: &serde_json::Value) -> Result<()> {
    check_node(value, schema, schema)
}

fn check_node(value: &serde_json::Value, schema: &serde_json::Value, root: &serde_json::Value) -> Result<()> {
    use serde_json::Value;
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let target = reference
            .strip_prefix("#/")
            .and_then(|p| p.split('/').try_fold(root, |node, key| node.get(key)))
            .ok_or_else(|| Error::Consistency(format!("unresolved reference {reference}")))?;
        return check_node(value, target, root);
    }
    let fail = |msg: String| Err(Error::Consistency(msg));
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let matches = allowed.iter().any(|t| match *t {
            "object" => value.is_object(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            "boolean" => value.is_boolean(),
            "string" => value.is_string(),
            "null" => value.is_null(),
            "array" => value.is_array(),
            _ => false,
        });
        if !matches {
            return fail(format!("{value} is not of type {ty}"));
        }
    }
    if let (Some(obj), Some(props)) = (value.as_object(), schema.get("properties").and_then(Value::as_object)) {
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
        {
            if !obj.contains_key(key) {
                return fail(format!("missing key {key}"));
            }
        }
        let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
        for (key, v) in obj {
            match props.get(key) {
                Some(sub) => check_node(v, sub, root)?,
                None if closed => return fail(format!("unexpected key {key}")),
                None => {}
            }
        }
    }
    if let Some(c) = schema.get("const") {
        if value != c {
            return fail(format!("{value} differs from the constant {c}"));
        }
    }
    Ok(())
}
