//! Command layer over `omx-core`: scenario files, evolve/sweep/oracle/compare runs,
//! figure presets, CSV with embedded run manifests, and minimal SVG plots.

pub mod cache;
mod error;
pub mod figures;
pub mod job;
pub mod manifest;
pub mod scenario;
pub mod svg;
pub mod table;

use std::path::Path;
use std::time::Instant;

use omx_core::engine::NoiseMode;
use omx_core::oracle::FockDims;

pub use error::{CliError, Result};
pub use figures::{cmd_fig, FigCurve, FigOptions};
pub use job::{Job, Observable, Request, SweepRange, SweepVar};
pub use manifest::RunManifest;
pub use scenario::{Bath, Scenario};
pub use table::Table;

/// Where and how to write a command's result.
#[derive(Debug, Clone, Copy)]
pub struct Sink<'a> {
    pub out: &'a Path,
    pub scenario_path: Option<&'a Path>,
    pub svg: bool,
}

/// Run `req` and write its CSV, sidecar manifest and optional SVG.
pub fn execute(req: &Request, sink: Sink) -> Result<(Table, RunManifest)> {
    let started = Instant::now();
    let table = req.run()?;
    let m = manifest::write_output(req, &table, sink.out, sink.scenario_path, started)?;
    if sink.svg {
        write_svg(req, &table, sink.out)?;
    }
    Ok((table, m))
}

fn write_svg(req: &Request, table: &Table, out: &Path) -> Result<()> {
    let curves: Vec<svg::Curve> = (1..table.columns.len())
        .map(|k| svg::Curve { label: table.columns[k].clone(), points: table.rows.iter().map(|r| (r[0], r[k])).collect() })
        .collect();
    let text = svg::plot(req.job.command(), &table.columns[0], "", &curves, false);
    let mut path = out.as_os_str().to_owned();
    path.push(".svg");
    std::fs::write(path, text)?;
    Ok(())
}

pub fn cmd_evolve(scenario: &Scenario, observable: Observable, mode: NoiseMode, samples: usize, sink: Sink) -> Result<Table> {
    let req = Request { scenario: *scenario, job: Job::Evolve { observable, mode, samples } };
    Ok(execute(&req, sink)?.0)
}

pub fn cmd_sweep(
    scenario: &Scenario,
    var: SweepVar,
    range: SweepRange,
    observable: Observable,
    modes: Vec<NoiseMode>,
    period_mean: usize,
    sink: Sink,
) -> Result<Table> {
    let req = Request { scenario: *scenario, job: Job::Sweep { var, range, observable, modes, period_mean } };
    Ok(execute(&req, sink)?.0)
}

/// Oracle dims: the given ones or the coupling-based heuristic.
pub fn resolve_dims(scenario: &Scenario, dims: Option<FockDims>) -> Result<FockDims> {
    match dims {
        Some(d) => Ok(d),
        None => {
            let d = FockDims::heuristic(&scenario.params()?);
            job::parse_dims(&format!("{}x{}", d.cav, d.mech))
        }
    }
}

pub fn cmd_oracle(scenario: &Scenario, dims: Option<FockDims>, samples: usize, sink: Sink) -> Result<Table> {
    let req = Request { scenario: *scenario, job: Job::Oracle { dims: resolve_dims(scenario, dims)?, samples } };
    Ok(execute(&req, sink)?.0)
}

/// Engine-vs-oracle deviations; fails with exit code 4 above `tolerance`.
pub fn cmd_compare(
    scenario: &Scenario,
    dims: Option<FockDims>,
    mode: NoiseMode,
    samples: usize,
    from: Option<f64>,
    tolerance: Option<f64>,
    sink: Sink,
) -> Result<(Table, f64)> {
    let from = from.unwrap_or(0.5 * scenario.t_end_kappa);
    let dims = resolve_dims(scenario, dims)?;
    let req = Request { scenario: *scenario, job: Job::Compare { dims, mode, samples, from } };
    let started = Instant::now();
    let (table, worst) = job::compare(scenario, dims, mode, samples, from)?;
    manifest::write_output(&req, &table, sink.out, sink.scenario_path, started)?;
    if sink.svg {
        write_svg(&req, &table, sink.out)?;
    }
    if let Some(tol) = tolerance {
        if worst > tol {
            return Err(CliError::Tolerance { max_deviation: worst, tolerance: tol });
        }
    }
    Ok((table, worst))
}

/// Regenerate a CSV from its own header into `out`.
pub fn cmd_rerun(csv: &Path, out: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(csv)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", csv.display())))?;
    let (id, pairs, _) = manifest::parse_csv(&text)?;
    let req = Request::from_pairs(&pairs)?;
    if manifest::run_id(&req) != id {
        return Err(CliError::config(format!("embedded run id {id} does not match its request")));
    }
    Ok(execute(&req, Sink { out, scenario_path: None, svg: false })?.1)
}
