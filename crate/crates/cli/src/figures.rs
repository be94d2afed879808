//! Built-in presets that reproduce each figure's curves from its caption parameters.
//!
//! Choices the captions leave open: Fig. 1 samples Q log-spaced over [10, 200];
//! time axes end at κt = 20 (Figs. 2, 3), 1000 (Fig. 4, several 1/γ_m at Q = 100) and
//! 40 (Figs. 5, 6); Fig. 6 spans E/κ ∈ [0.01, 0.1] and averages n_P over the final
//! mechanical period with 16 samples.

use std::path::{Path, PathBuf};
use std::time::Instant;

use omx_core::engine::NoiseMode;

use crate::error::{CliError, Result};
use crate::job::{Job, Observable, Request, SweepRange, SweepVar};
use crate::manifest::write_output;
use crate::scenario::Scenario;
use crate::svg::{self, Curve};
use crate::table::Table;

/// One CSV of a figure.
#[derive(Debug, Clone)]
pub struct Preset {
    /// File stem, e.g. `fig3_delta_-1`.
    pub name: String,
    /// SVG panel the curve belongs to.
    pub panel: &'static str,
    pub label: String,
    pub request: Request,
}

/// A written curve with its data.
#[derive(Debug, Clone)]
pub struct FigCurve {
    pub preset: Preset,
    pub path: PathBuf,
    pub table: Table,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FigOptions {
    pub svg: bool,
    /// Overrides the preset resolution κ·dt.
    pub resolution: Option<f64>,
}

const E: f64 = 0.01;

fn three_modes() -> Vec<NoiseMode> {
    vec![NoiseMode::PureDrive, NoiseMode::GammaCZero, NoiseMode::full_default()]
}

fn evolve(obs: Observable, mode: NoiseMode, samples: usize) -> Job {
    Job::Evolve { observable: obs, mode, samples }
}

fn sweep(var: SweepVar, range: SweepRange, obs: Observable, modes: Vec<NoiseMode>, period_mean: usize) -> Job {
    Job::Sweep { var, range, observable: obs, modes, period_mean }
}

fn preset(name: String, panel: &'static str, label: String, scenario: Scenario, job: Job) -> Preset {
    Preset { name, panel, label, request: Request { scenario, job } }
}

/// Presets of figure `id` ∈ 1..=7.
pub fn presets(id: u8) -> Result<Vec<Preset>> {
    let full = NoiseMode::full_default();
    Ok(match id {
        1 => [1.0, 2.0]
            .iter()
            .map(|&w| {
                let range = SweepRange { lo: 10.0, hi: 200.0, n: 20, log: true };
                preset(
                    format!("fig1_omega_{w}"),
                    "fig1",
                    format!("ω_m/κ = {w}"),
                    Scenario::new(0.5, w, 100.0, 0.0, E, 10.0),
                    sweep(SweepVar::Q, range, Observable::Rm, vec![full], 0),
                )
            })
            .collect(),
        2 => [0.1, 0.5, 1.0]
            .iter()
            .map(|&g| {
                preset(
                    format!("fig2_g_{g}"),
                    "fig2",
                    format!("g/κ = {g}"),
                    Scenario::new(g, 1.0, 100.0, 0.0, E, 20.0),
                    evolve(Observable::Xc, full, 201),
                )
            })
            .collect(),
        3 => [0.0, 1.0, -1.0]
            .iter()
            .map(|&d| {
                preset(
                    format!("fig3_delta_{d}"),
                    "fig3",
                    format!("Δ₀/ω_m = {d}"),
                    Scenario::new(2.0, 1.0, 100.0, d, E, 20.0),
                    evolve(Observable::Xc, full, 201),
                )
            })
            .collect(),
        4 => [10.0, 100.0]
            .iter()
            .map(|&q| {
                preset(
                    format!("fig4_Q_{q}"),
                    "fig4",
                    format!("Q = {q}"),
                    Scenario::new(2.0, 1.0, q, 1.0, E, 1000.0),
                    evolve(Observable::Xm, full, 4001),
                )
            })
            .collect(),
        5 => {
            let mut v: Vec<Preset> = three_modes()
                .into_iter()
                .map(|m| {
                    preset(
                        format!("fig5_left_{}", m.name()),
                        "fig5_left",
                        m.name(),
                        Scenario::new(2.0, 2.0, 100.0, 1.0, E, 40.0),
                        evolve(Observable::NP, m, 81),
                    )
                })
                .collect();
            v.push(preset(
                "fig5_right".into(),
                "fig5_right",
                "n_P at κt = 40".into(),
                Scenario::new(2.0, 2.0, 100.0, 0.0, E, 40.0),
                sweep(SweepVar::Delta0OverOmega, SweepRange::linear(-2.0, 2.0, 41), Observable::NP, three_modes(), 0),
            ));
            v
        }
        6 => vec![preset(
            "fig6".into(),
            "fig6",
            "stable-phase mean".into(),
            Scenario::new(2.0, 2.0, 100.0, 0.0, E, 40.0),
            sweep(SweepVar::EOverKappa, SweepRange::linear(0.01, 0.1, 10), Observable::NP, vec![full], 16),
        )],
        7 => [0.5, 3.0]
            .iter()
            .map(|&w| {
                preset(
                    format!("fig7_omega_{w}"),
                    "fig7",
                    format!("ω_m/κ = {w}"),
                    Scenario::new(2.0, w, 100.0, 0.0, E, 10.0),
                    sweep(SweepVar::Delta0OverOmega, SweepRange::linear(-2.0, 2.0, 41), Observable::NP, vec![full], 0),
                )
            })
            .collect(),
        _ => return Err(CliError::config(format!("figure id must be 1..=7, got {id}"))),
    })
}

fn axis_labels(panel: &str) -> (&'static str, &'static str) {
    match panel {
        "fig1" => ("Q", "R_m"),
        "fig2" | "fig3" => ("κt", "X_c"),
        "fig4" => ("κt", "X_m"),
        "fig5_left" => ("κt", "n_P"),
        "fig5_right" | "fig7" => ("Δ₀/ω_m", "n_P"),
        _ => ("E/κ", "n_P"),
    }
}

/// Compute and write every curve of figure `id` into `out_dir`.
pub fn cmd_fig(id: u8, out_dir: &Path, opts: FigOptions) -> Result<Vec<FigCurve>> {
    let mut curves = Vec::new();
    for mut p in presets(id)? {
        if let Some(r) = opts.resolution {
            p.request.scenario.resolution = r;
        }
        let started = Instant::now();
        let table = p.request.run()?;
        let path = out_dir.join(format!("{}.csv", p.name));
        write_output(&p.request, &table, &path, None, started)?;
        curves.push(FigCurve { preset: p, path, table });
    }
    if opts.svg {
        let mut panels: Vec<&'static str> = curves.iter().map(|c| c.preset.panel).collect();
        panels.dedup();
        for panel in panels {
            let mut lines = Vec::new();
            for c in curves.iter().filter(|c| c.preset.panel == panel) {
                let t = &c.table;
                for k in 1..t.columns.len() {
                    let label = if t.columns.len() > 2 {
                        format!("{} {}", c.preset.label, t.columns[k])
                    } else {
                        c.preset.label.clone()
                    };
                    lines.push(Curve { label, points: t.rows.iter().map(|r| (r[0], r[k])).collect() });
                }
            }
            let (xl, yl) = axis_labels(panel);
            let text = svg::plot(panel, xl, yl, &lines, panel == "fig6");
            std::fs::write(out_dir.join(format!("{panel}.svg")), text)?;
        }
    }
    Ok(curves)
}
