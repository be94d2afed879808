//! Runnable requests: a scenario plus one command's options, evaluated to a [`Table`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use omx_core::engine::{mechanical_series, noise_ratio_rm, Evaluator, NoiseMode};
use omx_core::oracle::{evolve_and_measure, FockDims};
use omx_core::params::{SystemParams, TimeGrid};
use omx_core::C64;
use rayon::prelude::*;

use crate::cache::evaluator;
use crate::error::{CliError, Result};
use crate::scenario::Scenario;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Xc,
    NP,
    Xm,
    Pm,
    AmpRe,
    AmpIm,
    /// Both parts of ⟨â⟩ as `value_re, value_im`.
    Amp,
    /// Mechanical-noise share of the photon number.
    Rm,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Xc => "Xc",
            Observable::NP => "nP",
            Observable::Xm => "Xm",
            Observable::Pm => "Pm",
            Observable::AmpRe => "amp_re",
            Observable::AmpIm => "amp_im",
            Observable::Amp => "amp",
            Observable::Rm => "Rm",
        }
    }

    /// Whether the value depends on the noise mode.
    pub fn uses_mode(&self) -> bool {
        !matches!(self, Observable::Xm | Observable::Pm | Observable::Rm)
    }
}

impl FromStr for Observable {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Xc" => Observable::Xc,
            "nP" => Observable::NP,
            "Xm" => Observable::Xm,
            "Pm" => Observable::Pm,
            "amp_re" => Observable::AmpRe,
            "amp_im" => Observable::AmpIm,
            "amp" => Observable::Amp,
            "Rm" => Observable::Rm,
            _ => return Err(CliError::config(format!("unknown observable `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Delta0OverOmega,
    EOverKappa,
    OmegaOverKappa,
    /// ω_m/γ_m.
    Q,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Delta0OverOmega => "delta0_over_omega_m",
            SweepVar::EOverKappa => "E_over_kappa",
            SweepVar::OmegaOverKappa => "omega_m_over_kappa",
            SweepVar::Q => "Q",
        }
    }

    fn apply(&self, s: &Scenario, x: f64) -> Scenario {
        let mut s = *s;
        match self {
            SweepVar::Delta0OverOmega => s.delta0_over_omega_m = x,
            SweepVar::EOverKappa => s.e_over_kappa = x,
            SweepVar::OmegaOverKappa => s.omega_m_over_kappa = x,
            SweepVar::Q => s.q = x,
        }
        s
    }

    /// Δ₀ and E leave every kernel untouched.
    fn drive_only(&self) -> bool {
        matches!(self, SweepVar::Delta0OverOmega | SweepVar::EOverKappa)
    }
}

impl FromStr for SweepVar {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "delta0_over_omega_m" => SweepVar::Delta0OverOmega,
            "E_over_kappa" => SweepVar::EOverKappa,
            "omega_m_over_kappa" => SweepVar::OmegaOverKappa,
            "Q" => SweepVar::Q,
            _ => return Err(CliError::config(format!("unknown sweep variable `{s}`"))),
        })
    }
}

/// `lo, hi, n` with linear or logarithmic spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
}

impl SweepRange {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Self {
        SweepRange { lo, hi, n, log: false }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|k| {
                if k == 0 {
                    return self.lo;
                }
                if k + 1 == self.n {
                    return self.hi;
                }
                let f = k as f64 / (self.n - 1) as f64;
                if self.log {
                    (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + f * (self.hi - self.lo)
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(CliError::config(format!("bad range {self}")));
        }
        if self.log && !(self.lo > 0.0 && self.hi > 0.0) {
            return Err(CliError::config("log spacing needs a positive range"));
        }
        Ok(())
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.lo, self.hi, self.n)
    }
}

impl FromStr for SweepRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::config(format!("range must be `lo,hi,n`, got `{s}`"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [lo, hi, n] = parts[..] else { return Err(bad()) };
        let r = SweepRange {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            n: n.parse().map_err(|_| bad())?,
            log: false,
        };
        r.validate()?;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Evolve {
        observable: Observable,
        mode: NoiseMode,
        samples: usize,
    },
    Sweep {
        var: SweepVar,
        range: SweepRange,
        observable: Observable,
        modes: Vec<NoiseMode>,
        /// Samples per mechanical period for the final-period mean; 0 for the value at t_end.
        period_mean: usize,
    },
    Oracle {
        dims: FockDims,
        samples: usize,
    },
    Compare {
        dims: FockDims,
        mode: NoiseMode,
        samples: usize,
        /// Start of the window that counts towards the tolerance.
        from: f64,
    },
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Evolve { .. } => "evolve",
            Job::Sweep { .. } => "sweep",
            Job::Oracle { .. } => "oracle",
            Job::Compare { .. } => "compare",
        }
    }
}

/// A job bound to its scenario: everything needed to reproduce one CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub scenario: Scenario,
    pub job: Job,
}

fn modes_text(modes: &[NoiseMode]) -> String {
    modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
}

pub fn parse_modes(s: &str) -> Result<Vec<NoiseMode>> {
    let modes = s.split(',').map(|m| m.parse::<NoiseMode>().map_err(CliError::from)).collect::<Result<Vec<_>>>()?;
    if modes.is_empty() {
        return Err(CliError::config("no noise mode given"));
    }
    Ok(modes)
}

pub fn parse_dims(s: &str) -> Result<FockDims> {
    let bad = || CliError::config(format!("dims must be `CAVxMECH`, got `{s}`"));
    let (c, m) = s.split_once('x').ok_or_else(bad)?;
    let dims = FockDims { cav: c.trim().parse().map_err(|_| bad())?, mech: m.trim().parse().map_err(|_| bad())? };
    if dims.cav < 2 || dims.mech < 2 {
        return Err(CliError::config(format!("dims {s}: each factor needs at least 2 levels")));
    }
    if dims.total() > omx_core::oracle::MAX_HILBERT_DIM {
        return Err(CliError::config(format!(
            "dims {s}: Hilbert dimension {} exceeds the cap {}",
            dims.total(),
            omx_core::oracle::MAX_HILBERT_DIM
        )));
    }
    Ok(dims)
}

fn dims_text(d: FockDims) -> String {
    format!("{}x{}", d.cav, d.mech)
}

impl Request {
    /// Options as ordered `key = value` pairs; scenario keys carry a `scenario.` prefix.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = vec![("command".into(), self.job.command().into())];
        let mut push = |k: &str, val: String| v.push((k.into(), val));
        match &self.job {
            Job::Evolve { observable, mode, samples } => {
                push("observable", observable.name().into());
                push("mode", mode.name());
                push("samples", samples.to_string());
            }
            Job::Sweep { var, range, observable, modes, period_mean } => {
                push("var", var.name().into());
                push("range", range.to_string());
                push("spacing", if range.log { "log" } else { "linear" }.into());
                push("observable", observable.name().into());
                push("modes", modes_text(modes));
                push("period_mean", period_mean.to_string());
            }
            Job::Oracle { dims, samples } => {
                push("dims", dims_text(*dims));
                push("samples", samples.to_string());
            }
            Job::Compare { dims, mode, samples, from } => {
                push("dims", dims_text(*dims));
                push("mode", mode.name());
                push("samples", samples.to_string());
                push("from", from.to_string());
            }
        }
        for (k, val) in self.scenario.pairs() {
            v.push((format!("scenario.{k}"), val));
        }
        v
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let get = |k: &str| {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| CliError::config(format!("manifest lacks `{k}`")))
        };
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| CliError::config(format!("bad `{k}`"))) };
        let count = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| CliError::config(format!("bad `{k}`"))) };
        let scenario_text: String = pairs
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("scenario.").map(|k| format!("{k} = {v}\n")))
            .collect();
        let scenario = Scenario::parse(&scenario_text)?;
        let job = match get("command")? {
            "evolve" => Job::Evolve {
                observable: get("observable")?.parse()?,
                mode: get("mode")?.parse()?,
                samples: count("samples")?,
            },
            "sweep" => {
                let mut range: SweepRange = get("range")?.parse()?;
                range.log = get("spacing")? == "log";
                Job::Sweep {
                    var: get("var")?.parse()?,
                    range,
                    observable: get("observable")?.parse()?,
                    modes: parse_modes(get("modes")?)?,
                    period_mean: count("period_mean")?,
                }
            }
            "oracle" => Job::Oracle { dims: parse_dims(get("dims")?)?, samples: count("samples")? },
            "compare" => Job::Compare {
                dims: parse_dims(get("dims")?)?,
                mode: get("mode")?.parse()?,
                samples: count("samples")?,
                from: num("from")?,
            },
            other => return Err(CliError::config(format!("unknown command `{other}`"))),
        };
        Ok(Request { scenario, job })
    }

    pub fn run(&self) -> Result<Table> {
        let s = &self.scenario;
        match &self.job {
            Job::Evolve { observable, mode, samples } => evolve(s, *observable, *mode, *samples),
            Job::Sweep { var, range, observable, modes, period_mean } => {
                range.validate()?;
                sweep(s, *var, &range.values(), *observable, modes, *period_mean)
            }
            Job::Oracle { dims, samples } => oracle(s, *dims, *samples),
            Job::Compare { dims, mode, samples, from } => Ok(compare(s, *dims, *mode, *samples, *from)?.0),
        }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(CliError::config(format!("need at least 2 samples, got {samples}")));
    }
    Ok(())
}

/// Grid whose step count is a multiple of `samples − 1`, so that samples fall on nodes.
fn aligned_grid(s: &Scenario, samples: usize) -> Result<TimeGrid> {
    let base = s.grid()?.n_steps;
    let per = base.div_ceil(samples - 1);
    let steps = per * (samples - 1);
    if steps + 1 > omx_core::params::DEFAULT_MAX_NODES {
        return Err(CliError::config(format!("{} samples need {} grid nodes, above the cap", samples, steps + 1)));
    }
    Ok(TimeGrid::with_steps(s.t_end_kappa, steps)?)
}

fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|k| if k + 1 == samples { t_end } else { t_end * k as f64 / (samples - 1) as f64 }).collect()
}

fn point_value(ev: &mut Evaluator, obs: Observable, mode: NoiseMode) -> Result<f64> {
    Ok(match obs {
        Observable::Xc => SQRT_2 * ev.amplitude(mode)?.re,
        Observable::AmpRe => ev.amplitude(mode)?.re,
        Observable::AmpIm => ev.amplitude(mode)?.im,
        Observable::NP => ev.photon_number(mode)?,
        other => return Err(CliError::config(format!("{} is not a cavity observable", other.name()))),
    })
}

fn grid_at(s: &Scenario, t: f64) -> Result<TimeGrid> {
    Ok(omx_core::params::build_grid(1.0, t, s.resolution)?)
}

fn evolve(s: &Scenario, obs: Observable, mode: NoiseMode, samples: usize) -> Result<Table> {
    check_samples(samples)?;
    let p = s.params()?;
    match obs {
        Observable::Xm | Observable::Pm => {
            let grid = aligned_grid(s, samples)?;
            let series = mechanical_series(&p, &grid);
            let stride = grid.n_steps / (samples - 1);
            let mut t = Table::new(&["kappa_t", "value"]);
            for k in 0..samples {
                let (x, pm) = series[k * stride];
                t.rows.push(vec![grid.nodes[k * stride], if obs == Observable::Xm { x } else { pm }]);
            }
            Ok(t)
        }
        Observable::Rm => {
            let times = sample_times(s.t_end_kappa, samples);
            let vals: Vec<f64> = times
                .par_iter()
                .map(|&t| if t == 0.0 { Ok(0.0) } else { Ok(noise_ratio_rm(&p, t, s.resolution)?) })
                .collect::<Result<_>>()?;
            let mut table = Table::new(&["kappa_t", "value"]);
            table.rows = times.iter().zip(vals).map(|(&t, v)| vec![t, v]).collect();
            Ok(table)
        }
        Observable::Amp => {
            let times = sample_times(s.t_end_kappa, samples);
            let vals: Vec<C64> = times
                .par_iter()
                .map(|&t| if t == 0.0 { Ok(C64::new(0.0, 0.0)) } else { Ok(evaluator(&p, &grid_at(s, t)?)?.amplitude(mode)?) })
                .collect::<Result<_>>()?;
            let mut table = Table::new(&["kappa_t", "value_re", "value_im"]);
            table.rows = times.iter().zip(vals).map(|(&t, z)| vec![t, z.re, z.im]).collect();
            Ok(table)
        }
        _ => {
            let times = sample_times(s.t_end_kappa, samples);
            let vals: Vec<f64> = times
                .par_iter()
                .map(|&t| if t == 0.0 { Ok(0.0) } else { point_value(&mut evaluator(&p, &grid_at(s, t)?)?, obs, mode) })
                .collect::<Result<_>>()?;
            let mut table = Table::new(&["kappa_t", "value"]);
            table.rows = times.iter().zip(vals).map(|(&t, v)| vec![t, v]).collect();
            Ok(table)
        }
    }
}

/// Times entering one sweep value: t_end, or `m` evenly spaced points of the last mechanical period.
fn window_times(s: &Scenario, m: usize) -> Vec<f64> {
    if m == 0 {
        return vec![s.t_end_kappa];
    }
    let period = 2.0 * PI / s.omega_m_over_kappa;
    (1..=m).map(|j| s.t_end_kappa - period + period * j as f64 / m as f64).collect()
}

fn sweep(
    s: &Scenario,
    var: SweepVar,
    xs: &[f64],
    obs: Observable,
    modes: &[NoiseMode],
    period_mean: usize,
) -> Result<Table> {
    if obs == Observable::Amp {
        return Err(CliError::config("sweep takes amp_re or amp_im, not amp"));
    }
    let modes: Vec<NoiseMode> = if obs.uses_mode() { modes.to_vec() } else { vec![NoiseMode::PureDrive] };
    let mut columns = vec!["sweep_value".to_string()];
    if obs.uses_mode() {
        columns.extend(modes.iter().map(|m| format!("{}_{}", obs.name(), m.name())));
    } else {
        columns.push(obs.name().into());
    }
    let times = window_times(s, period_mean);
    if times[0] <= 0.0 {
        return Err(CliError::config("the averaging period reaches back before t = 0"));
    }
    // sums[mode][point]
    let mut sums = vec![vec![0.0; xs.len()]; modes.len()];
    if var.drive_only() && obs.uses_mode() {
        for &t in &times {
            let p = s.params()?;
            let base = evaluator(&p, &grid_at(s, t)?)?;
            for (mi, &mode) in modes.iter().enumerate() {
                let vals: Vec<f64> = xs
                    .par_iter()
                    .map_init(
                        || base.clone(),
                        |ev, &x| {
                            let q = var.apply(s, x).params()?;
                            ev.set_drive(q.delta0, q.drive_e);
                            point_value(ev, obs, mode)
                        },
                    )
                    .collect::<Result<_>>()?;
                for (acc, v) in sums[mi].iter_mut().zip(vals) {
                    *acc += v;
                }
            }
        }
    } else {
        let per_point: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| {
                let sc = var.apply(s, x);
                let p = sc.params()?;
                let mut out = vec![0.0; modes.len()];
                for &t in &window_times(&sc, period_mean) {
                    if t <= 0.0 {
                        return Err(CliError::config("the averaging period reaches back before t = 0"));
                    }
                    match obs {
                        Observable::Rm => out[0] += noise_ratio_rm(&p, t, sc.resolution)?,
                        Observable::Xm | Observable::Pm => {
                            let (xm, pm) = omx_core::engine::mechanical_quadratures(&p, t, sc.resolution)?;
                            out[0] += if obs == Observable::Xm { xm } else { pm };
                        }
                        _ => {
                            let mut ev = evaluator(&p, &grid_at(&sc, t)?)?;
                            for (o, &mode) in out.iter_mut().zip(&modes) {
                                *o += point_value(&mut ev, obs, mode)?;
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (k, row) in per_point.into_iter().enumerate() {
            for (mi, v) in row.into_iter().enumerate() {
                sums[mi][k] = v;
            }
        }
    }
    let norm = times.len() as f64;
    let mut table = Table { columns, rows: Vec::with_capacity(xs.len()) };
    for (k, &x) in xs.iter().enumerate() {
        let mut row = vec![x];
        row.extend(sums.iter().map(|col| col[k] / norm));
        table.rows.push(row);
    }
    Ok(table)
}

fn oracle_run(s: &Scenario, dims: FockDims, samples: usize) -> Result<(SystemParams, TimeGrid, usize, omx_core::oracle::OracleRun)> {
    check_samples(samples)?;
    let p = s.params()?;
    let grid = aligned_grid(s, samples)?;
    let stride = grid.n_steps / (samples - 1);
    let run = evolve_and_measure(&p, dims, &grid)?;
    Ok((p, grid, stride, run))
}

fn oracle(s: &Scenario, dims: FockDims, samples: usize) -> Result<Table> {
    let (_, grid, stride, run) = oracle_run(s, dims, samples)?;
    let (xc, np, xm, pm) = (run.x_c.real(), run.n_p.real(), run.x_m.real(), run.p_m.real());
    let amp = match &run.amplitude.values {
        omx_core::engine::SeriesValues::Complex(v) => v.clone(),
        omx_core::engine::SeriesValues::Real(v) => v.iter().map(|&x| C64::new(x, 0.0)).collect(),
    };
    let mut t = Table::new(&["kappa_t", "Xc", "nP", "Xm", "Pm", "amp_re", "amp_im"]);
    for k in (0..grid.len()).step_by(stride) {
        t.rows.push(vec![grid.nodes[k], xc[k], np[k], xm[k], pm[k], amp[k].re, amp[k].im]);
    }
    Ok(t)
}

fn rel_dev(engine: f64, oracle: f64) -> f64 {
    let d = (engine - oracle).abs();
    if d == 0.0 {
        0.0
    } else {
        d / oracle.abs()
    }
}

/// Engine against oracle on the sample times; also returns the largest deviation at κt ≥ `from`.
pub fn compare(s: &Scenario, dims: FockDims, mode: NoiseMode, samples: usize, from: f64) -> Result<(Table, f64)> {
    let (p, grid, stride, run) = oracle_run(s, dims, samples)?;
    let (xo, no) = (run.x_c.real(), run.n_p.real());
    let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
    let engine: Vec<(f64, f64)> = idx
        .par_iter()
        .map(|&k| {
            let t = grid.nodes[k];
            if t == 0.0 {
                return Ok((0.0, 0.0));
            }
            let mut ev = evaluator(&p, &grid_at(s, t)?)?;
            Ok((SQRT_2 * ev.amplitude(mode)?.re, ev.photon_number(mode)?))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["kappa_t", "Xc_engine", "Xc_oracle", "Xc_rel_dev", "nP_engine", "nP_oracle", "nP_rel_dev"]);
    let mut worst: f64 = 0.0;
    for (&k, &(xe, ne)) in idx.iter().zip(&engine) {
        let (dx, dn) = (rel_dev(xe, xo[k]), rel_dev(ne, no[k]));
        if grid.nodes[k] >= from {
            worst = worst.max(dx).max(dn);
        }
        t.rows.push(vec![grid.nodes[k], xe, xo[k], dx, ne, no[k], dn]);
    }
    Ok((t, worst))
}
