use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omx::job::{parse_dims, parse_modes};
use omx::{CliError, FigOptions, Observable, Result, Scenario, Sink, SweepRange, SweepVar};
use omx_core::engine::NoiseMode;

#[derive(Parser)]
#[command(name = "omx", version, about = "Driven optomechanics beyond linearization: closed forms, Lindblad oracle, figure presets")]
struct Cli {
    /// Worker threads; 1 gives the deterministic CI mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's κ·dt.
    #[arg(long)]
    resolution: Option<f64>,
    /// Also write a minimal SVG plot next to the CSV.
    #[arg(long)]
    svg: bool,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::load(&self.scenario)?;
        if let Some(r) = self.resolution {
            if !(r > 0.0) {
                return Err(CliError::config(format!("resolution must be > 0, got {r}")));
            }
            s.resolution = r;
        }
        Ok(s)
    }

    fn sink(&self) -> Sink<'_> {
        Sink { out: &self.out, scenario_path: Some(&self.scenario), svg: self.svg }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Observable against κt.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Xc, nP, Xm, Pm, amp_re, amp_im, amp or Rm.
        #[arg(long, default_value = "Xc")]
        observable: String,
        /// pure_drive, gamma_c_zero, full, full:K or resummed.
        #[arg(long, default_value = "full")]
        mode: String,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Observable against one scenario variable at t_end.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// delta0_over_omega_m, E_over_kappa, omega_m_over_kappa or Q.
        #[arg(long)]
        var: String,
        /// lo,hi,n
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Logarithmic spacing.
        #[arg(long)]
        log: bool,
        #[arg(long, default_value = "nP")]
        observable: String,
        /// Comma-separated noise modes.
        #[arg(long, alias = "modes", default_value = "full")]
        mode: String,
        /// Average over the final mechanical period with this many samples.
        #[arg(long, default_value_t = 0)]
        period_mean: usize,
    },
    /// Lindblad reference run.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// CAVxMECH, default from the coupling heuristic.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Engine against oracle, per-time relative deviation.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value = "full")]
        mode: String,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        /// Start of the checked window, default t_end/2.
        #[arg(long)]
        from: Option<f64>,
        /// Exit with code 4 when the deviation in the window exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Reproduce a figure's curves from built-in caption presets.
    Fig {
        /// 1 to 7.
        id: u8,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Regenerate a CSV from its embedded manifest.
    Rerun {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn mode(s: &str) -> Result<NoiseMode> {
    Ok(s.parse::<NoiseMode>()?)
}

fn dims(s: &Option<String>) -> Result<Option<omx_core::oracle::FockDims>> {
    s.as_deref().map(parse_dims).transpose()
}

fn report(out: &Path) {
    eprintln!("wrote {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    match cli.cmd {
        Cmd::Evolve { common, observable, mode: m, samples } => {
            let s = common.scenario()?;
            for w in omx_core::engine::regime_warnings(&s.params()?) {
                eprintln!("warning: {w}");
            }
            omx::cmd_evolve(&s, observable.parse::<Observable>()?, mode(&m)?, samples, common.sink())?;
            report(&common.out);
        }
        Cmd::Sweep { common, var, range, log, observable, mode: m, period_mean } => {
            let s = common.scenario()?;
            let mut range: SweepRange = range.parse()?;
            range.log = log;
            let var: SweepVar = var.parse()?;
            omx::cmd_sweep(&s, var, range, observable.parse()?, parse_modes(&m)?, period_mean, common.sink())?;
            report(&common.out);
        }
        Cmd::Oracle { common, dims: d, samples } => {
            let s = common.scenario()?;
            omx::cmd_oracle(&s, dims(&d)?, samples, common.sink())?;
            report(&common.out);
        }
        Cmd::Compare { common, dims: d, mode: m, samples, from, tolerance } => {
            let s = common.scenario()?;
            match omx::cmd_compare(&s, dims(&d)?, mode(&m)?, samples, from, tolerance, common.sink()) {
                Ok((_, worst)) => {
                    report(&common.out);
                    eprintln!("max relative deviation {worst:.3e}");
                }
                Err(e @ CliError::Tolerance { .. }) => {
                    report(&common.out);
                    return Err(e);
                }
                Err(e) => return Err(e),
            }
        }
        Cmd::Fig { id, out, svg, resolution } => {
            for c in omx::cmd_fig(id, &out, FigOptions { svg, resolution })? {
                report(&c.path);
            }
        }
        Cmd::Rerun { csv, out } => {
            omx::cmd_rerun(&csv, &out)?;
            report(&out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
