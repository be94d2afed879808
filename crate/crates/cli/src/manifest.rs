//! Run manifests: a `#`-prefixed header in every CSV plus a `<out>.manifest` sidecar.
//!
//! The header holds the full request, so a CSV can be regenerated from itself. Wall-clock
//! time and output paths are not reproducible and live only in the sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::job::Request;
use crate::table::Table;

pub const OMX_VERSION: &str = env!("CARGO_PKG_VERSION");

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

fn version_pairs() -> Vec<(String, String)> {
    let core = format!("omx-core {}", omx_core::VERSION);
    vec![
        ("version".into(), format!("omx {OMX_VERSION}")),
        ("engine".into(), core.clone()),
        ("oracle".into(), core),
    ]
}

/// Everything recorded about one output file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: String,
    pub request: Request,
    pub scenario_path: Option<PathBuf>,
    pub output: PathBuf,
    pub output_sha256: String,
    pub body_sha256: String,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run_id = {}", self.run_id);
        for (k, v) in version_pairs().into_iter().chain(self.request.pairs()) {
            let _ = writeln!(s, "{k} = {v}");
        }
        let path = self.scenario_path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "preset".into());
        let _ = writeln!(s, "scenario_path = {path}");
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "output_sha256 = {}", self.output_sha256);
        let _ = writeln!(s, "body_sha256 = {}", self.body_sha256);
        let _ = writeln!(s, "wall_clock_s = {:.3}", self.wall_clock_s);
        s
    }
}

/// Deterministic id: a hash of the version tags and the request.
pub fn run_id(req: &Request) -> String {
    let mut text = String::new();
    for (k, v) in version_pairs().into_iter().chain(req.pairs()) {
        let _ = writeln!(text, "{k} = {v}");
    }
    sha256_hex(text.as_bytes())[..16].to_string()
}

fn grid_note(req: &Request) -> String {
    match req.scenario.grid() {
        Ok(g) => format!("n_steps {}, dt {}", g.n_steps, g.dt),
        Err(_) => "invalid".into(),
    }
}

/// CSV text: manifest header, then the table.
pub fn render_csv(req: &Request, table: &Table) -> String {
    let body = table.body();
    let mut s = format!("# omx run {}\n", run_id(req));
    for (k, v) in version_pairs().into_iter().chain(req.pairs()) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "# grid = {}", grid_note(req));
    let _ = writeln!(s, "# body_sha256 = {}", sha256_hex(body.as_bytes()));
    s.push_str(&body);
    s
}

/// Header pairs and table of a CSV written by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<(String, Vec<(String, String)>, Table)> {
    let mut id = None;
    let mut pairs = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let line = line.trim_start_matches('#').trim();
        if let Some(rest) = line.strip_prefix("omx run ") {
            id = Some(rest.trim().to_string());
        } else if let Some((k, v)) = line.split_once(" = ") {
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let id = id.ok_or_else(|| CliError::config("CSV has no `# omx run` header"))?;
    let table = Table::parse_body(text).ok_or_else(|| CliError::config("malformed CSV body"))?;
    Ok((id, pairs, table))
}

/// Rebuild the request embedded in a CSV, rerun it and return the new CSV text.
pub fn regenerate(csv: &str) -> Result<(Request, String)> {
    let (id, pairs, _) = parse_csv(csv)?;
    let req = Request::from_pairs(&pairs)?;
    if run_id(&req) != id {
        return Err(CliError::config(format!("embedded run id {id} does not match its request")));
    }
    let table = req.run()?;
    let text = render_csv(&req, &table);
    Ok((req, text))
}

/// Write the CSV and its sidecar manifest.
pub fn write_output(
    req: &Request,
    table: &Table,
    out: &Path,
    scenario_path: Option<&Path>,
    started: Instant,
) -> Result<RunManifest> {
    let text = render_csv(req, table);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, &text)?;
    let m = RunManifest {
        run_id: run_id(req),
        request: req.clone(),
        scenario_path: scenario_path.map(Path::to_path_buf),
        output: out.to_path_buf(),
        output_sha256: sha256_hex(text.as_bytes()),
        body_sha256: sha256_hex(table.body().as_bytes()),
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    std::fs::write(RunManifest::sidecar_path(out), m.to_text())?;
    Ok(m)
}
