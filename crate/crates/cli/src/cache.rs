//! Θ/Θ′ reuse across processes through `OMX_CACHE_DIR`.
//!
//! Θ′ is the only O(N²) kernel that is not a closed-form matrix fill, and it depends on
//! κ, γ_m, ω_m and the grid alone, so sweeps over Δ₀ or E and repeated figure runs share it.

use std::fs;
use std::path::{Path, PathBuf};

use omx_core::correlators::{theta_prime_series, theta_series, KernelCache, MAX_DENSE_NODES};
use omx_core::engine::Evaluator;
use omx_core::params::{SystemParams, TimeGrid};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const CACHE_ENV: &str = "OMX_CACHE_DIR";

fn key(p: &SystemParams, grid: &TimeGrid) -> String {
    let mut h = Sha256::new();
    h.update(b"phases-v1");
    for x in [p.kappa, p.gamma_m, p.omega_m, grid.t_end] {
        h.update(x.to_le_bytes());
    }
    h.update((grid.n_steps as u64).to_le_bytes());
    let d = h.finalize();
    d[..12].iter().map(|b| format!("{b:02x}")).collect()
}

fn load(path: &Path, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let bytes = fs::read(path).ok()?;
    if bytes.len() != 16 * n {
        return None;
    }
    let all: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let (a, b) = all.split_at(n);
    Some((a.to_vec(), b.to_vec()))
}

fn store(path: &Path, theta: &[f64], theta_prime: &[f64]) {
    let mut bytes = Vec::with_capacity(8 * (theta.len() + theta_prime.len()));
    for x in theta.iter().chain(theta_prime) {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    // write-then-rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    if fs::write(&tmp, bytes).is_ok() {
        let _ = fs::rename(&tmp, path);
    }
}

fn cache_path(p: &SystemParams, grid: &TimeGrid) -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os(CACHE_ENV)?);
    fs::create_dir_all(&dir).ok()?;
    Some(dir.join(format!("phases-{}.bin", key(p, grid))))
}

/// [`KernelCache::build`], reading and filling the disk cache when it is configured.
pub fn kernel_cache(p: &SystemParams, grid: &TimeGrid) -> Result<KernelCache> {
    let Some(path) = cache_path(p, grid) else {
        return Ok(KernelCache::build(p, grid)?);
    };
    let n = grid.len();
    if n > MAX_DENSE_NODES {
        return Ok(KernelCache::build(p, grid)?);
    }
    let (theta, theta_prime) = match load(&path, n) {
        Some(v) => v,
        None => {
            let v = (theta_series(grid, p), theta_prime_series(grid, p));
            store(&path, &v.0, &v.1);
            v
        }
    };
    Ok(KernelCache::with_phases(p, grid, theta, theta_prime)?)
}

pub fn evaluator(p: &SystemParams, grid: &TimeGrid) -> Result<Evaluator> {
    Ok(Evaluator::from_cache(kernel_cache(p, grid)?))
}
