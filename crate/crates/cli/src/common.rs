//! Shared plumbing: grid parsing, float formatting, output resolution and
//! the run manifest echoed into every output file.

use anyhow::{bail, Context, Result};
use std::path::{Path, PathBuf};
use telemesh_core::{ClusterParams, InputParams, NoiseKind};

pub const OUT_DIR_ENV: &str = "TELEMESH_OUT_DIR";

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Locale-independent formatting with 12 significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

/// Resolve an output path: explicit flag wins, then the output-directory
/// environment variable, then the current directory.
pub fn resolve_output(explicit: Option<&Path>, default_name: &str) -> PathBuf {
    if let Some(path) = explicit {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => PathBuf::from(default_name),
    }
}

/// Parse a float grid: a single value, a comma list, or `start..end:step`.
pub fn parse_f64_grid(text: &str) -> Result<Vec<f64>> {
    if let Some((range, step)) = split_range(text)? {
        let (start, end) = range;
        let step: f64 = step
            .ok_or_else(|| anyhow::anyhow!("float range `{text}` needs an explicit :step"))?;
        if !(step > 0.0) {
            bail!("step must be positive in `{text}`");
        }
        if end < start {
            bail!("empty range `{text}`");
        }
        let count = ((end - start) / step).round() as usize;
        let mut values: Vec<f64> = (0..=count).map(|k| start + k as f64 * step).collect();
        values.retain(|v| *v <= end + step * 1e-9);
        if values.is_empty() {
            bail!("empty range `{text}`");
        }
        return Ok(values);
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("bad float `{part}`"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("empty grid `{text}`");
    }
    Ok(values)
}

/// Parse an integer grid: a single value, a comma list, or `start..end[:step]`.
pub fn parse_u32_grid(text: &str) -> Result<Vec<u32>> {
    if let Some(((start, end), step)) = split_range(text)? {
        let step = step.unwrap_or(1.0);
        if step.fract() != 0.0 || step < 1.0 {
            bail!("integer range `{text}` needs a whole positive step");
        }
        let (start, end, step) = (start as u32, end as u32, step as u32);
        if end < start {
            bail!("empty range `{text}`");
        }
        return Ok((start..=end).step_by(step as usize).collect());
    }
    let values: Vec<u32> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<u32>()
                .with_context(|| format!("bad integer `{part}`"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("empty grid `{text}`");
    }
    Ok(values)
}

#[allow(clippy::type_complexity)]
fn split_range(text: &str) -> Result<Option<((f64, f64), Option<f64>)>> {
    let Some((start, rest)) = text.split_once("..") else {
        return Ok(None);
    };
    let (end, step) = match rest.split_once(':') {
        Some((end, step)) => (
            end,
            Some(
                step.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad step in `{text}`"))?,
            ),
        ),
        None => (rest, None),
    };
    let start: f64 = start
        .trim()
        .parse()
        .with_context(|| format!("bad range start in `{text}`"))?;
    let end: f64 = end
        .trim()
        .parse()
        .with_context(|| format!("bad range end in `{text}`"))?;
    Ok(Some(((start, end), step)))
}

/// Parse `t0,t1,t2,t3` into cluster coefficients and require normalization.
pub fn parse_tau(text: &str) -> Result<ClusterParams> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coefficient `{p}`"))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 4 {
        bail!("expected four cluster coefficients, got {}", parts.len());
    }
    let cluster = ClusterParams::new([parts[0], parts[1], parts[2], parts[3]])
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    if !cluster.is_normalized(1e-8) {
        bail!(
            "cluster coefficients must be normalized (sum of squares is {})",
            cluster.norm_sqr()
        );
    }
    Ok(cluster)
}

pub fn make_input(a0: f64, d0: f64) -> Result<InputParams> {
    let input = InputParams::from_real(a0, d0).map_err(|e| anyhow::anyhow!("{e}"))?;
    if !input.is_normalized(1e-8) {
        bail!(
            "input amplitudes must be normalized (|a0|² + |d0|² is {})",
            input.weight()
        );
    }
    Ok(input)
}

pub fn make_noise(channel: &str, xi: f64) -> Result<NoiseKind> {
    match channel {
        "amp" => NoiseKind::amplitude_damping(xi).map_err(|e| anyhow::anyhow!("{e}")),
        "phase" => NoiseKind::phase_damping(xi).map_err(|e| anyhow::anyhow!("{e}")),
        other => bail!("unknown channel `{other}` (expected amp or phase)"),
    }
}

/// Comment block recording how an output file was produced.
pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            lines: vec![
                format!("tool: telemesh {}", tool_version()),
                format!("cmd: {command}"),
            ],
        }
    }

    pub fn field(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.lines.push(format!("{key}={value}"));
        self
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|l| format!("# {l}\n"))
            .collect::<String>()
    }
}
