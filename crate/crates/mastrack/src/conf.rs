//! `key=value` configuration files.

use std::fmt::Write as _;
use std::path::Path;

use mastrack_core::PipelineConfig;

use crate::error::{Error, Result};

/// Splits one line into `(key, value)`, or `None` for blanks and comments.
pub fn split_line(line: &str) -> Option<std::result::Result<(&str, &str), String>> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return None;
    }
    Some(match body.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
        _ => Err(format!("expected `key=value`, found `{body}`")),
    })
}

/// Parses config text on top of `cfg`. `origin` names the source in errors.
pub fn apply_text(cfg: &mut PipelineConfig, text: &str, origin: &Path) -> Result<()> {
    for (n, line) in text.lines().enumerate() {
        let line_no = n as u64 + 1;
        match split_line(line) {
            None => {}
            Some(Err(msg)) => return Err(Error::parse(origin, line_no, msg)),
            Some(Ok((k, v))) => cfg
                .set(k, v)
                .map_err(|e| Error::parse(origin, line_no, e.to_string()))?,
        }
    }
    Ok(())
}

/// Defaults, then the file (if any), then `overrides` in order; the result is
/// validated.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        apply_text(&mut cfg, &text, p)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)
            .map_err(|e| Error::Invalid(format!("--set {k}={v}: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_text(cfg: &PipelineConfig) -> String {
    let mut s = String::new();
    for (k, v) in cfg.entries() {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Parses a `--set key=value` argument.
pub fn parse_override(arg: &str) -> std::result::Result<(String, String), String> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected key=value, got `{arg}`")),
    }
}
