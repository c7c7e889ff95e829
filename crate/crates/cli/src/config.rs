//! Flat `key = value` benchmark configuration.
//!
//! ```text
//! # comment
//! n = 2048
//! reps = 100
//! hurst = 0.1, 0.2, 0.3
//! methods = FA, DFA, DMA, diff1, diff2
//! seed = 7
//! drift = none        # or a slope per step
//! detrend = on
//! reference = matched # or all
//! ```
//!
//! Omitted keys keep their defaults: `n = 2048`, `reps = 100`, the full
//! `0.1..0.9` grid, every method, `seed = 1`, no drift, detrending on,
//! matched reference terms.

use std::collections::HashSet;

use dsi_hurst::bench::{BenchConfig, BenchMethod};
use dsi_hurst::hsssi::Reference;

fn list<T, E: std::fmt::Display>(
    value: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn flag(value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected on/off, got `{other}`")),
    }
}

pub fn parse_bench_config(text: &str) -> Result<BenchConfig, String> {
    let mut cfg = BenchConfig::full_grid(2048, 100, 1);
    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| format!("line {}: {msg}", lineno + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key = value, got `{line}`")))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if !seen.insert(key.clone()) {
            return Err(at(format!("duplicate key `{key}`")));
        }
        let parsed: Result<(), String> = match key.as_str() {
            "n" => value
                .parse()
                .map(|v| cfg.n = v)
                .map_err(|e| format!("n: {e}")),
            "reps" => value
                .parse()
                .map(|v| cfg.reps = v)
                .map_err(|e| format!("reps: {e}")),
            "seed" => value
                .parse()
                .map(|v| cfg.seed = v)
                .map_err(|e| format!("seed: {e}")),
            "hurst" | "hurst_grid" => list(value, str::parse::<f64>).map(|v| cfg.hurst_grid = v),
            "methods" => list(value, str::parse::<BenchMethod>).map(|v| cfg.methods = v),
            "drift" => match value.to_ascii_lowercase().as_str() {
                "none" | "off" => {
                    cfg.drift = None;
                    Ok(())
                }
                v => v
                    .parse()
                    .map(|s| cfg.drift = Some(s))
                    .map_err(|e| format!("drift: {e}")),
            },
            "detrend" => flag(value).map(|v| cfg.detrend = v),
            "reference" => match value.to_ascii_lowercase().as_str() {
                "matched" => {
                    cfg.reference = Reference::Matched;
                    Ok(())
                }
                "all" => {
                    cfg.reference = Reference::AllTerms;
                    Ok(())
                }
                other => Err(format!("reference: expected matched or all, got `{other}`")),
            },
            other => Err(format!("unknown key `{other}`")),
        };
        parsed.map_err(at)?;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
