//! JSON report records. Every record carries `schema_version`.

use serde::Serialize;
use usspeckle_core::{FilterMode, ObnlmParams, SmpiReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Slice2d,
    Full3d,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub block_radius: usize,
    pub search_radius: usize,
    pub block_step: usize,
    pub h: f64,
    pub gamma: f64,
    pub eps: f64,
    pub mode: ModeName,
}

impl From<&ObnlmParams> for ParamsReport {
    fn from(p: &ObnlmParams) -> Self {
        Self {
            block_radius: p.block_radius,
            search_radius: p.search_radius,
            block_step: p.block_step,
            h: p.h,
            gamma: p.gamma,
            eps: p.eps,
            mode: match p.mode {
                FilterMode::Slice2d => ModeName::Slice2d,
                FilterMode::Full3d => ModeName::Full3d,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmpiFields {
    pub mu_o: f64,
    pub mu_r: f64,
    pub var_o: f64,
    pub var_r: f64,
    pub q: f64,
    pub smpi: f64,
}

impl From<SmpiReport> for SmpiFields {
    fn from(r: SmpiReport) -> Self {
        Self {
            mu_o: r.mu_o,
            mu_r: r.mu_r,
            var_o: r.var_o,
            var_r: r.var_r,
            q: r.q,
            smpi: r.smpi,
        }
    }
}

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

/// Writes `record` as one compact JSON line on stdout.
pub fn emit<T: Serialize>(record: &T) -> Result<(), serde_json::Error> {
    println!("{}", serde_json::to_string(record)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_summary() {
        let s = Summary::of(&[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.count, 3);
        assert!((s.mean - 7.0 / 3.0).abs() < 1e-15);
        // ((4/3)^2 + (1/3)^2 + (5/3)^2) / 3 = 42/27
        assert!((s.std - (42.0f64 / 27.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[]), None);
    }

    #[test]
    fn params_are_snake_case() {
        let json = serde_json::to_value(ParamsReport::from(&ObnlmParams::default())).unwrap();
        assert_eq!(json["mode"], "slice2d");
        assert_eq!(json["block_radius"], 1);
        assert_eq!(json["search_radius"], 3);
    }
}
