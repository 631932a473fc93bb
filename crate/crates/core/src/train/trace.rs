use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Mean losses over one epoch. `iteration` and `eta` refer to the epoch's
/// last optimiser step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub epoch: usize,
    pub iteration: u64,
    #[serde(rename = "L_r")]
    pub l_r: f64,
    #[serde(rename = "L_c")]
    pub l_c: f64,
    #[serde(rename = "L_t")]
    pub l_t: f64,
    #[serde(rename = "eta")]
    pub eta: f64,
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    crate::io::atomic_write(path, trace_to_jsonl(trace)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_field_names() {
        let r = TraceRecord {
            epoch: 1,
            iteration: 13,
            l_r: 0.5,
            l_c: 0.0,
            l_t: 0.25,
            eta: 0.1,
        };
        let s = trace_to_jsonl(&[r, r]).unwrap();
        assert_eq!(s.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(s.lines().next().unwrap()).unwrap();
        for k in ["epoch", "iteration", "L_r", "L_c", "L_t", "eta"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        let back: TraceRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
