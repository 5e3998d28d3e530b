//! Valuation profiles: windowed slopes, the late-jump detector shared by
//! solve certificates and the Liouville slope criterion, and CSV output.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::padic::Val;

/// Slope of one window of indices [start, end].
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WindowSlope {
    pub start: usize,
    pub end: usize,
    pub slope: Option<f64>,
    pub argmax: Option<usize>,
}

/// Splits 1..=d into at most `k` contiguous windows of near-equal size.
pub fn windows(d: usize, k: usize) -> Vec<(usize, usize)> {
    if d == 0 || k == 0 {
        return Vec::new();
    }
    let k = k.min(d);
    (0..k)
        .map(|w| (1 + w * d / k, (w + 1) * d / k))
        .collect()
}

/// Per-window maximum of `f(i)` over the indices where it is defined.
pub fn windowed_max(d: usize, k: usize, f: impl Fn(usize) -> Option<f64>) -> Vec<WindowSlope> {
    windows(d, k)
        .into_iter()
        .map(|(start, end)| {
            let mut best: Option<(f64, usize)> = None;
            for i in start..=end {
                if let Some(s) = f(i) {
                    if best.is_none_or(|(b, _)| s > b) {
                        best = Some((s, i));
                    }
                }
            }
            WindowSlope {
                start,
                end,
                slope: best.map(|b| b.0),
                argmax: best.map(|b| b.1),
            }
        })
        .collect()
}

/// Thresholds of the late-jump detector.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JumpRule {
    pub factor: f64,
    pub min_jump: f64,
}

impl Default for JumpRule {
    fn default() -> Self {
        JumpRule {
            factor: 1.5,
            min_jump: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Jump {
    pub window: usize,
    pub start: usize,
    pub end: usize,
    pub slope: f64,
    pub baseline: f64,
}

/// First window k ≥ 2 whose slope exceeds both factor × baseline and
/// baseline + min_jump, where the baseline is the best slope of windows
/// 1..k−1. Window 0 is burn-in: small indices divide by small numbers.
pub fn detect_jump(ws: &[WindowSlope], rule: JumpRule) -> Option<Jump> {
    let mut baseline: Option<f64> = None;
    for (k, w) in ws.iter().enumerate().skip(1) {
        if let (Some(s), Some(b)) = (w.slope, baseline) {
            if k >= 2 && s > rule.factor * b && s - b >= rule.min_jump {
                return Some(Jump {
                    window: k,
                    start: w.start,
                    end: w.end,
                    slope: s,
                    baseline: b,
                });
            }
        }
        if let Some(s) = w.slope {
            baseline = Some(baseline.map_or(s, |b: f64| b.max(s)));
        }
    }
    None
}

/// RFC 4180 CSV with header "degree,valuation".
pub fn write_profile_csv<W: Write>(out: W, profile: &[(usize, Val)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["degree", "valuation"])?;
    for (i, v) in profile {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_range() {
        let ws = windows(300, 10);
        assert_eq!(ws.len(), 10);
        assert_eq!(ws[0], (1, 30));
        assert_eq!(ws[9], (271, 300));
        let ws = windows(7, 10);
        assert_eq!(ws.len(), 7);
        let total: usize = windows(203, 10).iter().map(|(a, b)| b - a + 1).sum();
        assert_eq!(total, 203);
    }

    fn mk(slopes: &[f64]) -> Vec<WindowSlope> {
        slopes
            .iter()
            .enumerate()
            .map(|(i, &s)| WindowSlope {
                start: i,
                end: i,
                slope: Some(s),
                argmax: Some(i),
            })
            .collect()
    }

    #[test]
    fn single_spike_is_a_jump() {
        let j = detect_jump(&mk(&[5.0, 0.2, 0.1, 0.15, 2.9, 0.1]), JumpRule::default()).unwrap();
        assert_eq!(j.window, 4);
        assert_eq!(j.baseline, 0.2);
    }

    #[test]
    fn slow_growth_is_not_a_jump() {
        // v(i!)/i-like profile rising toward 1.
        let slopes: Vec<f64> = (1..=10).map(|k| 1.0 - 1.0 / (k as f64 + 1.0)).collect();
        assert!(detect_jump(&mk(&slopes), JumpRule::default()).is_none());
        // Small absolute changes around zero are not jumps either.
        assert!(detect_jump(&mk(&[0.0, 0.01, 0.05, 0.2, 0.1]), JumpRule::default()).is_none());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &[(0, Val::exact(0)), (1, Val::at_least(8))]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "degree,valuation\n0,0\n1,>=8\n");
    }
}
