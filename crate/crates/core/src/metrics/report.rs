use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::match_endmembers;
use crate::data::AbundanceMap;
use crate::error::{Error, Result};
use crate::tensor::{sad, Tensor};

/// Scores of one estimate against ground truth.
///
/// Endmembers are numbered by their ground-truth index; `permutation[k]`
/// is the estimated column matched to endmember `k`. SAD is in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub permutation: Vec<usize>,
    pub sad: Vec<f64>,
    pub sad_avg: f64,
    pub rmse: Option<Vec<f64>>,
    pub rmse_avg: Option<f64>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

fn check_permutation(perm: &[usize], p: usize) -> Result<()> {
    let mut seen = vec![false; p];
    if perm.len() != p {
        return Err(Error::Usage(format!("permutation has {} entries, expected {p}", perm.len())));
    }
    for &j in perm {
        if j >= p || std::mem::replace(&mut seen[j], true) {
            return Err(Error::Usage(format!("{perm:?} is not a permutation of 0..{p}")));
        }
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-endmember SAD between matched columns, and their mean.
pub fn sad_report(est: &Tensor, gt: &Tensor, perm: &[usize]) -> Result<(Vec<f64>, f64)> {
    if est.ndim() != 2 || est.shape() != gt.shape() {
        return Err(Error::Usage(format!(
            "endmember matrices differ in shape: estimated {:?}, ground truth {:?}",
            est.shape(),
            gt.shape()
        )));
    }
    let (l, p) = (gt.rows(), gt.cols());
    check_permutation(perm, p)?;
    let per = (0..p)
        .map(|k| {
            let g: Vec<f64> = (0..l).map(|b| gt.at(b, k)).collect();
            let e: Vec<f64> = (0..l).map(|b| est.at(b, perm[k])).collect();
            sad(&e, &g)
        })
        .collect::<Result<Vec<_>>>()?;
    let avg = mean(&per);
    Ok((per, avg))
}

/// Per-endmember abundance RMSE over all pixels, and their mean.
pub fn rmse_report(est: &AbundanceMap, gt: &AbundanceMap, perm: &[usize]) -> Result<(Vec<f64>, f64)> {
    let dims = |m: &AbundanceMap| (m.height(), m.width(), m.endmembers());
    if dims(est) != dims(gt) {
        return Err(Error::Usage(format!(
            "abundance maps differ in shape: estimated {:?}, ground truth {:?}",
            dims(est),
            dims(gt)
        )));
    }
    let p = gt.endmembers();
    check_permutation(perm, p)?;
    let n = gt.pixel_count() as f64;
    let mut sq = vec![0.0; p];
    for (e_px, g_px) in est.values().chunks(p).zip(gt.values().chunks(p)) {
        for k in 0..p {
            let d = g_px[k] - e_px[perm[k]];
            sq[k] += d * d;
        }
    }
    let per: Vec<f64> = sq.iter().map(|s| (s / n).sqrt()).collect();
    let avg = mean(&per);
    Ok((per, avg))
}

/// Matches endmembers by SAD and reuses the matching for abundance RMSE
/// when both abundance maps are given.
pub fn evaluate(
    est_endmembers: &Tensor,
    gt_endmembers: &Tensor,
    abundances: Option<(&AbundanceMap, &AbundanceMap)>,
) -> Result<MetricsReport> {
    let permutation = match_endmembers(est_endmembers, gt_endmembers)?;
    let (sad, sad_avg) = sad_report(est_endmembers, gt_endmembers, &permutation)?;
    let (rmse, rmse_avg) = match abundances {
        Some((est, gt)) => {
            let (per, avg) = rmse_report(est, gt, &permutation)?;
            (Some(per), Some(avg))
        }
        None => (None, None),
    };
    Ok(MetricsReport {
        permutation,
        sad,
        sad_avg,
        rmse,
        rmse_avg,
        seed: None,
        config_hash: None,
    })
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(values);
    if values.len() < 2 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (m, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl MetricsReport {
    /// `name=value` lines; endmembers are numbered from 1 and values are
    /// written in shortest round-trip form.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let p = self.sad.len();
        let _ = writeln!(out, "endmembers={p}");
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed={seed}");
        }
        if let Some(hash) = &self.config_hash {
            let _ = writeln!(out, "config_hash={hash}");
        }
        for (k, j) in self.permutation.iter().enumerate() {
            let _ = writeln!(out, "match.{}={}", k + 1, j + 1);
        }
        for (k, v) in self.sad.iter().enumerate() {
            let _ = writeln!(out, "sad.{}={v}", k + 1);
        }
        let _ = writeln!(out, "sad.avg={}", self.sad_avg);
        if let (Some(rmse), Some(avg)) = (&self.rmse, self.rmse_avg) {
            for (k, v) in rmse.iter().enumerate() {
                let _ = writeln!(out, "rmse.{}={v}", k + 1);
            }
            let _ = writeln!(out, "rmse.avg={avg}");
        }
        out
    }

    /// Inverse of [`MetricsReport::to_key_values`]. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse_key_values(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Usage(format!("metrics report: {msg}"));
        let mut p = None;
        let mut seed = None;
        let mut hash = None;
        let mut matched = Vec::new();
        let mut sad = Vec::new();
        let mut rmse = Vec::new();
        let (mut sad_avg, mut rmse_avg) = (None, None);
        let real = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line without '=': {line:?}")))?;
            match key.split_once('.') {
                None => match key {
                    "endmembers" => p = Some(value.parse::<usize>().map_err(|_| bad(format!("bad count {value:?}")))?),
                    "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad(format!("bad seed {value:?}")))?),
                    "config_hash" => hash = Some(value.to_string()),
                    _ => return Err(bad(format!("unknown key {key:?}"))),
                },
                Some((group, "avg")) => match group {
                    "sad" => sad_avg = Some(real(value)?),
                    "rmse" => rmse_avg = Some(real(value)?),
                    _ => return Err(bad(format!("unknown key {key:?}"))),
                },
                Some((group, index)) => {
                    let idx: usize = index
                        .parse()
                        .ok()
                        .filter(|i| *i >= 1)
                        .ok_or_else(|| bad(format!("bad index in {key:?}")))?;
                    let target = match group {
                        "match" => {
                            let j: usize = value
                                .parse()
                                .ok()
                                .filter(|j| *j >= 1)
                                .ok_or_else(|| bad(format!("bad match {value:?}")))?;
                            matched.push((idx, (j - 1) as f64));
                            continue;
                        }
                        "sad" => &mut sad,
                        "rmse" => &mut rmse,
                        _ => return Err(bad(format!("unknown key {key:?}"))),
                    };
                    target.push((idx, real(value)?));
                }
            }
        }
        let p = p.ok_or_else(|| bad("missing endmembers".into()))?;
        let dense = |mut entries: Vec<(usize, f64)>, name: &str| -> Result<Vec<f64>> {
            entries.sort_by_key(|e| e.0);
            if entries.len() != p || entries.iter().enumerate().any(|(i, e)| e.0 != i + 1) {
                return Err(bad(format!("{name} entries do not cover 1..={p}")));
            }
            Ok(entries.into_iter().map(|e| e.1).collect())
        };
        let permutation: Vec<usize> = dense(matched, "match")?.into_iter().map(|j| j as usize).collect();
        check_permutation(&permutation, p)?;
        let rmse = if rmse.is_empty() && rmse_avg.is_none() {
            None
        } else {
            Some(dense(rmse, "rmse")?)
        };
        Ok(Self {
            permutation,
            sad: dense(sad, "sad")?,
            sad_avg: sad_avg.ok_or_else(|| bad("missing sad.avg".into()))?,
            rmse_avg: match (&rmse, rmse_avg) {
                (Some(_), None) => return Err(bad("missing rmse.avg".into())),
                (_, avg) => avg,
            },
            rmse,
            seed,
            config_hash: hash,
        })
    }

    /// Table with SAD and RMSE scaled by 10².
    pub fn human_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>8} {:>12} {:>12}", "endmember", "column", "SAD(e-2)", "RMSE(e-2)");
        for (k, s) in self.sad.iter().enumerate() {
            let rmse = self
                .rmse
                .as_ref()
                .map_or_else(|| "-".to_string(), |r| format!("{:.2}", r[k] * 100.0));
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>12.2} {:>12}",
                format!("#{}", k + 1),
                self.permutation[k] + 1,
                s * 100.0,
                rmse
            );
        }
        let rmse = self.rmse_avg.map_or_else(|| "-".to_string(), |r| format!("{:.2}", r * 100.0));
        let _ = writeln!(out, "{:<10} {:>8} {:>12.2} {:>12}", "avg", "", self.sad_avg * 100.0, rmse);
        out
    }
}
