//! Tab-separated template store.
//!
//! One record per line:
//! `subject  sample  METHOD  length  payload-hex  mask-hex|-  aux|-`.
//! Bits pack MSB-first, trits two bits each (00 = 0, 01 = +1, 10 = −1),
//! reals as little-endian f64. `aux` holds NLAC coefficient indices as
//! little-endian u16 hex, or the trit count of a combined code.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{IrisError, Result};
use crate::features::{FeatureVector, Method, Payload, ProjectionBasis, ProjectionKind};
use crate::gaselect::pack_bits;

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRecord {
    pub subject_id: String,
    pub sample_id: String,
    pub template: FeatureVector,
}

fn unpack_bits(bytes: &[u8], n: usize) -> Result<Vec<bool>> {
    if bytes.len() != n.div_ceil(8) {
        return Err(IrisError::Parse(format!(
            "{} bytes for {n} bits",
            bytes.len()
        )));
    }
    Ok((0..n)
        .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
        .collect())
}

fn pack_trits(t: &[i8]) -> Vec<u8> {
    let mut out = vec![0u8; t.len().div_ceil(4)];
    for (i, &v) in t.iter().enumerate() {
        let code = match v {
            1 => 0b01,
            -1 => 0b10,
            _ => 0b00,
        };
        out[i / 4] |= code << (6 - 2 * (i % 4));
    }
    out
}

fn unpack_trits(bytes: &[u8], n: usize) -> Result<Vec<i8>> {
    if bytes.len() != n.div_ceil(4) {
        return Err(IrisError::Parse(format!(
            "{} bytes for {n} trits",
            bytes.len()
        )));
    }
    (0..n)
        .map(|i| match bytes[i / 4] >> (6 - 2 * (i % 4)) & 0b11 {
            0b00 => Ok(0),
            0b01 => Ok(1),
            0b10 => Ok(-1),
            _ => Err(IrisError::Parse(format!("invalid trit code at {i}"))),
        })
        .collect()
}

fn pack_reals(r: &[f64]) -> Vec<u8> {
    r.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn unpack_reals(bytes: &[u8], n: usize) -> Result<Vec<f64>> {
    if bytes.len() != n * 8 {
        return Err(IrisError::Parse(format!(
            "{} bytes for {n} reals",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn check_field(name: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', '\r']) {
        return Err(IrisError::InvalidArgument(format!(
            "{name} '{s}' is empty or holds a tab/newline"
        )));
    }
    Ok(())
}

impl TemplateRecord {
    pub fn new(
        subject_id: impl Into<String>,
        sample_id: impl Into<String>,
        template: FeatureVector,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            sample_id: sample_id.into(),
            template,
        }
    }

    pub fn to_line(&self) -> Result<String> {
        check_field("subject", &self.subject_id)?;
        check_field("sample", &self.sample_id)?;
        let t = &self.template;
        let (payload, aux) = match &t.payload {
            Payload::Bits(b) => (pack_bits(b), None),
            Payload::Trits(v) => (pack_trits(v), None),
            Payload::Reals(r) => (pack_reals(r), None),
            Payload::TritsReals(v, r) => {
                let mut p = pack_trits(v);
                p.extend(pack_reals(r));
                (p, Some(v.len().to_string()))
            }
        };
        let aux = match (&t.indices, aux) {
            (Some(idx), _) => hex::encode(
                idx.iter()
                    .flat_map(|i| i.to_le_bytes())
                    .collect::<Vec<u8>>(),
            ),
            (None, Some(a)) => a,
            (None, None) => "-".into(),
        };
        let mask = t
            .mask
            .as_ref()
            .map_or_else(|| "-".to_string(), |m| hex::encode(pack_bits(m)));
        Ok(format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.subject_id,
            self.sample_id,
            t.method,
            t.len(),
            hex::encode(payload),
            mask,
            aux
        ))
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if f.len() != 7 {
            return Err(IrisError::Parse(format!(
                "expected 7 tab-separated fields, got {}",
                f.len()
            )));
        }
        let method: Method = f[2].parse()?;
        let n: usize = f[3]
            .parse()
            .map_err(|_| IrisError::Parse(format!("bad length '{}'", f[3])))?;
        let bytes = hex::decode(f[4]).map_err(|e| IrisError::Parse(format!("payload hex: {e}")))?;
        let payload = match method {
            Method::Binary | Method::Nlac | Method::Ga600 => Payload::Bits(unpack_bits(&bytes, n)?),
            Method::Local => Payload::Trits(unpack_trits(&bytes, n)?),
            Method::Combined => {
                let nt: usize = f[6].parse().map_err(|_| {
                    IrisError::Parse(format!(
                        "combined record needs a trit count, got '{}'",
                        f[6]
                    ))
                })?;
                if nt > n {
                    return Err(IrisError::Parse(format!("{nt} trits in a {n}-long code")));
                }
                let tb = nt.div_ceil(4);
                if bytes.len() < tb {
                    return Err(IrisError::Parse("combined payload too short".into()));
                }
                Payload::TritsReals(
                    unpack_trits(&bytes[..tb], nt)?,
                    unpack_reals(&bytes[tb..], n - nt)?,
                )
            }
            _ => Payload::Reals(unpack_reals(&bytes, n)?),
        };
        let mask = match f[5] {
            "-" => None,
            h => Some(unpack_bits(
                &hex::decode(h).map_err(|e| IrisError::Parse(format!("mask hex: {e}")))?,
                n,
            )?),
        };
        let indices = match (method, f[6]) {
            (Method::Nlac, "-") => {
                return Err(IrisError::Parse("NLAC record without indices".into()))
            }
            (Method::Nlac, h) => {
                let b = hex::decode(h).map_err(|e| IrisError::Parse(format!("index hex: {e}")))?;
                if b.len() != 2 * n {
                    return Err(IrisError::Parse(format!(
                        "{} index bytes for {n} entries",
                        b.len()
                    )));
                }
                Some(
                    b.chunks_exact(2)
                        .map(|c| u16::from_le_bytes([c[0], c[1]]))
                        .collect(),
                )
            }
            _ => None,
        };
        Ok(Self {
            subject_id: f[0].to_string(),
            sample_id: f[1].to_string(),
            template: FeatureVector {
                method,
                payload,
                mask,
                indices,
            },
        })
    }
}

/// Append records to a store file, creating it if needed.
pub fn append_records(path: &Path, records: &[TemplateRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&r.to_line()?);
        text.push('\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// All records in file order. Blank lines and `#` comments are skipped.
pub fn read_store(path: &Path) -> Result<Vec<TemplateRecord>> {
    if !path.exists() {
        return Err(IrisError::FileNotFound(path.to_path_buf()));
    }
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (no, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            TemplateRecord::from_line(&line)
                .map_err(|e| IrisError::Parse(format!("{}:{}: {e}", path.display(), no + 1)))?,
        );
    }
    Ok(out)
}

/// A projection basis as store records: the mean (aux field carries the
/// requested component count), the eigenvalues for PCA, then one record
/// per component.
pub fn basis_to_records(b: &ProjectionBasis) -> Vec<TemplateRecord> {
    let method = match b.kind {
        ProjectionKind::Pca => Method::Pca,
        ProjectionKind::Ica => Method::Ica,
    };
    let rec = |sample: String, v: Vec<f64>| {
        TemplateRecord::new(
            "basis",
            sample,
            FeatureVector::new(method, Payload::Reals(v)),
        )
    };
    let mut out = vec![rec(
        format!("mean:{}:{}", b.requested_k, b.converged),
        b.mean.clone(),
    )];
    if !b.eigenvalues.is_empty() {
        out.push(rec("eigenvalues".into(), b.eigenvalues.clone()));
    }
    for (i, row) in b.components.rows().into_iter().enumerate() {
        out.push(rec(format!("c{i}"), row.to_vec()));
    }
    out
}

pub fn basis_from_records(records: &[TemplateRecord]) -> Result<ProjectionBasis> {
    let bad = |m: &str| IrisError::Parse(format!("basis file: {m}"));
    let first = records.first().ok_or_else(|| bad("empty"))?;
    let kind = match first.template.method {
        Method::Pca => ProjectionKind::Pca,
        Method::Ica => ProjectionKind::Ica,
        m => return Err(bad(&format!("method {m} is not a projection"))),
    };
    let reals = |r: &TemplateRecord| match &r.template.payload {
        Payload::Reals(v) => Ok(v.clone()),
        _ => Err(bad("non-real payload")),
    };
    let head: Vec<&str> = first.sample_id.split(':').collect();
    if head.len() != 3 || head[0] != "mean" {
        return Err(bad("first record must be the mean"));
    }
    let requested_k = head[1].parse().map_err(|_| bad("requested k"))?;
    let converged = head[2] == "true";
    let mean = reals(first)?;
    let mut eigenvalues = Vec::new();
    let mut rows = Vec::new();
    for r in &records[1..] {
        if r.template.method != first.template.method {
            return Err(bad("mixed methods"));
        }
        if r.sample_id == "eigenvalues" {
            eigenvalues = reals(r)?;
        } else {
            let v = reals(r)?;
            if v.len() != mean.len() {
                return Err(bad("component length differs from the mean"));
            }
            rows.push(v);
        }
    }
    let d = mean.len();
    let components =
        Array2::from_shape_vec((rows.len(), d), rows.concat()).map_err(|_| bad("shape"))?;
    Ok(ProjectionBasis {
        kind,
        mean,
        components,
        eigenvalues,
        requested_k,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trit_codes() {
        assert_eq!(
            pack_trits(&[0, 1, -1, 0, 1]),
            vec![0b0001_1000, 0b0100_0000]
        );
        assert_eq!(
            unpack_trits(&[0b0001_1000, 0b0100_0000], 5).unwrap(),
            vec![0, 1, -1, 0, 1]
        );
        assert!(unpack_trits(&[0b1100_0000], 1).is_err());
    }

    #[test]
    fn round_trip_kinds() {
        let mut nlac = FeatureVector::new(Method::Nlac, Payload::Bits(vec![true, false, true]));
        nlac.indices = Some(vec![3, 700, 2519]);
        nlac.mask = Some(vec![true, true, false]);
        let recs = [
            FeatureVector::new(Method::Local, Payload::Trits(vec![1, 0, -1, 1, 1])),
            FeatureVector::new(
                Method::Global,
                Payload::Reals(vec![0.1, -2.5e-300, f64::MAX]),
            ),
            FeatureVector::new(
                Method::Combined,
                Payload::TritsReals(vec![1, -1, 0], vec![3.5, -1.0]),
            ),
            nlac,
        ];
        for fv in recs {
            let r = TemplateRecord::new("S001", "1_2", fv);
            let line = r.to_line().unwrap();
            let back = TemplateRecord::from_line(&line).unwrap();
            assert_eq!(back, r);
            assert_eq!(back.to_line().unwrap(), line);
        }
    }

    #[test]
    fn bad_lines() {
        assert!(TemplateRecord::from_line("a\tb").is_err());
        assert!(TemplateRecord::from_line("a\tb\tBINARY\t9\tff\t-\t-").is_err());
        assert!(TemplateRecord::from_line("a\tb\tNOPE\t1\t80\t-\t-").is_err());
        let r = TemplateRecord::new(
            "a b\t",
            "1",
            FeatureVector::new(Method::Binary, Payload::Bits(vec![true])),
        );
        assert!(r.to_line().is_err());
    }
}
