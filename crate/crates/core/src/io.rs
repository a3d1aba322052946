//! Trajectory batch files.
//!
//! A file is a sequence of records. Each record starts with a header line
//! `model,alpha,noise,N,d,seed` followed by N lines of d comma-separated
//! coordinates. Label fields (model, alpha, noise, seed) may be left empty
//! for unlabelled data; a segmented trajectory writes its model as
//! `seg:<first>:<second>:<fraction_first>`. Blank lines and lines starting
//! with `#` are ignored. Paths ending in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::sim::{Model, SegmentLabel, Trajectory};

/// Label fields of a record as found in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub model: Option<Model>,
    pub segment: Option<SegmentLabel>,
    pub alpha: Option<f64>,
    pub noise: Option<f64>,
    pub n: usize,
    pub dim: usize,
    pub seed: Option<u64>,
}

impl RecordHeader {
    pub fn is_labelled(&self) -> bool {
        self.model.is_some() && self.alpha.is_some()
    }
}

fn model_field(t: &Trajectory) -> String {
    match (t.model, t.segment) {
        (Model::Segmented, Some(s)) => format!("seg:{}:{}:{}", s.first, s.second, s.fraction_first),
        (m, _) => m.to_string(),
    }
}

/// Writes labelled records.
pub fn write_trajectories<'a, W: Write>(w: W, trajs: impl IntoIterator<Item = &'a Trajectory>) -> Result<()> {
    let mut w = BufWriter::new(w);
    for t in trajs {
        writeln!(w, "{},{},{},{},{},{}", model_field(t), t.alpha, t.noise_amplitude, t.len(), t.dim(), t.seed)?;
        for i in 0..t.len() {
            let row: Vec<String> = t.point(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_model(field: &str, line: usize) -> Result<(Option<Model>, Option<SegmentLabel>)> {
    let f = field.trim();
    if f.is_empty() {
        return Ok((None, None));
    }
    if let Some(rest) = f.strip_prefix("seg:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(parse_err(line, format!("segmented model '{f}' must read seg:<first>:<second>:<fraction>")));
        }
        let first: Model = parts[0].parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
        let second: Model = parts[1].parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
        let fraction_first: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad segment fraction '{}'", parts[2])))?;
        return Ok((
            Some(Model::Segmented),
            Some(SegmentLabel {
                first,
                second,
                fraction_first,
            }),
        ));
    }
    let m: Model = f.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
    Ok((Some(m), None))
}

fn optional<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<Option<T>> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    f.parse()
        .map(Some)
        .map_err(|_| parse_err(line, format!("bad {name} '{f}'")))
}

fn required<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    optional(field, name, line)?.ok_or_else(|| parse_err(line, format!("missing {name}")))
}

/// Parses every record. Unlabelled fields leave the trajectory's defaults
/// (unlabelled Brownian record, α = 1, no noise, seed 0).
pub fn read_trajectories<R: Read>(r: R) -> Result<Vec<(RecordHeader, Trajectory)>> {
    let reader = BufReader::new(r);
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.starts_with('#')));
    let mut out = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(ln, format!("expected header model,alpha,noise,N,d,seed, got {} fields", fields.len())));
        }
        let (model, segment) = parse_model(fields[0], ln)?;
        let alpha: Option<f64> = optional(fields[1], "alpha", ln)?;
        let noise: Option<f64> = optional(fields[2], "noise", ln)?;
        let n: usize = required(fields[3], "N", ln)?;
        let dim: usize = required(fields[4], "d", ln)?;
        let seed: Option<u64> = optional(fields[5], "seed", ln)?;
        if !(1..=3).contains(&dim) {
            return Err(parse_err(ln, format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 2 {
            return Err(parse_err(ln, format!("a trajectory needs at least two points, got N = {n}")));
        }
        let mut positions = Vec::with_capacity(n * dim);
        for k in 0..n {
            let (pl, row) = lines
                .next()
                .ok_or_else(|| parse_err(ln + k + 1, format!("file ended after {k} of {n} points")))?;
            let row = row?;
            let coords: Vec<&str> = row.split(',').collect();
            if coords.len() != dim {
                return Err(parse_err(pl, format!("expected {dim} coordinates, got {}", coords.len())));
            }
            for c in coords {
                let v: f64 = c
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(pl, format!("bad coordinate '{}'", c.trim())))?;
                if !v.is_finite() {
                    return Err(parse_err(pl, format!("non-finite coordinate '{}'", c.trim())));
                }
                positions.push(v);
            }
        }
        let mut traj = Trajectory::from_positions(positions, dim, 1.0).map_err(|e| parse_err(ln, e.to_string()))?;
        if let Some(m) = model {
            traj.model = m;
        }
        traj.segment = segment;
        if let Some(a) = alpha {
            traj.alpha = a;
        }
        if let Some(a) = noise {
            traj.noise_amplitude = a;
        }
        if let Some(s) = seed {
            traj.seed = s;
        }
        out.push((
            RecordHeader {
                model,
                segment,
                alpha,
                noise,
                n,
                dim,
                seed,
            },
            traj,
        ));
    }
    Ok(out)
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn open_reader(path: impl AsRef<Path>) -> Result<Box<dyn Read>> {
    let path = path.as_ref();
    let f = File::open(path)?;
    Ok(if is_gz(path) { Box::new(MultiGzDecoder::new(f)) } else { Box::new(f) })
}

pub fn create_writer(path: impl AsRef<Path>) -> Result<Box<dyn Write>> {
    let path = path.as_ref();
    let f = File::create(path)?;
    Ok(if is_gz(path) {
        Box::new(GzEncoder::new(f, Compression::default()))
    } else {
        Box::new(f)
    })
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<(RecordHeader, Trajectory)>> {
    read_trajectories(open_reader(path)?)
}

pub fn save_trajectories<'a>(path: impl AsRef<Path>, trajs: impl IntoIterator<Item = &'a Trajectory>) -> Result<()> {
    let mut w = create_writer(path)?;
    write_trajectories(&mut w, trajs)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, simulate_segmented};

    #[test]
    fn round_trip() {
        let a = simulate(Model::Lw, 1.3, 20, 2, 1.0, 4).unwrap();
        let b = simulate_segmented(Model::Fbm, Model::Attm, 0.5, 30, 3, 0.25, 9).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, [&a, &b]).unwrap();
        let back = read_trajectories(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, a);
        assert_eq!(back[1].1, b);
        assert!(back[1].0.is_labelled());
    }

    #[test]
    fn unlabelled_records() {
        let text = ",,,3,1,\n0\n1.5\n-2\n";
        let recs = read_trajectories(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(!recs[0].0.is_labelled());
        assert_eq!(recs[0].1.positions(), &[0.0, 1.5, -2.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("fbm,0.5,0,3,1,1\n0\nx\n1\n", 3),
            ("fbm,0.5,0,3,1,1\n0\n1\n", 4),
            ("fbm,0.5,0,2,2,1\n0,0\n1\n", 3),
            ("nope,0.5,0,2,1,1\n0\n1\n", 1),
            ("fbm,0.5,0\n", 1),
        ];
        for (text, want) in cases {
            match read_trajectories(text.as_bytes()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
