//! Self-describing snapshot files: a text header followed by little-endian `f64` data.
//!
//! ```text
//! qgcyl-snapshot 1
//! field <name>
//! dims <d0> <d1> ...
//! modes <N>
//! vertical <M>
//! levels <L>
//! domain <json>
//! time <t>
//! attr <key> <value>      (zero or more)
//! end
//! <row-major f64 payload>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ScalarField3D, StreamState, SurfaceFieldPair};
use crate::error::{Error, Result};
use crate::geometry::Discretization;

const MAGIC: &str = "qgcyl-snapshot 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: String,
    pub dims: Vec<usize>,
    pub modes: usize,
    pub vertical: usize,
    pub levels: usize,
    pub domain: String,
    pub time: f64,
    pub attrs: Vec<(String, String)>,
    pub data: Vec<f64>,
}

impl Snapshot {
    fn base(disc: &Discretization, field: &str, time: f64, dims: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            field: field.to_string(),
            dims,
            modes: disc.n_modes(),
            vertical: disc.vertical.order(),
            levels: disc.level_count(),
            domain: serde_json::to_string(&disc.domain).unwrap_or_default(),
            time,
            attrs: Vec::new(),
            data,
        }
    }

    /// Coefficients `[levels, N]` of a scalar field.
    pub fn of_scalar(field: &ScalarField3D, name: &str, time: f64) -> Self {
        let d = field.disc();
        Self::base(d, name, time, vec![d.level_count(), d.n_modes()], field.data().to_vec())
    }

    /// Coefficients `[2, N]`: bottom row then top row.
    pub fn of_surface(disc: &Discretization, g: &SurfaceFieldPair, name: &str, time: f64) -> Self {
        let mut data = g.bottom.clone();
        data.extend_from_slice(&g.top);
        Self::base(disc, name, time, vec![2, disc.n_modes()], data)
    }

    /// Modal coefficients `[N + 1, M + 1]`; the last row holds the pure-z part.
    pub fn of_stream(state: &StreamState, name: &str, time: f64) -> Self {
        let d = state.disc();
        let mut data = state.u.clone();
        data.extend_from_slice(&state.v);
        let mut s = Self::base(d, name, time, vec![d.n_modes() + 1, d.vertical.size()], data);
        s.attrs.push(("mean_shift".into(), format!("{:e}", state.mean_shift)));
        s.attrs.push(("defect".into(), format!("{:e}", state.defect)));
        s
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let expected: usize = self.dims.iter().product();
        if expected != self.data.len() {
            return Err(Error::Snapshot(format!(
                "dims {:?} hold {expected} values, payload has {}",
                self.dims,
                self.data.len()
            )));
        }
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "field {}", self.field)?;
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        writeln!(w, "dims {}", dims.join(" "))?;
        writeln!(w, "modes {}", self.modes)?;
        writeln!(w, "vertical {}", self.vertical)?;
        writeln!(w, "levels {}", self.levels)?;
        writeln!(w, "domain {}", self.domain)?;
        writeln!(w, "time {:e}", self.time)?;
        for (k, v) in &self.attrs {
            writeln!(w, "attr {k} {v}")?;
        }
        writeln!(w, "end")?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        let mut next = |r: &mut BufReader<File>| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Snapshot("unexpected end of header".into()));
            }
            Ok(line.trim_end_matches(['\n', '\r']).to_string())
        };
        if next(&mut r)? != MAGIC {
            return Err(Error::Snapshot("missing magic line".into()));
        }
        let mut snap = Snapshot {
            field: String::new(),
            dims: Vec::new(),
            modes: 0,
            vertical: 0,
            levels: 0,
            domain: String::new(),
            time: 0.0,
            attrs: Vec::new(),
            data: Vec::new(),
        };
        let bad = |what: &str| Error::Snapshot(format!("malformed {what} line"));
        loop {
            let l = next(&mut r)?;
            if l == "end" {
                break;
            }
            let (key, rest) = l.split_once(' ').unwrap_or((l.as_str(), ""));
            match key {
                "field" => snap.field = rest.to_string(),
                "dims" => {
                    snap.dims = rest
                        .split_whitespace()
                        .map(|d| d.parse().map_err(|_| bad("dims")))
                        .collect::<Result<_>>()?
                }
                "modes" => snap.modes = rest.parse().map_err(|_| bad("modes"))?,
                "vertical" => snap.vertical = rest.parse().map_err(|_| bad("vertical"))?,
                "levels" => snap.levels = rest.parse().map_err(|_| bad("levels"))?,
                "domain" => snap.domain = rest.to_string(),
                "time" => snap.time = rest.parse().map_err(|_| bad("time"))?,
                "attr" => {
                    let (k, v) = rest.split_once(' ').ok_or_else(|| bad("attr"))?;
                    snap.attrs.push((k.to_string(), v.to_string()));
                }
                other => return Err(Error::Snapshot(format!("unknown header key {other}"))),
            }
        }
        let count: usize = snap.dims.iter().product();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(Error::Snapshot(format!(
                "payload has {} bytes, expected {}",
                bytes.len(),
                count * 8
            )));
        }
        snap.data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(snap)
    }
}
