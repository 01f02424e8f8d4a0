//! Instance serialization. An instance is a directory holding a `manifest`
//! (flat key=value text) and one container file per matrix or vector. A
//! container starts with a header line `matrix <rows> <cols>` or
//! `vector <len>` followed by whitespace-separated doubles in row-major
//! order, printed with shortest round-trip formatting so a reload is
//! bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub struct MaxEigInstance {
    pub components: Vec<SymMatrix>,
    pub c: SymMatrix,
    pub b: DVector<f64>,
    pub beta: f64,
    pub eps: f64,
    pub seed: u64,
    /// Family name the instance was drawn from, when generated.
    pub family: Option<String>,
}

pub struct SpcaInstance {
    pub c: SymMatrix,
    pub rho: f64,
    pub eps: f64,
    pub v: f64,
    pub seed: u64,
}

pub enum Instance {
    MaxEig(MaxEigInstance),
    Spca(SpcaInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::MaxEig(_) => "maxeig",
            Instance::Spca(_) => "spca",
        }
    }

    pub fn matrix_dim(&self) -> usize {
        match self {
            Instance::MaxEig(inst) => inst.c.n(),
            Instance::Spca(inst) => inst.c.n(),
        }
    }
}

fn format_matrix(x: &DMatrix<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "matrix {} {}", x.nrows(), x.ncols()).unwrap();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{}", x[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn format_vector(v: &DVector<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "vector {}", v.len()).unwrap();
    for (i, e) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{e}").unwrap();
    }
    out.push('\n');
    out
}

fn parse_container(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty container"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (rows, cols) = match fields.as_slice() {
        ["matrix", r, c] => (
            r.parse().map_err(|_| bad("bad row count"))?,
            c.parse().map_err(|_| bad("bad column count"))?,
        ),
        ["vector", l] => (l.parse().map_err(|_| bad("bad length"))?, 1usize),
        _ => return Err(bad("unrecognized header")),
    };
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|_| bad(&format!("bad value {tok:?}")))?,
            );
        }
    }
    if values.len() != rows * cols {
        return Err(bad("value count does not match header"));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

fn read_matrix(path: &Path) -> Result<SymMatrix> {
    let raw = parse_container(&fs::read_to_string(path)?, path)?;
    // reload without re-symmetrizing so the round trip stays bit-identical
    SymMatrix::new(raw)
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let raw = parse_container(&fs::read_to_string(path)?, path)?;
    if raw.ncols() != 1 {
        return Err(Error::Parse(format!(
            "{}: expected a vector container",
            path.display()
        )));
    }
    Ok(DVector::from_column_slice(raw.as_slice()))
}

pub fn save_instance(inst: &Instance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    writeln!(manifest, "format=approxgrad-instance").unwrap();
    writeln!(manifest, "version=1").unwrap();
    writeln!(manifest, "kind={}", inst.kind()).unwrap();
    writeln!(manifest, "n={}", inst.matrix_dim()).unwrap();
    match inst {
        Instance::MaxEig(p) => {
            writeln!(manifest, "m={}", p.components.len()).unwrap();
            writeln!(manifest, "beta={}", p.beta).unwrap();
            writeln!(manifest, "eps={}", p.eps).unwrap();
            writeln!(manifest, "seed={}", p.seed).unwrap();
            if let Some(f) = &p.family {
                writeln!(manifest, "family={f}").unwrap();
            }
            for (i, a) in p.components.iter().enumerate() {
                fs::write(dir.join(format!("A{i}.mat")), format_matrix(a.matrix()))?;
            }
            fs::write(dir.join("c.mat"), format_matrix(p.c.matrix()))?;
            fs::write(dir.join("b.vec"), format_vector(&p.b))?;
        }
        Instance::Spca(p) => {
            writeln!(manifest, "rho={}", p.rho).unwrap();
            writeln!(manifest, "eps={}", p.eps).unwrap();
            writeln!(manifest, "v={}", p.v).unwrap();
            writeln!(manifest, "seed={}", p.seed).unwrap();
            fs::write(dir.join("c.mat"), format_matrix(p.c.matrix()))?;
        }
    }
    fs::write(dir.join("manifest"), manifest)?;
    Ok(())
}

pub fn load_instance(dir: &Path) -> Result<Instance> {
    let manifest_path = dir.join("manifest");
    let text = fs::read_to_string(&manifest_path)?;
    let mut kind = None;
    let mut keys = std::collections::HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("{}: expected key=value", manifest_path.display()))
        })?;
        if k == "kind" {
            kind = Some(v.to_string());
        }
        keys.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<&String> {
        keys.get(k)
            .ok_or_else(|| Error::Parse(format!("manifest missing key {k:?}")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Parse(format!("manifest key {k:?} is not a number")))
    };
    match kind.as_deref() {
        Some("maxeig") => {
            let m = num("m")? as usize;
            let mut components = Vec::with_capacity(m);
            for i in 0..m {
                components.push(read_matrix(&dir.join(format!("A{i}.mat")))?);
            }
            Ok(Instance::MaxEig(MaxEigInstance {
                components,
                c: read_matrix(&dir.join("c.mat"))?,
                b: read_vector(&dir.join("b.vec"))?,
                beta: num("beta")?,
                eps: num("eps")?,
                seed: num("seed")? as u64,
                family: keys.get("family").cloned(),
            }))
        }
        Some("spca") => Ok(Instance::Spca(SpcaInstance {
            c: read_matrix(&dir.join("c.mat"))?,
            rho: num("rho")?,
            eps: num("eps")?,
            v: num("v")?,
            seed: num("seed")? as u64,
        })),
        other => Err(Error::Parse(format!(
            "manifest has unknown kind {other:?}"
        ))),
    }
}
