//! Text `.svcmodel` format.
//!
//! ```text
//! svcmodel 1
//! n 10
//! m 80
//! quant_bits 2
//! transport bits
//! net encoder 3
//! layer 20 512 relu
//! <20 rows of 512 weights>
//! <512 biases>
//! ...
//! ```
//!
//! Values are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::codec::{CodecModel, Stage2, Transport};
use super::mlp::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &str = "svcmodel";
pub const VERSION: u32 = 1;

/// Line-oriented whitespace tokenizer that reports 1-based line numbers.
pub struct Tokens<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Tokens<R> {
    pub fn new(r: R) -> Self {
        Tokens { lines: r.lines(), line: 0 }
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.line, msg: msg.into() })
    }

    /// Next non-empty line split on whitespace.
    pub fn next_line(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            match self.lines.next() {
                None => return self.error("unexpected end of file"),
                Some(l) => {
                    let l = l?;
                    let t: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
                    if !t.is_empty() {
                        return Ok(t);
                    }
                }
            }
        }
    }

    /// Next line, which must start with `key` and have `count` values after it.
    pub fn keyed(&mut self, key: &str, count: usize) -> Result<Vec<String>> {
        let t = self.next_line()?;
        if t[0] != key || t.len() != count + 1 {
            return self.error(format!("expected `{key}` with {count} values"));
        }
        Ok(t[1..].to_vec())
    }

    pub fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().or_else(|_| self.error(format!("cannot parse `{s}`")))
    }

    /// Next line of the form `key value`, parsed.
    pub fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key, 1)?;
        self.parse(&v[0])
    }

    pub fn floats(&mut self, count: usize) -> Result<Vec<f64>> {
        let t = self.next_line()?;
        if t.len() != count {
            return self.error(format!("expected {count} values, found {}", t.len()));
        }
        t.iter().map(|s| self.parse::<f64>(s)).collect()
    }

    /// Fails unless only blank lines remain.
    pub fn finish(&mut self) -> Result<()> {
        for l in self.lines.by_ref() {
            self.line += 1;
            if !l?.trim().is_empty() {
                return Err(Error::Parse { line: self.line, msg: "trailing content".into() });
            }
        }
        Ok(())
    }
}

fn write_row<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v:?}")?;
        first = false;
    }
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_mlp<W: Write>(w: &mut W, name: &str, mlp: &Mlp) -> Result<()> {
    writeln!(w, "net {name} {}", mlp.layers.len())?;
    for l in &mlp.layers {
        writeln!(w, "layer {} {} {}", l.input_width(), l.output_width(), l.activation.name())?;
        for row in l.weights.rows() {
            write_row(w, row.iter().copied())?;
        }
        write_row(w, l.bias.iter().copied())?;
    }
    Ok(())
}

pub fn read_mlp<R: BufRead>(t: &mut Tokens<R>, name: &str) -> Result<Mlp> {
    let head = t.keyed("net", 2)?;
    if head[0] != name {
        return t.error(format!("expected net `{name}`, found `{}`", head[0]));
    }
    let count: usize = t.parse(&head[1])?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let spec = t.keyed("layer", 3)?;
        let input: usize = t.parse(&spec[0])?;
        let output: usize = t.parse(&spec[1])?;
        let Some(activation) = Activation::from_name(&spec[2]) else {
            return t.error(format!("unknown activation `{}`", spec[2]));
        };
        if let Some(prev) = layers.last().map(Dense::output_width) {
            if prev != input {
                return t.error(format!("layer input {input} does not match previous output {prev}"));
            }
        }
        let mut weights = Vec::with_capacity(input * output);
        for _ in 0..input {
            weights.extend(t.floats(output)?);
        }
        let bias = t.floats(output)?;
        layers.push(Dense { weights: Array2::from_shape_vec((input, output), weights).expect("shape"), bias: Array1::from(bias), activation });
    }
    if layers.is_empty() {
        return t.error("net has no layers");
    }
    Ok(Mlp { layers })
}

pub fn write_model<W: Write>(w: &mut W, model: &CodecModel) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "n {}", model.n)?;
    writeln!(w, "m {}", model.m)?;
    writeln!(w, "quant_bits {}", model.quant_bits)?;
    match &model.transport {
        Transport::Bits | Transport::FullResolution => writeln!(w, "transport {}", model.transport.name())?,
        Transport::QuantizedResolution { alpha, beta, powers } => {
            write!(w, "transport {} {alpha:?} {beta:?} {}", model.transport.name(), powers.len())?;
            for p in powers {
                write!(w, " {p:?}")?;
            }
            writeln!(w)?;
        }
    }
    writeln!(w, "stages {}", if model.stage2.is_some() { 2 } else { 1 })?;
    write_mlp(w, "encoder", &model.encoder)?;
    write_mlp(w, "decoder", &model.decoder)?;
    if let Some(st2) = &model.stage2 {
        write_mlp(w, "stage2_encoder", &st2.encoder)?;
        write_mlp(w, "stage2_decoder", &st2.decoder)?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(r: R) -> Result<CodecModel> {
    let mut t = Tokens::new(r);
    let head = t.next_line()?;
    if head.len() != 2 || head[0] != MAGIC || head[1] != VERSION.to_string() {
        return t.error(format!("not a {MAGIC} v{VERSION} file"));
    }
    let n: usize = t.scalar("n")?;
    let m: usize = t.scalar("m")?;
    let quant_bits: u32 = t.scalar("quant_bits")?;
    let tr = t.next_line()?;
    let transport = match (tr[0].as_str(), tr.get(1).map(String::as_str)) {
        ("transport", Some("bits")) if tr.len() == 2 => Transport::Bits,
        ("transport", Some("full_resolution")) if tr.len() == 2 => Transport::FullResolution,
        ("transport", Some("quantized_resolution")) if tr.len() >= 5 => {
            let alpha: f64 = t.parse(&tr[2])?;
            let beta: f64 = t.parse(&tr[3])?;
            let count: usize = t.parse(&tr[4])?;
            if tr.len() != 5 + count {
                return t.error("power count mismatch");
            }
            let powers = tr[5..].iter().map(|s| t.parse::<f64>(s)).collect::<Result<Vec<_>>>()?;
            Transport::QuantizedResolution { alpha, beta, powers }
        }
        _ => return t.error("invalid transport line"),
    };
    let stages: usize = t.scalar("stages")?;
    if !(1..=2).contains(&stages) {
        return t.error("stages must be 1 or 2");
    }
    let encoder = read_mlp(&mut t, "encoder")?;
    let decoder = read_mlp(&mut t, "decoder")?;
    let stage2 = if stages == 2 {
        Some(Stage2 { encoder: read_mlp(&mut t, "stage2_encoder")?, decoder: read_mlp(&mut t, "stage2_decoder")? })
    } else {
        None
    };
    t.finish()?;
    if encoder.input_width() != 2 * n || encoder.output_width() != m || decoder.input_width() != m || decoder.output_width() != 2 * n {
        return Err(Error::Parse { line: t.line(), msg: "network shapes do not match n and m".into() });
    }
    Ok(CodecModel { n, m, quant_bits, transport, encoder, decoder, stage2 })
}

pub fn save_model(model: &CodecModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CodecModel> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    read_model(BufReader::new(std::fs::File::open(path)?))
}
