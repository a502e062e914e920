//! Plain-text tensor files.
//!
//! ```text
//! dims: 2 2 2
//! 1.0000000000000000e0 2.0000000000000000e0
//! ...
//! ```
//!
//! The first line lists the dimensions; the rest is whitespace-separated
//! decimal values in storage order. The writer emits one mode-1 fiber per
//! line with 17 significant digits, which round-trips every `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseTensor;
use crate::error::{Error, Result};

pub fn write_tensor<W: Write>(mut out: W, t: &DenseTensor) -> Result<()> {
    let dims: Vec<String> = t.dims().iter().map(|n| n.to_string()).collect();
    writeln!(out, "dims: {}", dims.join(" "))?;
    for fiber in t.data().chunks(t.dims()[0]) {
        let line: Vec<String> = fiber.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(input: R) -> Result<DenseTensor> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })??;
    let spec = header.trim().strip_prefix("dims:").ok_or(Error::Parse {
        line: 1,
        msg: "expected `dims:` header".into(),
    })?;
    let dims = spec
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|e| Error::Parse {
                line: 1,
                msg: format!("bad dimension `{tok}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut data = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            let x = tok.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 2,
                msg: format!("bad value `{tok}`: {e}"),
            })?;
            data.push(x);
        }
    }
    DenseTensor::new(dims, data)
}

pub fn write_tensor_file(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_tensor(&mut out, t)?;
    out.flush()?;
    Ok(())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor(File::open(path)?)
}
