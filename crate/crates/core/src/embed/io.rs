//! Embedding-file and autoencoder-checkpoint formats.
//!
//! Embedding file: header `#incbpe embed v1 <dim>`, then one
//! `symbol v1 … vdim` line per row in matrix order. Floats are written with
//! Rust's shortest round-trip formatting, so reading the file back
//! reproduces every value bit-for-bit.
//!
//! Checkpoint: little-endian binary. Magic `INCAE1`, four u32 layer widths
//! (input, first hidden, bottleneck, third hidden), then row-major f64
//! weight and bias blocks in layer order.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

use super::autoencoder::Layer;
use super::{Autoencoder, EmbeddingMatrix, ReconstructionLoss};

pub const EMBED_HEADER_PREFIX: &str = "#incbpe embed v1";
pub const AE_MAGIC: &[u8; 6] = b"INCAE1";

pub fn write_embedding<W: Write>(matrix: &EmbeddingMatrix, mut writer: W) -> Result<()> {
    writeln!(writer, "{EMBED_HEADER_PREFIX} {}", matrix.dim())?;
    for (symbol, row) in matrix.iter() {
        write!(writer, "{symbol}")?;
        for value in row {
            write!(writer, " {value}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_embedding<R: BufRead>(reader: R) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Parse("empty embedding file".to_string())),
    };
    let dim: usize = header
        .strip_prefix(EMBED_HEADER_PREFIX)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "bad embedding header: expected `{EMBED_HEADER_PREFIX} <dim>`, found `{header}`"
            ))
        })?;
    let mut matrix = EmbeddingMatrix::new(dim)?;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let symbol = fields.next().unwrap_or_default();
        if symbol.is_empty() {
            return Err(Error::Parse(format!("embedding line {}: no symbol", idx + 2)));
        }
        let row: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("embedding line {}: bad float `{f}`", idx + 2)))
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::Parse(format!(
                "embedding line {}: {} values, expected {dim}",
                idx + 2,
                row.len()
            )));
        }
        matrix
            .insert(symbol.to_string(), row)
            .map_err(|e| Error::Parse(format!("embedding line {}: {e}", idx + 2)))?;
    }
    Ok(matrix)
}

pub fn read_embedding_path(path: &std::path::Path) -> Result<EmbeddingMatrix> {
    let file = std::fs::File::open(path)?;
    read_embedding(std::io::BufReader::new(file))
}

fn write_f64s<W: Write>(writer: &mut W, values: impl IntoIterator<Item = f64>) -> Result<()> {
    for value in values {
        writer.write_all(&value.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_ae_checkpoint<W: Write>(net: &Autoencoder, mut writer: W) -> Result<()> {
    writer.write_all(AE_MAGIC)?;
    let wide = 2 * net.dim();
    for width in [wide, wide, net.dim(), wide] {
        writer.write_all(&(width as u32).to_le_bytes())?;
    }
    for layer in net.layers() {
        write_f64s(&mut writer, layer.weight.iter().copied())?;
        write_f64s(&mut writer, layer.bias.iter().copied())?;
    }
    Ok(())
}

fn read_exact_f64s<R: Read>(reader: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    reader.read_exact(&mut buf).map_err(|e| {
        Error::Parse(format!("truncated autoencoder checkpoint: {e}"))
    })?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of 8")))
        .collect())
}

pub fn read_ae_checkpoint<R: Read>(mut reader: R, loss: ReconstructionLoss) -> Result<Autoencoder> {
    let mut magic = [0u8; 6];
    reader
        .read_exact(&mut magic)
        .map_err(|e| Error::Parse(format!("truncated autoencoder checkpoint: {e}")))?;
    if &magic != AE_MAGIC {
        return Err(Error::Parse("bad autoencoder checkpoint magic".to_string()));
    }
    let mut dims = [0usize; 4];
    for dim in &mut dims {
        let mut buf = [0u8; 4];
        reader
            .read_exact(&mut buf)
            .map_err(|e| Error::Parse(format!("truncated autoencoder checkpoint: {e}")))?;
        *dim = u32::from_le_bytes(buf) as usize;
    }
    let [input, h1, bottleneck, h3] = dims;
    if bottleneck == 0 || input != 2 * bottleneck || h1 != input || h3 != input {
        return Err(Error::Parse(format!(
            "inconsistent checkpoint dims {dims:?}: expected (2d, 2d, d, 2d)"
        )));
    }
    let shapes = [(h1, input), (bottleneck, h1), (h3, bottleneck), (input, h3)];
    let mut layers = Vec::with_capacity(4);
    for (rows, cols) in shapes {
        let weight_values = read_exact_f64s(&mut reader, rows * cols)?;
        let weight = ndarray::Array2::from_shape_vec((rows, cols), weight_values)
            .expect("length matches shape");
        let bias = ndarray::Array1::from_vec(read_exact_f64s(&mut reader, rows)?);
        layers.push(Layer { weight, bias });
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Parse(
            "trailing bytes after autoencoder checkpoint".to_string(),
        ));
    }
    Ok(Autoencoder::from_layers(bottleneck, layers, loss))
}

#[cfg(test)]
mod tests {
    use super::super::{extend_matrix, EmbedInitializer, InitStrategy};
    use super::*;
    use crate::bpe::InventoryDelta;

    #[test]
    fn embedding_round_trip_is_exact() {
        let matrix = EmbeddingMatrix::from_rows(
            3,
            [
                ("a".to_string(), vec![0.1, -2.5e-17, 3.0]),
                ("b@@x".to_string(), vec![1.0 / 3.0, f64::MIN_POSITIVE, -0.0]),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_embedding(&matrix, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#incbpe embed v1 3\n"));
        let back = read_embedding(&buf[..]).unwrap();
        assert_eq!(back, matrix);

        // Writing again yields identical bytes.
        let mut buf2 = Vec::new();
        write_embedding(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn embedding_read_rejects_malformed_input() {
        assert!(read_embedding("".as_bytes()).is_err());
        assert!(read_embedding("#wrong 3\n".as_bytes()).is_err());
        assert!(read_embedding("#incbpe embed v1 2\na 1.0\n".as_bytes()).is_err());
        assert!(read_embedding("#incbpe embed v1 2\na 1.0 zz\n".as_bytes()).is_err());
        assert!(
            read_embedding("#incbpe embed v1 2\na 1 2\na 3 4\n".as_bytes()).is_err(),
            "duplicate symbol must be rejected"
        );
    }

    #[test]
    fn ae_checkpoint_round_trip() {
        let net = Autoencoder::new(3, 9, ReconstructionLoss::SquaredError).unwrap();
        let mut buf = Vec::new();
        write_ae_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(&buf[..6], AE_MAGIC);
        let back = read_ae_checkpoint(&buf[..], ReconstructionLoss::SquaredError).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn ae_checkpoint_rejects_corruption() {
        let net = Autoencoder::new(2, 0, ReconstructionLoss::SquaredError).unwrap();
        let mut buf = Vec::new();
        write_ae_checkpoint(&net, &mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(read_ae_checkpoint(&bad_magic[..], ReconstructionLoss::SquaredError).is_err());

        let truncated = &buf[..buf.len() - 3];
        assert!(read_ae_checkpoint(truncated, ReconstructionLoss::SquaredError).is_err());

        let mut padded = buf.clone();
        padded.push(0);
        assert!(read_ae_checkpoint(&padded[..], ReconstructionLoss::SquaredError).is_err());
    }

    #[test]
    fn checkpoint_resume_reproduces_extension() {
        // Extending with a restored net must give the same rows as carrying
        // the initializer through in memory.
        let matrix = EmbeddingMatrix::from_rows(
            2,
            [
                ("a".to_string(), vec![0.2, -0.4]),
                ("b".to_string(), vec![0.9, 0.1]),
            ],
        )
        .unwrap();
        let config = super::super::AutoencoderConfig {
            epochs: 5,
            ..Default::default()
        };
        let batch = [InventoryDelta {
            symbol: "ab".to_string(),
            left: "a".to_string(),
            right: "b".to_string(),
        }];

        let mut warm = EmbedInitializer::new(InitStrategy::Ae(config.clone())).unwrap();
        let first = extend_matrix(&matrix, &batch, &mut warm).unwrap();

        let mut buf = Vec::new();
        write_ae_checkpoint(warm.autoencoder().unwrap(), &mut buf).unwrap();
        let restored = read_ae_checkpoint(&buf[..], ReconstructionLoss::SquaredError).unwrap();
        assert_eq!(restored, *warm.autoencoder().unwrap());

        let batch2 = [InventoryDelta {
            symbol: "ba".to_string(),
            left: "b".to_string(),
            right: "a".to_string(),
        }];
        let mut resumed =
            EmbedInitializer::with_autoencoder(InitStrategy::Ae(config.clone()), restored)
                .unwrap();
        let via_checkpoint = extend_matrix(&first, &batch2, &mut resumed).unwrap();
        let via_memory = extend_matrix(&first, &batch2, &mut warm).unwrap();
        assert_eq!(via_checkpoint, via_memory);
    }
}
