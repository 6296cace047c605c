//! Little-endian binary container for matrices and coefficient sets.
//!
//! Layout: magic `BSLP`, format version, payload kind, system, `M`, `N`,
//! `a`, `b`, `theta`, `beta`, a 32-byte configuration hash, the block
//! table `(rows, cols, element offset)` and finally every block's `f64`
//! values row-major, back to back.

use std::io::{Read, Write};

use crate::basis::{BallGeometry, Bandlimit, SystemId};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::locmat::{LocalisationMatrix, Region};
use crate::slepian::SlepianBasis;

pub const MAGIC: &[u8; 4] = b"BSLP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    /// Blocks `P` and `Q` of the localisation matrix.
    Matrix = 1,
    /// A `Z x K` coefficient block and a `K x 1` eigenvalue block.
    Coefficients = 2,
}

impl PayloadKind {
    fn from_code(code: u32) -> Result<Self> {
        match code {
            1 => Ok(PayloadKind::Matrix),
            2 => Ok(PayloadKind::Coefficients),
            c => Err(Error::Format(format!("unknown payload kind {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub rows: u64,
    pub cols: u64,
}

impl BlockShape {
    fn len(&self) -> usize {
        (self.rows * self.cols) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHeader {
    pub kind: PayloadKind,
    pub sys: SystemId,
    pub bandlimit: Bandlimit,
    pub region: Region,
    pub geom: BallGeometry,
    pub config_hash: [u8; 32],
    pub blocks: Vec<BlockShape>,
}

pub fn write_binary<W: Write>(w: &mut W, header: &BinaryHeader, data: &[&[f64]]) -> Result<()> {
    if data.len() != header.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: header.blocks.len(),
            actual: data.len(),
        });
    }
    for (shape, block) in header.blocks.iter().zip(data) {
        if shape.len() != block.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                actual: block.len(),
            });
        }
    }
    let mut head = Vec::with_capacity(128);
    head.extend_from_slice(MAGIC);
    for v in [
        FORMAT_VERSION,
        header.kind as u32,
        header.sys.code(),
        header.bandlimit.max_radial() as u32,
        header.bandlimit.max_angular() as u32,
    ] {
        head.extend_from_slice(&v.to_le_bytes());
    }
    for v in [
        header.region.inner,
        header.region.outer,
        header.region.half_angle,
        header.geom.radius,
    ] {
        head.extend_from_slice(&v.to_le_bytes());
    }
    head.extend_from_slice(&header.config_hash);
    head.extend_from_slice(&(header.blocks.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for shape in &header.blocks {
        for v in [shape.rows, shape.cols, offset] {
            head.extend_from_slice(&v.to_le_bytes());
        }
        offset += shape.rows * shape.cols;
    }
    w.write_all(&head)?;

    let mut buf = Vec::with_capacity(1 << 16);
    for block in data {
        for chunk in block.chunks(8192) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

fn read_array<R: Read, const K: usize>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<(BinaryHeader, Vec<Vec<f64>>)> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = PayloadKind::from_code(read_u32(r)?)?;
    let sys = SystemId::from_code(read_u32(r)?)?;
    let mm = read_u32(r)? as usize;
    let nn = read_u32(r)? as usize;
    let bandlimit = Bandlimit::new(mm, nn)?;
    let (a, b, theta, beta) = (read_f64(r)?, read_f64(r)?, read_f64(r)?, read_f64(r)?);
    let geom = BallGeometry::new(beta)?;
    let region = Region::new(a, b, theta, &geom)?;
    let config_hash: [u8; 32] = read_array(r)?;
    let count = read_u32(r)? as usize;
    let mut blocks = Vec::with_capacity(count);
    let mut expected_offset = 0u64;
    for _ in 0..count {
        let (rows, cols, offset) = (read_u64(r)?, read_u64(r)?, read_u64(r)?);
        if offset != expected_offset {
            return Err(Error::Format("inconsistent block offsets".into()));
        }
        expected_offset += rows * cols;
        blocks.push(BlockShape { rows, cols });
    }
    let mut data = Vec::with_capacity(count);
    for shape in &blocks {
        let mut bytes = vec![0u8; shape.len() * 8];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::Format("truncated data".into()))?;
        data.push(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        );
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok((
        BinaryHeader {
            kind,
            sys,
            bandlimit,
            region,
            geom,
            config_hash,
            blocks,
        },
        data,
    ))
}

pub fn write_matrix<W: Write>(
    w: &mut W,
    k: &LocalisationMatrix,
    config_hash: [u8; 32],
) -> Result<()> {
    let (p, q) = (k.normal_block(), k.tangential_block());
    let header = BinaryHeader {
        kind: PayloadKind::Matrix,
        sys: k.sys,
        bandlimit: k.bandlimit,
        region: k.region,
        geom: k.geom,
        config_hash,
        blocks: vec![
            BlockShape {
                rows: p.dim() as u64,
                cols: p.dim() as u64,
            },
            BlockShape {
                rows: q.dim() as u64,
                cols: q.dim() as u64,
            },
        ],
    };
    write_binary(w, &header, &[p.as_slice(), q.as_slice()])
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<(LocalisationMatrix, [u8; 32])> {
    let (h, mut data) = read_binary(r)?;
    if h.kind != PayloadKind::Matrix || data.len() != 2 {
        return Err(Error::Format("not a matrix file".into()));
    }
    let q = data.pop().expect("two blocks");
    let p = data.pop().expect("two blocks");
    let p = SymMatrix::from_row_major(h.blocks[0].rows as usize, p)?;
    let q = SymMatrix::from_row_major(h.blocks[1].rows as usize, q)?;
    Ok((
        LocalisationMatrix::from_blocks(h.sys, h.bandlimit, h.region, h.geom, p, q)?,
        h.config_hash,
    ))
}

/// Coefficients of the first `count` functions (all if `None`), stored as
/// a `Z x K` matrix whose columns are the coefficient vectors.
pub fn write_coefficients<W: Write>(
    w: &mut W,
    basis: &SlepianBasis,
    count: Option<usize>,
    config_hash: [u8; 32],
) -> Result<()> {
    let k = count.unwrap_or(basis.len()).min(basis.len());
    let z = basis.bandlimit.dim();
    let mut coeffs = vec![0.0; z * k];
    for (col, f) in basis.functions.iter().take(k).enumerate() {
        for (&p, &v) in f.support.iter().zip(&f.values) {
            coeffs[p * k + col] = v;
        }
    }
    let lambdas: Vec<f64> = basis.functions.iter().take(k).map(|f| f.lambda).collect();
    let header = BinaryHeader {
        kind: PayloadKind::Coefficients,
        sys: basis.sys,
        bandlimit: basis.bandlimit,
        region: basis.region,
        geom: basis.geom,
        config_hash,
        blocks: vec![
            BlockShape {
                rows: z as u64,
                cols: k as u64,
            },
            BlockShape {
                rows: k as u64,
                cols: 1,
            },
        ],
    };
    write_binary(w, &header, &[&coeffs, &lambdas])
}

/// Stored coefficient set: `vectors[k]` is the `k`-th coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub header: BinaryHeader,
    pub vectors: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

pub fn read_coefficients<R: Read>(r: &mut R) -> Result<CoefficientSet> {
    let (header, data) = read_binary(r)?;
    if header.kind != PayloadKind::Coefficients || data.len() != 2 {
        return Err(Error::Format("not a coefficient file".into()));
    }
    let z = header.blocks[0].rows as usize;
    let k = header.blocks[0].cols as usize;
    if z != header.bandlimit.dim() || header.blocks[1].rows as usize != k {
        return Err(Error::Format(
            "coefficient block does not match bandlimit".into(),
        ));
    }
    let vectors = (0..k)
        .map(|col| (0..z).map(|p| data[0][p * k + col]).collect())
        .collect();
    Ok(CoefficientSet {
        header,
        vectors,
        eigenvalues: data[1].clone(),
    })
}
