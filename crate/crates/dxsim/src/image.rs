//! Binary memory images.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   b"DXIM"
//! version u16 (1)
//! count   u32
//! count times:
//!   name_len u16, name (UTF-8), dtype u8, len u64,
//!   len elements of the dtype's width
//! ```
//!
//! Type codes: 0 u32, 1 i32, 2 f32, 3 u64, 4 i64, 5 f64. Tile dumps use the
//! same layout with one entry `t<k>` per produced tile.

use std::io::{self, Read, Write};
use std::path::Path;

use dxsim_core::program::{ArrayData, ArrayInit};
use dxsim_core::scratchpad::TileData;
use dxsim_core::{DType, MemoryImage, Program};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"DXIM";
const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an image file (bad magic)")]
    Magic,
    #[error("unsupported image version {0}")]
    Version(u16),
    #[error("unknown type code {0}")]
    TypeCode(u8),
    #[error("array name is not UTF-8")]
    Name,
    #[error("{path}: {source}")]
    File {
        path: String,
        source: Box<ImageError>,
    },
    #[error("{0}")]
    Mismatch(String),
}

fn code(d: DType) -> u8 {
    DType::ALL.iter().position(|&x| x == d).unwrap() as u8
}

pub fn write_image(w: &mut impl Write, arrays: &[ArrayData]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for a in arrays {
        w.write_all(&(a.name.len() as u16).to_le_bytes())?;
        w.write_all(a.name.as_bytes())?;
        w.write_all(&[code(a.dtype)])?;
        w.write_all(&(a.words.len() as u64).to_le_bytes())?;
        let width = a.dtype.width() as usize;
        let mut buf = Vec::with_capacity(a.words.len() * width);
        for &x in &a.words {
            buf.extend_from_slice(&x.to_le_bytes()[..width]);
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut b = [0; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_image(r: &mut impl Read) -> Result<Vec<ArrayData>, ImageError> {
    if &take::<4>(r)? != MAGIC {
        return Err(ImageError::Magic);
    }
    let v = u16::from_le_bytes(take(r)?);
    if v != VERSION {
        return Err(ImageError::Version(v));
    }
    let count = u32::from_le_bytes(take(r)?);
    let mut out = Vec::new();
    for _ in 0..count {
        let n = u16::from_le_bytes(take(r)?) as usize;
        let mut name = vec![0; n];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| ImageError::Name)?;
        let c = take::<1>(r)?[0];
        let dtype = *DType::ALL.get(c as usize).ok_or(ImageError::TypeCode(c))?;
        let len = u64::from_le_bytes(take(r)?) as usize;
        let width = dtype.width() as usize;
        let mut raw = Vec::new();
        r.take((len * width) as u64).read_to_end(&mut raw)?;
        if raw.len() != len * width {
            return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into());
        }
        let words = raw
            .chunks_exact(width)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..width].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect();
        out.push(ArrayData { name, dtype, words });
    }
    Ok(out)
}

pub fn save_image(path: &Path, arrays: &[ArrayData]) -> Result<(), ImageError> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_image(&mut f, arrays)?;
    f.flush()?;
    Ok(())
}

pub fn load_image(path: &Path) -> Result<Vec<ArrayData>, ImageError> {
    let f = std::fs::File::open(path).map_err(|e| ImageError::File {
        path: path.display().to_string(),
        source: Box::new(e.into()),
    })?;
    read_image(&mut io::BufReader::new(f)).map_err(|e| ImageError::File {
        path: path.display().to_string(),
        source: Box::new(e),
    })
}

/// Tiles holding data, as image entries named `t<k>`.
pub fn tile_entries(tiles: &[TileData]) -> Vec<ArrayData> {
    tiles
        .iter()
        .enumerate()
        .filter_map(|(k, t)| {
            let dtype = t.dtype?;
            Some(ArrayData {
                name: format!("t{k}"),
                dtype,
                words: t.words[..t.size.min(t.words.len())].to_vec(),
            })
        })
        .collect()
}

/// Initial image of `program`, reading `init file` arrays relative to `dir`.
/// A file supplies the entry with the array's name, or its only entry.
pub fn initial_image(program: &Program, dir: &Path) -> Result<MemoryImage, ImageError> {
    let mut img = MemoryImage::from_program(program);
    for (k, a) in program.arrays.iter().enumerate() {
        let ArrayInit::File(f) = &a.init else {
            continue;
        };
        let entries = load_image(&dir.join(f))?;
        let e = match entries.iter().find(|e| e.name == a.name) {
            Some(e) => e,
            None if entries.len() == 1 => &entries[0],
            None => {
                return Err(ImageError::Mismatch(format!(
                    "{f} has no entry for array {}",
                    a.name
                )))
            }
        };
        if e.dtype != a.dtype || e.words.len() as u64 != a.len {
            return Err(ImageError::Mismatch(format!(
                "{f}: array {} is {} x {} but the file holds {} x {}",
                a.name,
                a.dtype,
                a.len,
                e.dtype,
                e.words.len()
            )));
        }
        img.arrays[k].words = e.words.clone();
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_array() -> impl Strategy<Value = ArrayData> {
        (
            "[a-zA-Z_][a-zA-Z0-9_]{0,8}",
            0..6usize,
            prop::collection::vec(any::<u64>(), 0..40),
        )
            .prop_map(|(name, d, words)| {
                let dtype = DType::ALL[d];
                ArrayData {
                    name,
                    dtype,
                    words: words.into_iter().map(|w| w & dtype.mask()).collect(),
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip(arrays in prop::collection::vec(arb_array(), 0..5)) {
            let mut buf = Vec::new();
            write_image(&mut buf, &arrays).unwrap();
            prop_assert_eq!(read_image(&mut buf.as_slice()).unwrap(), arrays);
        }
    }

    #[test]
    fn header_bytes() {
        let a = ArrayData {
            name: "B".into(),
            dtype: DType::U32,
            words: vec![1, 0xdead_beef],
        };
        let mut buf = Vec::new();
        write_image(&mut buf, &[a]).unwrap();
        let want: Vec<u8> = [
            &b"DXIM"[..],
            &[1, 0],
            &[1, 0, 0, 0],
            &[1, 0],
            b"B",
            &[0],
            &[2, 0, 0, 0, 0, 0, 0, 0],
            &[1, 0, 0, 0],
            &[0xef, 0xbe, 0xad, 0xde],
        ]
        .concat();
        assert_eq!(buf, want);
    }

    #[test]
    fn corrupt_input() {
        assert!(matches!(
            read_image(&mut &b"NOPE\x01\x00"[..]),
            Err(ImageError::Magic)
        ));
        let mut buf = Vec::new();
        write_image(
            &mut buf,
            &[ArrayData {
                name: "x".into(),
                dtype: DType::F64,
                words: vec![1, 2],
            }],
        )
        .unwrap();
        buf.pop();
        assert!(read_image(&mut buf.as_slice()).is_err());
        buf[4] = 9;
        assert!(matches!(
            read_image(&mut buf.as_slice()),
            Err(ImageError::Version(9))
        ));
    }

    #[test]
    fn file_init() {
        let dir = tempfile::tempdir().unwrap();
        let data = ArrayData {
            name: "idx".into(),
            dtype: DType::U32,
            words: vec![3, 1, 2],
        };
        save_image(&dir.path().join("b.bin"), &[data]).unwrap();
        let mut p = Program::default();
        p.declare("B", DType::U32, 3, ArrayInit::File("b.bin".into()));
        let img = initial_image(&p, dir.path()).unwrap();
        assert_eq!(img.arrays[0].words, [3, 1, 2]);
        p.arrays[0].len = 4;
        assert!(matches!(
            initial_image(&p, dir.path()),
            Err(ImageError::Mismatch(_))
        ));
        p.arrays[0].init = ArrayInit::File("missing.bin".into());
        assert!(initial_image(&p, dir.path())
            .unwrap_err()
            .to_string()
            .contains("missing.bin"));
    }
}
