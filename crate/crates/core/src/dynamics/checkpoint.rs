//! Binary checkpoints, little-endian:
//! magic `STRN1\0`, u64 n, f64 L, f64 t, f64 ν, u8 equation code, then the
//! six real-space components xx, xy, xz, yy, yz, zz, each n³ f64 x-fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Equation;
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RealField, RealTensor, SymTensor};

pub const MAGIC: &[u8; 6] = b"STRN1\0";

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub t: f64,
    pub nu: f64,
    pub equation: Equation,
    pub strain: RealTensor,
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let spec = self.strain.spec();
        w.write_all(MAGIC)?;
        w.write_all(&(spec.n as u64).to_le_bytes())?;
        w.write_all(&spec.box_length.to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&self.nu.to_le_bytes())?;
        w.write_all(&[self.equation.code()])?;
        for c in &self.strain.c {
            for v in c.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a checkpoint; with `expected_n`, a different resolution is an error.
    pub fn read_from(r: &mut impl Read, expected_n: Option<usize>) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
        }
        let n = read_u64(r)? as usize;
        if let Some(want) = expected_n {
            if n != want {
                return Err(Error::Checkpoint(format!(
                    "checkpoint has n = {n}, expected {want}"
                )));
            }
        }
        let box_length = read_f64(r)?;
        let spec = GridSpec::new(n, box_length)
            .map_err(|e| Error::Checkpoint(format!("invalid grid in header: {e}")))?;
        let t = read_f64(r)?;
        let nu = read_f64(r)?;
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let equation = Equation::from_code(code[0])
            .ok_or_else(|| Error::Checkpoint(format!("unknown equation code {}", code[0])))?;
        let mut comps = Vec::with_capacity(6);
        let mut buf = vec![0u8; 8 * spec.len()];
        for _ in 0..6 {
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            comps.push(RealField::from_vec(spec, data)?);
        }
        let strain = SymTensor::new(comps.try_into().expect("six components"));
        Ok(Self {
            t,
            nu,
            equation,
            strain,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>, expected_n: Option<usize>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?), expected_n)
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_real;

    fn sample() -> Checkpoint {
        let spec = GridSpec::new(8, 16.0).unwrap();
        let strain = SymTensor::new([0, 1, 2, 3, 4, 5].map(|c| random_real(spec, c)));
        Checkpoint {
            t: 0.25,
            nu: 0.5,
            equation: Equation::FullStrain,
            strain,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        ck.write(&path).unwrap();
        let back = Checkpoint::read(&path, Some(8)).unwrap();
        assert_eq!(back.t, ck.t);
        assert_eq!(back.nu, ck.nu);
        assert_eq!(back.equation, ck.equation);
        assert_eq!(back.strain.spec(), ck.strain.spec());
        for c in 0..6 {
            assert_eq!(back.strain.c[c].data(), ck.strain.c[c].data());
        }
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 6 + 8 * 4 + 1 + 6 * 8 * 512);
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..6], b"STRN1\0");
        assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[14..22].try_into().unwrap()), 16.0);
        assert_eq!(bytes[38], Equation::FullStrain.code());
    }

    #[test]
    fn rejects_bad_magic_and_resolution() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        assert!(matches!(
            Checkpoint::read_from(&mut bytes.as_slice(), Some(16)),
            Err(Error::Checkpoint(_))
        ));
        bytes[4] = b'2';
        assert!(matches!(
            Checkpoint::read_from(&mut bytes.as_slice(), None),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn truncated_file_is_an_error() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        bytes.truncate(100);
        assert!(Checkpoint::read_from(&mut bytes.as_slice(), None).is_err());
    }
}
