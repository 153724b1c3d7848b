use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{rank, BitMatrix, BitVector};

/// Kernel quality figures as published alongside a kernel. Stored only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelMeta {
    pub rate_of_polarization: Option<f64>,
    pub scaling_exponent: Option<f64>,
}

/// A non-singular `l x l` binary polarization kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    matrix: BitMatrix,
    name: String,
    meta: Option<KernelMeta>,
}

impl Kernel {
    pub fn new(matrix: BitMatrix, name: impl Into<String>) -> Result<Self> {
        if matrix.n_rows() != matrix.n_cols() || matrix.n_rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "kernel must be square, got {}x{}",
                matrix.n_rows(),
                matrix.n_cols()
            )));
        }
        let r = rank(&matrix);
        if r != matrix.n_rows() {
            return Err(Error::Singular {
                rank: r,
                size: matrix.n_rows(),
            });
        }
        Ok(Self {
            matrix,
            name: name.into(),
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: KernelMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn size(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn row(&self, j: usize) -> &BitVector {
        self.matrix.row(j)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn meta(&self) -> Option<&KernelMeta> {
        self.meta.as_ref()
    }

    /// `u · K` for a kernel input vector `u`.
    pub fn encode(&self, u: &BitVector) -> BitVector {
        self.matrix.left_mul(u)
    }

    pub fn parse(text: &str, name: impl Into<String>) -> Result<Self> {
        Self::new(BitMatrix::parse(text)?, name)
    }

    /// Loads a kernel file, picking up an optional `<path>.meta` sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("kernel")
            .to_string();
        let mut kernel = Self::parse(&text, stem)?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".meta");
        let sidecar = Path::new(&sidecar);
        if sidecar.exists() {
            let (name, meta) = parse_meta(&fs::read_to_string(sidecar)?)?;
            if let Some(name) = name {
                kernel.name = name;
            }
            kernel.meta = Some(meta);
        }
        Ok(kernel)
    }
}

/// Sidecar format: `name <text>`, `E <decimal>`, `mu <decimal>`, one per line.
pub fn parse_meta(text: &str) -> Result<(Option<String>, KernelMeta)> {
    let mut name = None;
    let mut meta = KernelMeta::default();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(char::is_whitespace).ok_or(Error::Parse {
            line: k + 1,
            msg: "expected '<key> <value>'".into(),
        })?;
        let value = value.trim();
        let number = || {
            value.parse::<f64>().map_err(|e| Error::Parse {
                line: k + 1,
                msg: format!("bad number {value:?}: {e}"),
            })
        };
        match key {
            "name" => name = Some(value.to_string()),
            "E" => meta.rate_of_polarization = Some(number()?),
            "mu" => meta.scaling_exponent = Some(number()?),
            other => {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("unknown key {other:?}"),
                })
            }
        }
    }
    Ok((name, meta))
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    x.reverse_bits() >> (usize::BITS - bits)
}

/// `B_mu F_2^{⊗mu}`: the Kronecker power of the Arikan kernel with its rows
/// permuted by bit reversal.
pub fn make_arikan_kernel(mu: u32) -> Result<Kernel> {
    if mu == 0 {
        return Err(Error::Invalid("mu must be at least 1".into()));
    }
    let f2 = BitMatrix::from_u8_rows(&[&[1, 0], &[1, 1]]);
    let mut power = f2.clone();
    for _ in 1..mu {
        power = power.kron(&f2);
    }
    let l = power.n_rows();
    let rows = (0..l)
        .map(|r| power.row(bit_reverse(r, mu)).clone())
        .collect();
    Kernel::new(BitMatrix::from_rows(l, rows)?, format!("arikan{l}"))
}

/// Uniformly random non-singular kernel (rejection sampling).
pub fn random_kernel(l: usize, rng: &mut impl Rng) -> Kernel {
    loop {
        let rows = (0..l)
            .map(|_| BitVector::from_bits(&(0..l).map(|_| rng.random()).collect::<Vec<_>>()))
            .collect();
        let m = BitMatrix::from_rows(l, rows).expect("rows have length l");
        if let Ok(k) = Kernel::new(m, format!("random{l}")) {
            return k;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arikan_kernels() {
        let f2 = make_arikan_kernel(1).unwrap();
        assert_eq!(f2.matrix(), &BitMatrix::from_u8_rows(&[&[1, 0], &[1, 1]]));

        let k4 = make_arikan_kernel(2).unwrap();
        let f = BitMatrix::from_u8_rows(&[&[1, 0], &[1, 1]]);
        let p = f.kron(&f);
        for (r, src) in [0, 2, 1, 3].into_iter().enumerate() {
            assert_eq!(k4.row(r), p.row(src));
        }
        for mu in 1..=5 {
            let k = make_arikan_kernel(mu).unwrap();
            assert_eq!(rank(k.matrix()), 1 << mu);
        }
    }

    #[test]
    fn rejects_singular_and_non_square() {
        let s = BitMatrix::from_u8_rows(&[&[1, 1], &[1, 1]]);
        assert!(matches!(Kernel::new(s, "s"), Err(Error::Singular { rank: 1, size: 2 })));
        let r = BitMatrix::from_u8_rows(&[&[1, 1, 0]]);
        assert!(Kernel::new(r, "r").is_err());
    }

    #[test]
    fn meta_sidecar() {
        let (name, meta) = parse_meta("name K32r\nE 0.52194\nmu 3.42111\n").unwrap();
        assert_eq!(name.as_deref(), Some("K32r"));
        assert_eq!(meta.rate_of_polarization, Some(0.52194));
        assert_eq!(meta.scaling_exponent, Some(3.42111));
        assert!(matches!(parse_meta("E abc"), Err(Error::Parse { line: 1, .. })));
    }
}
