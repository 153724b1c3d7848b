//! Extended kernel codes, their section codes, and the block decomposition of a
//! section generator used to combine two adjacent sections.
//!
//! Coset indices are little-endian selector integers: bit `b` of an index
//! selects row `b` of the relevant `G'` block.

use crate::error::{Error, Result};
use crate::gf2::{canonical_basis, minimum_span_form, BitMatrix, BitVector, EchelonBasis};
use crate::kernel::Kernel;

/// The `(l+1, l-i)` code generated by the last `l-i` kernel rows, extended by a
/// column that marks the row carrying `u_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCode {
    pub phase: usize,
    pub generator: BitMatrix,
}

impl ExtendedCode {
    /// Kernel size `l`; the generator has `l + 1` columns.
    pub fn len(&self) -> usize {
        self.generator.n_cols() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn extended_code(k: &Kernel, i: usize) -> Result<ExtendedCode> {
    let l = k.size();
    if i >= l {
        return Err(Error::OutOfRange { index: i, limit: l });
    }
    let rows = (i..l)
        .map(|r| {
            let mut row = k.row(r).concat(&BitVector::zeros(1));
            if r == i {
                row.set(l, true);
            }
            row
        })
        .collect();
    Ok(ExtendedCode {
        phase: i,
        generator: BitMatrix::from_rows(l + 1, rows)?,
    })
}

/// Generators of the punctured code `p_{x,y}` and the shortened code `s_{x,y}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionCodes {
    pub p_gen: BitMatrix,
    pub s_gen: BitMatrix,
}

/// Canonical bases of `p_{x,y}` and `s_{x,y}` as row lists.
fn section_bases(g: &BitMatrix, x: usize, y: usize) -> (Vec<BitVector>, Vec<BitVector>) {
    let width = y - x;
    let inside: Vec<BitVector> = g.rows().iter().map(|r| r.slice(x, y)).collect();
    let p = canonical_basis(width, &inside);
    let n = g.n_cols();
    let outside: Vec<BitVector> = g
        .rows()
        .iter()
        .map(|r| r.slice(0, x).concat(&r.slice(y, n)))
        .collect();
    let kernel = EchelonBasis::from_rows(n - width, &outside);
    let s_words: Vec<BitVector> = kernel
        .left_kernel()
        .iter()
        .map(|alpha| {
            let mut w = BitVector::zeros(width);
            for (k, row) in inside.iter().enumerate() {
                if alpha.get(k) {
                    w ^= row;
                }
            }
            w
        })
        .collect();
    let s = canonical_basis(width, &s_words);
    (p, s)
}

/// Section codes of `c` on `[x, y)`. The extension column is never part of a
/// section, so shortening always forces it to zero.
pub fn section_codes(c: &ExtendedCode, x: usize, y: usize) -> Result<SectionCodes> {
    let l = c.len();
    if x >= y || y > l {
        return Err(Error::Invalid(format!("bad section [{x},{y}) for length {l}")));
    }
    let (p, s) = section_bases(&c.generator, x, y);
    Ok(SectionCodes {
        p_gen: BitMatrix::from_rows(y - x, p)?,
        s_gen: BitMatrix::from_rows(y - x, s)?,
    })
}

/// Canonical section bases of every extended code of a kernel, for every
/// section `[x, y)`.
#[derive(Clone, Debug)]
pub struct CodeTable {
    l: usize,
    p: Vec<Vec<BitVector>>,
    s: Vec<Vec<BitVector>>,
}

impl CodeTable {
    pub fn new(k: &Kernel) -> Self {
        let l = k.size();
        let slots = l * (l + 1) * (l + 1);
        let mut p = vec![Vec::new(); slots];
        let mut s = vec![Vec::new(); slots];
        for i in 0..l {
            let code = extended_code(k, i).expect("phase in range");
            for x in 0..l {
                for y in x + 1..=l {
                    let (pp, ss) = section_bases(&code.generator, x, y);
                    let at = Self::slot(l, i, x, y);
                    p[at] = pp;
                    s[at] = ss;
                }
            }
        }
        Self { l, p, s }
    }

    fn slot(l: usize, i: usize, x: usize, y: usize) -> usize {
        (i * (l + 1) + x) * (l + 1) + y
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn p(&self, i: usize, x: usize, y: usize) -> &[BitVector] {
        &self.p[Self::slot(self.l, i, x, y)]
    }

    pub fn s(&self, i: usize, x: usize, y: usize) -> &[BitVector] {
        &self.s[Self::slot(self.l, i, x, y)]
    }

    /// Number of cosets bits `dim p - dim s` of section `[x, y)` at phase `i`.
    pub fn k_prime(&self, i: usize, x: usize, y: usize) -> usize {
        self.p(i, x, y).len() - self.s(i, x, y).len()
    }

    /// Whether both section codes of `[x, y)` coincide at phases `a` and `b`.
    pub fn same_codes(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        self.p(a, x, y) == self.p(b, x, y) && self.s(a, x, y) == self.s(b, x, y)
    }

    pub fn same_shortened(&self, a: usize, b: usize, x: usize, y: usize) -> bool {
        self.s(a, x, y) == self.s(b, x, y)
    }

    /// `s_{x,z} ⊕ s_{z,y}` and `s_{x,y}` at phase i, as `(k'', f)` where
    /// `f` records whether the all-ones word is in `s_{x,y}` but not in the
    /// direct sum of the two halves.
    pub fn split_dims(&self, i: usize, x: usize, z: usize, y: usize) -> (usize, bool) {
        let sl = self.s(i, x, z).len();
        let sr = self.s(i, z, y).len();
        let s = self.s(i, x, y);
        let kdd = s.len() - sl - sr;
        let ones = BitVector::ones(y - x);
        let in_s = EchelonBasis::from_rows(y - x, s).contains(&ones);
        let in_halves = {
            let halves = padded_halves(self.s(i, x, z), self.s(i, z, y), x, z, y);
            EchelonBasis::from_rows(y - x, &halves).contains(&ones)
        };
        (kdd, in_s && !in_halves)
    }
}

/// `s_left` and `s_right` rows padded with zeros to the full section width.
pub fn padded_halves(
    s_left: &[BitVector],
    s_right: &[BitVector],
    x: usize,
    z: usize,
    y: usize,
) -> Vec<BitVector> {
    let w = y - x;
    let mut out = Vec::with_capacity(s_left.len() + s_right.len());
    for r in s_left {
        let mut v = BitVector::zeros(w);
        v.place(0, r);
        out.push(v);
    }
    for r in s_right {
        let mut v = BitVector::zeros(w);
        v.place(z - x, r);
        out.push(v);
    }
    out
}

/// Rows from `candidates` (in order) that extend `base` to a basis of
/// `span(base ∪ candidates)`.
pub fn complement(len: usize, base: &[BitVector], candidates: &[BitVector]) -> Vec<BitVector> {
    let mut acc = EchelonBasis::from_rows(len, base);
    let mut out = Vec::new();
    for c in candidates {
        if !acc.contains(c) {
            out.push(c.clone());
            let rows: Vec<BitVector> = base.iter().chain(out.iter()).cloned().collect();
            acc = EchelonBasis::from_rows(len, &rows);
        }
    }
    out
}

/// Candidate order for complements: rows of the minimum span form of the
/// given (full rank) basis.
pub fn msf_rows(len: usize, basis: &[BitVector]) -> Vec<BitVector> {
    if basis.is_empty() {
        return Vec::new();
    }
    let m = BitMatrix::from_rows(len, basis.to_vec()).expect("consistent lengths");
    minimum_span_form(&m)
        .expect("canonical bases have full rank")
        .matrix
        .into_rows()
}

/// Coset representatives of a section: the `G'` rows of its table index.
pub fn coset_rows(len: usize, p: &[BitVector], s: &[BitVector]) -> Vec<BitVector> {
    complement(len, s, &msf_rows(len, p))
}

/// Child-side view needed to translate a word into a child coset index.
#[derive(Clone, Debug)]
pub struct IndexBasis {
    s_len: usize,
    basis: EchelonBasis,
}

impl IndexBasis {
    pub fn new(len: usize, s: &[BitVector], g_prime: &[BitVector]) -> Self {
        let rows: Vec<BitVector> = s.iter().chain(g_prime.iter()).cloned().collect();
        Self {
            s_len: s.len(),
            basis: EchelonBasis::from_rows(len, &rows),
        }
    }

    /// Coset index of `word`, or `None` when it lies outside `p`.
    pub fn index_of(&self, word: &BitVector) -> Option<u64> {
        let combo = self.basis.solve(word)?;
        let mut idx = 0u64;
        for b in self.s_len..combo.len() {
            if combo.get(b) {
                idx |= 1 << (b - self.s_len);
            }
        }
        Some(idx)
    }
}

/// Block decomposition of a section `[x, y)` split at `z`.
///
/// Rows of `g_dprime` (`G''`, k'' rows) together with the padded shortened
/// codes of both halves generate `s_{x,y}`; rows of `g_prime` (`G'`, k' rows)
/// select the cosets of `p_{x,y} / s_{x,y}`. `map_left[r]` / `map_right[r]`
/// give the child coset index reached by row `r` of `(G''; G')`, so that for a
/// selector `(w v)` the left index is the XOR of the selected entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionDecomposition {
    pub phase: usize,
    pub x: usize,
    pub z: usize,
    pub y: usize,
    pub g_s_left: Vec<BitVector>,
    pub g_s_right: Vec<BitVector>,
    pub g_dprime: Vec<BitVector>,
    pub g_prime: Vec<BitVector>,
    pub k_prime: usize,
    pub k_dprime: usize,
    pub map_left: Vec<u64>,
    pub map_right: Vec<u64>,
    pub has_all_ones_shortened: bool,
}

impl SectionDecomposition {
    /// Builds the decomposition from explicit `G''` and `G'` rows and the
    /// index bases of both children.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        phase: usize,
        (x, z, y): (usize, usize, usize),
        g_s_left: Vec<BitVector>,
        g_s_right: Vec<BitVector>,
        g_dprime: Vec<BitVector>,
        g_prime: Vec<BitVector>,
        left: &IndexBasis,
        right: &IndexBasis,
        has_all_ones_shortened: bool,
    ) -> Self {
        let mut map_left = Vec::with_capacity(g_dprime.len() + g_prime.len());
        let mut map_right = Vec::with_capacity(g_dprime.len() + g_prime.len());
        for row in g_dprime.iter().chain(g_prime.iter()) {
            map_left.push(
                left.index_of(&row.slice(0, z - x))
                    .expect("left half of a section word lies in the left punctured code"),
            );
            map_right.push(
                right
                    .index_of(&row.slice(z - x, y - x))
                    .expect("right half of a section word lies in the right punctured code"),
            );
        }
        Self {
            phase,
            x,
            z,
            y,
            k_prime: g_prime.len(),
            k_dprime: g_dprime.len(),
            g_s_left,
            g_s_right,
            g_dprime,
            g_prime,
            map_left,
            map_right,
            has_all_ones_shortened,
        }
    }

    fn block(rows: &[BitVector], a: usize, b: usize) -> Vec<BitVector> {
        rows.iter().map(|r| r.slice(a, b)).collect()
    }

    pub fn g00(&self) -> Vec<BitVector> {
        Self::block(&self.g_dprime, 0, self.z - self.x)
    }

    pub fn g01(&self) -> Vec<BitVector> {
        Self::block(&self.g_dprime, self.z - self.x, self.y - self.x)
    }

    pub fn g10(&self) -> Vec<BitVector> {
        Self::block(&self.g_prime, 0, self.z - self.x)
    }

    pub fn g11(&self) -> Vec<BitVector> {
        Self::block(&self.g_prime, self.z - self.x, self.y - self.x)
    }

    /// Packed selector `w | v << k''` to the pair of child indices `(a, b)`.
    pub fn child_indices(&self, packed: u64) -> (u64, u64) {
        let mut a = 0;
        let mut b = 0;
        for r in 0..self.k_dprime + self.k_prime {
            if (packed >> r) & 1 == 1 {
                a ^= self.map_left[r];
                b ^= self.map_right[r];
            }
        }
        (a, b)
    }

    /// Every row of the stacked generator `(G_s_left 0; 0 G_s_right; G''; G')`.
    pub fn full_basis(&self) -> Vec<BitVector> {
        let mut rows = padded_halves(&self.g_s_left, &self.g_s_right, self.x, self.z, self.y);
        rows.extend(self.g_dprime.iter().cloned());
        rows.extend(self.g_prime.iter().cloned());
        rows
    }
}

/// Canonical decomposition of `[x, y)` split at `z` for the code `c`; children
/// index their cosets by their own canonical coset rows.
pub fn decompose(c: &ExtendedCode, x: usize, z: usize, y: usize) -> Result<SectionDecomposition> {
    let l = c.len();
    if !(x < z && z < y && y <= l) {
        return Err(Error::Invalid(format!("need x < z < y <= {l}, got ({x},{z},{y})")));
    }
    let (p, s) = section_bases(&c.generator, x, y);
    let (pl, sl) = section_bases(&c.generator, x, z);
    let (pr, sr) = section_bases(&c.generator, z, y);
    let halves = padded_halves(&sl, &sr, x, z, y);
    let g_dprime = complement(y - x, &halves, &msf_rows(y - x, &s));
    let g_prime = coset_rows(y - x, &p, &s);
    let left = IndexBasis::new(z - x, &sl, &coset_rows(z - x, &pl, &sl));
    let right = IndexBasis::new(y - z, &sr, &coset_rows(y - z, &pr, &sr));
    let ones = BitVector::ones(y - x);
    let f = EchelonBasis::from_rows(y - x, &s).contains(&ones)
        && !EchelonBasis::from_rows(y - x, &halves).contains(&ones);
    Ok(SectionDecomposition::assemble(
        c.phase,
        (x, z, y),
        sl,
        sr,
        g_dprime,
        g_prime,
        &left,
        &right,
        f,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_arikan_kernel, random_kernel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Kernel {
        make_arikan_kernel(1).unwrap()
    }

    /// All codewords of a generator, by enumeration.
    fn codewords(g: &BitMatrix) -> Vec<BitVector> {
        let k = g.n_rows();
        (0..1u64 << k)
            .map(|sel| g.left_mul(&BitVector::from_u64(sel, k)))
            .collect()
    }

    fn span(len: usize, rows: &[BitVector]) -> Vec<BitVector> {
        let mut out: Vec<BitVector> = (0..1u64 << rows.len())
            .map(|sel| {
                let mut w = BitVector::zeros(len);
                for (b, r) in rows.iter().enumerate() {
                    if (sel >> b) & 1 == 1 {
                        w ^= r;
                    }
                }
                w
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn extended_codes_of_f2() {
        let g0 = extended_code(&f2(), 0).unwrap();
        assert_eq!(
            g0.generator,
            BitMatrix::from_u8_rows(&[&[1, 0, 1], &[1, 1, 0]])
        );
        let g1 = extended_code(&f2(), 1).unwrap();
        assert_eq!(g1.generator, BitMatrix::from_u8_rows(&[&[1, 1, 1]]));
        let id = Kernel::new(BitMatrix::identity(2), "id").unwrap();
        let e = extended_code(&id, 1).unwrap();
        assert_eq!(e.generator, BitMatrix::from_u8_rows(&[&[0, 1, 1]]));
        assert!(extended_code(&f2(), 2).is_err());
    }

    #[test]
    fn section_codes_of_f2() {
        let c0 = extended_code(&f2(), 0).unwrap();
        let sc = section_codes(&c0, 0, 2).unwrap();
        assert_eq!(sc.p_gen.rank(), 2);
        assert_eq!(sc.s_gen, BitMatrix::from_u8_rows(&[&[1, 1]]));

        let c1 = extended_code(&f2(), 1).unwrap();
        let sc = section_codes(&c1, 0, 2).unwrap();
        assert_eq!(sc.p_gen, BitMatrix::from_u8_rows(&[&[1, 1]]));
        assert_eq!(sc.s_gen.n_rows(), 0);
    }

    #[test]
    fn section_codes_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in 2..=7 {
            let k = random_kernel(l, &mut rng);
            for i in 0..l {
                let c = extended_code(&k, i).unwrap();
                let words = codewords(&c.generator);
                for x in 0..l {
                    for y in x + 1..=l {
                        let sc = section_codes(&c, x, y).unwrap();
                        let mut p: Vec<BitVector> = words.iter().map(|w| w.slice(x, y)).collect();
                        p.sort();
                        p.dedup();
                        let mut s: Vec<BitVector> = words
                            .iter()
                            .filter(|w| {
                                (0..=l).filter(|&j| j < x || j >= y).all(|j| !w.get(j))
                            })
                            .map(|w| w.slice(x, y))
                            .collect();
                        s.sort();
                        s.dedup();
                        assert_eq!(span(y - x, sc.p_gen.rows()), p);
                        assert_eq!(span(y - x, sc.s_gen.rows()), s);
                    }
                }
                if i == 0 {
                    let full = section_codes(&c, 0, l).unwrap();
                    assert_eq!(full.p_gen.rank(), l);
                }
            }
        }
    }

    #[test]
    fn decomposition_dimensions_for_f2() {
        let c0 = extended_code(&f2(), 0).unwrap();
        let d = decompose(&c0, 0, 1, 2).unwrap();
        assert_eq!((d.k_prime, d.k_dprime), (1, 1));
        let c1 = extended_code(&f2(), 1).unwrap();
        let d = decompose(&c1, 0, 1, 2).unwrap();
        assert_eq!((d.k_prime, d.k_dprime), (1, 0));
    }

    #[test]
    fn nesting_across_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for l in 2..=10 {
            let k = random_kernel(l, &mut rng);
            let t = CodeTable::new(&k);
            for i in 0..l - 1 {
                for x in 0..l {
                    for y in x + 1..=l {
                        let pb = EchelonBasis::from_rows(y - x, t.p(i, x, y));
                        let sb = EchelonBasis::from_rows(y - x, t.s(i, x, y));
                        assert!(t.p(i + 1, x, y).iter().all(|r| pb.contains(r)));
                        assert!(t.s(i + 1, x, y).iter().all(|r| sb.contains(r)));
                    }
                }
            }
        }
    }

    #[test]
    fn decomposition_round_trip_and_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for l in 3..=8 {
            let k = random_kernel(l, &mut rng);
            for i in 0..l {
                let c = extended_code(&k, i).unwrap();
                for x in 0..l {
                    for y in x + 2..=l {
                        for z in x + 1..y {
                            let d = decompose(&c, x, z, y).unwrap();
                            let sc = section_codes(&c, x, y).unwrap();
                            let p = sc.p_gen.n_rows();
                            assert_eq!(
                                d.k_prime + d.k_dprime + d.g_s_left.len() + d.g_s_right.len(),
                                p
                            );
                            // the stacked generator spans p_{x,y}
                            let stacked = d.full_basis();
                            assert_eq!(span(y - x, &stacked), span(y - x, sc.p_gen.rows()));
                            // s rows span s_{x,y}
                            let mut srows =
                                padded_halves(&d.g_s_left, &d.g_s_right, x, z, y);
                            srows.extend(d.g_dprime.iter().cloned());
                            assert_eq!(span(y - x, &srows), span(y - x, sc.s_gen.rows()));
                            if d.k_prime + d.k_dprime > 10 {
                                continue;
                            }
                            // map correctness against direct child coset membership
                            let lc = section_codes(&c, x, z).unwrap();
                            let lrows = coset_rows(z - x, lc.p_gen.rows(), lc.s_gen.rows());
                            let lbasis = IndexBasis::new(z - x, lc.s_gen.rows(), &lrows);
                            for packed in 0..1u64 << (d.k_prime + d.k_dprime) {
                                let mut word = BitVector::zeros(y - x);
                                for (r, row) in
                                    d.g_dprime.iter().chain(d.g_prime.iter()).enumerate()
                                {
                                    if (packed >> r) & 1 == 1 {
                                        word ^= row;
                                    }
                                }
                                let (a, _) = d.child_indices(packed);
                                assert_eq!(lbasis.index_of(&word.slice(0, z - x)), Some(a));
                            }
                        }
                    }
                }
            }
        }
    }
}
