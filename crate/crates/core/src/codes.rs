//! Binary linear codes: parity-check matrices, the bipolar map, codebook
//! enumeration and an exhaustive maximum-likelihood decoder.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Default upper bound on the number of codewords `enumerate_codebook` will
/// materialize.
pub const DEFAULT_CODEBOOK_CAP: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("line {line}: expected {expected} symbols, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-binary symbol {symbol:?}")]
    Symbol { line: usize, symbol: String },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("row {0} is all zero")]
    ZeroRow(usize),
    #[error("column {0} is all zero")]
    ZeroColumn(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("codebook of 2^{dimension} words exceeds cap of {cap}")]
    CapExceeded { dimension: usize, cap: usize },
    #[error("codebook is empty")]
    EmptyCodebook,
    #[error("unknown builtin code {0:?}")]
    UnknownBuiltin(String),
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

/// Bundled parity-check matrices.
pub const BUILTIN_CODES: &[(&str, &str)] = &[
    ("hamming7_4", include_str!("../data/hamming7_4.txt")),
    ("bch15_7", include_str!("../data/bch15_7.txt")),
    ("bch31_15", include_str!("../data/bch31_15.txt")),
];

/// A binary m×n parity-check matrix with both support sets precomputed.
#[derive(Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    m: usize,
    n: usize,
    bits: Vec<Vec<u8>>,
    row_support: Vec<Vec<usize>>,
    col_support: Vec<Vec<usize>>,
}

impl fmt::Debug for ParityCheckMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParityCheckMatrix({}x{})", self.m, self.n)
    }
}

impl ParityCheckMatrix {
    /// Builds a matrix from rows of 0/1 entries, rejecting zero rows and columns.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self, CodeError> {
        let m = rows.len();
        if m == 0 {
            return Err(CodeError::Header("matrix has no rows".into()));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(CodeError::Header("matrix has no columns".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CodeError::RowLength {
                    line: i + 2,
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(&bad) = row.iter().find(|&&b| b > 1) {
                return Err(CodeError::Symbol {
                    line: i + 2,
                    symbol: bad.to_string(),
                });
            }
        }

        let row_support: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| (0..n).filter(|&j| r[j] == 1).collect())
            .collect();
        let col_support: Vec<Vec<usize>> = (0..n)
            .map(|j| (0..m).filter(|&i| rows[i][j] == 1).collect())
            .collect();
        if let Some(i) = row_support.iter().position(Vec::is_empty) {
            return Err(CodeError::ZeroRow(i));
        }
        if let Some(j) = col_support.iter().position(Vec::is_empty) {
            return Err(CodeError::ZeroColumn(j));
        }
        Ok(Self {
            m,
            n,
            bits: rows,
            row_support,
            col_support,
        })
    }

    /// Parses the plain-text format: a `m n` header followed by `m` rows of
    /// `n` space-separated 0/1 symbols. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CodeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (_, header) = lines
            .next()
            .ok_or_else(|| CodeError::Header("empty input".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let (m, n) = match dims.as_slice() {
            [m, n] => {
                let m: usize = m
                    .parse()
                    .map_err(|_| CodeError::Header(format!("bad row count {m:?}")))?;
                let n: usize = n
                    .parse()
                    .map_err(|_| CodeError::Header(format!("bad column count {n:?}")))?;
                (m, n)
            }
            _ => return Err(CodeError::Header(format!("expected \"m n\", got {header:?}"))),
        };
        if m == 0 || n == 0 {
            return Err(CodeError::Header(format!("degenerate dimensions {m}x{n}")));
        }

        let mut rows = Vec::with_capacity(m);
        for (line, content) in lines {
            let row = content
                .split_whitespace()
                .map(|sym| match sym {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(CodeError::Symbol {
                        line,
                        symbol: other.to_string(),
                    }),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            if row.len() != n {
                return Err(CodeError::RowLength {
                    line,
                    expected: n,
                    found: row.len(),
                });
            }
            rows.push(row);
        }
        if rows.len() != m {
            return Err(CodeError::RowCount {
                expected: m,
                found: rows.len(),
            });
        }
        Self::from_rows(rows)
    }

    pub fn builtin(name: &str) -> Result<Self, CodeError> {
        BUILTIN_CODES
            .iter()
            .find(|(key, _)| *key == name)
            .map(|(_, text)| Self::parse(text))
            .unwrap_or_else(|| Err(CodeError::UnknownBuiltin(name.to_string())))
    }

    /// Resolves either a builtin name or a path to a parity-check file.
    pub fn load(spec: &str) -> Result<Self, CodeError> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Self::builtin(name);
        }
        if BUILTIN_CODES.iter().any(|(key, _)| *key == spec) {
            return Self::builtin(spec);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|e| CodeError::Io {
            path: spec.to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bit(&self, i: usize, j: usize) -> u8 {
        self.bits[i][j]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.bits
    }

    /// A(i): column indices with a one in row `i`.
    pub fn row_support(&self, i: usize) -> &[usize] {
        &self.row_support[i]
    }

    /// B(j): row indices with a one in column `j`.
    pub fn col_support(&self, j: usize) -> &[usize] {
        &self.col_support[j]
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.m, self.n);
        for row in &self.bits {
            let line: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    fn packed_rows(&self) -> Vec<BitRow> {
        self.bits.iter().map(|r| BitRow::from_bits(r)).collect()
    }

    /// GF(2) rank via packed Gaussian elimination.
    pub fn rank(&self) -> usize {
        reduce_row_echelon(self.packed_rows(), self.n).1.len()
    }

    /// A basis of the null space {b : Hb = 0} over GF(2).
    pub fn null_space_basis(&self) -> Vec<Vec<u8>> {
        let (reduced, pivots) = reduce_row_echelon(self.packed_rows(), self.n);
        let mut is_pivot = vec![false; self.n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.n)
            .filter(|&free| !is_pivot[free])
            .map(|free| {
                let mut v = vec![0u8; self.n];
                v[free] = 1;
                for (row, &pivot) in reduced.iter().zip(&pivots) {
                    if row.get(free) {
                        v[pivot] = 1;
                    }
                }
                v
            })
            .collect()
    }
}

/// Bitset-packed row used by the elimination routines.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn from_bits(bits: &[u8]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (j, &b) in bits.iter().enumerate() {
            if b == 1 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        Self(words)
    }

    fn get(&self, j: usize) -> bool {
        (self.0[j / 64] >> (j % 64)) & 1 == 1
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
}

/// Reduced row echelon form with pivots chosen by leftmost column. Returns
/// the nonzero reduced rows and their pivot columns.
fn reduce_row_echelon(mut rows: Vec<BitRow>, n: usize) -> (Vec<BitRow>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..n {
        let Some(found) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(next, found);
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    rows.truncate(next);
    (rows, pivots)
}

/// β(0) = +1, β(1) = −1.
pub fn bipolar_map(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Inverse of [`bipolar_map`]; non-negative entries map to 0.
pub fn binary_map(word: &[f64]) -> Vec<u8> {
    word.iter().map(|&x| u8::from(x < 0.0)).collect()
}

/// GF(2) product Hb.
pub fn syndrome(h: &ParityCheckMatrix, bits: &[u8]) -> Result<Vec<u8>, CodeError> {
    if bits.len() != h.n() {
        return Err(CodeError::Length {
            expected: h.n(),
            got: bits.len(),
        });
    }
    Ok((0..h.m())
        .map(|i| {
            h.row_support(i)
                .iter()
                .fold(0u8, |acc, &j| acc ^ (bits[j] & 1))
        })
        .collect())
}

/// True when the sign pattern of `word` (sgn(0) = +1) satisfies every check.
pub fn is_codeword(h: &ParityCheckMatrix, word: &[f64]) -> bool {
    syndrome(h, &binary_map(word)).is_ok_and(|s| s.iter().all(|&b| b == 0))
}

/// All bipolar codewords of a code.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    words: Vec<Vec<f64>>,
    dimension: usize,
}

impl Codebook {
    pub fn words(&self) -> &[Vec<f64>] {
        &self.words
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// One word per line, entries written as `+1`/`-1`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            let line: Vec<&str> = w.iter().map(|&x| if x > 0.0 { "+1" } else { "-1" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn enumerate_codebook(h: &ParityCheckMatrix) -> Result<Codebook, CodeError> {
    enumerate_codebook_capped(h, DEFAULT_CODEBOOK_CAP)
}

/// Enumerates the 2^k codewords by walking all combinations of a null-space
/// basis in Gray-code order, so index 0 is always the all-(+1) word.
pub fn enumerate_codebook_capped(h: &ParityCheckMatrix, cap: usize) -> Result<Codebook, CodeError> {
    let basis = h.null_space_basis();
    let k = basis.len();
    if k >= usize::BITS as usize || (1usize << k) > cap {
        return Err(CodeError::CapExceeded { dimension: k, cap });
    }
    let packed: Vec<BitRow> = basis.iter().map(|b| BitRow::from_bits(b)).collect();
    let n = h.n();
    let mut words = Vec::with_capacity(1 << k);
    let mut current = BitRow(vec![0; n.div_ceil(64)]);
    for idx in 0..(1usize << k) {
        if idx > 0 {
            let flip = idx.trailing_zeros() as usize;
            current.xor_assign(&packed[flip]);
        }
        words.push(
            (0..n)
                .map(|j| if current.get(j) { -1.0 } else { 1.0 })
                .collect(),
        );
    }
    Ok(Codebook {
        words,
        dimension: k,
    })
}

/// Exhaustive ML decoding: the codeword whose forward image is closest to `y`
/// in squared Euclidean distance. Ties go to the lowest codebook index.
pub fn ml_decode<F>(y: &[f64], forward: F, book: &Codebook) -> Result<Vec<f64>, CodeError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    ml_decode_by(book, |word| {
        let r = forward(word);
        y.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum()
    })
}

/// ML decoding with a caller-supplied squared-distance metric, for channels
/// whose observations are not real vectors.
pub fn ml_decode_by<D>(book: &Codebook, distance: D) -> Result<Vec<f64>, CodeError>
where
    D: Fn(&[f64]) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for (idx, word) in book.words.iter().enumerate() {
        let d = distance(word);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((idx, d)),
        }
    }
    best.map(|(idx, _)| book.words[idx].clone())
        .ok_or(CodeError::EmptyCodebook)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAMMING: &str = "3 7\n1 1 0 1 1 0 0\n1 0 1 1 0 1 0\n0 1 1 1 0 0 1\n";

    fn brute_force_codewords(h: &ParityCheckMatrix) -> Vec<Vec<u8>> {
        let n = h.n();
        (0..(1u32 << n))
            .map(|v| (0..n).map(|j| ((v >> j) & 1) as u8).collect::<Vec<u8>>())
            .filter(|b| syndrome(h, b).unwrap().iter().all(|&s| s == 0))
            .collect()
    }

    #[test]
    fn parses_hamming() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        assert_eq!((h.m(), h.n()), (3, 7));
        assert_eq!(h.row_support(0), &[0, 1, 3, 4]);
        assert_eq!(h.col_support(3), &[0, 1, 2]);
        assert_eq!(h.rank(), 3);
    }

    #[test]
    fn support_sets_are_consistent() {
        for (name, _) in BUILTIN_CODES {
            let h = ParityCheckMatrix::builtin(name).unwrap();
            for i in 0..h.m() {
                for j in 0..h.n() {
                    assert_eq!(
                        h.row_support(i).contains(&j),
                        h.col_support(j).contains(&i),
                        "{name} ({i},{j})"
                    );
                }
            }
            assert!(h.m() < h.n());
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            ParityCheckMatrix::parse("2 3\n0 0 0\n1 1 1\n"),
            Err(CodeError::ZeroRow(0))
        ));
        assert!(matches!(
            ParityCheckMatrix::parse("2 3\n1 0 0\n1 1 0\n"),
            Err(CodeError::ZeroColumn(2))
        ));
        assert!(matches!(
            ParityCheckMatrix::parse("2 3\n1 0 2\n1 1 1\n"),
            Err(CodeError::Symbol { line: 2, .. })
        ));
        assert!(matches!(
            ParityCheckMatrix::parse("2 3\n1 0 1\n"),
            Err(CodeError::RowCount { expected: 2, found: 1 })
        ));
        assert!(matches!(
            ParityCheckMatrix::parse("2 3\n1 0 1\n1 1\n"),
            Err(CodeError::RowLength { line: 3, .. })
        ));
        assert!(matches!(
            ParityCheckMatrix::parse("two 3\n"),
            Err(CodeError::Header(_))
        ));
        assert!(matches!(ParityCheckMatrix::parse(""), Err(CodeError::Header(_))));
        assert!(matches!(
            ParityCheckMatrix::builtin("golay"),
            Err(CodeError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let h = ParityCheckMatrix::builtin("bch15_7").unwrap();
        assert_eq!(ParityCheckMatrix::parse(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn bipolar_examples() {
        assert_eq!(bipolar_map(&[0, 0, 0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(bipolar_map(&[1, 1]), vec![-1.0, -1.0]);
        assert_eq!(bipolar_map(&[0, 1, 0, 1]), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(binary_map(&bipolar_map(&[0, 1, 1, 0])), vec![0, 1, 1, 0]);
    }

    #[test]
    fn syndrome_examples() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        assert_eq!(syndrome(&h, &[0; 7]).unwrap(), vec![0, 0, 0]);
        for j in 0..7 {
            let mut e = vec![0u8; 7];
            e[j] = 1;
            let col: Vec<u8> = (0..3).map(|i| h.bit(i, j)).collect();
            assert_eq!(syndrome(&h, &e).unwrap(), col);
        }
        assert_eq!(
            syndrome(&h, &[0; 6]),
            Err(CodeError::Length { expected: 7, got: 6 })
        );
    }

    #[test]
    fn hamming_codebook_matches_brute_force() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        let brute = brute_force_codewords(&h);
        assert_eq!(brute.len(), 16);
        let book = enumerate_codebook(&h).unwrap();
        assert_eq!(book.len(), 16);
        assert_eq!(book.dimension(), 4);
        assert_eq!(book.words()[0], vec![1.0; 7]);
        let mut enumerated: Vec<Vec<u8>> = book.words().iter().map(|w| binary_map(w)).collect();
        enumerated.sort();
        let mut brute_sorted = brute;
        brute_sorted.sort();
        assert_eq!(enumerated, brute_sorted);
    }

    #[test]
    fn identity_code_has_single_word() {
        let rows: Vec<Vec<u8>> = (0..4)
            .map(|i| (0..4).map(|j| u8::from(i == j)).collect())
            .collect();
        let h = ParityCheckMatrix::from_rows(rows).unwrap();
        let book = enumerate_codebook(&h).unwrap();
        assert_eq!(book.words(), &[vec![1.0; 4]]);
    }

    #[test]
    fn cap_is_enforced() {
        let h = ParityCheckMatrix::builtin("bch31_15").unwrap();
        assert_eq!(
            enumerate_codebook_capped(&h, 1 << 10),
            Err(CodeError::CapExceeded { dimension: 15, cap: 1 << 10 })
        );
    }

    #[test]
    fn codebook_text_export() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        let text = enumerate_codebook(&h).unwrap().to_text();
        assert_eq!(text.lines().count(), 16);
        assert_eq!(text.lines().next().unwrap(), "+1 +1 +1 +1 +1 +1 +1");
    }

    #[test]
    fn ml_examples() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        let book = enumerate_codebook(&h).unwrap();
        let target = book.words()[11].clone();
        let noisy: Vec<f64> = target
            .iter()
            .enumerate()
            .map(|(i, &x)| x + 0.3 * if i % 2 == 0 { -x } else { x })
            .collect();
        assert_eq!(ml_decode(&noisy, |s| s.to_vec(), &book).unwrap(), target);
        let squared = |s: &[f64]| s.iter().map(|x| 2.0 * x + 0.5).collect::<Vec<f64>>();
        let y = squared(&target);
        assert_eq!(ml_decode(&y, squared, &book).unwrap(), target);
    }

    #[test]
    fn ml_ties_break_to_lowest_index() {
        let h = ParityCheckMatrix::parse(HAMMING).unwrap();
        let book = enumerate_codebook(&h).unwrap();
        let out = ml_decode(&[0.0; 3], |_| vec![1.0; 3], &book).unwrap();
        assert_eq!(out, book.words()[0]);
        let empty = Codebook {
            words: vec![],
            dimension: 0,
        };
        assert_eq!(ml_decode_by(&empty, |_| 0.0), Err(CodeError::EmptyCodebook));
    }
}
